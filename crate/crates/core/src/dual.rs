//! Gallager-style evaluation of the cloud-channel exponents.
//!
//! All exponents are Legendre-type transforms of the two-parameter function
//!
//! ```text
//! E0(rho, eta, P) = -ln sum_y [ sum_x P(x) W(y|x)^((1+eta)/(1+rho)) ]^(1+rho)
//! ```
//!
//! which is evaluated in log-space: the inner power underflows for large
//! `rho` (the converse sup runs up to `rho_cap`) and overflows in the
//! correct-decoding branch as `rho -> 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::input::maximize_e0_over_p;
use crate::optimize::{grid_golden_max, wedge_max, SimplexSearch};
use crate::prob::{Channel, Distribution, JointDistribution, Nats};

/// Numerical settings shared by the dual solvers.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Grid nodes per axis (the wedge grid has `n (n + 1) / 2` nodes).
    pub grid_points: usize,
    /// Iteration cap for each golden-section refinement.
    pub refine_iters: usize,
    /// Truncation of the unbounded `rho` range of the converse bound.
    pub rho_cap: f64,
    /// KKT tolerance of the input optimiser.
    pub tol: f64,
    /// The correct-decoding sups run over `[0, 1 - rho_edge]`.
    pub rho_edge: f64,
    /// Relative argument tolerance of golden-section refinement.
    pub xtol: f64,
    /// Outer search over input distributions.
    pub input_search: SimplexSearch,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid_points: 64,
            refine_iters: 200,
            rho_cap: 64.0,
            tol: 1e-9,
            rho_edge: 1e-6,
            xtol: 1e-12,
            input_search: SimplexSearch::default(),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(invalid("grid_points must be at least 3"));
        }
        if !(self.rho_cap >= 1.0) {
            return Err(invalid("rho_cap must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        if !(self.rho_edge > 0.0 && self.rho_edge < 1.0) {
            return Err(invalid("rho_edge must lie in (0, 1)"));
        }
        if !(self.xtol > 0.0) {
            return Err(invalid("xtol must be positive"));
        }
        if self.input_search.binary_points < 3 {
            return Err(invalid("input grid needs at least 3 points"));
        }
        Ok(())
    }
}

/// Optimiser witness of a dual query.
///
/// * achievable: `0 <= eta <= rho <= 1`
/// * converse: `0 <= eta <= rho <= rho_cap`
/// * correct decoding: `rho` in `[0, 1)` with `eta` either `0` or `-rho`
/// * jump rate: `rho = 0` and `eta` holds the maximising `beta`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualWitness {
    pub rho: f64,
    pub eta: f64,
    pub value: Nats,
    /// The exponent-minimising joint distribution at `(rho, eta)`, when defined.
    pub tilted: Option<JointDistribution>,
    /// Input distribution used (the maximiser, for queries that optimise over `P`).
    pub input: Option<Distribution>,
    /// Set when a finite optimum sits at the `rho_cap` truncation, i.e. the
    /// rate is just above the jump and the true sup lies beyond the cap.
    pub boundary: bool,
}

/// Streaming log-sum-exp.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    const EMPTY: Lse = Lse {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    #[inline]
    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    #[inline]
    fn value(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln W` and `ln P` tables for repeated `E0` evaluations.
#[derive(Clone, Debug)]
pub(crate) struct E0Kernel {
    nx: usize,
    ny: usize,
    ln_w: Vec<f64>,
}

impl E0Kernel {
    pub(crate) fn new(channel: &Channel) -> Self {
        let (nx, ny) = (channel.input_size(), channel.output_size());
        let mut ln_w = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            for y in 0..ny {
                ln_w.push(channel.prob(x, y).ln());
            }
        }
        E0Kernel { nx, ny, ln_w }
    }

    pub(crate) fn inputs(&self) -> usize {
        self.nx
    }

    pub(crate) fn outputs(&self) -> usize {
        self.ny
    }

    #[inline]
    pub(crate) fn ln_w(&self, x: usize, y: usize) -> f64 {
        self.ln_w[x * self.ny + y]
    }

    /// `ln sum_x P(x) W(y|x)^s`, with `0^s = 0` (requires `s > 0`).
    #[inline]
    pub(crate) fn log_alpha(&self, ln_p: &[f64], s: f64, y: usize) -> f64 {
        let mut acc = Lse::EMPTY;
        for (x, &lp) in ln_p.iter().enumerate() {
            let lw = self.ln_w(x, y);
            if lp > f64::NEG_INFINITY && lw > f64::NEG_INFINITY {
                acc.push(lp + s * lw);
            }
        }
        acc.value()
    }

    /// `ln sum_y alpha_y^(1+rho) = -E0`.
    #[inline]
    pub(crate) fn log_normalizer(&self, ln_p: &[f64], rho: f64, eta: f64) -> f64 {
        let s = (1.0 + eta) / (1.0 + rho);
        let mut acc = Lse::EMPTY;
        for y in 0..self.ny {
            let la = self.log_alpha(ln_p, s, y);
            if la > f64::NEG_INFINITY {
                acc.push((1.0 + rho) * la);
            }
        }
        acc.value()
    }

    #[inline]
    pub(crate) fn e0(&self, ln_p: &[f64], rho: f64, eta: f64) -> f64 {
        -self.log_normalizer(ln_p, rho, eta)
    }
}

pub(crate) fn ln_probs(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.ln()).collect()
}

fn check_e0_params(rho: f64, eta: f64) -> Result<()> {
    if !(rho.is_finite() && eta.is_finite()) {
        return Err(invalid("rho and eta must be finite"));
    }
    if !(1.0 + rho > 0.0) {
        return Err(invalid(format!("1 + rho must be positive (rho = {rho})")));
    }
    if !(1.0 + eta > 0.0) {
        return Err(invalid(format!(
            "exponent (1 + eta)/(1 + rho) must be positive (eta = {eta})"
        )));
    }
    Ok(())
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(format!(
            "{name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

/// `E0(rho, eta, P)` in nats.
pub fn gallager_e0(rho: f64, eta: f64, input: &Distribution, channel: &Channel) -> Result<Nats> {
    check_e0_params(rho, eta)?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    Nats::checked(kernel.e0(&ln_probs(input.probs()), rho, eta), "gallager_e0")
}

/// The tilted joint distribution
/// `q(y, x) = P(x) W(y|x)^s [sum_x' P(x') W(y|x')^s]^rho / c`
/// with `s = (1+eta)/(1+rho)` and `ln c = -E0(rho, eta, P)`.
pub fn tilted_joint(
    rho: f64,
    eta: f64,
    input: &Distribution,
    channel: &Channel,
) -> Result<JointDistribution> {
    check_e0_params(rho, eta)?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    let ln_p = ln_probs(input.probs());
    Ok(tilted_with_kernel(&kernel, &ln_p, rho, eta)?)
}

pub(crate) fn tilted_with_kernel(
    kernel: &E0Kernel,
    ln_p: &[f64],
    rho: f64,
    eta: f64,
) -> Result<JointDistribution> {
    let (nx, ny) = (kernel.inputs(), kernel.outputs());
    let s = (1.0 + eta) / (1.0 + rho);
    let ln_c = kernel.log_normalizer(ln_p, rho, eta);
    if !ln_c.is_finite() {
        return Err(Error::ZeroMass);
    }
    let mut probs = vec![0.0; nx * ny];
    for y in 0..ny {
        let la = kernel.log_alpha(ln_p, s, y);
        if la == f64::NEG_INFINITY {
            continue;
        }
        for x in 0..nx {
            let lw = kernel.ln_w(x, y);
            if ln_p[x] > f64::NEG_INFINITY && lw > f64::NEG_INFINITY {
                probs[y * nx + x] = (ln_p[x] + s * lw + rho * la - ln_c).exp();
            }
        }
    }
    JointDistribution::from_weights(ny, nx, probs)
}

/// Achievable (random-coding) error exponent of the ensemble for a fixed
/// input law: `sup_{0 <= eta <= rho <= 1} E0(rho, eta, P) - rho R - eta K`.
pub fn achievable_error_exponent(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("R", rate)?;
    check_rate("K", cloud_k)?;
    settings.validate()?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    let ln_p = ln_probs(input.probs());
    let f = |rho: f64, eta: f64| kernel.e0(&ln_p, rho, eta) - rho * rate - eta * cloud_k;
    let m = wedge_max(
        &f,
        1.0,
        settings.grid_points,
        settings.refine_iters,
        settings.xtol,
    );
    // (0, 0) is a grid node, so m.value >= f(0, 0) = 0 up to rounding of E0
    let value = m.value.max(0.0);
    Ok(DualWitness {
        rho: m.rho,
        eta: m.eta,
        value: Nats::checked(value, "achievable_error_exponent")?,
        tilted: tilted_with_kernel(&kernel, &ln_p, m.rho, m.eta).ok(),
        input: Some(input.clone()),
        boundary: false,
    })
}

/// Correct-decoding exponent for a fixed input law, as the smaller of
/// `sup_rho E0(-rho, 0, P) + rho R` and `sup_rho E0(-rho, -rho, P) + rho (R + K)`
/// over `0 <= rho < 1`.
pub fn correct_decoding_exponent_dual(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("R", rate)?;
    check_rate("K", cloud_k)?;
    settings.validate()?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    let ln_p = ln_probs(input.probs());
    let (value, rho, eta) = correct_decoding_raw(&kernel, &ln_p, rate, cloud_k, settings);
    Ok(DualWitness {
        rho,
        eta,
        value: Nats::checked(value, "correct_decoding_exponent_dual")?,
        tilted: tilted_with_kernel(&kernel, &ln_p, -rho, eta).ok(),
        input: Some(input.clone()),
        boundary: false,
    })
}

pub(crate) fn correct_decoding_raw(
    kernel: &E0Kernel,
    ln_p: &[f64],
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> (f64, f64, f64) {
    let hi = 1.0 - settings.rho_edge;
    let list = |rho: f64| kernel.e0(ln_p, -rho, 0.0) + rho * rate;
    let single = |rho: f64| kernel.e0(ln_p, -rho, -rho) + rho * (rate + cloud_k);
    let a = grid_golden_max(
        &list,
        0.0,
        hi,
        settings.grid_points,
        settings.refine_iters,
        settings.xtol,
    );
    let b = grid_golden_max(
        &single,
        0.0,
        hi,
        settings.grid_points,
        settings.refine_iters,
        settings.xtol,
    );
    if a.value <= b.value {
        (a.value.max(0.0), a.x, 0.0)
    } else {
        (b.value.max(0.0), b.x, -b.x)
    }
}

/// Converse (upper) bound on the error exponent for a fixed input law:
/// `sup_{0 <= eta <= rho} E0(rho, eta, P) - rho R - eta K`.
///
/// Along `eta = beta rho` the objective grows like
/// `rho (R_min(P, K) - R)`, so it is `+inf` exactly for `R` below the jump
/// rate of [`r_min_jump_for_input`]. Otherwise the sup is taken over
/// `rho <= rho_cap`, and `boundary` flags an optimum at the cap.
pub fn converse_error_exponent_for_input(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("R", rate)?;
    check_rate("K", cloud_k)?;
    settings.validate()?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    let ln_p = ln_probs(input.probs());
    let e0 = |rho: f64, eta: f64| kernel.e0(&ln_p, rho, eta);
    let jump = r_min_raw(&kernel, &ln_p, cloud_k, settings);
    let mut w = converse_sup(&e0, rate, cloud_k, jump, settings)?;
    if !w.value.is_infinite() {
        w.tilted = tilted_with_kernel(&kernel, &ln_p, w.rho, w.eta).ok();
    }
    w.input = Some(input.clone());
    Ok(w)
}

/// Converse bound optimised over the input law:
/// `max_P sup_{0 <= eta <= rho} E0(rho, eta, P) - rho R - eta K`, evaluated
/// as `sup_{rho, eta} max_P E0(...)` with the inner maximum taken by
/// [`maximize_e0_over_p`].
pub fn converse_error_exponent(
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("R", rate)?;
    check_rate("K", cloud_k)?;
    settings.validate()?;
    let tol = settings.tol.min(1e-9);
    let e0 = |rho: f64, eta: f64| match maximize_e0_over_p(rho, eta, channel, tol) {
        Ok(m) => m.value.get(),
        Err(_) => f64::NAN,
    };
    let jump = r_min_jump(channel, cloud_k, settings)?;
    let mut w = converse_sup(&e0, rate, cloud_k, (jump.value.get(), jump.eta), settings)?;
    let best = maximize_e0_over_p(w.rho, w.eta, channel, tol)?;
    if !w.value.is_infinite() {
        w.tilted = tilted_joint(w.rho, w.eta, &best.input, channel).ok();
    }
    w.input = Some(best.input);
    Ok(w)
}

fn converse_sup(
    e0: &(dyn Fn(f64, f64) -> f64 + Sync),
    rate: f64,
    cloud_k: f64,
    (jump, beta): (f64, f64),
    settings: &SolverSettings,
) -> Result<DualWitness> {
    let cap = settings.rho_cap;
    if rate < jump {
        // the divergent direction eta = beta rho, reported at the cap
        return Ok(DualWitness {
            rho: cap,
            eta: beta * cap,
            value: Nats::INFINITY,
            tilted: None,
            input: None,
            boundary: false,
        });
    }
    let f = |rho: f64, eta: f64| e0(rho, eta) - rho * rate - eta * cloud_k;
    let m = wedge_max(
        &f,
        cap,
        settings.grid_points,
        settings.refine_iters,
        settings.xtol,
    );
    let step = cap / (settings.grid_points - 1) as f64;
    Ok(DualWitness {
        rho: m.rho,
        eta: m.eta,
        value: Nats::checked(m.value.max(0.0), "converse_error_exponent")?,
        tilted: None,
        input: None,
        boundary: m.rho >= cap - step,
    })
}

/// `ln max_y sum_x P(x) W(y|x)^beta`, with the `beta -> 0+` limit at `beta = 0`.
fn log_max_column(kernel: &E0Kernel, ln_p: &[f64], beta: f64) -> f64 {
    (0..kernel.outputs())
        .map(|y| {
            let mut acc = Lse::EMPTY;
            for (x, &lp) in ln_p.iter().enumerate() {
                let lw = kernel.ln_w(x, y);
                if lp > f64::NEG_INFINITY && lw > f64::NEG_INFINITY {
                    acc.push(lp + beta * lw);
                }
            }
            acc.value()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn r_min_raw(
    kernel: &E0Kernel,
    ln_p: &[f64],
    cloud_k: f64,
    settings: &SolverSettings,
) -> (f64, f64) {
    let h = |beta: f64| -log_max_column(kernel, ln_p, beta) - beta * cloud_k;
    let m = grid_golden_max(
        &h,
        0.0,
        1.0,
        settings.grid_points,
        settings.refine_iters,
        settings.xtol,
    );
    // the objective is concave and 0 at beta = 0 for full-support columns;
    // a maximum within a few ulps of zero is rounding in the power sums
    if m.value <= 16.0 * f64::EPSILON {
        return (m.value.min(0.0), 0.0);
    }
    (m.value, m.x)
}

/// Rate below which the converse bound for input law `P` is infinite:
/// `sup_{0 < beta <= 1} -ln max_y sum_x P(x) W(y|x)^beta - beta K`, clamped
/// at zero. The maximising `beta` is returned in `eta`.
pub fn r_min_jump_for_input(
    input: &Distribution,
    channel: &Channel,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("K", cloud_k)?;
    settings.validate()?;
    channel.check_input(input)?;
    let kernel = E0Kernel::new(channel);
    let (v, beta) = r_min_raw(&kernel, &ln_probs(input.probs()), cloud_k, settings);
    Ok(DualWitness {
        rho: 0.0,
        eta: beta,
        value: Nats::checked(v.max(0.0), "r_min_jump")?,
        tilted: None,
        input: Some(input.clone()),
        boundary: false,
    })
}

/// Jump rate of the converse bound maximised over input laws.
pub fn r_min_jump(
    channel: &Channel,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<DualWitness> {
    check_rate("K", cloud_k)?;
    settings.validate()?;
    let kernel = E0Kernel::new(channel);
    let f = |p: &[f64]| r_min_raw(&kernel, &ln_probs(p), cloud_k, settings).0;
    let best = settings.input_search.maximize(channel.input_size(), &f)?;
    let (v, beta) = r_min_raw(&kernel, &ln_probs(best.point.probs()), cloud_k, settings);
    Ok(DualWitness {
        rho: 0.0,
        eta: beta,
        value: Nats::checked(v.max(0.0), "r_min_jump")?,
        tilted: None,
        input: Some(best.point),
        boundary: false,
    })
}

/// Smallest rate at which the achievable exponent drops below `threshold`
/// (the exponent is non-increasing in `R`).
pub fn achievable_zero_crossing(
    input: &Distribution,
    channel: &Channel,
    cloud_k: f64,
    threshold: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    first_rate_where(&|r| {
        Ok(
            achievable_error_exponent(input, channel, r, cloud_k, settings)?
                .value
                .get()
                < threshold,
        )
    })
}

/// Bisection for the smallest `R >= 0` at which a predicate that switches
/// once from false to true becomes true.
pub(crate) fn first_rate_where(pred: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    if pred(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while !pred(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NonConvergence {
                what: "rate bracket",
                iterations: doublings,
                residual: hi,
            });
        }
    }
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
