//! Optimisation over the input law: Shannon capacity, maximal output
//! entropy, ensemble capacity, `max_P E0` and `min_P E_c`.

use serde::{Deserialize, Serialize};

use crate::dual::{correct_decoding_raw, first_rate_where, ln_probs, E0Kernel, SolverSettings};
use crate::error::{invalid, Error, Result};
use crate::optimize::wedge_max;
use crate::prob::{xlog_ratio, Channel, Distribution, Nats};

const MAX_ITERATIONS: usize = 1_000_000;

/// Optimal value and input law of an input-optimisation query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputOptimum {
    pub value: Nats,
    pub input: Distribution,
    /// No global-optimality claim (alphabets with more than two inputs).
    pub heuristic: bool,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn output_law(p: &[f64], channel: &Channel) -> Vec<f64> {
    let mut t = vec![0.0; channel.output_size()];
    for (x, row) in channel.rows().enumerate() {
        for (ty, w) in t.iter_mut().zip(row) {
            *ty += p[x] * w;
        }
    }
    t
}

/// Blahut-Arimoto. Stops when the upper bound `max_x D(W(.|x) || PW)` and the
/// lower bound `ln sum_x P(x) exp D(W(.|x) || PW)` are within `tol`; returns
/// the lower bound.
pub fn shannon_capacity(channel: &Channel, tol: f64) -> Result<(Nats, Distribution)> {
    check_tol(tol)?;
    let nx = channel.input_size();
    let mut p = vec![1.0 / nx as f64; nx];
    let mut d = vec![0.0; nx];
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let t = output_law(&p, channel);
        for (x, row) in channel.rows().enumerate() {
            d[x] = row.iter().zip(&t).map(|(&w, &ty)| xlog_ratio(w, ty)).sum();
        }
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = p
            .iter()
            .zip(&d)
            .map(|(pi, di)| pi * (di - dmax).exp())
            .sum();
        let lower = dmax + z.ln();
        gap = dmax - lower;
        if gap < tol {
            return Ok((
                Nats::checked(lower.max(0.0), "shannon_capacity")?,
                Distribution::from_weights(&p)?,
            ));
        }
        for (pi, di) in p.iter_mut().zip(&d) {
            *pi *= (di - dmax).exp() / z;
        }
    }
    Err(Error::NonConvergence {
        what: "Blahut-Arimoto",
        iterations: MAX_ITERATIONS,
        residual: gap,
    })
}

fn entropy(t: &[f64]) -> f64 {
    t.iter().map(|&v| -xlog_ratio(v, 1.0)).sum()
}

/// `max_P H(PW)` by exponentiated-gradient ascent. The certificate is the
/// duality gap `max_x E_W(.|x)[-ln T] - H(T) >= 0`, which bounds the
/// suboptimality of a concave objective on the simplex.
pub fn h_max(channel: &Channel, tol: f64) -> Result<(Nats, Distribution)> {
    check_tol(tol)?;
    let nx = channel.input_size();
    // d(x) = E_W(.|x)[-ln T]; returns (d, max_x d(x) - H(T))
    let scores = |t: &[f64], h: f64| {
        let d: Vec<f64> = channel
            .rows()
            .map(|row| {
                row.iter()
                    .zip(t)
                    .map(|(&w, &ty)| if w > 0.0 { -w * ty.ln() } else { 0.0 })
                    .sum()
            })
            .collect();
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (d, dmax - h)
    };
    let mut p = vec![1.0 / nx as f64; nx];
    let mut h = entropy(&output_law(&p, channel));
    let (mut d, mut gap) = scores(&output_law(&p, channel), h);
    let mut step = 1.0;
    for _ in 0..MAX_ITERATIONS {
        if gap < tol {
            return Ok((
                Nats::checked(h.max(0.0), "h_max")?,
                Distribution::from_weights(&p)?,
            ));
        }
        let dmax = gap + h;
        // below this the entropy cannot resolve progress; the gap decides
        let slack = 4.0 * f64::EPSILON * (1.0 + h);
        loop {
            let mut cand: Vec<f64> = p
                .iter()
                .zip(&d)
                .map(|(pi, di)| pi * (step * (di - dmax)).exp())
                .collect();
            let s: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= s);
            let ct = output_law(&cand, channel);
            let ch = entropy(&ct);
            let (cd, cgap) = scores(&ct, ch);
            if ch > h + slack || (ch >= h - slack && cgap < gap) {
                p = cand;
                h = ch;
                d = cd;
                gap = cgap;
                step = (step * 1.5).min(1e6);
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                // no representable ascent step left: the gap is rounding noise
                return Ok((
                    Nats::checked(h.max(0.0), "h_max")?,
                    Distribution::from_weights(&p)?,
                ));
            }
        }
    }
    Err(Error::NonConvergence {
        what: "maximal output entropy",
        iterations: MAX_ITERATIONS,
        residual: gap,
    })
}

/// `C(W, K) = max{C(W), H_max(W) - K}`.
pub fn ensemble_capacity(channel: &Channel, cloud_k: f64, tol: f64) -> Result<Nats> {
    if !(cloud_k >= 0.0) {
        return Err(invalid(format!("K must be non-negative, got {cloud_k}")));
    }
    let (c, _) = shannon_capacity(channel, tol)?;
    if cloud_k.is_infinite() {
        return Ok(c);
    }
    let (h, _) = h_max(channel, tol)?;
    Ok(Nats::checked(
        c.get().max(h.get() - cloud_k),
        "ensemble_capacity",
    )?)
}

/// Maximiser of `E0(rho, eta, .)` with its stationarity certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct E0Optimum {
    pub value: Nats,
    pub input: Distribution,
    /// `c(x) / c` for every input symbol, where
    /// `c(x) = sum_y W(y|x)^s alpha_y^rho` and `c = sum_x P(x) c(x)`.
    pub kkt_ratios: Vec<f64>,
    /// `max(|ratio - 1|)` on the support, `max((1 - ratio)^+)` off it.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Support threshold for the KKT certificate.
const SUPPORT_FLOOR: f64 = 1e-12;

struct KktState {
    ln_f: f64,
    ratios: Vec<f64>,
}

fn kkt_state(kernel: &E0Kernel, p: &[f64], rho: f64, eta: f64) -> KktState {
    let (nx, ny) = (kernel.inputs(), kernel.outputs());
    let s = (1.0 + eta) / (1.0 + rho);
    let ln_p = ln_probs(p);
    let la: Vec<f64> = (0..ny).map(|y| kernel.log_alpha(&ln_p, s, y)).collect();
    let ln_f = crate::prob::log_sum_exp(
        la.iter()
            .filter(|v| v.is_finite())
            .map(|v| (1.0 + rho) * v)
            .collect::<Vec<_>>(),
    );
    let ratios = (0..nx)
        .map(|x| {
            let terms: Vec<f64> = (0..ny)
                .filter(|&y| la[y].is_finite() && kernel.ln_w(x, y).is_finite())
                .map(|y| s * kernel.ln_w(x, y) + rho * la[y])
                .collect();
            (crate::prob::log_sum_exp(terms) - ln_f).exp()
        })
        .collect();
    KktState { ln_f, ratios }
}

fn kkt_residual(p: &[f64], ratios: &[f64]) -> f64 {
    p.iter()
        .zip(ratios)
        .map(|(&pi, &r)| {
            if pi > SUPPORT_FLOOR {
                (r - 1.0).abs()
            } else {
                (1.0 - r).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `max_P E0(rho, eta, P)` for `rho >= 0`, `0 <= eta`.
///
/// Minimises `F(P) = sum_y alpha_y^(1+rho)` by the multiplicative update
/// `P(x) <- P(x) (c(x)/c)^(-1/rho)` with backtracking, stopping once the
/// stationarity condition `c(x) >= c` (equality on the support) holds within
/// `tol`. At `rho = 0` the objective is linear in `P` and the uniform law on
/// the minimisers of `c(x)` is returned.
pub fn maximize_e0_over_p(rho: f64, eta: f64, channel: &Channel, tol: f64) -> Result<E0Optimum> {
    check_tol(tol)?;
    if !(rho >= 0.0 && rho.is_finite() && eta > -1.0 && eta.is_finite()) {
        return Err(invalid(format!("infeasible (rho, eta) = ({rho}, {eta})")));
    }
    let kernel = E0Kernel::new(channel);
    let nx = channel.input_size();
    let mut p = vec![1.0 / nx as f64; nx];
    let finish = |p: Vec<f64>, st: KktState, iterations: usize| -> Result<E0Optimum> {
        let kkt_residual = kkt_residual(&p, &st.ratios);
        Ok(E0Optimum {
            value: Nats::checked(-st.ln_f, "maximize_e0_over_p")?,
            input: Distribution::from_weights(&p)?,
            kkt_ratios: st.ratios,
            kkt_residual,
            iterations,
        })
    };
    if rho == 0.0 {
        // F = sum_y alpha_y with s = 1 + eta, linear in P: spread uniformly
        // over the minimisers of c(x)
        let st = kkt_state(&kernel, &p, rho, eta);
        let lo = st.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let best: Vec<usize> = (0..nx)
            .filter(|&x| st.ratios[x] <= lo * (1.0 + 1e-14))
            .collect();
        let mut q = vec![0.0; nx];
        for &x in &best {
            q[x] = 1.0 / best.len() as f64;
        }
        let st = kkt_state(&kernel, &q, rho, eta);
        return finish(q, st, 0);
    }

    let mut st = kkt_state(&kernel, &p, rho, eta);
    let mut step = 1.0 / rho;
    let cap = 100_000;
    let (mut best, mut since_best) = (f64::INFINITY, 0);
    let mut iterations = 0;
    for it in 0..cap {
        iterations = it;
        let res = kkt_residual(&p, &st.ratios);
        if res < tol {
            return finish(p, st, it);
        }
        if res < 0.5 * best {
            (best, since_best) = (res, 0);
        } else {
            since_best += 1;
            if since_best > 2000 {
                break;
            }
        }
        let mut accepted = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = p
                .iter()
                .zip(&st.ratios)
                .map(|(pi, r)| pi * r.powf(-step))
                .collect();
            let s: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= s);
            let cs = kkt_state(&kernel, &cand, rho, eta);
            // near the optimum F moves quadratically, below rounding
            if cs.ln_f <= st.ln_f + 4.0 * f64::EPSILON * (1.0 + st.ln_f.abs()) {
                p = cand;
                st = cs;
                step = (step * 1.25).min(4.0 / rho);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if nx == 2 {
        // F is convex in t = P(1) with derivative proportional to c(1) - c(0),
        // so bisection on its sign pins the stationary point to rounding
        let gap = |t: f64| {
            let st = kkt_state(&kernel, &[1.0 - t, t], rho, eta);
            st.ratios[1] - st.ratios[0]
        };
        let t = if gap(0.0) >= 0.0 {
            0.0
        } else if gap(1.0) <= 0.0 {
            1.0
        } else {
            let (mut a, mut b) = (0.0, 1.0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if gap(m) < 0.0 {
                    a = m
                } else {
                    b = m
                }
            }
            0.5 * (a + b)
        };
        let q = vec![1.0 - t, t];
        let st = kkt_state(&kernel, &q, rho, eta);
        return finish(q, st, iterations);
    }
    let (p, st) = newton_polish(&kernel, p, st, rho, eta, tol);
    let res = kkt_residual(&p, &st.ratios);
    if res < tol {
        return finish(p, st, iterations);
    }
    Err(Error::NonConvergence {
        what: "max over P of E0",
        iterations,
        residual: res,
    })
}

/// Newton iteration on the stationarity system `c(x) = c` over the current
/// support, with steps accepted on a decrease of the KKT residual (which,
/// unlike `F`, stays resolvable near the optimum).
fn newton_polish(
    kernel: &E0Kernel,
    mut p: Vec<f64>,
    mut st: KktState,
    rho: f64,
    eta: f64,
    tol: f64,
) -> (Vec<f64>, KktState) {
    let (nx, ny) = (kernel.inputs(), kernel.outputs());
    let s = (1.0 + eta) / (1.0 + rho);
    let ws: Vec<Vec<f64>> = (0..nx)
        .map(|x| (0..ny).map(|y| (s * kernel.ln_w(x, y)).exp()).collect())
        .collect();
    for _ in 0..50 {
        let res = kkt_residual(&p, &st.ratios);
        if res < tol {
            break;
        }
        let sup: Vec<usize> = (0..nx).filter(|&x| p[x] > SUPPORT_FLOOR).collect();
        let m = sup.len();
        let alpha: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| p[x] * ws[x][y]).sum())
            .collect();
        let f = st.ln_f.exp();
        // [J -1; 1^T 0] [d; mu] = [1 - r; 0]
        let mut a = vec![vec![0.0; m + 2]; m + 1];
        for (i, &x) in sup.iter().enumerate() {
            for (j, &xp) in sup.iter().enumerate() {
                let cross: f64 = (0..ny)
                    .filter(|&y| alpha[y] > 0.0)
                    .map(|y| ws[x][y] * ws[xp][y] * alpha[y].powf(rho - 1.0))
                    .sum();
                a[i][j] = rho * cross / f - (1.0 + rho) * st.ratios[x] * st.ratios[xp];
            }
            a[i][m] = -1.0;
            a[i][m + 1] = 1.0 - st.ratios[x];
            a[m][i] = 1.0;
        }
        let Some(d) = solve_dense(a) else {
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let mut cand = p.clone();
            for (i, &x) in sup.iter().enumerate() {
                cand[x] = (p[x] + t * d[i]).max(0.0);
            }
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= total);
            let cs = kkt_state(kernel, &cand, rho, eta);
            if kkt_residual(&cand, &cs.ratios) < res {
                (p, st) = (cand, cs);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (p, st)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        for r in c + 1..n {
            let k = a[r][c] / a[c][c];
            for j in c..=n {
                a[r][j] -= k * a[c][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let acc: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (a[r][n] - acc) / a[r][r];
    }
    Some(x)
}

/// `min_P E_c(P, R, K)` with the correct-decoding exponent in its dual form.
pub fn minimize_correct_decoding_over_p(
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<InputOptimum> {
    settings.validate()?;
    if !(rate >= 0.0 && cloud_k >= 0.0 && rate.is_finite() && cloud_k.is_finite()) {
        return Err(invalid("R and K must be finite and non-negative"));
    }
    let kernel = E0Kernel::new(channel);
    let f = |p: &[f64]| correct_decoding_raw(&kernel, &ln_probs(p), rate, cloud_k, settings).0;
    let m = settings.input_search.minimize(channel.input_size(), &f)?;
    Ok(InputOptimum {
        value: Nats::checked(m.value.max(0.0), "minimize_correct_decoding_over_p")?,
        input: m.point,
        heuristic: m.heuristic,
    })
}

/// `max_P E_e(P, R, K)`, the achievable exponent at the best input law.
pub fn maximize_achievable_over_p(
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    settings: &SolverSettings,
) -> Result<InputOptimum> {
    settings.validate()?;
    if !(rate >= 0.0 && cloud_k >= 0.0 && rate.is_finite() && cloud_k.is_finite()) {
        return Err(invalid("R and K must be finite and non-negative"));
    }
    let kernel = E0Kernel::new(channel);
    let f = |p: &[f64]| {
        let ln_p = ln_probs(p);
        let g = |rho: f64, eta: f64| kernel.e0(&ln_p, rho, eta) - rho * rate - eta * cloud_k;
        wedge_max(
            &g,
            1.0,
            settings.grid_points,
            settings.refine_iters,
            settings.xtol,
        )
        .value
    };
    let m = settings.input_search.maximize(channel.input_size(), &f)?;
    Ok(InputOptimum {
        value: Nats::checked(m.value.max(0.0), "maximize_achievable_over_p")?,
        input: m.point,
        heuristic: m.heuristic,
    })
}

/// Rate at which `min_P E_c(P, R, K)` leaves `[0, threshold)`, the exponent
/// being non-decreasing in `R`.
pub fn correct_decoding_departure(
    channel: &Channel,
    cloud_k: f64,
    threshold: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    first_rate_where(&|r| {
        Ok(
            minimize_correct_decoding_over_p(channel, r, cloud_k, settings)?
                .value
                .get()
                >= threshold,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::gallager_e0;

    const LN2: f64 = std::f64::consts::LN_2;

    fn hb(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    fn z() -> Channel {
        Channel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn capacity_examples() {
        let (c, p) = shannon_capacity(&Channel::bsc(0.2).unwrap(), 1e-12).unwrap();
        assert!((c.get() - (LN2 - hb(0.2))).abs() < 1e-11);
        assert!((p[0] - 0.5).abs() < 1e-9);
        let (c, _) = shannon_capacity(&Channel::identity(3).unwrap(), 1e-12).unwrap();
        assert!((c.get() - 3f64.ln()).abs() < 1e-11);
        let same = Channel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(shannon_capacity(&same, 1e-12).unwrap().0.get() < 1e-12);
        // Z channel capacity ln(1 + 2^-2) = ln 1.25
        let (c, _) = shannon_capacity(&z(), 1e-12).unwrap();
        assert!((c.get() - 1.25f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn h_max_examples() {
        let (h, _) = h_max(&Channel::bsc(0.3).unwrap(), 1e-12).unwrap();
        assert!((h.get() - LN2).abs() < 1e-11);
        let same = Channel::new(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        assert!((h_max(&same, 1e-12).unwrap().0.get() - hb(0.1)).abs() < 1e-12);
        let (h, p) = h_max(&z(), 1e-10).unwrap();
        assert!((h.get() - LN2).abs() < 1e-9);
        assert!(p[1] > 0.999);
    }

    #[test]
    fn ensemble_capacity_examples() {
        let w = Channel::bsc(0.2).unwrap();
        let c = LN2 - hb(0.2);
        assert!((ensemble_capacity(&w, 1.0, 1e-12).unwrap().get() - c).abs() < 1e-10);
        assert!((ensemble_capacity(&w, 0.3, 1e-12).unwrap().get() - (LN2 - 0.3)).abs() < 1e-10);
        assert!((ensemble_capacity(&w, f64::INFINITY, 1e-12).unwrap().get() - c).abs() < 1e-10);
    }

    #[test]
    fn e0_maximiser_symmetric_and_certified() {
        let w = Channel::bsc(0.2).unwrap();
        let m = maximize_e0_over_p(1.0, 0.3, &w, 1e-10).unwrap();
        assert!((m.input[0] - 0.5).abs() < 1e-9);
        assert!(m.kkt_residual < 1e-10);
        let m = maximize_e0_over_p(0.0, 0.0, &w, 1e-10).unwrap();
        assert_eq!(m.input.probs(), &[0.5, 0.5]);
        assert!(m.value.get().abs() < 1e-15);
    }

    #[test]
    fn e0_maximiser_on_z_channel_matches_dense_grid() {
        let w = z();
        for &(rho, eta) in &[(1.0, 0.0), (0.5, 0.25), (8.0, 3.0)] {
            let m = maximize_e0_over_p(rho, eta, &w, 1e-10).unwrap();
            assert!(m.kkt_residual < 1e-10, "residual {}", m.kkt_residual);
            let dense = (0..=20_000)
                .map(|i| {
                    let t = i as f64 / 20_000.0;
                    gallager_e0(rho, eta, &Distribution::new(vec![1.0 - t, t]).unwrap(), &w)
                        .unwrap()
                        .get()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(m.value.get() >= dense - 1e-12);
            assert!(m.value.get() - dense < 1e-7);
        }
    }

    #[test]
    fn correct_decoding_over_p_vanishes_below_capacity() {
        let w = Channel::bsc(0.2).unwrap();
        let m =
            minimize_correct_decoding_over_p(&w, 0.15, 1.0, &SolverSettings::default()).unwrap();
        assert!(m.value.get() < 1e-12);
        let m = minimize_correct_decoding_over_p(&w, 0.5, 0.6, &SolverSettings::default()).unwrap();
        assert!(m.value.get() > 0.0);
    }

    #[test]
    fn e0_maximiser_drops_dead_input_to_tight_tolerance() {
        let w = Channel::new(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.05, 0.95]]).unwrap();
        let e = maximize_e0_over_p(1.0, 0.5, &w, 1e-12).unwrap();
        assert!(e.kkt_residual < 1e-12);
        assert!(e.input[1] < 1e-12);
        assert!(e.kkt_ratios[1] > 1.0);
        // stationary along the edge between the two live inputs
        let at = |t: f64| {
            let p = Distribution::new(vec![1.0 - t, 0.0, t]).unwrap();
            crate::dual::gallager_e0(1.0, 0.5, &p, &w).unwrap().get()
        };
        let t = e.input[2];
        assert!(at(t) >= at(t + 1e-4) && at(t) >= at(t - 1e-4));
    }

    #[test]
    fn h_max_reaches_tight_tolerance_on_z_channel() {
        let w = Channel::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let (h, p) = h_max(&w, 1e-13).unwrap();
        assert!((h.get() - 2f64.ln()).abs() < 1e-13);
        assert!((p[1] - 5.0 / 7.0).abs() < 1e-6);
    }
}
