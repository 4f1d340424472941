//! Self-checks of the solvers against each other and against closed forms,
//! collected into a machine-readable report.
//!
//! `Quick` runs in a few seconds. `Full` adds the large lattices, the jump
//! structure and the Monte Carlo trend and takes minutes.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dual::{
    achievable_error_exponent, achievable_zero_crossing, converse_error_exponent,
    correct_decoding_exponent_dual, gallager_e0, r_min_jump, tilted_joint, SolverSettings,
};
use crate::input::{correct_decoding_departure, ensemble_capacity, h_max, shannon_capacity};
use crate::io::parse_channel_file;
use crate::primal::{
    primal_achievable_batch, primal_correct_decoding_batch, primal_rmin, single_min_form,
    SimplexGrid,
};
use crate::prob::{divergence_joint, functional_a, functional_b, Channel, Distribution};
use crate::sim::{competition_probability, simulate, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub stage: String,
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(stage: &str, name: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        let passed = if expected.is_infinite() {
            observed == expected
        } else {
            (observed - expected).abs() <= tolerance
        };
        Check {
            stage: stage.into(),
            name,
            passed,
            observed,
            expected,
            tolerance,
            detail: String::new(),
        }
    }

    fn at_least(stage: &str, name: String, observed: f64, bound: f64) -> Self {
        Check {
            stage: stage.into(),
            name,
            passed: observed >= bound,
            observed,
            expected: bound,
            tolerance: 0.0,
            detail: "lower bound".into(),
        }
    }

    fn failed(stage: &str, name: String, detail: String) -> Self {
        Check {
            stage: stage.into(),
            name,
            passed: false,
            observed: f64::NAN,
            expected: f64::NAN,
            tolerance: f64::NAN,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub level: Level,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        // NaN and inf have no JSON form; serde_json writes them as null
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Run the battery at `level`, plus a sanity stage for each extra channel file.
pub fn run_validation(level: Level, channel_files: &[PathBuf]) -> ValidationReport {
    let s = SolverSettings::default();
    let mut checks = Vec::new();
    let full = level == Level::Full;

    primal_dual(
        &mut checks,
        if full { 20 } else { 5 },
        if full { 400 } else { 100 },
        &s,
    );
    tilted(&mut checks, if full { 100 } else { 20 });
    gallager_limit(&mut checks, &s);
    capacity(&mut checks, full);
    zero_crossing(
        &mut checks,
        if full { &[0.3, 0.6, 1.0] } else { &[1.0] },
        &s,
    );
    let ms: &[u64] = if full { &[50, 100, 500, 2000] } else { &[100] };
    lemma_bound(&mut checks, ms);
    if full {
        jump_structure(&mut checks, &s);
        correct_decoding(&mut checks, &s);
        identity(&mut checks, &s);
        simulation_trend(&mut checks, &s);
    }
    for path in channel_files {
        channel_stage(&mut checks, path);
    }
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        level,
        passed,
        checks,
    }
}

fn record<T>(checks: &mut Vec<Check>, stage: &str, name: &str, r: crate::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            checks.push(Check::failed(stage, name.into(), e.to_string()));
            None
        }
    }
}

fn random_binary_channel(rng: &mut ChaCha8Rng) -> Channel {
    let a: f64 = rng.gen_range(0.02..0.98);
    let b: f64 = rng.gen_range(0.02..0.98);
    Channel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).expect("rows are stochastic")
}

fn random_law(rng: &mut ChaCha8Rng, len: usize) -> Distribution {
    let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|v| v / t).collect()).expect("normalised")
}

fn random_pairs(rng: &mut ChaCha8Rng, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| (rng.gen_range(0.0..0.5), rng.gen_range(0.1..1.5)))
        .collect()
}

fn primal_dual(checks: &mut Vec<Check>, channels: usize, m: usize, s: &SolverSettings) {
    const STAGE: &str = "primal-dual";
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let Some(grid) = record(checks, STAGE, "grid", SimplexGrid::new(m)) else {
        return;
    };
    for c in 0..channels {
        let w = random_binary_channel(&mut rng);
        let p = random_law(&mut rng, 2);
        let pairs = random_pairs(&mut rng, 10);
        let Some(primal) = record(
            checks,
            STAGE,
            "lattice",
            primal_achievable_batch(&p, &w, &pairs, &grid),
        ) else {
            continue;
        };
        for (&(r, k), pr) in pairs.iter().zip(&primal) {
            let name = format!("channel {c} R={r:.4} K={k:.4}");
            if let Some(d) = record(
                checks,
                STAGE,
                &name,
                achievable_error_exponent(&p, &w, r, k, s),
            ) {
                checks.push(Check::within(
                    STAGE,
                    name,
                    pr.value.get(),
                    d.value.get(),
                    5e-3,
                ));
            }
        }
    }
}

fn tilted(checks: &mut Vec<Check>, count: usize) {
    const STAGE: &str = "tilted";
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..count {
        let (nx, ny) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
        let rows: Vec<Vec<f64>> = (0..nx)
            .map(|_| random_law(&mut rng, ny).probs().to_vec())
            .collect();
        let w = Channel::new(rows).expect("rows are stochastic");
        let p = random_law(&mut rng, nx);
        let rho: f64 = rng.gen_range(0.0..4.0);
        let eta: f64 = rng.gen_range(0.0..=rho);
        let name = format!("case {i} rho={rho:.4} eta={eta:.4}");
        let lagrangian = (|| -> crate::Result<(f64, f64, f64)> {
            let q = tilted_joint(rho, eta, &p, &w)?;
            let lag = divergence_joint(&q, &p, &w)?.get()
                + rho * functional_a(&q, &p)?.get()
                + eta * functional_b(&q, &w)?.get();
            // T(y) = alpha_y^(1+rho) / sum_y' alpha_y'^(1+rho)
            let sp = (1.0 + eta) / (1.0 + rho);
            let pow: Vec<f64> = (0..ny)
                .map(|y| {
                    let a: f64 = (0..nx).map(|x| p[x] * w.prob(x, y).powf(sp)).sum();
                    a.powf(1.0 + rho)
                })
                .collect();
            let z: f64 = pow.iter().sum();
            let t = q.output_marginal();
            let dev = pow
                .iter()
                .zip(&t)
                .map(|(a, b)| (a / z - b).abs())
                .fold(0.0, f64::max);
            Ok((lag, gallager_e0(rho, eta, &p, &w)?.get(), dev))
        })();
        if let Some((lag, e0, dev)) = record(checks, STAGE, &name, lagrangian) {
            checks.push(Check::within(
                STAGE,
                format!("{name} lagrangian"),
                lag,
                e0,
                1e-9,
            ));
            checks.push(Check::within(
                STAGE,
                format!("{name} output marginal"),
                dev,
                0.0,
                1e-10,
            ));
        }
    }
}

fn gallager_limit(checks: &mut Vec<Check>, s: &SolverSettings) {
    const STAGE: &str = "gallager-limit";
    let w = Channel::bsc(0.2).expect("valid");
    let p = Distribution::uniform(2).expect("valid");
    for i in 1..=9 {
        let r = 0.02 * i as f64;
        let name = format!("R={r:.2}");
        let Some(e) = record(
            checks,
            STAGE,
            &name,
            achievable_error_exponent(&p, &w, r, 10.0, s),
        ) else {
            continue;
        };
        // sup over rho of E0(rho, 0) - rho R, concave in rho: dense grid then ternary
        let f = |rho: f64| {
            gallager_e0(rho, 0.0, &p, &w)
                .map(|v| v.get() - rho * r)
                .unwrap_or(f64::NAN)
        };
        let best = (0..=1000)
            .map(|j| j as f64 / 1000.0)
            .fold(0.0, |b: f64, x| if f(x) > f(b) { x } else { b });
        let (mut lo, mut hi) = ((best - 1e-3).max(0.0), (best + 1e-3).min(1.0));
        for _ in 0..200 {
            let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if f(a) < f(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let g = f(0.5 * (lo + hi)).max(f(0.0)).max(f(1.0));
        checks.push(Check::within(STAGE, name, e.value.get(), g, 1e-6));
    }
}

fn capacity(checks: &mut Vec<Check>, full: bool) {
    const STAGE: &str = "capacity";
    let w = Channel::bsc(0.2).expect("valid");
    let c = 2f64.ln() - (-(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln()));
    let step: f64 = if full { 0.01 } else { 0.1 };
    let n = (1.4 / step).round() as usize;
    for i in 0..=n {
        let k = 0.1 + step * i as f64;
        let name = format!("K={k:.2}");
        if let Some(v) = record(checks, STAGE, &name, ensemble_capacity(&w, k, 1e-12)) {
            checks.push(Check::within(
                STAGE,
                name,
                v.get(),
                c.max(2f64.ln() - k),
                1e-6,
            ));
        }
    }
    let elbow = (|| {
        Ok::<_, crate::Error>(h_max(&w, 1e-12)?.0.get() - shannon_capacity(&w, 1e-12)?.0.get())
    })();
    if let Some(e) = record(checks, STAGE, "elbow", elbow) {
        checks.push(Check::within(STAGE, "elbow".into(), e, 2f64.ln() - c, 1e-3));
    }
}

fn zero_crossing(checks: &mut Vec<Check>, ks: &[f64], s: &SolverSettings) {
    const STAGE: &str = "zero-crossing";
    let w = Channel::bsc(0.2).expect("valid");
    let p = Distribution::uniform(2).expect("valid");
    for &k in ks {
        let Some(c) = record(checks, STAGE, "capacity", ensemble_capacity(&w, k, 1e-12)) else {
            continue;
        };
        let name = format!("K={k} achievable");
        if let Some(r) = record(
            checks,
            STAGE,
            &name,
            achievable_zero_crossing(&p, &w, k, 1e-6, s),
        ) {
            checks.push(Check::within(STAGE, name, r, c.get(), 1e-3));
        }
        let name = format!("K={k} correct decoding");
        if let Some(r) = record(
            checks,
            STAGE,
            &name,
            correct_decoding_departure(&w, k, 1e-6, s),
        ) {
            checks.push(Check::within(STAGE, name, r, c.get(), 1e-3));
        }
    }
}

fn lemma_bound(checks: &mut Vec<Check>, ms: &[u64]) {
    const STAGE: &str = "lemma-bound";
    let bound = 0.5 * (1.0 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()) - 0.01;
    let alphas = (1..=16).map(|k| 0.05 * k as f64).chain([1.0]);
    for &m in ms {
        for a in alphas.clone() {
            let name = format!("M={m} alpha={a:.2}");
            if let Some(v) = record(checks, STAGE, &name, competition_probability(m, a)) {
                checks.push(Check::at_least(STAGE, name, v, bound));
            }
        }
    }
}

fn rmin_bsc_closed_form(p: f64, k: f64) -> f64 {
    let f = |b: f64| -(0.5 * (p.powf(b) + (1.0 - p).powf(b))).ln() - b * k;
    (0..=200_000)
        .map(|i| f(i as f64 / 200_000.0))
        .fold(0.0, f64::max)
}

fn jump_structure(checks: &mut Vec<Check>, s: &SolverSettings) {
    const STAGE: &str = "jump";
    let w = Channel::bsc(0.2).expect("valid");
    for k in [0.92, 1.0, 1.1, 1.2] {
        let name = format!("r_min K={k}");
        if let Some(j) = record(checks, STAGE, &name, r_min_jump(&w, k, s)) {
            checks.push(Check::within(STAGE, name, j.value.get(), 0.0, 0.0));
        }
    }
    let Some(j) = record(checks, STAGE, "r_min K=0.85", r_min_jump(&w, 0.85, s)) else {
        return;
    };
    let rmin = j.value.get();
    checks.push(Check {
        detail: "must be positive".into(),
        passed: rmin > 0.0,
        ..Check::within(
            STAGE,
            "r_min K=0.85".into(),
            rmin,
            rmin_bsc_closed_form(0.2, 0.85),
            1e-6,
        )
    });
    for frac in [0.0, 0.5, 1.0] {
        let r = (frac * (rmin - 2e-3)).max(0.0);
        let name = format!("converse K=0.85 R={r:.5}");
        if let Some(e) = record(
            checks,
            STAGE,
            &name,
            converse_error_exponent(&w, r, 0.85, s),
        ) {
            checks.push(Check::within(
                STAGE,
                name,
                e.value.get(),
                f64::INFINITY,
                0.0,
            ));
        }
    }
    let grid = SimplexGrid::new(400).expect("valid");
    if let Some(pr) = record(
        checks,
        STAGE,
        "primal r_min",
        primal_rmin(&w, 0.85, &grid, 4),
    ) {
        checks.push(Check::within(
            STAGE,
            "primal r_min K=0.85".into(),
            pr.value.get(),
            rmin_bsc_closed_form(0.2, 0.85),
            2e-3,
        ));
    }
}

fn correct_decoding(checks: &mut Vec<Check>, s: &SolverSettings) {
    const STAGE: &str = "correct-decoding";
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid = SimplexGrid::new(400).expect("valid");
    for c in 0..10 {
        let w = random_binary_channel(&mut rng);
        let p = random_law(&mut rng, 2);
        let pairs: Vec<(f64, f64)> = (0..10)
            .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.1..1.5)))
            .collect();
        let Some(primal) = record(
            checks,
            STAGE,
            "lattice",
            primal_correct_decoding_batch(&p, &w, &pairs, &grid),
        ) else {
            continue;
        };
        for (&(r, k), pr) in pairs.iter().zip(&primal) {
            let name = format!("channel {c} R={r:.4} K={k:.4}");
            if let Some(d) = record(
                checks,
                STAGE,
                &name,
                correct_decoding_exponent_dual(&p, &w, r, k, s),
            ) {
                checks.push(Check::within(
                    STAGE,
                    name,
                    pr.value.get(),
                    d.value.get(),
                    5e-3,
                ));
            }
        }
    }
}

fn identity(checks: &mut Vec<Check>, s: &SolverSettings) {
    const STAGE: &str = "identity";
    let p = Distribution::uniform(2).expect("valid");
    let grid = SimplexGrid::new(400).expect("valid");
    for bsc in [0.05, 0.2] {
        let w = Channel::bsc(bsc).expect("valid");
        for &(r, k) in &[(0.02, 0.6), (0.05, 1.0), (0.1, 0.85), (0.15, 1.2)] {
            let name = format!("BSC({bsc}) R={r} K={k}");
            let pair = (|| {
                Ok::<_, crate::Error>((
                    single_min_form(&p, &w, r, k, &grid)?,
                    achievable_error_exponent(&p, &w, r, k, s)?,
                ))
            })();
            if let Some((a, d)) = record(checks, STAGE, &name, pair) {
                checks.push(Check::within(STAGE, name, a.get(), d.value.get(), 2e-3));
            }
        }
    }
}

fn simulation_trend(checks: &mut Vec<Check>, s: &SolverSettings) {
    const STAGE: &str = "simulation-trend";
    let w = Channel::bsc(0.2).expect("valid");
    let p = Distribution::uniform(2).expect("valid");
    let Some(ee) = record(
        checks,
        STAGE,
        "dual",
        achievable_error_exponent(&p, &w, 0.05, 1.0, s),
    ) else {
        return;
    };
    let ee = ee.value.get();
    for n in [6, 8, 10] {
        let cfg = SimConfig::new(n, 0.05, 1.0, p.clone(), w.clone())
            .with_message_floor(2)
            .with_seed(2024)
            .with_trials(1000, 10);
        let name = format!("n={n}");
        let Some(rep) = record(checks, STAGE, &name, simulate(&cfg, true, false)) else {
            continue;
        };
        let x = rep.ml.exponent(n);
        checks.push(Check::at_least(
            STAGE,
            format!("{name} exponent positive"),
            x,
            f64::MIN_POSITIVE,
        ));
        if n == 10 {
            checks.push(Check::within(
                STAGE,
                format!("{name} exponent near dual"),
                x,
                ee,
                0.7 * ee,
            ));
        }
        let Some(sub) = rep.suboptimal else {
            continue;
        };
        let (lo, hi) = sub.ci95();
        checks.push(Check {
            passed: rep.ml.estimate() <= sub.estimate() + 2.0 * (hi - lo),
            detail: "ML error against suboptimal error plus two CI widths".into(),
            ..Check::within(
                STAGE,
                format!("{name} ML vs suboptimal"),
                rep.ml.estimate(),
                sub.estimate(),
                2.0 * (hi - lo),
            )
        });
    }
}

fn channel_stage(checks: &mut Vec<Check>, path: &PathBuf) {
    let stage = format!("channel:{}", path.display());
    let Some(w) = record(checks, &stage, "parse", parse_channel_file(path)) else {
        return;
    };
    if let Some((c, _)) = record(checks, &stage, "capacity", shannon_capacity(&w, 1e-12)) {
        let cap = (w.input_size().min(w.output_size()) as f64).ln();
        checks.push(Check {
            passed: c.get() >= 0.0 && c.get() <= cap + 1e-12,
            detail: "0 <= C <= ln min(|X|, |Y|)".into(),
            ..Check::within(&stage, "capacity range".into(), c.get(), cap, cap)
        });
    }
    let p = Distribution::uniform(w.input_size()).expect("nonempty");
    for (rho, eta) in [(0.5, 0.25), (1.0, 1.0), (3.0, 0.0)] {
        let name = format!("lagrangian rho={rho} eta={eta}");
        let r = (|| -> crate::Result<(f64, f64)> {
            let q = tilted_joint(rho, eta, &p, &w)?;
            let lag = divergence_joint(&q, &p, &w)?.get()
                + rho * functional_a(&q, &p)?.get()
                + eta * functional_b(&q, &w)?.get();
            Ok((lag, gallager_e0(rho, eta, &p, &w)?.get()))
        })();
        if let Some((lag, e0)) = record(checks, &stage, &name, r) {
            checks.push(Check::within(&stage, name, lag, e0, 1e-9));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn quick_suite_passes() {
        let r = run_validation(Level::Quick, &[]);
        let failed: Vec<_> = r.failures().collect();
        assert!(r.passed, "{failed:#?}");
        assert!(r.checks.len() > 50);
    }

    #[test]
    fn within_handles_infinity() {
        assert!(Check::within("s", "n".into(), f64::INFINITY, f64::INFINITY, 0.0).passed);
        assert!(!Check::within("s", "n".into(), 1e300, f64::INFINITY, 0.0).passed);
    }

    #[test]
    fn corrupted_channel_file_names_its_stage() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "0.5 0.4\n0.2 0.8").unwrap();
        let mut checks = Vec::new();
        channel_stage(&mut checks, &f.path().to_path_buf());
        assert_eq!(checks.len(), 1);
        assert!(!checks[0].passed);
        assert!(checks[0].stage.starts_with("channel:"));
        assert!(checks[0].detail.contains("row 0"), "{}", checks[0].detail);
    }

    #[test]
    fn good_channel_file_passes() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# Z channel\n1 0\n0.3 0.7").unwrap();
        let mut checks = Vec::new();
        channel_stage(&mut checks, &f.path().to_path_buf());
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn lemma_bound_at_hundred() {
        let mut checks = Vec::new();
        lemma_bound(&mut checks, &[100]);
        assert_eq!(checks.len(), 17);
        assert!(checks.iter().all(|c| c.passed));
    }

    #[test]
    fn report_serialises_non_finite_values() {
        let r = ValidationReport {
            level: Level::Quick,
            passed: false,
            checks: vec![Check::failed("x", "y".into(), "z".into())],
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["level"], "quick");
        assert!(v["checks"][0]["observed"].is_null());
    }
}
