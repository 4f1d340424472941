use cloud_exponents::sim::wilson_interval;
use cloud_exponents::{
    achievable_error_exponent, correct_decoding_exponent_dual, divergence_joint, ensemble_capacity,
    functional_a, functional_b, functional_h, gallager_e0, Channel, Distribution,
    JointDistribution, SolverSettings,
};
use proptest::prelude::*;

fn normalise(v: Vec<f64>) -> Vec<f64> {
    let t: f64 = v.iter().sum();
    v.into_iter().map(|x| x / t).collect()
}

fn law(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalise)
}

/// `(W rows, P, q)` with `q` supported where `P W` is.
fn setup() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (2usize..=3, 2usize..=3)
        .prop_flat_map(|(nx, ny)| (prop::collection::vec(law(ny), nx), law(nx), law(nx * ny)))
}

fn joint(ny: usize, nx: usize, q: &[f64]) -> JointDistribution {
    JointDistribution::new(ny, nx, q.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_identity((rows, p, q) in setup()) {
        let (nx, ny) = (rows.len(), rows[0].len());
        let w = Channel::new(rows).unwrap();
        let p = Distribution::new(p).unwrap();
        let q = joint(ny, nx, &q);
        let t = Distribution::new(q.output_marginal()).unwrap();
        // D(q || PW) = A + B - H(T)
        let d = divergence_joint(&q, &p, &w).unwrap().get();
        let rhs = functional_a(&q, &p).unwrap().get() + functional_b(&q, &w).unwrap().get()
            - functional_h(&t).get();
        prop_assert!((d - rhs).abs() < 1e-12, "{d} vs {rhs}");
    }

    #[test]
    fn functionals_are_nonnegative((rows, p, q) in setup()) {
        let (nx, ny) = (rows.len(), rows[0].len());
        let w = Channel::new(rows).unwrap();
        let p = Distribution::new(p).unwrap();
        let q = joint(ny, nx, &q);
        prop_assert!(divergence_joint(&q, &p, &w).unwrap().get() >= 0.0);
        prop_assert!(functional_a(&q, &p).unwrap().get() >= 0.0);
        prop_assert!(functional_b(&q, &w).unwrap().get() >= 0.0);
    }

    #[test]
    fn a_is_convex(
        (p, q1, q2) in (2usize..=3, 2usize..=3)
            .prop_flat_map(|(nx, ny)| (law(nx), law(nx * ny), law(nx * ny)))
            .prop_map(|(p, a, b)| (p, a, b)),
        lambda in 0.0f64..1.0,
    ) {
        let nx = p.len();
        let ny = q1.len() / nx;
        let p = Distribution::new(p).unwrap();
        let mix: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let a = |q: &[f64]| functional_a(&joint(ny, nx, q), &p).unwrap().get();
        prop_assert!(a(&mix) <= lambda * a(&q1) + (1.0 - lambda) * a(&q2) + 1e-12);
    }

    #[test]
    fn relabelling_leaves_exponents_unchanged(
        (rows, p, _) in setup(),
        rho in 0.0f64..2.0,
        frac in 0.0f64..1.0,
        r in 0.0f64..0.6,
        k in 0.1f64..1.5,
    ) {
        let eta = frac * rho;
        let w = Channel::new(rows.clone()).unwrap();
        let pd = Distribution::new(p.clone()).unwrap();
        // reverse both alphabets
        let rev_rows: Vec<Vec<f64>> = rows.iter().rev().map(|r| r.iter().rev().copied().collect()).collect();
        let wr = Channel::new(rev_rows).unwrap();
        let pr = Distribution::new(p.iter().rev().copied().collect()).unwrap();
        let e = gallager_e0(rho, eta, &pd, &w).unwrap().get();
        let er = gallager_e0(rho, eta, &pr, &wr).unwrap().get();
        prop_assert!((e - er).abs() < 1e-12);
        let s = SolverSettings::default();
        let a = achievable_error_exponent(&pd, &w, r, k, &s).unwrap().value.get();
        let ar = achievable_error_exponent(&pr, &wr, r, k, &s).unwrap().value.get();
        prop_assert!((a - ar).abs() < 1e-9, "{a} vs {ar}");
    }

    #[test]
    fn exponents_are_monotone(
        (rows, p, _) in setup(),
        r in 0.0f64..0.8,
        dr in 0.001f64..0.2,
        k in 0.1f64..1.5,
        dk in 0.001f64..0.5,
    ) {
        let w = Channel::new(rows).unwrap();
        let p = Distribution::new(p).unwrap();
        let s = SolverSettings::default();
        let ee = |r, k| achievable_error_exponent(&p, &w, r, k, &s).unwrap().value.get();
        let ec = |r, k| correct_decoding_exponent_dual(&p, &w, r, k, &s).unwrap().value.get();
        let slack = 1e-9;
        prop_assert!(ee(r + dr, k) <= ee(r, k) + slack);
        // larger clouds hurt the error exponent and help correct decoding
        prop_assert!(ee(r, k + dk) <= ee(r, k) + slack);
        prop_assert!(ec(r + dr, k) + slack >= ec(r, k));
        prop_assert!(ec(r, k + dk) + slack >= ec(r, k));
        prop_assert!(ee(r, k) >= 0.0 && ec(r, k) >= 0.0);
        let c = |k| ensemble_capacity(&w, k, 1e-10).unwrap().get();
        prop_assert!(c(k + dk) <= c(k) + 1e-9);
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, trials);
        let est = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= est + 1e-15 && est <= hi + 1e-15 && hi <= 1.0);
    }
}
