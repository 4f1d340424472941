//! Monte Carlo error probability of the cloud ensemble at small block
//! lengths, with the replica-counting and the type-based decoders.
//!
//! `cargo run --release --example simulate_ensemble [trials]`

use cloud_exponents::sim::{simulate, SimConfig};
use cloud_exponents::{achievable_error_exponent, Channel, Distribution, SolverSettings};

fn main() -> cloud_exponents::Result<()> {
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2000);
    let w = Channel::bsc(0.2)?;
    let p = Distribution::uniform(2)?;
    let (rate, k) = (0.05, 1.0);
    let ee = achievable_error_exponent(&p, &w, rate, k, &SolverSettings::default())?
        .value
        .get();
    println!("dual exponent {ee:.5}");

    for n in [6, 8, 10] {
        // e^{nR} < 2 at these lengths
        let cfg = SimConfig::new(n, rate, k, p.clone(), w.clone())
            .with_message_floor(2)
            .with_seed(7)
            .with_trials(trials / 10, 10);
        let rep = simulate(&cfg, true, false)?;
        let (lo, hi) = rep.ml.ci95();
        let sub = rep.suboptimal.expect("requested");
        println!(
            "n={n:>2} M={} cloud={:>5}  ML {:.4} [{lo:.4}, {hi:.4}] ties {}  type-based {:.4}  -ln(Pe)/n {:.4}",
            rep.messages,
            rep.cloud_size,
            rep.ml.estimate(),
            rep.ml.ties,
            sub.estimate(),
            rep.ml.exponent(n),
        );
    }
    Ok(())
}
