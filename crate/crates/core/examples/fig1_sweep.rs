//! Lower and upper bounds on the error exponent of the BSC(0.2) ensemble
//! against `R` for four cloud exponents, as CSV. The upper bound is `inf`
//! below the jump rate, which is positive only for `K = 0.85`.
//!
//! `cargo run --release --example fig1_sweep [out.csv]`

use cloud_exponents::io::{run_sweep, ExperimentSpec, InputChoice, Quantity, Range};
use cloud_exponents::{Channel, Distribution, SolverSettings};

fn main() -> cloud_exponents::Result<()> {
    let spec = ExperimentSpec {
        channel: Channel::bsc(0.2)?,
        input: InputChoice::Fixed(Distribution::uniform(2)?),
        cloud_ks: vec![1.2, 1.1, 1.0, 0.85],
        rates: Some(Range::new(0.01, 0.4, 0.005)?),
        quantities: vec![Quantity::Achievable, Quantity::Converse],
        settings: SolverSettings::default(),
        output: std::env::args().nth(1).map(Into::into),
        seed: 0,
        bits: false,
        sim: Default::default(),
    };
    let out = run_sweep(&spec)?;
    match &spec.output {
        Some(p) => std::fs::write(p, &out.csv)?,
        None => print!("{}", out.csv),
    }
    eprintln!("{} rows, {} failed", out.rows, out.failures);
    Ok(())
}
