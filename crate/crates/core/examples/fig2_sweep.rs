//! Ensemble capacity of BSC(0.2) against `K`, and achievable error and
//! correct-decoding exponents against `R` for `K` in {1, 0.85, 0.6}.
//!
//! `cargo run --release --example fig2_sweep [capacity.csv exponents.csv]`

use cloud_exponents::io::{run_sweep, ExperimentSpec, InputChoice, Quantity, Range};
use cloud_exponents::{Channel, Distribution, SolverSettings};

fn main() -> cloud_exponents::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let base = ExperimentSpec {
        channel: Channel::bsc(0.2)?,
        input: InputChoice::Fixed(Distribution::uniform(2)?),
        cloud_ks: Range::new(0.1, 1.5, 0.01)?.values(),
        rates: None,
        quantities: vec![Quantity::Capacity],
        settings: SolverSettings::default(),
        output: args.first().map(Into::into),
        seed: 0,
        bits: false,
        sim: Default::default(),
    };
    let exponents = ExperimentSpec {
        cloud_ks: vec![1.0, 0.85, 0.6],
        rates: Some(Range::new(0.0, 0.6, 0.005)?),
        quantities: vec![Quantity::Achievable, Quantity::Correct],
        output: args.get(1).map(Into::into),
        ..base.clone()
    };
    for spec in [base, exponents] {
        let out = run_sweep(&spec)?;
        match &spec.output {
            Some(p) => std::fs::write(p, &out.csv)?,
            None => print!("{}\n", out.csv),
        }
    }
    Ok(())
}
