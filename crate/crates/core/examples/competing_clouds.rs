//! Exact probability that an incorrect cloud holds strictly more replicas
//! than the correct one, next to the asymptotic floor.

use cloud_exponents::sim::{competition_probability, competition_probability_unconditional};

fn main() -> cloud_exponents::Result<()> {
    let floor = 0.5 * (1.0 - 1.0 / (2.0 * std::f64::consts::PI).sqrt());
    println!("floor {floor:.5}");
    print!("{:>6}", "alpha");
    let ms = [2u64, 10, 50, 100, 500, 2000];
    for m in ms {
        print!("{:>10}", format!("M={m}"));
    }
    println!();
    for alpha in [0.05, 0.1, 0.25, 0.5, 0.8, 1.0] {
        print!("{alpha:>6}");
        for m in ms {
            print!("{:>10.5}", competition_probability(m, alpha)?);
        }
        println!();
    }
    println!(
        "M=2 alpha=0.5: conditional {:.6}, unconditional {:.6}",
        competition_probability(2, 0.5)?,
        competition_probability_unconditional(2, 0.5)?
    );
    Ok(())
}
