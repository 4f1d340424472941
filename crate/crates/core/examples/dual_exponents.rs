//! Achievable, converse and correct-decoding exponents of the BSC(0.2)
//! ensemble at a few rates, with the maximising `(rho, eta)`.

use cloud_exponents::{
    achievable_error_exponent, converse_error_exponent_for_input, correct_decoding_exponent_dual,
    gallager_e0, tilted_joint, Channel, Distribution, SolverSettings,
};

fn main() -> cloud_exponents::Result<()> {
    let w = Channel::bsc(0.2)?;
    let p = Distribution::uniform(2)?;
    let s = SolverSettings::default();
    let k = 0.85;

    println!("E0(1, 0.5) = {:.6}", gallager_e0(1.0, 0.5, &p, &w)?.get());
    let q = tilted_joint(1.0, 0.5, &p, &w)?;
    println!("tilted joint at (1, 0.5): {:?}", q.probs());

    println!(
        "{:>6} {:>22} {:>22} {:>22}",
        "R", "achievable", "converse", "correct"
    );
    for r in [0.0, 0.02, 0.05, 0.1, 0.2, 0.3] {
        let a = achievable_error_exponent(&p, &w, r, k, &s)?;
        let c = converse_error_exponent_for_input(&p, &w, r, k, &s)?;
        let d = correct_decoding_exponent_dual(&p, &w, r, k, &s)?;
        let cell = |v: f64, rho: f64, eta: f64| format!("{v:.5} ({rho:.2},{eta:.2})");
        println!(
            "{r:>6.2} {:>22} {:>22} {:>22}",
            cell(a.value.get(), a.rho, a.eta),
            if c.value.is_infinite() {
                "inf".to_string()
            } else {
                cell(c.value.get(), c.rho, c.eta)
            },
            cell(d.value.get(), d.rho, d.eta),
        );
    }
    Ok(())
}
