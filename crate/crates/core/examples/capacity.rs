//! Shannon capacity, maximal output entropy and the ensemble capacity
//! `max{C, H_max - K}`, plus the input laws that attain them.

use cloud_exponents::{ensemble_capacity, h_max, maximize_e0_over_p, shannon_capacity, Channel};

fn main() -> cloud_exponents::Result<()> {
    let channels = [
        ("BSC(0.2)", Channel::bsc(0.2)?),
        (
            "Z(0.3)",
            Channel::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]])?,
        ),
        (
            "3x2",
            Channel::new(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.05, 0.95]])?,
        ),
    ];
    for (name, w) in &channels {
        let (c, pc) = shannon_capacity(w, 1e-12)?;
        let (h, ph) = h_max(w, 1e-12)?;
        println!(
            "{name}: C = {:.6} at {:?}, H_max = {:.6} at {:?}",
            c.get(),
            pc.probs(),
            h.get(),
            ph.probs()
        );
        for k in [0.1, 0.3, 0.5, 1.0] {
            println!("  C(W, {k}) = {:.6}", ensemble_capacity(w, k, 1e-12)?.get());
        }
        let e = maximize_e0_over_p(1.0, 0.5, w, 1e-10)?;
        println!(
            "  max_P E0(1, 0.5) = {:.6} at {:?} (KKT residual {:.1e})",
            e.value.get(),
            e.input.probs(),
            e.kkt_residual
        );
    }
    Ok(())
}
