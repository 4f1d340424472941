//! Brute-force lattice minimisation over joint types, set against the dual
//! formulas it is meant to reproduce.

use std::time::Instant;

use cloud_exponents::{
    achievable_error_exponent, correct_decoding_exponent_dual, primal_achievable_batch,
    primal_correct_decoding_batch, primal_rmin, r_min_jump, single_min_form, Channel, Distribution,
    SimplexGrid, SolverSettings,
};

fn main() -> cloud_exponents::Result<()> {
    let w = Channel::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]])?;
    let p = Distribution::new(vec![0.4, 0.6])?;
    let s = SolverSettings::default();
    let grid = SimplexGrid::new(200)?;
    println!("lattice points per pass: {}", grid.point_count(4));

    let pairs = [(0.02, 0.5), (0.1, 0.8), (0.2, 1.2), (0.4, 0.3)];
    let t = Instant::now();
    let ach = primal_achievable_batch(&p, &w, &pairs, &grid)?;
    let cor = primal_correct_decoding_batch(&p, &w, &pairs, &grid)?;
    println!("two passes in {:.2?}", t.elapsed());
    for (i, &(r, k)) in pairs.iter().enumerate() {
        println!(
            "R={r:<5} K={k:<4} achievable {:.5} / {:.5}   correct {:.5} / {:.5}",
            ach[i].value.get(),
            achievable_error_exponent(&p, &w, r, k, &s)?.value.get(),
            cor[i].value.get(),
            correct_decoding_exponent_dual(&p, &w, r, k, &s)?
                .value
                .get(),
        );
    }

    let smf = single_min_form(&p, &w, 0.1, 0.8, &grid)?;
    println!("two-conditional form at R=0.1 K=0.8: {:.5}", smf.get());

    let bsc = Channel::bsc(0.2)?;
    let lattice = primal_rmin(&bsc, 0.85, &grid, 2)?;
    println!(
        "BSC(0.2) jump rate at K=0.85: lattice {:.5}, dual {:.5}",
        lattice.value.get(),
        r_min_jump(&bsc, 0.85, &s)?.value.get()
    );
    Ok(())
}
