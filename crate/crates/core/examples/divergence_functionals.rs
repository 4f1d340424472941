//! The information functionals of a joint law `q(y, x) = T(y) V(x|y)`
//! measured against an input law and a channel.

use cloud_exponents::{
    divergence_joint, functional_a, functional_b, functional_h, Channel, Distribution,
    JointDistribution,
};

fn main() -> cloud_exponents::Result<()> {
    let w = Channel::bsc(0.2)?;
    let p = Distribution::uniform(2)?;

    // the matched joint PW and a perturbed one, stored output-major
    let pw = JointDistribution::from_input_and_channel(&p, &w)?;
    let q = JointDistribution::new(2, 2, vec![0.35, 0.15, 0.15, 0.35])?;

    for (label, j) in [("PW", &pw), ("q", &q)] {
        let t = Distribution::new(j.output_marginal())?;
        println!(
            "{label}: D = {:.6}  A = {:.6}  B = {:.6}  H(T) = {:.6}",
            divergence_joint(j, &p, &w)?.get(),
            functional_a(j, &p)?.get(),
            functional_b(j, &w)?.get(),
            functional_h(&t).get(),
        );
    }
    Ok(())
}
