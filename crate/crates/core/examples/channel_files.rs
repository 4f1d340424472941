//! Channel and experiment files, parsed from text.

use cloud_exponents::io::{parse_channel, parse_experiment, parse_input_choice};

fn main() -> cloud_exponents::Result<()> {
    let w = parse_channel("# erasure-like\n0.7 0.3 0\n0 0.3 0.7\n")?;
    println!("{} inputs, {} outputs", w.input_size(), w.output_size());

    match parse_channel("0.5 0.4\n0.2 0.8\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    println!("{:?}", parse_input_choice("optimize")?);

    let spec = parse_experiment(
        "channel = 0.8 0.2; 0.2 0.8\ninput = 0.5, 0.5\nk = 1\nk = 0.85\n\
         rate_range = 0.01 0.1 0.03\nquantity = achievable\nquantity = converse\n",
        None,
    )?;
    println!(
        "K {:?}, rates {:?}, quantities {:?}",
        spec.cloud_ks,
        spec.rates_nats(),
        spec.quantities
    );
    Ok(())
}
