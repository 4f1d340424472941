//! Curve sweeps to CSV. Rows are computed in parallel and written in
//! `(K, R)` order; `+inf` is written as `inf`.

use rayon::prelude::*;

use crate::dual::{
    achievable_error_exponent, converse_error_exponent, converse_error_exponent_for_input,
    correct_decoding_exponent_dual, r_min_jump, r_min_jump_for_input, DualWitness, SolverSettings,
};
use crate::error::{invalid, Result};
use crate::input::{
    ensemble_capacity, maximize_achievable_over_p, minimize_correct_decoding_over_p,
};
use crate::io::channel_file::InputChoice;
use crate::io::spec::{ExperimentSpec, Quantity};
use crate::prob::Channel;
use crate::sim::{simulate, SimConfig};

/// Stopping tolerance of the capacity iterations in sweeps.
pub const CAPACITY_TOL: f64 = 1e-12;

pub const EXPONENT_HEADER: [&str; 13] = [
    "K",
    "R",
    "achievable",
    "achievable_rho_star",
    "achievable_eta_star",
    "converse",
    "converse_rho_star",
    "converse_eta_star",
    "converse_boundary",
    "correct_decoding",
    "correct_rho_star",
    "correct_eta_star",
    "error",
];

pub const K_HEADER: [&str; 5] = ["K", "capacity", "r_min", "r_min_beta", "error"];

pub const SIM_HEADER: [&str; 15] = [
    "K",
    "R",
    "n",
    "messages",
    "cloud_size",
    "trials",
    "errors",
    "ties",
    "estimate",
    "ci_low",
    "ci_high",
    "exponent",
    "suboptimal_errors",
    "suboptimal_estimate",
    "error",
];

/// CSV text of a sweep and the number of rows that failed.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub csv: String,
    pub rows: usize,
    pub failures: usize,
}

/// Number formatting shared by all tables.
pub fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Grid coordinates are printed rounded to 12 decimals.
fn fmt_coord(v: f64) -> String {
    fmt_value((v * 1e12).round() / 1e12)
}

#[derive(Clone, Copy, PartialEq)]
enum Table {
    Exponents,
    PerK,
    Simulation,
}

fn table_of(q: Quantity) -> Table {
    match q {
        Quantity::Achievable | Quantity::Converse | Quantity::Correct => Table::Exponents,
        Quantity::Capacity | Quantity::Rmin => Table::PerK,
        Quantity::Simulate => Table::Simulation,
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    let table = table_of(spec.quantities[0]);
    if spec.quantities.iter().any(|&q| table_of(q) != table) {
        return Err(invalid(
            "capacity/rmin, exponent and simulate quantities produce different tables; sweep them separately",
        ));
    }
    let rows: Vec<std::result::Result<Vec<String>, (Vec<String>, String)>> = match table {
        Table::Exponents => exponent_rows(spec),
        Table::PerK => k_rows(spec),
        Table::Simulation => sim_rows(spec)?,
    };
    let header: &[&str] = match table {
        Table::Exponents => &EXPONENT_HEADER,
        Table::PerK => &K_HEADER,
        Table::Simulation => &SIM_HEADER,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    let mut failures = 0;
    let count = rows.len();
    for row in rows {
        let record = match row {
            Ok(mut r) => {
                r.push(String::new());
                r
            }
            Err((mut r, msg)) => {
                failures += 1;
                r.resize(header.len() - 1, String::new());
                r.push(msg);
                r
            }
        };
        w.write_record(&record).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    Ok(SweepOutput {
        csv: String::from_utf8(bytes).map_err(|e| invalid(e.to_string()))?,
        rows: count,
        failures,
    })
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    invalid(format!("csv: {e}"))
}

fn grid(spec: &ExperimentSpec) -> Vec<(f64, f64)> {
    let ks = spec.cloud_ks.clone();
    let rs = spec.rates.map_or_else(Vec::new, |r| r.values());
    ks.iter()
        .flat_map(|&k| rs.iter().map(move |&r| (k, r)))
        .collect()
}

type Row = std::result::Result<Vec<String>, (Vec<String>, String)>;

fn witness_cells(spec: &ExperimentSpec, w: &DualWitness) -> [String; 3] {
    [
        fmt_value(spec.from_nats(w.value.get())),
        fmt_value(w.rho),
        fmt_value(w.eta),
    ]
}

fn achievable(spec: &ExperimentSpec, r: f64, k: f64) -> Result<DualWitness> {
    let s = &spec.settings;
    match &spec.input {
        InputChoice::Fixed(p) => achievable_error_exponent(p, &spec.channel, r, k, s),
        InputChoice::Optimize => {
            let best = maximize_achievable_over_p(&spec.channel, r, k, s)?;
            achievable_error_exponent(&best.input, &spec.channel, r, k, s)
        }
    }
}

fn converse(spec: &ExperimentSpec, r: f64, k: f64) -> Result<DualWitness> {
    match &spec.input {
        InputChoice::Fixed(p) => {
            converse_error_exponent_for_input(p, &spec.channel, r, k, &spec.settings)
        }
        InputChoice::Optimize => converse_error_exponent(&spec.channel, r, k, &spec.settings),
    }
}

fn correct(spec: &ExperimentSpec, r: f64, k: f64) -> Result<DualWitness> {
    let s = &spec.settings;
    match &spec.input {
        InputChoice::Fixed(p) => correct_decoding_exponent_dual(p, &spec.channel, r, k, s),
        InputChoice::Optimize => {
            let best = minimize_correct_decoding_over_p(&spec.channel, r, k, s)?;
            let mut w = correct_decoding_exponent_dual(&best.input, &spec.channel, r, k, s)?;
            w.value = best.value;
            Ok(w)
        }
    }
}

fn exponent_rows(spec: &ExperimentSpec) -> Vec<Row> {
    let want = |q| spec.quantities.contains(&q);
    grid(spec)
        .par_iter()
        .map(|&(k_in, r_in)| {
            let (k, r) = (spec.to_nats(k_in), spec.to_nats(r_in));
            let mut cells = vec![fmt_coord(k_in), fmt_coord(r_in)];
            let mut errors = Vec::new();
            let mut put = |name: &str,
                           res: Option<Result<DualWitness>>,
                           cells: &mut Vec<String>,
                           boundary: bool| {
                match res {
                    None => {
                        cells.extend(std::iter::repeat(String::new()).take(3 + boundary as usize))
                    }
                    Some(Ok(w)) => {
                        cells.extend(witness_cells(spec, &w));
                        if boundary {
                            cells.push(w.boundary.to_string());
                        }
                    }
                    Some(Err(e)) => {
                        cells.extend(std::iter::repeat(String::new()).take(3 + boundary as usize));
                        errors.push(format!("{name}: {e}"));
                    }
                }
            };
            put(
                "achievable",
                want(Quantity::Achievable).then(|| achievable(spec, r, k)),
                &mut cells,
                false,
            );
            put(
                "converse",
                want(Quantity::Converse).then(|| converse(spec, r, k)),
                &mut cells,
                true,
            );
            put(
                "correct_decoding",
                want(Quantity::Correct).then(|| correct(spec, r, k)),
                &mut cells,
                false,
            );
            if errors.is_empty() {
                Ok(cells)
            } else {
                Err((cells, errors.join("; ")))
            }
        })
        .collect()
}

fn k_rows(spec: &ExperimentSpec) -> Vec<Row> {
    let want = |q| spec.quantities.contains(&q);
    spec.cloud_ks
        .par_iter()
        .map(|&k_in| {
            let k = spec.to_nats(k_in);
            let mut cells = vec![fmt_coord(k_in)];
            let mut errors = Vec::new();
            if want(Quantity::Capacity) {
                match ensemble_capacity(&spec.channel, k, CAPACITY_TOL) {
                    Ok(c) => cells.push(fmt_value(spec.from_nats(c.get()))),
                    Err(e) => {
                        cells.push(String::new());
                        errors.push(format!("capacity: {e}"));
                    }
                }
            } else {
                cells.push(String::new());
            }
            if want(Quantity::Rmin) {
                let res = match &spec.input {
                    InputChoice::Fixed(p) => {
                        r_min_jump_for_input(p, &spec.channel, k, &spec.settings)
                    }
                    InputChoice::Optimize => r_min_jump(&spec.channel, k, &spec.settings),
                };
                match res {
                    Ok(w) => {
                        cells.push(fmt_value(spec.from_nats(w.value.get())));
                        cells.push(fmt_value(w.eta));
                    }
                    Err(e) => {
                        cells.extend([String::new(), String::new()]);
                        errors.push(format!("rmin: {e}"));
                    }
                }
            } else {
                cells.extend([String::new(), String::new()]);
            }
            if errors.is_empty() {
                Ok(cells)
            } else {
                Err((cells, errors.join("; ")))
            }
        })
        .collect()
}

fn sim_rows(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let p = match &spec.input {
        InputChoice::Fixed(p) => p.clone(),
        InputChoice::Optimize => return Err(invalid("simulation needs a fixed input law")),
    };
    let mut points = Vec::new();
    for (k, r) in grid(spec) {
        for &n in &spec.sim.block_lengths {
            points.push((k, r, n));
        }
    }
    // each simulation parallelises internally over instances
    Ok(points
        .iter()
        .map(|&(k_in, r_in, n)| {
            let mut cells = vec![fmt_coord(k_in), fmt_coord(r_in), n.to_string()];
            let mut cfg = SimConfig::new(
                n,
                spec.to_nats(r_in),
                spec.to_nats(k_in),
                p.clone(),
                spec.channel.clone(),
            )
            .with_seed(spec.seed)
            .with_trials(spec.sim.instances, spec.sim.transmissions);
            cfg.message_floor = spec.sim.message_floor;
            match simulate(&cfg, spec.sim.suboptimal, false) {
                Ok(rep) => {
                    let (lo, hi) = rep.ml.ci95();
                    cells.extend([
                        rep.messages.to_string(),
                        rep.cloud_size.to_string(),
                        rep.ml.trials.to_string(),
                        rep.ml.errors.to_string(),
                        rep.ml.ties.to_string(),
                        fmt_value(rep.ml.estimate()),
                        fmt_value(lo),
                        fmt_value(hi),
                        fmt_value(spec.from_nats(rep.ml.exponent(n))),
                    ]);
                    match rep.suboptimal {
                        Some(t) => cells.extend([t.errors.to_string(), fmt_value(t.estimate())]),
                        None => cells.extend([String::new(), String::new()]),
                    }
                    Ok(cells)
                }
                Err(e) => Err((cells, e.to_string())),
            }
        })
        .collect())
}

/// Convenience for library callers: a fixed-input exponent sweep.
pub fn exponent_sweep(
    channel: &Channel,
    input: InputChoice,
    ks: &[f64],
    rates: crate::io::spec::Range,
    settings: SolverSettings,
) -> Result<SweepOutput> {
    run_sweep(&ExperimentSpec {
        channel: channel.clone(),
        input,
        cloud_ks: ks.to_vec(),
        rates: Some(rates),
        quantities: vec![Quantity::Achievable, Quantity::Converse, Quantity::Correct],
        settings,
        output: None,
        seed: 0,
        bits: false,
        sim: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::spec::parse_experiment;

    #[test]
    fn formatting() {
        assert_eq!(fmt_value(f64::INFINITY), "inf");
        assert_eq!(fmt_value(0.0), "0");
        assert_eq!(fmt_value(0.25), "0.25");
        assert_eq!(fmt_value(1e-9), "1e-9");
        assert_eq!(fmt_coord(0.01 + 2.0 * 0.005), "0.02");
    }

    #[test]
    fn empty_rate_range_gives_header_only() {
        let spec = parse_experiment(
            "channel = 0.8 0.2; 0.2 0.8\ninput = 0.5,0.5\nk = 1\nrate_range = 0.4 0.1 0.01\nquantity = achievable\n",
            None,
        )
        .unwrap();
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows, 0);
        assert_eq!(out.csv.lines().count(), 1);
        assert!(out.csv.starts_with("K,R,achievable"));
    }

    #[test]
    fn capacity_table_and_determinism() {
        let text = "channel = 0.8 0.2; 0.2 0.8\nk_range = 0.1 1.5 0.1\nquantity = capacity\n";
        let spec = parse_experiment(text, None).unwrap();
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.rows, 15);
        let last = a.csv.lines().last().unwrap();
        assert!(last.starts_with("1.5,0.1927"), "{last}");
    }

    #[test]
    fn converse_inf_token_and_mixing_rejected() {
        let spec = parse_experiment(
            "channel = 0.8 0.2; 0.2 0.8\ninput = 0.5,0.5\nk = 0.85\nrate_range = 0.001 0.001 0.01\nquantity = converse\n",
            None,
        )
        .unwrap();
        let out = run_sweep(&spec).unwrap();
        let row = out.csv.lines().nth(1).unwrap();
        assert!(row.starts_with("0.85,0.001,,,,inf,"), "{row}");
        let mixed = parse_experiment(
            "channel = 0.8 0.2; 0.2 0.8\nk = 1\nquantity = capacity\nquantity = achievable\n",
            None,
        )
        .unwrap();
        assert!(run_sweep(&mixed).is_err());
    }
}
