//! Declarative experiment files: flat `key = value` lines, `#` comments,
//! list-valued keys given by repetition.
//!
//! ```text
//! channel_file = bsc02.chan
//! input = 0.5, 0.5
//! k = 1.2
//! k = 0.85
//! rate_range = 0.01 0.4 0.005
//! quantity = achievable
//! quantity = converse
//! output = fig1.csv
//! ```

use std::path::{Path, PathBuf};

use crate::dual::SolverSettings;
use crate::error::{invalid, Error, Result};
use crate::io::channel_file::{
    parse_channel_file, parse_inline_channel, parse_input_choice, InputChoice,
};
use crate::prob::Channel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    Achievable,
    Converse,
    Correct,
    Capacity,
    Rmin,
    Simulate,
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "achievable" => Quantity::Achievable,
            "converse" => Quantity::Converse,
            "correct" | "correct_decoding" => Quantity::Correct,
            "capacity" => Quantity::Capacity,
            "rmin" | "r_min" => Quantity::Rmin,
            "simulate" => Quantity::Simulate,
            other => return Err(invalid(format!("unknown quantity {other:?}"))),
        })
    }
}

/// `start, start + step, ...` up to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
            return Err(invalid(format!(
                "range step must be positive (start {start}, stop {stop}, step {step})"
            )));
        }
        Ok(Range { start, stop, step })
    }

    /// Grid values computed as `start + i * step`, so no error accumulates.
    pub fn values(&self) -> Vec<f64> {
        if self.stop < self.start {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

/// Simulation parameters of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSection {
    pub block_lengths: Vec<usize>,
    pub instances: usize,
    pub transmissions: usize,
    pub message_floor: Option<u64>,
    pub suboptimal: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            block_lengths: Vec::new(),
            instances: 100,
            transmissions: 100,
            message_floor: None,
            suboptimal: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub channel: Channel,
    pub input: InputChoice,
    pub cloud_ks: Vec<f64>,
    pub rates: Option<Range>,
    pub quantities: Vec<Quantity>,
    pub settings: SolverSettings,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Rates, `K` and exponents are read and written in bits.
    pub bits: bool,
    pub sim: SimSection,
}

impl ExperimentSpec {
    /// `K` values, rates converted to nats.
    pub fn ks_nats(&self) -> Vec<f64> {
        self.cloud_ks.iter().map(|&k| self.to_nats(k)).collect()
    }

    pub fn rates_nats(&self) -> Vec<f64> {
        self.rates.map_or_else(Vec::new, |r| {
            r.values().into_iter().map(|v| self.to_nats(v)).collect()
        })
    }

    pub fn to_nats(&self, v: f64) -> f64 {
        if self.bits {
            v * std::f64::consts::LN_2
        } else {
            v
        }
    }

    pub fn from_nats(&self, v: f64) -> f64 {
        if self.bits {
            v / std::f64::consts::LN_2
        } else {
            v
        }
    }
}

/// `(line, key, value)` triples.
pub fn key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        out.push((i + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: cannot parse {v:?}"),
    })
}

fn triple(line: usize, key: &str, v: &str) -> Result<Range> {
    let parts: Vec<f64> = v
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| num(line, key, t))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(Error::Parse {
            line,
            msg: format!("{key}: expected `start stop step`"),
        });
    }
    Range::new(parts[0], parts[1], parts[2]).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })
}

/// Applies one solver key; `false` if the key is not a solver key.
fn apply_setting(s: &mut SolverSettings, line: usize, key: &str, v: &str) -> Result<bool> {
    match key {
        "grid_points" => s.grid_points = num(line, key, v)?,
        "refine_iters" => s.refine_iters = num(line, key, v)?,
        "rho_cap" => s.rho_cap = num(line, key, v)?,
        "tol" => s.tol = num(line, key, v)?,
        "rho_edge" => s.rho_edge = num(line, key, v)?,
        "xtol" => s.xtol = num(line, key, v)?,
        "input_grid_points" => s.input_search.binary_points = num(line, key, v)?,
        "input_restarts" => s.input_search.restarts = num(line, key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Solver settings file: the solver keys of the experiment format only.
pub fn parse_settings(text: &str) -> Result<SolverSettings> {
    let mut s = SolverSettings::default();
    for (line, key, v) in key_values(text)? {
        if !apply_setting(&mut s, line, &key, &v)? {
            return Err(Error::Parse {
                line,
                msg: format!("unknown solver setting {key:?}"),
            });
        }
    }
    s.validate()?;
    Ok(s)
}

pub fn parse_settings_file(path: impl AsRef<Path>) -> Result<SolverSettings> {
    parse_settings(&std::fs::read_to_string(path)?)
}

/// Parses an experiment; relative `channel_file` paths resolve against `base`.
pub fn parse_experiment(text: &str, base: Option<&Path>) -> Result<ExperimentSpec> {
    let mut channel = None;
    let mut input = InputChoice::Optimize;
    let mut ks = Vec::new();
    let mut rates = None;
    let (mut r_start, mut r_stop, mut r_step) = (None, None, None);
    let mut quantities = Vec::new();
    let mut settings = SolverSettings::default();
    let mut output = None;
    let mut seed = 0;
    let mut bits = false;
    let mut sim = SimSection::default();

    for (line, key, v) in key_values(text)? {
        if apply_setting(&mut settings, line, &key, &v)? {
            continue;
        }
        match key.as_str() {
            "channel" => channel = Some(parse_inline_channel(&v)?),
            "channel_file" => {
                let p = PathBuf::from(&v);
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                };
                channel = Some(parse_channel_file(p)?);
            }
            "input" => input = parse_input_choice(&v)?,
            "k" => ks.push(num(line, &key, &v)?),
            "k_range" => ks.extend(triple(line, &key, &v)?.values()),
            "rate_range" => rates = Some(triple(line, &key, &v)?),
            "rate_start" => r_start = Some(num(line, &key, &v)?),
            "rate_stop" => r_stop = Some(num(line, &key, &v)?),
            "rate_step" => r_step = Some(num(line, &key, &v)?),
            "quantity" => quantities.push(Quantity::parse(&v)?),
            "output" => output = Some(PathBuf::from(v)),
            "seed" => seed = num(line, &key, &v)?,
            "bits" => bits = num(line, &key, &v)?,
            "n" => sim.block_lengths.push(num(line, &key, &v)?),
            "instances" => sim.instances = num(line, &key, &v)?,
            "transmissions" => sim.transmissions = num(line, &key, &v)?,
            "message_floor" => sim.message_floor = Some(num(line, &key, &v)?),
            "suboptimal" => sim.suboptimal = num(line, &key, &v)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key {key:?}"),
                })
            }
        }
    }
    match (r_start, r_stop, r_step) {
        (None, None, None) => {}
        (Some(a), Some(b), Some(c)) => rates = Some(Range::new(a, b, c)?),
        _ => {
            return Err(invalid(
                "rate_start, rate_stop and rate_step must be given together",
            ))
        }
    }
    if quantities.is_empty() {
        return Err(invalid("at least one quantity is required"));
    }
    quantities.sort();
    quantities.dedup();
    settings.validate()?;
    Ok(ExperimentSpec {
        channel: channel.ok_or_else(|| invalid("missing `channel` or `channel_file`"))?,
        input,
        cloud_ks: ks,
        rates,
        quantities,
        settings,
        output,
        seed,
        bits,
        sim,
    })
}

pub fn parse_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    parse_experiment(&std::fs::read_to_string(path)?, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_values_are_exact_multiples() {
        let r = Range::new(0.01, 0.4, 0.005).unwrap().values();
        assert_eq!(r.len(), 79);
        assert!((r[78] - 0.4).abs() < 1e-12);
        assert!(Range::new(0.5, 0.1, 0.1).unwrap().values().is_empty());
        assert!(Range::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn parses_experiment() {
        let s = parse_experiment(
            "channel = 0.8 0.2; 0.2 0.8\ninput = 0.5,0.5\nk = 1.2\nk = 0.85\n\
             rate_range = 0.01 0.4 0.005\nquantity = converse\nquantity = achievable\n\
             grid_points = 32\nseed = 9\n",
            None,
        )
        .unwrap();
        assert_eq!(s.cloud_ks, vec![1.2, 0.85]);
        assert_eq!(s.quantities, vec![Quantity::Achievable, Quantity::Converse]);
        assert_eq!(s.settings.grid_points, 32);
        assert_eq!(s.seed, 9);
        assert_eq!(s.rates_nats().len(), 79);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(parse_experiment("channel = 1 0; 0 1\n", None).is_err());
        assert!(parse_experiment(
            "channel = 1 0; 0 1\nquantity = capacity\nrate_range = 0 1 0\n",
            None
        )
        .is_err());
        assert!(matches!(
            parse_experiment("channel = 1 0; 0 1\nquantity = capacity\nbogus = 1\n", None),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_settings("grid_points = 2\n").is_err());
        assert_eq!(parse_settings("rho_cap = 32\n").unwrap().rho_cap, 32.0);
    }
}
