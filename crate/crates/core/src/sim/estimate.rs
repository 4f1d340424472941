use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::{suboptimal_with, TypeScorer};
use super::{
    generate_instance, ml_decode, stream_rng, SimConfig, STREAM_GENERATION, STREAM_ML_TIES,
    STREAM_SUBOPTIMAL_TIES,
};
use crate::error::Result;

const Z95: f64 = 1.959_963_984_540_054;

/// Error and tie counts of one decoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub errors: u64,
    pub ties: u64,
}

impl Tally {
    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.trials)
    }

    /// `-(1/n) ln` of the estimate; `+inf` with no observed errors.
    pub fn exponent(&self, n: usize) -> f64 {
        -self.estimate().ln() / n as f64
    }

    fn add(&mut self, o: &Tally) {
        self.trials += o.trials;
        self.errors += o.errors;
        self.ties += o.ties;
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// One transmission, for line-delimited export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub instance_index: u64,
    pub trial_index: u64,
    pub sent: usize,
    pub decoded: usize,
    pub tied: bool,
    pub suboptimal_decoded: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub messages: u64,
    pub cloud_size: u64,
    pub seed: u64,
    pub ml: Tally,
    pub suboptimal: Option<Tally>,
    pub records: Vec<TrialRecord>,
}

/// ML error-probability estimate with its Wilson interval.
pub fn estimate_error_probability(cfg: &SimConfig) -> Result<(f64, (f64, f64), Tally)> {
    let r = simulate(cfg, false, false)?;
    Ok((r.ml.estimate(), r.ml.ci95(), r.ml))
}

/// Runs `num_instances` independent instances with
/// `transmissions_per_instance` uniform messages each. The suboptimal
/// decoder, when requested, sees the same transmissions.
pub fn simulate(cfg: &SimConfig, with_suboptimal: bool, keep_records: bool) -> Result<SimReport> {
    cfg.validate()?;
    let scorer = TypeScorer::new(&cfg.channel);
    let per_instance: Vec<(Tally, Tally, Vec<TrialRecord>)> = (0..cfg.num_instances as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut gen = stream_rng(cfg.seed, i, STREAM_GENERATION);
            let mut ml_rng = stream_rng(cfg.seed, i, STREAM_ML_TIES);
            let mut sub_rng = stream_rng(cfg.seed, i, STREAM_SUBOPTIMAL_TIES);
            let (book, inst) = generate_instance(cfg, &mut gen)?;
            let (mut ml, mut sub) = (Tally::default(), Tally::default());
            let mut records = Vec::new();
            let cloud = cfg.cloud_size();
            for t in 0..cfg.transmissions_per_instance as u64 {
                let sent = gen.gen_range(0..inst.messages());
                // the channel picks one cloud member uniformly
                let received = inst.clouds[sent][gen.gen_range(0..cloud) as usize];
                let o = ml_decode(&inst, sent, received, &mut ml_rng);
                ml.trials += 1;
                ml.errors += o.is_error() as u64;
                ml.ties += o.tie_broken as u64;
                let sub_decoded = if with_suboptimal {
                    let s = suboptimal_with(
                        &scorer,
                        &inst,
                        &book,
                        sent,
                        received,
                        cfg.cloud_k,
                        &mut sub_rng,
                    );
                    sub.trials += 1;
                    sub.errors += s.is_error() as u64;
                    sub.ties += s.tie_broken as u64;
                    Some(s.decoded)
                } else {
                    None
                };
                if keep_records {
                    records.push(TrialRecord {
                        instance_index: i,
                        trial_index: t,
                        sent,
                        decoded: o.decoded,
                        tied: o.tie_broken,
                        suboptimal_decoded: sub_decoded,
                    });
                }
            }
            Ok((ml, sub, records))
        })
        .collect::<Result<_>>()?;

    let (mut ml, mut sub, mut records) = (Tally::default(), Tally::default(), Vec::new());
    for (m, s, r) in per_instance {
        ml.add(&m);
        sub.add(&s);
        records.extend(r);
    }
    Ok(SimReport {
        n: cfg.n,
        messages: cfg.messages(),
        cloud_size: cfg.cloud_size(),
        seed: cfg.seed,
        ml,
        suboptimal: with_suboptimal.then_some(sub),
        records,
    })
}
