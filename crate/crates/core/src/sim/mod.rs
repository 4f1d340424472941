//! Monte Carlo realisation of the cloud-channel ensemble.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; instance
//! `i` uses stream `4 i + purpose` with purpose 0 for codebook, clouds and
//! channel action, 1 for ML tie-breaks and 2 for tie-breaks of the
//! suboptimal decoder. Results are therefore independent of thread count.

mod competition;
mod decode;
mod estimate;
mod instance;

pub use competition::{competition_probability, competition_probability_unconditional};
pub use decode::{ml_decode, suboptimal_decode, DecodeOutcome};
pub use estimate::{
    estimate_error_probability, simulate, wilson_interval, SimReport, Tally, TrialRecord,
};
pub use instance::{generate_instance, ChannelInstance, Codebook};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::{Channel, Distribution};

/// Default memory budget for one channel instance (2 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

pub(crate) const STREAM_GENERATION: u64 = 0;
pub(crate) const STREAM_ML_TIES: u64 = 1;
pub(crate) const STREAM_SUBOPTIMAL_TIES: u64 = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    /// Block length.
    pub n: usize,
    pub rate: f64,
    pub cloud_k: f64,
    pub input: Distribution,
    pub channel: Channel,
    pub num_instances: usize,
    pub transmissions_per_instance: usize,
    pub seed: u64,
    pub memory_budget: u64,
    /// Lower bound on the number of messages, applied after `floor(e^{nR})`.
    /// Unset, configurations with fewer than two messages are rejected.
    pub message_floor: Option<u64>,
}

impl SimConfig {
    pub fn new(n: usize, rate: f64, cloud_k: f64, input: Distribution, channel: Channel) -> Self {
        SimConfig {
            n,
            rate,
            cloud_k,
            input,
            channel,
            num_instances: 100,
            transmissions_per_instance: 100,
            seed: 0,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            message_floor: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, instances: usize, per_instance: usize) -> Self {
        self.num_instances = instances;
        self.transmissions_per_instance = per_instance;
        self
    }

    pub fn with_message_floor(mut self, floor: u64) -> Self {
        self.message_floor = Some(floor);
        self
    }

    /// `max(floor(e^{nR}), message_floor)`.
    pub fn messages(&self) -> u64 {
        let m = floor_exp(self.n as f64 * self.rate);
        self.message_floor.map_or(m, |f| m.max(f))
    }

    /// `floor(e^{nK})`.
    pub fn cloud_size(&self) -> u64 {
        floor_exp(self.n as f64 * self.cloud_k)
    }

    /// Bytes of one instance: packed cloud members plus the codebook.
    pub fn memory_estimate(&self) -> u128 {
        let m = self.messages() as u128;
        m * self.cloud_size() as u128 * 8 + m * self.n as u128 * 4
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("block length must be positive"));
        }
        if !(self.rate >= 0.0
            && self.rate.is_finite()
            && self.cloud_k >= 0.0
            && self.cloud_k.is_finite())
        {
            return Err(invalid("R and K must be finite and non-negative"));
        }
        self.channel.check_input(&self.input)?;
        let ny = self.channel.output_size() as f64;
        if self.n as f64 * ny.log2() > 63.0 {
            return Err(invalid(format!(
                "|Y|^n = {}^{} does not fit the 63-bit sequence packing",
                self.channel.output_size(),
                self.n
            )));
        }
        if self.messages() < 2 {
            return Err(invalid(format!(
                "floor(e^(nR)) = {} message(s) at n = {}, R = {}; at least two are required \
                 (set a message floor to override)",
                self.messages(),
                self.n,
                self.rate
            )));
        }
        if self.cloud_size() < 1 {
            return Err(invalid("cloud size must be at least 1"));
        }
        let required = self.memory_estimate();
        if required > self.memory_budget as u128 {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.memory_budget as u128,
                messages: self.messages(),
                cloud: self.cloud_size(),
                n: self.n,
            });
        }
        if self.num_instances == 0 || self.transmissions_per_instance == 0 {
            return Err(invalid(
                "at least one instance and one transmission are required",
            ));
        }
        Ok(())
    }
}

fn floor_exp(x: f64) -> u64 {
    let v = x.exp().floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

/// Generator for `(seed, instance, purpose)`.
pub fn stream_rng(seed: u64, instance: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance * 4 + purpose);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_floor_of_exponentials() {
        let cfg = SimConfig::new(
            8,
            0.5,
            0.5,
            Distribution::uniform(2).unwrap(),
            Channel::bsc(0.2).unwrap(),
        );
        assert_eq!(cfg.messages(), 54);
        assert_eq!(cfg.cloud_size(), 54);
        cfg.validate().unwrap();
    }

    #[test]
    fn single_message_rejected_unless_floored() {
        let cfg = SimConfig::new(
            6,
            0.05,
            1.0,
            Distribution::uniform(2).unwrap(),
            Channel::bsc(0.2).unwrap(),
        );
        assert_eq!(cfg.messages(), 1);
        assert!(cfg.validate().is_err());
        let cfg = cfg.with_message_floor(2);
        assert_eq!(cfg.messages(), 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn budget_is_checked_before_allocation() {
        let mut cfg = SimConfig::new(
            30,
            0.5,
            0.5,
            Distribution::uniform(2).unwrap(),
            Channel::bsc(0.2).unwrap(),
        );
        cfg.memory_budget = 1 << 20;
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(err.to_string().contains("messages"));
    }
}
