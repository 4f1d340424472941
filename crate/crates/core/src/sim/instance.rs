use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::error::{invalid, Result};

/// Codewords as input-symbol indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub words: Vec<Vec<u32>>,
}

/// One realised channel: for every message a multiset of output sequences,
/// each packed base `|Y|` (first letter most significant) and kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInstance {
    pub n: usize,
    pub outputs: usize,
    pub clouds: Vec<Vec<u64>>,
}

impl ChannelInstance {
    pub fn messages(&self) -> usize {
        self.clouds.len()
    }

    /// Replicas of `seq` in the cloud of `message`.
    pub fn count(&self, message: usize, seq: u64) -> u64 {
        let c = &self.clouds[message];
        (c.partition_point(|&v| v <= seq) - c.partition_point(|&v| v < seq)) as u64
    }

    pub fn encode(&self, letters: &[u32]) -> u64 {
        letters
            .iter()
            .fold(0u64, |acc, &y| acc * self.outputs as u64 + y as u64)
    }

    pub fn decode(&self, mut seq: u64) -> Vec<u32> {
        let mut out = vec![0u32; self.n];
        for slot in out.iter_mut().rev() {
            *slot = (seq % self.outputs as u64) as u32;
            seq /= self.outputs as u64;
        }
        out
    }
}

/// Draws a codebook of i.i.d.-`P` codewords and, for each, a cloud of
/// `floor(e^{nK})` memoryless `W` outputs.
pub fn generate_instance<R: Rng>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(Codebook, ChannelInstance)> {
    cfg.validate()?;
    let input =
        WeightedIndex::new(cfg.input.probs()).map_err(|e| invalid(format!("input law: {e}")))?;
    let rows = cfg
        .channel
        .rows()
        .map(|r| WeightedIndex::new(r).map_err(|e| invalid(format!("channel row: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let ny = cfg.channel.output_size() as u64;
    let messages = cfg.messages() as usize;
    let cloud = cfg.cloud_size() as usize;

    let words: Vec<Vec<u32>> = (0..messages)
        .map(|_| (0..cfg.n).map(|_| input.sample(rng) as u32).collect())
        .collect();
    let clouds = words
        .iter()
        .map(|x| {
            let mut members: Vec<u64> = (0..cloud)
                .map(|_| {
                    x.iter().fold(0u64, |acc, &xi| {
                        acc * ny + rows[xi as usize].sample(rng) as u64
                    })
                })
                .collect();
            members.sort_unstable();
            members
        })
        .collect();
    Ok((
        Codebook { n: cfg.n, words },
        ChannelInstance {
            n: cfg.n,
            outputs: ny as usize,
            clouds,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Channel, Distribution};
    use crate::sim::stream_rng;

    #[test]
    fn noiseless_clouds_repeat_the_codeword() {
        let cfg = SimConfig::new(
            1,
            std::f64::consts::LN_2 + 1e-9,
            3f64.ln() + 1e-9,
            Distribution::uniform(2).unwrap(),
            Channel::identity(2).unwrap(),
        );
        let (book, inst) = generate_instance(&cfg, &mut stream_rng(7, 0, 0)).unwrap();
        assert_eq!(inst.messages(), 2);
        for (w, c) in book.words.iter().zip(&inst.clouds) {
            assert_eq!(c, &vec![w[0] as u64; 3]);
        }
    }

    #[test]
    fn instance_shape_and_determinism() {
        let cfg = SimConfig::new(
            8,
            0.5,
            0.5,
            Distribution::uniform(2).unwrap(),
            Channel::bsc(0.2).unwrap(),
        );
        let a = generate_instance(&cfg, &mut stream_rng(1, 3, 0)).unwrap();
        let b = generate_instance(&cfg, &mut stream_rng(1, 3, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.words.len(), 54);
        assert!(a
            .1
            .clouds
            .iter()
            .all(|c| c.len() == 54 && c.iter().all(|&s| s < 256)));
        let seq = a.1.clouds[0][5];
        assert_eq!(a.1.encode(&a.1.decode(seq)), seq);
        assert!(a.1.count(0, seq) >= 1);
    }
}
