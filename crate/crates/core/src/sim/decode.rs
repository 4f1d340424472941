use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelInstance, Codebook};
use crate::prob::Channel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub sent: usize,
    pub decoded: usize,
    /// Set when more than one message attained the best score.
    pub tie_broken: bool,
    pub replica_counts: Vec<u64>,
}

impl DecodeOutcome {
    pub fn is_error(&self) -> bool {
        self.decoded != self.sent
    }
}

fn pick<R: Rng>(tied: &[usize], rng: &mut R) -> (usize, bool) {
    if tied.len() == 1 {
        (tied[0], false)
    } else {
        (tied[rng.gen_range(0..tied.len())], true)
    }
}

/// Replica-counting ML decoder with uniform tie-breaks. When no cloud holds
/// the received block every message is tied at zero.
pub fn ml_decode<R: Rng>(
    instance: &ChannelInstance,
    sent: usize,
    received: u64,
    rng: &mut R,
) -> DecodeOutcome {
    let counts: Vec<u64> = (0..instance.messages())
        .map(|m| instance.count(m, received))
        .collect();
    let best = counts.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..counts.len()).filter(|&m| counts[m] == best).collect();
    let (decoded, tie_broken) = pick(&tied, rng);
    DecodeOutcome {
        sent,
        decoded,
        tie_broken,
        replica_counts: counts,
    }
}

/// `-ln W` split by distinct channel values, so that joint types with the
/// same multiset of transition probabilities score bit-identically.
pub(crate) struct TypeScorer {
    nx: usize,
    /// distinct `-ln W` values (finite ones), sorted
    levels: Vec<f64>,
    /// level of cell `y * nx + x`, `None` where `W = 0`
    level_of: Vec<Option<usize>>,
}

impl TypeScorer {
    pub(crate) fn new(channel: &Channel) -> Self {
        let nx = channel.input_size();
        let mut levels: Vec<f64> = Vec::new();
        for x in 0..nx {
            for &w in channel.row(x) {
                if w > 0.0 {
                    levels.push(-w.ln());
                }
            }
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut level_of = vec![None; nx * channel.output_size()];
        for y in 0..channel.output_size() {
            for x in 0..nx {
                let w = channel.prob(x, y);
                if w > 0.0 {
                    level_of[y * nx + x] = levels.iter().position(|&l| l == -w.ln());
                }
            }
        }
        TypeScorer {
            nx,
            levels,
            level_of,
        }
    }

    /// `B` of the joint type of `(y, x)`; `+inf` if some pair has `W = 0`.
    pub(crate) fn b(&self, y: &[u32], x: &[u32]) -> f64 {
        let mut hits = vec![0u64; self.levels.len()];
        for (&yi, &xi) in y.iter().zip(x) {
            match self.level_of[yi as usize * self.nx + xi as usize] {
                Some(l) => hits[l] += 1,
                None => return f64::INFINITY,
            }
        }
        let total: f64 = hits
            .iter()
            .zip(&self.levels)
            .map(|(&h, &l)| h as f64 * l)
            .sum();
        total / y.len() as f64
    }
}

/// Decoder that only checks cloud membership: among messages whose cloud
/// holds the received block, maximise `max{-K, -B}` of the joint type of
/// (received, codeword); uniform tie-breaks; every message is tied when no
/// cloud holds the block.
pub fn suboptimal_decode<R: Rng>(
    instance: &ChannelInstance,
    codebook: &Codebook,
    sent: usize,
    received: u64,
    channel: &Channel,
    cloud_k: f64,
    rng: &mut R,
) -> DecodeOutcome {
    suboptimal_with(
        &TypeScorer::new(channel),
        instance,
        codebook,
        sent,
        received,
        cloud_k,
        rng,
    )
}

pub(crate) fn suboptimal_with<R: Rng>(
    scorer: &TypeScorer,
    instance: &ChannelInstance,
    codebook: &Codebook,
    sent: usize,
    received: u64,
    cloud_k: f64,
    rng: &mut R,
) -> DecodeOutcome {
    let counts: Vec<u64> = (0..instance.messages())
        .map(|m| instance.count(m, received))
        .collect();
    let y = instance.decode(received);
    let scores: Vec<f64> = (0..counts.len())
        .map(|m| {
            if counts[m] == 0 {
                f64::NEG_INFINITY
            } else {
                (-cloud_k).max(-scorer.b(&y, &codebook.words[m]))
            }
        })
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..scores.len()).filter(|&m| scores[m] == best).collect();
    let (decoded, tie_broken) = pick(&tied, rng);
    DecodeOutcome {
        sent,
        decoded,
        tie_broken,
        replica_counts: counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stream_rng;

    fn instance(clouds: Vec<Vec<u64>>) -> ChannelInstance {
        ChannelInstance {
            n: 2,
            outputs: 2,
            clouds: clouds
                .into_iter()
                .map(|mut c| {
                    c.sort();
                    c
                })
                .collect(),
        }
    }

    #[test]
    fn ml_strict_argmax() {
        let inst = instance(vec![vec![3, 3, 1], vec![3, 0]]);
        let out = ml_decode(&inst, 1, 3, &mut stream_rng(0, 0, 1));
        assert_eq!(out.decoded, 0);
        assert!(!out.tie_broken);
        assert_eq!(out.replica_counts, vec![2, 1]);
    }

    #[test]
    fn ml_ties_are_uniform() {
        let inst = instance(vec![vec![3], vec![3]]);
        let mut rng = stream_rng(0, 0, 1);
        let zeros = (0..10_000)
            .filter(|_| ml_decode(&inst, 0, 3, &mut rng).decoded == 0)
            .count();
        assert!((4_700..5_300).contains(&zeros), "{zeros}");
        assert!(ml_decode(&inst, 0, 3, &mut rng).tie_broken);
    }

    #[test]
    fn ml_empty_counts_are_all_tied() {
        let inst = instance(vec![vec![1], vec![2], vec![0]]);
        let mut rng = stream_rng(0, 0, 1);
        let mut seen = [0; 3];
        for _ in 0..3_000 {
            let o = ml_decode(&inst, 0, 3, &mut rng);
            assert!(o.tie_broken);
            seen[o.decoded] += 1;
        }
        assert!(seen.iter().all(|&s| s > 800));
    }

    fn scored(b_values: &[(f64, bool)], k: f64) -> usize {
        // two-symbol sequences over a channel whose B is controlled per codeword
        let w = Channel::new(vec![
            vec![(-b_values[0].0).exp(), 1.0 - (-b_values[0].0).exp()],
            vec![(-b_values[1].0).exp(), 1.0 - (-b_values[1].0).exp()],
        ])
        .unwrap();
        let inst = instance(vec![
            if b_values[0].1 { vec![0] } else { vec![1] },
            if b_values[1].1 { vec![0] } else { vec![1] },
        ]);
        let book = Codebook {
            n: 2,
            words: vec![vec![0, 0], vec![1, 1]],
        };
        suboptimal_decode(&inst, &book, 0, 0, &w, k, &mut stream_rng(0, 0, 2)).decoded
    }

    #[test]
    fn suboptimal_rule() {
        assert_eq!(scored(&[(0.7, false), (0.4, true)], 1.0), 1);
        assert_eq!(scored(&[(0.4, true), (0.7, true)], 1.0), 0);
        assert_eq!(scored(&[(0.7, true), (0.4, true)], 1.0), 1);
        // clipped at -K = -0.3: the B = 0.2 candidate scores -0.2 and wins
        assert_eq!(scored(&[(0.4, true), (0.2, true)], 0.3), 1);
    }

    #[test]
    fn equal_types_score_identically() {
        let w = Channel::bsc(0.2).unwrap();
        let s = TypeScorer::new(&w);
        let a = s.b(&[0, 0, 1, 1, 0, 1, 1, 0], &[0, 1, 1, 1, 0, 1, 1, 0]);
        let b = s.b(&[1, 0, 1, 0, 1, 0, 1, 0], &[1, 0, 1, 0, 1, 0, 0, 0]);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
