//! Derivative-free maximisers used by the exponent solvers.
//!
//! None of them assume unimodality globally: a coarse grid picks the cell,
//! golden-section search refines inside the neighbouring cells only. Ties on
//! the grid go to the first point in enumeration order, which keeps results
//! independent of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::Distribution;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[inline]
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Max1 {
    pub x: f64,
    pub value: f64,
}

impl Max1 {
    fn consider(&mut self, x: f64, value: f64) {
        if value > self.value {
            self.x = x;
            self.value = value;
        }
    }
}

/// Golden-section search for a maximum on `[lo, hi]`. Returns the best point
/// evaluated, endpoints included.
pub(crate) fn golden_max(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    iters: usize,
    xtol: f64,
) -> Max1 {
    let mut best = Max1 {
        x: lo,
        value: sanitize(f(lo)),
    };
    if hi <= lo {
        return best;
    }
    best.consider(hi, sanitize(f(hi)));

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    best.consider(c, fc);
    best.consider(d, fd);
    for _ in 0..iters {
        if b - a <= xtol * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(f(c));
            best.consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(f(d));
            best.consider(d, fd);
        }
    }
    best
}

/// Grid over `[lo, hi]` followed by golden refinement around the best node.
pub(crate) fn grid_golden_max(
    f: &(dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    points: usize,
    iters: usize,
    xtol: f64,
) -> Max1 {
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    let node = |i: usize| {
        if i + 1 == points {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let values: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| sanitize(f(node(i))))
        .collect();
    let mut best_i = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best_i] {
            best_i = i;
        }
    }
    let mut best = Max1 {
        x: node(best_i),
        value: values[best_i],
    };
    let a = node(best_i.saturating_sub(1));
    let b = node((best_i + 1).min(points - 1));
    let refined = golden_max(f, a, b, iters, xtol);
    best.consider(refined.x, refined.value);
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Max2 {
    pub rho: f64,
    pub eta: f64,
    pub value: f64,
}

/// Maximises `f(rho, eta)` over the wedge `0 <= eta <= rho <= rho_max`.
///
/// The grid is `points` nodes per axis restricted to the wedge. Refinement is
/// a nested golden search (outer on `rho`, inner on `eta`) inside the grid
/// cells adjacent to the best node, so the diagonal constraint is honoured
/// exactly.
pub(crate) fn wedge_max(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    rho_max: f64,
    points: usize,
    iters: usize,
    xtol: f64,
) -> Max2 {
    let points = points.max(2);
    let step = rho_max / (points - 1) as f64;
    let node = |i: usize| {
        if i + 1 == points {
            rho_max
        } else {
            step * i as f64
        }
    };

    let rows: Vec<(usize, f64)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let rho = node(i);
            let mut best_j = 0;
            let mut best_v = f64::NEG_INFINITY;
            for j in 0..=i {
                let v = sanitize(f(rho, node(j)));
                if v > best_v {
                    best_v = v;
                    best_j = j;
                }
            }
            (best_j, best_v)
        })
        .collect();
    let (mut bi, mut bj, mut bv) = (0, 0, f64::NEG_INFINITY);
    for (i, &(j, v)) in rows.iter().enumerate() {
        if v > bv {
            bi = i;
            bj = j;
            bv = v;
        }
    }
    let mut best = Max2 {
        rho: node(bi),
        eta: node(bj),
        value: bv,
    };

    let rho_lo = node(bi.saturating_sub(1));
    let rho_hi = node((bi + 1).min(points - 1));
    let eta_c = node(bj);
    let profile = |rho: f64| {
        let lo = (eta_c - step).max(0.0).min(rho);
        let hi = (eta_c + step).min(rho);
        golden_max(&|eta| f(rho, eta), lo, hi, iters, xtol)
    };
    let outer = golden_max(&|rho| profile(rho).value, rho_lo, rho_hi, iters, xtol);
    // the profile is deterministic, so re-running it recovers the inner argmax
    let inner = profile(outer.x);
    if inner.value > best.value {
        best = Max2 {
            rho: outer.x,
            eta: inner.x,
            value: inner.value,
        };
    }
    best
}

/// Search over the probability simplex.
///
/// Binary alphabets use a dense grid on `P(1)` plus golden refinement and are
/// treated as authoritative. Larger alphabets run a seeded multi-start
/// pairwise mass-exchange search and flag the result as heuristic.
#[derive(Clone, Debug)]
pub struct SimplexSearch {
    /// Grid nodes on `[0, 1]` for the binary case.
    pub binary_points: usize,
    pub refine_iters: usize,
    pub xtol: f64,
    /// Random restarts for alphabets larger than two (on top of the uniform
    /// point and the vertices).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SimplexSearch {
    fn default() -> Self {
        SimplexSearch {
            binary_points: 1001,
            refine_iters: 200,
            xtol: 1e-12,
            restarts: 8,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexOptimum {
    pub point: Distribution,
    pub value: f64,
    /// `true` when no global-optimality claim is made.
    pub heuristic: bool,
}

impl SimplexSearch {
    pub fn maximize(
        &self,
        dim: usize,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> Result<SimplexOptimum> {
        match dim {
            0 => Err(Error::Empty("alphabet")),
            1 => Ok(SimplexOptimum {
                point: Distribution::uniform(1)?,
                value: sanitize(f(&[1.0])),
                heuristic: false,
            }),
            2 => {
                let g = |t: f64| f(&[1.0 - t, t]);
                let m = grid_golden_max(
                    &g,
                    0.0,
                    1.0,
                    self.binary_points,
                    self.refine_iters,
                    self.xtol,
                );
                Ok(SimplexOptimum {
                    point: Distribution::new(vec![1.0 - m.x, m.x])?,
                    value: m.value,
                    heuristic: false,
                })
            }
            _ => self.pattern_search(dim, f),
        }
    }

    pub fn minimize(
        &self,
        dim: usize,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> Result<SimplexOptimum> {
        let neg = |p: &[f64]| -f(p);
        let mut m = self.maximize(dim, &neg)?;
        m.value = -m.value;
        Ok(m)
    }

    fn pattern_search(
        &self,
        dim: usize,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> Result<SimplexOptimum> {
        let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / dim as f64; dim]];
        for v in 0..dim {
            let mut p = vec![0.0; dim];
            p[v] = 1.0;
            starts.push(p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.restarts {
            let w: Vec<f64> = (0..dim)
                .map(|_| -rng.gen::<f64>().max(1e-300).ln())
                .collect();
            let s: f64 = w.iter().sum();
            starts.push(w.iter().map(|v| v / s).collect());
        }

        let results: Vec<(Vec<f64>, f64)> = starts
            .into_par_iter()
            .map(|start| {
                let mut p = start;
                let mut value = sanitize(f(&p));
                let mut delta = 0.25;
                while delta > self.xtol {
                    let mut improved = false;
                    for i in 0..dim {
                        for j in 0..dim {
                            if i == j || p[i] <= 0.0 {
                                continue;
                            }
                            let moved = delta.min(p[i]);
                            let mut cand = p.clone();
                            cand[i] -= moved;
                            cand[j] += moved;
                            let v = sanitize(f(&cand));
                            if v > value {
                                p = cand;
                                value = v;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        delta *= 0.5;
                    }
                }
                (p, value)
            })
            .collect();
        let mut best = 0;
        for (k, r) in results.iter().enumerate() {
            if r.1 > results[best].1 {
                best = k;
            }
        }
        let (p, value) = results.into_iter().nth(best).expect("at least one start");
        Ok(SimplexOptimum {
            point: Distribution::from_weights(&p)?,
            value,
            heuristic: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let m = golden_max(&|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 200, 1e-14);
        assert!((m.x - 0.3).abs() < 1e-7);
        let m = golden_max(&|x| -x, 0.0, 1.0, 200, 1e-14);
        assert_eq!(m.x, 0.0);
    }

    #[test]
    fn grid_escapes_local_maximum() {
        // two bumps, the right one higher
        let f = |x: f64| {
            (-(x - 0.2f64).powi(2) * 200.0).exp() + 1.5 * (-(x - 0.8f64).powi(2) * 200.0).exp()
        };
        let m = grid_golden_max(&f, 0.0, 1.0, 33, 200, 1e-14);
        assert!((m.x - 0.8).abs() < 1e-3);
    }

    #[test]
    fn wedge_respects_diagonal() {
        // unconstrained max at (0.3, 0.6) lies outside the wedge
        let f = |r: f64, e: f64| -(r - 0.3).powi(2) - (e - 0.6).powi(2);
        let m = wedge_max(&f, 1.0, 64, 200, 1e-14);
        assert!(m.eta <= m.rho + 1e-15);
        assert!((m.rho - 0.45).abs() < 1e-6 && (m.eta - 0.45).abs() < 1e-6);
    }

    #[test]
    fn simplex_search_binary_and_ternary() {
        let s = SimplexSearch::default();
        let m = s.maximize(2, &|p| -(p[1] - 0.37).powi(2)).unwrap();
        assert!((m.point[1] - 0.37).abs() < 1e-7);
        assert!(!m.heuristic);
        let target = [0.2, 0.5, 0.3];
        let m = s
            .minimize(3, &|p| {
                p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
            })
            .unwrap();
        assert!(m.heuristic);
        assert!(m
            .point
            .probs()
            .iter()
            .zip(&target)
            .all(|(a, b)| (a - b).abs() < 1e-6));
    }
}
