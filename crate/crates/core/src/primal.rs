//! Brute-force primal oracle: exact minimisation over the lattice of joint
//! distributions with probabilities in multiples of `1/m`.
//!
//! Nothing here shares numerical machinery with the dual solvers. Entropy-like
//! terms are assembled from integer counts through a `k ln k` table, so every
//! lattice point costs a handful of lookups.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::{Channel, Distribution, JointDistribution, Nats};

/// Lattice `{q : q(cell) = k/m}` on the active cells of `Y x X`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplexGrid {
    pub resolution: usize,
    /// Largest number of active cells accepted.
    pub cell_cap: usize,
    /// Largest number of lattice points accepted.
    pub max_points: u128,
}

impl SimplexGrid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid("lattice resolution must be at least 2"));
        }
        Ok(SimplexGrid {
            resolution,
            cell_cap: 6,
            max_points: 500_000_000,
        })
    }

    pub fn with_cell_cap(mut self, cap: usize) -> Self {
        self.cell_cap = cap;
        self
    }

    /// Number of lattice points on a simplex with `cells` vertices.
    pub fn point_count(&self, cells: usize) -> u128 {
        binomial(
            self.resolution as u128 + cells as u128 - 1,
            cells as u128 - 1,
        )
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Lattice minimum and the joint distribution attaining it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimalResult {
    pub value: Nats,
    /// `None` when the feasible set is empty (value `+inf`).
    pub minimizer: Option<JointDistribution>,
    /// Input law at which an outer maximum over `P` was attained.
    pub input: Option<Distribution>,
}

/// Per-point statistics shared by every objective.
struct Point<'a> {
    counts: &'a [u32],
    /// `sum q ln q`
    qlnq: f64,
    /// `sum_y T ln T`
    tlnt: f64,
    /// `E_q[-ln W]`
    b: f64,
    /// input marginal of `q`
    px: &'a [f64],
}

impl Point<'_> {
    /// `sum_x px(x) ln P(x)`, `-inf` if `q` charges a symbol outside `supp P`.
    fn cross(&self, ln_p: &[f64]) -> f64 {
        self.px
            .iter()
            .zip(ln_p)
            .map(|(&a, &l)| if a > 0.0 { a * l } else { 0.0 })
            .sum()
    }
}

struct Lattice {
    nx: usize,
    ny: usize,
    m: u32,
    /// active cells as `(y, x)`
    cells: Vec<(usize, usize)>,
    neg_ln_w: Vec<f64>,
    klnk: Vec<f64>,
}

impl Lattice {
    fn new(
        channel: &Channel,
        active: impl Fn(usize, usize) -> bool,
        grid: &SimplexGrid,
    ) -> Result<Self> {
        let (nx, ny) = (channel.input_size(), channel.output_size());
        let mut cells = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                if active(y, x) {
                    cells.push((y, x));
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::ZeroMass);
        }
        if cells.len() > grid.cell_cap {
            return Err(Error::GridTooLarge {
                detail: format!(
                    "{} active cells exceed the cap of {}",
                    cells.len(),
                    grid.cell_cap
                ),
            });
        }
        let points = grid.point_count(cells.len());
        if points > grid.max_points {
            return Err(Error::GridTooLarge {
                detail: format!(
                    "{points} lattice points at resolution {} exceed the budget of {}",
                    grid.resolution, grid.max_points
                ),
            });
        }
        let m =
            u32::try_from(grid.resolution).map_err(|_| invalid("lattice resolution too large"))?;
        let neg_ln_w = cells
            .iter()
            .map(|&(y, x)| -channel.prob(x, y).ln())
            .collect();
        let klnk = (0..=m as usize)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    k as f64 * (k as f64).ln()
                }
            })
            .collect();
        Ok(Lattice {
            nx,
            ny,
            m,
            cells,
            neg_ln_w,
            klnk,
        })
    }

    /// Folds `visit` over every lattice point. Chunks are split on the first
    /// cell and returned in enumeration order, so an order-respecting merge
    /// is deterministic.
    fn fold<A: Send>(
        &self,
        init: impl Fn() -> A + Sync,
        visit: impl Fn(&mut A, &Point) + Sync,
    ) -> Vec<A> {
        let d = self.cells.len();
        (0..=self.m)
            .into_par_iter()
            .map(|first| {
                let mut acc = init();
                let mut counts = vec![0u32; d];
                counts[0] = first;
                let mut scratch = Scratch {
                    t: vec![0u32; self.ny],
                    px: vec![0.0; self.nx],
                };
                self.recurse(
                    &mut counts,
                    1,
                    self.m - first,
                    &mut scratch,
                    &mut acc,
                    &visit,
                );
                acc
            })
            .collect()
    }

    fn recurse<A>(
        &self,
        counts: &mut [u32],
        pos: usize,
        remaining: u32,
        scratch: &mut Scratch,
        acc: &mut A,
        visit: &(impl Fn(&mut A, &Point) + Sync),
    ) {
        if pos + 1 >= counts.len() {
            if pos < counts.len() {
                counts[pos] = remaining;
            } else if remaining != 0 {
                return;
            }
            self.evaluate(counts, scratch, acc, visit);
            return;
        }
        for k in 0..=remaining {
            counts[pos] = k;
            self.recurse(counts, pos + 1, remaining - k, scratch, acc, visit);
        }
    }

    fn evaluate<A>(
        &self,
        counts: &[u32],
        s: &mut Scratch,
        acc: &mut A,
        visit: &(impl Fn(&mut A, &Point) + Sync),
    ) {
        let inv_m = 1.0 / self.m as f64;
        let ln_m = (self.m as f64).ln();
        s.t.iter_mut().for_each(|v| *v = 0);
        s.px.iter_mut().for_each(|v| *v = 0.0);
        let mut sq = 0.0;
        let mut b = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let (y, x) = self.cells[i];
            sq += self.klnk[c as usize];
            b += c as f64 * self.neg_ln_w[i];
            s.t[y] += c;
            s.px[x] += c as f64 * inv_m;
        }
        let st: f64 = s.t.iter().map(|&c| self.klnk[c as usize]).sum();
        let p = Point {
            counts,
            qlnq: sq * inv_m - ln_m,
            tlnt: st * inv_m - ln_m,
            b: b * inv_m,
            px: &s.px,
        };
        visit(acc, &p);
    }

    fn joint(&self, counts: &[u32]) -> Result<JointDistribution> {
        let mut probs = vec![0.0; self.nx * self.ny];
        for (i, &(y, x)) in self.cells.iter().enumerate() {
            probs[y * self.nx + x] = counts[i] as f64 / self.m as f64;
        }
        JointDistribution::from_weights(self.ny, self.nx, probs)
    }
}

struct Scratch {
    t: Vec<u32>,
    px: Vec<f64>,
}

#[derive(Clone)]
struct Best {
    value: f64,
    counts: Vec<u32>,
}

impl Best {
    fn empty() -> Self {
        Best {
            value: f64::INFINITY,
            counts: Vec::new(),
        }
    }

    #[inline]
    fn offer(&mut self, value: f64, counts: &[u32]) {
        if value < self.value {
            self.value = value;
            self.counts.clear();
            self.counts.extend_from_slice(counts);
        }
    }
}

fn merge_ordered(chunks: Vec<Vec<Best>>, queries: usize) -> Vec<Best> {
    let mut out = vec![Best::empty(); queries];
    for chunk in chunks {
        for (o, b) in out.iter_mut().zip(chunk) {
            if b.value < o.value {
                *o = b;
            }
        }
    }
    out
}

#[inline]
fn pos(v: f64) -> f64 {
    v.max(0.0)
}

fn check_rates(pairs: &[(f64, f64)]) -> Result<()> {
    for &(r, k) in pairs {
        if !(r.is_finite() && k.is_finite() && r >= 0.0 && k >= 0.0) {
            return Err(invalid(format!(
                "R and K must be finite and non-negative, got ({r}, {k})"
            )));
        }
    }
    Ok(())
}

fn finish(lat: &Lattice, best: Best, what: &'static str) -> Result<PrimalResult> {
    if best.value.is_infinite() {
        return Ok(PrimalResult {
            value: Nats::INFINITY,
            minimizer: None,
            input: None,
        });
    }
    Ok(PrimalResult {
        value: Nats::checked(best.value.max(0.0), what)?,
        minimizer: Some(lat.joint(&best.counts)?),
        input: None,
    })
}

fn batch_over_q(
    input: &Distribution,
    channel: &Channel,
    pairs: &[(f64, f64)],
    grid: &SimplexGrid,
    objective: impl Fn(f64, f64, f64, f64, f64) -> f64 + Sync,
    what: &'static str,
) -> Result<Vec<PrimalResult>> {
    channel.check_input(input)?;
    check_rates(pairs)?;
    let lat = Lattice::new(channel, |y, x| input[x] * channel.prob(x, y) > 0.0, grid)?;
    let ln_p: Vec<f64> = input.probs().iter().map(|p| p.ln()).collect();
    let chunks = lat.fold(
        || vec![Best::empty(); pairs.len()],
        |acc, pt| {
            let cross = pt.cross(&ln_p);
            let d = pt.qlnq - cross + pt.b;
            let a = pt.qlnq - pt.tlnt - cross;
            for (best, &(r, k)) in acc.iter_mut().zip(pairs) {
                best.offer(objective(d, a, pt.b, r, k), pt.counts);
            }
        },
    );
    merge_ordered(chunks, pairs.len())
        .into_iter()
        .map(|b| finish(&lat, b, what))
        .collect()
}

/// `min_q D(q || PW) + |A - R + |B - K|^+|^+` on the lattice.
pub fn primal_achievable(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    grid: &SimplexGrid,
) -> Result<PrimalResult> {
    Ok(primal_achievable_batch(input, channel, &[(rate, cloud_k)], grid)?.remove(0))
}

/// [`primal_achievable`] for many `(R, K)` pairs in one lattice pass.
pub fn primal_achievable_batch(
    input: &Distribution,
    channel: &Channel,
    pairs: &[(f64, f64)],
    grid: &SimplexGrid,
) -> Result<Vec<PrimalResult>> {
    batch_over_q(
        input,
        channel,
        pairs,
        grid,
        |d, a, b, r, k| d + pos(a - r + pos(b - k)),
        "primal_achievable",
    )
}

/// `min_q D(q || PW) + |R - A - |B - K|^+|^+` on the lattice.
pub fn primal_correct_decoding(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    grid: &SimplexGrid,
) -> Result<PrimalResult> {
    Ok(primal_correct_decoding_batch(input, channel, &[(rate, cloud_k)], grid)?.remove(0))
}

pub fn primal_correct_decoding_batch(
    input: &Distribution,
    channel: &Channel,
    pairs: &[(f64, f64)],
    grid: &SimplexGrid,
) -> Result<Vec<PrimalResult>> {
    batch_over_q(
        input,
        channel,
        pairs,
        grid,
        |d, a, b, r, k| d + pos(r - a - pos(b - k)),
        "primal_correct_decoding",
    )
}

/// Converse exponent `max_P min_U D(U || W | P)` subject to
/// `I(P, U) + |B_PU - K|^+ <= R`.
///
/// The outer maximum runs over input laws with probabilities in multiples
/// of `1 / p_resolution`, which must divide the lattice resolution; each one
/// is the input marginal of a lattice class. The result is `+inf` as soon as
/// one such law has an empty constraint set.
pub fn primal_converse(
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    grid: &SimplexGrid,
    p_resolution: usize,
) -> Result<PrimalResult> {
    check_rates(&[(rate, cloud_k)])?;
    if p_resolution == 0 || grid.resolution % p_resolution != 0 {
        return Err(invalid(format!(
            "input resolution {p_resolution} must divide lattice resolution {}",
            grid.resolution
        )));
    }
    let stride = (grid.resolution / p_resolution) as u32;
    let lat = Lattice::new(channel, |y, x| channel.prob(x, y) > 0.0, grid)?;
    let nx = lat.nx;
    let chunks = lat.fold(HashMap::<Vec<u32>, Best>::new, |acc, pt| {
        let mut key = vec![0u32; nx];
        for (i, &c) in pt.counts.iter().enumerate() {
            key[lat.cells[i].1] += c;
        }
        if key.iter().any(|&c| c % stride != 0) {
            return;
        }
        // with P the input marginal of q: D(U||W|P) = sum q ln q - sum P ln P + B
        let plnp: f64 = pt
            .px
            .iter()
            .map(|&a| if a > 0.0 { a * a.ln() } else { 0.0 })
            .sum();
        let d = pt.qlnq - plnp + pt.b;
        let mutual = pt.qlnq - pt.tlnt - plnp;
        let entry = acc.entry(key).or_insert_with(Best::empty);
        if mutual + pos(pt.b - cloud_k) <= rate + 1e-12 {
            entry.offer(d, pt.counts);
        }
    });
    let mut classes: HashMap<Vec<u32>, Best> = HashMap::new();
    for chunk in chunks {
        for (key, b) in chunk {
            let e = classes.entry(key).or_insert_with(Best::empty);
            if b.value < e.value {
                *e = b;
            }
        }
    }
    // deterministic outer argmax: largest value, then smallest key
    let mut keys: Vec<&Vec<u32>> = classes.keys().collect();
    keys.sort();
    let mut winner: Option<(&Vec<u32>, &Best)> = None;
    for key in keys {
        let b = &classes[key];
        if winner.map_or(true, |(_, w)| b.value > w.value) {
            winner = Some((key, b));
        }
    }
    let (key, best) = winner.ok_or(Error::ZeroMass)?;
    let input = Distribution::from_weights(&key.iter().map(|&c| c as f64).collect::<Vec<_>>())?;
    let mut out = finish(&lat, best.clone(), "primal_converse")?;
    out.input = Some(input);
    Ok(out)
}

/// Lattice form of the jump rate:
/// `max_P min_q D(V || P | T) + |B - K|^+`, clamped at zero, with `P` over
/// all laws with probabilities in multiples of `1 / p_resolution`.
pub fn primal_rmin(
    channel: &Channel,
    cloud_k: f64,
    grid: &SimplexGrid,
    p_resolution: usize,
) -> Result<PrimalResult> {
    check_rates(&[(0.0, cloud_k)])?;
    if p_resolution == 0 {
        return Err(invalid("input resolution must be positive"));
    }
    let nx = channel.input_size();
    let inputs = simplex_points(nx, p_resolution as u32);
    let ln_ps: Vec<Vec<f64>> = inputs
        .iter()
        .map(|p| {
            p.iter()
                .map(|&c| (c as f64 / p_resolution as f64).ln())
                .collect()
        })
        .collect();
    let lat = Lattice::new(channel, |y, x| channel.prob(x, y) > 0.0, grid)?;
    let chunks = lat.fold(
        || vec![Best::empty(); inputs.len()],
        |acc, pt| {
            let base = pt.qlnq - pt.tlnt;
            let clip = pos(pt.b - cloud_k);
            for (best, ln_p) in acc.iter_mut().zip(&ln_ps) {
                let v = base - pt.cross(ln_p) + clip;
                if v.is_finite() {
                    best.offer(v, pt.counts);
                }
            }
        },
    );
    let per_input = merge_ordered(chunks, inputs.len());
    let mut bi = 0;
    for (i, b) in per_input.iter().enumerate() {
        if b.value > per_input[bi].value {
            bi = i;
        }
    }
    let input =
        Distribution::from_weights(&inputs[bi].iter().map(|&c| c as f64).collect::<Vec<_>>())?;
    let mut out = finish(&lat, per_input[bi].clone(), "primal_rmin")?;
    out.input = Some(input);
    Ok(out)
}

/// All compositions of `total` into `parts` non-negative integers.
fn simplex_points(parts: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(cur: &mut Vec<u32>, parts: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(cur, parts, left - k, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(parts), parts, total, &mut out);
    out
}

/// The achievable exponent in its two-conditional form:
/// `min D(TV || PW) + |A_{T V'} + |B_{T V'} - K|^+ - R|^+` over pairs of
/// lattice joints `TV`, `TV'` sharing the output marginal and satisfying
/// `K - B_TV <= |K - B_{TV'}|^+`.
pub fn single_min_form(
    input: &Distribution,
    channel: &Channel,
    rate: f64,
    cloud_k: f64,
    grid: &SimplexGrid,
) -> Result<Nats> {
    channel.check_input(input)?;
    check_rates(&[(rate, cloud_k)])?;
    let lat = Lattice::new(channel, |y, x| input[x] * channel.prob(x, y) > 0.0, grid)?;
    let ln_p: Vec<f64> = input.probs().iter().map(|p| p.ln()).collect();
    let ny = lat.ny;
    // (T counts) -> [(B, D, g)]
    let chunks = lat.fold(HashMap::<Vec<u32>, Vec<(f64, f64, f64)>>::new, |acc, pt| {
        let mut t = vec![0u32; ny];
        for (i, &c) in pt.counts.iter().enumerate() {
            t[lat.cells[i].0] += c;
        }
        let cross = pt.cross(&ln_p);
        let d = pt.qlnq - cross + pt.b;
        let a = pt.qlnq - pt.tlnt - cross;
        let g = pos(a + pos(pt.b - cloud_k) - rate);
        acc.entry(t).or_default().push((pt.b, d, g));
    });
    let mut groups: HashMap<Vec<u32>, Vec<(f64, f64, f64)>> = HashMap::new();
    for chunk in chunks {
        for (t, mut v) in chunk {
            groups.entry(t).or_default().append(&mut v);
        }
    }
    let best = groups
        .into_par_iter()
        .map(|(_, mut pts)| {
            pts.sort_by(|u, v| u.0.total_cmp(&v.0));
            // prefix minimum of g over B-sorted candidates for the tilde member
            let mut prefix = Vec::with_capacity(pts.len());
            let mut run = f64::INFINITY;
            for p in &pts {
                run = run.min(p.2);
                prefix.push(run);
            }
            let all = run;
            let mut best = f64::INFINITY;
            for &(b, d, _) in &pts {
                // B_TV >= K admits every partner; otherwise those with B <= B_TV
                let g = if b >= cloud_k {
                    all
                } else {
                    let idx = pts.partition_point(|p| p.0 <= b);
                    prefix[idx - 1]
                };
                best = best.min(d + g);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Nats::checked(best.max(0.0), "single_min_form")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{divergence_joint, functional_a, functional_b};

    fn half() -> Distribution {
        Distribution::uniform(2).unwrap()
    }

    #[test]
    fn point_counts() {
        let g = SimplexGrid::new(400).unwrap();
        assert_eq!(g.point_count(4), 10_827_401);
        assert_eq!(g.point_count(1), 1);
        assert_eq!(simplex_points(3, 4).len(), 15);
    }

    #[test]
    fn lattice_statistics_match_functionals() {
        let w = Channel::new(vec![vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
        let p = Distribution::new(vec![0.4, 0.6]).unwrap();
        let g = SimplexGrid::new(10).unwrap();
        let lat = Lattice::new(&w, |_, _| true, &g).unwrap();
        let ln_p: Vec<f64> = p.probs().iter().map(|v| v.ln()).collect();
        let chunks = lat.fold(Vec::new, |acc: &mut Vec<(Vec<u32>, f64, f64, f64)>, pt| {
            let cross = pt.cross(&ln_p);
            acc.push((
                pt.counts.to_vec(),
                pt.qlnq - cross + pt.b,
                pt.qlnq - pt.tlnt - cross,
                pt.b,
            ));
        });
        let all: Vec<_> = chunks.into_iter().flatten().collect();
        assert_eq!(all.len() as u128, g.point_count(4));
        for (counts, d, a, b) in all.iter().step_by(17) {
            let q = lat.joint(counts).unwrap();
            assert!((divergence_joint(&q, &p, &w).unwrap().get() - d).abs() < 1e-12);
            assert!((functional_a(&q, &p).unwrap().get() - a).abs() < 1e-12);
            assert!((functional_b(&q, &w).unwrap().get() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_rate_gives_zero() {
        let w = Channel::bsc(0.2).unwrap();
        let g = SimplexGrid::new(40).unwrap();
        let r = primal_achievable(&half(), &w, 5.0, 1.0, &g).unwrap();
        assert!(r.value.get() < 1e-12);
        assert!(single_min_form(&half(), &w, 5.0, 1.0, &g).unwrap().get() < 1e-12);
        let c = primal_correct_decoding(&half(), &w, 0.01, 1.0, &g).unwrap();
        assert!(c.value.get() < 1e-12);
    }

    #[test]
    fn zero_cells_are_excluded() {
        let z = Channel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let g = SimplexGrid::new(30).unwrap();
        let r = primal_achievable(&half(), &z, 0.05, 1.0, &g).unwrap();
        let q = r.minimizer.unwrap();
        assert_eq!(q.prob(1, 0), 0.0);
    }

    #[test]
    fn cell_cap_is_enforced() {
        let w = Channel::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.5, 0.25, 0.25],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        let g = SimplexGrid::new(10).unwrap();
        let p = Distribution::uniform(3).unwrap();
        assert!(matches!(
            primal_achievable(&p, &w, 0.1, 1.0, &g),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn converse_above_output_entropy_is_zero() {
        let w = Channel::bsc(0.2).unwrap();
        let g = SimplexGrid::new(200).unwrap();
        let r = primal_converse(&w, 0.8, 1.0, &g, 4).unwrap();
        assert!(r.value.get() < 1e-12);
    }

    #[test]
    fn rmin_large_k_is_zero() {
        let w = Channel::bsc(0.2).unwrap();
        let g = SimplexGrid::new(40).unwrap();
        assert_eq!(primal_rmin(&w, 50.0, &g, 4).unwrap().value.get(), 0.0);
    }
}
