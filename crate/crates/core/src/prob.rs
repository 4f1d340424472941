//! Finite-alphabet probability primitives.
//!
//! Everything here is measured in nats. The conventions `0 ln 0 = 0` and
//! `a ln(a/0) = +inf` for `a > 0` are applied throughout, so channels with
//! zero transition probabilities are handled without special cases upstream.
//!
//! Joint distributions over `Y x X` are stored output-major: cell `(y, x)`
//! lives at `y * |X| + x`. This mirrors the `T(y) V(x|y)` factorisation used
//! by the exponent formulas.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on the total mass of a distribution (and on each channel row).
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// An information quantity in natural-log units. Finite or `+inf`; never NaN.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Nats(f64);

impl Nats {
    pub const ZERO: Nats = Nats(0.0);
    pub const INFINITY: Nats = Nats(f64::INFINITY);

    /// Rejects NaN and `-inf`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::NotANumber("Nats::new"));
        }
        if value == f64::NEG_INFINITY {
            return Err(invalid("negative infinity is not a valid nats value"));
        }
        Ok(Nats(value))
    }

    pub(crate) fn checked(value: f64, what: &'static str) -> Result<Self> {
        if value.is_nan() {
            Err(Error::NotANumber(what))
        } else {
            Nats::new(value)
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Same quantity in bits.
    pub fn to_bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

impl fmt::Display for Nats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl From<Nats> for f64 {
    fn from(n: Nats) -> f64 {
        n.0
    }
}

/// `a ln(a / b)` with the information-theoretic limits.
#[inline]
pub fn xlog_ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// `ln(sum exp(v))`, ignoring `-inf` terms. Returns `-inf` for an empty or
/// all `-inf` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn check_probs(probs: &[f64], tol: f64) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Empty("distribution"));
    }
    for (index, &value) in probs.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized { sum, tol });
    }
    Ok(())
}

/// A probability vector over a finite alphabet (an input law `P` or an
/// output law `T`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, NORMALIZATION_TOL)?;
        Ok(Distribution { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Empty("alphabet"));
        }
        Ok(Distribution {
            probs: vec![1.0 / size as f64; size],
        })
    }

    /// Point mass on `symbol`.
    pub fn degenerate(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(invalid(format!(
                "symbol {symbol} outside alphabet of size {size}"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Distribution { probs })
    }

    /// Normalises a non-negative weight vector. Used by the optimisers, whose
    /// iterates drift from the simplex by rounding only.
    pub(crate) fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::ZeroMass);
        }
        Distribution::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// A row-stochastic transition matrix `W(y|x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    // row-major: x * outputs + y
    matrix: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::with_tolerance(rows, NORMALIZATION_TOL)
    }

    /// Like [`Channel::new`] with a caller-chosen row-sum tolerance. Values
    /// are stored exactly as given.
    pub fn with_tolerance(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::Empty("channel"));
        }
        let outputs = rows[0].len();
        if outputs == 0 {
            return Err(Error::Empty("channel row"));
        }
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != outputs {
                return Err(Error::DimensionMismatch {
                    what: "channel row length",
                    expected: outputs,
                    found: r.len(),
                });
            }
            for (y, &value) in r.iter().enumerate() {
                if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                    return Err(Error::InvalidProbability {
                        index: row * outputs + y,
                        value,
                    });
                }
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowNotStochastic { row, sum, tol });
            }
            matrix.extend_from_slice(r);
        }
        Ok(Channel {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Noiseless channel on `size` symbols.
    pub fn identity(size: usize) -> Result<Self> {
        Channel::new(
            (0..size)
                .map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.outputs)
    }

    /// Output law `T(y) = sum_x P(x) W(y|x)`.
    pub fn output_distribution(&self, input: &Distribution) -> Result<Distribution> {
        self.check_input(input)?;
        let mut t = vec![0.0; self.outputs];
        for (x, row) in self.rows().enumerate() {
            for (ty, w) in t.iter_mut().zip(row) {
                *ty += input[x] * w;
            }
        }
        Distribution::from_weights(&t)
    }

    pub(crate) fn check_input(&self, input: &Distribution) -> Result<()> {
        if input.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                what: "input distribution vs channel inputs",
                expected: self.inputs,
                found: input.len(),
            });
        }
        Ok(())
    }
}

/// Probabilities `q(y, x)` over `Y x X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    outputs: usize,
    inputs: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// `probs` is output-major: `probs[y * inputs + x] = q(y, x)`.
    pub fn new(outputs: usize, inputs: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != outputs * inputs {
            return Err(Error::DimensionMismatch {
                what: "joint distribution cells",
                expected: outputs * inputs,
                found: probs.len(),
            });
        }
        check_probs(&probs, NORMALIZATION_TOL)?;
        Ok(JointDistribution {
            outputs,
            inputs,
            probs,
        })
    }

    pub(crate) fn from_weights(outputs: usize, inputs: usize, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::ZeroMass);
        }
        JointDistribution::new(
            outputs,
            inputs,
            weights.into_iter().map(|w| w / sum).collect(),
        )
    }

    /// The law `P(x) W(y|x)`.
    pub fn from_input_and_channel(input: &Distribution, channel: &Channel) -> Result<Self> {
        channel.check_input(input)?;
        let (nx, ny) = (channel.input_size(), channel.output_size());
        let mut probs = vec![0.0; nx * ny];
        for y in 0..ny {
            for x in 0..nx {
                probs[y * nx + x] = input[x] * channel.prob(x, y);
            }
        }
        JointDistribution::from_weights(ny, nx, probs)
    }

    /// Independent pair: `q(y, x) = T(y) P(x)`.
    pub fn product(output: &Distribution, input: &Distribution) -> Result<Self> {
        let (ny, nx) = (output.len(), input.len());
        let mut probs = Vec::with_capacity(ny * nx);
        for y in 0..ny {
            for x in 0..nx {
                probs.push(output[y] * input[x]);
            }
        }
        JointDistribution::from_weights(ny, nx, probs)
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.probs[y * self.inputs + x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `T(y)`.
    pub fn output_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.inputs)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// `P~(x)`.
    pub fn input_marginal(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.inputs];
        for row in self.probs.chunks(self.inputs) {
            for (px, q) in p.iter_mut().zip(row) {
                *px += q;
            }
        }
        p
    }

    /// `V(.|y)`, or `None` when `T(y) = 0`.
    pub fn input_given_output(&self, y: usize) -> Option<Vec<f64>> {
        let row = &self.probs[y * self.inputs..(y + 1) * self.inputs];
        let t: f64 = row.iter().sum();
        (t > 0.0).then(|| row.iter().map(|q| q / t).collect())
    }

    /// `U(.|x)`, or `None` when `P~(x) = 0`.
    pub fn output_given_input(&self, x: usize) -> Option<Vec<f64>> {
        let col: Vec<f64> = (0..self.outputs).map(|y| self.prob(y, x)).collect();
        let p: f64 = col.iter().sum();
        (p > 0.0).then(|| col.iter().map(|q| q / p).collect())
    }

    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    fn check_against(&self, input: Option<&Distribution>, channel: Option<&Channel>) -> Result<()> {
        if let Some(p) = input {
            if p.len() != self.inputs {
                return Err(Error::DimensionMismatch {
                    what: "joint input alphabet vs P",
                    expected: self.inputs,
                    found: p.len(),
                });
            }
        }
        if let Some(w) = channel {
            if w.input_size() != self.inputs || w.output_size() != self.outputs {
                return Err(Error::DimensionMismatch {
                    what: "joint alphabets vs channel",
                    expected: self.outputs * self.inputs,
                    found: w.output_size() * w.input_size(),
                });
            }
        }
        Ok(())
    }
}

/// `D(q || P x W)`; `+inf` when `q` charges a cell where `P(x) W(y|x) = 0`.
pub fn divergence_joint(
    q: &JointDistribution,
    input: &Distribution,
    channel: &Channel,
) -> Result<Nats> {
    q.check_against(Some(input), Some(channel))?;
    let mut d = 0.0;
    for y in 0..q.outputs {
        for x in 0..q.inputs {
            d += xlog_ratio(q.prob(y, x), input[x] * channel.prob(x, y));
        }
    }
    Nats::checked(d, "divergence_joint")
}

/// Conditional divergence `D(V || P | T)` of the factorisation `q = T V`.
pub fn functional_a(q: &JointDistribution, input: &Distribution) -> Result<Nats> {
    q.check_against(Some(input), None)?;
    let t = q.output_marginal();
    let mut a = 0.0;
    for (y, &ty) in t.iter().enumerate() {
        if ty <= 0.0 {
            continue;
        }
        for x in 0..q.inputs {
            // q ln(V / P) = q ln(q / (T P))
            a += xlog_ratio(q.prob(y, x), ty * input[x]);
        }
    }
    Nats::checked(a, "functional_a")
}

/// `E_q[-ln W(Y|X)]`.
pub fn functional_b(q: &JointDistribution, channel: &Channel) -> Result<Nats> {
    q.check_against(None, Some(channel))?;
    let mut b = 0.0;
    for y in 0..q.outputs {
        for x in 0..q.inputs {
            let m = q.prob(y, x);
            if m > 0.0 {
                let w = channel.prob(x, y);
                if w <= 0.0 {
                    return Ok(Nats::INFINITY);
                }
                b -= m * w.ln();
            }
        }
    }
    Nats::checked(b, "functional_b")
}

/// Shannon entropy of an output law.
pub fn functional_h(output: &Distribution) -> Nats {
    let h: f64 = output.probs().iter().map(|&p| -xlog_ratio(p, 1.0)).sum();
    Nats(h.max(0.0))
}
