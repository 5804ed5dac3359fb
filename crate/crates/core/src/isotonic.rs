//! Weighted least-squares regression under order restrictions.
//!
//! All fits minimize `sum_a w_a (x_a - lambda_a)^2 / 2`. Constraints are non-strict.

use crate::error::{Error, Result};

/// Fitted values and their weighted quadratic loss against the input.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedFit {
    pub values: Vec<f64>,
    pub cost: f64,
}

impl OrderedFit {
    fn new(x: &[f64], w: &[f64], values: Vec<f64>) -> Self {
        let cost = weighted_cost(x, w, &values);
        Self { values, cost }
    }
}

pub fn weighted_cost(x: &[f64], w: &[f64], values: &[f64]) -> f64 {
    x.iter()
        .zip(w)
        .zip(values)
        .map(|((x, w), v)| w * (x - v) * (x - v))
        .sum::<f64>()
        / 2.0
}

fn validate(x: &[f64], w: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != w.len() {
        return Err(Error::domain(format!(
            "values and weights must be nonempty and of equal length ({} vs {})",
            x.len(),
            w.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("values must be finite"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::domain("weights must be positive and finite"));
    }
    Ok(())
}

fn check_index(index: usize, k: usize) -> Result<()> {
    if index >= k {
        return Err(Error::ArmOutOfRange { index, k });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct Block {
    sum_wx: f64,
    sum_w: f64,
    len: usize,
}

impl Block {
    fn value(&self) -> f64 {
        self.sum_wx / self.sum_w
    }

    fn absorb(&mut self, other: Block) {
        self.sum_wx += other.sum_wx;
        self.sum_w += other.sum_w;
        self.len += other.len;
    }
}

/// Pool-adjacent-violators over `idx` taken in order; blocks come out with strictly
/// increasing values.
fn pava_blocks(x: &[f64], w: &[f64], idx: impl Iterator<Item = usize>) -> Vec<Block> {
    let mut stack: Vec<Block> = Vec::with_capacity(idx.size_hint().0);
    for a in idx {
        let mut b = Block { sum_wx: w[a] * x[a], sum_w: w[a], len: 1 };
        while let Some(top) = stack.last() {
            if top.value() < b.value() {
                break;
            }
            let top = stack.pop().unwrap();
            b.absorb(top);
        }
        stack.push(b);
    }
    stack
}

fn expand(blocks: &[Block], out: &mut Vec<f64>) {
    for b in blocks {
        let v = b.value();
        out.extend(std::iter::repeat_n(v, b.len));
    }
}

pub(crate) fn increasing_values(x: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    expand(&pava_blocks(x, w, 0..x.len()), &mut out);
    out
}

pub(crate) fn unimodal_values(x: &[f64], w: &[f64], mode: usize) -> Vec<f64> {
    let k = x.len();
    let mut left = pava_blocks(x, w, 0..mode);
    let mut right = pava_blocks(x, w, (mode + 1..k).rev());

    // Given the apex value, each side is its own isotonic fit clipped at the apex, so
    // the apex is the pooled mean of the mode and of every side block above it.
    let mut apex = Block { sum_wx: w[mode] * x[mode], sum_w: w[mode], len: 1 };
    loop {
        let lv = left.last().map_or(f64::NEG_INFINITY, Block::value);
        let rv = right.last().map_or(f64::NEG_INFINITY, Block::value);
        let (side, v) = if lv >= rv { (&mut left, lv) } else { (&mut right, rv) };
        if v <= apex.value() {
            break;
        }
        let top = side.pop().unwrap();
        apex.absorb(top);
    }
    let theta = apex.value();

    let mut out = Vec::with_capacity(k);
    expand(&left, &mut out);
    out.resize(k, theta);
    // right blocks were built from the last arm inward
    let mut pos = k;
    for b in &right {
        let v = b.value();
        out[pos - b.len..pos].fill(v);
        pos -= b.len;
    }
    out
}

pub(crate) fn unimodal_bounded_values(x: &[f64], w: &[f64], mode: usize, bound: f64) -> Vec<f64> {
    let mut v = unimodal_values(x, w, mode);
    v.iter_mut().for_each(|l| *l = l.min(bound));
    v
}

pub(crate) fn bounded_split_values(x: &[f64], w: &[f64], left_len: usize, bound: f64) -> Vec<f64> {
    let mut v = increasing_values(&x[..left_len], &w[..left_len]);
    v.iter_mut().for_each(|l| *l = l.min(bound));
    let mut r = increasing_values(&x[left_len..], &w[left_len..]);
    r.iter_mut().for_each(|l| *l = l.max(bound));
    v.extend(r);
    v
}

/// Isotonic (nondecreasing) regression by pool-adjacent-violators.
pub fn isotonic_increasing(x: &[f64], w: &[f64]) -> Result<OrderedFit> {
    validate(x, w)?;
    Ok(OrderedFit::new(x, w, increasing_values(x, w)))
}

/// Antitonic (nonincreasing) regression, by reversal of the increasing fit.
pub fn isotonic_decreasing(x: &[f64], w: &[f64]) -> Result<OrderedFit> {
    validate(x, w)?;
    let xr: Vec<f64> = x.iter().rev().copied().collect();
    let wr: Vec<f64> = w.iter().rev().copied().collect();
    let mut v = increasing_values(&xr, &wr);
    v.reverse();
    Ok(OrderedFit::new(x, w, v))
}

/// Regression onto sequences nondecreasing up to `mode` and nonincreasing after it.
pub fn unimodal_fixed_mode(x: &[f64], w: &[f64], mode: usize) -> Result<OrderedFit> {
    validate(x, w)?;
    check_index(mode, x.len())?;
    Ok(OrderedFit::new(x, w, unimodal_values(x, w, mode)))
}

/// Unimodal regression with the apex value capped at `bound`: the unbounded fit clipped
/// elementwise at `bound` is optimal.
pub fn unimodal_bounded(x: &[f64], w: &[f64], mode: usize, bound: f64) -> Result<OrderedFit> {
    validate(x, w)?;
    check_index(mode, x.len())?;
    if !bound.is_finite() {
        return Err(Error::domain("bound must be finite"));
    }
    Ok(OrderedFit::new(x, w, unimodal_bounded_values(x, w, mode, bound)))
}

/// Nondecreasing regression with the first `left_len` values at most `bound` and the
/// remaining ones at least `bound`.
///
/// `left_len` ranges over `0..=K`; the two extremes put every arm on one side.
pub fn isotonic_bounded_split(x: &[f64], w: &[f64], left_len: usize, bound: f64) -> Result<OrderedFit> {
    validate(x, w)?;
    if left_len > x.len() {
        return Err(Error::ArmOutOfRange { index: left_len, k: x.len() });
    }
    if !bound.is_finite() {
        return Err(Error::domain("bound must be finite"));
    }
    Ok(OrderedFit::new(x, w, bounded_split_values(x, w, left_len, bound)))
}
