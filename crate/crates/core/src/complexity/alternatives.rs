//! Closest alternative models and their transportation costs.
//!
//! Weight vectors here may be simplex points or raw pull counts; only nonnegativity is
//! assumed. Regressions run on weights floored at [`WEIGHT_FLOOR`], costs are always
//! reported against the weights given.

use serde::Serialize;

use super::ascent::{Cut, Evaluation};
use crate::error::{Error, Result};
use crate::isotonic::{bounded_split_values, unimodal_bounded_values, weighted_cost};
use crate::model::{closest_arm, BanditInstance, OptimalArm, Setting};

pub const WEIGHT_FLOOR: f64 = 1e-12;

/// An alternative model whose closest arm is `target_arm`, with its weighted cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub lambda: Vec<f64>,
    pub cost: f64,
    pub target_arm: usize,
}

impl Projection {
    /// `[(mu_a - lambda_a)^2 / 2]_a`, the gradient of the cost in the weights.
    pub fn gradient(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter().zip(&self.lambda).map(|(m, l)| (m - l) * (m - l) / 2.0).collect()
    }
}

fn check_weights(model: &BanditInstance, w: &[f64]) -> Result<()> {
    if w.len() != model.k() {
        return Err(Error::domain(format!("expected {} weights, got {}", model.k(), w.len())));
    }
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain("weights must be finite and nonnegative"));
    }
    Ok(())
}

fn check_arm(model: &BanditInstance, b: usize) -> Result<()> {
    if b >= model.k() {
        return Err(Error::ArmOutOfRange { index: b, k: model.k() });
    }
    Ok(())
}

fn floored(w: &[f64]) -> Vec<f64> {
    w.iter().map(|x| x.max(WEIGHT_FLOOR)).collect()
}

fn unique_star(model: &BanditInstance) -> Option<usize> {
    closest_arm(model.mu(), model.threshold(), model.setting())
        .filter(OptimalArm::is_unique)
        .map(|o| o.index)
}

/// Cheapest way to make challenger `b` at least as close to the threshold as `star`,
/// moving only those two arms: either both meet at their weighted mean, or they meet
/// at mirrored positions around the threshold.
pub(crate) fn nonmonotonic_projection(mu: &[f64], s: f64, w: &[f64], star: usize, b: usize) -> Projection {
    let (ma, mb) = (mu[star], mu[b]);
    let (wa, wb) = (w[star].max(WEIGHT_FLOOR), w[b].max(WEIGHT_FLOOR));
    let mut lambda = mu.to_vec();
    if (ma - mb).powi(2) <= (2.0 * s - ma - mb).powi(2) {
        let m = (wa * ma + wb * mb) / (wa + wb);
        lambda[star] = m;
        lambda[b] = m;
    } else {
        let m = (wa * ma + wb * (2.0 * s - mb)) / (wa + wb);
        lambda[star] = m;
        lambda[b] = 2.0 * s - m;
    }
    let cost = weighted_cost(mu, w, &lambda);
    Projection { lambda, cost, target_arm: b }
}

/// Projection onto increasing models whose closest arm is `b` (closure).
pub(crate) fn increasing_projection(mu: &[f64], s: f64, w: &[f64], b: usize) -> Projection {
    increasing_projection_floored(mu, s, w, &floored(w), b)
}

fn increasing_projection_floored(mu: &[f64], s: f64, w: &[f64], wf: &[f64], b: usize) -> Projection {
    // Reflect one side through S so that the target arm becomes the apex of a
    // unimodal sequence bounded by S; the reflected side is the one not containing
    // the target when it lies below S, and includes it otherwise.
    let first_reflected = if mu[b] <= s { b + 1 } else { b };
    let reflect = |a: usize, v: f64| if a >= first_reflected { 2.0 * s - v } else { v };
    let x: Vec<f64> = mu.iter().enumerate().map(|(a, &m)| reflect(a, m)).collect();
    let mut lambda = unimodal_bounded_values(&x, wf, b, s);
    lambda.iter_mut().enumerate().for_each(|(a, v)| *v = reflect(a, *v));
    let cost = weighted_cost(mu, w, &lambda);
    Projection { lambda, cost, target_arm: b }
}

/// Projection onto increasing models whose closest arm at or below `s` is `target`.
pub(crate) fn below_projection(mu: &[f64], s: f64, w: &[f64], target: usize) -> Projection {
    below_projection_floored(mu, s, w, &floored(w), target)
}

fn below_projection_floored(mu: &[f64], s: f64, w: &[f64], wf: &[f64], target: usize) -> Projection {
    let lambda = bounded_split_values(mu, wf, target + 1, s);
    let cost = weighted_cost(mu, w, &lambda);
    Projection { lambda, cost, target_arm: target }
}

/// Minimal cost of an alternative whose closest arm is exactly `b`, for unstructured
/// means: `b` moves to distance `r` from the threshold and every arm closer than `r`
/// is pushed out to `r`.
pub(crate) fn nonmonotonic_restricted_cost(mu: &[f64], s: f64, w: &[f64], b: usize) -> f64 {
    let d: Vec<f64> = mu.iter().map(|m| (m - s).abs()).collect();
    let mut others: Vec<usize> = (0..mu.len()).filter(|&c| c != b && d[c] < d[b]).collect();
    others.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let (mut sw, mut swd) = (w[b], w[b] * d[b]);
    for &c in &others {
        if sw > 0.0 && d[c] >= swd / sw {
            break;
        }
        sw += w[c];
        swd += w[c] * d[c];
    }
    let r = if sw > 0.0 { swd / sw } else { d[b] };
    let mut cost = w[b] * (d[b] - r).powi(2);
    for &c in &others {
        cost += w[c] * (r - d[c]).max(0.0).powi(2);
    }
    cost / 2.0
}

fn projection_for(model: &BanditInstance, star: usize, w: &[f64], wf: &[f64], target: usize) -> Projection {
    let (mu, s) = (model.mu(), model.threshold());
    match model.setting() {
        Setting::NonMonotonic => nonmonotonic_projection(mu, s, w, star, target),
        Setting::Increasing => increasing_projection_floored(mu, s, w, wf, target),
        Setting::BelowThreshold => below_projection_floored(mu, s, w, wf, target),
    }
}

/// Closest alternative in which `target` becomes the answer, under the model's setting.
///
/// For the unstructured setting this is the two-arm move against the current optimal
/// arm, which other arms may still beat.
pub fn project_alternative(model: &BanditInstance, w: &[f64], target: usize) -> Result<Projection> {
    check_weights(model, w)?;
    check_arm(model, target)?;
    let star = closest_arm(model.mu(), model.threshold(), model.setting())
        .ok_or_else(|| Error::domain("no arm has a mean at or below the threshold"))?;
    if target == star.index {
        return Ok(Projection { lambda: model.mu().to_vec(), cost: 0.0, target_arm: target });
    }
    Ok(projection_for(model, star.index, w, &floored(w), target))
}

/// Projection onto the closure of the increasing models with closest arm `b`.
pub fn project_alternative_increasing(model: &BanditInstance, w: &[f64], b: usize) -> Result<Projection> {
    check_weights(model, w)?;
    check_arm(model, b)?;
    Ok(increasing_projection(model.mu(), model.threshold(), w, b))
}

/// Cost of the cheapest alternative whose answer is exactly `target`.
pub fn restricted_cost(model: &BanditInstance, w: &[f64], target: usize) -> Result<f64> {
    check_weights(model, w)?;
    check_arm(model, target)?;
    let (mu, s) = (model.mu(), model.threshold());
    Ok(match model.setting() {
        Setting::NonMonotonic => nonmonotonic_restricted_cost(mu, s, w, target),
        Setting::Increasing => increasing_projection(mu, s, w, target).cost,
        Setting::BelowThreshold => below_projection(mu, s, w, target).cost,
    })
}

/// Projections for every challenger of `star`.
pub(crate) fn challenger_projections(model: &BanditInstance, star: usize, w: &[f64]) -> Vec<Projection> {
    let wf = floored(w);
    (0..model.k()).filter(|&b| b != star).map(|b| projection_for(model, star, w, &wf, b)).collect()
}

/// The two side pieces `min over b < star` and `min over b > star`, each with the
/// gradient of its minimizing projection.
pub(crate) fn side_evaluation(model: &BanditInstance, star: usize, w: &[f64]) -> Evaluation {
    let mu = model.mu();
    let mut left: Option<Cut> = None;
    let mut right: Option<Cut> = None;
    for p in challenger_projections(model, star, w) {
        let side = if p.target_arm < star { &mut left } else { &mut right };
        let cut = Cut { value: p.cost, grad: p.gradient(mu) };
        let replace = match side.as_ref() {
            None => true,
            Some(q) => {
                let tie = 1e-12 * q.value.abs().max(f64::MIN_POSITIVE);
                // zero weights make several challengers pool to the same value; keep the
                // one that grows least as weight moves toward the uniform vector
                cut.value < q.value - tie
                    || (cut.value <= q.value + tie && cut.grad.iter().sum::<f64>() < q.grad.iter().sum::<f64>())
            }
        };
        if replace {
            *side = Some(cut);
        }
    }
    let cuts = [left, right].into_iter().flatten().collect();
    Evaluation { cuts }
}

/// Non-monotonic transportation value and its minimizing challenger; `(0, None)` when
/// the optimal arm is tied.
pub fn alt_cost_nonmonotonic(model: &BanditInstance, w: &[f64]) -> Result<(f64, Option<usize>)> {
    check_weights(model, w)?;
    let Some(star) = closest_arm(model.mu(), model.threshold(), Setting::NonMonotonic)
        .filter(OptimalArm::is_unique)
        .map(|o| o.index)
    else {
        return Ok((0.0, None));
    };
    let (mu, s) = (model.mu(), model.threshold());
    let mut best = (f64::INFINITY, None);
    for b in (0..model.k()).filter(|&b| b != star) {
        let c = (mu[star] - mu[b]).powi(2).min((2.0 * s - mu[star] - mu[b]).powi(2));
        let denom = w[star] + w[b];
        let v = if denom > 0.0 { w[star] * w[b] / (2.0 * denom) * c } else { 0.0 };
        if v < best.0 {
            best = (v, Some(b));
        }
    }
    Ok(best)
}

/// Value, near-minimizing challengers and a supergradient of the increasing-case
/// transportation function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FValue {
    pub value: f64,
    pub best_arms: Vec<usize>,
    pub subgradient: Vec<f64>,
}

pub const BEST_ARM_TOLERANCE: f64 = 1e-9;

pub fn f_increasing(model: &BanditInstance, w: &[f64]) -> Result<FValue> {
    check_weights(model, w)?;
    let model = if model.setting() == Setting::Increasing {
        model.clone()
    } else {
        BanditInstance::empirical(model.mu().to_vec(), model.threshold(), Setting::Increasing)?
    };
    let Some(star) = unique_star(&model) else {
        return Ok(FValue { value: 0.0, best_arms: Vec::new(), subgradient: vec![0.0; model.k()] });
    };
    let projections = challenger_projections(&model, star, w);
    let value = projections.iter().map(|p| p.cost).fold(f64::INFINITY, f64::min);
    let best: Vec<&Projection> =
        projections.iter().filter(|p| p.cost <= value + BEST_ARM_TOLERANCE).collect();
    Ok(FValue {
        value,
        best_arms: best.iter().map(|p| p.target_arm).collect(),
        subgradient: best[0].gradient(model.mu()),
    })
}

/// Infimum of the weighted cost over all alternatives of `model`; zero when its optimal
/// arm is tied (or, below threshold, when no arm qualifies).
pub fn alternative_infimum(model: &BanditInstance, w: &[f64]) -> Result<f64> {
    check_weights(model, w)?;
    let Some(star) = unique_star(model) else {
        return Ok(0.0);
    };
    Ok(match model.setting() {
        Setting::NonMonotonic => alt_cost_nonmonotonic(model, w)?.0,
        _ => challenger_projections(model, star, w)
            .iter()
            .map(|p| p.cost)
            .fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(mu: &[f64], s: f64, setting: Setting) -> BanditInstance {
        BanditInstance::new(mu.to_vec(), s, setting).unwrap()
    }

    #[test]
    fn lemma_costs_two_arms() {
        let m = inst(&[2.0, 4.0], 2.5, Setting::NonMonotonic);
        let (v, b) = alt_cost_nonmonotonic(&m, &[0.5, 0.5]).unwrap();
        assert!((v - 0.125).abs() < 1e-15 && b == Some(1));
        let m = inst(&[2.0, 4.0], 5.0, Setting::NonMonotonic);
        let (v, b) = alt_cost_nonmonotonic(&m, &[0.5, 0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-15 && b == Some(0));
        assert_eq!(alt_cost_nonmonotonic(&m, &[1.0, 0.0]).unwrap().0, 0.0);
    }

    #[test]
    fn lemma_projection_matches_value() {
        let m = inst(&[0.5, 1.1, 1.2, 1.3, 1.4, 5.0], 1.0, Setting::NonMonotonic);
        let w = [0.1, 0.3, 0.2, 0.1, 0.2, 0.1];
        let (v, b) = alt_cost_nonmonotonic(&m, &w).unwrap();
        let p = nonmonotonic_projection(m.mu(), 1.0, &w, 1, b.unwrap());
        assert!((p.cost - v).abs() < 1e-14);
        let l = &p.lambda;
        assert!(((l[1] - 1.0).abs() - (l[b.unwrap()] - 1.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn increasing_two_arm_projection() {
        let m = inst(&[2.0, 4.0], 2.5, Setting::Increasing);
        let p = project_alternative_increasing(&m, &[0.5, 0.5], 1).unwrap();
        assert!((p.lambda[0] - 1.5).abs() < 1e-12 && (p.lambda[1] - 3.5).abs() < 1e-12);
        assert!((p.cost - 0.125).abs() < 1e-12);
        let p = project_alternative_increasing(&m, &[0.5, 0.5], 0).unwrap();
        assert_eq!(p.cost, 0.0);
        assert_eq!(p.lambda, vec![2.0, 4.0]);
    }

    #[test]
    fn f_increasing_examples() {
        let m = inst(&[2.0, 4.0], 2.5, Setting::Increasing);
        assert!((f_increasing(&m, &[0.5, 0.5]).unwrap().value - 0.125).abs() < 1e-12);
        let m = inst(&[1.0, 2.0, 2.5], 1.55, Setting::Increasing);
        let f = f_increasing(&m, &[0.0, 1.0, 0.0]).unwrap();
        assert!(f.value.abs() < 1e-9);
    }

    #[test]
    fn restricted_cost_nonmonotonic_pushes_closer_arms_out() {
        // distances 0.1, 0.2, 0.5; making the third arm the closest
        let mu = [1.1, 0.8, 1.5];
        let c = nonmonotonic_restricted_cost(&mu, 1.0, &[1.0, 1.0, 1.0], 2);
        // r pools all three distances: (0.1 + 0.2 + 0.5) / 3
        let r: f64 = 0.8 / 3.0;
        let expect = ((0.5 - r).powi(2) + (r - 0.1).powi(2) + (r - 0.2).powi(2)) / 2.0;
        assert!((c - expect).abs() < 1e-15, "{c} vs {expect}");
        assert_eq!(nonmonotonic_restricted_cost(&mu, 1.0, &[1.0; 3], 0), 0.0);
    }

    #[test]
    fn ties_give_zero_infimum() {
        let m = BanditInstance::empirical(vec![1.0, 3.0, 5.0], 2.0, Setting::Increasing).unwrap();
        assert_eq!(alternative_infimum(&m, &[10.0, 10.0, 10.0]).unwrap(), 0.0);
        let f = f_increasing(&m, &[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(f.value, 0.0);
        assert!(f.subgradient.iter().all(|g| *g == 0.0));
    }
}
