//! Closed forms and explicit bounds on the characteristic time.

use super::ascent::bisect;
use super::ComplexitySolution;
use crate::error::{Error, Result};
use crate::model::{optimal_arm, BanditInstance, Setting, Weights};

/// Inverse characteristic times `(T_I^-1, T_M^-1)` of a two-armed instance.
pub fn two_arm_closed_form(instance: &BanditInstance) -> Result<(f64, f64)> {
    let mu = instance.mu();
    if mu.len() != 2 {
        return Err(Error::domain(format!("two-arm closed form needs K = 2, got {}", mu.len())));
    }
    let s = instance.threshold();
    let mirror = (2.0 * s - mu[0] - mu[1]).powi(2);
    let same = (mu[0] - mu[1]).powi(2);
    Ok((mirror / 8.0, mirror.min(same) / 8.0))
}

fn require_unique(instance: &BanditInstance) -> Result<usize> {
    let star = optimal_arm(instance)?;
    if !star.is_unique() {
        return Err(Error::domain(format!("optimal arm is tied between {} arms", star.tie_count)));
    }
    Ok(star.index)
}

/// Exact complexity of the below-threshold problem: only the optimal arm and the first
/// arm above the threshold are sampled.
///
/// When the optimal arm is the first one, pushing it above the threshold leaves no arm
/// below it, which is not an alternative; the formula then undershoots `T*^-1`.
pub fn below_threshold_closed_form(instance: &BanditInstance) -> Result<ComplexitySolution> {
    if instance.setting() != Setting::BelowThreshold {
        return Err(Error::domain("closed form applies to the below-threshold setting"));
    }
    let star = require_unique(instance)?;
    let k = instance.k();
    if star + 1 >= k {
        return Err(Error::domain("every arm is below the threshold: there is no challenger above it"));
    }
    let (mu, s) = (instance.mu(), instance.threshold());
    let left = 2.0 / (s - mu[star]).powi(2);
    let right = 2.0 / (mu[star + 1] - s).powi(2);
    let inv = 1.0 / (left + right);
    let mut w = vec![0.0; k];
    w[star] = left * inv;
    w[star + 1] = right * inv;
    Ok(ComplexitySolution::from_parts(Weights::normalized(w)?, inv, 0, 0.0))
}

/// Gap-based bracket `(lower, upper)` of the increasing-case characteristic time, for an
/// optimal arm with neighbours on both sides.
pub fn characteristic_time_bounds(instance: &BanditInstance) -> Result<(f64, f64)> {
    if instance.setting() != Setting::Increasing {
        return Err(Error::domain("bounds apply to the increasing setting"));
    }
    let star = require_unique(instance)?;
    if star == 0 || star + 1 == instance.k() {
        return Err(Error::domain("bounds need an optimal arm with neighbours on both sides"));
    }
    let (mu, s) = (instance.mu(), instance.threshold());
    let gap_below = (2.0 * s - mu[star - 1] - mu[star]).powi(2) / 8.0;
    let gap_above = (2.0 * s - mu[star + 1] - mu[star]).powi(2) / 8.0;
    let gap0 = gap_below.min(gap_above);
    Ok((1.0 / gap0, 1.0 / gap_below + 1.0 / gap0 + 1.0 / gap_above))
}

/// Exact optimal weights for unstructured means.
///
/// At the optimum all challengers are equally costly. Writing `x_b = w_b / w_star`,
/// each challenger's cost equals `w_star * y` when `x_b = 2y / (c_b - 2y)`, and
/// optimality of the split forces `sum_b x_b^2 = 1`; `y` is found by bisection.
pub(crate) fn nonmonotonic_exact(mu: &[f64], s: f64, star: usize) -> ComplexitySolution {
    let c: Vec<f64> = (0..mu.len())
        .filter(|&b| b != star)
        .map(|b| (mu[star] - mu[b]).powi(2).min((2.0 * s - mu[star] - mu[b]).powi(2)))
        .collect();
    let cmin = c.iter().copied().fold(f64::INFINITY, f64::min);
    let ratios = |y: f64| c.iter().map(move |&cb| 2.0 * y / (cb - 2.0 * y));
    let residual = |y: f64| ratios(y).map(|x| x * x).sum::<f64>() - 1.0;
    let (y, iterations) = bisect(residual, 0.0, cmin / 2.0);
    let x: Vec<f64> = ratios(y).collect();
    let w_star = 1.0 / (1.0 + x.iter().sum::<f64>());
    let mut w = Vec::with_capacity(mu.len());
    let mut xi = x.iter();
    for b in 0..mu.len() {
        w.push(if b == star { w_star } else { xi.next().unwrap() * w_star });
    }
    let w = Weights::normalized(w).expect("positive weights");
    ComplexitySolution::from_parts(w, y * w_star, iterations, residual(y).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(mu: &[f64], s: f64, setting: Setting) -> BanditInstance {
        BanditInstance::new(mu.to_vec(), s, setting).unwrap()
    }

    #[test]
    fn two_arm_examples() {
        let f = |s| two_arm_closed_form(&inst(&[2.0, 4.0], s, Setting::Increasing)).unwrap();
        assert_eq!(f(2.5), (0.125, 0.125));
        assert_eq!(f(5.0), (2.0, 0.5));
        assert_eq!(f(3.0), (0.0, 0.0));
    }

    #[test]
    fn below_threshold_problem_two() {
        let sol = below_threshold_closed_form(&inst(&[1.0, 2.0, 2.5], 1.55, Setting::BelowThreshold)).unwrap();
        let direct = 1.0 / (2.0 / 0.55f64.powi(2) + 2.0 / 0.45f64.powi(2));
        assert!((sol.f_value - direct).abs() < 1e-15);
        assert!((sol.t_star - 16.49).abs() < 0.01, "{}", sol.t_star);
        let w = sol.weights.as_slice();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w[2] == 0.0);
    }

    #[test]
    fn below_threshold_symmetric_split() {
        let sol = below_threshold_closed_form(&inst(&[0.0, 1.0, 3.0], 2.0, Setting::BelowThreshold)).unwrap();
        assert_eq!(sol.weights.as_slice(), &[0.0, 0.5, 0.5]);
        let all_below = inst(&[0.0, 1.0], 2.0, Setting::BelowThreshold);
        assert!(below_threshold_closed_form(&all_below).is_err());
    }

    #[test]
    fn bounds_problem_two() {
        let (lo, hi) = characteristic_time_bounds(&inst(&[1.0, 2.0, 2.5], 1.55, Setting::Increasing)).unwrap();
        assert!((lo - 800.0).abs() < 1e-9);
        assert!((hi - (1600.0 + 1.0 / 0.245)).abs() < 1e-9);
        let edge = inst(&[1.0, 2.0, 2.5], 0.9, Setting::Increasing);
        assert!(characteristic_time_bounds(&edge).is_err());
    }

    #[test]
    fn bounds_symmetric_instance() {
        let (lo, hi) = characteristic_time_bounds(&inst(&[0.0, 1.1, 1.8], 1.0, Setting::Increasing)).unwrap();
        assert!((hi - 3.0 * lo).abs() < 1e-9 * hi);
    }

    #[test]
    fn exact_nonmonotonic_two_arms() {
        let sol = nonmonotonic_exact(&[2.0, 4.0], 5.0, 1);
        assert!((sol.f_value - 0.5).abs() < 1e-14);
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
    }
}
