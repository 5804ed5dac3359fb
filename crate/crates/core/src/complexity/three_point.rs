//! Increasing-case complexity through the three arms around the optimal one.
//!
//! The two candidate alternatives either push the optimal arm to `theta <= S` with its
//! upper neighbour mirrored at `2S - theta`, or push it to `theta >= S` with its lower
//! neighbour mirrored. Weights `w3` are `[w_below, w_star, w_above]`.

use super::ascent::golden_max;
use crate::error::{Error, Result};
use crate::model::{optimal_arm, BanditInstance, Setting};

const GOLDEN_ITERS: usize = 90;

struct Neighbourhood {
    below: Option<f64>,
    star: f64,
    above: Option<f64>,
    s: f64,
}

impl Neighbourhood {
    fn of(instance: &BanditInstance) -> Result<Self> {
        if instance.setting() != Setting::Increasing {
            return Err(Error::domain("three-point form applies to the increasing setting"));
        }
        let star = optimal_arm(instance)?;
        if !star.is_unique() {
            return Err(Error::domain("optimal arm is tied"));
        }
        let (mu, a) = (instance.mu(), star.index);
        Ok(Self {
            below: a.checked_sub(1).map(|b| mu[b]),
            star: mu[a],
            above: mu.get(a + 1).copied(),
            s: instance.threshold(),
        })
    }

    fn d_plus(&self, theta: f64, w3: [f64; 3]) -> f64 {
        let Some(above) = self.above else {
            return f64::INFINITY;
        };
        let below = self.below.map_or(0.0, |m| w3[0] * (m - m.min(theta)).powi(2) / 2.0);
        below + w3[1] * (self.star - theta).powi(2) / 2.0 + w3[2] * (above - (2.0 * self.s - theta)).powi(2) / 2.0
    }

    fn d_minus(&self, theta: f64, w3: [f64; 3]) -> f64 {
        let Some(below) = self.below else {
            return f64::INFINITY;
        };
        let above = self.above.map_or(0.0, |m| w3[2] * (m - m.max(theta)).powi(2) / 2.0);
        w3[0] * (below - (2.0 * self.s - theta)).powi(2) / 2.0 + w3[1] * (self.star - theta).powi(2) / 2.0 + above
    }

    fn min_over_theta(&self, w3: [f64; 3]) -> f64 {
        let s = self.s;
        // both costs are convex in theta
        let plus = self.above.map_or(f64::INFINITY, |m| {
            -golden_max(|t| -self.d_plus(t, w3), 2.0 * s - m, s, GOLDEN_ITERS).1
        });
        let minus = self.below.map_or(f64::INFINITY, |m| {
            -golden_max(|t| -self.d_minus(t, w3), s, 2.0 * s - m, GOLDEN_ITERS).1
        });
        plus.min(minus)
    }
}

fn check_w3(w3: [f64; 3]) -> Result<()> {
    if w3.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain("three-point weights must be nonnegative"));
    }
    Ok(())
}

/// Cost of the alternative that keeps the optimal arm at `theta` below the threshold and
/// mirrors its upper neighbour; infinite when the optimal arm is the last one.
pub fn d_plus(instance: &BanditInstance, theta: f64, w3: [f64; 3]) -> Result<f64> {
    check_w3(w3)?;
    Ok(Neighbourhood::of(instance)?.d_plus(theta, w3))
}

/// Mirror image of [`d_plus`] through the lower neighbour; infinite when the optimal
/// arm is the first one.
pub fn d_minus(instance: &BanditInstance, theta: f64, w3: [f64; 3]) -> Result<f64> {
    check_w3(w3)?;
    Ok(Neighbourhood::of(instance)?.d_minus(theta, w3))
}

/// Characteristic time of an increasing instance from the three-point formulation,
/// by nested golden-section search (the objective is concave in the weights and each
/// cost is convex in `theta`).
pub fn three_point_characteristic_time(instance: &BanditInstance) -> Result<f64> {
    let hood = Neighbourhood::of(instance)?;
    let inner = |w_star: f64| {
        golden_max(
            |u| hood.min_over_theta([(1.0 - w_star) * u, w_star, (1.0 - w_star) * (1.0 - u)]),
            0.0,
            1.0,
            GOLDEN_ITERS,
        )
        .1
    };
    let (_, best) = golden_max(inner, 0.0, 1.0, GOLDEN_ITERS);
    Ok(if best > 0.0 { 1.0 / best } else { f64::INFINITY })
}
