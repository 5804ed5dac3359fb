//! Sequential identification: Direct-Tracking, Best Challenger, Racing and APT sampling
//! rules, all stopped by the generalized likelihood ratio test.

use serde::{Deserialize, Serialize};

use crate::complexity::{alternative_infimum, restricted_cost, solve_complexity_with, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{BanditInstance, GaussianEnv, Setting};

/// Pull counts and reward sums of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunState {
    counts: Vec<u64>,
    sums: Vec<f64>,
    t: u64,
    active: Vec<usize>,
}

impl RunState {
    pub fn new(k: usize) -> Self {
        Self { counts: vec![0; k], sums: vec![0.0; k], t: 0, active: (0..k).collect() }
    }

    /// State with given counts and sums, mostly for evaluating rules on fixed data.
    pub fn from_parts(counts: Vec<u64>, sums: Vec<f64>) -> Result<Self> {
        if counts.len() != sums.len() || counts.is_empty() {
            return Err(Error::domain("counts and sums must be nonempty and of equal length"));
        }
        let t = counts.iter().sum();
        let k = counts.len();
        Ok(Self { counts, sums, t, active: (0..k).collect() })
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.t += 1;
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Arms still in the race.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    /// Empirical means, once every arm has been pulled.
    pub fn means(&self) -> Option<Vec<f64>> {
        (0..self.k()).map(|a| self.mean(a)).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&n| n as f64).collect()
    }

    fn empirical_model(&self, threshold: f64, setting: Setting) -> Result<BanditInstance> {
        let mu = self.means().ok_or_else(|| Error::domain("every arm needs at least one pull"))?;
        BanditInstance::empirical(mu, threshold, setting)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaKind {
    Theoretical,
    #[default]
    Practical,
}

impl std::str::FromStr for BetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theoretical" => Ok(Self::Theoretical),
            "practical" => Ok(Self::Practical),
            _ => Err(Error::Config(format!("unknown beta kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingConfig {
    delta: f64,
    beta_kind: BetaKind,
    setting: Setting,
}

impl StoppingConfig {
    pub fn new(delta: f64, beta_kind: BetaKind, setting: Setting) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { delta, beta_kind, setting })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta_kind(&self) -> BetaKind {
        self.beta_kind
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }
}

/// `h(t) = (sqrt(t) - K/2)_+`.
fn exploration_floor(t: u64, k: usize) -> f64 {
    ((t as f64).sqrt() - k as f64 / 2.0).max(0.0)
}

/// Arms pulled fewer than `(sqrt(t) - K/2)_+` times.
pub fn forced_exploration_set(state: &RunState) -> Vec<usize> {
    let h = exploration_floor(state.t, state.k());
    (0..state.k()).filter(|&a| (state.counts[a] as f64) < h).collect()
}

fn argmin_by(arms: impl IntoIterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for a in arms {
        let v = key(a);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((a, v));
        }
    }
    best.map(|(a, _)| a)
}

/// Direct-Tracking arm: the least pulled under-sampled arm if any, otherwise
/// `argmax t w_a - N_a` with `w` from `weights` (only called in the second case).
pub fn dt_sample(state: &RunState, weights: impl FnOnce(&RunState) -> Vec<f64>) -> usize {
    let forced = forced_exploration_set(state);
    if let Some(a) = argmin_by(forced, |a| state.counts[a] as f64) {
        return a;
    }
    let w = weights(state);
    let t = state.t as f64;
    argmin_by(0..state.k(), |a| -(t * w[a] - state.counts[a] as f64)).unwrap_or(0)
}

/// Optimal weights of the empirical model, with the tie convention.
pub fn empirical_weights(state: &RunState, threshold: f64, setting: Setting, opts: &SolverOptions) -> Result<Vec<f64>> {
    let model = state.empirical_model(threshold, setting)?;
    Ok(solve_complexity_with(&model, opts).weights.into_vec())
}

/// `inf over alternatives of sum_a N_a (mu_hat_a - lambda_a)^2 / 2`; zero on ties.
pub fn glr_statistic(state: &RunState, threshold: f64, setting: Setting) -> Result<f64> {
    let model = state.empirical_model(threshold, setting)?;
    alternative_infimum(&model, &state.weights())
}

const LOG3: f64 = 1.098_612_288_668_109_8;

/// `C = e^{K+1} (2/K)^K (2(3K+2))^{3K} 4 / ln 3`, in log form.
fn log_theoretical_constant(k: usize) -> f64 {
    let kf = k as f64;
    (kf + 1.0) + kf * (2.0 / kf).ln() + 3.0 * kf * (2.0 * (3.0 * kf + 2.0)).ln() + 4.0f64.ln() - LOG3.ln()
}

/// Exploration threshold `beta(t, delta)`.
pub fn beta_threshold(t: u64, cfg: &StoppingConfig, k: usize) -> f64 {
    let t = t.max(1) as f64;
    match cfg.beta_kind {
        BetaKind::Practical => ((t.ln() + 1.0) / cfg.delta).ln(),
        BetaKind::Theoretical => {
            let log_x = t.ln() + log_theoretical_constant(k) - cfg.delta.ln();
            assert!(log_x > 1.0, "tC/delta must exceed e");
            log_x + (3.0 * k as f64 + 2.0) * log_x.ln()
        }
    }
}

pub fn theoretical_constant(k: usize) -> f64 {
    log_theoretical_constant(k).exp()
}

/// GLR test after the latest pull; false until every arm has been pulled.
pub fn should_stop(state: &RunState, threshold: f64, cfg: &StoppingConfig) -> Result<bool> {
    if state.counts.contains(&0) {
        return Ok(false);
    }
    let glr = glr_statistic(state, threshold, cfg.setting)?;
    Ok(glr > beta_threshold(state.t, cfg, state.k()))
}

/// Closest empirical mean to the threshold, smallest index on ties. Below the
/// threshold, only arms with `mu_hat <= S` qualify; with none, the smallest mean wins.
fn closest_among(mu: &[f64], threshold: f64, setting: Setting, arms: &[usize]) -> usize {
    let below = setting == Setting::BelowThreshold;
    let eligible: Vec<usize> = arms.iter().copied().filter(|&a| !below || mu[a] <= threshold).collect();
    if eligible.is_empty() {
        return argmin_by(arms.iter().copied(), |a| mu[a]).unwrap_or(0);
    }
    argmin_by(eligible, |a| (mu[a] - threshold).abs()).unwrap_or(0)
}

/// Decision rule on the current empirical means.
pub fn recommend(state: &RunState, threshold: f64, setting: Setting) -> Result<usize> {
    let mu = state.means().ok_or_else(|| Error::domain("every arm needs at least one pull"))?;
    let all: Vec<usize> = (0..state.k()).collect();
    Ok(closest_among(&mu, threshold, setting, &all))
}

/// Best Challenger: between the empirical answer and the arm that is cheapest to turn
/// into the answer, pull the less sampled one (the answer on ties).
pub fn bc_sample(state: &RunState, threshold: f64, setting: Setting) -> Result<usize> {
    let forced = forced_exploration_set(state);
    if let Some(a) = argmin_by(forced, |a| state.counts[a] as f64) {
        return Ok(a);
    }
    let model = state.empirical_model(threshold, setting)?;
    let best = recommend(state, threshold, setting)?;
    let w = state.weights();
    let mut challenger = None;
    for b in (0..state.k()).filter(|&b| b != best) {
        let c = restricted_cost(&model, &w, b)?;
        if challenger.is_none_or(|(_, v)| c < v) {
            challenger = Some((b, c));
        }
    }
    Ok(match challenger {
        Some((b, _)) if state.counts[b] < state.counts[best] => b,
        _ => best,
    })
}

/// Arms eliminated after a Racing round: every active arm except the empirical answer
/// whose restricted alternative cost exceeds `beta(t)`.
pub fn racing_eliminations(state: &RunState, threshold: f64, cfg: &StoppingConfig) -> Result<Vec<usize>> {
    let model = state.empirical_model(threshold, cfg.setting)?;
    let best = closest_among(model.mu(), threshold, cfg.setting, &state.active);
    let beta = beta_threshold(state.t, cfg, state.k());
    let w = state.weights();
    let mut out = Vec::new();
    for &b in state.active.iter().filter(|&&b| b != best) {
        if restricted_cost(&model, &w, b)? > beta {
            out.push(b);
        }
    }
    Ok(out)
}

/// Racing round boundary: drops the eliminated arms and returns the arms to pull in the
/// next round, all of them while some arm is still unpulled. One arm left ends the race.
pub fn racing_step(state: &mut RunState, threshold: f64, cfg: &StoppingConfig) -> Result<Vec<usize>> {
    if !state.counts.contains(&0) && state.active.len() > 1 {
        let gone = racing_eliminations(state, threshold, cfg)?;
        state.active.retain(|a| !gone.contains(a));
    }
    Ok(state.active.clone())
}

/// APT index rule `argmin sqrt(N_a) (|mu_hat_a - S| + epsilon)`.
pub fn apt_sample(state: &RunState, threshold: f64, epsilon: f64) -> Result<usize> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::domain(format!("APT epsilon must be nonnegative, got {epsilon}")));
    }
    let mu = state.means().ok_or_else(|| Error::domain("every arm needs at least one pull"))?;
    Ok(argmin_by(0..state.k(), |a| (state.counts[a] as f64).sqrt() * ((mu[a] - threshold).abs() + epsilon))
        .unwrap_or(0))
}

fn default_cadence() -> u64 {
    1
}

/// A sampling rule and its parameters, as named in experiment configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum Algorithm {
    /// Direct-Tracking; weights are recomputed every `cadence` tracking steps.
    #[serde(rename = "DT")]
    DirectTracking {
        #[serde(default = "default_cadence")]
        cadence: u64,
    },
    #[serde(rename = "BC")]
    BestChallenger,
    #[serde(rename = "Racing", alias = "R")]
    Racing,
    #[serde(rename = "APT")]
    Apt { epsilon: f64 },
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Self::DirectTracking { .. } => "DT",
            Self::BestChallenger => "BC",
            Self::Racing => "Racing",
            Self::Apt { .. } => "APT",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::DirectTracking { cadence: 0 } => Err(Error::Config("DT cadence must be at least 1".into())),
            Self::Apt { epsilon } if !(epsilon >= 0.0 && epsilon.is_finite()) => {
                Err(Error::Config(format!("APT epsilon must be finite and nonnegative, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }
}

/// Outcome of one run: stopping time and recommended arm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub tau: u64,
    pub recommended: usize,
}

/// Runs `algorithm` on replication `replication` of `env` until it stops.
///
/// Every arm is pulled once first. Direct-Tracking re-solves from its previous weights
/// with [`SolverOptions::tracking`]. Fails with [`Error::Budget`] after `max_pulls` pulls.
pub fn run_trial(
    env: &GaussianEnv,
    replication: u64,
    algorithm: &Algorithm,
    cfg: &StoppingConfig,
    max_pulls: u64,
) -> Result<TrialOutcome> {
    algorithm.validate()?;
    let k = env.instance().k();
    let s = env.instance().threshold();
    let setting = cfg.setting;
    let mut stream = env.stream(replication);
    let mut state = RunState::new(k);
    for a in 0..k {
        state.record(a, stream.pull(a));
    }

    if *algorithm == Algorithm::Racing {
        loop {
            let round = racing_step(&mut state, s, cfg)?;
            if let [last] = round[..] {
                return Ok(TrialOutcome { tau: state.t, recommended: last });
            }
            if state.t + round.len() as u64 > max_pulls {
                return Err(Error::Budget(state.t));
            }
            for a in round {
                state.record(a, stream.pull(a));
            }
        }
    }

    let mut solver = SolverOptions::tracking();
    let mut weights: Option<Vec<f64>> = None;
    let mut since_solve = 0u64;
    loop {
        if should_stop(&state, s, cfg)? {
            return Ok(TrialOutcome { tau: state.t, recommended: recommend(&state, s, setting)? });
        }
        if state.t >= max_pulls {
            return Err(Error::Budget(state.t));
        }
        let arm = match *algorithm {
            Algorithm::DirectTracking { cadence } => {
                let mut failure = None;
                let arm = dt_sample(&state, |st| {
                    if weights.is_none() || since_solve >= cadence {
                        solver.warm_start = weights.take();
                        match empirical_weights(st, s, setting, &solver) {
                            Ok(w) => weights = Some(w),
                            Err(e) => failure = Some(e),
                        }
                        since_solve = 0;
                    }
                    since_solve += 1;
                    weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k])
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                arm
            }
            Algorithm::BestChallenger => bc_sample(&state, s, setting)?,
            Algorithm::Apt { epsilon } => apt_sample(&state, s, epsilon)?,
            Algorithm::Racing => unreachable!("handled above"),
        };
        state.record(arm, stream.pull(arm));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(counts: &[u64], means: &[f64]) -> RunState {
        let sums = counts.iter().zip(means).map(|(&n, m)| n as f64 * m).collect();
        RunState::from_parts(counts.to_vec(), sums).unwrap()
    }

    fn practical(setting: Setting) -> StoppingConfig {
        StoppingConfig::new(0.1, BetaKind::Practical, setting).unwrap()
    }

    #[test]
    fn forced_exploration_examples() {
        assert!(forced_exploration_set(&state(&[1, 0, 0, 0], &[0.0; 4])).is_empty());
        assert_eq!(forced_exploration_set(&state(&[1, 5, 5, 5], &[0.0; 4])), vec![0]);
        assert!(forced_exploration_set(&RunState::new(4)).is_empty());
    }

    #[test]
    fn dt_examples() {
        assert_eq!(dt_sample(&RunState::new(3), |_| vec![1.0 / 3.0; 3]), 0);
        let st = state(&[30, 40, 30], &[0.0; 3]);
        assert_eq!(dt_sample(&st, |_| vec![0.2, 0.5, 0.3]), 1);
        // t = 36 with K = 4 gives h = 4; arm 2 is the only one under it
        let st = state(&[10, 10, 3, 13], &[0.0; 4]);
        assert_eq!(dt_sample(&st, |_| panic!("weights are not needed")), 2);
    }

    #[test]
    fn glr_examples() {
        let st = state(&[10, 10], &[2.0, 4.0]);
        let glr = glr_statistic(&st, 2.5, Setting::NonMonotonic).unwrap();
        assert!((glr - 2.5).abs() < 1e-12, "{glr}");
        let tied = state(&[10, 10], &[1.0, 3.0]);
        assert_eq!(glr_statistic(&tied, 2.0, Setting::Increasing).unwrap(), 0.0);
        assert!(glr_statistic(&state(&[0, 3], &[0.0, 1.0]), 2.0, Setting::Increasing).is_err());
    }

    #[test]
    fn glr_scales_with_counts() {
        let st = state(&[3, 5, 2], &[1.2, 1.9, 2.6]);
        let big = state(&[6, 10, 4], &[1.2, 1.9, 2.6]);
        for setting in [Setting::NonMonotonic, Setting::Increasing, Setting::BelowThreshold] {
            let a = glr_statistic(&st, 1.55, setting).unwrap();
            let b = glr_statistic(&big, 1.55, setting).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-12 * b, "{setting}: {a} {b}");
        }
    }

    #[test]
    fn beta_values() {
        let cfg = practical(Setting::Increasing);
        assert!((beta_threshold(1, &cfg, 2) - 10f64.ln()).abs() < 1e-12);
        let mut last = 0.0;
        for t in 1..1000 {
            let b = beta_threshold(t, &cfg, 3);
            assert!(b >= last);
            last = b;
        }
        let strict = StoppingConfig::new(0.01, BetaKind::Practical, Setting::Increasing).unwrap();
        assert!(beta_threshold(50, &strict, 3) > beta_threshold(50, &cfg, 3));
        // e^3 (2/2)^2 16^6 4 / ln 3
        let c2 = 3f64.exp() * 16f64.powi(6) * 4.0 / 3f64.ln();
        assert!((theoretical_constant(2) / c2 - 1.0).abs() < 1e-12);
        assert!((theoretical_constant(2) / 1.23e9 - 1.0).abs() < 0.01);
        let theo = StoppingConfig::new(0.1, BetaKind::Theoretical, Setting::Increasing).unwrap();
        let x = 1.0 * c2 / 0.1;
        assert!((beta_threshold(1, &theo, 2) - (x.ln() + 8.0 * x.ln().ln())).abs() < 1e-9);
    }

    #[test]
    fn stopping_and_decision() {
        let cfg = practical(Setting::NonMonotonic);
        // glr 2.5 at t = 20 against beta = ln((ln 20 + 1) / 0.1) ~ 3.67
        assert!(!should_stop(&state(&[10, 10], &[2.0, 4.0]), 2.5, &cfg).unwrap());
        assert!(should_stop(&state(&[40, 40], &[2.0, 4.0]), 2.5, &cfg).unwrap());
        assert!(!should_stop(&state(&[40, 0], &[2.0, 4.0]), 2.5, &cfg).unwrap());
        assert!(!should_stop(&state(&[400, 400], &[1.0, 3.0]), 2.0, &cfg).unwrap());
        assert_eq!(recommend(&state(&[1, 1], &[0.9, 1.3]), 1.0, Setting::Increasing).unwrap(), 0);
        assert_eq!(recommend(&state(&[1, 1, 1], &[1.0, 2.0, 2.5]), 1.55, Setting::BelowThreshold).unwrap(), 0);
        assert_eq!(recommend(&state(&[1, 1], &[2.0, 1.8]), 1.55, Setting::BelowThreshold).unwrap(), 1);
    }

    #[test]
    fn best_challenger_rule() {
        // answer arm 1 (mean 1.3), challenger arm 0
        let st = state(&[4, 10, 10], &[0.5, 1.3, 3.0]);
        assert_eq!(bc_sample(&st, 1.0, Setting::NonMonotonic).unwrap(), 0);
        let st = state(&[10, 4, 10], &[0.5, 1.3, 3.0]);
        assert_eq!(bc_sample(&st, 1.0, Setting::NonMonotonic).unwrap(), 1);
        let st = state(&[10, 10, 10], &[0.5, 1.3, 3.0]);
        assert_eq!(bc_sample(&st, 1.0, Setting::NonMonotonic).unwrap(), 1);
    }

    #[test]
    fn apt_rule() {
        assert_eq!(apt_sample(&state(&[3, 3], &[1.1, 1.5]), 1.0, 0.0).unwrap(), 0);
        assert_eq!(apt_sample(&state(&[4, 1], &[1.1, 0.9]), 1.0, 0.01).unwrap(), 1);
        assert_eq!(apt_sample(&state(&[4, 9, 2], &[1.0, 1.0, 5.0]), 1.0, 1e12).unwrap(), 2);
        assert!(apt_sample(&state(&[1, 1], &[0.0, 1.0]), 0.5, -0.1).is_err());
    }

    #[test]
    fn racing_keeps_the_answer() {
        // S = 1.55 sits near the midpoint of the first two arms, so arm 0 survives
        let st = state(&[200, 200, 200], &[1.0, 2.0, 2.5]);
        let out = racing_eliminations(&st, 1.55, &practical(Setting::Increasing)).unwrap();
        assert_eq!(out, vec![2]);
        let st = state(&[2000, 2000, 2000], &[1.0, 2.0, 2.5]);
        assert_eq!(racing_eliminations(&st, 1.55, &practical(Setting::Increasing)).unwrap(), vec![0, 2]);
    }

    #[test]
    fn racing_rounds() {
        let cfg = practical(Setting::Increasing);
        let mut fresh = RunState::new(3);
        assert_eq!(racing_step(&mut fresh, 1.55, &cfg).unwrap(), vec![0, 1, 2]);
        let mut st = state(&[200, 200, 200], &[1.0, 2.0, 2.5]);
        assert_eq!(racing_step(&mut st, 1.55, &cfg).unwrap(), vec![0, 1]);
        assert_eq!(st.active(), &[0, 1]);
        let mut st = state(&[2000, 2000, 2000], &[1.0, 2.0, 2.5]);
        assert_eq!(racing_step(&mut st, 1.55, &cfg).unwrap(), vec![1]);
    }

    #[test]
    fn algorithm_config_parsing() {
        let a: Algorithm = serde_json::from_str(r#"{"name":"APT","epsilon":0.01}"#).unwrap();
        assert_eq!(a, Algorithm::Apt { epsilon: 0.01 });
        let a: Algorithm = serde_json::from_str(r#"{"name":"DT"}"#).unwrap();
        assert_eq!(a, Algorithm::DirectTracking { cadence: 1 });
        let a: Algorithm = serde_json::from_str(r#"{"name":"R"}"#).unwrap();
        assert_eq!(a, Algorithm::Racing);
        assert!(serde_json::from_str::<Algorithm>(r#"{"name":"DT","cadense":2}"#).is_err());
        assert!(serde_json::from_str::<Algorithm>(r#"{"name":"APT"}"#).is_err());
        assert!(Algorithm::DirectTracking { cadence: 0 }.validate().is_err());
    }

    #[test]
    fn trials_are_reproducible() {
        let inst = BanditInstance::new(vec![1.0, 2.0, 2.5], 1.55, Setting::Increasing).unwrap();
        let env = GaussianEnv::new(inst, 7);
        let cfg = practical(Setting::Increasing);
        for alg in [
            Algorithm::DirectTracking { cadence: 1 },
            Algorithm::BestChallenger,
            Algorithm::Racing,
            Algorithm::Apt { epsilon: 0.05 },
        ] {
            let a = run_trial(&env, 3, &alg, &cfg, 1_000_000).unwrap();
            let b = run_trial(&env, 3, &alg, &cfg, 1_000_000).unwrap();
            assert_eq!(a, b);
            assert!(a.tau >= 3 && a.recommended < 3);
        }
        assert!(matches!(
            run_trial(&env, 3, &Algorithm::BestChallenger, &cfg, 10),
            Err(Error::Budget(10))
        ));
    }
}
