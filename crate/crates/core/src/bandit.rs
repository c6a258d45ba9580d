//! Exponential-weights learner over a grid of exploration ratios.
//!
//! Each round the learner mixes its normalized weights with a uniform floor,
//! draws an arm, observes the week's precision, turns it into a reward
//! relative to a discounted running average, and updates the played arm's
//! weight through an importance-weighted estimate. A share of the total
//! weight is spread over all arms after every update, which keeps every arm
//! recoverable when the environment shifts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Ordered candidate exploration ratios, from 0 to 1 inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmGrid {
    ratios: Vec<f64>,
}

impl ArmGrid {
    /// `num_arms` evenly spaced ratios covering `[0, 1]`.
    pub fn uniform(num_arms: usize) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::config("num_arms", "must be at least 2"));
        }
        let last = (num_arms - 1) as f64;
        Ok(ArmGrid {
            ratios: (0..num_arms).map(|i| i as f64 / last).collect(),
        })
    }

    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.len() < 2 {
            return Err(Error::config("num_arms", "must be at least 2"));
        }
        if ratios[0] != 0.0 || *ratios.last().unwrap() != 1.0 {
            return Err(Error::config("num_arms", "grid must span 0 to 1"));
        }
        if ratios.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "num_arms",
                "grid must be strictly increasing",
            ));
        }
        Ok(ArmGrid { ratios })
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        Self::uniform(cfg.num_arms)
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn ratio(&self, arm: usize) -> f64 {
        self.ratios[arm]
    }

    /// Spacing between the first two arms.
    pub fn step(&self) -> f64 {
        self.ratios[1] - self.ratios[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditParams {
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Sign applied to the exponent of the weight update.
    pub reward_sign: f64,
    pub include_current_in_mean: bool,
}

impl Default for BanditParams {
    fn default() -> Self {
        BanditParams {
            eta: 3.0,
            epsilon: 0.1,
            alpha: 0.001,
            gamma: 0.9,
            reward_sign: 1.0,
            include_current_in_mean: true,
        }
    }
}

impl BanditParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        BanditParams {
            eta: cfg.eta,
            epsilon: cfg.epsilon,
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            reward_sign: cfg.reward_sign,
            include_current_in_mean: cfg.include_current_in_mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        // Zero alpha is allowed here (plain exponential weights); configs require alpha > 0.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be non-negative"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1]"));
        }
        if self.reward_sign != 1.0 && self.reward_sign != -1.0 {
            return Err(Error::config("reward_sign", "must be +1 or -1"));
        }
        Ok(())
    }
}

/// Learner state; serializable for replay and inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    pub weights: Vec<f64>,
    pub precision_history: Vec<f64>,
    pub last_probabilities: Vec<f64>,
    pub params: BanditParams,
}

impl BanditState {
    /// All weights start at 1.
    pub fn new(grid: &ArmGrid, params: BanditParams) -> Result<Self> {
        params.validate()?;
        let k = grid.len();
        let mut state = BanditState {
            weights: vec![1.0; k],
            precision_history: Vec::new(),
            last_probabilities: Vec::new(),
            params,
        };
        state.last_probabilities = selection_probabilities(&state);
        Ok(state)
    }

    pub fn num_arms(&self) -> usize {
        self.weights.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bandit state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Applies one weight update for `arm`, played with probability
    /// `played_probability`.
    ///
    /// The importance-weighted estimate `reward / played_probability` is
    /// credited to the played arm only; every arm then receives
    /// `e * alpha / k` of the previous total weight. Weights are renormalized
    /// to sum to `k` afterwards. The arithmetic runs in log space so large
    /// estimates cannot overflow.
    pub fn update(&mut self, arm: usize, reward: f64, played_probability: f64) -> Result<()> {
        let k = self.num_arms();
        if arm >= k {
            return Err(Error::ArmOutOfRange { arm, arms: k });
        }
        if !(played_probability > 0.0) {
            return Err(Error::UnplayableArm { arm });
        }
        let p = self.params;
        let total: f64 = self.weights.iter().sum();
        let estimate = reward / played_probability;
        let mut logs: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        logs[arm] += p.reward_sign * p.eta * estimate;
        if p.alpha > 0.0 {
            let share = (std::f64::consts::E * p.alpha / k as f64 * total).ln();
            for l in &mut logs {
                let (hi, lo) = if *l > share { (*l, share) } else { (share, *l) };
                *l = hi + (lo - hi).exp().ln_1p();
            }
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w = (*w * k as f64 / sum).max(f64::MIN_POSITIVE);
        }
        self.weights = weights;
        self.last_probabilities = selection_probabilities(self);
        Ok(())
    }

    /// Update using the unfiltered selection probability of `arm`.
    pub fn update_unfiltered(&mut self, arm: usize, reward: f64) -> Result<()> {
        let p = selection_probabilities(self);
        let prob = *p
            .get(arm)
            .ok_or(Error::ArmOutOfRange { arm, arms: p.len() })?;
        self.update(arm, reward, prob)
    }

    /// Records a week's precision and returns `(baseline, reward)`.
    pub fn record_precision(&mut self, precision: f64) -> Result<(f64, f64)> {
        let baseline = if self.params.include_current_in_mean {
            self.precision_history.push(precision);
            discounted_mean(&self.precision_history, self.params.gamma)?
        } else {
            let b = if self.precision_history.is_empty() {
                precision
            } else {
                discounted_mean(&self.precision_history, self.params.gamma)?
            };
            self.precision_history.push(precision);
            b
        };
        Ok((baseline, reward(precision, baseline)))
    }
}

/// `epsilon / k + (1 - epsilon) * w_i / sum(w)`.
pub fn selection_probabilities(state: &BanditState) -> Vec<f64> {
    let k = state.weights.len() as f64;
    let eps = state.params.epsilon;
    let total: f64 = state.weights.iter().sum();
    state
        .weights
        .iter()
        .map(|w| eps / k + (1.0 - eps) * w / total)
        .collect()
}

/// Samples an index by inverse CDF over the ordered probabilities.
pub fn draw_arm(p: &[f64], rng: &mut SimRng) -> Result<usize> {
    let total: f64 = p.iter().sum();
    if !(total > 0.0 && total.is_finite()) || p.iter().any(|x| *x < 0.0) {
        return Err(Error::DegenerateDistribution(total));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            last_positive = i;
            acc += x;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Discounted average of a history whose last entry is the current round:
/// `(x_t + g x_{t-1} + ... + g^{t-1} x_1) / (1 + g + ... + g^{t-1})`.
pub fn discounted_mean(history: &[f64], gamma: f64) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut w = 1.0;
    for x in history.iter().rev() {
        num += w * x;
        den += w;
        w *= gamma;
    }
    Ok(num / den)
}

/// `(pi_t - baseline) / pi_t`, clamped to `[-1, 1]`; a zero precision earns -1.
pub fn reward(pi_t: f64, baseline: f64) -> f64 {
    if pi_t <= 0.0 {
        return -1.0;
    }
    ((pi_t - baseline) / pi_t).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;
    use proptest::prelude::*;

    fn params(eps: f64, alpha: f64, eta: f64) -> BanditParams {
        BanditParams {
            eta,
            epsilon: eps,
            alpha,
            ..BanditParams::default()
        }
    }

    fn state_with(weights: Vec<f64>, p: BanditParams) -> BanditState {
        BanditState {
            last_probabilities: vec![],
            precision_history: vec![],
            weights,
            params: p,
        }
    }

    #[test]
    fn grid_has_21_arms() {
        let g = ArmGrid::uniform(21).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g.ratio(0), 0.0);
        assert_eq!(g.ratio(20), 1.0);
        assert_eq!(g.ratio(7), 0.35);
        assert!(ArmGrid::new(vec![0.0, 0.5, 0.4, 1.0]).is_err());
    }

    #[test]
    fn init_is_all_ones_and_uniform() {
        let s = BanditState::new(&ArmGrid::uniform(21).unwrap(), BanditParams::default()).unwrap();
        assert_eq!(s.weights, vec![1.0; 21]);
        assert!(s.precision_history.is_empty());
        for p in selection_probabilities(&s) {
            assert!((p - 1.0 / 21.0).abs() < 1e-15);
        }
    }

    #[test]
    fn init_rejects_bad_eta() {
        let g = ArmGrid::uniform(21).unwrap();
        assert!(BanditState::new(&g, params(0.1, 0.001, 0.0)).is_err());
        assert!(BanditState::new(&g, params(0.1, 0.001, -2.0)).is_err());
    }

    #[test]
    fn probability_examples() {
        let p = selection_probabilities(&state_with(vec![1.0, 3.0], params(0.0, 0.0, 1.0)));
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let p = selection_probabilities(&state_with(vec![1.0, 3.0], params(0.1, 0.0, 1.0)));
        assert!((p[0] - 0.275).abs() < 1e-15 && (p[1] - 0.725).abs() < 1e-15);
    }

    #[test]
    fn draw_point_mass() {
        let mut rng = make_rng(1, "draw");
        let mut p = vec![0.0; 21];
        p[0] = 1.0;
        for _ in 0..1000 {
            assert_eq!(draw_arm(&p, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn draw_uniform_frequencies() {
        let mut rng = make_rng(2, "draw");
        let p = vec![1.0 / 21.0; 21];
        let n = 100_000;
        let mut counts = [0usize; 21];
        for _ in 0..n {
            counts[draw_arm(&p, &mut rng).unwrap()] += 1;
        }
        let q = 1.0 / 21.0;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * q).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn draw_is_deterministic_and_rejects_zero_mass() {
        let p = vec![0.2, 0.3, 0.5];
        let a: Vec<usize> = {
            let mut r = make_rng(5, "d");
            (0..50).map(|_| draw_arm(&p, &mut r).unwrap()).collect()
        };
        let b: Vec<usize> = {
            let mut r = make_rng(5, "d");
            (0..50).map(|_| draw_arm(&p, &mut r).unwrap()).collect()
        };
        assert_eq!(a, b);
        assert!(draw_arm(&[0.0, 0.0], &mut make_rng(0, "d")).is_err());
    }

    #[test]
    fn discounted_mean_examples() {
        assert_eq!(discounted_mean(&[0.5], 0.9).unwrap(), 0.5);
        let m = discounted_mean(&[0.0, 1.0], 0.9).unwrap();
        assert!((m - 1.0 / 1.9).abs() < 1e-15);
        let m = discounted_mean(&[0.2, 0.4, 0.9], 1.0).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
        assert!(discounted_mean(&[], 0.9).is_err());
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(0.4, 0.4), 0.0);
        assert!((reward(0.5, 0.25) - 0.5).abs() < 1e-15);
        assert_eq!(reward(0.1, 0.9), -1.0);
        assert_eq!(reward(0.0, 0.3), -1.0);
    }

    #[test]
    fn zero_reward_preserves_order() {
        let mut s = state_with(vec![1.0, 2.0, 5.0], params(0.1, 0.01, 3.0));
        let before = s.weights.clone();
        s.update(1, 0.0, 0.3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(before[i] < before[j], s.weights[i] < s.weights[j]);
            }
        }
    }

    #[test]
    fn update_example_without_regularizer() {
        let mut s = state_with(vec![1.0, 1.0], params(0.0, 0.0, 1.0));
        s.update(0, 0.5, 0.5).unwrap();
        // (e, 1) before renormalization to sum 2.
        assert!((s.weights[0] / s.weights[1] - std::f64::consts::E).abs() < 1e-12);
        assert!((s.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn update_rejects_unplayable_arm() {
        let mut s = state_with(vec![1.0, 1.0], params(0.0, 0.0, 1.0));
        assert!(matches!(
            s.update(0, 0.5, 0.0),
            Err(Error::UnplayableArm { arm: 0 })
        ));
    }

    #[test]
    fn sustained_reward_makes_arm_most_likely() {
        let g = ArmGrid::uniform(21).unwrap();
        let mut s = BanditState::new(&g, BanditParams::default()).unwrap();
        let mut rng = make_rng(3, "bandit");
        for _ in 0..100 {
            let p = selection_probabilities(&s);
            let arm = draw_arm(&p, &mut rng).unwrap();
            let r = if arm == 4 { 0.5 } else { 0.0 };
            s.update(arm, r, p[arm]).unwrap();
        }
        let p = selection_probabilities(&s);
        for (i, &x) in p.iter().enumerate() {
            if i != 4 {
                assert!(p[4] > x);
            }
        }
    }

    #[test]
    fn weights_stay_positive_under_adversarial_rewards() {
        let g = ArmGrid::uniform(21).unwrap();
        let mut s = BanditState::new(&g, BanditParams::default()).unwrap();
        let mut rng = make_rng(4, "adv");
        for t in 0..1_000_000u32 {
            let p = selection_probabilities(&s);
            let arm = draw_arm(&p, &mut rng).unwrap();
            let r = if (t / 1000) % 2 == 0 { 1.0 } else { -1.0 }
                * if arm.is_multiple_of(2) { 1.0 } else { -1.0 };
            s.update(arm, r, p[arm]).unwrap();
        }
        assert!(s.weights.iter().all(|w| *w > 0.0 && w.is_finite()));
    }

    #[test]
    fn state_json_round_trips() {
        let g = ArmGrid::uniform(5).unwrap();
        let mut s = BanditState::new(&g, BanditParams::default()).unwrap();
        s.record_precision(0.3).unwrap();
        s.update_unfiltered(2, 0.4).unwrap();
        assert_eq!(BanditState::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn baseline_can_exclude_current_week() {
        let g = ArmGrid::uniform(3).unwrap();
        let p = BanditParams {
            include_current_in_mean: false,
            ..BanditParams::default()
        };
        let mut s = BanditState::new(&g, p).unwrap();
        assert_eq!(s.record_precision(0.5).unwrap(), (0.5, 0.0));
        let (baseline, r) = s.record_precision(1.0).unwrap();
        assert_eq!(baseline, 0.5);
        assert!((r - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn probability_floor_holds(ws in proptest::collection::vec(1e-6f64..1e6, 21), arm in 0usize..21, r in -1.0f64..1.0) {
            let mut s = state_with(ws, BanditParams::default());
            let p = selection_probabilities(&s);
            s.update(arm, r, p[arm]).unwrap();
            let p = selection_probabilities(&s);
            let floor = 0.1 / 21.0;
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| *x >= floor - 1e-15));
        }

        #[test]
        fn update_is_scale_invariant(ws in proptest::collection::vec(1e-3f64..1e3, 21), c in 1e-3f64..1e3, arm in 0usize..21, r in -1.0f64..1.0) {
            let mut a = state_with(ws.clone(), BanditParams::default());
            let mut b = state_with(ws.iter().map(|w| w * c).collect(), BanditParams::default());
            let (pa, pb) = (selection_probabilities(&a), selection_probabilities(&b));
            a.update(arm, r, pa[arm]).unwrap();
            b.update(arm, r, pb[arm]).unwrap();
            let (pa, pb) = (selection_probabilities(&a), selection_probabilities(&b));
            for (x, y) in pa.iter().zip(&pb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn discounted_mean_is_convex(h in proptest::collection::vec(0.0f64..1.0, 1..40), g in 0.01f64..1.0) {
            let m = discounted_mean(&h, g).unwrap();
            let lo = h.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
        }
    }
}
