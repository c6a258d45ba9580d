//! Weekly exploration-ratio decisions.
//!
//! * `Adapt` draws an arm from the bandit's distribution restricted to a
//!   window of half width `l` around the drift score.
//! * `Apt` draws from the unrestricted bandit distribution.
//! * `Ada` uses the drift score itself as the ratio.
//! * `Fixed(k)` always returns `k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit::{self, ArmGrid, BanditParams, BanditState};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Grid points closer than this to a window edge count as inside it.
const WINDOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Adapt,
    Apt,
    Ada,
    Fixed(f64),
}

impl Method {
    pub fn uses_bandit(&self) -> bool {
        matches!(self, Method::Adapt | Method::Apt)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Method::Adapt => "ADAPT",
            Method::Apt => "APT",
            Method::Ada => "ADA",
            Method::Fixed(_) => "FIXED",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Adapt => f.write_str("adapt"),
            Method::Apt => f.write_str("apt"),
            Method::Ada => f.write_str("ada"),
            Method::Fixed(k) => write!(f, "fixed:{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "adapt" => Ok(Method::Adapt),
            "apt" => Ok(Method::Apt),
            "ada" => Ok(Method::Ada),
            "explore" => Ok(Method::Fixed(1.0)),
            "exploit" => Ok(Method::Fixed(0.0)),
            other => {
                let k = other
                    .strip_prefix("fixed:")
                    .and_then(|k| k.parse::<f64>().ok())
                    .filter(|k| (0.0..=1.0).contains(k))
                    .ok_or_else(|| Error::InvalidMethod(s.to_string()))?;
                Ok(Method::Fixed(k))
            }
        }
    }
}

/// One week's exploration ratio and how it was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDecision {
    pub week: u32,
    pub method: Method,
    pub ratio: f64,
    pub arm: Option<usize>,
    pub drift: Option<f64>,
    /// The distribution the arm was actually drawn from.
    pub filtered_probabilities: Option<Vec<f64>>,
}

/// Restricts `p` to arms whose ratio lies in `[max(0, s - l), min(1, s + l)]`
/// and renormalizes. If the window holds no arm or no mass, the arm nearest
/// to `s` gets all of it.
pub fn filter_arms(p: &[f64], grid: &ArmGrid, s: f64, l: f64) -> Vec<f64> {
    let lo = (s - l).max(0.0);
    let hi = (s + l).min(1.0);
    let mut out: Vec<f64> = p
        .iter()
        .zip(grid.ratios())
        .map(|(&prob, &r)| {
            if r >= lo - WINDOW_TOL && r <= hi + WINDOW_TOL {
                prob
            } else {
                0.0
            }
        })
        .collect();
    let mass: f64 = out.iter().sum();
    if mass > 0.0 {
        out.iter_mut().for_each(|x| *x /= mass);
    } else {
        let nearest = grid
            .ratios()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        out.iter_mut().for_each(|x| *x = 0.0);
        out[nearest] = 1.0;
    }
    out
}

fn check_drift(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::config("drift", format!("score {s} outside [0, 1]")));
    }
    Ok(())
}

/// Draws a ratio from the bandit restricted to the drift window.
pub fn decide_adapt(
    week: u32,
    state: &BanditState,
    grid: &ArmGrid,
    s: f64,
    l: f64,
    rng: &mut SimRng,
) -> Result<RatioDecision> {
    check_drift(s)?;
    let p = bandit::selection_probabilities(state);
    let filtered = filter_arms(&p, grid, s, l);
    let arm = bandit::draw_arm(&filtered, rng)?;
    Ok(RatioDecision {
        week,
        method: Method::Adapt,
        ratio: grid.ratio(arm),
        arm: Some(arm),
        drift: Some(s),
        filtered_probabilities: Some(filtered),
    })
}

/// The drift score used directly as the ratio.
pub fn decide_ada(week: u32, s: f64) -> Result<RatioDecision> {
    check_drift(s)?;
    Ok(RatioDecision {
        week,
        method: Method::Ada,
        ratio: s,
        arm: None,
        drift: Some(s),
        filtered_probabilities: None,
    })
}

/// Draws a ratio from the unrestricted bandit distribution.
pub fn decide_apt(
    week: u32,
    state: &BanditState,
    grid: &ArmGrid,
    rng: &mut SimRng,
) -> Result<RatioDecision> {
    let mut d = decide_adapt(week, state, grid, 0.5, 1.0, rng)?;
    d.method = Method::Apt;
    d.drift = None;
    Ok(d)
}

/// Feeds a week's precision back into the bandit for a bandit-backed
/// decision. The importance weight uses the probability the arm was actually
/// drawn with. Returns the reward, or `None` for non-bandit decisions.
pub fn post_feedback(
    decision: &RatioDecision,
    precision: f64,
    state: &mut BanditState,
) -> Result<Option<f64>> {
    if !decision.method.uses_bandit() {
        return Ok(None);
    }
    let arm = decision
        .arm
        .ok_or(Error::NotBanditBacked(decision.method.kind()))?;
    let played = match &decision.filtered_probabilities {
        Some(p) => *p
            .get(arm)
            .ok_or(Error::ArmOutOfRange { arm, arms: p.len() })?,
        None => bandit::selection_probabilities(state)[arm],
    };
    if !(played > 0.0) {
        return Err(Error::UnplayableArm { arm });
    }
    let (_, reward) = state.record_precision(precision)?;
    state.update(arm, reward, played)?;
    Ok(Some(reward))
}

/// Per-run decision maker owning the bandit, if the method has one.
#[derive(Debug, Clone)]
pub struct Controller {
    method: Method,
    grid: ArmGrid,
    bandit: Option<BanditState>,
    window_halfwidth: f64,
}

impl Controller {
    pub fn new(method: Method, cfg: &SimConfig) -> Result<Self> {
        let grid = ArmGrid::from_config(cfg)?;
        let bandit = if method.uses_bandit() {
            Some(BanditState::new(&grid, BanditParams::from_config(cfg))?)
        } else {
            None
        };
        if let Method::Fixed(k) = method {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::InvalidMethod(method.to_string()));
            }
        }
        Ok(Controller {
            method,
            grid,
            bandit,
            window_halfwidth: cfg.window_halfwidth,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn bandit(&self) -> Option<&BanditState> {
        self.bandit.as_ref()
    }

    pub fn grid(&self) -> &ArmGrid {
        &self.grid
    }

    pub fn decide(&mut self, week: u32, drift: f64, rng: &mut SimRng) -> Result<RatioDecision> {
        match self.method {
            Method::Adapt => {
                let state = self.bandit.as_ref().expect("bandit method has state");
                decide_adapt(week, state, &self.grid, drift, self.window_halfwidth, rng)
            }
            Method::Apt => {
                let state = self.bandit.as_ref().expect("bandit method has state");
                let mut d = decide_apt(week, state, &self.grid, rng)?;
                d.drift = Some(drift);
                Ok(d)
            }
            Method::Ada => decide_ada(week, drift),
            Method::Fixed(k) => Ok(RatioDecision {
                week,
                method: self.method,
                ratio: k,
                arm: None,
                drift: Some(drift),
                filtered_probabilities: None,
            }),
        }
    }

    pub fn feedback(&mut self, decision: &RatioDecision, precision: f64) -> Result<Option<f64>> {
        match self.bandit.as_mut() {
            Some(state) => post_feedback(decision, precision, state),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn grid() -> ArmGrid {
        ArmGrid::uniform(21).unwrap()
    }

    fn fresh() -> BanditState {
        BanditState::new(&grid(), BanditParams::default()).unwrap()
    }

    fn support(p: &[f64]) -> Vec<f64> {
        let g = grid();
        p.iter()
            .enumerate()
            .filter(|(_, x)| **x > 0.0)
            .map(|(i, _)| g.ratio(i))
            .collect()
    }

    #[test]
    fn method_parsing() {
        assert_eq!("adapt".parse::<Method>().unwrap(), Method::Adapt);
        assert_eq!("explore".parse::<Method>().unwrap(), Method::Fixed(1.0));
        assert_eq!("exploit".parse::<Method>().unwrap(), Method::Fixed(0.0));
        assert_eq!("fixed:0.1".parse::<Method>().unwrap(), Method::Fixed(0.1));
        assert!("fixed:1.5".parse::<Method>().is_err());
        assert!("greedy".parse::<Method>().is_err());
        assert_eq!(Method::Fixed(0.1).to_string(), "fixed:0.1");
    }

    #[test]
    fn filter_window_examples() {
        let uniform = vec![1.0 / 21.0; 21];
        let f = filter_arms(&uniform, &grid(), 0.1, 0.25);
        let s = support(&f);
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], 0.0);
        assert_eq!(*s.last().unwrap(), 0.35);
        for x in f.iter().filter(|x| **x > 0.0) {
            assert!((x - 0.125).abs() < 1e-12);
        }
        let s = support(&filter_arms(&uniform, &grid(), 0.5, 0.25));
        assert_eq!(s.len(), 11);
        assert_eq!((s[0], *s.last().unwrap()), (0.25, 0.75));
        let same = filter_arms(&uniform, &grid(), 0.3, 1.0);
        for (a, b) in same.iter().zip(&uniform) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_window_falls_back_to_nearest_arm() {
        let mut p = vec![0.0; 21];
        p[20] = 1.0;
        let f = filter_arms(&p, &grid(), 0.0, 0.25);
        assert_eq!(f[0], 1.0);
        assert_eq!(f.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn adapt_falls_back_when_window_has_no_mass() {
        // A bandit whose epsilon is zero and whose weight sits almost entirely
        // on ratio 1.0 still has tiny in-window mass; force the fallback by
        // zeroing it through a direct filter call instead.
        let mut p = vec![0.0; 21];
        p[20] = 1.0;
        let f = filter_arms(&p, &grid(), 0.0, 0.25);
        let arm = bandit::draw_arm(&f, &mut make_rng(0, "x")).unwrap();
        assert_eq!(grid().ratio(arm), 0.0);
    }

    #[test]
    fn adapt_respects_window() {
        let state = fresh();
        let mut rng = make_rng(1, "adapt");
        for _ in 0..500 {
            let d = decide_adapt(0, &state, &grid(), 0.1, 0.25, &mut rng).unwrap();
            assert!(d.ratio <= 0.35 + 1e-12);
        }
    }

    #[test]
    fn adapt_is_deterministic() {
        let state = fresh();
        let a = decide_adapt(3, &state, &grid(), 0.4, 0.25, &mut make_rng(2, "a")).unwrap();
        let b = decide_adapt(3, &state, &grid(), 0.4, 0.25, &mut make_rng(2, "a")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ada_is_identity() {
        for s in [0.0, 0.37, 1.0] {
            assert_eq!(decide_ada(0, s).unwrap().ratio, s);
        }
        assert!(decide_ada(0, 1.2).is_err());
    }

    #[test]
    fn apt_equals_adapt_with_full_window() {
        let state = fresh();
        for seed in 0..20 {
            let a = decide_apt(0, &state, &grid(), &mut make_rng(seed, "x")).unwrap();
            let b = decide_adapt(0, &state, &grid(), 0.5, 1.0, &mut make_rng(seed, "x")).unwrap();
            assert_eq!(a.arm, b.arm);
            assert_eq!(a.ratio, b.ratio);
        }
    }

    #[test]
    fn apt_reaches_every_arm() {
        let state = fresh();
        let mut rng = make_rng(5, "apt");
        let mut seen = [false; 21];
        for _ in 0..2000 {
            seen[decide_apt(0, &state, &grid(), &mut rng)
                .unwrap()
                .arm
                .unwrap()] = true;
        }
        assert!(seen.iter().all(|x| *x));
    }

    #[test]
    fn apt_concentrates_on_rewarded_arm() {
        let mut state = fresh();
        let mut rng = make_rng(6, "apt");
        for _ in 0..300 {
            let d = decide_apt(0, &state, &grid(), &mut rng).unwrap();
            let precision = if d.arm == Some(3) { 0.8 } else { 0.4 };
            post_feedback(&d, precision, &mut state).unwrap();
        }
        let mut hits = 0;
        for _ in 0..1000 {
            if decide_apt(0, &state, &grid(), &mut rng).unwrap().arm == Some(3) {
                hits += 1;
            }
        }
        assert!(hits > 500, "{hits}");
    }

    #[test]
    fn feedback_at_baseline_keeps_order() {
        let mut state = fresh();
        state.weights = (1..=21).map(f64::from).collect();
        state.precision_history = vec![0.4];
        let d = decide_apt(0, &state, &grid(), &mut make_rng(0, "x")).unwrap();
        let before = state.weights.clone();
        // Same precision as the history: the baseline equals it and the reward is 0.
        post_feedback(&d, 0.4, &mut state).unwrap();
        for w in before.windows(2).zip(state.weights.windows(2)) {
            assert!(w.1[0] < w.1[1]);
        }
    }

    #[test]
    fn adapt_feedback_uses_filtered_probability() {
        let base = fresh();
        let d = decide_adapt(0, &base, &grid(), 0.1, 0.25, &mut make_rng(7, "x")).unwrap();
        let arm = d.arm.unwrap();
        let filtered_p = d.filtered_probabilities.as_ref().unwrap()[arm];
        let raw_p = bandit::selection_probabilities(&base)[arm];
        assert!(filtered_p > raw_p);

        // History makes the reward non-zero: baseline (0.9*0.2 + 0.6)/1.9.
        let mut with_feedback = base.clone();
        with_feedback.precision_history = vec![0.2];
        let mut filtered_manual = with_feedback.clone();
        let mut raw_manual = with_feedback.clone();
        let r = post_feedback(&d, 0.6, &mut with_feedback).unwrap().unwrap();
        filtered_manual.record_precision(0.6).unwrap();
        filtered_manual.update(arm, r, filtered_p).unwrap();
        raw_manual.record_precision(0.6).unwrap();
        raw_manual.update(arm, r, raw_p).unwrap();
        assert_eq!(with_feedback, filtered_manual);
        assert_ne!(with_feedback.weights, raw_manual.weights);
    }

    #[test]
    fn feedback_is_deterministic_and_ignored_for_fixed() {
        let run = || {
            let mut state = fresh();
            let mut rng = make_rng(8, "x");
            for t in 0..30 {
                let d = decide_adapt(t, &state, &grid(), 0.3, 0.25, &mut rng).unwrap();
                post_feedback(&d, 0.1 + 0.02 * f64::from(t % 7), &mut state).unwrap();
            }
            state
        };
        assert_eq!(run(), run());
        let mut state = fresh();
        let d = decide_ada(0, 0.3).unwrap();
        assert_eq!(post_feedback(&d, 0.5, &mut state).unwrap(), None);
        assert!(state.precision_history.is_empty());
    }
}
