//! Robust location estimators and the UCB confidence radius.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no samples")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need more than 2 ln(1/delta) = {needed:.3} samples, have {have}")]
    TooFewSamples { have: usize, needed: f64 },
    #[error("root of the influence sum is not bracketed by the sample range")]
    Bracket,
    #[error("round {round} precedes an earlier round {last}")]
    OutOfOrder { round: usize, last: usize },
}

/// Constants of the estimator error rate `2 v^{1/(1+eps)} (c ln(1/delta) / n)^{eps/(1+eps)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub c: f64,
    pub v: f64,
    pub eps: f64,
}

impl RateParams {
    pub fn new(c: f64, v: f64, eps: f64) -> Result<Self, EstimatorError> {
        if !(c > 0.0 && v > 0.0 && eps > 0.0 && eps <= 1.0) {
            return Err(EstimatorError::InvalidParameter(format!(
                "rate params need c, v > 0 and eps in (0, 1]: c={c}, v={v}, eps={eps}"
            )));
        }
        Ok(Self { c, v, eps })
    }
}

/// `v^{1/(1+eps)} (2 c ln t / n)^{eps/(1+eps)}`.
pub fn confidence_radius(params: &RateParams, n: usize, t: usize) -> f64 {
    radius_at(params, n as f64, t as f64)
}

/// [`confidence_radius`] over real-valued counts and rounds.
pub fn radius_at(params: &RateParams, n: f64, t: f64) -> f64 {
    let p = 1.0 + params.eps;
    params.v.powf(1.0 / p) * (2.0 * params.c * t.ln() / n).powf(params.eps / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    TrimmedMean,
    MedianOfMeans,
    Catoni,
    EmpiricalMean,
}

/// Order-independent, correctly rounded floating point sum (Shewchuk partials).
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut kept = 0;
        for i in 0..self.partials.len() {
            let mut y = self.partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some((&last, rest)) = p.split_last() else {
            return 0.0;
        };
        let mut hi = last;
        let mut lo = 0.0;
        let mut i = rest.len();
        while i > 0 {
            i -= 1;
            let x = hi;
            let y = rest[i];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round-half-even correction across the remaining partials
        if i > 0 && ((lo < 0.0 && rest[i - 1] < 0.0) || (lo > 0.0 && rest[i - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn empirical_mean(samples: &[f64]) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::Empty);
    }
    Ok(samples.iter().copied().collect::<ExactSum>().value() / samples.len() as f64)
}

/// `(1/n) sum_i X_i 1{|X_i| <= (u i / ln(1/delta))^{1/(1+eps)}}` with `i` the
/// 1-based arrival rank.
pub fn trimmed_mean(samples: &[f64], u: f64, eps: f64, delta: f64) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::Empty);
    }
    if !(delta > 0.0 && delta < 1.0) || !(u > 0.0) || !(eps > 0.0 && eps <= 1.0) {
        return Err(EstimatorError::InvalidParameter(format!(
            "trimmed mean needs delta in (0,1), u > 0, eps in (0,1]: delta={delta}, u={u}, eps={eps}"
        )));
    }
    let log_inv = (1.0 / delta).ln();
    let expo = 1.0 / (1.0 + eps);
    let kept: ExactSum = samples
        .iter()
        .enumerate()
        .filter(|(i, x)| x.abs() <= (u * (*i + 1) as f64 / log_inv).powf(expo))
        .map(|(_, &x)| x)
        .collect();
    Ok(kept.value() / samples.len() as f64)
}

/// Activation thresholds `2 u ln t` for `t = 1..=horizon`, shared by every
/// online estimator of a run.
#[derive(Debug, Clone)]
pub struct TrimSchedule {
    u: f64,
    eps: f64,
    thresholds: Arc<[f64]>,
}

impl TrimSchedule {
    pub fn new(horizon: usize, u: f64, eps: f64) -> Result<Self, EstimatorError> {
        if horizon == 0 || !(u > 0.0) || !(eps > 0.0 && eps <= 1.0) {
            return Err(EstimatorError::InvalidParameter(format!(
                "schedule needs horizon >= 1, u > 0, eps in (0,1]: T={horizon}, u={u}, eps={eps}"
            )));
        }
        let thresholds = (1..=horizon).map(|t| activation_threshold(u, t)).collect();
        Ok(Self { u, eps, thresholds })
    }

    pub fn horizon(&self) -> usize {
        self.thresholds.len()
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Smallest round `t` with `key <= 2 u ln t`, or `None` past the horizon.
    fn first_round_at_least(&self, key: f64) -> Option<usize> {
        let idx = self.thresholds.partition_point(|&thr| thr < key);
        (idx < self.thresholds.len()).then_some(idx + 1)
    }
}

/// Threshold compared against `|x|^{1+eps} / i` at round `t`.
pub fn activation_threshold(u: f64, t: usize) -> f64 {
    2.0 * u * (t as f64).ln()
}

/// Key of the `i`-th sample (1-based rank) under the selection rule.
pub fn activation_key(x: f64, eps: f64, rank: usize) -> f64 {
    x.abs().powf(1.0 + eps) / rank as f64
}

/// Streaming trimmed mean. The `i`-th sample becomes active at the first
/// round `t` (no earlier than its arrival) with `|x|^{1+eps} / i <= 2 u ln t`,
/// and stays active afterwards. The estimate is the sum of active samples
/// divided by the count of all samples.
#[derive(Debug, Clone)]
pub struct OnlineTrimmedState {
    schedule: TrimSchedule,
    pending: BTreeMap<usize, Vec<f64>>,
    running_sum: ExactSum,
    active: usize,
    seen: usize,
    last_push: usize,
    applied_through: usize,
}

impl OnlineTrimmedState {
    pub fn new(schedule: TrimSchedule) -> Self {
        Self {
            schedule,
            pending: BTreeMap::new(),
            running_sum: ExactSum::new(),
            active: 0,
            seen: 0,
            last_push: 0,
            applied_through: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.seen
    }

    pub fn is_empty(&self) -> bool {
        self.seen == 0
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    /// Adds a sample that arrived at `round`.
    pub fn push(&mut self, x: f64, round: usize) -> Result<(), EstimatorError> {
        if round < self.last_push {
            return Err(EstimatorError::OutOfOrder {
                round,
                last: self.last_push,
            });
        }
        self.last_push = round;
        self.seen += 1;
        let key = activation_key(x, self.schedule.eps, self.seen);
        let Some(first) = self.schedule.first_round_at_least(key) else {
            return Ok(());
        };
        let activation = first.max(round);
        if activation <= self.applied_through {
            self.running_sum.add(x);
            self.active += 1;
        } else {
            self.pending.entry(activation).or_default().push(x);
        }
        Ok(())
    }

    /// Estimate at round `t`; rounds must not go backwards.
    pub fn read(&mut self, t: usize) -> Result<f64, EstimatorError> {
        if self.seen == 0 {
            return Err(EstimatorError::Empty);
        }
        if t < self.applied_through {
            return Err(EstimatorError::OutOfOrder {
                round: t,
                last: self.applied_through,
            });
        }
        while let Some(entry) = self.pending.first_entry() {
            if *entry.key() > t {
                break;
            }
            for x in entry.remove() {
                self.running_sum.add(x);
                self.active += 1;
            }
        }
        self.applied_through = t;
        Ok(self.running_sum.value() / self.seen as f64)
    }
}

/// Number of groups `floor(min(8 ln(e^{1/8}/delta), n/2))`, at least 1.
pub fn median_of_means_groups(n: usize, delta: f64) -> usize {
    let k = (8.0 * (0.125 - delta.ln())).min(n as f64 / 2.0).floor();
    (k as usize).max(1)
}

pub fn median_of_means(samples: &[f64], delta: f64) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::Empty);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EstimatorError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    median_of_means_with_groups(samples, median_of_means_groups(samples.len(), delta))
}

/// Median of `k` consecutive group means of `floor(n/k)` samples each;
/// leftovers are dropped and an even `k` averages the middle pair.
pub fn median_of_means_with_groups(samples: &[f64], k: usize) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::Empty);
    }
    let k = k.clamp(1, samples.len());
    let size = samples.len() / k;
    let mut means: Vec<f64> = samples
        .chunks_exact(size)
        .take(k)
        .map(|g| g.iter().copied().collect::<ExactSum>().value() / size as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = k / 2;
    Ok(if k % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Catoni influence function `sign(x) ln(1 + |x| + x^2/2)`.
pub fn catoni_psi(x: f64) -> f64 {
    x.signum() * (x.abs() + 0.5 * x * x).ln_1p()
}

/// Root of `sum_i psi(a (X_i - m)) = 0` with
/// `a = sqrt(2 ln(1/delta) / (n (v + 2 v ln(1/delta) / (n - 2 ln(1/delta)))))`.
pub fn catoni_mean(samples: &[f64], v: f64, delta: f64) -> Result<f64, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::Empty);
    }
    if !(v > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(EstimatorError::InvalidParameter(format!(
            "catoni needs v > 0 and delta in (0,1): v={v}, delta={delta}"
        )));
    }
    let n = samples.len() as f64;
    let log_inv = (1.0 / delta).ln();
    if n <= 2.0 * log_inv {
        return Err(EstimatorError::TooFewSamples {
            have: samples.len(),
            needed: 2.0 * log_inv,
        });
    }
    let scale = (2.0 * log_inv / (n * (v + 2.0 * v * log_inv / (n - 2.0 * log_inv)))).sqrt();
    let influence = |m: f64| -> f64 {
        samples
            .iter()
            .map(|&x| catoni_psi(scale * (x - m)))
            .collect::<ExactSum>()
            .value()
    };
    let (mut lo, mut hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if lo == hi {
        return Ok(lo);
    }
    if influence(lo) < 0.0 || influence(hi) > 0.0 {
        return Err(EstimatorError::Bracket);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if influence(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-arm sample store backing a policy's mean estimate.
#[derive(Debug, Clone)]
pub enum ArmSamples {
    Online(OnlineTrimmedState),
    Batch {
        kind: EstimatorKind,
        samples: Vec<f64>,
    },
}

impl ArmSamples {
    pub fn new(kind: EstimatorKind, schedule: &TrimSchedule) -> Self {
        match kind {
            EstimatorKind::TrimmedMean => Self::Online(OnlineTrimmedState::new(schedule.clone())),
            other => Self::Batch {
                kind: other,
                samples: Vec::new(),
            },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Online(s) => s.len(),
            Self::Batch { samples, .. } => samples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, x: f64, round: usize) -> Result<(), EstimatorError> {
        match self {
            Self::Online(s) => s.push(x, round),
            Self::Batch { samples, .. } => {
                samples.push(x);
                Ok(())
            }
        }
    }

    /// Robust mean at round `t >= 2`, confidence `1/t^2`.
    pub fn estimate(&mut self, t: usize, v: f64) -> Result<f64, EstimatorError> {
        let delta = 1.0 / (t as f64 * t as f64);
        match self {
            Self::Online(s) => s.read(t),
            Self::Batch { kind, samples } => match kind {
                EstimatorKind::MedianOfMeans => median_of_means(samples, delta),
                // falls back to the plain mean until enough samples accumulate
                EstimatorKind::Catoni => match catoni_mean(samples, v, delta) {
                    Err(EstimatorError::TooFewSamples { .. }) => empirical_mean(samples),
                    other => other,
                },
                EstimatorKind::EmpiricalMean | EstimatorKind::TrimmedMean => {
                    empirical_mean(samples)
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_sum_is_order_free() {
        let xs = [1e16, 1.0, -1e16, 3.0, 1e-3];
        let a: ExactSum = xs.iter().copied().collect();
        let b: ExactSum = xs.iter().rev().copied().collect();
        assert_eq!(a.value(), 4.001);
        assert_eq!(a.value(), b.value());
        assert_eq!(ExactSum::new().value(), 0.0);
    }

    #[test]
    fn radius_cases() {
        let p = RateParams::new(1.0, 1.0, 1.0).unwrap();
        let t = 50.0f64;
        assert!((radius_at(&p, 2.0 * t.ln(), t) - 1.0).abs() < 1e-12);
        assert!((radius_at(&p, 8.0, std::f64::consts::E) - 0.5).abs() < 1e-12);
        assert!(confidence_radius(&p, 10, 100) > confidence_radius(&p, 11, 100));
        assert!(confidence_radius(&p, 10, 100) < confidence_radius(&p, 10, 101));
        assert_eq!(confidence_radius(&p, 8, 7), radius_at(&p, 8.0, 7.0));
        assert!(RateParams::new(1.0, 1.0, 1.5).is_err());
        assert!(RateParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn trimmed_mean_cases() {
        assert_eq!(trimmed_mean(&[1.0; 4], 100.0, 1.0, 0.5).unwrap(), 1.0);
        let delta = (-1.0f64).exp();
        assert_eq!(trimmed_mean(&[1.0, 100.0], 1.0, 1.0, delta).unwrap(), 0.5);
        assert_eq!(trimmed_mean(&[], 1.0, 1.0, 0.5), Err(EstimatorError::Empty));
        assert!(trimmed_mean(&[1.0], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn online_single_sample() {
        let sched = TrimSchedule::new(10, 100.0, 1.0).unwrap();
        let mut s = OnlineTrimmedState::new(sched);
        assert_eq!(s.read(1), Err(EstimatorError::Empty));
        s.push(1.0, 1).unwrap();
        // 2 u ln 1 = 0, so the sample waits for round 2
        assert_eq!(s.read(1).unwrap(), 0.0);
        assert_eq!(s.read(2).unwrap(), 1.0);
    }

    #[test]
    fn online_threshold_boundary() {
        let u = 3.0;
        let sched = TrimSchedule::new(20, u, 1.0).unwrap();
        // key just above the round-6 threshold activates at round 7
        let key = activation_threshold(u, 6) * (1.0 + 1e-12);
        let mut s = OnlineTrimmedState::new(sched.clone());
        s.push(key.sqrt(), 1).unwrap();
        s.read(6).unwrap();
        assert_eq!(s.active_count(), 0);
        s.read(7).unwrap();
        assert_eq!(s.active_count(), 1);

        // a key exactly on the round-7 threshold is active at 7 but not at 6
        let thr7 = activation_threshold(u, 7);
        assert_eq!(sched.first_round_at_least(thr7), Some(7));
        assert_eq!(sched.first_round_at_least(thr7 * (1.0 + 1e-12)), Some(8));
    }

    #[test]
    fn online_never_activates_past_horizon() {
        let sched = TrimSchedule::new(5, 1.0, 1.0).unwrap();
        let mut s = OnlineTrimmedState::new(sched);
        s.push(1e6, 1).unwrap();
        s.push(1.0, 1).unwrap();
        assert_eq!(s.read(5).unwrap(), 0.5);
        assert_eq!(s.len(), 2);
        assert_eq!(s.active_count(), 1);
    }

    #[test]
    fn online_rejects_out_of_order() {
        let sched = TrimSchedule::new(5, 1.0, 1.0).unwrap();
        let mut s = OnlineTrimmedState::new(sched);
        s.push(0.1, 3).unwrap();
        assert!(matches!(
            s.push(0.1, 2),
            Err(EstimatorError::OutOfOrder { .. })
        ));
        s.read(4).unwrap();
        assert!(matches!(s.read(3), Err(EstimatorError::OutOfOrder { .. })));
        // a push after a later read is applied directly once active
        s.push(0.1, 4).unwrap();
        assert_eq!(s.read(4).unwrap(), 0.1);
    }

    #[test]
    fn median_of_means_cases() {
        assert_eq!(median_of_means(&[2.5; 9], 0.1).unwrap(), 2.5);
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(median_of_means_with_groups(&xs, 2).unwrap(), 3.5);
        assert_eq!(median_of_means(&[7.0], 0.01).unwrap(), 7.0);
        assert_eq!(median_of_means_groups(1, 0.01), 1);
        // 8 ln(e^{1/8}/0.05) = 1 + 8 ln 20 = 24.97
        assert_eq!(median_of_means_groups(1000, 0.05), 24);
        assert_eq!(median_of_means_groups(10, 0.05), 5);
        // leftovers beyond k * N are dropped: groups {1,2},{3,4},{5,6}, 7 dropped
        let odd = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 100.0];
        assert_eq!(median_of_means_with_groups(&odd, 3).unwrap(), 3.5);
    }

    #[test]
    fn catoni_cases() {
        assert_eq!(catoni_mean(&[4.0; 50], 1.0, 0.05).unwrap(), 4.0);
        let sym: Vec<f64> = [0.5, 1.5, 3.0, 10.0]
            .iter()
            .flat_map(|a| [2.0 - a, 2.0 + a])
            .cycle()
            .take(64)
            .collect();
        assert!((catoni_mean(&sym, 1.0, 0.05).unwrap() - 2.0).abs() < 1e-9);
        assert!(matches!(
            catoni_mean(&[1.0, 2.0], 1.0, 0.05),
            Err(EstimatorError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn catoni_ignores_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut xs: Vec<f64> = (0..500).map(|_| rng.gen::<f64>().powf(-0.7)).collect();
        let a = catoni_mean(&xs, 2.0, 0.01).unwrap();
        xs.reverse();
        let b = catoni_mean(&xs, 2.0, 0.01).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn psi_is_odd_and_increasing() {
        for x in [0.1, 1.0, 5.0, 100.0] {
            assert_eq!(catoni_psi(-x), -catoni_psi(x));
            assert!(catoni_psi(x + 0.01) > catoni_psi(x));
        }
        assert_eq!(catoni_psi(0.0), 0.0);
    }
}
