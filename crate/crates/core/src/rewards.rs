//! Heavy-tailed reward distributions and bandit instances.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal, Pareto as ParetoDist, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::adaptive_simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("an instance needs at least one arm")]
    NoArms,
}

/// Reward law of a single arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardDistribution {
    /// Symmetric stable law `S(alpha, 0, scale, location)`, characteristic
    /// function `exp(i location t - |scale t|^alpha)`.
    AlphaStable {
        alpha: f64,
        scale: f64,
        location: f64,
    },
    /// Two-point law on `{0, 1/a}` with `a = (2 gap)^(1/tail)`.
    ScaledBernoulli {
        gap: f64,
        tail: f64,
        optimal: bool,
    },
    Pareto {
        shape: f64,
        scale: f64,
    },
    /// `std = 0` gives a point mass.
    Gaussian {
        mean: f64,
        std: f64,
    },
}

impl RewardDistribution {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |msg: String| Err(RewardError::InvalidParameter(msg));
        match *self {
            Self::AlphaStable {
                alpha,
                scale,
                location,
            } => {
                if !(alpha > 1.0 && alpha <= 2.0) {
                    return bad(format!("stable alpha must lie in (1, 2], got {alpha}"));
                }
                if !(scale > 0.0) || !location.is_finite() {
                    return bad(format!("stable scale {scale} / location {location}"));
                }
            }
            Self::ScaledBernoulli { gap, tail, .. } => {
                if !(gap > 0.0 && gap < 0.25) {
                    return bad(format!("gap must lie in (0, 1/4), got {gap}"));
                }
                if !(tail > 0.0 && tail <= 1.0) {
                    return bad(format!("tail must lie in (0, 1], got {tail}"));
                }
            }
            Self::Pareto { shape, scale } => {
                if !(shape > 1.0) || !(scale > 0.0) {
                    return bad(format!("pareto shape {shape} / scale {scale}"));
                }
            }
            Self::Gaussian { mean, std } => {
                if !mean.is_finite() || !(std >= 0.0) {
                    return bad(format!("gaussian mean {mean} / std {std}"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::AlphaStable { location, .. } => location,
            Self::ScaledBernoulli { .. } => {
                let (atom, p) = self.bernoulli_atom();
                atom * p
            }
            Self::Pareto { shape, scale } => shape * scale / (shape - 1.0),
            Self::Gaussian { mean, .. } => mean,
        }
    }

    // (support point 1/a, probability of hitting it)
    fn bernoulli_atom(&self) -> (f64, f64) {
        let Self::ScaledBernoulli { gap, tail, optimal } = *self else {
            unreachable!("not a scaled bernoulli");
        };
        let a = (2.0 * gap).powf(1.0 / tail);
        let top = a.powf(1.0 + tail);
        let p = if optimal { top } else { top - gap * a };
        (1.0 / a, p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::AlphaStable {
                alpha,
                scale,
                location,
            } => location + scale * standard_symmetric_stable(alpha, rng),
            Self::ScaledBernoulli { .. } => {
                let (atom, p) = self.bernoulli_atom();
                if rng.gen_bool(p) {
                    atom
                } else {
                    0.0
                }
            }
            Self::Pareto { shape, scale } => ParetoDist::new(scale, shape)
                .expect("validated pareto")
                .sample(rng),
            Self::Gaussian { mean, std } => {
                if std == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std)
                        .expect("validated gaussian")
                        .sample(rng)
                }
            }
        }
    }

    /// `E|X|^p`. Exact for centered or two-point laws; shifted stable and
    /// Gaussian laws report the Minkowski bound. `None` when infinite.
    pub fn raw_moment(&self, p: f64) -> Option<f64> {
        match *self {
            Self::AlphaStable {
                alpha,
                scale,
                location,
            } => {
                let centered = scale.powf(p) * stable_abs_moment(alpha, p)?;
                if location == 0.0 {
                    Some(centered)
                } else {
                    // Minkowski upper bound; the exact value has no closed form
                    Some((location.abs() + centered.powf(1.0 / p)).powf(p))
                }
            }
            Self::ScaledBernoulli { .. } => {
                let (atom, prob) = self.bernoulli_atom();
                Some(prob * atom.powf(p))
            }
            Self::Pareto { shape, scale } => {
                (p < shape).then(|| shape * scale.powf(p) / (shape - p))
            }
            Self::Gaussian { mean, std } => {
                if mean == 0.0 || std == 0.0 {
                    Some(if std == 0.0 {
                        mean.abs().powf(p)
                    } else {
                        std.powf(p) * gaussian_abs_moment(p)
                    })
                } else {
                    Some((mean.abs() + std * gaussian_abs_moment(p).powf(1.0 / p)).powf(p))
                }
            }
        }
    }

    /// `E|X - mean|^p`, `None` when infinite.
    pub fn centered_moment(&self, p: f64) -> Option<f64> {
        match *self {
            Self::AlphaStable { alpha, scale, .. } => {
                Some(scale.powf(p) * stable_abs_moment(alpha, p)?)
            }
            Self::ScaledBernoulli { .. } => {
                let (atom, prob) = self.bernoulli_atom();
                let mu = atom * prob;
                Some(prob * (atom - mu).powf(p) + (1.0 - prob) * mu.powf(p))
            }
            Self::Pareto { shape, scale } => {
                if p >= shape {
                    return None;
                }
                let mu = self.mean();
                // E|X - mu|^p = int_scale^inf |x - mu|^p shape scale^shape x^-(shape+1) dx
                let density = |x: f64| shape * scale.powf(shape) * x.powf(-(shape + 1.0));
                let below = adaptive_simpson(|x| (mu - x).powf(p) * density(x), scale, mu, 1e-12);
                // x = mu w^(-1/q) maps (mu, inf) onto (0, 1) with a bounded integrand
                let q = shape - p;
                let limit = shape * scale.powf(shape) * mu.powf(-q) / q;
                let above = adaptive_simpson(
                    |w| {
                        if w < 1e-300 {
                            return limit;
                        }
                        let x = mu * w.powf(-1.0 / q);
                        (x - mu).powf(p) * density(x) * (mu / q) * w.powf(-1.0 / q - 1.0)
                    },
                    0.0,
                    1.0,
                    1e-12,
                );
                Some(below + above)
            }
            Self::Gaussian { std, .. } => Some(if std == 0.0 {
                0.0
            } else {
                std.powf(p) * gaussian_abs_moment(p)
            }),
        }
    }
}

// E|Z|^p for Z ~ N(0, 1)
fn gaussian_abs_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt()
}

/// Chambers-Mallows-Stuck draw from the unit symmetric stable law.
pub fn standard_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return std::f64::consts::SQRT_2 * z;
    }
    let v = PI * (rng.gen::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return v.tan();
    }
    let lead = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let tail = ((1.0 - alpha) * v).cos() / w;
    lead * tail.powf((1.0 - alpha) / alpha)
}

/// `E|Z|^p` for the unit symmetric stable law with index `alpha`, `p < alpha`,
/// from the characteristic-function representation
/// `E|Z|^p = (2/pi) Gamma(p+1) sin(p pi/2) int_0^inf (1 - e^{-t^alpha}) t^{-p-1} dt`.
pub fn stable_abs_moment(alpha: f64, p: f64) -> Option<f64> {
    if !(p > 0.0 && p < alpha && p < 2.0) {
        return None;
    }
    let gap = alpha - p;
    // on (0, 1] substitute t = x^(1/gap): integrand becomes (1 - e^{-s}) / s / gap with s = t^alpha
    let head = adaptive_simpson(
        |x| {
            if x <= 0.0 {
                return 1.0 / gap;
            }
            let s = x.powf(alpha / gap);
            if s < 1e-300 {
                return 1.0 / gap;
            }
            -(-s).exp_m1() / s / gap
        },
        0.0,
        1.0,
        1e-13,
    );
    // on [1, inf) substitute t = 1/y
    let tail = adaptive_simpson(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            -(-y.powf(-alpha)).exp_m1() * y.powf(p - 1.0)
        },
        0.0,
        1.0,
        1e-13,
    );
    let prefactor = 2.0 / PI * gamma(p + 1.0) * (p * FRAC_PI_2).sin();
    Some(prefactor * (head + tail))
}

// Lanczos approximation, |rel err| < 1e-14 on the positive axis.
pub(crate) fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// A K-armed problem with its moment bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    pub arms: Vec<RewardDistribution>,
    /// Moment order is `1 + eps`.
    pub eps: f64,
    /// Bound on `E|X|^{1+eps}` over all arms.
    pub u: f64,
    /// Bound on `E|X - mu|^{1+eps}` over all arms.
    pub v: f64,
    pub means: Vec<f64>,
    pub optimal_arm: usize,
    pub gaps: Vec<f64>,
}

impl BanditInstance {
    pub fn new(
        arms: Vec<RewardDistribution>,
        eps: f64,
        u: f64,
        v: f64,
    ) -> Result<Self, RewardError> {
        if arms.is_empty() {
            return Err(RewardError::NoArms);
        }
        for arm in &arms {
            arm.validate()?;
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(RewardError::InvalidParameter(format!(
                "eps must lie in (0, 1], got {eps}"
            )));
        }
        if !(u > 0.0 && v > 0.0) {
            return Err(RewardError::InvalidParameter(format!(
                "moment bounds must be positive, got u={u}, v={v}"
            )));
        }
        let means: Vec<f64> = arms.iter().map(RewardDistribution::mean).collect();
        let mut optimal_arm = 0;
        for (k, &m) in means.iter().enumerate() {
            if m > means[optimal_arm] {
                optimal_arm = k;
            }
        }
        let best = means[optimal_arm];
        let gaps = means.iter().map(|&m| best - m).collect();
        Ok(Self {
            arms,
            eps,
            u,
            v,
            means,
            optimal_arm,
            gaps,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Scaled-Bernoulli instance: arm 0 has mean `2 gap`, the others mean `gap`,
/// and every arm has `E|X|^{1+eps} <= 1`.
pub fn make_hard_instance(k: usize, gap: f64, eps: f64) -> Result<BanditInstance, RewardError> {
    if k < 2 {
        return Err(RewardError::InvalidParameter(format!(
            "need K >= 2, got {k}"
        )));
    }
    let arms: Vec<_> = (0..k)
        .map(|i| RewardDistribution::ScaledBernoulli {
            gap,
            tail: eps,
            optimal: i == 0,
        })
        .collect();
    for arm in &arms {
        arm.validate()?;
    }
    let p = 1.0 + eps;
    let v = arms
        .iter()
        .map(|a| a.centered_moment(p).expect("two-point law"))
        .fold(0.0, f64::max);
    BanditInstance::new(arms, eps, 1.0, v)
}

/// Moment order used for stable arms: `min(1, 0.9 (alpha - 1))`.
pub fn stable_eps(alpha: f64) -> f64 {
    (0.9 * (alpha - 1.0)).min(1.0)
}

const MOMENT_SLACK: f64 = 1.1;

/// `k` unit-scale symmetric stable arms with locations drawn from `[0, 1]`.
pub fn make_stable_instance<R: Rng + ?Sized>(
    k: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<BanditInstance, RewardError> {
    if k < 1 {
        return Err(RewardError::NoArms);
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(RewardError::InvalidParameter(format!(
            "stable alpha must lie in (1, 2], got {alpha}"
        )));
    }
    let arms: Vec<_> = (0..k)
        .map(|_| RewardDistribution::AlphaStable {
            alpha,
            scale: 1.0,
            location: rng.gen::<f64>(),
        })
        .collect();
    let eps = stable_eps(alpha);
    moment_bounded_instance(arms, eps)
}

/// Gaussian arms with means drawn from `[0, 1]`; finite variance so `eps = 1`.
pub fn make_gaussian_instance<R: Rng + ?Sized>(
    k: usize,
    std: f64,
    rng: &mut R,
) -> Result<BanditInstance, RewardError> {
    if !(std > 0.0) {
        return Err(RewardError::InvalidParameter(format!(
            "std must be positive, got {std}"
        )));
    }
    let arms = (0..k)
        .map(|_| RewardDistribution::Gaussian {
            mean: rng.gen::<f64>(),
            std,
        })
        .collect();
    moment_bounded_instance(arms, 1.0)
}

fn moment_bounded_instance(
    arms: Vec<RewardDistribution>,
    eps: f64,
) -> Result<BanditInstance, RewardError> {
    let p = 1.0 + eps;
    let mut u: f64 = 0.0;
    let mut v: f64 = 0.0;
    for arm in &arms {
        arm.validate()?;
        let raw = arm.raw_moment(p).ok_or_else(|| {
            RewardError::InvalidParameter(format!("infinite {p}-th moment for {arm:?}"))
        })?;
        let centered = arm.centered_moment(p).expect("finite when raw moment is");
        u = u.max(raw);
        v = v.max(centered);
    }
    BanditInstance::new(arms, eps, u * MOMENT_SLACK, v * MOMENT_SLACK)
}

/// `sum_{k: gap_k > 0} 2^{1 - 1/eps} gap_k^{-1/eps} ln T`.
pub fn lower_bound_reference(instance: &BanditInstance, eps: f64, horizon: f64) -> f64 {
    let scale = 2f64.powf(1.0 - 1.0 / eps);
    instance
        .gaps
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| scale * g.powf(-1.0 / eps))
        .sum::<f64>()
        * horizon.ln()
}

/// Independent generator for the reward drawn by `agent` pulling `arm` at
/// `round`. Two runs facing the same decision see the same reward.
pub fn reward_rng(seed: u64, agent: usize, round: usize, arm: usize) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for part in [agent as u64, round as u64, arm as u64] {
        h = splitmix64(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
