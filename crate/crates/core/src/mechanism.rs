//! The Poisson mechanism M(g) ~ P(N₂·e^{N₁g}): calibration, release,
//! guarantee verification and the thinning/superposition orderings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{poisson_inverse_cdf, poisson_truncation, DiscreteDist, Kernel};
use crate::error::{domain, Error, Result};
use crate::neyman::{curve, ExperimentPair};
use crate::numerics::Numerics;
use crate::tofcurve::{min_gap, sup_distance, TradeoffCurve};

/// Slack below which an ordering counts as violated.
pub const SLACK_TOLERANCE: f64 = 1e-8;
const ORDERING_GRID: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatRange {
    pub g_min: f64,
    pub g_max: f64,
    /// Sensitivity w_g(1).
    pub w_g: f64,
}

impl StatRange {
    pub fn new(g_min: f64, g_max: f64, w_g: f64) -> Result<Self> {
        let r = Self { g_min, g_max, w_g };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_g.is_finite() && self.w_g > 0.0) {
            return domain(format!("sensitivity must be positive, got {}", self.w_g));
        }
        if self.g_min.is_nan() || self.g_max.is_nan() || self.g_max < self.g_min {
            return domain(format!("invalid range [{}, {}]", self.g_min, self.g_max));
        }
        if self.is_bounded() && self.w_g > self.g_max - self.g_min {
            return domain(format!(
                "sensitivity {} exceeds the range width {}",
                self.w_g,
                self.g_max - self.g_min
            ));
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        self.g_min.is_finite() && self.g_max.is_finite()
    }

    /// Every pair of integers in the range at distance at most w_g.
    pub fn integer_neighbors(&self) -> Result<Vec<(f64, f64)>> {
        if !self.is_bounded() {
            return Err(Error::Calibration("neighbor grid needs a bounded range".into()));
        }
        let lo = self.g_min.ceil() as i64;
        let hi = self.g_max.floor() as i64;
        let reach = self.w_g.floor() as i64;
        Ok((lo..=hi)
            .flat_map(|a| ((a - reach).max(lo)..=(a + reach).min(hi)).map(move |b| (a as f64, b as f64)))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonMechanismParams {
    pub mu1: f64,
    pub mu2: f64,
    pub w_g: f64,
    pub w_hg: f64,
    pub n1: f64,
    pub n2: f64,
}

impl PoissonMechanismParams {
    pub fn validate(&self) -> Result<()> {
        check_mus(self.mu1, self.mu2)?;
        if !(self.w_g > 0.0 && self.w_hg > 0.0 && self.n1 > 0.0 && self.n2 > 0.0) {
            return domain("w_g, w_hg, N₁ and N₂ must be positive");
        }
        Ok(())
    }

    /// h(y) = (μ₂/μ₁)^{y/w_g} = e^{N₁y}.
    pub fn h(&self, y: f64) -> f64 {
        h(self.mu1, self.mu2, self.w_g, y)
    }

    /// λ(y) = N₂·h(y).
    pub fn intensity(&self, y: f64) -> f64 {
        self.n2 * self.h(y)
    }
}

fn h(mu1: f64, mu2: f64, w_g: f64, y: f64) -> f64 {
    (mu2 / mu1).powf(y / w_g)
}

fn check_mus(mu1: f64, mu2: f64) -> Result<()> {
    if !(mu1.is_finite() && mu2.is_finite() && mu1 > 0.0) {
        return domain(format!("intensities must be finite and positive, got ({mu1}, {mu2})"));
    }
    if mu1 >= mu2 {
        return Err(Error::Ordering(format!("need mu2 > mu1, got mu1 = {mu1}, mu2 = {mu2}")));
    }
    Ok(())
}

/// Parameters for a bounded range, with w_hg = h(g_max) − h(g_max − w_g).
pub fn calibrate(mu1: f64, mu2: f64, range: &StatRange) -> Result<PoissonMechanismParams> {
    check_mus(mu1, mu2)?;
    range.validate()?;
    if !range.is_bounded() {
        return Err(Error::Calibration(
            "w_hg is unbounded on an unbounded range; supply it with calibrate_with_w_hg".into(),
        ));
    }
    let w_hg = h(mu1, mu2, range.w_g, range.g_max) - h(mu1, mu2, range.w_g, range.g_max - range.w_g);
    calibrate_with_w_hg(mu1, mu2, range.w_g, w_hg)
}

pub fn calibrate_with_w_hg(mu1: f64, mu2: f64, w_g: f64, w_hg: f64) -> Result<PoissonMechanismParams> {
    check_mus(mu1, mu2)?;
    if !(w_g.is_finite() && w_g > 0.0 && w_hg.is_finite() && w_hg > 0.0) {
        return Err(Error::Calibration(format!("need finite positive w_g and w_hg, got ({w_g}, {w_hg})")));
    }
    let params = PoissonMechanismParams {
        mu1,
        mu2,
        w_g,
        w_hg,
        n1: (mu2 / mu1).ln() / w_g,
        n2: (mu2 - mu1) / w_hg,
    };
    params.validate()?;
    Ok(params)
}

fn release_intensity(params: &PoissonMechanismParams, g_value: f64) -> Result<f64> {
    params.validate()?;
    let lambda = params.intensity(g_value);
    if !lambda.is_finite() || lambda > 1e12 {
        return Err(Error::Range(format!("intensity {lambda} at g = {g_value} is too large")));
    }
    Ok(lambda)
}

/// One draw from P(λ(g)) by inverse CDF on a uniform seeded by `seed`.
pub fn release(params: &PoissonMechanismParams, g_value: f64, seed: u64) -> Result<u64> {
    let lambda = release_intensity(params, g_value)?;
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
    Ok(poisson_inverse_cdf(lambda, u))
}

/// `count` draws from one seeded stream.
pub fn release_batch(params: &PoissonMechanismParams, g_value: f64, seed: u64, count: usize) -> Result<Vec<u64>> {
    let lambda = release_intensity(params, g_value)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| poisson_inverse_cdf(lambda, rng.random())).collect())
}

fn poisson_curve(a: f64, b: f64) -> Result<TradeoffCurve> {
    if a == b {
        return Ok(TradeoffCurve::identity());
    }
    curve(&ExperimentPair::poisson(a, b)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// g₂ ≥ g₁, compared against f∞.
    Baseline,
    /// g₂ < g₁, compared against f∞⁻¹.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pair: (f64, f64),
    pub min_slack_alpha: f64,
    pub min_slack: f64,
    pub direction: Direction,
    /// Whether the intensities satisfy the gap and ratio conditions.
    pub within_hypotheses: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub pairs: Vec<PairCheck>,
    pub min_slack: f64,
    /// min(f∞, f∞⁻¹)**.
    pub symmetric_guarantee: TradeoffCurve,
}

impl VerificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pairs": self.pairs,
            "min_slack": self.min_slack,
            "symmetric_guarantee": self.symmetric_guarantee.metadata_json(),
        })
    }
}

/// Checks T(M(g₁), M(g₂)) against f∞ or f∞⁻¹ for every neighbor pair.
///
/// Pairs outside the sufficient conditions are reported but never fail.
pub fn verify_guarantee(params: &PoissonMechanismParams, neighbor_values: &[(f64, f64)]) -> Result<VerificationReport> {
    params.validate()?;
    for &(g1, g2) in neighbor_values {
        if (g1 - g2).abs() > params.w_g * (1.0 + 1e-12) {
            return domain(format!("pair ({g1}, {g2}) is farther apart than w_g = {}", params.w_g));
        }
    }
    let f_inf = poisson_curve(params.mu1, params.mu2)?;
    let f_inv = f_inf.inverse();
    let (dmu, ratio_mu) = (params.mu2 - params.mu1, params.mu2 / params.mu1);
    let pairs = neighbor_values
        .par_iter()
        .map(|&(g1, g2)| {
            let (l1, l2) = (params.intensity(g1), params.intensity(g2));
            let within = (l2 - l1).abs() <= dmu * (1.0 + 1e-12)
                && l1.max(l2) / l1.min(l2) <= ratio_mu * (1.0 + 1e-12);
            let (direction, base) = if g2 >= g1 { (Direction::Baseline, &f_inf) } else { (Direction::Inverse, &f_inv) };
            let actual = poisson_curve(l1, l2)?;
            let (alpha, slack) = min_gap(&actual, base, ORDERING_GRID);
            if within && slack < -SLACK_TOLERANCE {
                return Err(Error::Verification { g1, g2, alpha, slack });
            }
            Ok(PairCheck { pair: (g1, g2), min_slack_alpha: alpha, min_slack: slack, direction, within_hypotheses: within })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_slack = pairs
        .iter()
        .filter(|p| p.within_hypotheses)
        .map(|p| p.min_slack)
        .fold(f64::INFINITY, f64::min);
    Ok(VerificationReport { pairs, min_slack, symmetric_guarantee: f_inf.symmetrize() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub name: &'static str,
    pub applicable: bool,
    pub min_slack_alpha: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<OrderingCheck>,
    /// Largest sup distance between a kernel image of the pair and the
    /// directly constructed Poisson pair.
    pub kernel_realization_gap: f64,
}

/// The scaling and translation orderings of Poisson curves.
///
/// Scaling by max(c, 1/c) must not increase the curve and by min(c, 1/c) must
/// not decrease it; adding λ must not decrease it and removing λ (when both
/// intensities stay positive) must not increase it.
pub fn kernel_lemma_check(lambda1: f64, lambda2: f64, c: f64, lambda: f64) -> Result<LemmaReport> {
    if !(lambda1 > 0.0 && lambda2 > 0.0 && c > 0.0 && lambda >= 0.0)
        || !(lambda1.is_finite() && lambda2.is_finite() && c.is_finite() && lambda.is_finite())
    {
        return domain("need positive intensities and scale, nonnegative shift");
    }
    let base = poisson_curve(lambda1, lambda2)?;
    let (up, down) = (c.max(1.0 / c), c.min(1.0 / c));
    let mut checks = Vec::with_capacity(4);
    // (name, smaller curve, larger curve) with the base on one side.
    let scaled_up = poisson_curve(up * lambda1, up * lambda2)?;
    checks.push(ordering("PS1", true, &scaled_up, &base));
    let scaled_down = poisson_curve(down * lambda1, down * lambda2)?;
    checks.push(ordering("PS2", true, &base, &scaled_down));
    let added = poisson_curve(lambda1 + lambda, lambda2 + lambda)?;
    checks.push(ordering("PT1", true, &base, &added));
    if lambda1 - lambda > 0.0 && lambda2 - lambda > 0.0 {
        let removed = poisson_curve(lambda1 - lambda, lambda2 - lambda)?;
        checks.push(ordering("PT2", true, &removed, &base));
    } else {
        checks.push(OrderingCheck { name: "PT2", applicable: false, min_slack_alpha: 0.0, min_slack: 0.0 });
    }
    if let Some(bad) = checks.iter().find(|k| k.applicable && k.min_slack < -SLACK_TOLERANCE) {
        return Err(Error::LemmaCheck { name: bad.name.to_string(), alpha: bad.min_slack_alpha, slack: bad.min_slack });
    }
    let thin = Kernel::BinomialThin { c: down };
    let superpose = Kernel::PoissonSuperpose { lambda };
    let tail = Numerics::default().poisson_tail;
    let k = poisson_truncation(lambda1.max(lambda2), tail * 1e-4)?;
    let (p1, p2) = (DiscreteDist::poisson_on_range(lambda1, k, 0.0)?, DiscreteDist::poisson_on_range(lambda2, k, 0.0)?);
    let thinned = curve(&ExperimentPair::discrete(p1.apply_kernel(&thin)?, p2.apply_kernel(&thin)?))?;
    let mut gap = sup_distance(&thinned, &scaled_down);
    if lambda > 0.0 {
        let shifted = curve(&ExperimentPair::discrete(p1.apply_kernel(&superpose)?, p2.apply_kernel(&superpose)?))?;
        gap = gap.max(sup_distance(&shifted, &added));
    }
    Ok(LemmaReport { checks, kernel_realization_gap: gap })
}

fn ordering(name: &'static str, applicable: bool, lower: &TradeoffCurve, upper: &TradeoffCurve) -> OrderingCheck {
    let (alpha, slack) = min_gap(upper, lower, ORDERING_GRID);
    OrderingCheck { name, applicable, min_slack_alpha: alpha, min_slack: slack }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tofcurve::{compare, BlackwellOrder};

    #[test]
    fn tight_calibration() {
        let p = calibrate(1.0, 3.0, &StatRange::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.n1, 3f64.ln());
        assert_eq!(p.w_hg, 2.0);
        assert_eq!(p.n2, 1.0);
        assert_eq!(p.intensity(0.0), 1.0);
        assert_eq!(p.intensity(1.0), 3.0);
    }

    #[test]
    fn calibration_errors() {
        let r = StatRange::new(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(calibrate(2.0, 2.0, &r), Err(Error::Ordering(_))));
        let open = StatRange::new(0.0, f64::INFINITY, 1.0).unwrap();
        assert!(matches!(calibrate(1.0, 3.0, &open), Err(Error::Calibration(_))));
    }

    #[test]
    fn scaling_invariance() {
        let a = calibrate(1.0, 3.0, &StatRange::new(0.0, 4.0, 1.0).unwrap()).unwrap();
        let b = calibrate(1.0, 3.0, &StatRange::new(0.0, 8.0, 2.0).unwrap()).unwrap();
        for g in 0..=4 {
            let g = f64::from(g);
            assert!((a.intensity(g) - b.intensity(2.0 * g)).abs() <= 1e-12 * a.intensity(g));
        }
    }

    #[test]
    fn release_is_deterministic() {
        let p = calibrate(1.0, 3.0, &StatRange::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(release(&p, 1.0, 7).unwrap(), release(&p, 1.0, 7).unwrap());
        assert_eq!(release_batch(&p, 0.5, 3, 50).unwrap(), release_batch(&p, 0.5, 3, 50).unwrap());
    }

    #[test]
    fn tight_pair_verifies_with_zero_slack() {
        let p = calibrate(1.0, 3.0, &StatRange::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        let r = verify_guarantee(&p, &[(0.0, 1.0), (1.0, 0.0), (0.0, 0.0)]).unwrap();
        assert!(r.pairs[0].min_slack.abs() <= 1e-8);
        assert!(r.min_slack >= -1e-8);
        assert!(r.symmetric_guarantee.is_symmetric());
    }

    #[test]
    fn poisson_curves_are_incomparable() {
        let a = poisson_curve(2.0, 4.0).unwrap();
        let b = poisson_curve(4.0, 2.0).unwrap();
        assert_eq!(compare(&a, &b, 1e-8), BlackwellOrder::Incomparable);
    }

    #[test]
    fn lemma_examples() {
        let r = kernel_lemma_check(1.0, 3.0, 0.5, 1.0).unwrap();
        assert!(r.checks.iter().all(|c| !c.applicable || c.min_slack >= -1e-8));
        assert!(r.kernel_realization_gap < 1e-9, "{}", r.kernel_realization_gap);
        let same = kernel_lemma_check(1.0, 3.0, 1.0, 0.0).unwrap();
        assert!(same.checks.iter().filter(|c| c.applicable).all(|c| c.min_slack.abs() < 1e-15));
    }
}
