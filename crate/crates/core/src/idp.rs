//! Infinitely divisible limit curves, Gaussian mixture experiments and the
//! random-stopping simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::{convolve, power};
use crate::error::{domain, Error, Result};
use crate::neyman::{gaussian_llr_table, ExperimentPair, LikelihoodTable};
use crate::numerics::Numerics;
use crate::special::{norm_cdf, norm_sf};
use crate::tofcurve::{levy_distance, sup_distance, uniform_grid, BayesRisk, Point, TradeoffCurve};

/// A member of the class ℐ_T: a Gaussian part with mean −k and variance 2k
/// plus independent affine Poisson parts λ₁ − λ₂ + log(λ₂/λ₁)·P(λ₁).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdpSpec {
    #[serde(default)]
    pub gaussian_k: f64,
    #[serde(default)]
    pub poisson: Vec<(f64, f64)>,
}

impl IdpSpec {
    pub fn gaussian(k: f64) -> Result<Self> {
        let s = Self { gaussian_k: k, poisson: Vec::new() };
        s.validate()?;
        Ok(s)
    }

    pub fn poisson(lambda1: f64, lambda2: f64) -> Result<Self> {
        let s = Self { gaussian_k: 0.0, poisson: vec![(lambda1, lambda2)] };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_k.is_finite() && self.gaussian_k >= 0.0) {
            return Err(Error::Spec(format!("gaussian k must be finite and >= 0, got {}", self.gaussian_k)));
        }
        for &(a, b) in &self.poisson {
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                return Err(Error::Spec(format!("poisson intensities must be positive, got ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// The spec of the tensor product; Poisson parts with equal ratio merge.
    pub fn combine(&self, other: &Self) -> Self {
        let mut poisson: Vec<(f64, f64)> = Vec::new();
        for &(a, b) in self.poisson.iter().chain(&other.poisson) {
            match poisson.iter_mut().find(|(x, y)| ((b / a) / (*y / *x) - 1.0).abs() < 1e-12) {
                Some(slot) => {
                    slot.0 += a;
                    slot.1 += b;
                }
                None => poisson.push((a, b)),
            }
        }
        Self { gaussian_k: self.gaussian_k + other.gaussian_k, poisson }
    }

    /// The n-th root in the convolution sense.
    pub fn divide(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return domain("divisor must be at least 1");
        }
        let n = f64::from(n);
        Ok(Self {
            gaussian_k: self.gaussian_k / n,
            poisson: self.poisson.iter().map(|&(a, b)| (a / n, b / n)).collect(),
        })
    }
}

pub fn idp_curve(spec: &IdpSpec) -> Result<TradeoffCurve> {
    idp_curve_with(spec, &Numerics::default())
}

pub fn idp_curve_with(spec: &IdpSpec, numerics: &Numerics) -> Result<TradeoffCurve> {
    Ok(idp_table(spec, numerics)?.curve())
}

/// The pair (P∞, e^x·P∞) discretized and convolved from its parts.
pub fn idp_table(spec: &IdpSpec, numerics: &Numerics) -> Result<LikelihoodTable> {
    spec.validate()?;
    let mut table = if spec.gaussian_k > 0.0 {
        gaussian_llr_table(&[(1.0, spec.gaussian_k)], numerics)
    } else {
        LikelihoodTable::trivial()
    };
    for &(a, b) in &spec.poisson {
        let part = ExperimentPair::poisson_with(a, b, numerics)?.to_table_with(numerics)?;
        table = convolve(&table, &part, numerics);
    }
    let z = table.tilt_normalizer() + table.deficit();
    if (z - 1.0).abs() > 1e-6 {
        return Err(Error::Spec(format!("tilt normalizer {z} differs from 1")));
    }
    Ok(table)
}

/// idp_curve(s/n) composed n times.
pub fn idp_power(spec: &IdpSpec, n: u32, numerics: &Numerics) -> Result<TradeoffCurve> {
    let root = idp_table(&spec.divide(n)?, numerics)?;
    Ok(power(&root, u64::from(n), numerics).curve())
}

/// Gaussian mixture experiment: weight λᵢ on G_{σ√tᵢ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub components: Vec<(f64, f64)>,
    pub sigma: f64,
}

impl MixtureSpec {
    /// Adjacent components with equal times are merged.
    pub fn new(components: Vec<(f64, f64)>, sigma: f64) -> Result<Self> {
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(components.len());
        for (w, t) in components {
            match merged.last_mut() {
                Some(last) if last.1 == t => last.0 += w,
                _ => merged.push((w, t)),
            }
        }
        let s = Self { components: merged, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Spec("mixture needs at least one component".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Spec(format!("sigma must be positive, got {}", self.sigma)));
        }
        let total: f64 = self.components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Spec(format!("weights sum to {total}, not 1")));
        }
        if self.components.iter().any(|&(w, t)| !(w >= 0.0 && t.is_finite() && t > 0.0)) {
            return Err(Error::Spec("weights must be >= 0 and times > 0".into()));
        }
        if self.components.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err(Error::Spec("times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// (λᵢ, μᵢ) with μᵢ = σ√tᵢ.
    fn shifts(&self) -> Vec<(f64, f64)> {
        self.components.iter().map(|&(w, t)| (w, self.sigma * t.sqrt())).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCurve {
    /// The waterfilling solution.
    pub curve: TradeoffCurve,
    /// Sup gap between the waterfilling and direct Neyman–Pearson solvers.
    pub cross_check_gap: f64,
}

/// (α, β) of the slope-τ allocation, indexed by ln τ.
fn allocation(shifts: &[(f64, f64)], ln_tau: f64) -> Point {
    shifts.iter().fold((0.0, 0.0), |(a, b), &(w, mu)| {
        if mu == 0.0 {
            let reject = if ln_tau < 0.0 { 1.0 } else { 0.0 };
            return (a + w * reject, b + w * (1.0 - reject));
        }
        let z = (ln_tau + 0.5 * mu * mu) / mu;
        (a + w * norm_sf(z), b + w * norm_cdf(z - mu))
    })
}

/// Equal-slope allocation at total type-I error α.
fn waterfill(shifts: &[(f64, f64)], alpha: f64, tol: f64) -> Point {
    let (mut lo, mut hi) = (-1.0, 1.0);
    while allocation(shifts, lo).0 < alpha {
        lo *= 2.0;
    }
    while allocation(shifts, hi).0 > alpha {
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if allocation(shifts, mid).0 > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    allocation(shifts, 0.5 * (lo + hi))
}

pub fn mixture_curve(spec: &MixtureSpec) -> Result<MixtureCurve> {
    mixture_curve_with(spec, &Numerics::default())
}

pub fn mixture_curve_with(spec: &MixtureSpec, numerics: &Numerics) -> Result<MixtureCurve> {
    spec.validate()?;
    let shifts = spec.shifts();
    let tol = numerics.waterfill_tolerance;

    let direct = mixture_direct(spec, numerics);

    let alphas = uniform_grid(numerics.grid_step);
    let inner = &alphas[1..alphas.len() - 1];
    let filled: Vec<Point> = inner.par_iter().map(|&a| waterfill(&shifts, a, tol)).collect();
    let cross_check_gap = filled
        .iter()
        .map(|&(a, b)| (b - direct.value(a)).abs())
        .fold(0.0, f64::max);
    if cross_check_gap > 1e-4 {
        return Err(Error::NumericalConsistency { gap: cross_check_gap, tolerance: 1e-4 });
    }

    let mut points = filled;
    for l in uniform_grid(numerics.grid_step) {
        if l > 0.0 && l < 1.0 {
            points.push(allocation(&shifts, ((1.0 - l) / l).ln()));
        }
    }
    for e in 1..=300 {
        let t = f64::from(e) * 0.25;
        points.push(allocation(&shifts, t));
        points.push(allocation(&shifts, -t));
    }
    points.push((0.0, 1.0));
    points.push((1.0, 0.0));
    let curve = TradeoffCurve::from_hull(points);
    Ok(MixtureCurve { curve, cross_check_gap })
}

/// Neyman–Pearson curve of the discretized mixture LLR law.
pub fn mixture_direct(spec: &MixtureSpec, numerics: &Numerics) -> TradeoffCurve {
    let parts: Vec<(f64, f64)> = spec.shifts().iter().map(|&(w, mu)| (w, 0.5 * mu * mu)).collect();
    gaussian_llr_table(&parts, numerics).curve()
}

/// Best approximation of a curve by G_μ in sup distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    /// Gaussian-only ℐ_T parameter k = μ²/2.
    pub k: f64,
    pub sup_distance: f64,
}

/// Golden-section search for the G_μ closest to `f`, μ ∈ [lo, hi].
pub fn gaussian_fit(f: &TradeoffCurve, lo: f64, hi: f64) -> Result<GaussianFit> {
    let dist = |mu: f64| -> Result<f64> { Ok(sup_distance(&TradeoffCurve::gaussian(mu)?, f)) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (dist(c)?, dist(d)?);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = dist(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = dist(d)?;
        }
    }
    let mu = 0.5 * (a + b);
    Ok(GaussianFit { mu, k: 0.5 * mu * mu, sup_distance: dist(mu)? })
}

/// Gaussian fit over the range of the component shifts.
pub fn mixture_gaussian_fit(spec: &MixtureSpec, mixture: &TradeoffCurve) -> Result<GaussianFit> {
    let shifts = spec.shifts();
    let lo = shifts.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = shifts.iter().map(|s| s.1).fold(0.0, f64::max);
    gaussian_fit(mixture, 0.5 * lo, hi + 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub levy_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    pub n: u64,
    pub draws_per_seed: usize,
    pub replicates: Vec<ReplicateResult>,
    /// Lévy distance of the curve pooled over all replicates.
    pub levy_distance: f64,
}

/// Counts of each stopped composition length N = round(n·T).
fn stopped_counts(spec: &MixtureSpec, n: u64, seed: u64, draws: usize) -> Vec<(u64, usize)> {
    let mut cdf = Vec::with_capacity(spec.components.len());
    let mut acc = 0.0;
    for &(w, _) in &spec.components {
        acc += w;
        cdf.push(acc);
    }
    let mut counts = vec![0usize; spec.components.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let u: f64 = rng.random();
        let i = cdf.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[i] += 1;
    }
    spec.components
        .iter()
        .zip(counts)
        .map(|(&(_, t), c)| ((n as f64 * t).round() as u64, c))
        .collect()
}

/// Empirical mixture of G_{σ√(N/n)} over the drawn lengths, via Bayes risks.
fn stopped_curve(sigma: f64, n: u64, counts: &[(u64, usize)], numerics: &Numerics) -> Result<TradeoffCurve> {
    let total: usize = counts.iter().map(|c| c.1).sum();
    let risks: Vec<(f64, BayesRisk)> = counts
        .iter()
        .filter(|c| c.1 > 0)
        .map(|&(len, c)| {
            let composed = TradeoffCurve::gaussian(sigma * (len as f64 / n as f64).sqrt())?;
            Ok((c as f64 / total as f64, composed.to_bayes_risk_with(numerics)))
        })
        .collect::<Result<_>>()?;
    let parts: Vec<(f64, &BayesRisk)> = risks.iter().map(|(w, b)| (*w, b)).collect();
    Ok(BayesRisk::mix(&parts)?.to_curve())
}

pub fn random_stopping_sim(spec: &MixtureSpec, n: u64, seeds: &[u64], draws: usize) -> Result<StoppingReport> {
    spec.validate()?;
    if n < 50 {
        return domain(format!("n must be at least 50, got {n}"));
    }
    if seeds.is_empty() || draws == 0 {
        return domain("need at least one seed and one draw");
    }
    let numerics = Numerics::default();
    let target = mixture_curve_with(spec, &numerics)?.curve;
    let per_seed: Vec<Vec<(u64, usize)>> =
        seeds.par_iter().map(|&s| stopped_counts(spec, n, s, draws)).collect();
    let replicates = seeds
        .par_iter()
        .zip(&per_seed)
        .map(|(&seed, counts)| {
            let c = stopped_curve(spec.sigma, n, counts, &numerics)?;
            Ok(ReplicateResult { seed, levy_distance: levy_distance(&c, &target) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled: Vec<(u64, usize)> = per_seed[0].iter().map(|&(len, _)| (len, 0)).collect();
    for counts in &per_seed {
        for (slot, &(_, c)) in pooled.iter_mut().zip(counts) {
            slot.1 += c;
        }
    }
    let pooled_curve = stopped_curve(spec.sigma, n, &pooled, &numerics)?;
    Ok(StoppingReport {
        n,
        draws_per_seed: draws,
        replicates,
        levy_distance: levy_distance(&pooled_curve, &target),
    })
}
