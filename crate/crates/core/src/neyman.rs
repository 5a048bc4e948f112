//! Neyman–Pearson curves of experiment pairs, log-likelihood-ratio tables and
//! moment functionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{poisson_truncation, DiscreteDist, ShiftFamily, ShiftKind};
use crate::error::{domain, Error, Result};
use crate::numerics::Numerics;
use crate::special::norm_cdf_diff;
use crate::tofcurve::{sup_distance, CurveForm, CurveMeta, TradeoffCurve};

/// One group of outcomes sharing a log-likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrAtom {
    pub llr: f64,
    pub p: f64,
    pub q: f64,
}

/// A binary experiment reduced to its likelihood-ratio groups.
///
/// Finite atoms are sorted by increasing `llr`; mass where one side vanishes
/// is kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    pub(crate) atoms: Vec<LlrAtom>,
    /// Q-mass where P vanishes (llr = +∞).
    pub(crate) q_only: f64,
    /// P-mass where Q vanishes (llr = −∞).
    pub(crate) p_only: f64,
    pub(crate) coarsening_error: f64,
    pub(crate) deficit: f64,
}

impl LikelihoodTable {
    /// Point mass at llr 0: the uninformative experiment.
    pub fn trivial() -> Self {
        Self {
            atoms: vec![LlrAtom { llr: 0.0, p: 1.0, q: 1.0 }],
            q_only: 0.0,
            p_only: 0.0,
            coarsening_error: 0.0,
            deficit: 0.0,
        }
    }

    /// Groups outcome masses `(p, q)` by log ratio.
    pub fn from_masses(masses: impl IntoIterator<Item = (f64, f64)>, merge_tolerance: f64) -> Self {
        let mut atoms = Vec::new();
        let (mut q_only, mut p_only) = (0.0, 0.0);
        for (p, q) in masses {
            match (p > 0.0, q > 0.0) {
                (true, true) => atoms.push(LlrAtom { llr: (q / p).ln(), p, q }),
                (true, false) => p_only += p,
                (false, true) => q_only += q,
                (false, false) => {}
            }
        }
        Self::assemble(atoms, q_only, p_only, merge_tolerance)
    }

    pub(crate) fn assemble(
        mut atoms: Vec<LlrAtom>,
        q_only: f64,
        p_only: f64,
        merge_tolerance: f64,
    ) -> Self {
        atoms.sort_by(|a, b| a.llr.total_cmp(&b.llr));
        let mut merged: Vec<LlrAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.llr - last.llr <= merge_tolerance => {
                    last.p += a.p;
                    last.q += a.q;
                    last.llr = (last.q / last.p).ln();
                }
                _ => merged.push(a),
            }
        }
        Self {
            atoms: merged,
            q_only,
            p_only,
            coarsening_error: 0.0,
            deficit: 0.0,
        }
    }

    pub fn atoms(&self) -> &[LlrAtom] {
        &self.atoms
    }

    pub fn q_only(&self) -> f64 {
        self.q_only
    }

    pub fn p_only(&self) -> f64 {
        self.p_only
    }

    /// Sup-norm bound on the curve error introduced by lumping atoms.
    pub fn coarsening_error(&self) -> f64 {
        self.coarsening_error
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn p_total(&self) -> f64 {
        self.atoms.iter().map(|a| a.p).sum::<f64>() + self.p_only
    }

    pub fn q_total(&self) -> f64 {
        self.atoms.iter().map(|a| a.q).sum::<f64>() + self.q_only
    }

    /// Σ e^L·p over the finite atoms.
    pub fn tilt_normalizer(&self) -> f64 {
        self.atoms.iter().map(|a| a.llr.exp() * a.p).sum()
    }

    /// The experiment with the hypotheses exchanged.
    pub fn swapped(&self) -> Self {
        let mut atoms: Vec<LlrAtom> = self
            .atoms
            .iter()
            .rev()
            .map(|a| LlrAtom { llr: -a.llr, p: a.q, q: a.p })
            .collect();
        atoms.shrink_to_fit();
        Self {
            atoms,
            q_only: self.p_only,
            p_only: self.q_only,
            coarsening_error: self.coarsening_error,
            deficit: self.deficit,
        }
    }

    /// Neyman–Pearson curve: reject the largest ratios first.
    ///
    /// Type-II errors are suffix sums of Q so that tiny values keep their
    /// relative accuracy.
    pub fn curve(&self) -> TradeoffCurve {
        let n = self.atoms.len();
        let mut suffix = vec![0.0; n + 1];
        for i in 0..n {
            suffix[i + 1] = suffix[i] + self.atoms[i].q;
        }
        let mut pts = Vec::with_capacity(n + 3);
        let mut alpha = 0.0;
        pts.push((0.0, suffix[n]));
        for i in (0..n).rev() {
            alpha += self.atoms[i].p;
            pts.push((alpha, suffix[i]));
        }
        pts.push((1.0, 0.0));
        let meta = CurveMeta {
            truncation_deficit: self.deficit,
            coarsening_error: self.coarsening_error,
            ..CurveMeta::default()
        };
        TradeoffCurve::from_hull(pts).with_meta(meta)
    }
}

/// A binary experiment (P, Q).
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentPair {
    /// Distributions on a shared label set; a label missing on one side has mass zero there.
    Discrete { p: DiscreteDist, q: DiscreteDist },
    /// P = family, Q = family shifted by `mu`.
    Shift { family: ShiftFamily, mu: f64 },
    /// N(0,1) against N(μ,1).
    AnalyticGaussian { mu: f64 },
    /// An experiment already reduced to likelihood ratios.
    Table(LikelihoodTable),
}

impl ExperimentPair {
    pub fn discrete(p: DiscreteDist, q: DiscreteDist) -> Self {
        Self::Discrete { p, q }
    }

    pub fn bernoulli(p: f64, q: f64) -> Result<Self> {
        Ok(Self::discrete(DiscreteDist::bernoulli(p)?, DiscreteDist::bernoulli(q)?))
    }

    pub fn binomial(n: u64, p: f64, q: f64) -> Result<Self> {
        Ok(Self::discrete(DiscreteDist::binomial(n, p)?, DiscreteDist::binomial(n, q)?))
    }

    pub fn poisson(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::poisson_with(lambda1, lambda2, &Numerics::default())
    }

    /// Both pmfs on the union of their truncated supports, unpruned.
    pub fn poisson_with(lambda1: f64, lambda2: f64, numerics: &Numerics) -> Result<Self> {
        let k = poisson_truncation(lambda1, numerics.poisson_tail)?
            .max(poisson_truncation(lambda2, numerics.poisson_tail)?);
        Ok(Self::discrete(
            DiscreteDist::poisson_on_range(lambda1, k, 0.0)?,
            DiscreteDist::poisson_on_range(lambda2, k, 0.0)?,
        ))
    }

    pub fn gaussian(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return domain(format!("gaussian shift must be finite and >= 0, got {mu}"));
        }
        Ok(Self::AnalyticGaussian { mu })
    }

    pub fn shift(family: ShiftFamily, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return domain(format!("shift must be finite, got {mu}"));
        }
        Ok(Self::Shift { family, mu })
    }

    /// A pair realizing the curve: segments become atoms, the drop at zero a
    /// Q-only atom and the flat tail a P-only atom.
    pub fn from_curve(f: &TradeoffCurve) -> Result<Self> {
        match f.form() {
            CurveForm::Gaussian { mu } => Self::gaussian(*mu),
            CurveForm::Shift { kind, .. } => Err(Error::Contract(format!(
                "{kind:?} shift curves have no exact discrete realization; build the pair explicitly"
            ))),
            _ => {
                let pl = f.to_piecewise_linear(Numerics::default().grid_step);
                let p = pl.breakpoints().expect("piecewise-linear");
                let mut masses = vec![(0.0, 1.0 - p[0].1)];
                for w in p.windows(2) {
                    masses.push((w[1].0 - w[0].0, w[0].1 - w[1].1));
                }
                let mut t = LikelihoodTable::from_masses(masses, Numerics::default().merge_tolerance);
                t.deficit = f.meta().truncation_deficit;
                t.coarsening_error = f.meta().coarsening_error;
                Ok(Self::Table(t))
            }
        }
    }

    /// Hypotheses exchanged; `curve(swapped)` is the inverse curve.
    pub fn swapped(&self) -> Self {
        match self {
            Self::Discrete { p, q } => Self::Discrete { p: q.clone(), q: p.clone() },
            Self::Table(t) => Self::Table(t.swapped()),
            Self::Shift { family, mu } => Self::Shift { family: *family, mu: -mu },
            Self::AnalyticGaussian { mu } => Self::AnalyticGaussian { mu: *mu },
        }
    }

    pub fn to_table(&self) -> Result<LikelihoodTable> {
        self.to_table_with(&Numerics::default())
    }

    pub fn to_table_with(&self, numerics: &Numerics) -> Result<LikelihoodTable> {
        match self {
            Self::Discrete { p, q } => {
                let mut t = LikelihoodTable::from_masses(
                    aligned_masses(p, q, numerics.merge_tolerance),
                    numerics.merge_tolerance,
                );
                t.deficit = p.deficit().max(q.deficit());
                Ok(t)
            }
            Self::Table(t) => Ok(t.clone()),
            Self::AnalyticGaussian { mu } => {
                Ok(gaussian_llr_table(&[(1.0, 0.5 * mu * mu)], numerics))
            }
            Self::Shift { family, mu } => {
                let d = mu.abs() / family.scale;
                match family.kind {
                    ShiftKind::Gaussian => Ok(gaussian_llr_table(&[(1.0, 0.5 * d * d)], numerics)),
                    ShiftKind::Laplace => Ok(laplace_table(d, numerics)),
                }
            }
        }
    }
}

/// Masses of P and Q on the union of their labels.
fn aligned_masses(p: &DiscreteDist, q: &DiscreteDist, tol: f64) -> Vec<(f64, f64)> {
    let (a, b) = (p.atoms(), q.atoms());
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].value < b[j].value - tol) {
            out.push((a[i].mass, 0.0));
            i += 1;
        } else if i >= a.len() || b[j].value < a[i].value - tol {
            out.push((0.0, b[j].mass));
            j += 1;
        } else {
            out.push((a[i].mass, b[j].mass));
            i += 1;
            j += 1;
        }
    }
    out
}

/// Mixture of Gaussian LLR laws P_i = N(−k_i, 2k_i), Q_i = N(k_i, 2k_i) with
/// weights w_i, discretized into shared cells whose outer cells absorb the tails.
pub fn gaussian_llr_table(components: &[(f64, f64)], numerics: &Numerics) -> LikelihoodTable {
    let scales: Vec<f64> = components.iter().map(|&(_, k)| (2.0 * k).sqrt()).collect();
    let s_min = scales.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    if !s_min.is_finite() {
        return LikelihoodTable::trivial();
    }
    let span = numerics.gaussian_span;
    let lo = components
        .iter()
        .zip(&scales)
        .map(|(&(_, k), &s)| -k - span * s)
        .fold(f64::INFINITY, f64::min);
    let hi = components
        .iter()
        .zip(&scales)
        .map(|(&(_, k), &s)| k + span * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = s_min / numerics.gaussian_cells_per_sigma;
    let cells = ((hi - lo) / width).ceil().max(1.0) as usize;
    let edge = |j: usize| -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else if j >= cells {
            f64::INFINITY
        } else {
            lo + j as f64 * width
        }
    };
    let mut p = vec![0.0; cells];
    let mut q = vec![0.0; cells];
    for (&(w, k), &s) in components.iter().zip(&scales) {
        if s == 0.0 {
            let j = (((0.0 - lo) / width).floor().max(0.0) as usize).min(cells - 1);
            p[j] += w;
            q[j] += w;
            continue;
        }
        for j in 0..cells {
            let (a, b) = (edge(j), edge(j + 1));
            p[j] += w * norm_cdf_diff((a + k) / s, (b + k) / s);
            q[j] += w * norm_cdf_diff((a - k) / s, (b - k) / s);
        }
    }
    let mut t = LikelihoodTable::from_masses(p.into_iter().zip(q), numerics.merge_tolerance);
    t.coarsening_error = cell_error(&t, width);
    t
}

/// Standard Laplace against its shift by d ≥ 0; the ratio is constant outside [0, d].
fn laplace_table(d: f64, numerics: &Numerics) -> LikelihoodTable {
    let kind = ShiftKind::Laplace;
    if d == 0.0 {
        return LikelihoodTable::trivial();
    }
    let width = 1.0 / numerics.gaussian_cells_per_sigma;
    let cells = (d / width).ceil() as usize;
    let width = d / cells as f64;
    let mut masses = Vec::with_capacity(cells + 2);
    masses.push((kind.std_cdf(0.0), kind.std_cdf(-d)));
    for j in 0..cells {
        let (a, b) = (j as f64 * width, (j + 1) as f64 * width);
        masses.push((kind.std_cdf_diff(a, b), kind.std_cdf_diff(a - d, b - d)));
    }
    masses.push((kind.std_sf(d), kind.std_sf(0.0)));
    // The two outer lumps have an exactly constant ratio and cost nothing.
    let fine_q = masses[1..=cells].iter().map(|m| m.1).fold(0.0, f64::max);
    let mut t = LikelihoodTable::from_masses(masses, numerics.merge_tolerance);
    t.coarsening_error = fine_q * width.exp_m1() / 4.0;
    t
}

/// Chord error bound for cells of llr width `width`: q·(e^w − 1)/4 at worst.
fn cell_error(t: &LikelihoodTable, width: f64) -> f64 {
    let factor = width.exp_m1() / 4.0;
    t.atoms.iter().map(|a| a.q * factor).fold(0.0, f64::max)
}

pub fn curve(e: &ExperimentPair) -> Result<TradeoffCurve> {
    curve_with(e, &Numerics::default())
}

pub fn curve_with(e: &ExperimentPair, numerics: &Numerics) -> Result<TradeoffCurve> {
    match e {
        ExperimentPair::AnalyticGaussian { mu } => TradeoffCurve::gaussian(*mu),
        ExperimentPair::Shift { family, mu } => TradeoffCurve::shift(family.kind, mu / family.scale),
        _ => Ok(e.to_table_with(numerics)?.curve()),
    }
}

/// Curves of many pairs in parallel, returned in input order.
pub fn curves(pairs: &[ExperimentPair]) -> Vec<Result<TradeoffCurve>> {
    pairs.par_iter().map(curve).collect()
}

/// Law of L = log(dQ/dP) under P.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrDist {
    /// Finite part of the law of L under P.
    pub under_null: DiscreteDist,
    /// P-mass where Q vanishes, i.e. L = −∞.
    pub neg_inf_mass: f64,
    pub tilt_normalizer: f64,
}

impl LlrDist {
    /// The pair (L_P, L_Q) with L_Q the tilt of L_P.
    pub fn tilted_pair(&self) -> LikelihoodTable {
        let atoms = self
            .under_null
            .atoms()
            .iter()
            .map(|a| LlrAtom { llr: a.value, p: a.mass, q: a.value.exp() * a.mass })
            .collect();
        LikelihoodTable::assemble(atoms, 0.0, self.neg_inf_mass, 0.0)
    }
}

pub fn llr(e: &ExperimentPair) -> Result<LlrDist> {
    llr_with(e, &Numerics::default())
}

pub fn llr_with(e: &ExperimentPair, numerics: &Numerics) -> Result<LlrDist> {
    let t = e.to_table_with(numerics)?;
    llr_from_table(&t, numerics)
}

pub(crate) fn llr_from_table(t: &LikelihoodTable, numerics: &Numerics) -> Result<LlrDist> {
    if t.q_only > numerics.prune_threshold {
        return Err(Error::Contiguity { escaping_mass: t.q_only });
    }
    let finite: f64 = t.atoms.iter().map(|a| a.p).sum();
    let under_null = DiscreteDist::build(
        t.atoms.iter().map(|a| (a.llr, a.p)),
        (1.0 - finite).max(0.0),
        0.0,
        0.0,
    )?;
    Ok(LlrDist {
        under_null,
        neg_inf_mass: t.p_only,
        tilt_normalizer: t.tilt_normalizer(),
    })
}

/// Sup distance between curve(e) and the curve of (L_P, L_Q).
pub fn llr_identity_check(e: &ExperimentPair) -> Result<f64> {
    let l = llr(e)?;
    let direct = curve(e)?;
    let via_llr = l.tilted_pair().curve();
    Ok(sup_distance(&direct, &via_llr))
}

/// kl, κ₂, κ₃ and κ̄₃ of a curve; infinite values flag non-integrability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentFunctionals {
    pub kl: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa3_bar: f64,
}

impl MomentFunctionals {
    pub fn is_finite(&self) -> bool {
        self.kl.is_finite() && self.kappa2.is_finite() && self.kappa3.is_finite()
    }
}

pub fn moment_functionals(f: &TradeoffCurve) -> MomentFunctionals {
    match f.form() {
        CurveForm::Gaussian { mu } => shift_moments(ShiftKind::Gaussian, *mu),
        CurveForm::Shift { kind, mu } => shift_moments(*kind, *mu),
        _ => {
            let pl = f.to_piecewise_linear(Numerics::default().grid_step);
            let p = pl.breakpoints().expect("piecewise-linear");
            let segments: Vec<(f64, f64)> = p
                .windows(2)
                .filter(|w| w[1].0 > w[0].0)
                .map(|w| {
                    let da = w[1].0 - w[0].0;
                    (da, ((w[0].1 - w[1].1) / da).ln())
                })
                .collect();
            moments_from(segments.into_iter())
        }
    }
}

/// Moments from (weight, log|f′|) pairs.
fn moments_from(parts: impl Iterator<Item = (f64, f64)> + Clone) -> MomentFunctionals {
    let mut kl = 0.0;
    let mut kappa2 = 0.0;
    let mut kappa3 = 0.0;
    for (w, l) in parts.clone() {
        if w == 0.0 {
            continue;
        }
        kl -= w * l;
        kappa2 += w * l * l;
        kappa3 += w * l.abs().powi(3);
    }
    let kappa3_bar = if kl.is_finite() {
        parts
            .filter(|&(w, _)| w > 0.0)
            .map(|(w, l)| w * (l + kl).abs().powi(3))
            .sum()
    } else {
        f64::INFINITY
    };
    MomentFunctionals { kl, kappa2, kappa3, kappa3_bar }
}

/// Trapezoid rule in z after substituting α = 1 − F(z).
fn shift_moments(kind: ShiftKind, mu: f64) -> MomentFunctionals {
    if mu == 0.0 {
        return MomentFunctionals { kl: 0.0, kappa2: 0.0, kappa3: 0.0, kappa3_bar: 0.0 };
    }
    let (half, h) = match kind {
        ShiftKind::Gaussian => (40.0, 1e-3),
        ShiftKind::Laplace => (60.0 + mu, 1e-3),
    };
    let n = (2.0 * half / h).round() as usize;
    let parts = (0..=n).map(move |i| {
        let z = -half + i as f64 * h;
        let edge = if i == 0 || i == n { 0.5 } else { 1.0 };
        let w = edge * h * kind.std_pdf(z);
        (w, kind.std_ln_pdf(z - mu) - kind.std_ln_pdf(z))
    });
    moments_from(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_and_disjoint_pairs() {
        let same = curve(&ExperimentPair::bernoulli(0.5, 0.5).unwrap()).unwrap();
        assert!(sup_distance(&same, &TradeoffCurve::identity()) < 1e-15);
        let apart = ExperimentPair::discrete(
            DiscreteDist::point_mass(0.0).unwrap(),
            DiscreteDist::point_mass(1.0).unwrap(),
        );
        let c = curve(&apart).unwrap();
        for a in [0.0, 0.3, 1.0] {
            assert_eq!(c.value(a), 0.0);
        }
        assert!(matches!(llr(&apart), Err(Error::Contiguity { .. })));
    }

    #[test]
    fn gaussian_shift_is_closed_form() {
        let fam = ShiftFamily::standard(ShiftKind::Gaussian);
        let c = curve(&ExperimentPair::shift(fam, 1.0).unwrap()).unwrap();
        assert_eq!(c, TradeoffCurve::gaussian(1.0).unwrap());
    }

    #[test]
    fn poisson_llr_is_affine_poisson() {
        let l = llr(&ExperimentPair::poisson(1.0, 3.0).unwrap()).unwrap();
        let shift = 1.0 - 3.0;
        let slope = 3f64.ln();
        for (k, a) in l.under_null.atoms().iter().enumerate().take(10) {
            assert!((a.value - (shift + k as f64 * slope)).abs() < 1e-12);
            let pk = (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>();
            assert!((a.mass - pk).abs() < 1e-15);
        }
        assert!((l.tilt_normalizer - 1.0).abs() < 1e-9);
    }

    #[test]
    fn llr_of_identical_pair_is_point_mass() {
        let l = llr(&ExperimentPair::poisson(2.0, 2.0).unwrap()).unwrap();
        assert_eq!(l.under_null.len(), 1);
        assert_eq!(l.under_null.atoms()[0].value, 0.0);
    }

    #[test]
    fn identity_checks() {
        let b = llr_identity_check(&ExperimentPair::bernoulli(0.2, 0.6).unwrap()).unwrap();
        assert!(b <= 1e-9);
        let p = llr_identity_check(&ExperimentPair::poisson(1.0, 3.0).unwrap()).unwrap();
        assert!(p <= 1e-8);
        let s = llr_identity_check(&ExperimentPair::poisson(2.0, 2.0).unwrap()).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn gaussian_moments() {
        for mu in [0.5, 1.0, 2.0] {
            let m = moment_functionals(&TradeoffCurve::gaussian(mu).unwrap());
            assert!((m.kl - mu * mu / 2.0).abs() < 1e-6, "kl {}", m.kl);
            assert!((m.kappa2 - (mu * mu + mu.powi(4) / 4.0)).abs() < 1e-5);
        }
        let i = moment_functionals(&TradeoffCurve::identity());
        assert_eq!(i.kl, 0.0);
    }

    #[test]
    fn flat_segment_gives_infinite_kl() {
        let f = TradeoffCurve::piecewise_linear(vec![(0.0, 1.0), (0.5, 0.0), (1.0, 0.0)]).unwrap();
        let m = moment_functionals(&f);
        assert!(m.kl.is_infinite() && m.kappa3_bar.is_infinite());
    }
}
