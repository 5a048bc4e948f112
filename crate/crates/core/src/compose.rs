//! Tensor products, n-fold composition, the CLT comparator and the
//! large-deviation rate.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::neyman::{curve_with, llr_from_table, moment_functionals, ExperimentPair, LikelihoodTable, LlrAtom};
use crate::numerics::Numerics;
use crate::tofcurve::{levy_distance, sup_distance, CurveForm, TradeoffCurve};

/// Above this many products the lattice convolution uses an FFT.
const DIRECT_LATTICE_LIMIT: usize = 20_000_000;

/// Product experiment of two pairs.
pub fn tensor(a: &ExperimentPair, b: &ExperimentPair) -> Result<ExperimentPair> {
    tensor_with(a, b, &Numerics::default())
}

pub fn tensor_with(a: &ExperimentPair, b: &ExperimentPair, numerics: &Numerics) -> Result<ExperimentPair> {
    if let (Some(x), Some(y)) = (gaussian_shift(a), gaussian_shift(b)) {
        return ExperimentPair::gaussian(x.hypot(y));
    }
    let ta = a.to_table_with(numerics)?;
    let tb = b.to_table_with(numerics)?;
    Ok(ExperimentPair::Table(convolve(&ta, &tb, numerics)))
}

/// f ⊗ g for curves that are Gaussian or realizable as discrete pairs.
pub fn tensor_curves(f: &TradeoffCurve, g: &TradeoffCurve) -> Result<TradeoffCurve> {
    if let (CurveForm::Gaussian { mu: x }, CurveForm::Gaussian { mu: y }) = (f.form(), g.form()) {
        return TradeoffCurve::gaussian(x.hypot(*y));
    }
    let a = ExperimentPair::from_curve(f)?;
    let b = ExperimentPair::from_curve(g)?;
    curve_with(&tensor(&a, &b)?, &Numerics::default())
}

fn gaussian_shift(e: &ExperimentPair) -> Option<f64> {
    match e {
        ExperimentPair::AnalyticGaussian { mu } => Some(*mu),
        ExperimentPair::Shift { family, mu } if family.kind == crate::dist::ShiftKind::Gaussian => {
            Some(mu.abs() / family.scale)
        }
        _ => None,
    }
}

pub fn self_compose(pair: &ExperimentPair, n: u64) -> Result<TradeoffCurve> {
    self_compose_with(pair, n, &Numerics::default())
}

pub fn self_compose_with(pair: &ExperimentPair, n: u64, numerics: &Numerics) -> Result<TradeoffCurve> {
    curve_with(&self_compose_pair(pair, n, numerics)?, numerics)
}

/// n-fold product by repeated squaring.
pub fn self_compose_pair(pair: &ExperimentPair, n: u64, numerics: &Numerics) -> Result<ExperimentPair> {
    if n == 0 {
        return domain("composition count must be at least 1");
    }
    if let Some(mu) = gaussian_shift(pair) {
        return ExperimentPair::gaussian(mu * (n as f64).sqrt());
    }
    let base = pair.to_table_with(numerics)?;
    llr_from_table(&base, numerics)?;
    Ok(ExperimentPair::Table(power(&base, n, numerics)))
}

pub(crate) fn power(base: &LikelihoodTable, n: u64, numerics: &Numerics) -> LikelihoodTable {
    let mut result: Option<LikelihoodTable> = None;
    let mut square = base.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => convolve(&r, &square, numerics),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        square = convolve(&square, &square, numerics);
    }
    result.expect("n >= 1")
}

/// LLR convolution of two tables (the product experiment), lumped onto a
/// lattice when the exact product would be too large.
pub fn convolve(a: &LikelihoodTable, b: &LikelihoodTable, numerics: &Numerics) -> LikelihoodTable {
    let a_fin_q = a.q_total() - a.q_only;
    let a_fin_p = a.p_total() - a.p_only;
    let q_only = a.q_only * b.q_total() + a_fin_q * b.q_only;
    let p_only = a.p_only * b.p_total() + a_fin_p * b.p_only;
    let inherited = a.coarsening_error + b.coarsening_error;
    let deficit = a.deficit + b.deficit;
    let mut out = if a.len().saturating_mul(b.len()) <= numerics.exact_work_limit {
        let prune = numerics.prune_threshold;
        let mut atoms = Vec::with_capacity(a.len() * b.len());
        let mut lost = 0.0;
        for x in &a.atoms {
            for y in &b.atoms {
                let (p, q) = (x.p * y.p, x.q * y.q);
                if p < prune && q < prune {
                    lost += p;
                    continue;
                }
                atoms.push(LlrAtom { llr: x.llr + y.llr, p, q });
            }
        }
        let mut t = LikelihoodTable::assemble(atoms, q_only, p_only, numerics.merge_tolerance);
        t.deficit = deficit + lost;
        if t.len() > numerics.atom_cap {
            let width = llr_range(&t) / (numerics.atom_cap - 2) as f64;
            let (cells, err) = snap(&t, width);
            let mut r = from_cells(cells, width, q_only, p_only, numerics);
            r.coarsening_error = err;
            r.deficit = t.deficit;
            r
        } else {
            t
        }
    } else {
        let width = (llr_range(a) + llr_range(b)) / (numerics.atom_cap - 2) as f64;
        let (ca, ea) = snap(a, width);
        let (cb, eb) = snap(b, width);
        let (cells, spread) = lattice_product(&ca, &cb);
        let mut r = from_cells(cells, width, q_only, p_only, numerics);
        let factor = width.exp() * (2.0 * width).exp_m1() / 4.0;
        let merge_err = spread.iter().map(|q| q * factor).fold(0.0, f64::max);
        r.coarsening_error = ea + eb + merge_err;
        r.deficit = deficit;
        r
    };
    out.coarsening_error += inherited;
    out
}

fn llr_range(t: &LikelihoodTable) -> f64 {
    match (t.atoms.first(), t.atoms.last()) {
        (Some(lo), Some(hi)) => (hi.llr - lo.llr).max(1e-9),
        _ => 1e-9,
    }
}

/// Cell index, P-mass and Q-mass.
type Cell = (i64, f64, f64);

/// Lumps atoms into cells of llr width `width`; returns the cells and the
/// exact sup-norm chord error of the lumping.
fn snap(t: &LikelihoodTable, width: f64) -> (Vec<Cell>, f64) {
    let mut cells: Vec<Cell> = Vec::new();
    let mut err: f64 = 0.0;
    let mut start = 0;
    let atoms = &t.atoms;
    while start < atoms.len() {
        let idx = (atoms[start].llr / width).round() as i64;
        let mut end = start;
        let (mut p, mut q) = (0.0, 0.0);
        while end < atoms.len() && (atoms[end].llr / width).round() as i64 == idx {
            p += atoms[end].p;
            q += atoms[end].q;
            end += 1;
        }
        if end - start > 1 {
            let r = q / p;
            let (mut cp, mut cq) = (0.0, 0.0);
            for a in atoms[start..end].iter().rev() {
                cp += a.p;
                cq += a.q;
                err = err.max(cq - r * cp);
            }
        }
        cells.push((idx, p, q));
        start = end;
    }
    (cells, err)
}

fn from_cells(cells: Vec<Cell>, _width: f64, q_only: f64, p_only: f64, numerics: &Numerics) -> LikelihoodTable {
    let mut extra_q = 0.0;
    let mut extra_p = 0.0;
    let mut atoms = Vec::with_capacity(cells.len());
    for (_, p, q) in cells {
        match (p > 0.0, q > 0.0) {
            (true, true) => atoms.push(LlrAtom { llr: (q / p).ln(), p, q }),
            (true, false) => extra_p += p,
            (false, true) => extra_q += q,
            _ => {}
        }
    }
    LikelihoodTable::assemble(atoms, q_only + extra_q, p_only + extra_p, numerics.merge_tolerance)
}

/// Convolution of lattice cells; also returns each output cell's Q-mass.
fn lattice_product(a: &[Cell], b: &[Cell]) -> (Vec<Cell>, Vec<f64>) {
    let (a0, a1) = (a[0].0, a[a.len() - 1].0);
    let (b0, b1) = (b[0].0, b[b.len() - 1].0);
    let la = (a1 - a0 + 1) as usize;
    let lb = (b1 - b0 + 1) as usize;
    let dense = |cells: &[Cell], origin: i64, len: usize| {
        let mut p = vec![0.0; len];
        let mut q = vec![0.0; len];
        for &(i, pm, qm) in cells {
            p[(i - origin) as usize] += pm;
            q[(i - origin) as usize] += qm;
        }
        (p, q)
    };
    let (pa, qa) = dense(a, a0, la);
    let (pb, qb) = dense(b, b0, lb);
    let (pc, qc) = if a.len().saturating_mul(b.len()) <= DIRECT_LATTICE_LIMIT {
        (direct_convolution(&pa, &pb), direct_convolution(&qa, &qb))
    } else {
        (fft_convolution(&pa, &pb), fft_convolution(&qa, &qb))
    };
    let origin = a0 + b0;
    let cells: Vec<Cell> = pc
        .into_iter()
        .zip(qc)
        .enumerate()
        .filter(|&(_, (p, q))| p > 0.0 || q > 0.0)
        .map(|(k, (p, q))| (origin + k as i64, p, q))
        .collect();
    let spread = cells.iter().map(|c| c.2).collect();
    (cells, spread)
}

fn direct_convolution(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, &yj) in out[i..].iter_mut().zip(y) {
            *o += xi * yj;
        }
    }
    out
}

/// Convolution by FFT; round-off noise below 1e−15 of the largest output is zeroed.
fn fft_convolution(x: &[f64], y: &[f64]) -> Vec<f64> {
    let len = x.len() + y.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let lift = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut fx = lift(x);
    let mut fy = lift(y);
    fwd.process(&mut fx);
    fwd.process(&mut fy);
    for (a, b) in fx.iter_mut().zip(&fy) {
        *a *= b;
    }
    inv.process(&mut fx);
    let scale = 1.0 / size as f64;
    let out: Vec<f64> = fx[..len].iter().map(|c| c.re * scale).collect();
    let top = out.iter().copied().fold(0.0, f64::max);
    let noise = 1e-15 * top;
    out.into_iter().map(|v| if v > noise { v } else { 0.0 }).collect()
}

/// G_{2k/s} with k = `kl_sum` and s² = `kappa2_sum`.
pub fn clt_limit(kl_sum: f64, kappa2_sum: f64) -> Result<TradeoffCurve> {
    if !(kappa2_sum > 0.0) {
        return domain(format!("kappa2 sum must be positive, got {kappa2_sum}"));
    }
    TradeoffCurve::gaussian((2.0 * kl_sum / kappa2_sum.sqrt()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub n: u64,
    pub sup_distance_to_limit: f64,
    pub levy_distance_to_limit: f64,
}

impl CompositionReport {
    pub fn new(n: u64, composed: &TradeoffCurve, limit: &TradeoffCurve) -> Self {
        Self {
            n,
            sup_distance_to_limit: sup_distance(composed, limit),
            levy_distance_to_limit: levy_distance(composed, limit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdpEntry {
    pub n: u64,
    /// (1/n)·log f^{⊗n}(α).
    pub empirical_rate: f64,
    /// f^{⊗n}(0), recorded without any assertion.
    pub value_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub alpha: f64,
    pub analytic_rate: f64,
    pub entries: Vec<LdpEntry>,
    /// |empirical − analytic| at the largest n.
    pub gap: f64,
}

/// Empirical (1/n)·log f^{⊗n}(α) against ∫₀^{z_f} log|f′|.
pub fn ldp_rate(pair: &ExperimentPair, alpha: f64, n_list: &[u64]) -> Result<LdpReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0,1), got {alpha}"));
    }
    let numerics = Numerics::default();
    let f = curve_with(pair, &numerics)?;
    if f.is_identity() {
        let entries = n_list
            .iter()
            .map(|&n| LdpEntry { n, empirical_rate: 0.0, value_at_zero: 1.0 })
            .collect();
        return Ok(LdpReport { alpha, analytic_rate: 0.0, entries, gap: 0.0 });
    }
    let analytic_rate = analytic_ldp_rate(&f);
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let composed = self_compose_with(pair, n, &numerics)?;
        let v = composed.value(alpha);
        if v <= 0.0 {
            return Err(Error::Range(format!("f^(x{n}) underflows at alpha = {alpha}")));
        }
        entries.push(LdpEntry {
            n,
            empirical_rate: v.ln() / n as f64,
            value_at_zero: composed.value(0.0),
        });
    }
    let gap = entries.last().map_or(0.0, |e| (e.empirical_rate - analytic_rate).abs());
    Ok(LdpReport { alpha, analytic_rate, entries, gap })
}

fn analytic_ldp_rate(f: &TradeoffCurve) -> f64 {
    match f.form() {
        CurveForm::Gaussian { .. } | CurveForm::Shift { .. } => -moment_functionals(f).kl,
        _ => {
            let pl = f.to_piecewise_linear(Numerics::default().grid_step);
            pl.breakpoints()
                .expect("piecewise-linear")
                .windows(2)
                .filter(|w| w[1].0 > w[0].0 && w[0].1 > 0.0)
                .map(|w| {
                    let da = w[1].0 - w[0].0;
                    da * ((w[0].1 - w[1].1) / da).ln()
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neyman::curve;

    #[test]
    fn gaussian_tensor_is_symbolic() {
        let g = tensor_curves(&TradeoffCurve::gaussian(3.0).unwrap(), &TradeoffCurve::gaussian(4.0).unwrap())
            .unwrap();
        assert_eq!(g, TradeoffCurve::gaussian(5.0).unwrap());
        let c = self_compose(&ExperimentPair::gaussian(0.5).unwrap(), 16).unwrap();
        assert_eq!(c, TradeoffCurve::gaussian(2.0).unwrap());
    }

    #[test]
    fn identity_is_neutral() {
        let f = curve(&ExperimentPair::bernoulli(0.2, 0.7).unwrap()).unwrap();
        let g = tensor_curves(&f, &TradeoffCurve::identity()).unwrap();
        assert!(sup_distance(&f, &g) < 1e-15);
    }

    #[test]
    fn bernoulli_power_is_binomial() {
        let (l1, l2, n) = (1.0, 3.0, 10u64);
        let pair = ExperimentPair::bernoulli(l1 / n as f64, l2 / n as f64).unwrap();
        let composed = self_compose(&pair, n).unwrap();
        let direct = curve(&ExperimentPair::binomial(n, l1 / n as f64, l2 / n as f64).unwrap()).unwrap();
        assert!(sup_distance(&composed, &direct) < 1e-9);
        assert_eq!(self_compose(&pair, 1).unwrap(), curve(&pair).unwrap());
    }

    #[test]
    fn clt_limit_examples() {
        assert_eq!(clt_limit(0.5, 1.0).unwrap(), TradeoffCurve::gaussian(1.0).unwrap());
        assert!(clt_limit(0.0, 1.0).unwrap().is_identity());
        assert!(clt_limit(1.0, 0.0).is_err());
    }

    #[test]
    fn ldp_identity_and_gaussian() {
        let r = ldp_rate(&ExperimentPair::bernoulli(0.4, 0.4).unwrap(), 0.5, &[10]).unwrap();
        assert_eq!(r.analytic_rate, 0.0);
        let g = ldp_rate(&ExperimentPair::gaussian(1.0).unwrap(), 0.5, &[400]).unwrap();
        assert!((g.analytic_rate + 0.5).abs() < 1e-6);
        assert!(g.gap < 0.05);
    }

    #[test]
    fn lattice_path_matches_exact_path() {
        let pair = ExperimentPair::binomial(60, 0.3, 0.45).unwrap();
        let t = pair.to_table().unwrap();
        let exact = convolve(&t, &t, &Numerics::default());
        let tight = Numerics { exact_work_limit: 10, atom_cap: 4000, ..Numerics::default() };
        let lumped = convolve(&t, &t, &tight);
        let d = sup_distance(&exact.curve(), &lumped.curve());
        assert!(d <= lumped.coarsening_error() + 1e-12, "{d} vs bound {}", lumped.coarsening_error());
        assert!(d < 1e-4);
    }
}
