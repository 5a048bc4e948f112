//! Trade-off functions: evaluation, inverse, dualities, symmetrization and metrics.

use serde::{Deserialize, Serialize};

use crate::dist::ShiftKind;
use crate::error::{domain, Error, Result};
use crate::fmt::fmt_f64;
use crate::numerics::Numerics;
use crate::special::{norm_cdf, norm_isf, norm_sf};

const CERTIFICATE_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub enum CurveForm {
    PiecewiseLinear(Vec<Point>),
    /// G_μ(α) = Φ(Φ⁻¹(1−α) − μ).
    Gaussian { mu: f64 },
    EpsDelta { eps: f64, delta: f64 },
    /// Standardized shift family with shift μ, F(F⁻¹(1−α) − μ).
    Shift { kind: ShiftKind, mu: f64 },
}

/// Provenance carried alongside a curve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub discretization_step: Option<f64>,
    pub truncation_deficit: f64,
    pub coarsening_error: f64,
    pub bin_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    form: CurveForm,
    meta: CurveMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlackwellOrder {
    Equal,
    /// The left curve is pointwise above the right one.
    Dominates,
    Dominated,
    Incomparable,
}

impl TradeoffCurve {
    pub fn gaussian(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return domain(format!("gaussian parameter must be finite and >= 0, got {mu}"));
        }
        Ok(Self::closed(CurveForm::Gaussian { mu }))
    }

    pub fn eps_delta(eps: f64, delta: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0 && (0.0..=1.0).contains(&delta)) {
            return domain(format!("invalid (eps, delta) = ({eps}, {delta})"));
        }
        Ok(Self::closed(CurveForm::EpsDelta { eps, delta }))
    }

    /// I(α) = 1 − α.
    pub fn identity() -> Self {
        Self::closed(CurveForm::EpsDelta { eps: 0.0, delta: 0.0 })
    }

    /// Curve of a standardized shift family; gaussian shifts become `gaussian(|μ|)`.
    pub fn shift(kind: ShiftKind, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return domain(format!("shift must be finite, got {mu}"));
        }
        Ok(match kind {
            ShiftKind::Gaussian => Self::closed(CurveForm::Gaussian { mu: mu.abs() }),
            _ => Self::closed(CurveForm::Shift { kind, mu: mu.abs() }),
        })
    }

    fn closed(form: CurveForm) -> Self {
        Self { form, meta: CurveMeta::default() }
    }

    /// Piecewise-linear curve that must pass the 𝒯 certificate.
    pub fn piecewise_linear(points: Vec<Point>) -> Result<Self> {
        let curve = Self {
            form: CurveForm::PiecewiseLinear(dedupe(points)),
            meta: CurveMeta::default(),
        };
        curve.certify()?;
        Ok(curve)
    }

    /// Lower convex hull of the points, clamped into the unit square.
    pub(crate) fn from_hull(points: Vec<Point>) -> Self {
        let pts = lower_hull(dedupe(points));
        Self {
            form: CurveForm::PiecewiseLinear(clamp_points(pts)),
            meta: CurveMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: CurveMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn form(&self) -> &CurveForm {
        &self.form
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    pub fn breakpoints(&self) -> Option<&[Point]> {
        match &self.form {
            CurveForm::PiecewiseLinear(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match &self.form {
            CurveForm::Gaussian { mu } | CurveForm::Shift { mu, .. } => *mu == 0.0,
            CurveForm::EpsDelta { eps, delta } => *eps == 0.0 && *delta == 0.0,
            CurveForm::PiecewiseLinear(p) => p.iter().all(|&(a, b)| (b - (1.0 - a)).abs() <= 1e-12),
        }
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("alpha {alpha} outside [0,1]"));
        }
        Ok(self.value(alpha))
    }

    /// Evaluation with α clamped into [0,1].
    pub fn value(&self, alpha: f64) -> f64 {
        let a = alpha.clamp(0.0, 1.0);
        match &self.form {
            CurveForm::PiecewiseLinear(p) => interpolate(p, a),
            CurveForm::Gaussian { mu } => {
                if a <= 0.0 {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    norm_cdf(norm_isf(a) - mu)
                }
            }
            CurveForm::EpsDelta { eps, delta } => {
                let e = eps.exp();
                (1.0 - delta - e * a).max((1.0 - delta - a) / e).max(0.0)
            }
            CurveForm::Shift { kind, mu } => {
                if a <= 0.0 {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    kind.std_cdf(kind.std_upper_quantile(a) - mu)
                }
            }
        }
    }

    /// 𝒯 certificate: convex, nonincreasing, below 1 − α, spanning [0,1].
    pub fn certify(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Contract(m));
        let p = match &self.form {
            CurveForm::PiecewiseLinear(p) => p,
            CurveForm::Gaussian { mu } | CurveForm::Shift { mu, .. } => {
                return if mu.is_finite() && *mu >= 0.0 {
                    Ok(())
                } else {
                    fail(format!("invalid shift parameter {mu}"))
                };
            }
            CurveForm::EpsDelta { eps, delta } => {
                return if *eps >= 0.0 && (0.0..=1.0).contains(delta) {
                    Ok(())
                } else {
                    fail(format!("invalid (eps, delta) = ({eps}, {delta})"))
                };
            }
        };
        let tol = CERTIFICATE_TOLERANCE;
        if p.len() < 2 {
            return fail("fewer than two breakpoints".into());
        }
        if p[0].0 != 0.0 || p[p.len() - 1].0 != 1.0 {
            return fail("breakpoints must start at alpha 0 and end at alpha 1".into());
        }
        for (i, &(a, b)) in p.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) || b < -tol || b > 1.0 + tol {
                return fail(format!("breakpoint {i} ({a}, {b}) outside the unit square"));
            }
            if b > 1.0 - a + tol {
                return fail(format!("breakpoint {i} ({a}, {b}) exceeds 1 - alpha"));
            }
        }
        for (i, w) in p.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return fail(format!("alpha not strictly increasing at breakpoint {}", i + 1));
            }
            if w[1].1 > w[0].1 + tol {
                return fail(format!("curve increases at breakpoint {}", i + 1));
            }
        }
        for (i, w) in p.windows(3).enumerate() {
            let t = (w[1].0 - w[0].0) / (w[2].0 - w[0].0);
            let chord = w[0].1 + t * (w[2].1 - w[0].1);
            if w[1].1 > chord + tol {
                return fail(format!("convexity violated at breakpoint {}", i + 1));
            }
        }
        Ok(())
    }

    /// Generalized inverse f⁻¹(α) = inf{t : f(t) ≤ α}.
    pub fn inverse(&self) -> Self {
        match &self.form {
            CurveForm::PiecewiseLinear(p) => {
                let mut pts: Vec<Point> = p.iter().rev().map(|&(a, b)| (b, a)).collect();
                if pts.last().map_or(true, |&(a, _)| a < 1.0) {
                    pts.push((1.0, 0.0));
                }
                Self::from_hull(pts).with_meta(self.meta)
            }
            _ => self.clone(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.form {
            CurveForm::PiecewiseLinear(_) => {
                sup_distance(self, &self.inverse()) <= SYMMETRY_TOLERANCE
            }
            _ => true,
        }
    }

    /// min(f, f⁻¹)**: the epigraph of the min is the union of two convex
    /// epigraphs, so its convex hull is the lower hull of both breakpoint sets.
    /// When f⁻¹ ≤ f before the first slope −1 point x̄ this is f⁻¹, then a
    /// slope −1 bridge from (f(x̄), x̄) to (x̄, f(x̄)), then f.
    pub fn symmetrize(&self) -> Self {
        let p = match &self.form {
            CurveForm::PiecewiseLinear(p) => p,
            _ => return self.clone(),
        };
        let inv = self.inverse();
        let q = inv.breakpoints().expect("piecewise-linear inverse");
        let pts = p.iter().chain(q).copied().collect();
        Self::from_hull(pts).with_meta(self.meta)
    }

    /// Piecewise-linear form; closed forms are sampled on the uniform grid
    /// plus logarithmic refinements at both ends.
    pub fn to_piecewise_linear(&self, step: f64) -> Self {
        match &self.form {
            CurveForm::PiecewiseLinear(_) => self.clone(),
            CurveForm::EpsDelta { eps, delta } => {
                let a = (1.0 - delta) / (1.0 + eps.exp());
                Self::from_hull(vec![(0.0, 1.0 - delta), (a, a), (1.0 - delta, 0.0), (1.0, 0.0)])
                    .with_meta(self.meta)
            }
            _ => {
                let pts = sample_alphas(step).into_iter().map(|a| (a, self.value(a))).collect();
                let mut meta = self.meta;
                meta.discretization_step = Some(step);
                Self::from_hull(pts).with_meta(meta)
            }
        }
    }

    /// α values at which this curve is exact or sampled.
    pub(crate) fn knots(&self, step: f64) -> Vec<f64> {
        match &self.form {
            CurveForm::PiecewiseLinear(p) => p.iter().map(|&(a, _)| a).collect(),
            CurveForm::EpsDelta { .. } => self
                .to_piecewise_linear(step)
                .breakpoints()
                .map(|p| p.iter().map(|&(a, _)| a).collect())
                .unwrap_or_default(),
            _ => sample_alphas(step),
        }
    }

    pub fn to_bayes_risk(&self) -> BayesRisk {
        self.to_bayes_risk_with(&Numerics::default())
    }

    /// b(λ) = inf_α[(1−λ)α + λ f(α)] on the uniform λ grid plus every kink.
    pub fn to_bayes_risk_with(&self, numerics: &Numerics) -> BayesRisk {
        let mut grid = uniform_grid(numerics.grid_step);
        match &self.form {
            CurveForm::Gaussian { mu } => {
                let points = grid.into_iter().map(|l| (l, gaussian_bayes_risk(*mu, l))).collect();
                BayesRisk { points }
            }
            _ => {
                let pl = self.to_piecewise_linear(numerics.grid_step);
                let p = pl.breakpoints().expect("piecewise-linear");
                for w in p.windows(2) {
                    let da = w[1].0 - w[0].0;
                    let db = w[0].1 - w[1].1;
                    if da > 0.0 && db >= 0.0 {
                        grid.push(da / (da + db));
                    }
                }
                grid.sort_by(f64::total_cmp);
                grid.dedup();
                let mut points = Vec::with_capacity(grid.len());
                let mut i = 0;
                let obj = |k: usize, l: f64| (1.0 - l) * p[k].0 + l * p[k].1;
                for l in grid {
                    while i + 1 < p.len() && obj(i + 1, l) <= obj(i, l) {
                        i += 1;
                    }
                    points.push((l, obj(i, l)));
                }
                BayesRisk { points }
            }
        }
    }

    /// δ(ε) = 1 + sup_α(−e^ε α − f(α)); symmetric curves only.
    pub fn to_eps_delta(&self, eps: f64) -> Result<f64> {
        if !(eps.is_finite() && eps >= 0.0) {
            return domain(format!("epsilon must be finite and >= 0, got {eps}"));
        }
        if !self.is_symmetric() {
            return Err(Error::Contract(
                "to_eps_delta needs a symmetric curve; symmetrize it first".into(),
            ));
        }
        let e = eps.exp();
        match &self.form {
            CurveForm::Gaussian { mu } => {
                if *mu == 0.0 {
                    return Ok(0.0);
                }
                Ok((norm_cdf(-eps / mu + mu / 2.0) - e * norm_cdf(-eps / mu - mu / 2.0)).max(0.0))
            }
            _ => {
                let pl = self.to_piecewise_linear(Numerics::default().grid_step);
                let p = pl.breakpoints().expect("piecewise-linear");
                let inf = p.iter().map(|&(a, b)| e * a + b).fold(f64::INFINITY, f64::min);
                Ok((1.0 - inf).max(0.0))
            }
        }
    }

    /// CSV with header `alpha,beta` at the breakpoints plus the uniform grid.
    pub fn to_csv(&self, step: f64) -> String {
        let mut alphas = self.knots(step);
        alphas.extend(uniform_grid(step));
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut out = String::from("alpha,beta\n");
        for a in alphas {
            out.push_str(&fmt_f64(a));
            out.push(',');
            out.push_str(&fmt_f64(self.value(a)));
            out.push('\n');
        }
        out
    }

    /// Reads `alpha,beta` rows; lines starting with `#` are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.replace(' ', "") == "alpha,beta" {
                    continue;
                }
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Domain(format!("line {}: malformed row '{line}'", n + 1)))
            };
            let a = parse(it.next())?;
            let b = parse(it.next())?;
            pts.push((a, b));
        }
        Self::piecewise_linear(pts)
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        let (tag, params) = match &self.form {
            CurveForm::PiecewiseLinear(p) => {
                ("piecewise-linear", serde_json::json!({ "breakpoints": p.len() }))
            }
            CurveForm::Gaussian { mu } => ("gaussian", serde_json::json!({ "mu": mu })),
            CurveForm::EpsDelta { eps, delta } => {
                ("eps-delta", serde_json::json!({ "eps": eps, "delta": delta }))
            }
            CurveForm::Shift { kind, mu } => {
                ("shift", serde_json::json!({ "family": kind, "mu": mu }))
            }
        };
        serde_json::json!({
            "form": tag,
            "parameters": params,
            "discretization_step": self.meta.discretization_step,
            "truncation_deficit": self.meta.truncation_deficit,
            "coarsening_error": self.meta.coarsening_error,
            "coarsened": self.meta.bin_width.is_some(),
            "bin_width": self.meta.bin_width,
        })
    }
}

/// Minimum Bayes risk sampled on a λ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesRisk {
    points: Vec<Point>,
}

impl BayesRisk {
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(l, b) in &points {
            if !(0.0..=1.0).contains(&l) || !b.is_finite() {
                return domain(format!("invalid Bayes risk point ({l}, {b})"));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        interpolate_any(&self.points, lambda)
    }

    /// Weighted sum of risks evaluated on the first operand's grid.
    pub fn mix(parts: &[(f64, &BayesRisk)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let points = first
            .points
            .iter()
            .map(|&(l, _)| (l, parts.iter().map(|(w, b)| w * b.eval(l)).sum()))
            .collect();
        Self::new(points)
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.points.windows(3).all(|w| {
            let t = (w[1].0 - w[0].0) / (w[2].0 - w[0].0);
            w[1].1 >= w[0].1 + t * (w[2].1 - w[0].1) - tol
        })
    }

    pub fn within_prior_bound(&self, tol: f64) -> bool {
        self.points.iter().all(|&(l, b)| b <= l.min(1.0 - l) + tol && b >= -tol)
    }

    /// f(α) = sup_{0<λ≤1}[(b(λ) − (1−λ)α)/λ] as an exact upper envelope of lines.
    pub fn to_curve(&self) -> TradeoffCurve {
        // lines y = c + s·α, slopes ascending in λ
        let mut lines: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|&&(l, _)| l > 0.0)
            .map(|&(l, b)| (-(1.0 - l) / l, b / l))
            .collect();
        lines.push((0.0, 0.0));
        lines.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut hull: Vec<(f64, f64)> = Vec::new();
        let cross = |l1: (f64, f64), l2: (f64, f64)| (l1.1 - l2.1) / (l2.0 - l1.0);
        for l in lines {
            if let Some(&last) = hull.last() {
                if last.0 == l.0 {
                    hull.pop();
                }
            }
            while hull.len() >= 2 {
                let n = hull.len();
                if cross(hull[n - 2], l) <= cross(hull[n - 2], hull[n - 1]) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l);
        }
        let env = |a: f64| hull.iter().map(|&(s, c)| c + s * a).fold(f64::NEG_INFINITY, f64::max);
        let mut pts = vec![(0.0, env(0.0).min(1.0))];
        for w in hull.windows(2) {
            let x = cross(w[0], w[1]);
            if x > 0.0 && x < 1.0 {
                pts.push((x, env(x)));
            }
        }
        pts.push((1.0, env(1.0).max(0.0)));
        TradeoffCurve::from_hull(pts)
    }
}

/// Closed-form Bayes risk of G_μ at prior weight λ on the alternative.
fn gaussian_bayes_risk(mu: f64, l: f64) -> f64 {
    if l <= 0.0 || l >= 1.0 {
        return 0.0;
    }
    if mu == 0.0 {
        return l.min(1.0 - l);
    }
    let z = (((1.0 - l) / l).ln() + 0.5 * mu * mu) / mu;
    (1.0 - l) * norm_sf(z) + l * norm_cdf(z - mu)
}

pub fn from_bayes_risk(b: &BayesRisk) -> TradeoffCurve {
    b.to_curve()
}

/// Maximum of |f − g| over the union of both curves' knots.
pub fn sup_distance(f: &TradeoffCurve, g: &TradeoffCurve) -> f64 {
    let step = Numerics::default().grid_step;
    let mut alphas = f.knots(step);
    alphas.extend(g.knots(step));
    alphas
        .into_iter()
        .map(|a| (f.value(a) - g.value(a)).abs())
        .fold(0.0, f64::max)
}

/// Minimum of f − g over the knots plus a uniform grid; returns (α, gap).
pub fn min_gap(f: &TradeoffCurve, g: &TradeoffCurve, grid_step: f64) -> (f64, f64) {
    let step = Numerics::default().grid_step;
    let mut alphas = f.knots(step);
    alphas.extend(g.knots(step));
    alphas.extend(uniform_grid(grid_step));
    alphas
        .into_iter()
        .map(|a| (a, f.value(a) - g.value(a)))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

/// Blackwell comparison of two curves up to `tol`.
pub fn compare(f: &TradeoffCurve, g: &TradeoffCurve, tol: f64) -> BlackwellOrder {
    let (_, lo) = min_gap(f, g, 1e-3);
    let (_, hi_neg) = min_gap(g, f, 1e-3);
    match (lo >= -tol, hi_neg >= -tol) {
        (true, true) => BlackwellOrder::Equal,
        (true, false) => BlackwellOrder::Dominates,
        (false, true) => BlackwellOrder::Dominated,
        (false, false) => BlackwellOrder::Incomparable,
    }
}

/// Lévy distance between the CDFs α ↦ 1 − f(α), which carry an atom 1 − f(0) at zero.
pub fn levy_distance(f: &TradeoffCurve, g: &TradeoffCurve) -> f64 {
    let step = Numerics::default().grid_step;
    let fp = f.to_piecewise_linear(step);
    let gp = g.to_piecewise_linear(step);
    let sup = sup_distance(&fp, &gp);
    if sup == 0.0 {
        return 0.0;
    }
    let a = fp.breakpoints().expect("piecewise-linear");
    let b = gp.breakpoints().expect("piecewise-linear");
    let (mut lo, mut hi) = (0.0, sup.min(1.0));
    for _ in 0..64 {
        let h = 0.5 * (lo + hi);
        if levy_holds(a, b, h) && levy_holds(b, a, h) {
            hi = h;
        } else {
            lo = h;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    hi
}

fn induced_cdf(p: &[Point], x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 - interpolate(p, x)
    }
}

/// A(x) ≤ B(x + h) + h for every x.
fn levy_holds(a: &[Point], b: &[Point], h: f64) -> bool {
    let check = |x: f64| induced_cdf(a, x) <= induced_cdf(b, x + h) + h + 1e-15;
    a.iter().all(|&(x, _)| check(x)) && b.iter().all(|&(x, _)| check(x - h))
}

fn interpolate(p: &[Point], a: f64) -> f64 {
    let i = p.partition_point(|q| q.0 < a);
    if i == 0 {
        return p[0].1;
    }
    if i >= p.len() {
        return p[p.len() - 1].1;
    }
    let (a0, b0) = p[i - 1];
    let (a1, b1) = p[i];
    if a1 == a {
        return b1;
    }
    b0 + (b1 - b0) * (a - a0) / (a1 - a0)
}

fn interpolate_any(p: &[Point], x: f64) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    interpolate(p, x)
}

/// First α at which −1 lies in the subdifferential.
#[cfg(test)]
fn first_unit_slope(p: &[Point]) -> f64 {
    for w in p.windows(2) {
        let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        if s >= -1.0 - 1e-12 {
            return w[0].0;
        }
    }
    1.0
}

pub(crate) fn uniform_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round().max(1.0) as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Uniform grid with logarithmic refinement towards both endpoints.
pub(crate) fn sample_alphas(step: f64) -> Vec<f64> {
    let mut out = uniform_grid(step);
    let top = step.log10();
    let mut e = -16.0;
    while e < top {
        let a = 10f64.powf(e);
        out.push(a);
        out.push(1.0 - a);
        e += 0.05;
    }
    out.retain(|a| (0.0..=1.0).contains(a));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn dedupe(mut points: Vec<Point>) -> Vec<Point> {
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    points.dedup_by(|later, earlier| later.0 == earlier.0);
    points
}

fn lower_hull(points: Vec<Point>) -> Vec<Point> {
    let mut hull: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn clamp_points(mut pts: Vec<Point>) -> Vec<Point> {
    for p in pts.iter_mut() {
        p.0 = p.0.clamp(0.0, 1.0);
        p.1 = p.1.clamp(0.0, 1.0 - p.0);
    }
    if let Some(first) = pts.first_mut() {
        first.0 = 0.0;
    }
    if let Some(last) = pts.last_mut() {
        last.0 = 1.0;
        last.1 = 0.0;
    }
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let g = TradeoffCurve::gaussian(1.0).unwrap();
        assert!((g.eval(0.5).unwrap() - 0.158_655_253_931_457_05).abs() < 1e-15);
        let i = TradeoffCurve::identity();
        for a in [0.0, 0.1, 0.77, 1.0] {
            assert!((i.eval(a).unwrap() - (1.0 - a)).abs() < 1e-15);
        }
        let ed = TradeoffCurve::eps_delta(2f64.ln(), 0.0).unwrap();
        assert!((ed.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(g.eval(1.5).is_err());
    }

    #[test]
    fn inverse_involution() {
        let f = TradeoffCurve::piecewise_linear(vec![(0.0, 1.0), (0.2, 0.4), (0.5, 0.1), (1.0, 0.0)])
            .unwrap();
        let back = f.inverse().inverse();
        assert!(sup_distance(&f, &back) < 1e-15);
        assert_eq!(TradeoffCurve::gaussian(2.0).unwrap().inverse(), TradeoffCurve::gaussian(2.0).unwrap());
    }

    #[test]
    fn square_symmetrization_has_unit_bridge() {
        let pts = uniform_grid(1e-4).into_iter().map(|x| (x, (1.0 - x) * (1.0 - x))).collect();
        let f = TradeoffCurve::piecewise_linear(pts).unwrap();
        let p = f.breakpoints().unwrap();
        let xbar = first_unit_slope(p);
        assert!((xbar - 0.5).abs() < 1e-4);
        assert!((interpolate(p, xbar) - 0.25).abs() < 1e-4);
        let g = f.symmetrize();
        g.certify().unwrap();
        for x in [0.26, 0.3, 0.4, 0.49] {
            let slope = (g.value(x + 1e-3) - g.value(x)) / 1e-3;
            assert!((slope + 1.0).abs() < 1e-6, "slope {slope} at {x}");
        }
        assert!(sup_distance(&g, &g.inverse()) < 1e-9);
    }

    #[test]
    fn bayes_risk_examples() {
        let b = TradeoffCurve::gaussian(1.0).unwrap().to_bayes_risk();
        assert!((b.eval(0.5) - 0.308_537_538_725_986_9).abs() < 1e-12);
        let tv = 2.0 * norm_cdf(0.5) - 1.0;
        assert!((b.eval(0.5) - (1.0 - tv) / 2.0).abs() < 1e-12);
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert!(b.is_concave(1e-15) && b.within_prior_bound(1e-15));
        let f = TradeoffCurve::piecewise_linear(vec![(0.0, 0.9), (0.1, 0.5), (0.6, 0.0), (1.0, 0.0)]).unwrap();
        let r = f.to_bayes_risk();
        assert!(r.is_concave(1e-15));
        assert!(sup_distance(&f, &r.to_curve()) < 1e-12);
    }

    #[test]
    fn eps_delta_conversion() {
        let f = TradeoffCurve::eps_delta(1.0, 0.05).unwrap();
        assert!((f.to_eps_delta(1.0).unwrap() - 0.05).abs() < 1e-15);
        let g = TradeoffCurve::gaussian(1.0).unwrap();
        let d0 = g.to_eps_delta(0.0).unwrap();
        assert!((d0 - 0.382_924_922_548_026).abs() < 1e-12);
        let grid = g.to_piecewise_linear(1e-4);
        let p = grid.breakpoints().unwrap();
        let inf = p.iter().map(|&(a, b)| a + b).fold(f64::INFINITY, f64::min);
        assert!((1.0 - inf - d0).abs() < 1e-8);
        let asym = TradeoffCurve::piecewise_linear(vec![(0.0, 1.0), (0.1, 0.2), (1.0, 0.0)]).unwrap();
        assert!(matches!(asym.to_eps_delta(0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn distances() {
        let g1 = TradeoffCurve::gaussian(1.0).unwrap();
        let g11 = TradeoffCurve::gaussian(1.1).unwrap();
        let g2 = TradeoffCurve::gaussian(2.0).unwrap();
        assert_eq!(levy_distance(&g1, &g1), 0.0);
        let d1 = sup_distance(&g1, &g11);
        assert!(d1 > 0.0 && d1 < sup_distance(&g1, &g2));
        assert!(levy_distance(&g1, &g2) <= sup_distance(&g1, &g2));
    }

    #[test]
    fn csv_round_trip() {
        let g = TradeoffCurve::gaussian(1.3).unwrap();
        let csv = g.to_csv(1e-3);
        assert!(csv.starts_with("alpha,beta\n"));
        let back = TradeoffCurve::from_csv(&csv).unwrap();
        assert!(sup_distance(&back, &TradeoffCurve::from_csv(&csv).unwrap()) == 0.0);
        assert!(sup_distance(&back, &g) < 1e-3);
    }
}
