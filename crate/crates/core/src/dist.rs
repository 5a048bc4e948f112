//! Atomic distributions, shift families, Markov kernels and seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{domain, Error, Result};
use crate::fmt::fmt_f64;
use crate::numerics::Numerics;
use crate::special::{norm_cdf, norm_cdf_diff, norm_quantile, norm_sf};

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// Finite atomic probability distribution with strictly increasing values.
///
/// Mass removed by truncation or pruning is tracked in `deficit` and never
/// renormalized away.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    atoms: Vec<Atom>,
    deficit: f64,
}

impl DiscreteDist {
    /// Builds from unsorted `(value, mass)` pairs with the default prune and merge tolerances.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let n = Numerics::default();
        Self::build(atoms, 0.0, n.prune_threshold, n.merge_tolerance)
    }

    /// General constructor; `deficit` is mass known to be missing from `atoms`.
    pub fn build(
        atoms: impl IntoIterator<Item = (f64, f64)>,
        deficit: f64,
        prune: f64,
        merge_tolerance: f64,
    ) -> Result<Self> {
        let mut raw: Vec<Atom> = Vec::new();
        for (value, mass) in atoms {
            if !value.is_finite() {
                return domain(format!("non-finite atom value {value}"));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return domain(format!("invalid mass {mass} at value {value}"));
            }
            raw.push(Atom { value, mass });
        }
        if !(deficit.is_finite() && deficit >= 0.0) {
            return domain(format!("invalid deficit {deficit}"));
        }
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut merged: Vec<Atom> = Vec::with_capacity(raw.len());
        for a in raw {
            match merged.last_mut() {
                Some(last) if a.value - last.value <= merge_tolerance => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let mut deficit = deficit;
        merged.retain(|a| {
            let keep = a.mass > 0.0 && a.mass >= prune;
            if !keep {
                deficit += a.mass;
            }
            keep
        });
        let total: f64 = merged.iter().map(|a| a.mass).sum();
        if (total + deficit - 1.0).abs() > MASS_TOLERANCE {
            return domain(format!(
                "masses sum to {total} with deficit {deficit}, expected 1"
            ));
        }
        Ok(Self { atoms: merged, deficit })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    /// Ber(p) on labels {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("bernoulli parameter {p} outside [0,1]"));
        }
        Self::new([(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("binomial parameter {p} outside [0,1]"));
        }
        Self::new((0..=n).map(|k| (k as f64, binomial_pmf(n, p, k))))
    }

    /// Poisson pmf on {0..K} with omitted upper tail below `tail`.
    pub fn poisson(lambda: f64, tail: f64) -> Result<Self> {
        let kmax = poisson_truncation(lambda, tail)?;
        let n = Numerics::default();
        Self::poisson_on_range(lambda, kmax, n.prune_threshold)
    }

    /// Poisson pmf on the explicit range {0..=kmax}; exact zeros are always dropped.
    pub fn poisson_on_range(lambda: f64, kmax: u64, prune: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return domain(format!("poisson intensity must be positive, got {lambda}"));
        }
        let pmf = poisson_pmf_range(lambda, kmax);
        let kept: f64 = pmf.iter().sum();
        let deficit = (1.0 - kept).max(0.0);
        let n = Numerics::default();
        Self::build(
            pmf.into_iter().enumerate().map(|(k, m)| (k as f64, m)),
            deficit,
            prune,
            n.merge_tolerance,
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.mass).sum()
    }

    /// Mass at `value`, matched within the merge tolerance.
    pub fn mass_at(&self, value: f64) -> f64 {
        let tol = Numerics::default().merge_tolerance;
        let i = self.atoms.partition_point(|a| a.value < value - tol);
        match self.atoms.get(i) {
            Some(a) if (a.value - value).abs() <= tol => a.mass,
            _ => 0.0,
        }
    }

    /// Total variation over the union of both supports.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let tol = Numerics::default().merge_tolerance;
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i].value < b[j].value - tol) {
                acc += a[i].mass;
                i += 1;
            } else if i >= a.len() || b[j].value < a[i].value - tol {
                acc += b[j].mass;
                j += 1;
            } else {
                acc += (a[i].mass - b[j].mass).abs();
                i += 1;
                j += 1;
            }
        }
        0.5 * acc
    }

    /// Exponential change of measure x ↦ eˣ·mass.
    pub fn esscher_tilt(&self) -> Result<EsscherTilt> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let w = a.value.exp();
            if !w.is_finite() {
                return Err(Error::Range(format!(
                    "exp overflow at atom value {} (mass {})",
                    a.value, a.mass
                )));
            }
            atoms.push(Atom {
                value: a.value,
                mass: w * a.mass,
            });
        }
        let normalizer = atoms.iter().map(|a| a.mass).sum();
        Ok(EsscherTilt { atoms, normalizer })
    }

    pub fn apply_kernel(&self, kernel: &Kernel) -> Result<Self> {
        apply_kernel(kernel, self)
    }

    /// `n` inverse-CDF draws from a ChaCha stream seeded by `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return domain("sample count must be at least 1");
        }
        if self.atoms.is_empty() {
            return domain("cannot sample from an empty distribution");
        }
        let cumulative: Vec<f64> = self
            .atoms
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.mass;
                Some(*acc)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = self.atoms.len() - 1;
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c <= u).min(last);
                self.atoms[k].value
            })
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,mass\n");
        for a in &self.atoms {
            out.push_str(&fmt_f64(a.value));
            out.push(',');
            out.push_str(&fmt_f64(a.mass));
            out.push('\n');
        }
        out
    }

    pub fn envelope(&self) -> DistEnvelope {
        DistEnvelope {
            atoms: self.atoms.iter().map(|a| (a.value, a.mass)).collect(),
            total_mass: self.total_mass(),
            deficit: self.deficit,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.envelope()).expect("envelope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: DistEnvelope =
            serde_json::from_str(text).map_err(|e| Error::Domain(e.to_string()))?;
        let n = Numerics::default();
        Self::build(env.atoms, env.deficit, 0.0, n.merge_tolerance)
    }
}

/// JSON form of a distribution carrying its truncation metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistEnvelope {
    pub atoms: Vec<(f64, f64)>,
    pub total_mass: f64,
    pub deficit: f64,
}

/// Result of an Esscher tilt; a probability only when `normalizer` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EsscherTilt {
    pub atoms: Vec<Atom>,
    pub normalizer: f64,
}

impl EsscherTilt {
    pub fn into_probability(self, tolerance: f64) -> Result<DiscreteDist> {
        if (self.normalizer - 1.0).abs() > tolerance {
            return Err(Error::Spec(format!(
                "tilt normalizer {} is not 1 within {tolerance:e}",
                self.normalizer
            )));
        }
        let deficit = (1.0 - self.normalizer).max(0.0);
        DiscreteDist::build(
            self.atoms.into_iter().map(|a| (a.value, a.mass)),
            deficit,
            0.0,
            Numerics::default().merge_tolerance,
        )
    }
}

pub(crate) fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// Smallest K whose omitted Poisson upper tail is below `tail`.
pub fn poisson_truncation(lambda: f64, tail: f64) -> Result<u64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return domain(format!("poisson intensity must be positive, got {lambda}"));
    }
    if !(tail > 0.0 && tail < 1e-3) {
        return Err(Error::Config(format!(
            "poisson tail must lie in (0, 1e-3), got {tail}"
        )));
    }
    let mut k: u64 = 0;
    let mut ln_p = -lambda;
    loop {
        let next = k + 1;
        let ln_next = ln_p + lambda.ln() - (next as f64).ln();
        if (next as f64) + 1.0 > lambda {
            // geometric bound on the tail beyond k
            let ratio = lambda / (next as f64 + 1.0);
            if ln_next.exp() / (1.0 - ratio) < tail {
                return Ok(k);
            }
        }
        k = next;
        ln_p = ln_next;
    }
}

pub(crate) fn poisson_pmf_range(lambda: f64, kmax: u64) -> Vec<f64> {
    let n = kmax as usize + 1;
    if lambda < 600.0 {
        let mut out = Vec::with_capacity(n);
        let mut p = (-lambda).exp();
        out.push(p);
        for k in 1..n {
            p *= lambda / k as f64;
            out.push(p);
        }
        out
    } else {
        let ll = lambda.ln();
        (0..n)
            .map(|k| {
                (-lambda + k as f64 * ll - statrs::function::factorial::ln_factorial(k as u64))
                    .exp()
            })
            .collect()
    }
}

/// Inverse-CDF Poisson draw: the k with F(k−1) ≤ u < F(k).
pub(crate) fn poisson_inverse_cdf(lambda: f64, u: f64) -> u64 {
    let ll = lambda.ln();
    let mut cumulative = 0.0;
    let mut k: u64 = 0;
    loop {
        let p = if lambda < 600.0 && k == 0 {
            (-lambda).exp()
        } else {
            (-lambda + k as f64 * ll - statrs::function::factorial::ln_factorial(k)).exp()
        };
        cumulative += p;
        if u < cumulative || (k as f64 > lambda && p == 0.0) {
            return k;
        }
        k += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Gaussian,
    Laplace,
}

impl ShiftKind {
    pub fn std_cdf(self, z: f64) -> f64 {
        match self {
            ShiftKind::Gaussian => norm_cdf(z),
            ShiftKind::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    pub fn std_sf(self, z: f64) -> f64 {
        match self {
            ShiftKind::Gaussian => norm_sf(z),
            ShiftKind::Laplace => self.std_cdf(-z),
        }
    }

    pub fn std_quantile(self, u: f64) -> f64 {
        match self {
            ShiftKind::Gaussian => norm_quantile(u),
            ShiftKind::Laplace => {
                if u <= 0.0 {
                    f64::NEG_INFINITY
                } else if u >= 1.0 {
                    f64::INFINITY
                } else if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
        }
    }

    /// Quantile at 1 − a, accurate for small a.
    pub fn std_upper_quantile(self, a: f64) -> f64 {
        if a <= 0.5 {
            -self.std_quantile(a)
        } else {
            self.std_quantile(1.0 - a)
        }
    }

    pub fn std_ln_pdf(self, z: f64) -> f64 {
        match self {
            ShiftKind::Gaussian => -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            ShiftKind::Laplace => -z.abs() - std::f64::consts::LN_2,
        }
    }

    pub fn std_pdf(self, z: f64) -> f64 {
        self.std_ln_pdf(z).exp()
    }

    /// F(b) − F(a) without cancellation.
    pub fn std_cdf_diff(self, a: f64, b: f64) -> f64 {
        match self {
            ShiftKind::Gaussian => norm_cdf_diff(a, b),
            ShiftKind::Laplace => {
                if a >= 0.0 {
                    (self.std_sf(a) - self.std_sf(b)).max(0.0)
                } else if b <= 0.0 {
                    (self.std_cdf(b) - self.std_cdf(a)).max(0.0)
                } else {
                    (1.0 - self.std_cdf(a) - self.std_sf(b)).max(0.0)
                }
            }
        }
    }
}

/// Location–scale family with a symmetric log-concave density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftFamily {
    pub kind: ShiftKind,
    pub location: f64,
    pub scale: f64,
}

impl ShiftFamily {
    pub fn new(kind: ShiftKind, location: f64, scale: f64) -> Result<Self> {
        if !(location.is_finite() && scale.is_finite() && scale > 0.0) {
            return domain(format!("invalid shift family location {location}, scale {scale}"));
        }
        Ok(Self { kind, location, scale })
    }

    pub fn standard(kind: ShiftKind) -> Self {
        Self { kind, location: 0.0, scale: 1.0 }
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.kind.std_cdf(self.standardize(x))
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.kind.std_sf(self.standardize(x))
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.location + self.scale * self.kind.std_quantile(u)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.kind.std_pdf(self.standardize(x)) / self.scale
    }

    pub fn cdf_diff(&self, a: f64, b: f64) -> f64 {
        self.kind.std_cdf_diff(self.standardize(a), self.standardize(b))
    }
}

/// Assignment of labels to cells; cell `i` maps to output label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<(f64, usize)>,
    cells: usize,
}

impl Partition {
    pub fn from_cells(cells: Vec<Vec<f64>>) -> Result<Self> {
        let tol = Numerics::default().merge_tolerance;
        let count = cells.len();
        let mut assignment: Vec<(f64, usize)> = cells
            .into_iter()
            .enumerate()
            .flat_map(|(i, c)| c.into_iter().map(move |v| (v, i)))
            .collect();
        assignment.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in assignment.windows(2) {
            if w[1].0 - w[0].0 <= tol {
                return Err(Error::Partition(format!(
                    "label {} assigned to more than one cell",
                    w[0].0
                )));
            }
        }
        Ok(Self { assignment, cells: count })
    }

    /// Labels grouped by a cell function.
    pub fn from_fn(labels: &[f64], cell_of: impl Fn(f64) -> usize) -> Result<Self> {
        let mut cells: Vec<Vec<f64>> = Vec::new();
        for &v in labels {
            let c = cell_of(v);
            if cells.len() <= c {
                cells.resize(c + 1, Vec::new());
            }
            cells[c].push(v);
        }
        Self::from_cells(cells)
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn cell_of(&self, label: f64) -> Option<usize> {
        let tol = Numerics::default().merge_tolerance;
        let i = self.assignment.partition_point(|a| a.0 < label - tol);
        match self.assignment.get(i) {
            Some(&(v, c)) if (v - label).abs() <= tol => Some(c),
            _ => None,
        }
    }

    /// Masses summed per cell; labels outside every cell are an error.
    pub fn push_forward(&self, d: &DiscreteDist) -> Result<DiscreteDist> {
        let mut mass = vec![0.0; self.cells];
        for a in d.atoms() {
            let c = self.cell_of(a.value).ok_or_else(|| {
                Error::Partition(format!("label {} is not covered by any cell", a.value))
            })?;
            mass[c] += a.mass;
        }
        DiscreteDist::build(
            mass.into_iter().enumerate().map(|(i, m)| (i as f64, m)),
            d.deficit(),
            0.0,
            Numerics::default().merge_tolerance,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Adds an independent Poisson(λ) count.
    PoissonSuperpose { lambda: f64 },
    /// Keeps each unit independently with probability c.
    BinomialThin { c: f64 },
    Partition(Partition),
}

pub fn apply_kernel(kernel: &Kernel, p: &DiscreteDist) -> Result<DiscreteDist> {
    let n = Numerics::default();
    match kernel {
        Kernel::PoissonSuperpose { lambda } => {
            let counts = integer_support(p)?;
            let top = counts.iter().map(|&(k, _)| k).max().unwrap_or(0) as usize;
            // Noise reaching the top input label keeps every output label up to it exact.
            let kmax = poisson_truncation(*lambda, n.poisson_tail)?.max(top as u64);
            let noise = poisson_pmf_range(*lambda, kmax);
            let mut out = vec![0.0; top + noise.len()];
            for &(k, m) in &counts {
                for (j, &w) in noise.iter().enumerate() {
                    out[k as usize + j] += m * w;
                }
            }
            let noise_deficit = (1.0 - noise.iter().sum::<f64>()).max(0.0);
            DiscreteDist::build(
                out.into_iter().enumerate().map(|(k, m)| (k as f64, m)),
                p.deficit() + noise_deficit * p.total_mass(),
                0.0,
                n.merge_tolerance,
            )
        }
        Kernel::BinomialThin { c } => {
            if !(0.0..=1.0).contains(c) {
                return domain(format!("thinning probability {c} outside [0,1]"));
            }
            let counts = integer_support(p)?;
            let top = counts.iter().map(|&(k, _)| k).max().unwrap_or(0) as usize;
            let mut out = vec![0.0; top + 1];
            for &(k, m) in &counts {
                for (j, slot) in out.iter_mut().enumerate().take(k as usize + 1) {
                    *slot += m * binomial_pmf(k, *c, j as u64);
                }
            }
            DiscreteDist::build(
                out.into_iter().enumerate().map(|(k, m)| (k as f64, m)),
                p.deficit(),
                0.0,
                n.merge_tolerance,
            )
        }
        Kernel::Partition(part) => part.push_forward(p),
    }
}

fn integer_support(p: &DiscreteDist) -> Result<Vec<(u64, f64)>> {
    p.atoms()
        .iter()
        .map(|a| {
            let r = a.value.round();
            if a.value < 0.0 || (a.value - r).abs() > 1e-9 {
                domain(format!(
                    "poisson kernels need nonnegative integer support, found {}",
                    a.value
                ))
            } else {
                Ok((r as u64, a.mass))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_masses_match_closed_form() {
        let d = DiscreteDist::poisson(1.0, 1e-12).unwrap();
        let e = (-1.0f64).exp();
        assert!((d.mass_at(0.0) - 0.367_879_441_171_442_3).abs() < 1e-16);
        assert!((d.mass_at(1.0) - e).abs() < 1e-16);
        let d3 = DiscreteDist::poisson(3.0, 1e-12).unwrap();
        let total = d3.total_mass();
        assert!(total >= 1.0 - 1e-12 && total <= 1.0 + 1e-15);
    }

    #[test]
    fn poisson_rejects_bad_input() {
        assert!(matches!(DiscreteDist::poisson(0.0, 1e-12), Err(Error::Domain(_))));
        assert!(matches!(DiscreteDist::poisson(1.0, 0.01), Err(Error::Config(_))));
    }

    #[test]
    fn tilt_examples() {
        let t = DiscreteDist::point_mass(0.0).unwrap().esscher_tilt().unwrap();
        assert_eq!(t.normalizer, 1.0);
        let k = 0.7;
        let t = DiscreteDist::point_mass(-k).unwrap().esscher_tilt().unwrap();
        assert!((t.normalizer - (-k).exp()).abs() < 1e-16);
        assert!(t.into_probability(1e-6).is_err());
        let big = DiscreteDist::point_mass(800.0).unwrap();
        assert!(matches!(big.esscher_tilt(), Err(Error::Range(_))));
    }

    #[test]
    fn kernels() {
        let p2 = DiscreteDist::poisson(2.0, 1e-12).unwrap();
        let thinned = p2.apply_kernel(&Kernel::BinomialThin { c: 0.5 }).unwrap();
        let p1 = DiscreteDist::poisson(1.0, 1e-12).unwrap();
        assert!(thinned.total_variation(&p1) < 1e-10);
        let same = p2.apply_kernel(&Kernel::BinomialThin { c: 1.0 }).unwrap();
        assert!(same.total_variation(&p2) < 1e-15);
        let sup = DiscreteDist::point_mass(0.0)
            .unwrap()
            .apply_kernel(&Kernel::PoissonSuperpose { lambda: 2.0 })
            .unwrap();
        assert!(sup.total_variation(&p2) < 1e-15);
        let half = DiscreteDist::point_mass(0.5).unwrap();
        assert!(half.apply_kernel(&Kernel::BinomialThin { c: 0.5 }).is_err());
    }

    #[test]
    fn partition_kernel() {
        let d = DiscreteDist::binomial(4, 0.3).unwrap();
        let part = Partition::from_cells(vec![vec![0.0, 1.0], vec![2.0, 3.0, 4.0]]).unwrap();
        let out = d.apply_kernel(&Kernel::Partition(part)).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.mass_at(0.0) - (0.7f64.powi(4) + 4.0 * 0.3 * 0.7f64.powi(3))).abs() < 1e-15);
        let partial = Partition::from_cells(vec![vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            d.apply_kernel(&Kernel::Partition(partial)),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn sampling() {
        let d = DiscreteDist::point_mass(5.0).unwrap();
        assert_eq!(d.sample(9, 3).unwrap(), vec![5.0, 5.0, 5.0]);
        let p = DiscreteDist::poisson(3.0, 1e-12).unwrap();
        let a = p.sample(42, 1000).unwrap();
        let b = p.sample(42, 1000).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn poisson_inverse_cdf_convention() {
        let e = (-1.0f64).exp();
        assert_eq!(poisson_inverse_cdf(1.0, 0.0), 0);
        assert_eq!(poisson_inverse_cdf(1.0, e - 1e-12), 0);
        assert_eq!(poisson_inverse_cdf(1.0, e + 1e-12), 1);
        assert!(poisson_inverse_cdf(2000.0, 0.5).abs_diff(2000) < 5);
    }

    #[test]
    fn shift_families_invert() {
        for kind in [ShiftKind::Gaussian, ShiftKind::Laplace] {
            let f = ShiftFamily::new(kind, 0.3, 2.0).unwrap();
            for i in 1..1000 {
                let u = i as f64 * 1e-3;
                assert!((f.cdf(f.quantile(u)) - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let d = DiscreteDist::poisson(2.5, 1e-12).unwrap();
        let back = DiscreteDist::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert!(d.to_csv().starts_with("value,mass\n"));
    }
}
