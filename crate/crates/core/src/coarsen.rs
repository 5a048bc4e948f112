//! Curves of experiments observed only through a partition: discrete pairs
//! pushed through a partition, and shift families seen through interval bins.

use crate::dist::{Partition, ShiftFamily};
use crate::error::{domain, Error, Result};
use crate::neyman::ExperimentPair;
use crate::numerics::Numerics;
use crate::tofcurve::{CurveMeta, Point, TradeoffCurve};

const MAX_BINS: i64 = 10_000_000;

/// (P^𝒢, Q^𝒢): both distributions pushed through the partition, labelled by cell.
pub fn coarsen_pair(e: &ExperimentPair, bins: &Partition) -> Result<ExperimentPair> {
    match e {
        ExperimentPair::Discrete { p, q } => Ok(ExperimentPair::discrete(bins.push_forward(p)?, bins.push_forward(q)?)),
        _ => domain("coarsening needs a discrete pair"),
    }
}

/// Cell likelihood ratios q(B)/p(B), in cell order; `None` where P(B) = 0.
pub fn cell_likelihood_ratios(e: &ExperimentPair, bins: &Partition) -> Result<Vec<Option<f64>>> {
    let ExperimentPair::Discrete { p, q } = coarsen_pair(e, bins)? else {
        unreachable!("coarsen_pair returns a discrete pair")
    };
    Ok((0..bins.cell_count())
        .map(|c| {
            let pm = p.mass_at(c as f64);
            (pm > 0.0).then(|| q.mass_at(c as f64) / pm)
        })
        .collect())
}

/// Index range of bins [n·w, (n+1)·w) carrying at least `tail` mass on either side.
fn bin_range(family: &ShiftFamily, mu: f64, width: f64, tail: f64) -> Result<(i64, i64)> {
    if !(width.is_finite() && width > 0.0) {
        return domain(format!("bin width must be positive, got {width}"));
    }
    if !mu.is_finite() {
        return domain(format!("shift must be finite, got {mu}"));
    }
    let lo = family.quantile(tail).min(family.quantile(tail) + mu);
    let hi = family.quantile(1.0 - tail).max(family.quantile(1.0 - tail) + mu);
    let (n_lo, n_hi) = ((lo / width).floor() as i64, (hi / width).floor() as i64);
    if n_hi - n_lo > MAX_BINS {
        return Err(Error::Range(format!("{} bins exceed the limit {MAX_BINS}", n_hi - n_lo)));
    }
    Ok((n_lo, n_hi))
}

/// Bin likelihood ratios q_n/p_n over the truncated range, as (n, ratio).
pub fn bin_likelihood_ratios(family: &ShiftFamily, mu: f64, width: f64) -> Result<Vec<(i64, f64)>> {
    let (lo, hi) = bin_range(family, mu, width, Numerics::default().bin_tail)?;
    Ok((lo..=hi)
        .filter_map(|n| {
            let (a, b) = (n as f64 * width, (n + 1) as f64 * width);
            let p = family.cdf_diff(a, b);
            let q = family.cdf_diff(a - mu, b - mu);
            (p > 0.0).then_some((n, q / p))
        })
        .collect())
}

/// Curve of (family, family + μ) observed through bins of width `bin_width`.
///
/// The breakpoints are the non-randomized tests rejecting all bins above
/// (below, for μ < 0) a bin edge k·w; the curve is linear in between.
pub fn binned_shift_curve(family: &ShiftFamily, mu: f64, bin_width: f64) -> Result<TradeoffCurve> {
    let (lo, hi) = bin_range(family, mu, bin_width, Numerics::default().bin_tail)?;
    let meta = CurveMeta { bin_width: Some(bin_width), ..CurveMeta::default() };
    if mu == 0.0 {
        return Ok(TradeoffCurve::identity().with_meta(meta));
    }
    let edge = |k: i64| k as f64 * bin_width;
    let mut points: Vec<Point> = Vec::with_capacity((hi - lo + 4) as usize);
    points.push((0.0, 1.0));
    for k in lo..=hi + 1 {
        let x = edge(k);
        if mu > 0.0 {
            points.push((family.sf(x), family.cdf(x - mu)));
        } else {
            points.push((family.cdf(x), family.sf(x - mu)));
        }
    }
    points.push((1.0, 0.0));
    Ok(TradeoffCurve::from_hull(points).with_meta(meta))
}
