//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tradeoff::coarsen::{binned_shift_curve, coarsen_pair};
use tradeoff::compose::{clt_limit, ldp_rate, self_compose, tensor_curves};
use tradeoff::idp::{mixture_curve, mixture_gaussian_fit, MixtureSpec};
use tradeoff::mechanism::{calibrate, kernel_lemma_check, verify_guarantee};
use tradeoff::neyman::{curve, gaussian_llr_table, llr_identity_check, moment_functionals};
use tradeoff::special::{norm_cdf, norm_pdf, norm_sf};
use tradeoff::tofcurve::{min_gap, sup_distance};
use tradeoff::{
    DiscreteDist, ExperimentPair, Numerics, Partition, ShiftFamily, ShiftKind, StatRange, TradeoffCurve,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: tradeoff::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn binomial_to_poisson() -> Check {
    let mut notes = Vec::new();
    for (l1, l2) in [(1.0, 3.0), (2.0, 4.0), (1.0, 2.0)] {
        let target = lib(curve(&lib(ExperimentPair::poisson(l1, l2))?))?;
        let at = |n: u64| -> Result<f64, String> {
            let pair = lib(ExperimentPair::bernoulli(l1 / n as f64, l2 / n as f64))?;
            Ok(sup_distance(&lib(self_compose(&pair, n))?, &target))
        };
        let (d50, d200) = (at(50)?, at(200)?);
        ensure(d200 <= 0.02, format!("({l1},{l2}): sup at n=200 is {d200:.3e} > 0.02"))?;
        ensure(d200 < d50, format!("({l1},{l2}): sup at n=200 {d200:.3e} not below n=50 {d50:.3e}"))?;
        notes.push(format!("({l1},{l2}) {d50:.2e}->{d200:.2e}"));
    }
    Ok(notes.join(", "))
}

/// E[e^X] for X ~ N(−k, 2k) by the trapezoid rule on ±12 standard deviations.
fn tilt_oracle(k: f64) -> f64 {
    let s = (2.0 * k).sqrt();
    let h = s * 1e-3;
    let n = 24_000;
    (0..=n)
        .map(|i| {
            let x = -k - 12.0 * s + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * h * norm_pdf((x + k) / s) / s * x.exp()
        })
        .sum()
}

fn gaussian_clt() -> Check {
    let n = 1000u32;
    let nf = f64::from(n);
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for mu in [1.0f64, 2.0] {
        let step = lib(TradeoffCurve::gaussian(mu / nf.sqrt()))?;
        let m = moment_functionals(&step);
        let (kl, k2) = (nf * m.kl, nf * m.kappa2);
        // κ₂ is a second moment about zero, so the n-fold sum is μ² + μ⁴/(4n), not μ².
        let analytic_k2 = mu * mu + mu.powi(4) / (4.0 * nf);
        if (kl - mu * mu / 2.0).abs() > 1e-4 {
            failures.push(format!("mu={mu}: sum kl {kl}"));
        }
        if (k2 - mu * mu).abs() > 1e-3 {
            failures.push(format!(
                "mu={mu}: |sum kappa2 - mu^2| = {:.3e} > 1e-3 (analytic mu^4/(4n) = {:.3e}, quadrature off analytic by {:.1e})",
                (k2 - mu * mu).abs(),
                mu.powi(4) / (4.0 * nf),
                (k2 - analytic_k2).abs()
            ));
        }
        let exact = lib(clt_limit(mu * mu / 2.0, mu * mu))?;
        if exact != lib(TradeoffCurve::gaussian(mu))? {
            failures.push(format!("mu={mu}: symbolic limit {exact:?}"));
        }
        let composed = lib(self_compose(&lib(ExperimentPair::gaussian(mu / nf.sqrt()))?, u64::from(n)))?;
        let drift = sup_distance(&composed, &exact);
        if drift > 1e-15 {
            failures.push(format!("mu={mu}: symbolic composition off by {drift:.3e}"));
        }
        let quad = lib(clt_limit(kl, k2))?;
        let d = sup_distance(&quad, &exact);
        if d > 1e-3 {
            failures.push(format!("mu={mu}: quadrature limit off by {d:.3e}"));
        }
        notes.push(format!("mu={mu}: |dkl|={:.1e} |dk2|={:.1e}", (kl - mu * mu / 2.0).abs(), (k2 - mu * mu).abs()));
    }
    for k in [0.125, 0.5, 2.0] {
        let z = gaussian_llr_table(&[(1.0, k)], &Numerics::default()).tilt_normalizer();
        let oracle = tilt_oracle(k);
        if (z - 1.0).abs() > 1e-9 {
            failures.push(format!("k={k}: tilt normalizer {z}"));
        }
        if (oracle - 1.0).abs() > 1e-9 {
            failures.push(format!("k={k}: quadrature tilt {oracle}"));
        }
    }
    notes.push("tilt normalizers within 1e-9".into());
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn mechanism_tightness() -> Check {
    let p = lib(calibrate(1.0, 3.0, &lib(StatRange::new(0.0, 1.0, 1.0))?))?;
    ensure(p.intensity(0.0) == 1.0 && p.intensity(1.0) == 3.0, format!("intensities {} {}", p.intensity(0.0), p.intensity(1.0)))?;
    let r = lib(verify_guarantee(&p, &[(0.0, 1.0), (1.0, 0.0)]))?;
    for pc in &r.pairs {
        ensure(pc.min_slack.abs() <= 1e-8, format!("pair {:?} slack {}", pc.pair, pc.min_slack))?;
    }
    let mut worst = f64::INFINITY;
    for (l1, l2, c, lam) in [(1.0, 3.0, 0.5, 1.0), (1.0, 3.0, 2.0, 0.5), (2.0, 4.0, 0.3, 1.5), (3.0, 1.0, 0.7, 0.9), (0.5, 5.0, 1.0, 0.0)] {
        let rep = lib(kernel_lemma_check(l1, l2, c, lam))?;
        for ch in rep.checks.iter().filter(|c| c.applicable) {
            worst = worst.min(ch.min_slack);
        }
        ensure(rep.kernel_realization_gap <= 1e-9, format!("kernel realization gap {}", rep.kernel_realization_gap))?;
    }
    ensure(worst >= -1e-8, format!("lemma slack {worst}"))?;
    Ok(format!("lambda(0)=1, lambda(1)=3, equality slack {:.1e}, lemma min slack {worst:.1e}", r.pairs[0].min_slack))
}

fn mixture_cross_check() -> Check {
    let third = 1.0 / 3.0;
    let spec = lib(MixtureSpec::new(vec![(third, 0.5), (third, 1.0), (1.0 - 2.0 * third, 2.0)], 1.0))?;
    let m = lib(mixture_curve(&spec))?;
    ensure(m.cross_check_gap <= 1e-4, format!("solver gap {}", m.cross_check_gap))?;
    let comps: Vec<TradeoffCurve> =
        [0.5f64, 1.0, 2.0].iter().map(|t| TradeoffCurve::gaussian(t.sqrt()).unwrap()).collect();
    for a in (1..1000).map(|i| f64::from(i) * 1e-3) {
        let v = m.curve.value(a);
        let lo = comps.iter().map(|c| c.value(a)).fold(f64::INFINITY, f64::min);
        let hi = comps.iter().map(|c| c.value(a)).fold(0.0, f64::max);
        ensure(v >= lo - 1e-9 && v <= hi + 1e-9, format!("mixture outside component band at {a}"))?;
    }
    let fit = lib(mixture_gaussian_fit(&spec, &m.curve))?;
    ensure(
        fit.sup_distance >= 10.0 * m.cross_check_gap,
        format!("gaussian fit {} not 10x the gap {}", fit.sup_distance, m.cross_check_gap),
    )?;
    Ok(format!("solver gap {:.2e}, best gaussian fit mu={:.4} at sup {:.2e}", m.cross_check_gap, fit.mu, fit.sup_distance))
}

fn coarsening() -> Check {
    let fam = ShiftFamily::standard(ShiftKind::Gaussian);
    let binned = lib(binned_shift_curve(&fam, 1.0, 1.0))?;
    let closed = lib(TradeoffCurve::gaussian(1.0))?;
    let mut touch = 0.0f64;
    for k in -4..=4 {
        let a = norm_sf(f64::from(k));
        let exact = norm_cdf(f64::from(k) - 1.0);
        touch = touch.max((binned.value(a) - exact).abs()).max((closed.value(a) - exact).abs());
    }
    ensure(touch <= 1e-12, format!("touching error {touch:.3e}"))?;
    let (a, gap) = min_gap(&binned, &closed, 1e-3);
    ensure(gap >= -1e-12, format!("gaussian binned curve below closed form by {gap:.3e} at {a}"))?;
    let lap = lib(binned_shift_curve(&ShiftFamily::standard(ShiftKind::Laplace), 1.0, 1.0))?;
    let lap_closed = lib(TradeoffCurve::shift(ShiftKind::Laplace, 1.0))?;
    let (a, lgap) = min_gap(&lap, &lap_closed, 1e-3);
    ensure(lgap >= -1e-12, format!("laplace binned curve below closed form by {lgap:.3e} at {a}"))?;
    let strict = sup_distance(&lap, &lap_closed);
    ensure(strict > 1e-6, "laplace binned curve shows no loss")?;
    Ok(format!("touch {touch:.1e}, gaussian min gap {gap:.1e}, laplace min gap {lgap:.1e}, laplace max loss {strict:.2e}"))
}

fn random_pair(rng: &mut ChaCha8Rng) -> ExperimentPair {
    let k = rng.random_range(2..=5);
    let mut draw = || {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        DiscreteDist::new(w.iter().enumerate().map(|(i, m)| (i as f64, m / s))).unwrap()
    };
    let p = draw();
    let q = draw();
    ExperimentPair::discrete(p, q)
}

fn random_partition(rng: &mut ChaCha8Rng, labels: usize) -> Partition {
    let cells = rng.random_range(1..=labels);
    let mut assign: Vec<usize> = (0..labels).map(|i| if i < cells { i } else { rng.random_range(0..cells) }).collect();
    for i in (1..labels).rev() {
        assign.swap(i, rng.random_range(0..=i));
    }
    let labels: Vec<f64> = (0..labels).map(|i| i as f64).collect();
    Partition::from_fn(&labels, |x| assign[x as usize]).unwrap()
}

fn support_len(e: &ExperimentPair) -> usize {
    match e {
        ExperimentPair::Discrete { p, .. } => p.len(),
        _ => unreachable!(),
    }
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut built: Vec<TradeoffCurve> = Vec::new();
    let tol = 1e-9;
    let identity = TradeoffCurve::identity();
    for _ in 0..50 {
        let (a, b, c) = (random_pair(&mut rng), random_pair(&mut rng), random_pair(&mut rng));
        let (f, g, h) = (lib(curve(&a))?, lib(curve(&b))?, lib(curve(&c))?);
        let fg = lib(tensor_curves(&f, &g))?;
        let gf = lib(tensor_curves(&g, &f))?;
        ensure(sup_distance(&fg, &gf) <= tol, "commutativity")?;
        let left = lib(tensor_curves(&fg, &h))?;
        let right = lib(tensor_curves(&f, &lib(tensor_curves(&g, &h))?))?;
        ensure(sup_distance(&left, &right) <= tol, "associativity")?;
        ensure(sup_distance(&lib(tensor_curves(&f, &identity))?, &f) <= tol, "identity")?;
        let inv = lib(tensor_curves(&f.inverse(), &g.inverse()))?;
        ensure(sup_distance(&fg.inverse(), &inv) <= tol, "inverse")?;
        let bins = random_partition(&mut rng, support_len(&a));
        let coarse = lib(curve(&lib(coarsen_pair(&a, &bins))?))?;
        let (_, mono) = min_gap(&lib(tensor_curves(&coarse, &g))?, &fg, 1e-3);
        ensure(mono >= -tol, format!("monotonicity slack {mono}"))?;
        built.extend([f, g, h, fg, gf, left, right, inv, coarse]);
    }
    for _ in 0..50 {
        let (a, b, c) = (random_pair(&mut rng), random_pair(&mut rng), random_pair(&mut rng));
        let (g, f1, f2) = (lib(curve(&a))?, lib(curve(&b))?, lib(curve(&c))?);
        let lhs = sup_distance(&lib(tensor_curves(&g, &f1))?, &lib(tensor_curves(&g, &f2))?);
        ensure(lhs <= sup_distance(&f1, &f2) + tol, format!("product Lipschitz bound {lhs}"))?;
    }
    for _ in 0..100 {
        let a = random_pair(&mut rng);
        let bins = random_partition(&mut rng, support_len(&a));
        let (fine, coarse) = (lib(curve(&a))?, lib(curve(&lib(coarsen_pair(&a, &bins))?))?);
        let (_, dp) = min_gap(&coarse, &fine, 1e-3);
        ensure(dp >= -1e-12, format!("data processing slack {dp}"))?;
    }
    let builtins = [
        lib(ExperimentPair::bernoulli(0.3, 0.7))?,
        lib(ExperimentPair::binomial(20, 0.2, 0.4))?,
        lib(ExperimentPair::poisson(1.0, 3.0))?,
        lib(ExperimentPair::poisson(4.0, 2.0))?,
        lib(ExperimentPair::gaussian(1.0))?,
        lib(ExperimentPair::shift(ShiftFamily::standard(ShiftKind::Laplace), 1.0))?,
    ];
    let mut llr_worst = 0.0f64;
    for e in &builtins {
        llr_worst = llr_worst.max(lib(llr_identity_check(e))?);
        built.push(lib(curve(e))?);
    }
    ensure(llr_worst <= 1e-8, format!("llr identity {llr_worst:.3e}"))?;
    let mut ldp_worst = 0.0f64;
    for pair in [lib(ExperimentPair::gaussian(1.0))?, lib(ExperimentPair::bernoulli(0.3, 0.7))?] {
        let r = lib(ldp_rate(&pair, 0.5, &[200, 300, 400]))?;
        for e in &r.entries {
            ldp_worst = ldp_worst.max((e.empirical_rate - r.analytic_rate).abs());
        }
    }
    ensure(ldp_worst <= 0.05, format!("ldp rate gap {ldp_worst:.3e}"))?;
    let uncertified = built.iter().filter(|c| c.certify().is_err()).count();
    ensure(uncertified == 0, format!("{uncertified} curves fail the certificate"))?;
    Ok(format!("{} curves certified, llr identity {llr_worst:.1e}, ldp gap {ldp_worst:.3}", built.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Duration); 6] = [
        ("1 binomial-to-poisson convergence", binomial_to_poisson, Duration::from_secs(10)),
        ("2 gaussian CLT consistency", gaussian_clt, Duration::from_secs(180)),
        ("3 poisson mechanism tightness", mechanism_tightness, Duration::from_secs(5)),
        ("4 mixture cross-check", mixture_cross_check, Duration::from_secs(30)),
        ("5 coarsening", coarsening, Duration::from_secs(180)),
        ("6 property suites", property_suites, Duration::from_secs(180)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let outcome = match result {
            Ok(_) if took > budget => Err(format!("took {took:.2?}, budget {budget:.0?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
