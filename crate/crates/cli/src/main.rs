//! `tradeoff`: trade-off curves, composition, limits, the Poisson mechanism
//! and coarsening from the command line.

mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tradeoff::coarsen::binned_shift_curve;
use tradeoff::compose::{clt_limit, self_compose_with, CompositionReport};
use tradeoff::idp::{idp_curve_with, mixture_curve_with, mixture_gaussian_fit, random_stopping_sim, MixtureSpec};
use tradeoff::mechanism::{calibrate, calibrate_with_w_hg, release, verify_guarantee};
use tradeoff::neyman::{curve_with, moment_functionals};
use tradeoff::tofcurve::{levy_distance, sup_distance};
use tradeoff::{ExperimentPair, Numerics, PoissonMechanismParams, ShiftFamily, ShiftKind, StatRange, TradeoffCurve};

use spec::{Limit, Spec, Subject};

#[derive(Parser)]
#[command(name = "tradeoff", version, about = "Trade-off functions of binary experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Neyman–Pearson curve of a pair, as CSV.
    Curve {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// n-fold self-composition of a pair, as CSV, with a convergence report.
    Compose {
        #[command(flatten)]
        pair: PairArgs,
        /// Number of compositions.
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArgs,
        /// Report file; stderr when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Infinitely divisible or mixture limit from a spec file, with a cross-check report.
    Limit {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also run the random-stopping simulation with this n (mixture specs only).
        #[arg(long)]
        simulate: Option<u64>,
        /// Replicate seeds, comma separated
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        draws: usize,
    },
    /// Poisson mechanism.
    #[command(subcommand)]
    Mechanism(MechanismCommand),
    /// Curve of a shift pair seen through bins of a given width.
    Coarsen {
        #[arg(long, value_parser = ["gaussian", "laplace"])]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        width: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sup and Lévy distance between two curve CSVs.
    Metrics { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand)]
enum MechanismCommand {
    /// Parameters for μ₁ < μ₂ and a statistic range.
    Calibrate {
        #[arg(long)]
        mu1: f64,
        #[arg(long)]
        mu2: f64,
        #[arg(long, allow_hyphen_values = true)]
        g_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        g_max: Option<f64>,
        #[arg(long)]
        w_g: f64,
        /// Required when the range is unbounded.
        #[arg(long)]
        w_hg: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One seeded draw of the mechanism at a statistic value.
    Release {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Checks the guarantee on neighbor pairs.
    Verify {
        #[arg(long)]
        params: PathBuf,
        /// Pairs as g1:g2, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pairs: Vec<String>,
        /// All integer neighbors in [g_min, g_max], as g_min,g_max.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PairArgs {
    /// λ₁,λ₂
    #[arg(long, value_delimiter = ',')]
    poisson: Option<Vec<f64>>,
    /// p,q
    #[arg(long, value_delimiter = ',')]
    bernoulli: Option<Vec<f64>>,
    /// n,p,q
    #[arg(long, value_delimiter = ',')]
    binomial: Option<Vec<f64>>,
    #[arg(long)]
    gaussian: Option<f64>,
    #[arg(long)]
    laplace: Option<f64>,
    /// ε,δ
    #[arg(long, value_delimiter = ',')]
    eps_delta: Option<Vec<f64>>,
    /// JSON spec file.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Uniform α step of the CSV rows (breakpoints are always included).
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

enum Failure {
    Usage(String),
    Library(tradeoff::Error),
}

impl From<tradeoff::Error> for Failure {
    fn from(e: tradeoff::Error) -> Self {
        Failure::Library(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Curve { pair, out } => {
            let (subject, numerics) = pair.resolve()?;
            let f = match subject {
                Subject::Pair(p) => curve_with(&p, &numerics)?,
                Subject::Curve(c) => c,
            };
            emit_curve(&f, &out)
        }
        Command::Compose { pair, n, out, report } => {
            let (subject, numerics) = pair.resolve()?;
            let p = match subject {
                Subject::Pair(p) => p,
                Subject::Curve(c) => ExperimentPair::from_curve(&c)?,
            };
            let base = curve_with(&p, &numerics)?;
            let composed = self_compose_with(&p, n, &numerics)?;
            let m = moment_functionals(&base);
            let (kl_sum, kappa2_sum) = (n as f64 * m.kl, n as f64 * m.kappa2);
            let limit = if kappa2_sum > 0.0 && kl_sum.is_finite() {
                let lim = clt_limit(kl_sum, kappa2_sum)?;
                Some(CompositionReport::new(n, &composed, &lim))
            } else {
                None
            };
            emit_curve(&composed, &out)?;
            let body = json!({
                "n": n,
                "kl_sum": finite_or_null(kl_sum),
                "kappa2_sum": finite_or_null(kappa2_sum),
                "clt_mu": limit.map(|_| 2.0 * kl_sum / kappa2_sum.sqrt()),
                "sup_distance_to_limit": limit.map(|r| r.sup_distance_to_limit),
                "levy_distance_to_limit": limit.map(|r| r.levy_distance_to_limit),
                "coarsening_error": composed.meta().coarsening_error,
                "truncation_deficit": composed.meta().truncation_deficit,
            });
            emit_report(&body, report.as_deref())
        }
        Command::Limit { spec, out, report, simulate, seeds, draws } => {
            let (spec, numerics) = read_spec(&spec)?;
            let limit = spec
                .limit()
                .ok_or_else(|| Failure::Usage("limit needs a spec of kind `idp` or `mixture`".into()))?;
            match limit {
                Limit::Idp(s) => {
                    let f = idp_curve_with(&s, &numerics)?;
                    emit_curve(&f, &out)?;
                    let body = json!({
                        "kind": "idp",
                        "coarsening_error": f.meta().coarsening_error,
                        "truncation_deficit": f.meta().truncation_deficit,
                    });
                    emit_report(&body, report.as_deref())
                }
                Limit::Mixture(s) => {
                    let s = MixtureSpec::new(s.components, s.sigma)?;
                    let m = mixture_curve_with(&s, &numerics)?;
                    let fit = mixture_gaussian_fit(&s, &m.curve)?;
                    emit_curve(&m.curve, &out)?;
                    let stopping = match simulate {
                        Some(n) => Some(random_stopping_sim(&s, n, &seeds, draws)?),
                        None => None,
                    };
                    let body = json!({
                        "kind": "mixture",
                        "cross_check_gap": m.cross_check_gap,
                        "gaussian_fit": fit,
                        "random_stopping": stopping,
                    });
                    emit_report(&body, report.as_deref())
                }
            }
        }
        Command::Mechanism(m) => run_mechanism(m),
        Command::Coarsen { family, mu, width, out } => {
            let kind = if family == "gaussian" { ShiftKind::Gaussian } else { ShiftKind::Laplace };
            let f = binned_shift_curve(&ShiftFamily::standard(kind), mu, width)?;
            emit_curve(&f, &out)
        }
        Command::Metrics { a, b } => {
            let f = TradeoffCurve::from_csv(&read(&a)?).map_err(|e| Failure::Usage(format!("{}: {e}", a.display())))?;
            let g = TradeoffCurve::from_csv(&read(&b)?).map_err(|e| Failure::Usage(format!("{}: {e}", b.display())))?;
            println!("{}", json!({ "sup": sup_distance(&f, &g), "levy": levy_distance(&f, &g) }));
            Ok(())
        }
    }
}

fn run_mechanism(command: MechanismCommand) -> Outcome {
    match command {
        MechanismCommand::Calibrate { mu1, mu2, g_min, g_max, w_g, w_hg, out } => {
            let params = match w_hg {
                Some(w) => calibrate_with_w_hg(mu1, mu2, w_g, w)?,
                None => {
                    let range = StatRange::new(
                        g_min.unwrap_or(f64::NEG_INFINITY),
                        g_max.unwrap_or(f64::INFINITY),
                        w_g,
                    )?;
                    calibrate(mu1, mu2, &range)?
                }
            };
            let text = serde_json::to_string_pretty(&params).expect("params serialize");
            match out {
                Some(path) => write(&path, &(text + "\n")),
                None => {
                    println!("{text}");
                    Ok(())
                }
            }
        }
        MechanismCommand::Release { params, g, seed } => {
            let params = read_params(&params)?;
            println!("{}", release(&params, g, seed)?);
            Ok(())
        }
        MechanismCommand::Verify { params, pairs, grid } => {
            let params = read_params(&params)?;
            let mut list = pairs.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
            if let Some(g) = grid {
                if g.len() != 2 {
                    return Err(Failure::Usage("--grid takes g_min,g_max".into()));
                }
                list.extend(StatRange::new(g[0], g[1], params.w_g)?.integer_neighbors()?);
            }
            if list.is_empty() {
                return Err(Failure::Usage("verify needs --pairs or --grid".into()));
            }
            let report = verify_guarantee(&params, &list)?;
            println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("report serializes"));
            Ok(())
        }
    }
}

impl PairArgs {
    fn resolve(self) -> Result<(Subject, Numerics), Failure> {
        if let Some(path) = &self.spec {
            let (spec, numerics) = read_spec(path)?;
            return Ok((spec.subject(&numerics)?, numerics));
        }
        let numerics = Numerics::default();
        let arity = |v: Option<Vec<f64>>, n: usize, name: &str| -> Result<Option<Vec<f64>>, Failure> {
            match v {
                Some(v) if v.len() != n => {
                    Err(Failure::Usage(format!("--{name} takes {n} comma-separated values, got {}", v.len())))
                }
                v => Ok(v),
            }
        };
        let (poisson, bernoulli) = (arity(self.poisson, 2, "poisson")?, arity(self.bernoulli, 2, "bernoulli")?);
        let (binomial, eps_delta) = (arity(self.binomial, 3, "binomial")?, arity(self.eps_delta, 2, "eps-delta")?);
        let spec = if let Some(v) = poisson {
            Spec::Poisson { lambda1: v[0], lambda2: v[1] }
        } else if let Some(v) = bernoulli {
            Spec::Bernoulli { p: v[0], q: v[1] }
        } else if let Some(v) = binomial {
            if v[0] < 0.0 || v[0].fract() != 0.0 {
                return Err(Failure::Usage(format!("binomial n must be a nonnegative integer, got {}", v[0])));
            }
            Spec::Binomial { n: v[0] as u64, p: v[1], q: v[2] }
        } else if let Some(mu) = self.gaussian {
            Spec::Gaussian { mu }
        } else if let Some(mu) = self.laplace {
            Spec::Laplace { mu }
        } else if let Some(v) = eps_delta {
            Spec::EpsDelta { eps: v[0], delta: v[1] }
        } else {
            unreachable!("clap requires one pair option")
        };
        Ok((spec.subject(&numerics)?, numerics))
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("pair '{s}' is not of the form g1:g2"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<(Spec, Numerics), Failure> {
    spec::parse(&read(path)?, &path.display().to_string()).map_err(Failure::Usage)
}

fn read_params(path: &Path) -> Result<PoissonMechanismParams, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))
}

/// CSV with a leading `#` line carrying the curve metadata as JSON.
fn emit_curve(f: &TradeoffCurve, out: &OutArgs) -> Outcome {
    if !(out.step > 0.0 && out.step <= 0.5) {
        return Err(Failure::Usage(format!("step must lie in (0, 0.5], got {}", out.step)));
    }
    let text = format!("# {}\n{}", f.metadata_json(), f.to_csv(out.step));
    match &out.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(body: &serde_json::Value, path: Option<&Path>) -> Outcome {
    let text = serde_json::to_string_pretty(body).expect("report serializes") + "\n";
    match path {
        Some(p) => write(p, &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}
