//! Trade-off functions of binary experiments: exact Neyman–Pearson curves,
//! tensor composition, infinitely divisible limits, the Poisson mechanism
//! and coarsening.

pub mod coarsen;
pub mod compose;
pub mod dist;
pub mod error;
mod fmt;
pub mod idp;
pub mod mechanism;
pub mod neyman;
pub mod numerics;
pub mod special;
pub mod tofcurve;

pub use dist::{DiscreteDist, Kernel, Partition, ShiftFamily, ShiftKind};
pub use error::{Error, Result};
pub use fmt::fmt_f64;
pub use numerics::Numerics;
pub use tofcurve::{BayesRisk, BlackwellOrder, CurveForm, TradeoffCurve};
pub use neyman::{ExperimentPair, LikelihoodTable, LlrDist, MomentFunctionals};
pub use compose::{CompositionReport, LdpReport};
pub use idp::{IdpSpec, MixtureSpec};
pub use mechanism::{PoissonMechanismParams, StatRange};
