#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Compound random measures: integrability checks, marginal and
//! multivariate intensities, tail behaviour and series simulation.
//!
//! A [`CormSpec`] combines a score distribution, a directing Lévy measure
//! and a homogeneous base measure. [`check_corm`] decides whether the
//! resulting vector of random measures is well posed; [`tails`],
//! [`expcorm`] and [`sim`] evaluate and validate its intensities.

pub mod directing;
pub mod error;
pub mod expcorm;
pub mod integrability;
pub mod model;
pub mod quad;
pub mod report;
pub mod score;
pub mod sim;
pub mod specfile;
pub mod special;
pub mod tails;

pub use directing::{DirectingFamily, DirectingMeasure};
pub use error::{Error, Result};
pub use expcorm::{verify_exp_intensity, ExpCormIntensity, ExpIntensityReport};
pub use integrability::{
    check_corm, check_marginal, CheckOptions, CormVerdict, MarginalVerdict, Posedness,
};
pub use model::{BaseMeasure, CormSpec};
pub use quad::{IntegralResult, QuadConfig, Verdict};
pub use score::{Coupling, MarginalScore, ScoreFamily, ScoreModel};
pub use sim::{sample_corm, validate_tails, CormDraw, SimOptions, SimReport, Truncation};
pub use specfile::{load_spec, parse_spec};
pub use tails::{
    estimate_rv_index, verify_tail_factorization, RvDiagnostic, RvVerdict, TailsConfig,
};
