//! JSON wire formats.
//!
//! Numbers are written with the shortest representation that round-trips
//! to the same double, so every document re-reads bit-exactly.

use serde::{Deserialize, Serialize};

use crate::costexpr::PayoffExpr;
use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::measures::{DiscreteMeasure, MeasurePair, OrderVerdict};
use crate::mot::{Coupling, SolveReport};
use crate::stability::{PerturbationScheme, SchemeKind};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn to_measure(&self) -> Result<DiscreteMeasure<f64>> {
        DiscreteMeasure::from_f64(&self.atoms, &self.weights)
    }
}

impl From<&DiscreteMeasure<f64>> for MeasureJson {
    fn from(m: &DiscreteMeasure<f64>) -> Self {
        Self {
            atoms: m.atoms().to_vec(),
            weights: m.weights().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CouplingJson {
    pub x_atoms: Vec<f64>,
    pub y_atoms: Vec<f64>,
    pub mass: Vec<Vec<f64>>,
}

impl CouplingJson {
    pub fn to_coupling(&self) -> Result<Coupling<f64>> {
        Coupling::new(self.x_atoms.clone(), self.y_atoms.clone(), self.mass.clone())
    }
}

impl From<&Coupling<f64>> for CouplingJson {
    fn from(q: &Coupling<f64>) -> Self {
        Self {
            x_atoms: q.x_atoms().to_vec(),
            y_atoms: q.y_atoms().to_vec(),
            mass: q.mass_rows(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveReportJson {
    pub value: f64,
    pub optimizer: CouplingJson,
    pub martingale_residual: f64,
    pub lp_iterations: usize,
}

impl From<&SolveReport<f64>> for SolveReportJson {
    fn from(r: &SolveReport<f64>) -> Self {
        Self {
            value: r.value,
            optimizer: (&r.optimizer).into(),
            martingale_residual: r.martingale_residual,
            lp_iterations: r.lp_iterations,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum VerdictJson {
    Holds,
    FailsMean { gap: f64 },
    FailsAt { x: f64, gap: f64 },
}

impl From<&OrderVerdict<f64>> for VerdictJson {
    fn from(v: &OrderVerdict<f64>) -> Self {
        match *v {
            OrderVerdict::Holds => VerdictJson::Holds,
            OrderVerdict::FailsMean { gap } => VerdictJson::FailsMean { gap },
            OrderVerdict::FailsAt { x, gap } => VerdictJson::FailsAt { x, gap },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    pub mu1: MeasureJson,
    pub mu2: MeasureJson,
}

impl PairJson {
    pub fn to_pair(&self) -> Result<MeasurePair<f64>> {
        Ok(MeasurePair::new(self.mu1.to_measure()?, self.mu2.to_measure()?))
    }
}

impl From<&MeasurePair<f64>> for PairJson {
    fn from(p: &MeasurePair<f64>) -> Self {
        Self {
            mu1: (&p.mu1).into(),
            mu2: (&p.mu2).into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SchemeJson {
    pub kind: SchemeKind,
    pub levels: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SenseJson {
    #[default]
    Max,
    Min,
}

impl From<SenseJson> for Sense {
    fn from(s: SenseJson) -> Self {
        match s {
            SenseJson::Max => Sense::Max,
            SenseJson::Min => Sense::Min,
        }
    }
}

/// Experiment description consumed by the `sweep` and `hemi` commands.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentJson {
    pub base: PairJson,
    pub cost: String,
    #[serde(default)]
    pub sense: SenseJson,
    pub scheme: SchemeJson,
    /// Target coupling for lower-hemicontinuity sweeps; defaults to a solved
    /// optimizer of the base problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<CouplingJson>,
}

/// Validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub base: MeasurePair<f64>,
    pub payoff: PayoffExpr,
    pub sense: Sense,
    pub scheme: PerturbationScheme,
    pub target: Option<Coupling<f64>>,
}

impl ExperimentJson {
    pub fn to_experiment(&self) -> Result<Experiment> {
        Ok(Experiment {
            base: self.base.to_pair()?,
            payoff: PayoffExpr::parse(&self.cost)?,
            sense: self.sense.into(),
            scheme: PerturbationScheme::new(
                self.scheme.kind,
                self.scheme.levels.clone(),
                self.scheme.seed,
            )?,
            target: self.target.as_ref().map(CouplingJson::to_coupling).transpose()?,
        })
    }
}

/// Serializes with full round-trip precision.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(text)
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(format!("JSON: {e}"))
    }
}
