//! Perturbation sweeps for the value function and the martingale coupling
//! correspondence.
//!
//! A sweep perturbs a base pair of marginals along a schedule of levels and
//! records, per level, how far the perturbed pair is from the base (W⊕) next
//! to the quantity under study: the value gap, the distance from a fixed
//! martingale coupling to the perturbed coupling set (lower direction), or
//! the distance from perturbed optimizers back to the base coupling set and
//! to the base ε-optimal face (upper direction).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costexpr::PayoffExpr;
use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::measures::{check_convex_order, quantize, w_oplus, DiscreteMeasure, MeasurePair, ORDER_TOL};
use crate::mot::{
    is_martingale_coupling, martingale_residual, project_to_face_of_value,
    project_to_martingale_set, solve_mot, Coupling, MotProblem,
};

/// Consecutive gaps may grow by at most this factor.
pub const BAND_FACTOR: f64 = 2.0;
/// Absolute slack added to the band so that gaps at LP precision never fail it.
pub const BAND_SLACK: f64 = 1e-9;
/// Floor of the terminal tolerance.
pub const TERMINAL_FLOOR: f64 = 1e-6;
/// Membership tolerance for couplings handed to a sweep.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Levels are resolutions `n`; the pair is quantized to `n` blocks.
    QuantileResolution,
    /// Levels are scales `σ`; every atom of μ2 is split into `x ± σ`.
    MeanPreservingNoise,
    /// Levels are weights `σ ∈ [0, 1]`; μ1 is mixed with a Dirac at its mean.
    MixtureShift,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::QuantileResolution => "quantile_resolution",
            SchemeKind::MeanPreservingNoise => "mean_preserving_noise",
            SchemeKind::MixtureShift => "mixture_shift",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationScheme {
    pub kind: SchemeKind,
    pub levels: Vec<f64>,
    pub seed: u64,
}

impl PerturbationScheme {
    pub fn new(kind: SchemeKind, levels: Vec<f64>, seed: u64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("scheme needs at least one level".into()));
        }
        for &l in &levels {
            let ok = match kind {
                SchemeKind::QuantileResolution => {
                    l >= 1.0 && l.fract() == 0.0 && l <= u32::MAX as f64
                }
                SchemeKind::MeanPreservingNoise => l.is_finite() && l >= 0.0,
                SchemeKind::MixtureShift => (0.0..=1.0).contains(&l),
            };
            if !ok {
                return Err(Error::InvalidInput(format!("level {l} is not valid for {kind}")));
            }
        }
        Ok(Self { kind, levels, seed })
    }
}

fn perturb(base: &MeasurePair<f64>, kind: SchemeKind, level: f64) -> Result<MeasurePair<f64>> {
    Ok(match kind {
        SchemeKind::QuantileResolution => {
            let n = level as usize;
            MeasurePair::new(quantize(&base.mu1, n)?, quantize(&base.mu2, n)?)
        }
        SchemeKind::MeanPreservingNoise => {
            let mut atoms = Vec::with_capacity(2 * base.mu2.len());
            let mut weights = Vec::with_capacity(2 * base.mu2.len());
            for (&x, &w) in base.mu2.iter() {
                atoms.extend([x - level, x + level]);
                weights.extend([0.5 * w, 0.5 * w]);
            }
            MeasurePair::new(base.mu1.clone(), DiscreteMeasure::canonicalize(&atoms, &weights)?)
        }
        SchemeKind::MixtureShift => {
            let center = DiscreteMeasure::dirac(base.mu1.mean());
            MeasurePair::new(base.mu1.mix(&center, level)?, base.mu2.clone())
        }
    })
}

/// Perturbed pairs, one per level, each re-checked for convex order.
pub fn generate_sequence(
    base: &MeasurePair<f64>,
    scheme: &PerturbationScheme,
) -> Result<Vec<MeasurePair<f64>>> {
    require_order(base)?;
    scheme
        .levels
        .iter()
        .map(|&level| {
            let pair = perturb(base, scheme.kind, level)?;
            let verdict = check_convex_order(&pair.mu1, &pair.mu2, &ORDER_TOL);
            if !verdict.holds() {
                return Err(Error::SchemeViolation(format!(
                    "{} at level {level}: {verdict}",
                    scheme.kind
                )));
            }
            Ok(pair)
        })
        .collect()
}

fn require_order(pair: &MeasurePair<f64>) -> Result<()> {
    let verdict = check_convex_order(&pair.mu1, &pair.mu2, &ORDER_TOL);
    if verdict.holds() {
        Ok(())
    } else {
        Err(Error::NotInConvexOrder { verdict })
    }
}

/// Limit pair, approximating pairs and the couplings attached to them.
#[derive(Clone, Debug)]
pub struct HemiTestCase {
    pub limit_pair: MeasurePair<f64>,
    pub sequence_pairs: Vec<MeasurePair<f64>>,
    /// One coupling per sequence pair (upper direction).
    pub couplings: Option<Vec<Coupling<f64>>>,
    /// Coupling of the limit pair to be approximated (lower direction).
    pub target_coupling: Option<Coupling<f64>>,
}

impl HemiTestCase {
    pub fn validate(&self) -> Result<()> {
        require_order(&self.limit_pair)?;
        for p in &self.sequence_pairs {
            require_order(p)?;
        }
        let tol = MEMBERSHIP_TOL;
        if let Some(qs) = &self.couplings {
            if qs.len() != self.sequence_pairs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} couplings for {} pairs",
                    qs.len(),
                    self.sequence_pairs.len()
                )));
            }
            for (q, p) in qs.iter().zip(&self.sequence_pairs) {
                if q.marginal_error(p) > tol {
                    return Err(Error::InvalidInput("coupling marginals do not match their pair".into()));
                }
            }
        }
        if let Some(q) = &self.target_coupling {
            if !is_martingale_coupling(q, &self.limit_pair, &tol) {
                return Err(Error::NotInMartingaleSet {
                    residual: martingale_residual(q).max(q.marginal_error(&self.limit_pair)),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Value,
    Lower,
    Upper,
}

/// One level of a sweep. Columns that a sweep does not compute are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub level: f64,
    pub w_oplus_gap: f64,
    pub value_gap: Option<f64>,
    pub lower_hemi_dist: Option<f64>,
    /// Distance from the level optimizer to the base coupling set.
    pub upper_hemi_dist: Option<f64>,
    /// Distance from the level optimizer to the base ε-optimal face.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_dist: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub sweep: SweepKind,
    pub scheme: PerturbationScheme,
    /// Optimal value of the base problem (`None` for the lower sweep).
    pub reference_value: Option<f64>,
    pub rows: Vec<StabilityRow>,
    pub verdicts: Vec<Verdict>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Worker threads for the levels; `None` or `Some(1)` runs sequentially.
    pub threads: Option<usize>,
    /// Terminal tolerance; verdicts use `max(1e-6, tolerance)`.
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            threads: None,
            tolerance: 1e-3,
        }
    }
}

/// Reads `MOTLAB_THREADS`. Unset means sequential.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("MOTLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidInput(format!(
                "MOTLAB_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}

fn per_level<R, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    match threads {
        Some(t) if t > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(|| (0..n).into_par_iter().map(&f).collect()),
        _ => (0..n).map(f).collect(),
    }
}

fn terminal(name: &str, series: &[f64], tol: f64) -> Verdict {
    let last = series.last().copied().unwrap_or(0.0);
    Verdict {
        check: format!("terminal_{name}"),
        pass: last <= tol.max(TERMINAL_FLOOR),
    }
}

fn band(name: &str, series: &[f64]) -> Verdict {
    Verdict {
        check: format!("{name}_band"),
        pass: series
            .windows(2)
            .all(|w| w[1] <= BAND_FACTOR * w[0] + BAND_SLACK),
    }
}

fn w_oplus_trend(scheme: &PerturbationScheme, rows: &[StabilityRow]) -> Option<Verdict> {
    (scheme.kind == SchemeKind::QuantileResolution).then(|| Verdict {
        check: "w_oplus_nonincreasing".into(),
        pass: rows
            .windows(2)
            .all(|w| w[1].w_oplus_gap <= w[0].w_oplus_gap + 1e-12),
    })
}

fn column(rows: &[StabilityRow], f: impl Fn(&StabilityRow) -> Option<f64>) -> Vec<f64> {
    rows.iter().filter_map(f).collect()
}

/// Value gaps `|m(pairⁿ) − m(base)|` along the schedule.
pub fn value_continuity_sweep(
    base: &MeasurePair<f64>,
    payoff: &PayoffExpr,
    sense: Sense,
    scheme: &PerturbationScheme,
    opts: &SweepOptions,
) -> Result<StabilityReport> {
    let reference = solve_mot(&MotProblem::new(base.clone(), payoff.clone(), sense))?.value;
    let pairs = generate_sequence(base, scheme)?;
    let rows = per_level(pairs.len(), opts.threads, |k| {
        let p = MotProblem::new(pairs[k].clone(), payoff.clone(), sense);
        let value = solve_mot(&p)?.value;
        Ok(StabilityRow {
            level: scheme.levels[k],
            w_oplus_gap: w_oplus(&pairs[k], base),
            value_gap: Some((value - reference).abs()),
            lower_hemi_dist: None,
            upper_hemi_dist: None,
            optimizer_dist: None,
        })
    })?;
    let gaps = column(&rows, |r| r.value_gap);
    let mut verdicts = vec![terminal("value_gap", &gaps, opts.tolerance), band("value_gap", &gaps)];
    verdicts.extend(w_oplus_trend(scheme, &rows));
    Ok(StabilityReport {
        sweep: SweepKind::Value,
        scheme: scheme.clone(),
        reference_value: Some(reference),
        rows,
        verdicts,
    })
}

/// Distances from `target ∈ M(base)` to the perturbed coupling sets.
pub fn lower_hemi_sweep(
    base: &MeasurePair<f64>,
    target: &Coupling<f64>,
    scheme: &PerturbationScheme,
    opts: &SweepOptions,
) -> Result<StabilityReport> {
    let case = HemiTestCase {
        limit_pair: base.clone(),
        sequence_pairs: generate_sequence(base, scheme)?,
        couplings: None,
        target_coupling: Some(target.clone()),
    };
    case.validate()?;
    let pairs = &case.sequence_pairs;
    let rows = per_level(pairs.len(), opts.threads, |k| {
        let d = project_to_martingale_set(target, &pairs[k])?.distance;
        Ok(StabilityRow {
            level: scheme.levels[k],
            w_oplus_gap: w_oplus(&pairs[k], base),
            value_gap: None,
            lower_hemi_dist: Some(d),
            upper_hemi_dist: None,
            optimizer_dist: None,
        })
    })?;
    let d = column(&rows, |r| r.lower_hemi_dist);
    let mut verdicts = vec![terminal("lower_hemi_dist", &d, opts.tolerance), band("lower_hemi_dist", &d)];
    verdicts.extend(w_oplus_trend(scheme, &rows));
    Ok(StabilityReport {
        sweep: SweepKind::Lower,
        scheme: scheme.clone(),
        reference_value: None,
        rows,
        verdicts,
    })
}

/// Distances from perturbed optimizers to `M(base)` and to the base
/// ε-optimal face (`ε = 1e-6·(1 + |m|)`).
pub fn upper_hemi_sweep(
    base: &MeasurePair<f64>,
    payoff: &PayoffExpr,
    sense: Sense,
    scheme: &PerturbationScheme,
    opts: &SweepOptions,
) -> Result<StabilityReport> {
    let problem = MotProblem::new(base.clone(), payoff.clone(), sense);
    let reference = solve_mot(&problem)?.value;
    let pairs = generate_sequence(base, scheme)?;
    let solved = per_level(pairs.len(), opts.threads, |k| {
        solve_mot(&MotProblem::new(pairs[k].clone(), payoff.clone(), sense))
    })?;
    let case = HemiTestCase {
        limit_pair: base.clone(),
        sequence_pairs: pairs,
        couplings: Some(solved.iter().map(|s| s.optimizer.clone()).collect()),
        target_coupling: None,
    };
    case.validate()?;
    let pairs = &case.sequence_pairs;
    let rows = per_level(pairs.len(), opts.threads, |k| {
        let q = &solved[k].optimizer;
        let set = project_to_martingale_set(q, base)?.distance;
        let face = project_to_face_of_value(q, &problem, reference, None)?.distance;
        Ok(StabilityRow {
            level: scheme.levels[k],
            w_oplus_gap: w_oplus(&pairs[k], base),
            value_gap: Some((solved[k].value - reference).abs()),
            lower_hemi_dist: None,
            upper_hemi_dist: Some(set),
            optimizer_dist: Some(face),
        })
    })?;
    let set = column(&rows, |r| r.upper_hemi_dist);
    let face = column(&rows, |r| r.optimizer_dist);
    let mut verdicts = vec![
        terminal("upper_hemi_dist", &set, opts.tolerance),
        terminal("optimizer_dist", &face, opts.tolerance),
    ];
    verdicts.extend(w_oplus_trend(scheme, &rows));
    Ok(StabilityReport {
        sweep: SweepKind::Upper,
        scheme: scheme.clone(),
        reference_value: Some(reference),
        rows,
        verdicts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::InvalidInput(format!("unknown report format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "level,w_oplus_gap,value_gap,lower_hemi_dist,upper_hemi_dist";

/// Serializes a report. Numbers use the shortest round-trip form; columns a
/// sweep does not compute are empty in CSV and `null` in JSON.
pub fn emit_report(r: &StabilityReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("plain data serializes");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => {
            let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for row in &r.rows {
                s.push_str(&format!(
                    "{:?},{:?},{},{},{}\n",
                    row.level,
                    row.w_oplus_gap,
                    cell(row.value_gap),
                    cell(row.lower_hemi_dist),
                    cell(row.upper_hemi_dist)
                ));
            }
            s.into_bytes()
        }
    }
}
