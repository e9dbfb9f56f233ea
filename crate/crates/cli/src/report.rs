//! Report schema `ksq/1`.
//!
//! Every floating-point measurement is wrapped in [`Tiered`] so readers know
//! which tolerance tier it belongs to: `exact` for values that involve no
//! derivatives, `ad` for values built from dual-number jets, `fd` for values
//! that difference a computed field.

use std::io::Write;

use ksq_core::kahler::{KahlerVerdict, PointVerdict, VerdictCounts, TOL_AD, TOL_FD};
use ksq_core::linalg::CONDITION_WARNING;
use ksq_core::sequence::{
    CollapseCheck, InvariantChecks, Period, PointOutcome, PointTrace, SequenceConfig,
    SequenceReport, TrivialityBounds,
};
use serde::Serialize;

pub const SCHEMA: &str = "ksq/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Exact,
    Ad,
    Fd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tiered<T> {
    pub value: T,
    pub tier: Tier,
}

pub fn exact<T>(value: T) -> Tiered<T> {
    Tiered {
        value,
        tier: Tier::Exact,
    }
}

pub fn ad<T>(value: T) -> Tiered<T> {
    Tiered {
        value,
        tier: Tier::Ad,
    }
}

pub fn fd<T>(value: T) -> Tiered<T> {
    Tiered {
        value,
        tier: Tier::Fd,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "ksq",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecInfo {
    pub name: String,
    pub dim: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigRecord {
    pub max_steps: usize,
    pub period_tol: f64,
    pub seed_torsion: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_relative_step: Option<f64>,
}

impl ConfigRecord {
    pub fn new(cfg: &SequenceConfig, fd_relative_step: Option<f64>) -> Self {
        Self {
            max_steps: cfg.max_steps,
            period_tol: cfg.period_tol,
            seed_torsion: cfg.seed_torsion.as_ref().map(|t| t.tensor().to_nested()),
            fd_relative_step,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeriodRecord {
    pub preperiod: usize,
    pub period: usize,
}

impl From<Period> for PeriodRecord {
    fn from(p: Period) -> Self {
        Self {
            preperiod: p.preperiod,
            period: p.period,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantRecord {
    pub metric_residual_even: Tiered<f64>,
    pub omega_residual_odd: Tiered<f64>,
    pub symmetric_part_mismatch: Tiered<f64>,
    pub torsion_mismatch: Tiered<f64>,
    pub hold: bool,
}

impl From<&InvariantChecks> for InvariantRecord {
    fn from(c: &InvariantChecks) -> Self {
        Self {
            metric_residual_even: ad(c.metric_residual_even),
            omega_residual_odd: ad(c.omega_residual_odd),
            symmetric_part_mismatch: ad(c.symmetric_part_mismatch),
            torsion_mismatch: ad(c.torsion_mismatch),
            hold: c.hold(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseRecord {
    pub d1: Tiered<f64>,
    pub d2: Tiered<f64>,
    pub holds: bool,
}

impl From<&CollapseCheck> for CollapseRecord {
    fn from(c: &CollapseCheck) -> Self {
        Self {
            d1: ad(c.d1),
            d2: ad(c.d2),
            holds: c.holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRecord {
    pub residual_bound: Tiered<f64>,
    pub distance_bound: Tiered<f64>,
    pub consistent: bool,
}

impl From<&TrivialityBounds> for BoundsRecord {
    fn from(b: &TrivialityBounds) -> Self {
        Self {
            residual_bound: ad(b.residual_bound),
            distance_bound: ad(b.distance_bound),
            consistent: b.consistent,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub trivial: bool,
    pub period: Option<PeriodRecord>,
    pub suggestive_period: Option<PeriodRecord>,
    pub tol_abs: Tiered<f64>,
    pub distances_to_first: Tiered<Vec<f64>>,
    pub consecutive: Tiered<Vec<f64>>,
    pub invariants: InvariantRecord,
    pub collapse: Option<CollapseRecord>,
    pub lc_omega_residual: Tiered<f64>,
    pub lc_metric_residual: Tiered<f64>,
    pub triviality_bounds: Option<BoundsRecord>,
    pub max_condition: Tiered<f64>,
}

impl From<&PointTrace> for TraceRecord {
    fn from(t: &PointTrace) -> Self {
        Self {
            trivial: t.trivial,
            period: t.period.map(Into::into),
            suggestive_period: t.suggestive_period.map(Into::into),
            tol_abs: ad(t.tol_abs),
            distances_to_first: ad(t.distances_to_first.clone()),
            consecutive: ad(t.consecutive.clone()),
            invariants: (&t.invariants).into(),
            collapse: t.collapse.as_ref().map(Into::into),
            lc_omega_residual: ad(t.lc_omega_residual),
            lc_metric_residual: ad(t.lc_metric_residual),
            triviality_bounds: t.triviality_bounds.as_ref().map(Into::into),
            max_condition: ad(t.max_condition),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequencePointRecord {
    pub index: usize,
    pub point: Tiered<Vec<f64>>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceSummaryRecord {
    pub points: usize,
    pub failed: usize,
    pub trivial: usize,
    pub periodic: usize,
    pub all_trivial: bool,
    pub worst_d1: Tiered<f64>,
    pub worst_invariants: InvariantRecord,
    pub collapse_violations: usize,
    pub period_two_detections: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceRunReport {
    pub schema: &'static str,
    pub tool: ToolInfo,
    pub command: &'static str,
    pub spec: SpecInfo,
    pub config: ConfigRecord,
    pub points: Vec<SequencePointRecord>,
    pub summary: SequenceSummaryRecord,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

fn condition_warnings(report: &SequenceReport) -> Vec<String> {
    report
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let t = p.trace()?;
            (t.max_condition > CONDITION_WARNING).then(|| {
                format!(
                    "point {i}: condition number {:e} exceeds {:e}",
                    t.max_condition, CONDITION_WARNING
                )
            })
        })
        .collect()
}

fn point_record(i: usize, p: &PointOutcome) -> SequencePointRecord {
    match p {
        PointOutcome::Traced(t) => SequencePointRecord {
            index: i,
            point: exact(t.point.clone()),
            status: "traced",
            error: None,
            trace: Some(t.as_ref().into()),
        },
        PointOutcome::Failed { point, error } => SequencePointRecord {
            index: i,
            point: exact(point.clone()),
            status: "failed",
            error: Some(error.clone()),
            trace: None,
        },
    }
}

impl SequenceRunReport {
    pub fn new(spec: SpecInfo, cfg: &SequenceConfig, report: &SequenceReport) -> Self {
        let s = &report.summary;
        Self {
            schema: SCHEMA,
            tool: ToolInfo::current(),
            command: "sequence",
            spec,
            config: ConfigRecord::new(cfg, None),
            points: report
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| point_record(i, p))
                .collect(),
            summary: SequenceSummaryRecord {
                points: s.points,
                failed: s.failed,
                trivial: s.trivial,
                periodic: s.periodic,
                all_trivial: report.all_trivial(),
                worst_d1: ad(s.worst_d1),
                worst_invariants: (&s.worst_invariants).into(),
                collapse_violations: s.collapse_violations,
                period_two_detections: s.period_two_detections,
            },
            warnings: condition_warnings(report),
            wall_time_s: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureRecord {
    pub fd_step: Tiered<f64>,
    pub nabla_j: Tiered<f64>,
    pub nijenhuis: Tiered<f64>,
    pub hermitian_lc_mismatch: Tiered<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyPointRecord {
    pub index: usize,
    pub point: Tiered<Vec<f64>>,
    pub verdict: &'static str,
    pub trivial: bool,
    pub d1: Option<Tiered<f64>>,
    pub period: Option<PeriodRecord>,
    pub d_omega: Option<Tiered<f64>>,
    pub nabla_g0: Option<Tiered<f64>>,
    pub nabla_omega: Option<Tiered<f64>>,
    pub structure: Option<StructureRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TolerancesRecord {
    pub ad: f64,
    pub fd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifySummaryRecord {
    pub verdict: &'static str,
    pub counts: VerdictCounts,
    pub tolerances: TolerancesRecord,
    pub worst_d_omega: Tiered<f64>,
    pub worst_nabla_j: Tiered<f64>,
    pub worst_nijenhuis: Tiered<f64>,
    pub worst_hermitian_lc_mismatch: Tiered<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyRunReport {
    pub schema: &'static str,
    pub tool: ToolInfo,
    pub command: &'static str,
    pub spec: SpecInfo,
    pub config: ConfigRecord,
    pub points: Vec<CertifyPointRecord>,
    pub summary: CertifySummaryRecord,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

fn certify_point(i: usize, v: &PointVerdict, outcome: &PointOutcome) -> CertifyPointRecord {
    let trace = outcome.trace();
    CertifyPointRecord {
        index: i,
        point: exact(v.point.clone()),
        verdict: v.verdict.as_str(),
        trivial: v.trivial,
        d1: trace.map(|t| ad(t.d1())),
        period: trace.and_then(|t| t.period).map(Into::into),
        d_omega: v.d_omega.map(ad),
        nabla_g0: v.nabla_g0.map(ad),
        nabla_omega: v.nabla_omega.map(ad),
        structure: v.structure.map(|s| StructureRecord {
            fd_step: exact(s.fd_step),
            nabla_j: fd(s.nabla_j),
            nijenhuis: fd(s.nijenhuis),
            hermitian_lc_mismatch: fd(s.hermitian_lc_mismatch),
        }),
        error: v.error.clone(),
    }
}

impl CertifyRunReport {
    pub fn new(
        spec: SpecInfo,
        cfg: &SequenceConfig,
        fd_relative_step: f64,
        verdict: &KahlerVerdict,
    ) -> Self {
        let worst = |f: &dyn Fn(&PointVerdict) -> Option<f64>| {
            verdict.points.iter().filter_map(f).fold(0.0, f64::max)
        };
        Self {
            schema: SCHEMA,
            tool: ToolInfo::current(),
            command: "certify",
            spec,
            config: ConfigRecord::new(cfg, Some(fd_relative_step)),
            points: verdict
                .points
                .iter()
                .zip(&verdict.sequence.points)
                .enumerate()
                .map(|(i, (v, o))| certify_point(i, v, o))
                .collect(),
            summary: CertifySummaryRecord {
                verdict: verdict.overall.as_str(),
                counts: verdict.counts,
                tolerances: TolerancesRecord {
                    ad: TOL_AD,
                    fd: TOL_FD,
                },
                worst_d_omega: ad(worst(&|p| p.d_omega)),
                worst_nabla_j: fd(worst(&|p| p.structure.map(|s| s.nabla_j))),
                worst_nijenhuis: fd(worst(&|p| p.structure.map(|s| s.nijenhuis))),
                worst_hermitian_lc_mismatch: fd(worst(&|p| {
                    p.structure.map(|s| s.hermitian_lc_mismatch)
                })),
            },
            warnings: condition_warnings(&verdict.sequence),
            wall_time_s: None,
        }
    }
}

/// One row per (point, step): the per-point distance tables, flattened.
pub fn write_distance_csv<W: Write>(
    out: W,
    report: &SequenceReport,
    dim: usize,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point".to_string()];
    header.extend((1..=dim).map(|l| format!("x{l}")));
    header.extend(["step", "distance_to_first", "consecutive"].map(String::from));
    w.write_record(&header)?;
    for (i, t) in report
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.trace().map(|t| (i, t)))
    {
        for (m, d) in t.distances_to_first.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(t.point.iter().map(|x| x.to_string()));
            row.push(m.to_string());
            row.push(d.to_string());
            row.push(
                m.checked_sub(1)
                    .map(|k| t.consecutive[k].to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
