//! Pointwise Kähler certification.
//!
//! A point is certified when the connection sequence is trivial there and
//! `ω` is closed, `Γ₀` preserves both forms, the Gromov structure `J` is
//! parallel and integrable, and the hermitian metric built from `J` has
//! `Γ₀` as its Levi-Civita connection. Jet quantities come from automatic
//! differentiation; anything involving derivatives of `J` uses finite
//! differences and the looser tier.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::connections::{covariant_derivative_11, levi_civita, metric_preservation_residual};
use crate::error::{Error, Result};
use crate::field::spec::{forms_at, Manifold};
use crate::field::{exterior_derivative_from_jet, finite_diff_matrix_field, FieldJet};
use crate::gromov::{gromov_j, nijenhuis, GromovFrame};
use crate::linalg::symmetrize;
use crate::sequence::{run_sequence, PointOutcome, PointTrace, SequenceConfig, SequenceReport};
use crate::tensor::{max_abs_distance, ConnectionCoeffs, Tensor3};

/// Tolerance for quantities computed from exact jets.
pub const TOL_AD: f64 = 1e-10;
/// Tolerance for quantities involving finite differences.
pub const TOL_FD: f64 = 1e-6;
/// Default finite-difference step as a fraction of the box diameter.
pub const FD_RELATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub sequence: SequenceConfig,
    pub fd_relative_step: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceConfig::default(),
            fd_relative_step: FD_RELATIVE_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    KahlerCertified,
    PremiseFailed,
    ToleranceFailed,
    Failed,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::KahlerCertified => "kahler_certified",
            Verdict::PremiseFailed => "premise_failed",
            Verdict::ToleranceFailed => "tolerance_failed",
            Verdict::Failed => "failed",
        }
    }
}

/// Residuals that need derivatives of `J`; only computed at trivial points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureResiduals {
    pub fd_step: f64,
    pub nabla_j: f64,
    pub nijenhuis: f64,
    pub hermitian_lc_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub point: Vec<f64>,
    pub verdict: Verdict,
    pub trivial: bool,
    pub d_omega: Option<f64>,
    pub nabla_g0: Option<f64>,
    pub nabla_omega: Option<f64>,
    pub structure: Option<StructureResiduals>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VerdictCounts {
    pub kahler_certified: usize,
    pub premise_failed: usize,
    pub tolerance_failed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerVerdict {
    pub overall: Verdict,
    pub counts: VerdictCounts,
    pub points: Vec<PointVerdict>,
    pub sequence: SequenceReport,
}

/// Combines per-point verdicts: any premise failure dominates, then any
/// tolerance or evaluation failure; all points failing is `Failed`.
pub fn overall_verdict(counts: &VerdictCounts) -> Verdict {
    let total =
        counts.kahler_certified + counts.premise_failed + counts.tolerance_failed + counts.failed;
    if total == counts.failed {
        Verdict::Failed
    } else if counts.premise_failed > 0 {
        Verdict::PremiseFailed
    } else if counts.tolerance_failed > 0 || counts.failed > 0 {
        Verdict::ToleranceFailed
    } else {
        Verdict::KahlerCertified
    }
}

fn structure_residuals(
    m: &Manifold,
    p: &[f64],
    gamma0: &ConnectionCoeffs,
    h: f64,
) -> Result<StructureResiduals> {
    let frame_at = |x: &[f64]| -> Result<GromovFrame> {
        let (g, w) = forms_at(m, x)?;
        gromov_j(&g, &w)
    };
    let h = m.domain.fit_step(p, h)?;
    let here = frame_at(p)?;
    let dj = finite_diff_matrix_field(|x| frame_at(x).map(|f| f.j), p, h)?;
    let dh = finite_diff_matrix_field(|x| frame_at(x).map(|f| f.g_herm), p, h)?;
    let nabla_j = covariant_derivative_11(&dj, &here.j, gamma0)?.max_abs();
    let nij = nijenhuis(&here.j, &dj)?.max_abs();
    let n = here.j.nrows();
    let herm_jet = FieldJet {
        value: symmetrize(&here.g_herm),
        partials: Tensor3::from_fn(n, |l, i, j| 0.5 * (dh[(l, i, j)] + dh[(l, j, i)])),
    };
    let lc_herm = levi_civita(&herm_jet)?.value;
    Ok(StructureResiduals {
        fd_step: h,
        nabla_j,
        nijenhuis: nij,
        hermitian_lc_mismatch: max_abs_distance(&lc_herm, gamma0)?,
    })
}

fn judge(m: &Manifold, trace: &PointTrace, h: f64) -> PointVerdict {
    let p = trace.point.clone();
    let jets = || -> Result<(f64, f64)> {
        let g = m.metric.eval_jet(&p)?;
        let w = m.omega.eval_jet(&p)?;
        let d_omega = exterior_derivative_from_jet(&w).max_abs();
        let nabla_g0 = metric_preservation_residual(trace.gamma0(), &g)?.max_abs();
        Ok((d_omega, nabla_g0))
    };
    let (d_omega, nabla_g0) = match jets() {
        Ok(v) => v,
        Err(e) => return failed(p, trace.trivial, e),
    };
    let mut out = PointVerdict {
        point: p.clone(),
        verdict: Verdict::PremiseFailed,
        trivial: trace.trivial,
        d_omega: Some(d_omega),
        nabla_g0: Some(nabla_g0),
        nabla_omega: Some(trace.lc_omega_residual),
        structure: None,
        error: None,
    };
    if !trace.trivial {
        return out;
    }
    let s = match structure_residuals(m, &p, trace.gamma0(), h) {
        Ok(s) => s,
        Err(e) => return failed(p, true, e),
    };
    let within = d_omega <= TOL_AD
        && nabla_g0 <= TOL_AD
        && trace.lc_omega_residual <= TOL_AD
        && s.nabla_j <= TOL_FD
        && s.nijenhuis <= TOL_FD
        && s.hermitian_lc_mismatch <= TOL_FD;
    out.structure = Some(s);
    out.verdict = if within {
        Verdict::KahlerCertified
    } else {
        Verdict::ToleranceFailed
    };
    out
}

fn failed(point: Vec<f64>, trivial: bool, e: Error) -> PointVerdict {
    PointVerdict {
        point,
        verdict: Verdict::Failed,
        trivial,
        d_omega: None,
        nabla_g0: None,
        nabla_omega: None,
        structure: None,
        error: Some(e.to_string()),
    }
}

/// Certifies every sample point of the manifold's domain.
pub fn certify_kahler(m: &Manifold, cfg: &CertifyConfig) -> Result<KahlerVerdict> {
    if !(cfg.fd_relative_step > 0.0 && cfg.fd_relative_step.is_finite()) {
        return Err(Error::Parameter(format!(
            "fd_relative_step must be positive, got {}",
            cfg.fd_relative_step
        )));
    }
    let sequence = run_sequence(&m.metric, &m.omega, &m.domain, &cfg.sequence)?;
    let h = cfg.fd_relative_step * m.domain.diameter();
    let points: Vec<PointVerdict> = sequence
        .points
        .par_iter()
        .map(|outcome| match outcome {
            PointOutcome::Traced(t) => judge(m, t, h),
            PointOutcome::Failed { point, error } => PointVerdict {
                point: point.clone(),
                verdict: Verdict::Failed,
                trivial: false,
                d_omega: None,
                nabla_g0: None,
                nabla_omega: None,
                structure: None,
                error: Some(error.clone()),
            },
        })
        .collect();
    let mut counts = VerdictCounts::default();
    for v in &points {
        match v.verdict {
            Verdict::KahlerCertified => counts.kahler_certified += 1,
            Verdict::PremiseFailed => counts.premise_failed += 1,
            Verdict::ToleranceFailed => counts.tolerance_failed += 1,
            Verdict::Failed => counts.failed += 1,
        }
    }
    Ok(KahlerVerdict {
        overall: overall_verdict(&counts),
        counts,
        points,
        sequence,
    })
}

/// The Gromov `J` field as a closure, for callers that differentiate it.
pub fn j_field(m: &Manifold) -> impl Fn(&[f64]) -> Result<DMatrix<f64>> + '_ {
    move |x| {
        let (g, w) = forms_at(m, x)?;
        Ok(gromov_j(&g, &w)?.j)
    }
}
