//! The alternating connection sequence `Γ₀, Γ₁, Γ₂, …` at each sample point.
//!
//! `Γ₀` is the Levi-Civita connection of `g` (or the `g`-connection with a
//! seed torsion). Odd terms preserve `ω` and share the symmetric part of the
//! previous term; even terms preserve `g` and share the torsion of the
//! previous term. Everything is pointwise in the jets of `g` and `ω`.

use rayon::prelude::*;

use crate::connections::{
    levi_civita, metric_connection_with_torsion, metric_preservation_residual,
    omega_connection_from_sym, omega_preservation_residual,
};
use crate::error::{Error, Result};
use crate::field::{ChartDomain, FieldJet, TensorFieldSpec};
use crate::linalg;
use crate::tensor::{max_abs_distance, symmetric_part, torsion, ConnectionCoeffs, TorsionTensor};

/// Residual bound for the metric-preservation precondition of [`step_pair`].
pub const STEP_PRECONDITION_TOL: f64 = 1e-8;
/// Preservation residual bounds for properties (i) and (ii).
pub const PRESERVATION_TOL: f64 = 1e-9;
/// Agreement bound for shared symmetric parts and shared torsions.
pub const SHARED_PART_TOL: f64 = 1e-10;
/// Slack in the `d(Γ₁,Γ₀) <= d(Γ₂,Γ₀)` check.
pub const COLLAPSE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    /// Number of steps after `Γ₀`; the trace holds at most `max_steps + 1` terms.
    pub max_steps: usize,
    /// Relative tolerance; see [`SequenceConfig::absolute_tolerance`].
    pub period_tol: f64,
    /// Constant torsion of `Γ₀`. `None` starts from the Levi-Civita connection.
    pub seed_torsion: Option<TorsionTensor>,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            max_steps: 16,
            period_tol: 1e-8,
            seed_torsion: None,
        }
    }
}

impl SequenceConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_steps < 2 {
            return Err(Error::Parameter(format!(
                "max_steps must be at least 2, got {}",
                self.max_steps
            )));
        }
        if !(self.period_tol > 0.0 && self.period_tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "period_tol must be positive, got {}",
                self.period_tol
            )));
        }
        if let Some(t) = &self.seed_torsion {
            if t.dim() != dim {
                return Err(Error::Shape(format!(
                    "seed torsion of dimension {} on a {dim}-dimensional chart",
                    t.dim()
                )));
            }
        }
        Ok(())
    }

    /// `period_tol · max(1, max |Γ₀|)`.
    pub fn absolute_tolerance(&self, gamma0: &ConnectionCoeffs) -> f64 {
        self.period_tol * gamma0.max_abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub preperiod: usize,
    pub period: usize,
}

/// Smallest `(p, q)` (by `p`, then `q`) with `d(Γ_{m+q}, Γ_m) <= tol_abs` for
/// every `m >= p` in the list, observed over at least `min_checks`
/// comparisons and a tail of at least two full periods.
pub fn detect_period_with(
    list: &[ConnectionCoeffs],
    tol_abs: f64,
    min_checks: usize,
) -> Result<Option<Period>> {
    if list.is_empty() {
        return Err(Error::Parameter(
            "cannot detect a period in an empty list".into(),
        ));
    }
    if !(tol_abs >= 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be nonnegative, got {tol_abs}"
        )));
    }
    let len = list.len();
    for p in 0..len {
        for q in 1..len {
            let checks = len.saturating_sub(p + q);
            if checks < min_checks.max(1) || len - p < 2 * q {
                continue;
            }
            let mut ok = true;
            for m in p..(len - q) {
                if max_abs_distance(&list[m + q], &list[m])? > tol_abs {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(Some(Period {
                    preperiod: p,
                    period: q,
                }));
            }
        }
    }
    Ok(None)
}

/// Confirmed periodicity: two comparisons and two full periods at least.
pub fn detect_period(list: &[ConnectionCoeffs], tol_abs: f64) -> Result<Option<Period>> {
    detect_period_with(list, tol_abs, 2)
}

/// One odd and one even step from an even (metric-preserving) term.
pub fn step_pair(
    gamma_even: &ConnectionCoeffs,
    g: &FieldJet,
    w: &FieldJet,
) -> Result<(ConnectionCoeffs, ConnectionCoeffs)> {
    step_pair_conditioned(gamma_even, g, w).map(|(odd, even, _)| (odd, even))
}

/// [`step_pair`] plus the largest condition estimate of the two solves.
fn step_pair_conditioned(
    gamma_even: &ConnectionCoeffs,
    g: &FieldJet,
    w: &FieldJet,
) -> Result<(ConnectionCoeffs, ConnectionCoeffs, f64)> {
    let residual = metric_preservation_residual(gamma_even, g)?.max_abs();
    let scale = 1f64
        .max(g.partials.max_abs())
        .max(g.dim() as f64 * gamma_even.max_abs() * linalg::max_abs(&g.value));
    if !(residual <= STEP_PRECONDITION_TOL * scale) {
        return Err(Error::SequenceInvariant {
            what: "even term does not preserve the metric".into(),
            residual,
        });
    }
    let odd = omega_connection_from_sym(&symmetric_part(gamma_even), w)?;
    let even = metric_connection_with_torsion(&torsion(&odd.value), g)?;
    let condition = odd.condition.max(even.condition);
    Ok((odd.value, even.value, condition))
}

/// Worst values of the four structural properties over a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InvariantChecks {
    /// max over even terms of the metric residual
    pub metric_residual_even: f64,
    /// max over odd terms of the ω residual
    pub omega_residual_odd: f64,
    /// max over `(Γ₂ₖ, Γ₂ₖ₊₁)` of the symmetric-part distance
    pub symmetric_part_mismatch: f64,
    /// max over `(Γ₂ₖ₊₁, Γ₂ₖ₊₂)` of the torsion distance
    pub torsion_mismatch: f64,
}

impl InvariantChecks {
    pub fn hold(&self) -> bool {
        self.metric_residual_even <= PRESERVATION_TOL
            && self.omega_residual_odd <= PRESERVATION_TOL
            && self.symmetric_part_mismatch <= SHARED_PART_TOL
            && self.torsion_mismatch <= SHARED_PART_TOL
    }
}

/// `d(Γ₁,Γ₀) <= d(Γ₂,Γ₀)`, valid whenever `Γ₀` is symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseCheck {
    pub d1: f64,
    pub d2: f64,
    pub holds: bool,
}

/// Two-sided bounds tying `d(Γ₁,Γ₀)` to the ω-residual `r₀` of `Γ₀`:
/// `r₀ <= 2n·max|ω|·d₁` and `d₁ <= 1.5·n·max|ω⁻¹|·r₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialityBounds {
    pub residual_bound: f64,
    pub distance_bound: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointTrace {
    pub point: Vec<f64>,
    pub connections: Vec<ConnectionCoeffs>,
    /// `d(Γ_m, Γ₀)` for each term
    pub distances_to_first: Vec<f64>,
    /// `d(Γ_{m+1}, Γ_m)`
    pub consecutive: Vec<f64>,
    pub tol_abs: f64,
    pub period: Option<Period>,
    /// Periodicity seen over a single comparison only.
    pub suggestive_period: Option<Period>,
    pub trivial: bool,
    pub invariants: InvariantChecks,
    pub collapse: Option<CollapseCheck>,
    /// ω-preservation residual of `Γ₀`.
    pub lc_omega_residual: f64,
    /// metric-preservation residual of `Γ₀`.
    pub lc_metric_residual: f64,
    pub triviality_bounds: Option<TrivialityBounds>,
    pub max_condition: f64,
}

impl PointTrace {
    pub fn d1(&self) -> f64 {
        self.distances_to_first.get(1).copied().unwrap_or(0.0)
    }

    pub fn gamma0(&self) -> &ConnectionCoeffs {
        &self.connections[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Traced(Box<PointTrace>),
    Failed { point: Vec<f64>, error: String },
}

impl PointOutcome {
    pub fn trace(&self) -> Option<&PointTrace> {
        match self {
            PointOutcome::Traced(t) => Some(t),
            PointOutcome::Failed { .. } => None,
        }
    }

    pub fn point(&self) -> &[f64] {
        match self {
            PointOutcome::Traced(t) => &t.point,
            PointOutcome::Failed { point, .. } => point,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SequenceSummary {
    pub points: usize,
    pub failed: usize,
    pub trivial: usize,
    pub periodic: usize,
    pub worst_d1: f64,
    pub worst_invariants: InvariantChecks,
    pub collapse_violations: usize,
    pub period_two_detections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub points: Vec<PointOutcome>,
    pub summary: SequenceSummary,
}

impl SequenceReport {
    pub fn traces(&self) -> impl Iterator<Item = &PointTrace> {
        self.points.iter().filter_map(PointOutcome::trace)
    }

    pub fn all_trivial(&self) -> bool {
        self.summary.failed == 0 && self.summary.trivial == self.summary.points
    }
}

/// Runs the sequence at one point from the field jets.
pub fn trace_point(
    point: &[f64],
    g: &FieldJet,
    w: &FieldJet,
    cfg: &SequenceConfig,
) -> Result<PointTrace> {
    let n = g.dim();
    cfg.validate(n)?;
    let first = match &cfg.seed_torsion {
        Some(t) => metric_connection_with_torsion(t, g)?,
        None => levi_civita(g)?,
    };
    let mut max_condition = first.condition;
    let gamma0 = first.value;
    let tol_abs = cfg.absolute_tolerance(&gamma0);
    let mut list = vec![gamma0];
    let mut inv = InvariantChecks {
        metric_residual_even: metric_preservation_residual(&list[0], g)?.max_abs(),
        ..Default::default()
    };
    let mut period = None;
    while list.len() <= cfg.max_steps {
        let even = list.last().expect("non-empty");
        let (odd, next, condition) = step_pair_conditioned(even, g, w)?;
        max_condition = max_condition.max(condition);
        inv.omega_residual_odd = inv
            .omega_residual_odd
            .max(omega_preservation_residual(&odd, w)?.max_abs());
        inv.symmetric_part_mismatch = inv.symmetric_part_mismatch.max(max_abs_distance(
            &symmetric_part(even),
            &symmetric_part(&odd),
        )?);
        list.push(odd);
        if list.len() <= cfg.max_steps {
            let odd = list.last().expect("non-empty");
            inv.metric_residual_even = inv
                .metric_residual_even
                .max(metric_preservation_residual(&next, g)?.max_abs());
            inv.torsion_mismatch = inv.torsion_mismatch.max(
                torsion(odd)
                    .tensor()
                    .max_abs_diff(torsion(&next).tensor())?,
            );
            list.push(next);
        }
        period = detect_period(&list, tol_abs)?;
        if period.is_some() {
            break;
        }
    }

    let distances_to_first = list
        .iter()
        .map(|c| max_abs_distance(c, &list[0]))
        .collect::<Result<Vec<_>>>()?;
    let consecutive = list
        .windows(2)
        .map(|w| max_abs_distance(&w[1], &w[0]))
        .collect::<Result<Vec<_>>>()?;
    let d1 = distances_to_first[1];
    let trivial = d1 <= tol_abs;
    if trivial {
        period = Some(Period {
            preperiod: 0,
            period: 1,
        });
    }
    let suggestive_period = if period.is_none() {
        detect_period_with(&list, tol_abs, 1)?
    } else {
        None
    };

    let lc_omega_residual = omega_preservation_residual(&list[0], w)?.max_abs();
    let lc_metric_residual = metric_preservation_residual(&list[0], g)?.max_abs();
    let unseeded = cfg.seed_torsion.is_none();
    let collapse = (unseeded && list.len() > 2).then(|| {
        let d2 = distances_to_first[2];
        CollapseCheck {
            d1,
            d2,
            holds: d1 <= d2 + COLLAPSE_SLACK,
        }
    });
    let triviality_bounds = if unseeded {
        let w_max = linalg::max_abs(&w.value);
        let w_inv_max = w
            .value
            .clone()
            .try_inverse()
            .map(|m| linalg::max_abs(&m))
            .ok_or_else(|| Error::Internal("ω not invertible".into()))?;
        let slack = inv.omega_residual_odd + 1e-12 * (1.0 + list[0].max_abs());
        let residual_bound = 2.0 * n as f64 * w_max * d1;
        let distance_bound = 1.5 * n as f64 * w_inv_max * lc_omega_residual;
        Some(TrivialityBounds {
            residual_bound,
            distance_bound,
            consistent: lc_omega_residual <= residual_bound + slack
                && d1 <= distance_bound + w_inv_max * slack * n as f64,
        })
    } else {
        None
    };

    Ok(PointTrace {
        point: point.to_vec(),
        connections: list,
        distances_to_first,
        consecutive,
        tol_abs,
        period,
        suggestive_period,
        trivial,
        invariants: inv,
        collapse,
        lc_omega_residual,
        lc_metric_residual,
        triviality_bounds,
        max_condition,
    })
}

/// Traces every sample point of the domain. Points are independent; a
/// failure at one point is recorded without aborting the others.
pub fn run_sequence(
    g_field: &TensorFieldSpec,
    w_field: &TensorFieldSpec,
    domain: &ChartDomain,
    cfg: &SequenceConfig,
) -> Result<SequenceReport> {
    let n = g_field.dim();
    if w_field.dim() != n || domain.dim() != n {
        return Err(Error::Shape(
            "metric, form and domain dimensions differ".into(),
        ));
    }
    cfg.validate(n)?;
    let points: Vec<PointOutcome> = domain
        .samples()
        .par_iter()
        .map(|p| {
            let run = || -> Result<PointTrace> {
                let g = g_field.eval_jet(p)?;
                let w = w_field.eval_jet(p)?;
                trace_point(p, &g, &w, cfg)
            };
            match run() {
                Ok(t) => PointOutcome::Traced(Box::new(t)),
                Err(e) => PointOutcome::Failed {
                    point: p.clone(),
                    error: e.to_string(),
                },
            }
        })
        .collect();
    let summary = summarize(&points);
    Ok(SequenceReport { points, summary })
}

fn summarize(points: &[PointOutcome]) -> SequenceSummary {
    let mut s = SequenceSummary {
        points: points.len(),
        ..Default::default()
    };
    for outcome in points {
        let Some(t) = outcome.trace() else {
            s.failed += 1;
            continue;
        };
        s.trivial += usize::from(t.trivial);
        s.periodic += usize::from(t.period.is_some());
        s.worst_d1 = s.worst_d1.max(t.d1());
        let w = &mut s.worst_invariants;
        w.metric_residual_even = w
            .metric_residual_even
            .max(t.invariants.metric_residual_even);
        w.omega_residual_odd = w.omega_residual_odd.max(t.invariants.omega_residual_odd);
        w.symmetric_part_mismatch = w
            .symmetric_part_mismatch
            .max(t.invariants.symmetric_part_mismatch);
        w.torsion_mismatch = w.torsion_mismatch.max(t.invariants.torsion_mismatch);
        s.collapse_violations += usize::from(t.collapse.is_some_and(|c| !c.holds));
        s.period_two_detections += usize::from(
            t.period
                == Some(Period {
                    preperiod: 0,
                    period: 2,
                }),
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Valence;

    fn c(v: f64) -> ConnectionCoeffs {
        ConnectionCoeffs::from_fn(2, |_, _, _| v)
    }

    fn jet(dim: usize, valence: Valence, entries: &[(usize, usize, &str)], p: &[f64]) -> FieldJet {
        TensorFieldSpec::parse(dim, valence, entries)
            .unwrap()
            .eval_jet(p)
            .unwrap()
    }

    #[test]
    fn period_detection_examples() {
        let (a, b, cc) = (c(0.0), c(1.0), c(5.0));
        let p = |preperiod, period| Some(Period { preperiod, period });
        assert_eq!(
            detect_period(&[a.clone(), a.clone(), a.clone()], 1e-9).unwrap(),
            p(0, 1)
        );
        let abab = [a.clone(), b.clone(), a.clone(), b.clone(), a.clone()];
        assert_eq!(detect_period(&abab, 1e-9).unwrap(), p(0, 2));
        let cabab = [cc.clone(), a.clone(), b.clone(), a.clone(), b.clone()];
        assert_eq!(detect_period(&cabab, 1e-9).unwrap(), p(1, 2));
        assert_eq!(
            detect_period(&[a.clone(), b.clone(), cc.clone()], 1e-9).unwrap(),
            None
        );
        // a single repetition is only suggestive
        assert_eq!(detect_period(&[a.clone(), a.clone()], 1e-9).unwrap(), None);
        assert_eq!(
            detect_period_with(&[a.clone(), a.clone()], 1e-9, 1).unwrap(),
            p(0, 1)
        );
        assert!(matches!(detect_period(&[], 1e-9), Err(Error::Parameter(_))));
    }

    #[test]
    fn flat_standard_step_is_zero() {
        let g = jet(2, Valence::Metric, &[(1, 1, "1"), (2, 2, "1")], &[0.0, 0.0]);
        let w = jet(2, Valence::TwoForm, &[(1, 2, "1")], &[0.0, 0.0]);
        let (a, b) = step_pair(&ConnectionCoeffs::zeros(2), &g, &w).unwrap();
        assert!(a.max_abs() <= 1e-15 && b.max_abs() <= 1e-15);
    }

    #[test]
    fn step_pair_checks_its_precondition() {
        let g = jet(
            2,
            Valence::Metric,
            &[(1, 1, "1"), (2, 2, "exp(2*x1)")],
            &[0.0, 0.0],
        );
        let w = jet(2, Valence::TwoForm, &[(1, 2, "1")], &[0.0, 0.0]);
        assert!(matches!(
            step_pair(&ConnectionCoeffs::zeros(2), &g, &w),
            Err(Error::SequenceInvariant { .. })
        ));
    }

    #[test]
    fn varying_omega_step_has_torsion() {
        let g = jet(2, Valence::Metric, &[(1, 1, "1"), (2, 2, "1")], &[0.0, 0.0]);
        let w = jet(2, Valence::TwoForm, &[(1, 2, "exp(x1)")], &[0.0, 0.0]);
        let (odd, even) = step_pair(&ConnectionCoeffs::zeros(2), &g, &w).unwrap();
        assert!(torsion(&odd).max_abs() > 0.5);
        // fixture: Γ¹ has Γ²₁₂ = 1, Γ²₂₁ = −1; Γ² adds the flat contorsion of that torsion
        assert!((odd[(1, 0, 1)] - 1.0).abs() < 1e-12 && (odd[(1, 1, 0)] + 1.0).abs() < 1e-12);
        assert!(
            torsion(&even)
                .tensor()
                .max_abs_diff(torsion(&odd).tensor())
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn config_validation() {
        let bad = SequenceConfig {
            max_steps: 1,
            ..Default::default()
        };
        assert!(bad.validate(2).is_err());
        let bad = SequenceConfig {
            period_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate(2).is_err());
        let bad = SequenceConfig {
            seed_torsion: Some(TorsionTensor::zeros(4)),
            ..Default::default()
        };
        assert!(bad.validate(2).is_err());
    }
}
