//! Connections determined pointwise by the jets of a metric `g` and a 2-form `ω`.
//!
//! Lowered-index convention for the closed-form ω-connection: for a connection
//! `Γ` (or its symmetric part `Π`) the lowered array is
//! `Γ_{kij} = ω(∂_k, ∇_{∂_i} ∂_j) = Σ_m ω_{km} Γ^m_{ij}`, i.e. the first slot of
//! `ω` is contracted with the output index. With this convention
//!
//! ```text
//! Γ_{kij} = ½(∂_k ω_{ij} − ∂_i ω_{jk} − ∂_j ω_{ki}) + Π_{kij} + Π_{jik} − Π_{ijk}
//! ```
//!
//! reproduces the linear-solve construction exactly; for closed `ω` the
//! bracket collapses to `∂_k ω_{ij}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldJet;
use crate::linalg::{self, CONDITION_WARNING};
use crate::tensor::{
    lower_first_index, raise_first_index, BilinearFormValue, ConnectionCoeffs, Tensor3,
    TorsionTensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningWarning {
    pub condition: f64,
    pub threshold: f64,
}

/// A computed value together with the condition estimate of the solve behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved<T> {
    pub value: T,
    pub condition: f64,
}

impl<T> Solved<T> {
    fn new(value: T, condition: f64) -> Self {
        Self { value, condition }
    }

    pub fn warning(&self) -> Option<ConditioningWarning> {
        (self.condition > CONDITION_WARNING).then_some(ConditioningWarning {
            condition: self.condition,
            threshold: CONDITION_WARNING,
        })
    }
}

/// `r[l,i,j] = ∂_l b_{ij} − Σ_m (Γ^m_{li} b_{mj} + Γ^m_{lj} b_{im})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreservationResidual(pub Tensor3);

impl PreservationResidual {
    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

fn check_jet(gamma: &ConnectionCoeffs, jet: &FieldJet) -> Result<()> {
    if gamma.dim() != jet.dim() || jet.partials.dim() != jet.dim() {
        return Err(Error::Shape(format!(
            "connection of dimension {} against jet of dimension {}",
            gamma.dim(),
            jet.dim()
        )));
    }
    Ok(())
}

fn preservation_residual(gamma: &ConnectionCoeffs, jet: &FieldJet) -> Result<PreservationResidual> {
    check_jet(gamma, jet)?;
    let n = gamma.dim();
    let b = &jet.value;
    Ok(PreservationResidual(Tensor3::from_fn(n, |l, i, j| {
        let mut s = jet.partials[(l, i, j)];
        for m in 0..n {
            s -= gamma[(m, l, i)] * b[(m, j)] + gamma[(m, l, j)] * b[(i, m)];
        }
        s
    })))
}

/// Failure of `Γ` to preserve the metric whose jet is `g`.
pub fn metric_preservation_residual(
    gamma: &ConnectionCoeffs,
    g: &FieldJet,
) -> Result<PreservationResidual> {
    preservation_residual(gamma, g)
}

/// Failure of `Γ` to preserve the 2-form whose jet is `w`.
pub fn omega_preservation_residual(
    gamma: &ConnectionCoeffs,
    w: &FieldJet,
) -> Result<PreservationResidual> {
    preservation_residual(gamma, w)
}

fn metric_form(g: &FieldJet) -> Result<(BilinearFormValue, f64)> {
    let form = BilinearFormValue::symmetric(g.value.clone())
        .map_err(|e| Error::Signature(format!("metric rejected: {e}")))?;
    let condition = linalg::spd_condition(form.matrix())?;
    Ok((form, condition))
}

/// The Levi-Civita connection, via the Koszul formula
/// `Γ_{k,ij} = ½(∂_i g_{jk} + ∂_j g_{ik} − ∂_k g_{ij})` raised with `g⁻¹`.
pub fn levi_civita(g: &FieldJet) -> Result<Solved<ConnectionCoeffs>> {
    let (form, condition) = metric_form(g)?;
    let d = &g.partials;
    let lowered = Tensor3::from_fn(g.dim(), |k, i, j| {
        0.5 * ((d[(i, j, k)] + d[(j, i, k)]) - d[(k, i, j)])
    });
    let gamma = ConnectionCoeffs::new(raise_first_index(&lowered, &form)?)?;
    Ok(Solved::new(gamma, condition))
}

fn omega_form(w: &FieldJet) -> Result<BilinearFormValue> {
    BilinearFormValue::antisymmetric(w.value.clone())
}

fn require_symmetric(pi: &ConnectionCoeffs) -> Result<()> {
    if !pi.is_symmetric() {
        return Err(Error::Parameter(
            "prescribed symmetric part is not symmetric in its lower indices".into(),
        ));
    }
    Ok(())
}

/// The unique ω-preserving connection whose symmetric part is `pi`.
///
/// Solves the dense `n³ × n³` system made of the ω-preservation equations
/// (one per direction and pair `i < j`) and the symmetric-part equations
/// (one per output index and pair `i <= j`).
pub fn omega_connection_from_sym(
    pi: &ConnectionCoeffs,
    w: &FieldJet,
) -> Result<Solved<ConnectionCoeffs>> {
    check_jet(pi, w)?;
    require_symmetric(pi)?;
    omega_form(w)?;
    let n = pi.dim();
    let unknown = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let size = n * n * n;
    let mut a = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    let om = &w.value;
    let mut row = 0;
    for l in 0..n {
        for p in 0..n {
            for q in (p + 1)..n {
                for m in 0..n {
                    a[(row, unknown(m, l, p))] += om[(m, q)];
                    a[(row, unknown(m, l, q))] += om[(p, m)];
                }
                rhs[row] = w.partials[(l, p, q)];
                row += 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                if i == j {
                    a[(row, unknown(k, i, i))] = 1.0;
                } else {
                    a[(row, unknown(k, i, j))] = 0.5;
                    a[(row, unknown(k, j, i))] = 0.5;
                }
                rhs[row] = pi[(k, i, j)];
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, size);
    let solve = linalg::lu_solve(a, &rhs).map_err(|e| {
        Error::Internal(format!(
            "ω-connection system singular for a non-degenerate form: {e}"
        ))
    })?;
    let gamma = ConnectionCoeffs::new(Tensor3::from_vec(
        n,
        solve.solution.iter().copied().collect(),
    )?)?;
    Ok(Solved::new(gamma, solve.condition))
}

/// `Π_{kij} + Π_{jik} − Π_{ijk}` with `Π` lowered by `ω` in its first slot.
fn lowered_sym_combination(pi: &ConnectionCoeffs, w: &BilinearFormValue) -> Result<Tensor3> {
    let p = lower_first_index(pi.tensor(), w)?;
    Ok(Tensor3::from_fn(pi.dim(), |k, i, j| {
        p[(k, i, j)] + p[(j, i, k)] - p[(i, j, k)]
    }))
}

/// Closed-form ω-connection valid for any non-degenerate `ω`.
pub fn omega_connection_closed_form(
    pi: &ConnectionCoeffs,
    w: &FieldJet,
) -> Result<ConnectionCoeffs> {
    check_jet(pi, w)?;
    require_symmetric(pi)?;
    let form = omega_form(w)?;
    let d = &w.partials;
    let sym = lowered_sym_combination(pi, &form)?;
    let lowered = Tensor3::from_fn(pi.dim(), |k, i, j| {
        0.5 * (d[(k, i, j)] - d[(i, j, k)] - d[(j, k, i)]) + sym[(k, i, j)]
    });
    ConnectionCoeffs::new(raise_first_index(&lowered, &form)?)
}

/// Closed-form ω-connection for closed `ω`: the derivative bracket is `∂_k ω_{ij}`.
/// Agrees with [`omega_connection_closed_form`] only where `dω = 0`.
pub fn omega_connection_closed_form_symplectic(
    pi: &ConnectionCoeffs,
    w: &FieldJet,
) -> Result<ConnectionCoeffs> {
    check_jet(pi, w)?;
    require_symmetric(pi)?;
    let form = omega_form(w)?;
    let sym = lowered_sym_combination(pi, &form)?;
    let lowered = Tensor3::from_fn(pi.dim(), |k, i, j| w.partials[(k, i, j)] + sym[(k, i, j)]);
    ConnectionCoeffs::new(raise_first_index(&lowered, &form)?)
}

/// Contorsion `K^a_{bc}` with `K_{abc} = ½(T_{abc} − T_{bca} + T_{cab})`, where
/// lowering and raising use `g` on the first index.
pub fn contorsion(t: &TorsionTensor, g: &BilinearFormValue) -> Result<Tensor3> {
    let tl = lower_first_index(t.tensor(), g)?;
    let k = Tensor3::from_fn(t.dim(), |a, b, c| {
        0.5 * (tl[(a, b, c)] - tl[(b, c, a)] + tl[(c, a, b)])
    });
    raise_first_index(&k, g)
}

/// The unique `g`-preserving connection with torsion `t`: Levi-Civita plus contorsion.
pub fn metric_connection_with_torsion(
    t: &TorsionTensor,
    g: &FieldJet,
) -> Result<Solved<ConnectionCoeffs>> {
    if t.dim() != g.dim() {
        return Err(Error::Shape(format!(
            "torsion of dimension {} against metric of dimension {}",
            t.dim(),
            g.dim()
        )));
    }
    let lc = levi_civita(g)?;
    if t.max_abs() == 0.0 {
        return Ok(lc);
    }
    let (form, _) = metric_form(g)?;
    let k = contorsion(t, &form)?;
    Ok(Solved::new(lc.value.add(&k)?, lc.condition))
}

/// `(∇J)[l,i,j] = ∂_l J^i_j + Σ_m Γ^i_{lm} J^m_j − Σ_m Γ^m_{lj} J^i_m`.
pub fn covariant_derivative_11(
    j_partials: &Tensor3,
    j_value: &DMatrix<f64>,
    gamma: &ConnectionCoeffs,
) -> Result<Tensor3> {
    let n = gamma.dim();
    if j_partials.dim() != n || j_value.nrows() != n || j_value.ncols() != n {
        return Err(Error::Shape(
            "(1,1) field and connection dimensions differ".into(),
        ));
    }
    Ok(Tensor3::from_fn(n, |l, i, j| {
        let mut s = j_partials[(l, i, j)];
        for m in 0..n {
            s += gamma[(i, l, m)] * j_value[(m, j)] - gamma[(m, l, j)] * j_value[(i, m)];
        }
        s
    }))
}

/// `C[i,j,k] = Σ_cyc(i,j,k) Σ_m ω_{mk} T^m_{ij}`.
///
/// For the torsion of any ω-preserving connection this equals `+(dω)_{ijk}`
/// (cyclic-sum convention, no normalization).
pub fn cyclic_torsion_sum(t: &TorsionTensor, w: &DMatrix<f64>) -> Tensor3 {
    let n = t.dim();
    let lowered =
        |i: usize, j: usize, k: usize| (0..n).map(|m| w[(m, k)] * t[(m, i, j)]).sum::<f64>();
    Tensor3::from_fn(n, |i, j, k| {
        lowered(i, j, k) + lowered(j, k, i) + lowered(k, i, j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{exterior_derivative_from_jet, TensorFieldSpec, Valence};
    use crate::tensor::{symmetric_part, torsion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jet(dim: usize, valence: Valence, entries: &[(usize, usize, &str)], p: &[f64]) -> FieldJet {
        TensorFieldSpec::parse(dim, valence, entries)
            .unwrap()
            .eval_jet(p)
            .unwrap()
    }

    fn warped() -> FieldJet {
        jet(
            2,
            Valence::Metric,
            &[(1, 1, "1"), (2, 2, "exp(2*x1)")],
            &[0.0, 0.0],
        )
    }

    fn fubini_study(p: &[f64]) -> FieldJet {
        let f = "1/(1+x1^2+x2^2)^2";
        jet(2, Valence::Metric, &[(1, 1, f), (2, 2, f)], p)
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> ConnectionCoeffs {
        let raw = ConnectionCoeffs::from_fn(n, |_, _, _| rng.gen_range(-1.0..1.0));
        symmetric_part(&raw)
    }

    /// Independent oracle: metric preservation plus prescribed torsion as one
    /// dense linear system.
    fn metric_torsion_by_solve(t: &TorsionTensor, g: &FieldJet) -> ConnectionCoeffs {
        let n = g.dim();
        let u = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let size = n * n * n;
        let mut a = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        let mut row = 0;
        for l in 0..n {
            for p in 0..n {
                for q in p..n {
                    for m in 0..n {
                        a[(row, u(m, l, p))] += g.value[(m, q)];
                        a[(row, u(m, l, q))] += g.value[(p, m)];
                    }
                    rhs[row] = g.partials[(l, p, q)];
                    row += 1;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    a[(row, u(k, i, j))] = 1.0;
                    a[(row, u(k, j, i))] = -1.0;
                    rhs[row] = t[(k, i, j)];
                    row += 1;
                }
            }
        }
        let x = a.lu().solve(&rhs).unwrap();
        ConnectionCoeffs::new(Tensor3::from_vec(n, x.iter().copied().collect()).unwrap()).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_connection() {
        let g = jet(2, Valence::Metric, &[(1, 1, "1"), (2, 2, "1")], &[0.3, 0.4]);
        assert_eq!(levi_civita(&g).unwrap().value.max_abs(), 0.0);
    }

    #[test]
    fn warped_metric_christoffel_symbols() {
        let lc = levi_civita(&warped()).unwrap().value;
        assert!((lc[(1, 0, 1)] - 1.0).abs() < 1e-15);
        assert!((lc[(1, 1, 0)] - 1.0).abs() < 1e-15);
        assert!((lc[(0, 1, 1)] + 1.0).abs() < 1e-15);
        let mut expected = ConnectionCoeffs::zeros(2);
        expected[(1, 0, 1)] = 1.0;
        expected[(1, 1, 0)] = 1.0;
        expected[(0, 1, 1)] = -1.0;
        assert!(crate::tensor::max_abs_distance(&lc, &expected).unwrap() < 1e-15);
        assert!(
            metric_preservation_residual(&lc, &warped())
                .unwrap()
                .max_abs()
                <= 1e-14
        );
    }

    #[test]
    fn fubini_study_at_origin_is_flat_to_first_order() {
        assert_eq!(
            levi_civita(&fubini_study(&[0.0, 0.0]))
                .unwrap()
                .value
                .max_abs(),
            0.0
        );
        let p = [0.3, -0.2];
        let lc = levi_civita(&fubini_study(&p)).unwrap().value;
        assert!(lc.is_symmetric());
        assert!(
            metric_preservation_residual(&lc, &fubini_study(&p))
                .unwrap()
                .max_abs()
                <= 1e-10
        );
    }

    #[test]
    fn levi_civita_rejects_indefinite_metric() {
        let g = jet(
            2,
            Valence::Metric,
            &[(1, 1, "1"), (2, 2, "-1")],
            &[0.0, 0.0],
        );
        assert!(matches!(levi_civita(&g), Err(Error::Signature(_))));
    }

    #[test]
    fn ill_conditioned_metric_carries_warning() {
        let g = jet(
            2,
            Valence::Metric,
            &[(1, 1, "1"), (2, 2, "1e-11")],
            &[0.0, 0.0],
        );
        let lc = levi_civita(&g).unwrap();
        assert!(lc.warning().is_some());
        assert!(levi_civita(&warped()).unwrap().warning().is_none());
    }

    #[test]
    fn residuals_reduce_to_derivatives_for_zero_connection() {
        let z = ConnectionCoeffs::zeros(2);
        let r = metric_preservation_residual(&z, &warped()).unwrap();
        assert_eq!(r.0[(0, 1, 1)], 2.0);
        assert_eq!(r.max_abs(), 2.0);
        let c = jet(2, Valence::Metric, &[(1, 1, "2"), (2, 2, "3")], &[0.1, 0.1]);
        assert_eq!(metric_preservation_residual(&z, &c).unwrap().max_abs(), 0.0);

        let w = jet(2, Valence::TwoForm, &[(1, 2, "exp(x1)")], &[0.0, 0.0]);
        let r = omega_preservation_residual(&z, &w).unwrap();
        assert_eq!(r.0[(0, 0, 1)], 1.0);
        assert_eq!(r.0[(0, 1, 0)], -1.0);
        assert_eq!(r.max_abs(), 1.0);
        let wc = jet(2, Valence::TwoForm, &[(1, 2, "1")], &[0.1, 0.1]);
        assert_eq!(omega_preservation_residual(&z, &wc).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn omega_connection_for_constant_form_and_zero_pi() {
        let w = jet(4, Valence::TwoForm, &[(1, 2, "1"), (3, 4, "1")], &[0.0; 4]);
        let g = omega_connection_from_sym(&ConnectionCoeffs::zeros(4), &w)
            .unwrap()
            .value;
        assert!(g.max_abs() <= 1e-15);
    }

    #[test]
    fn omega_connection_for_exponential_form() {
        let w = jet(2, Valence::TwoForm, &[(1, 2, "exp(x1)")], &[0.0, 0.0]);
        let g = omega_connection_from_sym(&ConnectionCoeffs::zeros(2), &w)
            .unwrap()
            .value;
        assert!(symmetric_part(&g).max_abs() <= 1e-12);
        assert!(omega_preservation_residual(&g, &w).unwrap().max_abs() <= 1e-10);
        // regression fixture from the dense solve
        let mut expected = ConnectionCoeffs::zeros(2);
        expected[(1, 0, 1)] = 1.0;
        expected[(1, 1, 0)] = -1.0;
        assert!(
            crate::tensor::max_abs_distance(&g, &expected).unwrap() <= 1e-12,
            "{g:?}"
        );
    }

    #[test]
    fn omega_connection_with_levi_civita_symmetric_part() {
        let w = jet(2, Valence::TwoForm, &[(1, 2, "1")], &[0.0, 0.0]);
        let pi = levi_civita(&warped()).unwrap().value;
        let g = omega_connection_from_sym(&pi, &w).unwrap().value;
        assert!(crate::tensor::max_abs_distance(&symmetric_part(&g), &pi).unwrap() <= 1e-12);
        assert!(omega_preservation_residual(&g, &w).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn omega_connection_rejects_bad_input() {
        let w = jet(2, Valence::TwoForm, &[(1, 2, "1")], &[0.0, 0.0]);
        let mut pi = ConnectionCoeffs::zeros(2);
        pi[(0, 0, 1)] = 1.0;
        assert!(matches!(
            omega_connection_from_sym(&pi, &w),
            Err(Error::Parameter(_))
        ));
        let degenerate = jet(2, Valence::TwoForm, &[(1, 2, "x1")], &[0.0, 0.0]);
        assert!(matches!(
            omega_connection_from_sym(&ConnectionCoeffs::zeros(2), &degenerate),
            Err(Error::DegenerateForm { .. })
        ));
    }

    #[test]
    fn bijection_and_affine_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = [0.2, -0.3, 0.1, 0.4];
        let w = jet(
            4,
            Valence::TwoForm,
            &[
                (1, 2, "1 + x3^2"),
                (3, 4, "exp(x1)"),
                (2, 3, "x1*x4"),
                (1, 4, "0.3*sin(x2)"),
            ],
            &p,
        );
        let pi1 = random_symmetric(4, &mut rng);
        let pi2 = random_symmetric(4, &mut rng);
        let g1 = omega_connection_from_sym(&pi1, &w).unwrap().value;
        let g2 = omega_connection_from_sym(&pi2, &w).unwrap().value;
        // round trip through the symmetric part
        let back = omega_connection_from_sym(&symmetric_part(&g1), &w)
            .unwrap()
            .value;
        assert!(crate::tensor::max_abs_distance(&back, &g1).unwrap() <= 1e-10);
        // collinear inputs map to collinear outputs
        let mid =
            ConnectionCoeffs::from_fn(4, |k, i, j| 0.25 * pi1[(k, i, j)] + 0.75 * pi2[(k, i, j)]);
        let gm = omega_connection_from_sym(&mid, &w).unwrap().value;
        let lin =
            ConnectionCoeffs::from_fn(4, |k, i, j| 0.25 * g1[(k, i, j)] + 0.75 * g2[(k, i, j)]);
        assert!(crate::tensor::max_abs_distance(&gm, &lin).unwrap() <= 1e-10);
    }

    #[test]
    fn closed_form_matches_solve_for_nonclosed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = [0.2, -0.3, 0.1, 0.4];
        let w = jet(
            4,
            Valence::TwoForm,
            &[(1, 2, "1"), (3, 4, "1"), (2, 3, "x1"), (1, 3, "x2*x4")],
            &p,
        );
        assert!(exterior_derivative_from_jet(&w).max_abs() > 0.5);
        for _ in 0..5 {
            let pi = random_symmetric(4, &mut rng);
            let solve = omega_connection_from_sym(&pi, &w).unwrap().value;
            let closed = omega_connection_closed_form(&pi, &w).unwrap();
            assert!(crate::tensor::max_abs_distance(&solve, &closed).unwrap() <= 1e-10);
            let sympl = omega_connection_closed_form_symplectic(&pi, &w).unwrap();
            assert!(crate::tensor::max_abs_distance(&solve, &sympl).unwrap() > 1e-3);
        }
    }

    #[test]
    fn cyclic_torsion_identity_reproduces_d_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = [0.5, 0.1, -0.2, 0.3];
        let w = jet(
            4,
            Valence::TwoForm,
            &[
                (1, 2, "2 + x3"),
                (3, 4, "1"),
                (2, 3, "x1^2"),
                (2, 4, "x3*x1"),
            ],
            &p,
        );
        let d = exterior_derivative_from_jet(&w);
        for _ in 0..5 {
            let g = omega_connection_from_sym(&random_symmetric(4, &mut rng), &w)
                .unwrap()
                .value;
            let c = cyclic_torsion_sum(&torsion(&g), &w.value);
            assert!(c.max_abs_diff(&d).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn torsion_example_with_flat_metric() {
        let g = jet(2, Valence::Metric, &[(1, 1, "1"), (2, 2, "1")], &[0.0, 0.0]);
        let t =
            TorsionTensor::from_upper(2, |k, i, j| if (k, i, j) == (0, 0, 1) { 1.0 } else { 0.0 });
        let c = metric_connection_with_torsion(&t, &g).unwrap().value;
        let mut expected = ConnectionCoeffs::zeros(2);
        expected[(0, 0, 1)] = 1.0;
        expected[(1, 0, 0)] = -1.0;
        assert!(
            crate::tensor::max_abs_distance(&c, &expected).unwrap() <= 1e-15,
            "{c:?}"
        );
        let oracle = metric_torsion_by_solve(&t, &g);
        assert!(crate::tensor::max_abs_distance(&c, &oracle).unwrap() <= 1e-12);
    }

    #[test]
    fn contorsion_matches_linear_solve_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = [0.3, -0.2];
        let g = fubini_study(&p);
        for _ in 0..10 {
            let t = TorsionTensor::from_upper(2, |_, _, _| rng.gen_range(-1.0..1.0));
            let c = metric_connection_with_torsion(&t, &g).unwrap().value;
            assert!(torsion(&c).tensor().max_abs_diff(t.tensor()).unwrap() <= 1e-12);
            assert!(metric_preservation_residual(&c, &g).unwrap().max_abs() <= 1e-10);
            let oracle = metric_torsion_by_solve(&t, &g);
            assert!(crate::tensor::max_abs_distance(&c, &oracle).unwrap() <= 1e-10);
        }
        let g4 = jet(
            4,
            Valence::Metric,
            &[
                (1, 1, "1"),
                (2, 2, "1 + x1^2"),
                (2, 3, "-x1"),
                (3, 3, "1"),
                (4, 4, "exp(x2)"),
            ],
            &[0.4, 0.1, 0.0, 0.2],
        );
        let t = TorsionTensor::from_upper(4, |_, _, _| rng.gen_range(-1.0..1.0));
        let c = metric_connection_with_torsion(&t, &g4).unwrap().value;
        let oracle = metric_torsion_by_solve(&t, &g4);
        assert!(crate::tensor::max_abs_distance(&c, &oracle).unwrap() <= 1e-10);
    }

    #[test]
    fn zero_torsion_gives_levi_civita_exactly() {
        let g = fubini_study(&[0.5, 0.5]);
        let c = metric_connection_with_torsion(&TorsionTensor::zeros(2), &g)
            .unwrap()
            .value;
        assert_eq!(c, levi_civita(&g).unwrap().value);
    }

    #[test]
    fn covariant_derivative_of_constant_field() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let d =
            covariant_derivative_11(&Tensor3::zeros(2), &j, &ConnectionCoeffs::zeros(2)).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }
}
