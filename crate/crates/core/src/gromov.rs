//! Pointwise Gromov construction of an almost complex structure compatible
//! with `ω`, starting from an auxiliary metric `g₀`.
//!
//! `A` is defined by `g₀(AX, Y) = ω(X, Y)`, `B = √(−A²)` is the `g₀`-self-adjoint
//! positive square root, `J = B⁻¹A`, and the hermitian metric is
//! `g(X, Y) = ω(X, JY)`.
//!
//! All three operators are computed in a `g₀`-orthonormal frame
//! (`g₀ = L·Lᵀ`, `X̃ = Lᵀ·X·L⁻ᵀ`), where `Ã` is antisymmetric and `−Ã²` is
//! symmetric, so the square root reduces to a symmetric eigendecomposition.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, antisymmetrize, max_abs, max_abs_diff, symmetrize};
use crate::tensor::{BilinearFormValue, FormKind, Tensor3};

/// Relative eigenvalue floor for `−A²`.
pub const EIGEN_FLOOR: f64 = 1e-12;

fn require_metric(g0: &BilinearFormValue) -> Result<Cholesky<f64, Dyn>> {
    if g0.kind() != FormKind::Symmetric {
        return Err(Error::Parameter("g₀ must be a symmetric form".into()));
    }
    g0.matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Signature("g₀ is not positive definite".into()))
}

fn check_pair(g0: &BilinearFormValue, w: &BilinearFormValue) -> Result<()> {
    let n = g0.dim();
    if w.dim() != n {
        return Err(Error::Shape(format!(
            "g₀ has dimension {n}, ω has {}",
            w.dim()
        )));
    }
    if n % 2 == 1 {
        return Err(Error::Dimension(format!(
            "odd dimension {n} admits no non-degenerate 2-form"
        )));
    }
    if w.kind() != FormKind::Antisymmetric {
        return Err(Error::Parameter("ω must be an antisymmetric form".into()));
    }
    Ok(())
}

/// `A = −g₀⁻¹·ω`, the endomorphism with `g₀(AX, Y) = ω(X, Y)`.
pub fn operator_a(g0: &BilinearFormValue, w: &BilinearFormValue) -> Result<DMatrix<f64>> {
    check_pair(g0, w)?;
    let chol = require_metric(g0)?;
    Ok(-chol.solve(w.matrix()))
}

/// Lower-triangular Cholesky factor and its inverse.
fn frame(g0: &BilinearFormValue) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let l = require_metric(g0)?.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(g0.dim(), g0.dim()))
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    Ok((l, l_inv))
}

/// `X ↦ Lᵀ·X·L⁻ᵀ`
fn to_orthonormal(x: &DMatrix<f64>, l: &DMatrix<f64>, l_inv: &DMatrix<f64>) -> DMatrix<f64> {
    l.transpose() * x * l_inv.transpose()
}

/// `X̃ ↦ L⁻ᵀ·X̃·Lᵀ`
fn from_orthonormal(x: &DMatrix<f64>, l: &DMatrix<f64>, l_inv: &DMatrix<f64>) -> DMatrix<f64> {
    l_inv.transpose() * x * l.transpose()
}

/// Eigenvalues and eigenvectors of a symmetric positive-definite matrix,
/// with the relative floor enforced.
fn positive_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = symmetrize(m).symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let threshold = EIGEN_FLOOR * top;
    for &e in eig.eigenvalues.iter() {
        if !(e > threshold) {
            return Err(Error::NotPositive {
                eigenvalue: e,
                threshold,
            });
        }
    }
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn spectral(q: &DMatrix<f64>, values: &[f64], f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = values.len();
    let mut scaled = q.clone();
    for c in 0..n {
        let s = f(values[c]);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    symmetrize(&(scaled * q.transpose()))
}

/// The `g₀`-self-adjoint positive square root of `−A·A`.
pub fn sqrt_neg_a_squared(a: &DMatrix<f64>, g0: &BilinearFormValue) -> Result<DMatrix<f64>> {
    let n = g0.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Shape("A and g₀ dimensions differ".into()));
    }
    let (l, l_inv) = frame(g0)?;
    let m = -(a * a);
    let (values, q) = positive_eigen(&to_orthonormal(&m, &l, &l_inv))?;
    let b = spectral(&q, &values, f64::sqrt);
    Ok(from_orthonormal(&b, &l, &l_inv))
}

/// Residuals of the defining identities of a [`GromovFrame`]. Entries marked
/// relative are divided by `max(1, scale)` of the quantity they compare.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FrameResiduals {
    /// `g₀(Aeᵢ, eⱼ) − ω(eᵢ, eⱼ)`, relative
    pub defining_identity: f64,
    /// `g₀(AX, Y) + g₀(X, AY)`, relative
    pub a_antisymmetry: f64,
    /// `g₀(BX, Y) − g₀(X, BY)`, relative
    pub b_self_adjoint: f64,
    /// smallest eigenvalue of `B` in the orthonormal frame
    pub b_min_eigenvalue: f64,
    /// `B·B + A·A`, relative
    pub b_squared: f64,
    /// `A·B − B·A`, relative
    pub b_commutator: f64,
    /// `J·J + I`
    pub j_squared: f64,
    /// `ω(JX, Y) + ω(X, JY)`, relative
    pub compatibility: f64,
    /// `ω(JX, JY) − ω(X, Y)`, relative
    pub omega_invariance: f64,
    /// smallest `ω(eᵢ, Jeᵢ)`
    pub min_omega_x_jx_basis: f64,
    /// `g(eᵢ, eⱼ) − g(eⱼ, eᵢ)` before symmetrization, relative
    pub herm_asymmetry: f64,
    /// smallest eigenvalue of the hermitian metric
    pub herm_min_eigenvalue: f64,
    /// `g(JX, JY) − g(X, Y)`, relative
    pub j_isometry: f64,
}

impl FrameResiduals {
    /// True when every identity holds at the default tolerances.
    pub fn all_hold(&self) -> bool {
        self.defining_identity <= 1e-12
            && self.a_antisymmetry <= 1e-12
            && self.b_self_adjoint <= 1e-10
            && self.b_min_eigenvalue > 0.0
            && self.b_squared <= 1e-10
            && self.b_commutator <= 1e-10
            && self.j_squared <= 1e-12
            && self.compatibility <= 1e-12
            && self.omega_invariance <= 1e-12
            && self.min_omega_x_jx_basis > 0.0
            && self.herm_asymmetry <= 1e-12
            && self.herm_min_eigenvalue > 0.0
            && self.j_isometry <= 1e-10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GromovFrame {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub j: DMatrix<f64>,
    /// `g_herm[(i, j)] = ω(eᵢ, J·eⱼ)`, symmetrized.
    pub g_herm: DMatrix<f64>,
    pub residuals: FrameResiduals,
}

/// Runs the construction at one point.
pub fn gromov_j(g0: &BilinearFormValue, w: &BilinearFormValue) -> Result<GromovFrame> {
    check_pair(g0, w)?;
    let (l, l_inv) = frame(g0)?;
    let a = operator_a(g0, w)?;
    // Ã = −L⁻¹·ω·L⁻ᵀ is antisymmetric
    let a_t = antisymmetrize(&(-(&l_inv * w.matrix() * l_inv.transpose())));
    let m_t = a_t.transpose() * &a_t;
    let (values, q) = positive_eigen(&m_t)?;
    let b_t = spectral(&q, &values, f64::sqrt);
    let b_inv_t = spectral(&q, &values, |x| 1.0 / x.sqrt());
    let j_t = &b_inv_t * &a_t;
    let b = from_orthonormal(&b_t, &l, &l_inv);
    let j = from_orthonormal(&j_t, &l, &l_inv);
    let raw_herm = w.matrix() * &j;
    let g_herm = symmetrize(&raw_herm);
    let residuals = frame_residuals(g0, w, &a, &b, &j, &raw_herm, &values)?;
    Ok(GromovFrame {
        a,
        b,
        j,
        g_herm,
        residuals,
    })
}

fn rel(x: f64, scale: f64) -> f64 {
    x / scale.max(1.0)
}

fn frame_residuals(
    g0: &BilinearFormValue,
    w: &BilinearFormValue,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    j: &DMatrix<f64>,
    raw_herm: &DMatrix<f64>,
    neg_a2_eigenvalues: &[f64],
) -> Result<FrameResiduals> {
    let n = g0.dim();
    let g = g0.matrix();
    let om = w.matrix();
    let w_scale = max_abs(om);
    let ga = g * a;
    let gb = g * b;
    let aa = a * a;
    let herm = symmetrize(raw_herm);
    let h_scale = max_abs(&herm);
    let herm_min_eigenvalue = herm
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let min_omega_x_jx_basis = (0..n)
        .map(|i| raw_herm[(i, i)])
        .fold(f64::INFINITY, f64::min);
    Ok(FrameResiduals {
        defining_identity: rel(max_abs_diff(&(a.transpose() * g), om), w_scale),
        a_antisymmetry: rel(max_abs(&(&ga + ga.transpose())), w_scale),
        b_self_adjoint: rel(max_abs(&(&gb - gb.transpose())), max_abs(&gb)),
        b_min_eigenvalue: neg_a2_eigenvalues
            .iter()
            .map(|v| v.sqrt())
            .fold(f64::INFINITY, f64::min),
        b_squared: rel(max_abs(&(b * b + &aa)), max_abs(&aa)),
        b_commutator: rel(max_abs(&(a * b - b * a)), max_abs(a) * max_abs(b)),
        j_squared: max_abs(&(j * j + DMatrix::identity(n, n))),
        compatibility: rel(max_abs(&(j.transpose() * om + om * j)), w_scale),
        omega_invariance: rel(max_abs_diff(&(j.transpose() * om * j), om), w_scale),
        min_omega_x_jx_basis,
        herm_asymmetry: rel(max_abs(&(raw_herm - raw_herm.transpose())), h_scale),
        herm_min_eigenvalue,
        j_isometry: rel(max_abs_diff(&(j.transpose() * &herm * j), &herm), h_scale),
    })
}

/// `N[i,j,k] = Σ_l (J^l_j ∂_l J^i_k − J^l_k ∂_l J^i_j − J^i_l (∂_j J^l_k − ∂_k J^l_j))`.
pub fn nijenhuis(j: &DMatrix<f64>, partials: &Tensor3) -> Result<Tensor3> {
    let n = j.nrows();
    if j.ncols() != n || partials.dim() != n {
        return Err(Error::Shape(
            "J and its partials have different dimensions".into(),
        ));
    }
    if n % 2 == 1 {
        return Err(Error::Dimension(format!("odd dimension {n}")));
    }
    let d = partials;
    Ok(Tensor3::from_fn(n, |i, a, b| {
        (0..n)
            .map(|l| {
                j[(l, a)] * d[(l, i, b)]
                    - j[(l, b)] * d[(l, i, a)]
                    - j[(i, l)] * (d[(a, l, b)] - d[(b, l, a)])
            })
            .sum()
    }))
}

/// Positive smallest eigenvalue check used by callers that only hold a matrix.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    linalg::spd_condition(&symmetrize(m)).is_ok()
}
