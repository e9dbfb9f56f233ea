//! Dense pointwise tensors: connection coefficients, torsion, bilinear forms.
//!
//! Index convention used throughout the crate: `gamma[(k, i, j)]` is the
//! `∂_k` component of `∇_{∂_i} ∂_j`, so `i` is the direction slot and `j`
//! the argument slot. All indices are zero-based.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative determinant threshold below which a form counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// A dense `n × n × n` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    data.push(f(a, b, c));
                }
            }
        }
        Self { dim, data }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Slice `[a, ·, ·]` as a matrix.
    pub fn slice_first(&self, a: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |b, c| self[(a, b, c)])
    }

    /// Nested row-major representation `[a][b][c]`.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| (0..n).map(|c| self[(a, b, c)]).collect())
                    .collect()
            })
            .collect()
    }

    #[inline]
    fn offset(&self, (a, b, c): (usize, usize, usize)) -> usize {
        debug_assert!(a < self.dim && b < self.dim && c < self.dim);
        (a * self.dim + b) * self.dim + c
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(idx)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, idx: (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("dimension {a} vs {b}")));
    }
    Ok(())
}

/// Christoffel symbols `Γ^k_{ij}` of a linear connection at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConnectionCoeffs(Tensor3);

impl ConnectionCoeffs {
    pub fn new(gamma: Tensor3) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::Parameter(
                "connection coefficients must be finite".into(),
            ));
        }
        Ok(Self(gamma))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Tensor3::zeros(dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        Self(Tensor3::from_fn(dim, f))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// True when `Γ^k_{ij} = Γ^k_{ji}` holds exactly.
    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|k| (0..n).all(|i| (0..i).all(|j| self[(k, i, j)] == self[(k, j, i)])))
    }

    pub fn add(&self, other: &Tensor3) -> Result<Self> {
        Ok(Self(self.0.zip_with(other, |a, b| a + b)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Tensor3> {
        self.0.zip_with(&other.0, |a, b| a - b)
    }
}

impl Index<(usize, usize, usize)> for ConnectionCoeffs {
    type Output = f64;

    fn index(&self, idx: (usize, usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize, usize)> for ConnectionCoeffs {
    fn index_mut(&mut self, idx: (usize, usize, usize)) -> &mut f64 {
        &mut self.0[idx]
    }
}

/// Torsion-type tensor `T^k_{ij}`, antisymmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Tensor3", into = "Tensor3")]
pub struct TorsionTensor(Tensor3);

impl TorsionTensor {
    /// Fails unless `t[(k, i, j)] == -t[(k, j, i)]` exactly.
    pub fn new(t: Tensor3) -> Result<Self> {
        let n = t.dim();
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    if t[(k, i, j)] != -t[(k, j, i)] {
                        return Err(Error::Parameter(format!(
                            "torsion not antisymmetric at ({k}, {i}, {j})"
                        )));
                    }
                }
            }
        }
        if !t.is_finite() {
            return Err(Error::Parameter("torsion entries must be finite".into()));
        }
        Ok(Self(t))
    }

    /// Builds the tensor from its `i < j` components; the rest follows by antisymmetry.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let v = f(k, i, j);
                    t[(k, i, j)] = v;
                    t[(k, j, i)] = -v;
                }
            }
        }
        Self(t)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Tensor3::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

impl TryFrom<Tensor3> for TorsionTensor {
    type Error = Error;

    fn try_from(t: Tensor3) -> Result<Self> {
        Self::new(t)
    }
}

impl From<TorsionTensor> for Tensor3 {
    fn from(t: TorsionTensor) -> Self {
        t.0
    }
}

impl Index<(usize, usize, usize)> for TorsionTensor {
    type Output = f64;

    fn index(&self, idx: (usize, usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Symmetric,
    Antisymmetric,
}

/// Components `b_{ij}` of a non-degenerate bilinear form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearFormValue {
    matrix: DMatrix<f64>,
    kind: FormKind,
}

impl BilinearFormValue {
    pub fn new(matrix: DMatrix<f64>, kind: FormKind) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "form matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("form entries must be finite".into()));
        }
        for i in 0..n {
            for j in 0..=i {
                let ok = match kind {
                    FormKind::Symmetric => matrix[(i, j)] == matrix[(j, i)],
                    FormKind::Antisymmetric => matrix[(i, j)] == -matrix[(j, i)],
                };
                if !ok {
                    return Err(Error::Shape(format!("form is not {kind:?} at ({i}, {j})")));
                }
            }
        }
        let scale = linalg::max_abs(&matrix);
        let det = matrix.determinant();
        let threshold = DEGENERACY_THRESHOLD * scale.powi(n as i32);
        if scale == 0.0 || det.abs() < threshold {
            return Err(Error::DegenerateForm { det, threshold });
        }
        Ok(Self { matrix, kind })
    }

    pub fn symmetric(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix, FormKind::Symmetric)
    }

    pub fn antisymmetric(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix, FormKind::Antisymmetric)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    /// Evaluates `b(x, y)`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .flat_map(|(i, xi)| y.iter().enumerate().map(move |(j, yj)| (i, j, xi * yj)))
            .map(|(i, j, xy)| xy * self.matrix[(i, j)])
            .sum()
    }
}

/// `Π^k_{ij} = ½(Γ^k_{ij} + Γ^k_{ji})`.
pub fn symmetric_part(gamma: &ConnectionCoeffs) -> ConnectionCoeffs {
    ConnectionCoeffs::from_fn(gamma.dim(), |k, i, j| {
        0.5 * (gamma[(k, i, j)] + gamma[(k, j, i)])
    })
}

/// `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}`.
pub fn torsion(gamma: &ConnectionCoeffs) -> TorsionTensor {
    // a - b and b - a are exact negatives in IEEE arithmetic
    TorsionTensor(Tensor3::from_fn(gamma.dim(), |k, i, j| {
        gamma[(k, i, j)] - gamma[(k, j, i)]
    }))
}

/// `out[k,i,j] = Σ_l b[k,l] · t[l,i,j]`.
pub fn lower_first_index(t: &Tensor3, b: &BilinearFormValue) -> Result<Tensor3> {
    let n = t.dim();
    check_dims(n, b.dim())?;
    let m = b.matrix();
    Ok(Tensor3::from_fn(n, |k, i, j| {
        (0..n).map(|l| m[(k, l)] * t[(l, i, j)]).sum()
    }))
}

/// Inverse of [`lower_first_index`]: solves `b · out[·,i,j] = t[·,i,j]` for every `(i, j)`.
pub fn raise_first_index(t: &Tensor3, b: &BilinearFormValue) -> Result<Tensor3> {
    let n = t.dim();
    check_dims(n, b.dim())?;
    let lu = b.matrix().clone().lu();
    let mut rhs = DMatrix::zeros(n, n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                rhs[(k, i * n + j)] = t[(k, i, j)];
            }
        }
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("singular form in index raising".into()))?;
    Ok(Tensor3::from_fn(n, |k, i, j| sol[(k, i * n + j)]))
}

/// Largest entrywise distance between two connections.
pub fn max_abs_distance(a: &ConnectionCoeffs, b: &ConnectionCoeffs) -> Result<f64> {
    a.tensor().max_abs_diff(b.tensor())
}
