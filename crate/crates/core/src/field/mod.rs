//! Chart-local tensor fields defined by expressions, with exact first
//! derivatives and finite-difference support for derived fields.

pub mod dual;
pub mod expr;
pub mod spec;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use dual::{Dual, MAX_DIM};
pub use expr::{parse_expr, parse_expr_with_names, ScalarExpr};

/// Symmetry class of a matrix-valued field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    /// (0,2) symmetric; components stored for `i <= j`.
    Metric,
    /// (0,2) antisymmetric; components stored for `i < j`.
    TwoForm,
    /// (1,1); all `n²` components.
    Mixed,
}

/// Closed coordinate box with a finite list of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    samples: Vec<Vec<f64>>,
}

impl ChartDomain {
    pub fn new(bounds: &[[f64; 2]], samples: Vec<Vec<f64>>) -> Result<Self> {
        let dim = bounds.len();
        if dim == 0 {
            return Err(Error::Dimension("chart dimension must be positive".into()));
        }
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Parameter(format!(
                    "box interval {} is [{lo}, {hi}], need lo < hi",
                    i + 1
                )));
            }
        }
        let d = Self {
            lo: bounds.iter().map(|b| b[0]).collect(),
            hi: bounds.iter().map(|b| b[1]).collect(),
            samples: Vec::new(),
        };
        for (s, p) in samples.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Shape(format!(
                    "sample {s} has {} coordinates, chart has {dim}",
                    p.len()
                )));
            }
            if !d.contains(p) {
                return Err(Error::Parameter(format!(
                    "sample {s} {p:?} lies outside the box"
                )));
            }
        }
        Ok(Self { samples, ..d })
    }

    /// Cell-centred grid with `counts[i]` points along axis `i`; the first
    /// axis varies slowest. Grid points never touch the box boundary.
    pub fn grid(bounds: &[[f64; 2]], counts: &[usize]) -> Result<Self> {
        if counts.len() != bounds.len() {
            return Err(Error::Shape(format!(
                "grid has {} axes, box has {}",
                counts.len(),
                bounds.len()
            )));
        }
        if counts.contains(&0) {
            return Err(Error::Parameter("grid counts must be positive".into()));
        }
        let axes: Vec<Vec<f64>> = bounds
            .iter()
            .zip(counts)
            .map(|([lo, hi], &c)| {
                (0..c)
                    .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / c as f64)
                    .collect()
            })
            .collect();
        let mut samples = vec![Vec::new()];
        for axis in &axes {
            samples = samples
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        Self::new(bounds, samples)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| [a, b])
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| x.is_finite() && lo <= x && x <= hi)
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest step `<= h` whose central stencil around `p` stays in the box.
    pub fn fit_step(&self, p: &[f64], h: f64) -> Result<f64> {
        let room = p
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (lo, hi))| (x - lo).min(hi - x))
            .fold(f64::INFINITY, f64::min);
        if !(room > 0.0) {
            return Err(Error::Parameter(format!(
                "point {p:?} lies on the box boundary; no central stencil fits"
            )));
        }
        Ok(h.min(room))
    }
}

/// Component values and first partials of a matrix field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    /// `value[(i, j)]`
    pub value: DMatrix<f64>,
    /// `partials[(l, i, j)] = ∂_l value[(i, j)]`
    pub partials: Tensor3,
}

impl FieldJet {
    pub fn dim(&self) -> usize {
        self.value.nrows()
    }
}

/// Matrix-valued field on a chart, one expression per independent component.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFieldSpec {
    dim: usize,
    valence: Valence,
    components: BTreeMap<(usize, usize), ScalarExpr>,
    label: String,
}

impl TensorFieldSpec {
    /// Components absent from the map are zero. Keys are zero-based `(i, j)`.
    pub fn new(
        dim: usize,
        valence: Valence,
        components: BTreeMap<(usize, usize), ScalarExpr>,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(format!(
                "chart dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        for (&(i, j), e) in &components {
            let ok = i < dim
                && j < dim
                && match valence {
                    Valence::Metric => i <= j,
                    Valence::TwoForm => i < j,
                    Valence::Mixed => true,
                };
            if !ok {
                return Err(Error::Shape(format!(
                    "component ({},{}) is not an independent {valence:?} component in dimension {dim}",
                    i + 1,
                    j + 1
                )));
            }
            if let Some(l) = e.max_coord() {
                if l >= dim {
                    return Err(Error::Dimension(format!(
                        "component ({},{}) references x{}",
                        i + 1,
                        j + 1,
                        l + 1
                    )));
                }
            }
        }
        let label = match valence {
            Valence::Metric => "g",
            Valence::TwoForm => "omega",
            Valence::Mixed => "field",
        }
        .to_string();
        Ok(Self {
            dim,
            valence,
            components,
            label,
        })
    }

    /// Parses `(i, j, source)` triples with one-based indices.
    pub fn parse(dim: usize, valence: Valence, entries: &[(usize, usize, &str)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(i, j, src) in entries {
            if i == 0 || j == 0 {
                return Err(Error::Shape("component indices are one-based".into()));
            }
            map.insert((i - 1, j - 1), parse_expr(src, dim)?);
        }
        Self::new(dim, valence, map)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn components(&self) -> &BTreeMap<(usize, usize), ScalarExpr> {
        &self.components
    }

    fn assemble<S: dual::Scalar>(&self, x: &[S]) -> Result<Vec<((usize, usize), S)>> {
        let point: Vec<f64> = x.iter().map(|s| s.re()).collect();
        self.components
            .iter()
            .map(|(&(i, j), e)| {
                e.eval(x)
                    .map(|v| ((i, j), v))
                    .map_err(|message| Error::Eval {
                        component: format!("{}[{},{}]", self.label, i + 1, j + 1),
                        point: point.clone(),
                        message,
                    })
            })
            .collect()
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Shape(format!(
                "point has {} coordinates, field dimension is {}",
                p.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Component matrix at `p`.
    pub fn value_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for ((i, j), v) in self.assemble(p)? {
            self.place(&mut m, i, j, v);
        }
        Ok(m)
    }

    fn place(&self, m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
        m[(i, j)] = v;
        match self.valence {
            Valence::Metric => m[(j, i)] = v,
            Valence::TwoForm => m[(j, i)] = -v,
            Valence::Mixed => {}
        }
    }

    /// Values and exact first partials by forward-mode differentiation.
    pub fn eval_jet(&self, p: &[f64]) -> Result<FieldJet> {
        self.check_point(p)?;
        let x: Vec<Dual> = p
            .iter()
            .enumerate()
            .map(|(l, &v)| Dual::variable(v, l))
            .collect();
        let n = self.dim;
        let mut value = DMatrix::zeros(n, n);
        let mut partials = Tensor3::zeros(n);
        for ((i, j), v) in self.assemble(&x)? {
            self.place(&mut value, i, j, v.re);
            for l in 0..n {
                partials[(l, i, j)] = v.eps[l];
                match self.valence {
                    Valence::Metric => partials[(l, j, i)] = v.eps[l],
                    Valence::TwoForm => partials[(l, j, i)] = -v.eps[l],
                    Valence::Mixed => {}
                }
            }
        }
        Ok(FieldJet { value, partials })
    }
}

/// Sign of the permutation taking `(a, b, c)` to sorted order, with the sorted triple.
fn sort3(a: usize, b: usize, c: usize) -> Option<(f64, [usize; 3])> {
    if a == b || b == c || a == c {
        return None;
    }
    let mut v = [a, b, c];
    let mut sign = 1.0;
    for i in 0..3 {
        for j in 0..2 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    Some((sign, v))
}

/// `(dω)_{ijk} = ∂_i ω_{jk} + ∂_j ω_{ki} + ∂_k ω_{ij}` from a 2-form jet.
///
/// No 1/3 normalization. Computed once per sorted triple and filled by
/// permutation sign, so the result is exactly alternating.
pub fn exterior_derivative_from_jet(w: &FieldJet) -> Tensor3 {
    let n = w.dim();
    let d = &w.partials;
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let v = d[(i, j, k)] + d[(j, k, i)] + d[(k, i, j)];
                for (a, b, c) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    let (sign, _) = sort3(a, b, c).expect("distinct");
                    out[(a, b, c)] = sign * v;
                }
            }
        }
    }
    out
}

/// Exterior derivative of a 2-form field at `p`.
pub fn exterior_derivative_2form(field: &TensorFieldSpec, p: &[f64]) -> Result<Tensor3> {
    if field.valence() != Valence::TwoForm {
        return Err(Error::Parameter(
            "exterior derivative needs a 2-form field".into(),
        ));
    }
    Ok(exterior_derivative_from_jet(&field.eval_jet(p)?))
}

/// Partials `∂_l f_{ij}` of a matrix-valued map by central differences with one
/// Richardson step: `(4·D(h/2) − D(h)) / 3`, accurate to `O(h⁴)`.
pub fn finite_diff_matrix_field<F>(f: F, p: &[f64], h: f64) -> Result<Tensor3>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let dim = p.len();
    let mut out: Option<Tensor3> = None;
    let mut x = p.to_vec();
    for l in 0..dim {
        let mut central = |step: f64| -> Result<DMatrix<f64>> {
            x[l] = p[l] + step;
            let plus = f(&x)?;
            x[l] = p[l] - step;
            let minus = f(&x)?;
            x[l] = p[l];
            Ok((plus - minus) / (2.0 * step))
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        let n = coarse.nrows();
        let t = out.get_or_insert_with(|| Tensor3::zeros(n));
        if t.dim() != n || n != dim {
            return Err(Error::Shape(format!(
                "field of size {n} on a {dim}-dimensional chart"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                t[(l, i, j)] = (4.0 * fine[(i, j)] - coarse[(i, j)]) / 3.0;
            }
        }
    }
    out.ok_or_else(|| Error::Dimension("empty point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_of_warped_metric() {
        let g = TensorFieldSpec::parse(2, Valence::Metric, &[(1, 1, "1"), (2, 2, "exp(2*x1)")])
            .unwrap();
        let jet = g.eval_jet(&[0.0, 0.0]).unwrap();
        assert_eq!(jet.value, DMatrix::identity(2, 2));
        assert_eq!(jet.partials[(0, 1, 1)], 2.0);
        assert_eq!(jet.partials.max_abs(), 2.0);
        assert_eq!(
            jet.partials
                .as_slice()
                .iter()
                .filter(|x| **x != 0.0)
                .count(),
            1
        );
    }

    #[test]
    fn jet_of_exponential_two_form() {
        let w = TensorFieldSpec::parse(2, Valence::TwoForm, &[(1, 2, "exp(x1)")]).unwrap();
        let jet = w.eval_jet(&[0.0, 0.0]).unwrap();
        assert_eq!(jet.value[(0, 1)], 1.0);
        assert_eq!(jet.value[(1, 0)], -1.0);
        assert_eq!(jet.partials[(0, 0, 1)], 1.0);
        assert_eq!(jet.partials[(0, 1, 0)], -1.0);
    }

    #[test]
    fn eval_error_names_component_and_point() {
        let w = TensorFieldSpec::parse(2, Valence::TwoForm, &[(1, 2, "log(x1)")]).unwrap();
        match w.eval_jet(&[-1.0, 0.5]) {
            Err(Error::Eval {
                component, point, ..
            }) => {
                assert_eq!(component, "omega[1,2]");
                assert_eq!(point, vec![-1.0, 0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lower_triangle_components_are_rejected() {
        assert!(TensorFieldSpec::parse(2, Valence::TwoForm, &[(2, 1, "1")]).is_err());
        assert!(TensorFieldSpec::parse(2, Valence::TwoForm, &[(1, 1, "1")]).is_err());
        assert!(TensorFieldSpec::parse(2, Valence::Metric, &[(2, 1, "1")]).is_err());
    }

    #[test]
    fn exterior_derivative_cases() {
        let c = TensorFieldSpec::parse(4, Valence::TwoForm, &[(1, 2, "1"), (3, 4, "2")]).unwrap();
        assert_eq!(
            exterior_derivative_2form(&c, &[0.3, 0.1, 0.2, 0.4])
                .unwrap()
                .max_abs(),
            0.0
        );

        let two = TensorFieldSpec::parse(2, Valence::TwoForm, &[(1, 2, "exp(x1*x2)")]).unwrap();
        assert_eq!(
            exterior_derivative_2form(&two, &[0.3, 0.7])
                .unwrap()
                .max_abs(),
            0.0
        );

        let w = TensorFieldSpec::parse(
            4,
            Valence::TwoForm,
            &[(1, 2, "1"), (3, 4, "1"), (2, 3, "x1")],
        )
        .unwrap();
        let d = exterior_derivative_2form(&w, &[0.2, -0.1, 0.5, 0.0]).unwrap();
        assert_eq!(d[(0, 1, 2)], 1.0);
        assert_eq!(d[(1, 2, 0)], 1.0);
        assert_eq!(d[(2, 0, 1)], 1.0);
        assert_eq!(d[(1, 0, 2)], -1.0);
        assert_eq!(d[(0, 2, 1)], -1.0);
        assert_eq!(d[(2, 1, 0)], -1.0);
        assert_eq!(d.as_slice().iter().filter(|x| **x != 0.0).count(), 6);
    }

    #[test]
    fn exterior_derivative_is_exactly_alternating() {
        let w = TensorFieldSpec::parse(
            4,
            Valence::TwoForm,
            &[
                (1, 2, "sin(x3)*x4"),
                (1, 3, "exp(x2)"),
                (2, 4, "x1^3 - x3"),
                (3, 4, "cos(x1*x2)"),
            ],
        )
        .unwrap();
        let d = exterior_derivative_2form(&w, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert_eq!(d[(i, j, k)], -d[(j, i, k)]);
                    assert_eq!(d[(i, j, k)], -d[(i, k, j)]);
                }
            }
        }
        assert!(d.max_abs() > 0.0);
    }

    #[test]
    fn finite_differences_of_simple_fields() {
        let c = |_: &[f64]| Ok(DMatrix::from_element(2, 2, 3.0));
        assert_eq!(
            finite_diff_matrix_field(c, &[0.5, 0.5], 1e-3)
                .unwrap()
                .max_abs(),
            0.0
        );

        let sq = |x: &[f64]| Ok(DMatrix::from_row_slice(2, 2, &[x[0] * x[0], 0.0, 0.0, 0.0]));
        let d = finite_diff_matrix_field(sq, &[1.0, 0.0], 1e-2).unwrap();
        assert!((d[(0, 0, 0)] - 2.0).abs() <= 1e-9);
        assert!(d[(1, 0, 0)].abs() <= 1e-12);

        assert!(matches!(
            finite_diff_matrix_field(sq, &[1.0, 0.0], 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(finite_diff_matrix_field(sq, &[1.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn domain_grid_and_stencil_fit() {
        let d = ChartDomain::grid(&[[-1.0, 1.0], [0.0, 2.0]], &[5, 2]).unwrap();
        assert_eq!(d.samples().len(), 10);
        assert_eq!(d.samples()[0], vec![-0.8, 0.5]);
        assert_eq!(d.samples()[1], vec![-0.8, 1.5]);
        assert_eq!(d.samples()[4][0], 0.0);
        assert!(d.samples().iter().all(|p| d.contains(p)));
        assert!((d.fit_step(&[0.9, 1.0], 0.5).unwrap() - 0.1).abs() < 1e-15);
        assert!(d.fit_step(&[1.0, 1.0], 0.5).is_err());
        assert!(ChartDomain::new(&[[1.0, 0.0]], vec![]).is_err());
        assert!(ChartDomain::new(&[[0.0, 1.0]], vec![vec![2.0]]).is_err());
    }
}
