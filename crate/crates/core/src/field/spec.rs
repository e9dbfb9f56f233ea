//! Manifold spec files: a metric and a 2-form on one coordinate chart.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "coords": ["x1", "x2"],
//!   "box": [[-1, 1], [-1, 1]],
//!   "metric": {"1,1": "1", "2,2": "exp(2*x1)"},
//!   "omega": {"1,2": "exp(x1)"},
//!   "grid": [5, 5]
//! }
//! ```
//!
//! Component keys are one-based `"i,j"`; the metric lists its upper triangle
//! (diagonal included) and the 2-form its strict upper triangle. Missing
//! components are zero. `samples` lists explicit points; otherwise `grid`
//! gives per-axis counts of a cell-centred grid (default 5 per axis).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dual::MAX_DIM;
use super::{parse_expr_with_names, ChartDomain, TensorFieldSpec, Valence};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::BilinearFormValue;

pub const DEFAULT_GRID: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub coords: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub metric: BTreeMap<String, String>,
    #[serde(default)]
    pub omega: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
}

/// A compiled spec: parsed fields plus the sampling domain.
#[derive(Debug, Clone)]
pub struct Manifold {
    pub name: String,
    pub metric: TensorFieldSpec,
    pub omega: TensorFieldSpec,
    pub domain: ChartDomain,
}

impl Manifold {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }
}

fn parse_key(key: &str, dim: usize, what: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidSpec(format!("{what} key \"{key}\" is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i > dim || j > dim {
        return Err(Error::InvalidSpec(format!(
            "{what} key \"{key}\": indices must lie in 1..={dim}"
        )));
    }
    Ok((i - 1, j - 1))
}

impl ManifoldSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidSpec(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn field(
        &self,
        what: &str,
        valence: Valence,
        src: &BTreeMap<String, String>,
    ) -> Result<TensorFieldSpec> {
        let mut map = BTreeMap::new();
        for (key, text) in src {
            let (i, j) = parse_key(key, self.dim, what)?;
            let e = parse_expr_with_names(text, self.dim, &self.coords)
                .map_err(|e| Error::InvalidSpec(format!("{what} \"{key}\": {e}")))?;
            map.insert((i, j), e);
        }
        TensorFieldSpec::new(self.dim, valence, map)
            .map_err(|e| Error::InvalidSpec(format!("{what}: {e}")))
            .map(|f| f.with_label(what))
    }

    /// Parses every expression and builds the sampling domain. Does not
    /// evaluate the fields; see [`Manifold::validate`].
    pub fn compile(&self) -> Result<Manifold> {
        let n = self.dim;
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidSpec(format!("dim {n} outside 1..={MAX_DIM}")));
        }
        if n % 2 == 1 {
            return Err(Error::InvalidSpec(format!(
                "odd dimension {n}: a non-degenerate 2-form needs an even-dimensional chart"
            )));
        }
        if !self.coords.is_empty() {
            if self.coords.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "coords lists {} names for dim {n}",
                    self.coords.len()
                )));
            }
            for (l, name) in self.coords.iter().enumerate() {
                let valid_ident = name
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                    && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                let coord_symbol = name.len() > 1
                    && name.starts_with('x')
                    && name[1..].bytes().all(|b| b.is_ascii_digit());
                let shadows = ["exp", "log", "sin", "cos", "sqrt"].contains(&name.as_str())
                    || (coord_symbol && *name != format!("x{}", l + 1));
                if !valid_ident || shadows {
                    return Err(Error::InvalidSpec(format!(
                        "invalid coordinate name `{name}`"
                    )));
                }
            }
        }
        if self.bounds.len() != n {
            return Err(Error::InvalidSpec(format!(
                "box has {} intervals for dim {n}",
                self.bounds.len()
            )));
        }
        let metric = self.field("metric", Valence::Metric, &self.metric)?;
        let omega = self.field("omega", Valence::TwoForm, &self.omega)?;
        let domain = match (&self.samples, &self.grid) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidSpec(
                    "give either samples or grid, not both".into(),
                ))
            }
            (Some(s), None) => ChartDomain::new(&self.bounds, s.clone()),
            (None, Some(g)) => ChartDomain::grid(&self.bounds, g),
            (None, None) => ChartDomain::grid(&self.bounds, &vec![DEFAULT_GRID; n]),
        }
        .map_err(|e| Error::InvalidSpec(format!("domain: {e}")))?;
        if domain.samples().is_empty() {
            return Err(Error::InvalidSpec("no sample points".into()));
        }
        Ok(Manifold {
            name: self.name.clone().unwrap_or_else(|| "unnamed".into()),
            metric,
            omega,
            domain,
        })
    }
}

/// Pointwise form values, checked for kind, positivity and non-degeneracy.
pub fn forms_at(m: &Manifold, p: &[f64]) -> Result<(BilinearFormValue, BilinearFormValue)> {
    let g = BilinearFormValue::symmetric(m.metric.value_at(p)?)
        .map_err(|e| Error::InvalidSpec(format!("metric at {p:?}: {e}")))?;
    linalg::spd_condition(g.matrix())
        .map_err(|e| Error::InvalidSpec(format!("metric at {p:?}: {e}")))?;
    let w = BilinearFormValue::antisymmetric(m.omega.value_at(p)?)
        .map_err(|e| Error::InvalidSpec(format!("omega at {p:?}: {e}")))?;
    Ok((g, w))
}

impl Manifold {
    /// Checks both fields at every sample point.
    pub fn validate(&self) -> Result<()> {
        for p in self.domain.samples() {
            forms_at(self, p)?;
            self.metric.eval_jet(p)?;
            self.omega.eval_jet(p)?;
        }
        Ok(())
    }
}
