//! Built-in charts with known or pinned outcomes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::spec::{ManifoldSpec, DEFAULT_GRID};
use crate::kahler::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Yes,
    No,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    Known(Verdict),
    /// Compared against values pinned from an engine run.
    Fixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub trivial: Expectation,
    pub d_omega_zero: bool,
    pub verdict: ExpectedVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: ManifoldSpec,
    pub expected: Expected,
}

pub const CATALOG: &[&str] = &[
    "flat_standard",
    "flat_standard_4d",
    "flat_varying_omega",
    "fs_cp1",
    "fs_product_4d",
    "hyperbolic_area",
    "kodaira_thurston",
    "nonclosed_4d",
];

const FS_X12: &str = "1/(1 + x1^2 + x2^2)^2";
const FS_X34: &str = "1/(1 + x3^2 + x4^2)^2";

fn spec(name: &str, dim: usize, metric: &[(&str, &str)], omega: &[(&str, &str)]) -> ManifoldSpec {
    let map = |entries: &[(&str, &str)]| -> BTreeMap<String, String> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    };
    ManifoldSpec {
        name: Some(name.to_string()),
        dim,
        coords: (1..=dim).map(|l| format!("x{l}")).collect(),
        bounds: vec![[-1.0, 1.0]; dim],
        metric: map(metric),
        omega: map(omega),
        samples: None,
        grid: Some(vec![DEFAULT_GRID; dim]),
    }
}

const fn expect(trivial: Expectation, d_omega_zero: bool, verdict: ExpectedVerdict) -> Expected {
    Expected {
        trivial,
        d_omega_zero,
        verdict,
    }
}

const CERTIFIED: ExpectedVerdict = ExpectedVerdict::Known(Verdict::KahlerCertified);

/// Looks up a catalog entry.
pub fn builtin(name: &str) -> Result<ZooEntry> {
    let identity4 = [("1,1", "1"), ("2,2", "1"), ("3,3", "1"), ("4,4", "1")];
    let (description, spec, expected) = match name {
        "flat_standard" => (
            "Euclidean plane with the standard area form",
            spec(name, 2, &[("1,1", "1"), ("2,2", "1")], &[("1,2", "1")]),
            expect(Expectation::Yes, true, CERTIFIED),
        ),
        "flat_standard_4d" => (
            "Euclidean 4-space with the standard symplectic form",
            spec(name, 4, &identity4, &[("1,2", "1"), ("3,4", "1")]),
            expect(Expectation::Yes, true, CERTIFIED),
        ),
        "flat_varying_omega" => (
            "Euclidean plane with a non-parallel area form",
            spec(
                name,
                2,
                &[("1,1", "1"), ("2,2", "1")],
                &[("1,2", "exp(x1)")],
            ),
            expect(
                Expectation::No,
                true,
                ExpectedVerdict::Known(Verdict::PremiseFailed),
            ),
        ),
        "fs_cp1" => (
            "Fubini-Study metric on an affine chart of CP1",
            spec(
                name,
                2,
                &[("1,1", FS_X12), ("2,2", FS_X12)],
                &[("1,2", FS_X12)],
            ),
            expect(Expectation::Yes, true, CERTIFIED),
        ),
        "fs_product_4d" => (
            "product of two Fubini-Study charts",
            spec(
                name,
                4,
                &[
                    ("1,1", FS_X12),
                    ("2,2", FS_X12),
                    ("3,3", FS_X34),
                    ("4,4", FS_X34),
                ],
                &[("1,2", FS_X12), ("3,4", FS_X34)],
            ),
            expect(Expectation::Yes, true, CERTIFIED),
        ),
        "hyperbolic_area" => (
            "hyperbolic plane with its area form",
            spec(
                name,
                2,
                &[("1,1", "1"), ("2,2", "exp(2*x1)")],
                &[("1,2", "exp(x1)")],
            ),
            expect(Expectation::Yes, true, CERTIFIED),
        ),
        "kodaira_thurston" => (
            "left-invariant metric and symplectic form on a Kodaira-Thurston chart",
            spec(
                name,
                4,
                &[
                    ("1,1", "1"),
                    ("2,2", "1 + x1^2"),
                    ("2,3", "-x1"),
                    ("3,3", "1"),
                    ("4,4", "1"),
                ],
                &[("1,4", "1"), ("2,3", "1")],
            ),
            expect(Expectation::Unspecified, true, ExpectedVerdict::Fixture),
        ),
        "nonclosed_4d" => (
            "Euclidean 4-space with a non-closed almost symplectic form",
            spec(
                name,
                4,
                &identity4,
                &[("1,2", "1"), ("2,3", "x1"), ("3,4", "1")],
            ),
            expect(Expectation::Unspecified, false, ExpectedVerdict::Fixture),
        ),
        _ => {
            return Err(Error::NotFound {
                name: name.to_string(),
                catalog: CATALOG.iter().map(|c| c.to_string()).collect(),
            })
        }
    };
    Ok(ZooEntry {
        name: CATALOG.iter().find(|c| **c == name).expect("catalog entry"),
        description,
        spec,
        expected,
    })
}

/// Every catalog entry, in catalog order.
pub fn all() -> Vec<ZooEntry> {
    CATALOG
        .iter()
        .map(|n| builtin(n).expect("catalog entries resolve"))
        .collect()
}
