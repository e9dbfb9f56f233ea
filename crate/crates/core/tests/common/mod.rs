#![allow(dead_code)]

use ksq_core::field::FieldJet;
use ksq_core::tensor::{ConnectionCoeffs, Tensor3};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| uniform(rng));
    &m * m.transpose() + DMatrix::identity(n, n) * (n as f64) * 0.5
}

pub fn standard_omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// `Pᵀ·ω_std·P` for a random perturbation `P` of the identity, rejected
/// until clearly non-degenerate.
pub fn random_omega(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let p = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| 0.6 * uniform(rng));
        let w = p.transpose() * standard_omega(n) * &p;
        let w = (&w - w.transpose()) * 0.5;
        if w.determinant().abs() > 1e-2 {
            return w;
        }
    }
}

pub fn random_partials(n: usize, symmetric: bool, rng: &mut ChaCha8Rng) -> Tensor3 {
    let mut t = Tensor3::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = uniform(rng);
                if i == j {
                    t[(l, i, i)] = if symmetric { v } else { 0.0 };
                } else {
                    t[(l, i, j)] = v;
                    t[(l, j, i)] = if symmetric { v } else { -v };
                }
            }
        }
    }
    t
}

pub fn random_metric_jet(n: usize, rng: &mut ChaCha8Rng) -> FieldJet {
    FieldJet {
        value: random_spd(n, rng),
        partials: random_partials(n, true, rng),
    }
}

pub fn random_omega_jet(n: usize, rng: &mut ChaCha8Rng) -> FieldJet {
    FieldJet {
        value: random_omega(n, rng),
        partials: random_partials(n, false, rng),
    }
}

pub fn random_symmetric_connection(n: usize, rng: &mut ChaCha8Rng) -> ConnectionCoeffs {
    let t = random_partials(n, true, rng);
    ConnectionCoeffs::new(t).unwrap()
}
