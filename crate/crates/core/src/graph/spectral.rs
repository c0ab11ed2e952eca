use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::{check_primitive, WeightMatrix};
use crate::error::{Error, Result};

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 1_000_000;
const RESIDUAL_TOL: f64 = 1e-10;
/// Relative distance under which two eigenvalues are treated as one.
const CLUSTER_TOL: f64 = 1e-6;
/// Singular values below this (relative to the matrix scale) span a null space.
const NULL_TOL: f64 = 1e-6;
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Spectral quantities of a primitive nominal weight matrix that enter the
/// convergence-rate bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// Left Perron vector, stochastic.
    pub perron: Vec<f64>,
    pub v_max: f64,
    pub v_min: f64,
    /// Second largest eigenvalue modulus.
    pub sigma: f64,
    /// Size of the largest Jordan block of `sigma`, minus one.
    pub m_sigma: usize,
    /// Largest Jordan block size overall.
    pub m: usize,
    /// `||V||_1 ||T||_1` for the decomposition `W = 1 v^T + V J T`.
    pub b: f64,
    /// All eigenvalues as `(re, im)` pairs, Perron root first.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Left Perron vector of a primitive row-stochastic matrix by power iteration
/// on `W^T`.
pub fn perron_vector(w: &WeightMatrix) -> Result<Vec<f64>> {
    if !w.is_square() {
        return Err(Error::Spectral(format!("matrix is {}x{}, not square", w.rows(), w.cols())));
    }
    if !check_primitive(w) {
        return Err(Error::Spectral("matrix is not primitive".into()));
    }
    let n = w.rows();
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..PERRON_MAX_ITER {
        left_multiply(&v, w, &mut next);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta = v.iter().zip(&next).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
        std::mem::swap(&mut v, &mut next);
        if delta < PERRON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!("power iteration did not converge in {PERRON_MAX_ITER} steps")));
    }
    left_multiply(&v, w, &mut next);
    let residual = v.iter().zip(&next).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
    if residual >= RESIDUAL_TOL {
        return Err(Error::Numerical(format!("Perron residual {residual:e} exceeds {RESIDUAL_TOL:e}")));
    }
    Ok(v)
}

fn left_multiply(v: &[f64], w: &WeightMatrix, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &vi) in v.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(w.row(i)) {
            *o += vi * wij;
        }
    }
}

/// Spectral profile of a primitive nominal weight matrix.
///
/// Only diagonalizable matrices are supported: the eigenbasis gives
/// `W = 1 v^T + V J T` with `J` diagonal, so `m_sigma = 0`, `m = 1` and
/// `b = ||V||_1 ||T||_1` with unit-norm eigenvector columns in `V`.
pub fn spectral_profile(w: &WeightMatrix) -> Result<SpectralProfile> {
    let perron = perron_vector(w)?;
    let n = w.rows();
    let v_max = perron.iter().cloned().fold(f64::MIN, f64::max);
    let v_min = perron.iter().cloned().fold(f64::MAX, f64::min);
    if n == 1 {
        return Ok(SpectralProfile {
            perron,
            v_max,
            v_min,
            sigma: 0.0,
            m_sigma: 0,
            m: 1,
            b: 0.0,
            eigenvalues: vec![(1.0, 0.0)],
        });
    }

    let real = w.to_dmatrix();
    let mut eig: Vec<Complex<f64>> = real.complex_eigenvalues().iter().cloned().collect();
    let root = eig
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    eig.swap(0, root);
    let sigma = eig[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sigma >= 1.0 - 1e-12 {
        return Err(Error::Spectral(format!("second eigenvalue modulus {sigma} is not below 1")));
    }

    let basis = eigenbasis(&real, &eig)?;
    let inverse = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::UnsupportedSpectrum("eigenvector matrix is singular".into()))?;

    let complex_w = real.map(|x| Complex::new(x, 0.0));
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.clone()));
    let rebuilt = &basis * lambda * &inverse;
    let err = (rebuilt - complex_w).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    if err > RECONSTRUCTION_TOL {
        return Err(Error::UnsupportedSpectrum(format!(
            "eigendecomposition reconstruction error {err:e}; matrix is numerically defective"
        )));
    }

    let v_part = basis.columns(1, n - 1).into_owned();
    let t_part = inverse.rows(1, n - 1).into_owned();
    let b = induced_one_norm(&v_part) * induced_one_norm(&t_part);

    Ok(SpectralProfile {
        perron,
        v_max,
        v_min,
        sigma,
        m_sigma: 0,
        m: 1,
        b,
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
    })
}

/// Right eigenvectors, one column per eigenvalue in `eig`, with the exact
/// all-ones vector for the Perron root (index 0). Repeated eigenvalues need a
/// null space of matching dimension, otherwise the matrix is defective.
fn eigenbasis(w: &DMatrix<f64>, eig: &[Complex<f64>]) -> Result<DMatrix<Complex<f64>>> {
    let n = w.nrows();
    let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut basis = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        basis[(i, 0)] = Complex::new(1.0, 0.0);
    }

    let mut assigned = vec![false; n];
    assigned[0] = true;
    for start in 1..n {
        if assigned[start] {
            continue;
        }
        let center = eig[start];
        let members: Vec<usize> = (start..n)
            .filter(|&k| !assigned[k] && (eig[k] - center).norm() <= CLUSTER_TOL * center.norm().max(1.0))
            .collect();
        let mut shifted = w.map(|x| Complex::new(x, 0.0));
        for i in 0..n {
            shifted[(i, i)] -= center;
        }
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let null_dim = order.iter().take_while(|&&k| svd.singular_values[k] <= NULL_TOL * scale).count();
        if null_dim < members.len() {
            return Err(Error::UnsupportedSpectrum(format!(
                "eigenvalue {:.6}{:+.6}i has algebraic multiplicity {} but only {} independent eigenvectors",
                center.re,
                center.im,
                members.len(),
                null_dim
            )));
        }
        for (&slot, &sv) in members.iter().zip(&order) {
            // rows of V^H are conjugated right singular vectors
            let mut column: Vec<Complex<f64>> = v_t.row(sv).iter().map(|z| z.conj()).collect();
            let norm = column.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            column.iter_mut().for_each(|z| *z /= norm);
            for (i, z) in column.into_iter().enumerate() {
                basis[(i, slot)] = z;
            }
            assigned[slot] = true;
        }
    }
    Ok(basis)
}

/// Maximum absolute column sum.
fn induced_one_norm(m: &DMatrix<Complex<f64>>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}
