//! S-curvature and Riemann curvature of a left-invariant spray.
//!
//! The primary path works with `eta`, `N` and `DN` in the algebra. The frame
//! oracles expand the same quantities in structure constants and partial
//! derivatives of `eta` at the identity and exist to cross-check it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd;
use crate::lie_algebra::AlgebraVector;
use crate::spray::SprayField;

/// `S(y) = tr(N(y, .) + ad(y))`.
pub fn s_curvature(spray: &SprayField, y: &AlgebraVector) -> Result<f64> {
    let alg = spray.algebra();
    alg.check_dim(y)?;
    if spray.is_zero() {
        // N = -ad/2, so S = tr ad(y) / 2 = c_{lj}^j u^l / 2
        if y.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        return Ok(0.5 * trace_form_dot(spray, y));
    }
    let n = spray.connection_matrix(y)?;
    let ad = alg.ad_matrix(y)?;
    Ok((n + ad).trace())
}

fn trace_form_dot(spray: &SprayField, y: &AlgebraVector) -> f64 {
    spray.algebra().trace_form().iter().zip(y.iter()).map(|(c, u)| c * u).sum()
}

/// `S = 1/2 d_i eta^i + 1/2 c_{lj}^j u^l`, with the divergence of `eta`
/// taken by central differences.
pub fn s_curvature_frame_oracle(spray: &SprayField, y: &AlgebraVector) -> Result<f64> {
    spray.algebra().check_dim(y)?;
    let half_trace = 0.5 * trace_form_dot(spray, y);
    if spray.is_zero() {
        if y.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        return Ok(half_trace);
    }
    let jac = eta_jacobian_fd(spray, y)?;
    Ok(0.5 * jac.trace() + half_trace)
}

/// `R_y(v) = DN(y, v, eta(y)) - N(y, N(y, v)) + N(y, [y, v]) - [y, N(y, v)]`.
pub fn riemann(spray: &SprayField, y: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
    let alg = spray.algebra();
    alg.check_dim(v)?;
    let eta = spray.eta(y)?;
    let nv = spray.connection(y, v)?;
    let yv = alg.bracket_unchecked(y, v);
    Ok(spray.d_connection(y, v, &eta)? - spray.connection(y, &nv)? + spray.connection(y, &yv)?
        - alg.bracket_unchecked(y, &nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannMatrix {
    /// Column `j` holds `R_y(e_j)`.
    pub matrix: DMatrix<f64>,
    /// `max |L - L^T|` for `L = g_y R`, metric sprays only.
    pub lowered_asymmetry: Option<f64>,
}

pub fn riemann_matrix(spray: &SprayField, y: &AlgebraVector) -> Result<RiemannMatrix> {
    let alg = spray.algebra();
    alg.check_dim(y)?;
    let dim = alg.dim();
    let matrix = if spray.is_zero() {
        if y.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        let ad = alg.ad_matrix(y)?;
        -(&ad * &ad) * 0.25
    } else {
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            m.set_column(j, &riemann(spray, y, &alg.basis_vector(j))?);
        }
        m
    };
    let lowered_asymmetry = match spray.norm() {
        Some(norm) => {
            let lowered = norm.fundamental_tensor(y)? * &matrix;
            Some((&lowered - lowered.transpose()).amax())
        }
        None => None,
    };
    Ok(RiemannMatrix { matrix, lowered_asymmetry })
}

/// Coordinates of `R(e_q)` from the six-term frame formula at the identity,
/// with `H^i(e, .) = eta^i` and partials of `eta` by central differences.
pub fn riemann_frame_oracle(spray: &SprayField, y: &AlgebraVector, q: usize) -> Result<AlgebraVector> {
    let alg = spray.algebra();
    alg.check_dim(y)?;
    let n = alg.dim();
    if q >= n {
        return Err(Error::DimensionMismatch { expected: n, got: q + 1 });
    }
    let eta = spray.eta(y)?;
    let (jac, hess) = if spray.is_zero() {
        (DMatrix::zeros(n, n), vec![DMatrix::zeros(n, n); n])
    } else {
        (eta_jacobian_fd(spray, y)?, eta_hessian_fd(spray, y)?)
    };
    let c = |i, j, k| alg.constant(i, j, k);
    let u = y;
    let mut out = AlgebraVector::zeros(n);
    for i in 0..n {
        let mut s = 0.0;
        for p in 0..n {
            for r in 0..n {
                s += 0.75 * c(p, q, r) * u[p] * jac[(i, r)];
                s += 0.25 * c(p, r, i) * u[r] * jac[(p, q)];
            }
            s += 0.5 * c(q, p, i) * eta[p];
            s += 0.5 * eta[p] * hess[i][(p, q)];
            s -= 0.25 * jac[(p, q)] * jac[(i, p)];
            for j in 0..n {
                let cq = c(q, j, p) * u[j];
                if cq == 0.0 {
                    continue;
                }
                for r in 0..n {
                    s -= 0.25 * cq * c(p, r, i) * u[r];
                }
            }
        }
        out[i] = s;
    }
    Ok(out)
}

/// `J[(i, r)] = d eta^i / d u^r` by central differences.
fn eta_jacobian_fd(spray: &SprayField, y: &AlgebraVector) -> Result<DMatrix<f64>> {
    let alg = spray.algebra();
    let n = alg.dim();
    let mut jac = DMatrix::zeros(n, n);
    for r in 0..n {
        let e = alg.basis_vector(r);
        let h = fd::first_order_step(y, &e);
        if !fd::stencil_clear(y, &e, h) {
            return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
        }
        let col = (spray.eta(&(y + &e * h))? - spray.eta(&(y - &e * h))?) / (2.0 * h);
        jac.set_column(r, &col);
    }
    Ok(jac)
}

/// `H[i][(p, q)] = d^2 eta^i / du^p du^q` by the four-point mixed stencil.
fn eta_hessian_fd(spray: &SprayField, y: &AlgebraVector) -> Result<Vec<DMatrix<f64>>> {
    let alg = spray.algebra();
    let n = alg.dim();
    let h = fd::second_order_step(y, 1.0);
    if y.norm() <= 2.0 * std::f64::consts::SQRT_2 * h {
        return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
    }
    let mut hess = vec![DMatrix::zeros(n, n); n];
    for p in 0..n {
        for q in p..n {
            let ep = alg.basis_vector(p) * h;
            let eq = alg.basis_vector(q) * h;
            let val = (spray.eta(&(y + &ep + &eq))? - spray.eta(&(y + &ep - &eq))? - spray.eta(&(y - &ep + &eq))?
                + spray.eta(&(y - &ep - &eq))?)
                / (4.0 * h * h);
            for (i, m) in hess.iter_mut().enumerate() {
                m[(p, q)] = val[i];
                m[(q, p)] = val[i];
            }
        }
    }
    Ok(hess)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub y: AlgebraVector,
    pub s: f64,
    pub r_matrix: DMatrix<f64>,
    /// `|S - S_oracle|`.
    pub s_oracle_delta: f64,
    /// Max componentwise `|R - R_oracle|`.
    pub r_oracle_delta: f64,
    /// Diagnostic only: `R_y(y)`, which vanishes when `eta = 0`.
    pub r_y_y_norm: f64,
    /// `tr R_y`.
    pub ricci_scalar: f64,
    pub lowered_asymmetry: Option<f64>,
    /// Eigenvalues of `R_y` as `(re, im)` pairs, diagnostic only.
    pub eigenvalues: Vec<(f64, f64)>,
}

pub fn curvature_report(spray: &SprayField, y: &AlgebraVector) -> Result<CurvatureReport> {
    let s = s_curvature(spray, y)?;
    let s_oracle = s_curvature_frame_oracle(spray, y)?;
    let rm = riemann_matrix(spray, y)?;
    let n = spray.dim();
    let mut r_oracle_delta: f64 = 0.0;
    for q in 0..n {
        let col = riemann_frame_oracle(spray, y, q)?;
        r_oracle_delta = r_oracle_delta.max((col - rm.matrix.column(q)).amax());
    }
    let eigenvalues = rm.matrix.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    Ok(CurvatureReport {
        y: y.clone(),
        s,
        s_oracle_delta: (s - s_oracle).abs(),
        r_oracle_delta,
        r_y_y_norm: (&rm.matrix * y).norm(),
        ricci_scalar: rm.matrix.trace(),
        lowered_asymmetry: rm.lowered_asymmetry,
        eigenvalues,
        r_matrix: rm.matrix,
    })
}

/// Reports at each sample, in parallel.
pub fn curvature_reports(spray: &SprayField, ys: &[AlgebraVector]) -> Result<Vec<CurvatureReport>> {
    ys.par_iter().map(|y| curvature_report(spray, y)).collect()
}
