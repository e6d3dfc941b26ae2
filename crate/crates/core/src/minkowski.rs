//! Minkowski norms on the Lie algebra and their derivative tensors.
//!
//! For `F` smooth on `g \ {0}`:
//!
//! - fundamental tensor `g_y(u, v) = 1/2 d^2/dsdt F^2(y + s u + t v)`,
//! - Cartan tensor `C_y(u, v, w) = 1/4 d^3/drdsdt F^2(y + r u + s v + t w)`,
//! - mean Cartan tensor `I_y(w) = D_w f(y)` with `f = 1/2 ln det g`.
//!
//! Quadratic and Randers norms have closed-form tensors; user expressions
//! are differentiated with central differences.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::lie_algebra::AlgebraVector;
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `F(y) = sqrt(y^T Q y)`.
    Quadratic { q: DMatrix<f64> },
    /// `F(y) = sqrt(y^T Q y) + b^T y`.
    Randers { q: DMatrix<f64>, b: AlgebraVector },
    /// `F` given as an expression in `u1..un`.
    User { expr: Expr, source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiNorm {
    dim: usize,
    kind: NormKind,
    mode: DerivativeMode,
}

fn check_q(q: &DMatrix<f64>) -> Result<usize> {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return Err(Error::InvalidNorm(format!("Q must be square, got {}x{}", q.nrows(), q.ncols())));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidNorm("Q has non-finite entries".into()));
    }
    let asym = (q - q.transpose()).amax();
    if asym > 1e-12 * q.amax().max(1.0) {
        return Err(Error::InvalidNorm(format!("Q is not symmetric (residual {asym:e})")));
    }
    Ok(n)
}

impl MinkowskiNorm {
    pub fn quadratic(q: DMatrix<f64>) -> Result<Self> {
        let dim = check_q(&q)?;
        Ok(Self { dim, kind: NormKind::Quadratic { q }, mode: DerivativeMode::Analytic })
    }

    /// `F(y) = |y|`.
    pub fn euclidean(dim: usize) -> Self {
        Self::quadratic(DMatrix::identity(dim, dim)).expect("identity is a valid Q")
    }

    pub fn randers(q: DMatrix<f64>, b: AlgebraVector) -> Result<Self> {
        let dim = check_q(&q)?;
        if b.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidNorm("b has non-finite entries".into()));
        }
        Ok(Self { dim, kind: NormKind::Randers { q, b }, mode: DerivativeMode::Analytic })
    }

    pub fn user(source: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        let expr = Expr::parse(source, dim)?;
        Ok(Self {
            dim,
            kind: NormKind::User { expr, source: source.to_string() },
            mode: DerivativeMode::FiniteDifference,
        })
    }

    /// Selects the derivative path. User norms always use finite differences.
    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = match self.kind {
            NormKind::User { .. } => DerivativeMode::FiniteDifference,
            _ => mode,
        };
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, NormKind::Quadratic { .. })
    }

    fn check(&self, y: &AlgebraVector) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        if y.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    fn raw(&self, y: &AlgebraVector) -> f64 {
        match &self.kind {
            NormKind::Quadratic { q } => quad(q, y).sqrt(),
            NormKind::Randers { q, b } => quad(q, y).sqrt() + b.dot(y),
            NormKind::User { expr, .. } => expr.eval(y.as_slice()),
        }
    }

    /// `F(y)`.
    pub fn eval(&self, y: &AlgebraVector) -> Result<f64> {
        self.check(y)?;
        let f = self.raw(y);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonSmooth { at: y.as_slice().to_vec() })
        }
    }

    fn f2(&self, y: &AlgebraVector) -> f64 {
        let f = self.raw(y);
        f * f
    }

    pub fn fundamental_tensor(&self, y: &AlgebraVector) -> Result<DMatrix<f64>> {
        self.check(y)?;
        let g = match (&self.kind, self.mode) {
            (NormKind::Quadratic { q }, DerivativeMode::Analytic) => q.clone(),
            (NormKind::Randers { q, b }, DerivativeMode::Analytic) => randers_g(q, b, y),
            _ => self.fd_fundamental_tensor(y)?,
        };
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonSmooth { at: y.as_slice().to_vec() });
        }
        Ok(g)
    }

    fn fd_fundamental_tensor(&self, y: &AlgebraVector) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let h = fd::second_order_step(y, 1.0);
        if y.norm() <= 2.0 * h * std::f64::consts::SQRT_2 {
            return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
        }
        let mut g = DMatrix::zeros(n, n);
        let mut p = y.clone();
        for i in 0..n {
            for j in i..n {
                let mut val = 0.0;
                for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    p.copy_from(y);
                    p[i] += si * h;
                    p[j] += sj * h;
                    val += w * self.f2(&p);
                }
                let gij = 0.5 * val / (4.0 * h * h);
                g[(i, j)] = gij;
                g[(j, i)] = gij;
            }
        }
        Ok(g)
    }

    /// `g_y(u, v)`.
    pub fn inner(&self, y: &AlgebraVector, u: &AlgebraVector, v: &AlgebraVector) -> Result<f64> {
        Ok(u.dot(&(self.fundamental_tensor(y)? * v)))
    }

    /// `C_y(u, v, w)`.
    pub fn cartan(&self, y: &AlgebraVector, u: &AlgebraVector, v: &AlgebraVector, w: &AlgebraVector) -> Result<f64> {
        self.check(y)?;
        for x in [u, v, w] {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
            }
        }
        let c = match (&self.kind, self.mode) {
            (NormKind::Quadratic { .. }, DerivativeMode::Analytic) => 0.0,
            (NormKind::Randers { q, b }, DerivativeMode::Analytic) => randers_cartan(q, b, y, u, v, w),
            _ => self.fd_cartan(y, u, v, w)?,
        };
        if !c.is_finite() {
            return Err(Error::NonSmooth { at: y.as_slice().to_vec() });
        }
        Ok(c)
    }

    fn fd_cartan(&self, y: &AlgebraVector, u: &AlgebraVector, v: &AlgebraVector, w: &AlgebraVector) -> Result<f64> {
        let scale = u.norm().max(v.norm()).max(w.norm());
        if scale == 0.0 {
            return Ok(0.0);
        }
        let h = fd::third_order_step(y, scale);
        if y.norm() <= 3.0 * h * scale {
            return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
        }
        let mut sum = 0.0;
        for s in 0..8u8 {
            let su = if s & 1 == 0 { 1.0 } else { -1.0 };
            let sv = if s & 2 == 0 { 1.0 } else { -1.0 };
            let sw = if s & 4 == 0 { 1.0 } else { -1.0 };
            let p = y + (u * su + v * sv + w * sw) * h;
            sum += su * sv * sw * self.f2(&p);
        }
        Ok(0.25 * sum / (8.0 * h * h * h))
    }

    /// `f(y) = 1/2 ln det g_y`.
    pub fn half_log_det(&self, y: &AlgebraVector) -> Result<f64> {
        let det = self.fundamental_tensor(y)?.determinant();
        if det > 0.0 && det.is_finite() {
            Ok(0.5 * det.ln())
        } else {
            Err(Error::NotStronglyConvex(format!("det g_y = {det:e} at {:?}", y.as_slice())))
        }
    }

    /// `I_y(w)`: central difference of `1/2 ln det g` along `w`.
    pub fn mean_cartan(&self, y: &AlgebraVector, w: &AlgebraVector) -> Result<f64> {
        self.check(y)?;
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.len() });
        }
        if w.iter().all(|x| *x == 0.0) {
            return Ok(0.0);
        }
        let h = match self.mode {
            DerivativeMode::Analytic => fd::first_order_step(y, w),
            // g itself carries second-difference noise; widen the step
            DerivativeMode::FiniteDifference => f64::EPSILON.powf(1.0 / 6.0) * y.norm().max(1.0) / w.norm().max(1.0),
        };
        if !fd::stencil_clear(y, w, h) {
            return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
        }
        let fp = self.half_log_det(&(y + w * h))?;
        let fm = self.half_log_det(&(y - w * h))?;
        Ok((fp - fm) / (2.0 * h))
    }

    /// `direction / F(direction)`, a point of the indicatrix `F = 1`.
    pub fn indicatrix_point(&self, direction: &AlgebraVector) -> Result<AlgebraVector> {
        let f = self.eval(direction)?;
        if f <= 0.0 {
            return Err(Error::NotStronglyConvex(format!("F({:?}) = {f} is not positive", direction.as_slice())));
        }
        Ok(direction / f)
    }

    /// Checks positivity, 1-homogeneity and positive definiteness of `g_y`
    /// on the axis directions plus 64 seeded random directions.
    pub fn validate_convexity(&self) -> ConvexityReport {
        let mut report = ConvexityReport {
            samples: 0,
            min_value: f64::INFINITY,
            min_eigenvalue: f64::INFINITY,
            homogeneity_error: 0.0,
            witness: None,
            failure: None,
        };

        let fail = |report: &mut ConvexityReport, y: &AlgebraVector, msg: String| {
            if report.failure.is_none() {
                report.witness = Some(y.clone());
                report.failure = Some(msg);
            }
        };

        if let NormKind::Quadratic { q } | NormKind::Randers { q, .. } = &self.kind {
            match q.clone().cholesky() {
                None => {
                    let eig = q.clone().symmetric_eigen();
                    let (idx, min) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &e)| {
                        if e < acc.1 {
                            (i, e)
                        } else {
                            acc
                        }
                    });
                    let y: AlgebraVector = eig.eigenvectors.column(idx).into_owned();
                    report.min_eigenvalue = min;
                    fail(&mut report, &y, format!("Q is not positive definite (eigenvalue {min:e})"));
                    return report;
                }
                Some(chol) => {
                    if let NormKind::Randers { b, .. } = &self.kind {
                        let qinv_b = chol.solve(b);
                        let b_norm = b.dot(&qinv_b).sqrt();
                        if b_norm >= 1.0 {
                            let y = -qinv_b;
                            let g = randers_g(q, b, &y);
                            let min = g.symmetric_eigen().eigenvalues.min();
                            report.min_eigenvalue = report.min_eigenvalue.min(min);
                            report.min_value = report.min_value.min(self.raw(&y));
                            fail(
                                &mut report,
                                &y,
                                format!("randers |b|_Q = {b_norm} >= 1 (g_y eigenvalue {min:e} at witness)"),
                            );
                        }
                    }
                }
            }
        }

        for y in sampling::validation_directions(self.dim) {
            report.samples += 1;
            let f = self.raw(&y);
            if !f.is_finite() || f <= 0.0 {
                report.min_value = report.min_value.min(if f.is_nan() { f64::NEG_INFINITY } else { f });
                fail(&mut report, &y, format!("F = {f} at a sampled direction"));
                continue;
            }
            report.min_value = report.min_value.min(f);
            for lambda in [0.5, 2.0, 10.0] {
                let rel = (self.raw(&(&y * lambda)) - lambda * f).abs() / (lambda * f);
                report.homogeneity_error = report.homogeneity_error.max(rel);
            }
            match self.fundamental_tensor(&y) {
                Ok(g) => {
                    let min = g.symmetric_eigen().eigenvalues.min();
                    report.min_eigenvalue = report.min_eigenvalue.min(min);
                    if min.is_nan() || min <= 0.0 {
                        fail(&mut report, &y, format!("g_y has eigenvalue {min:e}"));
                    }
                }
                Err(e) => fail(&mut report, &y, e.to_string()),
            }
        }
        if report.failure.is_none() && (report.homogeneity_error.is_nan() || report.homogeneity_error >= 1e-8) {
            report.failure =
                Some(format!("not positively 1-homogeneous (relative error {:e})", report.homogeneity_error));
        }
        report
    }

    pub fn ensure_strongly_convex(&self) -> Result<()> {
        match self.validate_convexity().failure {
            None => Ok(()),
            Some(msg) => Err(Error::NotStronglyConvex(msg)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub samples: usize,
    pub min_value: f64,
    pub min_eigenvalue: f64,
    pub homogeneity_error: f64,
    /// A direction where convexity or positivity fails.
    pub witness: Option<AlgebraVector>,
    pub failure: Option<String>,
}

impl ConvexityReport {
    pub fn is_strongly_convex(&self) -> bool {
        self.failure.is_none()
    }
}

fn quad(q: &DMatrix<f64>, y: &AlgebraVector) -> f64 {
    y.dot(&(q * y))
}

/// `g = (F / alpha)(Q - l l^T) + (l + b)(l + b)^T`, `l = Q y / alpha`.
fn randers_g(q: &DMatrix<f64>, b: &AlgebraVector, y: &AlgebraVector) -> DMatrix<f64> {
    let qy = q * y;
    let alpha = y.dot(&qy).sqrt();
    let l = qy / alpha;
    let f = alpha + b.dot(y);
    let lb = &l + b;
    (q - &l * l.transpose()) * (f / alpha) + &lb * lb.transpose()
}

/// `C_y(u, v, w) = 1/2 (beta a3(u,v,w) + a2(u,v) b.w + a2(u,w) b.v + a2(v,w) b.u)`
/// where `a2`, `a3` are the second and third derivatives of `alpha`.
fn randers_cartan(
    q: &DMatrix<f64>,
    b: &AlgebraVector,
    y: &AlgebraVector,
    u: &AlgebraVector,
    v: &AlgebraVector,
    w: &AlgebraVector,
) -> f64 {
    let qy = q * y;
    let alpha = y.dot(&qy).sqrt();
    let l = qy / alpha;
    let beta = b.dot(y);
    let a2 = |x: &AlgebraVector, z: &AlgebraVector| (x.dot(&(q * z)) - l.dot(x) * l.dot(z)) / alpha;
    let (uv, uw, vw) = (a2(u, v), a2(u, w), a2(v, w));
    let a3 = -(uw * l.dot(v) + vw * l.dot(u) + uv * l.dot(w)) / alpha;
    0.5 * (beta * a3 + uv * b.dot(w) + uw * b.dot(v) + vw * b.dot(u))
}
