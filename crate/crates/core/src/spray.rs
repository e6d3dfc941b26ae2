//! Spray vector fields `eta` and the connection operator `N`.
//!
//! A left-invariant spray `G = G0 - H` is determined by
//! `eta(y) = H^i(e, y) e_i`, a positively 2-homogeneous map on `g \ {0}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::lie_algebra::{AlgebraVector, LieAlgebra};
use crate::minkowski::{DerivativeMode, MinkowskiNorm};
use crate::sampling;

#[derive(Debug, Clone, PartialEq)]
pub enum SpraySource {
    /// Induced by a left-invariant Finsler metric through
    /// `g_y(eta(y), u) = g_y(y, [u, y])`.
    Metric(MinkowskiNorm),
    /// One expression per component `eta^i`, with symbolic first and second
    /// partial derivatives.
    ClosedForm { sources: Vec<String>, components: Vec<Expr>, jacobian: Vec<Vec<Expr>>, hessian: Vec<Vec<Vec<Expr>>> },
    /// The canonical bi-invariant spray `G0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprayField {
    algebra: LieAlgebra,
    source: SpraySource,
    mode: DerivativeMode,
}

/// Solves `g_y(eta, e_i) = g_y(y, [e_i, y])` for `eta` by Cholesky.
/// Cap on the estimated node count of closed-form second derivatives.
const SYMBOLIC_BUDGET: usize = 50_000_000;

pub fn eta_from_metric(algebra: &LieAlgebra, norm: &MinkowskiNorm, y: &AlgebraVector) -> Result<AlgebraVector> {
    algebra.check_dim(y)?;
    if norm.dim() != algebra.dim() {
        return Err(Error::DimensionMismatch { expected: algebra.dim(), got: norm.dim() });
    }
    let g = norm.fundamental_tensor(y)?;
    let gy = &g * y;
    let n = algebra.dim();
    let rhs = AlgebraVector::from_fn(n, |i, _| gy.dot(&algebra.bracket_unchecked(&algebra.basis_vector(i), y)));
    if rhs.iter().all(|x| *x == 0.0) {
        // still require g_y to be positive definite
        return match g.cholesky() {
            Some(_) => Ok(AlgebraVector::zeros(n)),
            None => Err(not_convex_at(y)),
        };
    }
    let chol = g.cholesky().ok_or_else(|| not_convex_at(y))?;
    Ok(chol.solve(&rhs))
}

fn not_convex_at(y: &AlgebraVector) -> Error {
    Error::NotStronglyConvex(format!("g_y is not positive definite at {:?}", y.as_slice()))
}

impl SprayField {
    pub fn zero(algebra: LieAlgebra) -> Self {
        Self { algebra, source: SpraySource::Zero, mode: DerivativeMode::Analytic }
    }

    pub fn metric(algebra: LieAlgebra, norm: MinkowskiNorm) -> Result<Self> {
        if norm.dim() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), got: norm.dim() });
        }
        Ok(Self { algebra, source: SpraySource::Metric(norm), mode: DerivativeMode::FiniteDifference })
    }

    /// `components[i]` is the expression for `eta^i` in `u1..un`.
    pub fn closed_form<S: AsRef<str>>(algebra: LieAlgebra, components: &[S]) -> Result<Self> {
        let n = algebra.dim();
        if components.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: components.len() });
        }
        let exprs = components.iter().map(|s| Expr::parse(s.as_ref(), n)).collect::<Result<Vec<_>>>()?;
        for e in &exprs {
            // each derivative order can multiply the tree size by its depth
            let bound = e.size().saturating_mul((e.depth() + 1).pow(2)).saturating_mul(n * n);
            if bound > SYMBOLIC_BUDGET {
                return Err(Error::Expression {
                    column: 1,
                    message: format!("expression with {} nodes is too large to differentiate", e.size()),
                });
            }
        }
        let jacobian: Vec<Vec<Expr>> = exprs.iter().map(|e| (0..n).map(|p| e.derivative(p)).collect()).collect();
        let hessian = jacobian
            .iter()
            .map(|row| (0..n).map(|p| (0..n).map(|q| row[p].derivative(q)).collect()).collect())
            .collect();
        Ok(Self {
            algebra,
            source: SpraySource::ClosedForm {
                sources: components.iter().map(|s| s.as_ref().to_string()).collect(),
                components: exprs,
                jacobian,
                hessian,
            },
            mode: DerivativeMode::Analytic,
        })
    }

    /// Forces finite differences for closed forms; metric sprays always
    /// difference numerically and the zero spray is exact either way.
    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        if matches!(self.source, SpraySource::ClosedForm { .. }) {
            self.mode = mode;
        }
        self
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn source(&self) -> &SpraySource {
        &self.source
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn norm(&self) -> Option<&MinkowskiNorm> {
        match &self.source {
            SpraySource::Metric(norm) => Some(norm),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, SpraySource::Zero)
    }

    fn check(&self, y: &AlgebraVector) -> Result<()> {
        self.algebra.check_dim(y)?;
        if y.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    /// `eta(y)`.
    pub fn eta(&self, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check(y)?;
        self.eta_unchecked(y)
    }

    fn eta_unchecked(&self, y: &AlgebraVector) -> Result<AlgebraVector> {
        match &self.source {
            SpraySource::Zero => Ok(AlgebraVector::zeros(self.dim())),
            SpraySource::Metric(norm) => eta_from_metric(&self.algebra, norm, y),
            SpraySource::ClosedForm { components, .. } => {
                let u = y.as_slice();
                let vals = components.iter().map(|e| e.eval_checked(u)).collect::<Result<Vec<_>>>()?;
                Ok(AlgebraVector::from_vec(vals))
            }
        }
    }

    /// `D eta(y, v)`, the derivative of `eta` at `y` along `v`.
    pub fn d_eta(&self, y: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        self.check(y)?;
        self.algebra.check_dim(v)?;
        match (&self.source, self.mode) {
            (SpraySource::Zero, _) => Ok(AlgebraVector::zeros(self.dim())),
            (SpraySource::ClosedForm { jacobian, .. }, DerivativeMode::Analytic) => {
                let u = y.as_slice();
                let n = self.dim();
                let mut out = AlgebraVector::zeros(n);
                for (i, row) in jacobian.iter().enumerate() {
                    let mut s = 0.0;
                    for (p, d) in row.iter().enumerate() {
                        if v[p] != 0.0 {
                            s += d.eval_checked(u)? * v[p];
                        }
                    }
                    out[i] = s;
                }
                Ok(out)
            }
            _ => self.fd_d_eta(y, v, fd::first_order_step(y, v)),
        }
    }

    fn fd_d_eta(&self, y: &AlgebraVector, v: &AlgebraVector, h: f64) -> Result<AlgebraVector> {
        if v.iter().all(|x| *x == 0.0) {
            return Ok(AlgebraVector::zeros(self.dim()));
        }
        if !fd::stencil_clear(y, v, h) {
            return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
        }
        let plus = self.eta_unchecked(&(y + v * h))?;
        let minus = self.eta_unchecked(&(y - v * h))?;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Matrix of `v -> D eta(y, v)`.
    pub fn d_eta_matrix(&self, y: &AlgebraVector) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m.set_column(j, &self.d_eta(y, &self.algebra.basis_vector(j))?);
        }
        Ok(m)
    }

    /// `N(y, v) = 1/2 D eta(y, v) - 1/2 [y, v]`.
    pub fn connection(&self, y: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        let d = self.d_eta(y, v)?;
        Ok((d - self.algebra.bracket_unchecked(y, v)) * 0.5)
    }

    /// Matrix of `v -> N(y, v)`.
    pub fn connection_matrix(&self, y: &AlgebraVector) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m.set_column(j, &self.connection(y, &self.algebra.basis_vector(j))?);
        }
        Ok(m)
    }

    /// `DN(y, v, u)`, the derivative of `N(., v)` at `y` along `u`, i.e.
    /// `1/2 D^2 eta(y)[v, u] - 1/2 [u, v]`.
    pub fn d_connection(&self, y: &AlgebraVector, v: &AlgebraVector, u: &AlgebraVector) -> Result<AlgebraVector> {
        self.check(y)?;
        self.algebra.check_dim(v)?;
        self.algebra.check_dim(u)?;
        let n = self.dim();
        if u.iter().all(|x| *x == 0.0) {
            return Ok(AlgebraVector::zeros(n));
        }
        let bracket_term = self.algebra.bracket_unchecked(u, v) * -0.5;
        match (&self.source, self.mode) {
            (SpraySource::Zero, _) => Ok(bracket_term),
            (SpraySource::ClosedForm { hessian, .. }, DerivativeMode::Analytic) => {
                let y = y.as_slice();
                let mut out = AlgebraVector::zeros(n);
                for (i, block) in hessian.iter().enumerate() {
                    let mut s = 0.0;
                    for (p, row) in block.iter().enumerate() {
                        for (q, d) in row.iter().enumerate() {
                            let w = v[p] * u[q];
                            if w != 0.0 {
                                s += d.eval_checked(y)? * w;
                            }
                        }
                    }
                    out[i] = 0.5 * s;
                }
                Ok(out + bracket_term)
            }
            _ => {
                let h = fd::second_order_step(y, u.norm());
                if !fd::stencil_clear(y, u, h) {
                    return Err(Error::StencilCrossesOrigin { at: y.as_slice().to_vec() });
                }
                let inner = fd::first_order_step(y, v);
                let yp = y + u * h;
                let ym = y - u * h;
                let np = (self.fd_d_eta(&yp, v, inner)? - self.algebra.bracket_unchecked(&yp, v)) * 0.5;
                let nm = (self.fd_d_eta(&ym, v, inner)? - self.algebra.bracket_unchecked(&ym, v)) * 0.5;
                Ok((np - nm) / (2.0 * h))
            }
        }
    }

    /// Homogeneity and (for metric sprays) tangency residuals on the
    /// validation directions.
    pub fn validate(&self) -> Result<SprayReport> {
        let mut homogeneity: f64 = 0.0;
        let mut tangency: Option<f64> = None;
        for y in sampling::validation_directions(self.dim()) {
            let e = self.eta(&y)?;
            for lambda in [0.5, 2.0] {
                let el = self.eta(&(&y * lambda))?;
                let scale = (lambda * lambda * e.norm()).max(1e-300);
                if e.norm() > 0.0 || el.norm() > 0.0 {
                    homogeneity = homogeneity.max((el - &e * (lambda * lambda)).norm() / scale);
                }
            }
            if let Some(norm) = self.norm() {
                let r = norm.inner(&y, &e, &y)?.abs();
                tangency = Some(tangency.unwrap_or(0.0).max(r));
            }
        }
        Ok(SprayReport { homogeneity_error: homogeneity, tangency_residual: tangency })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprayReport {
    /// Max relative error of `eta(l y) = l^2 eta(y)` for `l` in {0.5, 2}.
    pub homogeneity_error: f64,
    /// Max `|g_y(eta(y), y)|`, metric sprays only.
    pub tangency_residual: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebra::Builtin;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> AlgebraVector {
        AlgebraVector::from_column_slice(xs)
    }

    fn aff1_euclidean() -> SprayField {
        SprayField::metric(Builtin::Aff1.algebra(), MinkowskiNorm::euclidean(2)).unwrap()
    }

    fn aff1_closed() -> SprayField {
        // hand solution of the 2x2 system for aff(1) with g = I
        SprayField::closed_form(Builtin::Aff1.algebra(), &["u2^2", "-u1*u2"]).unwrap()
    }

    fn randers(alg: Builtin, b: &[f64]) -> SprayField {
        let n = b.len();
        let norm = MinkowskiNorm::randers(DMatrix::identity(n, n), v(b)).unwrap();
        SprayField::metric(alg.algebra(), norm).unwrap()
    }

    #[test]
    fn aff1_euclidean_eta_matches_hand_solution() {
        let s = aff1_euclidean();
        assert_eq!(s.eta(&v(&[1.0, 1.0])).unwrap(), v(&[1.0, -1.0]));
        let mut r = sampling::rng(2);
        let closed = aff1_closed();
        for _ in 0..50 {
            let y = sampling::box_vector(&mut r, 2, 0.1);
            let d = s.eta(&y).unwrap() - closed.eta(&y).unwrap();
            assert!(d.amax() < 1e-14);
        }
    }

    #[test]
    fn bi_invariant_inner_product_gives_zero_eta() {
        let s = SprayField::metric(Builtin::Su2.algebra(), MinkowskiNorm::euclidean(3)).unwrap();
        let mut r = sampling::rng(4);
        for _ in 0..100 {
            let y = sampling::box_vector(&mut r, 3, 0.05);
            assert!(s.eta(&y).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn abelian_metric_eta_vanishes() {
        let norm = MinkowskiNorm::randers(DMatrix::identity(3, 3), v(&[0.1, 0.2, 0.3])).unwrap();
        let s = SprayField::metric(Builtin::Abelian(3).algebra(), norm).unwrap();
        assert_eq!(s.eta(&v(&[1.0, -2.0, 0.5])).unwrap(), AlgebraVector::zeros(3));
    }

    #[test]
    fn non_convex_metric_is_an_error() {
        let norm = MinkowskiNorm::randers(DMatrix::identity(2, 2), v(&[1.5, 0.0])).unwrap();
        let s = SprayField::metric(Builtin::Aff1.algebra(), norm).unwrap();
        assert!(matches!(s.eta(&v(&[-1.0, 0.1])), Err(Error::NotStronglyConvex(_))));
    }

    #[test]
    fn zero_spray() {
        let s = SprayField::zero(Builtin::Heisenberg3.algebra());
        let y = v(&[1.0, 2.0, 3.0]);
        assert_eq!(s.eta(&y).unwrap(), AlgebraVector::zeros(3));
        assert_eq!(s.d_eta(&y, &v(&[0.0, 1.0, 0.0])).unwrap(), AlgebraVector::zeros(3));
        let (a, b) = (v(&[0.0, 1.0, 0.0]), v(&[1.0, 0.0, 0.0]));
        let expected = s.algebra().bracket(&y, &a).unwrap() * -0.5;
        assert_eq!(s.connection(&y, &a).unwrap(), expected);
        assert_eq!(s.d_connection(&y, &a, &b).unwrap(), s.algebra().bracket(&b, &a).unwrap() * -0.5);
        let ab = SprayField::zero(Builtin::Abelian(2).algebra());
        assert_eq!(ab.connection(&v(&[1.0, 1.0]), &v(&[0.0, 1.0])).unwrap(), AlgebraVector::zeros(2));
    }

    #[test]
    fn incomplete_field_value() {
        let s = SprayField::closed_form(Builtin::Abelian(2).algebra(), &["-sqrt(u1^2+u2^2)*u1", "-sqrt(u1^2+u2^2)*u2"])
            .unwrap();
        assert_eq!(s.eta(&v(&[1.0, 0.0])).unwrap(), v(&[-1.0, 0.0]));
    }

    #[test]
    fn eta_is_two_homogeneous() {
        let s = aff1_euclidean();
        let y = v(&[0.3, -0.7]);
        let d = s.eta(&(&y * 2.0)).unwrap() - s.eta(&y).unwrap() * 4.0;
        assert!(d.amax() < 1e-14);
        let report = randers(Builtin::Aff1, &[0.3, 0.0]).validate().unwrap();
        assert!(report.homogeneity_error < 1e-7, "{report:?}");
        assert!(report.tangency_residual.unwrap() < 1e-8);
    }

    #[test]
    fn d_eta_examples() {
        let s = aff1_euclidean();
        let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let d = s.d_eta(&e1, &e2).unwrap();
        assert!((d - v(&[0.0, -1.0])).amax() < 1e-8);
        let closed = aff1_closed();
        assert_eq!(closed.d_eta(&e1, &e2).unwrap(), v(&[0.0, -1.0]));
        assert_eq!(closed.d_eta(&e1, &e1).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn euler_relation_for_metric_sprays() {
        let s = randers(Builtin::Su2, &[0.2, 0.1, -0.3]);
        let mut r = sampling::rng(9);
        for _ in 0..30 {
            let y = sampling::box_vector(&mut r, 3, 0.2);
            let lhs = s.d_eta(&y, &y).unwrap();
            let rhs = s.eta(&y).unwrap() * 2.0;
            assert!((lhs - rhs).amax() < 1e-6);
        }
    }

    #[test]
    fn connection_examples() {
        let s = aff1_euclidean();
        let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let n = s.connection(&e1, &e2).unwrap();
        assert!((n - v(&[0.0, -1.0])).amax() < 1e-8);
    }

    /// Second derivative of eta = (u2^2, -u1 u2): d^2 eta^1 = 2 du2 du2,
    /// d^2 eta^2 = -(du1 du2 + du2 du1).
    fn aff1_second_derivative(v: &AlgebraVector, u: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::from_column_slice(&[2.0 * v[1] * u[1], -(v[0] * u[1] + v[1] * u[0])])
    }

    #[test]
    fn d_connection_fd_matches_closed_form() {
        let alg = Builtin::Aff1.algebra();
        let s = aff1_euclidean();
        let closed = aff1_closed();
        let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let analytic = aff1_second_derivative(&e2, &e2) * 0.5 - alg.bracket(&e2, &e2).unwrap() * 0.5;
        assert!((s.d_connection(&e1, &e2, &e2).unwrap() - &analytic).amax() < 1e-5);
        assert!((closed.d_connection(&e1, &e2, &e2).unwrap() - &analytic).amax() < 1e-14);
        assert_eq!(s.d_connection(&e1, &e2, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));

        let mut r = sampling::rng(12);
        for _ in 0..20 {
            let y = sampling::box_vector(&mut r, 2, 0.3);
            let a = sampling::box_vector(&mut r, 2, 0.1);
            let b = sampling::box_vector(&mut r, 2, 0.1);
            let want = aff1_second_derivative(&a, &b) * 0.5 - alg.bracket(&b, &a).unwrap() * 0.5;
            assert!((s.d_connection(&y, &a, &b).unwrap() - &want).amax() < 1e-5);
            assert!((closed.d_connection(&y, &a, &b).unwrap() - &want).amax() < 1e-13);
        }
    }

    #[test]
    fn stencil_near_origin_is_rejected() {
        let s = aff1_euclidean();
        let tiny = v(&[1e-9, 0.0]);
        assert!(matches!(s.d_eta(&tiny, &v(&[1.0, 0.0])), Err(Error::StencilCrossesOrigin { .. })));
        assert_eq!(s.eta(&v(&[0.0, 0.0])), Err(Error::ZeroVector));
    }

    #[test]
    fn closed_form_arity_is_checked() {
        let alg = Builtin::Aff1.algebra();
        assert!(SprayField::closed_form(alg.clone(), &["u1"]).is_err());
        assert!(SprayField::closed_form(alg, &["u1", "u3"]).is_err());
    }

    proptest! {
        #[test]
        fn fd_and_analytic_d_eta_agree_for_polynomials(
            y in proptest::collection::vec(-2.0..2.0f64, 3),
            dir in proptest::collection::vec(-1.0..1.0f64, 3),
        ) {
            let y = v(&y);
            prop_assume!(y.norm() > 0.2);
            let exprs = ["u1*u2 - u3^2", "2*u1^2 + u2*u3", "-u1*u3 + 0.5*u2^2"];
            let analytic = SprayField::closed_form(Builtin::Sl2.algebra(), &exprs).unwrap();
            let fd = analytic.clone().with_mode(DerivativeMode::FiniteDifference);
            let dir = v(&dir);
            let a = analytic.d_eta(&y, &dir).unwrap();
            let f = fd.d_eta(&y, &dir).unwrap();
            prop_assert!((a - f).amax() < 1e-7);
        }

        #[test]
        fn metric_eta_is_tangent_and_homogeneous(
            y in proptest::collection::vec(-1.0..1.0f64, 2),
            lambda in prop_oneof![Just(0.5), Just(2.0)],
        ) {
            let y = v(&y);
            prop_assume!(y.norm() > 0.05);
            let s = randers(Builtin::Aff1, &[0.3, 0.0]);
            let norm = s.norm().unwrap().clone();
            let e = s.eta(&y).unwrap();
            prop_assert!(norm.inner(&y, &e, &y).unwrap().abs() < 1e-8);
            let el = s.eta(&(&y * lambda)).unwrap();
            prop_assert!((el - &e * (lambda * lambda)).amax() < 1e-7 * (1.0 + e.amax()));
            let dv = v(&[0.3, -0.8]);
            let nl = s.connection(&(&y * lambda), &dv).unwrap();
            let n = s.connection(&y, &dv).unwrap();
            prop_assert!((nl - &n * lambda).amax() < 1e-6 * (1.0 + n.amax()));
        }
    }

    #[test]
    fn bracket_term_sign() {
        // at y = e1 on aff(1): N(e1, e2) = 1/2 (0, -1) - 1/2 (0, 1)
        let s = aff1_closed();
        let n = s.connection(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(n[1], -1.0);
    }
}
