//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! A basis `{e_1, .., e_n}` is fixed at construction and the bracket is
//! `[e_i, e_j] = c_{ij}^k e_k`. Indices are 0-based in the API and 1-based in
//! the algebra file format.

mod catalog;
pub mod file;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use catalog::Builtin;

/// Coordinates `u^i` of `y = u^i e_i` in the fixed basis.
pub type AlgebraVector = DVector<f64>;

/// Residual threshold used by [`ValidationReport::is_valid`].
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

/// Matrix realization `rho(e_i)` of the basis, used to integrate group curves.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    size: usize,
    basis_images: Vec<DMatrix<f64>>,
    faithful: bool,
}

impl MatrixRep {
    pub fn new(basis_images: Vec<DMatrix<f64>>, faithful: bool) -> Result<Self> {
        let size = basis_images
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidAlgebra("matrix representation needs at least one image".into()))?;
        if size == 0 {
            return Err(Error::InvalidAlgebra("representation size must be positive".into()));
        }
        for (i, m) in basis_images.iter().enumerate() {
            if m.nrows() != size || m.ncols() != size {
                return Err(Error::InvalidAlgebra(format!(
                    "rep.e{} has shape {}x{}, expected {size}x{size}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidAlgebra(format!("rep.e{} has non-finite entries", i + 1)));
            }
        }
        Ok(Self { size, basis_images, faithful })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn basis_images(&self) -> &[DMatrix<f64>] {
        &self.basis_images
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    /// `rho(y) = u^i rho(e_i)`.
    pub fn image(&self, y: &AlgebraVector) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.size, self.size);
        for (coef, m) in y.iter().zip(&self.basis_images) {
            if *coef != 0.0 {
                out += m * *coef;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    /// Dense `c[(i * n + j) * n + k] = c_{ij}^k`.
    c: Vec<f64>,
    rep: Option<MatrixRep>,
}

impl LieAlgebra {
    /// Builds an algebra from a dense array of structure constants laid out as
    /// `c[(i * n + j) * n + k]`. Antisymmetry and the Jacobi identity are not
    /// enforced here; see [`LieAlgebra::validate`].
    pub fn from_dense(name: impl Into<String>, dim: usize, c: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if c.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, got: c.len() });
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidAlgebra("structure constants must be finite".into()));
        }
        Ok(Self { name: name.into(), dim, c, rep: None })
    }

    /// Builds an algebra from `(i, j, k, value)` entries meaning
    /// `[e_i, e_j] = value e_k + ...` (0-based), filling `c_{ji}^k = -value`.
    pub fn from_brackets(name: impl Into<String>, dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut alg = Self::from_dense(name, dim, vec![0.0; dim * dim * dim])?;
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index ({}, {}, {}) out of range for dimension {dim}",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidAlgebra("structure constants must be finite".into()));
            }
            alg.set_constant(i, j, k, v);
            alg.set_constant(j, i, k, -v);
        }
        Ok(alg)
    }

    pub fn with_rep(mut self, rep: MatrixRep) -> Result<Self> {
        if rep.basis_images.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: rep.basis_images.len() });
        }
        self.rep = Some(rep);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> Option<&MatrixRep> {
        self.rep.as_ref()
    }

    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub(crate) fn set_constant(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.dim;
        self.c[(i * n + j) * n + k] = v;
    }

    pub fn basis_vector(&self, i: usize) -> AlgebraVector {
        let mut e = AlgebraVector::zeros(self.dim);
        e[i] = 1.0;
        e
    }

    pub fn check_dim(&self, v: &AlgebraVector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    /// `[a, b]^k = a^i b^j c_{ij}^k`.
    pub fn bracket(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.bracket_unchecked(a, b))
    }

    pub(crate) fn bracket_unchecked(&self, a: &AlgebraVector, b: &AlgebraVector) -> AlgebraVector {
        let n = self.dim;
        let mut out = AlgebraVector::zeros(n);
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = a[i] * b[j];
                if w == 0.0 {
                    continue;
                }
                let row = &self.c[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Matrix of `v -> [y, v]`; column `j` holds `[y, e_j]`.
    pub fn ad_matrix(&self, y: &AlgebraVector) -> Result<DMatrix<f64>> {
        self.check_dim(y)?;
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += y[i] * self.constant(i, j, k);
                }
                m[(k, j)] = s;
            }
        }
        Ok(m)
    }

    /// `tr ad(e_l) = c_{lj}^j`.
    pub fn trace_form(&self) -> Vec<f64> {
        (0..self.dim).map(|l| (0..self.dim).map(|j| self.constant(l, j, j)).sum()).collect()
    }

    /// Dimension of the center, from the rank of `y -> (ad(y) e_j)_j`.
    pub fn center_dim(&self) -> usize {
        let n = self.dim;
        // rows (j, k), columns i: entry c_{ij}^k
        let mut m = DMatrix::zeros(n * n, n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m[(j * n + k, i)] = self.constant(i, j, k);
                }
            }
        }
        let scale = m.amax().max(1.0);
        let svd = m.svd(false, false);
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * scale).count();
        n - rank
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.dim;
        let mut antisymmetry: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    antisymmetry = antisymmetry.max((self.constant(i, j, k) + self.constant(j, i, k)).abs());
                }
            }
        }

        // nonzero c_{ij}^m for each (i, j); files are usually sparse
        let nonzero: Vec<Vec<(usize, f64)>> = (0..n * n)
            .map(|ij| (0..n).map(|m| (m, self.constant(ij / n, ij % n, m))).filter(|(_, c)| *c != 0.0).collect())
            .collect();
        let mut jacobi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let terms = [(&nonzero[i * n + j], k), (&nonzero[j * n + k], i), (&nonzero[k * n + i], j)];
                    if terms.iter().all(|(nz, _)| nz.is_empty()) {
                        continue;
                    }
                    for l in 0..n {
                        let s: f64 = terms
                            .iter()
                            .flat_map(|(nz, r)| nz.iter().map(move |&(m, c)| c * self.constant(m, *r, l)))
                            .sum();
                        jacobi = jacobi.max(s.abs());
                    }
                }
            }
        }

        let trace_form = self.trace_form();
        let unimodular = trace_form.iter().all(|t| t.abs() < VALIDATION_TOLERANCE);

        let rep_residual = self.rep.as_ref().map(|rep| {
            let imgs = &rep.basis_images;
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let comm = &imgs[i] * &imgs[j] - &imgs[j] * &imgs[i];
                    let expected = rep.image(&self.bracket_unchecked(&self.basis_vector(i), &self.basis_vector(j)));
                    worst = worst.max((comm - expected).amax());
                }
            }
            worst
        });

        let center_dim = self.center_dim();
        let mut warnings = Vec::new();
        if center_dim > 0 && self.rep.is_none() {
            warnings.push(format!(
                "algebra has a {center_dim}-dimensional center and no matrix representation; \
                 the adjoint representation is not faithful, so group curves cannot be reconstructed"
            ));
        }
        if let Some(rep) = &self.rep {
            if !rep.faithful {
                warnings.push("matrix representation is marked non-faithful".into());
            }
        }

        ValidationReport {
            antisymmetry_residual: antisymmetry,
            jacobi_residual: jacobi,
            unimodular,
            trace_form,
            rep_residual,
            center_dim,
            warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub antisymmetry_residual: f64,
    pub jacobi_residual: f64,
    /// `tr ad(e_l) = 0` for every `l`.
    pub unimodular: bool,
    pub trace_form: Vec<f64>,
    pub rep_residual: Option<f64>,
    pub center_dim: usize,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.antisymmetry_residual < VALIDATION_TOLERANCE
            && self.jacobi_residual < VALIDATION_TOLERANCE
            && self.rep_residual.is_none_or(|r| r < VALIDATION_TOLERANCE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> AlgebraVector {
        AlgebraVector::from_column_slice(xs)
    }

    #[test]
    fn aff1_bracket() {
        let g = Builtin::Aff1.algebra();
        assert_eq!(g.bracket(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), v(&[0.0, 1.0]));
        assert_eq!(g.constant(0, 1, 1), 1.0);
    }

    #[test]
    fn heisenberg_bracket_by_bilinearity() {
        let g = Builtin::Heisenberg3.algebra();
        let r = g.bracket(&v(&[1.0, 1.0, 0.0]), &v(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(r, v(&[0.0, 0.0, 1.0]));
        let e = |i| g.basis_vector(i);
        assert_eq!(g.bracket(&e(0), &e(2)).unwrap(), AlgebraVector::zeros(3));
        assert_eq!(g.bracket(&e(1), &e(2)).unwrap(), AlgebraVector::zeros(3));
        assert_eq!(g.validate().jacobi_residual, 0.0);
    }

    #[test]
    fn self_bracket_vanishes() {
        for b in Builtin::catalog() {
            let g = b.algebra();
            let y = AlgebraVector::from_fn(g.dim(), |i, _| 0.3 + i as f64);
            assert_eq!(g.bracket(&y, &y).unwrap().amax(), 0.0, "{}", g.name());
        }
    }

    #[test]
    fn ad_matrix_examples() {
        let aff = Builtin::Aff1.algebra();
        let ad = aff.ad_matrix(&v(&[1.0, 0.0])).unwrap();
        assert_eq!(ad * v(&[0.0, 1.0]), v(&[0.0, 1.0]));
        assert_eq!(aff.ad_matrix(&v(&[1.0, 0.0])).unwrap() * v(&[1.0, 0.0]), v(&[0.0, 0.0]));
        assert_eq!(aff.ad_matrix(&v(&[1.0, 0.0])).unwrap().trace(), 1.0);

        let su2 = Builtin::Su2.algebra();
        let ad = su2.ad_matrix(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(&ad * v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0]));
        assert_eq!(&ad * v(&[0.0, 0.0, 1.0]), v(&[0.0, -1.0, 0.0]));
        assert_eq!(ad.trace(), 0.0);

        let ab = Builtin::Abelian(4).algebra();
        assert_eq!(ab.ad_matrix(&v(&[1.0, 2.0, 3.0, 4.0])).unwrap().amax(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Builtin::Aff1.algebra();
        assert!(matches!(
            g.bracket(&v(&[1.0, 0.0, 0.0]), &v(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn unimodularity() {
        assert!(Builtin::Heisenberg3.algebra().validate().unimodular);
        assert!(Builtin::Su2.algebra().validate().unimodular);
        assert!(Builtin::Sl2.algebra().validate().unimodular);
        let aff = Builtin::Aff1.algebra().validate();
        assert!(!aff.unimodular);
        assert_eq!(aff.trace_form, vec![1.0, 0.0]);
    }

    #[test]
    fn catalog_is_valid() {
        for b in Builtin::catalog() {
            let report = b.algebra().validate();
            assert!(report.is_valid(), "{b:?}: {report:?}");
            assert!(report.rep_residual.is_some());
        }
    }

    #[test]
    fn jacobi_violation_is_reported() {
        // antisymmetric but not Jacobi: [e1,e2]=e3, [e2,e3]=e3, [e3,e1]=e1
        let g = LieAlgebra::from_brackets("broken", 3, &[(0, 1, 2, 1.0), (1, 2, 2, 1.0), (2, 0, 0, 1.0)]).unwrap();
        let r = g.validate();
        assert_eq!(r.antisymmetry_residual, 0.0);
        assert!(r.jacobi_residual > 0.5, "{r:?}");
        assert!(!r.is_valid());
    }

    #[test]
    fn center_warning_without_rep() {
        let h = Builtin::Heisenberg3.algebra();
        assert_eq!(h.center_dim(), 1);
        assert!(h.validate().warnings.is_empty());
        let bare = LieAlgebra::from_dense("h3", 3, h.constants().to_vec()).unwrap();
        assert_eq!(bare.validate().warnings.len(), 1);
        assert_eq!(Builtin::Su2.algebra().center_dim(), 0);
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn bracket_is_bilinear_and_antisymmetric(
            a in arb_vec(3), b in arb_vec(3), c in arb_vec(3), lambda in -5.0..5.0f64
        ) {
            for g in [Builtin::Su2.algebra(), Builtin::Sl2.algebra(), Builtin::Heisenberg3.algebra()] {
                let (a, b, c) = (v(&a), v(&b), v(&c));
                let lhs = g.bracket(&(&a + &b * lambda), &c).unwrap();
                let rhs = g.bracket(&a, &c).unwrap() + g.bracket(&b, &c).unwrap() * lambda;
                let scale = 1.0 + lhs.amax();
                prop_assert!((lhs - rhs).amax() < 1e-12 * scale);
                let ab = g.bracket(&a, &b).unwrap();
                let ba = g.bracket(&b, &a).unwrap();
                prop_assert!((ab + ba).amax() < 1e-12 * scale);
            }
        }

        #[test]
        fn ad_matrix_matches_bracket(y in arb_vec(3), x in arb_vec(3)) {
            for g in [Builtin::Su2.algebra(), Builtin::Sl2.algebra(), Builtin::Heisenberg3.algebra()] {
                let (y, x) = (v(&y), v(&x));
                let via_ad = g.ad_matrix(&y).unwrap() * &x;
                let direct = g.bracket(&y, &x).unwrap();
                prop_assert!((via_ad - direct).amax() < 1e-12);
            }
        }
    }
}
