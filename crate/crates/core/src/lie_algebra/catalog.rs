use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{LieAlgebra, MatrixRep};
use crate::error::Error;

/// Built-in algebras, each shipped with a faithful matrix representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `R^n`, realized by translations in `(n+1) x (n+1)` affine matrices.
    Abelian(usize),
    /// `[e1, e2] = e3`, realized by strictly upper-triangular 3x3 matrices.
    Heisenberg3,
    /// `[e1, e2] = e2`, realized by 2x2 upper-triangular matrices.
    Aff1,
    /// `[e1, e2] = e3`, `[e2, e3] = e1`, `[e3, e1] = e2`, realized by `-i/2`
    /// times the Pauli matrices written as real 4x4 blocks.
    Su2,
    /// `[h, e] = 2e`, `[h, f] = -2f`, `[e, f] = h` in the basis `(h, e, f)`.
    Sl2,
}

impl Builtin {
    /// One instance of every catalog entry (`abelian` at dimension 3).
    pub fn catalog() -> [Builtin; 5] {
        [Builtin::Abelian(3), Builtin::Heisenberg3, Builtin::Aff1, Builtin::Su2, Builtin::Sl2]
    }

    pub fn algebra(self) -> LieAlgebra {
        let (alg, images) = match self {
            Builtin::Abelian(n) => {
                let alg = LieAlgebra::from_brackets(self.to_string(), n, &[]).expect("abelian");
                let images = (0..n)
                    .map(|i| {
                        let mut m = DMatrix::zeros(n + 1, n + 1);
                        m[(i, n)] = 1.0;
                        m
                    })
                    .collect();
                (alg, images)
            }
            Builtin::Heisenberg3 => {
                let alg = LieAlgebra::from_brackets("heisenberg3", 3, &[(0, 1, 2, 1.0)]).expect("heisenberg3");
                let unit = |r, c| {
                    let mut m = DMatrix::zeros(3, 3);
                    m[(r, c)] = 1.0;
                    m
                };
                (alg, vec![unit(0, 1), unit(1, 2), unit(0, 2)])
            }
            Builtin::Aff1 => {
                let alg = LieAlgebra::from_brackets("aff1", 2, &[(0, 1, 1, 1.0)]).expect("aff1");
                let e1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
                let e2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
                (alg, vec![e1, e2])
            }
            Builtin::Su2 => {
                let alg = LieAlgebra::from_brackets("su2", 3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
                    .expect("su2");
                let h = 0.5;
                // (real part, imaginary part) of -i/2 sigma_k
                let e1 = realify(&[0.0, 0.0, 0.0, 0.0], &[0.0, -h, -h, 0.0]);
                let e2 = realify(&[0.0, -h, h, 0.0], &[0.0, 0.0, 0.0, 0.0]);
                let e3 = realify(&[0.0, 0.0, 0.0, 0.0], &[-h, 0.0, 0.0, h]);
                (alg, vec![e1, e2, e3])
            }
            Builtin::Sl2 => {
                let alg = LieAlgebra::from_brackets("sl2", 3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)])
                    .expect("sl2");
                let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
                let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
                let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
                (alg, vec![h, e, f])
            }
        };
        let rep = MatrixRep::new(images, true).expect("catalog representation");
        alg.with_rep(rep).expect("catalog representation dimension")
    }
}

/// `A + iB` (2x2, row-major parts) as the real block matrix `[[A, -B], [B, A]]`.
fn realify(re: &[f64; 4], im: &[f64; 4]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            let a = re[r * 2 + c];
            let b = im[r * 2 + c];
            m[(r, c)] = a;
            m[(r + 2, c + 2)] = a;
            m[(r, c + 2)] = -b;
            m[(r + 2, c)] = b;
        }
    }
    m
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Abelian(n) => write!(f, "abelian({n})"),
            Builtin::Heisenberg3 => f.write_str("heisenberg3"),
            Builtin::Aff1 => f.write_str("aff1"),
            Builtin::Su2 => f.write_str("su2"),
            Builtin::Sl2 => f.write_str("sl2"),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// Accepts `abelian(n)`, `abelianN`, `heisenberg3`, `aff1`, `su2`, `sl2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "heisenberg3" | "heisenberg" => return Ok(Builtin::Heisenberg3),
            "aff1" => return Ok(Builtin::Aff1),
            "su2" => return Ok(Builtin::Su2),
            "sl2" => return Ok(Builtin::Sl2),
            _ => {}
        }
        let dim = t
            .strip_prefix("abelian")
            .map(|rest| rest.trim_start_matches('(').trim_end_matches(')'))
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d > 0);
        dim.map(Builtin::Abelian).ok_or_else(|| Error::UnknownAlgebra(s.to_string()))
    }
}
