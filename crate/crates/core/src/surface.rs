//! Two-dimensional analysis: `eta` restricted to the indicatrix, its zeros,
//! and the Cartan scalar carried along the flow of `-eta`.
//!
//! On a surface `eta` is tangent to the indicatrix, so the flow of `-eta` is
//! a flow on a circle whose fixed points are the zeros of `eta`. Along it we
//! follow `C_y(w, w, w)` for the `g_y`-unit normal `w`; a Landsberg metric
//! keeps that scalar constant on each arc between zeros.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::integrate_eta;
use crate::lie_algebra::{AlgebraVector, LieAlgebra};
use crate::minkowski::MinkowskiNorm;
use crate::ode::IntegratorConfig;
use crate::spray::SprayField;

/// Bisection stops once the bracket is this narrow in angle.
pub const ROOT_ANGLE_TOLERANCE: f64 = 1e-10;
/// Bound on `|g_y(y, [e1, e2])|` at a zero of `eta`.
pub const CHARACTERIZATION_TOLERANCE: f64 = 1e-7;
/// Below this everywhere on the scan, `eta` counts as identically zero.
pub const ZERO_FIELD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub resolution: usize,
    /// Each arc is followed over `(-horizon, horizon)` from its midpoint.
    pub horizon: f64,
    /// Absolute constancy tolerance on the Cartan series.
    pub tolerance: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            resolution: 720,
            horizon: 30.0,
            tolerance: 1e-4,
            integrator: IntegratorConfig { output_step: Some(0.05), ..Default::default() },
        }
    }
}

/// `w = J g y / |J g y|_g` with `J` the quarter turn. Then `g_y(y, w) = 0`
/// and `det(y, w) = g_y(y, y) / |J g y|_g > 0` at every point, so the
/// orientation is the same all the way round.
fn unit_normal(g: &DMatrix<f64>, y: &AlgebraVector) -> AlgebraVector {
    let gy = g * y;
    let j = AlgebraVector::from_column_slice(&[-gy[1], gy[0]]);
    let len = j.dot(&(g * &j)).sqrt();
    j / len
}

#[derive(Debug, Clone, PartialEq)]
struct PointData {
    y: AlgebraVector,
    w: AlgebraVector,
    eta: AlgebraVector,
    tangential: f64,
    cartan: f64,
    mean_cartan: f64,
    indicatrix_error: f64,
    frame_error: f64,
}

fn point_data(spray: &SprayField, norm: &MinkowskiNorm, y: AlgebraVector) -> Result<PointData> {
    let g = norm.fundamental_tensor(&y)?;
    if g.clone().cholesky().is_none() {
        return Err(Error::NotStronglyConvex(format!("g_y is not positive definite at {:?}", y.as_slice())));
    }
    let w = unit_normal(&g, &y);
    let eta = spray.eta(&y)?;
    let gw = &g * &w;
    let frame_error = (w.dot(&gw) - 1.0).abs().max(y.dot(&gw).abs());
    Ok(PointData {
        tangential: eta.dot(&gw),
        cartan: norm.cartan(&y, &w, &w, &w)?,
        mean_cartan: norm.mean_cartan(&y, &w)?,
        indicatrix_error: (norm.eval(&y)? - 1.0).abs(),
        frame_error,
        y,
        w,
        eta,
    })
}

fn surface_spray(algebra: &LieAlgebra, norm: &MinkowskiNorm) -> Result<SprayField> {
    if algebra.dim() != 2 {
        return Err(Error::NotASurface(algebra.dim()));
    }
    SprayField::metric(algebra.clone(), norm.clone())
}

fn angle_point(norm: &MinkowskiNorm, theta: f64) -> Result<AlgebraVector> {
    norm.indicatrix_point(&AlgebraVector::from_column_slice(&[theta.cos(), theta.sin()]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatrixScan {
    spray: SprayField,
    pub angles: Vec<f64>,
    pub points: Vec<AlgebraVector>,
    pub normals: Vec<AlgebraVector>,
    /// `g_y(eta(y), w)`.
    pub eta_tangential: Vec<f64>,
    /// `C_y(w, w, w)`.
    pub cartan_scalar: Vec<f64>,
    /// `I_y(w)`, the mean Cartan tensor.
    pub mean_cartan: Vec<f64>,
    pub max_eta: f64,
    /// `max |F(y) - 1|`.
    pub max_indicatrix_error: f64,
    /// `max(|g_y(w, w) - 1|, |g_y(y, w)|)`.
    pub max_frame_error: f64,
}

impl IndicatrixScan {
    pub fn spray(&self) -> &SprayField {
        &self.spray
    }
}

/// Samples the indicatrix at `resolution` equally spaced Euclidean angles,
/// projected radially onto `F = 1`.
pub fn scan_indicatrix(algebra: &LieAlgebra, norm: &MinkowskiNorm, resolution: usize) -> Result<IndicatrixScan> {
    let spray = surface_spray(algebra, norm)?;
    if resolution < 3 {
        return Err(Error::NoSignChange(resolution));
    }
    norm.ensure_strongly_convex()?;
    let angles: Vec<f64> = (0..resolution).map(|k| TAU * k as f64 / resolution as f64).collect();
    let data: Vec<PointData> =
        angles.par_iter().map(|&theta| point_data(&spray, norm, angle_point(norm, theta)?)).collect::<Result<_>>()?;
    let fold = |f: fn(&PointData) -> f64| data.iter().map(f).fold(0.0, f64::max);
    Ok(IndicatrixScan {
        max_eta: fold(|d| d.eta.amax()),
        max_indicatrix_error: fold(|d| d.indicatrix_error),
        max_frame_error: fold(|d| d.frame_error),
        eta_tangential: data.iter().map(|d| d.tangential).collect(),
        cartan_scalar: data.iter().map(|d| d.cartan).collect(),
        mean_cartan: data.iter().map(|d| d.mean_cartan).collect(),
        normals: data.iter().map(|d| d.w.clone()).collect(),
        points: data.into_iter().map(|d| d.y).collect(),
        spray,
        angles,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaZero {
    pub theta: f64,
    pub point: AlgebraVector,
    /// `|g_y(y, [e1, e2])| / |[e1, e2]|`.
    pub characterization_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaZeros {
    /// `eta` vanishes on the whole scan, as it does for abelian algebras.
    IdenticallyZero,
    Roots(Vec<EtaZero>),
}

impl EtaZeros {
    pub fn roots(&self) -> &[EtaZero] {
        match self {
            EtaZeros::IdenticallyZero => &[],
            EtaZeros::Roots(r) => r,
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Zeros of the tangential component, refined by bisection in angle, each
/// checked against `g_y(y, [g, g]) = 0`.
pub fn eta_zeros(scan: &IndicatrixScan) -> Result<EtaZeros> {
    if scan.max_eta < ZERO_FIELD_TOLERANCE {
        return Ok(EtaZeros::IdenticallyZero);
    }
    let spray = &scan.spray;
    let norm = spray.norm().expect("scan sprays are metric");
    let tangential = |theta: f64| -> Result<f64> {
        let y = angle_point(norm, theta)?;
        let g = norm.fundamental_tensor(&y)?;
        Ok(spray.eta(&y)?.dot(&(&g * unit_normal(&g, &y))))
    };
    let n = scan.angles.len();
    let mut thetas = Vec::new();
    for k in 0..n {
        let (fa, fb) = (scan.eta_tangential[k], scan.eta_tangential[(k + 1) % n]);
        let a = scan.angles[k];
        let mut b = if k + 1 == n { TAU } else { scan.angles[k + 1] };
        match (sign(fa), sign(fb)) {
            (0, _) => thetas.push(a),
            (sa, sb) if sa * sb < 0 => {
                let mut lo = a;
                let mut s_lo = sa;
                while b - lo > ROOT_ANGLE_TOLERANCE {
                    let mid = 0.5 * (lo + b);
                    let sm = sign(tangential(mid)?);
                    if sm == 0 {
                        lo = mid;
                        b = mid;
                        break;
                    }
                    if sm == s_lo {
                        lo = mid;
                        s_lo = sm;
                    } else {
                        b = mid;
                    }
                }
                thetas.push((0.5 * (lo + b)) % TAU);
            }
            _ => {}
        }
    }
    if thetas.is_empty() {
        return Err(Error::NoSignChange(n));
    }
    let alg = spray.algebra();
    let z = alg.bracket_unchecked(&alg.basis_vector(0), &alg.basis_vector(1));
    let z_norm = z.norm();
    let mut roots = Vec::with_capacity(thetas.len());
    for theta in thetas {
        let point = angle_point(norm, theta)?;
        let residual = if z_norm > 0.0 { norm.inner(&point, &point, &z)?.abs() / z_norm } else { 0.0 };
        if residual > CHARACTERIZATION_TOLERANCE {
            return Err(Error::CharacterizationViolated { theta, residual });
        }
        roots.push(EtaZero { theta, point, characterization_residual: residual });
    }
    Ok(EtaZeros::Roots(roots))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanSeries {
    pub times: Vec<f64>,
    pub points: Vec<AlgebraVector>,
    pub cartan: Vec<f64>,
    /// Trapezoidal time average of `cartan`.
    pub mean: f64,
    pub max_deviation: f64,
    /// `max |F(y(t)) - 1|`.
    pub max_indicatrix_error: f64,
    /// `max(|g(w, w) - 1|, |g(y, w)|)` along the flow.
    pub max_frame_error: f64,
    /// `|eta|` at the two ends; small values mean the flow is settling
    /// onto a zero.
    pub end_speeds: (f64, f64),
}

/// Follows `y' = -eta(y)` from `y_start` over `[0, horizon]` and records
/// `C_y(w, w, w)` along the way.
pub fn cartan_along_flow(
    algebra: &LieAlgebra,
    norm: &MinkowskiNorm,
    y_start: &AlgebraVector,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<CartanSeries> {
    let spray = surface_spray(algebra, norm)?;
    flow_series(&spray, norm, y_start, (0.0, horizon), cfg)
}

fn flow_series(
    spray: &SprayField,
    norm: &MinkowskiNorm,
    y_start: &AlgebraVector,
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<CartanSeries> {
    let start = spray.eta(y_start)?;
    if start.amax() < ZERO_FIELD_TOLERANCE * y_start.norm().powi(2).max(1.0) {
        return Err(Error::StartsAtZero { at: y_start.as_slice().to_vec() });
    }
    let cfg = IntegratorConfig { t_span: span, ..cfg.clone() };
    let curve = integrate_eta(spray, y_start, &cfg)?;
    let data: Vec<PointData> =
        curve.values.par_iter().map(|y| point_data(spray, norm, y.clone())).collect::<Result<_>>()?;
    let cartan: Vec<f64> = data.iter().map(|d| d.cartan).collect();
    let ts = &curve.times;
    let span_len = ts[ts.len() - 1] - ts[0];
    let mean = if span_len > 0.0 {
        ts.windows(2).zip(cartan.windows(2)).map(|(t, c)| 0.5 * (t[1] - t[0]) * (c[0] + c[1])).sum::<f64>() / span_len
    } else {
        cartan[0]
    };
    let fold = |f: fn(&PointData) -> f64| data.iter().map(f).fold(0.0, f64::max);
    Ok(CartanSeries {
        max_deviation: cartan.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max),
        max_indicatrix_error: fold(|d| d.indicatrix_error),
        max_frame_error: fold(|d| d.frame_error),
        end_speeds: (data[0].eta.norm(), data[data.len() - 1].eta.norm()),
        times: curve.times,
        points: curve.values,
        cartan,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandsbergReport {
    pub zeros: EtaZeros,
    /// One series per open arc between consecutive zeros.
    pub arcs: Vec<CartanSeries>,
    pub max_deviation: f64,
    /// Every arc series is constant within the tolerance.
    pub landsberg_consistent: bool,
    /// Decided only when the metric is Landsberg-consistent with equal arc
    /// constants: whether `max |C|` over the indicatrix is below tolerance.
    pub riemannian: Option<bool>,
    /// `eta` vanishes identically, the abelian case.
    pub locally_minkowskian: bool,
    pub max_cartan: f64,
}

/// Runs the flow on every arc between zeros of `eta` from the arc midpoint
/// and walks the Riemannian-or-locally-Minkowskian argument.
pub fn landsberg_diagnostic(
    algebra: &LieAlgebra,
    norm: &MinkowskiNorm,
    cfg: &SurfaceConfig,
) -> Result<LandsbergReport> {
    let scan = scan_indicatrix(algebra, norm, cfg.resolution)?;
    let max_cartan = scan.cartan_scalar.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let zeros = eta_zeros(&scan)?;
    let roots = match &zeros {
        EtaZeros::IdenticallyZero => {
            return Ok(LandsbergReport {
                zeros,
                arcs: Vec::new(),
                max_deviation: 0.0,
                landsberg_consistent: true,
                riemannian: None,
                locally_minkowskian: true,
                max_cartan,
            })
        }
        EtaZeros::Roots(r) => r,
    };
    let mut thetas: Vec<f64> = roots.iter().map(|z| z.theta).collect();
    thetas.sort_by(f64::total_cmp);
    let span = (-cfg.horizon, cfg.horizon);
    let mut arcs = Vec::with_capacity(thetas.len());
    for (k, &a) in thetas.iter().enumerate() {
        let b = if k + 1 == thetas.len() { thetas[0] + TAU } else { thetas[k + 1] };
        let mid = angle_point(norm, 0.5 * (a + b))?;
        arcs.push(flow_series(&scan.spray, norm, &mid, span, &cfg.integrator)?);
    }
    let max_deviation = arcs.iter().map(|s| s.max_deviation).fold(0.0, f64::max);
    let landsberg_consistent = max_deviation <= cfg.tolerance;
    let constants_agree = arcs.windows(2).all(|w| (w[0].mean - w[1].mean).abs() <= cfg.tolerance);
    let riemannian = (landsberg_consistent && constants_agree).then_some(max_cartan <= cfg.tolerance);
    Ok(LandsbergReport {
        zeros,
        arcs,
        max_deviation,
        landsberg_consistent,
        riemannian,
        locally_minkowskian: false,
        max_cartan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebra::Builtin;
    use std::f64::consts::PI;

    fn randers(b: [f64; 2]) -> MinkowskiNorm {
        MinkowskiNorm::randers(DMatrix::identity(2, 2), AlgebraVector::from_column_slice(&b)).unwrap()
    }

    #[test]
    fn euclidean_aff1_scan() {
        let scan = scan_indicatrix(&Builtin::Aff1.algebra(), &MinkowskiNorm::euclidean(2), 360).unwrap();
        assert!(scan.max_indicatrix_error < 1e-12);
        assert!(scan.max_frame_error < 1e-12);
        assert!(scan.cartan_scalar.iter().all(|c| *c == 0.0));
        for (theta, t) in scan.angles.iter().zip(&scan.eta_tangential) {
            // eta = -sin(theta) w on the unit circle
            assert!((t + theta.sin()).abs() < 1e-14);
        }
        let zeros = eta_zeros(&scan).unwrap();
        let thetas: Vec<f64> = zeros.roots().iter().map(|z| z.theta).collect();
        assert_eq!(thetas.len(), 2);
        assert!(thetas[0].abs() < 1e-8 && (thetas[1] - PI).abs() < 1e-8, "{thetas:?}");
    }

    #[test]
    fn randers_aff1_zeros_satisfy_characterization() {
        let scan = scan_indicatrix(&Builtin::Aff1.algebra(), &randers([0.3, 0.0]), 257).unwrap();
        let zeros = eta_zeros(&scan).unwrap();
        assert_eq!(zeros.roots().len(), 2);
        for z in zeros.roots() {
            assert!(z.characterization_residual < 1e-7);
        }
        for (c, i) in scan.cartan_scalar.iter().zip(&scan.mean_cartan) {
            assert!((c - i).abs() < 1e-5);
        }
        let spread = scan.cartan_scalar.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assert!(spread > 1e-3);
    }

    #[test]
    fn abelian_field_is_identically_zero() {
        let scan = scan_indicatrix(&Builtin::Abelian(2).algebra(), &randers([0.2, 0.1]), 64).unwrap();
        assert!(scan.eta_tangential.iter().all(|t| *t == 0.0));
        assert_eq!(eta_zeros(&scan).unwrap(), EtaZeros::IdenticallyZero);
        let rep = landsberg_diagnostic(&Builtin::Abelian(2).algebra(), &randers([0.2, 0.1]), &SurfaceConfig::default())
            .unwrap();
        assert!(rep.locally_minkowskian && rep.landsberg_consistent);
    }

    #[test]
    fn flow_stays_on_indicatrix_and_settles() {
        let alg = Builtin::Aff1.algebra();
        let norm = randers([0.3, 0.0]);
        let start = angle_point(&norm, 1.0).unwrap();
        let cfg = IntegratorConfig { output_step: Some(0.1), ..Default::default() };
        let series = cartan_along_flow(&alg, &norm, &start, 30.0, &cfg).unwrap();
        assert!(series.max_indicatrix_error < 1e-7);
        assert!(series.max_frame_error < 1e-7);
        assert!(series.end_speeds.1 < 1e-6);
        // distance to the limiting zero shrinks monotonically once close
        let last = series.points.last().unwrap();
        let d: Vec<f64> = series.points.iter().map(|p| (p - last).norm()).collect();
        let tail = &d[d.len() / 2..d.len() - 1];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn landsberg_verdicts() {
        let alg = Builtin::Aff1.algebra();
        let cfg = SurfaceConfig { resolution: 180, horizon: 20.0, ..Default::default() };
        let euclid = landsberg_diagnostic(&alg, &MinkowskiNorm::euclidean(2), &cfg).unwrap();
        assert!(euclid.landsberg_consistent);
        assert_eq!(euclid.riemannian, Some(true));
        assert_eq!(euclid.arcs.len(), 2);
        let r = landsberg_diagnostic(&alg, &randers([0.3, 0.0]), &cfg).unwrap();
        assert!(!r.landsberg_consistent, "{}", r.max_deviation);
        assert_eq!(r.riemannian, None);
    }

    #[test]
    fn errors() {
        let su2 = Builtin::Su2.algebra();
        assert_eq!(scan_indicatrix(&su2, &MinkowskiNorm::euclidean(3), 10).map(|_| ()), Err(Error::NotASurface(3)));
        let alg = Builtin::Aff1.algebra();
        let bad = randers([1.2, 0.0]);
        assert!(matches!(scan_indicatrix(&alg, &bad, 10), Err(Error::NotStronglyConvex(_))));
        let zero = AlgebraVector::from_column_slice(&[1.0, 0.0]);
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            cartan_along_flow(&alg, &MinkowskiNorm::euclidean(2), &zero, 1.0, &cfg),
            Err(Error::StartsAtZero { .. })
        ));
    }
}
