//! Geodesics through the integral curves of `-eta`.
//!
//! A curve `c(t)` in the group is a geodesic exactly when its left-translated
//! velocity `y(t) = c(t)^{-1} c'(t)` solves `y' = -eta(y)`. The group curve is
//! recovered from `y` by the matrix ODE `C' = C rho(y)` in a representation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lie_algebra::{AlgebraVector, LieAlgebra, MatrixRep};
use crate::ode::{self, BlowUp, IntegratorConfig, Problem, Projection, Solution};
use crate::spray::SprayField;

/// Differencing-error estimate above which a residual report is flagged.
pub const DIFFERENCING_LIMIT: f64 = 1e-6;

/// Samples of `y(t)` on an increasing grid containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraCurve {
    pub times: Vec<f64>,
    pub values: Vec<AlgebraVector>,
    /// `y'(t) = -eta(y(t))` at each sample.
    pub derivatives: Vec<AlgebraVector>,
    pub forward_blowup: Option<BlowUp>,
    pub backward_blowup: Option<BlowUp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub y_values: Vec<AlgebraVector>,
    pub c_values: Option<Vec<DMatrix<f64>>>,
    /// `max |F(y(t)) - F(y(0))|`, metric sprays only.
    pub speed_drift: Option<f64>,
    /// `max |c^{-1} c' - rho(y)|` with `c'` by differencing; needs at least
    /// seven samples.
    pub pullback_residual: Option<f64>,
    /// Forward blow-up if any, otherwise backward.
    pub blowup: Option<BlowUp>,
}

struct Stitched {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    derivatives: Vec<DVector<f64>>,
    forward_blowup: Option<BlowUp>,
    backward_blowup: Option<BlowUp>,
}

/// Runs from 0 to each end of `t_span` and stitches the two halves.
fn both_ways(cfg: &IntegratorConfig, mut run: impl FnMut(f64) -> Result<Solution>) -> Result<Stitched> {
    let (a, b) = cfg.t_span;
    let fwd = run(b)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();
    let mut back_blowup = None;
    if a < 0.0 {
        let back = run(a)?;
        back_blowup = back.blowup;
        for k in (1..back.times.len()).rev() {
            times.push(back.times[k]);
            states.push(back.states[k].clone());
            derivs.push(back.derivatives[k].clone());
        }
    }
    times.extend(fwd.times);
    states.extend(fwd.states);
    derivs.extend(fwd.derivatives);
    Ok(Stitched { times, states, derivatives: derivs, forward_blowup: fwd.blowup, backward_blowup: back_blowup })
}

fn check_start(spray: &SprayField, y0: &AlgebraVector, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    spray.algebra().check_dim(y0)?;
    if y0.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

/// Integrates `y' = -eta(y)`, `y(0) = y0` over `cfg.t_span`. A run that
/// escapes stops at the escape and records the estimate instead of failing.
pub fn integrate_eta(spray: &SprayField, y0: &AlgebraVector, cfg: &IntegratorConfig) -> Result<AlgebraCurve> {
    check_start(spray, y0, cfg)?;
    let monitor = |y: &DVector<f64>| y.norm();
    let Stitched { times, states: values, derivatives, forward_blowup, backward_blowup } = both_ways(cfg, |t1| {
        let rhs = |_t: f64, y: &DVector<f64>| spray.eta(y).map(|e| -e);
        let mut p = Problem { rhs, monitor: &monitor, project: None };
        ode::integrate(&mut p, y0, 0.0, t1, cfg)
    })?;
    Ok(AlgebraCurve { times, values, derivatives, forward_blowup, backward_blowup })
}

fn representation(algebra: &LieAlgebra) -> Result<&MatrixRep> {
    algebra.rep().ok_or_else(|| Error::MissingRepresentation(algebra.name().to_string()))
}

/// Orthogonal polar factor `U V^T` of `C = U S V^T`.
fn polar_factor(c: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = c.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => c.clone(),
    }
}

/// Cubic Hermite interpolant of the curve at `t`, or linear when the curve
/// carries no derivatives.
fn interpolate(curve: &AlgebraCurve, t: f64) -> AlgebraVector {
    let ts = &curve.times;
    let k = match ts.partition_point(|&s| s <= t) {
        0 => 0,
        k if k >= ts.len() => ts.len() - 2,
        k => k - 1,
    };
    let (t0, t1) = (ts[k], ts[k + 1]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (y0, y1) = (&curve.values[k], &curve.values[k + 1]);
    if curve.derivatives.len() != ts.len() {
        return y0 * (1.0 - s) + y1 * s;
    }
    let (d0, d1) = (&curve.derivatives[k], &curve.derivatives[k + 1]);
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (h * (s3 - 2.0 * s2 + s))
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (h * (s3 - s2))
}

/// Solves `C' = C rho(y(t))`, `C(0) = I`, segment by segment between the
/// curve's sample times, returning `C` at each of them.
pub fn reconstruct_group_curve(
    algebra: &LieAlgebra,
    curve: &AlgebraCurve,
    cfg: &IntegratorConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let rep = representation(algebra)?;
    let m = rep.size();
    let ts = &curve.times;
    if ts.len() < 2 {
        return Ok(vec![DMatrix::identity(m, m); ts.len()]);
    }
    let zero = ts
        .iter()
        .position(|&t| t == 0.0)
        .ok_or_else(|| Error::InvalidIntegrator("curve grid must contain t = 0".into()))?;
    let seg_cfg = IntegratorConfig { output_step: None, ..cfg.clone() };
    let monitor = |c: &DVector<f64>| c.norm();
    let ortho = |c: &mut DVector<f64>| {
        let p = polar_factor(&DMatrix::from_column_slice(m, m, c.as_slice()));
        c.copy_from_slice(p.as_slice());
    };
    let project: Projection = if cfg.orthonormalize { Some(&ortho) } else { None };
    let step = |c: &DMatrix<f64>, a: f64, b: f64| -> Result<DMatrix<f64>> {
        let rhs = |t: f64, c: &DVector<f64>| {
            let cm = DMatrix::from_column_slice(m, m, c.as_slice());
            let d = cm * rep.image(&interpolate(curve, t));
            Ok(DVector::from_column_slice(d.as_slice()))
        };
        let mut p = Problem { rhs, monitor: &monitor, project };
        let c0 = DVector::from_column_slice(c.as_slice());
        let sol = ode::integrate(&mut p, &c0, a, b, &seg_cfg)?;
        if sol.blowup.is_some() {
            return Err(Error::NonFiniteState { time: *sol.times.last().unwrap_or(&a) });
        }
        let end = sol.states.last().expect("at least one state");
        Ok(DMatrix::from_column_slice(m, m, end.as_slice()))
    };
    let mut out = vec![DMatrix::zeros(m, m); ts.len()];
    out[zero] = DMatrix::identity(m, m);
    for k in zero + 1..ts.len() {
        out[k] = step(&out[k - 1], ts[k - 1], ts[k])?;
    }
    for k in (0..zero).rev() {
        out[k] = step(&out[k + 1], ts[k + 1], ts[k])?;
    }
    Ok(out)
}

/// Integrates `y' = -eta(y)` together with `C' = C rho(y)` when the algebra
/// has a representation, then left-translates by `g0`.
pub fn geodesic(
    spray: &SprayField,
    y0: &AlgebraVector,
    g0: Option<&DMatrix<f64>>,
    cfg: &IntegratorConfig,
) -> Result<GeodesicTrace> {
    check_start(spray, y0, cfg)?;
    let algebra = spray.algebra();
    let n = algebra.dim();
    let Some(rep) = algebra.rep() else {
        if g0.is_some() {
            return Err(Error::MissingRepresentation(algebra.name().to_string()));
        }
        let curve = integrate_eta(spray, y0, cfg)?;
        return finish_trace(spray, curve.times, curve.values, None, curve.forward_blowup.or(curve.backward_blowup));
    };
    let m = rep.size();
    if let Some(g) = g0 {
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: g.nrows().max(g.ncols()) });
        }
    }
    let mut state0 = DVector::zeros(n + m * m);
    state0.rows_mut(0, n).copy_from(y0);
    state0.rows_mut(n, m * m).copy_from(&DVector::from_column_slice(DMatrix::<f64>::identity(m, m).as_slice()));
    let monitor = |s: &DVector<f64>| s.rows(0, n).norm();
    let ortho = |s: &mut DVector<f64>| {
        let p = polar_factor(&DMatrix::from_column_slice(m, m, &s.as_slice()[n..]));
        s.rows_mut(n, m * m).copy_from_slice(p.as_slice());
    };
    let project: Projection = if cfg.orthonormalize { Some(&ortho) } else { None };
    let Stitched { times, states, forward_blowup: fwd, backward_blowup: back, .. } = both_ways(cfg, |t1| {
        let rhs = |_t: f64, s: &DVector<f64>| {
            let y = s.rows(0, n).into_owned();
            let eta = spray.eta(&y)?;
            let c = DMatrix::from_column_slice(m, m, &s.as_slice()[n..]);
            let dc = c * rep.image(&y);
            let mut out = DVector::zeros(n + m * m);
            out.rows_mut(0, n).copy_from(&(-eta));
            out.rows_mut(n, m * m).copy_from_slice(dc.as_slice());
            Ok(out)
        };
        let mut p = Problem { rhs, monitor: &monitor, project };
        ode::integrate(&mut p, &state0, 0.0, t1, cfg)
    })?;
    let y_values = states.iter().map(|s| s.rows(0, n).into_owned()).collect();
    let c_values = states
        .iter()
        .map(|s| {
            let c = DMatrix::from_column_slice(m, m, &s.as_slice()[n..]);
            match g0 {
                Some(g) => g * c,
                None => c,
            }
        })
        .collect();
    finish_trace(spray, times, y_values, Some(c_values), fwd.or(back))
}

fn finish_trace(
    spray: &SprayField,
    times: Vec<f64>,
    y_values: Vec<AlgebraVector>,
    c_values: Option<Vec<DMatrix<f64>>>,
    blowup: Option<BlowUp>,
) -> Result<GeodesicTrace> {
    let speed_drift = match spray.norm() {
        Some(norm) => {
            let zero = times.iter().position(|&t| t == 0.0).unwrap_or(0);
            let f0 = norm.eval(&y_values[zero])?;
            let mut drift: f64 = 0.0;
            for y in &y_values {
                drift = drift.max((norm.eval(y)? - f0).abs());
            }
            Some(drift)
        }
        None => None,
    };
    let mut trace = GeodesicTrace { times, y_values, c_values, speed_drift, pullback_residual: None, blowup };
    if trace.c_values.is_some() && trace.times.len() >= 7 {
        let rep = representation(spray.algebra())?;
        trace.pullback_residual = Some(pullback_residuals(&trace, rep)?.0);
    }
    Ok(trace)
}

/// First-derivative weights at `x0` for the nodes `xs` (Fornberg).
fn derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][m]: weight of node j for derivative order m, m in {0, 1}
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Window of `width` consecutive indices around `k`, shifted at the ends.
fn window(k: usize, len: usize, width: usize) -> std::ops::Range<usize> {
    let start = k.saturating_sub(width / 2).min(len - width);
    start..start + width
}

/// Five-point derivative of `values` at sample `k` and its difference from
/// the seven-point one.
fn differentiate<T>(times: &[f64], values: &[T], k: usize) -> (T, T)
where
    T: Clone + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let combine = |r: std::ops::Range<usize>| {
        let w = derivative_weights(times[k], &times[r.clone()]);
        r.zip(w).map(|(j, w)| values[j].clone() * w).reduce(|a, b| a + b).expect("nonempty window")
    };
    let d5 = combine(window(k, times.len(), 5));
    let d7 = combine(window(k, times.len(), 7));
    let err = d5.clone() - d7;
    (d5, err)
}

fn pullback_residuals(trace: &GeodesicTrace, rep: &MatrixRep) -> Result<(f64, f64)> {
    let cs = trace.c_values.as_ref().expect("checked by caller");
    let mut residual: f64 = 0.0;
    let mut diff: f64 = 0.0;
    for k in 0..trace.times.len() {
        let (dc, err) = differentiate(&trace.times, cs, k);
        let inv = cs[k].clone().try_inverse().ok_or(Error::NonFiniteState { time: trace.times[k] })?;
        residual = residual.max((&inv * dc - rep.image(&trace.y_values[k])).amax());
        diff = diff.max((&inv * err).amax());
    }
    Ok((residual, diff))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `max |y' + eta(y)|` with `y'` by five-point differencing.
    pub eta_residual: f64,
    /// `max |c^{-1} c' - rho(y)|`.
    pub pullback_residual: f64,
    /// `max |D5 - D7|` over both residuals, an estimate of the error made
    /// by differencing the samples.
    pub differencing_error: f64,
    /// The differencing error exceeds `DIFFERENCING_LIMIT`, so the
    /// residuals say more about the grid than about the solution.
    pub differencing_dominated: bool,
}

/// Checks the correspondence on a trace by differencing its samples.
pub fn verify_geodesic_ode(trace: &GeodesicTrace, spray: &SprayField) -> Result<ResidualReport> {
    let rep = representation(spray.algebra())?;
    if trace.c_values.is_none() {
        return Err(Error::MissingRepresentation(spray.algebra().name().to_string()));
    }
    let have = trace.times.len();
    if have < 7 {
        return Err(Error::InsufficientSamples { needed: 7, have });
    }
    let mut eta_residual: f64 = 0.0;
    let mut diff: f64 = 0.0;
    for k in 0..have {
        let (dy, err) = differentiate(&trace.times, &trace.y_values, k);
        let eta = spray.eta(&trace.y_values[k])?;
        eta_residual = eta_residual.max((dy + eta).amax());
        diff = diff.max(err.amax());
    }
    let (pullback_residual, pdiff) = pullback_residuals(trace, rep)?;
    let differencing_error = diff.max(pdiff);
    Ok(ResidualReport {
        eta_residual,
        pullback_residual,
        differencing_error,
        differencing_dominated: differencing_error > DIFFERENCING_LIMIT,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RayOutcome {
    ReachedHorizon,
    BlowUp { time_estimate: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayReport {
    pub direction: AlgebraVector,
    pub forward: RayOutcome,
    pub backward: RayOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub horizon: f64,
    pub rays: Vec<RayReport>,
    pub forward_complete: bool,
    pub backward_complete: bool,
}

/// Integrates `-eta` from each direction to `+horizon` and `-horizon` and
/// classifies how each run ends. Directions run in parallel.
pub fn completeness_probe(
    spray: &SprayField,
    directions: &[AlgebraVector],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> CompletenessReport {
    let outcome = |y0: &AlgebraVector, span: (f64, f64)| {
        let cfg = IntegratorConfig { t_span: span, output_step: None, ..cfg.clone() };
        match integrate_eta(spray, y0, &cfg) {
            Ok(curve) => match curve.forward_blowup.or(curve.backward_blowup) {
                Some(b) => RayOutcome::BlowUp { time_estimate: b.time_estimate },
                None => RayOutcome::ReachedHorizon,
            },
            Err(e) => RayOutcome::Failed(e.to_string()),
        }
    };
    let rays: Vec<RayReport> = directions
        .par_iter()
        .map(|d| RayReport {
            direction: d.clone(),
            forward: outcome(d, (0.0, horizon)),
            backward: outcome(d, (-horizon, 0.0)),
        })
        .collect();
    CompletenessReport {
        horizon,
        forward_complete: rays.iter().all(|r| r.forward == RayOutcome::ReachedHorizon),
        backward_complete: rays.iter().all(|r| r.backward == RayOutcome::ReachedHorizon),
        rays,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebra::Builtin;
    use crate::minkowski::MinkowskiNorm;
    use crate::ode::Method;
    use crate::sampling;

    fn v(xs: &[f64]) -> AlgebraVector {
        AlgebraVector::from_column_slice(xs)
    }

    fn incomplete() -> SprayField {
        SprayField::closed_form(Builtin::Abelian(2).algebra(), &["-sqrt(u1^2+u2^2)*u1", "-sqrt(u1^2+u2^2)*u2"]).unwrap()
    }

    /// `exp(X)` by scaling and squaring a Taylor series, as an oracle.
    fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
        let s = (x.amax().max(1e-300).log2().ceil() + 4.0).max(0.0) as i32;
        let a = x / 2f64.powi(s);
        let n = x.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..20 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn fornberg_weights() {
        let w = derivative_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        // exact on quartics at non-uniform nodes
        let xs = [0.0, 0.1, 0.35, 0.4, 0.9];
        let w = derivative_weights(0.35, &xs);
        let d: f64 = xs.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((d - 4.0 * 0.35f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn zero_spray_keeps_y_constant() {
        let s = SprayField::zero(Builtin::Su2.algebra());
        let y0 = v(&[0.3, -0.2, 0.9]);
        let curve = integrate_eta(&s, &y0, &IntegratorConfig::default().with_span(-1.0, 2.0)).unwrap();
        assert!(curve.values.iter().all(|y| *y == y0));
        assert_eq!(curve.times.first(), Some(&-1.0));
        assert_eq!(curve.times.last(), Some(&2.0));
        assert!(curve.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_spray_geodesic_is_exponential() {
        let cfg = IntegratorConfig { abs_tol: 1e-13, rel_tol: 1e-13, ..Default::default() };
        for b in [Builtin::Su2, Builtin::Heisenberg3, Builtin::Aff1, Builtin::Sl2] {
            let alg = b.algebra();
            let y0 = AlgebraVector::from_fn(alg.dim(), |i, _| 0.7 - 0.4 * i as f64);
            let x = alg.rep().unwrap().image(&y0);
            let tr = geodesic(&SprayField::zero(alg), &y0, None, &cfg).unwrap();
            for (t, c) in tr.times.iter().zip(tr.c_values.unwrap()) {
                assert!((c - expm(&(&x * *t))).amax() < 1e-10, "{b}");
            }
        }
    }

    #[test]
    fn left_translation() {
        let s = SprayField::metric(Builtin::Aff1.algebra(), MinkowskiNorm::euclidean(2)).unwrap();
        let g0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.0]);
        let cfg = IntegratorConfig::default().with_span(0.0, 2.0);
        let a = geodesic(&s, &v(&[1.0, 1.0]), None, &cfg).unwrap();
        let b = geodesic(&s, &v(&[1.0, 1.0]), Some(&g0), &cfg).unwrap();
        for (ca, cb) in a.c_values.unwrap().iter().zip(b.c_values.unwrap()) {
            assert!((&g0 * ca - cb).amax() < 1e-14);
        }
        assert!(geodesic(&s, &v(&[1.0, 1.0]), Some(&DMatrix::identity(3, 3)), &cfg).is_err());
    }

    #[test]
    fn time_reversal() {
        let s = SprayField::metric(Builtin::Aff1.algebra(), MinkowskiNorm::euclidean(2)).unwrap();
        let y0 = v(&[0.4, 1.0]);
        let fwd = integrate_eta(&s, &y0, &IntegratorConfig::default().with_span(0.0, 3.0)).unwrap();
        let back =
            integrate_eta(&s, fwd.values.last().unwrap(), &IntegratorConfig::default().with_span(-3.0, 0.0)).unwrap();
        assert!((&back.values[0] - y0).amax() < 1e-6);
    }

    #[test]
    fn reconstruction_from_sampled_curve() {
        let alg = Builtin::Heisenberg3.algebra();
        let s = SprayField::zero(alg.clone());
        let y0 = v(&[1.0, -0.5, 0.25]);
        let cfg = IntegratorConfig { output_step: Some(0.1), ..Default::default() };
        let curve = integrate_eta(&s, &y0, &cfg).unwrap();
        let cs = reconstruct_group_curve(&alg, &curve, &cfg).unwrap();
        let x = alg.rep().unwrap().image(&y0);
        for (t, c) in curve.times.iter().zip(&cs) {
            // strictly upper triangular: exp(tX) = I + tX + t^2 X^2 / 2
            let want = DMatrix::identity(3, 3) + &x * *t + &x * &x * (t * t / 2.0);
            assert!((c - want).amax() < 1e-10);
        }
        let no_rep = LieAlgebra::from_brackets("bare", 2, &[(0, 1, 1, 1.0)]).unwrap();
        assert!(matches!(reconstruct_group_curve(&no_rep, &curve, &cfg), Err(Error::MissingRepresentation(_))));
    }

    #[test]
    fn translations_for_abelian() {
        let alg = Builtin::Abelian(3).algebra();
        let y0 = v(&[1.0, 2.0, -1.0]);
        let tr = geodesic(&SprayField::zero(alg), &y0, None, &IntegratorConfig::default()).unwrap();
        let c = tr.c_values.unwrap().pop().unwrap();
        let t = tr.times.last().unwrap();
        for i in 0..3 {
            assert!((c[(i, 3)] - t * y0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_blowup_and_backward_decay() {
        let s = incomplete();
        for r0 in [0.5, 1.0, 2.0] {
            let y0 = v(&[r0 * 0.6, r0 * 0.8]);
            let curve = integrate_eta(&s, &y0, &IntegratorConfig::default().with_span(-50.0, 10.0)).unwrap();
            let b = curve.forward_blowup.unwrap();
            assert!((b.time_estimate * r0 - 1.0).abs() < 1e-3, "{b:?}");
            assert!(curve.backward_blowup.is_none());
            assert_eq!(curve.times[0], -50.0);
            let r = curve.values[0].norm();
            assert!((r - r0 / (1.0 + 50.0 * r0)).abs() < 1e-8);
        }
    }

    #[test]
    fn probe_classifies_rays() {
        let dirs = sampling::circle_directions(8);
        let cfg = IntegratorConfig::default();
        let rep = completeness_probe(&incomplete(), &dirs, 20.0, &cfg);
        assert!(!rep.forward_complete && rep.backward_complete);
        for ray in &rep.rays {
            match ray.forward {
                RayOutcome::BlowUp { time_estimate } => assert!((time_estimate - 1.0).abs() < 1e-2),
                ref other => panic!("{other:?}"),
            }
        }
        let metric = SprayField::metric(Builtin::Aff1.algebra(), MinkowskiNorm::euclidean(2)).unwrap();
        let rep = completeness_probe(&metric, &dirs, 20.0, &cfg);
        assert!(rep.forward_complete && rep.backward_complete);
    }

    #[test]
    fn residuals_on_fine_and_coarse_grids() {
        let s = SprayField::metric(Builtin::Aff1.algebra(), MinkowskiNorm::euclidean(2)).unwrap();
        let y0 = v(&[1.0, 1.0]);
        let fine = IntegratorConfig { output_step: Some(0.01), ..Default::default() }.with_span(0.0, 5.0);
        let tr = geodesic(&s, &y0, None, &fine).unwrap();
        let rep = verify_geodesic_ode(&tr, &s).unwrap();
        assert!(rep.eta_residual < 1e-6 && rep.pullback_residual < 1e-6, "{rep:?}");
        assert!(!rep.differencing_dominated);
        assert!(tr.speed_drift.unwrap() < 1e-8);

        let coarse =
            IntegratorConfig { method: Method::Rk4, initial_step: 0.5, ..Default::default() }.with_span(0.0, 5.0);
        let tr = geodesic(&s, &y0, None, &coarse).unwrap();
        assert_eq!(tr.times.len(), 11);
        assert!(verify_geodesic_ode(&tr, &s).unwrap().differencing_dominated);

        let short = IntegratorConfig { output_step: Some(0.5), ..Default::default() }.with_span(0.0, 2.0);
        let tr = geodesic(&s, &y0, None, &short).unwrap();
        assert_eq!(verify_geodesic_ode(&tr, &s), Err(Error::InsufficientSamples { needed: 7, have: 5 }));
    }

    #[test]
    fn orthonormalization_keeps_su2_orthogonal() {
        let alg = Builtin::Su2.algebra();
        let cfg = IntegratorConfig { orthonormalize: true, ..Default::default() }.with_span(0.0, 50.0);
        let tr = geodesic(&SprayField::zero(alg), &v(&[1.0, 2.0, 0.5]), None, &cfg).unwrap();
        for c in tr.c_values.unwrap() {
            assert!((c.transpose() * &c - DMatrix::identity(4, 4)).amax() < 1e-12);
        }
    }

    #[test]
    fn zero_start_is_rejected() {
        let s = incomplete();
        assert_eq!(integrate_eta(&s, &v(&[0.0, 0.0]), &IntegratorConfig::default()), Err(Error::ZeroVector));
    }
}
