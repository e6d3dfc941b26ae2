//! Explicit Runge-Kutta steppers: fixed-step RK4 and adaptive Dormand-Prince
//! 5(4), with finite-time blow-up detection.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Rk4,
    #[default]
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rk45" | "rk45_adaptive" => Ok(Method::Rk45),
            other => Err(Error::InvalidIntegrator(format!("unknown method `{other}` (use rk4 or rk45)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for rk4, first trial step for rk45.
    pub initial_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// `(a, b)` with `a <= 0 <= b`; both directions are integrated from 0.
    pub t_span: (f64, f64),
    pub blowup_norm_cap: f64,
    pub max_steps: usize,
    /// Record samples only on multiples of this spacing (plus the endpoints).
    pub output_step: Option<f64>,
    /// Replace the group element by its orthogonal polar factor after every
    /// step; meant for compact groups with orthogonal representations.
    pub orthonormalize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            initial_step: 1e-2,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            t_span: (0.0, 1.0),
            blowup_norm_cap: 1e8,
            max_steps: 1_000_000,
            output_step: None,
            orthonormalize: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_span(mut self, a: f64, b: f64) -> Self {
        self.t_span = (a, b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidIntegrator(m.to_string()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.initial_step) {
            return bad("initial_step must be positive");
        }
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return bad("tolerances must be positive");
        }
        if !positive(self.blowup_norm_cap) {
            return bad("blowup_norm_cap must be positive");
        }
        let (a, b) = self.t_span;
        if !(a.is_finite() && b.is_finite() && a <= 0.0 && b >= 0.0 && a < b) {
            return bad("t_span must satisfy a <= 0 <= b and a < b");
        }
        if let Some(dt) = self.output_step {
            if !positive(dt) {
                return bad("output_step must be positive");
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    /// Extrapolated escape time.
    pub time_estimate: f64,
    /// Time of the last accepted step.
    pub last_time: f64,
    /// `+1` forward, `-1` backward.
    pub direction: f64,
}

/// Samples of one run from `t0` towards `t1`, in integration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub derivatives: Vec<DVector<f64>>,
    pub blowup: Option<BlowUp>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Hooks on the state; `monitor` is the norm watched for blow-up.
pub(crate) struct Problem<'a, F> {
    pub rhs: F,
    pub monitor: &'a dyn Fn(&DVector<f64>) -> f64,
    pub project: Projection<'a>,
}

/// Optional in-place correction applied after every accepted step.
pub(crate) type Projection<'a> = Option<&'a dyn Fn(&mut DVector<f64>)>;

const FIT_WINDOW: usize = 10;

/// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Least-squares fit of `1/|y| = a + b t`; the zero of the line is `t*`.
fn fit_escape_time(window: &VecDeque<(f64, f64)>, direction: f64) -> Option<f64> {
    if window.len() < 3 {
        return None;
    }
    let m = window.len() as f64;
    let (st, sr) = window.iter().fold((0.0, 0.0), |(a, b), (t, n)| (a + t, b + 1.0 / n));
    let (tm, rm) = (st / m, sr / m);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, n) in window {
        sxy += (t - tm) * (1.0 / n - rm);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    // 1/|y| must shrink in the direction of integration
    let along = slope * direction;
    if along.is_nan() || along >= 0.0 {
        return None;
    }
    let t_star = tm - rm / slope;
    t_star.is_finite().then_some(t_star)
}

pub(crate) fn integrate<F>(
    problem: &mut Problem<'_, F>,
    y0: &DVector<f64>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Solution>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.clone();
    let mut f = (problem.rhs)(t, &y)?;
    if !finite(&f) {
        return Err(Error::NonFiniteState { time: t });
    }
    let mut sol = Solution {
        times: vec![t],
        states: vec![y.clone()],
        derivatives: vec![f.clone()],
        blowup: None,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    if t0 == t1 {
        return Ok(sol);
    }
    let mut window: VecDeque<(f64, f64)> = VecDeque::with_capacity(FIT_WINDOW + 1);
    window.push_back((t, (problem.monitor)(&y)));

    let next_output = |t: f64| -> f64 {
        match cfg.output_step {
            Some(dt) => {
                let k = ((t - t0) * dir / dt + 1e-9).floor() + 1.0;
                let target = t0 + dir * k * dt;
                // merge a grid point sitting within round-off of the end
                if (target - t1) * dir > -1e-9 * dt {
                    t1
                } else {
                    target
                }
            }
            None => t1,
        }
    };
    let mut target = next_output(t);
    let mut h = cfg.initial_step.min((t1 - t0).abs()) * dir;
    let mut steps = 0usize;

    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::TooManySteps { max_steps: cfg.max_steps, last_good_time: t });
        }
        let clamped = (target - t) * dir <= h * dir;
        let h_try = if clamped { target - t } else { h };

        let (mut y_new, f_new, accept, factor) = match cfg.method {
            Method::Rk4 => {
                let k1 = f.clone();
                let k2 = (problem.rhs)(t + 0.5 * h_try, &(&y + &k1 * (0.5 * h_try)));
                let step = k2.and_then(|k2| {
                    let k3 = (problem.rhs)(t + 0.5 * h_try, &(&y + &k2 * (0.5 * h_try)))?;
                    let k4 = (problem.rhs)(t + h_try, &(&y + &k3 * h_try))?;
                    Ok(&y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h_try / 6.0))
                });
                match step {
                    Ok(yn) if finite(&yn) => (yn, None, true, 1.0),
                    Ok(_) | Err(Error::NonFiniteExpression { .. }) | Err(Error::ZeroVector) => {
                        return finish_blowup(sol, window, dir, t, (problem.monitor)(&y), cfg)
                    }
                    Err(e) => return Err(e),
                }
            }
            Method::Rk45 => {
                let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
                k.push(f.clone());
                let mut failed = false;
                for s in 1..7 {
                    let mut ys = y.clone();
                    for (j, kj) in k.iter().enumerate() {
                        if A[s][j] != 0.0 {
                            ys += kj * (A[s][j] * h_try);
                        }
                    }
                    match (problem.rhs)(t + C[s] * h_try, &ys) {
                        Ok(ks) if finite(&ks) => k.push(ks),
                        Ok(_) | Err(Error::NonFiniteExpression { .. }) | Err(Error::ZeroVector) => {
                            failed = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if failed {
                    (y.clone(), None, false, 0.2)
                } else {
                    let mut yn = y.clone();
                    let mut err = DVector::zeros(y.len());
                    for s in 0..7 {
                        if s < 6 && A[6][s] != 0.0 {
                            yn += &k[s] * (A[6][s] * h_try);
                        }
                        if E[s] != 0.0 {
                            err += &k[s] * (E[s] * h_try);
                        }
                    }
                    let mut ratio: f64 = 0.0;
                    for i in 0..y.len() {
                        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(yn[i].abs());
                        ratio = ratio.max(err[i].abs() / sc);
                    }
                    if !ratio.is_finite() || !finite(&yn) {
                        (y.clone(), None, false, 0.2)
                    } else {
                        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                        let fsal = k.pop();
                        (yn, fsal, ratio <= 1.0, factor)
                    }
                }
            }
        };

        if !accept {
            sol.rejected_steps += 1;
            h = h_try * factor;
            if h.abs() < 1e-12 * t.abs().max(1.0) {
                let m = (problem.monitor)(&y);
                return finish_blowup(sol, window, dir, t, m, cfg);
            }
            continue;
        }

        if let Some(project) = problem.project {
            project(&mut y_new);
        }
        let t_new = if clamped { target } else { t + h_try };
        let f_next = match (f_new, problem.project.is_some()) {
            (Some(fs), false) => fs,
            _ => match (problem.rhs)(t_new, &y_new) {
                Ok(fs) if finite(&fs) => fs,
                Ok(_) | Err(Error::NonFiniteExpression { .. }) | Err(Error::ZeroVector) => {
                    return finish_blowup(sol, window, dir, t, (problem.monitor)(&y), cfg);
                }
                Err(e) => return Err(e),
            },
        };
        t = t_new;
        y = y_new;
        f = f_next;
        sol.accepted_steps += 1;
        let m = (problem.monitor)(&y);
        window.push_back((t, m));
        if window.len() > FIT_WINDOW {
            window.pop_front();
        }

        let on_grid = cfg.output_step.is_none() || clamped;
        if on_grid {
            sol.times.push(t);
            sol.states.push(y.clone());
            sol.derivatives.push(f.clone());
            if clamped {
                target = next_output(t);
            }
        }
        if m > cfg.blowup_norm_cap {
            if !on_grid {
                sol.times.push(t);
                sol.states.push(y.clone());
                sol.derivatives.push(f.clone());
            }
            return finish_blowup(sol, window, dir, t, m, cfg);
        }
        if cfg.method == Method::Rk45 {
            let grown = h_try * factor;
            // a clamped step says nothing about the natural step size
            h = if clamped && factor >= 1.0 { h.abs().max(grown.abs()) * dir } else { grown };
            if h.abs() < 1e-12 * t.abs().max(1.0) {
                return finish_blowup(sol, window, dir, t, m, cfg);
            }
        }
    }
    Ok(sol)
}

/// Classifies a stalled run: growth that extrapolates to a finite escape
/// time is a blow-up, anything else is a step underflow.
fn finish_blowup(
    mut sol: Solution,
    window: VecDeque<(f64, f64)>,
    dir: f64,
    t: f64,
    norm: f64,
    cfg: &IntegratorConfig,
) -> Result<Solution> {
    let first = window.front().map(|w| w.1).unwrap_or(norm);
    let growing = norm > cfg.blowup_norm_cap || norm > 2.0 * first;
    match fit_escape_time(&window, dir) {
        Some(t_star) if growing => {
            // never report an escape time behind the last accepted step
            let t_star = if (t_star - t) * dir < 0.0 { t } else { t_star };
            sol.blowup = Some(BlowUp { time_estimate: t_star, last_time: t, direction: dir });
            Ok(sol)
        }
        _ => Err(Error::StepUnderflow { last_good_time: t }),
    }
}
