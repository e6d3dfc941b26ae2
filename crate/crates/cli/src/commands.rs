use lispray::curvature::curvature_reports;
use lispray::geodesic::{completeness_probe, geodesic, verify_geodesic_ode, RayOutcome};
use lispray::surface::{eta_zeros, landsberg_diagnostic, scan_indicatrix, EtaZeros};
use serde_json::{json, Value};

use crate::config::{RunConfig, SurfaceMode};
use crate::error::CliError;
use crate::manifest::Check;
use crate::output::{matrix_rows, record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Curvature,
    Geodesic,
    Flow,
    Surface,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Curvature => "curvature",
            Command::Geodesic => "geodesic",
            Command::Flow => "flow",
            Command::Surface => "surface",
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<Value>,
    pub checks: Vec<Check>,
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Validate => validate(cfg),
        Command::Curvature => curvature(cfg),
        Command::Geodesic => run_geodesic(cfg),
        Command::Flow => flow(cfg),
        Command::Surface => surface(cfg),
    }
}

fn validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let a = cfg.algebra.validate();
    out.records.push(record(
        "algebra",
        json!({
            "name": cfg.algebra.name(),
            "dim": cfg.algebra.dim(),
            "antisymmetry_residual": a.antisymmetry_residual,
            "jacobi_residual": a.jacobi_residual,
            "unimodular": a.unimodular,
            "trace_form": a.trace_form,
            "rep_residual": a.rep_residual,
            "center_dim": a.center_dim,
            "warnings": a.warnings,
        }),
    ));
    out.checks.push(Check::flag("algebra_valid", a.is_valid()));
    if let Some(norm) = &cfg.norm {
        let c = norm.validate_convexity();
        out.records.push(record(
            "norm",
            json!({
                "samples": c.samples,
                "min_value": c.min_value,
                "min_eigenvalue": c.min_eigenvalue,
                "homogeneity_error": c.homogeneity_error,
                "witness": c.witness.as_ref().map(|w| w.as_slice().to_vec()),
                "failure": c.failure,
            }),
        ));
        out.checks.push(Check::flag("norm_strongly_convex", c.is_strongly_convex()));
    }
    let s = cfg.spray.validate()?;
    out.records.push(record(
        "spray",
        json!({
            "homogeneity_error": s.homogeneity_error,
            "tangency_residual": s.tangency_residual,
        }),
    ));
    out.checks.push(Check::below("eta_homogeneity", s.homogeneity_error, 1e-5));
    if let Some(t) = s.tangency_residual {
        out.checks.push(Check::below("eta_tangency", t, 1e-8));
    }
    Ok(out)
}

fn curvature(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let reports = curvature_reports(&cfg.spray, &cfg.curvature_points)?;
    let (mut ds, mut dr): (f64, f64) = (0.0, 0.0);
    let mut bi_invariant: Option<f64> = None;
    for r in &reports {
        ds = ds.max(r.s_oracle_delta);
        dr = dr.max(r.r_oracle_delta);
        let ad_delta = if cfg.spray.is_zero() {
            let ad = cfg.algebra.ad_matrix(&r.y)?;
            let d = (&r.r_matrix + &ad * &ad * 0.25).amax();
            bi_invariant = Some(bi_invariant.unwrap_or(0.0).max(d));
            Some(d)
        } else {
            None
        };
        out.records.push(record(
            "curvature",
            json!({
                "y": r.y.as_slice(),
                "s": r.s,
                "r_matrix": matrix_rows(&r.r_matrix),
                "s_oracle_delta": r.s_oracle_delta,
                "r_oracle_delta": r.r_oracle_delta,
                "ricci_scalar": r.ricci_scalar,
                "r_y_y_norm": r.r_y_y_norm,
                "lowered_asymmetry": r.lowered_asymmetry,
                "ad_square_delta": ad_delta,
                "eigenvalues": r.eigenvalues.iter().map(|(re, im)| [*re, *im]).collect::<Vec<_>>(),
            }),
        ));
    }
    out.records.push(record(
        "curvature_summary",
        json!({
            "samples": reports.len(),
            "max_s_oracle_delta": ds,
            "max_r_oracle_delta": dr,
            "max_ad_square_delta": bi_invariant,
        }),
    ));
    if let Some(d) = bi_invariant {
        // zero spray: R = -ad(y)^2 / 4
        out.checks.push(Check::below("ad_square_oracle", d, 1e-12));
    }
    out.checks.push(Check::below("s_oracle_agreement", ds, 1e-6));
    out.checks.push(Check::below("r_oracle_agreement", dr, 1e-5));
    Ok(out)
}

fn blowup_json(b: &lispray::ode::BlowUp) -> Value {
    json!({ "time_estimate": b.time_estimate, "last_time": b.last_time, "direction": b.direction })
}

fn run_geodesic(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let y0 = cfg.y0.as_ref().ok_or_else(|| CliError::Semantic {
        path: "geodesic.y0".into(),
        message: "required by the geodesic command".into(),
    })?;
    let trace = geodesic(&cfg.spray, y0, cfg.g0.as_ref(), &cfg.integrator)?;
    let mut out = Outcome::default();
    for (k, t) in trace.times.iter().enumerate() {
        let y = &trace.y_values[k];
        let f = match &cfg.norm {
            Some(n) => Some(n.eval(y)?),
            None => None,
        };
        out.records.push(record(
            "sample",
            json!({
                "t": t,
                "y": y.as_slice(),
                "c": trace.c_values.as_ref().map(|cs| matrix_rows(&cs[k])),
                "F": f,
            }),
        ));
    }
    let residuals = match (&trace.c_values, trace.times.len()) {
        (Some(_), n) if n >= 7 => Some(verify_geodesic_ode(&trace, &cfg.spray)?),
        _ => None,
    };
    out.records.push(record(
        "geodesic_summary",
        json!({
            "samples": trace.times.len(),
            "speed_drift": trace.speed_drift,
            "pullback_residual": trace.pullback_residual,
            "blowup": trace.blowup.as_ref().map(blowup_json),
            "eta_residual": residuals.map(|r| r.eta_residual),
            "differencing_error": residuals.map(|r| r.differencing_error),
            "differencing_dominated": residuals.map(|r| r.differencing_dominated),
        }),
    ));
    if let (Some(d), None) = (trace.speed_drift, &trace.blowup) {
        out.checks.push(Check::below("norm_conservation", d, 1e-7));
    }
    if let (Some(r), None) = (residuals, &trace.blowup) {
        out.checks.push(Check::below("eta_residual", r.eta_residual, 1e-5));
        out.checks.push(Check::below("pullback_residual", r.pullback_residual, 1e-5));
        out.checks.push(Check::flag("grid_resolves_residuals", !r.differencing_dominated));
    }
    Ok(out)
}

fn outcome_json(o: &RayOutcome) -> Value {
    match o {
        RayOutcome::ReachedHorizon => json!({ "outcome": "horizon" }),
        RayOutcome::BlowUp { time_estimate } => json!({ "outcome": "blowup", "time_estimate": time_estimate }),
        RayOutcome::Failed(msg) => json!({ "outcome": "failed", "message": msg }),
    }
}

fn flow(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rep = completeness_probe(&cfg.spray, &cfg.flow_directions, cfg.flow_horizon, &cfg.integrator);
    let mut out = Outcome::default();
    let mut blowups = Vec::new();
    let mut failures = 0usize;
    for ray in &rep.rays {
        for o in [&ray.forward, &ray.backward] {
            match o {
                RayOutcome::BlowUp { time_estimate } => blowups.push(*time_estimate),
                RayOutcome::Failed(_) => failures += 1,
                RayOutcome::ReachedHorizon => {}
            }
        }
        out.records.push(record(
            "ray",
            json!({
                "direction": ray.direction.as_slice(),
                "forward": outcome_json(&ray.forward),
                "backward": outcome_json(&ray.backward),
            }),
        ));
    }
    let mean = (!blowups.is_empty()).then(|| blowups.iter().sum::<f64>() / blowups.len() as f64);
    out.records.push(record(
        "completeness",
        json!({
            "horizon": rep.horizon,
            "rays": rep.rays.len(),
            "forward_complete": rep.forward_complete,
            "backward_complete": rep.backward_complete,
            "blowups": blowups.len(),
            "mean_blowup_time": mean,
            "min_blowup_time": blowups.iter().copied().reduce(f64::min),
            "max_blowup_time": blowups.iter().copied().reduce(f64::max),
            "failures": failures,
        }),
    ));
    out.checks.push(Check::flag("no_failed_rays", failures == 0));
    if cfg.spray.norm().is_some() {
        // left-invariant Finsler metrics are complete
        out.checks.push(Check::flag("metric_complete", rep.forward_complete && rep.backward_complete));
    }
    Ok(out)
}

fn surface(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let norm = cfg.norm.as_ref().ok_or_else(|| CliError::Semantic {
        path: "norm".into(),
        message: "the surface command needs a [norm] section".into(),
    })?;
    let scan = scan_indicatrix(&cfg.algebra, norm, cfg.surface.resolution)?;
    let mut out = Outcome::default();
    let mut identity_gap: f64 = 0.0;
    for k in 0..scan.angles.len() {
        identity_gap = identity_gap.max((scan.cartan_scalar[k] - scan.mean_cartan[k]).abs());
        out.records.push(record(
            "scan",
            json!({
                "theta": scan.angles[k],
                "y": scan.points[k].as_slice(),
                "F": norm.eval(&scan.points[k])?,
                "eta_tangential": scan.eta_tangential[k],
                "cartan_scalar": scan.cartan_scalar[k],
                "mean_cartan": scan.mean_cartan[k],
            }),
        ));
    }
    let zeros = eta_zeros(&scan)?;
    match &zeros {
        EtaZeros::IdenticallyZero => out.records.push(record("eta_zeros", json!({ "identically_zero": true }))),
        EtaZeros::Roots(roots) => {
            for z in roots {
                out.records.push(record(
                    "eta_zero",
                    json!({
                        "theta": z.theta,
                        "y": z.point.as_slice(),
                        "characterization_residual": z.characterization_residual,
                    }),
                ));
            }
        }
    }
    out.checks.push(Check::below("indicatrix", scan.max_indicatrix_error, 1e-10));
    out.checks.push(Check::below("unit_normal", scan.max_frame_error, 1e-8));
    out.checks.push(Check::below("mean_cartan_identity", identity_gap, 1e-5));
    out.checks.push(Check::flag("zero_count_even", zeros.roots().len() % 2 == 0));

    if cfg.surface_mode == SurfaceMode::Full {
        let rep = landsberg_diagnostic(&cfg.algebra, norm, &cfg.surface)?;
        let mut drift: f64 = 0.0;
        let mut frame: f64 = 0.0;
        let arcs: Vec<Value> = rep
            .arcs
            .iter()
            .map(|a| {
                drift = drift.max(a.max_indicatrix_error);
                frame = frame.max(a.max_frame_error);
                json!({
                    "mean": a.mean,
                    "max_deviation": a.max_deviation,
                    "samples": a.times.len(),
                    "end_speeds": [a.end_speeds.0, a.end_speeds.1],
                })
            })
            .collect();
        out.records.push(record(
            "landsberg",
            json!({
                "landsberg_consistent": rep.landsberg_consistent,
                "riemannian": rep.riemannian,
                "locally_minkowskian": rep.locally_minkowskian,
                "max_deviation": rep.max_deviation,
                "max_cartan": rep.max_cartan,
                "tolerance": cfg.surface.tolerance,
                "arcs": arcs,
            }),
        ));
        out.checks.push(Check::below("flow_on_indicatrix", drift, 1e-7));
        out.checks.push(Check::below("flow_unit_normal", frame, 1e-7));
    }
    Ok(out)
}
