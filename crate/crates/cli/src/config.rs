//! Run configuration: TOML in, validated run parameters out.
//!
//! ```toml
//! seed = 7
//!
//! [algebra]
//! builtin = "aff1"          # or `file = "alg.toml"`, or inline name/dim/constants/rep
//!
//! [norm]
//! kind = "randers"          # euclidean | quadratic | randers | expr
//! Q = [[1.0, 0.0], [0.0, 1.0]]
//! b = [0.3, 0.0]
//!
//! [spray]
//! source = "metric"         # metric | closed_form | zero
//!
//! [geodesic]
//! y0 = [1.0, 1.0]
//! t_span = [0.0, 5.0]
//! ```

use std::path::{Path, PathBuf};

use lispray::lie_algebra::file as algebra_file;
use lispray::minkowski::DerivativeMode;
use lispray::ode::{IntegratorConfig, Method};
use lispray::sampling;
use lispray::surface::SurfaceConfig;
use lispray::{AlgebraVector, Builtin, LieAlgebra, MinkowskiNorm, SprayField};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0;

/// Upper bound on sample, direction and resolution counts.
pub const MAX_COUNT: usize = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub algebra: Option<toml::Table>,
    pub norm: Option<NormSection>,
    pub spray: Option<SpraySection>,
    pub integrator: Option<IntegratorSection>,
    pub curvature: Option<CurvatureSection>,
    pub geodesic: Option<GeodesicSection>,
    pub flow: Option<FlowSection>,
    pub surface: Option<SurfaceSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    pub kind: Option<String>,
    #[serde(rename = "Q")]
    pub q: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub expr: Option<String>,
    pub derivatives: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpraySection {
    pub source: Option<String>,
    pub eta: Option<Vec<String>>,
    pub derivatives: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Option<String>,
    pub initial_step: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub blowup_norm_cap: Option<f64>,
    pub output_step: Option<f64>,
    pub max_steps: Option<usize>,
    pub orthonormalize: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSection {
    pub samples: Option<usize>,
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSection {
    pub y0: Option<Vec<f64>>,
    /// `"identity"` or a square matrix as rows.
    pub g0: Option<toml::Value>,
    pub t_span: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    /// A direction count, or explicit directions.
    pub directions: Option<toml::Value>,
    pub horizon: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub resolution: Option<usize>,
    pub mode: Option<String>,
    pub horizon: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceMode {
    Scan,
    Full,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The input with defaults filled, echoed into the manifest.
    pub resolved: RawConfig,
    pub seed: u64,
    pub algebra: LieAlgebra,
    pub norm: Option<MinkowskiNorm>,
    pub spray: SprayField,
    pub integrator: IntegratorConfig,
    pub curvature_points: Vec<AlgebraVector>,
    pub y0: Option<AlgebraVector>,
    pub g0: Option<DMatrix<f64>>,
    pub flow_directions: Vec<AlgebraVector>,
    pub flow_horizon: f64,
    pub surface: SurfaceConfig,
    pub surface_mode: SurfaceMode,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algebra: Option<String>,
    pub y0: Option<Vec<f64>>,
    pub t_span: Option<Vec<f64>>,
    pub method: Option<String>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub output_step: Option<f64>,
    pub samples: Option<usize>,
    pub directions: Option<usize>,
    pub horizon: Option<f64>,
    pub resolution: Option<usize>,
    pub mode: Option<String>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawConfig) {
        if let Some(s) = self.seed {
            raw.seed = Some(s);
        }
        if let Some(a) = &self.algebra {
            let mut t = toml::Table::new();
            t.insert("builtin".into(), toml::Value::String(a.clone()));
            raw.algebra = Some(t);
        }
        let integ = raw.integrator.get_or_insert_with(Default::default);
        set(&mut integ.method, self.method.clone());
        set(&mut integ.abs_tol, self.abs_tol);
        set(&mut integ.rel_tol, self.rel_tol);
        set(&mut integ.output_step, self.output_step);
        let geo = raw.geodesic.get_or_insert_with(Default::default);
        set(&mut geo.y0, self.y0.clone());
        set(&mut geo.t_span, self.t_span.clone());
        set(&mut raw.curvature.get_or_insert_with(Default::default).samples, self.samples);
        let flow = raw.flow.get_or_insert_with(Default::default);
        if let Some(n) = self.directions {
            flow.directions = Some(toml::Value::Integer(n as i64));
        }
        set(&mut flow.horizon, self.horizon);
        let surf = raw.surface.get_or_insert_with(Default::default);
        set(&mut surf.resolution, self.resolution);
        set(&mut surf.mode, self.mode.clone());
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn semantic(path: &str, message: impl Into<String>) -> CliError {
    CliError::Semantic { path: path.to_string(), message: message.into() }
}

fn bounded(n: usize, path: &str) -> Result<usize, CliError> {
    if n > MAX_COUNT {
        return Err(semantic(path, format!("{n} exceeds the maximum of {MAX_COUNT}")));
    }
    Ok(n)
}

/// Parses TOML text; syntax errors carry line and column, unknown keys name
/// the key.
pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column, message) = algebra_file::describe_toml_error(text, &e);
        CliError::Parse { line, column, message }
    })
}

/// Parses and validates a config. Relative file references resolve against
/// `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, CliError> {
    resolve(parse_raw(text)?, base_dir)
}

fn vector(xs: &[f64], dim: usize, path: &str) -> Result<AlgebraVector, CliError> {
    if xs.len() != dim {
        return Err(semantic(path, format!("expected {dim} components, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(semantic(path, "components must be finite"));
    }
    Ok(AlgebraVector::from_column_slice(xs))
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(semantic(path, "expected a nonempty square matrix given as rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn positive(x: f64, path: &str) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(semantic(path, format!("must be positive, got {x}")))
    }
}

fn derivative_mode(s: &Option<String>, path: &str) -> Result<DerivativeMode, CliError> {
    match s.as_deref() {
        None | Some("analytic") => Ok(DerivativeMode::Analytic),
        Some("finite_difference") => Ok(DerivativeMode::FiniteDifference),
        Some(other) => Err(semantic(path, format!("unknown mode `{other}` (analytic | finite_difference)"))),
    }
}

fn load_algebra(table: &toml::Table, base_dir: &Path) -> Result<(LieAlgebra, PathBuf), CliError> {
    let only = |key: &str| -> Result<(), CliError> {
        match table.keys().find(|k| k.as_str() != key) {
            Some(k) => Err(semantic(&format!("algebra.{k}"), format!("not allowed together with `{key}`"))),
            None => Ok(()),
        }
    };
    if let Some(v) = table.get("builtin") {
        only("builtin")?;
        let name = v.as_str().ok_or_else(|| semantic("algebra.builtin", "must be a string"))?;
        let b: Builtin = name.parse().map_err(|e: lispray::Error| semantic("algebra.builtin", e.to_string()))?;
        return Ok((b.algebra(), PathBuf::new()));
    }
    if let Some(v) = table.get("file") {
        only("file")?;
        let rel = v.as_str().ok_or_else(|| semantic("algebra.file", "must be a string"))?;
        let path = base_dir.join(rel);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| semantic("algebra.file", format!("cannot read {}: {e}", path.display())))?;
        let alg = algebra_file::parse(&text).map_err(|e| semantic("algebra.file", e.to_string()))?;
        return Ok((alg, path));
    }
    let alg = algebra_file::from_table(table, "algebra").map_err(|e| semantic("algebra", e.to_string()))?;
    Ok((alg, PathBuf::new()))
}

fn build_norm(sec: &NormSection, dim: usize) -> Result<MinkowskiNorm, CliError> {
    let mode = derivative_mode(&sec.derivatives, "norm.derivatives")?;
    fn core(path: &'static str) -> impl Fn(lispray::Error) -> CliError {
        move |e| semantic(path, e.to_string())
    }
    let q = match &sec.q {
        Some(rows) => {
            let q = matrix(rows, "norm.Q")?;
            if q.nrows() != dim {
                return Err(semantic("norm.Q", format!("expected {dim}x{dim}, got {0}x{0}", q.nrows())));
            }
            q
        }
        None => DMatrix::identity(dim, dim),
    };
    let kind = sec.kind.as_deref().unwrap_or("euclidean");
    let unused = |key: &str, present: bool| -> Result<(), CliError> {
        if present {
            Err(semantic(&format!("norm.{key}"), format!("not used by kind `{kind}`")))
        } else {
            Ok(())
        }
    };
    let norm = match kind {
        "euclidean" => {
            unused("Q", sec.q.is_some())?;
            unused("b", sec.b.is_some())?;
            unused("expr", sec.expr.is_some())?;
            MinkowskiNorm::euclidean(dim)
        }
        "quadratic" => {
            unused("b", sec.b.is_some())?;
            unused("expr", sec.expr.is_some())?;
            MinkowskiNorm::quadratic(q).map_err(core("norm.Q"))?
        }
        "randers" => {
            unused("expr", sec.expr.is_some())?;
            let b = sec.b.as_ref().ok_or_else(|| semantic("norm.b", "required for kind `randers`"))?;
            MinkowskiNorm::randers(q, vector(b, dim, "norm.b")?).map_err(core("norm"))?
        }
        "expr" => {
            unused("Q", sec.q.is_some())?;
            unused("b", sec.b.is_some())?;
            let src = sec.expr.as_ref().ok_or_else(|| semantic("norm.expr", "required for kind `expr`"))?;
            MinkowskiNorm::user(src, dim).map_err(core("norm.expr"))?
        }
        other => {
            return Err(semantic(
                "norm.kind",
                format!("unknown kind `{other}` (euclidean | quadratic | randers | expr)"),
            ))
        }
    };
    let norm = norm.with_mode(mode);
    norm.ensure_strongly_convex().map_err(core("norm"))?;
    Ok(norm)
}

fn directions_from(value: &toml::Value, dim: usize, radius: f64, seed: u64) -> Result<Vec<AlgebraVector>, CliError> {
    let path = "flow.directions";
    match value {
        toml::Value::Integer(n) if *n > 0 => {
            let n = bounded(usize::try_from(*n).unwrap_or(usize::MAX), path)?;
            let dirs = if dim == 2 {
                sampling::circle_directions(n)
            } else {
                let mut rng = sampling::rng(seed);
                (0..n).map(|_| sampling::unit_vector(&mut rng, dim)).collect()
            };
            Ok(dirs.into_iter().map(|d| d * radius).collect())
        }
        toml::Value::Array(items) => {
            if items.is_empty() {
                return Err(semantic(path, "must not be empty"));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let p = format!("{path}[{i}]");
                    let xs: Vec<f64> =
                        item.clone().try_into().map_err(|_| semantic(&p, "must be an array of numbers"))?;
                    let v = vector(&xs, dim, &p)?;
                    if v.norm() == 0.0 {
                        return Err(semantic(&p, "must be nonzero"));
                    }
                    Ok(v)
                })
                .collect()
        }
        _ => Err(semantic(path, "must be a positive count or a list of vectors")),
    }
}

fn g0_from(value: &toml::Value, size: Option<usize>) -> Result<Option<DMatrix<f64>>, CliError> {
    let path = "geodesic.g0";
    if value.as_str() == Some("identity") {
        return Ok(None);
    }
    let rows: Vec<Vec<f64>> = value
        .clone()
        .try_into()
        .map_err(|_| semantic(path, "must be \"identity\" or a square matrix given as rows"))?;
    let g = matrix(&rows, path)?;
    match size {
        None => Err(semantic(path, "the algebra has no matrix representation")),
        Some(m) if m != g.nrows() => Err(semantic(path, format!("expected {m}x{m} to match the representation"))),
        Some(_) => Ok(Some(g)),
    }
}

/// Validates and fills defaults.
pub fn resolve(mut raw: RawConfig, base_dir: &Path) -> Result<RunConfig, CliError> {
    let seed = raw.seed.unwrap_or(DEFAULT_SEED);
    raw.seed = Some(seed);
    let table = raw.algebra.as_ref().ok_or_else(|| semantic("algebra", "missing; give [algebra] or --algebra"))?;
    let (algebra, _) = load_algebra(table, base_dir)?;
    let dim = algebra.dim();

    let norm = match &raw.norm {
        Some(sec) => Some(build_norm(sec, dim)?),
        None => None,
    };
    if let Some(sec) = raw.norm.as_mut() {
        sec.kind.get_or_insert_with(|| "euclidean".into());
        sec.derivatives.get_or_insert_with(|| "analytic".into());
    }

    let spray_sec = raw.spray.get_or_insert_with(Default::default);
    let source = spray_sec.source.get_or_insert_with(|| if norm.is_some() { "metric" } else { "zero" }.into()).clone();
    let spray = match source.as_str() {
        "metric" => {
            let norm = norm.clone().ok_or_else(|| semantic("spray.source", "`metric` needs a [norm] section"))?;
            if spray_sec.eta.is_some() {
                return Err(semantic("spray.eta", "only used with source `closed_form`"));
            }
            SprayField::metric(algebra.clone(), norm).map_err(|e| semantic("spray", e.to_string()))?
        }
        "closed_form" => {
            let eta = spray_sec.eta.as_ref().ok_or_else(|| semantic("spray.eta", "required for `closed_form`"))?;
            let mode = derivative_mode(&spray_sec.derivatives, "spray.derivatives")?;
            SprayField::closed_form(algebra.clone(), eta)
                .map_err(|e| semantic("spray.eta", e.to_string()))?
                .with_mode(mode)
        }
        "zero" => {
            if spray_sec.eta.is_some() {
                return Err(semantic("spray.eta", "only used with source `closed_form`"));
            }
            SprayField::zero(algebra.clone())
        }
        other => {
            return Err(semantic("spray.source", format!("unknown source `{other}` (metric | closed_form | zero)")))
        }
    };

    let defaults = IntegratorConfig::default();
    let is = raw.integrator.get_or_insert_with(Default::default);
    let method: Method = is
        .method
        .get_or_insert_with(|| defaults.method.to_string())
        .parse()
        .map_err(|e: lispray::Error| semantic("integrator.method", e.to_string()))?;
    let initial_step = positive(*is.initial_step.get_or_insert(defaults.initial_step), "integrator.initial_step")?;
    let abs_tol = positive(*is.abs_tol.get_or_insert(defaults.abs_tol), "integrator.abs_tol")?;
    let rel_tol = positive(*is.rel_tol.get_or_insert(defaults.rel_tol), "integrator.rel_tol")?;
    let cap = positive(*is.blowup_norm_cap.get_or_insert(defaults.blowup_norm_cap), "integrator.blowup_norm_cap")?;
    // fine enough that five-point differencing of the trace stays below
    // the residual limit
    let output_step = positive(*is.output_step.get_or_insert(0.01), "integrator.output_step")?;
    let max_steps = *is.max_steps.get_or_insert(defaults.max_steps);
    if max_steps == 0 {
        return Err(semantic("integrator.max_steps", "must be positive"));
    }
    let orthonormalize = *is.orthonormalize.get_or_insert(false);

    let geo = raw.geodesic.get_or_insert_with(Default::default);
    let span = geo.t_span.get_or_insert_with(|| vec![0.0, 1.0]).clone();
    let t_span = match span[..] {
        [a, b] if a.is_finite() && b.is_finite() && a <= 0.0 && b >= 0.0 && a < b => (a, b),
        _ => return Err(semantic("geodesic.t_span", "must be [a, b] with a <= 0 <= b and a < b")),
    };
    let y0 = match &geo.y0 {
        Some(xs) => {
            let v = vector(xs, dim, "geodesic.y0")?;
            if v.norm() == 0.0 {
                return Err(semantic("geodesic.y0", "must be nonzero"));
            }
            Some(v)
        }
        None => None,
    };
    let g0_value = geo.g0.get_or_insert_with(|| toml::Value::String("identity".into())).clone();
    let g0 = g0_from(&g0_value, algebra.rep().map(|r| r.size()))?;

    let integrator = IntegratorConfig {
        method,
        initial_step,
        abs_tol,
        rel_tol,
        t_span,
        blowup_norm_cap: cap,
        max_steps,
        output_step: Some(output_step),
        orthonormalize,
    };
    integrator.validate().map_err(|e| semantic("integrator", e.to_string()))?;

    let cs = raw.curvature.get_or_insert_with(Default::default);
    let curvature_points = match &cs.points {
        Some(points) => {
            if cs.samples.is_some() {
                return Err(semantic("curvature.samples", "not allowed together with `points`"));
            }
            points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let path = format!("curvature.points[{i}]");
                    let v = vector(p, dim, &path)?;
                    if v.norm() == 0.0 {
                        return Err(semantic(&path, "must be nonzero"));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let n = *cs.samples.get_or_insert(10);
            if n == 0 {
                return Err(semantic("curvature.samples", "must be positive"));
            }
            let n = bounded(n, "curvature.samples")?;
            let mut rng = sampling::rng(seed);
            (0..n).map(|_| sampling::box_vector(&mut rng, dim, 0.1)).collect()
        }
    };

    let fs = raw.flow.get_or_insert_with(Default::default);
    let flow_horizon = positive(*fs.horizon.get_or_insert(50.0), "flow.horizon")?;
    let radius = positive(*fs.radius.get_or_insert(1.0), "flow.radius")?;
    let dirs = fs.directions.get_or_insert(toml::Value::Integer(16)).clone();
    let flow_directions = directions_from(&dirs, dim, radius, seed)?;

    let ss = raw.surface.get_or_insert_with(Default::default);
    let sdef = SurfaceConfig::default();
    let resolution = *ss.resolution.get_or_insert(sdef.resolution);
    if resolution < 3 {
        return Err(semantic("surface.resolution", "must be at least 3"));
    }
    bounded(resolution, "surface.resolution")?;
    let surface_mode = match ss.mode.get_or_insert_with(|| "full".into()).as_str() {
        "scan" => SurfaceMode::Scan,
        "full" => SurfaceMode::Full,
        other => return Err(semantic("surface.mode", format!("unknown mode `{other}` (scan | full)"))),
    };
    let surface = SurfaceConfig {
        resolution,
        horizon: positive(*ss.horizon.get_or_insert(sdef.horizon), "surface.horizon")?,
        tolerance: positive(*ss.tolerance.get_or_insert(sdef.tolerance), "surface.tolerance")?,
        integrator: IntegratorConfig { output_step: sdef.integrator.output_step, ..integrator.clone() },
    };

    Ok(RunConfig {
        resolved: raw,
        seed,
        algebra,
        norm,
        spray,
        integrator,
        curvature_points,
        y0,
        g0,
        flow_directions,
        flow_horizon,
        surface,
        surface_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse("[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"euclidean\"\n").unwrap();
        assert_eq!(cfg.integrator.method, Method::Rk45);
        assert_eq!(cfg.integrator.abs_tol, 1e-10);
        assert_eq!(cfg.integrator.rel_tol, 1e-8);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert!(cfg.spray.norm().is_some());
        assert_eq!(cfg.resolved.spray.as_ref().unwrap().source.as_deref(), Some("metric"));
        assert_eq!(cfg.curvature_points.len(), 10);
        assert_eq!(cfg.flow_directions.len(), 16);
    }

    #[test]
    fn non_convex_randers_is_a_semantic_error() {
        let err = parse("[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"randers\"\nb = [1.2, 0.0]\n").unwrap_err();
        assert!(matches!(&err, CliError::Semantic { path, .. } if path == "norm"), "{err:?}");
        assert!(err.to_string().contains("norm not strongly convex"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("[algebra]\nbuiltin = \"aff1\"\n[sprey]\nsource = \"zero\"\n").unwrap_err();
        match err {
            CliError::Parse { line, message, .. } => {
                assert!(message.contains("sprey"), "{message}");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        let err = parse("[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"euclidean\"\nbb = 1\n").unwrap_err();
        assert!(err.to_string().contains("bb"));
        let err = parse("[algebra]\nname = \"x\"\ndim = 1\nconstantz = []\n").unwrap_err();
        assert!(err.to_string().contains("algebra.constantz"), "{err}");
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("seed = 1\n[algebra\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn semantic_paths() {
        let cases = [
            ("[algebra]\nbuiltin = \"so5\"\n", "algebra.builtin"),
            ("[algebra]\nbuiltin = \"aff1\"\n[geodesic]\ny0 = [1.0]\n", "geodesic.y0"),
            ("[algebra]\nbuiltin = \"aff1\"\n[geodesic]\nt_span = [1.0, 2.0]\n", "geodesic.t_span"),
            ("[algebra]\nbuiltin = \"aff1\"\n[integrator]\nabs_tol = -1.0\n", "integrator.abs_tol"),
            ("[algebra]\nbuiltin = \"aff1\"\n[spray]\nsource = \"metric\"\n", "spray.source"),
            ("[algebra]\nbuiltin = \"aff1\"\n[surface]\nmode = \"partial\"\n", "surface.mode"),
            ("[algebra]\nbuiltin = \"aff1\"\nfile = \"x.toml\"\n", "algebra.file"),
            ("[algebra]\nfile = \"does-not-exist.toml\"\n", "algebra.file"),
            ("[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"euclidean\"\nb = [0.1, 0.0]\n", "norm.b"),
            ("seed = 3\n", "algebra"),
        ];
        for (text, want) in cases {
            match parse(text) {
                Err(CliError::Semantic { path, .. }) => assert_eq!(path, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn closed_form_and_inline_algebra() {
        let cfg = parse(
            "[algebra]\nname = \"r2\"\ndim = 2\nconstants = []\n\
             [spray]\nsource = \"closed_form\"\neta = [\"-sqrt(u1^2+u2^2)*u1\", \"-sqrt(u1^2+u2^2)*u2\"]\n\
             [flow]\ndirections = [[1.0, 0.0], [0, 2]]\n",
        )
        .unwrap();
        assert_eq!(cfg.algebra.name(), "r2");
        assert_eq!(cfg.flow_directions[1], AlgebraVector::from_column_slice(&[0.0, 2.0]));
    }

    #[test]
    fn overrides_replace_keys() {
        let mut raw = parse_raw("[algebra]\nbuiltin = \"aff1\"\n[geodesic]\ny0 = [1.0, 0.0]\n").unwrap();
        Overrides { algebra: Some("su2".into()), y0: Some(vec![1.0, 2.0, 3.0]), seed: Some(9), ..Default::default() }
            .apply(&mut raw);
        let cfg = resolve(raw, Path::new(".")).unwrap();
        assert_eq!(cfg.algebra.name(), "su2");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.y0.unwrap().len(), 3);
    }

    #[test]
    fn g0_matrix() {
        let cfg = parse("[algebra]\nbuiltin = \"aff1\"\n[geodesic]\ng0 = [[2.0, 0.0], [0.0, 1.0]]\n").unwrap();
        assert_eq!(cfg.g0.unwrap()[(0, 0)], 2.0);
        let err = parse("[algebra]\nbuiltin = \"aff1\"\n[geodesic]\ng0 = [[1.0]]\n").unwrap_err();
        assert!(matches!(err, CliError::Semantic { path, .. } if path == "geodesic.g0"));
    }
}
