//! Scenario files: JSON schemas and their conversion into library types.

use std::path::{Path, PathBuf};

use lz_setkit::afd::{sequence_set, AfdLimits, FaultModelSet};
use lz_setkit::estimator::DescriptorModel;
use lz_setkit::linalg::{Mat, Vector};
use lz_setkit::reduction::ReductionLimits;
use lz_setkit::sets::{lz_from_strip, lz_realspace, lz_zonotope, LineZonotope, Strip};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

type Rows = Vec<Vec<f64>>;

/// What a scenario file asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Estimate,
    Afd,
    SetsDemo,
}

impl Kind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "estimate" => Some(Kind::Estimate),
            "afd" | "afd-design" | "afd-verify" => Some(Kind::Afd),
            "sets-demo" => Some(Kind::SetsDemo),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Estimate => "estimate",
            Kind::Afd => "afd",
            Kind::SetsDemo => "sets-demo",
        }
    }
}

#[derive(Debug)]
pub struct ScenarioFile {
    pub kind: Kind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Directory of the scenario file; relative paths inside it resolve against this.
    pub base: PathBuf,
    pub payload: Value,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("schema error: {e}")))?;
        let obj = value.as_object_mut().ok_or_else(|| CliError::Input("schema error: top level must be an object".into()))?;
        let kind = match obj.remove("kind") {
            Some(Value::String(s)) => Kind::parse(&s).ok_or_else(|| CliError::Input(format!("schema error: unknown kind `{s}`")))?,
            Some(_) => return Err(CliError::Input("schema error: `kind` must be a string".into())),
            None => return Err(CliError::Input("schema error: missing field `kind`".into())),
        };
        let seed = match obj.remove("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| CliError::Input("schema error: `seed` must be a non-negative integer".into()))?,
        };
        let out = match obj.remove("out") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::Input("schema error: `out` must be a string".into())),
        };
        Ok(Self {
            kind,
            seed,
            out,
            base,
            payload: value,
        })
    }

    pub fn expect(&self, kind: Kind) -> Result<(), CliError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(CliError::Input(format!(
                "scenario kind `{}` cannot be run by this command (expected `{}`)",
                self.kind.name(),
                kind.name()
            )))
        }
    }

    pub fn payload<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        T::deserialize(&self.payload).map_err(|e| CliError::Input(format!("schema error: {e}")))
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(format!("schema error: {}", msg.into()))
}

fn finite(xs: &[f64], what: &str) -> Result<(), CliError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(bad(format!("{what} has non-finite entries")))
    }
}

/// Row-major nested arrays to a matrix. An empty list is a `0 × cols_if_empty` matrix.
pub fn matrix(rows: &[Vec<f64>], what: &str, cols_if_empty: usize) -> Result<Mat, CliError> {
    let Some(first) = rows.first() else {
        return Ok(Mat::zeros(0, cols_if_empty));
    };
    let cols = first.len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(bad(format!("{what}: rows have different lengths")));
    }
    for r in rows {
        finite(r, what)?;
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// A matrix that must have `expect` rows; an empty list means `expect × 0`.
fn tall(rows: &[Vec<f64>], what: &str, expect: usize) -> Result<Mat, CliError> {
    if rows.is_empty() {
        return Ok(Mat::zeros(expect, 0));
    }
    let m = matrix(rows, what, 0)?;
    if m.nrows() != expect {
        return Err(bad(format!("{what}: expected {expect} rows, found {}", m.nrows())));
    }
    Ok(m)
}

pub fn vector(xs: &[f64], what: &str) -> Result<Vector, CliError> {
    finite(xs, what)?;
    Ok(Vector::from_column_slice(xs))
}

/// A set written in one of the accepted forms.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// `{c + Gξ : ‖ξ‖∞ ≤ 1}` with `generators` given row by row.
    Zonotope { generators: Rows, center: Vec<f64> },
    /// Axis-aligned box.
    Box { center: Vec<f64>, radius: Vec<f64> },
    Point { at: Vec<f64> },
    Realspace { dim: usize },
    /// `{x : |normalᵀx - offset| ≤ half_width}`.
    Strip { normal: Vec<f64>, offset: f64, half_width: f64 },
    /// Full line zonotope. Omitted blocks are empty.
    Lz {
        #[serde(default)]
        lines: Rows,
        #[serde(default)]
        generators: Rows,
        center: Vec<f64>,
        #[serde(default)]
        line_constraints: Rows,
        #[serde(default)]
        generator_constraints: Rows,
        #[serde(default)]
        rhs: Vec<f64>,
    },
}

impl SetSpec {
    pub fn build(&self, what: &str) -> Result<LineZonotope, CliError> {
        let lib = |e: lz_setkit::Error| bad(format!("{what}: {e}"));
        match self {
            SetSpec::Zonotope { generators, center } => {
                let c = vector(center, what)?;
                lz_zonotope(tall(generators, what, c.len())?, c).map_err(lib)
            }
            SetSpec::Box { center, radius } => {
                if center.len() != radius.len() {
                    return Err(bad(format!("{what}: center and radius lengths differ")));
                }
                if radius.iter().any(|r| *r < 0.0) {
                    return Err(bad(format!("{what}: negative box radius")));
                }
                lz_zonotope(Mat::from_diagonal(&vector(radius, what)?), vector(center, what)?).map_err(lib)
            }
            SetSpec::Point { at } => lz_zonotope(Mat::zeros(at.len(), 0), vector(at, what)?).map_err(lib),
            SetSpec::Realspace { dim } => lz_realspace(*dim).map_err(lib),
            SetSpec::Strip { normal, offset, half_width } => {
                finite(&[*offset, *half_width], what)?;
                Ok(lz_from_strip(&Strip::new(vector(normal, what)?, *offset, *half_width).map_err(lib)?))
            }
            SetSpec::Lz {
                lines,
                generators,
                center,
                line_constraints,
                generator_constraints,
                rhs,
            } => {
                let c = vector(center, what)?;
                let m = tall(lines, what, c.len())?;
                let g = tall(generators, what, c.len())?;
                let b = vector(rhs, what)?;
                let block = |rows: &Rows, cols: usize, name: &str| -> Result<Mat, CliError> {
                    if rows.is_empty() {
                        Ok(Mat::zeros(b.len(), cols))
                    } else {
                        matrix(rows, &format!("{what}.{name}"), cols)
                    }
                };
                let s = block(line_constraints, m.ncols(), "line_constraints")?;
                let a = block(generator_constraints, g.ncols(), "generator_constraints")?;
                LineZonotope::new(m, g, c, s, a, b).map_err(lib)
            }
        }
    }
}

/// `E x_k = A x_{k-1} + B u_{k-1} + Bw w_{k-1}`, `y_k = C x_k + D u_k + Dv v_k`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "E")]
    pub e: Rows,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "Bw")]
    pub bw: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "D", default)]
    pub d: Option<Rows>,
    #[serde(rename = "Dv")]
    pub dv: Rows,
}

impl ModelSpec {
    pub fn build(&self, what: &str) -> Result<DescriptorModel, CliError> {
        let e = matrix(&self.e, &format!("{what}.E"), 0)?;
        let n = e.nrows();
        let a = matrix(&self.a, &format!("{what}.A"), 0)?;
        let b = tall(&self.b, &format!("{what}.B"), n)?;
        let bw = tall(&self.bw, &format!("{what}.Bw"), n)?;
        let c = matrix(&self.c, &format!("{what}.C"), n)?;
        let ny = c.nrows();
        let d = match &self.d {
            Some(rows) => matrix(rows, &format!("{what}.D"), b.ncols())?,
            None => Mat::zeros(ny, b.ncols()),
        };
        let dv = tall(&self.dv, &format!("{what}.Dv"), ny)?;
        DescriptorModel::new(e, a, b, bw, c, d, dv).map_err(|err| bad(format!("{what}: {err}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    pub generators: usize,
    pub constraints: usize,
    #[serde(default)]
    pub compress_lines: bool,
}

impl LimitsSpec {
    pub fn build(&self) -> ReductionLimits {
        ReductionLimits::new(self.generators, self.constraints, self.compress_lines)
    }
}

/// Payload of an `estimate` scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub model: ModelSpec,
    /// Sampled input sequence `u_0, …, u_K`; its length sets the number of steps.
    pub inputs: Rows,
    /// Measured outputs. When absent they are simulated from `true_initial_state`.
    #[serde(default)]
    pub outputs: Option<Rows>,
    #[serde(default)]
    pub true_initial_state: Option<Vec<f64>>,
    pub x0: SetSpec,
    pub w: SetSpec,
    pub v: SetSpec,
    pub limits: LimitsSpec,
    /// Bounded-set baseline: its own initial set and the admissible state set.
    #[serde(default)]
    pub baseline: Option<BaselineSpec>,
    /// Methods run when `--method` is not given. Defaults to `lz`, plus `cz` when a
    /// baseline is present.
    #[serde(default)]
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub x0: SetSpec,
    pub admissible: SetSpec,
}

/// Payload of an `afd` scenario (shared by design and verification).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfdSpec {
    pub models: Vec<ModelSpec>,
    pub x0: SetSpec,
    pub w: SetSpec,
    pub v: SetSpec,
    /// Admissible inputs of a single step; the sequence set is its `N + 1`-fold product.
    pub input_step_set: SetSpec,
    pub u0: Vec<f64>,
    pub horizon: usize,
    pub epsilon: f64,
    /// Reference input per step; defaults to `u0` at every step.
    #[serde(default)]
    pub reference: Option<Rows>,
    /// Diagonal of the cost weight, one entry per stacked input; defaults to ones.
    #[serde(default)]
    pub cost_weights: Option<Vec<f64>>,
    pub limits: AfdLimitsSpec,
    /// Admissible state set for the bounded-set baseline design.
    #[serde(default)]
    pub baseline_admissible: Option<SetSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfdLimitsSpec {
    pub generator_factor: f64,
    #[serde(default)]
    pub max_constraints: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_line_box")]
    pub line_box: f64,
    /// Inputs to check. When empty, the input designed with `--method` is checked.
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            line_box: default_line_box(),
            inputs: Vec::new(),
        }
    }
}

fn default_samples() -> usize {
    500
}

fn default_line_box() -> f64 {
    10.0
}

/// One input sequence for verification: given per step, read from a `u.json`, the
/// reference input, or designed on the spot.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub name: String,
    #[serde(default)]
    pub steps: Option<Rows>,
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub reference: bool,
    #[serde(default)]
    pub design: Option<String>,
}

impl AfdSpec {
    pub fn build(&self) -> Result<FaultModelSet, CliError> {
        if self.models.is_empty() {
            return Err(bad("models: at least one model is required"));
        }
        let models = self
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| m.build(&format!("models[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let steps = self.horizon + 1;
        let u0 = vector(&self.u0, "u0")?;
        let nu = u0.len();
        let step_set = self.input_step_set.build("input_step_set")?;
        if step_set.dim() != nu {
            return Err(bad(format!("input_step_set: dimension {} does not match u0 ({nu})", step_set.dim())));
        }
        let input_set = sequence_set(&step_set, steps).map_err(|e| bad(format!("input_step_set: {e}")))?;
        let reference = match &self.reference {
            Some(rows) => stack_steps(rows, nu, steps, "reference")?,
            None => Vector::from_fn(nu * steps, |i, _| u0[i % nu]),
        };
        let cost_weights = match &self.cost_weights {
            Some(w) if w.len() == nu * steps => vector(w, "cost_weights")?,
            Some(w) => return Err(bad(format!("cost_weights: expected {} entries, found {}", nu * steps, w.len()))),
            None => Vector::from_element(nu * steps, 1.0),
        };
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(bad("epsilon must be positive"));
        }
        let f = FaultModelSet {
            models,
            x0: self.x0.build("x0")?,
            w: self.w.build("w")?,
            v: self.v.build("v")?,
            input_set,
            u0,
            horizon: self.horizon,
            epsilon: self.epsilon,
            reference,
            cost_weights,
            limits: AfdLimits {
                generator_factor: self.limits.generator_factor,
                max_constraints: self.limits.max_constraints,
            },
        };
        f.validate().map_err(|e| bad(e.to_string()))?;
        Ok(f)
    }
}

/// Per-step rows flattened into one stacked vector of `steps × width` entries.
pub fn stack_steps(rows: &[Vec<f64>], width: usize, steps: usize, what: &str) -> Result<Vector, CliError> {
    if rows.len() != steps {
        return Err(bad(format!("{what}: expected {steps} steps, found {}", rows.len())));
    }
    if rows.iter().any(|r| r.len() != width) {
        return Err(bad(format!("{what}: every step must have {width} entries")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    vector(&flat, what)
}

/// Payload of a `sets-demo` scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSpec {
    pub demos: Vec<Demo>,
    #[serde(default = "default_demo_samples")]
    pub samples: usize,
    #[serde(default = "default_demo_line_box")]
    pub line_box: f64,
}

fn default_demo_samples() -> usize {
    400
}

fn default_demo_line_box() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Demo {
    /// `Z ∩_R Y`; `map` defaults to the identity.
    Intersection {
        name: String,
        z: SetSpec,
        y: SetSpec,
        #[serde(default)]
        map: Option<Rows>,
    },
    MinkowskiSum { name: String, z: SetSpec, y: SetSpec },
    LinearMap { name: String, z: SetSpec, map: Rows },
    /// Feasible sets `S_0, …, S_{steps-1}` of an autonomous descriptor model from `x0`.
    FeasibleSets {
        name: String,
        model: ModelSpec,
        x0: SetSpec,
        steps: usize,
    },
}

impl Demo {
    pub fn name(&self) -> &str {
        match self {
            Demo::Intersection { name, .. }
            | Demo::MinkowskiSum { name, .. }
            | Demo::LinearMap { name, .. }
            | Demo::FeasibleSets { name, .. } => name,
        }
    }
}

/// Names end up in file names, so they are restricted to a safe alphabet.
pub fn check_name(name: &str) -> Result<(), CliError> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(bad(format!("name `{name}` must be non-empty and use only letters, digits, `_` and `-`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(json: &str) -> Result<LineZonotope, CliError> {
        serde_json::from_str::<SetSpec>(json).map_err(|e| CliError::Input(e.to_string()))?.build("set")
    }

    #[test]
    fn omitted_blocks_are_empty() {
        let z = set(r#"{"lz": {"lines": [[1], [0]], "center": [0, 1]}}"#).unwrap();
        assert_eq!((z.dim(), z.num_lines(), z.num_generators(), z.num_constraints()), (2, 1, 0, 0));
        let p = set(r#"{"point": {"at": [1, 2, 3]}}"#).unwrap();
        assert_eq!((p.dim(), p.num_generators()), (3, 0));
    }

    #[test]
    fn malformed_sets_are_rejected() {
        assert!(set(r#"{"box": {"center": [0, 0], "radius": [1]}}"#).is_err());
        assert!(set(r#"{"zonotope": {"generators": [[1, 0]], "center": [0, 0]}}"#).is_err());
        assert!(set(r#"{"ellipsoid": {"center": [0]}}"#).is_err());
        assert!(set(r#"{"lz": {"lines": [[1]], "center": [0], "rhs": [1], "line_constraints": [[1, 2]]}}"#).is_err());
    }

    #[test]
    fn scenario_header_fields() {
        let sc = ScenarioFile::parse(r#"{"kind": "afd-verify", "seed": 9, "out": "x"}"#, PathBuf::new()).unwrap();
        assert_eq!((sc.kind, sc.seed, sc.out), (Kind::Afd, 9, Some(PathBuf::from("x"))));
        assert!(ScenarioFile::parse(r#"{"seed": 1}"#, PathBuf::new()).is_err());
        assert!(ScenarioFile::parse(r#"{"kind": "estimate", "seed": -1}"#, PathBuf::new()).is_err());
    }
}
