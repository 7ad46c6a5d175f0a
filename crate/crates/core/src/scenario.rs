//! Scenario files: a JSON schema describing a base manifold chart, a
//! connection, two-form data, and a list of verification checks, plus the
//! runner that executes those checks and assembles a machine-readable report.
//!
//! A scenario is compiled in two stages: [`ScenarioFile`] is the raw
//! deserialized JSON, and [`compile_scenario`] validates it (array arities,
//! expression syntax, pointwise antisymmetry/symmetry, check names, derive
//! directives) into an executable [`Scenario`]. Structural problems are
//! reported as [`ScenarioError`] with the JSON path of the offending field;
//! runtime evaluation problems surface as [`EvalError`] with the sample point
//! and expression that failed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{EvalError, ScalarField};
use crate::expr::{parse_field, VarScheme};
use crate::geometry::{
    levi_civita, one_form_derivative_tensor, Connection, CovariantTwoTensor, TwoForm,
};
use crate::lift::{lift_two_form, LiftSpec};
use crate::verify::{
    run_brackets, run_closedness, run_codazzi, run_dlambda, run_lagrangian, run_nondegeneracy,
    run_prop1, run_prop2, run_zero_section, ResidualReport, SamplePlan, ToleranceOverrides,
    Verdict,
};

/// Default number of sample points per check.
pub const DEFAULT_SAMPLES: usize = 50;
/// Default sampling seed.
pub const DEFAULT_SEED: u64 = 42;

/// Tolerance used when validating that a user-supplied full matrix is
/// pointwise antisymmetric (or symmetric, for a metric), relative to the
/// largest entry at the probe point.
const STRUCTURE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Raw file schema
// ---------------------------------------------------------------------------

/// The raw JSON shape of a scenario file.
///
/// All tensor entries are expression strings in the base coordinates
/// `x1..xd`. Two-forms accept either a full `d×d` matrix (validated to be
/// pointwise antisymmetric) or ragged strict-upper-triangle rows (row `i`
/// holding the entries above the diagonal of row `i`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Base dimension `d`.
    pub dim: usize,
    /// Chart box, one `[lo, hi]` pair per base coordinate.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    /// Connection coefficients `gamma[i][j][k]`; absent means flat.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<Vec<String>>>>,
    /// Fibre two-form; absent means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<Vec<Vec<String>>>,
    /// Base two-form; absent means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<Vec<Vec<String>>>,
    /// Interpolation tensor (full `d×d`); absent means none supplied.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<String>>>,
    /// Metric tensor (full `d×d`, pointwise symmetric), used by `derive`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<String>>>,
    /// One-form components, used by `derive`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<String>>,
    /// Derivation directives: `levi_civita` builds the metric connection
    /// from `g`; `nabla_alpha` builds the interpolation tensor as the
    /// covariant derivative of `alpha`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derive: Vec<String>,
    /// Names of the checks to run (nonempty).
    pub checks: Vec<String>,
    /// Sample points per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Sampling seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Per-report tolerance overrides keyed by report name (a check name or
    /// `check/sub`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tol: BTreeMap<String, f64>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A problem found while parsing or validating a scenario file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    /// The file is not valid JSON for the schema.
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// A field violates the schema (wrong arity, unknown name, bad range).
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    /// An expression string failed to parse.
    #[error("expression error at `{path}`: {message}")]
    Expr { path: String, message: String },
    /// Evaluation failed while validating the scenario's tensors.
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// One verification check that a scenario may request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    /// Codazzi-type residual of the interpolation tensor.
    Codazzi,
    /// Structure conditions equivalent to closedness of the full lift.
    Prop1,
    /// Equivalent characterizations of the pure interpolation lift.
    Prop2,
    /// Closedness identities of the lifted two-form on split frames.
    Closedness,
    /// Nondegeneracy of the assembled block matrix.
    Nondegeneracy,
    /// Bracket identities of lifted vector fields.
    Brackets,
    /// Derivative formulas of the primitive one-form.
    Dlambda,
    /// Isotropy of the pushed horizontal distribution.
    Lagrangian,
    /// Zero-section agreement with the structured candidate form.
    ZeroSection,
}

impl Check {
    /// Every check, in canonical order.
    pub const ALL: [Check; 9] = [
        Check::Codazzi,
        Check::Prop1,
        Check::Prop2,
        Check::Closedness,
        Check::Nondegeneracy,
        Check::Brackets,
        Check::Dlambda,
        Check::Lagrangian,
        Check::ZeroSection,
    ];

    /// The name used in scenario files and report output.
    pub fn name(self) -> &'static str {
        match self {
            Check::Codazzi => "codazzi",
            Check::Prop1 => "prop1",
            Check::Prop2 => "prop2",
            Check::Closedness => "closedness",
            Check::Nondegeneracy => "nondegeneracy",
            Check::Brackets => "brackets",
            Check::Dlambda => "dlambda",
            Check::Lagrangian => "lagrangian",
            Check::ZeroSection => "zero_section",
        }
    }

    /// Parses a check name.
    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.iter().copied().find(|c| c.name() == name)
    }

    fn requires_interpolation_tensor(self) -> bool {
        matches!(self, Check::Codazzi | Check::Prop2 | Check::Lagrangian)
    }
}

// ---------------------------------------------------------------------------
// Compiled scenario
// ---------------------------------------------------------------------------

/// A validated, executable scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    /// Base dimension.
    pub dim: usize,
    /// Chart box.
    pub bounds: Vec<(f64, f64)>,
    /// Sample points per check.
    pub samples: usize,
    /// Sampling seed.
    pub seed: u64,
    /// Checks to run, in file order (duplicates removed).
    pub checks: Vec<Check>,
    /// Tolerance overrides.
    pub tols: ToleranceOverrides,
    /// Connection (explicit, derived, or flat).
    pub conn: Connection,
    /// Fibre two-form.
    pub omega0: TwoForm,
    /// Base two-form.
    pub omega1: TwoForm,
    /// Interpolation tensor, if supplied or derived.
    pub a: Option<CovariantTwoTensor>,
}

impl Scenario {
    /// The lift data `(∇, ω₀, ω₁, A)`, with a zero tensor when no
    /// interpolation tensor was supplied.
    pub fn lift_spec(&self) -> LiftSpec {
        let a = self
            .a
            .clone()
            .unwrap_or_else(|| CovariantTwoTensor::zero(self.dim));
        LiftSpec::new(
            self.conn.clone(),
            self.omega0.clone(),
            self.omega1.clone(),
            a,
        )
    }

    fn interpolation_tensor(&self) -> &CovariantTwoTensor {
        self.a
            .as_ref()
            .expect("validated: checks requiring the interpolation tensor reject scenarios without one")
    }
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario(json_text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(json_text)?;
    compile_scenario(&file)
}

/// Validates a raw scenario file into an executable scenario.
pub fn compile_scenario(file: &ScenarioFile) -> Result<Scenario, ScenarioError> {
    let dim = file.dim;
    if dim == 0 {
        return Err(schema_err("dim", "dimension must be at least 1"));
    }

    if file.bounds.len() != dim {
        return Err(schema_err(
            "box",
            format!(
                "expected {dim} coordinate ranges, got {}",
                file.bounds.len()
            ),
        ));
    }
    let mut bounds = Vec::with_capacity(dim);
    for (i, pair) in file.bounds.iter().enumerate() {
        let [lo, hi] = *pair;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(schema_err(
                format!("box[{i}]"),
                format!("expected finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        bounds.push((lo, hi));
    }

    if file.samples == 0 {
        return Err(schema_err("samples", "must be at least 1"));
    }

    // Deterministic probe points inside the box for pointwise structural
    // validation of full matrices.
    let probes = probe_points(&bounds);

    let explicit_gamma = match &file.gamma {
        Some(rows) => Some(parse_gamma(rows, dim)?),
        None => None,
    };
    let omega0 = match &file.omega0 {
        Some(rows) => parse_two_form(rows, dim, "omega0", &probes)?,
        None => TwoForm::zero(dim),
    };
    let omega1 = match &file.omega1 {
        Some(rows) => parse_two_form(rows, dim, "omega1", &probes)?,
        None => TwoForm::zero(dim),
    };
    let explicit_a = match &file.a {
        Some(rows) => Some(parse_square_matrix(rows, dim, "A")?),
        None => None,
    };
    let g = match &file.g {
        Some(rows) => {
            let fields = parse_square_matrix(rows, dim, "g")?;
            validate_symmetric(&fields, dim, "g", &probes)?;
            Some(fields)
        }
        None => None,
    };
    let alpha = match &file.alpha {
        Some(entries) => {
            if entries.len() != dim {
                return Err(schema_err(
                    "alpha",
                    format!("expected {dim} components, got {}", entries.len()),
                ));
            }
            let mut fields = Vec::with_capacity(dim);
            for (i, src) in entries.iter().enumerate() {
                fields.push(parse_entry(src, dim, &format!("alpha[{i}]"))?);
            }
            Some(fields)
        }
        None => None,
    };

    // Derive directives. The connection is resolved first so that a derived
    // interpolation tensor differentiates with respect to it.
    let mut derive_lc = false;
    let mut derive_na = false;
    for (i, directive) in file.derive.iter().enumerate() {
        match directive.as_str() {
            "levi_civita" if derive_lc => {
                return Err(schema_err(format!("derive[{i}]"), "duplicate directive"));
            }
            "nabla_alpha" if derive_na => {
                return Err(schema_err(format!("derive[{i}]"), "duplicate directive"));
            }
            "levi_civita" => derive_lc = true,
            "nabla_alpha" => derive_na = true,
            other => {
                return Err(schema_err(
                    format!("derive[{i}]"),
                    format!(
                        "unknown directive `{other}` (expected `levi_civita` or `nabla_alpha`)"
                    ),
                ));
            }
        }
    }

    let conn = if derive_lc {
        if explicit_gamma.is_some() {
            return Err(schema_err(
                "derive",
                "`levi_civita` conflicts with an explicit `gamma`",
            ));
        }
        let g_fields = g.as_ref().ok_or_else(|| {
            schema_err("derive", "`levi_civita` requires a metric tensor `g`")
        })?;
        levi_civita(&CovariantTwoTensor::new(dim, g_fields.clone()))
    } else {
        match explicit_gamma {
            Some(fields) => Connection::new(dim, fields),
            None => Connection::flat(dim),
        }
    };

    let a = if derive_na {
        if explicit_a.is_some() {
            return Err(schema_err(
                "derive",
                "`nabla_alpha` conflicts with an explicit `A`",
            ));
        }
        let alpha_fields = alpha.as_ref().ok_or_else(|| {
            schema_err("derive", "`nabla_alpha` requires a one-form `alpha`")
        })?;
        Some(one_form_derivative_tensor(&conn, alpha_fields))
    } else {
        explicit_a.map(|fields| CovariantTwoTensor::new(dim, fields))
    };

    if file.checks.is_empty() {
        return Err(schema_err("checks", "at least one check is required"));
    }
    let mut checks = Vec::new();
    for (i, name) in file.checks.iter().enumerate() {
        let check = Check::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
            schema_err(
                format!("checks[{i}]"),
                format!("unknown check `{name}` (known: {})", known.join(", ")),
            )
        })?;
        if check.requires_interpolation_tensor() && a.is_none() {
            return Err(schema_err(
                format!("checks[{i}]"),
                format!(
                    "check `{name}` requires an interpolation tensor: \
                     provide `A` or derive it with `nabla_alpha`"
                ),
            ));
        }
        if !checks.contains(&check) {
            checks.push(check);
        }
    }

    let mut tols = ToleranceOverrides::default();
    for (key, &value) in &file.tol {
        let prefix = key.split('/').next().unwrap_or(key);
        if Check::from_name(prefix).is_none() {
            return Err(schema_err(
                format!("tol.{key}"),
                format!("`{prefix}` is not a check name"),
            ));
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(schema_err(
                format!("tol.{key}"),
                format!("tolerance must be a finite positive number, got {value}"),
            ));
        }
        tols.insert(key, value);
    }

    Ok(Scenario {
        dim,
        bounds,
        samples: file.samples,
        seed: file.seed,
        checks,
        tols,
        conn,
        omega0,
        omega1,
        a,
    })
}

// ---------------------------------------------------------------------------
// Field parsing helpers
// ---------------------------------------------------------------------------

fn parse_entry(src: &str, dim: usize, path: &str) -> Result<ScalarField, ScenarioError> {
    let scheme = VarScheme::Base { dim };
    parse_field(src, &scheme).map_err(|e| ScenarioError::Expr {
        path: path.to_string(),
        message: format!("in `{src}`: {e}"),
    })
}

fn parse_gamma(rows: &[Vec<Vec<String>>], dim: usize) -> Result<Vec<ScalarField>, ScenarioError> {
    if rows.len() != dim {
        return Err(schema_err(
            "gamma",
            format!("expected {dim} outer rows, got {}", rows.len()),
        ));
    }
    let mut fields = Vec::with_capacity(dim * dim * dim);
    for (i, plane) in rows.iter().enumerate() {
        if plane.len() != dim {
            return Err(schema_err(
                format!("gamma[{i}]"),
                format!("expected {dim} rows, got {}", plane.len()),
            ));
        }
        for (j, row) in plane.iter().enumerate() {
            if row.len() != dim {
                return Err(schema_err(
                    format!("gamma[{i}][{j}]"),
                    format!("expected {dim} entries, got {}", row.len()),
                ));
            }
            for (k, src) in row.iter().enumerate() {
                fields.push(parse_entry(src, dim, &format!("gamma[{i}][{j}][{k}]"))?);
            }
        }
    }
    Ok(fields)
}

fn parse_square_matrix(
    rows: &[Vec<String>],
    dim: usize,
    name: &str,
) -> Result<Vec<ScalarField>, ScenarioError> {
    if rows.len() != dim {
        return Err(schema_err(
            name,
            format!("expected a {dim}x{dim} matrix, got {} rows", rows.len()),
        ));
    }
    let mut fields = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(schema_err(
                format!("{name}[{i}]"),
                format!("expected {dim} entries, got {}", row.len()),
            ));
        }
        for (j, src) in row.iter().enumerate() {
            fields.push(parse_entry(src, dim, &format!("{name}[{i}][{j}]"))?);
        }
    }
    Ok(fields)
}

/// Accepts a two-form either as a full `d×d` matrix (validated pointwise
/// antisymmetric) or as ragged strict-upper-triangle rows.
fn parse_two_form(
    rows: &[Vec<String>],
    dim: usize,
    name: &str,
    probes: &[Vec<f64>],
) -> Result<TwoForm, ScenarioError> {
    let is_full = rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if is_full {
        let fields = parse_square_matrix(rows, dim, name)?;
        validate_antisymmetric(&fields, dim, name, probes)?;
        let mut upper = Vec::with_capacity(dim * (dim - 1) / 2);
        for i in 0..dim {
            for j in (i + 1)..dim {
                upper.push(fields[i * dim + j].clone());
            }
        }
        return Ok(TwoForm::from_upper(dim, upper));
    }

    // Ragged strict-upper rows: row `i` holds the entries above the diagonal
    // of row `i`; the final empty row may be omitted.
    let expected_rows = dim - 1;
    if rows.len() != expected_rows && rows.len() != dim {
        return Err(schema_err(
            name,
            format!(
                "expected a full {dim}x{dim} matrix or {expected_rows} strict-upper rows, \
                 got {} rows",
                rows.len()
            ),
        ));
    }
    let mut upper = Vec::with_capacity(dim * (dim - 1) / 2);
    for (i, row) in rows.iter().enumerate() {
        let expected = dim - 1 - i;
        if row.len() != expected {
            return Err(schema_err(
                format!("{name}[{i}]"),
                format!(
                    "expected {expected} strict-upper entries in row {i}, got {}",
                    row.len()
                ),
            ));
        }
        for (offset, src) in row.iter().enumerate() {
            let j = i + 1 + offset;
            upper.push(parse_entry(src, dim, &format!("{name}[{i}][{j}]"))?);
        }
    }
    Ok(TwoForm::from_upper(dim, upper))
}

/// Deterministic interior probe points used for structural validation.
fn probe_points(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut points = Vec::with_capacity(7);
    points.push(
        bounds
            .iter()
            .map(|&(lo, hi)| 0.5 * (lo + hi))
            .collect::<Vec<f64>>(),
    );
    for _ in 0..6 {
        points.push(
            bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect(),
        );
    }
    points
}

fn eval_matrix_at(
    fields: &[ScalarField],
    dim: usize,
    x: &[f64],
) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let mut m = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = fields[i * dim + j]
                .eval_f64(x)
                .map_err(|e| EvalError::at_point(x, e))?;
        }
    }
    Ok(m)
}

fn validate_antisymmetric(
    fields: &[ScalarField],
    dim: usize,
    name: &str,
    probes: &[Vec<f64>],
) -> Result<(), ScenarioError> {
    for x in probes {
        let m = eval_matrix_at(fields, dim, x)?;
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        for i in 0..dim {
            for j in i..dim {
                if (m[i][j] + m[j][i]).abs() > STRUCTURE_TOL * (1.0 + scale) {
                    return Err(schema_err(
                        format!("{name}[{i}][{j}]"),
                        format!(
                            "matrix is not antisymmetric at point {x:?}: \
                             entry ({i},{j}) = {}, entry ({j},{i}) = {}",
                            m[i][j], m[j][i]
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn validate_symmetric(
    fields: &[ScalarField],
    dim: usize,
    name: &str,
    probes: &[Vec<f64>],
) -> Result<(), ScenarioError> {
    for x in probes {
        let m = eval_matrix_at(fields, dim, x)?;
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (m[i][j] - m[j][i]).abs() > STRUCTURE_TOL * (1.0 + scale) {
                    return Err(schema_err(
                        format!("{name}[{i}][{j}]"),
                        format!(
                            "matrix is not symmetric at point {x:?}: \
                             entry ({i},{j}) = {}, entry ({j},{i}) = {}",
                            m[i][j], m[j][i]
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// The result of running every check of a scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    /// The scenario label (file path or fixture name).
    pub scenario: String,
    /// The sampling seed that produced these results.
    pub seed: u64,
    /// One entry per emitted report, in check order.
    pub checks: Vec<ResidualReport>,
    /// Overall verdict: pass iff every report passed.
    pub verdict: Verdict,
}

impl RunReport {
    /// Whether every check passed.
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// The verdict of the report named `name`, if it was emitted.
    pub fn verdict_of(&self, name: &str) -> Option<Verdict> {
        self.checks
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.verdict)
    }

    /// Renders the report as human-readable text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "checks:");
        for check in &self.checks {
            let status = match check.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
            };
            let _ = writeln!(
                out,
                "  {status} {:<22} max_residual {:>12.5e}  tolerance {:.1e}",
                check.name, check.max_residual, check.tolerance
            );
            for offender in &check.offenders {
                let _ = writeln!(
                    out,
                    "       offender {:?} residual {:.5e}",
                    offender.point, offender.residual
                );
            }
        }
        let _ = writeln!(
            out,
            "verdict: {}",
            match self.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            }
        );
        out
    }
}

/// Runs every check of `scenario`, labelling the report with `label`
/// (typically the scenario file path or fixture name).
///
/// Evaluation failures (domain errors, singular matrices) abort the run and
/// surface as an [`EvalError`] annotated with the offending sample point.
pub fn run_scenario(scenario: &Scenario, label: &str) -> Result<RunReport, EvalError> {
    let plan = SamplePlan::new(scenario.seed, scenario.samples, scenario.bounds.clone());
    let tols = &scenario.tols;
    let mut reports: Vec<ResidualReport> = Vec::new();
    for &check in &scenario.checks {
        match check {
            Check::Codazzi => {
                reports.push(run_codazzi(
                    &scenario.conn,
                    scenario.interpolation_tensor(),
                    &plan,
                    tols,
                )?);
            }
            Check::Prop1 => {
                reports.extend(run_prop1(&scenario.lift_spec(), &plan, tols)?);
            }
            Check::Prop2 => {
                reports.extend(run_prop2(
                    &scenario.conn,
                    scenario.interpolation_tensor(),
                    &plan,
                    tols,
                )?);
            }
            Check::Closedness => {
                reports.extend(run_closedness(&scenario.lift_spec(), &plan, tols)?);
            }
            Check::Nondegeneracy => {
                reports.push(run_nondegeneracy(&scenario.lift_spec(), &plan, tols)?);
            }
            Check::Brackets => {
                reports.extend(run_brackets(&scenario.conn, &plan, tols)?);
            }
            Check::Dlambda => {
                reports.extend(run_dlambda(&scenario.omega0, &scenario.conn, &plan, tols)?);
            }
            Check::Lagrangian => {
                reports.push(run_lagrangian(
                    scenario.interpolation_tensor(),
                    &scenario.conn,
                    &plan,
                    tols,
                )?);
            }
            Check::ZeroSection => {
                let omega = lift_two_form(&scenario.lift_spec());
                reports.push(run_zero_section(&omega, &scenario.conn, &plan, tols)?);
            }
        }
    }
    let verdict = if reports.iter().all(ResidualReport::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(RunReport {
        scenario: label.to_string(),
        seed: scenario.seed,
        checks: reports,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(extra: &str) -> String {
        format!(
            r#"{{
                "dim": 2,
                "box": [[-1.0, 1.0], [-1.0, 1.0]],
                "checks": ["brackets"]{}{extra}
            }}"#,
            if extra.is_empty() { "" } else { "," }
        )
    }

    #[test]
    fn minimal_scenario_compiles_with_defaults() {
        let s = parse_scenario(&minimal_json("")).unwrap();
        assert_eq!(s.dim, 2);
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert_eq!(s.seed, DEFAULT_SEED);
        assert_eq!(s.checks, vec![Check::Brackets]);
        assert!(s.a.is_none());
        // Absent gamma means a flat connection.
        assert_eq!(s.conn.gamma(0, 0, 0).eval_f64(&[0.3, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = parse_scenario(&minimal_json(r#""bogus": 1"#)).unwrap_err();
        assert!(matches!(err, ScenarioError::Json(_)), "{err}");
    }

    #[test]
    fn gamma_arity_error_names_the_path() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "gamma": [[["0", "0"], ["0", "0"]], [["0", "0"]]],
            "checks": ["brackets"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        match err {
            ScenarioError::Schema { path, message } => {
                assert_eq!(path, "gamma[1]");
                assert!(message.contains("expected 2 rows"), "{message}");
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn unknown_identifier_is_an_expression_error_with_position() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "omega0": [["x9"]],
            "checks": ["closedness"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        match err {
            ScenarioError::Expr { path, message } => {
                assert_eq!(path, "omega0[0][1]");
                assert!(message.contains("x9"), "{message}");
            }
            other => panic!("expected expression error, got {other}"),
        }
    }

    #[test]
    fn full_matrix_two_form_must_be_antisymmetric() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "omega0": [["0", "x1"], ["x1", "0"]],
            "checks": ["closedness"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        match err {
            ScenarioError::Schema { path, message } => {
                assert_eq!(path, "omega0[0][1]");
                assert!(message.contains("not antisymmetric"), "{message}");
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn full_matrix_and_upper_rows_agree() {
        let full = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "omega0": [["0", "1 + x1"], ["-(1 + x1)", "0"]],
            "checks": ["closedness"]
        }"#;
        let upper = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "omega0": [["1 + x1"]],
            "checks": ["closedness"]
        }"#;
        let a = parse_scenario(full).unwrap();
        let b = parse_scenario(upper).unwrap();
        let x = [0.37, -0.21];
        let ma = a.omega0.eval_matrix(&x).unwrap();
        let mb = b.omega0.eval_matrix(&x).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma[0][1], 1.37);
    }

    #[test]
    fn metric_must_be_symmetric() {
        let json = r#"{
            "dim": 2,
            "box": [[1, 2], [-1, 1]],
            "g": [["1", "x1"], ["0", "x1^2"]],
            "derive": ["levi_civita"],
            "checks": ["brackets"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema { .. }), "{err}");
    }

    #[test]
    fn levi_civita_directive_builds_the_metric_connection() {
        let json = r#"{
            "dim": 2,
            "box": [[1, 2], [-1, 1]],
            "g": [["1", "0"], ["0", "x1^2"]],
            "derive": ["levi_civita"],
            "checks": ["brackets"]
        }"#;
        let s = parse_scenario(json).unwrap();
        let x = [1.4, 0.2];
        // For the polar-type metric diag(1, (x¹)²): Γ_{22}^1 = −x¹ and
        // Γ_{12}^2 = Γ_{21}^2 = 1/x¹.
        assert!((s.conn.gamma(1, 1, 0).eval_f64(&x).unwrap() + 1.4).abs() < 1e-12);
        assert!((s.conn.gamma(0, 1, 1).eval_f64(&x).unwrap() - 1.0 / 1.4).abs() < 1e-12);
        assert!((s.conn.gamma(1, 0, 1).eval_f64(&x).unwrap() - 1.0 / 1.4).abs() < 1e-12);
        assert_eq!(s.conn.gamma(0, 0, 0).eval_f64(&x).unwrap(), 0.0);
    }

    #[test]
    fn levi_civita_conflicts_with_explicit_gamma() {
        let json = r#"{
            "dim": 1,
            "box": [[1, 2]],
            "gamma": [[["0"]]],
            "g": [["1"]],
            "derive": ["levi_civita"],
            "checks": ["brackets"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema { .. }), "{err}");
    }

    #[test]
    fn nabla_alpha_directive_builds_the_interpolation_tensor() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "alpha": ["exp(x1)", "exp(2 * x2)"],
            "derive": ["nabla_alpha"],
            "checks": ["codazzi"]
        }"#;
        let s = parse_scenario(json).unwrap();
        let a = s.a.as_ref().unwrap();
        let x = [0.3, -0.4];
        // Flat connection: A_{ij} = ∂_j α_i.
        assert!((a.comp(0, 0).eval_f64(&x).unwrap() - 0.3f64.exp()).abs() < 1e-12);
        assert!((a.comp(1, 1).eval_f64(&x).unwrap() - 2.0 * (-0.8f64).exp()).abs() < 1e-12);
        assert_eq!(a.comp(0, 1).eval_f64(&x).unwrap(), 0.0);
        assert_eq!(a.comp(1, 0).eval_f64(&x).unwrap(), 0.0);
    }

    #[test]
    fn interpolation_checks_require_a_tensor() {
        for check in ["codazzi", "prop2", "lagrangian"] {
            let json = format!(
                r#"{{
                    "dim": 2,
                    "box": [[-1, 1], [-1, 1]],
                    "checks": ["{check}"]
                }}"#
            );
            let err = parse_scenario(&json).unwrap_err();
            match err {
                ScenarioError::Schema { path, message } => {
                    assert_eq!(path, "checks[0]");
                    assert!(message.contains(check), "{message}");
                }
                other => panic!("expected schema error, got {other}"),
            }
        }
    }

    #[test]
    fn unknown_check_name_is_rejected() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "checks": ["codazz"]
        }"#;
        let err = parse_scenario(json).unwrap_err();
        match err {
            ScenarioError::Schema { path, message } => {
                assert_eq!(path, "checks[0]");
                assert!(message.contains("unknown check"), "{message}");
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn tolerance_keys_must_target_known_checks() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "checks": ["brackets"],
            "tol": {"bracket/hh": 1e-6}
        }"#;
        let err = parse_scenario(json).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema { .. }), "{err}");
    }

    #[test]
    fn tolerance_override_applies_to_sub_reports() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "checks": ["brackets"],
            "samples": 5,
            "tol": {"brackets": 1e-3}
        }"#;
        let s = parse_scenario(json).unwrap();
        let report = run_scenario(&s, "inline").unwrap();
        assert!(report.passed());
        for check in &report.checks {
            assert_eq!(check.tolerance, 1e-3, "{}", check.name);
        }
    }

    #[test]
    fn run_report_serializes_without_extra_fields() {
        let json = r#"{
            "dim": 1,
            "box": [[-1, 1]],
            "checks": ["brackets"],
            "samples": 3,
            "seed": 7
        }"#;
        let s = parse_scenario(json).unwrap();
        let report = run_scenario(&s, "inline").unwrap();
        assert_eq!(report.seed, 7);
        let value: serde_json::Value = serde_json::to_value(&report).unwrap();
        let obj = value.as_object().unwrap();
        let keys: Vec<&String> = obj.keys().collect();
        assert_eq!(keys, ["checks", "scenario", "seed", "verdict"]);
        let check = &value["checks"][0];
        let check_keys: Vec<&String> = check.as_object().unwrap().keys().collect();
        assert_eq!(
            check_keys,
            ["max_residual", "name", "offenders", "tolerance", "verdict"]
        );
        // Round-trips through JSON.
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks.len(), report.checks.len());
        assert_eq!(back.verdict, report.verdict);
    }

    #[test]
    fn run_is_deterministic_for_a_fixed_seed() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "gamma": [[["x2", "0"], ["0", "-x2"]], [["0", "-x2"], ["0", "0"]]],
            "A": [["0", "1"], ["-1", "0"]],
            "checks": ["codazzi", "prop2", "closedness", "nondegeneracy"],
            "samples": 8
        }"#;
        let s = parse_scenario(json).unwrap();
        let a = run_scenario(&s, "inline").unwrap();
        let b = run_scenario(&s, "inline").unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.passed());
    }

    #[test]
    fn domain_error_reports_point_and_expression() {
        // 1/x1 blows up inside the box; the probe points and samples both
        // live in [-1, 1] so one of them will hit a finite value, but the
        // log of a negative number fails immediately.
        let json = r#"{
            "dim": 1,
            "box": [[-2, -1]],
            "gamma": [[["log(x1)"]]],
            "checks": ["brackets"],
            "samples": 2
        }"#;
        let s = parse_scenario(json).unwrap();
        let err = run_scenario(&s, "inline").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("at point"), "{text}");
        assert!(text.contains("log"), "{text}");
    }

    #[test]
    fn text_rendering_mentions_every_check() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "A": [["1", "x1"], ["0", "1"]],
            "checks": ["codazzi", "nondegeneracy"],
            "samples": 5
        }"#;
        let s = parse_scenario(json).unwrap();
        let report = run_scenario(&s, "broken").unwrap();
        assert!(!report.passed());
        let text = report.to_text();
        assert!(text.contains("scenario: broken"));
        assert!(text.contains("FAIL codazzi"), "{text}");
        assert!(text.contains("PASS nondegeneracy"), "{text}");
        assert!(text.contains("offender"), "{text}");
        assert!(text.trim_end().ends_with("verdict: fail"), "{text}");
    }

    #[test]
    fn duplicate_checks_collapse() {
        let json = r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "checks": ["brackets", "brackets"]
        }"#;
        let s = parse_scenario(json).unwrap();
        assert_eq!(s.checks, vec![Check::Brackets]);
    }

    #[test]
    fn one_dimensional_scenarios_are_supported() {
        let json = r#"{
            "dim": 1,
            "box": [[-1, 1]],
            "gamma": [[["x1"]]],
            "A": [["1 + x1^2"]],
            "checks": ["codazzi", "closedness", "brackets", "zero_section", "lagrangian"],
            "samples": 10
        }"#;
        let s = parse_scenario(json).unwrap();
        let report = run_scenario(&s, "inline").unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }
}
