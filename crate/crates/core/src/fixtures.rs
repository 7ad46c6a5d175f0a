//! Built-in example scenarios with known verdicts.
//!
//! Each fixture packages a scenario file, a short mathematical note, and the
//! exact set of reports it is expected to fail (empty for the positive
//! fixtures). The registry doubles as executable documentation: a fixture
//! must evaluate without domain errors everywhere in its chart box, and its
//! observed verdicts must match the expectation exactly — nothing more,
//! nothing less.

use crate::scenario::{compile_scenario, Scenario, ScenarioFile};

/// A named example scenario with its expected outcome.
#[derive(Clone, Debug)]
pub struct Fixture {
    /// Registry name.
    pub name: &'static str,
    /// One-sentence mathematical description.
    pub summary: &'static str,
    /// The scenario file, ready to serialize or compile.
    pub file: ScenarioFile,
    /// Names of the reports this fixture is expected to fail.
    pub expected_failures: &'static [&'static str],
}

impl Fixture {
    /// Expected process exit code when the scenario is run: `0` when every
    /// report passes, `1` when any is expected to fail.
    pub fn expected_exit(&self) -> i32 {
        if self.expected_failures.is_empty() {
            0
        } else {
            1
        }
    }

    /// Compiles the fixture's scenario file.
    pub fn compile(&self) -> Scenario {
        compile_scenario(&self.file)
            .unwrap_or_else(|e| panic!("fixture `{}` failed to compile: {e}", self.name))
    }
}

/// Names of all registered fixtures, in registry order.
pub const FIXTURE_NAMES: [&str; 9] = [
    "canonical",
    "flat-two-forms",
    "affine-group",
    "exp-codazzi",
    "exp-codazzi-nondiag",
    "pseudo-riemannian",
    "symplectic-connection",
    "broken-codazzi",
    "nonparallel-omega0",
];

/// Looks up a fixture by name.
pub fn fixture(name: &str) -> Option<Fixture> {
    FIXTURE_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|i| build(i))
}

/// All registered fixtures, in registry order.
pub fn all_fixtures() -> Vec<Fixture> {
    (0..FIXTURE_NAMES.len()).map(build).collect()
}

fn matrix(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|row| row.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn cube(planes: &[&[&[&str]]]) -> Vec<Vec<Vec<String>>> {
    planes.iter().map(|plane| matrix(plane)).collect()
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn base_file(dim: usize, bounds: &[[f64; 2]], checks: &[&str]) -> ScenarioFile {
    ScenarioFile {
        dim,
        bounds: bounds.to_vec(),
        gamma: None,
        omega0: None,
        omega1: None,
        a: None,
        g: None,
        alpha: None,
        derive: Vec::new(),
        checks: names(checks),
        samples: crate::scenario::DEFAULT_SAMPLES,
        seed: crate::scenario::DEFAULT_SEED,
        tol: std::collections::BTreeMap::new(),
    }
}

const SQUARE: &[[f64; 2]] = &[[-1.0, 1.0], [-1.0, 1.0]];

fn build(index: usize) -> Fixture {
    match FIXTURE_NAMES[index] {
        // Flat connection, identity interpolation tensor: the lift is the
        // canonical symplectic form in tangent coordinates.
        "canonical" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "codazzi",
                    "prop1",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "brackets",
                    "dlambda",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.a = Some(matrix(&[&["1", "0"], &["0", "1"]]));
            Fixture {
                name: "canonical",
                summary: "Flat connection with the identity interpolation tensor; \
                          the lift is the canonical symplectic form in tangent coordinates.",
                file,
                expected_failures: &[],
            }
        }
        // Flat connection with constant nondegenerate two-forms on both
        // blocks; every structure condition holds with zero residual.
        "flat-two-forms" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "prop1",
                    "closedness",
                    "nondegeneracy",
                    "brackets",
                    "dlambda",
                    "zero_section",
                ],
            );
            file.omega0 = Some(matrix(&[&["1"]]));
            file.omega1 = Some(matrix(&[&["2"]]));
            Fixture {
                name: "flat-two-forms",
                summary: "Flat connection with constant nondegenerate fibre and base \
                          two-forms; all structure conditions hold exactly.",
                file,
                expected_failures: &[],
            }
        }
        // The half-plane group: transport coefficients that parallelize the
        // right-invariant frame (nonsymmetric, so the transport is
        // torsionful) together with the invariant area forms. The transport
        // curvature vanishes because a global parallel frame exists.
        "affine-group" => {
            let mut file = base_file(
                2,
                &[[0.5, 2.0], [-1.0, 1.0]],
                &[
                    "prop1",
                    "closedness",
                    "nondegeneracy",
                    "brackets",
                    "dlambda",
                    "zero_section",
                ],
            );
            file.gamma = Some(cube(&[
                &[&["-1/x1", "0"], &["0", "-1/x1"]],
                &[&["0", "0"], &["0", "0"]],
            ]));
            file.omega0 = Some(matrix(&[&["1/x1"]]));
            file.omega1 = Some(matrix(&[&["1/x1^2"]]));
            Fixture {
                name: "affine-group",
                summary: "Torsionful connection on the half-plane whose transport \
                          parallelizes the right-invariant frame of the affine group, \
                          with invariant area forms on both blocks.",
                file,
                expected_failures: &[],
            }
        }
        // Interpolation tensor derived from an exponential one-form with a
        // diagonal exponent matrix; it factors as that constant matrix times
        // a diagonal field and satisfies the compatibility identity.
        "exp-codazzi" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "codazzi",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.alpha = Some(names(&["exp(x1)", "exp(2 * x2)"]));
            file.derive = names(&["nabla_alpha"]);
            Fixture {
                name: "exp-codazzi",
                summary: "Flat connection with the interpolation tensor derived from an \
                          exponential one-form (diagonal exponent matrix); the tensor \
                          satisfies the compatibility identity everywhere.",
                file,
                expected_failures: &[],
            }
        }
        // Same construction with an upper-triangular exponent matrix, so the
        // derived tensor is genuinely nonsymmetric.
        "exp-codazzi-nondiag" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "codazzi",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.alpha = Some(names(&["exp(x1)", "exp(x1 + x2)"]));
            file.derive = names(&["nabla_alpha"]);
            Fixture {
                name: "exp-codazzi-nondiag",
                summary: "Flat connection with the interpolation tensor derived from an \
                          exponential one-form with a non-diagonal exponent matrix, giving \
                          a nonsymmetric tensor that still satisfies the compatibility \
                          identity.",
                file,
                expected_failures: &[],
            }
        }
        // Indefinite polar-type metric away from its axis, with its metric
        // connection and the metric itself as interpolation tensor.
        "pseudo-riemannian" => {
            let mut file = base_file(
                2,
                &[[1.0, 2.0], [-1.0, 1.0]],
                &[
                    "codazzi",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "brackets",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.g = Some(matrix(&[&["1", "0"], &["0", "x1^2"]]));
            file.derive = names(&["levi_civita"]);
            file.a = Some(matrix(&[&["1", "0"], &["0", "x1^2"]]));
            Fixture {
                name: "pseudo-riemannian",
                summary: "Polar-type metric diag(1, (x1)^2) on a strip away from its axis, \
                          with the metric connection and the metric itself as interpolation \
                          tensor; the connection coefficients are position-dependent.",
                file,
                expected_failures: &[],
            }
        }
        // A curved torsion-free connection that preserves the standard area
        // form, paired with that form as interpolation tensor.
        "symplectic-connection" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "codazzi",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "brackets",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.gamma = Some(cube(&[
                &[&["x2", "0"], &["0", "-x2"]],
                &[&["0", "-x2"], &["0", "0"]],
            ]));
            file.a = Some(matrix(&[&["0", "1"], &["-1", "0"]]));
            Fixture {
                name: "symplectic-connection",
                summary: "Curved torsion-free connection preserving the standard area form, \
                          with that form as interpolation tensor; the pure interpolation \
                          lift is exact.",
                file,
                expected_failures: &[],
            }
        }
        // Interpolation tensor violating the compatibility identity: every
        // equivalent characterization of the pure interpolation lift must
        // fail together, while the structural checks still pass.
        "broken-codazzi" => {
            let mut file = base_file(
                2,
                SQUARE,
                &[
                    "codazzi",
                    "prop2",
                    "closedness",
                    "nondegeneracy",
                    "lagrangian",
                    "zero_section",
                ],
            );
            file.a = Some(matrix(&[&["1", "x1"], &["0", "1"]]));
            Fixture {
                name: "broken-codazzi",
                summary: "Flat connection with an interpolation tensor violating the \
                          compatibility identity; the equivalent characterizations of the \
                          pure interpolation lift fail together.",
                file,
                expected_failures: &[
                    "codazzi",
                    "prop2/codazzi",
                    "prop2/liouville",
                    "prop2/closed",
                    "prop2/lagrangian",
                    "lagrangian",
                ],
            }
        }
        // A fibre two-form that is not parallel: the full lift fails to be
        // closed exactly alongside the parallelism condition.
        "nonparallel-omega0" => {
            let mut file = base_file(
                2,
                SQUARE,
                &["prop1", "closedness", "nondegeneracy", "dlambda"],
            );
            file.omega0 = Some(matrix(&[&["1 + x1"]]));
            file.a = Some(matrix(&[&["1", "0"], &["0", "1"]]));
            Fixture {
                name: "nonparallel-omega0",
                summary: "Flat connection with a non-parallel fibre two-form; the full lift \
                          fails to be closed exactly alongside the parallelism condition.",
                file,
                expected_failures: &["prop1/nabla-omega0", "prop1/closed"],
            }
        }
        other => unreachable!("unregistered fixture name `{other}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::run_scenario;

    #[test]
    fn registry_knows_every_name_and_rejects_others() {
        for name in FIXTURE_NAMES {
            let f = fixture(name).unwrap();
            assert_eq!(f.name, name);
            assert!(!f.summary.is_empty());
        }
        assert!(fixture("no-such-fixture").is_none());
        assert_eq!(all_fixtures().len(), FIXTURE_NAMES.len());
    }

    #[test]
    fn every_fixture_compiles() {
        for f in all_fixtures() {
            let s = f.compile();
            assert!(s.samples > 0);
            assert_eq!(s.bounds.len(), s.dim);
        }
    }

    #[test]
    fn fixture_files_roundtrip_through_json() {
        for f in all_fixtures() {
            let text = serde_json::to_string_pretty(&f.file).unwrap();
            let back: crate::scenario::ScenarioFile = serde_json::from_str(&text).unwrap();
            let again = serde_json::to_string_pretty(&back).unwrap();
            assert_eq!(text, again, "fixture `{}`", f.name);
        }
    }

    /// The registry invariant: each fixture runs cleanly over its whole
    /// chart box and fails exactly the reports it claims to fail.
    #[test]
    fn every_fixture_matches_its_expected_verdicts() {
        for f in all_fixtures() {
            let scenario = f.compile();
            let report = run_scenario(&scenario, f.name)
                .unwrap_or_else(|e| panic!("fixture `{}` failed to evaluate: {e}", f.name));
            let mut seen = Vec::new();
            for check in &report.checks {
                let expected_fail = f.expected_failures.contains(&check.name.as_str());
                assert_eq!(
                    !check.passed(),
                    expected_fail,
                    "fixture `{}`, report `{}`: max_residual {:e} vs tolerance {:e}",
                    f.name,
                    check.name,
                    check.max_residual,
                    check.tolerance
                );
                seen.push(check.name.clone());
            }
            for name in f.expected_failures {
                assert!(
                    seen.iter().any(|s| s == name),
                    "fixture `{}` never emitted expected report `{name}`",
                    f.name
                );
            }
            assert_eq!(report.passed(), f.expected_exit() == 0, "fixture `{}`", f.name);
        }
    }
}
