//! Numerical verification engine for lifting pairs of two-forms from an
//! affine manifold to its tangent bundle.
//!
//! Given a connection `∇` and tensor data `(ω₀, ω₁, A)` on a coordinate box,
//! the crate constructs the associated two-form on the tangent bundle,
//! certifies the structure equations it satisfies (closedness line by line,
//! bracket relations of lifted frames, Liouville-pullback comparisons,
//! zero-section recovery, nondegeneracy), and renders the results as
//! deterministic machine-readable reports.
//!
//! The layers, bottom up:
//!
//! * [`autodiff`] — forward-mode dual numbers and the [`autodiff::ScalarField`]
//!   abstraction every geometric object is built from;
//! * [`expr`] — a small closed-form expression language (parse, print,
//!   evaluate over reals or duals);
//! * [`linalg`] — dense determinants and generic matrix inversion;
//! * [`geometry`] — connections, tensors, and the pointwise operators
//!   (brackets, torsion, curvature, covariant derivatives, Levi-Civita);
//! * [`lift`] — the tangent-bundle constructions: horizontal/vertical frames,
//!   the lifted two-form, the interpolation one-form and its exterior
//!   derivative, the Liouville pullback, zero-section extraction;
//! * [`verify`] — residual checks over sampled points, rendered as
//!   [`verify::ResidualReport`]s;
//! * [`fixtures`] — a registry of named example scenarios with expected
//!   verdicts;
//! * [`scenario`] — the JSON scenario schema, validation, and the check
//!   runner behind the CLI and the C interface.

pub mod autodiff;
pub mod expr;
pub mod fixtures;
pub mod geometry;
pub mod lift;
pub mod linalg;
pub mod scenario;
pub mod verify;
