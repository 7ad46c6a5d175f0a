//! Constructions on the tangent bundle: frame lifts, the lifted two-form
//! built from a connection and a pair of base two-forms plus an interpolation
//! tensor, the connection-dependent primitive one-form, the pullback of the
//! canonical cotangent-bundle form, and the zero-section extraction /
//! reconstruction round trip.
//!
//! Coordinates on the total space are ordered `(x¹, …, x^d, u¹, …, u^d)`:
//! indices `0..d` address the base block and `d..2d` the fibre block.

use crate::autodiff::{EvalError, ScalarField};
use crate::geometry::{Connection, CovariantTwoTensor, TwoForm, VectorField};

/// A point of the tangent bundle: a base point `x` together with a tangent
/// vector `u` at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPoint {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl TangentPoint {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Self {
        assert_eq!(x.len(), u.len(), "base and fibre dimensions must agree");
        TangentPoint { x, u }
    }

    /// Base dimension `d` (the total space has dimension `2d`).
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Flattens to the `2d` coordinate vector `(x, u)`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend_from_slice(&self.u);
        out
    }
}

/// Input data for the lifted two-form: a connection, a fibre two-form, a
/// base two-form, and an interpolation tensor, all on the same base.
#[derive(Clone)]
pub struct LiftSpec {
    pub conn: Connection,
    pub omega0: TwoForm,
    pub omega1: TwoForm,
    pub a: CovariantTwoTensor,
}

impl LiftSpec {
    pub fn new(conn: Connection, omega0: TwoForm, omega1: TwoForm, a: CovariantTwoTensor) -> Self {
        let d = conn.dim();
        assert_eq!(omega0.dim(), d, "fibre two-form dimension mismatch");
        assert_eq!(omega1.dim(), d, "base two-form dimension mismatch");
        assert_eq!(a.dim(), d, "interpolation tensor dimension mismatch");
        LiftSpec {
            conn,
            omega0,
            omega1,
            a,
        }
    }

    pub fn dim(&self) -> usize {
        self.conn.dim()
    }
}

/// An antisymmetric two-form on the total space, stored as the strict upper
/// triangle of its `2d × 2d` coordinate-component matrix, each entry a scalar
/// field of the `2d` coordinates.
#[derive(Clone)]
pub struct TwoFormTM {
    base_dim: usize,
    upper: Vec<ScalarField>,
}

impl TwoFormTM {
    fn upper_len(n: usize) -> usize {
        n * (n - 1) / 2
    }

    fn upper_index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// Builds from the strict upper triangle (row-major over `i < j` in the
    /// `2d`-dimensional frame).
    pub fn from_upper(base_dim: usize, upper: Vec<ScalarField>) -> Self {
        let n = 2 * base_dim;
        assert_eq!(upper.len(), Self::upper_len(n), "upper triangle size");
        for f in &upper {
            assert_eq!(f.dim(), n, "component field dimension");
        }
        TwoFormTM { base_dim, upper }
    }

    pub fn zero(base_dim: usize) -> Self {
        let n = 2 * base_dim;
        TwoFormTM {
            base_dim,
            upper: (0..Self::upper_len(n))
                .map(|_| ScalarField::zero(n))
                .collect(),
        }
    }

    /// Base dimension `d`.
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Total-space dimension `2d`.
    pub fn total_dim(&self) -> usize {
        2 * self.base_dim
    }

    /// Component field for the frame pair `(a, b)`; antisymmetry is
    /// structural (`(a, a)` is the zero field, `(b, a)` the negation).
    pub fn comp_field(&self, a: usize, b: usize) -> ScalarField {
        let n = self.total_dim();
        assert!(a < n && b < n, "frame index out of range");
        use std::cmp::Ordering;
        match a.cmp(&b) {
            Ordering::Less => self.upper[Self::upper_index(n, a, b)].clone(),
            Ordering::Equal => ScalarField::zero(n),
            Ordering::Greater => self.upper[Self::upper_index(n, b, a)].neg(),
        }
    }

    /// Component value at a tangent point.
    pub fn value(&self, a: usize, b: usize, p: &TangentPoint) -> Result<f64, EvalError> {
        self.comp_field(a, b).eval_f64(&p.flatten())
    }

    /// Full `2d × 2d` component matrix at a tangent point.
    pub fn eval_matrix(&self, p: &TangentPoint) -> Result<Vec<Vec<f64>>, EvalError> {
        let n = self.total_dim();
        let flat = p.flatten();
        let mut m = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let v = self.upper[Self::upper_index(n, a, b)].eval_f64(&flat)?;
                m[a][b] = v;
                m[b][a] = -v;
            }
        }
        Ok(m)
    }

    /// Pointwise sum of two forms on the same total space.
    pub fn add(&self, rhs: &TwoFormTM) -> TwoFormTM {
        assert_eq!(self.base_dim, rhs.base_dim, "base dimension mismatch");
        TwoFormTM {
            base_dim: self.base_dim,
            upper: self
                .upper
                .iter()
                .zip(&rhs.upper)
                .map(|(f, g)| f.add(g))
                .collect(),
        }
    }

    /// Contraction with two frozen vectors: `Σ_{a,b} F_{ab} V^a W^b`.
    pub fn pair(&self, p: &TangentPoint, v: &[f64], w: &[f64]) -> Result<f64, EvalError> {
        let n = self.total_dim();
        assert_eq!(v.len(), n, "first vector length");
        assert_eq!(w.len(), n, "second vector length");
        let flat = p.flatten();
        let mut acc = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let f = self.upper[Self::upper_index(n, a, b)].eval_f64(&flat)?;
                acc += f * (v[a] * w[b] - v[b] * w[a]);
            }
        }
        Ok(acc)
    }
}

/// A one-form on the total space: `2d` coefficient fields of the coordinate
/// coframe.
#[derive(Clone)]
pub struct OneFormTM {
    base_dim: usize,
    comps: Vec<ScalarField>,
}

impl OneFormTM {
    pub fn new(base_dim: usize, comps: Vec<ScalarField>) -> Self {
        let n = 2 * base_dim;
        assert_eq!(comps.len(), n, "one-form needs 2d components");
        for f in &comps {
            assert_eq!(f.dim(), n, "component field dimension");
        }
        OneFormTM { base_dim, comps }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn comp(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }

    /// Exterior derivative: the two-form with components
    /// `(dλ)_{ab} = ∂_a λ_b − ∂_b λ_a`.
    pub fn exterior_derivative(&self) -> TwoFormTM {
        let n = 2 * self.base_dim;
        let mut upper = Vec::with_capacity(TwoFormTM::upper_len(n));
        for a in 0..n {
            for b in (a + 1)..n {
                upper.push(self.comps[b].partial_field(a).sub(&self.comps[a].partial_field(b)));
            }
        }
        TwoFormTM::from_upper(self.base_dim, upper)
    }
}

/// Horizontal and vertical lifts of a base vector field, evaluated at a
/// tangent point. The horizontal lift of `X` is
/// `X^h = X^i ∂_{x^i} − Γ_{ij}^k u^i X^j ∂_{u^k}`; the vertical lift is
/// `X^v = X^k ∂_{u^k}`. Both are returned as `2d`-component coordinate
/// vectors.
pub fn lift_frames(
    conn: &Connection,
    x_f: &VectorField,
    p: &TangentPoint,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let d = conn.dim();
    assert_eq!(x_f.dim(), d, "vector field dimension mismatch");
    assert_eq!(p.dim(), d, "tangent point dimension mismatch");
    let xv = x_f.evaluate(&p.x)?;
    let gv = conn.christoffel_values(&p.x)?;
    let mut horizontal = vec![0.0; 2 * d];
    let mut vertical = vec![0.0; 2 * d];
    for k in 0..d {
        horizontal[k] = xv[k];
        vertical[d + k] = xv[k];
        let mut drift = 0.0;
        for i in 0..d {
            for j in 0..d {
                drift += gv[i][j][k] * p.u[i] * xv[j];
            }
        }
        horizontal[d + k] = -drift;
    }
    Ok((horizontal, vertical))
}

/// Horizontal lift of a base vector field as a genuine vector field on the
/// total space (so it can be differentiated, e.g. for Lie brackets):
/// components `X^j` on the base block and `−Γ_{ij}^k u^i X^j` on the fibre
/// block.
pub fn horizontal_lift_field(conn: &Connection, x_f: &VectorField) -> VectorField {
    let d = conn.dim();
    assert_eq!(x_f.dim(), d, "vector field dimension mismatch");
    let n = 2 * d;
    let mut comps: Vec<ScalarField> = (0..d).map(|k| promote(x_f.comp(k))).collect();
    for k in 0..d {
        let terms = (0..d).flat_map(|i| {
            (0..d).map(move |j| (i, j))
        });
        let drift = ScalarField::sum(
            n,
            terms.map(|(i, j)| {
                fibre_coord(d, i)
                    .mul(&promote(conn.gamma(i, j, k)))
                    .mul(&promote(x_f.comp(j)))
            }),
        );
        comps.push(drift.neg());
    }
    VectorField::new(n, comps)
}

/// Vertical lift of a base vector field as a vector field on the total
/// space: zero on the base block, `X^k` on the fibre block.
pub fn vertical_lift_field(dim: usize, x_f: &VectorField) -> VectorField {
    assert_eq!(x_f.dim(), dim, "vector field dimension mismatch");
    let n = 2 * dim;
    let comps = (0..n)
        .map(|k| {
            if k < dim {
                ScalarField::zero(n)
            } else {
                promote(x_f.comp(k - dim))
            }
        })
        .collect();
    VectorField::new(n, comps)
}

/// Horizontal lifts of the coordinate frame at `p`: row `l` is the
/// coordinate vector of `(∂_{x^l})^h`.
pub fn horizontal_frame(conn: &Connection, p: &TangentPoint) -> Result<Vec<Vec<f64>>, EvalError> {
    let d = conn.dim();
    let gv = conn.christoffel_values(&p.x)?;
    let mut frame = vec![vec![0.0; 2 * d]; d];
    for (l, row) in frame.iter_mut().enumerate() {
        row[l] = 1.0;
        for k in 0..d {
            let mut drift = 0.0;
            for i in 0..d {
                drift += gv[i][l][k] * p.u[i];
            }
            row[d + k] = -drift;
        }
    }
    Ok(frame)
}

/// Vertical lifts of the coordinate frame: row `l` is `(∂_{x^l})^v`, i.e. the
/// unit vector along `u^l`.
pub fn vertical_frame(dim: usize) -> Vec<Vec<f64>> {
    let mut frame = vec![vec![0.0; 2 * dim]; dim];
    for (l, row) in frame.iter_mut().enumerate() {
        row[dim + l] = 1.0;
    }
    frame
}

/// Pushforward of a total-space vector under the bundle projection: the
/// leading `d` components.
pub fn project_base(v: &[f64]) -> Vec<f64> {
    v[..v.len() / 2].to_vec()
}

fn promote(f: &ScalarField) -> ScalarField {
    f.promote_tangent()
}

fn fibre_coord(d: usize, j: usize) -> ScalarField {
    ScalarField::coord(2 * d, d + j)
}

/// The lifted two-form of a spec `(∇, ω₀, ω₁, A)`. Its coordinate components
/// are, with `Γ` evaluated at the base point and `u` the fibre coordinate:
///
/// * `F_{x^l x^s} = (ω₁)_{ls} − Γ_{ms}^r u^m A_{rl} + Γ_{jl}^k u^j A_{ks}
///   + Γ_{jl}^k Γ_{ms}^r u^j u^m (ω₀)_{kr}`
/// * `F_{x^l u^s} = −A_{sl} + Γ_{jl}^k u^j (ω₀)_{ks}`
/// * `F_{u^l u^s} = (ω₀)_{ls}`
///
/// so that on lifted frames `Ω(X^h, Y^h) = ω₁(X,Y)`, `Ω(X^v, Y^v) = ω₀(X,Y)`,
/// and `Ω(X^v, Y^h) = A(X,Y)`.
pub fn lift_two_form(spec: &LiftSpec) -> TwoFormTM {
    let d = spec.dim();
    let n = 2 * d;
    let mut upper = Vec::with_capacity(TwoFormTM::upper_len(n));
    for a in 0..n {
        for b in (a + 1)..n {
            upper.push(lift_component(spec, a, b));
        }
    }
    TwoFormTM::from_upper(d, upper)
}

fn lift_component(spec: &LiftSpec, a: usize, b: usize) -> ScalarField {
    let d = spec.dim();
    let n = 2 * d;
    if a < d && b < d {
        let (l, s) = (a, b);
        let mut terms = vec![promote(&spec.omega1.comp_field(l, s))];
        for m in 0..d {
            for r in 0..d {
                terms.push(
                    promote(spec.conn.gamma(m, s, r))
                        .mul(&fibre_coord(d, m))
                        .mul(&promote(spec.a.comp(r, l)))
                        .neg(),
                );
            }
        }
        for j in 0..d {
            for k in 0..d {
                terms.push(
                    promote(spec.conn.gamma(j, l, k))
                        .mul(&fibre_coord(d, j))
                        .mul(&promote(spec.a.comp(k, s))),
                );
            }
        }
        for j in 0..d {
            for k in 0..d {
                for m in 0..d {
                    for r in 0..d {
                        terms.push(
                            promote(spec.conn.gamma(j, l, k))
                                .mul(&promote(spec.conn.gamma(m, s, r)))
                                .mul(&fibre_coord(d, j))
                                .mul(&fibre_coord(d, m))
                                .mul(&promote(&spec.omega0.comp_field(k, r))),
                        );
                    }
                }
            }
        }
        ScalarField::sum(n, terms)
    } else if a < d && b >= d {
        let (l, s) = (a, b - d);
        let mut terms = vec![promote(spec.a.comp(s, l)).neg()];
        for j in 0..d {
            for k in 0..d {
                terms.push(
                    promote(spec.conn.gamma(j, l, k))
                        .mul(&fibre_coord(d, j))
                        .mul(&promote(&spec.omega0.comp_field(k, s))),
                );
            }
        }
        ScalarField::sum(n, terms)
    } else {
        let (l, s) = (a - d, b - d);
        promote(&spec.omega0.comp_field(l, s))
    }
}

/// The primitive one-form `λ^{ω,∇}` whose value on a total-space vector `W`
/// at `(x, u)` is `½ ω(u, K W)` with `K` the connector map:
///
/// * `λ(∂_{x^l}) = ½ Γ_{jl}^k u^j u^m ω_{mk}`
/// * `λ(∂_{u^l}) = ½ u^m ω_{ml}`
pub fn lambda_form(omega: &TwoForm, conn: &Connection) -> OneFormTM {
    let d = conn.dim();
    assert_eq!(omega.dim(), d, "two-form dimension mismatch");
    let n = 2 * d;
    let mut comps = Vec::with_capacity(n);
    for l in 0..d {
        let mut terms = Vec::new();
        for j in 0..d {
            for k in 0..d {
                for m in 0..d {
                    terms.push(
                        promote(conn.gamma(j, l, k))
                            .mul(&fibre_coord(d, j))
                            .mul(&fibre_coord(d, m))
                            .mul(&promote(&omega.comp_field(m, k))),
                    );
                }
            }
        }
        comps.push(ScalarField::sum(n, terms).scale(0.5));
    }
    for l in 0..d {
        let terms = (0..d).map(|m| fibre_coord(d, m).mul(&promote(&omega.comp_field(m, l))));
        comps.push(ScalarField::sum(n, terms).scale(0.5));
    }
    OneFormTM::new(d, comps)
}

/// Pullback of the canonical cotangent-bundle two-form `Σ_k dp_k ∧ dx^k`
/// under the bundle map `(x, u) ↦ (x, P(x, u))` with `P_i = Σ_j u^j A_{ji}`.
/// Components:
///
/// * `F_{x^a x^b} = Σ_j u^j (∂_a A_{jb} − ∂_b A_{ja})`
/// * `F_{x^a u^b} = −A_{ba}`
/// * `F_{u^a u^b} = 0`
pub fn liouville_pullback(a_tensor: &CovariantTwoTensor) -> TwoFormTM {
    let d = a_tensor.dim();
    let n = 2 * d;
    let mut upper = Vec::with_capacity(TwoFormTM::upper_len(n));
    for a in 0..n {
        for b in (a + 1)..n {
            let f = if a < d && b < d {
                let terms = (0..d).map(|j| {
                    fibre_coord(d, j).mul(
                        &promote(&a_tensor.comp(j, b).partial_field(a))
                            .sub(&promote(&a_tensor.comp(j, a).partial_field(b))),
                    )
                });
                ScalarField::sum(n, terms)
            } else if a < d {
                promote(a_tensor.comp(b - d, a)).neg()
            } else {
                ScalarField::zero(n)
            };
            upper.push(f);
        }
    }
    TwoFormTM::from_upper(d, upper)
}

/// Restriction of a total-space two-form to the zero section, split into the
/// three blocks of its component matrix at `u = 0`: the base–base block, the
/// fibre–fibre block, and the mixed tensor `A(Z, Y) = Ω(Z^v, Y^h)|_{u=0}`,
/// i.e. `A_{ls} = F_{u^l x^s}(x, 0)`.
pub fn extract_zero_section(omega: &TwoFormTM) -> (TwoForm, TwoForm, CovariantTwoTensor) {
    let d = omega.base_dim();
    let mut base_upper = Vec::with_capacity(TwoFormTM::upper_len(d).max(0));
    let mut fibre_upper = Vec::with_capacity(TwoFormTM::upper_len(d).max(0));
    for l in 0..d {
        for s in (l + 1)..d {
            base_upper.push(omega.comp_field(l, s).at_zero_section());
            fibre_upper.push(omega.comp_field(d + l, d + s).at_zero_section());
        }
    }
    let mut a_comps = Vec::with_capacity(d * d);
    for l in 0..d {
        for s in 0..d {
            a_comps.push(omega.comp_field(d + l, s).at_zero_section());
        }
    }
    (
        TwoForm::from_upper(d, base_upper),
        TwoForm::from_upper(d, fibre_upper),
        CovariantTwoTensor::new(d, a_comps),
    )
}

/// Promotes a base two-form to the total space, occupying only the
/// base–base block.
pub fn base_block_two_form(omega: &TwoForm) -> TwoFormTM {
    let d = omega.dim();
    let n = 2 * d;
    let mut upper = Vec::with_capacity(TwoFormTM::upper_len(n));
    for a in 0..n {
        for b in (a + 1)..n {
            upper.push(if a < d && b < d {
                promote(&omega.comp_field(a, b))
            } else {
                ScalarField::zero(n)
            });
        }
    }
    TwoFormTM::from_upper(d, upper)
}

/// The reconstruction candidate assembled from zero-section data: the
/// base-block promotion of the base–base form, plus the canonical-form
/// pullback of the mixed tensor, plus the exterior derivative of the
/// primitive one-form of the fibre–fibre form. Agrees with the original
/// two-form along the zero section.
pub fn darboux_candidate(
    omega11: &TwoForm,
    omega22: &TwoForm,
    a_tensor: &CovariantTwoTensor,
    conn: &Connection,
) -> TwoFormTM {
    base_block_two_form(omega11)
        .add(&liouville_pullback(a_tensor))
        .add(&lambda_form(omega22, conn).exterior_derivative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ScalarField;
    use crate::expr::{parse_field, VarScheme};
    use crate::geometry::{Connection, CovariantTwoTensor, TwoForm, VectorField};

    fn base_field(src: &str, d: usize) -> ScalarField {
        parse_field(src, &VarScheme::Base { dim: d }).unwrap()
    }

    fn connection(d: usize, entries: &[((usize, usize, usize), &str)]) -> Connection {
        let mut gamma = vec![ScalarField::zero(d); d * d * d];
        for &((i, j, k), src) in entries {
            gamma[(i * d + j) * d + k] = base_field(src, d);
        }
        Connection::new(d, gamma)
    }

    fn identity_tensor(d: usize) -> CovariantTwoTensor {
        let comps = (0..d * d)
            .map(|idx| {
                if idx / d == idx % d {
                    ScalarField::constant(d, 1.0)
                } else {
                    ScalarField::zero(d)
                }
            })
            .collect();
        CovariantTwoTensor::new(d, comps)
    }

    /// A d=2 spec with non-constant entries everywhere, used as a generic
    /// workout for invariants.
    fn generic_spec() -> LiftSpec {
        let d = 2;
        let conn = connection(
            2,
            &[
                ((0, 0, 0), "x2"),
                ((0, 1, 1), "x1 * x2"),
                ((1, 0, 0), "1 + x1"),
                ((1, 1, 0), "x1^2"),
                ((1, 1, 1), "0.5 * x2"),
            ],
        );
        let omega0 = TwoForm::from_upper(d, vec![base_field("1 + 0.5 * x1", d)]);
        let omega1 = TwoForm::from_upper(d, vec![base_field("x2 - x1", d)]);
        let a = CovariantTwoTensor::new(
            d,
            vec![
                base_field("2 + sin(x1)", d),
                base_field("x1 * x2", d),
                base_field("0.25", d),
                base_field("1 + x2^2", d),
            ],
        );
        LiftSpec::new(conn, omega0, omega1, a)
    }

    #[test]
    fn flat_lift_splits_into_blocks() {
        let conn = Connection::flat(2);
        let x_f = VectorField::coordinate(2, 0);
        let p = TangentPoint::new(vec![0.3, -0.7], vec![1.5, 2.5]);
        let (h, v) = lift_frames(&conn, &x_f, &p).unwrap();
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn horizontal_lift_carries_connection_drift() {
        let conn = connection(1, &[((0, 0, 0), "1")]);
        let x_f = VectorField::coordinate(1, 0);
        let p = TangentPoint::new(vec![0.3], vec![2.0]);
        let (h, _) = lift_frames(&conn, &x_f, &p).unwrap();
        assert_eq!(h, vec![1.0, -2.0]);
    }

    #[test]
    fn horizontal_frame_matches_lift_frames() {
        let spec = generic_spec();
        let p = TangentPoint::new(vec![0.4, -0.2], vec![0.9, -1.3]);
        let frame = horizontal_frame(&spec.conn, &p).unwrap();
        for l in 0..2 {
            let (h, _) = lift_frames(&spec.conn, &VectorField::coordinate(2, l), &p).unwrap();
            assert_eq!(frame[l], h);
        }
    }

    #[test]
    fn lift_fields_evaluate_to_lift_frames() {
        let spec = generic_spec();
        let x_f = VectorField::new(
            2,
            vec![base_field("x2^2", 2), base_field("1 + x1", 2)],
        );
        let p = TangentPoint::new(vec![0.35, -0.6], vec![1.2, 0.7]);
        let (h, v) = lift_frames(&spec.conn, &x_f, &p).unwrap();
        let hf = horizontal_lift_field(&spec.conn, &x_f);
        let vf = vertical_lift_field(2, &x_f);
        let flat = p.flatten();
        let hv = hf.evaluate(&flat).unwrap();
        let vv = vf.evaluate(&flat).unwrap();
        for k in 0..4 {
            assert!((hv[k] - h[k]).abs() < 1e-14);
            assert!((vv[k] - v[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_recovers_base_components() {
        let spec = generic_spec();
        let x_f = VectorField::new(
            2,
            vec![base_field("x1 + x2", 2), base_field("sin(x2)", 2)],
        );
        let p = TangentPoint::new(vec![0.7, 0.1], vec![-0.4, 0.8]);
        let (h, v) = lift_frames(&spec.conn, &x_f, &p).unwrap();
        let xv = x_f.evaluate(&p.x).unwrap();
        assert_eq!(project_base(&h), xv);
        assert_eq!(project_base(&v), vec![0.0, 0.0]);
    }

    #[test]
    fn canonical_lift_pairs_mixed_frames_as_identity() {
        let d = 2;
        let spec = LiftSpec::new(
            Connection::flat(d),
            TwoForm::zero(d),
            TwoForm::zero(d),
            identity_tensor(d),
        );
        let omega = lift_two_form(&spec);
        let p = TangentPoint::new(vec![0.2, -0.6], vec![1.0, 0.5]);
        let m = omega.eval_matrix(&p).unwrap();
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                // Ω(∂_{u^i}, ∂_{x^j}) = δ_ij for the canonical structure.
                assert_eq!(m[d + i][j], expect);
                assert_eq!(m[i][j], 0.0);
                assert_eq!(m[d + i][d + j], 0.0);
            }
        }
    }

    #[test]
    fn lift_pairings_on_lifted_frames_recover_spec_blocks() {
        let spec = generic_spec();
        let omega = lift_two_form(&spec);
        let pts = [
            TangentPoint::new(vec![0.3, 0.8], vec![0.7, -0.5]),
            TangentPoint::new(vec![-0.5, 0.25], vec![-1.1, 0.4]),
            TangentPoint::new(vec![1.2, -0.9], vec![0.05, 2.0]),
        ];
        for p in &pts {
            let h = horizontal_frame(&spec.conn, p).unwrap();
            let v = vertical_frame(2);
            let w1 = spec.omega1.eval_matrix(&p.x).unwrap();
            let w0 = spec.omega0.eval_matrix(&p.x).unwrap();
            let av = spec.a.eval_matrix(&p.x).unwrap();
            for l in 0..2 {
                for s in 0..2 {
                    let hh = omega.pair(p, &h[l], &h[s]).unwrap();
                    let vv = omega.pair(p, &v[l], &v[s]).unwrap();
                    let vh = omega.pair(p, &v[l], &h[s]).unwrap();
                    assert!((hh - w1[l][s]).abs() < 1e-12, "h-h pairing");
                    assert!((vv - w0[l][s]).abs() < 1e-12, "v-v pairing");
                    assert!((vh - av[l][s]).abs() < 1e-12, "v-h pairing");
                }
            }
        }
    }

    #[test]
    fn euclidean_interpolation_lift_equals_canonical_pullback() {
        let d = 2;
        let spec = LiftSpec::new(
            Connection::flat(d),
            TwoForm::zero(d),
            TwoForm::zero(d),
            identity_tensor(d),
        );
        let lifted = lift_two_form(&spec);
        let pulled = liouville_pullback(&spec.a);
        let p = TangentPoint::new(vec![0.9, -0.3], vec![0.6, 1.7]);
        assert_eq!(
            lifted.eval_matrix(&p).unwrap(),
            pulled.eval_matrix(&p).unwrap()
        );
    }

    #[test]
    fn canonical_pullback_scalar_interpolation_example() {
        // d = 1 with A₁₁ = x¹: the pullback of the canonical form evaluates
        // to x¹ on (∂_{u¹}, ∂_{x¹}) and the base–base component vanishes.
        let a = CovariantTwoTensor::new(1, vec![base_field("x1", 1)]);
        let f = liouville_pullback(&a);
        let p = TangentPoint::new(vec![0.7], vec![3.0]);
        assert!((f.value(1, 0, &p).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(f.value(0, 0, &p).unwrap(), 0.0);
    }

    #[test]
    fn canonical_pullback_pairs_frames_as_interpolation_tensor() {
        // On lifted frames the pullback pairs as Ω(X^v, Y^h) = A(X, Y) for
        // any connection, because the fibre map has no connection
        // dependence.
        let spec = generic_spec();
        let pulled = liouville_pullback(&spec.a);
        let p = TangentPoint::new(vec![0.45, -0.15], vec![1.3, -0.8]);
        let h = horizontal_frame(&spec.conn, &p).unwrap();
        let v = vertical_frame(2);
        let av = spec.a.eval_matrix(&p.x).unwrap();
        for l in 0..2 {
            for s in 0..2 {
                let vh = pulled.pair(&p, &v[l], &h[s]).unwrap();
                assert!((vh - av[l][s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn primitive_one_form_flat_example() {
        // Flat connection, ω₁₂ = 1, u = (1, 2): λ(∂_{u¹}) = ½ u² ω₂₁ = −1,
        // λ(∂_{u²}) = ½ u¹ ω₁₂ = ½, and the base components vanish.
        let d = 2;
        let omega = TwoForm::from_upper(d, vec![ScalarField::constant(d, 1.0)]);
        let lambda = lambda_form(&omega, &Connection::flat(d));
        let p = TangentPoint::new(vec![0.0, 0.0], vec![1.0, 2.0]).flatten();
        assert_eq!(lambda.comp(0).eval_f64(&p).unwrap(), 0.0);
        assert_eq!(lambda.comp(1).eval_f64(&p).unwrap(), 0.0);
        assert!((lambda.comp(2).eval_f64(&p).unwrap() + 1.0).abs() < 1e-15);
        assert!((lambda.comp(3).eval_f64(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn primitive_one_form_vanishes_on_zero_section() {
        let spec = generic_spec();
        let lambda = lambda_form(&spec.omega0, &spec.conn);
        let p = TangentPoint::new(vec![0.8, -0.4], vec![0.0, 0.0]).flatten();
        for a in 0..4 {
            assert_eq!(lambda.comp(a).eval_f64(&p).unwrap(), 0.0);
        }
    }

    #[test]
    fn primitive_one_form_is_linear_in_the_two_form() {
        let d = 2;
        let conn = generic_spec().conn;
        let w1 = TwoForm::from_upper(d, vec![base_field("1 + x1", d)]);
        let w2 = TwoForm::from_upper(d, vec![base_field("x2^2", d)]);
        let sum = TwoForm::from_upper(d, vec![w1.comp_field(0, 1).add(&w2.comp_field(0, 1))]);
        let p = TangentPoint::new(vec![0.3, 0.9], vec![-0.7, 1.4]).flatten();
        let la = lambda_form(&w1, &conn);
        let lb = lambda_form(&w2, &conn);
        let ls = lambda_form(&sum, &conn);
        for a in 0..4 {
            let lhs = ls.comp(a).eval_f64(&p).unwrap();
            let rhs = la.comp(a).eval_f64(&p).unwrap() + lb.comp(a).eval_f64(&p).unwrap();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_section_extraction_inverts_the_lift() {
        let spec = generic_spec();
        let omega = lift_two_form(&spec);
        let (w11, w22, a) = extract_zero_section(&omega);
        let xs = [vec![0.25, -0.85], vec![1.1, 0.4]];
        for x in &xs {
            let w11_m = w11.eval_matrix(x).unwrap();
            let w22_m = w22.eval_matrix(x).unwrap();
            let a_m = a.eval_matrix(x).unwrap();
            let exp_w1 = spec.omega1.eval_matrix(x).unwrap();
            let exp_w0 = spec.omega0.eval_matrix(x).unwrap();
            let exp_a = spec.a.eval_matrix(x).unwrap();
            for l in 0..2 {
                for s in 0..2 {
                    // The base–base block restricts to ω₁ and the
                    // fibre–fibre block to ω₀; the mixed block is A.
                    assert!((w11_m[l][s] - exp_w1[l][s]).abs() < 1e-15);
                    assert!((w22_m[l][s] - exp_w0[l][s]).abs() < 1e-15);
                    assert!((a_m[l][s] - exp_a[l][s]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn extraction_is_additive() {
        let spec = generic_spec();
        let omega = lift_two_form(&spec);
        let pulled = liouville_pullback(&spec.a);
        let total = omega.add(&pulled);
        let (w11_t, w22_t, a_t) = extract_zero_section(&total);
        let (w11, w22, a) = extract_zero_section(&omega);
        let (p11, p22, pa) = extract_zero_section(&pulled);
        let x = vec![0.3, 0.55];
        for l in 0..2 {
            for s in 0..2 {
                let lhs = w11_t.value(l, s, &x).unwrap();
                let rhs = w11.value(l, s, &x).unwrap() + p11.value(l, s, &x).unwrap();
                assert!((lhs - rhs).abs() < 1e-15);
                let lhs = w22_t.value(l, s, &x).unwrap();
                let rhs = w22.value(l, s, &x).unwrap() + p22.value(l, s, &x).unwrap();
                assert!((lhs - rhs).abs() < 1e-15);
                let lhs = a_t.comp(l, s).eval_f64(&x).unwrap();
                let rhs =
                    a.comp(l, s).eval_f64(&x).unwrap() + pa.comp(l, s).eval_f64(&x).unwrap();
                assert!((lhs - rhs).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reconstruction_candidate_for_canonical_data_is_canonical() {
        let d = 2;
        let candidate = darboux_candidate(
            &TwoForm::zero(d),
            &TwoForm::zero(d),
            &identity_tensor(d),
            &Connection::flat(d),
        );
        let expected = lift_two_form(&LiftSpec::new(
            Connection::flat(d),
            TwoForm::zero(d),
            TwoForm::zero(d),
            identity_tensor(d),
        ));
        let p = TangentPoint::new(vec![0.1, 0.9], vec![-0.6, 0.35]);
        let cm = candidate.eval_matrix(&p).unwrap();
        let em = expected.eval_matrix(&p).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((cm[a][b] - em[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_candidate_restricts_to_its_inputs() {
        let spec = generic_spec();
        let candidate =
            darboux_candidate(&spec.omega1, &spec.omega0, &spec.a, &spec.conn);
        let (w11, w22, a) = extract_zero_section(&candidate);
        let x = vec![0.6, -0.35];
        let exp_w1 = spec.omega1.eval_matrix(&x).unwrap();
        let exp_w0 = spec.omega0.eval_matrix(&x).unwrap();
        let exp_a = spec.a.eval_matrix(&x).unwrap();
        let got_w1 = w11.eval_matrix(&x).unwrap();
        let got_w0 = w22.eval_matrix(&x).unwrap();
        let got_a = a.eval_matrix(&x).unwrap();
        for l in 0..2 {
            for s in 0..2 {
                assert!((got_w1[l][s] - exp_w1[l][s]).abs() < 1e-10);
                assert!((got_w0[l][s] - exp_w0[l][s]).abs() < 1e-10);
                assert!((got_a[l][s] - exp_a[l][s]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_form_components_are_antisymmetric() {
        let spec = generic_spec();
        let omega = lift_two_form(&spec);
        let p = TangentPoint::new(vec![0.2, 0.7], vec![1.1, -0.9]);
        let flat = p.flatten();
        for a in 0..4 {
            for b in 0..4 {
                let fab = omega.comp_field(a, b).eval_f64(&flat).unwrap();
                let fba = omega.comp_field(b, a).eval_f64(&flat).unwrap();
                assert_eq!(fab, -fba);
            }
        }
    }

    #[test]
    fn one_form_exterior_derivative_of_coordinate_product() {
        // λ = x¹ du¹ on a d=1 base: dλ = dx¹ ∧ du¹, so the (x¹, u¹)
        // component is 1.
        let comps = vec![
            ScalarField::zero(2),
            ScalarField::coord(2, 0),
        ];
        let lambda = OneFormTM::new(1, comps);
        let dl = lambda.exterior_derivative();
        let p = TangentPoint::new(vec![0.4], vec![0.8]);
        assert!((dl.value(0, 1, &p).unwrap() - 1.0).abs() < 1e-15);
    }
}
