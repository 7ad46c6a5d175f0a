//! Connections, tensor fields, and pointwise differential-geometry operators
//! on a coordinate box.
//!
//! Index and sign conventions:
//!
//! * `Connection::gamma(i, j, k)` is the coefficient of `∂_k` in `∇_{∂_i}∂_j`;
//!   the **first** lower index is the differentiation direction.
//! * [`torsion`] and [`curvature`] use
//!   `τ(X,Y) = [X,Y] − ∇_X Y + ∇_Y X` and
//!   `R(X,Y) = ∇_{[X,Y]} − (∇_X ∇_Y − ∇_Y ∇_X)`,
//!   each the negative of the more common sign choice.
//! * The `transport_*` operators and [`horizontal_curvature_components`]
//!   contract the Christoffel symbols with the differentiated object in the
//!   **first** slot (direction second): they are the covariant operators
//!   induced by the horizontal transport of the tangent-bundle lift, which
//!   moves a tangent vector `u` by `du^k = −Γ_{jl}^k u^j dx^l`. On
//!   torsion-free connections they coincide with the `∇`-based operators;
//!   on torsionful ones they differ, and it is the transport family that
//!   makes the lifted-frame structure equations hold exactly.

use crate::autodiff::{EvalError, ScalarField};
use crate::linalg;

/// A vector field with one scalar component per coordinate.
#[derive(Clone, Debug)]
pub struct VectorField {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(dim: usize, comps: Vec<ScalarField>) -> Self {
        assert_eq!(comps.len(), dim, "a vector field needs one component per coordinate");
        assert!(comps.iter().all(|c| c.dim() == dim));
        VectorField { dim, comps }
    }

    /// The coordinate frame field `∂_index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let comps = (0..dim)
            .map(|k| ScalarField::constant(dim, if k == index { 1.0 } else { 0.0 }))
            .collect();
        VectorField { dim, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comp(&self, k: usize) -> &ScalarField {
        &self.comps[k]
    }

    /// Component values at a point.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.comps.iter().map(|c| c.eval_f64(x)).collect()
    }

    /// Jacobian `J[i][k] = ∂_i X^k` at a point.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let grads: Vec<Vec<f64>> = self
            .comps
            .iter()
            .map(|c| c.gradient(x))
            .collect::<Result<_, _>>()?;
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|k| grads[k][i]).collect())
            .collect())
    }
}

/// A twice-covariant tensor field, stored as a dense component matrix
/// `comp(i, j) = T(∂_i, ∂_j)`. Used for the interpolation tensor `A`, for
/// metrics, and for intermediate value matrices.
#[derive(Clone, Debug)]
pub struct CovariantTwoTensor {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl CovariantTwoTensor {
    pub fn new(dim: usize, comps: Vec<ScalarField>) -> Self {
        assert_eq!(comps.len(), dim * dim);
        assert!(comps.iter().all(|c| c.dim() == dim));
        CovariantTwoTensor { dim, comps }
    }

    pub fn zero(dim: usize) -> Self {
        CovariantTwoTensor {
            dim,
            comps: vec![ScalarField::zero(dim); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comp(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.dim + j]
    }

    /// Component values `T_{ij}` at a point.
    pub fn eval_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.comp(i, j).eval_f64(x))
                    .collect()
            })
            .collect()
    }

    /// `T(Z, Y)` as a derived scalar field.
    pub fn contract_fields(&self, z: &VectorField, y: &VectorField) -> ScalarField {
        let d = self.dim;
        ScalarField::sum(
            d,
            (0..d).flat_map(|i| {
                (0..d).map(move |j| self.comp(i, j).mul(z.comp(i)).mul(y.comp(j)))
            }),
        )
    }
}

/// An antisymmetric two-form, stored by its strict upper triangle so that
/// antisymmetry holds structurally.
#[derive(Clone, Debug)]
pub struct TwoForm {
    dim: usize,
    upper: Vec<ScalarField>,
}

impl TwoForm {
    fn upper_len(dim: usize) -> usize {
        dim * (dim - 1) / 2
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.dim);
        i * (2 * self.dim - i - 1) / 2 + (j - i - 1)
    }

    /// Builds from the strict upper triangle, row by row: the entry for
    /// `(i, j)` with `i < j` is `ω(∂_i, ∂_j)`.
    pub fn from_upper(dim: usize, upper: Vec<ScalarField>) -> Self {
        assert_eq!(upper.len(), Self::upper_len(dim));
        assert!(upper.iter().all(|c| c.dim() == dim));
        TwoForm { dim, upper }
    }

    pub fn zero(dim: usize) -> Self {
        TwoForm {
            dim,
            upper: vec![ScalarField::zero(dim); Self::upper_len(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The component `ω(∂_i, ∂_j)` as a field (derived by antisymmetry for
    /// `i ≥ j`).
    pub fn comp_field(&self, i: usize, j: usize) -> ScalarField {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Less => self.upper[self.upper_index(i, j)].clone(),
            Ordering::Equal => ScalarField::zero(self.dim),
            Ordering::Greater => self.upper[self.upper_index(j, i)].neg(),
        }
    }

    /// Value of `ω(∂_i, ∂_j)` at a point.
    pub fn value(&self, i: usize, j: usize, x: &[f64]) -> Result<f64, EvalError> {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Less => self.upper[self.upper_index(i, j)].eval_f64(x),
            Ordering::Equal => Ok(0.0),
            Ordering::Greater => Ok(-self.upper[self.upper_index(j, i)].eval_f64(x)?),
        }
    }

    /// Full component matrix at a point.
    pub fn eval_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.value(i, j, x)).collect())
            .collect()
    }

    /// View as a twice-covariant tensor (for derivative operators that act
    /// on general tensors).
    pub fn as_tensor(&self) -> CovariantTwoTensor {
        let comps = (0..self.dim)
            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
            .map(|(i, j)| self.comp_field(i, j))
            .collect();
        CovariantTwoTensor::new(self.dim, comps)
    }
}

/// An affine connection given by Christoffel-symbol fields
/// `Γ_{ij}^k` with `∇_{∂_i}∂_j = Γ_{ij}^k ∂_k`.
#[derive(Clone, Debug)]
pub struct Connection {
    dim: usize,
    gamma: Vec<ScalarField>,
}

impl Connection {
    /// `gamma[(i*d + j)*d + k]` is `Γ_{ij}^k`.
    pub fn new(dim: usize, gamma: Vec<ScalarField>) -> Self {
        assert_eq!(gamma.len(), dim * dim * dim);
        assert!(gamma.iter().all(|c| c.dim() == dim));
        Connection { dim, gamma }
    }

    /// The flat connection (all Christoffel symbols zero).
    pub fn flat(dim: usize) -> Self {
        Connection {
            dim,
            gamma: vec![ScalarField::zero(dim); dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &ScalarField {
        &self.gamma[(i * self.dim + j) * self.dim + k]
    }

    /// All `Γ_{ij}^k` values at a point, indexed `[i][j][k]`.
    pub fn christoffel_values(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, EvalError> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        (0..self.dim)
                            .map(|k| self.gamma(i, j, k).eval_f64(x))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Values and first partials of all Christoffel symbols at a point:
    /// `(Γ[i][j][k], ∂Γ[p][i][j][k])`.
    #[allow(clippy::type_complexity)]
    pub fn christoffel_jet(
        &self,
        x: &[f64],
    ) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<Vec<f64>>>>), EvalError> {
        let d = self.dim;
        let gv = self.christoffel_values(x)?;
        let mut dg = vec![vec![vec![vec![0.0; d]; d]; d]; d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let grad = self.gamma(i, j, k).gradient(x)?;
                    for (p, &g) in grad.iter().enumerate() {
                        dg[p][i][j][k] = g;
                    }
                }
            }
        }
        Ok((gv, dg))
    }
}

/// Lie bracket `[X, Y]` at a point.
pub fn lie_bracket(x_f: &VectorField, y_f: &VectorField, x: &[f64]) -> Result<Vec<f64>, EvalError> {
    let d = x_f.dim();
    let xv = x_f.evaluate(x)?;
    let yv = y_f.evaluate(x)?;
    let jx = x_f.jacobian(x)?;
    let jy = y_f.jacobian(x)?;
    Ok((0..d)
        .map(|k| {
            (0..d)
                .map(|i| xv[i] * jy[i][k] - yv[i] * jx[i][k])
                .sum()
        })
        .collect())
}

/// Covariant derivative `∇_X Y` at a point (direction in the first
/// Christoffel slot).
pub fn cov_deriv_vector(
    conn: &Connection,
    x_f: &VectorField,
    y_f: &VectorField,
    x: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let d = conn.dim();
    let xv = x_f.evaluate(x)?;
    let yv = y_f.evaluate(x)?;
    let jy = y_f.jacobian(x)?;
    let gv = conn.christoffel_values(x)?;
    Ok((0..d)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..d {
                acc += xv[i] * jy[i][k];
                for j in 0..d {
                    acc += gv[i][j][k] * xv[i] * yv[j];
                }
            }
            acc
        })
        .collect())
}

/// Transport covariant derivative `D_X Y` at a point: the Christoffel
/// contraction puts the differentiated field `Y` in the first slot,
/// `(D_X Y)^k = X^i ∂_i Y^k + Γ_{ji}^k Y^j X^i`.
pub fn transport_deriv_vector(
    conn: &Connection,
    x_f: &VectorField,
    y_f: &VectorField,
    x: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let d = conn.dim();
    let xv = x_f.evaluate(x)?;
    let yv = y_f.evaluate(x)?;
    let jy = y_f.jacobian(x)?;
    let gv = conn.christoffel_values(x)?;
    Ok((0..d)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..d {
                acc += xv[i] * jy[i][k];
                for j in 0..d {
                    acc += gv[j][i][k] * yv[j] * xv[i];
                }
            }
            acc
        })
        .collect())
}

/// Torsion `τ(X,Y) = [X,Y] − ∇_X Y + ∇_Y X` at a point.
pub fn torsion(
    conn: &Connection,
    x_f: &VectorField,
    y_f: &VectorField,
    x: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let br = lie_bracket(x_f, y_f, x)?;
    let dxy = cov_deriv_vector(conn, x_f, y_f, x)?;
    let dyx = cov_deriv_vector(conn, y_f, x_f, x)?;
    Ok((0..conn.dim())
        .map(|k| br[k] - dxy[k] + dyx[k])
        .collect())
}

/// Transport-convention torsion components
/// `τ_D(∂_i, ∂_j)^k = Γ_{ij}^k − Γ_{ji}^k`.
pub fn transport_torsion_components(
    conn: &Connection,
    x: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, EvalError> {
    let d = conn.dim();
    let gv = conn.christoffel_values(x)?;
    Ok((0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| gv[i][j][k] - gv[j][i][k]).collect())
                .collect()
        })
        .collect())
}

/// Curvature components for
/// `R(X,Y) = ∇_{[X,Y]} − (∇_X ∇_Y − ∇_Y ∇_X)`:
/// `out[p][q][i][l]` is the `∂_l` component of `R(∂_p, ∂_q) ∂_i`.
pub fn curvature_components(
    conn: &Connection,
    x: &[f64],
) -> Result<Vec<Vec<Vec<Vec<f64>>>>, EvalError> {
    let d = conn.dim();
    let (gv, dg) = conn.christoffel_jet(x)?;
    let mut out = vec![vec![vec![vec![0.0; d]; d]; d]; d];
    for p in 0..d {
        for q in 0..d {
            for i in 0..d {
                for l in 0..d {
                    let mut acc = -dg[p][q][i][l] + dg[q][p][i][l];
                    for m in 0..d {
                        acc += -gv[q][i][m] * gv[p][m][l] + gv[p][i][m] * gv[q][m][l];
                    }
                    out[p][q][i][l] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Curvature `R(X,Y)Z` at a point (tensorial, so only the pointwise values
/// of the argument fields enter).
pub fn curvature(
    conn: &Connection,
    x_f: &VectorField,
    y_f: &VectorField,
    z_f: &VectorField,
    x: &[f64],
) -> Result<Vec<f64>, EvalError> {
    let comps = curvature_components(conn, x)?;
    let xv = x_f.evaluate(x)?;
    let yv = y_f.evaluate(x)?;
    let zv = z_f.evaluate(x)?;
    Ok(contract_curvature(&comps, &xv, &yv, &zv))
}

/// Curvature components of the horizontal distribution of the lift:
/// `out[p][q][i][l]` is the `∂_l` component of `K(∂_p, ∂_q) ∂_i`, where
/// `[X^h, Y^h] = [X,Y]^h − (K(X,Y)u)^v`. The differentiated slot sits first
/// in every Christoffel contraction:
/// `K(∂_p,∂_q)∂_i = (∂_p Γ_{iq}^l − ∂_q Γ_{ip}^l + Γ_{iq}^k Γ_{kp}^l − Γ_{ip}^k Γ_{kq}^l) ∂_l`.
pub fn horizontal_curvature_components(
    conn: &Connection,
    x: &[f64],
) -> Result<Vec<Vec<Vec<Vec<f64>>>>, EvalError> {
    let d = conn.dim();
    let (gv, dg) = conn.christoffel_jet(x)?;
    let mut out = vec![vec![vec![vec![0.0; d]; d]; d]; d];
    for p in 0..d {
        for q in 0..d {
            for i in 0..d {
                for l in 0..d {
                    let mut acc = dg[p][i][q][l] - dg[q][i][p][l];
                    for k in 0..d {
                        acc += gv[i][q][k] * gv[k][p][l] - gv[i][p][k] * gv[k][q][l];
                    }
                    out[p][q][i][l] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Contracts 4-index curvature components with vector values:
/// `(Σ_{p,q,i} C[p][q][i][l] X^p Y^q Z^i)_l`.
pub fn contract_curvature(
    comps: &[Vec<Vec<Vec<f64>>>],
    xv: &[f64],
    yv: &[f64],
    zv: &[f64],
) -> Vec<f64> {
    let d = xv.len();
    (0..d)
        .map(|l| {
            let mut acc = 0.0;
            for p in 0..d {
                for q in 0..d {
                    for i in 0..d {
                        acc += comps[p][q][i][l] * xv[p] * yv[q] * zv[i];
                    }
                }
            }
            acc
        })
        .collect()
}

/// Covariant derivative of a twice-covariant tensor, evaluated on fields:
/// `(∇_X T)(Z, Y) = X·(T(Z,Y)) − T(∇_X Z, Y) − T(Z, ∇_X Y)`.
pub fn cov_deriv_two_tensor(
    conn: &Connection,
    t: &CovariantTwoTensor,
    x_f: &VectorField,
    z_f: &VectorField,
    y_f: &VectorField,
    x: &[f64],
) -> Result<f64, EvalError> {
    let d = conn.dim();
    let scalar = t.contract_fields(z_f, y_f);
    let grad = scalar.gradient(x)?;
    let xv = x_f.evaluate(x)?;
    let directional: f64 = (0..d).map(|i| xv[i] * grad[i]).sum();
    let tv = t.eval_matrix(x)?;
    let zv = z_f.evaluate(x)?;
    let yv = y_f.evaluate(x)?;
    let dz = cov_deriv_vector(conn, x_f, z_f, x)?;
    let dy = cov_deriv_vector(conn, x_f, y_f, x)?;
    let mut acc = directional;
    for i in 0..d {
        for j in 0..d {
            acc -= tv[i][j] * (dz[i] * yv[j] + zv[i] * dy[j]);
        }
    }
    Ok(acc)
}

/// Transport covariant derivative of a twice-covariant tensor on coordinate
/// frames: `out[p][q][r] = (D_{∂_p} T)(∂_q, ∂_r)
/// = ∂_p T_{qr} − Γ_{qp}^m T_{mr} − Γ_{rp}^m T_{qm}`.
pub fn transport_deriv_two_tensor_components(
    conn: &Connection,
    t: &CovariantTwoTensor,
    x: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, EvalError> {
    let d = conn.dim();
    let gv = conn.christoffel_values(x)?;
    let tv = t.eval_matrix(x)?;
    let mut dt = vec![vec![vec![0.0; d]; d]; d];
    for q in 0..d {
        for r in 0..d {
            let grad = t.comp(q, r).gradient(x)?;
            for (p, &g) in grad.iter().enumerate() {
                dt[p][q][r] = g;
            }
        }
    }
    let mut out = vec![vec![vec![0.0; d]; d]; d];
    for p in 0..d {
        for q in 0..d {
            for r in 0..d {
                let mut acc = dt[p][q][r];
                for m in 0..d {
                    acc -= gv[q][p][m] * tv[m][r] + gv[r][p][m] * tv[q][m];
                }
                out[p][q][r] = acc;
            }
        }
    }
    Ok(out)
}

/// Codazzi-type residual on fields:
/// `(∇_X A)(Z, Y) − (∇_Y A)(Z, X) − A(Z, τ(X,Y))`.
pub fn codazzi_residual(
    conn: &Connection,
    a: &CovariantTwoTensor,
    x_f: &VectorField,
    y_f: &VectorField,
    z_f: &VectorField,
    x: &[f64],
) -> Result<f64, EvalError> {
    let d = conn.dim();
    let first = cov_deriv_two_tensor(conn, a, x_f, z_f, y_f, x)?;
    let second = cov_deriv_two_tensor(conn, a, y_f, z_f, x_f, x)?;
    let tv = a.eval_matrix(x)?;
    let zv = z_f.evaluate(x)?;
    let tau = torsion(conn, x_f, y_f, x)?;
    let mut acc = first - second;
    for i in 0..d {
        for j in 0..d {
            acc -= tv[i][j] * zv[i] * tau[j];
        }
    }
    Ok(acc)
}

/// Transport-convention Codazzi residuals on coordinate frames:
/// `out[l][s][j] = (D_{∂_l} A)(∂_j, ∂_s) − (D_{∂_s} A)(∂_j, ∂_l)
/// − A(∂_j, τ_D(∂_l, ∂_s))`, which expands to
/// `∂_l A_{js} − ∂_s A_{jl} − Γ_{jl}^k A_{ks} + Γ_{js}^k A_{kl}`.
pub fn transport_codazzi_components(
    conn: &Connection,
    a: &CovariantTwoTensor,
    x: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, EvalError> {
    let d = conn.dim();
    let da = transport_deriv_two_tensor_components(conn, a, x)?;
    let tau = transport_torsion_components(conn, x)?;
    let av = a.eval_matrix(x)?;
    let mut out = vec![vec![vec![0.0; d]; d]; d];
    for l in 0..d {
        for s in 0..d {
            for j in 0..d {
                let mut acc = da[l][j][s] - da[s][j][l];
                for k in 0..d {
                    acc -= av[j][k] * tau[l][s][k];
                }
                out[l][s][j] = acc;
            }
        }
    }
    Ok(out)
}

struct LeviCivitaField {
    g: CovariantTwoTensor,
    i: usize,
    j: usize,
    k: usize,
}

impl crate::autodiff::FieldFn for LeviCivitaField {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        let d = self.g.dim();
        let gv = self.g.eval_matrix(x)?;
        let ginv = linalg::invert(&gv, "inverting the metric")?;
        let mut dg = vec![vec![vec![0.0; d]; d]; d];
        for a in 0..d {
            for b in 0..d {
                let grad = self.g.comp(a, b).gradient(x)?;
                for (p, &gr) in grad.iter().enumerate() {
                    dg[p][a][b] = gr;
                }
            }
        }
        let (i, j, k) = (self.i, self.j, self.k);
        let mut acc = 0.0;
        for l in 0..d {
            acc += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        }
        Ok(0.5 * acc)
    }

    fn eval_dual(&self, x: &[crate::autodiff::Dual]) -> Result<crate::autodiff::Dual, EvalError> {
        use crate::autodiff::{hybrid_partial, Dual, Scalar};
        let d = self.g.dim();
        let gv: Vec<Vec<Dual>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| self.g.comp(a, b).eval_dual(x))
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let ginv = linalg::invert(&gv, "inverting the metric")?;
        let m = x.first().map_or(0, |t| t.grad.len());
        let zero = Dual::constant(0.0, m);
        let mut dg = vec![vec![vec![zero.clone(); d]; d]; d];
        for a in 0..d {
            for b in 0..d {
                for p in 0..d {
                    dg[p][a][b] = hybrid_partial(self.g.comp(a, b), p, x)?;
                }
            }
        }
        let (i, j, k) = (self.i, self.j, self.k);
        let mut acc = zero;
        for l in 0..d {
            let sum = dg[i][j][l].clone() + dg[j][i][l].clone() - dg[l][i][j].clone();
            acc = acc + ginv[k][l].clone() * sum;
        }
        let half = acc.const_like(0.5);
        Ok(half * acc)
    }
}

/// Levi-Civita connection of a (pseudo-)metric:
/// `Γ_{ij}^k = ½ g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
/// The metric must be symmetric and invertible on the evaluation box;
/// a singular metric surfaces as an evaluation error.
pub fn levi_civita(g: &CovariantTwoTensor) -> Connection {
    let d = g.dim();
    let mut fields = Vec::with_capacity(d * d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                fields.push(ScalarField::from_field_fn(std::sync::Arc::new(
                    LeviCivitaField {
                        g: g.clone(),
                        i,
                        j,
                        k,
                    },
                )));
            }
        }
    }
    Connection::new(d, fields)
}

/// The covariant-derivative tensor of a one-form:
/// `A_{ij} = (∇_{∂_j} α)(∂_i) = ∂_j α_i − Γ_{ji}^k α_k`.
pub fn one_form_derivative_tensor(conn: &Connection, alpha: &[ScalarField]) -> CovariantTwoTensor {
    let d = conn.dim();
    assert_eq!(alpha.len(), d);
    let mut comps = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let lead = alpha[i].partial_field(j);
            let correction = ScalarField::sum(
                d,
                (0..d).map(|k| conn.gamma(j, i, k).mul(&alpha[k])),
            );
            comps.push(lead.sub(&correction));
        }
    }
    CovariantTwoTensor::new(d, comps)
}
