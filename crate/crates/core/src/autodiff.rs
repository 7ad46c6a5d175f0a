//! Forward-mode automatic differentiation and the scalar-field abstraction.
//!
//! A [`Dual`] carries a value together with its derivatives along `m` seed
//! directions, so a single evaluation of a function over duals produces the
//! value and a full directional-derivative row. Seeding the coordinate
//! directions yields exact first partials (no truncation error).
//!
//! [`ScalarField`] is the shared currency of the geometry modules: a function
//! on a coordinate box that can be evaluated over plain reals or over duals
//! through the same code path. Fields built from closed-form expressions
//! differentiate exactly; fields whose *definition* already contains a
//! derivative (see [`ScalarField::partial_field`]) evaluate their value by
//! automatic differentiation and their seed derivatives by central finite
//! differences of first derivatives, keeping the dual carrier first-order.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Step for every central finite difference in this crate.
pub const FD_STEP: f64 = 1e-5;

/// Error produced while evaluating a field at a point.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    /// The evaluation left the mathematical domain of an operation.
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
    /// The point had the wrong number of coordinates.
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A matrix that must be invertible was numerically singular.
    #[error("singular matrix while {context}")]
    SingularMatrix { context: String },
    /// An underlying error, annotated with the sample point that triggered it.
    #[error("at point {point:?}: {source}")]
    AtPoint {
        point: Vec<f64>,
        #[source]
        source: Box<EvalError>,
    },
}

impl EvalError {
    /// Annotates `err` with the sample point where it occurred. Errors that
    /// already carry a point keep the innermost (most precise) one.
    pub fn at_point(point: &[f64], err: EvalError) -> EvalError {
        match err {
            wrapped @ EvalError::AtPoint { .. } => wrapped,
            other => EvalError::AtPoint {
                point: point.to_vec(),
                source: Box::new(other),
            },
        }
    }
}

/// A first-order dual number with `m` simultaneous seed directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    /// Function value.
    pub val: f64,
    /// Directional derivatives, one per seed.
    pub grad: Vec<f64>,
}

impl Dual {
    /// A dual with the given value and derivative row.
    pub fn new(val: f64, grad: Vec<f64>) -> Self {
        Dual { val, grad }
    }

    /// A constant: value `val`, zero derivative along all `m` seeds.
    pub fn constant(val: f64, m: usize) -> Self {
        Dual { val, grad: vec![0.0; m] }
    }

    /// Number of seed directions this dual carries.
    pub fn seeds(&self) -> usize {
        self.grad.len()
    }

    /// Seeds a point with the identity: coordinate `i` gets derivative `e_i`,
    /// so evaluating a field on the result yields its full gradient.
    pub fn seed_all(point: &[f64]) -> Vec<Dual> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut grad = vec![0.0; n];
                grad[i] = 1.0;
                Dual { val: x, grad }
            })
            .collect()
    }

    /// Seeds a point with the single coordinate direction `wrt`.
    pub fn seed_one(point: &[f64], wrt: usize) -> Vec<Dual> {
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Dual {
                val: x,
                grad: vec![if i == wrt { 1.0 } else { 0.0 }],
            })
            .collect()
    }

    /// Seeds a point with an arbitrary direction vector (one seed).
    pub fn seed_direction(point: &[f64], dir: &[f64]) -> Vec<Dual> {
        debug_assert_eq!(point.len(), dir.len());
        point
            .iter()
            .zip(dir)
            .map(|(&x, &d)| Dual { val: x, grad: vec![d] })
            .collect()
    }

    fn zip_grad(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        debug_assert_eq!(a.len(), b.len(), "seed count mismatch");
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            val: self.val + rhs.val,
            grad: Dual::zip_grad(&self.grad, &rhs.grad, |a, b| a + b),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            val: self.val - rhs.val,
            grad: Dual::zip_grad(&self.grad, &rhs.grad, |a, b| a - b),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            val: self.val * rhs.val,
            grad: Dual::zip_grad(&self.grad, &rhs.grad, |a, b| {
                a * rhs.val + self.val * b
            }),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let val = self.val / rhs.val;
        Dual {
            val,
            grad: Dual::zip_grad(&self.grad, &rhs.grad, |a, b| {
                (a - val * b) / rhs.val
            }),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            val: -self.val,
            grad: self.grad.iter().map(|&g| -g).collect(),
        }
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.val, self.grad)
    }
}

/// Number-like values the evaluators are generic over: plain `f64` and
/// [`Dual`]. The value parts of all operations are computed with identical
/// `f64` primitives, so evaluating over duals with zero seeds reproduces the
/// plain-real result bit for bit.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same seed shape as `self`.
    fn const_like(&self, c: f64) -> Self;
    /// The value part.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// General power; callers must ensure the base is positive.
    fn powf(self, e: Self) -> Self;
}

impl Scalar for f64 {
    fn const_like(&self, c: f64) -> f64 {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
    fn powf(self, e: f64) -> f64 {
        f64::powf(self, e)
    }
}

impl Scalar for Dual {
    fn const_like(&self, c: f64) -> Dual {
        Dual::constant(c, self.grad.len())
    }
    fn value(&self) -> f64 {
        self.val
    }
    fn exp(self) -> Dual {
        let v = f64::exp(self.val);
        Dual {
            val: v,
            grad: self.grad.iter().map(|&g| g * v).collect(),
        }
    }
    fn sin(self) -> Dual {
        let c = f64::cos(self.val);
        Dual {
            val: f64::sin(self.val),
            grad: self.grad.iter().map(|&g| g * c).collect(),
        }
    }
    fn cos(self) -> Dual {
        let s = f64::sin(self.val);
        Dual {
            val: f64::cos(self.val),
            grad: self.grad.iter().map(|&g| -g * s).collect(),
        }
    }
    fn ln(self) -> Dual {
        Dual {
            val: f64::ln(self.val),
            grad: self.grad.iter().map(|&g| g / self.val).collect(),
        }
    }
    fn sqrt(self) -> Dual {
        let v = f64::sqrt(self.val);
        Dual {
            val: v,
            grad: self.grad.iter().map(|&g| g / (2.0 * v)).collect(),
        }
    }
    fn powi(self, n: i32) -> Dual {
        let val = f64::powi(self.val, n);
        let dcoef = if n == 0 {
            0.0
        } else {
            f64::from(n) * f64::powi(self.val, n - 1)
        };
        Dual {
            val,
            grad: self.grad.iter().map(|&g| g * dcoef).collect(),
        }
    }
    fn powf(self, e: Dual) -> Dual {
        let val = f64::powf(self.val, e.val);
        let ln_b = f64::ln(self.val);
        Dual {
            val,
            grad: Dual::zip_grad(&self.grad, &e.grad, |db, de| {
                val * (de * ln_b + e.val * db / self.val)
            }),
        }
    }
}

/// Implementation surface of a scalar field: evaluation over reals and over
/// duals at points with `dim` coordinates.
pub trait FieldFn: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError>;
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError>;
}

/// A real-valued function on a coordinate box, cheap to clone and compose.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<dyn FieldFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim={})", self.dim())
    }
}

struct ConstField {
    dim: usize,
    c: f64,
}

impl FieldFn for ConstField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_len(self.dim, x.len())?;
        Ok(self.c)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        check_len(self.dim, x.len())?;
        let m = x.first().map_or(0, Dual::seeds);
        Ok(Dual::constant(self.c, m))
    }
}

struct CoordField {
    dim: usize,
    index: usize,
}

impl FieldFn for CoordField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_len(self.dim, x.len())?;
        Ok(x[self.index])
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        check_len(self.dim, x.len())?;
        Ok(x[self.index].clone())
    }
}

enum BinKind {
    Add,
    Sub,
    Mul,
}

struct BinField {
    kind: BinKind,
    lhs: ScalarField,
    rhs: ScalarField,
}

impl FieldFn for BinField {
    fn dim(&self) -> usize {
        self.lhs.dim()
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        let a = self.lhs.eval_f64(x)?;
        let b = self.rhs.eval_f64(x)?;
        Ok(match self.kind {
            BinKind::Add => a + b,
            BinKind::Sub => a - b,
            BinKind::Mul => a * b,
        })
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        let a = self.lhs.eval_dual(x)?;
        let b = self.rhs.eval_dual(x)?;
        Ok(match self.kind {
            BinKind::Add => a + b,
            BinKind::Sub => a - b,
            BinKind::Mul => a * b,
        })
    }
}

struct ScaleField {
    factor: f64,
    inner: ScalarField,
}

impl FieldFn for ScaleField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(self.factor * self.inner.eval_f64(x)?)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        let v = self.inner.eval_dual(x)?;
        let c = v.const_like(self.factor);
        Ok(c * v)
    }
}

/// Widens a field on the base to the doubled coordinate space `(x, u)`,
/// reading only the leading base coordinates.
struct PromoteField {
    inner: ScalarField,
}

impl FieldFn for PromoteField {
    fn dim(&self) -> usize {
        2 * self.inner.dim()
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_len(self.dim(), x.len())?;
        self.inner.eval_f64(&x[..self.inner.dim()])
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        check_len(self.dim(), x.len())?;
        self.inner.eval_dual(&x[..self.inner.dim()])
    }
}

/// Restricts a field on the doubled coordinate space to the zero section
/// `u = 0` of the trailing half.
struct ZeroSectionField {
    inner: ScalarField,
}

impl FieldFn for ZeroSectionField {
    fn dim(&self) -> usize {
        self.inner.dim() / 2
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_len(self.dim(), x.len())?;
        let mut full = x.to_vec();
        full.resize(self.inner.dim(), 0.0);
        self.inner.eval_f64(&full)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        check_len(self.dim(), x.len())?;
        let m = x.first().map_or(0, Dual::seeds);
        let mut full = x.to_vec();
        full.resize(self.inner.dim(), Dual::constant(0.0, m));
        self.inner.eval_dual(&full)
    }
}

/// First partial derivative of a field, as a field.
///
/// Plain-real evaluation is an exact forward-mode derivative. Dual evaluation
/// keeps the carrier first-order: the value is the automatic derivative at
/// the base point, and the derivative along each seed direction is a central
/// finite difference (step [`FD_STEP`]) of automatic derivatives. Seeds that
/// are exactly zero stay exact, so zero-seed dual evaluation still matches
/// plain-real evaluation bit for bit.
struct DerivField {
    inner: ScalarField,
    wrt: usize,
}

impl FieldFn for DerivField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.inner.partial(self.wrt, x)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        check_len(self.dim(), x.len())?;
        let base: Vec<f64> = x.iter().map(|d| d.val).collect();
        let val = self.inner.partial(self.wrt, &base)?;
        let m = x.first().map_or(0, Dual::seeds);
        let mut grad = vec![0.0; m];
        for (s, g) in grad.iter_mut().enumerate() {
            let dir: Vec<f64> = x.iter().map(|d| d.grad[s]).collect();
            if dir.iter().all(|&d| d == 0.0) {
                continue;
            }
            let plus: Vec<f64> = base
                .iter()
                .zip(&dir)
                .map(|(&b, &d)| b + FD_STEP * d)
                .collect();
            let minus: Vec<f64> = base
                .iter()
                .zip(&dir)
                .map(|(&b, &d)| b - FD_STEP * d)
                .collect();
            let fp = self.inner.partial(self.wrt, &plus)?;
            let fm = self.inner.partial(self.wrt, &minus)?;
            *g = (fp - fm) / (2.0 * FD_STEP);
        }
        Ok(Dual { val, grad })
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), EvalError> {
    if expected == got {
        Ok(())
    } else {
        Err(EvalError::DimensionMismatch { expected, got })
    }
}

impl ScalarField {
    /// Wraps a [`FieldFn`] implementation.
    pub fn from_field_fn(inner: Arc<dyn FieldFn>) -> Self {
        ScalarField { inner }
    }

    /// The constant field `c` on a `dim`-dimensional box.
    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField {
            inner: Arc::new(ConstField { dim, c }),
        }
    }

    /// The identically-zero field.
    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    /// The coordinate function `x ↦ x[index]`.
    pub fn coord(dim: usize, index: usize) -> Self {
        assert!(index < dim, "coordinate index out of range");
        ScalarField {
            inner: Arc::new(CoordField { dim, index }),
        }
    }

    /// Number of coordinates of the points this field accepts.
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Evaluates over plain reals.
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.inner.eval_f64(x)
    }

    /// Evaluates over duals.
    pub fn eval_dual(&self, x: &[Dual]) -> Result<Dual, EvalError> {
        self.inner.eval_dual(x)
    }

    /// Exact first partial `∂f/∂x[wrt]` by single-seed forward mode.
    pub fn partial(&self, wrt: usize, x: &[f64]) -> Result<f64, EvalError> {
        let seeded = Dual::seed_one(x, wrt);
        Ok(self.eval_dual(&seeded)?.grad[0])
    }

    /// Full gradient in one dual evaluation (identity seeding).
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let seeded = Dual::seed_all(x);
        Ok(self.eval_dual(&seeded)?.grad)
    }

    /// Central-difference partial with step `h`, for cross-checking.
    pub fn fd_partial(&self, wrt: usize, x: &[f64], h: f64) -> Result<f64, EvalError> {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[wrt] += h;
        minus[wrt] -= h;
        Ok((self.eval_f64(&plus)? - self.eval_f64(&minus)?) / (2.0 * h))
    }

    /// Pointwise sum.
    pub fn add(&self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim(), rhs.dim());
        ScalarField {
            inner: Arc::new(BinField {
                kind: BinKind::Add,
                lhs: self.clone(),
                rhs: rhs.clone(),
            }),
        }
    }

    /// Pointwise difference.
    pub fn sub(&self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim(), rhs.dim());
        ScalarField {
            inner: Arc::new(BinField {
                kind: BinKind::Sub,
                lhs: self.clone(),
                rhs: rhs.clone(),
            }),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim(), rhs.dim());
        ScalarField {
            inner: Arc::new(BinField {
                kind: BinKind::Mul,
                lhs: self.clone(),
                rhs: rhs.clone(),
            }),
        }
    }

    /// Pointwise scaling by a constant.
    pub fn scale(&self, factor: f64) -> ScalarField {
        ScalarField {
            inner: Arc::new(ScaleField {
                factor,
                inner: self.clone(),
            }),
        }
    }

    /// Pointwise negation.
    pub fn neg(&self) -> ScalarField {
        self.scale(-1.0)
    }

    /// Widens a base field to the doubled coordinate space `(x, u)`; the
    /// result ignores the trailing `u` coordinates.
    pub fn promote_tangent(&self) -> ScalarField {
        ScalarField {
            inner: Arc::new(PromoteField { inner: self.clone() }),
        }
    }

    /// Restricts a field on the doubled space `(x, u)` to `u = 0`.
    pub fn at_zero_section(&self) -> ScalarField {
        assert!(self.dim() % 2 == 0, "zero-section restriction needs an even dimension");
        ScalarField {
            inner: Arc::new(ZeroSectionField { inner: self.clone() }),
        }
    }

    /// The partial derivative `∂f/∂x[wrt]` as a field (see [`DerivField`]
    /// semantics in the module docs: exact over reals, hybrid over duals).
    pub fn partial_field(&self, wrt: usize) -> ScalarField {
        assert!(wrt < self.dim(), "derivative coordinate out of range");
        ScalarField {
            inner: Arc::new(DerivField {
                inner: self.clone(),
                wrt,
            }),
        }
    }

    /// Sums a sequence of fields; `dim` is used when the iterator is empty.
    pub fn sum(dim: usize, fields: impl IntoIterator<Item = ScalarField>) -> ScalarField {
        let mut acc: Option<ScalarField> = None;
        for f in fields {
            acc = Some(match acc {
                None => f,
                Some(a) => a.add(&f),
            });
        }
        acc.unwrap_or_else(|| ScalarField::zero(dim))
    }
}

/// Hybrid partial of `f` with respect to coordinate `wrt` at a dual point:
/// automatic-derivative value, finite-difference seed derivatives. Shared by
/// [`ScalarField::partial_field`] and the metric-derived Christoffel fields.
pub fn hybrid_partial(f: &ScalarField, wrt: usize, x: &[Dual]) -> Result<Dual, EvalError> {
    DerivField {
        inner: f.clone(),
        wrt,
    }
    .eval_dual(x)
}
