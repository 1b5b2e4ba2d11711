//! Evaluable matrix-valued functions on the open unit disk.
//!
//! Candidate multipliers, realization blocks and free parameters are all
//! carried around as [`AnalyticMatrixFunction`]: a fixed shape plus a
//! thread-safe evaluation closure. Singularities known at construction
//! (denominator roots of rational functions) are reported up front;
//! composite functions report failures pointwise through `Err`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, C64};
use crate::par;

/// How a function was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Direct formula (constants, polynomials, rationals, kernels).
    ClosedForm,
    /// Built by a linear-fractional solve step.
    LftComposite,
    /// A free Schur-class parameter component.
    Parameter,
}

type EvalFn = dyn Fn(C64) -> Result<CMatrix> + Send + Sync;

#[derive(Clone)]
pub struct AnalyticMatrixFunction {
    rows: usize,
    cols: usize,
    provenance: Provenance,
    exceptional: Vec<C64>,
    eval_fn: Arc<EvalFn>,
}

impl fmt::Debug for AnalyticMatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticMatrixFunction")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("provenance", &self.provenance)
            .field("exceptional", &self.exceptional)
            .finish()
    }
}

impl AnalyticMatrixFunction {
    pub fn from_fn<F>(rows: usize, cols: usize, provenance: Provenance, f: F) -> Self
    where
        F: Fn(C64) -> Result<CMatrix> + Send + Sync + 'static,
    {
        AnalyticMatrixFunction {
            rows,
            cols,
            provenance,
            exceptional: Vec::new(),
            eval_fn: Arc::new(f),
        }
    }

    pub fn constant(value: CMatrix) -> Self {
        let (rows, cols) = value.shape();
        Self::from_fn(rows, cols, Provenance::ClosedForm, move |_| {
            Ok(value.clone())
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::constant(CMatrix::zeros(rows, cols))
    }

    /// `sum_k coeffs[k] z^k`.
    pub fn matrix_polynomial(coeffs: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidArgument(
                "polynomial needs at least one coefficient".to_string(),
            ));
        };
        let (rows, cols) = first.shape();
        if coeffs.iter().any(|c| c.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch(
                "polynomial coefficients must share one shape".to_string(),
            ));
        }
        Ok(Self::from_fn(
            rows,
            cols,
            Provenance::ClosedForm,
            move |z| {
                let mut acc = CMatrix::zeros(rows, cols);
                for c in coeffs.iter().rev() {
                    acc = acc * z + c;
                }
                Ok(acc)
            },
        ))
    }

    /// Matrix polynomial numerator over a scalar polynomial denominator.
    /// Denominator roots inside the closed disk are reported as the
    /// exceptional set.
    pub fn matrix_rational(num: Vec<CMatrix>, den: Vec<C64>) -> Result<Self> {
        let numerator = Self::matrix_polynomial(num)?;
        if den.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidArgument(
                "denominator polynomial is identically zero".to_string(),
            ));
        }
        let exceptional: Vec<C64> = linalg::polynomial_roots(&den)
            .into_iter()
            .filter(|r| r.norm() < 1.0 + 1e-12)
            .collect();
        let den_scale: f64 = den.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let (rows, cols) = (numerator.rows, numerator.cols);
        let mut out = Self::from_fn(rows, cols, Provenance::ClosedForm, move |z| {
            let mut d = cr(0.0);
            for c in den.iter().rev() {
                d = d * z + c;
            }
            if d.norm() <= 1e-14 * den_scale.max(1.0) {
                return Err(Error::EvalFailed {
                    z,
                    reason: "denominator vanishes".to_string(),
                });
            }
            Ok(numerator.eval(z)? / d)
        });
        out.exceptional = exceptional;
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Singular points inside the disk known at construction time.
    pub fn exceptional_points(&self) -> &[C64] {
        &self.exceptional
    }

    /// Evaluates at a point of the open unit disk.
    pub fn eval(&self, z: C64) -> Result<CMatrix> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk { modulus: z.norm() });
        }
        let m = (self.eval_fn)(z)?;
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        Ok(m)
    }

    /// Evaluates at many points. Work fans out across threads when the
    /// `parallel` feature is active; results keep input order and the first
    /// failure (by index) is reported.
    pub fn eval_many(&self, points: &[C64]) -> Result<Vec<CMatrix>> {
        let results = par::map_indexed(points.len(), |i| self.eval(points[i]));
        results.into_iter().collect()
    }

    /// Pointwise product `self(z) * rhs(z)`.
    pub fn product(&self, rhs: &AnalyticMatrixFunction) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "product: {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (a, b) = (self.clone(), rhs.clone());
        let mut out = Self::from_fn(self.rows, rhs.cols, Provenance::ClosedForm, move |z| {
            Ok(a.eval(z)? * b.eval(z)?)
        });
        out.exceptional = [self.exceptional.clone(), rhs.exceptional.clone()].concat();
        Ok(out)
    }

    /// Pointwise sum.
    pub fn sum(&self, rhs: &AnalyticMatrixFunction) -> Result<Self> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(Error::DimensionMismatch(format!(
                "sum: {}x{} plus {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (a, b) = (self.clone(), rhs.clone());
        let mut out = Self::from_fn(self.rows, self.cols, Provenance::ClosedForm, move |z| {
            Ok(a.eval(z)? + b.eval(z)?)
        });
        out.exceptional = [self.exceptional.clone(), rhs.exceptional.clone()].concat();
        Ok(out)
    }

    /// Pointwise inverse of a square-valued function, guarded by a
    /// condition-number cap.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(
                "inverse needs a square-valued function".to_string(),
            ));
        }
        let a = self.clone();
        Ok(Self::from_fn(
            self.rows,
            self.cols,
            Provenance::ClosedForm,
            move |z| {
                let m = a.eval(z)?;
                if linalg::cond(&m) > 1e12 {
                    return Err(Error::EvalFailed {
                        z,
                        reason: "value is numerically singular".to_string(),
                    });
                }
                linalg::inverse(&m, "pointwise inverse")
            },
        ))
    }
}
