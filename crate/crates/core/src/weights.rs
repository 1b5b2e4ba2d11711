//! Weight sequences, reproducing kernels and the factored kernel.
//!
//! A weight sequence `beta` is non-increasing with `beta_0 = 1`. Two
//! families are supported: the Bergman family `beta_j = j!(n-1)!/(j+n-1)!`
//! and explicit finite heads continued by either a constant or a Bergman
//! rule. Alongside `beta` we store the nonnegative difference sequence
//! `delta_0 = 1`, `delta_j = 1/beta_j - 1/beta_{j-1}`, whose generating
//! series is the factored kernel `(1 - z*conj(w)) * k_beta(z, conj(w))`.
//! Storing `delta` rather than its reciprocal keeps eventually-constant
//! weights (where the reciprocal is infinite) finite.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{c64, cr, CMatrix, CVector, C64};

/// Continuation rule for explicit weight heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tail {
    /// Repeat the last head value forever.
    ConstantLast,
    /// Continue with the Bergman-`n` values at the same indices.
    Bergman(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Bergman(u32),
    Explicit { head: Vec<f64>, tail: Tail },
}

const CACHE_LEN: usize = 2048;
const SERIES_EPS: f64 = 1e-15;
const SERIES_CAP: usize = 10_000_000;

/// A non-increasing weight sequence with its derived difference sequence.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    family: Family,
    beta: Vec<f64>,
    delta: Vec<f64>,
    sqrt_delta: Vec<f64>,
}

impl PartialEq for WeightSequence {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

fn binomial_big(top: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(top - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// Exact `beta_j = 1 / C(j+n-1, j)` for the Bergman-`n` family.
fn bergman_beta_exact(n: u32, j: u64) -> BigRational {
    BigRational::new(BigInt::one(), binomial_big(j + u64::from(n) - 1, j))
}

/// Exact `delta_j = C(n+j-2, j)` for the Bergman-`n` family (`delta_0 = 1`).
fn bergman_delta_exact(n: u32, j: u64) -> BigRational {
    if j == 0 {
        return BigRational::one();
    }
    if n == 1 {
        return BigRational::zero();
    }
    BigRational::from_integer(binomial_big(u64::from(n) + j - 2, j))
}

fn bergman_beta_f64(n: u32, j: u64) -> f64 {
    let mut acc = 1.0_f64;
    for i in 1..=j {
        acc *= i as f64 / (i as f64 + f64::from(n) - 1.0);
    }
    acc
}

impl WeightSequence {
    /// The Bergman-`n` weight; `n = 1` is the Hardy space.
    pub fn bergman(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "bergman order must be >= 1".to_string(),
            ));
        }
        let family = Family::Bergman(n);
        Ok(Self::with_caches(family))
    }

    /// Shorthand for `bergman(1)`.
    pub fn hardy() -> Self {
        Self::bergman(1).expect("bergman(1) is valid")
    }

    /// Explicit head continued by a tail rule. The head must start at 1,
    /// stay positive and be non-increasing, including across the seam into
    /// the tail.
    pub fn explicit(head: Vec<f64>, tail: Tail) -> Result<Self> {
        if head.is_empty() {
            return Err(Error::InvalidArgument(
                "explicit weight needs a non-empty head".to_string(),
            ));
        }
        if (head[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "beta_0 must equal 1, got {}",
                head[0]
            )));
        }
        if head.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be positive and finite".to_string(),
            ));
        }
        if head.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "weight sequence must be non-increasing".to_string(),
            ));
        }
        if let Tail::Bergman(n) = tail {
            if n == 0 {
                return Err(Error::InvalidArgument(
                    "bergman tail order must be >= 1".to_string(),
                ));
            }
            let seam = bergman_beta_f64(n, head.len() as u64);
            if seam > *head.last().unwrap() {
                return Err(Error::InvalidArgument(format!(
                    "bergman tail value {} at index {} exceeds last head value {}",
                    seam,
                    head.len(),
                    head.last().unwrap()
                )));
            }
        }
        Ok(Self::with_caches(Family::Explicit { head, tail }))
    }

    fn with_caches(family: Family) -> Self {
        let mut w = WeightSequence {
            family,
            beta: Vec::new(),
            delta: Vec::new(),
            sqrt_delta: Vec::new(),
        };
        let mut beta = Vec::with_capacity(CACHE_LEN);
        let mut delta = Vec::with_capacity(CACHE_LEN);
        for j in 0..CACHE_LEN {
            beta.push(w.beta_uncached(j));
            delta.push(w.delta_uncached(j));
        }
        w.sqrt_delta = delta.iter().map(|d| d.sqrt()).collect();
        w.beta = beta;
        w.delta = delta;
        w
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// True when the sequence is identically 1 (the Hardy weight).
    pub fn is_hardy(&self) -> bool {
        match &self.family {
            Family::Bergman(n) => *n == 1,
            Family::Explicit { head, tail } => {
                head.iter().all(|&b| b == 1.0)
                    && matches!(tail, Tail::ConstantLast | Tail::Bergman(1))
            }
        }
    }

    fn beta_uncached(&self, j: usize) -> f64 {
        match &self.family {
            Family::Bergman(n) => {
                if j <= 64 {
                    rational_to_f64(&bergman_beta_exact(*n, j as u64))
                } else {
                    bergman_beta_f64(*n, j as u64)
                }
            }
            Family::Explicit { head, tail } => {
                if j < head.len() {
                    head[j]
                } else {
                    match tail {
                        Tail::ConstantLast => *head.last().unwrap(),
                        Tail::Bergman(n) => bergman_beta_f64(*n, j as u64),
                    }
                }
            }
        }
    }

    fn delta_uncached(&self, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        match &self.family {
            Family::Bergman(n) => {
                if j <= 64 {
                    rational_to_f64(&bergman_delta_exact(*n, j as u64))
                } else if *n == 1 {
                    0.0
                } else {
                    // C(n+j-2, j) as a running product
                    let mut acc = 1.0_f64;
                    for i in 1..=j {
                        acc *= (f64::from(*n) + i as f64 - 2.0) / i as f64;
                    }
                    acc
                }
            }
            Family::Explicit { head, tail } => {
                if j > head.len() {
                    // strictly inside the tail: both beta values follow the rule
                    match tail {
                        Tail::ConstantLast => 0.0,
                        Tail::Bergman(n) => {
                            rational_to_f64(&bergman_delta_exact(*n, j as u64))
                        }
                    }
                } else {
                    // head or seam index: difference the actual values
                    (1.0 / self.beta_uncached(j) - 1.0 / self.beta_uncached(j - 1)).max(0.0)
                }
            }
        }
    }

    /// `beta_j`.
    pub fn beta(&self, j: usize) -> f64 {
        if j < self.beta.len() {
            self.beta[j]
        } else {
            self.beta_uncached(j)
        }
    }

    /// `delta_j = 1/beta_j - 1/beta_{j-1}` with `delta_0 = 1`.
    pub fn delta(&self, j: usize) -> f64 {
        if j < self.delta.len() {
            self.delta[j]
        } else {
            self.delta_uncached(j)
        }
    }

    pub fn sqrt_delta(&self, j: usize) -> f64 {
        if j < self.sqrt_delta.len() {
            self.sqrt_delta[j]
        } else {
            self.delta(j).sqrt()
        }
    }

    /// Exact rational `beta_j` (Bergman family only).
    pub fn beta_exact(&self, j: usize) -> Option<BigRational> {
        match &self.family {
            Family::Bergman(n) => Some(bergman_beta_exact(*n, j as u64)),
            Family::Explicit { .. } => None,
        }
    }

    /// Exact rational `delta_j` (Bergman family only).
    pub fn delta_exact(&self, j: usize) -> Option<BigRational> {
        match &self.family {
            Family::Bergman(n) => Some(bergman_delta_exact(*n, j as u64)),
            Family::Explicit { .. } => None,
        }
    }

    /// `sup_{k >= j} beta_k / beta_{k+1}`, the growth cap used by series
    /// tail bounds. Always >= 1 and finite for the supported families.
    pub fn ratio_sup_from(&self, j: usize) -> f64 {
        let bergman_ratio = |n: u32, k: usize| (k as f64 + f64::from(n)) / (k as f64 + 1.0);
        match &self.family {
            Family::Bergman(n) => bergman_ratio(*n, j),
            Family::Explicit { head, tail } => {
                let mut sup: f64 = 1.0;
                let seam = head.len();
                for k in j..seam {
                    sup = sup.max(self.beta(k) / self.beta(k + 1));
                }
                match tail {
                    Tail::ConstantLast => sup.max(1.0),
                    Tail::Bergman(n) => sup.max(bergman_ratio(*n, j.max(seam))),
                }
            }
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    // numerator and denominator may individually overflow f64 even when the
    // quotient is representable, so shift both down to ~64 bits first
    let n = r.numer();
    let d = r.denom();
    if n.is_zero() {
        return 0.0;
    }
    let shift_n = (n.bits() as i64 - 64).max(0) as usize;
    let shift_d = (d.bits() as i64 - 64).max(0) as usize;
    let nn = (n >> shift_n).to_f64().unwrap_or(f64::MAX);
    let dd = (d >> shift_d).to_f64().unwrap_or(f64::MAX);
    (nn / dd) * 2f64.powi(shift_n as i32 - shift_d as i32)
}

fn check_disk(z: C64) -> Result<()> {
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDisk { modulus: z.norm() });
    }
    Ok(())
}

/// `k_beta(z, conj(zeta)) = sum_j (z conj(zeta))^j / beta_j`.
///
/// Closed form for the Bergman family, certified truncated series for
/// explicit weights (the tail rule supplies the growth cap of the bound).
pub fn kernel_eval(w: &WeightSequence, z: C64, zeta: C64) -> Result<C64> {
    check_disk(z)?;
    check_disk(zeta)?;
    let arg = z * zeta.conj();
    match w.family() {
        Family::Bergman(n) => Ok((cr(1.0) - arg).powi(-(*n as i32))),
        Family::Explicit { .. } => kernel_series(w, arg),
    }
}

fn kernel_series(w: &WeightSequence, arg: C64) -> Result<C64> {
    let aw = arg.norm();
    let mut acc = c64(0.0, 0.0);
    let mut pow = c64(1.0, 0.0);
    let mut abs_pow = 1.0_f64;
    for j in 0..SERIES_CAP {
        acc += pow / cr(w.beta(j));
        // certified geometric tail: terms beyond j shrink by at least
        // aw * ratio_sup once that factor drops below 1
        let q = aw * w.ratio_sup_from(j + 1);
        if q < 1.0 {
            let first = abs_pow * aw / w.beta(j + 1);
            if first / (1.0 - q) < SERIES_EPS * acc.norm().max(1.0) {
                return Ok(acc);
            }
        }
        pow *= arg;
        abs_pow *= aw;
    }
    Err(Error::EvalFailed {
        z: arg,
        reason: "kernel series did not reach its tail bound".to_string(),
    })
}

/// The factored kernel `(1 - z conj(zeta)) k_beta(z, conj(zeta))`, i.e. the
/// generating series of `delta`.
pub fn kernel_tilde_eval(w: &WeightSequence, z: C64, zeta: C64) -> Result<C64> {
    check_disk(z)?;
    check_disk(zeta)?;
    let arg = z * zeta.conj();
    Ok(kernel_tilde_arg(w, arg))
}

fn kernel_tilde_arg(w: &WeightSequence, arg: C64) -> C64 {
    match w.family() {
        Family::Bergman(1) => cr(1.0),
        Family::Bergman(n) => (cr(1.0) - arg).powi(-(*n as i32 - 1)),
        Family::Explicit { head, tail } => {
            let seam = head.len();
            // delta is supported on 0..=seam plus (for a Bergman tail) the
            // full Bergman delta tail beyond the seam.
            let mut acc = c64(0.0, 0.0);
            let mut pow = c64(1.0, 0.0);
            for j in 0..=seam {
                acc += cr(w.delta(j)) * pow;
                pow *= arg;
            }
            if let Tail::Bergman(n) = tail {
                if *n >= 2 {
                    // remainder of the Bergman-(n) delta series beyond the seam
                    let mut partial = c64(0.0, 0.0);
                    let mut p = c64(1.0, 0.0);
                    for j in 0..=seam {
                        partial += cr(rational_to_f64(&bergman_delta_exact(*n, j as u64))) * p;
                        p *= arg;
                    }
                    let full = (cr(1.0) - arg).powi(-(*n as i32 - 1));
                    acc += full - partial;
                }
            }
            acc
        }
    }
}

/// Matrix functional calculus `k_beta(z, T) = sum_j beta_j^{-1} z^j T^j`,
/// in closed form for every supported family. Requires `rho(zT) < 1`.
pub fn kernel_matrix(w: &WeightSequence, z: C64, t: &CMatrix) -> Result<CMatrix> {
    let d = t.nrows();
    if t.ncols() != d {
        return Err(Error::DimensionMismatch(
            "kernel_matrix needs a square matrix".to_string(),
        ));
    }
    let id = CMatrix::identity(d, d);
    let resolvent = crate::linalg::inverse(&(&id - t.scale_complex(z)), "inverting I - zT")?;
    let bergman_power = |n: u32| -> CMatrix {
        let mut acc = CMatrix::identity(d, d);
        for _ in 0..n {
            acc = &acc * &resolvent;
        }
        acc
    };
    match w.family() {
        Family::Bergman(n) => Ok(bergman_power(*n)),
        Family::Explicit { head, tail } => {
            let seam = head.len();
            let mut acc = CMatrix::zeros(d, d);
            let mut pow = CMatrix::identity(d, d);
            for &b in head {
                acc += pow.scale_complex(cr(1.0 / b));
                pow = pow * t.scale_complex(z);
            }
            // pow is now (zT)^seam
            match tail {
                Tail::ConstantLast => {
                    let c = *head.last().unwrap();
                    acc += (&pow * &resolvent).scale_complex(cr(1.0 / c));
                }
                Tail::Bergman(n) => {
                    // full Bergman sum minus its first `seam` terms
                    let mut partial = CMatrix::zeros(d, d);
                    let mut p = CMatrix::identity(d, d);
                    for j in 0..seam {
                        let inv_beta = 1.0 / bergman_beta_f64(*n, j as u64);
                        partial += p.scale_complex(cr(inv_beta));
                        p = p * t.scale_complex(z);
                    }
                    acc += bergman_power(*n) - partial;
                }
            }
            Ok(acc)
        }
    }
}

/// Applies the row factor of the factored kernel to a finitely supported
/// block vector: `sum_j sqrt(delta_j) z^j y_j`.
pub fn psi_apply(w: &WeightSequence, y: &[CVector], z: C64) -> Result<CVector> {
    check_disk(z)?;
    let Some(first) = y.first() else {
        return Err(Error::InvalidArgument(
            "psi_apply needs at least one block".to_string(),
        ));
    };
    let dim = first.len();
    if y.iter().any(|b| b.len() != dim) {
        return Err(Error::DimensionMismatch(
            "psi_apply blocks must share one dimension".to_string(),
        ));
    }
    let mut acc = CVector::zeros(dim);
    let mut pow = cr(1.0);
    for (j, block) in y.iter().enumerate() {
        acc += block.scale_complex(pow * cr(w.sqrt_delta(j)));
        pow *= z;
    }
    Ok(acc)
}

pub(crate) trait ScaleComplex {
    fn scale_complex(&self, s: C64) -> Self;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, s: C64) -> Self {
        self * s
    }
}

impl ScaleComplex for CVector {
    fn scale_complex(&self, s: C64) -> Self {
        self * s
    }
}
