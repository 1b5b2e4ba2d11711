//! Dense complex linear-algebra helpers shared across the crate.
//!
//! Everything here operates on dynamically sized `nalgebra` matrices over
//! `Complex<f64>`. Sizes are desk-scale (state dimension is capped at 64),
//! so exact dense factorizations are used throughout.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Hermitian part `(A + A^H)/2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise deviation of `A` from its adjoint.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).camax()
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized
/// first so that roundoff-level asymmetry does not leak complex parts.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let h = hermitize(a);
    let mut eigs: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    eigs
}

/// Spectral (operator 2-) norm via the Hermitian eigenproblem of `A^H A`.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let eigs = hermitian_eigenvalues(&gram);
    eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Smallest singular value, again through `A^H A`.
pub fn sigma_min(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let eigs = hermitian_eigenvalues(&gram);
    eigs.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// 2-norm condition number estimate.
pub fn cond(a: &CMatrix) -> f64 {
    let smin = sigma_min(a);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        op_norm(a) / smin
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix, context: &str) -> Result<CMatrix> {
    a.clone().lu().solve(b).ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

pub fn inverse(a: &CMatrix, context: &str) -> Result<CMatrix> {
    a.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

/// Column-stacked vectorization.
pub fn vec_col(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

pub fn unvec_col(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Spectral-radius information for a square matrix.
///
/// `estimate` comes from power iteration and is sharp for diagonalizable
/// matrices; `upper_bound` is certified (`rho(T) <= upper_bound`) and is what
/// stability checks and series tail bounds rely on.
#[derive(Debug, Clone, Copy)]
pub struct SpectralRadius {
    pub estimate: f64,
    pub upper_bound: f64,
}

/// Estimates the spectral radius with 200 power iterations and certifies an
/// upper bound from Gershgorin row/column sums together with
/// `||T^m||_F^(1/m)` at m = 32, 64, 128 (computed by repeated squaring).
pub fn spectral_radius(t: &CMatrix) -> SpectralRadius {
    let d = t.nrows();
    assert_eq!(d, t.ncols(), "spectral_radius needs a square matrix");
    if d == 0 {
        return SpectralRadius {
            estimate: 0.0,
            upper_bound: 0.0,
        };
    }

    // Gershgorin via induced 1- and infinity-norms.
    let row_sum = (0..d)
        .map(|i| (0..d).map(|j| t[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let col_sum = (0..d)
        .map(|j| (0..d).map(|i| t[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut upper = row_sum.min(col_sum);

    // ||T^(2^k)||_F^(1/2^k) for k = 5, 6, 7.
    let mut pow = t.clone();
    let mut m = 1u32;
    for _ in 0..7 {
        pow = &pow * &pow;
        m *= 2;
        if m >= 32 {
            let norm = pow.norm();
            if norm > 0.0 {
                upper = upper.min(norm.powf(1.0 / f64::from(m)));
            } else {
                upper = 0.0;
            }
        }
    }

    // Power iteration with a fixed deterministic start.
    let mut v = CVector::from_fn(d, |i, _| c64(1.0, 0.3 + i as f64 * 0.017));
    let mut estimate = 0.0;
    if v.norm() > 0.0 {
        v /= cr(v.norm());
        for _ in 0..200 {
            let w = t * &v;
            let n = w.norm();
            if n <= f64::MIN_POSITIVE {
                estimate = 0.0;
                break;
            }
            estimate = n;
            v = w / cr(n);
        }
    }

    SpectralRadius {
        estimate: estimate.min(upper),
        upper_bound: upper,
    }
}

/// Roots of a complex polynomial `c_0 + c_1 z + ... + c_n z^n` by
/// Durand-Kerner iteration. Intended for the low-degree denominators of
/// rational candidates.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.len() > 1 && c.last().map(|x| x.norm()) == Some(0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: C64| -> C64 {
        let mut acc = c64(0.0, 0.0);
        for k in (0..=n).rev() {
            acc = acc * z + monic[k];
        }
        acc
    };

    let radius = 1.0
        + monic
            .iter()
            .take(n)
            .map(|x| x.norm())
            .fold(0.0_f64, f64::max);
    let mut roots: Vec<C64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64;
            cr(0.7 * radius) * c64(angle.cos(), angle.sin())
        })
        .collect();

    for _ in 0..200 {
        let mut shift = 0.0_f64;
        for i in 0..n {
            let mut denom = c64(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() <= f64::MIN_POSITIVE {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            shift = shift.max(delta.norm());
        }
        if shift < 1e-14 * radius.max(1.0) {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermitian_eigenvalues_of_pauli_like_matrix() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(2.0), c64(0.0, -1.0), c64(0.0, 1.0), cr(2.0)]);
        let eigs = hermitian_eigenvalues(&m);
        assert_relative_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn op_norm_matches_hand_value() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(3.0), cr(0.0), cr(0.0), cr(-4.0)]);
        assert_relative_eq!(op_norm(&m), 4.0, epsilon = 1e-12);
        assert_relative_eq!(sigma_min(&m), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_radius_brackets_true_value() {
        // Non-normal 2x2 with known spectrum {0.5, 0.25}.
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(3.0), cr(0.0), cr(0.25)]);
        let sr = spectral_radius(&m);
        assert!(sr.estimate <= sr.upper_bound + 1e-12);
        assert!(sr.upper_bound < 1.0, "upper bound {}", sr.upper_bound);
        assert_relative_eq!(sr.estimate, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn stein_style_solve_roundtrip() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.5), cr(0.2), c64(0.0, -0.3), c64(2.0, 0.0)],
        );
        let b = CMatrix::identity(2, 2);
        let x = solve(&a, &b, "test").unwrap();
        assert!(op_norm(&(&a * &x - &b)) < 1e-12);
    }

    #[test]
    fn polynomial_roots_quartic() {
        // 4 - z^4: roots are sqrt(2) times fourth roots of unity.
        let roots = polynomial_roots(&[cr(4.0), cr(0.0), cr(0.0), cr(0.0), cr(-1.0)]);
        assert_eq!(roots.len(), 4);
        for r in roots {
            assert_relative_eq!(r.norm(), 2f64.sqrt(), epsilon = 1e-9);
            let v = cr(4.0) - r.powu(4);
            assert!(v.norm() < 1e-8);
        }
    }
}
