//! State-space side: interpolation data, observability operators and
//! gramians, Stein equations, Taylor-coefficient extraction and the
//! tangential functional calculus.

use crate::error::{Error, Result};
use crate::func::AnalyticMatrixFunction;
use crate::linalg::{
    self, cr, hermitize, op_norm, spectral_radius, unvec_col, vec_col, CMatrix, CVector,
    SpectralRadius, C64,
};
use crate::par;
use crate::weights::WeightSequence;

/// Largest admissible state dimension; Stein equations are linearized to a
/// d^2 x d^2 dense system.
pub const MAX_STATE_DIM: usize = 64;

const STABILITY_MARGIN: f64 = 1e-8;
const SERIES_CAP: usize = 200_000;

/// Interpolation data `(T, E, N)` together with an input weight `alpha` and
/// an output weight `beta`.
///
/// `T` is d x d with certified spectral radius < 1, `E` maps the state
/// space into the output space (p x d) and `N` into the input space
/// (q x d).
#[derive(Debug, Clone)]
pub struct InterpolationData {
    alpha: WeightSequence,
    beta: WeightSequence,
    t: CMatrix,
    e: CMatrix,
    n: CMatrix,
    rho: SpectralRadius,
    np_nodes: Option<Vec<C64>>,
}

impl InterpolationData {
    pub fn new(
        alpha: WeightSequence,
        beta: WeightSequence,
        t: CMatrix,
        e: CMatrix,
        n: CMatrix,
    ) -> Result<Self> {
        let d = t.nrows();
        if d == 0 || t.ncols() != d {
            return Err(Error::DimensionMismatch(
                "state matrix must be square and nonempty".to_string(),
            ));
        }
        if d > MAX_STATE_DIM {
            return Err(Error::InvalidArgument(format!(
                "state dimension {d} exceeds the supported cap {MAX_STATE_DIM}"
            )));
        }
        if e.ncols() != d || n.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "E ({}x{}) and N ({}x{}) must have {d} columns",
                e.nrows(),
                e.ncols(),
                n.nrows(),
                n.ncols()
            )));
        }
        if e.nrows() == 0 || n.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "E and N must have at least one row".to_string(),
            ));
        }
        let rho = spectral_radius(&t);
        if rho.upper_bound >= 1.0 - STABILITY_MARGIN {
            return Err(Error::UnstablePair {
                rho_bound: rho.upper_bound,
            });
        }
        Ok(InterpolationData {
            alpha,
            beta,
            t,
            e,
            n,
            rho,
            np_nodes: None,
        })
    }

    pub fn alpha(&self) -> &WeightSequence {
        &self.alpha
    }

    pub fn beta(&self) -> &WeightSequence {
        &self.beta
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    pub fn n(&self) -> &CMatrix {
        &self.n
    }

    pub fn dim_state(&self) -> usize {
        self.t.nrows()
    }

    /// Dimension of the output coefficient space (rows of `E`).
    pub fn dim_output(&self) -> usize {
        self.e.nrows()
    }

    /// Dimension of the input coefficient space (rows of `N`).
    pub fn dim_input(&self) -> usize {
        self.n.nrows()
    }

    pub fn rho(&self) -> SpectralRadius {
        self.rho
    }

    /// Interpolation nodes, when the data came from a Nevanlinna-Pick
    /// construction.
    pub fn np_nodes(&self) -> Option<&[C64]> {
        self.np_nodes.as_deref()
    }

    pub(crate) fn set_np_nodes(&mut self, nodes: Vec<C64>) {
        self.np_nodes = Some(nodes);
    }
}

/// Result of a gramian computation.
#[derive(Debug, Clone)]
pub struct GramianResult {
    pub matrix: CMatrix,
    pub method: GramianMethod,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianMethod {
    Series,
    SteinSolve,
    BergmanRecursion,
}

fn check_pair_dims(e: &CMatrix, t: &CMatrix) -> Result<()> {
    if t.nrows() != t.ncols() {
        return Err(Error::DimensionMismatch(
            "state matrix must be square".to_string(),
        ));
    }
    if e.ncols() != t.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "output map has {} columns, state dimension is {}",
            e.ncols(),
            t.nrows()
        )));
    }
    Ok(())
}

fn stable_radius(t: &CMatrix) -> Result<SpectralRadius> {
    let rho = spectral_radius(t);
    if rho.upper_bound >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstablePair {
            rho_bound: rho.upper_bound,
        });
    }
    Ok(rho)
}

/// Applies the observability operator of the pair `(E, T)` with weight `w`
/// to a state vector: the value at `z` of `sum_j beta_j^{-1} (E T^j x) z^j`.
///
/// The series is truncated once a certified geometric tail bound drops
/// below 1e-13 of the accumulated value.
pub fn obs_apply(
    w: &WeightSequence,
    e: &CMatrix,
    t: &CMatrix,
    x: &CVector,
    z: C64,
) -> Result<CVector> {
    check_pair_dims(e, t)?;
    if x.len() != t.nrows() {
        return Err(Error::DimensionMismatch(
            "state vector length must match T".to_string(),
        ));
    }
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDisk { modulus: z.norm() });
    }
    let rho = stable_radius(t)?.upper_bound;
    let az = z.norm();

    let mut v = x.clone();
    let mut zpow = cr(1.0);
    let mut acc = CVector::zeros(e.nrows());
    for j in 0..SERIES_CAP {
        acc += (e * &v) * (zpow / cr(w.beta(j)));
        v = t * v;
        zpow *= z;
        let next = (e * &v).norm() * zpow.norm() / w.beta(j + 1);
        let q = az * rho * w.ratio_sup_from(j + 2);
        if j >= 16 && q < 1.0 && next / (1.0 - q) < 1e-13 * acc.norm().max(1.0) {
            return Ok(acc);
        }
    }
    Err(Error::EvalFailed {
        z,
        reason: "observability series did not converge".to_string(),
    })
}

/// Solves the Stein equation `G - T^* G T = rhs` exactly through the
/// d^2 x d^2 linearization.
pub fn solve_stein(t: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let d = t.nrows();
    if t.ncols() != d || rhs.shape() != (d, d) {
        return Err(Error::DimensionMismatch(
            "stein equation needs square matrices of one size".to_string(),
        ));
    }
    if d > MAX_STATE_DIM {
        return Err(Error::InvalidArgument(format!(
            "state dimension {d} exceeds the supported cap {MAX_STATE_DIM}"
        )));
    }
    // vec(T^* G T) = (T^t (x) T^*) vec(G), column-stacked
    let system = CMatrix::identity(d * d, d * d) - t.transpose().kronecker(&t.adjoint());
    let sol = linalg::solve(&system, &CMatrix::from_column_slice(d * d, 1, vec_col(rhs).as_slice()), "solving the Stein linearization")?;
    Ok(unvec_col(&CVector::from_column_slice(sol.as_slice()), d, d))
}

/// Observability gramian `sum_j beta_j^{-1} T^{*j} E^* E T^j`.
///
/// Hardy weight: one exact Stein solve. Bergman weight of order n: the
/// recursion `G_k - T^* G_k T = G_{k-1}` (each step one Stein solve).
/// Explicit weights: certified truncated series.
pub fn obs_gramian(w: &WeightSequence, e: &CMatrix, t: &CMatrix) -> Result<GramianResult> {
    check_pair_dims(e, t)?;
    stable_radius(t)?;
    match w.family() {
        crate::weights::Family::Bergman(1) => {
            let g = solve_stein(t, &(e.adjoint() * e))?;
            Ok(GramianResult {
                matrix: hermitize(&g),
                method: GramianMethod::SteinSolve,
                tail_bound: 0.0,
            })
        }
        crate::weights::Family::Bergman(n) => {
            let mut g = solve_stein(t, &(e.adjoint() * e))?;
            for _ in 2..=*n {
                g = solve_stein(t, &g)?;
            }
            Ok(GramianResult {
                matrix: hermitize(&g),
                method: GramianMethod::BergmanRecursion,
                tail_bound: 0.0,
            })
        }
        crate::weights::Family::Explicit { .. } => {
            let rho = spectral_radius(t).upper_bound;
            let mut m = e.clone(); // E T^j
            let mut acc = CMatrix::zeros(t.nrows(), t.ncols());
            for j in 0..SERIES_CAP {
                acc += m.adjoint() * &m * cr(1.0 / w.beta(j));
                m *= t;
                let next = {
                    let fro = m.norm();
                    fro * fro / w.beta(j + 1)
                };
                let q = rho * rho * w.ratio_sup_from(j + 2);
                if j >= 16 && q < 1.0 {
                    let tail = next / (1.0 - q);
                    if tail < 1e-12 * acc.norm().max(1.0) {
                        return Ok(GramianResult {
                            matrix: hermitize(&acc),
                            method: GramianMethod::Series,
                            tail_bound: tail,
                        });
                    }
                }
            }
            Err(Error::EvalFailed {
                z: cr(0.0),
                reason: "gramian series did not converge".to_string(),
            })
        }
    }
}

/// Plain truncated gramian series with a fixed number of terms. Used as an
/// independent oracle against the solve-based routes.
pub fn obs_gramian_series(
    w: &WeightSequence,
    e: &CMatrix,
    t: &CMatrix,
    terms: usize,
) -> Result<CMatrix> {
    check_pair_dims(e, t)?;
    let mut m = e.clone();
    let mut acc = CMatrix::zeros(t.nrows(), t.ncols());
    for j in 0..terms {
        acc += m.adjoint() * &m * cr(1.0 / w.beta(j));
        m *= t;
    }
    Ok(hermitize(&acc))
}

/// Stacked observability matrix of the factored kernel: block row `j` is
/// `sqrt(delta_j) E T^j` for `j = 0..=j_max`.
pub fn tilde_obs_matrix(
    w: &WeightSequence,
    e: &CMatrix,
    t: &CMatrix,
    j_max: usize,
) -> Result<CMatrix> {
    check_pair_dims(e, t)?;
    stable_radius(t)?;
    let p = e.nrows();
    let d = t.nrows();
    let mut out = CMatrix::zeros((j_max + 1) * p, d);
    let mut m = e.clone();
    for j in 0..=j_max {
        let block = &m * cr(w.sqrt_delta(j));
        out.view_mut((j * p, 0), (p, d)).copy_from(&block);
        if j < j_max {
            m *= t;
        }
    }
    Ok(out)
}

/// Operator-norm residual of the Stein identity: `||G - T^* G T - rhs||`.
pub fn stein_residual(g: &CMatrix, t: &CMatrix, rhs: &CMatrix) -> Result<f64> {
    let d = t.nrows();
    if t.ncols() != d || g.shape() != (d, d) || rhs.shape() != (d, d) {
        return Err(Error::DimensionMismatch(
            "stein residual needs square matrices of one size".to_string(),
        ));
    }
    Ok(op_norm(&(g - t.adjoint() * g * t - rhs)))
}

/// Taylor coefficients recovered from circle samples.
#[derive(Debug, Clone)]
pub struct TaylorCoeffs {
    pub coeffs: Vec<CMatrix>,
    pub radius: f64,
    pub samples: usize,
    /// Largest operator norm of the sampled values.
    pub sup_norm: f64,
}

impl TaylorCoeffs {
    /// Aliasing-error estimate for coefficient `j`:
    /// `sup ||f|| r^(N-j) / (1 - r^N)`.
    pub fn alias_bound(&self, j: usize) -> f64 {
        let rn = self.radius.powi(self.samples as i32);
        self.sup_norm * self.radius.powi(self.samples as i32 - j as i32) / (1.0 - rn)
    }
}

/// Extracts `count` Taylor coefficients of `f` by uniform sampling on the
/// circle of the given radius (trapezoidal DFT). The sample count defaults
/// to `max(256, next power of two >= 4*count)`.
pub fn taylor_coeffs(
    f: &AnalyticMatrixFunction,
    count: usize,
    radius: f64,
) -> Result<TaylorCoeffs> {
    let samples = (4 * count.max(1)).next_power_of_two().max(256);
    taylor_coeffs_with(f, count, radius, samples)
}

pub fn taylor_coeffs_with(
    f: &AnalyticMatrixFunction,
    count: usize,
    radius: f64,
    samples: usize,
) -> Result<TaylorCoeffs> {
    if !(0.0..1.0).contains(&radius) || radius == 0.0 {
        return Err(Error::InvalidArgument(
            "sampling radius must lie in (0, 1)".to_string(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument(
            "need at least one coefficient".to_string(),
        ));
    }
    if samples < 4 * count {
        return Err(Error::InvalidArgument(format!(
            "sample count {samples} must be at least 4 * {count}"
        )));
    }
    let tau = std::f64::consts::TAU;
    let points: Vec<C64> = (0..samples)
        .map(|k| {
            let th = tau * k as f64 / samples as f64;
            cr(radius) * C64::new(th.cos(), th.sin())
        })
        .collect();
    let values = f.eval_many(&points)?;
    let sup_norm = values.iter().map(op_norm).fold(0.0, f64::max);

    let (rows, cols) = (f.rows(), f.cols());
    let coeffs = par::map_indexed(count, |j| {
        let mut acc = CMatrix::zeros(rows, cols);
        for (k, v) in values.iter().enumerate() {
            let th = -tau * (j * k % samples) as f64 / samples as f64;
            acc += v * C64::new(th.cos(), th.sin());
        }
        acc * cr(1.0 / (samples as f64 * radius.powi(j as i32)))
    });

    Ok(TaylorCoeffs {
        coeffs,
        radius,
        samples,
        sup_norm,
    })
}

/// Result of the tangential functional calculus.
#[derive(Debug, Clone)]
pub struct TangentialEval {
    pub matrix: CMatrix,
    /// Geometric estimate of the dropped tail `sum_{j > M} T^{*j} E^* f_j`.
    pub tail_estimate: f64,
    /// Set when the tail estimate is not small against the result.
    pub truncation_warning: bool,
}

/// Evaluates `sum_{j <= terms} T^{*j} E^* f_j` where `f_j` are the Taylor
/// coefficients of `f`.
///
/// Coefficients are sampled on a circle of radius `max(0.5, sqrt(rho))`:
/// keeping the radius above the spectral radius stops DFT roundoff (which
/// scales like `r^-j`) from being amplified by the `T^{*j}` powers.
pub fn tangential_eval(
    w: &WeightSequence,
    e: &CMatrix,
    t: &CMatrix,
    f: &AnalyticMatrixFunction,
    terms: usize,
) -> Result<TangentialEval> {
    let _ = w; // the calculus itself is weight-free; the weight fixes the
               // space the coefficients are read in
    check_pair_dims(e, t)?;
    if f.rows() != e.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "function has {} rows, output space has {}",
            f.rows(),
            e.nrows()
        )));
    }
    let rho = stable_radius(t)?.upper_bound;
    let radius = rho.sqrt().max(0.5);
    let taylor = taylor_coeffs(f, terms + 1, radius)?;

    let e_adj = e.adjoint();
    let t_adj = t.adjoint();
    let mut acc = CMatrix::zeros(t.nrows(), f.cols());
    let mut pow = CMatrix::identity(t.nrows(), t.nrows());
    let mut coeff_sup = 0.0_f64;
    for (j, fj) in taylor.coeffs.iter().enumerate() {
        acc += &pow * &e_adj * fj;
        coeff_sup = coeff_sup.max(op_norm(fj));
        if j < terms {
            pow = &pow * &t_adj;
        }
    }
    let tail = if rho < 1.0 {
        op_norm(e) * coeff_sup * rho.powi(terms as i32 + 1) / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let warning = tail > 1e-10 * op_norm(&acc).max(1.0);
    Ok(TangentialEval {
        matrix: acc,
        tail_estimate: tail,
        truncation_warning: warning,
    })
}

/// Coefficients of the shift adjoint: entry `k` of the output is
/// `(beta_{k+1} / beta_k) * coeffs[k+1]`; the list shortens by one.
pub fn shift_adjoint_coeffs(w: &WeightSequence, coeffs: &[CMatrix]) -> Vec<CMatrix> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    (0..coeffs.len() - 1)
        .map(|k| &coeffs[k + 1] * cr(w.beta(k + 1) / w.beta(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::Provenance;
    use crate::linalg::c64;
    use crate::weights::Tail;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stable_system(
        rng: &mut ChaCha8Rng,
        d: usize,
        p: usize,
        target_rho: f64,
    ) -> (CMatrix, CMatrix) {
        let mut t = CMatrix::from_fn(d, d, |_, _| {
            c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let sr = spectral_radius(&t);
        t *= cr(target_rho / sr.upper_bound.max(1e-12));
        let e = CMatrix::from_fn(p, d, |_, _| {
            c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        (t, e)
    }

    #[test]
    fn interpolation_data_validates() {
        let w1 = WeightSequence::hardy();
        let w2 = WeightSequence::bergman(2).unwrap();
        let good = InterpolationData::new(
            w1.clone(),
            w2.clone(),
            CMatrix::from_element(1, 1, cr(0.75)),
            CMatrix::from_element(1, 1, cr(1.0)),
            CMatrix::from_element(1, 1, cr(4.0 / 3.0)),
        );
        assert!(good.is_ok());

        let unstable = InterpolationData::new(
            w1.clone(),
            w2.clone(),
            CMatrix::from_element(1, 1, cr(1.0)),
            CMatrix::from_element(1, 1, cr(1.0)),
            CMatrix::from_element(1, 1, cr(1.0)),
        );
        assert!(matches!(unstable, Err(Error::UnstablePair { .. })));

        let bad_dims = InterpolationData::new(
            w1,
            w2,
            CMatrix::from_element(2, 2, cr(0.1)),
            CMatrix::from_element(1, 1, cr(1.0)),
            CMatrix::from_element(1, 2, cr(1.0)),
        );
        assert!(matches!(bad_dims, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn obs_apply_nilpotent_state_keeps_only_first_term() {
        let w = WeightSequence::bergman(3).unwrap();
        let e = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(2.0), cr(0.0), cr(-1.0)]);
        let t = CMatrix::zeros(2, 2);
        let x = CVector::from_column_slice(&[cr(1.0), c64(0.0, 1.0)]);
        for z in [cr(0.0), c64(0.3, -0.6), cr(0.9)] {
            let v = obs_apply(&w, &e, &t, &x, z).unwrap();
            assert!((&v - &e * &x).norm() < 1e-14);
        }
    }

    #[test]
    fn obs_apply_scalar_bergman_closed_form() {
        for n in [1u32, 2, 4] {
            let w = WeightSequence::bergman(n).unwrap();
            let e = CMatrix::from_element(1, 1, cr(1.0));
            let t = CMatrix::from_element(1, 1, cr(0.75));
            let x = CVector::from_element(1, cr(1.0));
            for z in [0.0, 0.4, -0.7, 0.9] {
                let v = obs_apply(&w, &e, &t, &x, cr(z)).unwrap();
                let expect = (1.0 - 0.75 * z).powi(-(n as i32));
                assert_relative_eq!(v[0].re, expect, epsilon = 1e-11, max_relative = 1e-11);
                assert!(v[0].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn obs_apply_matches_brute_force_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w = WeightSequence::explicit(vec![1.0, 0.8, 0.5], Tail::ConstantLast).unwrap();
        let (t, e) = random_stable_system(&mut rng, 3, 2, 0.7);
        let x = CVector::from_fn(3, |i, _| c64(0.3 + i as f64, -0.2));
        for z in [c64(0.25, 0.55), cr(-0.8), c64(0.0, 0.9)] {
            let fast = obs_apply(&w, &e, &t, &x, z).unwrap();
            let mut acc = CVector::zeros(2);
            let mut v = x.clone();
            let mut zpow = cr(1.0);
            for j in 0..300 {
                acc += (&e * &v) * (zpow / cr(w.beta(j)));
                v = &t * v;
                zpow *= z;
            }
            assert!((fast - acc).norm() < 1e-10);
        }
    }

    #[test]
    fn gramian_scalar_values() {
        // bergman(n) at T = 3/4, E = 1 gives (16/7)^n
        let e = CMatrix::from_element(1, 1, cr(1.0));
        let t = CMatrix::from_element(1, 1, cr(0.75));
        for n in 1..=6u32 {
            let w = WeightSequence::bergman(n).unwrap();
            let g = obs_gramian(&w, &e, &t).unwrap();
            assert_relative_eq!(
                g.matrix[(0, 0)].re,
                (16.0 / 7.0_f64).powi(n as i32),
                max_relative = 1e-12
            );
        }

        // T = 0 keeps only E^* E
        let w = WeightSequence::bergman(2).unwrap();
        let e2 = CMatrix::from_row_slice(1, 2, &[cr(1.0), c64(0.0, 2.0)]);
        let g = obs_gramian(&w, &e2, &CMatrix::zeros(2, 2)).unwrap();
        assert!(op_norm(&(&g.matrix - e2.adjoint() * &e2)) < 1e-13);

        // Hardy scalar: geometric series 1/(1-t^2), cross-checked two ways
        let hardy = WeightSequence::hardy();
        for tval in [0.3, -0.6, 0.9] {
            let t = CMatrix::from_element(1, 1, cr(tval));
            let g = obs_gramian(&hardy, &e, &t).unwrap();
            assert_eq!(g.method, GramianMethod::SteinSolve);
            assert_relative_eq!(
                g.matrix[(0, 0)].re,
                1.0 / (1.0 - tval * tval),
                max_relative = 1e-12
            );
            let series = obs_gramian_series(&hardy, &e, &t, 500).unwrap();
            assert_relative_eq!(
                g.matrix[(0, 0)].re,
                series[(0, 0)].re,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn gramian_rejects_unstable_pairs() {
        let w = WeightSequence::hardy();
        let e = CMatrix::from_element(1, 1, cr(1.0));
        let t = CMatrix::from_element(1, 1, cr(1.2));
        assert!(matches!(
            obs_gramian(&w, &e, &t),
            Err(Error::UnstablePair { .. })
        ));
    }

    #[test]
    fn hardy_gramian_satisfies_stein_identity_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let hardy = WeightSequence::hardy();
        for _ in 0..20 {
            let d = rng.gen_range(1..=6);
            let p = rng.gen_range(1..=3);
            let (t, e) = random_stable_system(&mut rng, d, p, rng.gen_range(0.3..0.9));
            let g = obs_gramian(&hardy, &e, &t).unwrap();
            let res = stein_residual(&g.matrix, &t, &(e.adjoint() * &e)).unwrap();
            assert!(res < 1e-11, "stein residual {res}");
        }
    }

    #[test]
    fn bergman_recursion_matches_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=4u32 {
            let w = WeightSequence::bergman(n).unwrap();
            let (t, e) = random_stable_system(&mut rng, 4, 2, 0.6);
            let g = obs_gramian(&w, &e, &t).unwrap();
            assert_eq!(g.method, GramianMethod::BergmanRecursion);
            let series = obs_gramian_series(&w, &e, &t, 400).unwrap();
            assert!(op_norm(&(&g.matrix - &series)) < 1e-8);
        }
    }

    #[test]
    fn tilde_obs_matrix_blocks() {
        let hardy = WeightSequence::hardy();
        let e = CMatrix::from_row_slice(1, 2, &[cr(1.0), cr(2.0)]);
        let t = CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(0.1), cr(0.0), cr(0.3)]);
        let m = tilde_obs_matrix(&hardy, &e, &t, 3).unwrap();
        assert_eq!(m.shape(), (4, 2));
        assert!((m.row(0) - e.row(0)).norm() < 1e-15);
        for r in 1..4 {
            assert!(m.row(r).norm() < 1e-15, "hardy delta vanishes beyond 0");
        }

        let w2 = WeightSequence::bergman(2).unwrap();
        let e = CMatrix::from_element(1, 1, cr(1.0));
        let t = CMatrix::from_element(1, 1, cr(0.75));
        let m = tilde_obs_matrix(&w2, &e, &t, 2).unwrap();
        for (j, expect) in [1.0, 0.75, 0.5625].iter().enumerate() {
            assert_relative_eq!(m[(j, 0)].re, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn tilde_obs_matrix_reproduces_gramian_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = WeightSequence::bergman(3).unwrap();
        let (t, e) = random_stable_system(&mut rng, 3, 2, 0.55);
        let big = tilde_obs_matrix(&w, &e, &t, 200).unwrap();
        let gram = obs_gramian(&w, &e, &t).unwrap().matrix;
        let lhs = big.adjoint() * &big;
        let rhs = &gram - t.adjoint() * &gram * &t;
        assert!(op_norm(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn stein_residual_cases() {
        let hardy = WeightSequence::hardy();
        let e = CMatrix::from_row_slice(1, 2, &[cr(1.0), cr(-0.5)]);
        let t = CMatrix::from_row_slice(2, 2, &[cr(0.4), cr(0.2), cr(-0.1), cr(0.6)]);
        let g = obs_gramian(&hardy, &e, &t).unwrap();
        let r = stein_residual(&g.matrix, &t, &(e.adjoint() * &e)).unwrap();
        assert!(r < 1e-12);

        let z = CMatrix::zeros(2, 2);
        assert_eq!(stein_residual(&z, &z, &z).unwrap(), 0.0);

        assert!(stein_residual(&z, &CMatrix::zeros(3, 3), &z).is_err());
    }

    #[test]
    fn pick_style_stein_identity_via_truncation() {
        // P = G_{beta,E,T} - G_{1,N,T} satisfies
        // P - T^* P T = (tilde stack)^* (tilde stack) - N^* N up to tail
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let beta = WeightSequence::bergman(2).unwrap();
        let hardy = WeightSequence::hardy();
        let (t, e) = random_stable_system(&mut rng, 3, 2, 0.5);
        let (_, n) = random_stable_system(&mut rng, 3, 2, 0.5);
        let p = obs_gramian(&beta, &e, &t).unwrap().matrix
            - obs_gramian(&hardy, &n, &t).unwrap().matrix;
        let big = tilde_obs_matrix(&beta, &e, &t, 200).unwrap();
        let rhs = big.adjoint() * &big - n.adjoint() * &n;
        let res = stein_residual(&p, &t, &rhs).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn taylor_recovers_known_series() {
        // constant
        let c = CMatrix::from_row_slice(1, 2, &[cr(3.0), c64(0.0, -1.0)]);
        let f = AnalyticMatrixFunction::constant(c.clone());
        let tc = taylor_coeffs(&f, 10, 0.5).unwrap();
        assert!(op_norm(&(&tc.coeffs[0] - &c)) < 1e-13);
        for j in 1..10 {
            assert!(op_norm(&tc.coeffs[j]) < 1e-12);
        }

        // geometric: 1/(1 - z/2) has coefficients 2^-j
        let f = AnalyticMatrixFunction::matrix_rational(
            vec![CMatrix::from_element(1, 1, cr(1.0))],
            vec![cr(1.0), cr(-0.5)],
        )
        .unwrap();
        let tc = taylor_coeffs(&f, 10, 0.5).unwrap();
        for j in 0..10 {
            assert_relative_eq!(
                tc.coeffs[j][(0, 0)].re,
                0.5f64.powi(j as i32),
                epsilon = 1e-10
            );
        }

        // cubic polynomial: exact recovery, no aliasing beyond tolerance
        let poly = AnalyticMatrixFunction::matrix_polynomial(vec![
            CMatrix::from_element(1, 1, cr(1.0)),
            CMatrix::from_element(1, 1, c64(0.0, 2.0)),
            CMatrix::from_element(1, 1, cr(-3.0)),
            CMatrix::from_element(1, 1, cr(0.25)),
        ])
        .unwrap();
        let tc = taylor_coeffs(&poly, 8, 0.5).unwrap();
        let expect = [
            cr(1.0),
            c64(0.0, 2.0),
            cr(-3.0),
            cr(0.25),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
        ];
        for (j, e) in expect.iter().enumerate() {
            assert!((tc.coeffs[j][(0, 0)] - e).norm() < 1e-13);
        }
    }

    #[test]
    fn taylor_of_kernel_section_gives_weight_reciprocals() {
        let w = WeightSequence::bergman(3).unwrap();
        let zeta = c64(0.4, 0.3);
        let wclone = w.clone();
        let f = AnalyticMatrixFunction::from_fn(1, 1, Provenance::ClosedForm, move |z| {
            Ok(CMatrix::from_element(
                1,
                1,
                crate::weights::kernel_eval(&wclone, z, zeta)?,
            ))
        });
        let tc = taylor_coeffs(&f, 12, 0.5).unwrap();
        for j in 0..12 {
            let expect = zeta.conj().powu(j as u32) / cr(w.beta(j as usize));
            assert!(
                (tc.coeffs[j][(0, 0)] - expect).norm() < 1e-10,
                "coefficient {j}"
            );
        }
    }

    #[test]
    fn taylor_propagates_evaluation_failures() {
        let f = AnalyticMatrixFunction::matrix_rational(
            vec![CMatrix::from_element(1, 1, cr(1.0))],
            vec![cr(-0.5), cr(1.0)],
        )
        .unwrap();
        // radius 0.5 passes through the pole at 0.5
        let err = taylor_coeffs(&f, 4, 0.5);
        assert!(matches!(err, Err(Error::EvalFailed { .. })));
    }

    #[test]
    fn tangential_eval_basic_cases() {
        let w = WeightSequence::bergman(2).unwrap();
        // constant function: result is E^* C
        let e = CMatrix::from_row_slice(2, 3, &[
            cr(1.0), cr(0.0), cr(2.0),
            cr(0.5), cr(-1.0), cr(0.0),
        ]);
        let t = CMatrix::from_fn(3, 3, |i, j| if i == j { cr(0.4) } else { cr(0.05) });
        let c = CMatrix::from_row_slice(2, 1, &[cr(2.0), c64(0.0, 1.0)]);
        let f = AnalyticMatrixFunction::constant(c.clone());
        let te = tangential_eval(&w, &e, &t, &f, 24).unwrap();
        assert!(op_norm(&(&te.matrix - e.adjoint() * &c)) < 1e-10);
        assert!(!te.truncation_warning);

        // scalar T = t, E = 1, f(z) = z: only f_1 = 1 survives, giving conj(t)
        let e1 = CMatrix::from_element(1, 1, cr(1.0));
        let t1 = CMatrix::from_element(1, 1, c64(0.3, 0.4));
        let f = AnalyticMatrixFunction::matrix_polynomial(vec![
            CMatrix::zeros(1, 1),
            CMatrix::from_element(1, 1, cr(1.0)),
        ])
        .unwrap();
        let te = tangential_eval(&w, &e1, &t1, &f, 16).unwrap();
        assert!((te.matrix[(0, 0)] - c64(0.3, -0.4)).norm() < 1e-11);
    }

    #[test]
    fn tangential_eval_is_adjoint_of_observability() {
        // (E^* O x)^{^L}(T^*) = G x for f = O_{beta,E,T} x
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let w = WeightSequence::bergman(2).unwrap();
        let (t, e) = random_stable_system(&mut rng, 3, 2, 0.6);
        let x = CVector::from_fn(3, |i, _| c64(1.0 - i as f64 * 0.4, 0.2));
        let (wc, ec, tc, xc) = (w.clone(), e.clone(), t.clone(), x.clone());
        let f = AnalyticMatrixFunction::from_fn(2, 1, Provenance::ClosedForm, move |z| {
            let v = obs_apply(&wc, &ec, &tc, &xc, z)?;
            Ok(CMatrix::from_column_slice(2, 1, v.as_slice()))
        });
        let te = tangential_eval(&w, &e, &t, &f, 128).unwrap();
        let gx = obs_gramian(&w, &e, &t).unwrap().matrix * &x;
        let diff = (te.matrix.column(0) - gx).norm();
        assert!(diff < 1e-8, "adjoint identity residual {diff}");
    }

    #[test]
    fn shift_adjoint_cases() {
        let hardy = WeightSequence::hardy();
        let coeffs: Vec<CMatrix> = (0..5)
            .map(|j| CMatrix::from_element(1, 1, cr(j as f64 + 1.0)))
            .collect();
        let shifted = shift_adjoint_coeffs(&hardy, &coeffs);
        assert_eq!(shifted.len(), 4);
        for (k, m) in shifted.iter().enumerate() {
            assert_relative_eq!(m[(0, 0)].re, k as f64 + 2.0, epsilon = 1e-15);
        }

        let w2 = WeightSequence::bergman(2).unwrap();
        let shifted = shift_adjoint_coeffs(&w2, &coeffs);
        for (k, m) in shifted.iter().enumerate() {
            let expect = (k as f64 + 2.0) * ((k as f64 + 1.0) / (k as f64 + 2.0));
            assert_relative_eq!(m[(0, 0)].re, expect, epsilon = 1e-14);
        }

        assert!(shift_adjoint_coeffs(&hardy, &[]).is_empty());
    }

    #[test]
    fn shift_adjoint_intertwines_observability() {
        // coefficients of O x shifted = coefficients of O (T x)
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let w = WeightSequence::bergman(3).unwrap();
        let (t, e) = random_stable_system(&mut rng, 3, 2, 0.6);
        let x = CVector::from_fn(3, |i, _| c64(0.5 * i as f64 - 0.3, 0.1));
        let coeff = |x: &CVector, j: usize| -> CMatrix {
            // beta_j^{-1} E T^j x as a 2x1 matrix
            let mut v = x.clone();
            for _ in 0..j {
                v = &t * v;
            }
            let out = (&e * v) * cr(1.0 / w.beta(j));
            CMatrix::from_column_slice(2, 1, out.as_slice())
        };
        let coeffs: Vec<CMatrix> = (0..12).map(|j| coeff(&x, j)).collect();
        let shifted = shift_adjoint_coeffs(&w, &coeffs);
        let tx = &t * &x;
        for (k, m) in shifted.iter().enumerate() {
            let expect = coeff(&tx, k);
            assert!(op_norm(&(m - expect)) < 1e-10, "entry {k}");
        }
    }
}
