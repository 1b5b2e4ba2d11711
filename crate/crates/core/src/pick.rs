//! Pick matrices, Hermitian classification and the solvability test.

use crate::error::{Error, Result};
use crate::linalg::{cr, hermitian_defect, hermitian_eigenvalues, hermitize, CMatrix, C64};
use crate::statespace::{obs_gramian, InterpolationData};
use crate::weights::WeightSequence;

/// Default relative tolerance for definiteness decisions.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::PositiveDefinite => write!(f, "positive definite"),
            Classification::PositiveSemidefinite => write!(f, "positive semidefinite"),
            Classification::Indefinite => write!(f, "indefinite"),
        }
    }
}

/// Outcome of classifying a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct PsdVerdict {
    pub classification: Classification,
    /// Witness: the smallest eigenvalue.
    pub min_eigenvalue: f64,
    /// The absolute threshold the classification used.
    pub tolerance_used: f64,
}

/// The Pick matrix `P = G_{beta,E,T} - G_{alpha,N,T}`.
pub fn pick_matrix(data: &InterpolationData) -> Result<CMatrix> {
    let g_out = obs_gramian(data.beta(), data.e(), data.t())?;
    let g_in = obs_gramian(data.alpha(), data.n(), data.t())?;
    Ok(hermitize(&(g_out.matrix - g_in.matrix)))
}

/// Builds interpolation data for Nevanlinna-Pick conditions `S(z_i) = V_i`:
/// `T = diag(conj(z_i) I_p)`, `E = [I_p ... I_p]`, `N = [V_1^* ... V_k^*]`.
pub fn np_data(
    nodes: &[C64],
    values: &[CMatrix],
    alpha: WeightSequence,
    beta: WeightSequence,
) -> Result<InterpolationData> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one interpolation node".to_string(),
        ));
    }
    if nodes.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} nodes but {} values",
            nodes.len(),
            values.len()
        )));
    }
    for (i, z) in nodes.iter().enumerate() {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk { modulus: z.norm() });
        }
        for w in &nodes[i + 1..] {
            if (z - w).norm() < 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate interpolation node {z}"
                )));
            }
        }
    }
    let (p, q) = values[0].shape();
    if values.iter().any(|v| v.shape() != (p, q)) {
        return Err(Error::DimensionMismatch(
            "all interpolation values must share one shape".to_string(),
        ));
    }
    let k = nodes.len();
    let d = k * p;

    let mut t = CMatrix::zeros(d, d);
    let mut e = CMatrix::zeros(p, d);
    let mut n = CMatrix::zeros(q, d);
    for (i, (z, v)) in nodes.iter().zip(values.iter()).enumerate() {
        for r in 0..p {
            t[(i * p + r, i * p + r)] = z.conj();
            e[(r, i * p + r)] = cr(1.0);
        }
        n.view_mut((0, i * p), (q, p)).copy_from(&v.adjoint());
    }

    let mut data = InterpolationData::new(alpha, beta, t, e, n)?;
    data.set_np_nodes(nodes.to_vec());
    Ok(data)
}

/// Classifies a Hermitian matrix by its full spectrum. `tol` is relative:
/// the effective threshold is `tol * max(1, lambda_max)`.
pub fn is_psd(m: &CMatrix, tol: f64) -> Result<PsdVerdict> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(
            "classification needs a square matrix".to_string(),
        ));
    }
    let defect = hermitian_defect(m);
    let scale = m.camax().max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian {
            defect,
            tol: 1e-10 * scale,
        });
    }
    let eigs = hermitian_eigenvalues(m);
    let min = eigs.first().copied().unwrap_or(0.0);
    let max = eigs.last().copied().unwrap_or(0.0);
    let threshold = tol * max.max(1.0);
    let classification = if min > threshold {
        Classification::PositiveDefinite
    } else if min >= -threshold {
        Classification::PositiveSemidefinite
    } else {
        Classification::Indefinite
    };
    Ok(PsdVerdict {
        classification,
        min_eigenvalue: min,
        tolerance_used: threshold,
    })
}

/// Solvability report for the interpolation problem.
#[derive(Debug, Clone)]
pub struct SolvabilityReport {
    pub verdict: PsdVerdict,
    /// Whether the verdict settles existence. For the Hardy input weight
    /// positivity is equivalent to solvability; for other input weights it
    /// is only necessary, so a nonnegative verdict stays inconclusive while
    /// an indefinite one still rules solutions out.
    pub conclusive: bool,
    pub pick: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl SolvabilityReport {
    pub fn solvable(&self) -> Option<bool> {
        match (self.verdict.classification, self.conclusive) {
            (Classification::Indefinite, _) => Some(false),
            (_, true) => Some(true),
            (_, false) => None,
        }
    }
}

/// Runs the Pick-matrix test on the data.
pub fn solvability(data: &InterpolationData) -> Result<SolvabilityReport> {
    solvability_with_tol(data, DEFAULT_PSD_TOL)
}

pub fn solvability_with_tol(data: &InterpolationData, tol: f64) -> Result<SolvabilityReport> {
    let p = pick_matrix(data)?;
    let verdict = is_psd(&p, tol)?;
    let eigenvalues = hermitian_eigenvalues(&p);
    let conclusive =
        data.alpha().is_hardy() || verdict.classification == Classification::Indefinite;
    Ok(SolvabilityReport {
        verdict,
        conclusive,
        pick: p,
        eigenvalues,
    })
}
