//! Small-dimension complex linear algebra and quantum-information metrics.

mod linalg;

use alloc::vec::Vec;

pub use linalg::{inner_product, CMatrix, ComplexVec, HermitianEigen, C64};
pub(crate) use linalg::{I, ONE, ZERO};

use crate::error::check_probability;
use crate::{Error, Result};

/// Numerical tolerances used when validating density operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    /// Eigenvalues down to `-psd` are accepted (and clamped to zero in entropies).
    pub psd: f64,
}

impl Tolerances {
    pub const fn uniform(tol: f64) -> Self {
        Self {
            hermitian: tol,
            trace: tol,
            psd: tol,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(1e-12)
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
///
/// The eigenvalues are computed once at construction and cached.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
}

impl DensityOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: Tolerances) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > tol.hermitian {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidTrace(tr.re));
        }
        let eigenvalues = matrix.eigh().values;
        let min = eigenvalues.first().copied().unwrap_or(0.0);
        if min < -tol.psd {
            return Err(Error::NotPositive(min));
        }
        Ok(Self {
            matrix,
            eigenvalues,
        })
    }

    /// `|v⟩⟨v|` for a unit vector `v`.
    pub fn pure(v: &ComplexVec) -> Result<Self> {
        let n = v.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalized(n));
        }
        Self::new(CMatrix::projector(v))
    }

    /// Maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim).scaled(1.0 / dim as f64);
        Self {
            matrix: m,
            eigenvalues: alloc::vec![1.0 / dim as f64; dim],
        }
    }

    /// `p * a + (1 - p) * b`.
    pub fn mixture(p: f64, a: &Self, b: &Self) -> Result<Self> {
        check_probability("p", p)?;
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Self::new(a.matrix.combine(p, &b.matrix, 1.0 - p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Probability `⟨v|ρ|v⟩` of projecting onto the unit vector `v`.
    pub fn probability(&self, v: &ComplexVec) -> f64 {
        self.matrix.expectation(v).re
    }
}

/// `-p log2 p - (1-p) log2 (1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_spectrum(&[p, 1.0 - p])
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&lambda| lambda.max(0.0))
        .filter(|&lambda| lambda > 0.0)
        .map(|lambda| -lambda * libm::log2(lambda))
        .sum()
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &DensityOp) -> f64 {
    entropy_of_spectrum(rho.eigenvalues())
}

fn check_pair(rho0: &DensityOp, rho1: &DensityOp, p0: f64) -> Result<()> {
    check_probability("p0", p0)?;
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    Ok(())
}

/// Holevo quantity of the binary ensemble `{(p0, ρ0), (1-p0, ρ1)}` in bits.
pub fn holevo_bound(rho0: &DensityOp, rho1: &DensityOp, p0: f64) -> Result<f64> {
    check_pair(rho0, rho1, p0)?;
    let mix = rho0.matrix.combine(p0, &rho1.matrix, 1.0 - p0);
    let s_mix = entropy_of_spectrum(&mix.eigh().values);
    let chi = s_mix - p0 * vn_entropy(rho0) - (1.0 - p0) * vn_entropy(rho1);
    Ok(chi.max(0.0))
}

/// Optimal probability of guessing which of the two states was prepared.
pub fn helstrom_prob(rho0: &DensityOp, rho1: &DensityOp, p0: f64) -> Result<f64> {
    check_pair(rho0, rho1, p0)?;
    let diff = rho0.matrix.combine(p0, &rho1.matrix, -(1.0 - p0));
    let trace_norm: f64 = diff.eigh().values.iter().map(|l| l.abs()).sum();
    Ok((0.5 + 0.5 * trace_norm).min(1.0))
}

/// Trace distance `½‖ρ0 − ρ1‖₁`.
pub fn trace_distance(rho0: &DensityOp, rho1: &DensityOp) -> Result<f64> {
    check_pair(rho0, rho1, 0.5)?;
    let diff = rho0.matrix.combine(1.0, &rho1.matrix, -1.0);
    Ok(0.5 * diff.eigh().values.iter().map(|l| l.abs()).sum::<f64>())
}
