use alloc::format;
use alloc::vec::Vec;

use crate::error::check_probability;
use crate::qmath::{CMatrix, ComplexVec, C64, I, ONE, ZERO};
use crate::states::{FamilyKind, ProtocolFamily, SignalState, StateLabel};
use crate::{Error, Result};

/// Default tolerance for the boolean feasibility helpers.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// Tolerance used when an operation requires a feasible attack as input.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Index of Bob's outcome in the probe-ket table.
pub const NO_COUNT: usize = 2;

/// Identical individual attack given by the images of `|0⟩|E⟩` and `|1⟩|E⟩`:
///
/// `T|b⟩|E⟩ = Σ_i |i⟩_B |φ_i^b⟩_E` for `i ∈ {0, 1, ∅}`.
///
/// Kets are unnormalized. Isometry and equal-throughput conditions are not
/// enforced here; use [`check_isometry`] and [`check_equal_throughput`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeKets {
    eta: f64,
    /// `phi[i][b]`, `i` indexed `(Bit0, Bit1, NoCount)`.
    phi: [[ComplexVec; 2]; 3],
}

impl ProbeKets {
    pub fn new(eta: f64, phi: [[ComplexVec; 2]; 3]) -> Result<Self> {
        check_probability("eta", eta)?;
        let d_e = phi[0][0].dim();
        if d_e == 0 {
            return Err(Error::InvalidParameter(
                "probe dimension must be positive".into(),
            ));
        }
        for ket in phi.iter().flatten() {
            if ket.dim() != d_e {
                return Err(Error::DimensionMismatch {
                    expected: d_e,
                    found: ket.dim(),
                });
            }
        }
        Ok(Self { eta, phi })
    }

    /// Lossless attack (`η = 1`) with the given in-plane kets `phi[i][b]`,
    /// `i ∈ {0, 1}`, and zero no-count kets.
    pub fn lossless(phi: [[ComplexVec; 2]; 2]) -> Result<Self> {
        let d_e = phi[0][0].dim();
        let [r0, r1] = phi;
        Self::new(
            1.0,
            [r0, r1, [ComplexVec::zeros(d_e), ComplexVec::zeros(d_e)]],
        )
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn d_e(&self) -> usize {
        self.phi[0][0].dim()
    }

    /// `φ_i^b`.
    pub fn ket(&self, i: usize, b: usize) -> &ComplexVec {
        &self.phi[i][b]
    }

    pub fn kets(&self) -> &[[ComplexVec; 2]; 3] {
        &self.phi
    }

    /// `⟨φ_∅^0|φ_∅^1⟩`.
    pub fn no_count_overlap(&self) -> C64 {
        self.phi[NO_COUNT][0].inner_unchecked(&self.phi[NO_COUNT][1])
    }

    /// Probe-side vectors multiplying each Bob outcome when Alice sends
    /// `a|0⟩ + b|1⟩`, by linearity of the attack.
    pub fn image(&self, amplitudes: [C64; 2]) -> [ComplexVec; 3] {
        let [a, b] = amplitudes;
        [0, 1, 2].map(|i| self.phi[i][0].combine(a, &self.phi[i][1], b))
    }

    /// Applies the same operator to every probe ket. A unitary leaves all
    /// physical predictions unchanged.
    pub fn map_probe(&self, u: &CMatrix) -> Result<Self> {
        if u.dim() != self.d_e() {
            return Err(Error::DimensionMismatch {
                expected: self.d_e(),
                found: u.dim(),
            });
        }
        let phi = self.phi.clone().map(|row| row.map(|k| u.mat_vec(&k)));
        Ok(Self { eta: self.eta, phi })
    }
}

/// Residuals of the isometry conditions
/// `Σ_i ‖φ_i^b‖² = 1` and `Σ_i ⟨φ_i^0|φ_i^1⟩ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IsometryResiduals {
    pub norm: [f64; 2],
    pub inner: f64,
}

impl IsometryResiduals {
    pub fn max(&self) -> f64 {
        self.norm[0].max(self.norm[1]).max(self.inner)
    }

    pub fn is_isometric(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn check_isometry(pk: &ProbeKets) -> IsometryResiduals {
    let norm = [0, 1].map(|b| {
        let total: f64 = (0..3).map(|i| pk.phi[i][b].norm_sqr()).sum();
        (total - 1.0).abs()
    });
    let inner = (0..3)
        .fold(ZERO, |acc, i| {
            acc + pk.phi[i][0].inner_unchecked(&pk.phi[i][1])
        })
        .norm();
    IsometryResiduals { norm, inner }
}

/// Residuals of the equal-throughput conditions for a protocol family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThroughputResiduals {
    pub family: FamilyKind,
    /// `|‖φ_∅^b‖² − (1 − η)|`.
    pub norm_nc: [f64; 2],
    /// `|Re⟨φ_∅^0|φ_∅^1⟩|`.
    pub re_overlap: f64,
    /// `|Im⟨φ_∅^0|φ_∅^1⟩|`, reported for the 6-state family.
    pub im_overlap: Option<f64>,
    /// `|η_ψ − η|` for each signal state of the family.
    pub per_state: Vec<(StateLabel, f64)>,
}

impl ThroughputResiduals {
    /// Largest residual that the family's conditions constrain.
    pub fn max(&self) -> f64 {
        match self.family {
            FamilyKind::B92 => self.per_state.iter().map(|&(_, r)| r).fold(0.0, f64::max),
            _ => self
                .norm_nc
                .iter()
                .copied()
                .chain([self.re_overlap])
                .chain(self.im_overlap)
                .fold(0.0, f64::max),
        }
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn check_equal_throughput(pk: &ProbeKets, family: &ProtocolFamily) -> ThroughputResiduals {
    let loss = 1.0 - pk.eta;
    let norm_nc = [0, 1].map(|b| (pk.phi[NO_COUNT][b].norm_sqr() - loss).abs());
    let overlap = pk.no_count_overlap();
    let im_overlap = (family.kind() == FamilyKind::Bb84Six).then(|| overlap.im.abs());
    let per_state = family
        .signal_states()
        .iter()
        .map(|s| {
            (
                s.label(),
                (throughput_unchecked(pk, s.amplitudes()) - pk.eta).abs(),
            )
        })
        .collect();
    ThroughputResiduals {
        family: family.kind(),
        norm_nc,
        re_overlap: overlap.re.abs(),
        im_overlap,
        per_state,
    }
}

fn throughput_unchecked(pk: &ProbeKets, [a, b]: [C64; 2]) -> f64 {
    let nc = pk.phi[NO_COUNT][0].combine(a, &pk.phi[NO_COUNT][1], b);
    1.0 - nc.norm_sqr()
}

/// Throughput `η_ψ = 1 − ‖a φ_∅^0 + b φ_∅^1‖²` seen by `a|0⟩ + b|1⟩`.
pub fn throughput_of(pk: &ProbeKets, amplitudes: [C64; 2]) -> Result<f64> {
    let n = amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::Unnormalized(n));
    }
    Ok(throughput_unchecked(pk, amplitudes))
}

/// Throughput of a signal state.
pub fn signal_throughput(pk: &ProbeKets, state: &SignalState) -> f64 {
    throughput_unchecked(pk, state.amplitudes())
}

/// Attack after discarding no-count events and renormalizing by `√η`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredAttack {
    eta: f64,
    /// `φ̂_i^b` for `i ∈ {0, 1}`.
    hatted: [[ComplexVec; 2]; 2],
    /// `φ̂_∅^b`.
    hatted_nc: [ComplexVec; 2],
    /// `⟨φ̂_∅^0|φ̂_∅^1⟩`.
    deficit: C64,
}

impl FilteredAttack {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn d_e(&self) -> usize {
        self.hatted[0][0].dim()
    }

    /// `φ̂_i^b`, `i ∈ {0, 1}`.
    pub fn hatted(&self, i: usize, b: usize) -> &ComplexVec {
        &self.hatted[i][b]
    }

    pub fn hatted_no_count(&self, b: usize) -> &ComplexVec {
        &self.hatted_nc[b]
    }

    pub fn deficit(&self) -> C64 {
        self.deficit
    }

    /// Real `X` with `deficit = iX`.
    pub fn x(&self) -> f64 {
        self.deficit.im
    }

    /// Post-selected kets for Alice's input `a|0⟩ + b|1⟩`, by linearity.
    pub fn image(&self, [a, b]: [C64; 2]) -> [ComplexVec; 2] {
        [0, 1].map(|i| self.hatted[i][0].combine(a, &self.hatted[i][1], b))
    }

    /// Whether the Y basis is meaningful: a vanishing deficit is required for
    /// `|L⟩`, `|R⟩` to keep unit post-selected norm.
    pub fn supports_y_basis(&self, tol: f64) -> bool {
        self.deficit.norm() <= tol
    }
}

/// Discards no-count events and rescales the remaining kets by `1/√η`.
///
/// Requires an isometric attack satisfying the 4-state equal-throughput
/// conditions at `tol`.
pub fn filter_no_count_with(pk: &ProbeKets, tol: f64) -> Result<FilteredAttack> {
    if pk.eta <= 0.0 {
        return Err(Error::ZeroThroughput);
    }
    let iso = check_isometry(pk);
    let thr = check_equal_throughput(pk, &ProtocolFamily::bb84_four());
    if !iso.is_isometric(tol) || !thr.is_feasible(tol) {
        return Err(Error::Infeasible(format!(
            "isometry residuals {:?}/{:e}, throughput residuals {:?}/{:e}",
            iso.norm, iso.inner, thr.norm_nc, thr.re_overlap
        )));
    }
    let scale = 1.0 / libm::sqrt(pk.eta);
    let hatted = [0, 1].map(|i| [0, 1].map(|b| pk.phi[i][b].scaled_real(scale)));
    let hatted_nc = [0, 1].map(|b| pk.phi[NO_COUNT][b].scaled_real(scale));
    let deficit = hatted_nc[0].inner_unchecked(&hatted_nc[1]);

    let in_plane = (0..2).fold(ZERO, |acc, i| {
        acc + hatted[i][0].inner_unchecked(&hatted[i][1])
    });
    // Tolerances scale with 1/η once kets are rescaled.
    let scaled_tol = tol / pk.eta;
    if (in_plane + deficit).norm() > scaled_tol {
        return Err(Error::Infeasible(format!(
            "post-selected inner products do not cancel: {:e}",
            (in_plane + deficit).norm()
        )));
    }
    Ok(FilteredAttack {
        eta: pk.eta,
        hatted,
        hatted_nc,
        deficit,
    })
}

pub fn filter_no_count(pk: &ProbeKets) -> Result<FilteredAttack> {
    filter_no_count_with(pk, FEASIBILITY_TOL)
}

fn check_probe_dim(d_e: usize, min: usize) -> Result<()> {
    if d_e < min {
        return Err(Error::InvalidParameter(format!(
            "probe dimension must be at least {min}, got {d_e}"
        )));
    }
    Ok(())
}

/// Eve does nothing but realize the line loss, recording which path the
/// photon took in orthogonal environment states.
pub fn passive_loss_attack(eta: f64, d_e: usize) -> Result<ProbeKets> {
    check_probability("eta", eta)?;
    check_probe_dim(d_e, 3)?;
    let e = |k| ComplexVec::basis(d_e, k);
    let zero = || ComplexVec::zeros(d_e);
    let t = libm::sqrt(eta);
    let l = libm::sqrt(1.0 - eta);
    ProbeKets::new(
        eta,
        [
            [e(0).scaled_real(t), zero()],
            [zero(), e(0).scaled_real(t)],
            [e(1).scaled_real(l), e(2).scaled_real(l)],
        ],
    )
}

/// A 4-state-feasible attack whose post-selected deficit is exactly `iX`.
///
/// Requires `|X| ≤ min(1, (1 − η)/η)` and `d_e ≥ 4`.
pub fn imaginary_deficit_attack(eta: f64, x: f64, d_e: usize) -> Result<ProbeKets> {
    check_probability("eta", eta)?;
    check_probe_dim(d_e, 4)?;
    if eta <= 0.0 || eta >= 1.0 {
        if x != 0.0 {
            return Err(Error::InvalidParameter(
                "a nonzero deficit needs 0 < eta < 1".into(),
            ));
        }
        return passive_loss_attack(eta, d_e);
    }
    let loss = 1.0 - eta;
    let bound = (loss / eta).min(1.0);
    if x.abs() > bound + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "|X| = {} exceeds the admissible bound {bound}",
            x.abs()
        )));
    }
    let e = |k| ComplexVec::basis(d_e, k);
    let zero = || ComplexVec::zeros(d_e);
    // ⟨φ_∅^0|φ_∅^1⟩ = iηX.
    let cross = eta * x / libm::sqrt(loss);
    let nc1 = e(2).scaled(I * cross).combine(
        ONE,
        &e(3),
        C64::new(libm::sqrt((loss - cross * cross).max(0.0)), 0.0),
    );
    let t = libm::sqrt(eta);
    ProbeKets::new(
        eta,
        [
            [e(0).scaled_real(t), e(0).scaled(-I * (x * t))],
            [
                zero(),
                e(1).scaled_real(libm::sqrt((eta - eta * x * x).max(0.0))),
            ],
            [e(2).scaled_real(libm::sqrt(loss)), nc1],
        ],
    )
}
