//! The lossy line and Bob's detector inefficiency as separate mechanisms.
//!
//! Line loss acts before Bob and is where an eavesdropper can hide
//! deletions. Detector loss thins Bob's clicks independently of anything
//! upstream.

use crate::error::check_probability;
use crate::qmath::{CMatrix, DensityOp, C64};
use crate::rng::Stream;
use crate::states::{BobOutcome, SignalState};
use crate::{Error, Result};

/// Line with state-independent transmittance `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        check_probability("eta", eta)?;
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn apply(&self, rho: &DensityOp) -> Result<DensityOp> {
        apply_loss_map(rho, self.eta)
    }
}

/// Detector with click efficiency `p_det`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    p_det: f64,
}

impl DetectorModel {
    pub fn new(p_det: f64) -> Result<Self> {
        check_probability("p_det", p_det)?;
        Ok(Self { p_det })
    }

    /// A detector that never misses a click.
    pub fn perfect() -> Self {
        Self { p_det: 1.0 }
    }

    pub fn p_det(&self) -> f64 {
        self.p_det
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::perfect()
    }
}

/// `ρ ↦ ηρ ⊕ (1−η)|∅⟩⟨∅|`, embedding a qubit operator into Bob's
/// three-level space `(Bit0, Bit1, NoCount)`.
pub fn apply_loss_map(rho: &DensityOp, eta: f64) -> Result<DensityOp> {
    check_probability("eta", eta)?;
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let mut out = CMatrix::zeros(3);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = rho.matrix()[(i, j)] * eta;
        }
    }
    out[(2, 2)] = C64::new(1.0 - eta, 0.0);
    DensityOp::new(out)
}

/// What the line does to one transmitted signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmission {
    Delivered(SignalState),
    Lost,
}

pub fn sample_transmission(state: SignalState, eta: f64, rng: &mut Stream) -> Transmission {
    if rng.bernoulli(eta) {
        Transmission::Delivered(state)
    } else {
        Transmission::Lost
    }
}

/// Turns a click into a no-count with probability `1 − p_det`.
pub fn detector_thin(outcome: BobOutcome, p_det: f64, rng: &mut Stream) -> BobOutcome {
    match outcome {
        BobOutcome::NoCount => BobOutcome::NoCount,
        click => {
            if rng.bernoulli(p_det) {
                click
            } else {
                BobOutcome::NoCount
            }
        }
    }
}
