//! Attack-spec JSON files.
//!
//! ```json
//! { "eta": 0.5, "d_e": 3,
//!   "kets": { "phi_0_b0": [[re, im], ...], "phi_1_b0": [...], "phi_nc_b0": [...],
//!             "phi_0_b1": [...], "phi_1_b1": [...], "phi_nc_b1": [...] } }
//! ```

use std::path::Path;

use qkdloss_core::attack::ProbeKets;
use qkdloss_core::qmath::{ComplexVec, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum AttackFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed attack spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ket {name} has {found} entries, expected d_e = {expected}")]
    Length {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite number in ket {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Invalid(#[from] qkdloss_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub eta: f64,
    pub d_e: usize,
    pub kets: KetTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KetTable {
    pub phi_0_b0: Vec<[f64; 2]>,
    pub phi_1_b0: Vec<[f64; 2]>,
    pub phi_nc_b0: Vec<[f64; 2]>,
    pub phi_0_b1: Vec<[f64; 2]>,
    pub phi_1_b1: Vec<[f64; 2]>,
    pub phi_nc_b1: Vec<[f64; 2]>,
}

fn to_ket(
    name: &'static str,
    pairs: &[[f64; 2]],
    d_e: usize,
) -> Result<ComplexVec, AttackFileError> {
    if pairs.len() != d_e {
        return Err(AttackFileError::Length {
            name,
            expected: d_e,
            found: pairs.len(),
        });
    }
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(AttackFileError::NonFinite(name));
    }
    Ok(ComplexVec::new(
        pairs.iter().map(|&[re, im]| C64::new(re, im)).collect(),
    ))
}

fn to_pairs(v: &ComplexVec) -> Vec<[f64; 2]> {
    v.entries().iter().map(|z| [z.re, z.im]).collect()
}

impl AttackSpec {
    pub fn from_probe_kets(pk: &ProbeKets) -> Self {
        let k = |i, b| to_pairs(pk.ket(i, b));
        Self {
            eta: pk.eta(),
            d_e: pk.d_e(),
            kets: KetTable {
                phi_0_b0: k(0, 0),
                phi_1_b0: k(1, 0),
                phi_nc_b0: k(2, 0),
                phi_0_b1: k(0, 1),
                phi_1_b1: k(1, 1),
                phi_nc_b1: k(2, 1),
            },
        }
    }

    pub fn to_probe_kets(&self) -> Result<ProbeKets, AttackFileError> {
        let d = self.d_e;
        let t = &self.kets;
        let phi = [
            [
                to_ket("phi_0_b0", &t.phi_0_b0, d)?,
                to_ket("phi_0_b1", &t.phi_0_b1, d)?,
            ],
            [
                to_ket("phi_1_b0", &t.phi_1_b0, d)?,
                to_ket("phi_1_b1", &t.phi_1_b1, d)?,
            ],
            [
                to_ket("phi_nc_b0", &t.phi_nc_b0, d)?,
                to_ket("phi_nc_b1", &t.phi_nc_b1, d)?,
            ],
        ];
        Ok(ProbeKets::new(self.eta, phi)?)
    }
}

pub fn parse_attack(text: &str) -> Result<ProbeKets, AttackFileError> {
    serde_json::from_str::<AttackSpec>(text)?.to_probe_kets()
}

pub fn read_attack(path: &Path) -> Result<ProbeKets, AttackFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| AttackFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_attack(&text)
}

pub fn attack_to_json(pk: &ProbeKets) -> String {
    let mut s = serde_json::to_string_pretty(&AttackSpec::from_probe_kets(pk))
        .expect("attack spec serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use qkdloss_core::attack::{imaginary_deficit_attack, passive_loss_attack};

    #[test]
    fn round_trip() {
        for pk in [
            passive_loss_attack(0.3, 3).unwrap(),
            imaginary_deficit_attack(0.5, 0.3, 4).unwrap(),
        ] {
            assert_eq!(parse_attack(&attack_to_json(&pk)).unwrap(), pk);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let good = attack_to_json(&passive_loss_attack(0.5, 3).unwrap());
        let truncated = &good[..good.len() / 2];
        assert!(matches!(
            parse_attack(truncated),
            Err(AttackFileError::Json(_))
        ));
        let short = good.replacen("\"d_e\": 3", "\"d_e\": 4", 1);
        assert!(matches!(
            parse_attack(&short),
            Err(AttackFileError::Length { .. })
        ));
        let bad_eta = good.replacen("\"eta\": 0.5", "\"eta\": 1.5", 1);
        assert!(matches!(
            parse_attack(&bad_eta),
            Err(AttackFileError::Invalid(_))
        ));
    }
}
