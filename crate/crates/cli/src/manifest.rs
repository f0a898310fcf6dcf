use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const STDOUT_KEY: &str = "<stdout>";

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    /// Flags with defaults filled in.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// SHA-256 of every file read.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of standard output and every file written.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Default manifest location for a command.
pub fn default_manifest_path(command: &str, main_output: Option<&Path>) -> PathBuf {
    match main_output {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("qkdloss-{command}.manifest.json")),
    }
}

/// One output compared during replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigestCheck {
    pub name: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
    pub matches: bool,
}

pub fn compare(
    expected: &BTreeMap<String, String>,
    actual: &BTreeMap<String, String>,
) -> Vec<DigestCheck> {
    let mut names: Vec<&String> = expected.keys().chain(actual.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let e = expected.get(name).cloned();
            let a = actual.get(name).cloned();
            DigestCheck {
                name: name.clone(),
                matches: e.is_some() && e == a,
                expected: e,
                actual: a,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn default_paths() {
        assert_eq!(
            default_manifest_path("tradeoff", Some(Path::new("out/sweep.csv"))),
            PathBuf::from("out/sweep.csv.manifest.json")
        );
        assert_eq!(
            default_manifest_path("verify", None),
            PathBuf::from("qkdloss-verify.manifest.json")
        );
    }

    #[test]
    fn compare_flags_missing_and_changed() {
        let e: BTreeMap<_, _> = [
            ("a".to_string(), "1".to_string()),
            ("b".to_string(), "2".to_string()),
        ]
        .into();
        let a: BTreeMap<_, _> = [
            ("a".to_string(), "1".to_string()),
            ("b".to_string(), "3".to_string()),
            ("c".to_string(), "4".to_string()),
        ]
        .into();
        let checks = compare(&e, &a);
        let ok: Vec<bool> = checks.iter().map(|c| c.matches).collect();
        assert_eq!(ok, [true, false, false]);
    }
}
