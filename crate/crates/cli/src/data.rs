//! Dataset loading: raw SDF files, the bundled sample, or a prepared cache.

use std::path::Path;

use qmolgen_core::dataset::{load_sdf, LoadReport, BUNDLED_SAMPLE};
use qmolgen_core::MolecularGraph;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::CliError;

pub const CACHE_FORMAT: &str = "qmolgen-graphs";
pub const CACHE_VERSION: u32 = 1;

/// The accepted-graph cache written by `prepare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphCache {
    pub format: String,
    pub version: u32,
    /// Digest of the graph list, see [`graphs_sha256`].
    pub dataset_sha256: String,
    pub graphs: Vec<MolecularGraph>,
}

/// Loaded graphs plus where they came from.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub graphs: Vec<MolecularGraph>,
    /// Present when parsed from SDF.
    pub report: Option<LoadReport>,
    pub sha256: String,
}

/// Content digest of an accepted-graph list. An SDF file and its prepared
/// cache hash the same.
pub fn graphs_sha256(graphs: &[MolecularGraph]) -> String {
    sha256_hex(&serde_json::to_vec(graphs).expect("graphs serialize"))
}

fn from_sdf(bytes: &[u8]) -> LoadedData {
    let (graphs, report) = load_sdf(bytes);
    let sha256 = graphs_sha256(&graphs);
    LoadedData {
        graphs,
        report: Some(report),
        sha256,
    }
}

/// Reads `path` (SDF or cache JSON, told apart by content), or the bundled
/// sample when `path` is `None`.
pub fn load(path: Option<&Path>) -> Result<LoadedData, CliError> {
    let Some(path) = path else {
        return Ok(from_sdf(BUNDLED_SAMPLE));
    };
    let bytes = std::fs::read(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        let cache: GraphCache = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Data(format!("{}: not a graph cache: {e}", path.display())))?;
        if cache.format != CACHE_FORMAT || cache.version != CACHE_VERSION {
            return Err(CliError::Data(format!(
                "{}: unsupported cache {} v{}",
                path.display(),
                cache.format,
                cache.version
            )));
        }
        let sha256 = graphs_sha256(&cache.graphs);
        if sha256 != cache.dataset_sha256 {
            return Err(CliError::Data(format!("{}: cache digest mismatch", path.display())));
        }
        return Ok(LoadedData {
            graphs: cache.graphs,
            report: None,
            sha256,
        });
    }
    Ok(from_sdf(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sample_loads() {
        let d = load(None).unwrap();
        assert_eq!(d.graphs.len(), 1000);
        assert_eq!(d.report.unwrap().accepted, 1000);
        assert_eq!(d.sha256.len(), 64);
    }

    #[test]
    fn cache_round_trip_keeps_digest() {
        let d = load(None).unwrap();
        let cache = GraphCache {
            format: CACHE_FORMAT.into(),
            version: CACHE_VERSION,
            dataset_sha256: d.sha256.clone(),
            graphs: d.graphs[..10].to_vec(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.json");
        let mut bad = cache.clone();
        bad.dataset_sha256 = "00".into();
        std::fs::write(&p, serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(matches!(load(Some(&p)), Err(CliError::Data(_))));
        let mut good = cache;
        good.dataset_sha256 = graphs_sha256(&good.graphs);
        std::fs::write(&p, serde_json::to_string(&good).unwrap()).unwrap();
        let back = load(Some(&p)).unwrap();
        assert_eq!(back.graphs, d.graphs[..10]);
        assert!(back.report.is_none());
    }
}
