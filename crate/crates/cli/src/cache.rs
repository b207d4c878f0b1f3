//! Content-addressed result cache: one JSON-encoded row per key, keyed by a
//! hash of the canonical relaxation dump plus solver settings. Equal inputs
//! give equal keys regardless of how the config spelled them (extras order,
//! for instance, is canonicalized away by the basis ordering).

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use rdiqkd_core::keyrate::KeyRateError;
use rdiqkd_core::npo::{build_entropy_problem, EntropyOptions};
use rdiqkd_core::protocols::{honest_tables, NoiseParams, ProtocolSpec};
use rdiqkd_core::quadrature::{alpha, gauss_radau};
use rdiqkd_core::sdp::SolverSettings;

use crate::row::ResultRow;

pub const CACHE_DIR_ENV: &str = "RDIQKD_CACHE_DIR";

/// Stable content hash of a key-rate evaluation. The smallest-t node problem
/// is dumped per key input; its text pins the scenario, basis, every
/// constraint right-hand side (hence the noise point) and the quadrature node
/// (hence m), so together with m and the solver settings it identifies the
/// whole computation.
pub fn cache_key(
    spec: &ProtocolSpec,
    noise: &NoiseParams,
    m: usize,
    opts: &EntropyOptions,
    settings: &SolverSettings,
) -> Result<String, KeyRateError> {
    let tables = honest_tables(spec, noise)?;
    let rule = gauss_radau(m)?;
    let t = rule.nodes[0];
    let a = alpha(t)?;
    let mut hasher = Sha256::new();
    hasher.update(format!(
        "m={m} tol={:.17e} max_iter={} rho={:.17e} over_relax={:.17e} polish={}\n",
        settings.tol, settings.max_iter, settings.rho, settings.over_relax, settings.polish_steps
    ));
    for &(key_x, _, q) in &spec.key_set {
        let mp = build_entropy_problem(spec, &tables, key_x, t, a, opts)?;
        hasher.update(format!("key_x={key_x} q={q:.17e}\n"));
        hasher.update(mp.dump());
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Cache root: the environment override wins, then the config value; `None`
/// disables caching.
pub fn resolve_dir(config_dir: Option<&Path>, no_cache: bool) -> Option<PathBuf> {
    if no_cache {
        return None;
    }
    if let Ok(dir) = std::env::var(CACHE_DIR_ENV) {
        if !dir.is_empty() {
            return Some(PathBuf::from(dir));
        }
    }
    config_dir.map(|p| p.to_path_buf())
}

pub fn lookup(dir: &Path, key: &str) -> Option<ResultRow> {
    let text = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn store(dir: &Path, key: &str, row: &ResultRow) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{key}.json.tmp"));
    std::fs::write(&tmp, serde_json::to_string(row).unwrap())?;
    std::fs::rename(&tmp, dir.join(format!("{key}.json")))
}
