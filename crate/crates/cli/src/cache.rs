//! On-disk cache of simulated externality points.
//!
//! Entries are keyed by a digest of everything that determines the point, so
//! a warm rerun performs no simulation.

use std::fs;
use std::path::PathBuf;

use mmshare::exec::Execution;
use mmshare::externality::{self, OpenResourceScenario, RawPoint, ResourceCaps};
use mmshare::sim::SimSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::{unix_now, write_atomic, CacheUse};
use crate::Failure;

/// Overrides the cache location (default: `<out-dir>/.cache`).
pub const CACHE_DIR_ENV: &str = "MMSHARE_CACHE_DIR";

#[derive(Serialize)]
struct Key<'a> {
    scenario: OpenResourceScenario,
    n: f64,
    caps: &'a ResourceCaps,
    sim: &'a SimSettings,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    computed_at: u64,
    point: RawPoint,
}

pub struct PointCache {
    dir: PathBuf,
    pub uses: Vec<CacheUse>,
}

impl PointCache {
    pub fn new(default_dir: PathBuf) -> Self {
        let dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or(default_dir);
        Self { dir, uses: Vec::new() }
    }

    pub fn point(
        &mut self,
        scenario: OpenResourceScenario,
        n: f64,
        caps: &ResourceCaps,
        sim: &SimSettings,
        exec: Execution,
    ) -> Result<RawPoint, Failure> {
        let json = serde_json::to_string(&Key { scenario, n, caps, sim }).expect("keys serialize");
        let key = hex::encode(&Sha256::digest(json.as_bytes())[..12]);
        let path = self.dir.join(format!("{key}.json"));
        if let Some(entry) = fs::read_to_string(&path)
            .ok()
            .and_then(|s| serde_json::from_str::<Entry>(&s).ok())
        {
            self.uses.push(CacheUse {
                key,
                computed_at: entry.computed_at,
                hit: true,
            });
            return Ok(entry.point);
        }
        let point = externality::simulate_point(scenario, n, caps, sim, exec)?;
        let entry = Entry {
            computed_at: unix_now(),
            point,
        };
        write_atomic(&path, &serde_json::to_string(&entry).expect("entries serialize"))?;
        self.uses.push(CacheUse {
            key,
            computed_at: entry.computed_at,
            hit: false,
        });
        Ok(point)
    }
}
