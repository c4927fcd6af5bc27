//! On-disk cache of kernel series, keyed by domain, weight and build options.
//!
//! Writers take `<key>.lock` with an exclusive create, write to a temporary
//! file and rename it into place, so readers never see partial artifacts.

use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use bergdecomp::bergman::{build_kernel, KernelOptions, KernelSeries};
use bergdecomp::domains::{ReinhardtDomain, WeightSpec};

use crate::error::{CliError, CliResult};

const FORMAT: u32 = 1;
const LOCK_WAIT: Duration = Duration::from_secs(120);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Built,
    Cached,
}

#[derive(Clone, Debug, Default)]
pub struct KernelCache {
    dir: Option<PathBuf>,
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl KernelCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn key(d: &ReinhardtDomain, w: &WeightSpec, opts: &KernelOptions) -> String {
        let canonical = serde_json::to_string(&(FORMAT, d, w, opts)).expect("kernel inputs serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn get(&self, d: &ReinhardtDomain, w: &WeightSpec, opts: &KernelOptions) -> CliResult<(KernelSeries, Source)> {
        let Some(dir) = &self.dir else {
            return Ok((build_kernel(d, w, opts)?, Source::Built));
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let key = Self::key(d, w, opts);
        let path = dir.join(format!("{key}.json"));
        if let Some(k) = read(&path) {
            return Ok((k, Source::Cached));
        }
        let _guard = acquire(&dir.join(format!("{key}.lock")))?;
        // Another process may have finished while we waited.
        if let Some(k) = read(&path) {
            return Ok((k, Source::Cached));
        }
        let k = build_kernel(d, w, opts)?;
        let tmp = dir.join(format!("{key}.json.tmp"));
        let text = serde_json::to_string(&k).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&tmp, text).map_err(|e| io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io(&path, e))?;
        Ok((k, Source::Built))
    }
}

fn read(path: &Path) -> Option<KernelSeries> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn acquire(lock: &Path) -> CliResult<LockGuard> {
    let start = Instant::now();
    loop {
        match OpenOptions::new().write(true).create_new(true).open(lock) {
            Ok(_) => return Ok(LockGuard(lock.to_path_buf())),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                if start.elapsed() > LOCK_WAIT {
                    return Err(CliError::Io(format!("{}: lock held for over {}s; remove it if stale", lock.display(), LOCK_WAIT.as_secs())));
                }
                std::thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(io(lock, e)),
        }
    }
}
