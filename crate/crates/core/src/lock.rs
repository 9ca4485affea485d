//! Advisory lock that keeps `run`, `resume` and `serve` from sharing a
//! graph file. The lock is a file named [`LOCK_FILE`] in the directory that
//! holds the graph, created exclusively and holding the owner's pid. A lock
//! whose pid is no longer alive is taken over.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const LOCK_FILE: &str = ".np-alarm.lock";

#[derive(Debug, thiserror::Error)]
pub enum LockError {
    #[error("{path} is locked by process {pid}")]
    Held { path: PathBuf, pid: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, LockError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id())?;
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let pid = std::fs::read_to_string(&path).unwrap_or_default().trim().to_string();
                    if is_alive(&pid) {
                        return Err(LockError::Held { path, pid });
                    }
                    tracing::warn!(path = %path.display(), pid, "removing stale lock");
                    std::fs::remove_file(&path)?;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let pid = std::fs::read_to_string(&path).unwrap_or_default().trim().to_string();
        Err(LockError::Held { path, pid })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn is_alive(pid: &str) -> bool {
    let Ok(n) = pid.parse::<u32>() else {
        // Unreadable lock: assume held.
        return true;
    };
    if n == std::process::id() {
        return true;
    }
    let proc = Path::new("/proc");
    if proc.is_dir() {
        proc.join(n.to_string()).exists()
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_acquire_fails_until_release() {
        let tmp = tempfile::TempDir::new().unwrap();
        let a = DirLock::acquire(tmp.path()).unwrap();
        assert!(matches!(DirLock::acquire(tmp.path()), Err(LockError::Held { .. })));
        drop(a);
        assert!(!tmp.path().join(LOCK_FILE).exists());
        DirLock::acquire(tmp.path()).unwrap();
    }

    #[test]
    fn dead_owner_is_taken_over() {
        let tmp = tempfile::TempDir::new().unwrap();
        std::fs::write(tmp.path().join(LOCK_FILE), "4294967\n").unwrap();
        let lock = DirLock::acquire(tmp.path()).unwrap();
        let pid = std::fs::read_to_string(lock.path()).unwrap();
        assert_eq!(pid.trim(), std::process::id().to_string());
    }
}
