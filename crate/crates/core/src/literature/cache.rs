use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::transport::{Request, Transport, TransportError};
use crate::digest::sha256_hex;

const CACHE_FORMAT: &str = "np-alarm-cache/1";

/// Parameters that identify the caller rather than the content.
const VOLATILE_PARAMS: &[&str] = &["api_key", "email", "tool"];

/// Sidecar stored next to each cached body.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CacheMeta {
    pub format: String,
    pub url: String,
    pub params: Vec<(String, String)>,
    pub retrieved_at: DateTime<Utc>,
    pub body_sha256: String,
}

/// Persists every successful response under a digest of the request.
///
/// Layout: `<dir>/<digest>.body` holds the raw response and
/// `<dir>/<digest>.meta.json` the [`CacheMeta`] sidecar. Entries whose body no
/// longer matches the recorded digest are treated as corrupt and refetched.
pub struct CachedTransport {
    inner: Arc<dyn Transport>,
    dir: PathBuf,
}

impl CachedTransport {
    pub fn new(inner: Arc<dyn Transport>, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { inner, dir })
    }

    pub fn request_digest(request: &Request) -> String {
        let mut params: Vec<&(String, String)> = request
            .params
            .iter()
            .filter(|(k, _)| !VOLATILE_PARAMS.contains(&k.as_str()))
            .collect();
        params.sort();
        let mut material = request.url.clone();
        for (k, v) in params {
            material.push('\n');
            material.push_str(k);
            material.push('=');
            material.push_str(v);
        }
        sha256_hex(material)
    }

    fn paths(&self, digest: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.join(format!("{digest}.body")),
            self.dir.join(format!("{digest}.meta.json")),
        )
    }

    /// `Ok(None)` is a miss; `Err` carries the reason an entry is corrupt.
    fn read_entry(&self, digest: &str) -> Result<Option<String>, String> {
        let (body_path, meta_path) = self.paths(digest);
        if !body_path.exists() && !meta_path.exists() {
            return Ok(None);
        }
        let meta_raw = fs::read_to_string(&meta_path).map_err(|e| format!("sidecar: {e}"))?;
        let meta: CacheMeta =
            serde_json::from_str(&meta_raw).map_err(|e| format!("sidecar: {e}"))?;
        if meta.format != CACHE_FORMAT {
            return Err(format!("unknown cache format {:?}", meta.format));
        }
        let body = fs::read_to_string(&body_path).map_err(|e| format!("body: {e}"))?;
        if sha256_hex(&body) != meta.body_sha256 {
            return Err("body digest mismatch".into());
        }
        Ok(Some(body))
    }

    fn write_entry(&self, digest: &str, request: &Request, body: &str) -> std::io::Result<()> {
        let (body_path, meta_path) = self.paths(digest);
        let meta = CacheMeta {
            format: CACHE_FORMAT.to_string(),
            url: request.url.clone(),
            params: request
                .params
                .iter()
                .filter(|(k, _)| !VOLATILE_PARAMS.contains(&k.as_str()))
                .cloned()
                .collect(),
            retrieved_at: Utc::now(),
            body_sha256: sha256_hex(body),
        };
        atomic_write(&body_path, body.as_bytes())?;
        atomic_write(&meta_path, serde_json::to_string_pretty(&meta)?.as_bytes())
    }

    pub fn meta(&self, request: &Request) -> Option<CacheMeta> {
        let (_, meta_path) = self.paths(&Self::request_digest(request));
        let raw = fs::read_to_string(meta_path).ok()?;
        serde_json::from_str(&raw).ok()
    }
}

pub(crate) fn atomic_write(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

impl Transport for CachedTransport {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        let digest = Self::request_digest(request);
        match self.read_entry(&digest) {
            Ok(Some(body)) => return Ok(body),
            Ok(None) => {}
            Err(reason) => warn!(%digest, %reason, "corrupt cache entry, refetching"),
        }
        let body = self.inner.get(request)?;
        if let Err(e) = self.write_entry(&digest, request, &body) {
            warn!(%digest, error = %e, "could not write cache entry");
        }
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::super::transport::Counting;
    use super::*;

    fn echo() -> Arc<Counting<impl Fn(&Request) -> Result<String, TransportError> + Send + Sync>> {
        Arc::new(Counting::new(|r: &Request| {
            Ok(format!("body for {}", r.get_param("term").unwrap_or("")))
        }))
    }

    #[test]
    fn second_identical_request_is_served_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let upstream = echo();
        let cache = CachedTransport::new(upstream.clone(), dir.path()).unwrap();
        let req = Request::new("http://x/esearch.fcgi").param("term", "a");
        assert_eq!(cache.get(&req).unwrap(), "body for a");
        assert_eq!(cache.get(&req).unwrap(), "body for a");
        assert_eq!(upstream.calls(), 1);
        assert!(cache.meta(&req).is_some());
    }

    #[test]
    fn api_key_does_not_change_digest() {
        let a = Request::new("u").param("term", "x").param("api_key", "1");
        let b = Request::new("u").param("api_key", "2").param("term", "x");
        assert_eq!(
            CachedTransport::request_digest(&a),
            CachedTransport::request_digest(&b)
        );
    }

    #[test]
    fn corrupt_entry_is_refetched_and_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let upstream = echo();
        let cache = CachedTransport::new(upstream.clone(), dir.path()).unwrap();
        let req = Request::new("http://x").param("term", "b");
        cache.get(&req).unwrap();
        let digest = CachedTransport::request_digest(&req);
        fs::write(dir.path().join(format!("{digest}.body")), "garbage").unwrap();
        assert_eq!(cache.get(&req).unwrap(), "body for b");
        assert_eq!(upstream.calls(), 2);
        // Rewritten entry is valid again.
        assert_eq!(cache.get(&req).unwrap(), "body for b");
        assert_eq!(upstream.calls(), 2);
    }

    #[test]
    fn failed_requests_are_not_cached() {
        let dir = tempfile::tempdir().unwrap();
        let failing = Arc::new(Counting::new(|_: &Request| -> Result<String, TransportError> {
            Err(TransportError::Network("down".into()))
        }));
        let cache = CachedTransport::new(failing.clone(), dir.path()).unwrap();
        let req = Request::new("http://x");
        assert!(cache.get(&req).is_err());
        assert!(cache.get(&req).is_err());
        assert_eq!(failing.calls(), 2);
    }
}
