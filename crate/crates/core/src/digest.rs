use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `data`.
pub fn sha256_hex(data: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(data.as_ref()))
}

/// First 16 hex characters of the SHA-256; used for ids and file names.
pub fn short_digest(data: impl AsRef<[u8]>) -> String {
    let mut full = sha256_hex(data);
    full.truncate(16);
    full
}
