//! Identifier sources and the 256-bit digest used for context keys and
//! policy ids.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use uuid::{Builder, Uuid};

/// Name recorded in store metadata for the digest below.
pub const HASH_ALGORITHM: &str = "sha256";

/// A SHA-256 digest, hex-encoded (lowercase, 64 characters) in text form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest256([u8; 32]);

impl Digest256 {
    pub fn of(bytes: &[u8]) -> Self {
        let mut out = [0u8; 32];
        out.copy_from_slice(&Sha256::digest(bytes));
        Digest256(out)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Digest256 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(format!("expected 64 lowercase hex digits, got {s:?}"));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| e.to_string())?;
        Ok(Digest256(out))
    }
}

impl Serialize for Digest256 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Digest256 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Supplies version-4 UUIDs for records and vanishing items.
pub trait IdSource: Send {
    fn next_id(&mut self) -> Uuid;
}

/// Operating-system randomness. The default for real stores.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomIds;

impl IdSource for RandomIds {
    fn next_id(&mut self) -> Uuid {
        Uuid::new_v4()
    }
}

/// Reproducible version-4 UUIDs from a seeded ChaCha20 stream, for replays
/// and tests. Anyone holding the seed can reconstruct the id sequence, so a
/// seed must never be stored next to the data.
#[derive(Debug, Clone)]
pub struct SeededIds(ChaCha20Rng);

impl SeededIds {
    pub fn new(seed: u64) -> Self {
        SeededIds(ChaCha20Rng::seed_from_u64(seed))
    }
}

impl IdSource for SeededIds {
    fn next_id(&mut self) -> Uuid {
        let mut bytes = [0u8; 16];
        self.0.fill_bytes(&mut bytes);
        Builder::from_random_bytes(bytes).into_uuid()
    }
}

/// A version-4 UUID derived from a parent id and a discriminator. It is as
/// unpredictable as the parent and carries no ordering information of its own.
pub(crate) fn derived_id(parent: Uuid, tag: &[u8]) -> Uuid {
    let mut input = Vec::with_capacity(16 + tag.len());
    input.extend_from_slice(parent.as_bytes());
    input.extend_from_slice(tag);
    let digest = Digest256::of(&input);
    let mut bytes = [0u8; 16];
    bytes.copy_from_slice(&digest.as_bytes()[..16]);
    Builder::from_random_bytes(bytes).into_uuid()
}
