//! Ordering dates: context-scoped counters that stand in for timestamps
//! whose only job is chronological ordering.
//!
//! A context is identified by the SHA-256 digest of a caller-chosen label.
//! Only the digest is persisted, so the label (which may name a user) never
//! reaches the store. Per-user labels keep counters of different users
//! incomparable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::Digest256;
use crate::store::{Store, StoreDocument};

/// Digest of an ordering-context label.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextKey(Digest256);

impl ContextKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn context_key(label: &str) -> Result<ContextKey> {
    if label.is_empty() {
        return Err(Error::EmptyLabel);
    }
    Ok(ContextKey(Digest256::of(label.as_bytes())))
}

/// Persisted counter state. `counter` is the last issued count, 0 before
/// the first issue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingContext {
    pub key: ContextKey,
    pub counter: u64,
}

/// A count issued by an ordering context; always at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderValue(u64);

impl OrderValue {
    pub fn get(&self) -> u64 {
        self.0
    }
}

/// Largest counter the persisted 4-byte column can hold.
pub const MAX_COUNTER: u64 = u32::MAX as u64;

/// Issues the next count for `label` and persists it before returning.
pub fn next_count(store: &mut Store, label: &str) -> Result<OrderValue> {
    let key = context_key(label)?;
    store.transact(|doc, _| issue(doc, key).map(OrderValue))
}

/// Last count issued under `label`, 0 if the context does not exist.
pub fn current_count(doc: &StoreDocument, label: &str) -> Result<u64> {
    let key = context_key(label)?;
    Ok(doc.contexts.get(&key).map_or(0, |c| c.counter))
}

pub(crate) fn issue(doc: &mut StoreDocument, key: ContextKey) -> Result<u64> {
    let ctx = doc
        .contexts
        .entry(key)
        .or_insert(OrderingContext { key, counter: 0 });
    if ctx.counter >= MAX_COUNTER {
        return Err(Error::OrderingOverflow(key.to_string()));
    }
    ctx.counter += 1;
    Ok(ctx.counter)
}
