//! Order-preserving rough and vanishing dates.
//!
//! Values reduced to the same grid point lose their relative order. The
//! hybrid variants keep it by writing a counter into the microsecond part,
//! which every allowed precision zeroes anyway. The counter is scoped to the
//! bucket of the field's end precision (the rough precision, or the last
//! policy step) and starts at 0 in every new bucket, so later reductions can
//! never merge two values that share a counter.
//!
//! Values must be assigned in chronological order. An assignment whose bucket
//! precedes the latest bucket seen for the field is rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::{self, context_key, ContextKey};
use crate::precision::{truncate, PrecisionSpec, Timestamp};
use crate::rough::RoughFieldDef;
use crate::store::{Store, StoreDocument};
use crate::vanishing::PolicyId;

/// Number of distinct counter values per bucket.
pub const COUNTER_CAPACITY: u32 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridBase {
    Rough(RoughFieldDef),
    Vanishing { policy: PolicyId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridFieldDef {
    pub base: HybridBase,
}

impl HybridFieldDef {
    pub fn rough(def: RoughFieldDef) -> Self {
        HybridFieldDef {
            base: HybridBase::Rough(def),
        }
    }

    pub fn vanishing(policy: PolicyId) -> Self {
        HybridFieldDef {
            base: HybridBase::Vanishing { policy },
        }
    }

    pub fn vanishing_policy(&self) -> Option<PolicyId> {
        match self.base {
            HybridBase::Vanishing { policy } => Some(policy),
            HybridBase::Rough(_) => None,
        }
    }

    /// `(precision applied at assignment, end precision)`.
    pub fn precisions(&self, doc: &StoreDocument) -> Result<(PrecisionSpec, PrecisionSpec)> {
        match self.base {
            HybridBase::Rough(def) => Ok((def.spec, def.spec)),
            HybridBase::Vanishing { policy } => {
                let policy = doc.policy(policy)?;
                Ok((policy.steps()[0].precision, policy.end_precision()))
            }
        }
    }
}

/// A timestamp whose microseconds hold an ordering counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HybridValue(Timestamp);

impl HybridValue {
    pub fn from_timestamp(value: Timestamp) -> Self {
        HybridValue(value)
    }

    pub fn value(&self) -> Timestamp {
        self.0
    }

    pub fn counter(&self) -> u32 {
        self.0.subsec_micros()
    }

    /// The date with the counter zeroed.
    pub fn date_part(&self) -> Timestamp {
        self.0.with_subsec_micros(0).expect("zero is in range")
    }
}

/// Truncates the date part to `p`, keeping the counter bit-exactly.
pub fn hybrid_reduce(value: HybridValue, p: PrecisionSpec) -> HybridValue {
    let reduced = truncate(value.0, p)
        .with_subsec_micros(value.counter())
        .expect("counter below one second");
    HybridValue(reduced)
}

/// Latest end-precision bucket seen for a hybrid field and the context
/// holding its counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketHead {
    pub bucket: Timestamp,
    pub context: ContextKey,
}

/// Assigns the next value of the hybrid field identified by `label`.
pub fn assign_hybrid(
    store: &mut Store,
    label: &str,
    field: &HybridFieldDef,
    now: Timestamp,
) -> Result<HybridValue> {
    store.transact(|doc, _| assign_in(doc, label, field, now))
}

pub(crate) fn assign_in(
    doc: &mut StoreDocument,
    label: &str,
    field: &HybridFieldDef,
    now: Timestamp,
) -> Result<HybridValue> {
    let (first, end) = field.precisions(doc)?;
    let bucket = truncate(now, end);
    let field_key = context_key(label)?;
    let bucket_key = context_key(&format!("{label}@{bucket}"))?;

    match doc.hybrid_heads.get(&field_key) {
        Some(head) if bucket < head.bucket => {
            return Err(Error::OutOfOrderInsertion {
                bucket: bucket.to_string(),
                last: head.bucket.to_string(),
            })
        }
        Some(head) if bucket > head.bucket => {
            // Only the newest bucket can still grow.
            let stale = head.context;
            doc.contexts.remove(&stale);
        }
        _ => {}
    }
    doc.hybrid_heads.insert(
        field_key,
        BucketHead {
            bucket,
            context: bucket_key,
        },
    );

    let counter = ordering::issue(doc, bucket_key)? - 1;
    if counter >= u64::from(COUNTER_CAPACITY) {
        return Err(Error::CounterOverflow {
            bucket: bucket.to_string(),
        });
    }
    let value = truncate(now, first)
        .with_subsec_micros(counter as u32)
        .expect("counter below capacity");
    Ok(HybridValue(value))
}
