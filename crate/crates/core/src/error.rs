use std::path::PathBuf;

use thiserror::Error;
use uuid::Uuid;

use crate::precision::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Violations of the reduction-policy invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("empty-policy: a policy needs at least one step")]
    Empty,
    #[error("nonzero-initial-offset: the first step is applied at creation and must have offset 0, got {0} s")]
    NonZeroInitialOffset(u64),
    #[error("non-monotonic-precision: step {index} ({precision}) is not coarser than the step before it")]
    NonMonotonicPrecision { index: usize, precision: String },
    #[error("non-monotonic-offset: offset of step {index} ({offset} s) does not exceed the previous offset")]
    NonMonotonicOffset { index: usize, offset: u64 },
    #[error("step-exceeds-next-offset: step {index} spans {span} s but the next step is due after {next_offset} s")]
    StepExceedsNextOffset {
        index: usize,
        span: u64,
        next_offset: u64,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid-count: {count} is not a valid {unit} precision count")]
    InvalidCount { unit: Unit, count: u32 },
    #[error("invalid-precision: {0:?}")]
    ParsePrecision(String),
    #[error("invalid-timestamp: {0:?}")]
    ParseTimestamp(String),
    #[error("timestamp out of range")]
    OutOfRange,
    #[error("empty-label: an ordering context needs a non-empty label")]
    EmptyLabel,
    #[error("counter-overflow: ordering context {0} exceeds the 32-bit counter range")]
    OrderingOverflow(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("counter-overflow: bucket {bucket} already holds 1000000 values")]
    CounterOverflow { bucket: String },
    #[error("out-of-order-insertion: bucket {bucket} precedes the last seen bucket {last}")]
    OutOfOrderInsertion { bucket: String, last: String },
    #[error("corrupt-queue: event {event} references missing item {item}")]
    CorruptQueue { event: Uuid, item: Uuid },
    #[error("unknown-owner: no record {0}")]
    UnknownOwner(Uuid),
    #[error("unknown-item: no vanishing item {0}")]
    UnknownItem(Uuid),
    #[error("unknown-policy: no policy {0}")]
    UnknownPolicy(String),
    #[error("unknown-model: {0:?} is not declared")]
    UnknownModel(String),
    #[error("unknown-field: model {model:?} has no field {field:?}")]
    UnknownField { model: String, field: String },
    #[error("field-kind-mismatch: {model}.{field} is a {found} field, expected {expected}")]
    FieldKindMismatch {
        model: String,
        field: String,
        found: &'static str,
        expected: &'static str,
    },
    #[error("field-occupied: {model}.{field} of record {record} already references an item")]
    FieldOccupied {
        record: Uuid,
        model: String,
        field: String,
    },
    #[error("missing-value: manual field {0:?} needs a value")]
    MissingValue(String),
    #[error("missing-label: ordering field {0:?} needs a context label")]
    MissingLabel(String),
    #[error("duplicate-model: {0:?} is already declared")]
    DuplicateModel(String),
    #[error("store-not-empty: demo data needs an empty store")]
    StoreNotEmpty,
    #[error("corrupt-store: {0}")]
    CorruptStore(String),
    #[error("version-mismatch: store format {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("store-locked: {} is held by another writer", .0.display())]
    StoreLocked(PathBuf),
    #[error("read-only: store snapshot cannot be modified")]
    ReadOnly,
    #[error("store-io: {0}")]
    Io(#[from] std::io::Error),
    #[error("store-io: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("empty-mix: a cost scenario needs at least one field")]
    EmptyMix,
    #[error("unknown-kind: {0:?}")]
    UnknownKind(String),
}

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Store,
    Validation,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::CorruptQueue { .. }
            | Error::CorruptStore(_)
            | Error::VersionMismatch { .. }
            | Error::StoreLocked(_)
            | Error::ReadOnly
            | Error::Io(_)
            | Error::Serialize(_) => ErrorClass::Store,
            _ => ErrorClass::Validation,
        }
    }
}
