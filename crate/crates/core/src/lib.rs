//! Privacy-preserving replacements for timestamps.
//!
//! * [`rough`]: dates truncated to a fixed precision when saved.
//! * [`ordering`]: per-context counters for timestamps that only order things.
//! * [`vanishing`]: dates whose precision is reduced step by step over time.
//! * [`hybrid`]: rough and vanishing dates that keep their insertion order.
//!
//! All state lives in a [`Store`]; time is always passed in, never read from
//! a clock.

pub mod costmodel;
pub mod demo;
pub mod error;
pub mod hybrid;
pub mod ids;
pub mod ordering;
pub mod precision;
pub mod record;
pub mod rough;
pub mod store;
pub mod vanishing;

pub use error::{Error, ErrorClass, PolicyError, Result};
pub use hybrid::{assign_hybrid, hybrid_reduce, HybridFieldDef, HybridValue};
pub use ids::{IdSource, RandomIds, SeededIds};
pub use ordering::{context_key, next_count, ContextKey, OrderValue};
pub use precision::{truncate, Duration, PrecisionSpec, Timestamp, Unit};
pub use record::{declare_model, insert_record, FieldDef, ModelSchema, NewRecord};
pub use rough::{rough_capture, CaptureMode, RoughFieldDef, RoughValue};
pub use store::{Store, StoreDocument};
pub use vanishing::{
    create_vanishing, delete_item, delete_owner, make_policy, reduce_due, OwnerRef, PolicyId,
    ReductionReport, VanishingPolicy, VanishingStep,
};
