//! Vanishing dates: values whose precision is reduced step by step as they
//! age.
//!
//! A [`VanishingPolicy`] lists `(precision, offset)` steps. The first step is
//! applied at creation. Each later step becomes due `offset` after the value
//! produced by the previous step, so due dates never reveal more than the
//! already reduced value. Pending reductions live in a queue of
//! [`ReductionEvent`]s, at most one per item, drained by [`reduce_due`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Error, PolicyError, Result};
use crate::hybrid;
use crate::ids::{derived_id, Digest256};
use crate::precision::{truncate, Duration, PrecisionSpec, Timestamp};
use crate::record::{FieldDef, FieldValue};
use crate::store::{Store, StoreDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VanishingStep {
    pub precision: PrecisionSpec,
    /// Distance from the value produced by the previous step.
    pub offset: Duration,
}

impl VanishingStep {
    pub fn new(precision: PrecisionSpec, offset: Duration) -> Self {
        VanishingStep { precision, offset }
    }

    /// The step applied at creation.
    pub fn initial(precision: PrecisionSpec) -> Self {
        VanishingStep {
            precision,
            offset: Duration::ZERO,
        }
    }
}

/// Content hash of a policy's canonical step list.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyId(Digest256);

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse()
            .map(PolicyId)
            .map_err(|_| Error::UnknownPolicy(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingPolicy {
    id: PolicyId,
    steps: Vec<VanishingStep>,
}

impl VanishingPolicy {
    /// Validates and canonicalizes a step list.
    ///
    /// Precisions must get strictly coarser, offsets after the first step
    /// must strictly increase, and no step may span more than the offset of
    /// the step after it (otherwise the next reduction would fire before the
    /// current precision had a chance to apply).
    pub fn new(steps: Vec<VanishingStep>) -> Result<Self, PolicyError> {
        let first = steps.first().ok_or(PolicyError::Empty)?;
        if first.offset != Duration::ZERO {
            return Err(PolicyError::NonZeroInitialOffset(first.offset.as_secs()));
        }
        for (index, pair) in steps.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.precision.nominal_duration() <= prev.precision.nominal_duration() {
                return Err(PolicyError::NonMonotonicPrecision {
                    index: index + 1,
                    precision: next.precision.to_string(),
                });
            }
        }
        for (index, pair) in steps.windows(2).enumerate().skip(1) {
            if pair[1].offset <= pair[0].offset {
                return Err(PolicyError::NonMonotonicOffset {
                    index: index + 1,
                    offset: pair[1].offset.as_secs(),
                });
            }
        }
        for (index, pair) in steps.windows(2).enumerate() {
            let span = pair[0].precision.nominal_duration();
            if span > pair[1].offset {
                return Err(PolicyError::StepExceedsNextOffset {
                    index,
                    span: span.as_secs(),
                    next_offset: pair[1].offset.as_secs(),
                });
            }
        }
        let id = PolicyId(Digest256::of(canonical_form(&steps).as_bytes()));
        Ok(VanishingPolicy { id, steps })
    }

    pub fn id(&self) -> PolicyId {
        self.id
    }

    pub fn steps(&self) -> &[VanishingStep] {
        &self.steps
    }

    /// Precision of the last step.
    pub fn end_precision(&self) -> PrecisionSpec {
        self.steps[self.steps.len() - 1].precision
    }

    /// Re-derives the id from the steps; false for a tampered document.
    pub(crate) fn is_consistent(&self) -> bool {
        VanishingPolicy::new(self.steps.clone()).is_ok_and(|p| p.id == self.id)
    }
}

/// One `<count><unit>:<offset seconds>` entry per step. Precisions are
/// already normalized and offsets are plain seconds, so equivalent spellings
/// hash alike.
fn canonical_form(steps: &[VanishingStep]) -> String {
    let mut out = String::from("vanishing-policy/1\n");
    for step in steps {
        out.push_str(&format!("{}:{}\n", step.precision, step.offset.as_secs()));
    }
    out
}

/// Validates `steps` and registers the policy, reusing an identical one if
/// the store already holds it.
pub fn make_policy(store: &mut Store, steps: Vec<VanishingStep>) -> Result<VanishingPolicy> {
    let policy = VanishingPolicy::new(steps)?;
    if let Some(existing) = store.document().policies.get(&policy.id) {
        return Ok(existing.clone());
    }
    store.transact(|doc, _| {
        doc.policies.insert(policy.id, policy.clone());
        Ok(policy)
    })
}

/// Back-reference from an item to the record field holding it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OwnerRef {
    pub record: Uuid,
    pub field: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingItem {
    pub id: Uuid,
    pub value: Timestamp,
    pub policy: PolicyId,
    /// Index of the last applied step.
    pub step_index: usize,
    pub owner: OwnerRef,
    /// Sub-second part carries an ordering counter that reductions keep.
    pub ordered: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionEvent {
    pub id: Uuid,
    pub item: Uuid,
    pub due: Timestamp,
    /// The step this event applies.
    pub step_index: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReductionReport {
    pub applied: usize,
    pub pending: usize,
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let noun = if self.applied == 1 { "reduction" } else { "reductions" };
        write!(f, "{} {noun} applied, {} pending", self.applied, self.pending)
    }
}

/// Creates a vanishing item for a record field declared as vanishing and
/// queues its second step, if any.
pub fn create_vanishing(
    store: &mut Store,
    policy: PolicyId,
    now: Timestamp,
    owner: OwnerRef,
) -> Result<VanishingItem> {
    store.transact(|doc, ids| {
        check_vanishing_slot(doc, &owner, policy, false)?;
        let steps = doc.policy(policy)?.steps();
        let value = truncate(now, steps[0].precision);
        let item_id = ids.next_id();
        create_item_in(doc, item_id, policy, value, owner, false)
    })
}

/// Makes sure `owner` names an empty vanishing (or ordered vanishing) field
/// bound to `policy`.
pub(crate) fn check_vanishing_slot(
    doc: &StoreDocument,
    owner: &OwnerRef,
    policy: PolicyId,
    ordered: bool,
) -> Result<()> {
    let record = doc
        .records
        .get(&owner.record)
        .ok_or(Error::UnknownOwner(owner.record))?;
    let def = doc.field_def(&record.model, &owner.field)?;
    let declared = match (def, ordered) {
        (FieldDef::Vanishing { policy }, false) => Some(*policy),
        (FieldDef::Hybrid(h), true) => h.vanishing_policy(),
        _ => None,
    };
    if declared != Some(policy) {
        return Err(Error::FieldKindMismatch {
            model: record.model.clone(),
            field: owner.field.clone(),
            found: def.kind_name(),
            expected: if ordered { "ordered vanishing" } else { "vanishing" },
        });
    }
    if let Some(FieldValue::Item(Some(_))) = record.fields.get(&owner.field) {
        return Err(Error::FieldOccupied {
            record: owner.record,
            model: record.model.clone(),
            field: owner.field.clone(),
        });
    }
    Ok(())
}

/// Inserts an item whose first step has already been applied to `value`,
/// links it into its owner and queues the next step.
pub(crate) fn create_item_in(
    doc: &mut StoreDocument,
    item_id: Uuid,
    policy: PolicyId,
    value: Timestamp,
    owner: OwnerRef,
    ordered: bool,
) -> Result<VanishingItem> {
    let item = VanishingItem {
        id: item_id,
        value,
        policy,
        step_index: 0,
        owner: owner.clone(),
        ordered,
    };
    let event = next_event(doc.policy(policy)?, &item)?;
    doc.records
        .get_mut(&owner.record)
        .ok_or(Error::UnknownOwner(owner.record))?
        .fields
        .insert(owner.field, FieldValue::Item(Some(item_id)));
    doc.items.insert(item_id, item.clone());
    if let Some(event) = event {
        doc.events.insert(event.id, event);
    }
    Ok(item)
}

/// The event for the step after `item.step_index`, due one offset after the
/// item's current (already reduced) value.
pub(crate) fn next_event(
    policy: &VanishingPolicy,
    item: &VanishingItem,
) -> Result<Option<ReductionEvent>> {
    let step_index = item.step_index + 1;
    let Some(step) = policy.steps().get(step_index) else {
        return Ok(None);
    };
    let due = item.value.checked_add(step.offset).ok_or(Error::OutOfRange)?;
    Ok(Some(ReductionEvent {
        id: event_id(item.id, step_index),
        item: item.id,
        due,
        step_index,
    }))
}

/// Event ids derive from the item id, so reducing is a pure function of the
/// document and `now`.
fn event_id(item: Uuid, step_index: usize) -> Uuid {
    derived_id(item, format!("event/{step_index}").as_bytes())
}

/// Applies one reduction step to a value, keeping an ordering counter in the
/// sub-second part when `ordered` is set.
pub(crate) fn reduce_value(value: Timestamp, precision: PrecisionSpec, ordered: bool) -> Timestamp {
    if ordered {
        hybrid::hybrid_reduce(hybrid::HybridValue::from_timestamp(value), precision).value()
    } else {
        truncate(value, precision)
    }
}

/// Applies every reduction that is due at `now`, including reductions that
/// become due as a consequence of earlier ones in the same pass. Events are
/// processed in `(due, item id)` order.
pub fn reduce_due(store: &mut Store, now: Timestamp) -> Result<ReductionReport> {
    store.transact(|doc, _| reduce_due_in(doc, now))
}

pub(crate) fn reduce_due_in(doc: &mut StoreDocument, now: Timestamp) -> Result<ReductionReport> {
    let mut queue: BinaryHeap<Reverse<(Timestamp, Uuid, Uuid)>> = doc
        .events
        .values()
        .filter(|e| e.due <= now)
        .map(|e| Reverse((e.due, e.item, e.id)))
        .collect();
    let mut applied = 0;
    while let Some(Reverse((_, item_id, event_id))) = queue.pop() {
        let event = doc.events.remove(&event_id).expect("queued event exists");
        let item = doc.items.get_mut(&event.item).ok_or(Error::CorruptQueue {
            event: event.id,
            item: event.item,
        })?;
        let policy = doc
            .policies
            .get(&item.policy)
            .ok_or_else(|| Error::UnknownPolicy(item.policy.to_string()))?;
        let step = policy
            .steps()
            .get(event.step_index)
            .filter(|_| event.step_index == item.step_index + 1)
            .ok_or_else(|| {
                Error::CorruptStore(format!(
                    "event {} applies step {} to item {item_id} at step {}",
                    event.id, event.step_index, item.step_index
                ))
            })?;
        item.value = reduce_value(item.value, step.precision, item.ordered);
        item.step_index = event.step_index;
        applied += 1;
        if let Some(next) = next_event(policy, item)? {
            if next.due <= now {
                queue.push(Reverse((next.due, next.item, next.id)));
            }
            doc.events.insert(next.id, next);
        }
    }
    Ok(ReductionReport {
        applied,
        pending: doc.events.len(),
    })
}

/// Deletes a record together with its vanishing items and their events.
pub fn delete_owner(store: &mut Store, record: Uuid) -> Result<()> {
    store.transact(|doc, _| {
        let removed = doc.records.remove(&record).ok_or(Error::UnknownOwner(record))?;
        for value in removed.fields.values() {
            if let FieldValue::Item(Some(item)) = value {
                remove_item_in(doc, *item);
            }
        }
        Ok(())
    })
}

/// Deletes an item and its events, and clears the owning field.
pub fn delete_item(store: &mut Store, item: Uuid) -> Result<()> {
    store.transact(|doc, _| {
        let owner = doc
            .items
            .get(&item)
            .map(|i| i.owner.clone())
            .ok_or(Error::UnknownItem(item))?;
        remove_item_in(doc, item);
        if let Some(record) = doc.records.get_mut(&owner.record) {
            record.fields.insert(owner.field, FieldValue::Item(None));
        }
        Ok(())
    })
}

fn remove_item_in(doc: &mut StoreDocument, item: Uuid) {
    doc.items.remove(&item);
    doc.events.retain(|_, e| e.item != item);
}
