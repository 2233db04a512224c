//! Model schemas and records.
//!
//! Every model is declared in the store with the kind of each date field, so
//! creation hooks and cascading deletes know which fields hold vanishing
//! items without any reflection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Error, Result};
use crate::hybrid::{self, HybridBase, HybridFieldDef};
use crate::ordering::{self, context_key};
use crate::precision::Timestamp;
use crate::rough::{rough_capture, CaptureMode, RoughFieldDef};
use crate::store::{Store, StoreDocument};
use crate::vanishing::{self, OwnerRef, PolicyId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldDef {
    /// An ordinary full-precision timestamp.
    Plain,
    Rough(RoughFieldDef),
    /// `label` is the default context; records may supply their own.
    Ordering {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Vanishing { policy: PolicyId },
    Hybrid(HybridFieldDef),
}

impl FieldDef {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FieldDef::Plain => "plain",
            FieldDef::Rough(_) => "rough",
            FieldDef::Ordering { .. } => "ordering",
            FieldDef::Vanishing { .. } => "vanishing",
            FieldDef::Hybrid(h) if h.vanishing_policy().is_some() => "ordered vanishing",
            FieldDef::Hybrid(_) => "ordered rough",
        }
    }

    pub(crate) fn policy(&self) -> Option<PolicyId> {
        match self {
            FieldDef::Vanishing { policy } => Some(*policy),
            FieldDef::Hybrid(h) => h.vanishing_policy(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSchema {
    pub fields: BTreeMap<String, FieldDef>,
}

impl ModelSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, name: impl Into<String>, def: FieldDef) -> Self {
        self.fields.insert(name.into(), def);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldValue {
    Timestamp(Timestamp),
    Count(u64),
    /// Reference to a vanishing item; empty after the item was deleted.
    Item(Option<Uuid>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: Uuid,
    pub model: String,
    pub fields: BTreeMap<String, FieldValue>,
    /// Application data the store does not interpret.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub payload: serde_json::Value,
}

/// Input for [`insert_record`].
#[derive(Clone, Debug, Default)]
pub struct NewRecord {
    pub model: String,
    /// Values for plain, manual rough and hybrid fields. Anything absent
    /// falls back to the insertion time.
    pub values: BTreeMap<String, Timestamp>,
    /// Context labels for ordering fields.
    pub labels: BTreeMap<String, String>,
    pub payload: serde_json::Value,
}

impl NewRecord {
    pub fn new(model: impl Into<String>) -> Self {
        NewRecord {
            model: model.into(),
            ..Default::default()
        }
    }

    pub fn value(mut self, field: impl Into<String>, value: Timestamp) -> Self {
        self.values.insert(field.into(), value);
        self
    }

    pub fn label(mut self, field: impl Into<String>, label: impl Into<String>) -> Self {
        self.labels.insert(field.into(), label.into());
        self
    }

    pub fn payload(mut self, payload: serde_json::Value) -> Self {
        self.payload = payload;
        self
    }
}

/// Registers a model. Re-declaring an identical schema is a no-op.
pub fn declare_model(store: &mut Store, name: &str, schema: ModelSchema) -> Result<()> {
    store.transact(|doc, _| {
        if let Some(existing) = doc.models.get(name) {
            return if *existing == schema {
                Ok(())
            } else {
                Err(Error::DuplicateModel(name.to_string()))
            };
        }
        for def in schema.fields.values() {
            if let Some(policy) = def.policy() {
                doc.policy(policy)?;
            }
        }
        doc.models.insert(name.to_string(), schema);
        Ok(())
    })
}

/// Label scoping the counters of an ordered field.
pub fn hybrid_label(model: &str, field: &str) -> String {
    format!("{model}.{field}")
}

/// Creates a record, filling every declared date field as of `now`.
pub fn insert_record(store: &mut Store, new: NewRecord, now: Timestamp) -> Result<Uuid> {
    store.transact(|doc, ids| {
        let schema = doc
            .models
            .get(&new.model)
            .cloned()
            .ok_or_else(|| Error::UnknownModel(new.model.clone()))?;
        for name in new.values.keys().chain(new.labels.keys()) {
            if !schema.fields.contains_key(name) {
                return Err(Error::UnknownField {
                    model: new.model.clone(),
                    field: name.clone(),
                });
            }
        }
        let record_id = ids.next_id();
        doc.records.insert(
            record_id,
            Record {
                id: record_id,
                model: new.model.clone(),
                fields: BTreeMap::new(),
                payload: new.payload.clone(),
            },
        );
        for (name, def) in &schema.fields {
            let supplied = new.values.get(name).copied();
            let value = match def {
                FieldDef::Plain => FieldValue::Timestamp(supplied.unwrap_or(now)),
                FieldDef::Rough(rough) => {
                    let raw = match (rough.capture, supplied) {
                        (CaptureMode::Manual, Some(v)) => v,
                        (CaptureMode::Manual, None) => return Err(Error::MissingValue(name.clone())),
                        (_, v) => v.unwrap_or(now),
                    };
                    FieldValue::Timestamp(rough_capture(rough, raw).value())
                }
                FieldDef::Ordering { label } => {
                    let label = new
                        .labels
                        .get(name)
                        .or(label.as_ref())
                        .ok_or_else(|| Error::MissingLabel(name.clone()))?;
                    FieldValue::Count(ordering::issue(doc, context_key(label)?)?)
                }
                FieldDef::Vanishing { policy } => {
                    let steps = doc.policy(*policy)?.steps();
                    let value = crate::precision::truncate(supplied.unwrap_or(now), steps[0].precision);
                    let owner = OwnerRef {
                        record: record_id,
                        field: name.clone(),
                    };
                    let item = ids.next_id();
                    vanishing::create_item_in(doc, item, *policy, value, owner, false)?;
                    continue;
                }
                FieldDef::Hybrid(hybrid_def) => {
                    let label = hybrid_label(&new.model, name);
                    let value = hybrid::assign_in(doc, &label, hybrid_def, supplied.unwrap_or(now))?;
                    match hybrid_def.base {
                        HybridBase::Rough(_) => FieldValue::Timestamp(value.value()),
                        HybridBase::Vanishing { policy } => {
                            let owner = OwnerRef {
                                record: record_id,
                                field: name.clone(),
                            };
                            let item = ids.next_id();
                            vanishing::create_item_in(doc, item, policy, value.value(), owner, true)?;
                            continue;
                        }
                    }
                }
            };
            doc.record_mut(record_id)?.fields.insert(name.clone(), value);
        }
        Ok(record_id)
    })
}

/// Saves a record again: rough fields captured on save take `now`.
pub fn save_record(store: &mut Store, id: Uuid, now: Timestamp) -> Result<()> {
    store.transact(|doc, _| {
        let model = doc.record_mut(id)?.model.clone();
        let schema = doc
            .models
            .get(&model)
            .cloned()
            .ok_or(Error::UnknownModel(model))?;
        let record = doc.record_mut(id)?;
        for (name, def) in &schema.fields {
            if let FieldDef::Rough(rough) = def {
                if rough.capture == CaptureMode::OnSave {
                    let value = rough_capture(rough, now).value();
                    record.fields.insert(name.clone(), FieldValue::Timestamp(value));
                }
            }
        }
        Ok(())
    })
}

/// The timestamp currently visible through a record field, resolving
/// vanishing references.
pub fn field_timestamp(doc: &StoreDocument, record: Uuid, field: &str) -> Option<Timestamp> {
    match doc.records.get(&record)?.fields.get(field)? {
        FieldValue::Timestamp(t) => Some(*t),
        FieldValue::Item(Some(item)) => doc.items.get(item).map(|i| i.value),
        FieldValue::Item(None) | FieldValue::Count(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{Duration, PrecisionSpec};
    use crate::vanishing::{make_policy, reduce_due, VanishingStep};

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    fn rough(spec: &str, capture: CaptureMode) -> FieldDef {
        FieldDef::Rough(RoughFieldDef::new(spec.parse().unwrap(), capture))
    }

    #[test]
    fn insert_fills_every_kind() {
        let mut store = Store::in_memory_seeded(1);
        let policy = make_policy(
            &mut store,
            vec![
                VanishingStep::initial(PrecisionSpec::hours(1).unwrap()),
                VanishingStep::new(PrecisionSpec::days(1).unwrap(), Duration::from_hours(3)),
            ],
        )
        .unwrap()
        .id();
        let schema = ModelSchema::new()
            .field("plain", FieldDef::Plain)
            .field("rough", rough("1d", CaptureMode::OnSave))
            .field("manual", rough("1h", CaptureMode::Manual))
            .field("order", FieldDef::Ordering { label: Some("global".into()) })
            .field("vanish", FieldDef::Vanishing { policy })
            .field("hybrid", FieldDef::Hybrid(HybridFieldDef::vanishing(policy)));
        declare_model(&mut store, "Issue", schema.clone()).unwrap();
        declare_model(&mut store, "Issue", schema).unwrap();
        assert!(matches!(
            declare_model(&mut store, "Issue", ModelSchema::new()),
            Err(Error::DuplicateModel(_))
        ));

        let now = ts("2021-11-08T15:17:42.5Z");
        let id = insert_record(
            &mut store,
            NewRecord::new("Issue").value("manual", ts("2021-01-02T03:04:05Z")),
            now,
        )
        .unwrap();
        let doc = store.document();
        let rec = &doc.records[&id];
        assert_eq!(rec.fields["plain"], FieldValue::Timestamp(now));
        assert_eq!(rec.fields["rough"], FieldValue::Timestamp(ts("2021-11-08T00:00:00Z")));
        assert_eq!(rec.fields["manual"], FieldValue::Timestamp(ts("2021-01-02T03:00:00Z")));
        assert_eq!(rec.fields["order"], FieldValue::Count(1));
        assert_eq!(field_timestamp(doc, id, "vanish"), Some(ts("2021-11-08T15:00:00Z")));
        assert_eq!(field_timestamp(doc, id, "hybrid"), Some(ts("2021-11-08T15:00:00Z")));
        assert_eq!(doc.events.len(), 2);
        doc.validate().unwrap();

        let second = insert_record(
            &mut store,
            NewRecord::new("Issue")
                .value("manual", now)
                .label("order", "user:alice"),
            ts("2021-11-08T15:30:00Z"),
        )
        .unwrap();
        let doc = store.document();
        assert_eq!(doc.records[&second].fields["order"], FieldValue::Count(1));
        assert_eq!(
            field_timestamp(doc, second, "hybrid"),
            Some(ts("2021-11-08T15:00:00.000001Z"))
        );

        reduce_due(&mut store, ts("2021-11-09T00:00:00Z")).unwrap();
        let doc = store.document();
        assert_eq!(field_timestamp(doc, second, "vanish"), Some(ts("2021-11-08T00:00:00Z")));
        assert_eq!(
            field_timestamp(doc, second, "hybrid"),
            Some(ts("2021-11-08T00:00:00.000001Z"))
        );
        doc.validate().unwrap();
    }

    #[test]
    fn save_refreshes_on_save_fields_only() {
        let mut store = Store::in_memory_seeded(2);
        let schema = ModelSchema::new()
            .field("created", rough("1h", CaptureMode::OnCreate))
            .field("modified", rough("1h", CaptureMode::OnSave));
        declare_model(&mut store, "Task", schema).unwrap();
        let id = insert_record(&mut store, NewRecord::new("Task"), ts("2021-11-08T15:17:00Z")).unwrap();
        save_record(&mut store, id, ts("2021-11-09T08:45:00Z")).unwrap();
        let doc = store.document();
        assert_eq!(field_timestamp(doc, id, "created"), Some(ts("2021-11-08T15:00:00Z")));
        assert_eq!(field_timestamp(doc, id, "modified"), Some(ts("2021-11-09T08:00:00Z")));
    }

    #[test]
    fn insert_errors_leave_store_untouched() {
        let mut store = Store::in_memory_seeded(3);
        let schema = ModelSchema::new()
            .field("order", FieldDef::Ordering { label: None })
            .field("manual", rough("1h", CaptureMode::Manual));
        declare_model(&mut store, "M", schema).unwrap();
        let before = store.document().clone();
        let now = ts("2021-11-08T15:17:00Z");
        assert!(matches!(
            insert_record(&mut store, NewRecord::new("M").label("order", "x"), now),
            Err(Error::MissingValue(_))
        ));
        assert!(matches!(
            insert_record(&mut store, NewRecord::new("M").value("manual", now), now),
            Err(Error::MissingLabel(_))
        ));
        assert!(matches!(
            insert_record(&mut store, NewRecord::new("M").value("nope", now), now),
            Err(Error::UnknownField { .. })
        ));
        assert!(matches!(
            insert_record(&mut store, NewRecord::new("Nope"), now),
            Err(Error::UnknownModel(_))
        ));
        assert_eq!(*store.document(), before);
    }
}
