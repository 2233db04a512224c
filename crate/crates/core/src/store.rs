//! Single-file document store.
//!
//! The whole state lives in one JSON document with sorted keys, so identical
//! states serialize to identical bytes. Commits write a temporary file next
//! to the target and rename it into place. A writer holds `<path>.lock` for
//! as long as its [`Store`] lives; readers take snapshots without locking.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Error, Result};
use crate::hybrid::{BucketHead, HybridBase};
use crate::ids::{IdSource, RandomIds, SeededIds, HASH_ALGORITHM};
use crate::ordering::{ContextKey, OrderingContext, MAX_COUNTER};
use crate::precision::truncate;
use crate::record::{FieldDef, FieldValue, ModelSchema, Record};
use crate::vanishing::{next_event, PolicyId, ReductionEvent, VanishingItem, VanishingPolicy};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub format_version: u32,
    pub hash_algorithm: String,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            format_version: FORMAT_VERSION,
            hash_algorithm: HASH_ALGORITHM.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreDocument {
    pub meta: Meta,
    #[serde(default)]
    pub models: BTreeMap<String, ModelSchema>,
    #[serde(default)]
    pub records: BTreeMap<Uuid, Record>,
    #[serde(default)]
    pub contexts: BTreeMap<ContextKey, OrderingContext>,
    /// Latest counter bucket per ordered field, keyed by the field label digest.
    #[serde(default)]
    pub hybrid_heads: BTreeMap<ContextKey, BucketHead>,
    #[serde(default)]
    pub policies: BTreeMap<PolicyId, VanishingPolicy>,
    #[serde(default)]
    pub items: BTreeMap<Uuid, VanishingItem>,
    #[serde(default)]
    pub events: BTreeMap<Uuid, ReductionEvent>,
}

impl StoreDocument {
    pub fn policy(&self, id: PolicyId) -> Result<&VanishingPolicy> {
        self.policies
            .get(&id)
            .ok_or_else(|| Error::UnknownPolicy(id.to_string()))
    }

    pub fn field_def(&self, model: &str, field: &str) -> Result<&FieldDef> {
        self.models
            .get(model)
            .ok_or_else(|| Error::UnknownModel(model.to_string()))?
            .fields
            .get(field)
            .ok_or_else(|| Error::UnknownField {
                model: model.to_string(),
                field: field.to_string(),
            })
    }

    pub(crate) fn record_mut(&mut self, id: Uuid) -> Result<&mut Record> {
        self.records.get_mut(&id).ok_or(Error::UnknownOwner(id))
    }

    /// Canonical text form.
    pub fn to_canonical_string(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses and validates a document.
    pub fn from_text(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptStore(e.to_string()))?;
        let version = raw
            .pointer("/meta/format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptStore("missing meta.format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        let doc: StoreDocument =
            serde_json::from_value(raw).map_err(|e| Error::CorruptStore(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    /// Checks every cross-reference and per-type invariant, reporting the
    /// first violation found.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(Error::CorruptStore)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.meta.hash_algorithm != HASH_ALGORITHM {
            return Err(format!("unsupported hash algorithm {:?}", self.meta.hash_algorithm));
        }
        for (key, ctx) in &self.contexts {
            if *key != ctx.key {
                return Err(format!("context {key} stored under a different key"));
            }
            if ctx.counter > MAX_COUNTER {
                return Err(format!("context {key} counter exceeds 32 bits"));
            }
        }
        for (field, head) in &self.hybrid_heads {
            if !self.contexts.contains_key(&head.context) {
                return Err(format!("bucket head of {field} references missing context {}", head.context));
            }
        }
        for (id, policy) in &self.policies {
            if *id != policy.id() || !policy.is_consistent() {
                return Err(format!("policy {id} does not match its steps"));
            }
        }
        for (name, schema) in &self.models {
            for (field, def) in &schema.fields {
                if let Some(policy) = def.policy() {
                    if !self.policies.contains_key(&policy) {
                        return Err(format!("field {name}.{field} references missing policy {policy}"));
                    }
                }
            }
        }
        for (id, record) in &self.records {
            self.check_record(*id, record)?;
        }
        let mut pending = BTreeMap::new();
        for (id, event) in &self.events {
            if *id != event.id {
                return Err(format!("event {id} stored under a different key"));
            }
            if !self.items.contains_key(&event.item) {
                return Err(format!("event {id} references missing item {}", event.item));
            }
            if pending.insert(event.item, event).is_some() {
                return Err(format!("item {} has more than one pending event", event.item));
            }
        }
        for (id, item) in &self.items {
            self.check_item(*id, item, pending.get(id).copied())?;
        }
        Ok(())
    }

    fn check_record(&self, id: Uuid, record: &Record) -> std::result::Result<(), String> {
        if id != record.id {
            return Err(format!("record {id} stored under a different key"));
        }
        let schema = self
            .models
            .get(&record.model)
            .ok_or_else(|| format!("record {id} has undeclared model {:?}", record.model))?;
        if !schema.fields.keys().eq(record.fields.keys()) {
            return Err(format!("record {id} fields do not match model {:?}", record.model));
        }
        for (name, def) in &schema.fields {
            let value = &record.fields[name];
            let ok = match (def, value) {
                (FieldDef::Plain, FieldValue::Timestamp(_)) => true,
                (FieldDef::Rough(r), FieldValue::Timestamp(t)) => truncate(*t, r.spec) == *t,
                (FieldDef::Ordering { .. }, FieldValue::Count(c)) => (1..=MAX_COUNTER).contains(c),
                (FieldDef::Vanishing { .. } | FieldDef::Hybrid(_), FieldValue::Item(None)) => {
                    def.policy().is_some()
                }
                (FieldDef::Vanishing { .. } | FieldDef::Hybrid(_), FieldValue::Item(Some(item))) => {
                    let owned = self
                        .items
                        .get(item)
                        .is_some_and(|i| i.owner.record == id && i.owner.field == *name);
                    if !owned {
                        return Err(format!("record {id} field {name} references item {item} it does not own"));
                    }
                    def.policy().is_some()
                }
                (FieldDef::Hybrid(h), FieldValue::Timestamp(t)) => match h.base {
                    HybridBase::Rough(r) => {
                        let date = t.with_subsec_micros(0).expect("zero micros");
                        truncate(date, r.spec) == date
                    }
                    HybridBase::Vanishing { .. } => false,
                },
                _ => false,
            };
            if !ok {
                return Err(format!(
                    "record {id} field {name} holds a value invalid for a {} field",
                    def.kind_name()
                ));
            }
        }
        Ok(())
    }

    fn check_item(
        &self,
        id: Uuid,
        item: &VanishingItem,
        event: Option<&ReductionEvent>,
    ) -> std::result::Result<(), String> {
        if id != item.id {
            return Err(format!("item {id} stored under a different key"));
        }
        let policy = self
            .policies
            .get(&item.policy)
            .ok_or_else(|| format!("item {id} references missing policy {}", item.policy))?;
        if item.step_index >= policy.steps().len() {
            return Err(format!("item {id} is past the last step of its policy"));
        }
        let record = self
            .records
            .get(&item.owner.record)
            .ok_or_else(|| format!("item {id} references missing owner {}", item.owner.record))?;
        if record.fields.get(&item.owner.field) != Some(&FieldValue::Item(Some(id))) {
            return Err(format!("item {id} is not referenced by its owner"));
        }
        let ordered_field = matches!(
            self.models[&record.model].fields[&item.owner.field],
            FieldDef::Hybrid(_)
        );
        if item.ordered != ordered_field {
            return Err(format!("item {id} ordering flag disagrees with its field"));
        }
        let precision = policy.steps()[item.step_index].precision;
        let date = if item.ordered {
            item.value.with_subsec_micros(0).expect("zero micros")
        } else {
            item.value
        };
        if truncate(date, precision) != date {
            return Err(format!("item {id} value is off its current grid"));
        }
        let expected = next_event(policy, item).map_err(|e| e.to_string())?;
        if expected.as_ref() != event {
            return Err(format!("item {id} pending event does not match its progress"));
        }
        Ok(())
    }
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(store_path: &Path) -> Result<Self> {
        let path = sibling(store_path, "lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard(path))
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::StoreLocked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

/// Handle to a store document: file-backed with a writer lock, a read-only
/// snapshot, or purely in memory.
pub struct Store {
    doc: StoreDocument,
    path: Option<PathBuf>,
    writable: bool,
    ids: Box<dyn IdSource>,
    _lock: Option<LockGuard>,
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            doc: StoreDocument::default(),
            path: None,
            writable: true,
            ids: Box::new(RandomIds),
            _lock: None,
        }
    }

    /// In-memory store with reproducible ids.
    pub fn in_memory_seeded(seed: u64) -> Self {
        Store::in_memory().with_id_source(SeededIds::new(seed))
    }

    /// Wraps an existing document without validating it.
    pub fn from_document(doc: StoreDocument) -> Self {
        Store {
            doc,
            ..Store::in_memory()
        }
    }

    /// Opens `path` for writing, taking the writer lock. A missing file
    /// yields an empty document that is written on the first commit.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let lock = LockGuard::acquire(path)?;
        let doc = load(path)?;
        Ok(Store {
            doc,
            path: Some(path.to_path_buf()),
            writable: true,
            ids: Box::new(RandomIds),
            _lock: Some(lock),
        })
    }

    /// Read-only snapshot of `path` as of now; takes no lock.
    pub fn snapshot(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Store {
            doc: load(path)?,
            path: Some(path.to_path_buf()),
            writable: false,
            ids: Box::new(RandomIds),
            _lock: None,
        })
    }

    pub fn with_id_source(mut self, ids: impl IdSource + 'static) -> Self {
        self.ids = Box::new(ids);
        self
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn document(&self) -> &StoreDocument {
        &self.doc
    }

    /// Direct access for repairs and tests. Nothing is validated or
    /// persisted until the next commit.
    pub fn document_mut(&mut self) -> &mut StoreDocument {
        &mut self.doc
    }

    /// Writes the document atomically. A no-op for in-memory stores.
    pub fn commit(&mut self) -> Result<()> {
        if !self.writable {
            return Err(Error::ReadOnly);
        }
        let Some(path) = &self.path else {
            return Ok(());
        };
        let text = self.doc.to_canonical_string()?;
        let tmp = sibling(path, "tmp");
        let mut file = File::create(&tmp)?;
        file.write_all(text.as_bytes())?;
        file.sync_all()?;
        drop(file);
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Runs a mutation and commits it. On any error the in-memory document
    /// is restored, so a failed operation has no effect.
    pub(crate) fn transact<T>(
        &mut self,
        f: impl FnOnce(&mut StoreDocument, &mut dyn IdSource) -> Result<T>,
    ) -> Result<T> {
        if !self.writable {
            return Err(Error::ReadOnly);
        }
        let backup = self.doc.clone();
        let result = f(&mut self.doc, self.ids.as_mut()).and_then(|value| {
            self.commit()?;
            Ok(value)
        });
        if result.is_err() {
            self.doc = backup;
        }
        result
    }
}

fn load(path: &Path) -> Result<StoreDocument> {
    match fs::read_to_string(path) {
        Ok(text) => StoreDocument::from_text(&text),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(StoreDocument::default()),
        Err(e) => Err(e.into()),
    }
}
