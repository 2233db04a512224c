#![allow(dead_code)]

use std::collections::BTreeMap;

use privdate::precision::truncate;
use privdate::record::{field_timestamp, FieldValue};
use privdate::{
    declare_model, delete_item, delete_owner, insert_record, make_policy, next_count, reduce_due,
    FieldDef, HybridFieldDef, ModelSchema, NewRecord, PolicyId, Store, StoreDocument, Timestamp,
    VanishingStep,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuid::Uuid;

pub fn ts(s: &str) -> Timestamp {
    s.parse().unwrap()
}

pub fn micros(t: Timestamp) -> i64 {
    t.unix_micros()
}

pub fn at(micros: i64) -> Timestamp {
    Timestamp::from_unix_micros(micros).unwrap()
}

/// Where an item came from, kept on the test side only.
#[derive(Clone, Debug)]
pub struct Origin {
    pub created: Timestamp,
    pub policy: PolicyId,
    pub ordered: bool,
}

/// Reference progression: apply steps one at a time while the next one is
/// due at `now`. Returns `(value, step_index)`; for ordered items the value
/// is the date part only.
pub fn progression_oracle(steps: &[VanishingStep], created: Timestamp, now: Timestamp) -> (Timestamp, usize) {
    let mut value = truncate(created, steps[0].precision);
    let mut index = 0;
    while index + 1 < steps.len() {
        let due = value.checked_add(steps[index + 1].offset).unwrap();
        if due > now {
            break;
        }
        index += 1;
        value = truncate(value, steps[index].precision);
    }
    (value, index)
}

/// Spearman rank correlation of a permutation against `0..n`.
pub fn spearman(ranks: &[usize]) -> f64 {
    let n = ranks.len() as f64;
    let d2: f64 = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let d = i as f64 - r as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Orphan census: counts of dangling references of each kind.
pub fn orphans(doc: &StoreDocument) -> usize {
    let events = doc.events.values().filter(|e| !doc.items.contains_key(&e.item)).count();
    let items_without_policy = doc
        .items
        .values()
        .filter(|i| !doc.policies.contains_key(&i.policy))
        .count();
    let items_without_owner = doc
        .items
        .values()
        .filter(|i| {
            doc.records
                .get(&i.owner.record)
                .and_then(|r| r.fields.get(&i.owner.field))
                != Some(&FieldValue::Item(Some(i.id)))
        })
        .count();
    let dangling_fields = doc
        .records
        .values()
        .flat_map(|r| r.fields.values())
        .filter(|v| matches!(v, FieldValue::Item(Some(id)) if !doc.items.contains_key(id)))
        .count();
    events + items_without_policy + items_without_owner + dangling_fields
}

/// A store with one model per date kind and a driver for random operation
/// sequences. Time only moves forward.
pub struct Workload {
    pub store: Store,
    pub rng: ChaCha8Rng,
    pub now: i64,
    pub origins: BTreeMap<Uuid, Origin>,
    pub records: Vec<Uuid>,
    pub steps: BTreeMap<PolicyId, Vec<VanishingStep>>,
}

pub fn hour_day_month() -> Vec<VanishingStep> {
    privdate::demo::three_step_policy()
}

pub fn five_thirty() -> Vec<VanishingStep> {
    privdate::demo::ordered_policy()
}

impl Workload {
    pub fn new(seed: u64, store: Store) -> Self {
        let mut store = store;
        let mut steps = BTreeMap::new();
        let slow = make_policy(&mut store, hour_day_month()).unwrap().id();
        let fast = make_policy(&mut store, five_thirty()).unwrap().id();
        steps.insert(slow, hour_day_month());
        steps.insert(fast, five_thirty());
        declare_model(
            &mut store,
            "Doc",
            ModelSchema::new()
                .field("created", FieldDef::Vanishing { policy: slow })
                .field("touched", FieldDef::Hybrid(HybridFieldDef::vanishing(fast)))
                .field("seq", FieldDef::Ordering { label: Some("doc".into()) }),
        )
        .unwrap();
        declare_model(&mut store, "Note", ModelSchema::new().field("at", FieldDef::Plain)).unwrap();
        Workload {
            store,
            rng: ChaCha8Rng::seed_from_u64(seed),
            now: micros(ts("2021-11-08T15:17:00Z")),
            origins: BTreeMap::new(),
            records: Vec::new(),
            steps,
        }
    }

    pub fn advance(&mut self) {
        // Mostly short gaps, sometimes days.
        let gap = if self.rng.gen_bool(0.1) {
            self.rng.gen_range(0..10 * 86_400_000_000i64)
        } else {
            self.rng.gen_range(0..120_000_000i64)
        };
        self.now += gap;
    }

    pub fn insert(&mut self) -> Uuid {
        let now = at(self.now);
        let model = if self.rng.gen_bool(0.8) { "Doc" } else { "Note" };
        let id = insert_record(&mut self.store, NewRecord::new(model), now).unwrap();
        let doc = self.store.document();
        for (field, value) in &doc.records[&id].fields {
            if let FieldValue::Item(Some(item)) = value {
                let def = doc.field_def(model, field).unwrap();
                let policy = match def {
                    FieldDef::Vanishing { policy } => *policy,
                    FieldDef::Hybrid(h) => h.vanishing_policy().unwrap(),
                    _ => unreachable!(),
                };
                self.origins.insert(
                    *item,
                    Origin {
                        created: now,
                        policy,
                        ordered: matches!(def, FieldDef::Hybrid(_)),
                    },
                );
            }
        }
        self.records.push(id);
        id
    }

    /// One random operation. Returns the `now` of a reduction, if one ran.
    pub fn step(&mut self) -> Option<Timestamp> {
        self.advance();
        match self.rng.gen_range(0..10) {
            0..=4 => {
                self.insert();
                None
            }
            5 | 6 => {
                let now = at(self.now);
                reduce_due(&mut self.store, now).unwrap();
                Some(now)
            }
            7 if !self.records.is_empty() => {
                let idx = self.rng.gen_range(0..self.records.len());
                let id = self.records.swap_remove(idx);
                delete_owner(&mut self.store, id).unwrap();
                None
            }
            8 if !self.store.document().items.is_empty() => {
                let items: Vec<Uuid> = self.store.document().items.keys().copied().collect();
                let item = items[self.rng.gen_range(0..items.len())];
                delete_item(&mut self.store, item).unwrap();
                None
            }
            _ => {
                let label = format!("user:{}", self.rng.gen_range(0..4));
                next_count(&mut self.store, &label).unwrap();
                None
            }
        }
    }

    /// Every surviving item agrees with the reference progression at `now`,
    /// provided a reduction ran at `now` after all creations.
    pub fn check_against_oracle(&self, now: Timestamp) -> Result<(), String> {
        let doc = self.store.document();
        for (id, item) in &doc.items {
            let origin = &self.origins[id];
            let (value, index) = progression_oracle(&self.steps[&origin.policy], origin.created, now);
            let date = if origin.ordered {
                item.value.with_subsec_micros(0).unwrap()
            } else {
                item.value
            };
            if (date, item.step_index) != (value, index) {
                return Err(format!(
                    "item {id}: stored {date} at step {}, oracle {value} at step {index}",
                    item.step_index
                ));
            }
        }
        Ok(())
    }

    pub fn visible(&self, record: Uuid, field: &str) -> Option<Timestamp> {
        field_timestamp(self.store.document(), record, field)
    }
}
