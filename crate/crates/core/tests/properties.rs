mod common;

use std::collections::HashMap;

use common::{at, micros, orphans, progression_oracle, spearman, ts, Workload};
use privdate::record::field_timestamp;
use privdate::{
    assign_hybrid, declare_model, insert_record, make_policy, next_count, reduce_due, CaptureMode,
    Error, FieldDef, HybridFieldDef, ModelSchema, NewRecord, PrecisionSpec, RoughFieldDef, Store,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn workloads_keep_every_invariant(seed in any::<u64>(), ops in 20usize..120) {
        let mut w = Workload::new(seed, Store::in_memory_seeded(seed));
        for _ in 0..ops {
            let reduced_at = w.step();
            let doc = w.store.document();
            prop_assert_eq!(doc.validate().ok(), Some(()));
            prop_assert_eq!(orphans(doc), 0);
            if let Some(now) = reduced_at {
                prop_assert!(doc.events.values().all(|e| e.due > now));
                if let Err(msg) = w.check_against_oracle(now) {
                    prop_assert!(false, "{}", msg);
                }
            }
            for event in doc.events.values() {
                let item = &doc.items[&event.item];
                let steps = doc.policy(item.policy).unwrap().steps();
                prop_assert_eq!(event.step_index, item.step_index + 1);
                let due = item.value.checked_add(steps[event.step_index].offset).unwrap();
                prop_assert_eq!(event.due, due);
            }
        }
    }

    #[test]
    fn counters_match_scalar_oracle(picks in prop::collection::vec(0usize..5, 1..300)) {
        let mut store = Store::in_memory();
        let mut oracle: HashMap<usize, u64> = HashMap::new();
        for pick in picks {
            let c = oracle.entry(pick).or_default();
            *c += 1;
            let got = next_count(&mut store, &format!("u:{pick}")).unwrap().get();
            prop_assert_eq!(got, *c);
        }
    }
}

#[test]
fn reducer_is_deterministic() {
    let mut a = Workload::new(4, Store::in_memory_seeded(4));
    for _ in 0..200 {
        a.step();
    }
    let mut b = Store::from_document(a.store.document().clone());
    let now = at(a.now + 30 * 86_400_000_000);
    let ra = reduce_due(&mut a.store, now).unwrap();
    let rb = reduce_due(&mut b, now).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a.store.document(), b.document());
    assert_eq!(ra.pending, 0);
}

#[test]
fn one_pass_matches_step_by_step() {
    let steps = common::hour_day_month();
    let created = ts("2021-11-08T15:17:00Z");
    let later = ts("2022-11-08T15:17:00Z");
    assert_eq!(progression_oracle(&steps, created, later), (ts("2021-11-01T00:00:00Z"), 2));

    let mut w = Workload::new(8, Store::in_memory_seeded(8));
    w.now = micros(created);
    for _ in 0..20 {
        w.insert();
    }
    reduce_due(&mut w.store, later).unwrap();
    w.check_against_oracle(later).unwrap();
}

/// Upper bound on time spent at a precision level: an item created at `c`
/// reaches step 1 no later than `c + offset`.
#[test]
fn time_at_first_level_is_bounded_by_the_offset() {
    let steps = common::hour_day_month();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = micros(ts("2021-11-08T00:00:00Z"));
    for _ in 0..2_000 {
        let created = at(base + rng.gen_range(0..86_400_000_000i64 * 60));
        let due = privdate::truncate(created, steps[0].precision)
            .checked_add(steps[1].offset)
            .unwrap();
        assert!(due <= created.checked_add(steps[1].offset).unwrap());
        assert!(due > created);
    }
}

/// Sorting by stored value reproduces (input time, insertion index) order at
/// every reduction level.
#[test]
fn ordered_fields_preserve_insertion_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for round in 0..200 {
        let mut store = Store::in_memory_seeded(round);
        let policy = make_policy(&mut store, common::five_thirty()).unwrap().id();
        declare_model(
            &mut store,
            "E",
            ModelSchema::new().field("at", FieldDef::Hybrid(HybridFieldDef::vanishing(policy))),
        )
        .unwrap();
        let mut t = micros(ts("2021-11-08T12:20:00Z")) + rng.gen_range(0..1_000_000);
        let mut ids = Vec::new();
        for _ in 0..rng.gen_range(1..40) {
            t += rng.gen_range(0..4_000_000);
            ids.push(insert_record(&mut store, NewRecord::new("E"), at(t)).unwrap());
        }
        let check = |store: &Store| {
            let values: Vec<_> = ids
                .iter()
                .map(|id| field_timestamp(store.document(), *id, "at").unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
        };
        check(&store);
        reduce_due(&mut store, at(t + 3_600_000_000)).unwrap();
        assert!(store.document().events.is_empty());
        check(&store);
    }
}

#[test]
fn millionth_value_in_a_bucket_overflows() {
    let mut store = Store::in_memory();
    let field = HybridFieldDef::rough(RoughFieldDef::new(
        PrecisionSpec::years(1).unwrap(),
        CaptureMode::OnCreate,
    ));
    let start = micros(ts("2021-01-01T00:00:00Z"));
    for i in 0..1_000_000i64 {
        let v = assign_hybrid(&mut store, "busy", &field, at(start + i)).unwrap();
        assert_eq!(i64::from(v.counter()), i);
    }
    let err = assign_hybrid(&mut store, "busy", &field, at(start + 1_000_000)).unwrap_err();
    assert!(matches!(err, Error::CounterOverflow { .. }));
}

#[test]
fn ids_carry_no_insertion_order() {
    let mut w = Workload::new(23, Store::in_memory_seeded(23));
    let mut items = Vec::new();
    while items.len() < 1_000 {
        let id = w.insert();
        if let Some(privdate::record::FieldValue::Item(Some(item))) =
            w.store.document().records[&id].fields.get("created")
        {
            items.push(*item);
        }
    }
    let mut by_id: Vec<usize> = (0..items.len()).collect();
    by_id.sort_by_key(|&i| items[i]);
    let rho = spearman(&by_id);
    assert!(rho.abs() <= 0.1, "rho = {rho}");
    assert!(items.iter().all(|id| id.get_version_num() == 4));
}
