//! Sample data: a three-step vanishing date and an ordered vanishing date
//! with a 5 s / 30 s policy, plus a rough and an ordering field.

use uuid::Uuid;

use crate::error::{Error, Result};
use crate::hybrid::HybridFieldDef;
use crate::precision::{Duration, PrecisionSpec, Timestamp};
use crate::record::{declare_model, field_timestamp, insert_record, FieldDef, ModelSchema, NewRecord};
use crate::rough::{CaptureMode, RoughFieldDef};
use crate::store::Store;
use crate::vanishing::{make_policy, reduce_due, VanishingStep};

/// 1 hour at creation, 1 day after 3 hours, 1 month after 7 days.
pub fn three_step_policy() -> Vec<VanishingStep> {
    vec![
        VanishingStep::initial(PrecisionSpec::hours(1).expect("valid")),
        VanishingStep::new(PrecisionSpec::days(1).expect("valid"), Duration::from_hours(3)),
        VanishingStep::new(PrecisionSpec::months(1).expect("valid"), Duration::from_days(7)),
    ]
}

/// 5 seconds at creation, 30 seconds one minute later.
pub fn ordered_policy() -> Vec<VanishingStep> {
    vec![
        VanishingStep::initial(PrecisionSpec::seconds(5).expect("valid")),
        VanishingStep::new(PrecisionSpec::seconds(30).expect("valid"), Duration::from_secs(60)),
    ]
}

pub const VANISHING_CREATED_AT: &str = "2021-11-08T15:17:00Z";

pub const ORDERED_INPUTS: [&str; 5] = [
    "2021-11-08T12:20:11.673320Z",
    "2021-11-08T12:20:14.313406Z",
    "2021-11-08T12:20:17.248323Z",
    "2021-11-08T12:20:33.040852Z",
    "2021-11-08T12:20:35.917632Z",
];

/// When the demo runs the ordered entries' second reduction.
pub const ORDERED_REDUCED_AT: &str = "2021-11-08T12:22:00Z";

fn ts(s: &str) -> Timestamp {
    s.parse().expect("valid demo timestamp")
}

/// Records created by [`populate`].
#[derive(Debug, Clone)]
pub struct DemoData {
    pub comment: Uuid,
    pub timeline: Vec<Uuid>,
    pub issue: Uuid,
    pub watched: Vec<Uuid>,
    /// Human-readable walkthrough.
    pub lines: Vec<String>,
}

/// Fills an empty store. Everything happens at fixed instants, so with a
/// seeded id source the resulting file is reproducible.
///
/// The ordered entries are created and fully reduced first (12:20 to 12:22);
/// the comment is created at 15:17 and left with its second step pending.
pub fn populate(store: &mut Store) -> Result<DemoData> {
    if !store.document().records.is_empty() {
        return Err(Error::StoreNotEmpty);
    }
    let three_step = make_policy(store, three_step_policy())?.id();
    let ordered = make_policy(store, ordered_policy())?.id();

    declare_model(
        store,
        "Comment",
        ModelSchema::new().field("created_at", FieldDef::Vanishing { policy: three_step }),
    )?;
    declare_model(
        store,
        "TimelineEntry",
        ModelSchema::new().field("created", FieldDef::Hybrid(HybridFieldDef::vanishing(ordered))),
    )?;
    declare_model(
        store,
        "Issue",
        ModelSchema::new().field(
            "created_date",
            FieldDef::Rough(RoughFieldDef::new(PrecisionSpec::hours(1)?, CaptureMode::OnCreate)),
        ),
    )?;
    declare_model(
        store,
        "Watched",
        ModelSchema::new().field("created_date", FieldDef::Ordering { label: None }),
    )?;

    let mut lines = Vec::new();
    let mut timeline = Vec::new();
    for input in ORDERED_INPUTS {
        let id = insert_record(store, NewRecord::new("TimelineEntry"), ts(input))?;
        let value = field_timestamp(store.document(), id, "created").expect("just created");
        lines.push(format!("timeline entry at {input}: stored {value}"));
        timeline.push(id);
    }
    let report = reduce_due(store, ts(ORDERED_REDUCED_AT))?;
    lines.push(format!("reduce at {ORDERED_REDUCED_AT}: {report}"));
    for (input, id) in ORDERED_INPUTS.iter().zip(&timeline) {
        let value = field_timestamp(store.document(), *id, "created").expect("still present");
        lines.push(format!("timeline entry at {input}: stored {value}"));
    }

    let created = ts(VANISHING_CREATED_AT);
    let issue = insert_record(store, NewRecord::new("Issue"), created)?;
    lines.push(format!(
        "issue at {VANISHING_CREATED_AT}: stored {}",
        field_timestamp(store.document(), issue, "created_date").expect("rough value")
    ));

    let mut watched = Vec::new();
    for user in ["alice", "bob", "alice"] {
        let id = insert_record(
            store,
            NewRecord::new("Watched").label("created_date", format!("watched:user:{user}")),
            created,
        )?;
        watched.push(id);
    }

    let comment = insert_record(store, NewRecord::new("Comment"), created)?;
    let doc = store.document();
    let due = doc
        .events
        .values()
        .next()
        .map_or_else(|| "-".to_string(), |e| e.due.to_string());
    lines.push(format!(
        "comment at {VANISHING_CREATED_AT}: stored {}, next due {due}",
        field_timestamp(doc, comment, "created_at").expect("vanishing value")
    ));

    Ok(DemoData {
        comment,
        timeline,
        issue,
        watched,
        lines,
    })
}
