use privdate::record::field_timestamp;
use privdate::{
    declare_model, insert_record, make_policy, reduce_due, Duration, FieldDef, ModelSchema,
    NewRecord, PrecisionSpec, Store, Timestamp, VanishingStep,
};

fn main() -> privdate::Result<()> {
    let mut store = Store::in_memory();

    // Hour precision at first, day precision after three hours.
    let policy = make_policy(
        &mut store,
        vec![
            VanishingStep::initial(PrecisionSpec::hours(1)?),
            VanishingStep::new(PrecisionSpec::days(1)?, Duration::from_hours(3)),
        ],
    )?;
    declare_model(
        &mut store,
        "Comment",
        ModelSchema::new().field("created_at", FieldDef::Vanishing { policy: policy.id() }),
    )?;

    let now: Timestamp = "2021-11-08T15:17:00Z".parse()?;
    let id = insert_record(&mut store, NewRecord::new("Comment"), now)?;
    println!("stored {}", field_timestamp(store.document(), id, "created_at").unwrap());

    let later: Timestamp = "2021-11-08T18:01:00Z".parse()?;
    println!("{}", reduce_due(&mut store, later)?);
    println!("stored {}", field_timestamp(store.document(), id, "created_at").unwrap());
    Ok(())
}
