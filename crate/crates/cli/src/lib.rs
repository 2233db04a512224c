//! Command-line front end: the periodic reducer plus inspection, demo and
//! cost tools.
//!
//! The wall clock is read here and nowhere else. `--now` replaces it with a
//! virtual clock, which makes every subcommand reproducible.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use privdate::costmodel::{self, FieldKind, CONTEXT_BYTES};
use privdate::record::FieldValue;
use privdate::{demo, reduce_due, Duration, ErrorClass, SeededIds, Store, Timestamp};

#[derive(Debug, Parser)]
#[command(name = "privdate", version, about = "Privacy-preserving date store tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply every due reduction (once, or every --interval seconds).
    Reduce {
        #[arg(long)]
        store: PathBuf,
        /// Use this instant instead of the wall clock.
        #[arg(long)]
        now: Option<Timestamp>,
        /// Keep running, one pass every INTERVAL seconds.
        #[arg(long, value_name = "INTERVAL")]
        interval: Option<u64>,
        /// Stop loop mode after this many passes.
        #[arg(long, requires = "interval")]
        max_passes: Option<u64>,
    },
    /// Print records, vanishing items and pending reductions.
    Inspect {
        #[arg(long)]
        store: PathBuf,
        /// Mark events due at this instant (defaults to the wall clock).
        #[arg(long)]
        now: Option<Timestamp>,
    },
    /// Fill an empty store with sample data.
    Demo {
        #[arg(long)]
        store: PathBuf,
        /// Reproducible ids. Never use a seed for real data.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Storage cost per field kind, and of a `kind=count` mix.
    Cost {
        #[arg(value_name = "KIND=COUNT")]
        mix: Vec<String>,
    },
}

/// Source of the current time for subcommands that need it.
pub trait Clock {
    fn now(&mut self) -> Timestamp;
    fn sleep(&mut self, secs: u64);
}

pub struct WallClock;

impl Clock for WallClock {
    fn now(&mut self) -> Timestamp {
        Timestamp::from_datetime_lossy(chrono::Utc::now())
    }

    fn sleep(&mut self, secs: u64) {
        std::thread::sleep(std::time::Duration::from_secs(secs));
    }
}

/// A clock that only moves when slept on.
pub struct VirtualClock(Timestamp);

impl VirtualClock {
    pub fn new(start: Timestamp) -> Self {
        VirtualClock(start)
    }
}

impl Clock for VirtualClock {
    fn now(&mut self) -> Timestamp {
        self.0
    }

    fn sleep(&mut self, secs: u64) {
        self.0 = self
            .0
            .checked_add(Duration::from_secs(secs))
            .expect("virtual clock within range");
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &privdate::Error) -> i32 {
    match err.class() {
        ErrorClass::Store => 3,
        ErrorClass::Validation => 4,
    }
}

/// Runs one invocation, writing the report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> privdate::Result<()> {
    let now = match &cli.command {
        Command::Reduce { now, .. } | Command::Inspect { now, .. } => *now,
        _ => None,
    };
    match now {
        Some(t) => run_with_clock(cli, out, &mut VirtualClock::new(t)),
        None => run_with_clock(cli, out, &mut WallClock),
    }
}

pub fn run_with_clock(cli: Cli, out: &mut dyn Write, clock: &mut dyn Clock) -> privdate::Result<()> {
    match cli.command {
        Command::Reduce {
            store,
            interval,
            max_passes,
            ..
        } => reduce(&store, interval, max_passes, out, clock),
        Command::Inspect { store, .. } => {
            let snapshot = Store::snapshot(&store)?;
            out.write_all(inspect(&store, &snapshot, clock.now()).as_bytes())?;
            Ok(())
        }
        Command::Demo { store, seed } => {
            let mut handle = Store::open(&store)?;
            if let Some(seed) = seed {
                handle = handle.with_id_source(SeededIds::new(seed));
            }
            let data = demo::populate(&mut handle)?;
            for line in &data.lines {
                writeln!(out, "{line}")?;
            }
            let doc = handle.document();
            writeln!(
                out,
                "demo store written to {}: {} records, {} pending",
                store.display(),
                doc.records.len(),
                doc.events.len()
            )?;
            Ok(())
        }
        Command::Cost { mix } => {
            out.write_all(cost(&mix)?.as_bytes())?;
            Ok(())
        }
    }
}

fn reduce(
    path: &Path,
    interval: Option<u64>,
    max_passes: Option<u64>,
    out: &mut dyn Write,
    clock: &mut dyn Clock,
) -> privdate::Result<()> {
    let Some(interval) = interval else {
        let mut store = Store::open(path)?;
        let report = reduce_due(&mut store, clock.now())?;
        writeln!(out, "{report}")?;
        return Ok(());
    };
    let mut pass = 0u64;
    loop {
        let now = clock.now();
        // The lock is only held for the duration of a pass.
        let report = {
            let mut store = Store::open(path)?;
            reduce_due(&mut store, now)?
        };
        writeln!(out, "{now}: {report}")?;
        out.flush()?;
        pass += 1;
        if max_passes.is_some_and(|max| pass >= max) {
            return Ok(());
        }
        clock.sleep(interval);
    }
}

/// Line-oriented dump of a snapshot. Output order is fully determined by
/// the document.
pub fn inspect(path: &Path, store: &Store, now: Timestamp) -> String {
    let doc = store.document();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "store {} (format {}, {})",
        path.display(),
        doc.meta.format_version,
        doc.meta.hash_algorithm
    );
    let _ = writeln!(s, "models: {}", doc.models.len());
    for (name, schema) in &doc.models {
        let fields: Vec<String> = schema
            .fields
            .iter()
            .map(|(f, def)| format!("{f}={}", def.kind_name()))
            .collect();
        let _ = writeln!(s, "  {name}: {}", fields.join(", "));
    }
    let _ = writeln!(s, "policies: {}", doc.policies.len());
    for (id, policy) in &doc.policies {
        let steps: Vec<String> = policy
            .steps()
            .iter()
            .map(|st| format!("{}@{}s", st.precision, st.offset.as_secs()))
            .collect();
        let _ = writeln!(s, "  {id}: {}", steps.join(" -> "));
    }
    let _ = writeln!(s, "ordering contexts: {}", doc.contexts.len());
    let _ = writeln!(s, "records: {}", doc.records.len());
    for (id, record) in &doc.records {
        let fields: Vec<String> = record
            .fields
            .iter()
            .map(|(f, v)| match v {
                FieldValue::Timestamp(t) => format!("{f}={t}"),
                FieldValue::Count(c) => format!("{f}=#{c}"),
                FieldValue::Item(Some(item)) => match doc.items.get(item) {
                    Some(i) => format!("{f}={}", i.value),
                    None => format!("{f}=<missing {item}>"),
                },
                FieldValue::Item(None) => format!("{f}=-"),
            })
            .collect();
        let _ = writeln!(s, "  {id} {} {}", record.model, fields.join(" "));
    }
    let _ = writeln!(s, "vanishing items: {}", doc.items.len());
    for (id, item) in &doc.items {
        let steps = doc.policies.get(&item.policy).map_or(0, |p| p.steps().len());
        let _ = writeln!(
            s,
            "  {id} value {} step {}/{} owner {}.{}",
            item.value,
            item.step_index + 1,
            steps,
            item.owner.record,
            item.owner.field
        );
    }
    let mut events: Vec<_> = doc.events.values().collect();
    events.sort_by_key(|e| (e.due, e.item));
    let due = events.iter().filter(|e| e.due <= now).count();
    let _ = writeln!(s, "pending events: {} ({due} due at {now})", events.len());
    for e in events {
        let mark = if e.due <= now { "due" } else { "waiting" };
        let _ = writeln!(
            s,
            "  {} {mark} item {} step {}",
            e.due,
            e.item,
            e.step_index + 1
        );
    }
    s
}

/// Per-kind table, followed by the scenario line when `mix` is non-empty.
pub fn cost(mix: &[String]) -> privdate::Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>6}  factor", "kind", "bytes");
    for kind in FieldKind::ALL {
        let _ = writeln!(
            s,
            "{:<10} {:>6}  {}",
            kind.name(),
            costmodel::field_cost(kind),
            costmodel::format_amount(costmodel::factor(kind))
        );
    }
    let _ = writeln!(s, "{:<10} {:>6}  per ordering context", "context", CONTEXT_BYTES);
    if !mix.is_empty() {
        let parsed = costmodel::parse_mix(mix)?;
        let c = costmodel::scenario_cost(&parsed)?;
        let noun = if c.fields == 1 { "field" } else { "fields" };
        let _ = writeln!(
            s,
            "scenario: {} {noun}, {} B total, average {} B ({}× plain)",
            c.fields,
            c.total,
            costmodel::format_amount(c.average),
            costmodel::format_amount(c.factor)
        );
    }
    Ok(s)
}
