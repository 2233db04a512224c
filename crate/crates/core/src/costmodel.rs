//! Storage cost of the date types, in bytes per field, relative to an
//! ordinary 8-byte date-time column of a relational engine.
//!
//! A vanishing date needs three UUIDs (38 B each), two dates (8 B each), a
//! foreign key and an event counter (4 B each). Ordering contexts and
//! policies are usage-dependent and reported separately.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const UUID_BYTES: u64 = 38;
pub const DATE_BYTES: u64 = 8;
pub const INT_BYTES: u64 = 4;
/// One persisted ordering context.
pub const CONTEXT_BYTES: u64 = 44;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldKind {
    Plain,
    Rough,
    Ordering,
    Vanishing,
    /// Vanishing date with an ordering counter.
    Hybrid,
}

impl FieldKind {
    pub const ALL: [FieldKind; 5] = [
        FieldKind::Plain,
        FieldKind::Rough,
        FieldKind::Ordering,
        FieldKind::Vanishing,
        FieldKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Plain => "plain",
            FieldKind::Rough => "rough",
            FieldKind::Ordering => "ordering",
            FieldKind::Vanishing => "vanishing",
            FieldKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "plain" | "datetime" => FieldKind::Plain,
            "rough" | "rd" => FieldKind::Rough,
            "ordering" | "od" => FieldKind::Ordering,
            "vanishing" | "vd" => FieldKind::Vanishing,
            "hybrid" | "vd+o" => FieldKind::Hybrid,
            _ => return Err(Error::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

const fn vanishing_bytes() -> u64 {
    3 * UUID_BYTES + 2 * DATE_BYTES + 2 * INT_BYTES
}

pub fn field_cost(kind: FieldKind) -> u64 {
    match kind {
        FieldKind::Plain | FieldKind::Rough => DATE_BYTES,
        FieldKind::Ordering => INT_BYTES,
        // The counter lives in the sub-second part, so it costs nothing extra.
        FieldKind::Vanishing | FieldKind::Hybrid => vanishing_bytes(),
    }
}

/// Cost of a field relative to a plain date-time.
pub fn factor(kind: FieldKind) -> f64 {
    field_cost(kind) as f64 / field_cost(FieldKind::Plain) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioCost {
    pub fields: u64,
    pub total: u64,
    /// Unweighted mean bytes per field.
    pub average: f64,
    /// `average` relative to a plain date-time.
    pub factor: f64,
}

pub fn scenario_cost(mix: &[(FieldKind, u64)]) -> Result<ScenarioCost> {
    let fields: u64 = mix.iter().map(|(_, n)| n).sum();
    if fields == 0 {
        return Err(Error::EmptyMix);
    }
    let total: u64 = mix.iter().map(|&(kind, n)| field_cost(kind) * n).sum();
    let average = total as f64 / fields as f64;
    Ok(ScenarioCost {
        fields,
        total,
        average,
        factor: average / field_cost(FieldKind::Plain) as f64,
    })
}

/// Parses `kind=count` pairs such as `vanishing=2`.
pub fn parse_mix<S: AsRef<str>>(pairs: &[S]) -> Result<Vec<(FieldKind, u64)>> {
    pairs
        .iter()
        .map(|pair| {
            let pair = pair.as_ref();
            let (kind, count) = pair
                .split_once('=')
                .ok_or_else(|| Error::UnknownKind(pair.to_string()))?;
            let count = count
                .parse()
                .map_err(|_| Error::UnknownKind(pair.to_string()))?;
            Ok((kind.parse()?, count))
        })
        .collect()
}

/// Replacement mix of an 18-timestamp issue tracker: 10 rough, 3 ordering,
/// 2 vanishing and 3 ordered vanishing dates.
pub fn issue_tracker_mix() -> Vec<(FieldKind, u64)> {
    vec![
        (FieldKind::Rough, 10),
        (FieldKind::Ordering, 3),
        (FieldKind::Vanishing, 2),
        (FieldKind::Hybrid, 3),
    ]
}

/// Two-decimal rendering without trailing zeros: 17.25, 5.43, 1.
pub fn format_amount(x: f64) -> String {
    let text = format!("{x:.2}");
    text.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_kind_costs() {
        assert_eq!(field_cost(FieldKind::Vanishing), 138);
        assert_eq!(factor(FieldKind::Vanishing), 17.25);
        assert_eq!(field_cost(FieldKind::Ordering), 4);
        assert_eq!(factor(FieldKind::Ordering), 0.5);
        assert_eq!(field_cost(FieldKind::Rough), 8);
        assert_eq!(factor(FieldKind::Rough), 1.0);
        assert_eq!(field_cost(FieldKind::Hybrid), 138);
        assert_eq!(CONTEXT_BYTES, 44);
    }

    #[test]
    fn scenarios() {
        let one_plain = scenario_cost(&[(FieldKind::Plain, 1)]).unwrap();
        assert_eq!(one_plain.factor, 1.0);
        let one_vanishing = scenario_cost(&[(FieldKind::Vanishing, 1)]).unwrap();
        assert_eq!(one_vanishing.factor, 17.25);

        // 10*8 + 3*4 + 2*138 + 3*138 = 782 bytes over 18 fields.
        let tracker = scenario_cost(&issue_tracker_mix()).unwrap();
        assert_eq!((tracker.total, tracker.fields), (782, 18));
        assert!((tracker.factor - 782.0 / 18.0 / 8.0).abs() < 1e-12);
        assert_eq!(format_amount(tracker.average), "43.44");
        assert_eq!(format_amount(tracker.factor), "5.43");

        assert!(matches!(scenario_cost(&[]), Err(Error::EmptyMix)));
        assert!(matches!(scenario_cost(&[(FieldKind::Rough, 0)]), Err(Error::EmptyMix)));
    }

    #[test]
    fn scenario_totals_add() {
        let a = [(FieldKind::Rough, 4), (FieldKind::Vanishing, 1)];
        let b = [(FieldKind::Ordering, 7), (FieldKind::Hybrid, 2)];
        let joined: Vec<_> = a.iter().chain(&b).copied().collect();
        assert_eq!(
            scenario_cost(&joined).unwrap().total,
            scenario_cost(&a).unwrap().total + scenario_cost(&b).unwrap().total
        );
    }

    #[test]
    fn parses_pairs() {
        assert_eq!(
            parse_mix(&["vanishing=1", "RD=10", "vd+o=3"]).unwrap(),
            vec![(FieldKind::Vanishing, 1), (FieldKind::Rough, 10), (FieldKind::Hybrid, 3)]
        );
        assert!(matches!(parse_mix(&["sundial=1"]), Err(Error::UnknownKind(_))));
        assert!(parse_mix(&["rough"]).is_err());
        assert!(parse_mix(&["rough=x"]).is_err());
    }
}
