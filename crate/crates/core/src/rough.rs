//! Rough dates: values truncated once, when they are persisted.

use serde::{Deserialize, Serialize};

use crate::precision::{truncate, PrecisionSpec, Timestamp};

/// When a rough field takes its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureMode {
    /// The caller supplies the value.
    Manual,
    /// Set to the current time when the record is first saved.
    OnCreate,
    /// Set to the current time on every save.
    OnSave,
}

/// Field definition for a rough date. There is deliberately no default
/// precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoughFieldDef {
    pub spec: PrecisionSpec,
    pub capture: CaptureMode,
}

impl RoughFieldDef {
    pub fn new(spec: PrecisionSpec, capture: CaptureMode) -> Self {
        RoughFieldDef { spec, capture }
    }

    pub fn capture(&self, raw: Timestamp) -> RoughValue {
        rough_capture(self, raw)
    }
}

/// A persisted rough date. Stored exactly like a plain timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoughValue(Timestamp);

impl RoughValue {
    pub fn value(&self) -> Timestamp {
        self.0
    }

    /// Whether this value lies on `field`'s grid.
    pub fn is_on_grid(&self, field: &RoughFieldDef) -> bool {
        truncate(self.0, field.spec) == self.0
    }
}

/// Reduces `raw` to the field's precision. This is the only way to obtain a
/// [`RoughValue`], so anything that reaches the store is truncated.
pub fn rough_capture(field: &RoughFieldDef, raw: Timestamp) -> RoughValue {
    RoughValue(truncate(raw, field.spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    #[test]
    fn capture_truncates() {
        let field = RoughFieldDef::new(PrecisionSpec::hours(1).unwrap(), CaptureMode::OnSave);
        assert_eq!(field.capture(ts("2021-11-08T15:17:00Z")).value(), ts("2021-11-08T15:00:00Z"));
        assert_eq!(field.capture(ts("2021-11-08T15:00:00Z")).value(), ts("2021-11-08T15:00:00Z"));

        let field = RoughFieldDef::new(PrecisionSpec::seconds(30).unwrap(), CaptureMode::OnCreate);
        let captured = field.capture(ts("2021-11-08T12:20:33.040852Z"));
        assert_eq!(captured.value().to_string(), "2021-11-08T12:20:30.000000Z");
        assert!(captured.is_on_grid(&field));
    }

    #[test]
    fn serializes_like_a_timestamp() {
        let field = RoughFieldDef::new(PrecisionSpec::days(1).unwrap(), CaptureMode::Manual);
        let v = field.capture(ts("2021-11-08T15:17:00Z"));
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"2021-11-08T00:00:00.000000Z\"");
        assert_eq!(
            serde_json::to_string(&field).unwrap(),
            r#"{"spec":"1d","capture":"manual"}"#
        );
    }
}
