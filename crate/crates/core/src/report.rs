//! Machine-readable counter reports. One JSON object per measured run; the
//! key set is fixed and consumed by the acceptance checks.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CounterReport {
    /// Implementation name (`amortized`, `worstcase`, `identical`, `binary`).
    #[serde(rename = "impl")]
    pub impl_name: String,
    /// Peak live size reached during the measured segment.
    pub n: usize,
    /// Operations in the measured segment.
    pub ops: u64,
    pub moves: u64,
    pub comparisons: u64,
    pub max_moves_per_op: u64,
    pub max_cmps_per_op: u64,
    pub wall_ns: u128,
}

impl CounterReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys_are_stable() {
        let r = CounterReport {
            impl_name: "binary".into(),
            n: 4,
            ops: 2,
            moves: 3,
            comparisons: 1,
            max_moves_per_op: 2,
            max_cmps_per_op: 1,
            wall_ns: 99,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let obj = v.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
        for k in [
            "impl",
            "n",
            "ops",
            "moves",
            "comparisons",
            "max_moves_per_op",
            "max_cmps_per_op",
            "wall_ns",
        ] {
            assert!(keys.contains(&k), "missing key {k}");
        }
        assert_eq!(keys.len(), 8);
    }
}
