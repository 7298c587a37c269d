//! JSON-lines event output: one object per derived scalar, on stdout.

use serde_json::Value;

pub fn emit(value: Value) {
    println!("{value}");
}

/// Weight lists are capped so a single event line stays reasonable; the
/// bundle file always has the full set.
pub const MAX_WEIGHTS_IN_LOG: usize = 1000;

pub fn weights_event(weights: &[f64]) -> Value {
    let shown: Vec<f64> = weights.iter().copied().take(MAX_WEIGHTS_IN_LOG).collect();
    serde_json::json!({
        "event": "weights",
        "count": weights.len(),
        "values": shown,
    })
}
