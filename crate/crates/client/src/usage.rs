//! Token, latency and cost totals.

use serde::{Deserialize, Serialize};

use crate::query::ChatExchange;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageSummary {
    pub exchanges: u64,
    pub succeeded: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub mean_input_tokens: f64,
    pub mean_output_tokens: f64,
    pub total_latency_s: f64,
    pub mean_latency_s: f64,
    pub cost: f64,
    pub estimated: u64,
}

/// Prices are per million tokens; means cover successful exchanges only.
pub fn accumulate_usage(exchanges: &[ChatExchange], price_in: f64, price_out: f64) -> UsageSummary {
    let mut s = UsageSummary { exchanges: exchanges.len() as u64, ..Default::default() };
    let (mut ok_in, mut ok_out, mut ok_lat) = (0u64, 0u64, 0.0);
    for e in exchanges {
        s.input_tokens += e.input_tokens;
        s.output_tokens += e.output_tokens;
        s.total_latency_s += e.latency_s;
        s.estimated += u64::from(e.usage_estimated);
        if e.ok() {
            s.succeeded += 1;
            ok_in += e.input_tokens;
            ok_out += e.output_tokens;
            ok_lat += e.latency_s;
        }
    }
    s.cost = (s.input_tokens as f64 * price_in + s.output_tokens as f64 * price_out) / 1e6;
    if s.succeeded > 0 {
        let n = s.succeeded as f64;
        s.mean_input_tokens = ok_in as f64 / n;
        s.mean_output_tokens = ok_out as f64 / n;
        s.mean_latency_s = ok_lat / n;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(i: u64, o: u64) -> ChatExchange {
        ChatExchange {
            id: 0,
            key: "k".into(),
            prompt: String::new(),
            media_type: "image/png".into(),
            image_bytes: 0,
            response: Some("3".into()),
            input_tokens: i,
            output_tokens: o,
            usage_estimated: false,
            latency_s: 0.5,
            attempts: 1,
            error: None,
        }
    }

    #[test]
    fn linear_cost() {
        let s = accumulate_usage(&[ex(1000, 10), ex(1000, 10)], 2.0, 8.0);
        assert!((s.cost - 0.00416).abs() < 1e-15);
        assert_eq!(s.input_tokens, 2000);
        assert_eq!(s.mean_latency_s, 0.5);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(accumulate_usage(&[], 2.0, 8.0), UsageSummary::default());
    }
}
