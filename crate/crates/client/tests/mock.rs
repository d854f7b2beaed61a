use std::sync::Arc;

use proptest::prelude::*;
use visdiag_client::{
    accumulate_usage, parse_answer, query_batch, EndpointSpec, Flavor, OracleHint, Querier, QueryRequest,
};
use visdiag_core::answer::{AnswerKind, AnswerValue};
use visdiag_core::qa::{InstructionKind, PrepromptKind};

fn oracle_request(id: u64, n: i64, cot: bool) -> QueryRequest {
    QueryRequest {
        id,
        key: "count_pieces".into(),
        prompt: "How many pieces are there in the image?".into(),
        image: Arc::new(vec![0; 16]),
        media_type: "image/png".into(),
        cot,
        oracle: Some(OracleHint { stub: "The number of pieces in the image is:".into(), answer: n.to_string() }),
    }
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_replies_parse_back(counts in prop::collection::vec((0i64..500, any::<bool>()), 1..20)) {
        let q = Querier::new(EndpointSpec::mock(Flavor::MockOracle)).unwrap();
        let reqs: Vec<QueryRequest> =
            counts.iter().enumerate().map(|(i, &(n, cot))| oracle_request(i as u64, n, cot)).collect();
        let mut out = runtime().block_on(query_batch(&q, reqs));
        out.sort_by_key(|e| e.id);
        prop_assert_eq!(out.len(), counts.len());
        for (ex, &(n, cot)) in out.iter().zip(&counts) {
            let pre = if cot { PrepromptKind::Cot } else { PrepromptKind::Neutral };
            let p = parse_answer(ex.response.as_deref().unwrap(), AnswerKind::Integer, InstructionKind::Declarative, pre);
            prop_assert_eq!(p.value, Some(AnswerValue::Integer(n)));
        }
        let usage = accumulate_usage(&out, 1.0, 2.0);
        prop_assert_eq!(usage.input_tokens, out.iter().map(|e| e.input_tokens).sum::<u64>());
        prop_assert_eq!(usage.output_tokens, out.iter().map(|e| e.output_tokens).sum::<u64>());
    }
}

#[test]
fn scripted_mock_falls_back_to_star() {
    let mut spec = EndpointSpec::mock(Flavor::MockScripted);
    spec.responses.insert("count_pieces".into(), "There are 4 pieces.".into());
    spec.responses.insert("*".into(), "no idea".into());
    let q = Querier::new(spec).unwrap();
    let mut other = oracle_request(1, 0, false);
    other.key = "identify_pieces".into();
    let mut out = runtime().block_on(query_batch(&q, vec![oracle_request(0, 9, false), other]));
    out.sort_by_key(|e| e.id);
    assert_eq!(out[0].response.as_deref(), Some("There are 4 pieces."));
    assert_eq!(out[1].response.as_deref(), Some("no idea"));
}
