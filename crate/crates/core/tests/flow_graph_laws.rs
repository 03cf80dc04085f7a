mod support;

use dataflow_core::propagation::{propagate_all, DiagramNodeLabels};
use dataflow_core::{extract_tfgs, validate_model, LabelRef};
use support::shapes::diamond_chain;

#[test]
fn k_merges_give_two_to_the_k_graphs() {
    for k in 0..=6 {
        let model = diamond_chain(k);
        assert!(!validate_model(&model.dictionary, &model.diagram).has_errors());
        let tfgs = extract_tfgs(&model).unwrap();
        assert_eq!(tfgs.len(), 1 << k, "k = {k}");
        for g in tfgs.iter() {
            // src, sink and per diamond one branch plus the merge
            assert_eq!(g.vertices.len(), 2 + 2 * k);
        }
    }
}

#[test]
fn every_diamond_path_carries_the_source_label() {
    let model = diamond_chain(3);
    let tfgs = extract_tfgs(&model).unwrap();
    for p in propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap() {
        let sink = p.sink_vertex();
        assert!(sink.incoming["sink.in"]["d"].contains(&LabelRef::new("S", "p")));
    }
}
