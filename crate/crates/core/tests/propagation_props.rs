mod support;

use proptest::prelude::*;

use dataflow_core::propagation::{propagate_all, DiagramNodeLabels};
use dataflow_core::{extract_tfgs, Assignment, FlowGraphCollection, LabelSet, Model, Term};
use support::oracle::{random_model, GenLimits};

/// Every node with inputs forwards all of them to every output; sources keep
/// their sets but make them unconditional.
fn forwarding_only(mut model: Model) -> Model {
    for b in &mut model.dictionary.behaviors {
        let ins: Vec<String> = b.in_pins.iter().map(|p| p.id.clone()).collect();
        if ins.is_empty() {
            for a in &mut b.assignments {
                if let Assignment::Set { term, .. } = a {
                    *term = Term::Constant(true);
                }
            }
        } else {
            let pins: Vec<&str> = ins.iter().map(String::as_str).collect();
            b.assignments = b.out_pins.iter().map(|o| Assignment::forward(&pins, &o.id)).collect();
        }
    }
    model
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn each_vertex_is_evaluated_once(seed in any::<u64>()) {
        let model = random_model(seed, GenLimits::default());
        let tfgs = extract_tfgs(&model).unwrap();
        for p in propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap() {
            prop_assert_eq!(p.evaluations, p.vertices.len());
        }
    }

    #[test]
    fn graph_order_does_not_matter(seed in any::<u64>()) {
        let model = random_model(seed, GenLimits::default());
        let tfgs = extract_tfgs(&model).unwrap();
        let forward = propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap();
        let reversed = FlowGraphCollection { graphs: tfgs.graphs.iter().rev().cloned().collect() };
        let backward = propagate_all(&reversed, &model, &DiagramNodeLabels(&model)).unwrap();
        for (a, b) in forward.iter().zip(backward.iter().rev()) {
            prop_assert_eq!(&a.vertices, &b.vertices);
        }
    }

    #[test]
    fn runs_are_identical(seed in any::<u64>()) {
        let model = random_model(seed, GenLimits::default());
        let tfgs = extract_tfgs(&model).unwrap();
        let a = propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap();
        let b = propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn forwarding_sink_sees_union_of_sources(seed in any::<u64>()) {
        let model = forwarding_only(random_model(seed, GenLimits::default()));
        let tfgs = extract_tfgs(&model).unwrap();
        let propagated = propagate_all(&tfgs, &model, &DiagramNodeLabels(&model)).unwrap();
        for (tfg, p) in tfgs.iter().zip(&propagated) {
            let mut expected = LabelSet::new();
            for v in &tfg.vertices {
                for e in &v.predecessors {
                    let producer = &p.vertices[e.vertex];
                    if tfg.vertices[e.vertex].predecessors.is_empty() {
                        let flow = model.diagram.flows.iter().find(|f| f.id == e.flow).unwrap();
                        expected.extend(producer.outputs[&flow.source_pin].iter().cloned());
                    }
                }
            }
            let sink = p.sink_vertex();
            let got: LabelSet = sink.incoming.values().flat_map(|f| f.values().flatten().cloned()).collect();
            prop_assert_eq!(got, expected);
        }
    }
}
