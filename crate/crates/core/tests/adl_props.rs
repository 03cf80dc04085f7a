use std::collections::BTreeSet;
use std::fmt::Write;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dataflow_core::adl::{parse_adl, transform_to_dfd, AdlNodeLabels, Owner, Role};
use dataflow_core::propagation::propagate_all;
use dataflow_core::{extract_tfgs, validate_model, NodeKind};

#[derive(Debug, Clone)]
enum Act {
    /// Sets `a` when true, a fresh `b` otherwise.
    Set(bool),
    Call(usize),
    Branch(Vec<Vec<Act>>),
}

#[derive(Debug)]
struct Program {
    /// Body of `C{i}.op(a)` and whether it ends in `return a`.
    components: Vec<(Vec<Act>, bool)>,
    scenario: Vec<Act>,
}

fn random_acts(rng: &mut ChaCha8Rng, callable: std::ops::Range<usize>, depth: u32) -> Vec<Act> {
    (0..rng.gen_range(0..=3))
        .map(|_| match rng.gen_range(0..4) {
            0 if depth > 0 => Act::Branch((0..rng.gen_range(2..=3)).map(|_| {
                let mut alt = random_acts(rng, callable.clone(), depth - 1);
                if alt.is_empty() {
                    alt.push(Act::Set(true));
                }
                alt
            }).collect()),
            1 if !callable.is_empty() => Act::Call(rng.gen_range(callable.clone())),
            _ => Act::Set(rng.gen_bool(0.7)),
        })
        .collect()
}

/// Random program whose scenario has at most 256 distinct paths.
fn random_program(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = rng.gen_range(1..=3);
        let components = (0..m).map(|i| (random_acts(&mut rng, i + 1..m, 2), rng.gen_bool(0.5))).collect();
        let mut scenario = random_acts(&mut rng, 0..m, 2);
        scenario.push(Act::Call(0));
        let p = Program { components, scenario };
        if paths(&p, &p.scenario, true) <= 256 {
            return p;
        }
    }
}

/// Distinct ways through `acts`. Unless `all` is set, only callees that
/// return their data back to the caller count.
fn paths(p: &Program, acts: &[Act], all: bool) -> usize {
    acts.iter()
        .map(|a| match a {
            Act::Set(_) => 1,
            Act::Call(j) => {
                let (body, returns) = &p.components[*j];
                if all || *returns {
                    paths(p, body, all)
                } else {
                    1
                }
            }
            Act::Branch(alts) => alts.iter().map(|alt| paths(p, alt, all)).sum(),
        })
        .product()
}

fn render_acts(acts: &[Act], indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    for a in acts {
        match a {
            Act::Set(true) => writeln!(out, "{pad}set a S.p if S.q").unwrap(),
            Act::Set(false) => writeln!(out, "{pad}set b S.q").unwrap(),
            Act::Call(j) => writeln!(out, "{pad}call C{j}.op(a)").unwrap(),
            Act::Branch(alts) => {
                writeln!(out, "{pad}branch").unwrap();
                for (k, alt) in alts.iter().enumerate() {
                    if k > 0 {
                        writeln!(out, "{pad}or").unwrap();
                    }
                    render_acts(alt, indent + 2, out);
                }
                writeln!(out, "{pad}end").unwrap();
            }
        }
    }
}

fn render(p: &Program) -> String {
    let mut out = String::from("labeltype S p q\ncontainer K0 labels S.p\ncontainer K1 labels S.q\n");
    for (i, (body, returns)) in p.components.iter().enumerate() {
        let kind = if i % 2 == 1 { " kind store" } else { "" };
        writeln!(out, "component C{i}{kind}\n  operation op(a)").unwrap();
        render_acts(body, 4, &mut out);
        if *returns {
            out.push_str("    return a\n");
        }
        out.push_str("  end\nend\n");
        writeln!(out, "deploy C{i} on K{}", i % 2).unwrap();
    }
    out.push_str("scenario Sc labels S.q\n  data a S.p\n");
    render_acts(&p.scenario, 2, &mut out);
    out.push_str("end\n");
    out
}

/// One node per action, two more per call, plus start and end.
fn expected_nodes(p: &Program, acts: &[Act]) -> usize {
    acts.iter()
        .map(|a| match a {
            Act::Set(_) => 1,
            Act::Call(j) => {
                let (body, returns) = &p.components[*j];
                3 + expected_nodes(p, body) + usize::from(*returns)
            }
            Act::Branch(alts) => 1 + alts.iter().map(|alt| expected_nodes(p, alt)).sum::<usize>(),
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn transformation_shape_and_trace(seed in any::<u64>()) {
        let program = random_program(seed);
        let text = render(&program);
        let arch = parse_adl(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let t = transform_to_dfd(&arch);
        let nodes = &t.model.diagram.nodes;
        prop_assert_eq!(nodes.len(), 2 + expected_nodes(&program, &program.scenario));

        let report = validate_model(&t.model.dictionary, &t.model.diagram);
        prop_assert!(!report.has_errors(), "{:?}", report);

        // Total and injective.
        prop_assert_eq!(t.trace.len(), nodes.len());
        prop_assert!(nodes.iter().all(|n| t.trace.contains_key(&n.id)));
        let targets: BTreeSet<_> = t.trace.values().collect();
        prop_assert_eq!(targets.len(), t.trace.len());

        // Nodes come from actions, call sites, entries and the scenario only.
        for n in nodes {
            let target = &t.trace[&n.id];
            match target.role {
                Role::Start | Role::End => prop_assert_eq!(&target.element, "Sc"),
                Role::Entry => prop_assert!(target.element.ends_with(".op")),
                _ => prop_assert!(target.element.contains('#')),
            }
            let expected_kind = match &target.owner {
                Owner::Scenario(_) => NodeKind::External,
                Owner::Component(c) if c == "C1" => NodeKind::Store,
                Owner::Component(_) => NodeKind::Process,
            };
            prop_assert_eq!(n.kind, expected_kind);
        }

        let tfgs = extract_tfgs(&t.model).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let end = nodes.iter().find(|n| t.trace[&n.id].role == Role::End).unwrap();
        let ending = tfgs.iter().filter(|g| g.sink_vertex().node == end.id).count();
        prop_assert_eq!(ending, paths(&program, &program.scenario, false));

        let labels = AdlNodeLabels { architecture: &arch, trace: &t.trace };
        prop_assert!(propagate_all(&tfgs, &t.model, &labels).is_ok());
    }
}
