use dataflow_bench::{generate_model, run_bench, BenchConfig, Dimension};
use dataflow_core::analysis::{analyze_bytes, load_input, AnalysisOptions};
use dataflow_core::validate_model;

fn violations(d: Dimension, n: usize) -> (usize, usize) {
    let g = generate_model(d, n).unwrap();
    let a = analyze_bytes(&g.input, g.format, &[g.constraint.as_str()], AnalysisOptions::default()).unwrap();
    (a.report.summary.violations, g.expected_violations)
}

#[test]
fn every_dimension_hits_every_vertex() {
    for d in Dimension::ALL {
        for n in [1, 2, 7, 40] {
            let (found, expected) = violations(d, n);
            assert_eq!(found, expected, "{d} at {n}");
        }
    }
}

#[test]
fn propagation_chain_violations_grow_linearly() {
    assert_eq!(violations(Dimension::LabelPropagations, 100), (101, 101));
}

#[test]
fn generated_models_validate() {
    for d in Dimension::ALL {
        let g = generate_model(d, 5).unwrap();
        let loaded = load_input(&g.input, g.format).unwrap();
        let report = validate_model(&loaded.model.dictionary, &loaded.model.diagram);
        assert!(!report.has_errors(), "{d}: {:?}", report.codes());
    }
}

#[test]
fn zero_size_is_rejected() {
    assert!(generate_model(Dimension::Parameters, 0).is_err());
}

#[test]
fn run_writes_summary_and_raw_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = BenchConfig::new(Dimension::LabelPropagations, vec![1, 10, 50], dir.path().join("out.csv"));
    config.repetitions = 3;
    config.min_measured_ms = 0.0;
    config.raw_output = Some(dir.path().join("raw.csv"));
    let rows = run_bench(&config).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| !r.failed()));
    for r in &rows {
        let (min, med, max) = (r.min_ms.unwrap(), r.median_ms.unwrap(), r.max_ms.unwrap());
        assert!(min <= med && med <= max);
    }
    let summary = std::fs::read_to_string(&config.output).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("dimension,size,median_ms,min_ms,max_ms"));
    assert_eq!(lines.count(), 3);
    assert!(summary.contains("labelPropagations,10,"));
    let raw = std::fs::read_to_string(config.raw_output.unwrap()).unwrap();
    assert_eq!(raw.lines().count(), 1 + 9);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}

#[test]
fn short_cells_repeat_until_min_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = BenchConfig::new(Dimension::NodeLabels, vec![1], dir.path().join("out.csv"));
    config.repetitions = 1;
    config.min_measured_ms = 20.0;
    config.raw_output = Some(dir.path().join("raw.csv"));
    run_bench(&config).unwrap();
    let raw = std::fs::read_to_string(config.raw_output.unwrap()).unwrap();
    let runs = raw.lines().count() - 1;
    let total: f64 = raw.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!(runs > 1);
    // Rounded to microseconds per run.
    assert!(total >= 20.0 - runs as f64 * 0.001, "{runs} runs, {total} ms");
}
