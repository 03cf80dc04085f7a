//! Synthetic models and a timing harness for the analysis pipeline.
//!
//! Each [`Dimension`] scales one aspect of a minimal model while everything
//! else stays fixed. Every generated model comes with a constraint that
//! matches every vertex, so the expected number of violations is known in
//! closed form. A run times the whole pipeline from serialized input to
//! violations, repeats it and writes `dimension,size,median_ms,min_ms,max_ms`
//! rows.

use std::fmt;
use std::fmt::Write as _;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use dataflow_core::analysis::{analyze_bytes, AnalysisOptions, InputFormat};
use dataflow_core::io::save_model;
use dataflow_core::{
    Assignment, Behavior, DataFlowDiagram, DictionaryBuilder, Flow, LabelRef, LabelSet, Model, Node, NodeKind, Pin,
    Term,
};
use serde::Serialize;
use thiserror::Error;

/// Matches every vertex of every generated model.
pub const WORST_CASE_CONSTRAINT: &str =
    "constraint Worst: data outgoing Sensitivity.Personal never flows vertex Location.offPremise";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("size must be at least 1")]
    ZeroSize,
    #[error("sizes must be ascending")]
    UnsortedSizes,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("minimum measured time must be a non-negative number")]
    MinTime,
    #[error("unknown dimension `{0}`; expected nodeLabels, labelPropagations, variableActions or parameters")]
    UnknownDimension(String),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Dimension {
    NodeLabels,
    LabelPropagations,
    VariableActions,
    Parameters,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::NodeLabels,
        Dimension::LabelPropagations,
        Dimension::VariableActions,
        Dimension::Parameters,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::NodeLabels => "nodeLabels",
            Dimension::LabelPropagations => "labelPropagations",
            Dimension::VariableActions => "variableActions",
            Dimension::Parameters => "parameters",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| BenchError::UnknownDimension(s.to_string()))
    }
}

/// A generated benchmark input, serialized as the harness will load it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub input: Vec<u8>,
    pub format: InputFormat,
    pub constraint: String,
    pub expected_violations: usize,
}

fn label(t: &str, l: &str) -> LabelRef {
    LabelRef::new(t, l)
}

fn base_dictionary() -> DictionaryBuilder {
    DictionaryBuilder::new()
        .label_type("Sensitivity", &["Personal", "Public"])
        .label_type("Location", &["onPremise", "offPremise"])
}

fn chain_node(id: &str, labels: LabelSet) -> Node {
    Node {
        id: id.to_string(),
        name: id.to_string(),
        kind: NodeKind::Process,
        behavior: format!("b-{id}"),
        labels,
    }
}

/// `n + 1` nodes in a row. The first emits personal data, every other node
/// forwards it, the last one onto a pin nobody reads. `sink_labels` are added
/// to the last node.
fn chain(n: usize, extra_type: Option<(&str, &[&str])>, sink_labels: &[LabelRef]) -> Model {
    let mut dict = base_dictionary();
    if let Some((name, labels)) = extra_type {
        dict.add_label_type(name, labels);
    }
    let off: LabelSet = [label("Location", "offPremise")].into();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut flows = Vec::with_capacity(n);
    for i in 0..=n {
        let id = format!("v{i:06}");
        let mut b = Behavior::new(format!("b-{id}"), format!("step {i}"));
        let out = format!("{id}.out");
        b.out_pins.push(Pin::new(&out, "data"));
        if i == 0 {
            b.assignments.push(Assignment::set(&[], &out, Term::Constant(true), [label("Sensitivity", "Personal")]));
        } else {
            let input = format!("{id}.in");
            b.in_pins.push(Pin::new(&input, "in"));
            b.assignments.push(Assignment::forward(&[&input], &out));
            let prev = format!("v{:06}", i - 1);
            flows.push(Flow {
                id: format!("f{i:06}"),
                name: "data".into(),
                source_pin: format!("{prev}.out"),
                source: prev,
                target: id.clone(),
                target_pin: input,
            });
        }
        dict.add_behavior(b);
        let mut labels = off.clone();
        if i == n {
            labels.extend(sink_labels.iter().cloned());
        }
        nodes.push(chain_node(&id, labels));
    }
    Model::new(dict.build(), DataFlowDiagram { nodes, flows })
}

const ADL_HEADER: &str = "\
labeltype Sensitivity Personal Public
labeltype Location onPremise offPremise
container Cloud labels Location.offPremise
";

/// Builds the minimal model for `dimension` at size `n`.
///
/// * `nodeLabels`: a two-node chain whose sink carries `n` extra labels.
/// * `labelPropagations`: a forwarding chain with `n` flows.
/// * `variableActions`: one operation with `n` set actions on its parameter.
/// * `parameters`: one operation taking and returning `n` parameters.
pub fn generate_model(dimension: Dimension, n: usize) -> Result<Generated, BenchError> {
    if n == 0 {
        return Err(BenchError::ZeroSize);
    }
    let (input, format, expected) = match dimension {
        Dimension::NodeLabels => {
            let names: Vec<String> = (0..n).map(|i| format!("t{i:06}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let sink: Vec<LabelRef> = names.iter().map(|l| label("Tag", l)).collect();
            let model = chain(1, Some(("Tag", &refs)), &sink);
            (save_model(&model).into_bytes(), InputFormat::Json, 2)
        }
        Dimension::LabelPropagations => {
            let model = chain(n, None, &[]);
            (save_model(&model).into_bytes(), InputFormat::Json, n + 1)
        }
        Dimension::VariableActions => {
            let mut text = String::from(ADL_HEADER);
            text.push_str("component Worker\n  operation run(d)\n");
            for _ in 0..n {
                text.push_str("    set d Sensitivity.Personal if TRUE\n");
            }
            text.push_str("    return d\n  end\nend\ndeploy Worker on Cloud\n");
            text.push_str("scenario Main labels Location.offPremise\n  data d Sensitivity.Personal\n  call Worker.run(d)\nend\n");
            // start, calling, entry, the sets, return, returning, end
            (text.into_bytes(), InputFormat::Adl, n + 6)
        }
        Dimension::Parameters => {
            let params: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
            let args: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
            let mut text = String::from(ADL_HEADER);
            let _ = writeln!(text, "component Worker\n  operation run({})", params.join(", "));
            let _ = writeln!(text, "    return {}\n  end\nend\ndeploy Worker on Cloud", params.join(", "));
            text.push_str("scenario Main labels Location.offPremise\n");
            for a in &args {
                let _ = writeln!(text, "  data {a} Sensitivity.Personal");
            }
            let _ = writeln!(text, "  call Worker.run({})\nend", args.join(", "));
            // start, calling, entry, return, returning, end
            (text.into_bytes(), InputFormat::Adl, 6)
        }
    };
    Ok(Generated {
        input,
        format,
        constraint: WORST_CASE_CONSTRAINT.to_string(),
        expected_violations: expected,
    })
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dimension: Dimension,
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    /// Keep repeating past `repetitions` until this much time was measured,
    /// so that sub-millisecond cells still get a stable median.
    pub min_measured_ms: f64,
    pub output: PathBuf,
    /// Optional CSV of every single run.
    pub raw_output: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(dimension: Dimension, sizes: Vec<usize>, output: impl Into<PathBuf>) -> Self {
        Self {
            dimension,
            sizes,
            repetitions: 10,
            min_measured_ms: 200.0,
            output: output.into(),
            raw_output: None,
        }
    }

    pub fn check(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::NoRepetitions);
        }
        if !(self.min_measured_ms.is_finite() && self.min_measured_ms >= 0.0) {
            return Err(BenchError::MinTime);
        }
        if self.sizes.contains(&0) {
            return Err(BenchError::ZeroSize);
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::UnsortedSizes);
        }
        Ok(())
    }
}

/// Timing summary of one cell. A failed cell has no timings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dimension: Dimension,
    pub size: usize,
    #[serde(serialize_with = "fixed_ms")]
    pub median_ms: Option<f64>,
    #[serde(serialize_with = "fixed_ms")]
    pub min_ms: Option<f64>,
    #[serde(serialize_with = "fixed_ms")]
    pub max_ms: Option<f64>,
    #[serde(skip)]
    pub violations: Option<usize>,
    #[serde(skip)]
    pub error: Option<String>,
}

impl BenchRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RawRow {
    dimension: Dimension,
    size: usize,
    run: usize,
    #[serde(serialize_with = "fixed_ms")]
    ms: Option<f64>,
}

/// Microsecond resolution; empty for failed cells.
fn fixed_ms<S: serde::Serializer>(ms: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match ms {
        Some(v) => s.serialize_str(&format!("{v:.3}")),
        None => s.serialize_str(""),
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Runs the full pipeline on `generated` once and returns wall time in
/// milliseconds plus the violation count.
pub fn time_once(generated: &Generated) -> Result<(f64, usize), String> {
    let start = Instant::now();
    let analysis = analyze_bytes(
        &generated.input,
        generated.format,
        std::slice::from_ref(&generated.constraint),
        AnalysisOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok((ms, analysis.report.summary.violations))
}

/// Upper bound on runs per cell when `min_measured_ms` asks for more.
const MAX_RUNS: usize = 10_000;

fn run_cell(dimension: Dimension, size: usize, config: &BenchConfig, raw: &mut Vec<RawRow>) -> BenchRow {
    let mut row = BenchRow {
        dimension,
        size,
        median_ms: None,
        min_ms: None,
        max_ms: None,
        violations: None,
        error: None,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<(Vec<f64>, usize), String> {
        let generated = generate_model(dimension, size).map_err(|e| e.to_string())?;
        // One untimed run so caches and the allocator settle.
        time_once(&generated)?;
        let mut times = Vec::with_capacity(config.repetitions);
        let mut count = 0;
        let mut measured = 0.0;
        while times.len() < config.repetitions || (measured < config.min_measured_ms && times.len() < MAX_RUNS) {
            let (ms, violations) = time_once(&generated)?;
            if violations != generated.expected_violations {
                return Err(format!(
                    "expected {} violations, found {violations}",
                    generated.expected_violations
                ));
            }
            count = violations;
            measured += ms;
            times.push(ms);
        }
        Ok((times, count))
    }));
    match outcome {
        Ok(Ok((times, count))) => {
            raw.extend(times.iter().enumerate().map(|(run, &ms)| RawRow {
                dimension,
                size,
                run,
                ms: Some(ms),
            }));
            row.median_ms = Some(median(&times));
            row.min_ms = times.iter().copied().reduce(f64::min);
            row.max_ms = times.iter().copied().reduce(f64::max);
            row.violations = Some(count);
        }
        Ok(Err(e)) => row.error = Some(e),
        Err(_) => row.error = Some("analysis panicked".into()),
    }
    row
}

/// Writes `rows` as CSV to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
fn write_csv_atomic<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let err = |source: io::Error| BenchError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file_mut());
        for r in rows {
            w.serialize(r).map_err(|e| err(e.into()))?;
        }
        w.flush().map_err(err)?;
    }
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Benchmarks every size in order and writes the CSV. Failed cells are kept
/// as rows without timings.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    config.check()?;
    let mut rows = Vec::with_capacity(config.sizes.len());
    let mut raw = Vec::new();
    for &size in &config.sizes {
        rows.push(run_cell(config.dimension, size, config, &mut raw));
    }
    write_csv_atomic(&config.output, &rows)?;
    if let Some(path) = &config.raw_output {
        write_csv_atomic(path, &raw)?;
    }
    Ok(rows)
}

/// Slope of the least-squares line through `(ln size, ln median)` of the
/// successful rows, i.e. `k` in `time ~ size^k`.
pub fn growth_exponent(rows: &[BenchRow]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some(((r.size as f64).ln(), r.median_ms?.max(1e-6).ln())))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
