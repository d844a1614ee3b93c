use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use halluspan_core::baselines::{detect, DetectorConfig, DetectorKind};
use halluspan_core::jsonl::{self, LineOutcome};
use halluspan_core::labels::{aggregate_annotations, decode_spans, soft_spans_from_vector, AnnotationSet};
use halluspan_core::metrics::score_dataset;
use halluspan_core::record::validate_prediction;
use halluspan_core::synthgen::{self, GenSpec, PerturbationMix};
use halluspan_core::{align_tokens, DataError, DecodeParams, HardSpan, Prediction, Record, Validate};
use serde::Serialize;
use serde_json::json;

use crate::{Baseline, Command, DecodeArgs, FileKind, Format};

#[derive(Debug)]
pub enum Failure {
    /// Input failed validation or could not be processed (1).
    Invalid(String),
    /// Diagnostics were already written to stderr (1).
    Reported,
    /// Bad flag combination (2).
    Usage(String),
    /// File could not be read or written (3).
    Io(String),
    /// Our own output broke an invariant (4).
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) | Failure::Reported => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Usage(m) | Failure::Io(m) | Failure::Internal(m) => f.write_str(m),
            Failure::Reported => f.write_str("validation failed"),
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(e) => Failure::Io(e.to_string()),
            DataError::Unserializable { .. } => Failure::Internal(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn output(out: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize + Validate>(items: &[T], out: Option<&PathBuf>) -> Result<()> {
    jsonl::write(items, output(out)?).map_err(Failure::from)
}

fn read_records(path: &Path) -> Result<Vec<Record>> {
    Ok(jsonl::parse_records(open(path)?)?)
}

impl DecodeArgs {
    fn params(self) -> Result<DecodeParams> {
        let p = DecodeParams::new(self.theta, self.min_len, self.merge_gap);
        if !p.is_valid() {
            return Err(Failure::Usage("--theta must lie in [0, 1] and --min-len must be at least 1".into()));
        }
        Ok(p)
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { input, kind } => validate(&input, kind),
        Command::Align { input, text, tokens } => align(input.as_deref(), text, tokens),
        Command::Aggregate { input, decode, out } => aggregate(&input, decode.params()?, out.as_ref()),
        Command::Detect { input, baseline, seed, decode, out } => {
            let kind = match (baseline, seed) {
                (Baseline::None, _) => DetectorKind::None,
                (Baseline::All, _) => DetectorKind::All,
                (Baseline::Logit, _) => DetectorKind::Logit,
                (Baseline::Random, Some(seed)) => DetectorKind::Random { seed },
                (Baseline::Random, None) => return Err(Failure::Usage("--baseline random requires --seed".into())),
            };
            run_detect(&input, DetectorConfig::new(kind).with_decode(decode.params()?), out.as_ref())
        }
        Command::Synth { seeds, n, seed, mix, plant_logprobs, out } => {
            synth(seeds.as_deref(), n, seed, mix, plant_logprobs, out.as_ref())
        }
        Command::Score { pred, gold, decode, format } => score(&pred, &gold, decode.params()?, format),
    }
}

fn report<T: Validate>(outcomes: &[LineOutcome<T>]) -> usize {
    let mut errors = 0;
    let mut seen = HashSet::new();
    for outcome in outcomes {
        match outcome {
            LineOutcome::Malformed { line, reason } => {
                eprintln!("line {line}: error [malformed-json] {reason}");
                errors += 1;
            }
            LineOutcome::Parsed { line, value, diagnostics } => {
                for d in diagnostics {
                    eprintln!("line {line}: id {:?}: {d}", value.id());
                    errors += usize::from(d.is_error());
                }
                if !seen.insert(value.id().to_owned()) {
                    eprintln!(
                        "line {line}: id {:?}: error [duplicate-id] id already used earlier in the file",
                        value.id()
                    );
                    errors += 1;
                }
            }
        }
    }
    errors
}

fn validate(input: &Path, kind: FileKind) -> Result<()> {
    let reader = open(input)?;
    let io_err = |e: io::Error| Failure::Io(format!("{}: {e}", input.display()));
    let errors = match kind {
        FileKind::Records => report(&jsonl::scan::<Record, _>(reader).map_err(io_err)?),
        FileKind::Predictions => report(&jsonl::scan::<Prediction, _>(reader).map_err(io_err)?),
    };
    if errors > 0 {
        Err(Failure::Reported)
    } else {
        Ok(())
    }
}

fn align(input: Option<&Path>, text: Option<String>, tokens: Option<String>) -> Result<()> {
    let records = match (input, text, tokens) {
        (Some(path), _, _) => read_records(path)?,
        (None, Some(text), Some(tokens)) => {
            let tokens: Vec<String> = serde_json::from_str(&tokens)
                .map_err(|e| Failure::Usage(format!("--tokens must be a JSON array of strings: {e}")))?;
            vec![Record::new("text", text, tokens)]
        }
        _ => return Err(Failure::Usage("give a record file or both --text and --tokens".into())),
    };
    let mut out = output(None)?;
    let write_err = |e: io::Error| Failure::Io(e.to_string());
    let mut failed = false;
    for r in &records {
        match align_tokens(&r.model_output_text, &r.output_tokens) {
            Ok(a) => {
                let line = json!({ "id": r.id, "ranges": a.ranges, "tokens": r.output_tokens });
                writeln!(out, "{line}").map_err(write_err)?;
            }
            Err(e) => {
                eprintln!("id {:?}: error [alignment] {e}", r.id);
                failed = true;
            }
        }
    }
    out.flush().map_err(write_err)?;
    if failed {
        Err(Failure::Reported)
    } else {
        Ok(())
    }
}

fn aggregate(input: &Path, params: DecodeParams, out: Option<&PathBuf>) -> Result<()> {
    let mut records = read_records(input)?;
    for r in &mut records {
        let raw = r
            .extra
            .get("annotations")
            .ok_or_else(|| Failure::Invalid(format!("record {:?} has no \"annotations\" field", r.id)))?;
        let annotators: Vec<Vec<HardSpan>> = serde_json::from_value(raw.clone())
            .map_err(|e| Failure::Invalid(format!("record {:?}: bad annotations: {e}", r.id)))?;
        let set = AnnotationSet::new(annotators, r.text_len())
            .map_err(|e| Failure::Invalid(format!("record {:?}: {e}", r.id)))?;
        let v = aggregate_annotations::<f64>(&set);
        r.hard_labels = Some(decode_spans(&v, &params));
        r.soft_labels = Some(soft_spans_from_vector(&v));
    }
    emit(&records, out)
}

fn run_detect(input: &Path, config: DetectorConfig, out: Option<&PathBuf>) -> Result<()> {
    let records = read_records(input)?;
    let mut preds = Vec::with_capacity(records.len());
    for r in &records {
        let p = detect(r, &config).map_err(|e| Failure::Invalid(e.to_string()))?;
        if let Some(d) = validate_prediction(&p, Some(r.text_len())).into_iter().find(|d| d.is_error()) {
            return Err(Failure::Internal(format!("detector produced an invalid prediction for {:?}: {d}", r.id)));
        }
        preds.push(p);
    }
    emit(&preds, out)
}

fn synth(
    seeds: Option<&Path>,
    n: usize,
    seed: u64,
    mix: Option<Vec<f64>>,
    plant: bool,
    out: Option<&PathBuf>,
) -> Result<()> {
    let facts = match seeds {
        Some(path) => synthgen::load_seed_facts(open(path)?).map_err(|e| Failure::Invalid(e.to_string()))?,
        None => synthgen::bundled_seed_facts(),
    };
    let mut spec = GenSpec { n_records: n, rng_seed: seed, ..GenSpec::default() };
    if let Some(w) = mix {
        if w.len() != 4 {
            return Err(Failure::Usage("--mix takes exactly four comma-separated weights".into()));
        }
        spec.mix = PerturbationMix {
            entity_swap: w[0],
            number_perturb: w[1],
            negation_flip: w[2],
            overgeneration_append: w[3],
        };
        spec.mix.check().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut records = synthgen::generate(&facts, &spec).map_err(|e| Failure::Invalid(e.to_string()))?;
    if plant {
        synthgen::plant_logprobs(&mut records, seed).map_err(|e| Failure::Internal(e.to_string()))?;
    }
    emit(&records, out)
}

fn score(pred: &Path, gold: &Path, params: DecodeParams, format: Format) -> Result<()> {
    let preds = jsonl::parse_predictions(open(pred)?)?;
    let golds = read_records(gold)?;
    let report = score_dataset(&preds, &golds, &params).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))? + "\n",
        Format::Text => report.render_text(),
    };
    let mut out = output(None)?;
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Io(e.to_string()))
}
