use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use semstego_core::agents::{ChatClient, LiveAgent};
use semstego_core::attacks_metrics::{
    attack as perturb, attack_preserving, decoding_success_rate, distinct_n, embedding_rate, mission_success_rate,
    overall_rate, AttackSpec, DistinctN, DsrCase, EvalReport, IterationHistogram,
};
use semstego_core::bundled;
use semstego_core::codec::{Codec, CodecError};
use semstego_core::crypto::{random_nonce, BitStream, StegoKey, NONCE_BYTES};
use semstego_core::distribution::{corpus_records, ClassDistribution};
use semstego_core::pipeline::{
    decode_report, encode_message, AgentBindings, PipelineError, SentenceRecord, SentenceStatus, Session, StegoMessage,
};
use semstego_core::semantic_space::OntologyTree;

use crate::config::{Config, Mode};
use crate::{AttackArgs, CliError};

pub const TRACE_VERSION: u32 = 1;

/// Encoder ground truth. Holds no key or message bits.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    version: u32,
    seed: u64,
    nonce: String,
    sentences: Vec<SentenceRecord>,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read(path)?).map_err(|_| CliError::input(format!("{}: not valid UTF-8", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_tree(cfg: &Config, path: Option<&Path>) -> Result<OntologyTree, CliError> {
    match path.or(cfg.tree_path.as_deref()) {
        Some(p) => OntologyTree::load(p).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => Ok(bundled::tree()),
    }
}

fn load_distribution(cfg: &Config, tree: &OntologyTree) -> Result<ClassDistribution, CliError> {
    match cfg.distribution_path.as_deref() {
        Some(p) => ClassDistribution::load(p, tree).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => Ok(bundled::distribution(tree)),
    }
}

fn bindings(cfg: &Config, tree: &Arc<OntologyTree>) -> Result<AgentBindings, CliError> {
    match cfg.mode {
        Mode::Mock => Ok(AgentBindings::mock(tree.clone(), cfg.seed, cfg.faults.clone())),
        Mode::Live => {
            let endpoint = cfg.endpoint.clone().ok_or_else(|| CliError::agent("live mode needs an endpoint"))?;
            let client = ChatClient::from_env(endpoint).map_err(|e| CliError::agent(e.to_string()))?;
            Ok(AgentBindings::uniform(Arc::new(LiveAgent::new(Arc::new(client), tree.clone()))))
        }
    }
}

fn pipeline_error(e: PipelineError) -> CliError {
    let message = e.to_string();
    match e {
        PipelineError::NoCapacity | PipelineError::Codec(CodecError::Stalled(_)) => CliError::capacity(message),
        PipelineError::GenerationFailed { .. } | PipelineError::Agent(_) => CliError::agent(message),
        PipelineError::Truncated { .. } | PipelineError::Corrupt(_) => CliError::corrupt(message),
        PipelineError::Malformed { .. } | PipelineError::Frame(_) | PipelineError::Codec(_) => CliError::input(message),
    }
}

struct Model {
    tree: Arc<OntologyTree>,
    dist: Arc<ClassDistribution>,
}

fn model(cfg: &Config) -> Result<Model, CliError> {
    let tree = Arc::new(load_tree(cfg, None)?);
    let dist = Arc::new(load_distribution(cfg, &tree)?);
    Ok(Model { tree, dist })
}

fn session(cfg: &Config, model: &Model, key: StegoKey, agents: AgentBindings) -> Session {
    Session::new(model.tree.clone(), model.dist.clone(), key, cfg.feedback.clone(), agents)
        .with_resample_budget(cfg.resample_budget)
        .with_verify_extraction(cfg.verify_extraction)
}

pub fn build_dist(
    cfg: &Config,
    corpus: &Path,
    tree_path: Option<&Path>,
    out: &Path,
    max_type_len: u32,
) -> Result<(), CliError> {
    let tree = load_tree(cfg, tree_path)?;
    let bytes = read(corpus)?;
    let mut text = String::with_capacity(bytes.len());
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line)
            .map_err(|_| CliError::input(format!("{}:{}: line is not valid UTF-8", corpus.display(), i + 1)))?;
        text.push_str(line.trim_end_matches('\r'));
        text.push('\n');
    }
    let records = corpus_records(&text, &tree);
    let dist = ClassDistribution::from_records(&records, &tree, max_type_len)
        .map_err(|e| CliError::input(format!("{}: {e}", corpus.display())))?;
    dist.save(out, &tree).map_err(|e| CliError::input(e.to_string()))?;
    let empty = records.iter().filter(|t| t.is_empty()).count();
    println!(
        "{} sentences ({} without entities), {} types, entropy {:.4} bits",
        records.len(),
        empty,
        dist.support_len(),
        dist.entropy_bits()
    );
    Ok(())
}

pub fn encode(cfg: &Config, input: &Path, out: &Path, trace: Option<&Path>) -> Result<(), CliError> {
    let message = read(input)?;
    let model = model(cfg)?;
    let agents = bindings(cfg, &model.tree)?;
    let base = cfg.key([0; NONCE_BYTES])?;
    let nonce = match cfg.nonce()? {
        Some(n) => n,
        None if cfg.mode == Mode::Mock => base.derive_nonce(cfg.seed, &message),
        None => random_nonce(),
    };
    let session = session(cfg, &model, base.with_nonce(nonce), agents);
    let encoded = encode_message(&message, &session).map_err(pipeline_error)?;
    write(out, encoded.message.to_text())?;
    if let Some(path) = trace {
        let file = TraceFile {
            version: TRACE_VERSION,
            seed: cfg.seed,
            nonce: hex::encode(nonce),
            sentences: encoded.records.clone(),
        };
        write(path, serde_json::to_string_pretty(&file).expect("trace serializes") + "\n")?;
    }
    let n = encoded.message.sentences.len();
    let bits: usize = encoded.message.bits_embedded.iter().sum();
    println!(
        "{} bytes in {n} sentences, {bits} bits ({:.3} bits/sentence)",
        message.len(),
        bits as f64 / n as f64
    );
    let substituted = encoded.records.iter().filter(|r| r.substituted).count();
    if substituted > 0 {
        println!("{substituted} sentence(s) used a substitute type after generation failed");
    }
    Ok(())
}

pub fn decode(cfg: &Config, input: &Path, out: &Path) -> Result<(), CliError> {
    let stego = StegoMessage::parse(&read_text(input)?).map_err(pipeline_error)?;
    let model = model(cfg)?;
    let agents = bindings(cfg, &model.tree)?;
    let session = session(cfg, &model, cfg.key(stego.nonce)?, agents);
    let report = decode_report(&stego, &session);
    let bits: usize = report
        .sentences
        .iter()
        .map(|r| match r.status {
            SentenceStatus::Ok { bits, .. } => bits,
            _ => 0,
        })
        .sum();
    match report.result {
        Ok(bytes) => {
            write(out, &bytes)?;
            let n = stego.sentences.len();
            println!(
                "{} bytes from {n} sentences ({:.3} bits/sentence)",
                bytes.len(),
                bits as f64 / n.max(1) as f64
            );
            Ok(())
        }
        Err(e) => {
            for r in &report.sentences {
                match &r.status {
                    SentenceStatus::Ok { .. } => {}
                    SentenceStatus::UnknownClass { sem_type } => {
                        eprintln!("sentence {}: unknown class {{{}}}", r.index, sem_type.join(", "))
                    }
                    SentenceStatus::ExtractionFailed { reason } => eprintln!("sentence {}: {reason}", r.index),
                }
            }
            Err(pipeline_error(e))
        }
    }
}

fn attack_spec(cfg: &Config, args: &AttackArgs, kind_required: bool) -> Result<Option<(AttackSpec, bool)>, CliError> {
    let kind = match args.kind {
        Some(k) => k,
        None if kind_required => cfg.attack.kind,
        None => return Ok(None),
    };
    let count = args.count.unwrap_or(cfg.attack.count);
    let spec = AttackSpec::new(kind, count, cfg.seed).map_err(|e| CliError::input(e.to_string()))?;
    Ok(Some((spec, args.preserve_entities || cfg.attack.preserve_entities)))
}

fn attack_all(sentences: &[String], spec: &AttackSpec, preserve: bool, tree: &OntologyTree) -> Vec<(String, bool)> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let spec = spec.for_sentence(i as u64);
            let a = if preserve {
                attack_preserving(s, &spec, tree)
            } else {
                perturb(s, &spec)
            };
            (a.sentence, a.degenerate)
        })
        .collect()
}

pub fn attack(cfg: &Config, input: &Path, out: &Path, args: &AttackArgs) -> Result<(), CliError> {
    let stego = StegoMessage::parse(&read_text(input)?).map_err(pipeline_error)?;
    let tree = load_tree(cfg, None)?;
    let (spec, preserve) = attack_spec(cfg, args, true)?.expect("kind required");
    let attacked = attack_all(&stego.sentences, &spec, preserve, &tree);
    let degenerate = attacked.iter().filter(|(_, d)| *d).count();
    let changed = attacked.iter().zip(&stego.sentences).filter(|((a, _), s)| a != *s).count();
    let out_msg = StegoMessage {
        nonce: stego.nonce,
        sentences: attacked.into_iter().map(|(s, _)| s).collect(),
        bits_embedded: Vec::new(),
    };
    write(out, out_msg.to_text())?;
    println!(
        "{} x{} (seed {}): {changed} of {} sentences changed, {degenerate} could not take every perturbation",
        spec.kind,
        spec.count,
        spec.seed,
        stego.sentences.len()
    );
    Ok(())
}

pub fn eval(cfg: &Config, run_dir: &Path, args: &AttackArgs) -> Result<(), CliError> {
    let stego_path = run_dir.join("stego.txt");
    let trace_path = run_dir.join("trace.json");
    for p in [&stego_path, &trace_path] {
        if !p.exists() {
            return Err(CliError::input(format!("missing ground truth: {} not found", p.display())));
        }
    }
    let stego = StegoMessage::parse(&read_text(&stego_path)?).map_err(pipeline_error)?;
    let trace: TraceFile = serde_json::from_str(&read_text(&trace_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", trace_path.display())))?;
    if trace.sentences.len() != stego.sentences.len() {
        return Err(CliError::input(format!(
            "trace has {} sentences but the stego file has {}",
            trace.sentences.len(),
            stego.sentences.len()
        )));
    }
    let model = model(cfg)?;
    let attack = attack_spec(cfg, args, false)?;
    let sentences: Vec<String> = match &attack {
        Some((spec, preserve)) => attack_all(&stego.sentences, spec, *preserve, &model.tree)
            .into_iter()
            .map(|(s, _)| s)
            .collect(),
        None => stego.sentences.clone(),
    };
    let mut cases = Vec::with_capacity(sentences.len());
    for (record, sentence) in trace.sentences.iter().zip(sentences) {
        let expected: BitStream = record
            .prefix
            .parse()
            .map_err(|e| CliError::input(format!("{}: sentence {}: {e}", trace_path.display(), record.index)))?;
        cases.push(DsrCase {
            type_len: record.entity_count,
            expected: expected.bits().to_vec(),
            sentence,
        });
    }
    let codec = Codec::new(model.tree.clone(), model.dist.clone());
    let extractor = bindings(cfg, &model.tree)?.extractor;
    let buckets = decoding_success_rate(&cases, &codec, extractor.as_ref(), cfg.feedback.sampling);
    let iterations: Vec<u32> = trace.sentences.iter().map(|r| r.iterations).collect();
    let bits: Vec<usize> = trace.sentences.iter().map(|r| r.bits_embedded).collect();
    let report = EvalReport {
        seed: cfg.seed,
        attack: attack.map(|(s, _)| s),
        preserve_entities: attack.is_some_and(|(_, p)| p),
        sentences: stego.sentences.len(),
        overall_dsr: overall_rate(&buckets),
        decoding_success: buckets,
        embedding: embedding_rate(&bits, &stego.sentences),
        mission_success_rate: mission_success_rate(&iterations),
        distinct: (1..=3)
            .map(|n| DistinctN {
                n,
                value: distinct_n(&stego.sentences, n).ok(),
            })
            .collect(),
        iterations: Some(iterations.iter().copied().collect::<IterationHistogram>()),
    };
    write(&run_dir.join("report.json"), report.to_json() + "\n")?;
    let table = report.render_table();
    write(&run_dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}
