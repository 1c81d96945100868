//! Message-level encode and decode: framing, keyed sampling, sentence
//! generation, and recovery.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{extract_sentence_type, generate_stego, Agent, AgentError, FaultPlan, FeedbackConfig, Generation, MockAgent};
use crate::codec::{sentence_message_bits, Codec, CodecError, SampleTrace, SentenceSource};
use crate::crypto::{frame, framed_len, unframe, BitSource, FrameError, StegoKey, HEADER_BITS, NONCE_BYTES};
use crate::distribution::ClassDistribution;
use crate::semantic_space::{OntologyTree, SemType};

pub const STEGO_MAGIC: &str = "# semstego v1";

/// Alternative types tried when a sentence cannot be generated.
pub const DEFAULT_RESAMPLE_BUDGET: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no capacity: the distribution has a single type, so no bits can be embedded")]
    NoCapacity,
    #[error("sentence {sentence}: generation failed for every candidate type: {source}")]
    GenerationFailed {
        sentence: usize,
        #[source]
        source: AgentError,
    },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("truncated message: {detail}")]
    Truncated { detail: String, failed_sentences: Vec<usize> },
    #[error("corrupt message: {0}")]
    Corrupt(String),
    #[error("malformed stego file at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// The three agents a session talks to.
#[derive(Clone)]
pub struct AgentBindings {
    pub generator: Arc<dyn Agent>,
    pub checker: Arc<dyn Agent>,
    pub extractor: Arc<dyn Agent>,
}

impl AgentBindings {
    pub fn uniform(agent: Arc<dyn Agent>) -> Self {
        AgentBindings {
            generator: agent.clone(),
            checker: agent.clone(),
            extractor: agent,
        }
    }

    /// Offline agents. Only generation is affected by `faults`.
    pub fn mock(tree: Arc<OntologyTree>, seed: u64, faults: FaultPlan) -> Self {
        let clean: Arc<dyn Agent> = Arc::new(MockAgent::new(tree.clone(), seed));
        AgentBindings {
            generator: Arc::new(MockAgent::new(tree, seed).with_faults(faults)),
            checker: clean.clone(),
            extractor: clean,
        }
    }
}

/// Everything both ends must share.
#[derive(Clone)]
pub struct Session {
    tree: Arc<OntologyTree>,
    dist: Arc<ClassDistribution>,
    codec: Arc<Codec>,
    key: StegoKey,
    feedback: FeedbackConfig,
    agents: AgentBindings,
    resample_budget: usize,
    verify_extraction: bool,
}

impl Session {
    pub fn new(
        tree: Arc<OntologyTree>,
        dist: Arc<ClassDistribution>,
        key: StegoKey,
        feedback: FeedbackConfig,
        agents: AgentBindings,
    ) -> Self {
        let codec = Arc::new(Codec::new(tree.clone(), dist.clone()));
        Session {
            tree,
            dist,
            codec,
            key,
            feedback,
            agents,
            resample_budget: DEFAULT_RESAMPLE_BUDGET,
            verify_extraction: true,
        }
    }

    /// Reuses an already built codec for the same tree and distribution.
    pub fn with_codec(mut self, codec: Arc<Codec>) -> Self {
        self.codec = codec;
        self
    }

    pub fn with_key(mut self, key: StegoKey) -> Self {
        self.key = key;
        self
    }

    pub fn with_resample_budget(mut self, budget: usize) -> Self {
        self.resample_budget = budget;
        self
    }

    /// When set (the default), an approved sentence must also extract to its
    /// target before it is accepted.
    pub fn with_verify_extraction(mut self, on: bool) -> Self {
        self.verify_extraction = on;
        self
    }

    pub fn tree(&self) -> &Arc<OntologyTree> {
        &self.tree
    }

    pub fn distribution(&self) -> &Arc<ClassDistribution> {
        &self.dist
    }

    pub fn codec(&self) -> &Arc<Codec> {
        &self.codec
    }

    pub fn key(&self) -> &StegoKey {
        &self.key
    }

    pub fn feedback(&self) -> &FeedbackConfig {
        &self.feedback
    }

    pub fn agents(&self) -> &AgentBindings {
        &self.agents
    }
}

/// Stego text plus the metadata sent alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StegoMessage {
    pub nonce: [u8; NONCE_BYTES],
    pub sentences: Vec<String>,
    /// Encoder-side bookkeeping; empty for parsed messages.
    pub bits_embedded: Vec<usize>,
}

impl StegoMessage {
    /// A header comment line, then one sentence per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{STEGO_MAGIC} nonce={} sentences={}\n",
            hex::encode(self.nonce),
            self.sentences.len()
        );
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let malformed = |line: usize, message: &str| PipelineError::Malformed {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
        let rest = header
            .strip_prefix(STEGO_MAGIC)
            .ok_or_else(|| malformed(1, "missing `# semstego v1` header"))?;
        let mut nonce = None;
        let mut count = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("nonce", v)) => {
                    nonce = Some(crate::crypto::parse_nonce(v).map_err(|e| malformed(1, &e.to_string()))?);
                }
                Some(("sentences", v)) => {
                    count = Some(v.parse::<usize>().map_err(|_| malformed(1, "sentence count is not a number"))?);
                }
                _ => return Err(malformed(1, &format!("unknown header field {field:?}"))),
            }
        }
        let nonce = nonce.ok_or_else(|| malformed(1, "missing nonce"))?;
        let count = count.ok_or_else(|| malformed(1, "missing sentence count"))?;
        let body: Vec<&str> = lines.collect();
        if body.len() < count {
            return Err(malformed(body.len() + 2, &format!("expected {count} sentences, found {}", body.len())));
        }
        if let Some(extra) = body[count..].iter().position(|l| !l.trim().is_empty()) {
            return Err(malformed(count + extra + 2, "text after the declared sentences"));
        }
        Ok(StegoMessage {
            nonce,
            sentences: body[..count].iter().map(|s| s.to_string()).collect(),
            bits_embedded: Vec::new(),
        })
    }
}

/// What happened to one sentence during encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub index: usize,
    pub sentence: String,
    pub sem_type: Vec<String>,
    pub entity_count: u32,
    pub bits_embedded: usize,
    /// The type's codebook prefix (not the message bits).
    pub prefix: String,
    pub iterations: u32,
    /// The sampled type could not be generated and a compatible one was used.
    pub substituted: bool,
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub message: StegoMessage,
    pub records: Vec<SentenceRecord>,
    pub traces: Vec<SampleTrace>,
}

fn type_paths(t: &SemType, tree: &OntologyTree) -> Vec<String> {
    t.canonical_sequence(tree)
        .into_iter()
        .map(|id| tree.entity(id).path().to_string())
        .collect()
}

fn generate_checked(session: &Session, target: &SemType, index: usize) -> Result<Generation, AgentError> {
    let g = generate_stego(
        target,
        &session.feedback,
        session.agents.generator.as_ref(),
        session.agents.checker.as_ref(),
        index as u64,
    )?;
    if session.verify_extraction {
        let got = extract_sentence_type(&g.sentence, &session.tree, session.agents.extractor.as_ref(), session.feedback.sampling)?;
        if &got != target {
            return Err(AgentError::GenerationFailed {
                attempts: g.iterations + 1,
                last_hint: "approved sentence extracts to a different type".to_string(),
            });
        }
    }
    Ok(g)
}

/// Embeds `secret` and generates one sentence per sampled type.
///
/// If a type cannot be generated, another type is used whose own embedded
/// prefix matches the sentence's input bits, so the receiver decodes it the
/// same way; later sentences are resampled from the shorter cursor.
pub fn encode_message(secret: &[u8], session: &Session) -> Result<Encoded, PipelineError> {
    if session.dist.support_len() < 2 {
        return Err(PipelineError::NoCapacity);
    }
    let framed = frame(secret)?;
    let key = &session.key;
    let mut traces = session.codec.embed(&framed, key)?;
    let mut done: Vec<(Generation, bool)> = Vec::new();
    loop {
        let start = done.len();
        let results: Vec<Result<Generation, AgentError>> = traces[start..]
            .par_iter()
            .enumerate()
            .map(|(k, t)| generate_checked(session, &t.sem_type, start + k))
            .collect();
        let mut failed = None;
        for (k, r) in results.into_iter().enumerate() {
            match r {
                Ok(g) => done.push((g, false)),
                Err(e @ AgentError::GenerationFailed { .. }) | Err(e @ AgentError::ExtractionFailed { .. }) => {
                    failed = Some((start + k, e));
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let Some((index, error)) = failed else { break };
        log::info!("sentence {index}: generation failed, trying compatible types");

        let cursor: usize = traces[..index].iter().map(|t| t.bits_embedded).sum();
        let (trace, generation) = substitute(session, &framed, cursor, index, &traces[index].sem_type)
            .map_err(|e| e.unwrap_or(PipelineError::GenerationFailed { sentence: index, source: error }))?;
        let next_cursor = cursor + trace.bits_embedded;
        traces.truncate(index);
        traces.push(trace);
        done.push((generation, true));
        if next_cursor < framed.len() {
            let rest = session.codec.embed_from(&framed, key, index as u64 + 1, next_cursor)?;
            traces.extend(rest);
        }
    }

    let records = traces
        .iter()
        .zip(&done)
        .enumerate()
        .map(|(index, (t, (g, substituted)))| SentenceRecord {
            index,
            sentence: g.sentence.clone(),
            sem_type: type_paths(&t.sem_type, &session.tree),
            entity_count: t.sem_type.len(),
            bits_embedded: t.bits_embedded,
            prefix: t.bits.to_string(),
            iterations: g.iterations,
            substituted: *substituted,
        })
        .collect();
    Ok(Encoded {
        message: StegoMessage {
            nonce: *key.nonce(),
            sentences: done.into_iter().map(|(g, _)| g.sentence).collect(),
            bits_embedded: traces.iter().map(|t| t.bits_embedded).collect(),
        },
        records,
        traces,
    })
}

/// Tries up to `resample_budget` types whose prefixes are consistent with
/// the input bits of sentence `index`. Types sharing fewer entities with the
/// ones that already failed go first, then longer prefixes, then likelier
/// types.
fn substitute(
    session: &Session,
    framed: &crate::crypto::BitStream,
    cursor: usize,
    index: usize,
    failed: &SemType,
) -> Result<(SampleTrace, Generation), Option<PipelineError>> {
    let mut src = SentenceSource::new(framed.bits(), cursor, &session.key, index as u64);
    let mut candidates: Vec<(&SemType, &crate::codec::Interval, &[bool])> = session
        .codec
        .codebook()
        .filter(|(t, _, prefix)| *t != failed && prefix.iter().enumerate().all(|(i, &b)| src.bit(i) == b))
        .collect();
    let mut avoid = failed.clone();
    let mut last = None;
    for _ in 0..session.resample_budget {
        let overlap = |t: &SemType| t.iter().filter(|(id, _)| avoid.count(*id) > 0).count();
        let Some(best) = (0..candidates.len()).min_by(|&i, &j| {
            let (a, b) = (&candidates[i], &candidates[j]);
            overlap(a.0)
                .cmp(&overlap(b.0))
                .then_with(|| b.2.len().cmp(&a.2.len()))
                .then_with(|| session.dist.count(b.0).cmp(&session.dist.count(a.0)))
                .then_with(|| a.0.canonical_sequence(&session.tree).cmp(&b.0.canonical_sequence(&session.tree)))
        }) else {
            break;
        };
        let (t, interval, prefix) = candidates.swap_remove(best);
        match generate_checked(session, t, index) {
            Ok(g) => {
                let trace = SampleTrace {
                    sequence: t.canonical_sequence(&session.tree),
                    sem_type: t.clone(),
                    interval: interval.clone(),
                    bits: prefix.to_vec().into(),
                    bits_embedded: prefix.len(),
                    bits_read: prefix.len(),
                };
                return Ok((trace, g));
            }
            Err(e @ AgentError::GenerationFailed { .. }) | Err(e @ AgentError::ExtractionFailed { .. }) => {
                for (id, _) in t.iter() {
                    avoid.add_entity(id, 1);
                }
                last = Some(PipelineError::GenerationFailed { sentence: index, source: e });
            }
            Err(e) => return Err(Some(e.into())),
        }
    }
    Err(last)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SentenceStatus {
    Ok { sem_type: Vec<String>, bits: usize },
    UnknownClass { sem_type: Vec<String> },
    ExtractionFailed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SentenceReport {
    pub index: usize,
    #[serde(flatten)]
    pub status: SentenceStatus,
}

#[derive(Debug)]
pub struct DecodeReport {
    pub sentences: Vec<SentenceReport>,
    pub result: Result<Vec<u8>, PipelineError>,
}

/// Recovers the secret, reporting on every sentence.
pub fn decode_report(stego: &StegoMessage, session: &Session) -> DecodeReport {
    let key = session.key.with_nonce(stego.nonce);
    let per_sentence: Vec<(SentenceReport, Option<Vec<bool>>)> = stego
        .sentences
        .par_iter()
        .enumerate()
        .map(|(index, sentence)| {
            let extracted = extract_sentence_type(sentence, &session.tree, session.agents.extractor.as_ref(), session.feedback.sampling);
            let (status, bits) = match extracted {
                Err(e) => (SentenceStatus::ExtractionFailed { reason: e.to_string() }, None),
                Ok(t) => match session.codec.prefix(&t) {
                    Ok(prefix) => (
                        SentenceStatus::Ok {
                            sem_type: type_paths(&t, &session.tree),
                            bits: prefix.len(),
                        },
                        Some(sentence_message_bits(prefix, &key, index as u64)),
                    ),
                    Err(_) => (
                        SentenceStatus::UnknownClass {
                            sem_type: type_paths(&t, &session.tree),
                        },
                        None,
                    ),
                },
            };
            (SentenceReport { index, status }, bits)
        })
        .collect();

    let failed: Vec<usize> = per_sentence
        .iter()
        .filter(|(_, b)| b.is_none())
        .map(|(r, _)| r.index)
        .collect();
    let reports: Vec<SentenceReport> = per_sentence.iter().map(|(r, _)| r.clone()).collect();
    let chunks: Vec<Vec<bool>> = per_sentence.into_iter().map_while(|(_, b)| b).collect();
    let result = assemble(&chunks, failed);
    DecodeReport {
        sentences: reports,
        result,
    }
}

fn assemble(chunks: &[Vec<bool>], failed: Vec<usize>) -> Result<Vec<u8>, PipelineError> {
    let bits: Vec<bool> = chunks.concat();
    let Some(total) = framed_len(&bits) else {
        return Err(PipelineError::Truncated {
            detail: format!("only {} bits recovered, the header needs {HEADER_BITS}", bits.len()),
            failed_sentences: failed,
        });
    };
    if !failed.is_empty() {
        let mut detail = String::from("sentence(s) ");
        for (i, f) in failed.iter().enumerate() {
            let _ = write!(detail, "{}{f}", if i > 0 { ", " } else { "" });
        }
        let _ = write!(detail, " could not be decoded; recovered {} of {total} framed bits", bits.len());
        return Err(PipelineError::Truncated {
            detail,
            failed_sentences: failed,
        });
    }
    let before_last: usize = chunks[..chunks.len().saturating_sub(1)].iter().map(Vec::len).sum();
    if !chunks.is_empty() && before_last >= total && chunks.len() > 1 {
        return Err(PipelineError::Corrupt(format!(
            "{} sentences carry more bits than the {total}-bit frame needs",
            chunks.len()
        )));
    }
    match unframe(&bits) {
        Ok(bytes) => Ok(bytes),
        Err(e @ FrameError::Truncated { .. }) => Err(PipelineError::Truncated {
            detail: e.to_string(),
            failed_sentences: Vec::new(),
        }),
        Err(e) => Err(PipelineError::Corrupt(e.to_string())),
    }
}

pub fn decode_message(stego: &StegoMessage, session: &Session) -> Result<Vec<u8>, PipelineError> {
    decode_report(stego, session).result
}
