//! Arithmetic coding over the ontology tree: bits in, entity types out, and
//! back again.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::crypto::{BitSource, BitStream, Keystream, StegoKey};
use crate::distribution::{ClassDistribution, CodingTable, DistributionError, NodeId};
use crate::interval::Scaled;
use crate::semantic_space::{EntityId, OntologyTree, SemType};

pub use crate::interval::Interval;

/// Bits the sampler may read ahead before giving up on a single step.
pub const MAX_LOOKAHEAD: usize = 4096;

/// Sentences [`Codec::embed`] may emit per framed bit before it stops.
const SENTENCES_PER_BIT: usize = 8;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("sampler read {0} bits without settling on a node")]
    Lookahead(usize),
    #[error("embedding made no progress after {0} sentences")]
    Stalled(usize),
}

/// One run of the sampler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleTrace {
    /// Entities chosen, in canonical order.
    pub sequence: Vec<EntityId>,
    pub sem_type: SemType,
    pub interval: Interval,
    /// The embedded prefix of the input bits.
    pub bits: BitStream,
    pub bits_embedded: usize,
    /// Bits looked at to settle every choice; at least `bits_embedded`.
    pub bits_read: usize,
}

/// Sampler and decoder for one (tree, distribution) pair.
#[derive(Clone, Debug)]
pub struct Codec {
    tree: Arc<OntologyTree>,
    dist: Arc<ClassDistribution>,
    table: CodingTable,
    codebook: HashMap<SemType, (Interval, Vec<bool>)>,
}

impl Codec {
    pub fn new(tree: Arc<OntologyTree>, dist: Arc<ClassDistribution>) -> Self {
        let table = CodingTable::build(&dist, &tree);
        let codebook = dist
            .entries()
            .map(|(t, _)| {
                let s = table.scaled_interval(t, &tree).expect("supported type has a path");
                (t.clone(), (s.to_interval(), s.common_prefix()))
            })
            .collect();
        Codec {
            tree,
            dist,
            table,
            codebook,
        }
    }

    pub fn tree(&self) -> &Arc<OntologyTree> {
        &self.tree
    }

    pub fn distribution(&self) -> &Arc<ClassDistribution> {
        &self.dist
    }

    pub fn table(&self) -> &CodingTable {
        &self.table
    }

    /// Interval and embedded prefix of every supported type.
    pub fn codebook(&self) -> impl Iterator<Item = (&SemType, &Interval, &[bool])> + '_ {
        self.codebook.iter().map(|(t, (i, p))| (t, i, p.as_slice()))
    }

    pub fn interval(&self, t: &SemType) -> Result<&Interval, CodecError> {
        self.codebook
            .get(t)
            .map(|(i, _)| i)
            .ok_or(CodecError::Distribution(DistributionError::UnknownClass))
    }

    /// Bits a sentence of type `t` carries.
    pub fn prefix(&self, t: &SemType) -> Result<&[bool], CodecError> {
        self.codebook
            .get(t)
            .map(|(_, p)| p.as_slice())
            .ok_or(CodecError::Distribution(DistributionError::UnknownClass))
    }

    pub fn decode(&self, t: &SemType) -> Result<BitStream, CodecError> {
        self.prefix(t).map(|p| BitStream::from_bits(p.to_vec()))
    }

    /// Walks from the root, at each node descending into the child whose
    /// slot contains the value of the input bits. Children are split
    /// concept, then subconcept, then entity, with stop last. Bits are read
    /// only until the dyadic cell they pin down fits inside one slot.
    pub fn sample(&self, src: &mut dyn BitSource) -> Result<SampleTrace, CodecError> {
        let mut reader = Reader {
            src,
            m: BigUint::zero(),
            n: 0,
        };
        let mut s = Scaled::unit();
        let mut at: NodeId = self.table.root();
        let mut sequence = Vec::new();
        loop {
            let node = self.table.node(at);
            if node.total == 0 {
                return Err(DistributionError::DeadPrefix.into());
            }
            let stop_cum = node.total - node.stop;
            let bounds = Bounds::new(&s, node.total);

            // Concepts, then stop.
            let mut slots: Vec<(u64, u64)> = Vec::with_capacity(node.groups.len() + 1);
            let mut cum = 0;
            for g in &node.groups {
                slots.push((cum, g.weight));
                cum += g.weight;
            }
            if node.stop > 0 {
                slots.push((stop_cum, node.stop));
            }
            let pick = bounds.choose(&mut reader, &slots)?;
            if pick == node.groups.len() {
                s.narrow(stop_cum, node.stop, node.total);
                break;
            }
            let group = &node.groups[pick];

            // Subconcepts within the concept.
            let mut cum = slots[pick].0;
            let sub_slots: Vec<(u64, u64)> = group
                .subgroups
                .iter()
                .map(|sg| {
                    let slot = (cum, sg.weight);
                    cum += sg.weight;
                    slot
                })
                .collect();
            let sub_pick = bounds.choose(&mut reader, &sub_slots)?;
            let sub = &group.subgroups[sub_pick];

            // Entities within the subconcept.
            let mut cum = sub_slots[sub_pick].0;
            let edges = &node.edges[sub.edges.clone()];
            let edge_slots: Vec<(u64, u64)> = edges
                .iter()
                .map(|e| {
                    let slot = (cum, e.weight);
                    cum += e.weight;
                    slot
                })
                .collect();
            let edge_pick = bounds.choose(&mut reader, &edge_slots)?;
            let edge = edges[edge_pick];
            let (edge_cum, _) = edge_slots[edge_pick];
            s.narrow(edge_cum, edge.weight, node.total);
            sequence.push(edge.entity);
            at = edge.child;
        }
        let prefix = s.common_prefix();
        let bits_embedded = prefix.len();
        debug_assert!((0..bits_embedded).all(|i| reader.src.bit(i) == prefix[i]));
        Ok(SampleTrace {
            sem_type: SemType::from_entities(sequence.iter().copied()),
            sequence,
            interval: s.to_interval(),
            bits: BitStream::from_bits(prefix),
            bits_embedded,
            bits_read: reader.n.max(bits_embedded),
        })
    }

    /// Samples sentence after sentence until the framed message is covered.
    /// Sentence `j` reads `framed[cursor..]` (zero-padded) XOR the keystream
    /// of `key.for_sentence(j)`, so the padding past the message is keystream
    /// and a sentence that embeds nothing still changes the next one's input.
    pub fn embed(&self, framed: &BitStream, key: &StegoKey) -> Result<Vec<SampleTrace>, CodecError> {
        self.embed_from(framed, key, 0, 0)
    }

    /// [`Codec::embed`] resumed at sentence `first` with `cursor` bits consumed.
    pub fn embed_from(
        &self,
        framed: &BitStream,
        key: &StegoKey,
        first: u64,
        mut cursor: usize,
    ) -> Result<Vec<SampleTrace>, CodecError> {
        let limit = SENTENCES_PER_BIT * framed.len().max(16) + 64;
        let mut traces = Vec::new();
        let mut j = first;
        while cursor < framed.len() || traces.is_empty() {
            if traces.len() >= limit {
                return Err(CodecError::Stalled(traces.len()));
            }
            let mut src = SentenceSource::new(framed.bits(), cursor, key, j);
            let trace = self.sample(&mut src)?;
            cursor += trace.bits_embedded;
            traces.push(trace);
            j += 1;
        }
        Ok(traces)
    }
}

/// Input of sentence `j`: message bits from `cursor`, zero-padded, XOR the
/// sentence keystream.
pub struct SentenceSource<'a> {
    message: &'a [bool],
    cursor: usize,
    keystream: Keystream,
}

impl<'a> SentenceSource<'a> {
    pub fn new(message: &'a [bool], cursor: usize, key: &StegoKey, sentence: u64) -> Self {
        SentenceSource {
            message,
            cursor,
            keystream: Keystream::new(&key.for_sentence(sentence)),
        }
    }
}

impl BitSource for SentenceSource<'_> {
    fn bit(&mut self, index: usize) -> bool {
        self.message.get(self.cursor + index).copied().unwrap_or(false) ^ self.keystream.bit(index)
    }
}

/// Message bits carried by sentence `sentence`, given its embedded prefix.
pub fn sentence_message_bits(prefix: &[bool], key: &StegoKey, sentence: u64) -> Vec<bool> {
    let mut ks = Keystream::new(&key.for_sentence(sentence));
    prefix.iter().enumerate().map(|(i, &b)| b ^ ks.bit(i)).collect()
}

struct Reader<'s> {
    src: &'s mut dyn BitSource,
    /// The first `n` bits read, as an integer.
    m: BigUint,
    n: usize,
}

impl Reader<'_> {
    fn read(&mut self) -> Result<(), CodecError> {
        if self.n >= MAX_LOOKAHEAD {
            return Err(CodecError::Lookahead(self.n));
        }
        self.m <<= 1;
        if self.src.bit(self.n) {
            self.m += 1u32;
        }
        self.n += 1;
        Ok(())
    }
}

/// Slot boundaries at one node: slot `[cum, cum + w)` out of `total` maps to
/// `[(low·total + width·cum) / (denom·total), …)`.
struct Bounds<'a> {
    s: &'a Scaled,
    base: BigUint,
    denom: BigUint,
}

impl<'a> Bounds<'a> {
    fn new(s: &'a Scaled, total: u64) -> Self {
        Bounds {
            s,
            base: &s.low * total,
            denom: &s.denom * total,
        }
    }

    fn edge(&self, cum: u64) -> BigUint {
        &self.base + &self.s.width * cum
    }

    /// Index of the slot holding the input value, reading bits as needed.
    fn choose(&self, reader: &mut Reader<'_>, slots: &[(u64, u64)]) -> Result<usize, CodecError> {
        debug_assert!(!slots.is_empty());
        if slots.len() == 1 {
            return Ok(0);
        }
        let starts: Vec<BigUint> = slots.iter().map(|&(cum, _)| self.edge(cum)).collect();
        let (last_cum, last_w) = slots[slots.len() - 1];
        let end = self.edge(last_cum + last_w);
        loop {
            // The cell [m, m + 1) / 2^n, scaled by denom·2^n.
            let lo = &reader.m * &self.denom;
            let k = starts.partition_point(|b| (b << reader.n) <= lo);
            if k > 0 {
                let upper = starts.get(k).unwrap_or(&end);
                if lo + &self.denom <= upper << reader.n {
                    return Ok(k - 1);
                }
            }
            reader.read()?;
        }
    }
}

/// Runs the sampler once on `bits` (zero-padded past its end).
pub fn sample_type(
    bits: &mut dyn BitSource,
    dist: &ClassDistribution,
    tree: &OntologyTree,
) -> Result<SampleTrace, CodecError> {
    Codec::new(Arc::new(tree.clone()), Arc::new(dist.clone())).sample(bits)
}

/// The prefix a sentence of type `t` carries: the longest bit string whose
/// dyadic cell contains the whole class interval.
pub fn decode_type(t: &SemType, dist: &ClassDistribution, tree: &OntologyTree) -> Result<BitStream, CodecError> {
    let interval = crate::distribution::class_interval(dist, tree, t)?;
    Ok(BitStream::from_bits(interval.common_prefix()))
}

/// Embeds a framed message, one trace per sentence.
pub fn embed_message(
    message: &BitStream,
    key: &StegoKey,
    dist: &ClassDistribution,
    tree: &OntologyTree,
) -> Result<Vec<SampleTrace>, CodecError> {
    Codec::new(Arc::new(tree.clone()), Arc::new(dist.clone())).embed(message, key)
}
