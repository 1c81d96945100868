//! Acceptance harness: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use common::{all_types, brute_force_prefix, three_entity_tree, FlatLayout};
use semstego_core::agents::{generate_stego, Agent, FaultKind, FaultPlan, FeedbackConfig, MockAgent, SamplingParams};
use semstego_core::attacks_metrics::{
    attack, attack_preserving, decoding_success_rate, msr_estimate, msr_iterations_for, overall_rate, AttackKind,
    AttackSpec, DsrCase, IterationHistogram, ITERATION_LABELS,
};
use semstego_core::bundled;
use semstego_core::codec::Codec;
use semstego_core::crypto::{derandomize, extend_keystream, randomize, BitStream, StegoKey};
use semstego_core::distribution::{assign_probabilities, ClassDistribution};
use semstego_core::pipeline::{decode_message, encode_message, AgentBindings, Session, StegoMessage};
use semstego_core::semantic_space::{EntityId, OntologyTree, SemType};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_key(rng: &mut ChaCha8Rng) -> StegoKey {
    let mut key = vec![0u8; rng.random_range(16..=32)];
    rng.fill_bytes(&mut key);
    let mut nonce = [0u8; 12];
    rng.fill_bytes(&mut nonce);
    StegoKey::new(key, nonce).unwrap()
}

fn bundled_parts() -> (Arc<OntologyTree>, Arc<ClassDistribution>) {
    let tree = Arc::new(bundled::tree());
    let dist = Arc::new(bundled::distribution(&tree));
    (tree, dist)
}

fn round_trips() -> Outcome {
    let (tree, dist) = bundled_parts();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base = Session::new(
        tree.clone(),
        dist,
        random_key(&mut rng),
        FeedbackConfig::default(),
        AgentBindings::mock(tree, 1, FaultPlan::None),
    );
    let trials: Vec<(StegoKey, Vec<u8>)> = (0..1000)
        .map(|_| {
            let key = random_key(&mut rng);
            let mut msg = vec![0u8; rng.random_range(0..=1024)];
            rng.fill_bytes(&mut msg);
            (key, msg)
        })
        .collect();
    let start = Instant::now();
    let mut sentences = 0;
    let mut failures = 0;
    for (key, msg) in &trials {
        let session = base.clone().with_key(key.clone());
        let ok = encode_message(msg, &session).ok().and_then(|enc| {
            sentences += enc.message.sentences.len();
            let parsed = StegoMessage::parse(&enc.message.to_text()).ok()?;
            decode_message(&parsed, &session).ok()
        });
        if ok.as_ref() != Some(msg) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures == 0 && secs < 60.0,
        format!("{}/1000 exact, {sentences} sentences, {secs:.1} s", 1000 - failures),
    )
}

/// Every count vector in {0,1,2}^10 over the ten types with |T| ≤ 2 on three
/// entities, skipping the all-zero one.
fn small_distributions(tree: &OntologyTree) -> Vec<ClassDistribution> {
    let types = all_types(3, 2);
    (1..3u32.pow(types.len() as u32))
        .map(|mut code| {
            let counts: Vec<(SemType, u64)> = types
                .iter()
                .filter_map(|t| {
                    let c = (code % 3) as u64;
                    code /= 3;
                    (c > 0).then(|| (t.clone(), c))
                })
                .collect();
            ClassDistribution::from_counts(counts, tree, 4).unwrap()
        })
        .collect()
}

fn oracle_sweep(tree: &Arc<OntologyTree>, dists: &[ClassDistribution]) -> Outcome {
    let discrepancies: usize = dists
        .par_iter()
        .map(|dist| {
            let layout = FlatLayout::new(dist, tree);
            let codec = Codec::new(tree.clone(), Arc::new(dist.clone()));
            let oracles: Vec<(&SemType, Vec<bool>)> = layout
                .classes
                .iter()
                .map(|(t, lo, hi)| (t, brute_force_prefix(*lo, *hi, layout.total, 8)))
                .collect();
            let mut bad = 0;
            for byte in 0..=255u8 {
                let mut src = BitStream::from_bytes(&[byte]);
                let Ok(trace) = codec.sample(&mut src) else {
                    bad += 1;
                    continue;
                };
                let want = &layout.locate(byte as u128, 8).0;
                let oracle = &oracles.iter().find(|(t, _)| *t == want).unwrap().1;
                let decoded = codec.decode(&trace.sem_type).map(|b| b.bits().to_vec()).unwrap_or_default();
                let consumed = &src.bits()[..trace.bits_embedded.min(8)];
                if &trace.sem_type != want || &decoded != oracle || consumed != oracle.as_slice() {
                    bad += 1;
                }
            }
            bad
        })
        .sum();
    check(
        discrepancies == 0,
        format!("{} distributions x 256 streams, {discrepancies} discrepancies", dists.len()),
    )
}

fn node_probability_exactness(tree: &OntologyTree, dists: &[ClassDistribution]) -> Outcome {
    let (prefixes, failures): (usize, usize) = dists
        .par_iter()
        .map(|dist| {
            let codec = Codec::new(Arc::new(tree.clone()), Arc::new(dist.clone()));
            let mut reachable = BTreeSet::new();
            for (t, _) in dist.entries() {
                let seq = t.canonical_sequence(tree);
                for k in 0..=seq.len() {
                    reachable.insert(SemType::from_entities(seq[..k].iter().copied()));
                }
            }
            let mut bad = 0;
            for pre in &reachable {
                let Ok(p) = assign_probabilities(tree, dist, pre, None) else {
                    bad += 1;
                    continue;
                };
                let mut ok = p.total() == BigRational::one();
                for (c, concept) in tree.concepts().iter().enumerate() {
                    let mut subs = BigRational::zero();
                    for (s, sub) in concept.subconcepts.iter().enumerate() {
                        let leaves = sub.entities.iter().fold(BigRational::zero(), |a, &e| a + p.entity(e));
                        ok &= &leaves == p.subconcept(c, s);
                        subs += p.subconcept(c, s);
                    }
                    ok &= &subs == p.concept(c);
                }
                let node = codec.table().lookup(pre, tree);
                ok &= node.is_some_and(|n| codec.table().node_probabilities(n, tree) == p);
                bad += usize::from(!ok);
            }
            (reachable.len(), bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    check(failures == 0, format!("{prefixes} reachable prefixes, {failures} inexact"))
}

/// Five concepts of two subconcepts of five entities.
fn fifty_entity_tree() -> OntologyTree {
    let entries = (0..50).map(|i| {
        let (c, s, e) = (i / 10, (i / 5) % 2, i % 5);
        (format!("Concept{c}/Group{c}{s}/item{c}{s}{e}"), vec![format!("item{c}{s}{e}")])
    });
    OntologyTree::from_entries(entries).unwrap()
}

/// 64 random types of length 0 to 4 with Zipf(1.3) counts.
fn zipf_distribution(tree: &OntologyTree) -> ClassDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut types = BTreeSet::new();
    while types.len() < 64 {
        let len = rng.random_range(0..=4);
        types.insert(SemType::from_entities((0..len).map(|_| EntityId(rng.random_range(0..50)))));
    }
    let counts = types
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, (1_000_000.0 / ((i + 1) as f64).powf(1.3)).round() as u64));
    ClassDistribution::from_counts(counts, tree, 4).unwrap()
}

fn probabilities(dist: &ClassDistribution) -> Vec<(SemType, f64)> {
    let total = dist.total() as f64;
    dist.entries().map(|(t, n)| (t.clone(), n as f64 / total)).collect()
}

/// Types and embedded bit counts of `n` samples from uniform random bits.
fn draw(codec: &Codec, n: usize, seed: u64) -> Vec<(SemType, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut bytes = [0u8; 32];
            rng.fill_bytes(&mut bytes);
            let trace = codec.sample(&mut BitStream::from_bytes(&bytes)).unwrap();
            (trace.sem_type, trace.bits_embedded)
        })
        .collect()
}

fn fidelity() -> Outcome {
    let tree = Arc::new(fifty_entity_tree());
    let dist = Arc::new(zipf_distribution(&tree));
    let codec = Codec::new(tree, dist.clone());
    let n = 100_000;
    let samples = draw(&codec, n, 4);
    let probs = probabilities(&dist);
    let mut l1 = 0.0;
    let mut chi = 0.0;
    for (t, p) in &probs {
        let observed = samples.iter().filter(|(s, _)| s == t).count() as f64;
        l1 += (observed / n as f64 - p).abs();
        let expected = p * n as f64;
        chi += (observed - expected).powi(2) / expected;
    }
    let df = (probs.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(chi);
    check(
        l1 < 0.02 && p_value > 0.01,
        format!("{} classes, L1 {l1:.4}, chi-square {chi:.1} on {df} df, p {p_value:.3}", probs.len()),
    )
}

fn capacity() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let tree = Arc::new(fifty_entity_tree());
    let zipf = Arc::new(zipf_distribution(&tree));
    let (btree, bdist) = bundled_parts();
    for (name, codec) in [("zipf", Codec::new(tree, zipf)), ("bundled", Codec::new(btree, bdist))] {
        let h = codec.distribution().entropy_bits();
        let samples = draw(&codec, 100_000, 5);
        let mean = samples.iter().map(|(_, b)| *b as f64).sum::<f64>() / samples.len() as f64;
        ok &= (h - 2.0..=1.05 * h).contains(&mean);
        lines.push(format!("{name} H {h:.3} mean {mean:.3}"));
    }

    let uniform_tree = Arc::new(
        OntologyTree::from_entries((0..16).map(|i| (format!("Thing/Kind{}/e{i:02}", i / 4), vec![format!("e{i:02}")])))
            .unwrap(),
    );
    let singletons = (0..16).map(|i| (SemType::from_entities([EntityId(i)]), 1));
    let uniform = ClassDistribution::from_counts(singletons, &uniform_tree, 4).unwrap();
    let codec = Codec::new(uniform_tree, Arc::new(uniform));
    let samples = draw(&codec, 100_000, 6);
    let mean = samples.iter().map(|(_, b)| *b as f64).sum::<f64>() / samples.len() as f64;
    ok &= (mean - 4.0).abs() <= 0.1;
    lines.push(format!("uniform-16 {mean:.3}"));
    check(ok, lines.join(", "))
}

fn msr() -> Outcome {
    let one = msr_estimate(0.463, 1.0);
    let n = msr_iterations_for(0.463, 0.893);
    check(
        (one - 0.463).abs() < 1e-12 && (n - 3.5945).abs() <= 5e-4 && (msr_estimate(0.463, n) - 0.893).abs() < 1e-9,
        format!("MSR_1 {one:.3}, n {n:.4}"),
    )
}

/// Mock stego sentences for types drawn from the bundled distribution.
fn stego_cases(codec: &Codec, n: usize, seed: u64, keep: impl Fn(&SemType) -> bool) -> Vec<DsrCase> {
    let agent = MockAgent::new(codec.tree().clone(), seed);
    let cfg = FeedbackConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    while cases.len() < n {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        let trace = codec.sample(&mut BitStream::from_bytes(&bytes)).unwrap();
        if !keep(&trace.sem_type) {
            continue;
        }
        let generation = generate_stego(&trace.sem_type, &cfg, &agent, &agent, cases.len() as u64).unwrap();
        cases.push(DsrCase {
            type_len: trace.sem_type.len(),
            expected: codec.prefix(&trace.sem_type).unwrap().to_vec(),
            sentence: generation.sentence,
        });
    }
    cases
}

fn robustness() -> Outcome {
    let (tree, dist) = bundled_parts();
    let codec = Codec::new(tree.clone(), dist);
    let extractor = MockAgent::new(tree.clone(), 0);
    let sampling = SamplingParams::default();
    let mut ok = true;
    let mut lines = Vec::new();

    let base = stego_cases(&codec, 2_000, 7, |_| true);
    let tokens = base.iter().map(|c| c.sentence.split_whitespace().count()).sum::<usize>() as f64 / base.len() as f64;
    for kind in AttackKind::ALL {
        let attacked: Vec<DsrCase> = (0..10_000u64)
            .map(|i| {
                let case = &base[i as usize % base.len()];
                let spec = AttackSpec::new(kind, 1, 1000 + i).unwrap();
                DsrCase { sentence: attack_preserving(&case.sentence, &spec, &tree).sentence, ..case.clone() }
            })
            .collect();
        let rate = overall_rate(&decoding_success_rate(&attacked, &codec, &extractor, sampling)).unwrap();
        ok &= rate == 1.0;
        lines.push(format!("preserving {kind} {rate:.4}"));
    }

    let singles = stego_cases(&codec, 2_000, 8, |t| t.len() == 1);
    let single_tokens =
        singles.iter().map(|c| c.sentence.split_whitespace().count()).sum::<usize>() as f64 / singles.len() as f64;
    ok &= single_tokens >= 10.0;
    for kind in AttackKind::ALL {
        let attacked: Vec<DsrCase> = singles
            .iter()
            .enumerate()
            .map(|(i, case)| {
                let spec = AttackSpec::new(kind, 1, 5000 + i as u64).unwrap();
                DsrCase { sentence: attack(&case.sentence, &spec).sentence, ..case.clone() }
            })
            .collect();
        let rate = overall_rate(&decoding_success_rate(&attacked, &codec, &extractor, sampling)).unwrap();
        ok &= rate >= 0.8;
        lines.push(format!("|T|=1 {kind} {rate:.4}"));
    }
    lines.push(format!("mean tokens {tokens:.1} (|T|=1: {single_tokens:.1})"));
    check(ok, lines.join(", "))
}

fn monobit_p(bits: &[bool]) -> f64 {
    let n = bits.len() as f64;
    let s: f64 = bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).sum();
    erfc(s.abs() / n.sqrt() / std::f64::consts::SQRT_2)
}

fn runs_p(bits: &[bool]) -> f64 {
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b).count() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let v = runs as f64;
    erfc((v - 2.0 * n * pi * (1.0 - pi)).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)))
}

fn prf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut involutions = 0;
    for _ in 0..2_000 {
        let key = random_key(&mut rng);
        let len = rng.random_range(0..2048);
        let bits = BitStream::from_bits((0..len).map(|_| rng.random()).collect());
        let there = randomize(&bits, &key);
        involutions += usize::from(derandomize(&there, &key) == bits && randomize(&there, &key) == bits);
    }
    let key = random_key(&mut rng);
    let stream = extend_keystream(&key.for_sentence(0), 1_000_000);
    let (mono, runs) = (monobit_p(stream.bits()), runs_p(stream.bits()));
    check(
        involutions == 2_000 && mono >= 0.01 && runs >= 0.01,
        format!("involution {involutions}/2000, monobit p {mono:.3}, runs p {runs:.3}"),
    )
}

fn feedback_loop() -> Outcome {
    let (tree, dist) = bundled_parts();
    let codec = Codec::new(tree.clone(), dist);
    let cfg = FeedbackConfig::default();
    let generator = MockAgent::new(tree.clone(), 10).with_faults(FaultPlan::Random {
        rate: 0.3,
        kinds: vec![FaultKind::Stray],
    });
    let checker = MockAgent::new(tree, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut iterations = Vec::new();
    let mut exhausted = 0;
    for sequence in 0..2_000u64 {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        let target = codec.sample(&mut BitStream::from_bytes(&bytes)).unwrap().sem_type;
        match generate_stego(&target, &cfg, &generator as &dyn Agent, &checker, sequence) {
            Ok(g) => iterations.push(g.iterations),
            Err(_) => exhausted += 1,
        }
    }
    let histogram: IterationHistogram = iterations.iter().copied().collect();
    let shares: Vec<String> = ITERATION_LABELS
        .iter()
        .zip(histogram.fractions())
        .map(|(l, f)| format!("{l}: {:.2}%", 100.0 * f))
        .collect();
    let within = iterations.iter().all(|&i| i <= cfg.max_iterations);
    check(
        within && histogram.total() > 0,
        format!(
            "{} approved, {exhausted} exhausted, max {} used of {}; {}",
            histogram.total(),
            iterations.iter().max().unwrap_or(&0),
            cfg.max_iterations,
            shares.join("  ")
        ),
    )
}

fn main() -> ExitCode {
    let tree = Arc::new(three_entity_tree());
    let small = small_distributions(&tree);
    let criteria: Vec<Criterion> = vec![
        ("round trip", Box::new(round_trips)),
        ("codec/oracle equivalence", Box::new(|| oracle_sweep(&tree, &small))),
        ("distribution fidelity", Box::new(fidelity)),
        ("capacity", Box::new(capacity)),
        ("node probability exactness", Box::new(|| node_probability_exactness(&tree, &small))),
        ("MSR formula", Box::new(msr)),
        ("robustness", Box::new(robustness)),
        ("PRF layer", Box::new(prf)),
        ("feedback loop", Box::new(feedback_loop)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id} {name}: {status} ({detail}) [{secs:.1} s]");
        failed += usize::from(outcome.is_err());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
