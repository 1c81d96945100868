//! Token-level attacks on stego text and the evaluation metrics.

mod attack;
mod metrics;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use attack::{attack, attack_preserving, AttackError, AttackKind, AttackSpec, Attacked};
pub use metrics::{
    decoding_success_rate, distinct_n, embedding_rate, mission_success_rate, msr_estimate, msr_iterations_for,
    overall_rate, DsrBucket, DsrCase, EmbeddingRate, IterationHistogram, MetricsError, ITERATION_LABELS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinctN {
    pub n: usize,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub attack: Option<AttackSpec>,
    /// Attacks were confined to tokens that cannot belong to an entity.
    pub preserve_entities: bool,
    pub sentences: usize,
    pub decoding_success: Vec<DsrBucket>,
    pub overall_dsr: Option<f64>,
    pub embedding: EmbeddingRate,
    pub mission_success_rate: Option<f64>,
    pub distinct: Vec<DistinctN>,
    pub iterations: Option<IterationHistogram>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}%", 100.0 * x))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let attack = match &self.attack {
            Some(a) => format!(
                "{} x{} (seed {}{})",
                a.kind,
                a.count,
                a.seed,
                if self.preserve_entities { ", entity-preserving" } else { "" }
            ),
            None => "none".to_string(),
        };
        let _ = writeln!(out, "seed {}  attack {}  sentences {}", self.seed, attack, self.sentences);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8}{:>10}{:>10}{:>10}", "|T|", "trials", "decoded", "DSR");
        for b in &self.decoding_success {
            let _ = writeln!(out, "{:<8}{:>10}{:>10}{:>10}", b.type_len, b.trials, b.successes, pct(b.rate));
        }
        let _ = writeln!(out, "{:<8}{:>30}", "all", pct(self.overall_dsr));
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "embedding rate  {:.4} bits/sentence  {:.4} bits/token",
            self.embedding.bits_per_sentence, self.embedding.bits_per_token
        );
        if let Some(msr) = self.mission_success_rate {
            let _ = writeln!(out, "mission success rate  {}", pct(Some(msr)));
        }
        let distinct: Vec<String> = self
            .distinct
            .iter()
            .map(|d| format!("distinct-{} {}", d.n, d.value.map_or("-".to_string(), |v| format!("{v:.4}"))))
            .collect();
        let _ = writeln!(out, "{}", distinct.join("  "));
        if let Some(h) = &self.iterations {
            let _ = writeln!(out);
            let _ = write!(out, "{:<12}", "iterations");
            for l in ITERATION_LABELS {
                let _ = write!(out, "{l:>10}");
            }
            let _ = writeln!(out);
            let _ = write!(out, "{:<12}", "sentences");
            for c in h.counts {
                let _ = write!(out, "{c:>10}");
            }
            let _ = writeln!(out);
            let _ = write!(out, "{:<12}", "share");
            for f in h.fractions() {
                let _ = write!(out, "{:>10}", pct(Some(f)));
            }
            let _ = writeln!(out);
        }
        out
    }
}
