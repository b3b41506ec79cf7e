//! Linear-chain labeler driven by an external weights file.
//!
//! The weights file is UTF-8 TSV with lines `feature<TAB>tag<TAB>weight`.
//! Blank lines and lines starting with `#` are ignored. Emission features are
//! `bias`, `w=<lowercased token>`, `shape=<shape code>`, `prev=<token>`,
//! `next=<token>` and `pos=<quartile>`; transitions use `T:<previous tag>`
//! (with `T:BOS` for the first token). Decoding is exact Viterbi.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::token::Token;
use super::{Labeler, RecognizeError};
use crate::model::FieldTag;

const N_TAGS: usize = FieldTag::ALL.len();

#[derive(Debug, Clone)]
pub struct LinearLabeler {
    weights: HashMap<String, [f64; N_TAGS]>,
    version: String,
}

fn tag_index(tag: FieldTag) -> usize {
    FieldTag::ALL.iter().position(|&t| t == tag).expect("tag in ALL")
}

impl LinearLabeler {
    pub fn load(path: &Path) -> Result<Self, RecognizeError> {
        let unavailable = |reason: String| RecognizeError::ModelUnavailable { path: PathBuf::from(path), reason };
        let text = std::fs::read_to_string(path).map_err(|e| unavailable(e.to_string()))?;
        let labeler = Self::from_text(&text).map_err(unavailable)?;
        Ok(labeler)
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut weights: HashMap<String, [f64; N_TAGS]> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [feature, tag, weight] = parts[..] else {
                return Err(format!("line {}: expected 3 tab-separated columns", n + 1));
            };
            let tag = FieldTag::from_str(tag).map_err(|_| format!("line {}: unknown tag {tag:?}", n + 1))?;
            let weight: f64 = weight.parse().map_err(|_| format!("line {}: bad weight {weight:?}", n + 1))?;
            if !weight.is_finite() {
                return Err(format!("line {}: weight must be finite", n + 1));
            }
            weights.entry(feature.to_string()).or_insert([0.0; N_TAGS])[tag_index(tag)] += weight;
        }
        if weights.is_empty() {
            return Err("weights file has no entries".into());
        }
        let version = hex::encode(&Sha256::digest(text.as_bytes())[..6]);
        Ok(Self { weights, version })
    }

    fn emission(&self, tokens: &[Token], i: usize) -> [f64; N_TAGS] {
        let n = tokens.len();
        let lower = |k: usize| tokens[k].text.to_lowercase();
        let mut feats = vec![
            "bias".to_string(),
            format!("w={}", lower(i)),
            format!("shape={}", tokens[i].shape.code()),
            format!("pos={}", i * 4 / n),
        ];
        feats.push(if i == 0 { "prev=BOS".into() } else { format!("prev={}", lower(i - 1)) });
        feats.push(if i + 1 == n { "next=EOS".into() } else { format!("next={}", lower(i + 1)) });
        let mut score = [0.0; N_TAGS];
        for f in feats {
            if let Some(w) = self.weights.get(&f) {
                for (s, x) in score.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        score
    }

    fn transition(&self, prev: Option<FieldTag>) -> [f64; N_TAGS] {
        let key = match prev {
            Some(t) => format!("T:{}", t.as_str()),
            None => "T:BOS".into(),
        };
        self.weights.get(&key).copied().unwrap_or([0.0; N_TAGS])
    }
}

impl Labeler for LinearLabeler {
    fn name(&self) -> &str {
        "linear"
    }

    fn version(&self) -> &str {
        &self.version
    }

    fn label(&self, tokens: &[Token]) -> Result<Vec<FieldTag>, RecognizeError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let trans: Vec<[f64; N_TAGS]> = FieldTag::ALL.iter().map(|&t| self.transition(Some(t))).collect();
        let start = self.transition(None);
        let first = self.emission(tokens, 0);
        let mut score: [f64; N_TAGS] = std::array::from_fn(|t| start[t] + first[t]);
        let mut back: Vec<[usize; N_TAGS]> = Vec::with_capacity(tokens.len());
        for i in 1..tokens.len() {
            let emit = self.emission(tokens, i);
            let mut next = [f64::NEG_INFINITY; N_TAGS];
            let mut ptr = [0usize; N_TAGS];
            for t in 0..N_TAGS {
                for p in 0..N_TAGS {
                    let s = score[p] + trans[p][t];
                    // Strict comparison keeps the lowest index on ties.
                    if s > next[t] {
                        next[t] = s;
                        ptr[t] = p;
                    }
                }
                next[t] += emit[t];
            }
            back.push(ptr);
            score = next;
        }
        let mut best = 0;
        for t in 1..N_TAGS {
            if score[t] > score[best] {
                best = t;
            }
        }
        let mut path = vec![best];
        for ptr in back.iter().rev() {
            best = ptr[best];
            path.push(best);
        }
        path.reverse();
        Ok(path.into_iter().map(|t| FieldTag::ALL[t]).collect())
    }
}
