//! Bigram phrase detection by normalized pointwise mutual information.
//!
//! All probabilities share the total token count N as normalizer, so a bigram
//! whose components never occur apart scores exactly 1:
//!
//! ```text
//! npmi(x, y) = ln( p(xy) / (p(x) p(y)) ) / -ln p(xy)
//! p(x) = c(x)/N,  p(xy) = c(xy)/N
//! ```
//!
//! Detected phrases are merged greedily left to right, each merge replacing
//! an adjacent pair with a single `x_y` token.

use std::collections::BTreeMap;

/// A detected bigram with its corpus statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Phrase {
    pub first: String,
    pub second: String,
    pub count: u64,
    pub npmi: f64,
}

impl Phrase {
    /// The merged surface form, e.g. `repo_rate`.
    pub fn merged(&self) -> String {
        format!("{}_{}", self.first, self.second)
    }
}

/// Scores all adjacent bigrams and returns those with `count >= min_count`
/// and `npmi >= threshold`, sorted by descending score then lexicographically.
pub fn detect_phrases(streams: &[Vec<String>], min_count: u64, threshold: f64) -> Vec<Phrase> {
    let mut unigram: BTreeMap<&str, u64> = BTreeMap::new();
    let mut bigram: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut total: u64 = 0;

    for stream in streams {
        total += stream.len() as u64;
        for tok in stream {
            *unigram.entry(tok.as_str()).or_insert(0) += 1;
        }
        for pair in stream.windows(2) {
            *bigram.entry((pair[0].as_str(), pair[1].as_str())).or_insert(0) += 1;
        }
    }
    if total == 0 {
        return Vec::new();
    }
    let n = total as f64;

    let mut phrases: Vec<Phrase> = bigram
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .filter_map(|((x, y), c)| {
            let p_xy = c as f64 / n;
            let p_x = unigram[x] as f64 / n;
            let p_y = unigram[y] as f64 / n;
            let npmi = if p_xy >= 1.0 {
                1.0
            } else {
                (p_xy / (p_x * p_y)).ln() / -p_xy.ln()
            };
            (npmi >= threshold).then(|| Phrase {
                first: x.to_string(),
                second: y.to_string(),
                count: c,
                npmi,
            })
        })
        .collect();

    phrases.sort_by(|a, b| {
        b.npmi
            .partial_cmp(&a.npmi)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (&a.first, &a.second).cmp(&(&b.first, &b.second)))
    });
    phrases
}

/// Merges detected phrases into a token stream, greedily left to right.
/// Each merge consumes exactly two tokens and emits one.
pub fn merge_phrases(stream: &[String], phrases: &[Phrase]) -> Vec<String> {
    let set: std::collections::BTreeSet<(&str, &str)> = phrases
        .iter()
        .map(|p| (p.first.as_str(), p.second.as_str()))
        .collect();

    let mut out = Vec::with_capacity(stream.len());
    let mut i = 0;
    while i < stream.len() {
        if i + 1 < stream.len() && set.contains(&(stream[i].as_str(), stream[i + 1].as_str())) {
            out.push(format!("{}_{}", stream[i], stream[i + 1]));
            i += 2;
        } else {
            out.push(stream[i].clone());
            i += 1;
        }
    }
    out
}
