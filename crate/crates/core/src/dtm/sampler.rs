//! Generative sampler for synthetic corpora.
//!
//! Documents are generated from a mixture of topics: per document a mixture
//! θ is drawn from a Dirichlet, then each token picks a topic from θ and a
//! word from that topic's slice distribution. Everything is a pure function
//! of the seed, which makes the sampler usable as the recovery oracle for
//! the fitting code.

use chrono::NaiveDate;
use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::calendar::{Bucket, BucketCalendar, SliceCalendar};
use crate::corpus::{Corpus, CorpusConfig, ProcessedDocument, SliceInfo, Vocabulary};
use crate::error::{Error, Result};

use super::{DtmHyperparams, TopicChain};

/// Document length model.
#[derive(Debug, Clone, Copy)]
pub enum DocLength {
    Fixed(u32),
    /// Poisson with the given mean, clamped below at 1.
    Poisson(f64),
}

/// An institution emitting documents, optionally restricted to a topic
/// subset (θ mass outside `allowed_topics` is exactly zero).
#[derive(Debug, Clone)]
pub struct InstitutionSpec {
    pub name: String,
    pub allowed_topics: Option<Vec<usize>>,
}

impl InstitutionSpec {
    pub fn new(name: &str) -> Self {
        InstitutionSpec {
            name: name.to_string(),
            allowed_topics: None,
        }
    }

    pub fn restricted(name: &str, topics: Vec<usize>) -> Self {
        InstitutionSpec {
            name: name.to_string(),
            allowed_topics: Some(topics),
        }
    }
}

/// Shape of the synthetic corpus.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub docs_per_slice: usize,
    pub doc_length: DocLength,
    /// Documents are assigned to institutions round-robin.
    pub institutions: Vec<InstitutionSpec>,
    pub first_year: i32,
    pub bucket_calendar: BucketCalendar,
}

impl SyntheticConfig {
    pub fn new(docs_per_slice: usize, doc_length: DocLength) -> Self {
        SyntheticConfig {
            docs_per_slice,
            doc_length,
            institutions: vec![InstitutionSpec::new("synthetic")],
            first_year: 2000,
            bucket_calendar: BucketCalendar::Quarter,
        }
    }

    pub fn with_institutions(mut self, institutions: Vec<InstitutionSpec>) -> Self {
        self.institutions = institutions;
        self
    }
}

/// Draws a Dirichlet(alpha) sample restricted to `allowed` coordinates; the
/// remaining coordinates are exactly zero.
pub(crate) fn sample_restricted_dirichlet(
    rng: &mut ChaCha8Rng,
    alpha: f64,
    num_topics: usize,
    allowed: Option<&[usize]>,
) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let idx: Vec<usize> = match allowed {
        Some(a) => a.to_vec(),
        None => (0..num_topics).collect(),
    };
    let mut theta = vec![0.0; num_topics];
    let mut total = 0.0;
    let draws: Vec<f64> = idx.iter().map(|_| gamma.sample(rng)).collect();
    for (&i, &g) in idx.iter().zip(&draws) {
        theta[i] = g;
        total += g;
    }
    if total <= 0.0 {
        // all gamma draws underflowed; fall back to uniform over the subset
        for &i in &idx {
            theta[i] = 1.0 / idx.len() as f64;
        }
    } else {
        for &i in &idx {
            theta[i] /= total;
        }
    }
    theta
}

fn softmax_row(mean: &Array2<f64>, t: usize) -> Vec<f64> {
    let row = mean.row(t);
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = row.iter().map(|&m| (m - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Samples a corpus from known topic chains. Returns the corpus and the true
/// per-document mixtures (row order matches `corpus.documents`).
pub fn sample_corpus(
    hyperparams: &DtmHyperparams,
    chains: &[TopicChain],
    config: &SyntheticConfig,
    seed: u64,
) -> Result<(Corpus, Array2<f64>)> {
    let k = chains.len();
    if k != hyperparams.num_topics {
        return Err(Error::InvalidParameter(format!(
            "chain count {k} does not match K = {}",
            hyperparams.num_topics
        )));
    }
    if config.docs_per_slice == 0 {
        return Err(Error::InvalidParameter("docs_per_slice must be >= 1".into()));
    }
    if config.institutions.is_empty() {
        return Err(Error::InvalidParameter("need at least one institution".into()));
    }
    if let DocLength::Fixed(0) = config.doc_length {
        return Err(Error::InvalidParameter("zero-length documents requested".into()));
    }
    for inst in &config.institutions {
        if let Some(allowed) = &inst.allowed_topics {
            if allowed.is_empty() || allowed.iter().any(|&t| t >= k) {
                return Err(Error::InvalidParameter(format!(
                    "institution {} has an invalid topic restriction",
                    inst.name
                )));
            }
        }
    }
    let t_len = chains[0].num_slices();
    let v = chains[0].vocab_size();
    if chains.iter().any(|c| c.num_slices() != t_len || c.vocab_size() != v) {
        return Err(Error::InvalidParameter("chains disagree on T or V".into()));
    }

    let slice_calendar = SliceCalendar::new(config.first_year, config.first_year + t_len as i32 - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-slice topic-word distributions.
    let topic_dists: Vec<Vec<Vec<f64>>> = chains
        .iter()
        .map(|c| (0..t_len).map(|t| softmax_row(&c.mean, t)).collect())
        .collect();

    let mut documents = Vec::with_capacity(t_len * config.docs_per_slice);
    let mut thetas = Vec::with_capacity(t_len * config.docs_per_slice);

    for slice in 0..t_len {
        let year = slice_calendar.year_of_slice(slice);
        for i in 0..config.docs_per_slice {
            let inst = &config.institutions[i % config.institutions.len()];
            let theta = sample_restricted_dirichlet(
                &mut rng,
                hyperparams.alpha,
                k,
                inst.allowed_topics.as_deref(),
            );
            let n_tokens = match config.doc_length {
                DocLength::Fixed(n) => n,
                DocLength::Poisson(mean) => {
                    let p = Poisson::new(mean).map_err(|e| {
                        Error::InvalidParameter(format!("bad doc length mean: {e}"))
                    })?;
                    (p.sample(&mut rng) as u32).max(1)
                }
            };

            let mut counts = std::collections::BTreeMap::new();
            for _ in 0..n_tokens {
                let z = sample_categorical(&mut rng, &theta);
                let w = sample_categorical(&mut rng, &topic_dists[z][slice]);
                *counts.entry(w as u32).or_insert(0u32) += 1;
            }

            // Spread documents across the year deterministically.
            let month = (i % 12) as u32 + 1;
            let day = (i / 12 % 28) as u32 + 1;
            let date = NaiveDate::from_ymd_opt(year, month, day).expect("valid synthetic date");

            documents.push(ProcessedDocument {
                id: format!("doc-{slice:03}-{i:05}"),
                institution: inst.name.clone(),
                date,
                slice,
                bucket: Bucket::of(date, config.bucket_calendar),
                counts: counts.into_iter().collect(),
                n_tokens,
            });
            thetas.push(theta);
        }
    }

    let entries: Vec<String> = (0..v).map(|w| format!("w{w:04}")).collect();
    let mut dfs = vec![0u32; v];
    for d in &documents {
        for &(w, _) in &d.counts {
            dfs[w as usize] += 1;
        }
    }
    let vocabulary = Vocabulary::new(entries, dfs);

    let slices = (0..t_len)
        .map(|index| SliceInfo {
            index,
            year: slice_calendar.year_of_slice(index),
            document_count: config.docs_per_slice,
        })
        .collect();

    let mut config_out = CorpusConfig::default();
    config_out.detect_phrases = false;
    config_out.bucket_calendar = config.bucket_calendar;

    let theta_mat = Array2::from_shape_fn((thetas.len(), k), |(d, j)| thetas[d][j]);
    Ok((
        Corpus {
            documents,
            vocabulary,
            slices,
            slice_calendar,
            config: config_out,
            empty_document_ids: Vec::new(),
        },
        theta_mat,
    ))
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random_range(0.0..1.0);
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
