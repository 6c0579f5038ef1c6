//! The dynamic topic model: evolving topic-word chains, variational EM
//! fitting, and document classification.
//!
//! Each topic k owns a natural-parameter chain over yearly slices,
//!
//! ```text
//! beta_{k,t} ~ N(beta_{k,t-1}, sigma^2 I),   topic_t = softmax(beta_{k,t})
//! ```
//!
//! Fitting alternates a mean-field E-step over documents (variational
//! topic proportions and token assignments against the document's slice)
//! with an M-step that treats slice-level expected counts as noisy
//! observations of each word's chain and runs a Kalman filter + RTS
//! smoother with transition variance sigma^2.
//!
//! The traced objective is the standard mean-field bound with topics held
//! at their point estimates. The E-step is exact coordinate ascent on it
//! and warm-starts from the previous document proportions; the M-step
//! backtracks toward the previous chains whenever the smoothed update
//! would lower the bound. Together these make the recorded trace
//! non-decreasing.

pub mod align;
pub mod kalman;
pub mod lda;
pub mod sampler;

mod inference;

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::SliceCalendar;
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};

pub use inference::ThetaRow;
pub use lda::init_lda;
pub use sampler::{sample_corpus, DocLength, InstitutionSpec, SyntheticConfig};

/// Probability floor applied before taking logs.
pub(crate) const PROB_FLOOR: f64 = 1e-12;

/// Model hyperparameters. `sigma` is the chain standard deviation per annual
/// step; zero makes the model static.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtmHyperparams {
    pub num_topics: usize,
    pub sigma: f64,
    /// Symmetric document-topic Dirichlet concentration.
    pub alpha: f64,
    pub em_max_iters: usize,
    /// Relative ELBO change below which EM stops.
    pub em_tol: f64,
    /// Mean absolute gamma change below which the per-document step stops.
    pub doc_tol: f64,
    pub seed: u64,
    /// Gibbs sweeps for the LDA initializer.
    pub lda_sweeps: usize,
    /// Word prior of the LDA initializer.
    pub lda_eta: f64,
    /// Pseudo-count added to expected counts before taking log proportions.
    pub count_smoothing: f64,
    /// Prior variance of the chain start.
    pub chain_prior_var: f64,
}

impl DtmHyperparams {
    /// Defaults for a given topic count; `alpha` follows the 50/K rule.
    pub fn new(num_topics: usize) -> Self {
        DtmHyperparams {
            num_topics,
            sigma: 0.05,
            alpha: 50.0 / num_topics as f64,
            em_max_iters: 60,
            em_tol: 1e-5,
            doc_tol: 1e-4,
            seed: 0,
            lda_sweeps: 1000,
            lda_eta: 0.1,
            count_smoothing: 0.1,
            chain_prior_var: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics < 2 {
            return Err(Error::InvalidParameter("K must be >= 2".into()));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParameter("alpha must be > 0".into()));
        }
        if self.em_tol <= 0.0 || self.doc_tol <= 0.0 {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if self.count_smoothing <= 0.0 || self.chain_prior_var <= 0.0 {
            return Err(Error::InvalidParameter(
                "count_smoothing and chain_prior_var must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Smoothed natural-parameter chain of one topic: per-slice, per-word means
/// and variances.
#[derive(Debug, Clone)]
pub struct TopicChain {
    /// T x V smoothed means.
    pub mean: Array2<f64>,
    /// T x V smoothed variances, strictly positive.
    pub variance: Array2<f64>,
}

impl TopicChain {
    pub fn from_means(mean: Array2<f64>) -> Self {
        let variance = Array2::from_elem(mean.dim(), 1e-6);
        TopicChain { mean, variance }
    }

    pub fn num_slices(&self) -> usize {
        self.mean.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.mean.ncols()
    }
}

/// A fitted dynamic topic model.
#[derive(Debug, Clone)]
pub struct DtmModel {
    pub hyperparams: DtmHyperparams,
    pub chains: Vec<TopicChain>,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub slice_calendar: SliceCalendar,
    /// ELBO recorded after each E-step.
    pub elbo_trace: Vec<f64>,
}

/// Per-document topic mixtures with their aggregation metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaMatrix {
    pub num_topics: usize,
    pub rows: Vec<ThetaRow>,
    /// Documents that could not be classified, with the reason.
    pub failures: Vec<(String, String)>,
}

impl ThetaMatrix {
    /// Copy with buckets recomputed from dates under a different calendar.
    pub fn rebucketed(&self, calendar: crate::calendar::BucketCalendar) -> ThetaMatrix {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.bucket = crate::calendar::Bucket::of(row.date, calendar);
        }
        out
    }
}

impl DtmModel {
    pub fn num_topics(&self) -> usize {
        self.hyperparams.num_topics
    }

    pub fn num_slices(&self) -> usize {
        self.slice_calendar.len()
    }

    /// Builds a model directly from known chains (used by the sampler-based
    /// tests and by anyone replaying an external fit).
    pub fn from_chains(
        hyperparams: DtmHyperparams,
        chains: Vec<TopicChain>,
        vocabulary: &Vocabulary,
        slice_calendar: SliceCalendar,
    ) -> Result<Self> {
        hyperparams.validate()?;
        if chains.len() != hyperparams.num_topics {
            return Err(Error::InvalidParameter(
                "chain count does not match K".into(),
            ));
        }
        if chains
            .iter()
            .any(|c| c.num_slices() != slice_calendar.len() || c.vocab_size() != vocabulary.len())
        {
            return Err(Error::InvalidParameter(
                "chain dimensions do not match calendar/vocabulary".into(),
            ));
        }
        Ok(DtmModel {
            vocab_hash: vocabulary.content_hash(),
            vocab_size: vocabulary.len(),
            hyperparams,
            chains,
            slice_calendar,
            elbo_trace: Vec::new(),
        })
    }

    /// Topic-word distribution of topic `k` at slice `t`: the softmax of the
    /// smoothed chain means.
    pub fn topic_word_dist(&self, k: usize, t: usize) -> Result<Vec<f64>> {
        if k >= self.num_topics() {
            return Err(Error::IndexOutOfRange(format!("topic {k}")));
        }
        if t >= self.num_slices() {
            return Err(Error::IndexOutOfRange(format!("slice {t}")));
        }
        Ok(softmax(self.chains[k].mean.row(t).as_slice().unwrap()))
    }

    /// The `n` highest-probability tokens of topic `k` at slice `t`,
    /// descending, ties broken by token id.
    pub fn top_words(
        &self,
        vocabulary: &Vocabulary,
        k: usize,
        t: usize,
        n: usize,
    ) -> Result<Vec<(String, f64)>> {
        let ids = self.top_word_ids(k, t, n)?;
        Ok(ids
            .into_iter()
            .map(|(id, p)| (vocabulary.token(id).to_string(), p))
            .collect())
    }

    /// Like [`top_words`](Self::top_words) but returns token ids.
    pub fn top_word_ids(&self, k: usize, t: usize, n: usize) -> Result<Vec<(u32, f64)>> {
        if n > self.vocab_size {
            return Err(Error::IndexOutOfRange(format!(
                "top-n {n} exceeds vocabulary size {}",
                self.vocab_size
            )));
        }
        let dist = self.topic_word_dist(k, t)?;
        let mut idx: Vec<u32> = (0..dist.len() as u32).collect();
        idx.sort_by(|&a, &b| {
            dist[b as usize]
                .partial_cmp(&dist[a as usize])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        Ok(idx
            .into_iter()
            .take(n)
            .map(|id| (id, dist[id as usize]))
            .collect())
    }

    /// Within-topic probability series of the given tokens, one series of
    /// length T per token.
    pub fn token_trajectory(&self, k: usize, token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        for &id in token_ids {
            if id as usize >= self.vocab_size {
                return Err(Error::UnknownToken(format!("token id {id}")));
            }
        }
        let mut series = vec![Vec::with_capacity(self.num_slices()); token_ids.len()];
        for t in 0..self.num_slices() {
            let dist = self.topic_word_dist(k, t)?;
            for (s, &id) in series.iter_mut().zip(token_ids) {
                s.push(dist[id as usize]);
            }
        }
        Ok(series)
    }

    /// E-step-only inference of a document's topic mixture, holding topics
    /// fixed at the document's slice.
    pub fn infer_theta(&self, counts: &[(u32, u32)], slice: usize) -> Result<Vec<f64>> {
        if slice >= self.num_slices() {
            return Err(Error::IndexOutOfRange(format!("slice {slice}")));
        }
        let in_vocab: Vec<(u32, u32)> = counts
            .iter()
            .copied()
            .filter(|&(w, _)| (w as usize) < self.vocab_size)
            .collect();
        if in_vocab.is_empty() {
            return Err(Error::NoInVocabularyTokens);
        }
        let log_pi = self.log_topics_at(slice);
        Ok(inference::infer_theta(
            &in_vocab,
            log_pi.view(),
            &self.hyperparams,
        ))
    }

    /// Classifies every corpus document. Per-document failures are recorded
    /// as flagged rows; the batch never aborts.
    pub fn classify_all(&self, corpus: &Corpus) -> ThetaMatrix {
        let log_pi: Vec<Array2<f64>> = (0..self.num_slices())
            .map(|t| self.log_topics_at(t))
            .collect();

        let outcomes: Vec<std::result::Result<ThetaRow, (String, String)>> = corpus
            .documents
            .par_iter()
            .map(|doc| {
                if doc.slice >= self.num_slices() {
                    return Err((
                        doc.id.clone(),
                        format!("slice {} outside model range", doc.slice),
                    ));
                }
                let in_vocab: Vec<(u32, u32)> = doc
                    .counts
                    .iter()
                    .copied()
                    .filter(|&(w, _)| (w as usize) < self.vocab_size)
                    .collect();
                if in_vocab.is_empty() {
                    return Err((doc.id.clone(), "no in-vocabulary tokens".into()));
                }
                let theta =
                    inference::infer_theta(&in_vocab, log_pi[doc.slice].view(), &self.hyperparams);
                Ok(ThetaRow {
                    doc_id: doc.id.clone(),
                    institution: doc.institution.clone(),
                    date: doc.date,
                    bucket: doc.bucket,
                    theta,
                })
            })
            .collect();

        let mut rows = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(row) => rows.push(row),
                Err(f) => failures.push(f),
            }
        }
        ThetaMatrix {
            num_topics: self.num_topics(),
            rows,
            failures,
        }
    }

    /// K x V matrix of floored log topic-word probabilities at slice `t`.
    fn log_topics_at(&self, t: usize) -> Array2<f64> {
        let k = self.num_topics();
        let v = self.vocab_size;
        let mut out = Array2::zeros((k, v));
        for (kk, chain) in self.chains.iter().enumerate() {
            let row = log_softmax(chain.mean.row(t).as_slice().unwrap());
            for (w, &lp) in row.iter().enumerate() {
                out[(kk, w)] = lp.max(PROB_FLOOR.ln());
            }
        }
        out
    }
}

/// Fits the model by variational EM with per-topic Kalman smoothing.
pub fn fit(corpus: &Corpus, hyperparams: &DtmHyperparams) -> Result<DtmModel> {
    hyperparams.validate()?;
    let k = hyperparams.num_topics;
    let t_len = corpus.num_slices();
    let v = corpus.vocab_size();
    if t_len == 0 || corpus.documents.is_empty() {
        return Err(Error::InvalidParameter("corpus has no slices".into()));
    }

    // LDA initialization, replicated across slices (centered log probs).
    let lda_topics = init_lda(
        corpus,
        k,
        hyperparams.alpha,
        hyperparams.lda_eta,
        hyperparams.lda_sweeps,
        hyperparams.seed,
    )?;
    let mut init_mean = Array2::zeros((k, v));
    for kk in 0..k {
        let logs: Vec<f64> = lda_topics.row(kk).iter().map(|&p| p.ln()).collect();
        let center = logs.iter().sum::<f64>() / v as f64;
        for w in 0..v {
            init_mean[(kk, w)] = logs[w] - center;
        }
    }
    let mut chains: Vec<TopicChain> = (0..k)
        .map(|kk| {
            let mut mean = Array2::zeros((t_len, v));
            for t in 0..t_len {
                mean.row_mut(t).assign(&init_mean.row(kk));
            }
            TopicChain {
                mean,
                variance: Array2::from_elem((t_len, v), hyperparams.chain_prior_var),
            }
        })
        .collect();

    let mut gammas: Vec<Vec<f64>> = corpus
        .documents
        .iter()
        .map(|d| vec![hyperparams.alpha + d.n_tokens as f64 / k as f64; k])
        .collect();

    let q = hyperparams.sigma * hyperparams.sigma;
    let mut elbo_trace: Vec<f64> = Vec::new();

    for iteration in 0..hyperparams.em_max_iters {
        let log_pi: Vec<Array2<f64>> = (0..t_len)
            .map(|t| log_topics(&chains, t))
            .collect();

        // E-step: coordinate ascent per document, warm-started.
        let results: Vec<inference::DocResult> = corpus
            .documents
            .par_iter()
            .zip(gammas.par_iter())
            .map(|(doc, gamma0)| {
                inference::doc_estep(
                    &doc.counts,
                    log_pi[doc.slice].view(),
                    hyperparams,
                    gamma0,
                    true,
                )
            })
            .collect();

        let mut elbo = 0.0;
        let mut expected = Array3::<f64>::zeros((k, t_len, v));
        let mut totals = Array2::<f64>::zeros((k, t_len));
        for (doc, res) in corpus.documents.iter().zip(&results) {
            elbo += res.elbo;
            for (w, resp) in &res.expected {
                for (kk, &r) in resp.iter().enumerate() {
                    expected[(kk, doc.slice, *w as usize)] += r;
                    totals[(kk, doc.slice)] += r;
                }
            }
        }
        for (g, res) in gammas.iter_mut().zip(results) {
            *g = res.gamma;
        }

        if !elbo.is_finite() {
            return Err(Error::NonFiniteElbo { iteration });
        }
        let converged = elbo_trace
            .last()
            .is_some_and(|&prev| (elbo - prev).abs() <= hyperparams.em_tol * prev.abs());
        elbo_trace.push(elbo);
        if converged {
            break;
        }

        // M-step: per-word Kalman smoothing of log expected proportions.
        let candidates: Vec<TopicChain> = (0..k)
            .into_par_iter()
            .map(|kk| {
                smooth_topic(
                    &expected,
                    &totals,
                    kk,
                    init_mean.row(kk).as_slice().unwrap(),
                    q,
                    hyperparams,
                )
            })
            .collect();

        chains = accept_or_backtrack(chains, candidates, &expected, &log_pi);
    }

    Ok(DtmModel {
        hyperparams: hyperparams.clone(),
        chains,
        vocab_hash: corpus.vocabulary.content_hash(),
        vocab_size: v,
        slice_calendar: corpus.slice_calendar.clone(),
        elbo_trace,
    })
}

/// Smooths one topic's chains from the slice-level expected counts.
///
/// Expected counts enter through per-slice pseudo-observations
/// `y_{t,w} = ln((n_{t,w} + s) / (n_t + sV))` with observation variance
/// `V / (n_t + 1)` shared across words; this local bound is the one place
/// approximation quality is traded for speed.
fn smooth_topic(
    expected: &Array3<f64>,
    totals: &Array2<f64>,
    k: usize,
    prior_mean: &[f64],
    transition_var: f64,
    hp: &DtmHyperparams,
) -> TopicChain {
    let (_, t_len, v) = expected.dim();
    let s = hp.count_smoothing;
    let sv = s * v as f64;

    let mut obs_var = vec![0.0; t_len];
    let mut observed = vec![false; t_len];
    for t in 0..t_len {
        let n_t = totals[(k, t)];
        observed[t] = n_t > 0.0;
        obs_var[t] = (v as f64 / (n_t + 1.0)).max(1e-8);
    }

    let mut mean = Array2::zeros((t_len, v));
    let mut variance = Array2::zeros((t_len, v));
    let mut obs: Vec<Option<f64>> = vec![None; t_len];
    for w in 0..v {
        for t in 0..t_len {
            obs[t] = observed[t].then(|| {
                ((expected[(k, t, w)] + s) / (totals[(k, t)] + sv)).ln()
            });
        }
        let smoothed = kalman::smooth_chain(
            prior_mean[w],
            hp.chain_prior_var,
            transition_var,
            &obs,
            &obs_var,
        );
        for t in 0..t_len {
            mean[(t, w)] = smoothed.mean[t];
            variance[(t, w)] = smoothed.variance[t].max(1e-12);
        }
    }
    TopicChain { mean, variance }
}

/// Accepts the candidate chains if they do not lower the count-weighted
/// log-probability term of the bound; otherwise halves the step toward the
/// previous chains until they don't (keeping the old chains as a last
/// resort).
fn accept_or_backtrack(
    old: Vec<TopicChain>,
    candidate: Vec<TopicChain>,
    expected: &Array3<f64>,
    old_log_pi: &[Array2<f64>],
) -> Vec<TopicChain> {
    let score_old = count_log_prob(expected, old_log_pi);
    let tol = 1e-9 * (1.0 + score_old.abs());

    let mut eta = 1.0;
    for _ in 0..40 {
        let blended: Vec<TopicChain> = old
            .iter()
            .zip(&candidate)
            .map(|(o, c)| {
                let mean = &o.mean * (1.0 - eta) + &c.mean * eta;
                let variance = &o.variance * (1.0 - eta) + &c.variance * eta;
                TopicChain { mean, variance }
            })
            .collect();
        let log_pi: Vec<Array2<f64>> = (0..old_log_pi.len())
            .map(|t| log_topics(&blended, t))
            .collect();
        if count_log_prob(expected, &log_pi) >= score_old - tol {
            return blended;
        }
        eta *= 0.5;
    }
    old
}

fn count_log_prob(expected: &Array3<f64>, log_pi: &[Array2<f64>]) -> f64 {
    let (k, t_len, v) = expected.dim();
    let mut total = 0.0;
    for t in 0..t_len {
        let lp = &log_pi[t];
        for kk in 0..k {
            for w in 0..v {
                let n = expected[(kk, t, w)];
                if n > 0.0 {
                    total += n * lp[(kk, w)];
                }
            }
        }
    }
    total
}

fn log_topics(chains: &[TopicChain], t: usize) -> Array2<f64> {
    let k = chains.len();
    let v = chains[0].vocab_size();
    let mut out = Array2::zeros((k, v));
    for (kk, chain) in chains.iter().enumerate() {
        let row = log_softmax(chain.mean.row(t).as_slice().unwrap());
        for (w, &lp) in row.iter().enumerate() {
            out[(kk, w)] = lp.max(PROB_FLOOR.ln());
        }
    }
    out
}

pub(crate) fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

pub(crate) fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    xs.iter().map(|&x| x - lse).collect()
}

/// Block-structured chains for tests and examples: topic `k` puts extra mass
/// `strength` (in natural-parameter space) on its own V/K contiguous words,
/// constant over time.
pub fn separated_chains(k: usize, t_len: usize, v: usize, strength: f64) -> Vec<TopicChain> {
    let block = v / k;
    (0..k)
        .map(|kk| {
            let mut mean = Array2::zeros((t_len, v));
            for t in 0..t_len {
                for w in 0..v {
                    if w >= kk * block && w < (kk + 1) * block {
                        mean[(t, w)] = strength;
                    }
                }
            }
            TopicChain::from_means(mean)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtm::align::{align_topics, l1_distance};

    fn toy_model(means: Vec<Array2<f64>>) -> DtmModel {
        let v = means[0].ncols();
        let t = means[0].nrows();
        let k = means.len();
        let mut hp = DtmHyperparams::new(k.max(2));
        hp.num_topics = k;
        DtmModel {
            hyperparams: hp,
            chains: means.into_iter().map(TopicChain::from_means).collect(),
            vocab_hash: "test".into(),
            vocab_size: v,
            slice_calendar: SliceCalendar::new(2000, 2000 + t as i32 - 1).unwrap(),
            elbo_trace: Vec::new(),
        }
    }

    #[test]
    fn softmax_of_constant_row_is_uniform() {
        let model = toy_model(vec![Array2::zeros((1, 4)), Array2::zeros((1, 4))]);
        let dist = model.topic_word_dist(0, 0).unwrap();
        for &p in &dist {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!(model.topic_word_dist(2, 0).is_err());
        assert!(model.topic_word_dist(0, 1).is_err());
    }

    #[test]
    fn softmax_of_ln2_row() {
        let mut m = Array2::zeros((1, 3));
        m[(0, 0)] = 2.0f64.ln();
        let model = toy_model(vec![m.clone(), m]);
        let dist = model.topic_word_dist(0, 0).unwrap();
        assert!((dist[0] - 0.5).abs() < 1e-12);
        assert!((dist[1] - 0.25).abs() < 1e-12);
        assert!((dist[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn top_words_full_sort_and_tie_rule() {
        let mut m = Array2::zeros((1, 3));
        m[(0, 0)] = 2.0f64.ln();
        let model = toy_model(vec![m.clone(), m]);
        // (0.5, 0.25, 0.25): tie between ids 1 and 2 resolved by id.
        let top = model.top_word_ids(0, 0, 3).unwrap();
        assert_eq!(top.iter().map(|&(id, _)| id).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(model.top_word_ids(0, 0, 4).is_err());
    }

    #[test]
    fn dominant_word_ranks_first() {
        let mut m = Array2::zeros((2, 5));
        m[(0, 3)] = 6.0;
        m[(1, 3)] = 6.0;
        let model = toy_model(vec![m.clone(), m]);
        assert_eq!(model.top_word_ids(0, 1, 1).unwrap()[0].0, 3);
    }

    #[test]
    fn static_model_has_constant_trajectories() {
        let chains = separated_chains(2, 4, 10, 3.0);
        let model = toy_model(chains.into_iter().map(|c| c.mean).collect());
        let series = model.token_trajectory(0, &[0, 7]).unwrap();
        for s in &series {
            for t in 1..s.len() {
                assert!((s[t] - s[0]).abs() < 1e-15);
            }
        }
        assert!(model.token_trajectory(0, &[99]).is_err());
    }

    #[test]
    fn absent_token_has_tiny_positive_trajectory() {
        let chains = separated_chains(2, 3, 10, 8.0);
        let model = toy_model(chains.into_iter().map(|c| c.mean).collect());
        // word 9 belongs to topic 1's block; within topic 0 it is tiny but positive
        let series = model.token_trajectory(0, &[9]).unwrap();
        for &p in &series[0] {
            assert!(p > 0.0 && p < 1e-3);
        }
    }

    #[test]
    fn injected_drift_is_recovered_monotone() {
        // Chain with an upward drift on word 0; fit against sampled data.
        let t_len = 6;
        let v = 12;
        let mut hp = DtmHyperparams::new(2);
        hp.sigma = 0.3;
        hp.lda_sweeps = 300;
        hp.seed = 5;
        let mut chains = separated_chains(2, t_len, v, 3.0);
        for t in 0..t_len {
            chains[0].mean[(t, 0)] = 1.0 + 0.8 * t as f64;
        }
        let cfg = SyntheticConfig::new(150, DocLength::Fixed(80));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 17).unwrap();
        let model = fit(&corpus, &hp).unwrap();

        // Align fitted topics to the truth at slice 0.
        let truth: Vec<Vec<f64>> = (0..2)
            .map(|k| softmax(chains[k].mean.row(0).as_slice().unwrap()))
            .collect();
        let fitted: Vec<Vec<f64>> = (0..2).map(|k| model.topic_word_dist(k, 0).unwrap()).collect();
        let perm = align_topics(&fitted, &truth);
        let drifting = perm.iter().position(|&p| p == 0).unwrap();

        let series = model.token_trajectory(drifting, &[0]).unwrap();
        let rho = spearman(&series[0]);
        assert!(rho > 0.9, "spearman {rho}, series {:?}", series[0]);
    }

    fn spearman(series: &[f64]) -> f64 {
        let n = series.len();
        let mut rank: Vec<usize> = (0..n).collect();
        rank.sort_by(|&a, &b| series[a].partial_cmp(&series[b]).unwrap());
        let mut r = vec![0.0; n];
        for (pos, &i) in rank.iter().enumerate() {
            r[i] = pos as f64;
        }
        let mean = (n as f64 - 1.0) / 2.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &ri) in r.iter().enumerate() {
            num += (i as f64 - mean) * (ri - mean);
            den += (i as f64 - mean).powi(2);
        }
        num / den
    }

    #[test]
    fn sigma_zero_fit_is_static() {
        let mut hp = DtmHyperparams::new(2);
        hp.sigma = 0.0;
        hp.lda_sweeps = 200;
        hp.em_max_iters = 20;
        let chains = separated_chains(2, 3, 10, 4.0);
        let cfg = SyntheticConfig::new(60, DocLength::Fixed(50));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 2).unwrap();
        let model = fit(&corpus, &hp).unwrap();
        for chain in &model.chains {
            for t in 1..chain.num_slices() {
                for w in 0..chain.vocab_size() {
                    assert!(
                        (chain.mean[(t, w)] - chain.mean[(0, w)]).abs() < 1e-6,
                        "chain drifted at t={t} w={w}"
                    );
                }
            }
        }
    }

    #[test]
    fn elbo_trace_is_monotone() {
        let mut hp = DtmHyperparams::new(3);
        hp.lda_sweeps = 200;
        hp.em_max_iters = 25;
        let chains = separated_chains(3, 3, 21, 4.0);
        let cfg = SyntheticConfig::new(50, DocLength::Fixed(40));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 8).unwrap();
        let model = fit(&corpus, &hp).unwrap();
        assert!(model.elbo_trace.len() >= 2);
        for i in 1..model.elbo_trace.len() {
            let prev = model.elbo_trace[i - 1];
            assert!(
                model.elbo_trace[i] >= prev - 1e-6 * prev.abs(),
                "ELBO decreased at step {i}: {} -> {}",
                prev,
                model.elbo_trace[i]
            );
        }
    }

    #[test]
    fn fit_recovers_separated_topics() {
        let mut hp = DtmHyperparams::new(3);
        hp.sigma = 0.02;
        hp.lda_sweeps = 400;
        hp.seed = 1;
        let chains = separated_chains(3, 4, 30, 4.0);
        let cfg = SyntheticConfig::new(400, DocLength::Fixed(150));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 11).unwrap();
        let model = fit(&corpus, &hp).unwrap();

        let truth: Vec<Vec<f64>> = (0..3)
            .map(|k| softmax(chains[k].mean.row(0).as_slice().unwrap()))
            .collect();
        let fitted: Vec<Vec<f64>> = (0..3).map(|k| model.topic_word_dist(k, 0).unwrap()).collect();
        let perm = align_topics(&fitted, &truth);

        for t in 0..4 {
            for k in 0..3 {
                let f = model.topic_word_dist(k, t).unwrap();
                let tr = softmax(chains[perm[k]].mean.row(t).as_slice().unwrap());
                let d = l1_distance(&f, &tr);
                assert!(d <= 0.15, "topic {k} slice {t}: L1 {d}");
            }
        }
    }

    #[test]
    fn infer_theta_is_deterministic_and_on_simplex() {
        let chains = separated_chains(2, 2, 10, 4.0);
        let mut hp = DtmHyperparams::new(2);
        hp.alpha = 0.5;
        let entries: Vec<String> = (0..10).map(|w| format!("w{w:04}")).collect();
        let vocab = crate::corpus::build_vocabulary(&[entries.clone()], 1, 1.0).unwrap();
        let model =
            DtmModel::from_chains(hp, chains, &vocab, SliceCalendar::new(2000, 2001).unwrap())
                .unwrap();

        let counts = vec![(0u32, 3u32), (1, 2), (7, 1)];
        let a = model.infer_theta(&counts, 0).unwrap();
        let b = model.infer_theta(&counts, 0).unwrap();
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(a.iter().all(|&p| p >= 0.0));

        assert!(matches!(
            model.infer_theta(&[(99, 1)], 0),
            Err(Error::NoInVocabularyTokens)
        ));
    }
}
