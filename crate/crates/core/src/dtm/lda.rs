//! Collapsed Gibbs LDA over the pooled (time-ignored) corpus.
//!
//! Used to initialize the chain natural parameters and as the fast scoring
//! proxy in topic-count selection. Token-topic assignments are resampled from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + alpha) * (n_kw + eta) / (n_k + eta V)
//! ```
//!
//! and the returned topics are the smoothed count proportions
//! `(n_kw + eta) / (n_k + eta V)` after the final sweep. Fully deterministic
//! for a given seed.

use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Pooled LDA fit via collapsed Gibbs sampling; returns K topic-word
/// simplices as the rows of a K x V matrix.
pub fn init_lda(
    corpus: &Corpus,
    num_topics: usize,
    alpha: f64,
    eta: f64,
    sweeps: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if num_topics == 0 {
        return Err(Error::InvalidParameter("topic count must be >= 1".into()));
    }
    if alpha <= 0.0 || eta <= 0.0 {
        return Err(Error::InvalidParameter(
            "alpha and eta must be positive".into(),
        ));
    }
    let v = corpus.vocab_size();
    let k = num_topics;

    // Flatten documents to token occurrences in deterministic order.
    let docs: Vec<Vec<u32>> = corpus
        .documents
        .iter()
        .map(|d| {
            let mut toks = Vec::with_capacity(d.n_tokens as usize);
            for &(w, c) in &d.counts {
                for _ in 0..c {
                    toks.push(w);
                }
            }
            toks
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dk = vec![0u32; docs.len() * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<u32>> = Vec::with_capacity(docs.len());

    for (d, toks) in docs.iter().enumerate() {
        let mut zd = Vec::with_capacity(toks.len());
        for &w in toks {
            let topic = rng.random_range(0..k) as u32;
            zd.push(topic);
            n_dk[d * k + topic as usize] += 1;
            n_kw[topic as usize * v + w as usize] += 1;
            n_k[topic as usize] += 1;
        }
        z.push(zd);
    }

    let eta_v = eta * v as f64;
    let mut weights = vec![0.0f64; k];
    for _sweep in 0..sweeps {
        if k == 1 {
            break; // single topic: assignments cannot change
        }
        for (d, toks) in docs.iter().enumerate() {
            for (i, &w) in toks.iter().enumerate() {
                let old = z[d][i] as usize;
                n_dk[d * k + old] -= 1;
                n_kw[old * v + w as usize] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for (t, wt) in weights.iter_mut().enumerate() {
                    let term = (n_dk[d * k + t] as f64 + alpha)
                        * (n_kw[t * v + w as usize] as f64 + eta)
                        / (n_k[t] as f64 + eta_v);
                    total += term;
                    *wt = total;
                }
                let u: f64 = rng.random_range(0.0..total);
                let new = weights.partition_point(|&cum| cum <= u).min(k - 1);

                z[d][i] = new as u32;
                n_dk[d * k + new] += 1;
                n_kw[new * v + w as usize] += 1;
                n_k[new] += 1;
            }
        }
    }

    let mut topics = Array2::zeros((k, v));
    for t in 0..k {
        let denom = n_k[t] as f64 + eta_v;
        for w in 0..v {
            topics[(t, w)] = (n_kw[t * v + w] as f64 + eta) / denom;
        }
    }
    Ok(topics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtm::sampler::{sample_corpus, DocLength, SyntheticConfig};
    use crate::dtm::{separated_chains, DtmHyperparams};

    #[test]
    fn k1_equals_smoothed_empirical_distribution() {
        let hp = DtmHyperparams::new(3);
        let chains = separated_chains(3, 1, 12, 4.0);
        let cfg = SyntheticConfig::new(30, DocLength::Fixed(40));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 7).unwrap();

        let eta = 0.1;
        let topics = init_lda(&corpus, 1, 1.0, eta, 50, 0).unwrap();

        let v = corpus.vocab_size();
        let mut counts = vec![0u64; v];
        let mut total = 0u64;
        for d in &corpus.documents {
            for &(w, c) in &d.counts {
                counts[w as usize] += c as u64;
                total += c as u64;
            }
        }
        for w in 0..v {
            let want = (counts[w] as f64 + eta) / (total as f64 + eta * v as f64);
            assert!((topics[(0, w)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let hp = DtmHyperparams::new(3);
        let chains = separated_chains(3, 1, 30, 4.0);
        let cfg = SyntheticConfig::new(40, DocLength::Fixed(60));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 3).unwrap();

        let a = init_lda(&corpus, 3, 1.0, 0.1, 100, 11).unwrap();
        let b = init_lda(&corpus, 3, 1.0, 0.1, 100, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rows_are_simplices() {
        let hp = DtmHyperparams::new(2);
        let chains = separated_chains(2, 1, 20, 4.0);
        let cfg = SyntheticConfig::new(25, DocLength::Fixed(30));
        let (corpus, _) = sample_corpus(&hp, &chains, &cfg, 5).unwrap();
        let topics = init_lda(&corpus, 4, 0.5, 0.1, 60, 2).unwrap();
        for t in 0..4 {
            let s: f64 = topics.row(t).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(topics.row(t).iter().all(|&p| p > 0.0));
        }
    }
}
