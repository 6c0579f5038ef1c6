//! Per-document mean-field updates shared by fitting and classification.

use chrono::NaiveDate;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::calendar::Bucket;

use super::DtmHyperparams;

const MAX_DOC_ITERS: usize = 200;

/// One classified document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRow {
    pub doc_id: String,
    pub institution: String,
    pub date: NaiveDate,
    pub bucket: Bucket,
    /// Topic mixture on the K-simplex.
    pub theta: Vec<f64>,
}

pub(crate) struct DocResult {
    pub gamma: Vec<f64>,
    pub elbo: f64,
    /// Per unique token: count-scaled topic responsibilities.
    pub expected: Vec<(u32, Vec<f64>)>,
}

/// Coordinate ascent on the per-document bound, holding topics fixed.
///
/// Alternates exact updates of the token responsibilities and the Dirichlet
/// parameter until the mean absolute gamma change drops below `doc_tol`.
/// Returns the bound value evaluated at the final variational parameters.
pub(crate) fn doc_estep(
    counts: &[(u32, u32)],
    log_pi: ArrayView2<f64>,
    hp: &DtmHyperparams,
    gamma_init: &[f64],
    want_expected: bool,
) -> DocResult {
    let k = log_pi.nrows();
    let alpha = hp.alpha;
    let mut gamma = gamma_init.to_vec();
    let mut elog_theta = vec![0.0; k];
    let mut scores = vec![0.0; k];

    for _ in 0..MAX_DOC_ITERS {
        update_elog_theta(&gamma, &mut elog_theta);
        let mut new_gamma = vec![alpha; k];
        for &(w, c) in counts {
            let lse = responsibilities(&elog_theta, &log_pi, w, &mut scores);
            for (g, &s) in new_gamma.iter_mut().zip(scores.iter()) {
                *g += c as f64 * (s - lse).exp();
            }
        }
        let delta: f64 =
            gamma.iter().zip(&new_gamma).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
        gamma = new_gamma;
        if delta < hp.doc_tol {
            break;
        }
    }

    // Evaluate the bound and expected counts at the final parameters.
    update_elog_theta(&gamma, &mut elog_theta);
    let gamma_sum: f64 = gamma.iter().sum();
    let mut elbo = ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha) - ln_gamma(gamma_sum);
    for kk in 0..k {
        elbo += (alpha - gamma[kk]) * elog_theta[kk] + ln_gamma(gamma[kk]);
    }

    let mut expected = Vec::with_capacity(if want_expected { counts.len() } else { 0 });
    for &(w, c) in counts {
        let lse = responsibilities(&elog_theta, &log_pi, w, &mut scores);
        elbo += c as f64 * lse;
        if want_expected {
            let resp: Vec<f64> = scores.iter().map(|&s| c as f64 * (s - lse).exp()).collect();
            expected.push((w, resp));
        }
    }

    DocResult {
        gamma,
        elbo,
        expected,
    }
}

/// Variational mean mixture for a document at fixed topics.
pub(crate) fn infer_theta(
    counts: &[(u32, u32)],
    log_pi: ArrayView2<f64>,
    hp: &DtmHyperparams,
) -> Vec<f64> {
    let k = log_pi.nrows();
    let n: u32 = counts.iter().map(|&(_, c)| c).sum();
    let gamma0 = vec![hp.alpha + n as f64 / k as f64; k];
    let res = doc_estep(counts, log_pi, hp, &gamma0, false);
    let sum: f64 = res.gamma.iter().sum();
    res.gamma.into_iter().map(|g| g / sum).collect()
}

fn update_elog_theta(gamma: &[f64], out: &mut [f64]) {
    let dg_sum = digamma(gamma.iter().sum());
    for (o, &g) in out.iter_mut().zip(gamma) {
        *o = digamma(g) - dg_sum;
    }
}

/// Fills `scores` with `elog_theta + log pi_w` and returns its log-sum-exp;
/// responsibilities are `exp(scores - lse)`.
fn responsibilities(
    elog_theta: &[f64],
    log_pi: &ArrayView2<f64>,
    w: u32,
    scores: &mut [f64],
) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (kk, s) in scores.iter_mut().enumerate() {
        *s = elog_theta[kk] + log_pi[(kk, w as usize)];
        max = max.max(*s);
    }
    max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn log_pi_of(rows: &[Vec<f64>]) -> Array2<f64> {
        let k = rows.len();
        let v = rows[0].len();
        Array2::from_shape_fn((k, v), |(i, j)| rows[i][j].ln())
    }

    #[test]
    fn pure_topic_document_concentrates() {
        // Topic 0 owns words 0..3, topic 1 owns 4..7.
        let lp = log_pi_of(&[
            vec![0.24, 0.24, 0.24, 0.24, 0.01, 0.01, 0.01, 0.01],
            vec![0.01, 0.01, 0.01, 0.01, 0.24, 0.24, 0.24, 0.24],
        ]);
        let mut hp = DtmHyperparams::new(2);
        hp.alpha = 0.5;
        let theta = infer_theta(&[(0, 50), (1, 40), (2, 60)], lp.view(), &hp);
        assert!(theta[0] > 0.95, "theta = {theta:?}");
    }

    #[test]
    fn expected_counts_conserve_mass() {
        let lp = log_pi_of(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]]);
        let hp = DtmHyperparams::new(2);
        let counts = vec![(0u32, 3u32), (2, 7)];
        let res = doc_estep(&counts, lp.view(), &hp, &[1.0, 1.0], true);
        let total: f64 = res.expected.iter().flat_map(|(_, r)| r.iter()).sum();
        assert!((total - 10.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_does_not_lower_the_bound() {
        let lp = log_pi_of(&[vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6]]);
        let hp = DtmHyperparams::new(2);
        let counts = vec![(0u32, 5u32), (1, 2), (2, 1)];
        let cold = doc_estep(&counts, lp.view(), &hp, &[4.0, 4.0], false);
        let warm = doc_estep(&counts, lp.view(), &hp, &cold.gamma, false);
        assert!(warm.elbo >= cold.elbo - 1e-9 * cold.elbo.abs());
    }
}
