//! Scalar linear-Gaussian chain: Kalman filter and RTS smoother.
//!
//! The chain is a random walk observed with per-step noise:
//!
//! ```text
//! x_0 ~ N(m0, p0),   x_t = x_{t-1} + w_t,  w_t ~ N(0, q)
//! y_t = x_t + v_t,   v_t ~ N(0, r_t)       (y_t may be missing)
//! ```
//!
//! `q = 0` is allowed and collapses the chain to a single shared state, so
//! the smoothed means are exactly constant over time.

/// Posterior marginals of the chain given all observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Runs the filter and RTS smoother over `observations`; `None` marks a
/// missing observation. `variances[t]` is ignored where the observation is
/// missing.
pub fn smooth_chain(
    prior_mean: f64,
    prior_var: f64,
    transition_var: f64,
    observations: &[Option<f64>],
    variances: &[f64],
) -> Smoothed {
    let t_len = observations.len();
    assert_eq!(t_len, variances.len(), "observation/variance length mismatch");
    assert!(prior_var > 0.0, "prior variance must be positive");
    assert!(transition_var >= 0.0, "transition variance must be non-negative");

    let mut m_filt = vec![0.0; t_len];
    let mut p_filt = vec![0.0; t_len];
    let mut m_pred = vec![0.0; t_len];
    let mut p_pred = vec![0.0; t_len];

    for t in 0..t_len {
        let (mp, pp) = if t == 0 {
            (prior_mean, prior_var)
        } else {
            (m_filt[t - 1], p_filt[t - 1] + transition_var)
        };
        m_pred[t] = mp;
        p_pred[t] = pp;
        match observations[t] {
            Some(y) => {
                let r = variances[t];
                debug_assert!(r > 0.0, "observation variance must be positive");
                let s = pp + r;
                let gain = pp / s;
                m_filt[t] = mp + gain * (y - mp);
                p_filt[t] = (1.0 - gain) * pp;
            }
            None => {
                m_filt[t] = mp;
                p_filt[t] = pp;
            }
        }
    }

    let mut mean = m_filt.clone();
    let mut variance = p_filt.clone();
    for t in (0..t_len.saturating_sub(1)).rev() {
        let gain = if p_pred[t + 1] > 0.0 {
            p_filt[t] / p_pred[t + 1]
        } else {
            0.0
        };
        if gain == 1.0 {
            // q = 0: the states coincide, keep them exactly equal.
            mean[t] = mean[t + 1];
            variance[t] = variance[t + 1];
        } else {
            mean[t] = m_filt[t] + gain * (mean[t + 1] - m_pred[t + 1]);
            variance[t] = p_filt[t] + gain * gain * (variance[t + 1] - p_pred[t + 1]);
        }
    }

    Smoothed { mean, variance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    /// Brute-force oracle: condition the dense joint Gaussian prior on the
    /// observed coordinates. The random-walk prior over (x_0..x_{T-1}) has
    /// mean m0 and covariance Sigma_ij = p0 + q * min(i, j); conditioning
    /// uses the form that tolerates singular Sigma (q = 0).
    fn dense_oracle(
        m0: f64,
        p0: f64,
        q: f64,
        obs: &[Option<f64>],
        vars: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let t = obs.len();
        let sigma = DMatrix::from_fn(t, t, |i, j| p0 + q * i.min(j) as f64);
        let observed: Vec<usize> = (0..t).filter(|&i| obs[i].is_some()).collect();
        let n = observed.len();
        if n == 0 {
            return (vec![m0; t], (0..t).map(|i| p0 + q * i as f64).collect());
        }
        let h = DMatrix::from_fn(n, t, |r, c| if observed[r] == c { 1.0 } else { 0.0 });
        let r_mat = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                vars[observed[i]]
            } else {
                0.0
            }
        });
        let y = DVector::from_iterator(n, observed.iter().map(|&i| obs[i].unwrap()));
        let mu = DVector::from_element(t, m0);

        let s = &h * &sigma * h.transpose() + r_mat;
        let s_inv = s.try_inverse().expect("innovation covariance invertible");
        let gain = &sigma * h.transpose() * s_inv;
        let post_mean = &mu + &gain * (y - &h * &mu);
        let post_cov = &sigma - &gain * &h * &sigma;
        (
            post_mean.iter().copied().collect(),
            (0..t).map(|i| post_cov[(i, i)]).collect(),
        )
    }

    fn assert_matches_oracle(m0: f64, p0: f64, q: f64, obs: &[Option<f64>], vars: &[f64]) {
        let got = smooth_chain(m0, p0, q, obs, vars);
        let (want_mean, want_var) = dense_oracle(m0, p0, q, obs, vars);
        for t in 0..obs.len() {
            assert!(
                (got.mean[t] - want_mean[t]).abs() < 1e-10,
                "mean[{t}]: {} vs oracle {}",
                got.mean[t],
                want_mean[t]
            );
            assert!(
                (got.variance[t] - want_var[t]).abs() < 1e-10,
                "var[{t}]: {} vs oracle {}",
                got.variance[t],
                want_var[t]
            );
        }
    }

    #[test]
    fn matches_dense_conditioning_oracle() {
        let obs: Vec<Option<f64>> = [0.3, -0.5, 0.9, 1.4, 0.2, -0.1, 0.8, 0.05]
            .iter()
            .map(|&v| Some(v))
            .collect();
        let vars = vec![0.2, 0.5, 0.1, 0.3, 0.25, 0.15, 0.4, 0.2];
        assert_matches_oracle(0.1, 1.3, 0.07, &obs, &vars);
    }

    #[test]
    fn matches_oracle_with_missing_observations() {
        let obs = vec![Some(0.4), None, Some(-0.2), None, None, Some(1.1)];
        let vars = vec![0.3, 1.0, 0.2, 1.0, 1.0, 0.5];
        assert_matches_oracle(-0.2, 0.8, 0.15, &obs, &vars);
    }

    #[test]
    fn zero_transition_variance_gives_constant_chain() {
        let obs: Vec<Option<f64>> = [1.0, 2.0, 0.5, 1.5].iter().map(|&v| Some(v)).collect();
        let vars = vec![0.5, 0.25, 0.5, 1.0];
        let got = smooth_chain(0.0, 10.0, 0.0, &obs, &vars);
        for t in 1..obs.len() {
            assert_eq!(got.mean[t], got.mean[0], "means identical with q = 0");
            assert_eq!(got.variance[t], got.variance[0]);
        }
        assert_matches_oracle(0.0, 10.0, 0.0, &obs, &vars);
    }

    #[test]
    fn single_step_is_scalar_bayes_update() {
        let got = smooth_chain(1.0, 2.0, 0.3, &[Some(3.0)], &[1.0]);
        // Posterior of N(1, 2) given y = 3 with noise 1.
        let want_mean = 1.0 + 2.0 / 3.0 * 2.0;
        let want_var = 2.0 - 2.0 * 2.0 / 3.0;
        assert!((got.mean[0] - want_mean).abs() < 1e-14);
        assert!((got.variance[0] - want_var).abs() < 1e-14);
    }

    #[test]
    fn smoothed_variances_stay_positive() {
        let obs: Vec<Option<f64>> = (0..8).map(|i| Some(i as f64 * 0.1)).collect();
        let vars = vec![1e-6; 8];
        let got = smooth_chain(0.0, 1.0, 0.0, &obs, &vars);
        assert!(got.variance.iter().all(|&v| v > 0.0));
    }
}
