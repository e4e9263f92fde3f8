//! Per-pitch two-state on/off HMM: sigmoid observation model, scaled
//! forward-backward smoothing, Viterbi decoding.
//!
//! Each pitch row is an independent chain over hidden states q_t in {0, 1}
//! with transitions (tau0: off->on, tau1: on->off), the convention q_0 = 0
//! (everything starts inactive, so P(q_1 = 1) = tau0), and observation
//! weights given by a parametrized sigmoid of the log activity value.

use crate::error::{Error, Result};

/// Probability clamp keeping transitions away from absorbing states.
pub const PROB_EPS: f64 = 1e-4;

/// Default off->on transition probability when nothing can be estimated.
pub const DEFAULT_TAU0: f64 = 0.01;
/// Default on->off transition probability when nothing can be estimated.
pub const DEFAULT_TAU1: f64 = 0.05;

/// Optimization box for alpha (slope smoothing, exponent of the sigmoid
/// steepness) and beta (threshold contrast, dB).
pub const ALPHA_BOUNDS: (f64, f64) = (-3.0, 3.0);
pub const BETA_BOUNDS: (f64, f64) = (-6.0, 0.0);

/// Full per-pitch HMM parameter set {tau0, tau1, alpha, beta}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchHmmParams {
    pub tau0: f64,
    pub tau1: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PitchHmmParams {
    pub fn new(tau0: f64, tau1: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !tau0.is_finite() || !tau1.is_finite() || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Invalid("HMM parameters must be finite".into()));
        }
        Ok(PitchHmmParams {
            tau0: clamp_prob(tau0),
            tau1: clamp_prob(tau1),
            alpha,
            beta,
        })
    }
}

/// One `PitchHmmParams` per pitch row.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParamSet {
    pub per_pitch: Vec<PitchHmmParams>,
}

impl HmmParamSet {
    /// The soft-thresholding configuration: every pitch at (alpha, beta) =
    /// (0, beta_ht) with its own transitions.
    pub fn soft_threshold(beta_ht: f64, transitions: &[(f64, f64)]) -> Result<Self> {
        let per_pitch = transitions
            .iter()
            .map(|&(t0, t1)| PitchHmmParams::new(t0, t1, 0.0, beta_ht))
            .collect::<Result<Vec<_>>>()?;
        Ok(HmmParamSet { per_pitch })
    }

    pub fn len(&self) -> usize {
        self.per_pitch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_pitch.is_empty()
    }
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// P(q_t = 1 | x) under the sigmoid observation model:
/// logistic(e^alpha * (x - beta)), computed without overflow. Equals 0.5
/// exactly at x = beta for any alpha; the complement is the off probability.
#[inline]
pub fn observation_posterior_on(x: f64, alpha: f64, beta: f64) -> f64 {
    logistic(alpha.exp() * (x - beta))
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Smoothed posteriors eta_1(t) = P(q_t = 1 | x_1..x_T) from rescaled
/// forward-backward recursions. Safe for rows up to 10^7 frames.
pub fn forward_backward(xs: &[f64], params: &PitchHmmParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; xs.len()];
    forward_backward_into(xs, params, &mut out)?;
    Ok(out)
}

/// Buffer-reusing variant for hot loops (training objectives, grid sweeps).
pub fn forward_backward_into(xs: &[f64], params: &PitchHmmParams, out: &mut [f64]) -> Result<()> {
    let t_len = xs.len();
    if t_len == 0 {
        return Err(Error::Invalid("forward-backward on empty observation row".into()));
    }
    debug_assert_eq!(out.len(), t_len);
    let tau0 = clamp_prob(params.tau0);
    let tau1 = clamp_prob(params.tau1);
    let ealpha = params.alpha.exp();
    // transition matrix rows: from state 0, from state 1
    let a00 = 1.0 - tau0;
    let a01 = tau0;
    let a10 = tau1;
    let a11 = 1.0 - tau1;

    // Observation on-probabilities; reused in the backward pass.
    let b_on: Vec<f64> = xs.iter().map(|&x| logistic(ealpha * (x - params.beta))).collect();

    // Scaled forward pass.
    let mut fwd0 = vec![0.0; t_len];
    let mut fwd1 = vec![0.0; t_len];
    let mut scale = vec![0.0; t_len];
    {
        let mut f0 = (1.0 - tau0) * (1.0 - b_on[0]);
        let mut f1 = tau0 * b_on[0];
        let mut c = f0 + f1;
        if !(c > 0.0) {
            return Err(Error::Numerical("forward message vanished at frame 0".into()));
        }
        fwd0[0] = f0 / c;
        fwd1[0] = f1 / c;
        scale[0] = c;
        for t in 1..t_len {
            f0 = (fwd0[t - 1] * a00 + fwd1[t - 1] * a10) * (1.0 - b_on[t]);
            f1 = (fwd0[t - 1] * a01 + fwd1[t - 1] * a11) * b_on[t];
            c = f0 + f1;
            if !(c > 0.0) {
                return Err(Error::Numerical(format!("forward message vanished at frame {t}")));
            }
            fwd0[t] = f0 / c;
            fwd1[t] = f1 / c;
            scale[t] = c;
        }
    }

    // Scaled backward pass fused with the posterior computation.
    let mut bwd0 = 1.0;
    let mut bwd1 = 1.0;
    out[t_len - 1] = fwd1[t_len - 1];
    for t in (0..t_len - 1).rev() {
        let obs0 = 1.0 - b_on[t + 1];
        let obs1 = b_on[t + 1];
        let n0 = (a00 * obs0 * bwd0 + a01 * obs1 * bwd1) / scale[t + 1];
        let n1 = (a10 * obs0 * bwd0 + a11 * obs1 * bwd1) / scale[t + 1];
        bwd0 = n0;
        bwd1 = n1;
        let g0 = fwd0[t] * bwd0;
        let g1 = fwd1[t] * bwd1;
        let z = g0 + g1;
        if !(z > 0.0) {
            return Err(Error::Numerical(format!("posterior vanished at frame {t}")));
        }
        out[t] = g1 / z;
    }
    Ok(())
}

/// Maximum-weight state path (argmax over hidden sequences), same q_0 = 0
/// convention as the smoother. Ties break toward state 0.
pub fn viterbi(xs: &[f64], params: &PitchHmmParams) -> Result<Vec<u8>> {
    let t_len = xs.len();
    if t_len == 0 {
        return Err(Error::Invalid("viterbi on empty observation row".into()));
    }
    let tau0 = clamp_prob(params.tau0);
    let tau1 = clamp_prob(params.tau1);
    let ealpha = params.alpha.exp();
    let la = [
        [(1.0 - tau0).ln(), tau0.ln()],
        [tau1.ln(), (1.0 - tau1).ln()],
    ];

    let mut back: Vec<[u8; 2]> = vec![[0, 0]; t_len];
    let b_on0 = logistic(ealpha * (xs[0] - params.beta));
    let mut d0 = (1.0 - tau0).ln() + (1.0 - b_on0).ln();
    let mut d1 = tau0.ln() + b_on0.ln();
    for t in 1..t_len {
        let b_on = logistic(ealpha * (xs[t] - params.beta));
        let (lb0, lb1) = ((1.0 - b_on).ln(), b_on.ln());
        // predecessor choice; ties go to state 0
        let (p0, s0) = if d1 + la[1][0] > d0 + la[0][0] {
            (1u8, d1 + la[1][0])
        } else {
            (0u8, d0 + la[0][0])
        };
        let (p1, s1) = if d1 + la[1][1] > d0 + la[0][1] {
            (1u8, d1 + la[1][1])
        } else {
            (0u8, d0 + la[0][1])
        };
        back[t] = [p0, p1];
        d0 = s0 + lb0;
        d1 = s1 + lb1;
    }

    let mut path = vec![0u8; t_len];
    let mut state: u8 = if d1 > d0 { 1 } else { 0 };
    path[t_len - 1] = state;
    for t in (1..t_len).rev() {
        state = back[t][state as usize];
        path[t - 1] = state;
    }
    Ok(path)
}

/// How smoothed posteriors become binary states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeRule {
    /// State 1 iff eta_1(t) > 0.5 (strict).
    #[default]
    PosteriorThreshold,
    /// Maximum-weight path instead of per-frame marginals.
    Viterbi,
}

/// Binarize smoothed posteriors: active iff eta > 0.5 (strict inequality).
pub fn decode_posterior(posteriors: &[f64]) -> Vec<u8> {
    posteriors.iter().map(|&p| (p > 0.5) as u8).collect()
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force reference: enumerate all 2^T hidden sequences and sum
    //! unnormalized chain weights. Independent of the recursive
    //! implementations above; usable for T up to ~16.

    use super::{clamp_prob, observation_posterior_on, PitchHmmParams};

    pub fn sequence_weight(q: &[u8], xs: &[f64], params: &PitchHmmParams) -> f64 {
        let tau0 = clamp_prob(params.tau0);
        let tau1 = clamp_prob(params.tau1);
        let trans = [[1.0 - tau0, tau0], [tau1, 1.0 - tau1]];
        let mut w = 1.0;
        let mut prev = 0usize; // q_0 = 0 convention
        for (t, &s) in q.iter().enumerate() {
            w *= trans[prev][s as usize];
            let p_on = observation_posterior_on(xs[t], params.alpha, params.beta);
            w *= if s == 1 { p_on } else { 1.0 - p_on };
            prev = s as usize;
        }
        w
    }

    /// Exact marginals P(q_t = 1 | x) by exhaustive enumeration.
    pub fn posteriors(xs: &[f64], params: &PitchHmmParams) -> Vec<f64> {
        let t_len = xs.len();
        assert!(t_len <= 20, "enumeration oracle limited to short rows");
        let mut total = 0.0;
        let mut on_mass = vec![0.0; t_len];
        let mut q = vec![0u8; t_len];
        for mask in 0u32..(1u32 << t_len) {
            for (t, s) in q.iter_mut().enumerate() {
                *s = ((mask >> t) & 1) as u8;
            }
            let w = sequence_weight(&q, xs, params);
            total += w;
            for t in 0..t_len {
                if q[t] == 1 {
                    on_mass[t] += w;
                }
            }
        }
        on_mass.iter().map(|&m| m / total).collect()
    }

    /// Best sequence weight by enumeration, ties resolved toward the
    /// lexicographically smaller (more zeros first from the low frame) path.
    pub fn best_path_weight(xs: &[f64], params: &PitchHmmParams) -> f64 {
        let t_len = xs.len();
        let mut best = f64::NEG_INFINITY;
        let mut q = vec![0u8; t_len];
        for mask in 0u32..(1u32 << t_len) {
            for (t, s) in q.iter_mut().enumerate() {
                *s = ((mask >> t) & 1) as u8;
            }
            let w = sequence_weight(&q, xs, params);
            if w > best {
                best = w;
            }
        }
        best
    }
}
