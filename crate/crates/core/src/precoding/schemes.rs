//! The five precoding schemes. Each reads only the CSI it is entitled to:
//!
//! | scheme            | AP `l` reads                 |
//! |-------------------|------------------------------|
//! | `team_mmse`       | `H_l[t]`, all of `H[t-d]`    |
//! | `local_tmmse`     | `H_l[t]` (plus statistics)   |
//! | `centralized`     | all of `H[t-d]`              |
//! | `naive`           | `H_l[t]`, all of `H[t-d]`    |
//! | `structure_aware` | `H_l[t]`, all of `H[t-d]`    |

use rand::Rng;

use crate::channel::{ChannelLaw, ChannelPair};
use crate::error::Result;
use crate::linalg::{add_gram, identity, scale_columns, CMat};
use crate::scenario::Weights;

use super::stages::{effective_channel, estimate_mean_pi, estimate_pi, local_mmse_stage, TeamStages};
use super::{PrecoderSet, Scheme};

/// Optimal team MMSE precoder: `T_l = F_l(H_l[t]) C_l(H[t-d])` with the
/// coefficients `Pi_l` estimated from `samples` conditional draws per AP.
/// `rng_for_ap(l)` supplies the sampling stream of AP `l`.
pub fn team_mmse_precoder<L, R, F>(
    pair: &ChannelPair,
    weights: &Weights,
    law: &L,
    samples: usize,
    mut rng_for_ap: F,
) -> Result<PrecoderSet>
where
    L: ChannelLaw,
    R: Rng,
    F: FnMut(usize) -> R,
{
    let pi = pair
        .past
        .iter()
        .enumerate()
        .map(|(l, past)| estimate_pi(law, l, past, weights, samples, &mut rng_for_ap(l)))
        .collect();
    team_precoder_from_pi(pair, weights, pi)
}

/// Team precoder for given (e.g. exactly computed) coefficients.
pub fn team_precoder_from_pi(pair: &ChannelPair, weights: &Weights, pi: Vec<CMat>) -> Result<PrecoderSet> {
    Ok(TeamStages::from_pi(pi)?.apply(pair, weights, Scheme::TeamMmse))
}

/// Deterministic stages of the local team MMSE scheme, computed once per
/// drop from the unconditional means `E[P^(1/2) H_j^H F_j]`.
#[derive(Debug, Clone)]
pub struct LocalTmmse {
    stages: TeamStages,
}

impl LocalTmmse {
    pub fn estimate<L, R, F>(law: &L, weights: &Weights, samples: usize, mut rng_for_ap: F) -> Result<Self>
    where
        L: ChannelLaw,
        R: Rng,
        F: FnMut(usize) -> R,
    {
        let pi = (0..law.dims().aps)
            .map(|l| estimate_mean_pi(law, l, weights, samples, &mut rng_for_ap(l)))
            .collect();
        Self::from_mean_pi(pi)
    }

    pub fn from_mean_pi(pi: Vec<CMat>) -> Result<Self> {
        Ok(Self {
            stages: TeamStages::from_pi(pi)?,
        })
    }

    pub fn stages(&self) -> &TeamStages {
        &self.stages
    }

    pub fn precoder(&self, pair: &ChannelPair, weights: &Weights) -> PrecoderSet {
        self.stages.apply(pair, weights, Scheme::LocalTmmse)
    }
}

/// `(Psi_l + sigma_l)`: per-AP scalar of the prediction error plus
/// regularization, `Psi_l = sum_k p_k Var(error of h_{l,k})`.
fn error_plus_noise<L: ChannelLaw>(law: &L, weights: &Weights, ap: usize) -> f64 {
    let psi: f64 = weights
        .p
        .iter()
        .enumerate()
        .map(|(k, p)| p * law.error_variance(ap, k))
        .sum();
    psi + weights.sigma[ap]
}

/// `B^H B / d` where `B = H P^(1/2)`.
fn scaled_gram(h: &CMat, p_sqrt: &[f64], d: f64) -> CMat {
    let mut b = h.clone();
    scale_columns(&mut b, p_sqrt);
    let mut g = CMat::zeros(h.ncols(), h.ncols());
    add_gram(&mut g, &b);
    g.scale(1.0 / d)
}

/// `T_l = B_l G^-1 / d_l` with `B_l = H_l P^(1/2)`, i.e. one row block of
/// `(H P H^H + D)^-1 H P^(1/2)` for block-diagonal `D`, via push-through.
fn push_through_block(h: &CMat, p_sqrt: &[f64], d: f64, gram_inv: &CMat) -> CMat {
    let mut b = h.clone();
    scale_columns(&mut b, p_sqrt);
    (b * gram_inv).scale(1.0 / d)
}

fn invert_gram(gram: CMat) -> CMat {
    // eigenvalues are >= 1
    gram.cholesky()
        .expect("I + PSD is positive definite")
        .inverse()
}

/// Centralized MMSE on the predicted channel `E[H[t] | H[t-d]]` with the
/// prediction error folded into the regularization.
pub fn centralized_precoder<L: ChannelLaw>(pair: &ChannelPair, weights: &Weights, law: &L) -> PrecoderSet {
    let p_sqrt = weights.p_sqrt();
    let k = law.dims().ues;
    let predicted: Vec<CMat> = pair
        .past
        .iter()
        .enumerate()
        .map(|(l, past)| law.predict_block(l, past))
        .collect();
    let d: Vec<f64> = (0..predicted.len())
        .map(|l| error_plus_noise(law, weights, l))
        .collect();
    let gram = predicted
        .iter()
        .zip(&d)
        .fold(identity(k), |acc, (h, &dl)| acc + scaled_gram(h, &p_sqrt, dl));
    let gram_inv = invert_gram(gram);
    let blocks = predicted
        .iter()
        .zip(&d)
        .map(|(h, &dl)| push_through_block(h, &p_sqrt, dl, &gram_inv))
        .collect();
    PrecoderSet {
        blocks,
        scheme: Scheme::Centralized,
    }
}

/// Each AP evaluates the centralized formula after substituting its own
/// current channel (with zero prediction error) for its predicted block,
/// and keeps its own row block.
pub fn naive_precoder<L: ChannelLaw>(pair: &ChannelPair, weights: &Weights, law: &L) -> PrecoderSet {
    let p_sqrt = weights.p_sqrt();
    let k = law.dims().ues;
    let aps = pair.past.len();
    let predicted_grams: Vec<CMat> = pair
        .past
        .iter()
        .enumerate()
        .map(|(l, past)| {
            let h = law.predict_block(l, past);
            scaled_gram(&h, &p_sqrt, error_plus_noise(law, weights, l))
        })
        .collect();
    let blocks = (0..aps)
        .map(|l| {
            let sigma = weights.sigma[l];
            let own = scaled_gram(&pair.now[l], &p_sqrt, sigma);
            let mut gram = identity(k);
            for (j, g) in predicted_grams.iter().enumerate() {
                gram += if j == l { &own } else { g };
            }
            push_through_block(&pair.now[l], &p_sqrt, sigma, &invert_gram(gram))
        })
        .collect();
    PrecoderSet {
        blocks,
        scheme: Scheme::Naive,
    }
}

/// Team structure with the coefficients approximated in closed form from the
/// predicted channel: `Pi_l ~ P^(1/2) Hh_l^H (Hh_l P Hh_l^H + (Psi_l + sigma_l) I)^-1 Hh_l P^(1/2)`.
pub fn structure_aware_precoder<L: ChannelLaw>(pair: &ChannelPair, weights: &Weights, law: &L) -> Result<PrecoderSet> {
    let p_sqrt = weights.p_sqrt();
    let pi = pair
        .past
        .iter()
        .enumerate()
        .map(|(l, past)| {
            let predicted = law.predict_block(l, past);
            effective_channel(&predicted, &p_sqrt, error_plus_noise(law, weights, l))
        })
        .collect();
    Ok(TeamStages::from_pi(pi)?.apply(pair, weights, Scheme::StructureAware))
}

/// Local MMSE stages alone (`C_l = I`), used as a reference.
pub fn local_mmse_only(pair: &ChannelPair, weights: &Weights) -> Vec<CMat> {
    let p_sqrt = weights.p_sqrt();
    pair.now
        .iter()
        .enumerate()
        .map(|(l, h)| local_mmse_stage(h, &p_sqrt, weights.sigma[l]))
        .collect()
}
