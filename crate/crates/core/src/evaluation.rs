//! Team MSE objective, hardening-bound rate moments, SINR and rate CDFs.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_pair, AgedRayleigh, ChannelPair};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMat, C64};
use crate::precoding::{PrecoderSet, Scheme};
use crate::scenario::Weights;

/// `||P^(1/2) H^H T - I||_F^2 + sum_l sigma_l ||T_l||_F^2` for one sample,
/// with `H = H[t]`.
pub fn sample_mse(pair: &ChannelPair, precoder: &PrecoderSet, weights: &Weights) -> f64 {
    let k = weights.p.len();
    let mut err = CMat::zeros(k, k);
    for (h, t) in pair.now.iter().zip(&precoder.blocks) {
        err += h.ad_mul(t);
    }
    for (i, p) in weights.p.iter().enumerate() {
        let s = p.sqrt();
        for j in 0..k {
            err[(i, j)] *= s;
        }
        err[(i, i)] -= C64::new(1.0, 0.0);
    }
    let power: f64 = precoder
        .blocks
        .iter()
        .zip(&weights.sigma)
        .map(|(t, s)| s * frobenius_sq(t))
        .sum();
    frobenius_sq(&err) + power
}

/// Sample average of [`sample_mse`].
pub fn mse_objective(samples: &[(ChannelPair, PrecoderSet)], weights: &Weights) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let total: f64 = samples.iter().map(|(h, t)| sample_mse(h, t, weights)).sum();
    Ok(total / samples.len() as f64)
}

/// Probability-weighted objective over an exactly enumerated sample space.
pub fn weighted_mse_objective<'a, I>(samples: I, weights: &Weights) -> Result<f64>
where
    I: IntoIterator<Item = (&'a ChannelPair, &'a PrecoderSet, f64)>,
{
    let mut any = false;
    let mut total = 0.0;
    for (h, t, prob) in samples {
        any = true;
        total += prob * sample_mse(h, t, weights);
    }
    if !any {
        return Err(Error::EmptySampleSet);
    }
    Ok(total)
}

/// Moments of the effective channel seen by UE `k` under precoder column
/// `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMoments {
    /// `E[h_k^H t_k]`
    pub mean_gain: C64,
    /// `V(h_k^H t_k)`, unbiased.
    pub var_gain: f64,
    /// `cross[j] = E[|h_j^H t_k|^2]`; entry `k` is the own-gain second moment.
    pub cross: Vec<f64>,
    /// `E[||t_k||^2]`
    pub power: f64,
}

/// Mergeable sums for [`RateMoments`]. The gain mean and scatter use the
/// pairwise update so a constant gain yields exactly zero variance.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    count: usize,
    gain_mean: Vec<C64>,
    gain_m2: Vec<f64>,
    cross_sum: DMatrix<f64>,
    power_sum: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(ues: usize) -> Self {
        Self {
            count: 0,
            gain_mean: vec![C64::new(0.0, 0.0); ues],
            gain_m2: vec![0.0; ues],
            cross_sum: DMatrix::zeros(ues, ues),
            power_sum: vec![0.0; ues],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, pair: &ChannelPair, precoder: &PrecoderSet) {
        let k = self.power_sum.len();
        let mut g = CMat::zeros(k, k);
        for (h, t) in pair.now.iter().zip(&precoder.blocks) {
            g += h.ad_mul(t);
        }
        self.count += 1;
        let n = self.count as f64;
        for ue in 0..k {
            let x = g[(ue, ue)];
            let delta = x - self.gain_mean[ue];
            self.gain_mean[ue] += delta / n;
            self.gain_m2[ue] += (delta.conj() * (x - self.gain_mean[ue])).re;
            for j in 0..k {
                self.cross_sum[(j, ue)] += g[(j, ue)].norm_sqr();
            }
        }
        for t in &precoder.blocks {
            for (ue, col) in t.column_iter().enumerate() {
                self.power_sum[ue] += col.norm_squared();
            }
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for ue in 0..self.power_sum.len() {
            let delta = other.gain_mean[ue] - self.gain_mean[ue];
            self.gain_m2[ue] += other.gain_m2[ue] + delta.norm_sqr() * na * nb / n;
            self.gain_mean[ue] += delta * (nb / n);
            self.power_sum[ue] += other.power_sum[ue];
        }
        self.cross_sum += &other.cross_sum;
        self.count += other.count;
    }

    pub fn finish(&self) -> Result<Vec<RateMoments>> {
        if self.count < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: self.count,
            });
        }
        let n = self.count as f64;
        Ok((0..self.power_sum.len())
            .map(|ue| RateMoments {
                mean_gain: self.gain_mean[ue],
                var_gain: (self.gain_m2[ue] / (n - 1.0)).max(0.0),
                cross: self.cross_sum.column(ue).iter().map(|s| s / n).collect(),
                power: self.power_sum[ue] / n,
            })
            .collect())
    }
}

/// Draws `realizations` i.i.d. channel pairs, precodes each with `precode`
/// and returns the per-UE moments.
pub fn estimate_rate_moments<R, F>(
    law: &AgedRayleigh<'_>,
    realizations: usize,
    rng: &mut R,
    mut precode: F,
) -> Result<Vec<RateMoments>>
where
    R: Rng,
    F: FnMut(&ChannelPair, &mut R) -> Result<PrecoderSet>,
{
    if realizations < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: realizations,
        });
    }
    let ues = law.scenario().num_ues();
    let mut acc = MomentAccumulator::new(ues);
    for _ in 0..realizations {
        let pair = sample_pair(law, rng);
        let t = precode(&pair, rng)?;
        acc.push(&pair, &t);
    }
    acc.finish()
}

/// Hardening-bound SINR over the virtual uplink with unit noise. A silent
/// precoder (0/0) scores zero.
pub fn sinr(moments: &[RateMoments], p: &[f64], ue: usize) -> f64 {
    let m = &moments[ue];
    let num = p[ue] * m.mean_gain.norm_sqr();
    let interference: f64 = m
        .cross
        .iter()
        .zip(p)
        .enumerate()
        .filter(|(j, _)| *j != ue)
        .map(|(_, (c, pj))| pj * c)
        .sum();
    let den = p[ue] * m.var_gain + interference + m.power;
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `R_k = log2(1 + SINR_k)` for every UE.
pub fn sinr_and_rate(moments: &[RateMoments], p: &[f64]) -> Vec<f64> {
    (0..moments.len())
        .map(|k| (1.0 + sinr(moments, p, k)).log2())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub drop_id: usize,
    pub ue_id: usize,
    pub scheme: Scheme,
    pub rate_bits: f64,
}

/// Empirical CDF `(rate, i/n)`; tied rates keep the largest CDF value.
pub fn empirical_cdf(rates: &[f64]) -> Result<Vec<(f64, f64)>> {
    if rates.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (i, r) in sorted.iter().enumerate() {
        let value = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *r => last.1 = value,
            _ => out.push((*r, value)),
        }
    }
    Ok(out)
}

/// Per-scheme CDF of pooled (drop, UE) rates.
pub fn aggregate_cdf(records: &[RateRecord]) -> Result<BTreeMap<Scheme, Vec<(f64, f64)>>> {
    if records.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut by_scheme: BTreeMap<Scheme, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_scheme.entry(r.scheme).or_default().push(r.rate_bits);
    }
    by_scheme
        .into_iter()
        .map(|(s, rates)| Ok((s, empirical_cdf(&rates)?)))
        .collect()
}

/// Linear-interpolation percentile (`q` in [0, 100]) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
