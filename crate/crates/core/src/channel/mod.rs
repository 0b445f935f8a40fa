//! Temporally correlated Rayleigh fading: the `(H[t-d], H[t])` pair, its
//! conditional law, and the Clarke mapping from mobility to correlation.

mod clarke;
mod ensemble;

use nalgebra::DMatrix;
use rand::Rng;
use sha2::{Digest, Sha256};

pub use clarke::{bessel_j0, clarke_autocorrelation};
pub use ensemble::{FiniteEnsemble, Outcome, MAX_OUTCOMES};

use crate::error::{invalid, Result};
use crate::linalg::{complex_normal, vstack, CMat, C64};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub aps: usize,
    pub antennas: usize,
    pub ues: usize,
}

/// One joint realization of the delayed and the current channel. Block `l`
/// is `N x K`: rows are the antennas of AP `l`, columns the UEs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub past: Vec<CMat>,
    pub now: Vec<CMat>,
}

impl ChannelPair {
    pub fn new(past: Vec<CMat>, now: Vec<CMat>) -> Result<Self> {
        let pair = Self { past, now };
        pair.dims()?;
        Ok(pair)
    }

    pub fn dims(&self) -> Result<Dims> {
        let first = self
            .past
            .first()
            .ok_or_else(|| invalid("channel pair has no AP blocks"))?;
        let (n, k) = first.shape();
        if self.now.len() != self.past.len()
            || self
                .past
                .iter()
                .chain(self.now.iter())
                .any(|b| b.shape() != (n, k))
        {
            return Err(invalid("inconsistent channel block shapes"));
        }
        if self
            .past
            .iter()
            .chain(self.now.iter())
            .flat_map(|b| b.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid("non-finite channel entry"));
        }
        Ok(Dims {
            aps: self.past.len(),
            antennas: n,
            ues: k,
        })
    }

    pub fn stacked_now(&self) -> CMat {
        vstack(&self.now)
    }

    pub fn stacked_past(&self) -> CMat {
        vstack(&self.past)
    }

    /// SHA-256 over the exact bit patterns of both channels.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for b in self.past.iter().chain(self.now.iter()) {
            for z in b.iter() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

/// Autocorrelation coefficients `r[(l, k)]` between `h_{l,k}[t-d]` and
/// `h_{l,k}[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgingModel {
    r: DMatrix<f64>,
}

impl AgingModel {
    pub fn uniform(r: f64, aps: usize, ues: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::from_element(aps, ues, r))
    }

    pub fn from_matrix(r: DMatrix<f64>) -> Result<Self> {
        if r.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(invalid("autocorrelation coefficients must lie in [0, 1]"));
        }
        Ok(Self { r })
    }

    /// Same Clarke coefficient for every link.
    pub fn clarke(doppler_hz: f64, symbol_time_s: f64, delay_symbols: f64, aps: usize, ues: usize) -> Result<Self> {
        Self::uniform(clarke_autocorrelation(doppler_hz, symbol_time_s, delay_symbols)?, aps, ues)
    }

    pub fn r(&self, ap: usize, ue: usize) -> f64 {
        self.r[(ap, ue)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// What the precoders need to know about the channel statistics: the
/// conditional law of `H_l[t]` given `H_l[t-d]` and its marginal.
pub trait ChannelLaw {
    fn dims(&self) -> Dims;

    /// `E[H_l[t] | H_l[t-d] = past]`.
    fn predict_block(&self, ap: usize, past: &CMat) -> CMat;

    /// Per-antenna variance of the prediction error of `h_{l,k}`.
    fn error_variance(&self, ap: usize, ue: usize) -> f64;

    fn sample_conditional_block<R: Rng + ?Sized>(&self, ap: usize, past: &CMat, rng: &mut R) -> CMat;

    fn sample_marginal_block<R: Rng + ?Sized>(&self, ap: usize, rng: &mut R) -> CMat;
}

/// Jointly Gaussian Rayleigh pair with covariance `gamma I` and
/// cross-covariance `r gamma I` per link.
#[derive(Debug, Clone, Copy)]
pub struct AgedRayleigh<'a> {
    scenario: &'a Scenario,
    aging: &'a AgingModel,
}

impl<'a> AgedRayleigh<'a> {
    pub fn new(scenario: &'a Scenario, aging: &'a AgingModel) -> Result<Self> {
        if aging.r.shape() != scenario.gains.shape() {
            return Err(invalid(format!(
                "aging matrix is {:?}, gains are {:?}",
                aging.r.shape(),
                scenario.gains.shape()
            )));
        }
        Ok(Self { scenario, aging })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    fn gain(&self, ap: usize, ue: usize) -> f64 {
        self.scenario.gains[(ap, ue)]
    }
}

impl ChannelLaw for AgedRayleigh<'_> {
    fn dims(&self) -> Dims {
        Dims {
            aps: self.scenario.num_aps(),
            antennas: self.scenario.antennas_per_ap,
            ues: self.scenario.num_ues(),
        }
    }

    fn predict_block(&self, ap: usize, past: &CMat) -> CMat {
        let mut out = past.clone();
        for (k, mut col) in out.column_iter_mut().enumerate() {
            col *= C64::new(self.aging.r(ap, k), 0.0);
        }
        out
    }

    fn error_variance(&self, ap: usize, ue: usize) -> f64 {
        let r = self.aging.r(ap, ue);
        (1.0 - r * r) * self.gain(ap, ue)
    }

    fn sample_conditional_block<R: Rng + ?Sized>(&self, ap: usize, past: &CMat, rng: &mut R) -> CMat {
        sample_conditional(past, self, ap, rng)
    }

    fn sample_marginal_block<R: Rng + ?Sized>(&self, ap: usize, rng: &mut R) -> CMat {
        let d = self.dims();
        CMat::from_fn(d.antennas, d.ues, |_, k| complex_normal(rng, self.gain(ap, k)))
    }
}

/// Draws `(H[t-d], H[t])`: per entry `past = sqrt(g) w1` and
/// `now = r past + sqrt(1 - r^2) sqrt(g) w2`.
pub fn sample_pair<R: Rng + ?Sized>(law: &AgedRayleigh<'_>, rng: &mut R) -> ChannelPair {
    let d = law.dims();
    let mut past = Vec::with_capacity(d.aps);
    let mut now = Vec::with_capacity(d.aps);
    for l in 0..d.aps {
        let p = CMat::from_fn(d.antennas, d.ues, |_, k| complex_normal(rng, law.gain(l, k)));
        let n = sample_conditional(&p, law, l, rng);
        past.push(p);
        now.push(n);
    }
    ChannelPair { past, now }
}

/// Block `l` of `H[t]` given block `l` of `H[t-d]`: entries are independent
/// `CN(r past, (1 - r^2) g)`.
pub fn sample_conditional<R: Rng + ?Sized>(past: &CMat, law: &AgedRayleigh<'_>, ap: usize, rng: &mut R) -> CMat {
    CMat::from_fn(past.nrows(), past.ncols(), |n, k| {
        let r = law.aging.r(ap, k);
        let innovation = complex_normal(rng, law.gain(ap, k));
        past[(n, k)] * r + innovation * (1.0 - r * r).sqrt()
    })
}
