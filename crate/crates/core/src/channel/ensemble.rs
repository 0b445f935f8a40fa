//! Finite-alphabet channel ensembles whose expectations can be computed
//! exactly by enumeration.

use std::collections::BTreeMap;

use rand::Rng;

use super::{ChannelLaw, ChannelPair, Dims};
use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, C64};

pub const MAX_OUTCOMES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pair: ChannelPair,
    pub prob: f64,
}

/// Every entry of `H[t-d]` is uniform on `past_alphabet`, and
/// `H[t] = r H[t-d] + E` with the entries of `E` uniform on the zero-mean
/// `noise_alphabet`, all independent. The full product space is enumerated.
#[derive(Debug, Clone)]
pub struct FiniteEnsemble {
    dims: Dims,
    r: f64,
    past_alphabet: Vec<C64>,
    noise_alphabet: Vec<C64>,
    outcomes: Vec<Outcome>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl FiniteEnsemble {
    pub fn enumerate(dims: Dims, past_alphabet: &[C64], noise_alphabet: &[C64], r: f64) -> Result<Self> {
        if past_alphabet.is_empty() || noise_alphabet.is_empty() {
            return Err(invalid("alphabets must be nonempty"));
        }
        let noise_mean = noise_alphabet.iter().sum::<C64>() / noise_alphabet.len() as f64;
        if noise_mean.norm() > 1e-12 {
            return Err(invalid("noise alphabet must have zero mean"));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid("r must lie in [0, 1]"));
        }
        let entries = dims.aps * dims.antennas * dims.ues;
        let base = past_alphabet.len() * noise_alphabet.len();
        let count = (base as f64).powi(entries as i32);
        if count > MAX_OUTCOMES as f64 {
            return Err(Error::EnsembleTooLarge {
                outcomes: count,
                limit: MAX_OUTCOMES,
            });
        }
        let count = count as usize;
        let prob = 1.0 / count as f64;
        let mut outcomes = Vec::with_capacity(count);
        for index in 0..count {
            let mut past = vec![CMat::zeros(dims.antennas, dims.ues); dims.aps];
            let mut now = past.clone();
            let mut rest = index;
            // entry order: AP, then UE, then antenna
            for l in 0..dims.aps {
                for k in 0..dims.ues {
                    for n in 0..dims.antennas {
                        let digit = rest % base;
                        rest /= base;
                        let a = past_alphabet[digit / noise_alphabet.len()];
                        let e = noise_alphabet[digit % noise_alphabet.len()];
                        past[l][(n, k)] = a;
                        now[l][(n, k)] = a * r + e;
                    }
                }
            }
            outcomes.push(Outcome {
                pair: ChannelPair { past, now },
                prob,
            });
        }

        let mut by_key: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
        for (i, o) in outcomes.iter().enumerate() {
            by_key.entry(past_key(&o.pair)).or_default().push(i);
        }
        let classes: Vec<Vec<usize>> = by_key.into_values().collect();
        let mut class_of = vec![0; outcomes.len()];
        for (c, members) in classes.iter().enumerate() {
            for &i in members {
                class_of[i] = c;
            }
        }
        Ok(Self {
            dims,
            r,
            past_alphabet: past_alphabet.to_vec(),
            noise_alphabet: noise_alphabet.to_vec(),
            outcomes,
            classes,
            class_of,
        })
    }

    /// Real antipodal ensemble with unit-power entries: `H[t-d]` on `{+1, -1}`
    /// and innovations on `{+e, -e}` with `e = sqrt(1 - r^2)`, so both
    /// channels have unit power and the correlation is `r`.
    pub fn antipodal(dims: Dims, r: f64) -> Result<Self> {
        let e = (1.0 - r * r).max(0.0).sqrt();
        Self::enumerate(
            dims,
            &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
            &[C64::new(e, 0.0), C64::new(-e, 0.0)],
            r,
        )
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Outcome indices grouped by identical `H[t-d]`.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, outcome: usize) -> usize {
        self.class_of[outcome]
    }

    pub fn class_probability(&self, class: usize) -> f64 {
        self.classes[class].iter().map(|&i| self.outcomes[i].prob).sum()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `E[f(pair) | H[t-d] in class]`, exact.
    pub fn conditional_expectation(&self, class: usize, f: impl Fn(&ChannelPair) -> CMat) -> CMat {
        let members = &self.classes[class];
        let mass = self.class_probability(class);
        let mut acc: Option<CMat> = None;
        for &i in members {
            let o = &self.outcomes[i];
            let v = f(&o.pair) * C64::new(o.prob / mass, 0.0);
            acc = Some(match acc {
                Some(a) => a + v,
                None => v,
            });
        }
        acc.expect("classes are nonempty")
    }

    /// `E[f(pair)]`, exact.
    pub fn expectation(&self, f: impl Fn(&ChannelPair) -> CMat) -> CMat {
        let mut acc: Option<CMat> = None;
        for o in &self.outcomes {
            let v = f(&o.pair) * C64::new(o.prob, 0.0);
            acc = Some(match acc {
                Some(a) => a + v,
                None => v,
            });
        }
        acc.expect("ensembles are nonempty")
    }

    fn noise_power(&self) -> f64 {
        self.noise_alphabet.iter().map(|e| e.norm_sqr()).sum::<f64>() / self.noise_alphabet.len() as f64
    }

    fn pick<R: Rng + ?Sized>(alphabet: &[C64], rng: &mut R) -> C64 {
        alphabet[rng.random_range(0..alphabet.len())]
    }
}

fn past_key(pair: &ChannelPair) -> Vec<u64> {
    pair.past
        .iter()
        .flat_map(|b| b.iter())
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .collect()
}

impl ChannelLaw for FiniteEnsemble {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn predict_block(&self, _ap: usize, past: &CMat) -> CMat {
        past * C64::new(self.r, 0.0)
    }

    fn error_variance(&self, _ap: usize, _ue: usize) -> f64 {
        self.noise_power()
    }

    fn sample_conditional_block<R: Rng + ?Sized>(&self, _ap: usize, past: &CMat, rng: &mut R) -> CMat {
        CMat::from_fn(past.nrows(), past.ncols(), |n, k| {
            past[(n, k)] * self.r + Self::pick(&self.noise_alphabet, rng)
        })
    }

    fn sample_marginal_block<R: Rng + ?Sized>(&self, _ap: usize, rng: &mut R) -> CMat {
        CMat::from_fn(self.dims.antennas, self.dims.ues, |_, _| {
            Self::pick(&self.past_alphabet, rng) * self.r + Self::pick(&self.noise_alphabet, rng)
        })
    }
}
