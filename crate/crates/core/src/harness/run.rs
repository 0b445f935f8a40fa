use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{write_rates, write_summary, SchemeSummary, Summary};
use super::seed::{derive_stream, Purpose, SeedPath};
use crate::channel::{sample_pair, AgedRayleigh, AgingModel, ChannelPair};
use crate::error::{invalid, Error, Result};
use crate::evaluation::{percentile, sample_mse, sinr_and_rate, MomentAccumulator, RateRecord};
use crate::precoding::{
    centralized_precoder, naive_precoder, structure_aware_precoder, team_mmse_precoder, LocalTmmse, PrecoderSet,
    Scheme,
};
use crate::scenario::{Position, Scenario};

pub const PERCENTILES: [u32; 5] = [10, 25, 50, 75, 90];

/// Large-scale state of one drop plus the per-drop statistics shared by all
/// of its realizations.
pub struct Drop {
    pub id: usize,
    pub scenario: Scenario,
    pub aging: AgingModel,
    local: Option<LocalTmmse>,
}

impl Drop {
    pub fn build(config: &ExperimentConfig, id: usize) -> Result<Self> {
        let net = &config.network;
        let scenario = Scenario::draw(net, &mut derive_stream(SeedPath::new(config.master_seed, id, 0, 0, Purpose::Scenario)))?;
        let aging = config.aging.model(net.num_aps, net.num_ues)?;
        let mut drop = Self {
            id,
            scenario,
            aging,
            local: None,
        };
        if config.schemes.contains(&Scheme::LocalTmmse) {
            let law = drop.law();
            let local = LocalTmmse::estimate(&law, &drop.scenario.weights, config.pi_samples, |l| {
                derive_stream(SeedPath::new(config.master_seed, id, 0, l, Purpose::MarginalPi))
            })?;
            drop.local = Some(local);
        }
        Ok(drop)
    }

    pub fn law(&self) -> AgedRayleigh<'_> {
        AgedRayleigh::new(&self.scenario, &self.aging).expect("aging shape validated with the config")
    }

    /// The channel pair of realization `t`, shared by every scheme.
    pub fn realization(&self, config: &ExperimentConfig, t: usize) -> ChannelPair {
        let mut rng = derive_stream(SeedPath::new(config.master_seed, self.id, t, 0, Purpose::Channel));
        sample_pair(&self.law(), &mut rng)
    }

    pub fn precoder(&self, config: &ExperimentConfig, scheme: Scheme, pair: &ChannelPair, t: usize) -> Result<PrecoderSet> {
        let law = self.law();
        let w = &self.scenario.weights;
        match scheme {
            Scheme::TeamMmse => team_mmse_precoder(pair, w, &law, config.pi_samples, |l| {
                derive_stream(SeedPath::new(config.master_seed, self.id, t, l, Purpose::ConditionalPi))
            }),
            Scheme::LocalTmmse => Ok(self
                .local
                .as_ref()
                .ok_or_else(|| invalid("local stages were not prepared for this drop"))?
                .precoder(pair, w)),
            Scheme::Centralized => Ok(centralized_precoder(pair, w, &law)),
            Scheme::Naive => Ok(naive_precoder(pair, w, &law)),
            Scheme::StructureAware => structure_aware_precoder(pair, w, &law),
        }
    }
}

struct DropResult {
    records: Vec<RateRecord>,
    skipped: usize,
    used: usize,
    mse_sum: Vec<f64>,
}

fn run_drop(config: &ExperimentConfig, id: usize) -> Result<DropResult> {
    let drop = Drop::build(config, id)?;
    let ues = drop.scenario.num_ues();
    let mut acc: Vec<MomentAccumulator> = config.schemes.iter().map(|_| MomentAccumulator::new(ues)).collect();
    let mut mse_sum = vec![0.0; config.schemes.len()];
    let (mut skipped, mut used) = (0, 0);
    'realizations: for t in 0..config.realizations_per_drop {
        let pair = drop.realization(config, t);
        let mut precoders = Vec::with_capacity(config.schemes.len());
        for &scheme in &config.schemes {
            match drop.precoder(config, scheme, &pair, t) {
                Ok(p) => precoders.push(p),
                Err(Error::SingularStage { .. }) => {
                    skipped += 1;
                    continue 'realizations;
                }
                Err(e) => return Err(e),
            }
        }
        used += 1;
        for (i, p) in precoders.iter().enumerate() {
            acc[i].push(&pair, p);
            mse_sum[i] += sample_mse(&pair, p, &drop.scenario.weights);
        }
    }
    let mut records = Vec::with_capacity(config.schemes.len() * ues);
    for (a, &scheme) in acc.iter().zip(&config.schemes) {
        let rates = sinr_and_rate(&a.finish()?, &drop.scenario.weights.p);
        records.extend(rates.into_iter().enumerate().map(|(ue, rate)| RateRecord {
            drop_id: id,
            ue_id: ue,
            scheme,
            rate_bits: rate,
        }));
    }
    Ok(DropResult {
        records,
        skipped,
        used,
        mse_sum,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RateRecord>,
    pub summary: Summary,
}

/// Runs every drop on a pool of `workers` threads. The result does not depend
/// on `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<RunOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let drops: Vec<DropResult> = pool.install(|| {
        (0..config.drops)
            .into_par_iter()
            .map(|d| run_drop(config, d))
            .collect::<Result<_>>()
    })?;

    let total = config.drops * config.realizations_per_drop;
    let skipped: usize = drops.iter().map(|d| d.skipped).sum();
    if skipped * 100 > total {
        return Err(Error::TooManySkips { skipped, total });
    }
    let used: usize = drops.iter().map(|d| d.used).sum();
    let records: Vec<RateRecord> = drops.iter().flat_map(|d| d.records.iter().cloned()).collect();

    let mut schemes = BTreeMap::new();
    for (i, &scheme) in config.schemes.iter().enumerate() {
        let mut rates: Vec<f64> = records.iter().filter(|r| r.scheme == scheme).map(|r| r.rate_bits).collect();
        rates.sort_by(f64::total_cmp);
        let percentiles = PERCENTILES
            .iter()
            .map(|&q| (format!("p{q}"), percentile(&rates, q as f64)))
            .collect();
        let mse: f64 = drops.iter().map(|d| d.mse_sum[i]).sum();
        schemes.insert(
            scheme,
            SchemeSummary {
                count: rates.len(),
                percentiles,
                mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
                mse_objective: mse / used as f64,
            },
        );
    }
    Ok(RunOutput {
        records,
        summary: Summary {
            drops: config.drops,
            realizations_per_drop: config.realizations_per_drop,
            pi_samples: config.pi_samples,
            master_seed: config.master_seed,
            total_realizations: total,
            skipped_realizations: skipped,
            schemes,
        },
    })
}

/// Writes the rates CSV to `output_path` and the summary next to it.
pub fn write_outputs(config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    if let Some(dir) = config.output_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_rates(BufWriter::new(File::create(&config.output_path)?), &out.records)?;
    write_summary(BufWriter::new(File::create(config.summary_path())?), &out.summary)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ScenarioDump {
    pub drop_id: usize,
    pub ap_positions: Vec<Position>,
    pub ue_positions: Vec<Position>,
    /// `gains_db[l][k]`, normalized by the noise power
    pub gains_db: Vec<Vec<f64>>,
    pub ue_power: Vec<f64>,
    pub ap_sigma: Vec<f64>,
    pub aging_r: Vec<Vec<f64>>,
}

pub fn scenario_dump(config: &ExperimentConfig, drop_id: usize) -> Result<ScenarioDump> {
    config.validate()?;
    let net = &config.network;
    let scenario = Scenario::draw(net, &mut derive_stream(SeedPath::new(config.master_seed, drop_id, 0, 0, Purpose::Scenario)))?;
    let aging = config.aging.model(net.num_aps, net.num_ues)?;
    let rows = |m: &nalgebra::DMatrix<f64>, f: fn(f64) -> f64| -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
    };
    Ok(ScenarioDump {
        drop_id,
        gains_db: rows(&scenario.gains, |g| 10.0 * g.log10()),
        aging_r: rows(aging.matrix(), |r| r),
        ue_power: scenario.weights.p.clone(),
        ap_sigma: scenario.weights.sigma.clone(),
        ap_positions: scenario.ap_positions,
        ue_positions: scenario.ue_positions,
    })
}
