//! Oracle and invariant checks behind `cellfree verify`. Each probe returns
//! raw numbers; [`run_checks`] applies the tolerances.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{bessel_j0, sample_pair, AgedRayleigh, AgingModel, Dims, FiniteEnsemble};
use crate::error::Result;
use crate::evaluation::weighted_mse_objective;
use crate::linalg::{max_abs_diff, CMat, C64};
use crate::oracle::{
    exact_conditional_pi, exact_mean_pi, exact_team_policy, least_squares_team_optimum, random_pi, stacked_team_solve,
};
use crate::precoding::{
    centralized_precoder, local_mmse_only, naive_precoder, solve_team_stages, structure_aware_precoder,
    team_mmse_precoder, team_precoder_from_pi, LocalTmmse, PrecoderSet, Scheme,
};
use crate::scenario::{NetworkConfig, Scenario, Weights};

/// Correlation of the 16-outcome toy used by the optimality probe.
pub const TOY_R: f64 = 0.6;

/// `L = N = K`-toy with 16 outcomes: past entries on `{1, -1/2}` and
/// innovations on `{+-sqrt(1 - r^2)}`. The asymmetric past alphabet makes
/// `Pi_l` depend on the shared CSI.
pub fn toy_ensemble(r: f64) -> Result<FiniteEnsemble> {
    let e = (1.0 - r * r).max(0.0).sqrt();
    FiniteEnsemble::enumerate(
        Dims { aps: 2, antennas: 1, ues: 1 },
        &[C64::new(1.0, 0.0), C64::new(-0.5, 0.0)],
        &[C64::new(e, 0.0), C64::new(-e, 0.0)],
        r,
    )
}

pub fn toy_weights() -> Weights {
    Weights::new(vec![1.0], vec![1.0, 0.5]).expect("valid toy weights")
}

#[derive(Debug, Clone)]
pub struct ToyReport {
    pub team: f64,
    pub baselines: Vec<(Scheme, f64)>,
    pub least_squares: f64,
    /// Smallest objective among the perturbed team policies.
    pub best_perturbed: f64,
    /// Largest stage-system residual over the past-CSI classes.
    pub residual: f64,
}

fn ensemble_objective(ens: &FiniteEnsemble, w: &Weights, precoders: &[PrecoderSet]) -> Result<f64> {
    weighted_mse_objective(
        ens.outcomes().iter().zip(precoders).map(|(o, t)| (&o.pair, t, o.prob)),
        w,
    )
}

/// Exact team objective on the toy against every baseline, the brute-force
/// optimum and `perturbations` random feasible perturbations of size `eps`.
pub fn toy_optimality(r: f64, perturbations: usize, eps: f64, seed: u64) -> Result<ToyReport> {
    let ens = toy_ensemble(r)?;
    let w = toy_weights();
    let (team, stages) = exact_team_policy(&ens, &w)?;
    let team_obj = team.objective(&ens, &w);

    let local = LocalTmmse::from_mean_pi(exact_mean_pi(&ens, &w))?;
    let mut baselines = Vec::new();
    for scheme in [Scheme::LocalTmmse, Scheme::Centralized, Scheme::Naive, Scheme::StructureAware] {
        let precoders: Vec<PrecoderSet> = ens
            .outcomes()
            .iter()
            .map(|o| match scheme {
                Scheme::LocalTmmse => Ok(local.precoder(&o.pair, &w)),
                Scheme::Centralized => Ok(centralized_precoder(&o.pair, &w, &ens)),
                Scheme::Naive => Ok(naive_precoder(&o.pair, &w, &ens)),
                _ => structure_aware_precoder(&o.pair, &w, &ens),
            })
            .collect::<Result<_>>()?;
        baselines.push((scheme, ensemble_objective(&ens, &w, &precoders)?));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let best_perturbed = (0..perturbations)
        .map(|_| team.perturbed(eps, &mut rng).objective(&ens, &w))
        .fold(f64::INFINITY, f64::min);
    Ok(ToyReport {
        team: team_obj,
        baselines,
        least_squares: least_squares_team_optimum(&ens, &w)?.objective(&ens, &w),
        best_perturbed,
        residual: stages.iter().map(|s| s.residual()).fold(0.0, f64::max),
    })
}

/// Largest gap between the reduced and the stacked stage solvers over
/// `draws` random coefficient sets with `L <= 6`, `K <= 8`.
pub fn solver_equivalence(draws: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let aps = rng.random_range(1..=6);
        let k = rng.random_range(1..=8);
        let pi: Vec<CMat> = (0..aps).map(|_| random_pi(k, 0.95, &mut rng)).collect();
        let fast = solve_team_stages(&pi)?;
        let slow = stacked_team_solve(&pi)?;
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max(max_abs_diff(a, b));
        }
    }
    Ok(worst)
}

fn max_block_diff(a: &PrecoderSet, b: &PrecoderSet) -> f64 {
    a.blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max)
}

/// With `r = 1` the team, centralized, naive and structure-aware precoders
/// coincide; returns the largest elementwise gap over `instances` drops at
/// desk scale (`L = 4`, `N = 2`, `K = 6`).
pub fn perfect_sharing_gap(instances: usize, seed: u64) -> Result<f64> {
    let net = NetworkConfig::with_dims(4, 2, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let scenario = Scenario::draw(&net, &mut rng)?;
        let aging = AgingModel::uniform(1.0, 4, 6)?;
        let law = AgedRayleigh::new(&scenario, &aging)?;
        let pair = sample_pair(&law, &mut rng);
        let w = &scenario.weights;
        let team = team_mmse_precoder(&pair, w, &law, 4, |l| ChaCha8Rng::seed_from_u64(l as u64))?;
        let others = [
            centralized_precoder(&pair, w, &law),
            naive_precoder(&pair, w, &law),
            structure_aware_precoder(&pair, w, &law)?,
        ];
        for o in &others {
            worst = worst.max(max_block_diff(&team, o));
        }
    }
    Ok(worst)
}

/// With `r = 0` the exact team precoder reduces to local TMMSE with exact
/// means; returns the largest gap over the toy's outcomes.
pub fn no_sharing_gap() -> Result<f64> {
    let ens = toy_ensemble(0.0)?;
    let w = toy_weights();
    let conditional = exact_conditional_pi(&ens, &w);
    let local = LocalTmmse::from_mean_pi(exact_mean_pi(&ens, &w))?;
    let mut worst = 0.0f64;
    for (i, o) in ens.outcomes().iter().enumerate() {
        let team = team_precoder_from_pi(&o.pair, &w, conditional[ens.class_of(i)].clone())?;
        worst = worst.max(max_block_diff(&team, &local.precoder(&o.pair, &w)));
    }
    Ok(worst)
}

/// With one AP the team precoder is the local MMSE stage; returns whether
/// they are bit-identical on `instances` random single-AP drops.
pub fn single_ap_identical(instances: usize, seed: u64) -> Result<bool> {
    let net = NetworkConfig::with_dims(1, 4, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let scenario = Scenario::draw(&net, &mut rng)?;
        let aging = AgingModel::uniform(rng.random::<f64>(), 1, 6)?;
        let law = AgedRayleigh::new(&scenario, &aging)?;
        let pair = sample_pair(&law, &mut rng);
        let team = team_mmse_precoder(&pair, &scenario.weights, &law, 10, |_| ChaCha8Rng::seed_from_u64(9))?;
        if team.blocks != local_mmse_only(&pair, &scenario.weights) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact `Pi_l` on the toy is Hermitian PSD with spectrum in `[0, 1)`;
/// returns the extreme eigenvalues.
pub fn toy_pi_spectrum(r: f64) -> Result<(f64, f64)> {
    let ens = toy_ensemble(r)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for per_class in exact_conditional_pi(&ens, &toy_weights()) {
        for pi in per_class {
            for e in pi.symmetric_eigenvalues().iter() {
                lo = lo.min(*e);
                hi = hi.max(*e);
            }
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, probe: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = probe().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check {
        name,
        passed,
        detail: format!("{detail} ({:.2?})", start.elapsed()),
    }
}

pub fn run_checks() -> Vec<Check> {
    vec![
        check("toy team optimum", || {
            let rep = toy_optimality(TOY_R, 50, 1e-3, 1)?;
            let beats = rep.baselines.iter().all(|(_, b)| rep.team <= *b);
            let ok = beats
                && (rep.team - rep.least_squares).abs() < 1e-10
                && rep.best_perturbed >= rep.team
                && rep.residual <= 1e-10;
            Ok((
                ok,
                format!(
                    "team {:.12} lsq {:.12} perturbed min {:.12} residual {:.1e}",
                    rep.team, rep.least_squares, rep.best_perturbed, rep.residual
                ),
            ))
        }),
        check("toy coefficient spectrum", || {
            let (lo, hi) = toy_pi_spectrum(TOY_R)?;
            Ok((lo >= -1e-12 && hi < 1.0, format!("eigenvalues in [{lo:.3e}, {hi:.6}]")))
        }),
        check("reduced vs stacked solver", || {
            let gap = solver_equivalence(100, 2)?;
            Ok((gap <= 1e-10, format!("max gap {gap:.2e}")))
        }),
        check("r = 1 equivalence", || {
            let gap = perfect_sharing_gap(5, 3)?;
            Ok((gap <= 1e-8, format!("max gap {gap:.2e}")))
        }),
        check("r = 0 equivalence", || {
            let gap = no_sharing_gap()?;
            Ok((gap <= 1e-8, format!("max gap {gap:.2e}")))
        }),
        check("single AP equals local stage", || {
            let same = single_ap_identical(5, 4)?;
            Ok((same, format!("bit-identical: {same}")))
        }),
        check("Clarke J0", || {
            let (a, b) = (bessel_j0(0.62832), bessel_j0(0.062832));
            Ok((
                (a - 0.90368).abs() <= 1e-4 && (b - 0.99901).abs() <= 1e-5,
                format!("J0(0.62832) = {a:.6}, J0(0.062832) = {b:.6}"),
            ))
        }),
    ]
}
