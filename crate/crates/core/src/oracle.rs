//! Reference computations used to check the fast paths: the stacked
//! `LK x LK` stage system, exact coefficients on finite ensembles and a
//! brute-force least-squares search over all team-feasible policies.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::Rng;

use crate::channel::{ChannelLaw, FiniteEnsemble};
use crate::error::{invalid, Error, Result};
use crate::linalg::{complex_normal, identity, split_rows, CMat, C64, MAX_CONDITION};
use crate::precoding::{effective_channel, local_mmse_stage, PrecoderSet, Scheme, TeamStages};
use crate::scenario::Weights;

/// Solves the stage system as one block system
/// `[I Pi_2 ..; Pi_1 I ..; ..] [C_1; ..; C_L] = [I; ..; I]` by LU.
pub fn stacked_team_solve(pi: &[CMat]) -> Result<Vec<CMat>> {
    let l = pi.len();
    let k = pi.first().ok_or_else(|| invalid("no stage coefficients"))?.nrows();
    let mut m = CMat::zeros(l * k, l * k);
    for row in 0..l {
        for (col, p) in pi.iter().enumerate() {
            let block = if row == col { identity(k) } else { p.clone() };
            m.view_mut((row * k, col * k), (k, k)).copy_from(&block);
        }
    }
    let mut rhs = CMat::zeros(l * k, k);
    for row in 0..l {
        rhs.view_mut((row * k, 0), (k, k)).copy_from(&identity(k));
    }
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularStage {
            what: "stacked stage system",
            cond: f64::INFINITY,
        })?;
    Ok(split_rows(&x, k))
}

/// Random Hermitian matrix with eigenvalues uniform on `[0, max_eig]` and a
/// random unitary eigenbasis.
pub fn random_pi<R: Rng + ?Sized>(k: usize, max_eig: f64, rng: &mut R) -> CMat {
    let z = CMat::from_fn(k, k, |_, _| complex_normal(rng, 1.0));
    let q = z.qr().q();
    let d = CMat::from_diagonal(&DVector::from_fn(k, |_, _| C64::new(rng.random::<f64>() * max_eig, 0.0)));
    &q * d * q.adjoint()
}

/// Exact `Pi_l` for every past-CSI class: `pi[class][ap]`.
pub fn exact_conditional_pi(ens: &FiniteEnsemble, weights: &Weights) -> Vec<Vec<CMat>> {
    let p_sqrt = weights.p_sqrt();
    let aps = ens.dims().aps;
    (0..ens.classes().len())
        .map(|c| {
            (0..aps)
                .map(|l| ens.conditional_expectation(c, |pair| effective_channel(&pair.now[l], &p_sqrt, weights.sigma[l])))
                .collect()
        })
        .collect()
}

/// Exact unconditional `E[P^(1/2) H_l^H F_l]` per AP.
pub fn exact_mean_pi(ens: &FiniteEnsemble, weights: &Weights) -> Vec<CMat> {
    let p_sqrt = weights.p_sqrt();
    (0..ens.dims().aps)
        .map(|l| ens.expectation(|pair| effective_channel(&pair.now[l], &p_sqrt, weights.sigma[l])))
        .collect()
}

/// A team-feasible policy on a finite ensemble: AP `l` maps its information
/// state `(H_l[t], H[t-d])` to an `N x K` block.
#[derive(Debug, Clone)]
pub struct PolicyTable {
    /// `state_of[l][outcome]`
    pub state_of: Vec<Vec<usize>>,
    /// `tables[l][state]`
    pub tables: Vec<Vec<CMat>>,
}

impl PolicyTable {
    /// Enumerates the information states of every AP with zero tables.
    pub fn zeros(ens: &FiniteEnsemble) -> Self {
        let dims = ens.dims();
        let mut state_of = vec![vec![0; ens.outcomes().len()]; dims.aps];
        let mut tables = vec![Vec::new(); dims.aps];
        for l in 0..dims.aps {
            let mut index: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
            for (o, outcome) in ens.outcomes().iter().enumerate() {
                let key = (
                    ens.class_of(o),
                    outcome.pair.now[l]
                        .iter()
                        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                        .collect(),
                );
                let next = index.len();
                state_of[l][o] = *index.entry(key).or_insert(next);
            }
            tables[l] = vec![CMat::zeros(dims.antennas, dims.ues); index.len()];
        }
        Self { state_of, tables }
    }

    /// Tabulates a policy that is evaluated per outcome. Fails if the policy
    /// gives different blocks for the same information state.
    pub fn from_outcomes(ens: &FiniteEnsemble, precoders: &[PrecoderSet]) -> Result<Self> {
        let mut table = Self::zeros(ens);
        let mut seen: Vec<Vec<bool>> = table.tables.iter().map(|t| vec![false; t.len()]).collect();
        for (o, pre) in precoders.iter().enumerate() {
            for (l, block) in pre.blocks.iter().enumerate() {
                let s = table.state_of[l][o];
                if seen[l][s] {
                    if (&table.tables[l][s] - block).norm() > 1e-12 {
                        return Err(invalid(format!("policy of AP {l} is not a function of its information")));
                    }
                } else {
                    table.tables[l][s] = block.clone();
                    seen[l][s] = true;
                }
            }
        }
        Ok(table)
    }

    pub fn precoder(&self, outcome: usize) -> PrecoderSet {
        PrecoderSet {
            blocks: self
                .tables
                .iter()
                .zip(&self.state_of)
                .map(|(t, s)| t[s[outcome]].clone())
                .collect(),
            scheme: Scheme::TeamMmse,
        }
    }

    /// Exact team objective.
    pub fn objective(&self, ens: &FiniteEnsemble, weights: &Weights) -> f64 {
        ens.outcomes()
            .iter()
            .enumerate()
            .map(|(o, out)| out.prob * crate::evaluation::sample_mse(&out.pair, &self.precoder(o), weights))
            .sum()
    }

    /// Adds `eps` times a random direction of unit Frobenius norm.
    pub fn perturbed<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Self {
        let mut dir: Vec<Vec<CMat>> = self
            .tables
            .iter()
            .map(|t| t.iter().map(|b| CMat::from_fn(b.nrows(), b.ncols(), |_, _| complex_normal(rng, 1.0))).collect())
            .collect();
        let norm: f64 = dir.iter().flatten().map(|b| b.norm_squared()).sum::<f64>().sqrt();
        for b in dir.iter_mut().flatten() {
            *b *= C64::new(eps / norm, 0.0);
        }
        let tables = self
            .tables
            .iter()
            .zip(&dir)
            .map(|(t, d)| t.iter().zip(d).map(|(a, b)| a + b).collect())
            .collect();
        Self {
            state_of: self.state_of.clone(),
            tables,
        }
    }
}

/// Team precoder with exactly computed coefficients, tabulated.
pub fn exact_team_policy(ens: &FiniteEnsemble, weights: &Weights) -> Result<(PolicyTable, Vec<TeamStages>)> {
    let stages: Vec<TeamStages> = exact_conditional_pi(ens, weights)
        .into_iter()
        .map(TeamStages::from_pi)
        .collect::<Result<_>>()?;
    let precoders: Vec<PrecoderSet> = ens
        .outcomes()
        .iter()
        .enumerate()
        .map(|(o, out)| stages[ens.class_of(o)].apply(&out.pair, weights, Scheme::TeamMmse))
        .collect();
    Ok((PolicyTable::from_outcomes(ens, &precoders)?, stages))
}

/// Global minimizer of the team objective over all team-feasible policies,
/// from the normal equations of the (column-separable) quadratic.
pub fn least_squares_team_optimum(ens: &FiniteEnsemble, weights: &Weights) -> Result<PolicyTable> {
    let dims = ens.dims();
    let mut table = PolicyTable::zeros(ens);
    let offsets: Vec<usize> = table
        .tables
        .iter()
        .scan(0, |acc, t| {
            let start = *acc;
            *acc += t.len() * dims.antennas;
            Some(start)
        })
        .collect();
    let unknowns: usize = table.tables.iter().map(|t| t.len() * dims.antennas).sum();
    let p_sqrt = weights.p_sqrt();

    let mut q = CMat::zeros(unknowns, unknowns);
    let mut rhs = CMat::zeros(unknowns, dims.ues);
    for (o, out) in ens.outcomes().iter().enumerate() {
        // a[i] is the residual row of UE i; its entries sit at `vars`
        let vars: Vec<usize> = (0..dims.aps)
            .flat_map(|l| {
                let base = offsets[l] + table.state_of[l][o] * dims.antennas;
                base..base + dims.antennas
            })
            .collect();
        let mut a = CMat::zeros(dims.ues, vars.len());
        for i in 0..dims.ues {
            for l in 0..dims.aps {
                for n in 0..dims.antennas {
                    a[(i, l * dims.antennas + n)] = out.pair.now[l][(n, i)].conj() * p_sqrt[i];
                }
            }
        }
        let ah_a = a.adjoint() * &a;
        for (x, &vx) in vars.iter().enumerate() {
            let l = x / dims.antennas;
            for (y, &vy) in vars.iter().enumerate() {
                q[(vx, vy)] += ah_a[(x, y)] * out.prob;
            }
            q[(vx, vx)] += C64::new(weights.sigma[l] * out.prob, 0.0);
            for k in 0..dims.ues {
                rhs[(vx, k)] += a[(k, x)].conj() * out.prob;
            }
        }
    }
    let chol = q.cholesky().ok_or(Error::SingularStage {
        what: "least-squares normal equations",
        cond: MAX_CONDITION,
    })?;
    let x = chol.solve(&rhs);
    for l in 0..dims.aps {
        for (s, block) in table.tables[l].iter_mut().enumerate() {
            let start = offsets[l] + s * dims.antennas;
            *block = x.rows(start, dims.antennas).into_owned();
        }
    }
    Ok(table)
}

/// Local MMSE stages alone, per outcome of the ensemble.
pub fn local_mmse_policy(ens: &FiniteEnsemble, weights: &Weights) -> Result<PolicyTable> {
    let p_sqrt = weights.p_sqrt();
    let precoders: Vec<PrecoderSet> = ens
        .outcomes()
        .iter()
        .map(|out| PrecoderSet {
            blocks: out
                .pair
                .now
                .iter()
                .enumerate()
                .map(|(l, h)| local_mmse_stage(h, &p_sqrt, weights.sigma[l]))
                .collect(),
            scheme: Scheme::LocalTmmse,
        })
        .collect();
    PolicyTable::from_outcomes(ens, &precoders)
}
