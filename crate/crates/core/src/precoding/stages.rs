//! Building blocks of the two-stage team precoder `T_l = F_l C_l`.

use rand::Rng;

use crate::channel::{ChannelLaw, ChannelPair};
use crate::error::{invalid, Result};
use crate::linalg::{add_gram, hermitian_part, identity, invert_guarded, scale_columns, CMat, C64};
use crate::scenario::Weights;

use super::{PrecoderSet, Scheme};

/// Cholesky-whitened local channel: returns `W` with
/// `W^H W = P^(1/2) H^H (H P H^H + sigma I)^-1 H P^(1/2)`.
fn whitened(h: &CMat, p_sqrt: &[f64], sigma: f64) -> CMat {
    let mut a = h.clone();
    scale_columns(&mut a, p_sqrt);
    let gram = &a * a.adjoint() + identity(h.nrows()).scale(sigma);
    let chol = gram
        .cholesky()
        .expect("sigma > 0 keeps the local Gram matrix positive definite");
    chol.l_dirty()
        .solve_lower_triangular(&a)
        .expect("Cholesky factor has a nonzero diagonal")
}

/// Local MMSE stage `F_l = (H_l P H_l^H + sigma_l I_N)^-1 H_l P^(1/2)`.
pub fn local_mmse_stage(h: &CMat, p_sqrt: &[f64], sigma: f64) -> CMat {
    assert!(sigma > 0.0, "sigma must be positive");
    let mut a = h.clone();
    scale_columns(&mut a, p_sqrt);
    let gram = &a * a.adjoint() + identity(h.nrows()).scale(sigma);
    gram.cholesky()
        .expect("sigma > 0 keeps the local Gram matrix positive definite")
        .solve(&a)
}

/// Effective channel after local MMSE precoding, `P^(1/2) H_l^H F_l` (K x K,
/// Hermitian PSD with eigenvalues in [0, 1)).
pub fn effective_channel(h: &CMat, p_sqrt: &[f64], sigma: f64) -> CMat {
    assert!(sigma > 0.0, "sigma must be positive");
    let w = whitened(h, p_sqrt, sigma);
    let mut out = CMat::zeros(h.ncols(), h.ncols());
    add_gram(&mut out, &w);
    out
}

/// Monte-Carlo estimate of `Pi_l = E[P^(1/2) H_l^H F_l | H_l[t-d] = past]`
/// from `samples` conditional draws, Hermitian-symmetrized.
pub fn estimate_pi<L: ChannelLaw, R: Rng + ?Sized>(
    law: &L,
    ap: usize,
    past: &CMat,
    weights: &Weights,
    samples: usize,
    rng: &mut R,
) -> CMat {
    assert!(samples >= 1, "at least one conditional sample is needed");
    let p_sqrt = weights.p_sqrt();
    let sigma = weights.sigma[ap];
    let k = past.ncols();
    let mut acc = CMat::zeros(k, k);
    for _ in 0..samples {
        let h = law.sample_conditional_block(ap, past, rng);
        add_gram(&mut acc, &whitened(&h, &p_sqrt, sigma));
    }
    hermitian_part(&acc.scale(1.0 / samples as f64))
}

/// Monte-Carlo estimate of the unconditional mean `E[P^(1/2) H_l^H F_l]`.
///
/// UE columns are independent with sign-symmetric laws, so the exact mean
/// is diagonal; the off-diagonal sample noise is discarded.
pub fn estimate_mean_pi<L: ChannelLaw, R: Rng + ?Sized>(
    law: &L,
    ap: usize,
    weights: &Weights,
    samples: usize,
    rng: &mut R,
) -> CMat {
    assert!(samples >= 1, "at least one sample is needed");
    let p_sqrt = weights.p_sqrt();
    let sigma = weights.sigma[ap];
    let k = law.dims().ues;
    let mut diag = vec![0.0; k];
    for _ in 0..samples {
        let h = law.sample_marginal_block(ap, rng);
        let w = whitened(&h, &p_sqrt, sigma);
        for (d, col) in diag.iter_mut().zip(w.column_iter()) {
            *d += col.norm_squared();
        }
    }
    let mut out = CMat::zeros(k, k);
    for (i, d) in diag.into_iter().enumerate() {
        out[(i, i)] = C64::new(d / samples as f64, 0.0);
    }
    out
}

/// Solves `C_l + sum_{j != l} Pi_j C_j = I` for all `l` by block elimination:
/// `G = sum_l Pi_l (I - Pi_l)^-1`, `S = (I + G)^-1 G`,
/// `C_l = (I - Pi_l)^-1 (I - S)`.
pub fn solve_team_stages(pi: &[CMat]) -> Result<Vec<CMat>> {
    let k = pi
        .first()
        .ok_or_else(|| invalid("no stage coefficients"))?
        .nrows();
    if pi.iter().any(|m| m.shape() != (k, k)) {
        return Err(invalid("stage coefficients must all be K x K"));
    }
    let eye = identity(k);
    if pi.len() == 1 {
        return Ok(vec![eye]);
    }
    let mut inverses = Vec::with_capacity(pi.len());
    let mut g = CMat::zeros(k, k);
    for p in pi {
        let inv = invert_guarded(&(&eye - p), "I - Pi_l")?;
        g += p * &inv;
        inverses.push(inv);
    }
    let s = invert_guarded(&(&eye + &g), "I + G")? * &g;
    let rest = &eye - s;
    Ok(inverses.iter().map(|inv| inv * &rest).collect())
}

/// The coefficient matrices and second stages of a team-structured precoder.
#[derive(Debug, Clone)]
pub struct TeamStages {
    pub pi: Vec<CMat>,
    pub c: Vec<CMat>,
}

impl TeamStages {
    pub fn from_pi(pi: Vec<CMat>) -> Result<Self> {
        let c = solve_team_stages(&pi)?;
        Ok(Self { pi, c })
    }

    /// Largest Frobenius residual `||C_l + sum_{j != l} Pi_j C_j - I||` over `l`.
    pub fn residual(&self) -> f64 {
        let k = self.c[0].nrows();
        let total: CMat = self
            .pi
            .iter()
            .zip(&self.c)
            .fold(CMat::zeros(k, k), |acc, (p, c)| acc + p * c);
        self.pi
            .iter()
            .zip(&self.c)
            .map(|(p, c)| (c + &total - p * c - identity(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `T_l = F_l(H_l[t]) C_l`.
    pub fn apply(&self, pair: &ChannelPair, weights: &Weights, scheme: Scheme) -> PrecoderSet {
        let p_sqrt = weights.p_sqrt();
        let blocks = pair
            .now
            .iter()
            .zip(&self.c)
            .enumerate()
            .map(|(l, (h, c))| local_mmse_stage(h, &p_sqrt, weights.sigma[l]) * c)
            .collect();
        PrecoderSet { blocks, scheme }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, max_abs_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(n, m, |_, _| complex_normal(rng, 1.0))
    }

    #[test]
    fn scalar_local_stage() {
        let h = CMat::from_element(1, 1, C64::new(0.3, -1.2));
        let (p, sigma) = (2.5f64, 0.7);
        let f = local_mmse_stage(&h, &[p.sqrt()], sigma);
        let want = h[(0, 0)] * p.sqrt() / (p * h[(0, 0)].norm_sqr() + sigma);
        assert!((f[(0, 0)] - want).norm() < 1e-15);
    }

    #[test]
    fn zero_channel_gives_zero_stage() {
        let f = local_mmse_stage(&CMat::zeros(3, 4), &[1.0; 4], 1.0);
        assert!(f.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn large_sigma_tends_to_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random(2, 3, &mut rng);
        let p_sqrt = [1.0, 0.5, 2.0];
        let sigma = 1e8;
        let f = local_mmse_stage(&h, &p_sqrt, sigma);
        let mut mf = h.clone();
        scale_columns(&mut mf, &p_sqrt);
        for (a, b) in f.iter().zip(mf.iter()) {
            assert!(((a * sigma) / b - C64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn push_through_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let h = random(3, 5, &mut rng);
            let p_sqrt: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 2.0).collect();
            let sigma = 0.1 + rng.random::<f64>();
            let f = local_mmse_stage(&h, &p_sqrt, sigma);
            let mut a = h.clone();
            scale_columns(&mut a, &p_sqrt);
            let alt = &a * (a.adjoint() * &a + identity(5).scale(sigma)).try_inverse().unwrap();
            assert!(max_abs_diff(&f, &alt) < 1e-10);
            // effective channel matches the definition
            let eff = effective_channel(&h, &p_sqrt, sigma);
            assert!(max_abs_diff(&eff, &(a.adjoint() * &f)) < 1e-10);
        }
    }

    #[test]
    fn solver_examples() {
        let eye = identity(3);
        let c = solve_team_stages(&[CMat::from_element(3, 3, C64::new(0.1, 0.0))]).unwrap();
        assert_eq!(c, vec![eye.clone()]);
        let c = solve_team_stages(&vec![CMat::zeros(3, 3); 4]).unwrap();
        assert!(c.iter().all(|m| *m == eye));

        let (a, b) = (0.3, 0.8);
        let c = solve_team_stages(&[
            CMat::from_element(1, 1, C64::new(a, 0.0)),
            CMat::from_element(1, 1, C64::new(b, 0.0)),
        ])
        .unwrap();
        assert!((c[0][(0, 0)].re - (1.0 - b) / (1.0 - a * b)).abs() < 1e-14);
        assert!((c[1][(0, 0)].re - (1.0 - a) / (1.0 - a * b)).abs() < 1e-14);
    }

    #[test]
    fn solver_rejects_unit_eigenvalue() {
        let pi = vec![identity(2), CMat::zeros(2, 2)];
        assert!(matches!(
            solve_team_stages(&pi),
            Err(crate::error::Error::SingularStage { .. })
        ));
    }

    #[test]
    fn solver_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pi: Vec<CMat> = (0..5)
                .map(|_| {
                    let h = random(2, 6, &mut rng);
                    effective_channel(&h, &[1.0; 6], 0.5)
                })
                .collect();
            let stages = TeamStages::from_pi(pi).unwrap();
            assert!(stages.residual() < 1e-10, "{}", stages.residual());
        }
    }
}
