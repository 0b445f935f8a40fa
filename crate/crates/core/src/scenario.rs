//! Large-scale state of a user drop: geometry, shadowing, channel gains and
//! the virtual uplink power allocation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Network layout and propagation constants. Every field except the three
/// dimensions defaults to the reference urban setup (0.5 km square, 20 MHz,
/// 2 GHz 3GPP-like path loss, 5 W sum power).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(rename = "L")]
    pub num_aps: usize,
    #[serde(rename = "N")]
    pub antennas_per_ap: usize,
    #[serde(rename = "K")]
    pub num_ues: usize,
    #[serde(default = "defaults::area_side")]
    pub area_side: f64,
    #[serde(default = "defaults::ap_height_delta")]
    pub ap_height_delta: f64,
    #[serde(default = "defaults::bandwidth_hz")]
    pub bandwidth_hz: f64,
    #[serde(default = "defaults::noise_figure_db")]
    pub noise_figure_db: f64,
    #[serde(default = "defaults::shadow_std_db")]
    pub shadow_std_db: f64,
    #[serde(default = "defaults::shadow_corr_distance_m")]
    pub shadow_corr_distance_m: f64,
    #[serde(default = "defaults::sum_power_watt")]
    pub sum_power_watt: f64,
    #[serde(default = "defaults::pl_slope_db")]
    pub pl_slope_db: f64,
    #[serde(default = "defaults::pl_intercept_db")]
    pub pl_intercept_db: f64,
    #[serde(default = "defaults::power_exponent")]
    pub power_exponent: f64,
}

mod defaults {
    pub fn area_side() -> f64 {
        500.0
    }
    pub fn ap_height_delta() -> f64 {
        10.0
    }
    pub fn bandwidth_hz() -> f64 {
        20e6
    }
    pub fn noise_figure_db() -> f64 {
        7.0
    }
    pub fn shadow_std_db() -> f64 {
        4.0
    }
    pub fn shadow_corr_distance_m() -> f64 {
        9.0
    }
    pub fn sum_power_watt() -> f64 {
        5.0
    }
    pub fn pl_slope_db() -> f64 {
        36.7
    }
    pub fn pl_intercept_db() -> f64 {
        30.5
    }
    pub fn power_exponent() -> f64 {
        -1.0
    }
}

impl NetworkConfig {
    /// Reference parameters with the given dimensions.
    pub fn with_dims(num_aps: usize, antennas_per_ap: usize, num_ues: usize) -> Self {
        Self {
            num_aps,
            antennas_per_ap,
            num_ues,
            area_side: defaults::area_side(),
            ap_height_delta: defaults::ap_height_delta(),
            bandwidth_hz: defaults::bandwidth_hz(),
            noise_figure_db: defaults::noise_figure_db(),
            shadow_std_db: defaults::shadow_std_db(),
            shadow_corr_distance_m: defaults::shadow_corr_distance_m(),
            sum_power_watt: defaults::sum_power_watt(),
            pl_slope_db: defaults::pl_slope_db(),
            pl_intercept_db: defaults::pl_intercept_db(),
            power_exponent: defaults::power_exponent(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_aps == 0 || self.antennas_per_ap == 0 || self.num_ues == 0 {
            return Err(invalid("L, N and K must all be at least 1"));
        }
        if !(self.area_side > 0.0) {
            return Err(invalid("area_side must be positive"));
        }
        if !(self.shadow_std_db >= 0.0) {
            return Err(invalid("shadow_std_db must be non-negative"));
        }
        if !(self.sum_power_watt > 0.0) {
            return Err(invalid("sum_power_watt must be positive"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(invalid("bandwidth_hz must be positive"));
        }
        if !(self.shadow_corr_distance_m > 0.0) {
            return Err(invalid("shadow_corr_distance_m must be positive"));
        }
        if !(self.ap_height_delta >= 0.0) {
            return Err(invalid("ap_height_delta must be non-negative"));
        }
        grid_side(self.num_aps)?;
        Ok(())
    }
}

pub type Position = [f64; 2];

/// The `(p, sigma)` parameters of the team MMSE problem: virtual uplink
/// powers per UE and dual noise / regularization per AP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Weights {
    pub fn new(p: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("powers must be finite and non-negative"));
        }
        if sigma.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(invalid("sigma must be finite and positive"));
        }
        Ok(Self { p, sigma })
    }

    pub fn p_sqrt(&self) -> Vec<f64> {
        self.p.iter().map(|x| x.sqrt()).collect()
    }
}

/// Static per-drop state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub ap_positions: Vec<Position>,
    pub ue_positions: Vec<Position>,
    /// `gains[(l, k)]`: linear SNR per watt between AP `l` and UE `k`, noise
    /// already absorbed.
    pub gains: DMatrix<f64>,
    pub weights: Weights,
    pub antennas_per_ap: usize,
}

impl Scenario {
    /// Draws one user drop: uniform UE placement, correlated shadowing
    /// (independent across APs), gains and fractional power allocation.
    /// `sigma` is all ones.
    pub fn draw<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let ap_positions = place_aps(config.num_aps, config.area_side)?;
        let ue_positions: Vec<Position> = (0..config.num_ues)
            .map(|_| {
                [
                    rng.random::<f64>() * config.area_side,
                    rng.random::<f64>() * config.area_side,
                ]
            })
            .collect();
        let factor = shadow_factor(
            &ue_positions,
            config.shadow_std_db,
            config.shadow_corr_distance_m,
        )?;
        let shadow = draw_shadowing(config.num_aps, &factor, rng);
        let gains = gain_matrix(config, &ap_positions, &ue_positions, &shadow);
        let p = fractional_power_allocation(&gains, config.sum_power_watt, config.power_exponent)?;
        Ok(Self {
            ap_positions,
            ue_positions,
            gains,
            weights: Weights::new(p, vec![1.0; config.num_aps])?,
            antennas_per_ap: config.antennas_per_ap,
        })
    }

    /// Builds a scenario directly from gains and weights (no geometry).
    pub fn from_gains(gains: DMatrix<f64>, weights: Weights, antennas_per_ap: usize) -> Result<Self> {
        if gains.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(invalid("gains must be finite and positive"));
        }
        if weights.p.len() != gains.ncols() || weights.sigma.len() != gains.nrows() {
            return Err(invalid("weights do not match the gain matrix"));
        }
        if antennas_per_ap == 0 {
            return Err(invalid("N must be at least 1"));
        }
        Ok(Self {
            ap_positions: Vec::new(),
            ue_positions: Vec::new(),
            gains,
            weights,
            antennas_per_ap,
        })
    }

    pub fn num_aps(&self) -> usize {
        self.gains.nrows()
    }

    pub fn num_ues(&self) -> usize {
        self.gains.ncols()
    }
}

fn grid_side(num_aps: usize) -> Result<usize> {
    let side = (num_aps as f64).sqrt().round() as usize;
    if side * side != num_aps || num_aps == 0 {
        return Err(Error::NonSquareApCount(num_aps));
    }
    Ok(side)
}

/// Square grid of APs at cell centers, row-major in the x coordinate.
pub fn place_aps(num_aps: usize, area_side: f64) -> Result<Vec<Position>> {
    let side = grid_side(num_aps)?;
    let pitch = area_side / side as f64;
    let coord = |m: usize| (m as f64 + 0.5) * pitch;
    Ok((0..side)
        .flat_map(|ix| (0..side).map(move |iy| [coord(ix), coord(iy)]))
        .collect())
}

/// `-174 + 10 log10(B) + F` in dBm.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Channel gain in dB relative to the noise floor, with the reference
/// path-loss constants. `d2_m` is the horizontal distance.
pub fn channel_gain_db(d2_m: f64, height_delta_m: f64, shadow_db: f64, noise_dbm: f64) -> f64 {
    path_gain_db(d2_m, height_delta_m, shadow_db, noise_dbm, 36.7, 30.5)
}

fn path_gain_db(
    d2_m: f64,
    height_delta_m: f64,
    shadow_db: f64,
    noise_dbm: f64,
    slope_db: f64,
    intercept_db: f64,
) -> f64 {
    let d3 = d2_m.hypot(height_delta_m);
    -slope_db * d3.log10() - intercept_db + shadow_db - noise_dbm
}

/// Converts a gain relative to a dBm noise floor into SNR per watt of
/// transmit power (1 W = 30 dBm).
pub fn gain_db_to_linear_per_watt(gain_db: f64) -> f64 {
    10f64.powf((gain_db + 30.0) / 10.0)
}

fn distance(a: &Position, b: &Position) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Linear gains for given geometry and shadowing (dB, L x K).
pub fn gain_matrix(
    config: &NetworkConfig,
    ap_positions: &[Position],
    ue_positions: &[Position],
    shadow_db: &DMatrix<f64>,
) -> DMatrix<f64> {
    let noise = noise_power_dbm(config.bandwidth_hz, config.noise_figure_db);
    DMatrix::from_fn(ap_positions.len(), ue_positions.len(), |l, k| {
        let db = path_gain_db(
            distance(&ap_positions[l], &ue_positions[k]),
            config.ap_height_delta,
            shadow_db[(l, k)],
            noise,
            config.pl_slope_db,
            config.pl_intercept_db,
        );
        gain_db_to_linear_per_watt(db)
    })
}

/// `M[k, i] = rho^2 * 2^(-dist(k, i) / corr_dist)`
pub fn shadow_covariance(ue_positions: &[Position], std_db: f64, corr_dist: f64) -> DMatrix<f64> {
    let var = std_db * std_db;
    let k = ue_positions.len();
    DMatrix::from_fn(k, k, |a, b| {
        var * 2f64.powf(-distance(&ue_positions[a], &ue_positions[b]) / corr_dist)
    })
}

/// Lower Cholesky factor of the shadow covariance. Jitter starts at
/// `1e-10 rho^2` and grows tenfold up to `1e-4 rho^2`.
pub fn shadow_factor(ue_positions: &[Position], std_db: f64, corr_dist: f64) -> Result<DMatrix<f64>> {
    let k = ue_positions.len();
    if std_db == 0.0 {
        return Ok(DMatrix::zeros(k, k));
    }
    let cov = shadow_covariance(ue_positions, std_db, corr_dist);
    let var = std_db * std_db;
    let mut jitter = 1e-10 * var;
    loop {
        let jittered = &cov + DMatrix::identity(k, k) * jitter;
        if let Some(chol) = jittered.cholesky() {
            return Ok(chol.unpack());
        }
        jitter *= 10.0;
        if jitter > 1e-4 * var * (1.0 + 1e-9) {
            return Err(Error::CholeskyFailure { jitter: jitter / 10.0 });
        }
    }
}

/// Shadowing in dB, one independent correlated draw per AP.
fn draw_shadowing<R: Rng + ?Sized>(num_aps: usize, factor: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let k = factor.nrows();
    let mut shadow = DMatrix::zeros(num_aps, k);
    for l in 0..num_aps {
        let white = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let correlated = factor * white;
        for (kk, v) in correlated.iter().enumerate() {
            shadow[(l, kk)] = *v;
        }
    }
    shadow
}

/// `p_k = P a_k / sum_i a_i` with `a_k = (sum_l gains[l, k])^exponent`.
pub fn fractional_power_allocation(gains: &DMatrix<f64>, sum_power: f64, exponent: f64) -> Result<Vec<f64>> {
    if !(sum_power > 0.0) {
        return Err(invalid("sum power must be positive"));
    }
    if gains.iter().any(|&g| !(g > 0.0)) {
        return Err(invalid("gains must be positive"));
    }
    let a: Vec<f64> = gains
        .column_iter()
        .map(|c| c.sum().powf(exponent))
        .collect();
    let total: f64 = a.iter().sum();
    Ok(a.iter().map(|x| sum_power * x / total).collect())
}
