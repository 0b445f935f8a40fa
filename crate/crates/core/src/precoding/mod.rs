//! Local MMSE stages, coefficient estimation, the team linear-system solver
//! and the five precoding schemes.

mod schemes;
mod stages;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use schemes::{
    centralized_precoder, local_mmse_only, naive_precoder, structure_aware_precoder, team_mmse_precoder,
    team_precoder_from_pi, LocalTmmse,
};
pub use stages::{
    effective_channel, estimate_mean_pi, estimate_pi, local_mmse_stage, solve_team_stages, TeamStages,
};

use crate::linalg::{vstack, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TeamMmse,
    LocalTmmse,
    Centralized,
    Naive,
    StructureAware,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::TeamMmse,
        Scheme::LocalTmmse,
        Scheme::Centralized,
        Scheme::Naive,
        Scheme::StructureAware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TeamMmse => "team_mmse",
            Scheme::LocalTmmse => "local_tmmse",
            Scheme::Centralized => "centralized",
            Scheme::Naive => "naive",
            Scheme::StructureAware => "structure_aware",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Joint precoder `T` as `L` blocks of `N x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub blocks: Vec<CMat>,
    pub scheme: Scheme,
}

impl PrecoderSet {
    pub fn stacked(&self) -> CMat {
        vstack(&self.blocks)
    }
}
