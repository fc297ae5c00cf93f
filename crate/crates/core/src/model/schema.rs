use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FiniteStaticTeam, Sense};
use crate::error::{Result, TeamError};
use crate::reduction::SequentialFiniteTeam;

/// On-disk problem description (JSON).
///
/// `prior` is row-major over `Ω0, Y¹, …, Y^N`. `cost` is row-major over `Ω0, Y, U`, or
/// over `Ω0, U` when `cost_depends_on_y` is `false`. A file carrying `kernels` describes a
/// sequential team instead: `prior` is then over `Ω0` only, `cost` over `Ω0 × U`, and
/// `kernels[i]` holds `g^i(y^i | ω0, u¹, …, u^{i-1})` with `y^i` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub num_dms: usize,
    pub omega0_size: usize,
    pub obs_sizes: Vec<usize>,
    pub act_sizes: Vec<usize>,
    pub sense: Sense,
    pub prior: Vec<f64>,
    pub cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_depends_on_y: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<Vec<f64>>>,
}

/// A parsed problem file.
#[derive(Debug, Clone)]
pub enum LoadedProblem {
    Static(FiniteStaticTeam),
    Sequential(SequentialFiniteTeam),
}

impl ProblemFile {
    pub fn from_team(team: &FiniteStaticTeam) -> Self {
        ProblemFile {
            num_dms: team.num_dms(),
            omega0_size: team.omega0_size(),
            obs_sizes: team.obs_sizes().to_vec(),
            act_sizes: team.act_sizes().to_vec(),
            sense: team.sense(),
            prior: team.prior().to_vec(),
            cost: team.cost().to_vec(),
            cost_depends_on_y: None,
            kernels: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    fn check_counts(&self) -> Result<()> {
        if self.obs_sizes.len() != self.num_dms {
            return Err(TeamError::validation(
                "obs_sizes",
                format!("{} entries for num_dms = {}", self.obs_sizes.len(), self.num_dms),
            ));
        }
        if self.act_sizes.len() != self.num_dms {
            return Err(TeamError::validation(
                "act_sizes",
                format!("{} entries for num_dms = {}", self.act_sizes.len(), self.num_dms),
            ));
        }
        Ok(())
    }

    pub fn into_problem(self) -> Result<LoadedProblem> {
        self.check_counts()?;
        if let Some(kernels) = self.kernels {
            if self.cost_depends_on_y == Some(true) {
                return Err(TeamError::validation(
                    "cost_depends_on_y",
                    "sequential teams take a cost over Ω0 × U",
                ));
            }
            if self.prior.len() != self.omega0_size {
                return Err(TeamError::validation(
                    "prior",
                    format!(
                        "sequential prior needs {} entries over Ω0, found {}",
                        self.omega0_size,
                        self.prior.len()
                    ),
                ));
            }
            let seq = SequentialFiniteTeam::new(
                self.prior,
                self.obs_sizes,
                self.act_sizes,
                kernels,
                self.cost,
                self.sense,
            )?;
            return Ok(LoadedProblem::Sequential(seq));
        }
        let team = if self.cost_depends_on_y == Some(false) {
            FiniteStaticTeam::with_static_cost(
                self.omega0_size,
                self.obs_sizes,
                self.act_sizes,
                self.prior,
                self.cost,
                self.sense,
            )?
        } else {
            FiniteStaticTeam::new(
                self.omega0_size,
                self.obs_sizes,
                self.act_sizes,
                self.prior,
                self.cost,
                self.sense,
            )?
        };
        Ok(LoadedProblem::Static(team))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| TeamError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_file(text: &str) -> Result<ProblemFile> {
    serde_json::from_str(text).map_err(|e| TeamError::Parse(e.to_string()))
}

/// Parses a static team from JSON text.
pub fn parse_team(text: &str) -> Result<FiniteStaticTeam> {
    match parse_file(text)?.into_problem()? {
        LoadedProblem::Static(team) => Ok(team),
        LoadedProblem::Sequential(_) => Err(TeamError::validation(
            "kernels",
            "file describes a sequential team; reduce it first",
        )),
    }
}

/// Reads and validates a static team.
pub fn load_team(path: impl AsRef<Path>) -> Result<FiniteStaticTeam> {
    parse_team(&read(path.as_ref())?)
}

/// Reads either a static or a sequential team.
pub fn load_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    parse_file(&read(path.as_ref())?)?.into_problem()
}
