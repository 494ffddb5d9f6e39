//! Instance files: a system, its seminorm, solver settings and task records.

use std::path::Path;

use lipopsys::convex::SolverConfig;
use lipopsys::cstar::{Blowup, Growth, SeminormFamily};
use lipopsys::linalg::{BlockMatrix, C64};
use lipopsys::metric::{BridgePair, MatrixState};
use lipopsys::opsys::{OperatorSubsystem, State};
use lipopsys::seminorm::SeminormSpec;
use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub system: OperatorSubsystem,
    pub seminorm: SeminormSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Side {
    pub system: OperatorSubsystem,
    pub seminorm: SeminormSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiJson {
    pub p: usize,
    pub choi: BlockMatrix,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupJson {
    pub atom: SeminormSpec,
    pub growth: Growth,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Density-matrix pairs for `ρ_L`.
    Rho { pairs: Vec<(BlockMatrix, BlockMatrix)> },
    /// Matrix states given by Choi blocks.
    RhoUcp { phi: ChoiJson, psi: ChoiJson },
    /// The config system is the left side.
    Bridge { right: Side, bridge: SeminormSpec, embed: Vec<Vec<f64>> },
    Epsilon {
        #[serde(default)]
        witnesses: Vec<Vec<C64>>,
    },
    Leibniz {
        #[serde(default)]
        pairs: Vec<(Vec<C64>, Vec<C64>)>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        r0: Option<f64>,
    },
    /// Blow-up family over the config system; the config seminorm is the base.
    Family {
        blowups: Vec<BlowupJson>,
        params: Vec<f64>,
        #[serde(default)]
        witnesses: Vec<Vec<C64>>,
    },
    Shape {
        #[serde(default = "default_directions")]
        directions: usize,
        #[serde(default)]
        coords: Option<Vec<BlockMatrix>>,
    },
}

fn default_samples() -> usize {
    200
}

fn default_directions() -> usize {
    64
}

/// Parses with the JSON path of the first offending field in the message.
pub fn load(path: &Path) -> Result<InstanceConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        format!("{}: at `{at}`: {}", path.display(), e.into_inner())
    })
}

impl InstanceConfig {
    pub fn tasks_where<'a, T>(&'a self, pick: impl Fn(usize, &'a Task) -> Option<T>) -> Vec<T> {
        self.tasks.iter().enumerate().filter_map(|(i, t)| pick(i, t)).collect()
    }

    pub fn state(&self, rho: &BlockMatrix, at: &str) -> Result<State, String> {
        if rho.blocks.len() != self.system.ambient().block_dims.len() {
            return Err(format!("{at}: expected {} blocks", self.system.ambient().block_dims.len()));
        }
        State::new(rho.clone()).map_err(|e| format!("{at}: {e}"))
    }

    pub fn bridge_pair(&self, right: &Side, bridge: &SeminormSpec, embed: &[Vec<f64>], at: &str) -> Result<BridgePair, String> {
        let (nr, nl) = (right.system.dim(), self.system.dim());
        if embed.len() != nr || embed.iter().any(|r| r.len() != nl) {
            return Err(format!("{at}.embed: expected a {nr}×{nl} matrix"));
        }
        let flat: Vec<f64> = embed.iter().flatten().copied().collect();
        Ok(BridgePair {
            left: self.system.clone(),
            right: right.system.clone(),
            left_spec: self.seminorm.clone(),
            right_spec: right.seminorm.clone(),
            bridge: bridge.clone(),
            embed: DMatrix::from_row_slice(nr, nl, &flat),
        })
    }

    pub fn family(&self, blowups: &[BlowupJson], params: &[f64], witnesses: &[Vec<C64>]) -> SeminormFamily {
        let b = blowups.iter().map(|b| Blowup { atom: b.atom.clone(), growth: b.growth }).collect();
        let mut f = SeminormFamily::max_form(self.system.clone(), self.seminorm.clone(), b, params.to_vec());
        f.witnesses = witnesses.to_vec();
        f
    }
}

pub fn matrix_state(c: &ChoiJson, at: &str) -> Result<MatrixState, String> {
    MatrixState::new(c.p, c.choi.blocks.clone()).map_err(|e| format!("{at}: {e}"))
}
