//! Run configuration. Every block rejects unknown keys, and only the block
//! belonging to the selected command may be present.

use std::path::PathBuf;

use nlgp::dynamics::EvolutionConfig;
use nlgp::kernels::KernelSpec;
use nlgp::minimizer::MinimizerConfig;
use nlgp::{Grid, InteractionKernel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Sweep,
    Dispersion,
    Check,
    Evolve,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_points: 8192, length: 256.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seed {
    Kdv,
    Gp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub q: f64,
    #[serde(default = "default_seed")]
    pub init: Seed,
    /// relative noise on η of the initial field
    #[serde(default)]
    pub noise: f64,
}

fn default_seed() -> Seed {
    Seed::Kdv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl QGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        // rounded to 12 decimals so 0.1 + 2·0.1 comes out as 0.3
        (0..=n).map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub q_grid: QGrid,
    #[serde(default = "default_seed")]
    pub first: Seed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    1201
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_check_samples")]
    pub n_samples: usize,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { xi_max: default_xi_max(), n_samples: default_check_samples(), search_budget: default_budget() }
    }
}

fn default_xi_max() -> f64 {
    100.0
}

fn default_check_samples() -> usize {
    20_000
}

fn default_budget() -> usize {
    3000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Initial {
    /// closed-form contact soliton with speed c
    GpSoliton { c: f64 },
    /// minimizer at momentum q
    Minimizer { q: f64, #[serde(default = "default_seed")] init: Seed },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    None,
    Plain,
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub initial: Initial,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    /// distance of each record to the unperturbed initial field
    #[serde(default = "default_distance")]
    pub distance: DistanceMode,
    /// field dumps at the recorded times nearest to these
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_distance() -> DistanceMode {
    DistanceMode::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub c: f64,
    /// optional parametric curve (p(c), E(c)) for c on [c_min, c_max]
    #[serde(default)]
    pub curve: Option<OracleCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCurve {
    pub c_min: f64,
    pub c_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<MinimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

fn default_kernel() -> KernelSpec {
    InteractionKernel::dirac().to_spec()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Checks everything that can be checked before computing, and fills
    /// the defaults of the selected command's block.
    pub fn validate(&mut self) -> Result<(InteractionKernel, Grid), String> {
        let kernel = InteractionKernel::try_from(self.kernel.clone()).map_err(|e| e.to_string())?;
        let grid = Grid::new(self.grid.n_points, self.grid.length).map_err(|e| e.to_string())?;
        if let Some(m) = &self.minimizer {
            m.validate().map_err(|e| e.to_string())?;
        }
        let present = [
            (Command::Solve, self.solve.is_some()),
            (Command::Sweep, self.sweep.is_some()),
            (Command::Dispersion, self.dispersion.is_some()),
            (Command::Check, self.check.is_some()),
            (Command::Evolve, self.evolve.is_some()),
            (Command::Oracle, self.oracle.is_some()),
        ];
        for (cmd, here) in present {
            if here && cmd != self.command {
                return Err(format!("block '{}' does not belong to command '{}'", name(cmd), name(self.command)));
            }
        }
        let uses_minimizer = matches!(self.command, Command::Solve | Command::Sweep)
            || matches!(&self.evolve, Some(EvolveConfig { initial: Initial::Minimizer { .. }, .. }));
        if self.minimizer.is_some() && !uses_minimizer {
            return Err(format!("block 'minimizer' is not used by command '{}'", name(self.command)));
        }
        let missing = |b: &str| format!("command '{}' needs a '{b}' block", name(self.command));
        match self.command {
            Command::Solve => {
                let s = self.solve.as_ref().ok_or_else(|| missing("solve"))?;
                positive("solve.q", s.q)?;
                if !(0.0..1.0).contains(&s.noise) {
                    return Err(format!("solve.noise must lie in [0, 1), got {}", s.noise));
                }
            }
            Command::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                let g = s.q_grid;
                positive("sweep.q_grid.start", g.start)?;
                positive("sweep.q_grid.step", g.step)?;
                if !(g.stop >= g.start) || !g.stop.is_finite() {
                    return Err(format!("sweep.q_grid.stop must be >= start, got {}", g.stop));
                }
                if g.values().len() > 10_000 {
                    return Err("sweep.q_grid has more than 10000 points".into());
                }
            }
            Command::Dispersion => {
                let d = self.dispersion.as_ref().ok_or_else(|| missing("dispersion"))?;
                if !(d.xi_min >= 0.0 && d.xi_max > d.xi_min && d.xi_max.is_finite()) {
                    return Err(format!("dispersion range must satisfy 0 <= xi_min < xi_max, got [{}, {}]", d.xi_min, d.xi_max));
                }
                if d.n_samples < 3 {
                    return Err("dispersion.n_samples must be at least 3".into());
                }
            }
            Command::Check => {
                let c = self.check.get_or_insert_with(CheckConfig::default);
                positive("check.xi_max", c.xi_max)?;
            }
            Command::Evolve => {
                let e = self.evolve.as_mut().ok_or_else(|| missing("evolve"))?;
                // the run's seed drives the perturbation
                e.evolution.seed = self.seed;
                e.evolution.validate().map_err(|x| x.to_string())?;
                match e.initial {
                    Initial::GpSoliton { c } => {
                        if !(c > 0.0 && c < std::f64::consts::SQRT_2) {
                            return Err(format!("evolve.initial.gp_soliton.c must lie in (0, sqrt 2), got {c}"));
                        }
                    }
                    Initial::Minimizer { q, .. } => positive("evolve.initial.minimizer.q", q)?,
                }
                if e.snapshots.iter().any(|&t| !(0.0..=e.evolution.t_end).contains(&t)) {
                    return Err("evolve.snapshots must lie in [0, t_end]".into());
                }
            }
            Command::Oracle => {
                let o = self.oracle.as_ref().ok_or_else(|| missing("oracle"))?;
                if !(o.c > 0.0 && o.c < std::f64::consts::SQRT_2) {
                    return Err(format!("oracle.c must lie in (0, sqrt 2), got {}", o.c));
                }
                if let Some(c) = o.curve {
                    if !(c.c_min > 0.0 && c.c_max > c.c_min && c.c_max < std::f64::consts::SQRT_2 && c.n >= 2) {
                        return Err("oracle.curve needs 0 < c_min < c_max < sqrt 2 and n >= 2".into());
                    }
                }
            }
        }
        if uses_minimizer && self.minimizer.is_none() {
            self.minimizer = Some(MinimizerConfig::default());
        }
        Ok((kernel, grid))
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

pub fn name(c: Command) -> &'static str {
    match c {
        Command::Solve => "solve",
        Command::Sweep => "sweep",
        Command::Dispersion => "dispersion",
        Command::Check => "check",
        Command::Evolve => "evolve",
        Command::Oracle => "oracle",
    }
}
