//! Scenario files: a TOML document with a `mode` key and one block per
//! ingredient the mode needs.
//!
//! ```toml
//! mode = "discrete_br"
//! seed = 7
//!
//! [game]
//! populations = [50.0, 50.0]
//! slot_len = 1
//! last_slot = 59
//! service_a = { kind = "deterministic", mean = 4 }
//! service_b = { kind = "geometric", mean = 2 }
//!
//! [solver]
//! max_outer = 1000
//! ```
//!
//! Which blocks are required per mode:
//!
//! | mode          | blocks                              |
//! |---------------|-------------------------------------|
//! | `fluid`       | `fluid`                             |
//! | `discrete_br` | `game`, optional `solver`           |
//! | `discrete_fr` | `signal`, `slots`, optional `solver`|
//! | `abm`         | `signal`, `slots`, `abm`            |
//! | `compare`     | `signal`, `slots`, `abm`, optional `solver` |
//! | `signal`      | `signal`                            |

use std::path::PathBuf;

use bottleneck_core::abm::{AbmConfig, DEFAULT_C1, DEFAULT_C2};
use bottleneck_core::dists::{make_deterministic, make_geometric, make_geometric_mixture, ServiceDist};
use bottleneck_core::fluid::FluidParams;
use bottleneck_core::signal::SignalParams;
use bottleneck_core::solver::{Norm, SolverConfig};
use bottleneck_core::workload::SlotGame;
use serde::Deserialize;

use crate::CliError;

/// What the run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Closed-form fluid equilibrium.
    Fluid,
    /// Slotted game with given populations and services.
    DiscreteBr,
    /// Slotted game under the posterior view of each signal.
    DiscreteFr,
    /// Learning simulation.
    Abm,
    /// Learning simulation against both equilibrium notions.
    Compare,
    /// Signal posteriors only.
    Signal,
}

impl Mode {
    /// Name as written in scenario files.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fluid => "fluid",
            Mode::DiscreteBr => "discrete_br",
            Mode::DiscreteFr => "discrete_fr",
            Mode::Abm => "abm",
            Mode::Compare => "compare",
            Mode::Signal => "signal",
        }
    }
}

/// Integer service law.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceSpec {
    /// Point mass at `mean`.
    Deterministic {
        /// Integer mean.
        mean: f64,
    },
    /// Geometric on `{1, 2, ...}`.
    Geometric {
        /// Mean.
        mean: f64,
    },
    /// Unit-mean geometric mixed with a long geometric.
    GeometricMixture {
        /// Mean.
        mean: f64,
        /// Coefficient of variation.
        cv: f64,
    },
}

impl ServiceSpec {
    /// Builds the law.
    pub fn build(&self) -> Result<ServiceDist, CliError> {
        Ok(match *self {
            ServiceSpec::Deterministic { mean } => make_deterministic(mean)?,
            ServiceSpec::Geometric { mean } => make_geometric(mean)?,
            ServiceSpec::GeometricMixture { mean, cv } => make_geometric_mixture(mean, cv)?,
        })
    }
}

/// `[fluid]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    /// Population masses `(lambda_a, lambda_b)`.
    pub populations: [f64; 2],
    /// Service rates `(mu_a, mu_b)`.
    pub rates: [f64; 2],
    /// Closing time `T`.
    pub horizon: f64,
    /// Regime to solve (`"i"` .. `"vi"`); the first applicable one if absent.
    pub case: Option<String>,
    /// Points of the CSV time grid.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    201
}

impl FluidSpec {
    /// Validated parameters.
    pub fn params(&self) -> Result<FluidParams, CliError> {
        Ok(FluidParams::new(self.populations, self.rates, self.horizon)?)
    }
}

/// `[game]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    /// Mean populations `(lambda_a, lambda_b)`.
    pub populations: [f64; 2],
    /// Slot length `tau`.
    pub slot_len: usize,
    /// Index `T` of the last slot.
    pub last_slot: usize,
    /// Service law believed by type `a`.
    pub service_a: ServiceSpec,
    /// Service law believed by type `b`.
    pub service_b: ServiceSpec,
}

impl GameSpec {
    /// Validated game.
    pub fn game(&self) -> Result<SlotGame, CliError> {
        let services = [self.service_a.build()?, self.service_b.build()?];
        Ok(SlotGame::new(self.populations, self.slot_len, self.last_slot, services)?)
    }
}

/// `[signal]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    /// Mean total population `lambda`.
    pub population: f64,
    /// Probability `p` of the slow mode.
    pub slow_prob: f64,
    /// Signal accuracy `q`.
    pub accuracy: f64,
    /// Service law in the slow mode.
    pub service_a: ServiceSpec,
    /// Service law in the fast mode.
    pub service_b: ServiceSpec,
}

impl SignalSpec {
    /// Validated parameters.
    pub fn params(&self) -> Result<SignalParams, CliError> {
        Ok(SignalParams::new(
            self.population,
            self.slow_prob,
            self.accuracy,
            self.service_a.build()?,
            self.service_b.build()?,
        )?)
    }
}

/// `[slots]` block.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotsSpec {
    /// Slot length `tau`.
    pub slot_len: usize,
    /// Index `T` of the last slot.
    pub last_slot: usize,
}

/// `[solver]` block; every field defaults to [`SolverConfig::default`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    /// Mass tolerance of a best response.
    pub mass_tol: f64,
    /// Stopping distance between iterates.
    pub step_tol: f64,
    /// Cap on outer rounds.
    pub max_outer: usize,
    /// `"sup"` or `"l1"`.
    pub norm: NormSpec,
    /// Cap on bisection steps.
    pub max_bisection: usize,
    /// Support threshold.
    pub mass_floor: f64,
}

/// Iterate distance.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    /// Largest slot difference.
    Sup,
    /// Sum of slot differences.
    L1,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            mass_tol: d.mass_tol,
            step_tol: d.step_tol,
            max_outer: d.max_outer,
            norm: NormSpec::Sup,
            max_bisection: d.max_bisection,
            mass_floor: d.mass_floor,
        }
    }
}

impl SolverSpec {
    /// Validated config.
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig {
            mass_tol: self.mass_tol,
            step_tol: self.step_tol,
            max_outer: self.max_outer,
            norm: match self.norm {
                NormSpec::Sup => Norm::Sup,
                NormSpec::L1 => Norm::L1,
            },
            max_bisection: self.max_bisection,
            mass_floor: self.mass_floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `[abm]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbmSpec {
    /// Pool size `N`.
    pub pool: usize,
    /// Simulated days.
    pub days: usize,
    /// Sigmoid `c1`.
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Sigmoid `c2`.
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Blocks of the exploration diagnostic.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_c2() -> f64 {
    DEFAULT_C2
}

fn default_blocks() -> usize {
    10
}

/// `[output]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory receiving the result files.
    pub dir: PathBuf,
}

/// A parsed scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// What to compute.
    pub mode: Mode,
    /// Seed of every random stream.
    #[serde(default)]
    pub seed: u64,
    /// Fluid game.
    pub fluid: Option<FluidSpec>,
    /// Slotted game with explicit populations.
    pub game: Option<GameSpec>,
    /// Random environment and signal.
    pub signal: Option<SignalSpec>,
    /// Slot grid for signal-driven modes.
    pub slots: Option<SlotsSpec>,
    /// Solver tolerances.
    #[serde(default)]
    pub solver: SolverSpec,
    /// Learning simulation.
    pub abm: Option<AbmSpec>,
    /// Output location.
    pub output: Option<OutputSpec>,
}

impl Scenario {
    /// Parses `text`, applying dotted `key=value` overrides first.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let parse_err = |e: toml::de::Error| CliError::Parse(e.to_string());
        let scenario: Scenario = if overrides.is_empty() {
            // Straight from the text so errors carry line and column.
            toml::from_str(text).map_err(parse_err)?
        } else {
            let mut table: toml::Table = text.parse().map_err(parse_err)?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            table.try_into().map_err(parse_err)?
        };
        scenario.check_blocks()?;
        Ok(scenario)
    }

    fn check_blocks(&self) -> Result<(), CliError> {
        let need = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Parse(format!(
                    "mode `{}` needs a [{block}] block",
                    self.mode.name()
                )))
            }
        };
        match self.mode {
            Mode::Fluid => need(self.fluid.is_some(), "fluid"),
            Mode::DiscreteBr => need(self.game.is_some(), "game"),
            Mode::DiscreteFr => {
                need(self.signal.is_some(), "signal")?;
                need(self.slots.is_some(), "slots")
            }
            Mode::Abm | Mode::Compare => {
                need(self.signal.is_some(), "signal")?;
                need(self.slots.is_some(), "slots")?;
                need(self.abm.is_some(), "abm")
            }
            Mode::Signal => need(self.signal.is_some(), "signal"),
        }
    }

    /// Learning-simulation config from the `signal`, `slots` and `abm` blocks.
    pub fn abm_config(&self) -> Result<AbmConfig, CliError> {
        let (Some(signal), Some(slots), Some(abm)) = (&self.signal, &self.slots, &self.abm) else {
            return Err(CliError::Parse("missing [signal], [slots] or [abm] block".into()));
        };
        let services = [signal.service_a.build()?, signal.service_b.build()?];
        let mut cfg = AbmConfig::new(
            abm.pool,
            signal.population,
            abm.days,
            signal.slow_prob,
            signal.accuracy,
            services,
            slots.slot_len,
            slots.last_slot,
            self.seed,
        )?;
        cfg.c1 = abm.c1;
        cfg.c2 = abm.c2;
        cfg.blocks = abm.blocks;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sets `a.b.c = value` in `table`. The value is read as a TOML value and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Parse(format!("bad override key `{key}`")));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for part in path {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Parse(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
