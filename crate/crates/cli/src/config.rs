//! Declarative experiment configuration. JSON with strict schema: unknown
//! keys are errors, and parse failures surface serde_json's line/column.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use trotter24::formulas::{SplitHamiltonian, TimeProfile};
use trotter24::models;
use trotter24::pauli::PauliSum;
use trotter24::statevector::{Polarization, StateVector};

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub l: usize,
    #[serde(default)]
    pub couplings: Couplings,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub obs_norm: Option<f64>,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::safety_c")]
    pub safety_c: f64,
    #[serde(default = "defaults::dt0")]
    pub dt0: f64,
    #[serde(default)]
    pub dt_min: Option<f64>,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub max_rejections_per_step: Option<usize>,
    #[serde(default)]
    pub clamp_final: bool,
    #[serde(default = "defaults::t_ini")]
    pub t_ini: f64,
    #[serde(default = "defaults::t_fin")]
    pub t_fin: f64,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub dense_oracle: bool,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub scaling: Option<ScalingSection>,
    #[serde(default)]
    pub bounds: Option<BoundsSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub extrapolation: Option<ExtrapolationSection>,
}

mod defaults {
    pub fn epsilon() -> f64 {
        1e-3
    }
    pub fn safety_c() -> f64 {
        0.95
    }
    pub fn dt0() -> f64 {
        0.1
    }
    pub fn t_ini() -> f64 {
        0.0
    }
    pub fn t_fin() -> f64 {
        2.0
    }
    pub fn seed() -> u64 {
        7
    }
    pub fn dt_grid() -> Vec<f64> {
        vec![0.1, 0.05, 0.025]
    }
    pub fn scaling_at_t() -> f64 {
        1.0
    }
    pub fn epsilons() -> Vec<f64> {
        vec![1e-2, 1e-3]
    }
    pub fn c_values() -> Vec<f64> {
        vec![0.80, 0.85, 0.90, 0.95, 0.99]
    }
    pub fn m_values() -> Vec<usize> {
        vec![1, 2, 3, 5]
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    IsingX,
    IsingRamp,
    Custom(CustomModel),
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct CustomModel {
    pub part_a: Vec<TermSpec>,
    pub part_b: Vec<TermSpec>,
    #[serde(default)]
    pub a_mod: ModSpec,
    #[serde(default)]
    pub b_mod: ModSpec,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: f64,
    pub string: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModSpec {
    #[default]
    Constant,
    Ramp,
    Scaled {
        value: f64,
    },
}

impl ModSpec {
    fn profile(&self) -> TimeProfile {
        match self {
            ModSpec::Constant => TimeProfile::Constant(1.0),
            ModSpec::Ramp => TimeProfile::Ramp,
            ModSpec::Scaled { value } => TimeProfile::Constant(*value),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct Couplings {
    #[serde(default = "couplings_jz")]
    pub j_z: f64,
    #[serde(default = "couplings_hz")]
    pub h_z: f64,
    #[serde(default = "couplings_hx")]
    pub h_x: f64,
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings {
            j_z: couplings_jz(),
            h_z: couplings_hz(),
            h_x: couplings_hx(),
        }
    }
}

fn couplings_jz() -> f64 {
    models::DEFAULT_JZ
}
fn couplings_hz() -> f64 {
    models::DEFAULT_HZ
}
fn couplings_hx() -> f64 {
    models::DEFAULT_HX
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Fidelity,
    Observable,
}

#[derive(Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    #[default]
    MX,
    MY,
    Custom(Vec<TermSpec>),
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    PlusX,
    MinusX,
    PlusY,
    #[default]
    MinusY,
    PlusZ,
    MinusZ,
}

impl InitialState {
    pub fn polarization(self) -> Polarization {
        match self {
            InitialState::PlusX => Polarization::PlusX,
            InitialState::MinusX => Polarization::MinusX,
            InitialState::PlusY => Polarization::PlusY,
            InitialState::MinusY => Polarization::MinusY,
            InitialState::PlusZ => Polarization::PlusZ,
            InitialState::MinusZ => Polarization::MinusZ,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ScalingSection {
    #[serde(default = "defaults::dt_grid")]
    pub dt_grid: Vec<f64>,
    /// The evaluation state is the polarized start evolved exactly to this
    /// time.
    #[serde(default = "defaults::scaling_at_t")]
    pub at_t: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            dt_grid: defaults::dt_grid(),
            at_t: defaults::scaling_at_t(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct BoundsSection {
    pub l_values: Vec<usize>,
    #[serde(default = "defaults::epsilons")]
    pub epsilons: Vec<f64>,
    /// Norm engine crossover; above this the seeded iterative method is used.
    #[serde(default)]
    pub dense_limit: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct SweepSection {
    #[serde(default = "defaults::c_values")]
    pub c_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            c_values: defaults::c_values(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ExtrapolationSection {
    #[serde(default = "defaults::m_values")]
    pub m_values: Vec<usize>,
}

impl Default for ExtrapolationSection {
    fn default() -> Self {
        ExtrapolationSection {
            m_values: defaults::m_values(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.l == 0 || self.l > 28 {
            bail!(
                "site count l = {} out of the supported range 1..=28",
                self.l
            );
        }
        if self.epsilon <= 0.0 {
            bail!("epsilon must be positive");
        }
        if !(self.safety_c > 0.0 && self.safety_c <= 1.0) {
            bail!("safety_c must lie in (0, 1], got {}", self.safety_c);
        }
        if self.t_fin < self.t_ini {
            bail!("t_fin {} precedes t_ini {}", self.t_fin, self.t_ini);
        }
        if self.dt0 <= 0.0 {
            bail!("dt0 must be positive");
        }
        Ok(())
    }

    pub fn build_hamiltonian(&self) -> anyhow::Result<SplitHamiltonian> {
        let c = &self.couplings;
        let h = match &self.model {
            ModelSpec::IsingX => models::ising_x(self.l, c.j_z, c.h_z, c.h_x)?,
            ModelSpec::IsingRamp => models::ising_ramp(self.l, c.j_z, c.h_z, c.h_x)?,
            ModelSpec::Custom(custom) => {
                let a = parse_terms(self.l, &custom.part_a)?;
                let b = parse_terms(self.l, &custom.part_b)?;
                SplitHamiltonian::with_modulations(
                    a,
                    b,
                    custom.a_mod.profile(),
                    custom.b_mod.profile(),
                )?
            }
        };
        Ok(h)
    }

    pub fn build_observable(&self) -> anyhow::Result<PauliSum> {
        Ok(match &self.observable {
            ObservableSpec::MX => models::magnetization_x(self.l),
            ObservableSpec::MY => models::magnetization_y(self.l),
            ObservableSpec::Custom(terms) => parse_terms(self.l, terms)?,
        })
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::polarized(self.l, self.initial_state.polarization())
    }
}

fn parse_terms(l: usize, terms: &[TermSpec]) -> anyhow::Result<PauliSum> {
    let pairs: Vec<(f64, String)> = terms
        .iter()
        .map(|t| (t.coefficient, t.string.clone()))
        .collect();
    Ok(PauliSum::from_text_terms(l, &pairs)?)
}
