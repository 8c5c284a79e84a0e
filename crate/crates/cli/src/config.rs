use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use spinlink::dissipation::LindbladParams;
use spinlink::network::{PhysicalParams, TopologySpec};
use spinlink::transfer::FidelityMode;

pub const DEFAULT_F: f64 = 5.0;
pub const DEFAULT_TAU_MAX: f64 = 60.0;
pub const DEFAULT_TAU_STEPS: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    Transfer,
    Sweep,
    Validate,
    Dissipative,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Spectrum => "spectrum",
            Mode::Transfer => "transfer",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
            Mode::Dissipative => "dissipative",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
enum RawTopology {
    Cluster {
        #[serde(default = "one")]
        x: f64,
    },
    Engineered {
        #[serde(default = "one")]
        x: f64,
        f: Option<f64>,
    },
    Custom {
        #[serde(rename = "J")]
        j: Option<Vec<Vec<f64>>>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Mode,
    topology: Option<RawTopology>,
    physical: Option<PhysicalParams>,
    #[serde(rename = "N")]
    n: Option<OneOrMany<usize>>,
    f: Option<OneOrMany<f64>>,
    tau_max: Option<f64>,
    tau_steps: Option<usize>,
    receiver: Option<usize>,
    #[serde(default)]
    fidelity_mode: FidelityMode,
    #[serde(default)]
    lamb_compensation: bool,
    /// In units of the reference coupling, or in 1/s when
    /// `reference_coupling` (rad/s) is given.
    rates: Option<LindbladParams>,
    reference_coupling: Option<f64>,
    omega_over_delta: Option<Vec<f64>>,
    step: Option<f64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    #[serde(rename = "J_file")]
    j_file: Option<PathBuf>,
}

/// Network description of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    /// Effective XY network; one entry per `(N, f)` run.
    Topology(TopologySpec),
    /// Qubits and cavity from physical parameters.
    Physical(PhysicalParams),
}

/// One network to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub n: usize,
    /// Weakening factor for engineered networks.
    pub f: Option<f64>,
    pub system: System,
}

impl Run {
    pub fn label(&self) -> String {
        match self.f {
            Some(f) => format!("N{}_f{}", self.n, f),
            None => format!("N{}", self.n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub runs: Vec<Run>,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub receiver: Option<usize>,
    pub fidelity_mode: FidelityMode,
    pub lamb_compensation: bool,
    pub rates: LindbladParams,
    pub reference_coupling: Option<f64>,
    pub omega_over_delta: Vec<f64>,
    pub step: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ScenarioConfig {
    /// `tau_steps` equal intervals over `[0, tau_max]`.
    pub fn tau_grid(&self) -> Vec<f64> {
        (0..=self.tau_steps).map(|k| self.tau_max * k as f64 / self.tau_steps as f64).collect()
    }

    /// Rates in units of the reference coupling.
    pub fn dimensionless_rates(&self) -> LindbladParams {
        match self.reference_coupling {
            Some(unit) => self.rates.scaled(unit),
            None => self.rates,
        }
    }
}

/// Parses and validates a JSON scenario. Relative `J_file` paths resolve
/// against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("config error at `{path}`: {}", e.into_inner())
    })?;
    validate(raw, base_dir)
}

pub fn load_config(path: &Path) -> Result<(ScenarioConfig, String)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok((parse_config(&text, base)?, text))
}

fn validate(raw: RawConfig, base_dir: &Path) -> Result<ScenarioConfig> {
    let tau_max = raw.tau_max.unwrap_or(DEFAULT_TAU_MAX);
    if !(tau_max > 0.0) || !tau_max.is_finite() {
        bail!("config error at `tau_max`: must be positive, got {tau_max}");
    }
    let tau_steps = raw.tau_steps.unwrap_or(DEFAULT_TAU_STEPS);
    if tau_steps < 2 {
        bail!("config error at `tau_steps`: must be at least 2, got {tau_steps}");
    }
    if let Some(step) = raw.step {
        if !(step > 0.0) || !step.is_finite() {
            bail!("config error at `step`: must be positive, got {step}");
        }
    }
    if let Some(x) = raw.reference_coupling {
        if !(x > 0.0) || !x.is_finite() {
            bail!("config error at `reference_coupling`: must be positive, got {x}");
        }
    }
    let rates = raw.rates.unwrap_or_default();
    rates.validate().map_err(|e| anyhow!("config error at `rates`: {e}"))?;
    let omega_over_delta = raw.omega_over_delta.unwrap_or_else(|| vec![0.1, 0.05]);
    if omega_over_delta.is_empty() || omega_over_delta.iter().any(|r| !(*r > 0.0)) {
        bail!("config error at `omega_over_delta`: ratios must be positive");
    }
    let j_file = match raw.j_file {
        Some(p) => {
            let full = if p.is_absolute() { p } else { base_dir.join(p) };
            if !full.exists() {
                bail!("config error at `J_file`: {} does not exist", full.display());
            }
            Some(full)
        }
        None => None,
    };
    let ns = raw.n.map(OneOrMany::into_vec);

    let runs = match (raw.topology, raw.physical) {
        (Some(_), Some(_)) => bail!("config error: give exactly one of `topology` and `physical`"),
        (None, None) => bail!("config error: one of `topology` or `physical` is required"),
        (None, Some(params)) => {
            params.validate().map_err(|e| anyhow!("config error at `physical`: {e}"))?;
            if raw.f.is_some() {
                bail!("config error at `f`: only engineered topologies take f");
            }
            if let Some(ns) = &ns {
                if ns.len() != 1 || ns[0] != params.n() {
                    bail!("config error at `N`: physical parameters describe {} qubits", params.n());
                }
            }
            vec![Run { n: params.n(), f: None, system: System::Physical(params) }]
        }
        (Some(topology), None) => topology_runs(topology, ns, raw.f.map(OneOrMany::into_vec), j_file)?,
    };
    if let Some(r) = raw.receiver {
        if let Some(run) = runs.iter().find(|run| r < 2 || r > run.n) {
            bail!("config error at `receiver`: {r} is not a receiving site for N = {}", run.n);
        }
    }

    Ok(ScenarioConfig {
        mode: raw.mode,
        runs,
        tau_max,
        tau_steps,
        receiver: raw.receiver,
        fidelity_mode: raw.fidelity_mode,
        lamb_compensation: raw.lamb_compensation,
        rates,
        reference_coupling: raw.reference_coupling,
        omega_over_delta,
        step: raw.step,
        output: raw.output,
        format: raw.format,
    })
}

fn check_n(n: usize) -> Result<usize> {
    if n < 2 {
        bail!("config error at `N`: need at least 2 qubits, got {n}");
    }
    Ok(n)
}

fn check_f(f: f64) -> Result<f64> {
    if !(f > 1.0) || !f.is_finite() {
        bail!("config error at `f`: f must exceed 1, got {f}");
    }
    Ok(f)
}

fn topology_runs(topology: RawTopology, ns: Option<Vec<usize>>, fs: Option<Vec<f64>>, j_file: Option<PathBuf>) -> Result<Vec<Run>> {
    match topology {
        RawTopology::Cluster { x } => {
            if fs.is_some() {
                bail!("config error at `f`: only engineered topologies take f");
            }
            let ns = ns.ok_or_else(|| anyhow!("config error at `N`: missing"))?;
            ns.into_iter()
                .map(|n| Ok(Run { n: check_n(n)?, f: None, system: System::Topology(TopologySpec::Cluster { x }) }))
                .collect()
        }
        RawTopology::Engineered { x, f } => {
            let fs = match (f, fs) {
                (Some(_), Some(_)) => bail!("config error at `f`: given both in `topology` and at top level"),
                (Some(f), None) => vec![f],
                (None, Some(fs)) => fs,
                (None, None) => vec![DEFAULT_F],
            };
            if fs.is_empty() {
                bail!("config error at `f`: empty list");
            }
            let ns = ns.ok_or_else(|| anyhow!("config error at `N`: missing"))?;
            if ns.is_empty() {
                bail!("config error at `N`: empty list");
            }
            let mut runs = Vec::new();
            for &f in &fs {
                let f = check_f(f)?;
                for &n in &ns {
                    if check_n(n)? < 3 {
                        bail!("config error at `N`: engineered networks need at least 3 qubits");
                    }
                    runs.push(Run { n, f: Some(f), system: System::Topology(TopologySpec::Engineered { x, f }) });
                }
            }
            Ok(runs)
        }
        RawTopology::Custom { j } => {
            if fs.is_some() {
                bail!("config error at `f`: only engineered topologies take f");
            }
            let j = match (j, j_file) {
                (Some(_), Some(_)) => bail!("config error: give the custom matrix either inline or via `J_file`"),
                (Some(j), None) => j,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("config error at `J_file`: {} is not a JSON matrix", path.display()))?
                }
                (None, None) => bail!("config error at `topology.J`: custom topology needs `J` or `J_file`"),
            };
            let n = j.len();
            if let Some(ns) = &ns {
                if ns.len() != 1 || ns[0] != n {
                    bail!("config error at `N`: coupling matrix is {n} x {n}");
                }
            }
            let spec = TopologySpec::Custom { j };
            spinlink::network::topology_to_couplings(&spec, check_n(n)?).map_err(|e| anyhow!("config error at `topology.J`: {e}"))?;
            Ok(vec![Run { n, f: None, system: System::Topology(spec) }])
        }
    }
}
