//! Run configuration. Every field has a default; unknown keys are rejected.
//! The schema is documented in `docs/config.md`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use z2lattice_core::dynamics::{Integrator, IntegratorOptions};
use z2lattice_core::fock::FockDim;
use z2lattice_core::lindblad::{DeltaMode, ModelParams};
use z2lattice_core::stability::{MomentumGrid, SpectrumMethod};
use z2lattice_core::steadystate::SolverOptions;
use z2lattice_core::sweep::ScanOptions;
use z2lattice_core::C64;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    pub steady: SteadyConfig,
    pub stability: StabilityConfig,
    pub dynamics: DynamicsConfig,
    pub sweep: SweepConfig,
    pub wigner: WignerConfig,
    pub fit: FitConfig,
    pub output: OutputConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// `Delta = -J`
    BandBottom,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub g: f64,
    pub j: f64,
    pub delta_mode: DeltaRule,
    /// Used when `delta_mode = "fixed"`.
    pub delta: f64,
    pub u: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { g: 3.0, j: 0.25, delta_mode: DeltaRule::BandBottom, delta: 0.0, u: 1.0, kappa: 1.0, eta: 1.0 }
    }
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        let mode = match self.delta_mode {
            DeltaRule::BandBottom => DeltaMode::BandBottom,
            DeltaRule::Fixed => DeltaMode::Fixed(self.delta),
        };
        ModelParams { delta_mode: mode, u: self.u, g: C64::new(self.g, 0.0), j: self.j, kappa: self.kappa, eta: self.eta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mixing: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub newton_fallback: bool,
    pub symmetric_threshold: f64,
    pub stall_ratio: f64,
    pub stall_window: usize,
    /// Seeds as `[re, im]` pairs.
    pub seeds: Vec<[f64; 2]>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            mixing: d.mixing,
            max_iter: d.max_iter,
            tol: d.tol,
            newton_fallback: d.newton_fallback,
            symmetric_threshold: d.symmetric_threshold,
            stall_ratio: d.stall_ratio,
            stall_window: d.stall_window,
            seeds: d.seeds.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            mixing: self.mixing,
            max_iter: self.max_iter,
            tol: self.tol,
            seeds: self.seeds.iter().map(|s| C64::new(s[0], s[1])).collect(),
            newton_fallback: self.newton_fallback,
            symmetric_threshold: self.symmetric_threshold,
            stall_ratio: self.stall_ratio,
            stall_window: self.stall_window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Dopri5,
    Rk4,
    Rosenbrock2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: IntegratorKind,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_max: f64,
    pub record_interval: f64,
    pub fixed_point_tol: f64,
    /// Step of the fixed-step RK4 mode.
    pub dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        Self {
            method: IntegratorKind::Dopri5,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_step: d.max_step,
            t_max: d.t_max,
            record_interval: d.record_interval,
            fixed_point_tol: d.fixed_point_tol,
            dt: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn options(&self, fixed_step: bool) -> IntegratorOptions {
        let method = match (fixed_step, self.method) {
            (true, _) | (false, IntegratorKind::Rk4) => Integrator::Rk4 { dt: self.dt },
            (false, IntegratorKind::Dopri5) => Integrator::Dopri5,
            (false, IntegratorKind::Rosenbrock2) => Integrator::Rosenbrock2,
        };
        IntegratorOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            t_max: self.t_max,
            record_interval: self.record_interval,
            fixed_point_tol: self.fixed_point_tol,
            method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    ShiftInvert,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub n_levels: usize,
    /// Tail weight allowed in initial coherent states.
    pub truncation_tol: f64,
    pub n_k: usize,
    pub spectrum: SpectrumKind,
    pub sigma: f64,
    pub krylov_dim: usize,
    pub solver: SolverConfig,
    pub integrator: IntegratorConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let SpectrumMethod::ShiftInvert { sigma, krylov_dim } = SpectrumMethod::default() else {
            unreachable!("default spectrum method is shift-invert")
        };
        Self {
            n_levels: 40,
            truncation_tol: 1e-8,
            n_k: z2lattice_core::stability::DEFAULT_N_K,
            spectrum: SpectrumKind::ShiftInvert,
            sigma,
            krylov_dim,
            solver: SolverConfig::default(),
            integrator: IntegratorConfig::default(),
        }
    }
}

impl NumericsConfig {
    pub fn method(&self) -> SpectrumMethod {
        match self.spectrum {
            SpectrumKind::Dense => SpectrumMethod::Dense,
            SpectrumKind::ShiftInvert => SpectrumMethod::ShiftInvert { sigma: self.sigma, krylov_dim: self.krylov_dim },
        }
    }

    pub fn grid(&self) -> Result<MomentumGrid, CliError> {
        MomentumGrid::uniform(self.n_k).map_err(|e| CliError::Config(format!("numerics.n_k: {e}")))
    }

    pub fn scan_options(&self) -> Result<ScanOptions, CliError> {
        Ok(ScanOptions { solver: self.solver.options(), grid: self.grid()?, method: self.method(), warm_start: true })
    }
}

/// Either an explicit list or `{ start, stop, num }` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, num: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, num } => z2lattice_core::observables::linspace(*start, *stop, *num),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyConfig {
    pub j: Grid,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self { j: Grid::Range { start: 0.1, stop: 0.6, num: 26 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub j: Grid,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { j: Grid::List(vec![0.5, 1.0, 2.0]) }
    }
}

/// Initial amplitude, a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Amplitude::Real(x) => C64::new(x, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub alpha0: Vec<Amplitude>,
    pub endpoint_threshold: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            alpha0: [2.0, 1.0, 0.5, 0.25, 0.1, 0.05].into_iter().map(Amplitude::Real).collect(),
            endpoint_threshold: z2lattice_core::dynamics::DEFAULT_ENDPOINT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub j: Grid,
    pub g: Grid,
    /// Also bisect the onset `J_c` on every row that changes phase.
    pub boundary: bool,
    pub boundary_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            j: Grid::Range { start: 0.05, stop: 1.0, num: 30 },
            g: Grid::Range { start: 0.5, stop: 8.0, num: 30 },
            boundary: false,
            boundary_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    Symmetric,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    pub branch: BranchChoice,
    /// Half-width of the square window; chosen from the occupation when absent.
    pub extent: Option<f64>,
    pub points: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self { branch: BranchChoice::Symmetric, extent: None, points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub g: Vec<f64>,
    pub j_bracket: [f64; 2],
    pub jc_tol: f64,
    pub window_decades: f64,
    pub n_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            g: vec![3.0, 5.0, 7.0],
            j_bracket: [0.05, 1.0],
            jc_tol: 1e-5,
            window_decades: z2lattice_core::sweep::DEFAULT_WINDOW_DECADES,
            n_points: z2lattice_core::sweep::DEFAULT_FIT_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), format: Format::Csv }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> Result<FockDim, CliError> {
        FockDim::new(self.numerics.n_levels).map_err(|e| CliError::Config(format!("numerics.n_levels: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: z2lattice_core::Error| CliError::Config(e.to_string());
        self.model.params().validate().map_err(cfg)?;
        self.dim()?;
        self.numerics.grid()?;
        self.numerics.solver.options().validate().map_err(cfg)?;
        self.numerics.integrator.options(false).validate().map_err(cfg)?;
        self.numerics.integrator.options(true).validate().map_err(cfg)?;
        if !(self.numerics.truncation_tol > 0.0) {
            return Err(CliError::Config("numerics.truncation_tol must be positive".into()));
        }
        if let SpectrumKind::ShiftInvert = self.numerics.spectrum {
            if self.numerics.krylov_dim < 8 {
                return Err(CliError::Config("numerics.krylov_dim must be >= 8".into()));
            }
        }
        for (name, g) in [("steady.j", &self.steady.j), ("stability.j", &self.stability.j), ("sweep.j", &self.sweep.j), ("sweep.g", &self.sweep.g)] {
            check_grid(name, g)?;
        }
        if self.dynamics.alpha0.is_empty() || !(self.dynamics.endpoint_threshold > 0.0) {
            return Err(CliError::Config("dynamics.alpha0 must be nonempty and endpoint_threshold positive".into()));
        }
        if self.wigner.points < 2 || self.wigner.extent.is_some_and(|e| !(e > 0.0)) {
            return Err(CliError::Config("wigner.points must be >= 2 and extent positive".into()));
        }
        let f = &self.fit;
        if f.g.is_empty() || !(f.j_bracket[0] < f.j_bracket[1]) || !(f.jc_tol > 0.0) || !(f.window_decades > 0.0) || f.n_points < 3 {
            return Err(CliError::Config("fit: need nonempty g, ascending j_bracket, positive tolerances, n_points >= 3".into()));
        }
        if !(self.sweep.boundary_tol > 0.0) {
            return Err(CliError::Config("sweep.boundary_tol must be positive".into()));
        }
        Ok(())
    }
}

fn check_grid(name: &str, g: &Grid) -> Result<(), CliError> {
    let v = g.values();
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("{name} must be a nonempty ascending grid")));
    }
    Ok(())
}
