//! Run configuration: a TOML schema covering both solvers, validation that
//! reports every problem at once with field paths, and builders that turn a
//! validated config into the solver-facing types.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrinsic::{Boundary, GridSpec};
use crate::geometry::{AmbientVector, Chart, TargetManifold};
use crate::initial::InitialData;
use crate::lightcone::{LightconeRun, K_SAFETY, MAX_ITER, TOL_FIX};
use crate::potentials::{ScalarPotential, TwoFormPotential};

pub const CFL_MAX: f64 = 0.5;

/// What a run does; the subcommand fixes it and the config may pin it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Evolve,
    Lightcone,
    Check,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::Lightcone => "lightcone",
            Mode::Check => "check",
            Mode::Sweep => "sweep",
        }
    }
}

/// Supported targets. Spheres take an optional radius (default 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Flat3,
    Sphere3,
    Sphere2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_cfl() -> f64 {
    CFL_MAX
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarPotentialConfig {
    #[default]
    Zero,
    LinearHeight { direction: Vec<f64>, alpha: f64 },
    Quadratic { center: Vec<f64>, alpha: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TwoFormConfig {
    #[default]
    Zero,
    ConstantVolume3 { c: f64 },
    Sphere3Volume { c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightconeConfig {
    pub l: f64,
    pub n_char: usize,
    pub t_final: f64,
    #[serde(default = "default_tol_fix")]
    pub tol_fix: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default)]
    pub k_override: Option<f64>,
}

fn default_tol_fix() -> f64 {
    TOL_FIX
}

fn default_max_iter() -> usize {
    MAX_ITER
}

fn default_safety() -> f64 {
    K_SAFETY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Rescaled Cauchy problems u_lambda(t, x) = u(lambda t, lambda x),
    /// each solved on its own grid and compared with the transform of the
    /// base run.
    Scaling { lambdas: Vec<f64> },
    /// The same problem at several resolutions, with drift and residual
    /// columns for convergence-order studies.
    Refinement { nxs: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub apriori: bool,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_snapshot_every() -> usize {
    10
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { apriori: false, snapshot_every: default_snapshot_every() }
    }
}

/// The complete run description. `mode` may be omitted in the file and is
/// then fixed by the subcommand; when present the two must agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub target: TargetKind,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub scalar_potential: ScalarPotentialConfig,
    #[serde(default)]
    pub two_form: TwoFormConfig,
    #[serde(default)]
    pub lightcone: Option<LightconeConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Every validation problem for the given mode, with field paths; the
    /// list is empty exactly when the config is runnable.
    pub fn validation_errors(&self, mode: Mode) -> Vec<String> {
        let mut errs = Vec::new();
        if let Some(m) = self.mode {
            if m != mode {
                errs.push(format!(
                    "mode: config pins \"{}\" but the {} subcommand was invoked",
                    m.as_str(),
                    mode.as_str()
                ));
            }
        }
        match self.target {
            TargetKind::Flat3 => {
                if self.radius.is_some() {
                    errs.push("radius: only sphere targets take a radius".into());
                }
            }
            TargetKind::Sphere3 | TargetKind::Sphere2 => {
                if let Some(r) = self.radius {
                    if !r.is_finite() || r <= 0.0 {
                        errs.push(format!("radius: must be positive, got {r}"));
                    }
                }
            }
        }

        let ambient = self.ambient_dim();
        let chart_dim = self.chart_dim();

        match &self.scalar_potential {
            ScalarPotentialConfig::Zero => {}
            ScalarPotentialConfig::LinearHeight { direction, alpha } => {
                if direction.len() != ambient {
                    errs.push(format!(
                        "scalar_potential.direction: expected {ambient} components, got {}",
                        direction.len()
                    ));
                }
                if !alpha.is_finite() {
                    errs.push("scalar_potential.alpha: must be finite".into());
                }
            }
            ScalarPotentialConfig::Quadratic { center, alpha } => {
                if center.len() != ambient {
                    errs.push(format!(
                        "scalar_potential.center: expected {ambient} components, got {}",
                        center.len()
                    ));
                }
                if !alpha.is_finite() {
                    errs.push("scalar_potential.alpha: must be finite".into());
                }
            }
        }

        match &self.two_form {
            TwoFormConfig::Zero => {}
            TwoFormConfig::ConstantVolume3 { c } => {
                if self.target != TargetKind::Flat3 {
                    errs.push("two_form: constant_volume3 requires target = \"flat3\"".into());
                }
                if !c.is_finite() {
                    errs.push("two_form.c: must be finite".into());
                }
            }
            TwoFormConfig::Sphere3Volume { c } => {
                if self.target != TargetKind::Sphere3 {
                    errs.push("two_form: sphere3_volume requires target = \"sphere3\"".into());
                }
                if !c.is_finite() {
                    errs.push("two_form.c: must be finite".into());
                }
            }
        }

        let need_initial = matches!(mode, Mode::Evolve | Mode::Lightcone | Mode::Sweep);
        match &self.initial {
            Some(data) => errs.extend(data.validation_errors(chart_dim)),
            None => {
                if need_initial {
                    errs.push(format!(
                        "initial: required for the {} subcommand",
                        mode.as_str()
                    ));
                }
            }
        }

        let need_grid = matches!(mode, Mode::Evolve | Mode::Sweep);
        match &self.grid {
            Some(g) => {
                if !(g.x_max > g.x_min) {
                    errs.push(format!(
                        "grid.x_max: must exceed x_min, got [{}, {}]",
                        g.x_min, g.x_max
                    ));
                }
                if g.nx < 8 {
                    errs.push(format!("grid.nx: must be at least 8, got {}", g.nx));
                }
                if !(g.cfl > 0.0) {
                    errs.push(format!("grid.cfl: must be positive, got {}", g.cfl));
                } else if g.cfl > CFL_MAX {
                    errs.push(format!(
                        "grid.cfl: CFL exceeds {CFL_MAX} default bound, got {}",
                        g.cfl
                    ));
                }
                if !(g.t_final > 0.0) {
                    errs.push(format!("grid.t_final: must be positive, got {}", g.t_final));
                }
            }
            None => {
                if need_grid {
                    errs.push(format!("grid: required for the {} subcommand", mode.as_str()));
                }
            }
        }

        match &self.lightcone {
            Some(lc) => {
                if !(lc.l > 0.0) {
                    errs.push(format!("lightcone.l: must be positive, got {}", lc.l));
                }
                if lc.n_char < 4 {
                    errs.push(format!(
                        "lightcone.n_char: must be at least 4 for the derivative stencils, got {}",
                        lc.n_char
                    ));
                }
                if !(lc.t_final > 0.0) {
                    errs.push(format!(
                        "lightcone.t_final: must be positive, got {}",
                        lc.t_final
                    ));
                }
                if !(lc.tol_fix > 0.0) {
                    errs.push(format!(
                        "lightcone.tol_fix: must be positive, got {}",
                        lc.tol_fix
                    ));
                }
                if lc.max_iter == 0 {
                    errs.push("lightcone.max_iter: must be at least 1".into());
                }
                if !(lc.safety > 0.0 && lc.safety <= 1.0) {
                    errs.push(format!(
                        "lightcone.safety: must lie in (0, 1], got {}",
                        lc.safety
                    ));
                }
                if let Some(k) = lc.k_override {
                    if !(k > 0.0) {
                        errs.push(format!(
                            "lightcone.k_override: must be positive, got {k}"
                        ));
                    }
                }
            }
            None => {
                if mode == Mode::Lightcone {
                    errs.push("lightcone: required for the lightcone subcommand".into());
                }
            }
        }
        if mode == Mode::Lightcone
            && !matches!(self.scalar_potential, ScalarPotentialConfig::Zero)
        {
            errs.push(
                "scalar_potential: lightcone mode requires kind = \"zero\" \
                 (the characteristic reduction drops the scalar potential)"
                    .into(),
            );
        }

        match &self.sweep {
            Some(SweepConfig::Scaling { lambdas }) => {
                if lambdas.is_empty() {
                    errs.push("sweep.lambdas: must be nonempty".into());
                }
                for (i, lam) in lambdas.iter().enumerate() {
                    if !(lam.is_finite() && *lam > 0.0) {
                        errs.push(format!("sweep.lambdas[{i}]: must be positive, got {lam}"));
                    }
                }
            }
            Some(SweepConfig::Refinement { nxs }) => {
                if nxs.is_empty() {
                    errs.push("sweep.nxs: must be nonempty".into());
                }
                for (i, nx) in nxs.iter().enumerate() {
                    if *nx < 8 {
                        errs.push(format!("sweep.nxs[{i}]: must be at least 8, got {nx}"));
                    }
                }
            }
            None => {
                if mode == Mode::Sweep {
                    errs.push("sweep: required for the sweep subcommand".into());
                }
            }
        }

        if self.diagnostics.snapshot_every == 0 {
            errs.push("diagnostics.snapshot_every: must be at least 1".into());
        }

        errs
    }

    /// Validate for `mode` and return the config with the mode pinned.
    pub fn validated(mut self, mode: Mode) -> Result<RunConfig> {
        let errs = self.validation_errors(mode);
        if errs.is_empty() {
            self.mode = Some(mode);
            Ok(self)
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.target {
            TargetKind::Flat3 => 3,
            TargetKind::Sphere3 => 4,
            TargetKind::Sphere2 => 3,
        }
    }

    pub fn chart_dim(&self) -> usize {
        match self.target {
            TargetKind::Flat3 => 3,
            TargetKind::Sphere3 => 3,
            TargetKind::Sphere2 => 2,
        }
    }

    pub fn target_manifold(&self) -> TargetManifold {
        let r = self.radius.unwrap_or(1.0);
        match self.target {
            TargetKind::Flat3 => TargetManifold::flat3(),
            TargetKind::Sphere3 => TargetManifold::sphere3(r),
            TargetKind::Sphere2 => TargetManifold::sphere2(r),
        }
    }

    pub fn chart(&self) -> Chart {
        self.target_manifold().default_chart()
    }

    pub fn scalar_potential(&self) -> ScalarPotential {
        match &self.scalar_potential {
            ScalarPotentialConfig::Zero => ScalarPotential::Zero,
            ScalarPotentialConfig::LinearHeight { direction, alpha } => {
                ScalarPotential::LinearHeight {
                    direction: AmbientVector::new(direction.clone()),
                    alpha: *alpha,
                }
            }
            ScalarPotentialConfig::Quadratic { center, alpha } => ScalarPotential::Quadratic {
                center: AmbientVector::new(center.clone()),
                alpha: *alpha,
            },
        }
    }

    pub fn two_form(&self) -> TwoFormPotential {
        match &self.two_form {
            TwoFormConfig::Zero => TwoFormPotential::Zero,
            TwoFormConfig::ConstantVolume3 { c } => TwoFormPotential::ConstantVolume3 { c: *c },
            TwoFormConfig::Sphere3Volume { c } => TwoFormPotential::Sphere3Volume { c: *c },
        }
    }

    /// The resolved extrinsic grid; callers must have validated first.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Validation(vec!["grid: missing".into()]))?;
        Ok(GridSpec::with_cfl(g.x_min, g.x_max, g.nx, g.cfl, g.t_final, g.boundary))
    }

    pub fn lightcone_run(&self) -> Result<LightconeRun> {
        let lc = self
            .lightcone
            .as_ref()
            .ok_or_else(|| Error::Validation(vec!["lightcone: missing".into()]))?;
        Ok(LightconeRun {
            l: lc.l,
            n_char: lc.n_char,
            t_final: lc.t_final,
            tol_fix: lc.tol_fix,
            max_iter: lc.max_iter,
            safety: lc.safety,
            k_override: lc.k_override,
        })
    }

    pub fn initial_data(&self) -> Result<&InitialData> {
        self.initial
            .as_ref()
            .ok_or_else(|| Error::Validation(vec!["initial: missing".into()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_FLAT: &str = r#"
target = "flat3"

[grid]
x_min = 0.0
x_max = 6.283185307179586
nx = 64
t_final = 1.0

[initial]
preset = "sine_mode"
amplitude = 0.1
wavenumber = 1.0
"#;

    #[test]
    fn minimal_flat_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL_FLAT).unwrap();
        let cfg = cfg.validated(Mode::Evolve).unwrap();
        assert_eq!(cfg.mode, Some(Mode::Evolve));
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.grid.as_ref().unwrap().cfl, CFL_MAX);
        assert_eq!(cfg.grid.as_ref().unwrap().boundary, Boundary::Periodic);
        assert_eq!(cfg.scalar_potential, ScalarPotentialConfig::Zero);
        assert_eq!(cfg.two_form, TwoFormConfig::Zero);
        assert!(!cfg.diagnostics.apriori);
        assert_eq!(cfg.diagnostics.snapshot_every, 10);
        let grid = cfg.grid_spec().unwrap();
        assert_eq!(grid.nx, 64);
        assert!(grid.dt <= CFL_MAX * grid.dx() + 1e-15);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::from_toml_str(MINIMAL_FLAT)
            .unwrap()
            .validated(Mode::Evolve)
            .unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn lightcone_with_nonzero_potential_is_rejected() {
        let text = r#"
target = "sphere3"

[initial]
preset = "gaussian_bump"
amplitude = 0.2
width = 0.5

[scalar_potential]
kind = "linear_height"
direction = [0.0, 0.0, 0.0, 1.0]
alpha = 0.2

[lightcone]
l = 1.0
n_char = 32
t_final = 0.5
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let errs = cfg.validation_errors(Mode::Lightcone);
        assert!(
            errs.iter().any(|e| e.starts_with("scalar_potential:")),
            "{errs:?}"
        );
        // the same config is fine for evolve once a grid is added
        let errs = cfg.validation_errors(Mode::Evolve);
        assert!(errs.iter().all(|e| e.starts_with("grid:")), "{errs:?}");
    }

    #[test]
    fn cfl_range_and_field_paths() {
        let text = r#"
target = "flat3"

[grid]
x_min = 0.0
x_max = 1.0
nx = 64
cfl = 1.5
t_final = 1.0

[initial]
preset = "sine_mode"
amplitude = 0.1
wavenumber = 1.0
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let errs = cfg.validation_errors(Mode::Evolve);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert!(errs[0].contains("grid.cfl") && errs[0].contains("exceeds 0.5"), "{errs:?}");
    }

    #[test]
    fn all_errors_are_collected_not_just_the_first() {
        let text = r#"
target = "sphere2"
radius = -1.0

[grid]
x_min = 1.0
x_max = 0.0
nx = 4
cfl = 0.0
t_final = -2.0

[initial]
preset = "constant"
y = [0.1, 0.2, 0.3]

[two_form]
kind = "sphere3_volume"
c = 1.0
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let errs = cfg.validation_errors(Mode::Evolve);
        let expect = [
            "radius:",
            "two_form:",
            "initial.y:",
            "grid.x_max:",
            "grid.nx:",
            "grid.cfl:",
            "grid.t_final:",
        ];
        for prefix in expect {
            assert!(
                errs.iter().any(|e| e.starts_with(prefix)),
                "missing {prefix} in {errs:?}"
            );
        }
        assert_eq!(errs.len(), expect.len(), "{errs:?}");
    }

    #[test]
    fn unknown_fields_and_bad_toml_are_parse_errors() {
        let r = RunConfig::from_toml_str("target = \"flat3\"\nturbo = true\n");
        assert!(matches!(r, Err(Error::Parse(_))), "{r:?}");
        let r = RunConfig::from_toml_str("target = flat3");
        assert!(matches!(r, Err(Error::Parse(_))), "{r:?}");
    }

    #[test]
    fn mode_conflict_is_reported() {
        let text = "mode = \"lightcone\"\ntarget = \"flat3\"\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let errs = cfg.validation_errors(Mode::Evolve);
        assert!(errs.iter().any(|e| e.starts_with("mode:")), "{errs:?}");
    }

    #[test]
    fn builders_produce_the_configured_objects() {
        let text = r#"
target = "sphere3"
radius = 2.0
seed = 7

[initial]
preset = "constant"
y = [0.1, 0.0, 0.0]

[two_form]
kind = "sphere3_volume"
c = 0.5

[lightcone]
l = 1.0
n_char = 16
t_final = 0.5
k_override = 0.25
"#;
        let cfg = RunConfig::from_toml_str(text)
            .unwrap()
            .validated(Mode::Lightcone)
            .unwrap();
        assert_eq!(cfg.target_manifold(), TargetManifold::sphere3(2.0));
        assert_eq!(cfg.chart_dim(), 3);
        assert_eq!(cfg.two_form(), TwoFormPotential::Sphere3Volume { c: 0.5 });
        assert!(cfg.scalar_potential().is_zero());
        let run = cfg.lightcone_run().unwrap();
        assert_eq!(run.n_char, 16);
        assert_eq!(run.k_override, Some(0.25));
        assert_eq!(run.tol_fix, TOL_FIX);
        assert_eq!(run.max_iter, MAX_ITER);
    }
}
