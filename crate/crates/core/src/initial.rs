//! Initial-data presets. Every preset is defined in chart coordinates, so
//! the characteristic solver consumes it directly and the extrinsic solver
//! receives the embedded image of the very same continuum data, which keeps
//! cross-solver comparisons honest.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{AmbientVector, Chart};

/// Closed-form initial data (phi0, phi1) as functions of x, in chart
/// coordinates. phi1 is the time derivative at t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// phi0 = y, phi1 = velocity (zeros when omitted).
    Constant {
        y: Vec<f64>,
        #[serde(default)]
        velocity: Vec<f64>,
    },
    /// phi0 = amplitude exp(-((x-center)/width)^2) e_component, with an
    /// optional Gaussian velocity profile of the same width.
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        component: usize,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default)]
        velocity_component: usize,
    },
    /// phi0 = amplitude sin(wavenumber x) e_component, plus an optional
    /// sine velocity profile.
    SineMode {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        component: usize,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default)]
        velocity_component: usize,
    },
    /// x-independent point and velocity: the solution is the geodesic flow
    /// through embed(y) with initial speed pushed forward from velocity.
    Geodesic { y: Vec<f64>, velocity: Vec<f64> },
}

impl InitialData {
    /// Field-level problems, with paths relative to the `initial` block.
    pub fn validation_errors(&self, n: usize) -> Vec<String> {
        let mut errs = Vec::new();
        let check_len = |errs: &mut Vec<String>, name: &str, v: &[f64], allow_empty: bool| {
            if v.len() != n && !(allow_empty && v.is_empty()) {
                errs.push(format!("initial.{name}: expected {n} components, got {}", v.len()));
            }
        };
        let check_component = |errs: &mut Vec<String>, name: &str, c: usize| {
            if c >= n {
                errs.push(format!("initial.{name}: component {c} out of range for dimension {n}"));
            }
        };
        match self {
            InitialData::Constant { y, velocity } => {
                check_len(&mut errs, "y", y, false);
                check_len(&mut errs, "velocity", velocity, true);
            }
            InitialData::GaussianBump {
                amplitude,
                width,
                component,
                velocity_amplitude,
                velocity_component,
                ..
            } => {
                if !width.is_finite() || *width <= 0.0 {
                    errs.push(format!("initial.width: must be positive, got {width}"));
                }
                if !amplitude.is_finite() {
                    errs.push("initial.amplitude: must be finite".into());
                }
                check_component(&mut errs, "component", *component);
                if *velocity_amplitude != 0.0 {
                    check_component(&mut errs, "velocity_component", *velocity_component);
                }
            }
            InitialData::SineMode {
                amplitude,
                wavenumber,
                component,
                velocity_amplitude,
                velocity_component,
            } => {
                if !amplitude.is_finite() {
                    errs.push("initial.amplitude: must be finite".into());
                }
                if !wavenumber.is_finite() {
                    errs.push("initial.wavenumber: must be finite".into());
                }
                check_component(&mut errs, "component", *component);
                if *velocity_amplitude != 0.0 {
                    check_component(&mut errs, "velocity_component", *velocity_component);
                }
            }
            InitialData::Geodesic { y, velocity } => {
                check_len(&mut errs, "y", y, false);
                check_len(&mut errs, "velocity", velocity, false);
            }
        }
        errs
    }

    /// True when phi0 and phi1 carry no x dependence, so spatial
    /// derivatives vanish identically rather than only to stencil noise.
    pub fn is_x_independent(&self) -> bool {
        matches!(self, InitialData::Constant { .. } | InitialData::Geodesic { .. })
    }

    /// phi0(x) in chart coordinates of dimension n.
    pub fn phi0(&self, x: f64, n: usize) -> Vec<f64> {
        match self {
            InitialData::Constant { y, .. } | InitialData::Geodesic { y, .. } => y.clone(),
            InitialData::GaussianBump { amplitude, width, center, component, .. } => {
                let mut out = vec![0.0; n];
                let r = (x - center) / width;
                out[*component] = amplitude * (-r * r).exp();
                out
            }
            InitialData::SineMode { amplitude, wavenumber, component, .. } => {
                let mut out = vec![0.0; n];
                out[*component] = amplitude * (wavenumber * x).sin();
                out
            }
        }
    }

    /// phi1(x) = time derivative of the chart coordinates at t = 0.
    pub fn phi1(&self, x: f64, n: usize) -> Vec<f64> {
        match self {
            InitialData::Constant { velocity, .. } => {
                if velocity.is_empty() {
                    vec![0.0; n]
                } else {
                    velocity.clone()
                }
            }
            InitialData::Geodesic { velocity, .. } => velocity.clone(),
            InitialData::GaussianBump {
                width,
                center,
                velocity_amplitude,
                velocity_component,
                ..
            } => {
                let mut out = vec![0.0; n];
                if *velocity_amplitude != 0.0 {
                    let r = (x - center) / width;
                    out[*velocity_component] = velocity_amplitude * (-r * r).exp();
                }
                out
            }
            InitialData::SineMode {
                wavenumber,
                velocity_amplitude,
                velocity_component,
                ..
            } => {
                let mut out = vec![0.0; n];
                if *velocity_amplitude != 0.0 {
                    out[*velocity_component] = velocity_amplitude * (wavenumber * x).sin();
                }
                out
            }
        }
    }

    /// The preset for the rescaled data phi_lambda(0, x) = phi0(lambda x),
    /// d/dt phi_lambda(0, x) = lambda phi1(lambda x).
    pub fn scaled(&self, lambda: f64) -> InitialData {
        match self.clone() {
            InitialData::Constant { y, velocity } => InitialData::Constant {
                y,
                velocity: velocity.iter().map(|v| lambda * v).collect(),
            },
            InitialData::GaussianBump {
                amplitude,
                width,
                center,
                component,
                velocity_amplitude,
                velocity_component,
            } => InitialData::GaussianBump {
                amplitude,
                width: width / lambda,
                center: center / lambda,
                component,
                velocity_amplitude: lambda * velocity_amplitude,
                velocity_component,
            },
            InitialData::SineMode {
                amplitude,
                wavenumber,
                component,
                velocity_amplitude,
                velocity_component,
            } => InitialData::SineMode {
                amplitude,
                wavenumber: lambda * wavenumber,
                component,
                velocity_amplitude: lambda * velocity_amplitude,
                velocity_component,
            },
            InitialData::Geodesic { y, velocity } => InitialData::Geodesic {
                y,
                velocity: velocity.iter().map(|v| lambda * v).collect(),
            },
        }
    }

    /// Sample (phi0, phi1) at the given abscissas.
    pub fn chart_samples(&self, xs: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let phi0 = xs.iter().map(|&x| self.phi0(x, n)).collect();
        let phi1 = xs.iter().map(|&x| self.phi1(x, n)).collect();
        (phi0, phi1)
    }

    /// Embedded Cauchy data (u0, u1) for the extrinsic solver: u0 = psi(phi0),
    /// u1 = dpsi(phi1). Fails when phi0 leaves the chart domain.
    pub fn ambient_fields(
        &self,
        chart: &Chart,
        xs: &[f64],
    ) -> Result<(Vec<AmbientVector>, Vec<AmbientVector>)> {
        let n = chart.dim();
        let mut u0 = Vec::with_capacity(xs.len());
        let mut u1 = Vec::with_capacity(xs.len());
        for &x in xs {
            let y = self.phi0(x, n);
            let w = self.phi1(x, n);
            u0.push(chart.embed(&y)?);
            u1.push(chart.push_forward(&y, &w)?);
        }
        Ok((u0, u1))
    }
}
