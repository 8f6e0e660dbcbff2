//! Scalar potentials V on the target and two-form potentials B, the latter
//! entering the equations only through the field strength Omega = dB and the
//! induced bundle homomorphism Z with <Z(xi1, xi2), eta> = Omega(eta, xi1, xi2).

use crate::error::{Error, Result};
use crate::geometry::{AmbientVector, Chart, TargetManifold, TOL_ON_MANIFOLD};
use crate::linalg::{self, Tensor3};

/// Relative tolerance for the tangency checks on Z inputs.
pub const TOL_TANGENT: f64 = 1e-8;

/// Scalar potential on the target, given by a smooth ambient formula.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarPotential {
    Zero,
    /// V(p) = alpha <direction, p>
    LinearHeight { direction: AmbientVector, alpha: f64 },
    /// V(p) = alpha |p - center|^2
    Quadratic { center: AmbientVector, alpha: f64 },
}

impl ScalarPotential {
    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarPotential::Zero)
    }

    /// Whether V <= 0 holds everywhere, the sign class some of the global
    /// estimates need.
    pub fn is_nonpositive(&self) -> bool {
        match self {
            ScalarPotential::Zero => true,
            ScalarPotential::LinearHeight { alpha, .. } => *alpha == 0.0,
            ScalarPotential::Quadratic { alpha, .. } => *alpha <= 0.0,
        }
    }

    pub fn value(&self, p: &AmbientVector) -> f64 {
        match self {
            ScalarPotential::Zero => 0.0,
            ScalarPotential::LinearHeight { direction, alpha } => alpha * direction.dot(p),
            ScalarPotential::Quadratic { center, alpha } => {
                let d = p - center;
                alpha * d.norm_sq()
            }
        }
    }

    fn ambient_grad(&self, p: &AmbientVector) -> AmbientVector {
        match self {
            ScalarPotential::Zero => AmbientVector::zeros(p.dim()),
            ScalarPotential::LinearHeight { direction, alpha } => direction.scaled(*alpha),
            ScalarPotential::Quadratic { center, alpha } => (p - center).scaled(2.0 * alpha),
        }
    }

    /// Intrinsic gradient: tangential projection of the ambient gradient.
    pub fn grad(&self, m: &TargetManifold, p: &AmbientVector) -> Result<AmbientVector> {
        if self.is_zero() {
            return Ok(AmbientVector::zeros(m.ambient_dim()));
        }
        m.project_tangent(p, &self.ambient_grad(p))
    }

    /// Intrinsic Hessian on tangent vectors,
    /// Hess V(w1, w2) = Hess_amb V(w1, w2) + <grad_amb V, II(w1, w2)>.
    pub fn hessian(
        &self,
        m: &TargetManifold,
        p: &AmbientVector,
        w1: &AmbientVector,
        w2: &AmbientVector,
    ) -> Result<f64> {
        let ambient = match self {
            ScalarPotential::Zero | ScalarPotential::LinearHeight { .. } => 0.0,
            ScalarPotential::Quadratic { alpha, .. } => 2.0 * alpha * w1.dot(w2),
        };
        if m.is_flat() {
            return Ok(ambient);
        }
        let ii = m.second_fundamental_form(p, w1, w2)?;
        Ok(ambient + self.ambient_grad(p).dot(&ii))
    }

    /// The potential's ambient dimension requirement, if any.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            ScalarPotential::Zero => None,
            ScalarPotential::LinearHeight { direction, .. } => Some(direction.dim()),
            ScalarPotential::Quadratic { center, .. } => Some(center.dim()),
        }
    }
}

/// Two-form potential, represented by its field strength Omega.
#[derive(Clone, Debug, PartialEq)]
pub enum TwoFormPotential {
    Zero,
    /// Omega = c dx^1 ^ dx^2 ^ dx^3 on flat R^3.
    ConstantVolume3 { c: f64 },
    /// Omega(eta, xi1, xi2) = c det(p, eta, xi1, xi2) on S^3 in R^4. For the
    /// unit sphere this is c times the volume form; the orientation is the
    /// one that sends (e2, e3) at p = e1 to +e4 under Z.
    Sphere3Volume { c: f64 },
}

impl TwoFormPotential {
    pub fn is_zero(&self) -> bool {
        matches!(self, TwoFormPotential::Zero)
    }

    pub fn compatible_with(&self, m: &TargetManifold) -> bool {
        match self {
            TwoFormPotential::Zero => true,
            TwoFormPotential::ConstantVolume3 { .. } => {
                matches!(m, TargetManifold::FlatEuclidean { dim: 3 })
            }
            TwoFormPotential::Sphere3Volume { .. } => {
                matches!(m, TargetManifold::Sphere { ambient_dim: 4, .. })
            }
        }
    }

    fn check_tangent(&self, m: &TargetManifold, p: &AmbientVector, xi: &AmbientVector) -> Result<()> {
        let defect = m.tangency_defect(p, xi);
        let tol = TOL_TANGENT * (1.0 + xi.norm());
        if defect > tol {
            return Err(Error::NotTangent { defect, tol });
        }
        Ok(())
    }

    /// The three-form Omega(p; eta, xi1, xi2).
    pub fn omega(
        &self,
        m: &TargetManifold,
        p: &AmbientVector,
        eta: &AmbientVector,
        xi1: &AmbientVector,
        xi2: &AmbientVector,
    ) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        m.check_on_manifold(p, TOL_ON_MANIFOLD)?;
        for xi in [eta, xi1, xi2] {
            self.check_tangent(m, p, xi)?;
        }
        match self {
            TwoFormPotential::Zero => unreachable!(),
            TwoFormPotential::ConstantVolume3 { c } => {
                Ok(c * linalg::det3(eta.as_slice(), xi1.as_slice(), xi2.as_slice()))
            }
            TwoFormPotential::Sphere3Volume { c } => Ok(c * linalg::det4(
                p.as_slice(),
                eta.as_slice(),
                xi1.as_slice(),
                xi2.as_slice(),
            )),
        }
    }

    /// Z(p; xi1, xi2), the tangent vector with <Z, eta> = Omega(eta, xi1, xi2).
    pub fn z_apply(
        &self,
        m: &TargetManifold,
        p: &AmbientVector,
        xi1: &AmbientVector,
        xi2: &AmbientVector,
    ) -> Result<AmbientVector> {
        if self.is_zero() {
            return Ok(AmbientVector::zeros(m.ambient_dim()));
        }
        m.check_on_manifold(p, TOL_ON_MANIFOLD)?;
        self.check_tangent(m, p, xi1)?;
        self.check_tangent(m, p, xi2)?;
        match self {
            TwoFormPotential::Zero => unreachable!(),
            TwoFormPotential::ConstantVolume3 { c } => {
                let z = linalg::cross3(xi1.as_slice(), xi2.as_slice());
                Ok(AmbientVector::new(z.to_vec()).scaled(*c))
            }
            TwoFormPotential::Sphere3Volume { c } => {
                // component a is Omega(e_a, xi1, xi2); the result is
                // orthogonal to p (rows repeat), hence tangent
                let mut z = AmbientVector::zeros(4);
                for a in 0..4 {
                    let e = AmbientVector::basis(4, a);
                    z[a] = c * linalg::det4(
                        p.as_slice(),
                        e.as_slice(),
                        xi1.as_slice(),
                        xi2.as_slice(),
                    );
                }
                Ok(z)
            }
        }
    }

    /// Chart components Z^i_jk(y) = g^il Omega(dpsi_l, dpsi_j, dpsi_k),
    /// antisymmetric in (j, k), as consumed by the characteristic solver.
    pub fn z_chart_components(&self, chart: &Chart, y: &[f64]) -> Result<Tensor3> {
        let n = chart.dim();
        if self.is_zero() {
            chart.check_domain(y)?;
            return Ok(Tensor3::zeros(n));
        }
        let m = self.natural_target(chart)?;
        let p = chart.embed(y)?;
        let cols = chart.embed_differential(y)?;
        let ginv = chart.inverse_metric(y)?;
        // lowered components first: omega_ljk on the coordinate frame
        let mut low = Tensor3::zeros(n);
        for l in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    if l == j || l == k {
                        continue;
                    }
                    let w = self.omega(&m, &p, &cols[l], &cols[j], &cols[k])?;
                    low.set(l, j, k, w);
                    low.set(l, k, j, -w);
                }
            }
        }
        let mut z = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[i * n + l] * low.at(l, j, k);
                    }
                    z.set(i, j, k, s);
                }
            }
        }
        Ok(z)
    }

    /// The target a chart of this two-form must belong to.
    fn natural_target(&self, chart: &Chart) -> Result<TargetManifold> {
        let m = match self {
            TwoFormPotential::Zero => TargetManifold::FlatEuclidean { dim: chart.dim() },
            TwoFormPotential::ConstantVolume3 { .. } => TargetManifold::flat3(),
            TwoFormPotential::Sphere3Volume { .. } => {
                // recover the radius from the chart's image
                let p = chart.embed(&vec![0.0; chart.dim()])?;
                TargetManifold::sphere3(p.norm())
            }
        };
        if m.ambient_dim() != chart.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: m.ambient_dim(),
                got: chart.ambient_dim(),
            });
        }
        Ok(m)
    }

    /// Whether an explicit primitive B with dB = Omega is wired up, so the
    /// action diagnostic can integrate the pulled-back B directly.
    pub fn has_action_primitive(&self) -> bool {
        !matches!(self, TwoFormPotential::Sphere3Volume { .. })
    }

    /// Pulled-back primitive density B(ut, ux), using B = c x^1 dx^2 ^ dx^3
    /// for the constant-volume form. None when no primitive is available.
    pub fn action_density(
        &self,
        p: &AmbientVector,
        ut: &AmbientVector,
        ux: &AmbientVector,
    ) -> Option<f64> {
        match self {
            TwoFormPotential::Zero => Some(0.0),
            TwoFormPotential::ConstantVolume3 { c } => {
                Some(c * p[0] * (ut[1] * ux[2] - ut[2] * ux[1]))
            }
            TwoFormPotential::Sphere3Volume { .. } => None,
        }
    }
}
