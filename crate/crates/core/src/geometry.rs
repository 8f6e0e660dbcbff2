//! Targets for the wave map: flat Euclidean space and round spheres embedded
//! in R^q, together with coordinate charts carrying a Riemannian metric.
//! The extrinsic solver works with `TargetManifold` (projections and the
//! second fundamental form); the characteristic solver works in a `Chart`
//! (metric, Christoffel symbols) and crosses back through the embedding.

use crate::error::{Error, Result};
use crate::linalg::{self, Tensor3};

/// Points are accepted as on-manifold when their distance to the target is
/// below this. Solver states are reprojected every step, so the actual
/// defect is at round-off level; 1e-8 leaves room for data read back from
/// text files.
pub const TOL_ON_MANIFOLD: f64 = 1e-8;

/// Step for central finite differences of the chart metric when no analytic
/// derivative is wired up. Balances truncation O(h^2) against round-off.
pub const H_CHART: f64 = 1e-5;

/// A point or vector of the ambient space R^q, q >= 3.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientVector(Vec<f64>);

impl AmbientVector {
    /// The targets live in R^q with q >= 3; smaller vectors are a bug.
    pub fn new(components: Vec<f64>) -> Self {
        assert!(components.len() >= 3, "ambient dimension must be >= 3");
        AmbientVector(components)
    }

    pub fn zeros(q: usize) -> Self {
        Self::new(vec![0.0; q])
    }

    pub fn basis(q: usize, i: usize) -> Self {
        let mut v = vec![0.0; q];
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn dot(&self, other: &AmbientVector) -> f64 {
        linalg::dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.0)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn scaled(&self, factor: f64) -> AmbientVector {
        AmbientVector(self.0.iter().map(|x| factor * x).collect())
    }

    /// self += factor * other
    pub fn add_scaled(&mut self, other: &AmbientVector, factor: f64) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn distance(&self, other: &AmbientVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for AmbientVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for AmbientVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl std::ops::Add for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: &AmbientVector) -> AmbientVector {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl std::ops::Sub for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: &AmbientVector) -> AmbientVector {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

/// The embedded Riemannian target N of the wave map.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetManifold {
    FlatEuclidean { dim: usize },
    /// Round sphere of the given radius, embedded in R^{ambient_dim}.
    Sphere { radius: f64, ambient_dim: usize },
}

impl TargetManifold {
    pub fn flat3() -> Self {
        TargetManifold::FlatEuclidean { dim: 3 }
    }

    /// S^3 in R^4.
    pub fn sphere3(radius: f64) -> Self {
        TargetManifold::Sphere { radius, ambient_dim: 4 }
    }

    /// S^2 in R^3. Any three-form on it vanishes, so only scalar potentials
    /// make sense here.
    pub fn sphere2(radius: f64) -> Self {
        TargetManifold::Sphere { radius, ambient_dim: 3 }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            TargetManifold::FlatEuclidean { dim } => *dim,
            TargetManifold::Sphere { ambient_dim, .. } => *ambient_dim,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            TargetManifold::FlatEuclidean { dim } => *dim,
            TargetManifold::Sphere { ambient_dim, .. } => ambient_dim - 1,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, TargetManifold::FlatEuclidean { .. })
    }

    fn check_dim(&self, v: &AmbientVector) -> Result<()> {
        if v.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: v.dim() });
        }
        Ok(())
    }

    /// Distance from an ambient point to the target.
    pub fn distance_to(&self, x: &AmbientVector) -> f64 {
        match self {
            TargetManifold::FlatEuclidean { .. } => 0.0,
            TargetManifold::Sphere { radius, .. } => (x.norm() - radius).abs(),
        }
    }

    pub fn check_on_manifold(&self, p: &AmbientVector, tol: f64) -> Result<()> {
        self.check_dim(p)?;
        let dist = self.distance_to(p);
        if dist > tol {
            return Err(Error::PointOffManifold { dist, tol });
        }
        Ok(())
    }

    /// Nearest-point projection onto the target. The only degenerate input
    /// is the sphere's center.
    pub fn project_point(&self, x: &AmbientVector) -> Result<AmbientVector> {
        self.check_dim(x)?;
        match self {
            TargetManifold::FlatEuclidean { .. } => Ok(x.clone()),
            TargetManifold::Sphere { radius, .. } => {
                let n = x.norm();
                if n == 0.0 {
                    return Err(Error::DegeneratePoint);
                }
                Ok(x.scaled(radius / n))
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at p.
    pub fn project_tangent(&self, p: &AmbientVector, w: &AmbientVector) -> Result<AmbientVector> {
        self.check_on_manifold(p, TOL_ON_MANIFOLD)?;
        self.check_dim(w)?;
        match self {
            TargetManifold::FlatEuclidean { .. } => Ok(w.clone()),
            TargetManifold::Sphere { radius, .. } => {
                let mut out = w.clone();
                out.add_scaled(p, -p.dot(w) / (radius * radius));
                Ok(out)
            }
        }
    }

    /// How far w is from being tangent at p, as |w - P_tan(w)|.
    pub fn tangency_defect(&self, p: &AmbientVector, w: &AmbientVector) -> f64 {
        match self {
            TargetManifold::FlatEuclidean { .. } => 0.0,
            TargetManifold::Sphere { radius, .. } => p.dot(w).abs() / radius,
        }
    }

    /// Second fundamental form II_p(w1, w2), normal-valued for tangent
    /// arguments. For the sphere II(w1, w2) = -<w1, w2> p / r^2; flat space
    /// has none.
    pub fn second_fundamental_form(
        &self,
        p: &AmbientVector,
        w1: &AmbientVector,
        w2: &AmbientVector,
    ) -> Result<AmbientVector> {
        self.check_on_manifold(p, TOL_ON_MANIFOLD)?;
        self.check_dim(w1)?;
        self.check_dim(w2)?;
        match self {
            TargetManifold::FlatEuclidean { dim } => Ok(AmbientVector::zeros(*dim)),
            TargetManifold::Sphere { radius, .. } => {
                Ok(p.scaled(-w1.dot(w2) / (radius * radius)))
            }
        }
    }

    /// The chart the characteristic solver uses for this target.
    pub fn default_chart(&self) -> Chart {
        match self {
            TargetManifold::FlatEuclidean { dim } => Chart::euclidean(*dim),
            TargetManifold::Sphere { radius, ambient_dim } => {
                Chart::stereographic(*radius, ambient_dim - 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum ChartKind {
    Euclidean { dim: usize },
    /// Stereographic projection of S^dim (radius sphere_radius) from the
    /// south pole; y = 0 maps to the north pole. The metric is conformal,
    /// g_ij = 4 r^2 delta_ij / (1 + |y|^2)^2.
    Stereographic { sphere_radius: f64, dim: usize },
}

/// A coordinate chart with metric, defined on the ball |y| <= domain_radius.
/// The unit ball is the normalization the characteristic solver's size
/// estimate is built around, so it is the default for both chart kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    kind: ChartKind,
    domain_radius: f64,
    h_chart: f64,
    analytic_derivatives: bool,
}

impl Chart {
    pub fn euclidean(dim: usize) -> Self {
        Chart {
            kind: ChartKind::Euclidean { dim },
            domain_radius: 1.0,
            h_chart: H_CHART,
            analytic_derivatives: true,
        }
    }

    pub fn stereographic(sphere_radius: f64, dim: usize) -> Self {
        Chart {
            kind: ChartKind::Stereographic { sphere_radius, dim },
            domain_radius: 1.0,
            h_chart: H_CHART,
            analytic_derivatives: true,
        }
    }

    pub fn with_domain_radius(mut self, radius: f64) -> Self {
        self.domain_radius = radius;
        self
    }

    /// Switch the metric derivatives to central finite differences. Used to
    /// exercise the generic path against the analytic one.
    pub fn with_fd_derivatives(mut self) -> Self {
        self.analytic_derivatives = false;
        self
    }

    pub fn with_h_chart(mut self, h: f64) -> Self {
        self.h_chart = h;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ChartKind::Euclidean { dim } => *dim,
            ChartKind::Stereographic { dim, .. } => *dim,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            ChartKind::Euclidean { dim } => *dim,
            ChartKind::Stereographic { dim, .. } => dim + 1,
        }
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        // tiny relative slack so round-off at the boundary does not reject
        linalg::norm(y) <= self.domain_radius * (1.0 + 1e-12)
    }

    pub fn check_domain(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        if !self.contains(y) {
            return Err(Error::ChartDomainExceeded { y: y.to_vec() });
        }
        Ok(())
    }

    /// Metric formula without the domain check; finite differencing may
    /// evaluate slightly outside the ball.
    fn metric_raw(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        match &self.kind {
            ChartKind::Euclidean { .. } => {
                for i in 0..n {
                    g[i * n + i] = 1.0;
                }
            }
            ChartKind::Stereographic { sphere_radius, .. } => {
                let d = 1.0 + linalg::norm_sq(y);
                let f = 4.0 * sphere_radius * sphere_radius / (d * d);
                for i in 0..n {
                    g[i * n + i] = f;
                }
            }
        }
        g
    }

    /// Metric g_ij(y), row-major n x n.
    pub fn metric(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        Ok(self.metric_raw(y))
    }

    /// Partial derivatives of the metric: out[k][i*n+j] = d g_ij / d y^k.
    /// Analytic for the shipped kinds unless finite differences were
    /// requested.
    pub fn metric_derivatives(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_domain(y)?;
        let n = self.dim();
        if self.analytic_derivatives {
            let mut dg = vec![vec![0.0; n * n]; n];
            if let ChartKind::Stereographic { sphere_radius, .. } = &self.kind {
                let d = 1.0 + linalg::norm_sq(y);
                let df = -16.0 * sphere_radius * sphere_radius / (d * d * d);
                for k in 0..n {
                    for i in 0..n {
                        dg[k][i * n + i] = df * y[k];
                    }
                }
            }
            return Ok(dg);
        }
        let h = self.h_chart;
        let mut dg = Vec::with_capacity(n);
        let mut yp = y.to_vec();
        for k in 0..n {
            yp[k] = y[k] + h;
            let gp = self.metric_raw(&yp);
            yp[k] = y[k] - h;
            let gm = self.metric_raw(&yp);
            yp[k] = y[k];
            dg.push(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        Ok(dg)
    }

    pub fn inverse_metric(&self, y: &[f64]) -> Result<Vec<f64>> {
        let g = self.metric(y)?;
        linalg::invert_small(self.dim(), &g)
            .ok_or_else(|| Error::SingularMetric { y: y.to_vec() })
    }

    /// Christoffel symbols of the metric connection,
    /// G^i_jk = 1/2 g^il (d_j g_kl + d_k g_jl - d_l g_jk).
    pub fn christoffel(&self, y: &[f64]) -> Result<Tensor3> {
        let n = self.dim();
        let ginv = self.inverse_metric(y)?;
        let dg = self.metric_derivatives(y)?;
        let mut gamma = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[i * n + l]
                            * (dg[j][k * n + l] + dg[k][j * n + l] - dg[l][j * n + k]);
                    }
                    gamma.set(i, j, k, 0.5 * s);
                }
            }
        }
        Ok(gamma)
    }

    pub fn min_metric_eigenvalue(&self, y: &[f64]) -> Result<f64> {
        let g = self.metric(y)?;
        Ok(linalg::sym_eigen_min(self.dim(), &g))
    }

    /// The ellipticity constant a with min eig g >= a^2 over the whole ball
    /// domain, in closed form for the shipped kinds.
    pub fn ellipticity_constant(&self) -> f64 {
        match &self.kind {
            ChartKind::Euclidean { .. } => 1.0,
            ChartKind::Stereographic { sphere_radius, .. } => {
                let rho2 = self.domain_radius * self.domain_radius;
                2.0 * sphere_radius / (1.0 + rho2)
            }
        }
    }

    /// Embedding of the chart into the ambient space of its target.
    pub fn embed(&self, y: &[f64]) -> Result<AmbientVector> {
        self.check_domain(y)?;
        match &self.kind {
            ChartKind::Euclidean { .. } => Ok(AmbientVector::new(y.to_vec())),
            ChartKind::Stereographic { sphere_radius, dim } => {
                let d = 1.0 + linalg::norm_sq(y);
                let mut p = Vec::with_capacity(dim + 1);
                for yi in y {
                    p.push(2.0 * sphere_radius * yi / d);
                }
                p.push(sphere_radius * (2.0 - d) / d); // r (1 - |y|^2) / (1 + |y|^2)
                Ok(AmbientVector::new(p))
            }
        }
    }

    /// Columns d psi / d y^i of the embedding differential.
    pub fn embed_differential(&self, y: &[f64]) -> Result<Vec<AmbientVector>> {
        self.check_domain(y)?;
        let n = self.dim();
        match &self.kind {
            ChartKind::Euclidean { dim } => {
                Ok((0..n).map(|i| AmbientVector::basis(*dim, i)).collect())
            }
            ChartKind::Stereographic { sphere_radius, dim } => {
                let r = *sphere_radius;
                let d = 1.0 + linalg::norm_sq(y);
                let mut cols = Vec::with_capacity(n);
                for i in 0..n {
                    let mut col = vec![0.0; dim + 1];
                    for (a, ya) in y.iter().enumerate() {
                        col[a] = -4.0 * r * ya * y[i] / (d * d);
                    }
                    col[i] += 2.0 * r / d;
                    col[*dim] = -4.0 * r * y[i] / (d * d);
                    cols.push(AmbientVector::new(col));
                }
                Ok(cols)
            }
        }
    }

    /// Push a chart vector forward through the embedding differential.
    pub fn push_forward(&self, y: &[f64], v: &[f64]) -> Result<AmbientVector> {
        let cols = self.embed_differential(y)?;
        let mut out = AmbientVector::zeros(self.ambient_dim());
        for (col, vi) in cols.iter().zip(v) {
            out.add_scaled(col, *vi);
        }
        Ok(out)
    }
}
