//! Frame bounds and minimum-norm interpolation in truncated Bargmann–Fock
//! and Bergman spaces.
//!
//! The truncated space of degree `N` is spanned by the orthonormal
//! monomials `e_0, …, e_N`. Norms are `∫ |F|² e^{−2φ} dm` for Fock and
//! `∫ |F|² dm` on the disk for Bergman, so that `‖zⁿ‖² = π n!` and
//! `π/(n + 1)` respectively.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::quadrature::{self, QuadratureError, QuadratureSpec};
use crate::geometry::{GeometryError, Point, SurfaceModel};
use crate::pointsets::{PointSet, Window};

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("orthonormality defect {defect:e} at degree {degree} exceeds {tolerance:e}")]
    NotOrthonormal { degree: usize, defect: f64, tolerance: f64 },
    #[error("point set lives on the {0}, space on the other surface")]
    WrongSurface(&'static str),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("interpolation residual {residual:e} is not finite")]
    Unstable { residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Highest degree checked for orthonormality at construction.
pub const ORTHONORMALITY_PROBE_DEGREE: usize = 8;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Fock,
    Bergman,
}

impl SpaceKind {
    pub fn surface(self) -> SurfaceModel {
        match self {
            SpaceKind::Fock => SurfaceModel::EuclideanPlane,
            SpaceKind::Bergman => SurfaceModel::UnitDisk,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Fock => "fock",
            SpaceKind::Bergman => "bergman",
        }
    }

    pub fn phi(self, z: Point) -> f64 {
        match self {
            SpaceKind::Fock => 0.5 * z.norm_sqr(),
            SpaceKind::Bergman => -0.5 * (1.0 - z.norm_sqr()).ln(),
        }
    }

    /// Window extent that captures the degree-`n` mass: radius `√(2n) + 2`
    /// for Fock and `ρ`-radius `1 − 1/n` for Bergman.
    pub fn default_window_extent(self, degree: usize) -> f64 {
        match self {
            SpaceKind::Fock => (2.0 * degree as f64).sqrt() + 2.0,
            SpaceKind::Bergman => 1.0 - 1.0 / (degree.max(2) as f64),
        }
    }

    /// Radius of the ball about `0` on which the degree-`n` truncated kernel
    /// keeps at least half of the full kernel's diagonal; Euclidean for
    /// Fock, `ρ`-radius for Bergman. Interpolation is posed on this ball.
    pub fn bulk_radius(self, degree: usize) -> f64 {
        let space = TruncatedSpace { kind: self, degree, log_factorial: log_factorials(degree) };
        let captured = |t: f64| {
            let z = Point::new(t, 0.0);
            let full = match self {
                SpaceKind::Fock => 1.0 / PI,
                SpaceKind::Bergman => 1.0 / (PI * (1.0 - t * t)),
            };
            space.hat_basis(z).iter().map(|v| v.norm_sqr()).sum::<f64>() / full
        };
        let (mut lo, mut hi) = match self {
            SpaceKind::Fock => (0.0, (degree as f64 + 1.0).sqrt() + 4.0),
            SpaceKind::Bergman => (0.0, 1.0 - 1e-12),
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if captured(mid) >= 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// The full reproducing kernel `K(z, w)`.
pub fn kernel_eval(kind: SpaceKind, z: Point, w: Point) -> Result<Complex64, VerificationError> {
    let surface = kind.surface();
    surface.check(z)?;
    surface.check(w)?;
    let zw = z * w.conj();
    Ok(match kind {
        SpaceKind::Fock => zw.exp() / PI,
        SpaceKind::Bergman => {
            let d = Complex64::new(1.0, 0.0) - zw;
            Complex64::new(1.0, 0.0) / (PI * d * d)
        }
    })
}

/// `K(z, w) / √(K(z, z) K(w, w))`, computed without overflow.
fn normalized_kernel(kind: SpaceKind, z: Point, w: Point) -> Complex64 {
    match kind {
        SpaceKind::Fock => (z * w.conj() - 0.5 * z.norm_sqr() - 0.5 * w.norm_sqr()).exp(),
        SpaceKind::Bergman => {
            let d = Complex64::new(1.0, 0.0) - z * w.conj();
            Complex64::new((1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()), 0.0) / (d * d)
        }
    }
}

fn log_factorials(degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; degree + 1];
    for n in 1..=degree {
        out[n] = out[n - 1] + (n as f64).ln();
    }
    out
}

/// Span of `e_0, …, e_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSpace {
    kind: SpaceKind,
    degree: usize,
    /// `log n!` for `n ≤ N`.
    log_factorial: Vec<f64>,
}

impl TruncatedSpace {
    /// Builds the space and checks orthonormality of the first basis
    /// functions by quadrature.
    pub fn new(kind: SpaceKind, degree: usize) -> Result<Self, VerificationError> {
        let space = Self::unchecked(kind, degree)?;
        let probe = degree.min(ORTHONORMALITY_PROBE_DEGREE);
        let defect = space.orthonormality_defect(probe, &QuadratureSpec::new(1e-11, 1e-13, 400)?)?;
        if defect > ORTHONORMALITY_TOLERANCE {
            return Err(VerificationError::NotOrthonormal {
                degree: probe,
                defect,
                tolerance: ORTHONORMALITY_TOLERANCE,
            });
        }
        Ok(space)
    }

    fn unchecked(kind: SpaceKind, degree: usize) -> Result<Self, VerificationError> {
        if degree > 1000 {
            return Err(VerificationError::OutOfRange { name: "degree", value: degree as f64 });
        }
        Ok(Self { kind, degree, log_factorial: log_factorials(degree) })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn surface(&self) -> SurfaceModel {
        self.kind.surface()
    }

    /// `e_n(z) e^{−φ(z)}` for `n = 0..=N`.
    pub fn hat_basis(&self, z: Point) -> Vec<Complex64> {
        let (r, theta) = (z.norm(), z.arg());
        (0..=self.degree)
            .map(|n| {
                let nf = n as f64;
                let log_mod = match self.kind {
                    SpaceKind::Fock => {
                        if r == 0.0 {
                            if n == 0 { -0.5 * PI.ln() } else { f64::NEG_INFINITY }
                        } else {
                            nf * r.ln() - 0.5 * r * r - 0.5 * PI.ln() - 0.5 * self.log_factorial[n]
                        }
                    }
                    SpaceKind::Bergman => {
                        let base = 0.5 * ((nf + 1.0) / PI).ln() + 0.5 * (1.0 - r * r).ln();
                        if r == 0.0 {
                            if n == 0 { base } else { f64::NEG_INFINITY }
                        } else {
                            nf * r.ln() + base
                        }
                    }
                };
                Complex64::from_polar(log_mod.exp(), nf * theta)
            })
            .collect()
    }

    /// `e_n(z)` for `n = 0..=N`.
    pub fn basis(&self, z: Point) -> Vec<Complex64> {
        let scale = self.kind.phi(z).exp();
        self.hat_basis(z).into_iter().map(|v| v * scale).collect()
    }

    /// Density of the space measure against `dm`, including `e^{−2φ}`.
    fn norm_density(&self, z: Point) -> f64 {
        match self.kind {
            SpaceKind::Fock => (-z.norm_sqr()).exp(),
            SpaceKind::Bergman => 1.0,
        }
    }

    /// Radius of the disk on which `‖·‖²` is integrated numerically.
    fn quadrature_radius(&self) -> f64 {
        match self.kind {
            // e^{−t²} t^{2N+1} is below 1e-30 of its peak beyond this.
            SpaceKind::Fock => (2.0 * self.degree as f64).sqrt() + 9.0,
            SpaceKind::Bergman => 1.0,
        }
    }

    /// `∫ F Ḡ e^{−2φ} dμ` by quadrature.
    pub fn inner_product_quadrature<F, G>(&self, f: F, g: G, q: &QuadratureSpec) -> Result<Complex64, VerificationError>
    where
        F: Fn(Point) -> Complex64,
        G: Fn(Point) -> Complex64,
    {
        let integrand = |t: f64, th: f64| {
            let z = Point::from_polar(t, th);
            f(z) * g(z).conj() * self.norm_density(z)
        };
        let radius = self.quadrature_radius();
        let re = quadrature::polar_integrate(|t, th| integrand(t, th).re, radius, &[], &[], q)?;
        let im = quadrature::polar_integrate(|t, th| integrand(t, th).im, radius, &[], &[], q)?;
        Ok(Complex64::new(re.value, im.value))
    }

    /// `max |⟨e_m, e_n⟩ − δ_{mn}|` over `m, n ≤ probe`.
    pub fn orthonormality_defect(&self, probe: usize, q: &QuadratureSpec) -> Result<f64, VerificationError> {
        let probe = probe.min(self.degree);
        let mut worst = 0.0f64;
        for m in 0..=probe {
            for n in m..=probe {
                let ip = self.inner_product_quadrature(
                    |z| self.basis(z)[m],
                    |z| self.basis(z)[n],
                    q,
                )?;
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        Ok(worst)
    }

    /// Matrix with rows `ê(γ)` for `γ ∈ Γ`, each scaled by `√w_γ`.
    fn hat_matrix(&self, points: &[Point], weights: Option<&[f64]>) -> DMatrix<Complex64> {
        let rows: Vec<Vec<Complex64>> = points
            .par_iter()
            .enumerate()
            .map(|(j, &p)| {
                let s = weights.map_or(1.0, |w| w[j].sqrt());
                self.hat_basis(p).into_iter().map(|v| v * s).collect()
            })
            .collect();
        DMatrix::from_fn(points.len(), self.dim(), |j, n| rows[j][n])
    }

    fn check_set(&self, set: &PointSet) -> Result<(), VerificationError> {
        if set.surface() != self.surface() {
            return Err(VerificationError::WrongSurface(set.surface().name()));
        }
        Ok(())
    }
}

/// Cap on `σ` when sizing the disks `D_σ(γ)` behind the sampling weights.
pub const MAX_WEIGHT_RADIUS: f64 = 0.5;

/// A weighted sampling problem on a truncated space.
#[derive(Clone, Debug)]
pub struct SamplingExperiment {
    space: TruncatedSpace,
    set: PointSet,
    weights: Vec<f64>,
}

/// Extreme eigenvalues of the sampling matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        if self.upper > 0.0 {
            self.lower / self.upper
        } else {
            0.0
        }
    }
}

impl SamplingExperiment {
    pub fn new(space: TruncatedSpace, set: PointSet, weights: Vec<f64>) -> Result<Self, VerificationError> {
        space.check_set(&set)?;
        if weights.len() != set.len() {
            return Err(VerificationError::LengthMismatch { expected: set.len(), found: weights.len() });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(VerificationError::OutOfRange { name: "weight", value: w });
        }
        Ok(Self { space, set, weights })
    }

    /// Weights `A_g(D_σ(γ))` with `g = e^{−2ψ}` and `σ` the separation
    /// constant of `Γ` (capped at [`MAX_WEIGHT_RADIUS`]). On the plane the
    /// area is the same for every point and is folded to `1`.
    pub fn with_metric_weights(space: TruncatedSpace, set: PointSet, q: &QuadratureSpec) -> Result<Self, VerificationError> {
        space.check_set(&set)?;
        let weights = match space.kind() {
            SpaceKind::Fock => vec![1.0; set.len()],
            SpaceKind::Bergman => {
                let sigma = set.separation_constant().min(MAX_WEIGHT_RADIUS);
                set.points()
                    .par_iter()
                    .map(|&g| bergman_cell_area(g, sigma, q))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        Self::new(space, set, weights)
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `M_{mn} = Σ_γ w_γ conj(ê_m(γ)) ê_n(γ)`.
    pub fn sampling_matrix(&self) -> DMatrix<Complex64> {
        let b = self.space.hat_matrix(self.set.points(), Some(&self.weights));
        b.adjoint() * b
    }

    /// Extreme eigenvalues of `M`, computed as squared singular values of
    /// the weighted evaluation matrix so that small eigenvalues keep their
    /// relative accuracy. Rank deficiency gives `lower = 0`.
    pub fn frame_bounds(&self) -> FrameBounds {
        if self.set.is_empty() {
            return FrameBounds { lower: 0.0, upper: 0.0 };
        }
        let b = self.space.hat_matrix(self.set.points(), Some(&self.weights));
        let sv = b.singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let lower = if self.set.len() < self.space.dim() { 0.0 } else { smin * smin };
        FrameBounds { lower, upper: smax * smax }
    }
}

/// `∫_{D_σ(γ)} dm / (4(1 − |ζ|²))`, integrated in coordinates centered at
/// `γ` where `dm(ζ) = (1 − |ζ|²)² / (1 − |u|²)² dm(u)`.
fn bergman_cell_area(gamma: Point, sigma: f64, q: &QuadratureSpec) -> Result<f64, VerificationError> {
    let disk = SurfaceModel::UnitDisk;
    let est = quadrature::polar_integrate(
        |t, th| {
            let zeta = disk.from_center(gamma, Point::from_polar(t, th));
            let s = 1.0 - t * t;
            (1.0 - zeta.norm_sqr()) / (4.0 * s * s)
        },
        sigma,
        &[],
        &[],
        q,
    )?;
    Ok(est.value)
}

/// Smallest eigenvalue of the normalized full-kernel Gram matrix of `Γ`.
pub fn riesz_lower_bound(kind: SpaceKind, set: &PointSet) -> Result<f64, VerificationError> {
    if set.surface() != kind.surface() {
        return Err(VerificationError::WrongSurface(set.surface().name()));
    }
    let pts = set.points();
    if pts.is_empty() {
        return Err(VerificationError::OutOfRange { name: "point count", value: 0.0 });
    }
    let n = pts.len();
    let g = DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            Complex64::new(1.0, 0.0)
        } else {
            normalized_kernel(kind, pts[j], pts[k])
        }
    });
    let eig = SymmetricEigen::new(g);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min.max(0.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InterpolationOptions {
    /// Adds `10⁻¹² λ_max` to the diagonal of the scaled Gram matrix.
    pub ridge: bool,
}

/// Relative ridge strength when enabled.
pub const RIDGE: f64 = 1e-12;
/// Condition number beyond which the Gram system is solved in the
/// least-squares sense.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Debug, PartialEq)]
pub struct Interpolation {
    /// `c_j` in `F = Σ_j c_j K_N(·, γ_j)`.
    pub coefficients: Vec<Complex64>,
    /// `F` in the orthonormal basis.
    pub basis_coefficients: Vec<Complex64>,
    /// `max_γ |F(γ) − s_γ|`.
    pub residual: f64,
    pub norm: f64,
    /// Condition number of the scaled Gram matrix.
    pub condition: f64,
    pub least_squares: bool,
}

impl Interpolation {
    pub fn evaluate(&self, space: &TruncatedSpace, z: Point) -> Complex64 {
        space
            .basis(z)
            .into_iter()
            .zip(&self.basis_coefficients)
            .map(|(e, a)| e * a)
            .sum()
    }
}

/// Minimum-norm `F` in the truncated space with `F(γ) = s_γ`.
///
/// Solves `G̃ c̃ = D s` for the scaled Gram `G̃ = D G D` with
/// `D = diag(e^{−φ(γ)})`, then `c = D c̃`.
pub fn min_norm_interpolate(
    space: &TruncatedSpace,
    set: &PointSet,
    values: &[Complex64],
    options: InterpolationOptions,
) -> Result<Interpolation, VerificationError> {
    space.check_set(set)?;
    let pts = set.points();
    if values.len() != pts.len() {
        return Err(VerificationError::LengthMismatch { expected: pts.len(), found: values.len() });
    }
    let n = pts.len();
    if n == 0 {
        return Ok(Interpolation {
            coefficients: Vec::new(),
            basis_coefficients: vec![Complex64::new(0.0, 0.0); space.dim()],
            residual: 0.0,
            norm: 0.0,
            condition: 1.0,
            least_squares: false,
        });
    }
    let b = space.hat_matrix(pts, None);
    let gram = &b * b.adjoint();
    let damp: Vec<f64> = pts.iter().map(|&p| (-space.kind().phi(p)).exp()).collect();
    let rhs = DVector::from_fn(n, |j, _| values[j] * damp[j]);

    let sv = gram.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let mut system = gram.clone();
    if options.ridge {
        for j in 0..n {
            system[(j, j)] += Complex64::new(RIDGE * smax, 0.0);
        }
    }
    let direct = if condition <= MAX_CONDITION || options.ridge {
        system.clone().lu().solve(&rhs)
    } else {
        None
    };
    let (scaled, least_squares) = match direct {
        Some(x) if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => (x, false),
        _ => {
            let svd = system.svd(true, true);
            let x = svd
                .solve(&rhs, smax * f64::EPSILON * n as f64)
                .expect("both singular vector sets were requested");
            (x, true)
        }
    };

    let fitted = &gram * &scaled;
    let mut residual = 0.0f64;
    for j in 0..n {
        let f_gamma = fitted[j] / damp[j];
        residual = residual.max((f_gamma - values[j]).norm());
    }
    if !residual.is_finite() {
        return Err(VerificationError::Unstable { residual });
    }
    let norm_sq = scaled.dotc(&fitted).re.max(0.0);
    let coefficients: Vec<Complex64> = (0..n).map(|j| scaled[j] * damp[j]).collect();
    // a_n = Σ_j c̃_j conj(ê_n(γ_j))
    let basis_coefficients = (0..space.dim())
        .map(|m| (0..n).map(|j| scaled[j] * b[(j, m)].conj()).sum())
        .collect();
    Ok(Interpolation {
        coefficients,
        basis_coefficients,
        residual,
        norm: norm_sq.sqrt(),
        condition,
        least_squares,
    })
}

/// Unit-modulus data with seeded uniform phases.
pub fn random_unit_data(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// One verification run, serialized into `verification.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub space: SpaceKind,
    #[serde(rename = "N")]
    pub degree: usize,
    pub points: usize,
    pub window: Option<Window>,
    pub spacing: Option<f64>,
    pub delta: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub ratio: f64,
    pub riesz_lower_bound: f64,
    /// Radius of the interpolation ball, see [`SpaceKind::bulk_radius`].
    pub bulk_radius: f64,
    pub interpolation_points: usize,
    pub residual: f64,
    pub norm: f64,
    /// `None` when the scaled Gram matrix is singular.
    pub condition: Option<f64>,
    pub least_squares: bool,
}

/// Generator metadata carried into a record.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Provenance {
    pub window: Option<Window>,
    pub spacing: Option<f64>,
    pub delta: Option<f64>,
}

/// Frame bounds and Riesz bound of `Γ`, and an interpolation of seeded unit
/// data on the part of `Γ` in the bulk ball about the window anchor.
pub fn run_experiment(
    kind: SpaceKind,
    degree: usize,
    set: &PointSet,
    provenance: Provenance,
    options: InterpolationOptions,
    seed: u64,
    q: &QuadratureSpec,
) -> Result<ExperimentRecord, VerificationError> {
    let space = TruncatedSpace::new(kind, degree)?;
    let experiment = SamplingExperiment::with_metric_weights(space.clone(), set.clone(), q)?;
    let bounds = experiment.frame_bounds();
    let riesz = riesz_lower_bound(kind, set)?;
    let anchor = provenance.window.map_or(Point::new(0.0, 0.0), |w| w.anchor);
    let bulk = kind.bulk_radius(degree);
    let surface = kind.surface();
    let inner: Vec<Point> = set
        .points()
        .iter()
        .copied()
        .filter(|&p| surface.rho_unchecked(anchor, p) < bulk)
        .collect();
    let inner = PointSet::new(surface, inner).expect("subset of a valid set");
    let data = random_unit_data(inner.len(), seed);
    let interp = min_norm_interpolate(&space, &inner, &data, options)?;
    Ok(ExperimentRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        space: kind,
        degree,
        points: set.len(),
        window: provenance.window,
        spacing: provenance.spacing,
        delta: provenance.delta,
        lambda_min: bounds.lower,
        lambda_max: bounds.upper,
        ratio: bounds.ratio(),
        riesz_lower_bound: riesz,
        bulk_radius: bulk,
        interpolation_points: inner.len(),
        residual: interp.residual,
        norm: interp.norm,
        condition: interp.condition.is_finite().then_some(interp.condition),
        least_squares: interp.least_squares,
    })
}
