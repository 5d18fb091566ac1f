//! Smoothed kernels, singular and bump weights built from a point set, and
//! local holomorphic correctors.

mod corrector;

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::densities::{DensityError, DensityKernel, KernelMoments, WeightModel};
use crate::geometry::quadrature::{self, QuadratureError, QuadratureSpec};
use crate::geometry::{angle, GeometryError, Point, SurfaceModel};
use crate::pointsets::{PointSet, PointSetError};

pub use corrector::{local_corrector, local_oscillation};

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("mean of E is {value}, above the bound {bound}")]
    BoundViolated { value: f64, bound: f64 },
    #[error("weight mode does not provide this operation")]
    WrongMode,
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    PointSet(#[from] PointSetError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Default bump scale `t`.
pub const DEFAULT_BUMP_SCALE: f64 = 0.9;

/// `I(ρ)` as a function of `ρ = ρ_z(ζ)`; equals `log ρ` for `ρ ≥ r`.
fn smoothed_log(moments: &KernelMoments, rho: f64) -> f64 {
    let r = moments.r();
    if rho >= r {
        return rho.ln();
    }
    let head = if rho > 0.0 { rho.ln() * moments.mass(rho) } else { 0.0 };
    2.0 * PI / moments.c_r() * (head + moments.log_mass_to_r(rho))
}

/// `E(ζ, z) − I(ζ, z)` as a function of `ρ`; zero for `ρ ≥ r`.
fn pole_part(moments: &KernelMoments, rho: f64) -> f64 {
    if rho >= moments.r() {
        0.0
    } else {
        rho.ln() - smoothed_log(moments, rho)
    }
}

/// The smoothed kernel `I(ζ, z)`: `E(ζ, z)` averaged against `f` over
/// `D_r`, finite at `ζ = z`.
pub fn i_smoothed(
    surface: SurfaceModel,
    f: &DensityKernel,
    r: f64,
    zeta: Point,
    z: Point,
) -> Result<f64, PotentialError> {
    f.validate_for(surface)?;
    surface.check_radius(r)?;
    let rho = surface.rho(z, zeta)?;
    let moments = KernelMoments::new(f, r)?;
    let v = smoothed_log(&moments, rho);
    if !v.is_finite() {
        return Err(DensityError::InvalidKernel("log moment of the kernel is not finite".into()).into());
    }
    Ok(v)
}

/// Value of a weight that may carry logarithmic poles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoleValue {
    Finite(f64),
    /// Evaluated at `Γ[index]`, where the weight is `−∞`.
    Pole { index: usize },
}

impl PoleValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PoleValue::Finite(v) => Some(v),
            PoleValue::Pole { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// `v_r`, with poles on `Γ`.
    PoleWeight,
    /// `v_{r,ε}`, the pole part averaged over `D_ε(γ)` and scaled by `t`.
    BumpWeight { eps: f64, t: f64 },
}

/// `φ + v` for the singular weight `v` built from `Γ`.
#[derive(Clone, Debug)]
pub struct SingularWeight {
    base: WeightModel,
    set: PointSet,
    moments: KernelMoments,
    mode: WeightMode,
}

impl SingularWeight {
    pub fn new(
        base: WeightModel,
        set: PointSet,
        kernel: DensityKernel,
        r: f64,
        mode: WeightMode,
    ) -> Result<Self, PotentialError> {
        let surface = set.surface();
        kernel.validate_for(surface)?;
        surface.check_radius(r)?;
        if let WeightMode::BumpWeight { eps, t } = mode {
            let sigma = set.separation_constant();
            if !(eps > 0.0 && eps <= sigma) {
                return Err(PotentialError::OutOfRange { name: "eps", value: eps });
            }
            if !(t > 0.0 && t < 1.0) {
                return Err(PotentialError::OutOfRange { name: "t", value: t });
            }
        }
        let moments = KernelMoments::new(&kernel, r)?;
        Ok(Self {
            base,
            set,
            moments,
            mode,
        })
    }

    pub fn surface(&self) -> SurfaceModel {
        self.set.surface()
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn r(&self) -> f64 {
        self.moments.r()
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    /// `v_r(z) = Σ_γ (E(γ, z) − I(γ, z))`; only `γ ∈ D_r(z)` contribute.
    pub fn v_r(&self, z: Point) -> Result<PoleValue, PotentialError> {
        let surface = self.surface();
        surface.check(z)?;
        let mut total = 0.0;
        for i in self.set.indices_in_rho_disk(z, self.r()) {
            let rho = surface.rho_unchecked(self.set.points()[i], z);
            if rho == 0.0 {
                return Ok(PoleValue::Pole { index: i });
            }
            total += pole_part(&self.moments, rho);
        }
        Ok(PoleValue::Finite(total))
    }

    /// `v_{r,ε}(z) = t Σ_γ (πε²)⁻¹ ∫_{D_ε(γ)} (E(ζ, z) − I(ζ, z)) dA_{E,γ}(ζ)`.
    pub fn v_r_eps(&self, z: Point, q: &QuadratureSpec) -> Result<f64, PotentialError> {
        let (eps, t) = match self.mode {
            WeightMode::BumpWeight { eps, t } => (eps, t),
            WeightMode::PoleWeight => return Err(PotentialError::WrongMode),
        };
        let surface = self.surface();
        surface.check(z)?;
        let reach = match surface {
            SurfaceModel::EuclideanPlane => self.r() + eps,
            SurfaceModel::UnitDisk => (self.r() + eps) / (1.0 + self.r() * eps),
        };
        let mut total = 0.0;
        for i in self.set.indices_in_rho_disk(z, reach) {
            let gamma = self.set.points()[i];
            let mean = disk_mean(surface, gamma, eps, z, q, |rho| pole_part(&self.moments, rho))?;
            total += mean;
        }
        Ok(t * total)
    }

    /// The singular part at `z`: `v_r` or `v_{r,ε}` depending on the mode.
    pub fn singular_part(&self, z: Point, q: &QuadratureSpec) -> Result<PoleValue, PotentialError> {
        match self.mode {
            WeightMode::PoleWeight => self.v_r(z),
            WeightMode::BumpWeight { .. } => self.v_r_eps(z, q).map(PoleValue::Finite),
        }
    }

    /// The modified weight `φ + v` at `z`.
    pub fn value(&self, z: Point, q: &QuadratureSpec) -> Result<PoleValue, PotentialError> {
        Ok(match self.singular_part(z, q)? {
            PoleValue::Finite(v) => PoleValue::Finite(self.base.phi(z) + v),
            pole => pole,
        })
    }

    /// CSV of `re,im,phi,v,pole` over `points`; `v` is empty at poles.
    pub fn sample_csv(&self, points: &[Point], q: &QuadratureSpec) -> Result<String, PotentialError> {
        let mut out = String::from("re,im,phi,v,pole\n");
        for &z in points {
            let phi = self.base.phi(z);
            match self.singular_part(z, q)? {
                PoleValue::Finite(v) => writeln!(out, "{:e},{:e},{:e},{:e},false", z.re, z.im, phi, v),
                PoleValue::Pole { .. } => writeln!(out, "{:e},{:e},{:e},,true", z.re, z.im, phi),
            }
            .expect("writing to a String");
        }
        Ok(out)
    }
}

/// `(πε²)⁻¹ ∫_{D_ε(γ)} g(ρ_z(ζ)) dA_{E,γ}(ζ)` for `g` with at most a
/// logarithmic singularity at `ρ = 0`.
///
/// In coordinates `ζ = from_center(γ, u)` the measure is `dm(u)` on
/// `|u| < ε`, and `ρ_z(ζ) = ρ_{u₀}(u)` with `u₀ = to_center(γ, z)`.
fn disk_mean<G: Fn(f64) -> f64>(
    surface: SurfaceModel,
    gamma: Point,
    eps: f64,
    z: Point,
    q: &QuadratureSpec,
    g: G,
) -> Result<f64, PotentialError> {
    let u0 = surface.to_center(gamma, z);
    let radial = [u0.norm()];
    let angular = [angle(u0)];
    let est = quadrature::polar_integrate(
        |t, theta| {
            let u = Point::from_polar(t, theta);
            let rho = surface.rho_unchecked(u0, u);
            if rho == 0.0 {
                0.0
            } else {
                g(rho)
            }
        },
        eps,
        &radial,
        &angular,
        q,
    )?;
    Ok(est.value / (PI * eps * eps))
}

/// The regularized mean of `E(z, ·)` over `D_ε(γ)` and the bound it is
/// checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EMean {
    pub value: f64,
    pub bound: f64,
}

/// Slack allowed above `log(1/ε) + ½`.
pub const E_MEAN_SLACK: f64 = 1e-6;

/// `(πε²)⁻¹ ∫_{D_ε(γ)} E(z, ζ) dA_{E,γ}(ζ)` for `ρ_γ(z) < ε`, checked
/// against `log(1/ε) + ½`.
pub fn e_mean_bound(
    surface: SurfaceModel,
    gamma: Point,
    eps: f64,
    z: Point,
    q: &QuadratureSpec,
) -> Result<EMean, PotentialError> {
    surface.check(gamma)?;
    surface.check(z)?;
    surface.check_radius(eps)?;
    let rho0 = surface.rho_unchecked(gamma, z);
    if !(rho0 < eps) {
        return Err(PotentialError::Precondition(format!(
            "ρ_γ(z) = {rho0} is not below ε = {eps}"
        )));
    }
    let value = disk_mean(surface, gamma, eps, z, q, f64::ln)?;
    let bound = (1.0 / eps).ln() + 0.5;
    if value > bound + E_MEAN_SLACK {
        return Err(PotentialError::BoundViolated { value, bound });
    }
    Ok(EMean { value, bound })
}
