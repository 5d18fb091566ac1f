//! Potential theory of the two model surfaces: the extremal fundamental
//! solution `E`, the distance-like function `ρ = e^E`, the fundamental
//! metric `e^{-2ν}`, Euclidean realizations of `ρ`-disks, and quadrature
//! against the associated area forms.
//!
//! On the plane `E(z, ζ) = log|z − ζ|`; on the unit disk `E` is the
//! Green's function `log|(z − ζ)/(1 − z̄ζ)|`. In both cases the map
//! [`SurfaceModel::from_center`] is an isometry sending `0` to `z`, so a
//! `ρ`-disk about `z` is the image of a Euclidean disk about the origin and
//! `dρ_z ∧ *dρ_z` pulls back to Lebesgue measure. All area integrals below
//! are evaluated in those centered coordinates.

pub mod quadrature;

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use quadrature::{Estimate, QuadratureError, QuadratureSpec};

pub type Point = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("singular evaluation: E is undefined at coincident points {0}")]
    SingularEvaluation(Point),
    #[error("point {0} lies outside the {1:?} domain")]
    OutsideDomain(Point, SurfaceModel),
    #[error("radius {r} outside (0, {r_max})")]
    RadiusOutOfRange { r: f64, r_max: f64 },
    #[error("invalid Euclidean disk: {0}")]
    InvalidDisk(String),
    #[error("kernel has no mass below r = {0}")]
    DegenerateKernel(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// The two model geometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceModel {
    #[serde(rename = "plane")]
    EuclideanPlane,
    #[serde(rename = "disk")]
    UnitDisk,
}

/// `ν`, `e^{2ν}` and `|dρ_z(ζ)|²` at a pair of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricWeights {
    pub nu: f64,
    pub e2nu: f64,
    pub drho_sq: f64,
}

/// A Euclidean disk `{w : |w − center| < radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: Point,
    pub radius: f64,
}

impl EuclideanDisk {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() || !center.re.is_finite() || !center.im.is_finite()
        {
            return Err(GeometryError::InvalidDisk(format!(
                "center {center}, radius {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, w: Point) -> bool {
        (w - self.center).norm() < self.radius
    }

    /// Open disks are disjoint when the centers are at least the sum of
    /// the radii apart (tangency counts as disjoint).
    pub fn is_disjoint(&self, other: &EuclideanDisk) -> bool {
        (self.center - other.center).norm() >= self.radius + other.radius
    }

    pub fn contains_disk(&self, other: &EuclideanDisk) -> bool {
        (self.center - other.center).norm() + other.radius <= self.radius
    }
}

impl SurfaceModel {
    /// `R_X`: `+∞` for the plane, `1` for the disk.
    pub fn r_max(self) -> f64 {
        match self {
            SurfaceModel::EuclideanPlane => f64::INFINITY,
            SurfaceModel::UnitDisk => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceModel::EuclideanPlane => "plane",
            SurfaceModel::UnitDisk => "disk",
        }
    }

    pub fn contains(self, z: Point) -> bool {
        let finite = z.re.is_finite() && z.im.is_finite();
        match self {
            SurfaceModel::EuclideanPlane => finite,
            SurfaceModel::UnitDisk => finite && z.norm_sqr() < 1.0,
        }
    }

    pub fn check(self, z: Point) -> Result<(), GeometryError> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(GeometryError::OutsideDomain(z, self))
        }
    }

    pub fn check_radius(self, r: f64) -> Result<(), GeometryError> {
        if r > 0.0 && r < self.r_max() {
            Ok(())
        } else {
            Err(GeometryError::RadiusOutOfRange {
                r,
                r_max: self.r_max(),
            })
        }
    }

    /// The isometry sending `0 ↦ z` with `ρ_z(from_center(z, u)) = |u|`.
    /// On the disk this is the involution `φ_z(u) = (z − u)/(1 − z̄u)`.
    #[inline]
    pub fn from_center(self, z: Point, u: Point) -> Point {
        match self {
            SurfaceModel::EuclideanPlane => z + u,
            SurfaceModel::UnitDisk => (z - u) / (Point::new(1.0, 0.0) - z.conj() * u),
        }
    }

    /// Inverse of [`from_center`](Self::from_center).
    #[inline]
    pub fn to_center(self, z: Point, w: Point) -> Point {
        match self {
            SurfaceModel::EuclideanPlane => w - z,
            SurfaceModel::UnitDisk => (z - w) / (Point::new(1.0, 0.0) - z.conj() * w),
        }
    }

    /// `ρ_z(ζ)` without domain checks.
    #[inline]
    pub fn rho_unchecked(self, z: Point, zeta: Point) -> f64 {
        match self {
            SurfaceModel::EuclideanPlane => (z - zeta).norm(),
            SurfaceModel::UnitDisk => {
                ((z - zeta) / (Point::new(1.0, 0.0) - z.conj() * zeta)).norm()
            }
        }
    }

    /// The extremal fundamental solution `E(z, ζ)`.
    pub fn evans_green(self, z: Point, zeta: Point) -> Result<f64, GeometryError> {
        self.check(z)?;
        self.check(zeta)?;
        if z == zeta {
            return Err(GeometryError::SingularEvaluation(z));
        }
        Ok(self.rho_unchecked(z, zeta).ln())
    }

    /// `ρ_z(ζ) = e^{E(z, ζ)}`, extended by `0` at coincidence.
    pub fn rho(self, z: Point, zeta: Point) -> Result<f64, GeometryError> {
        self.check(z)?;
        self.check(zeta)?;
        Ok(self.rho_unchecked(z, zeta))
    }

    /// The Euclidean disk equal to `D_r(z) = {ρ_z < r}`.
    pub fn disk_realize(self, z: Point, r: f64) -> Result<EuclideanDisk, GeometryError> {
        self.check(z)?;
        self.check_radius(r)?;
        Ok(self.disk_realize_unchecked(z, r))
    }

    pub(crate) fn disk_realize_unchecked(self, z: Point, r: f64) -> EuclideanDisk {
        match self {
            SurfaceModel::EuclideanPlane => EuclideanDisk { center: z, radius: r },
            SurfaceModel::UnitDisk => {
                let r2 = r * r;
                let z2 = z.norm_sqr();
                let denom = 1.0 - r2 * z2;
                EuclideanDisk {
                    center: z * ((1.0 - r2) / denom),
                    radius: r * (1.0 - z2) / denom,
                }
            }
        }
    }

    #[inline]
    pub(crate) fn metric_weights_unchecked(self, z: Point, zeta: Point) -> MetricWeights {
        match self {
            SurfaceModel::EuclideanPlane => MetricWeights {
                nu: LN_2,
                e2nu: 4.0,
                drho_sq: 1.0,
            },
            SurfaceModel::UnitDisk => {
                let s = 1.0 - zeta.norm_sqr();
                let rho = self.rho_unchecked(z, zeta);
                let q = 1.0 - rho * rho;
                MetricWeights {
                    nu: LN_2 + s.ln(),
                    e2nu: 4.0 * s * s,
                    drho_sq: (q * q) / (s * s),
                }
            }
        }
    }

    /// `ν(ζ)`, `e^{2ν(ζ)}` and `|dρ_z(ζ)|²`.
    pub fn metric_weights(self, z: Point, zeta: Point) -> Result<MetricWeights, GeometryError> {
        self.check(z)?;
        self.check(zeta)?;
        Ok(self.metric_weights_unchecked(z, zeta))
    }

    /// `e^{2ν(ζ)}` alone.
    #[inline]
    pub fn e2nu(self, zeta: Point) -> f64 {
        match self {
            SurfaceModel::EuclideanPlane => 4.0,
            SurfaceModel::UnitDisk => {
                let s = 1.0 - zeta.norm_sqr();
                4.0 * s * s
            }
        }
    }

    fn check_region(self, region: &EuclideanDisk) -> Result<(), GeometryError> {
        EuclideanDisk::new(region.center, region.radius)?;
        if self == SurfaceModel::UnitDisk && region.center.norm() + region.radius >= 1.0 {
            return Err(GeometryError::InvalidDisk(format!(
                "closed disk about {} of radius {} leaves the unit disk",
                region.center, region.radius
            )));
        }
        Ok(())
    }
}

/// A radial profile `f` on `[0, R_X)` together with its moment
/// `c_r = 2π ∫_0^r t f(t) dt`.
pub trait RadialKernel {
    fn value(&self, t: f64) -> f64;
    /// Radii where `f` is not smooth.
    fn breakpoints(&self) -> Vec<f64>;
    fn moment(&self, r: f64) -> Result<f64, QuadratureError>;
}

/// `∫ ξ_r(z, w) h(w) e^{-2ν(w)} dm(w)`, the `ξ_r`-weighted mean of `h` on
/// `D_r(z)`.
///
/// The measure is Lebesgue measure `dm`; with it `h ≡ 1` maps to `1` and
/// harmonic `h` reproduces `h(z)`.
pub fn weighted_mean<H, K>(
    surface: SurfaceModel,
    h: H,
    z: Point,
    r: f64,
    f: &K,
    q: &QuadratureSpec,
) -> Result<f64, GeometryError>
where
    H: Fn(Point) -> f64,
    K: RadialKernel + ?Sized,
{
    surface.check(z)?;
    surface.check_radius(r)?;
    let c_r = f.moment(r)?;
    if !(c_r > 0.0) {
        return Err(GeometryError::DegenerateKernel(r));
    }
    let breaks = f.breakpoints();
    let est = quadrature::polar_integrate(
        |t, theta| {
            let ft = f.value(t);
            if ft == 0.0 {
                return 0.0;
            }
            ft * h(surface.from_center(z, Point::from_polar(t, theta)))
        },
        r,
        &breaks,
        &[],
        q,
    )?;
    Ok(est.value / c_r)
}

/// `A_{E,γ}(region) = ∫_region |dρ_γ|² dm` for a Euclidean disk `region`.
pub fn area_gamma(
    surface: SurfaceModel,
    gamma: Point,
    region: &EuclideanDisk,
    q: &QuadratureSpec,
) -> Result<f64, GeometryError> {
    surface.check(gamma)?;
    surface.check_region(region)?;
    let c = region.center;
    let est = quadrature::polar_integrate(
        |t, theta| {
            let w = c + Point::from_polar(t, theta);
            surface.metric_weights_unchecked(gamma, w).drho_sq
        },
        region.radius,
        &[],
        &[],
        q,
    )?;
    Ok(est.value)
}

/// Angle of `u` in `[0, 2π)`.
pub fn angle(u: Point) -> f64 {
    u.arg().rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const PLANE: SurfaceModel = SurfaceModel::EuclideanPlane;
    const DISK: SurfaceModel = SurfaceModel::UnitDisk;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    struct Flat;
    impl RadialKernel for Flat {
        fn value(&self, _: f64) -> f64 {
            1.0
        }
        fn breakpoints(&self) -> Vec<f64> {
            vec![]
        }
        fn moment(&self, r: f64) -> Result<f64, QuadratureError> {
            Ok(PI * r * r)
        }
    }

    #[test]
    fn evans_green_examples() {
        assert_eq!(PLANE.evans_green(c(0.0, 0.0), c(1.0, 0.0)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((PLANE.evans_green(c(0.0, 0.0), c(e, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let v = DISK.evans_green(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn evans_green_errors() {
        assert_eq!(
            PLANE.evans_green(c(1.0, 1.0), c(1.0, 1.0)),
            Err(GeometryError::SingularEvaluation(c(1.0, 1.0)))
        );
        assert!(matches!(
            DISK.evans_green(c(0.0, 0.0), c(1.0, 0.0)),
            Err(GeometryError::OutsideDomain(..))
        ));
        assert!(DISK.rho(c(0.0, 0.0), c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn rho_examples() {
        assert!((PLANE.rho(c(1.0, 2.0), c(4.0, 6.0)).unwrap() - 5.0).abs() < 1e-15);
        assert!((DISK.rho(c(0.5, 0.0), c(0.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let r = DISK.rho(c(0.5, 0.0), c(0.8, 0.0)).unwrap();
        // (0.5 - 0.8) / (1 - 0.4) by hand
        assert!((r - 0.5).abs() < 1e-15);
        let e = DISK.evans_green(c(0.5, 0.0), c(0.8, 0.0)).unwrap();
        assert!((e.exp() - r).abs() < 1e-15);
        assert_eq!(DISK.rho(c(0.3, 0.1), c(0.3, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn disk_realize_examples() {
        let d = PLANE.disk_realize(c(2.0, 1.0), 3.0).unwrap();
        assert_eq!((d.center, d.radius), (c(2.0, 1.0), 3.0));
        let d = DISK.disk_realize(c(0.0, 0.0), 0.7).unwrap();
        assert!(d.center.norm() < 1e-16 && (d.radius - 0.7).abs() < 1e-15);
        let d = DISK.disk_realize(c(0.5, 0.0), 0.5).unwrap();
        assert!((d.center - c(0.4, 0.0)).norm() < 1e-15);
        assert!((d.radius - 0.4).abs() < 1e-15);
        assert!(DISK.disk_realize(c(0.0, 0.0), 1.0).is_err());
        assert!(PLANE.disk_realize(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn metric_weight_examples() {
        let w = PLANE.metric_weights(c(3.0, -1.0), c(0.2, 7.0)).unwrap();
        assert_eq!(w, MetricWeights { nu: LN_2, e2nu: 4.0, drho_sq: 1.0 });
        let w = DISK.metric_weights(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((w.nu - LN_2).abs() < 1e-15 && (w.e2nu - 4.0).abs() < 1e-15);
        assert!((w.drho_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn drho_matches_finite_differences() {
        // |dρ|² = ρ_x² + ρ_y², central differences with step 1e-5.
        let h = 1e-5;
        for &(z, zeta) in &[
            (c(0.0, 0.0), c(0.6, 0.0)),
            (c(0.3, -0.2), c(-0.1, 0.5)),
            (c(-0.7, 0.1), c(-0.4, -0.3)),
        ] {
            let rho = |w: Point| DISK.rho_unchecked(z, w);
            let rx = (rho(zeta + c(h, 0.0)) - rho(zeta - c(h, 0.0))) / (2.0 * h);
            let ry = (rho(zeta + c(0.0, h)) - rho(zeta - c(0.0, h))) / (2.0 * h);
            let w = DISK.metric_weights(z, zeta).unwrap();
            assert!((w.drho_sq - (rx * rx + ry * ry)).abs() < 1e-6, "{z} {zeta}");
        }
    }

    #[test]
    fn weighted_mean_examples() {
        let q = QuadratureSpec::default();
        let one = weighted_mean(PLANE, |_| 1.0, c(1.0, 2.0), 1.5, &Flat, &q).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let harmonic = weighted_mean(PLANE, |w| (w * w).re, c(0.0, 0.0), 1.0, &Flat, &q).unwrap();
        assert!(harmonic.abs() < 1e-12);
        let sub = weighted_mean(PLANE, |w| w.norm_sqr(), c(0.0, 0.0), 1.0, &Flat, &q).unwrap();
        assert!((sub - 0.5).abs() < 1e-12);
        let disk_one = weighted_mean(DISK, |_| 1.0, c(0.4, 0.3), 0.6, &Flat, &q).unwrap();
        assert!((disk_one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn area_gamma_examples() {
        let q = QuadratureSpec::default();
        let d = PLANE.disk_realize(c(0.0, 0.0), 0.3).unwrap();
        assert!((area_gamma(PLANE, c(0.0, 0.0), &d, &q).unwrap() - PI * 0.09).abs() < 1e-12);
        let d = DISK.disk_realize(c(0.5, 0.0), 0.2).unwrap();
        let a = area_gamma(DISK, c(0.5, 0.0), &d, &q).unwrap();
        assert!((a - PI * 0.04).abs() < 1e-11);
        let outer = EuclideanDisk::new(c(0.0, 0.0), 0.4).unwrap();
        let inner = EuclideanDisk::new(c(0.0, 0.0), 0.2).unwrap();
        let annulus = area_gamma(PLANE, c(0.0, 0.0), &outer, &q).unwrap()
            - area_gamma(PLANE, c(0.0, 0.0), &inner, &q).unwrap();
        assert!((annulus - PI * 0.12).abs() < 1e-12);
        let bad = EuclideanDisk::new(c(0.5, 0.0), 0.6).unwrap();
        assert!(area_gamma(DISK, c(0.0, 0.0), &bad, &q).is_err());
    }
}
