use std::f64::consts::TAU;

use super::PotentialError;
use crate::densities::WeightModel;
use crate::geometry::quadrature::{QuadratureError, QuadratureSpec};
use crate::geometry::{EuclideanDisk, Point, SurfaceModel};

const MAX_DOUBLINGS: u32 = 12;

fn realization(surface: SurfaceModel, gamma: Point, sigma: f64) -> Result<EuclideanDisk, PotentialError> {
    surface.check(gamma)?;
    if !(sigma > 0.0) || !(2.0 * sigma < surface.r_max()) {
        return Err(PotentialError::OutOfRange { name: "sigma", value: sigma });
    }
    Ok(surface.disk_realize(gamma, 2.0 * sigma)?)
}

/// `F_γ(z) = H(z) − H(γ)` where `H` is holomorphic on the Euclidean
/// realization of `D_{2σ}(γ)` with `Re H` the harmonic extension of `φ`
/// from its boundary circle.
///
/// `H` is the Schwarz integral of the boundary data, discretized by the
/// trapezoid rule with node doubling from `1` to `2¹²` points.
pub fn local_corrector(
    surface: SurfaceModel,
    weight: &WeightModel,
    gamma: Point,
    sigma: f64,
    z: Point,
    q: &QuadratureSpec,
) -> Result<Point, PotentialError> {
    let disk = realization(surface, gamma, sigma)?;
    surface.check(z)?;
    if !(surface.rho_unchecked(gamma, z) < sigma) {
        return Err(PotentialError::Precondition(format!("{z} is outside D_σ(γ)")));
    }
    schwarz_difference(weight, &disk, gamma, z, q)
}

fn schwarz_difference(
    weight: &WeightModel,
    disk: &EuclideanDisk,
    gamma: Point,
    z: Point,
    q: &QuadratureSpec,
) -> Result<Point, PotentialError> {
    if z == gamma {
        return Ok(Point::new(0.0, 0.0));
    }
    let (c, big_r) = (disk.center, disk.radius);
    let (wz, wg) = (z - c, gamma - c);
    // Kernel difference K(z) − K(γ) = 2e(wz − wg) / ((e − wz)(e − wg)).
    let term = |theta: f64| {
        let e = Point::from_polar(big_r, theta);
        let k = 2.0 * e * (wz - wg) / ((e - wz) * (e - wg));
        k * weight.phi(c + e)
    };
    let mut sum = term(0.0);
    let mut n = 1usize;
    let mut prev = sum;
    for _ in 0..MAX_DOUBLINGS {
        // Add the midpoints of the current n-point rule.
        let mut extra = Point::new(0.0, 0.0);
        for k in 0..n {
            extra += term(TAU * (k as f64 + 0.5) / n as f64);
        }
        sum += extra;
        n *= 2;
        let current = sum / n as f64;
        let diff = (current - prev).norm();
        if n >= 8 && diff <= q.abs_tolerance.max(q.rel_tolerance * current.norm()) {
            return Ok(current);
        }
        prev = current;
    }
    Err(QuadratureError::NotConverged {
        estimate: prev.norm(),
        error: (sum / n as f64 - prev).norm(),
    }
    .into())
}

/// `sup |2φ(γ) − 2φ(z) + 2 Re F_γ(z)|` over a fixed polar sample of
/// `D_σ(γ)` (10 radii by 20 angles).
pub fn local_oscillation(
    surface: SurfaceModel,
    weight: &WeightModel,
    gamma: Point,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<f64, PotentialError> {
    let disk = realization(surface, gamma, sigma)?;
    let phi_g = weight.phi(gamma);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let t = sigma * (i as f64 + 0.5) / 10.0;
        for j in 0..20 {
            let u = Point::from_polar(t, TAU * j as f64 / 20.0);
            let z = surface.from_center(gamma, u);
            let f = schwarz_difference(weight, &disk, gamma, z, q)?;
            worst = worst.max((2.0 * phi_g - 2.0 * weight.phi(z) + 2.0 * f.re).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    #[test]
    fn fock_corrector_closed_form() {
        let q = QuadratureSpec::default();
        let w = WeightModel::ClassicalFock;
        let plane = SurfaceModel::EuclideanPlane;
        for z in [c(0.3, 0.1), c(-0.5, 0.4), c(0.0, -0.9)] {
            let f0 = local_corrector(plane, &w, c(0.0, 0.0), 1.0, z, &q).unwrap();
            assert!(f0.norm() < 1e-12);
        }
        let gamma = c(1.5, -2.0);
        for u in [c(0.3, 0.1), c(-0.5, 0.4), c(0.0, -0.9)] {
            let z = gamma + u;
            let f = local_corrector(plane, &w, gamma, 1.0, z, &q).unwrap();
            assert!((f - gamma.conj() * u).norm() < 1e-8, "{f}");
        }
        assert_eq!(local_corrector(plane, &w, gamma, 1.0, gamma, &q).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn corrector_is_holomorphic() {
        let q = QuadratureSpec::default();
        let disk = SurfaceModel::UnitDisk;
        let w = WeightModel::ClassicalBergman;
        let gamma = c(0.4, 0.2);
        let sigma = 0.3;
        let h = 1e-5;
        for k in 0..6 {
            let z = disk.from_center(gamma, Point::from_polar(0.2, k as f64));
            let f = |p: Point| local_corrector(disk, &w, gamma, sigma, p, &q).unwrap();
            let dx = (f(z + c(h, 0.0)) - f(z - c(h, 0.0))) / (2.0 * h);
            let dy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
            // ∂̄F = ½(∂x + i∂y)F vanishes for holomorphic F.
            let residual = (dx + Point::i() * dy).norm() * 0.5;
            assert!(residual < 1e-6, "{z}: {residual}");
        }
    }

    #[test]
    fn oscillation_is_bounded() {
        let q = QuadratureSpec::default();
        let c_plane = local_oscillation(SurfaceModel::EuclideanPlane, &WeightModel::ClassicalFock, c(2.0, 1.0), 1.0, &q)
            .unwrap();
        // For Fock the quantity is |z − γ|², at most σ².
        assert!(c_plane <= 1.0 + 1e-8);
        let c_disk =
            local_oscillation(SurfaceModel::UnitDisk, &WeightModel::ClassicalBergman, c(0.5, 0.3), 0.2, &q).unwrap();
        assert!(c_disk.is_finite() && c_disk < 10.0);
    }

    #[test]
    fn domain_errors() {
        let q = QuadratureSpec::default();
        let w = WeightModel::ClassicalBergman;
        let disk = SurfaceModel::UnitDisk;
        assert!(local_corrector(disk, &w, c(0.0, 0.0), 0.6, c(0.1, 0.0), &q).is_err());
        assert!(local_corrector(disk, &w, c(0.0, 0.0), 0.2, c(0.5, 0.0), &q).is_err());
    }
}
