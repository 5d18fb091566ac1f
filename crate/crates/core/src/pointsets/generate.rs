use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PointSet, PointSetError, Window, WindowKind};
use crate::geometry::{Point, SurfaceModel};

/// `anchor + s(ℤ + iℤ)` intersected with a plane window.
pub fn generate_square_lattice(spacing: f64, window: &Window) -> Result<PointSet, PointSetError> {
    window.validate()?;
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(PointSetError::OutOfRange {
            name: "spacing",
            value: spacing,
            range: "(0, ∞)",
        });
    }
    let (extent, ball) = match window.kind {
        WindowKind::PlaneSquare { half_side } => (half_side, false),
        WindowKind::PlaneBall { radius } => (radius, true),
        WindowKind::DiskBall { .. } => {
            return Err(PointSetError::UnsupportedSurface(
                "square lattice",
                SurfaceModel::UnitDisk,
            ))
        }
    };
    // Lattice points on the window boundary are kept; compare in units of
    // the spacing with a relative slack so s·k = R survives rounding.
    let limit = extent / spacing * (1.0 + 1e-12);
    if limit > 1e4 {
        return Err(PointSetError::OutOfRange {
            name: "window extent / spacing",
            value: limit,
            range: "(0, 1e4]",
        });
    }
    let m = limit.floor() as i64;
    let mut pts = Vec::new();
    for j in -m..=m {
        for i in -m..=m {
            let (x, y) = (i as f64, j as f64);
            let inside = if ball {
                (x * x + y * y).sqrt() <= limit
            } else {
                x.abs() <= limit && y.abs() <= limit
            };
            if inside {
                pts.push(window.anchor + Point::new(x, y) * spacing);
            }
        }
    }
    PointSet::new(SurfaceModel::EuclideanPlane, pts)
}

/// Budget for the greedy net construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetOptions {
    /// Stop after this many consecutive rejected candidates.
    pub stall_limit: usize,
    /// Hard cap on the number of candidates drawn.
    pub max_candidates: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        Self {
            stall_limit: 20_000,
            max_candidates: 2_000_000,
        }
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    x
}

/// Greedy pseudo-hyperbolic `δ`-net in a disk window.
///
/// Candidates come from a Halton(2, 3) stream with a seeded rotation,
/// spread uniformly in hyperbolic area over the window; a candidate is
/// accepted when its `ρ`-distance to every accepted point is at least `δ`.
pub fn generate_hyperbolic_net(
    delta: f64,
    window: &Window,
    seed: u64,
    options: &NetOptions,
) -> Result<PointSet, PointSetError> {
    window.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PointSetError::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 1)",
        });
    }
    let rho_radius = match window.kind {
        WindowKind::DiskBall { rho_radius } => rho_radius,
        _ => {
            return Err(PointSetError::UnsupportedSurface(
                "hyperbolic net",
                SurfaceModel::EuclideanPlane,
            ))
        }
    };
    let disk = SurfaceModel::UnitDisk;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: (f64, f64) = (rng.random(), rng.random());
    // Hyperbolic area of {|u| < t} is proportional to t² / (1 − t²).
    let total = rho_radius * rho_radius / (1.0 - rho_radius * rho_radius);

    let mut accepted: Vec<Point> = Vec::new();
    let mut stall = 0usize;
    for k in 1..=options.max_candidates as u64 {
        let a = (radical_inverse(k, 2) + shift.0).fract();
        let b = (radical_inverse(k, 3) + shift.1).fract();
        let area = a * total;
        let t = (area / (1.0 + area)).sqrt();
        let u = Point::from_polar(t, std::f64::consts::TAU * b);
        let w = disk.from_center(window.anchor, u);
        if !window.contains(w) {
            continue;
        }
        if accepted.iter().all(|&p| disk.rho_unchecked(p, w) >= delta) {
            accepted.push(w);
            stall = 0;
        } else {
            stall += 1;
            if stall >= options.stall_limit {
                break;
            }
        }
    }
    PointSet::new(disk, accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn origin() -> Point {
        Point::new(0.0, 0.0)
    }

    #[test]
    fn lattice_counts() {
        let sq = Window::plane_square(1.5, origin()).unwrap();
        assert_eq!(generate_square_lattice(1.0, &sq).unwrap().len(), 9);
        let s = PI.sqrt();
        let ball = Window::plane_ball(3.0 * s, origin()).unwrap();
        let brute = (-3i32..=3)
            .flat_map(|m| (-3i32..=3).map(move |n| (m, n)))
            .filter(|(m, n)| m * m + n * n <= 9)
            .count();
        assert_eq!(brute, 29);
        assert_eq!(generate_square_lattice(s, &ball).unwrap().len(), brute);
    }

    #[test]
    fn lattice_separation_is_half_spacing() {
        for s in [0.3, 1.0, 2.5] {
            let w = Window::plane_square(10.0, Point::new(0.25, -1.0)).unwrap();
            let set = generate_square_lattice(s, &w).unwrap();
            assert!((set.separation_constant() - s / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_rejects_disk_window() {
        let w = Window::disk_ball(0.5, origin()).unwrap();
        assert!(matches!(
            generate_square_lattice(1.0, &w),
            Err(PointSetError::UnsupportedSurface(..))
        ));
        let p = Window::plane_ball(1.0, origin()).unwrap();
        assert!(generate_square_lattice(0.0, &p).is_err());
    }

    #[test]
    fn net_is_separated() {
        let w = Window::disk_ball(0.99, origin()).unwrap();
        let net = generate_hyperbolic_net(0.9, &w, 3, &NetOptions::default()).unwrap();
        let pts = net.points();
        assert!(pts.len() > 10);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!(SurfaceModel::UnitDisk.rho_unchecked(pts[i], pts[j]) >= 0.9);
            }
        }
    }

    #[test]
    fn net_rejects_bad_inputs() {
        let w = Window::disk_ball(0.9, origin()).unwrap();
        assert!(generate_hyperbolic_net(1.0, &w, 0, &NetOptions::default()).is_err());
        let p = Window::plane_ball(1.0, origin()).unwrap();
        assert!(generate_hyperbolic_net(0.5, &p, 0, &NetOptions::default()).is_err());
    }

    #[test]
    fn radical_inverse_digits() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }
}
