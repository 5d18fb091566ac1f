//! Discrete point sets: separation constants, sparseness counts, windowed
//! generators and the plain-text interchange format.

mod generate;
mod index;
mod io;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{EuclideanDisk, GeometryError, Point, SurfaceModel};

pub use generate::{generate_hyperbolic_net, generate_square_lattice, NetOptions};
pub use io::{parse_pointset, write_pointset};

use index::GridIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointSetError {
    #[error("degenerate input: coincident points {0}")]
    Coincident(Point),
    #[error("{0} is not supported on the {1:?} surface")]
    UnsupportedSurface(&'static str, SurfaceModel),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("parameter {name} = {value} out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An ordered list of pairwise distinct points in a model surface.
#[derive(Clone, Debug)]
pub struct PointSet {
    surface: SurfaceModel,
    points: Vec<Point>,
    separation: OnceLock<f64>,
    index: OnceLock<GridIndex>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.surface == other.surface && self.points == other.points
    }
}

impl PointSet {
    pub fn new(surface: SurfaceModel, points: Vec<Point>) -> Result<Self, PointSetError> {
        for &p in &points {
            surface.check(p)?;
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(PointSetError::Coincident(w[0]));
        }
        Ok(Self {
            surface,
            points,
            separation: OnceLock::new(),
            index: OnceLock::new(),
        })
    }

    pub fn empty(surface: SurfaceModel) -> Self {
        Self {
            surface,
            points: Vec::new(),
            separation: OnceLock::new(),
            index: OnceLock::new(),
        }
    }

    pub fn surface(&self) -> SurfaceModel {
        self.surface
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// A new set with one extra point appended.
    pub fn with_point(&self, p: Point) -> Result<Self, PointSetError> {
        let mut pts = self.points.clone();
        pts.push(p);
        Self::new(self.surface, pts)
    }

    /// The subset lying in `window`, in original order.
    pub fn restrict(&self, window: &Window) -> Result<Self, PointSetError> {
        window.validate()?;
        let pts = self
            .points
            .iter()
            .copied()
            .filter(|&p| window.contains(p))
            .collect();
        Self::new(self.surface, pts)
    }

    /// The cached separation constant, when it has been computed.
    pub fn cached_separation(&self) -> Option<f64> {
        self.separation.get().copied()
    }

    /// The separation constant `σ(Γ)`: the largest `r` for which the disks
    /// `D_r(γ)` are pairwise disjoint. Sets with fewer than two points are
    /// vacuously separated and return `R_X`.
    pub fn separation_constant(&self) -> f64 {
        *self.separation.get_or_init(|| separation_scan(self))
    }

    /// Indices of points inside the Euclidean disk, in ascending order.
    pub fn indices_within(&self, disk: &EuclideanDisk) -> Vec<usize> {
        self.index
            .get_or_init(|| GridIndex::build(&self.points))
            .query(&self.points, disk)
    }

    /// Indices of points in the `ρ`-disk `D_r(z)`.
    pub fn indices_in_rho_disk(&self, z: Point, r: f64) -> Vec<usize> {
        if self.points.is_empty() {
            return Vec::new();
        }
        let mut disk = self.surface.disk_realize_unchecked(z, r);
        // Pad so rounding in the realization never drops a boundary point;
        // the exact test below decides.
        disk.radius *= 1.0 + 1e-9;
        disk.radius += 1e-300;
        self.indices_within(&disk)
            .into_iter()
            .filter(|&i| self.surface.rho_unchecked(self.points[i], z) < r)
            .collect()
    }
}

/// Shape of a truncation window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    PlaneSquare { half_side: f64 },
    PlaneBall { radius: f64 },
    DiskBall { rho_radius: f64 },
}

/// A finite truncation of an unbounded configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    #[serde(flatten)]
    pub kind: WindowKind,
    pub anchor: Point,
}

impl Window {
    pub fn plane_square(half_side: f64, anchor: Point) -> Result<Self, PointSetError> {
        let w = Self {
            kind: WindowKind::PlaneSquare { half_side },
            anchor,
        };
        w.validate().map(|_| w)
    }

    pub fn plane_ball(radius: f64, anchor: Point) -> Result<Self, PointSetError> {
        let w = Self {
            kind: WindowKind::PlaneBall { radius },
            anchor,
        };
        w.validate().map(|_| w)
    }

    pub fn disk_ball(rho_radius: f64, anchor: Point) -> Result<Self, PointSetError> {
        let w = Self {
            kind: WindowKind::DiskBall { rho_radius },
            anchor,
        };
        w.validate().map(|_| w)
    }

    pub fn surface(&self) -> SurfaceModel {
        match self.kind {
            WindowKind::PlaneSquare { .. } | WindowKind::PlaneBall { .. } => {
                SurfaceModel::EuclideanPlane
            }
            WindowKind::DiskBall { .. } => SurfaceModel::UnitDisk,
        }
    }

    pub fn validate(&self) -> Result<(), PointSetError> {
        let extent = match self.kind {
            WindowKind::PlaneSquare { half_side } => half_side,
            WindowKind::PlaneBall { radius } => radius,
            WindowKind::DiskBall { rho_radius } => {
                if !(rho_radius < 1.0) {
                    return Err(PointSetError::InvalidWindow(format!(
                        "disk window radius {rho_radius} must be below 1"
                    )));
                }
                rho_radius
            }
        };
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(PointSetError::InvalidWindow(format!(
                "extent {extent} must be positive and finite"
            )));
        }
        if !self.surface().contains(self.anchor) {
            return Err(PointSetError::InvalidWindow(format!(
                "anchor {} outside the {} domain",
                self.anchor,
                self.surface().name()
            )));
        }
        Ok(())
    }

    pub fn contains(&self, z: Point) -> bool {
        let d = z - self.anchor;
        match self.kind {
            WindowKind::PlaneSquare { half_side } => d.re.abs() <= half_side && d.im.abs() <= half_side,
            WindowKind::PlaneBall { radius } => d.norm() <= radius,
            WindowKind::DiskBall { rho_radius } => {
                SurfaceModel::UnitDisk.contains(z)
                    && SurfaceModel::UnitDisk.rho_unchecked(self.anchor, z) < rho_radius
            }
        }
    }

    /// Whether the Euclidean disk lies inside the window.
    pub fn contains_disk(&self, disk: &EuclideanDisk) -> bool {
        let d = disk.center - self.anchor;
        match self.kind {
            WindowKind::PlaneSquare { half_side } => {
                d.re.abs() + disk.radius <= half_side && d.im.abs() + disk.radius <= half_side
            }
            WindowKind::PlaneBall { radius } => d.norm() + disk.radius <= radius,
            WindowKind::DiskBall { rho_radius } => SurfaceModel::UnitDisk
                .disk_realize_unchecked(self.anchor, rho_radius)
                .contains_disk(disk),
        }
    }
}

/// `sup{r : D_r(γ) ∩ D_r(γ′) = ∅}`.
pub fn pair_separation(
    surface: SurfaceModel,
    gamma: Point,
    gamma_prime: Point,
) -> Result<f64, PointSetError> {
    surface.check(gamma)?;
    surface.check(gamma_prime)?;
    if gamma == gamma_prime {
        return Err(PointSetError::Coincident(gamma));
    }
    Ok(match surface {
        SurfaceModel::EuclideanPlane => 0.5 * (gamma - gamma_prime).norm(),
        SurfaceModel::UnitDisk => {
            let disjoint = |r: f64| {
                surface
                    .disk_realize_unchecked(gamma, r)
                    .is_disjoint(&surface.disk_realize_unchecked(gamma_prime, r))
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if disjoint(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    })
}

fn separation_scan(set: &PointSet) -> f64 {
    let surface = set.surface;
    let pts = &set.points;
    if pts.len() < 2 {
        return surface.r_max();
    }
    // Pair separation is increasing in ρ on both surfaces, so the closest
    // pair in ρ decides. Sweep in x with the bound ρ ≥ |Δx| (plane) or
    // ρ ≥ |Δx| / 2 (disk, since |1 − āb| < 2).
    let slack = match surface {
        SurfaceModel::EuclideanPlane => 1.0,
        SurfaceModel::UnitDisk => 2.0,
    };
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].re.total_cmp(&pts[b].re));
    let mut best = f64::INFINITY;
    let mut best_pair = (order[0], order[1]);
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if pts[j].re - pts[i].re >= slack * best {
                break;
            }
            let rho = surface.rho_unchecked(pts[i], pts[j]);
            if rho < best {
                best = rho;
                best_pair = (i, j);
            }
        }
    }
    pair_separation(surface, pts[best_pair.0], pts[best_pair.1])
        .expect("points validated distinct and in domain")
}

/// `#(Γ ∩ D_r(D_ε(z)))`: points within `ρ`-distance `r` of some point of
/// the closed disk `D_ε(z)`.
pub fn sparseness_count(set: &PointSet, r: f64, eps: f64, z: Point) -> Result<usize, PointSetError> {
    let surface = set.surface;
    surface.check(z)?;
    for (name, v) in [("r", r), ("eps", eps)] {
        if !(v > 0.0 && v < surface.r_max()) {
            return Err(PointSetError::OutOfRange {
                name,
                value: v,
                range: "(0, R_X)",
            });
        }
    }
    let ball = surface.disk_realize_unchecked(z, eps);
    // Candidates: anything whose Euclidean realization of D_r could reach
    // the ball. On the disk D_r(γ) has Euclidean radius below 2r/(1 + r),
    // which is at most 1.
    let reach = match surface {
        SurfaceModel::EuclideanPlane => r,
        SurfaceModel::UnitDisk => 2.0,
    };
    let probe = EuclideanDisk {
        center: ball.center,
        radius: ball.radius + reach,
    };
    Ok(set
        .indices_within(&probe)
        .into_iter()
        .filter(|&i| min_rho_over_disk(surface, set.points[i], &ball) < r)
        .count())
}

/// Minimum of `ρ_γ` over a closed Euclidean disk inside the surface.
///
/// `ρ_γ` has no interior critical point except its zero at `γ`, so outside
/// that case the minimum sits on the boundary circle, where it is unimodal
/// in the angle.
pub(crate) fn min_rho_over_disk(surface: SurfaceModel, gamma: Point, ball: &EuclideanDisk) -> f64 {
    if (gamma - ball.center).norm() <= ball.radius {
        return 0.0;
    }
    let on_circle = |theta: f64| {
        let w = ball.center + Point::from_polar(ball.radius, theta);
        surface.rho_unchecked(gamma, w)
    };
    const SWEEP: usize = 64;
    let step = std::f64::consts::TAU / SWEEP as f64;
    let (mut best_k, mut best) = (0usize, f64::INFINITY);
    for k in 0..SWEEP {
        let v = on_circle(k as f64 * step);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    // Golden-section refinement on the bracketing arc.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (on_circle(x1), on_circle(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = on_circle(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = on_circle(x2);
        }
    }
    best.min(f1).min(f2)
}
