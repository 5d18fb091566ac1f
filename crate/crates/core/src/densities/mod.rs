//! Upper and lower densities of point sets, their profiles over finite
//! radius schedules, and sufficiency classification.
//!
//! Every density term has the form
//!
//! ```text
//! (π/2) · f(ρ_γ(z)) · e^{2ν(z)} |dρ_γ(z)|² / c_r / denom(z)
//! ```
//!
//! with `denom = e^{2ν}Δφ` on the lower side and `e^{2ν}Δφ + τ_ψ` on the
//! upper side. The thresholds for both sides sit at `1`.

mod kernel;
mod metric;
mod report;
mod weight;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::quadrature::QuadratureError;
use crate::geometry::{GeometryError, Point, SurfaceModel};
use crate::pointsets::{PointSet, PointSetError, Window, WindowKind};

pub use kernel::{kernel_moment, parse_kernel_table, DensityKernel, KernelMoments};
pub use metric::{probe_grid, CustomMetric, MetricModel, TauForm, DIFF_INEQ_TOLERANCE};
pub use report::{DensityReport, Verdict, REPORT_SCHEMA_VERSION};
pub use weight::{fd_dbar_laplacian, parse_weight_file, CustomRadialWeight, ScalarField, WeightModel};

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("kernel has no mass on [0, {r}]")]
    DegenerateKernel { r: f64 },
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("incompatible models: {0}")]
    IncompatibleModel(String),
    #[error("every grid point is edge-contaminated at r = {r}")]
    EmptyGrid { r: f64 },
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    PointSet(#[from] PointSetError),
}

/// Denominators below this are treated as a failed curvature hypothesis.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// `ξ_r(z, ζ) = f(ρ_z(ζ)) e^{2ν(ζ)} |dρ_z(ζ)|² 1_{D_r(z)}(ζ) / c_r`.
pub fn xi_r(
    surface: SurfaceModel,
    f: &DensityKernel,
    r: f64,
    z: Point,
    zeta: Point,
) -> Result<f64, DensityError> {
    f.validate_for(surface)?;
    surface.check_radius(r)?;
    let c_r = kernel_moment(f, r)?;
    let w = surface.metric_weights(z, zeta)?;
    let rho = surface.rho_unchecked(z, zeta);
    if rho >= r {
        return Ok(0.0);
    }
    Ok(f.value(rho) * w.e2nu * w.drho_sq / c_r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// The weight, metric and kernel entering a density, checked against each
/// other and against the surface.
#[derive(Clone, Debug)]
pub struct DensityModel {
    surface: SurfaceModel,
    weight: WeightModel,
    metric: MetricModel,
    kernel: DensityKernel,
}

impl DensityModel {
    pub fn new(
        surface: SurfaceModel,
        weight: WeightModel,
        metric: MetricModel,
        kernel: DensityKernel,
    ) -> Result<Self, DensityError> {
        kernel.validate_for(surface)?;
        metric.check_surface(surface)?;
        let extent = match surface {
            SurfaceModel::EuclideanPlane => 10.0,
            SurfaceModel::UnitDisk => 0.9,
        };
        let probe = probe_grid(surface, extent);
        weight.curvature_bounds(surface, &probe)?;
        metric.certify(&probe)?;
        Ok(Self {
            surface,
            weight,
            metric,
            kernel,
        })
    }

    /// Bargmann–Fock weight on the plane with the fundamental metric.
    pub fn fock(kernel: DensityKernel) -> Result<Self, DensityError> {
        Self::new(
            SurfaceModel::EuclideanPlane,
            WeightModel::ClassicalFock,
            MetricModel::FundamentalPlane,
            kernel,
        )
    }

    /// Bergman weight on the disk with the Bergman disk metric.
    pub fn bergman(kernel: DensityKernel, tau_form: TauForm) -> Result<Self, DensityError> {
        Self::new(
            SurfaceModel::UnitDisk,
            WeightModel::ClassicalBergman,
            MetricModel::bergman_disk(tau_form),
            kernel,
        )
    }

    pub fn surface(&self) -> SurfaceModel {
        self.surface
    }

    pub fn weight(&self) -> &WeightModel {
        &self.weight
    }

    pub fn metric(&self) -> &MetricModel {
        &self.metric
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    /// `e^{2ν(z)}Δφ(z)`, plus `τ_ψ(z)` on the upper side.
    pub fn denominator(&self, z: Point, side: Side) -> Result<f64, DensityError> {
        let base = self.surface.e2nu(z) * self.weight.lap_phi(z);
        let d = match side {
            Side::Lower => base,
            Side::Upper => base + self.metric.tau_psi(z),
        };
        if !(d >= MIN_DENOMINATOR) || !d.is_finite() {
            return Err(DensityError::HypothesisViolation(format!(
                "density denominator {d:e} at {z} is below {MIN_DENOMINATOR:e}"
            )));
        }
        Ok(d)
    }

    fn check_set(&self, set: &PointSet) -> Result<(), DensityError> {
        if set.surface() != self.surface {
            return Err(DensityError::IncompatibleModel(format!(
                "point set lives on the {}, model on the {}",
                set.surface().name(),
                self.surface.name()
            )));
        }
        Ok(())
    }

    /// Sum of `(π/2) ξ_r(γ, z)` over `γ ∈ D_r(z)`, before the denominator.
    fn smoothed_count(&self, set: &PointSet, moments: &KernelMoments, z: Point) -> f64 {
        let r = moments.r();
        let e2nu = self.surface.e2nu(z);
        let mut total = 0.0;
        for i in set.indices_in_rho_disk(z, r) {
            let gamma = set.points()[i];
            let w = self.surface.metric_weights_unchecked(gamma, z);
            let rho = self.surface.rho_unchecked(gamma, z);
            total += self.kernel.value(rho) * e2nu * w.drho_sq;
        }
        0.5 * std::f64::consts::PI * total / moments.c_r()
    }
}

/// One density sum at `(z, r)`.
pub fn density_sum(
    set: &PointSet,
    model: &DensityModel,
    r: f64,
    z: Point,
    side: Side,
) -> Result<f64, DensityError> {
    model.check_set(set)?;
    model.surface.check(z)?;
    model.surface.check_radius(r)?;
    let moments = KernelMoments::new(&model.kernel, r)?;
    let denom = model.denominator(z, side)?;
    Ok(model.smoothed_count(set, &moments, z) / denom)
}

/// Tuning for [`density_profile`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileOptions {
    /// Truncation window of the point set; grid points whose `D_r(z)`
    /// leaves it are flagged and excluded from the extremes.
    pub window: Option<Window>,
    pub margin_guard: f64,
    pub tail: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            window: None,
            margin_guard: 0.02,
            tail: 2,
        }
    }
}

/// Upper and lower sums on `r_schedule × grid`, with per-radius extremes and
/// a verdict.
pub fn density_profile(
    set: &PointSet,
    model: &DensityModel,
    grid: &[Point],
    r_schedule: &[f64],
    options: &ProfileOptions,
) -> Result<DensityReport, DensityError> {
    model.check_set(set)?;
    if grid.is_empty() || r_schedule.is_empty() {
        return Err(DensityError::OutOfRange {
            name: "grid or r_schedule length",
            value: 0.0,
        });
    }
    if !(0.0..1.0).contains(&options.margin_guard) {
        return Err(DensityError::OutOfRange {
            name: "margin_guard",
            value: options.margin_guard,
        });
    }
    if options.tail == 0 || options.tail > r_schedule.len() {
        return Err(DensityError::OutOfRange {
            name: "tail",
            value: options.tail as f64,
        });
    }
    if let Some(w) = &options.window {
        w.validate()?;
        if w.surface() != model.surface {
            return Err(DensityError::IncompatibleModel("window surface differs from model".into()));
        }
    }
    for &z in grid {
        model.surface.check(z)?;
    }
    let moments = r_schedule
        .iter()
        .map(|&r| {
            model.surface.check_radius(r)?;
            KernelMoments::new(&model.kernel, r)
        })
        .collect::<Result<Vec<_>, DensityError>>()?;
    let denoms = grid
        .iter()
        .map(|&z| Ok((model.denominator(z, Side::Upper)?, model.denominator(z, Side::Lower)?)))
        .collect::<Result<Vec<_>, DensityError>>()?;

    let n = grid.len();
    // Cells are independent; the indexed collect keeps the output order
    // fixed regardless of scheduling.
    let cells: Vec<(f64, f64, bool)> = (0..r_schedule.len() * n)
        .into_par_iter()
        .map(|cell| {
            let (ri, zi) = (cell / n, cell % n);
            let z = grid[zi];
            let count = model.smoothed_count(set, &moments[ri], z);
            let contaminated = match &options.window {
                Some(w) => !window_covers(w, model.surface, z, r_schedule[ri]),
                None => false,
            };
            (count / denoms[zi].0, count / denoms[zi].1, contaminated)
        })
        .collect();

    let mut upper = Vec::with_capacity(r_schedule.len());
    let mut lower = Vec::with_capacity(r_schedule.len());
    let mut edge = Vec::with_capacity(r_schedule.len());
    let mut sup_curve = Vec::with_capacity(r_schedule.len());
    let mut inf_curve = Vec::with_capacity(r_schedule.len());
    for (ri, row) in cells.chunks(n).enumerate() {
        upper.push(row.iter().map(|c| c.0).collect::<Vec<_>>());
        lower.push(row.iter().map(|c| c.1).collect::<Vec<_>>());
        edge.push(row.iter().map(|c| c.2).collect::<Vec<_>>());
        let clean = row.iter().filter(|c| !c.2);
        let (mut sup, mut inf, mut any) = (f64::NEG_INFINITY, f64::INFINITY, false);
        for c in clean {
            sup = sup.max(c.0);
            inf = inf.min(c.1);
            any = true;
        }
        if !any {
            return Err(DensityError::EmptyGrid { r: r_schedule[ri] });
        }
        sup_curve.push(sup);
        inf_curve.push(inf);
    }

    let mut report = DensityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        surface: model.surface,
        weight: model.weight.name(),
        metric: model.metric.name(),
        kernel: model.kernel.name(),
        r_schedule: r_schedule.to_vec(),
        grid: grid.to_vec(),
        upper_matrix: upper,
        lower_matrix: lower,
        edge_contaminated: edge,
        sup_curve,
        inf_curve,
        margin_guard: options.margin_guard,
        tail: options.tail,
        verdict: Verdict::Inconclusive,
        margin: 0.0,
    };
    let (verdict, margin) = classify_with_margin(&report, options.tail)?;
    report.verdict = verdict;
    report.margin = margin;
    Ok(report)
}

fn window_covers(window: &Window, surface: SurfaceModel, z: Point, r: f64) -> bool {
    if !window.contains(z) {
        return false;
    }
    window.contains_disk(&surface.disk_realize_unchecked(z, r))
}

/// Sufficiency verdict from the last `tail` radii of a report.
pub fn classify(report: &DensityReport, tail: usize) -> Result<Verdict, DensityError> {
    classify_with_margin(report, tail).map(|(v, _)| v)
}

/// The verdict together with its margin: the signed distance by which the
/// better side clears its threshold. Negative margins mean neither side
/// clears.
pub fn classify_with_margin(report: &DensityReport, tail: usize) -> Result<(Verdict, f64), DensityError> {
    let len = report.r_schedule.len();
    if tail == 0 || tail > len || report.sup_curve.len() != len || report.inf_curve.len() != len {
        return Err(DensityError::MalformedReport(format!(
            "tail {tail} incompatible with {len} radii"
        )));
    }
    let guard = report.margin_guard;
    let sup_tail = report.sup_curve[len - tail..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let inf_tail = report.inf_curve[len - tail..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let interp = 1.0 - sup_tail;
    let sampling = inf_tail - 1.0;
    let interpolating = interp > guard;
    let sampling_ok = sampling > guard;
    let verdict = match (interpolating, sampling_ok) {
        (true, false) => Verdict::InterpolationSufficient,
        (false, true) => Verdict::SamplingSufficient,
        // Both at once is a finite-grid artifact when τ_ψ > 0; refuse to pick.
        _ => Verdict::Inconclusive,
    };
    Ok((verdict, interp.max(sampling)))
}

/// `n × n` grid spanning a plane window's bounding square, keeping points
/// inside the window.
pub fn square_grid(window: &Window, n: usize) -> Result<Vec<Point>, DensityError> {
    window.validate()?;
    let half = match window.kind {
        WindowKind::PlaneSquare { half_side } => half_side,
        WindowKind::PlaneBall { radius } => radius,
        WindowKind::DiskBall { .. } => {
            return Err(DensityError::IncompatibleModel("square grids are plane only".into()))
        }
    };
    if n == 0 {
        return Err(DensityError::OutOfRange { name: "grid size", value: 0.0 });
    }
    let step = if n == 1 { 0.0 } else { 2.0 * half / (n - 1) as f64 };
    let start = if n == 1 { 0.0 } else { -half };
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let z = window.anchor + Point::new(start + step * i as f64, start + step * j as f64);
            if window.contains(z) {
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// Grid uniform in `ρ`-radius and angle about `anchor`: the anchor plus
/// `n_radial` rings of `n_angular` points up to radius `max_radius`.
pub fn polar_grid(
    surface: SurfaceModel,
    anchor: Point,
    max_radius: f64,
    n_radial: usize,
    n_angular: usize,
) -> Result<Vec<Point>, DensityError> {
    surface.check(anchor)?;
    surface.check_radius(max_radius)?;
    if n_angular == 0 {
        return Err(DensityError::OutOfRange { name: "angular count", value: 0.0 });
    }
    let mut out = vec![anchor];
    for k in 1..=n_radial {
        let t = max_radius * k as f64 / n_radial as f64;
        for j in 0..n_angular {
            let theta = std::f64::consts::TAU * j as f64 / n_angular as f64;
            out.push(surface.from_center(anchor, Point::from_polar(t, theta)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quadrature::QuadratureSpec;
    use crate::pointsets::generate_square_lattice;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn origin() -> Point {
        Point::new(0.0, 0.0)
    }

    #[test]
    fn xi_examples() {
        let plane = SurfaceModel::EuclideanPlane;
        let v = xi_r(plane, &DensityKernel::Constant, 1.0, origin(), Point::new(0.5, 0.0)).unwrap();
        assert!((v - 4.0 / PI).abs() < 1e-15);
        assert_eq!(
            xi_r(plane, &DensityKernel::Exponential, 1.0, origin(), Point::new(1.0, 0.0)).unwrap(),
            0.0
        );
        let disk = SurfaceModel::UnitDisk;
        let v = xi_r(disk, &DensityKernel::Constant, 0.5, origin(), Point::new(0.25, 0.0)).unwrap();
        let c_r = PI * 0.25;
        assert!((v - 4.0 * (1.0 - 0.0625f64).powi(2) / c_r).abs() < 1e-14);
    }

    #[test]
    fn xi_normalization() {
        // ∫ ξ_r(z, ·) e^{−2ν} dm = 1.
        let q = QuadratureSpec::default();
        let cases = [
            (SurfaceModel::EuclideanPlane, DensityKernel::Constant, 1.3, Point::new(0.4, -2.0)),
            (SurfaceModel::EuclideanPlane, DensityKernel::Exponential, 2.0, origin()),
            (SurfaceModel::UnitDisk, DensityKernel::Constant, 0.6, Point::new(0.5, 0.2)),
            (SurfaceModel::UnitDisk, DensityKernel::DiskLog, 0.9, Point::new(-0.3, 0.1)),
        ];
        for (surface, f, r, z) in cases {
            let h = |zeta: Point| {
                xi_r(surface, &f, r * (1.0 - 1e-15), z, zeta).unwrap_or(0.0) / surface.e2nu(zeta)
            };
            // dm_ζ = dm_u / |dρ_z(ζ)|² in centered coordinates.
            let total = crate::geometry::quadrature::polar_integrate(
                |t, th| {
                    let zeta = surface.from_center(z, Point::from_polar(t, th));
                    let w = surface.metric_weights_unchecked(z, zeta);
                    h(zeta) / w.drho_sq
                },
                r,
                &f.breakpoints(),
                &[],
                &q,
            )
            .unwrap()
            .value;
            assert!((total - 1.0).abs() < 1e-6, "{surface:?} {f:?}: {total}");
        }
    }

    #[test]
    fn plane_fock_terms_are_inverse_square() {
        let model = DensityModel::fock(DensityKernel::Constant).unwrap();
        let set = PointSet::new(SurfaceModel::EuclideanPlane, vec![Point::new(0.3, 0.0)]).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let v = density_sum(&set, &model, 2.0, origin(), side).unwrap();
            assert!((v - 0.25).abs() < 1e-15);
        }
        let empty = PointSet::empty(SurfaceModel::EuclideanPlane);
        assert_eq!(density_sum(&empty, &model, 2.0, origin(), Side::Lower).unwrap(), 0.0);
    }

    #[test]
    fn disk_lower_terms() {
        let model = DensityModel::bergman(DensityKernel::Constant, TauForm::Derived).unwrap();
        let gamma = Point::new(0.2, 0.3);
        let z = Point::new(-0.1, 0.25);
        let set = PointSet::new(SurfaceModel::UnitDisk, vec![gamma]).unwrap();
        let r = 0.7;
        let rho = SurfaceModel::UnitDisk.rho_unchecked(z, gamma);
        let v = density_sum(&set, &model, r, z, Side::Lower).unwrap();
        assert!((v - (1.0 - rho * rho).powi(2) / (r * r)).abs() < 1e-13);
        let u = density_sum(&set, &model, r, z, Side::Upper).unwrap();
        let tau = 2.0 * (1.0 - z.norm_sqr());
        assert!((u - v * 2.0 / (2.0 + tau)).abs() < 1e-13);
    }

    #[test]
    fn incompatible_models_rejected() {
        assert!(DensityModel::new(
            SurfaceModel::EuclideanPlane,
            WeightModel::ClassicalBergman,
            MetricModel::FundamentalPlane,
            DensityKernel::Constant
        )
        .is_err());
        assert!(DensityModel::new(
            SurfaceModel::UnitDisk,
            WeightModel::ClassicalBergman,
            MetricModel::FundamentalPlane,
            DensityKernel::Constant
        )
        .is_err());
        let model = DensityModel::fock(DensityKernel::Constant).unwrap();
        let disk_set = PointSet::empty(SurfaceModel::UnitDisk);
        assert!(matches!(
            density_sum(&disk_set, &model, 1.0, origin(), Side::Lower),
            Err(DensityError::IncompatibleModel(_))
        ));
    }

    #[test]
    fn denominator_guard() {
        let weight = WeightModel::polynomial(vec![0.0, 1e-14], vec![1e-14], &[]).unwrap();
        let model = DensityModel {
            surface: SurfaceModel::EuclideanPlane,
            weight,
            metric: MetricModel::FundamentalPlane,
            kernel: DensityKernel::Constant,
        };
        let set = PointSet::empty(SurfaceModel::EuclideanPlane);
        assert!(matches!(
            density_sum(&set, &model, 1.0, origin(), Side::Lower),
            Err(DensityError::HypothesisViolation(_))
        ));
    }

    fn lattice_report(s: f64, half: f64, r_schedule: &[f64]) -> DensityReport {
        let window = Window::plane_square(half, origin()).unwrap();
        let set = generate_square_lattice(s, &window).unwrap();
        let model = DensityModel::fock(DensityKernel::Constant).unwrap();
        let inner = Window::plane_square(half * 0.3, origin()).unwrap();
        let grid = square_grid(&inner, 7).unwrap();
        let opts = ProfileOptions { window: Some(window), ..ProfileOptions::default() };
        density_profile(&set, &model, &grid, r_schedule, &opts).unwrap()
    }

    #[test]
    fn lattice_verdicts() {
        let dense = lattice_report(0.8 * PI.sqrt(), 40.0, &[10.0, 12.0, 14.0]);
        assert_eq!(dense.verdict, Verdict::SamplingSufficient);
        assert!(dense.margin > 0.4);
        let sparse = lattice_report(1.2 * PI.sqrt(), 40.0, &[10.0, 12.0, 14.0]);
        assert_eq!(sparse.verdict, Verdict::InterpolationSufficient);
        assert!(sparse.margin > 0.2);
    }

    #[test]
    fn single_point_inf_vanishes() {
        let set = PointSet::new(SurfaceModel::EuclideanPlane, vec![origin()]).unwrap();
        let model = DensityModel::fock(DensityKernel::Exponential).unwrap();
        let grid = square_grid(&Window::plane_square(5.0, origin()).unwrap(), 5).unwrap();
        let rep = density_profile(&set, &model, &grid, &[2.0, 3.0], &ProfileOptions::default()).unwrap();
        assert_eq!(rep.inf_curve, vec![0.0, 0.0]);
        assert_eq!(rep.verdict, Verdict::InterpolationSufficient);
    }

    #[test]
    fn straddling_margins_are_inconclusive() {
        let mut rep = lattice_report(PI.sqrt(), 30.0, &[6.0, 8.0]);
        rep.sup_curve = vec![1.1, 1.1];
        rep.inf_curve = vec![0.9, 0.9];
        assert_eq!(classify(&rep, 2).unwrap(), Verdict::Inconclusive);
        assert!(classify(&rep, 3).is_err());
        assert!(classify(&rep, 0).is_err());
    }

    #[test]
    fn edge_contamination_excludes_and_can_empty() {
        let window = Window::plane_square(5.0, origin()).unwrap();
        let set = generate_square_lattice(1.0, &window).unwrap();
        let model = DensityModel::fock(DensityKernel::Constant).unwrap();
        let grid = vec![origin(), Point::new(4.5, 0.0)];
        let opts = ProfileOptions { window: Some(window), tail: 1, ..ProfileOptions::default() };
        let rep = density_profile(&set, &model, &grid, &[2.0], &opts).unwrap();
        assert_eq!(rep.edge_contaminated, vec![vec![false, true]]);
        assert_eq!(rep.inf_curve[0], rep.lower_matrix[0][0]);
        assert!(matches!(
            density_profile(&set, &model, &grid, &[6.0], &opts),
            Err(DensityError::EmptyGrid { .. })
        ));
    }

    #[test]
    fn disk_profile_reproduces_finite_sum() {
        let pts = vec![Point::new(0.1, 0.0), Point::new(-0.4, 0.3), Point::new(0.0, -0.7)];
        let set = PointSet::new(SurfaceModel::UnitDisk, pts.clone()).unwrap();
        let model = DensityModel::bergman(DensityKernel::Constant, TauForm::Derived).unwrap();
        let grid = polar_grid(SurfaceModel::UnitDisk, origin(), 0.95, 6, 12).unwrap();
        let r = 0.999_999;
        let rep = density_profile(&set, &model, &grid, &[r], &ProfileOptions { tail: 1, ..Default::default() })
            .unwrap();
        let expected = grid
            .iter()
            .map(|&z| {
                pts.iter()
                    .map(|&g| (1.0 - SurfaceModel::UnitDisk.rho_unchecked(z, g).powi(2)).powi(2))
                    .sum::<f64>()
                    / (r * r)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let sup_lower = rep.lower_matrix[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((sup_lower - expected).abs() < 1e-12);
    }

    #[test]
    fn grids() {
        let g = square_grid(&Window::plane_ball(1.0, Point::new(2.0, 0.0)).unwrap(), 3).unwrap();
        assert_eq!(g.len(), 5);
        let p = polar_grid(SurfaceModel::UnitDisk, origin(), 0.9, 3, 4).unwrap();
        assert_eq!(p.len(), 13);
        assert!((p[12].norm() - 0.9).abs() < 1e-15);
        assert!(square_grid(&Window::disk_ball(0.5, origin()).unwrap(), 3).is_err());
    }

    #[test]
    fn profile_is_thread_count_independent() {
        let window = Window::plane_square(12.0, origin()).unwrap();
        let set = generate_square_lattice(1.3, &window).unwrap();
        let model = DensityModel::fock(DensityKernel::Exponential).unwrap();
        let grid = square_grid(&Window::plane_square(4.0, origin()).unwrap(), 9).unwrap();
        let opts = ProfileOptions { window: Some(window), ..Default::default() };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| density_profile(&set, &model, &grid, &[3.0, 5.0, 7.0], &opts).unwrap())
        };
        assert_eq!(run(1).to_json(), run(4).to_json());
    }

    fn arb_points(surface: SurfaceModel) -> impl Strategy<Value = Vec<Point>> {
        let lim = match surface {
            SurfaceModel::EuclideanPlane => 3.0,
            SurfaceModel::UnitDisk => 0.65,
        };
        prop::collection::vec((-lim..lim, -lim..lim), 1..12)
            .prop_map(|v| v.into_iter().map(|(a, b)| Point::new(a, b)).collect())
    }

    fn dedup(mut v: Vec<Point>) -> Vec<Point> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v.dedup();
        v
    }

    proptest! {
        #[test]
        fn tabulated_scaling_invariance(scale in 0.01f64..100.0, pts in arb_points(SurfaceModel::EuclideanPlane),
                                        zr in -2.0f64..2.0, zi in -2.0f64..2.0, r in 0.5f64..3.0) {
            let knots = vec![0.0, 0.7, 1.5, 4.0];
            let values = vec![1.0, 0.3, 2.0, 0.5];
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            let a = DensityModel::fock(DensityKernel::tabulated(knots.clone(), values).unwrap()).unwrap();
            let b = DensityModel::fock(DensityKernel::tabulated(knots, scaled).unwrap()).unwrap();
            let set = PointSet::new(SurfaceModel::EuclideanPlane, dedup(pts)).unwrap();
            let z = Point::new(zr, zi);
            for side in [Side::Upper, Side::Lower] {
                let va = density_sum(&set, &a, r, z, side).unwrap();
                let vb = density_sum(&set, &b, r, z, side).unwrap();
                prop_assert!((va - vb).abs() <= 1e-12 * va.abs().max(1.0));
            }
        }

        #[test]
        fn adding_a_point_never_decreases(pts in arb_points(SurfaceModel::UnitDisk), extra in (-0.6f64..0.6, -0.6f64..0.6),
                                          zr in -0.5f64..0.5, zi in -0.5f64..0.5, r in 0.1f64..0.95) {
            let pts = dedup(pts);
            let extra = Point::new(extra.0, extra.1);
            prop_assume!(!pts.contains(&extra));
            let model = DensityModel::bergman(DensityKernel::Constant, TauForm::Derived).unwrap();
            let set = PointSet::new(SurfaceModel::UnitDisk, pts).unwrap();
            let bigger = set.with_point(extra).unwrap();
            let z = Point::new(zr, zi);
            for side in [Side::Upper, Side::Lower] {
                prop_assert!(density_sum(&bigger, &model, r, z, side).unwrap() >= density_sum(&set, &model, r, z, side).unwrap());
            }
        }

        #[test]
        fn upper_never_exceeds_lower(pts in arb_points(SurfaceModel::UnitDisk), zr in -0.6f64..0.6, zi in -0.6f64..0.6,
                                     r in 0.1f64..0.95, inline in any::<bool>()) {
            let form = if inline { TauForm::Inline } else { TauForm::Derived };
            let model = DensityModel::bergman(DensityKernel::Exponential, form).unwrap();
            let set = PointSet::new(SurfaceModel::UnitDisk, dedup(pts)).unwrap();
            let z = Point::new(zr, zi);
            prop_assert!(density_sum(&set, &model, r, z, Side::Upper).unwrap() <= density_sum(&set, &model, r, z, Side::Lower).unwrap());
        }
    }
}
