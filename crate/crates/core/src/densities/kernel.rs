//! The radial kernel family `f` and its moments.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::DensityError;
use crate::geometry::quadrature::{self, QuadratureError, QuadratureSpec};
use crate::geometry::{RadialKernel, SurfaceModel};

/// A nonnegative, locally integrable `f : [0, R_X) → [0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DensityKernel {
    /// `f ≡ 1`
    Constant,
    /// `f(t) = e^{-t}`
    Exponential,
    /// `f = 1_{[0, a]}`
    Indicator { a: f64 },
    /// `f(t) = −log t / (1 − t²)² · 1_{[1/2, 1)}(t)`; disk only.
    DiskLog,
    /// Piecewise-linear through `(knots[i], values[i])`, zero outside the
    /// knot range.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

impl DensityKernel {
    pub fn indicator(a: f64) -> Result<Self, DensityError> {
        let k = DensityKernel::Indicator { a };
        k.validate()?;
        Ok(k)
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, DensityError> {
        let k = DensityKernel::Tabulated { knots, values };
        k.validate()?;
        Ok(k)
    }

    pub fn name(&self) -> String {
        match self {
            DensityKernel::Constant => "constant".into(),
            DensityKernel::Exponential => "exponential".into(),
            DensityKernel::Indicator { a } => format!("indicator:{a}"),
            DensityKernel::DiskLog => "disklog".into(),
            DensityKernel::Tabulated { knots, .. } => format!("table({} knots)", knots.len()),
        }
    }

    /// Structural checks independent of the surface.
    pub fn validate(&self) -> Result<(), DensityError> {
        match self {
            DensityKernel::Indicator { a } if !(*a > 0.0) || !a.is_finite() => Err(
                DensityError::InvalidKernel(format!("indicator cutoff {a} must be positive")),
            ),
            DensityKernel::Tabulated { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(DensityError::InvalidKernel(
                        "a table needs at least two knots and one value per knot".into(),
                    ));
                }
                if knots.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(DensityError::InvalidKernel("non-finite table entry".into()));
                }
                if knots[0] < 0.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(DensityError::InvalidKernel(
                        "knots must be nonnegative and strictly increasing".into(),
                    ));
                }
                if values.iter().any(|&v| v < 0.0) {
                    return Err(DensityError::InvalidKernel("negative table value".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Checks against `R_X`.
    pub fn validate_for(&self, surface: SurfaceModel) -> Result<(), DensityError> {
        self.validate()?;
        match self {
            DensityKernel::Indicator { a } if *a >= surface.r_max() => Err(
                DensityError::InvalidKernel(format!("indicator cutoff {a} must be below R_X")),
            ),
            DensityKernel::DiskLog if surface != SurfaceModel::UnitDisk => Err(
                DensityError::InvalidKernel("disklog kernel requires the unit disk".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            DensityKernel::Constant => 1.0,
            DensityKernel::Exponential => (-t).exp(),
            DensityKernel::Indicator { a } => {
                if t <= *a {
                    1.0
                } else {
                    0.0
                }
            }
            DensityKernel::DiskLog => {
                if (0.5..1.0).contains(&t) {
                    let q = 1.0 - t * t;
                    -t.ln() / (q * q)
                } else {
                    0.0
                }
            }
            DensityKernel::Tabulated { knots, values } => {
                if t < knots[0] || t > knots[knots.len() - 1] {
                    return 0.0;
                }
                let k = knots.partition_point(|&x| x <= t).clamp(1, knots.len() - 1);
                let (x0, x1) = (knots[k - 1], knots[k]);
                let (y0, y1) = (values[k - 1], values[k]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    /// Radii where `f` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DensityKernel::Indicator { a } => vec![*a],
            DensityKernel::DiskLog => vec![0.5],
            DensityKernel::Tabulated { knots, .. } => knots.clone(),
            _ => Vec::new(),
        }
    }

    /// `∫_0^x t f(t) dt`.
    pub fn mass(&self, x: f64, q: &QuadratureSpec) -> Result<f64, QuadratureError> {
        if !(x > 0.0) {
            return Ok(0.0);
        }
        Ok(match self {
            DensityKernel::Constant => 0.5 * x * x,
            DensityKernel::Indicator { a } => {
                let m = x.min(*a);
                0.5 * m * m
            }
            DensityKernel::Exponential => 1.0 - (1.0 + x) * (-x).exp(),
            DensityKernel::Tabulated { knots, values } => {
                tabulated_integral(knots, values, 0.0, x, |t0, t1, a, b| {
                    // ∫ t (a + b t) dt
                    a * (t1 * t1 - t0 * t0) / 2.0 + b * (t1.powi(3) - t0.powi(3)) / 3.0
                })
            }
            DensityKernel::DiskLog => {
                let hi = x.min(1.0);
                if hi <= 0.5 {
                    0.0
                } else {
                    quadrature::integrate_plain(|t| t * self.value(t), 0.5, hi, &[], q)?.value
                }
            }
        })
    }

    /// `∫_a^b t f(t) log t dt` for `0 ≤ a ≤ b`.
    pub fn log_mass(&self, a: f64, b: f64, q: &QuadratureSpec) -> Result<f64, QuadratureError> {
        if !(b > a) {
            return Ok(0.0);
        }
        let prim = |t: f64| {
            // ∫ t log t dt = t²/2 log t − t²/4, continuous at 0
            if t > 0.0 {
                0.5 * t * t * t.ln() - 0.25 * t * t
            } else {
                0.0
            }
        };
        Ok(match self {
            DensityKernel::Constant => prim(b) - prim(a),
            DensityKernel::Indicator { a: cut } => prim(b.min(*cut)) - prim(a.min(*cut)),
            DensityKernel::Tabulated { knots, values } => {
                tabulated_integral(knots, values, a, b, |t0, t1, c0, c1| {
                    // ∫ t^n log t = t^{n+1} (log t / (n+1) − 1/(n+1)²)
                    let p = |t: f64, n: f64| {
                        if t > 0.0 {
                            t.powf(n + 1.0) * (t.ln() / (n + 1.0) - 1.0 / ((n + 1.0) * (n + 1.0)))
                        } else {
                            0.0
                        }
                    };
                    c0 * (p(t1, 1.0) - p(t0, 1.0)) + c1 * (p(t1, 2.0) - p(t0, 2.0))
                })
            }
            _ => {
                let breaks = self.breakpoints();
                quadrature::integrate_plain(
                    |t| if t > 0.0 { t * self.value(t) * t.ln() } else { 0.0 },
                    a,
                    b,
                    &breaks,
                    q,
                )?
                .value
            }
        })
    }
}

/// Integrates a piecewise-linear table over `[lo, hi]`; `piece(t0, t1, a, b)`
/// integrates the weight against `a + b t` on `[t0, t1]`.
fn tabulated_integral<P>(knots: &[f64], values: &[f64], lo: f64, hi: f64, piece: P) -> f64
where
    P: Fn(f64, f64, f64, f64) -> f64,
{
    let mut total = 0.0;
    for k in 1..knots.len() {
        let (x0, x1) = (knots[k - 1], knots[k]);
        let t0 = x0.max(lo);
        let t1 = x1.min(hi);
        if t1 <= t0 {
            continue;
        }
        let slope = (values[k] - values[k - 1]) / (x1 - x0);
        let intercept = values[k - 1] - slope * x0;
        total += piece(t0, t1, intercept, slope);
    }
    total
}

/// Parses a kernel table: one `t f(t)` pair per line, `#` comments.
pub fn parse_kernel_table(text: &str) -> Result<DensityKernel, DensityError> {
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(DensityError::InvalidKernel(format!(
                "line {}: expected `t f`",
                n + 1
            )));
        }
        let num = |tok: &str| {
            tok.parse::<f64>().map_err(|_| {
                DensityError::InvalidKernel(format!("line {}: bad number {tok:?}", n + 1))
            })
        };
        knots.push(num(fields[0])?);
        values.push(num(fields[1])?);
    }
    DensityKernel::tabulated(knots, values)
}

/// `c_r = 2π ∫_0^r t f(t) dt`.
pub fn kernel_moment(f: &DensityKernel, r: f64) -> Result<f64, DensityError> {
    f.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(DensityError::OutOfRange {
            name: "r",
            value: r,
        });
    }
    let c = TAU * f.mass(r, &QuadratureSpec::default())?;
    if !(c > 0.0) {
        return Err(DensityError::DegenerateKernel { r });
    }
    Ok(c)
}

impl RadialKernel for DensityKernel {
    fn value(&self, t: f64) -> f64 {
        DensityKernel::value(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        DensityKernel::breakpoints(self)
    }

    fn moment(&self, r: f64) -> Result<f64, QuadratureError> {
        Ok(TAU * self.mass(r, &QuadratureSpec::default())?)
    }
}

/// Cumulative `∫_0^x t f` and `∫_0^x t f log t` on `[0, r]`, tabulated on a
/// graded panel mesh so that repeated evaluation costs one fixed Kronrod
/// rule instead of an adaptive integral.
#[derive(Clone, Debug)]
pub struct KernelMoments {
    kernel: DensityKernel,
    r: f64,
    c_r: f64,
    closed_form: bool,
    panels: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_log: Vec<f64>,
}

impl KernelMoments {
    pub fn new(kernel: &DensityKernel, r: f64) -> Result<Self, DensityError> {
        let c_r = kernel_moment(kernel, r)?;
        let closed_form = matches!(
            kernel,
            DensityKernel::Constant | DensityKernel::Indicator { .. } | DensityKernel::Tabulated { .. }
        );
        let mut me = Self {
            kernel: kernel.clone(),
            r,
            c_r,
            closed_form,
            panels: Vec::new(),
            cum_mass: Vec::new(),
            cum_log: Vec::new(),
        };
        if !closed_form {
            me.build_table()?;
        }
        Ok(me)
    }

    fn build_table(&mut self) -> Result<(), DensityError> {
        let r = self.r;
        let mut cuts = vec![0.0, r];
        cuts.extend(self.kernel.breakpoints().into_iter().filter(|&b| b > 0.0 && b < r));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut nodes = Vec::new();
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let len = q - p;
            // Geometric grading toward both ends of each smooth piece.
            for k in (1..=40).rev() {
                nodes.push(p + len * 0.5f64.powi(k + 3));
            }
            for k in 0..=16 {
                nodes.push(p + len * (0.0625 + 0.875 * k as f64 / 16.0));
            }
            for k in 4..=43 {
                nodes.push(q - len * 0.5f64.powi(k));
            }
            nodes.push(p);
            nodes.push(q);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let f = &self.kernel;
        let mut cum_mass = vec![0.0];
        let mut cum_log = vec![0.0];
        for w in nodes.windows(2) {
            let m = fixed_kronrod(|t| t * f.value(t), w[0], w[1]);
            let l = fixed_kronrod(|t| if t > 0.0 { t * f.value(t) * t.ln() } else { 0.0 }, w[0], w[1]);
            cum_mass.push(cum_mass.last().unwrap() + m);
            cum_log.push(cum_log.last().unwrap() + l);
        }
        self.panels = nodes;
        self.cum_mass = cum_mass;
        self.cum_log = cum_log;
        Ok(())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    fn cumulative(&self, x: f64, log: bool) -> f64 {
        let x = x.clamp(0.0, self.r);
        let k = self.panels.partition_point(|&p| p <= x).clamp(1, self.panels.len() - 1) - 1;
        let base = if log { self.cum_log[k] } else { self.cum_mass[k] };
        let f = &self.kernel;
        let a = self.panels[k];
        if x <= a {
            return base;
        }
        base + if log {
            fixed_kronrod(|t| if t > 0.0 { t * f.value(t) * t.ln() } else { 0.0 }, a, x)
        } else {
            fixed_kronrod(|t| t * f.value(t), a, x)
        }
    }

    /// `∫_0^x t f(t) dt` for `x ≤ r`.
    pub fn mass(&self, x: f64) -> f64 {
        if self.closed_form {
            self.kernel
                .mass(x.min(self.r), &QuadratureSpec::default())
                .expect("closed form")
        } else {
            self.cumulative(x, false)
        }
    }

    /// `∫_x^r t f(t) log t dt`.
    pub fn log_mass_to_r(&self, x: f64) -> f64 {
        if self.closed_form {
            self.kernel
                .log_mass(x, self.r, &QuadratureSpec::default())
                .expect("closed form")
        } else {
            self.cum_log[self.cum_log.len() - 1] - self.cumulative(x, true)
        }
    }
}

fn fixed_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    quadrature::kronrod15(|t| f(t), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn moment_examples() {
        assert!((kernel_moment(&DensityKernel::Constant, 2.0).unwrap() - 4.0 * PI).abs() < 1e-13);
        let ind = DensityKernel::indicator(0.5).unwrap();
        assert!((kernel_moment(&ind, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        let e = kernel_moment(&DensityKernel::Exponential, 1.0).unwrap();
        assert!((e - TAU * (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-14);
        // closed form against adaptive quadrature
        let q = QuadratureSpec::default();
        let quad = quadrature::integrate_plain(|t| t * (-t).exp(), 0.0, 1.0, &[], &q).unwrap();
        assert!((TAU * quad.value - e).abs() < 1e-10);
        assert!((e - 1.66028).abs() < 1e-5);
    }

    #[test]
    fn degenerate_moment() {
        let table = DensityKernel::tabulated(vec![2.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            kernel_moment(&table, 1.0),
            Err(DensityError::DegenerateKernel { .. })
        ));
        assert!(kernel_moment(&DensityKernel::DiskLog, 0.4).is_err());
    }

    #[test]
    fn disklog_mass_matches_antiderivative() {
        // With u = t², ∫ t f dt = −¼ [u log u / (1 − u) + log(1 − u)].
        let g = |u: f64| -0.25 * (u * u.ln() / (1.0 - u) + (1.0 - u).ln());
        let q = QuadratureSpec::default();
        for x in [0.6, 0.8, 0.95] {
            let expected = g(x * x) - g(0.25);
            let got = DensityKernel::DiskLog.mass(x, &q).unwrap();
            assert!((got - expected).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn tabulated_closed_forms_match_quadrature() {
        let k = DensityKernel::tabulated(vec![0.0, 0.3, 1.0, 2.5], vec![2.0, 0.5, 1.5, 0.0]).unwrap();
        let q = QuadratureSpec::default();
        let bp = k.breakpoints();
        for &(a, b) in &[(0.0, 0.2), (0.1, 1.7), (0.0, 3.0), (0.5, 2.5)] {
            let m = quadrature::integrate_plain(|t| t * k.value(t), a, b, &bp, &q).unwrap();
            assert!((k.mass(b, &q).unwrap() - k.mass(a, &q).unwrap() - m.value).abs() < 1e-12);
            let l = quadrature::integrate_plain(
                |t| if t > 0.0 { t * k.value(t) * t.ln() } else { 0.0 },
                a,
                b,
                &bp,
                &q,
            )
            .unwrap();
            assert!((k.log_mass(a, b, &q).unwrap() - l.value).abs() < 1e-11);
        }
    }

    #[test]
    fn kernel_table_parsing() {
        let k = parse_kernel_table("# t f\n0 1\n0.5 2 # peak\n\n1 0\n").unwrap();
        assert_eq!(
            k,
            DensityKernel::Tabulated { knots: vec![0.0, 0.5, 1.0], values: vec![1.0, 2.0, 0.0] }
        );
        for bad in ["", "0 1\n", "0 1 2\n1 1\n", "0 x\n1 1\n", "1 1\n0 1\n", "0 nan\n1 1\n"] {
            assert!(parse_kernel_table(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn kernel_table_validation() {
        assert!(DensityKernel::tabulated(vec![0.0], vec![1.0]).is_err());
        assert!(DensityKernel::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DensityKernel::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(DensityKernel::tabulated(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DensityKernel::indicator(0.0).is_err());
        let ind = DensityKernel::indicator(1.5).unwrap();
        assert!(ind.validate_for(SurfaceModel::UnitDisk).is_err());
        assert!(ind.validate_for(SurfaceModel::EuclideanPlane).is_ok());
        assert!(DensityKernel::DiskLog.validate_for(SurfaceModel::EuclideanPlane).is_err());
    }

    #[test]
    fn moment_tables_match_adaptive_integrals() {
        let q = QuadratureSpec::default();
        for (kernel, r) in [(DensityKernel::Exponential, 3.0), (DensityKernel::DiskLog, 0.9)] {
            let table = KernelMoments::new(&kernel, r).unwrap();
            for x in [0.0, 1e-6, 0.3, 0.55, 0.7, r * 0.999, r] {
                let m = kernel.mass(x, &q).unwrap();
                assert!((table.mass(x) - m).abs() < 1e-12, "{kernel:?} mass {x}");
                let l = kernel.log_mass(x, r, &q).unwrap();
                assert!((table.log_mass_to_r(x) - l).abs() < 1e-11, "{kernel:?} log {x}");
            }
        }
    }
}
