//! Adaptive Gauss–Kronrod quadrature in one dimension and nested polar
//! quadrature over disks.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerances for every adaptive integral in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Maximum number of interval bisections per one-dimensional integral.
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-11,
            abs_tolerance: 1e-13,
            max_refinements: 400,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(&'static str),
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    NotConverged { estimate: f64, error: f64 },
}

impl QuadratureSpec {
    pub fn new(
        rel_tolerance: f64,
        abs_tolerance: f64,
        max_refinements: usize,
    ) -> Result<Self, QuadratureError> {
        let spec = Self {
            rel_tolerance,
            abs_tolerance,
            max_refinements,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tolerance > 0.0) || !(self.abs_tolerance > 0.0) {
            return Err(QuadratureError::InvalidSpec("tolerances must be positive"));
        }
        if self.max_refinements < 1 {
            return Err(QuadratureError::InvalidSpec("max_refinements must be at least 1"));
        }
        Ok(())
    }

    /// Spec used for the inner integral of a nested rule: tighter so that
    /// inner errors do not dominate the outer estimate.
    pub fn inner(&self) -> Self {
        Self {
            rel_tolerance: self.rel_tolerance * 0.1,
            abs_tolerance: self.abs_tolerance * 0.1,
            max_refinements: self.max_refinements,
        }
    }
}

/// Result of a converged integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Kronrod 15-point abscissae and weights; the odd-indexed nodes carry the
// embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> Result<f64, QuadratureError>>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<(f64, f64), QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// One fixed 15-point Kronrod rule on `[a, b]`.
pub(crate) fn kronrod15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    gk15(&mut |x| Ok(f(x)), a, b).map(|(v, _)| v).unwrap_or(f64::NAN)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// `breaks` are interior points where the integrand is known to lose
/// smoothness; they seed the initial partition. Points outside `(a, b)`
/// are ignored.
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> Result<f64, QuadratureError>,
{
    spec.validate()?;
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut nodes = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    nodes.extend(interior);
    nodes.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in nodes.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1])?;
        total += value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let mut refinements = 0;
    while total_err > spec.abs_tolerance.max(spec.rel_tolerance * total.abs()) {
        if refinements >= spec.max_refinements {
            return Err(QuadratureError::NotConverged {
                estimate: sign * total,
                error: total_err,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval at machine resolution; nothing left to gain.
            heap.push(worst);
            return Err(QuadratureError::NotConverged {
                estimate: sign * total,
                error: total_err,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        refinements += 1;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value: sign * value,
        error,
    })
}

/// Convenience wrapper for infallible integrands.
pub fn integrate_plain<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| Ok(f(x)), a, b, breaks, spec)
}

/// Nested polar integral `∫_0^R ∫_0^{2π} g(t, θ) t dθ dt`.
///
/// `radial_breaks` and `angular_breaks` mark known singular radii and
/// angles (angles are reduced into `[0, 2π)`).
pub fn polar_integrate<G>(
    g: G,
    radius: f64,
    radial_breaks: &[f64],
    angular_breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate, QuadratureError>
where
    G: Fn(f64, f64) -> f64,
{
    let tau = std::f64::consts::TAU;
    let mut theta_breaks: Vec<f64> = angular_breaks
        .iter()
        .map(|a| a.rem_euclid(tau))
        .collect();
    // Quarter-turn seeds keep the first Kronrod pass from aliasing
    // oscillatory angular integrands.
    theta_breaks.extend([0.25 * tau, 0.5 * tau, 0.75 * tau]);
    let inner_spec = spec.inner();
    integrate(
        |t| {
            let inner = integrate_plain(|theta| g(t, theta), 0.0, tau, &theta_breaks, &inner_spec)?;
            Ok(inner.value * t)
        },
        0.0,
        radius,
        radial_breaks,
        spec,
    )
}
