//! Weights `φ` with their Laplacians `Δφ = ∂²φ/∂z∂z̄`.

use std::fmt;
use std::sync::Arc;

use super::DensityError;
use crate::geometry::{Point, SurfaceModel};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// `∂∂̄ g` at `z` by the five-point stencil (a quarter of the Euclidean
/// Laplacian).
pub fn fd_dbar_laplacian<F: Fn(Point) -> f64>(g: F, z: Point, h: f64) -> f64 {
    let c = g(z);
    let sum = g(z + Point::new(h, 0.0))
        + g(z - Point::new(h, 0.0))
        + g(z + Point::new(0.0, h))
        + g(z - Point::new(0.0, h));
    (sum - 4.0 * c) / (4.0 * h * h)
}

#[derive(Clone)]
pub struct CustomRadialWeight {
    phi: ScalarField,
    lap_phi: ScalarField,
    label: String,
}

impl fmt::Debug for CustomRadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRadialWeight")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum WeightModel {
    /// `φ = |z|²/2`
    ClassicalFock,
    /// `φ = −½ log(1 − |z|²)`
    ClassicalBergman,
    CustomRadial(CustomRadialWeight),
}

impl WeightModel {
    /// A user-supplied weight. The Laplacian is checked against a
    /// finite-difference Laplacian of `phi` on `probe` before acceptance.
    pub fn custom_radial(
        label: impl Into<String>,
        phi: ScalarField,
        lap_phi: ScalarField,
        probe: &[Point],
    ) -> Result<Self, DensityError> {
        let h = 1e-3;
        for &z in probe {
            let fd = fd_dbar_laplacian(|w| phi(w), z, h);
            let given = lap_phi(z);
            if !given.is_finite() || (fd - given).abs() > 1e-4 * given.abs().max(1e-8) {
                return Err(DensityError::HypothesisViolation(format!(
                    "custom Δφ at {z} is {given}, finite differences give {fd}"
                )));
            }
        }
        Ok(WeightModel::CustomRadial(CustomRadialWeight {
            phi,
            lap_phi,
            label: label.into(),
        }))
    }

    /// `φ(z) = Σ a_k |z|^{2k}` with the stated `Δφ = Σ b_k |z|^{2k}`.
    pub fn polynomial(
        phi_coeffs: Vec<f64>,
        lap_coeffs: Vec<f64>,
        probe: &[Point],
    ) -> Result<Self, DensityError> {
        if phi_coeffs.is_empty() || lap_coeffs.is_empty() {
            return Err(DensityError::InvalidWeight("empty coefficient list".into()));
        }
        if phi_coeffs.iter().chain(&lap_coeffs).any(|c| !c.is_finite()) {
            return Err(DensityError::InvalidWeight("non-finite coefficient".into()));
        }
        let horner = |c: Vec<f64>| -> ScalarField {
            Arc::new(move |z: Point| {
                let s = z.norm_sqr();
                c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
            })
        };
        let label = format!("polynomial{phi_coeffs:?}");
        Self::custom_radial(label, horner(phi_coeffs), horner(lap_coeffs), probe)
    }

    pub fn name(&self) -> String {
        match self {
            WeightModel::ClassicalFock => "fock".into(),
            WeightModel::ClassicalBergman => "bergman".into(),
            WeightModel::CustomRadial(c) => c.label.clone(),
        }
    }

    pub fn phi(&self, z: Point) -> f64 {
        match self {
            WeightModel::ClassicalFock => 0.5 * z.norm_sqr(),
            WeightModel::ClassicalBergman => -0.5 * (1.0 - z.norm_sqr()).ln(),
            WeightModel::CustomRadial(c) => (c.phi)(z),
        }
    }

    pub fn lap_phi(&self, z: Point) -> f64 {
        match self {
            WeightModel::ClassicalFock => 0.5,
            WeightModel::ClassicalBergman => {
                let s = 1.0 - z.norm_sqr();
                0.5 / (s * s)
            }
            WeightModel::CustomRadial(c) => (c.lap_phi)(z),
        }
    }

    /// Checks that the weight lives on `surface` and that `e^{2ν}Δφ` is
    /// bounded between positive constants on `probe`; returns the observed
    /// `(min, max)`.
    pub fn curvature_bounds(
        &self,
        surface: SurfaceModel,
        probe: &[Point],
    ) -> Result<(f64, f64), DensityError> {
        if matches!(self, WeightModel::ClassicalBergman) && surface != SurfaceModel::UnitDisk {
            return Err(DensityError::IncompatibleModel(
                "the Bergman weight lives on the unit disk".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &z in probe {
            surface.check(z)?;
            let v = surface.e2nu(z) * self.lap_phi(z);
            if !v.is_finite() || v <= 0.0 {
                return Err(DensityError::HypothesisViolation(format!(
                    "e^(2ν)Δφ = {v} at {z} is not positive"
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

/// Parses a polynomial weight file: a `phi = a0 a1 …` line and a
/// `lap = b0 b1 …` line, coefficients of `|z|^{2k}`. `#` starts a comment.
pub fn parse_weight_file(text: &str) -> Result<(Vec<f64>, Vec<f64>), DensityError> {
    let mut phi = None;
    let mut lap = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once('=').ok_or_else(|| {
            DensityError::InvalidWeight(format!("line {}: expected key = coefficients", n + 1))
        })?;
        let coeffs = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DensityError::InvalidWeight(format!("line {}: bad number {t:?}", n + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coeffs.is_empty() || coeffs.len() > 64 {
            return Err(DensityError::InvalidWeight(format!(
                "line {}: expected 1 to 64 coefficients",
                n + 1
            )));
        }
        let slot = match key.trim() {
            "phi" => &mut phi,
            "lap" => &mut lap,
            other => {
                return Err(DensityError::InvalidWeight(format!(
                    "line {}: unknown key {other:?}",
                    n + 1
                )))
            }
        };
        if slot.replace(coeffs).is_some() {
            return Err(DensityError::InvalidWeight(format!("line {}: duplicate key", n + 1)));
        }
    }
    match (phi, lap) {
        (Some(p), Some(l)) => Ok((p, l)),
        _ => Err(DensityError::InvalidWeight("both phi and lap lines are required".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe() -> Vec<Point> {
        (0..10)
            .map(|k| Point::from_polar(0.08 * k as f64, 0.7 * k as f64))
            .collect()
    }

    #[test]
    fn classical_laplacians_match_finite_differences() {
        for w in [WeightModel::ClassicalFock, WeightModel::ClassicalBergman] {
            for z in probe() {
                let fd = fd_dbar_laplacian(|p| w.phi(p), z, 1e-4);
                assert!((fd - w.lap_phi(z)).abs() < 1e-5 * w.lap_phi(z), "{w:?} {z}");
            }
        }
    }

    #[test]
    fn curvature_is_constant_two_for_classical_weights() {
        let (lo, hi) = WeightModel::ClassicalFock
            .curvature_bounds(SurfaceModel::EuclideanPlane, &probe())
            .unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
        let (lo, hi) = WeightModel::ClassicalBergman
            .curvature_bounds(SurfaceModel::UnitDisk, &probe())
            .unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        assert!(WeightModel::ClassicalBergman
            .curvature_bounds(SurfaceModel::EuclideanPlane, &probe())
            .is_err());
    }

    #[test]
    fn custom_weight_validation() {
        // φ = |z|²/2 + |z|⁴/4 has Δφ = 1/2 + |z|².
        let ok = WeightModel::polynomial(vec![0.0, 0.5, 0.25], vec![0.5, 1.0], &probe());
        assert!(ok.is_ok());
        let wrong = WeightModel::polynomial(vec![0.0, 0.5, 0.25], vec![0.5, 0.5], &probe());
        assert!(matches!(wrong, Err(DensityError::HypothesisViolation(_))));
    }

    #[test]
    fn weight_file_parsing() {
        let (p, l) = parse_weight_file("# fock\nphi = 0 0.5\nlap = 0.5\n").unwrap();
        assert_eq!((p, l), (vec![0.0, 0.5], vec![0.5]));
        for bad in ["phi = 1\n", "phi = 1\nlap = x\n", "phi 1\nlap = 1\n", "phi=1\nphi=1\nlap=1\n", "foo = 1\n"] {
            assert!(parse_weight_file(bad).is_err(), "{bad:?}");
        }
    }
}
