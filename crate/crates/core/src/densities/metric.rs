//! Metric corrections `u_ψ`, `τ_ψ` and `e^{2ν}|∂u_ψ|²`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::weight::{fd_dbar_laplacian, ScalarField};
use super::DensityError;
use crate::geometry::{Point, SurfaceModel};

/// Which closed form of `τ_ψ` the disk metric uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauForm {
    /// `τ_ψ = 2(1 − |z|²)`
    #[default]
    Derived,
    /// `τ_ψ = 1/(2(1 − |z|²))`
    Inline,
}

impl TauForm {
    pub fn name(self) -> &'static str {
        match self {
            TauForm::Derived => "derived",
            TauForm::Inline => "inline",
        }
    }
}

#[derive(Clone)]
pub struct CustomMetric {
    u_psi: ScalarField,
    tau_psi: ScalarField,
    grad_u_sq: ScalarField,
    label: String,
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMetric")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum MetricModel {
    /// `u_ψ ≡ 0`; plane only.
    FundamentalPlane,
    /// `u_ψ = −½ log(1 − |z|²)`; disk only.
    BergmanDisk { tau_form: TauForm },
    Custom(CustomMetric),
}

/// Tolerance for the finite-difference certification of
/// `Δ(−e^{−2u_ψ}) ≥ 0`.
pub const DIFF_INEQ_TOLERANCE: f64 = 1e-8;

impl MetricModel {
    pub fn bergman_disk(tau_form: TauForm) -> Self {
        MetricModel::BergmanDisk { tau_form }
    }

    /// A user-supplied metric, certified against the differential
    /// inequality on `probe`.
    pub fn custom(
        label: impl Into<String>,
        u_psi: ScalarField,
        tau_psi: ScalarField,
        grad_u_sq: ScalarField,
        probe: &[Point],
    ) -> Result<Self, DensityError> {
        let m = MetricModel::Custom(CustomMetric {
            u_psi,
            tau_psi,
            grad_u_sq,
            label: label.into(),
        });
        m.certify(probe)?;
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self {
            MetricModel::FundamentalPlane => "fundamental".into(),
            MetricModel::BergmanDisk { .. } => "bergman-disk".into(),
            MetricModel::Custom(c) => c.label.clone(),
        }
    }

    pub fn u_psi(&self, z: Point) -> f64 {
        match self {
            MetricModel::FundamentalPlane => 0.0,
            MetricModel::BergmanDisk { .. } => -0.5 * (1.0 - z.norm_sqr()).ln(),
            MetricModel::Custom(c) => (c.u_psi)(z),
        }
    }

    pub fn tau_psi(&self, z: Point) -> f64 {
        match self {
            MetricModel::FundamentalPlane => 0.0,
            MetricModel::BergmanDisk { tau_form } => {
                let s = 1.0 - z.norm_sqr();
                match tau_form {
                    TauForm::Derived => 2.0 * s,
                    TauForm::Inline => 0.5 / s,
                }
            }
            MetricModel::Custom(c) => (c.tau_psi)(z),
        }
    }

    /// `e^{2ν}|∂u_ψ|²`.
    pub fn grad_u_sq(&self, z: Point) -> f64 {
        match self {
            MetricModel::FundamentalPlane => 0.0,
            MetricModel::BergmanDisk { .. } => z.norm_sqr(),
            MetricModel::Custom(c) => (c.grad_u_sq)(z),
        }
    }

    /// Rejects pairings with the wrong surface.
    pub fn check_surface(&self, surface: SurfaceModel) -> Result<(), DensityError> {
        match (self, surface) {
            (MetricModel::FundamentalPlane, SurfaceModel::UnitDisk) => Err(
                DensityError::IncompatibleModel("the fundamental metric is plane only".into()),
            ),
            (MetricModel::BergmanDisk { .. }, SurfaceModel::EuclideanPlane) => Err(
                DensityError::IncompatibleModel("the Bergman disk metric is disk only".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Finite-difference check of `Δ(−e^{−2u_ψ}) ≥ −DIFF_INEQ_TOLERANCE`
    /// on `probe`; returns the smallest value seen.
    pub fn certify(&self, probe: &[Point]) -> Result<f64, DensityError> {
        let h = 1e-4;
        let mut worst = f64::INFINITY;
        for &z in probe {
            let lap = fd_dbar_laplacian(|w| -(-2.0 * self.u_psi(w)).exp(), z, h);
            if !lap.is_finite() || lap < -DIFF_INEQ_TOLERANCE {
                return Err(DensityError::HypothesisViolation(format!(
                    "Δ(−e^(−2u)) = {lap:e} at {z} violates the differential inequality"
                )));
            }
            let tau = self.tau_psi(z);
            if !tau.is_finite() || !self.grad_u_sq(z).is_finite() {
                return Err(DensityError::HypothesisViolation(format!(
                    "metric correction not finite at {z}"
                )));
            }
            worst = worst.min(lap);
        }
        Ok(worst)
    }
}

/// Probe points for hypothesis checks: the anchor plus three rings.
pub fn probe_grid(surface: SurfaceModel, extent: f64) -> Vec<Point> {
    let mut out = vec![Point::new(0.0, 0.0)];
    for ring in 1..=3 {
        let t = extent * ring as f64 / 3.0;
        for k in 0..8 {
            let u = Point::from_polar(t, std::f64::consts::TAU * (k as f64 + 0.5 * ring as f64) / 8.0);
            out.push(surface.from_center(Point::new(0.0, 0.0), u));
        }
    }
    out
}
