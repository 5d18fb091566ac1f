//! Density report type and its JSON and CSV encodings.
//!
//! JSON schema (version 1): an object with `schema_version`, `surface`
//! (`"plane"` or `"disk"`), `weight`, `metric`, `kernel` (names),
//! `r_schedule` (array of radii), `grid` (array of `[re, im]`),
//! `upper_matrix` and `lower_matrix` (arrays indexed `[r][z]`),
//! `edge_contaminated` (booleans indexed `[r][z]`), `sup_curve` and
//! `inf_curve` (per radius), `margin_guard`, `tail`, `verdict` (one of
//! `"InterpolationSufficient"`, `"SamplingSufficient"`, `"Inconclusive"`)
//! and `margin`.
//!
//! CSV: one row per `(r, z)` with columns
//! `schema_version,r,z_re,z_im,upper,lower,edge_contaminated`.

use serde::{Deserialize, Serialize};

use super::{classify_with_margin, DensityError};
use crate::geometry::{Point, SurfaceModel};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    InterpolationSufficient,
    SamplingSufficient,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::InterpolationSufficient => "InterpolationSufficient",
            Verdict::SamplingSufficient => "SamplingSufficient",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityReport {
    pub schema_version: u32,
    pub surface: SurfaceModel,
    pub weight: String,
    pub metric: String,
    pub kernel: String,
    pub r_schedule: Vec<f64>,
    pub grid: Vec<Point>,
    pub upper_matrix: Vec<Vec<f64>>,
    pub lower_matrix: Vec<Vec<f64>>,
    pub edge_contaminated: Vec<Vec<bool>>,
    pub sup_curve: Vec<f64>,
    pub inf_curve: Vec<f64>,
    pub margin_guard: f64,
    pub tail: usize,
    pub verdict: Verdict,
    pub margin: f64,
}

#[derive(Serialize)]
struct CsvRow {
    schema_version: u32,
    r: f64,
    z_re: f64,
    z_im: f64,
    upper: f64,
    lower: f64,
    edge_contaminated: bool,
}

impl DensityReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields are plain data");
        s.push('\n');
        s
    }

    /// Decodes and checks shape, finiteness, nonnegativity and the
    /// recorded verdict.
    pub fn from_json(text: &str) -> Result<Self, DensityError> {
        let report: DensityReport =
            serde_json::from_str(text).map_err(|e| DensityError::MalformedReport(e.to_string()))?;
        report.validate()?;
        Ok(report)
    }

    pub fn validate(&self) -> Result<(), DensityError> {
        let bad = |m: String| Err(DensityError::MalformedReport(m));
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema_version));
        }
        let nr = self.r_schedule.len();
        let nz = self.grid.len();
        if nr == 0 || nz == 0 {
            return bad("empty schedule or grid".into());
        }
        if self.r_schedule.iter().any(|&r| !(r > 0.0 && r < self.surface.r_max())) {
            return bad("radius outside (0, R_X)".into());
        }
        if self.grid.iter().any(|&z| !self.surface.contains(z)) {
            return bad("grid point outside the domain".into());
        }
        let shaped = |m: &Vec<Vec<f64>>| m.len() == nr && m.iter().all(|row| row.len() == nz);
        if !shaped(&self.upper_matrix)
            || !shaped(&self.lower_matrix)
            || self.edge_contaminated.len() != nr
            || self.edge_contaminated.iter().any(|row| row.len() != nz)
            || self.sup_curve.len() != nr
            || self.inf_curve.len() != nr
        {
            return bad("array shapes disagree with r_schedule × grid".into());
        }
        let values = self
            .upper_matrix
            .iter()
            .chain(&self.lower_matrix)
            .flatten()
            .chain(&self.sup_curve)
            .chain(&self.inf_curve);
        for &v in values {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("density value {v} is not a finite nonnegative number"));
            }
        }
        for ri in 0..nr {
            let clean: Vec<usize> = (0..nz).filter(|&zi| !self.edge_contaminated[ri][zi]).collect();
            if clean.is_empty() {
                return bad(format!("no clean grid point at r = {}", self.r_schedule[ri]));
            }
            let sup = clean.iter().map(|&zi| self.upper_matrix[ri][zi]).fold(f64::NEG_INFINITY, f64::max);
            let inf = clean.iter().map(|&zi| self.lower_matrix[ri][zi]).fold(f64::INFINITY, f64::min);
            if sup != self.sup_curve[ri] || inf != self.inf_curve[ri] {
                return bad(format!("extremes at r = {} disagree with the matrices", self.r_schedule[ri]));
            }
        }
        if !(0.0..1.0).contains(&self.margin_guard) {
            return bad(format!("margin_guard {} outside [0, 1)", self.margin_guard));
        }
        let (verdict, margin) = classify_with_margin(self, self.tail)?;
        if verdict != self.verdict || margin != self.margin {
            return bad("recorded verdict disagrees with the curves".into());
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (ri, &r) in self.r_schedule.iter().enumerate() {
            for (zi, z) in self.grid.iter().enumerate() {
                w.serialize(CsvRow {
                    schema_version: self.schema_version,
                    r,
                    z_re: z.re,
                    z_im: z.im,
                    upper: self.upper_matrix[ri][zi],
                    lower: self.lower_matrix[ri][zi],
                    edge_contaminated: self.edge_contaminated[ri][zi],
                })
                .expect("in-memory CSV write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn sample() -> DensityReport {
        let set = PointSet::new(
            SurfaceModel::UnitDisk,
            vec![Point::new(0.1, 0.2), Point::new(-0.3, 0.0)],
        )
        .unwrap();
        let model = DensityModel::bergman(DensityKernel::Exponential, TauForm::Derived).unwrap();
        let grid = polar_grid(SurfaceModel::UnitDisk, Point::new(0.0, 0.0), 0.5, 2, 3).unwrap();
        density_profile(&set, &model, &grid, &[0.3, 0.6], &ProfileOptions::default()).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let rep = sample();
        let text = rep.to_json();
        assert!(text.contains(&format!("\"verdict\": \"{}\"", rep.verdict.name())));
        assert_eq!(DensityReport::from_json(&text).unwrap(), rep);
    }

    #[test]
    fn tampered_json_rejected() {
        let rep = sample();
        let mut v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        v["verdict"] = "SamplingSufficient".into();
        assert!(DensityReport::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        v["sup_curve"][0] = (-1.0).into();
        assert!(DensityReport::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        v["extra"] = 1.into();
        assert!(DensityReport::from_json(&v.to_string()).is_err());
        assert!(DensityReport::from_json("{").is_err());
    }

    #[test]
    fn csv_layout() {
        let rep = sample();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "schema_version,r,z_re,z_im,upper,lower,edge_contaminated"
        );
        assert_eq!(lines.count(), rep.r_schedule.len() * rep.grid.len());
    }
}
