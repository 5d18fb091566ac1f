//! Text format: a `surface=plane|disk` header, then one `re im` pair per
//! line at 17 significant digits. Blank lines are ignored.

use std::fmt::Write as _;

use super::{PointSet, PointSetError};
use crate::geometry::{Point, SurfaceModel};

pub fn write_pointset(set: &PointSet) -> String {
    let mut out = String::with_capacity(48 * set.len() + 16);
    out.push_str("surface=");
    out.push_str(set.surface().name());
    out.push('\n');
    for p in set.points() {
        writeln!(out, "{:.16e} {:.16e}", p.re, p.im).expect("writing to a String");
    }
    out
}

pub fn parse_pointset(text: &str) -> Result<PointSet, PointSetError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(PointSetError::Parse {
        line: 1,
        message: "missing surface header".into(),
    })?;
    let surface = match header.trim() {
        "surface=plane" => SurfaceModel::EuclideanPlane,
        "surface=disk" => SurfaceModel::UnitDisk,
        other => {
            return Err(PointSetError::Parse {
                line: hline + 1,
                message: format!("expected surface=plane|disk, found {other:?}"),
            })
        }
    };
    let mut points = Vec::new();
    for (n, line) in lines {
        let mut fields = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64, PointSetError> {
            let tok = tok.ok_or_else(|| PointSetError::Parse {
                line: n + 1,
                message: "expected two coordinates".into(),
            })?;
            let v: f64 = tok.parse().map_err(|_| PointSetError::Parse {
                line: n + 1,
                message: format!("not a number: {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(PointSetError::Parse {
                    line: n + 1,
                    message: format!("non-finite coordinate {tok:?}"),
                });
            }
            Ok(v)
        };
        let re = parse(fields.next())?;
        let im = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(PointSetError::Parse {
                line: n + 1,
                message: "trailing fields".into(),
            });
        }
        let p = Point::new(re, im);
        if !surface.contains(p) {
            return Err(PointSetError::Parse {
                line: n + 1,
                message: format!("point {p} outside the {} domain", surface.name()),
            });
        }
        points.push(p);
    }
    PointSet::new(surface, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let set = PointSet::new(SurfaceModel::UnitDisk, vec![Point::new(0.5, -0.25)]).unwrap();
        let text = write_pointset(&set);
        assert_eq!(
            text,
            "surface=disk\n5.0000000000000000e-1 -2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "surface=torus\n",
            "surface=plane\n1.0\n",
            "surface=plane\n1.0 2.0 3.0\n",
            "surface=plane\n1.0 abc\n",
            "surface=plane\nNaN 0\n",
            "surface=disk\n1.0 0.0\n",
            "surface=plane\n1 1\n1 1\n",
        ] {
            assert!(parse_pointset(bad).is_err(), "{bad:?}");
        }
        let empty = parse_pointset("surface=plane\n").unwrap();
        assert!(empty.is_empty());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(coords in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7), 0..40)) {
            let mut pts: Vec<Point> = coords.into_iter().map(|(a, b)| Point::new(a, b)).collect();
            pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            pts.dedup();
            for surface in [SurfaceModel::EuclideanPlane, SurfaceModel::UnitDisk] {
                let set = PointSet::new(surface, pts.clone()).unwrap();
                let back = parse_pointset(&write_pointset(&set)).unwrap();
                prop_assert_eq!(&back, &set);
            }
        }
    }
}
