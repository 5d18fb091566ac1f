use crate::geometry::{EuclideanDisk, Point};

/// Uniform bucket grid over the bounding box of a point list.
#[derive(Clone, Debug)]
pub(crate) struct GridIndex {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    // cell -> start offset into `members`; length nx * ny + 1
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl GridIndex {
    pub(crate) fn build(points: &[Point]) -> Self {
        if points.is_empty() {
            return Self {
                origin: Point::new(0.0, 0.0),
                cell: 1.0,
                nx: 1,
                ny: 1,
                starts: vec![0, 0],
                members: Vec::new(),
            };
        }
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo.re = lo.re.min(p.re);
            lo.im = lo.im.min(p.im);
            hi.re = hi.re.max(p.re);
            hi.im = hi.im.max(p.im);
        }
        let width = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        // Roughly two points per cell for well-spread sets.
        let per_side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 2048);
        let cell = width / per_side as f64 * (1.0 + 1e-9);
        let nx = (((hi.re - lo.re) / cell) as usize + 1).min(per_side + 1);
        let ny = (((hi.im - lo.im) / cell) as usize + 1).min(per_side + 1);

        let key = |p: &Point| {
            let i = (((p.re - lo.re) / cell) as usize).min(nx - 1);
            let j = (((p.im - lo.im) / cell) as usize).min(ny - 1);
            j * nx + i
        };
        let mut counts = vec![0usize; nx * ny + 1];
        for p in points {
            counts[key(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut members = vec![0usize; points.len()];
        for (idx, p) in points.iter().enumerate() {
            let k = key(p);
            members[fill[k]] = idx;
            fill[k] += 1;
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            starts,
            members,
        }
    }

    /// Indices of points strictly inside `disk`, ascending.
    pub(crate) fn query(&self, points: &[Point], disk: &EuclideanDisk) -> Vec<usize> {
        if points.is_empty() || !(disk.radius > 0.0) {
            return Vec::new();
        }
        let to_cell = |x: f64, n: usize| -> Option<usize> {
            if x < 0.0 {
                None
            } else {
                Some(((x / self.cell) as usize).min(n - 1))
            }
        };
        let x0 = disk.center.re - disk.radius - self.origin.re;
        let x1 = disk.center.re + disk.radius - self.origin.re;
        let y0 = disk.center.im - disk.radius - self.origin.im;
        let y1 = disk.center.im + disk.radius - self.origin.im;
        let span_x = self.nx as f64 * self.cell;
        let span_y = self.ny as f64 * self.cell;
        if x1 < 0.0 || y1 < 0.0 || x0 > span_x || y0 > span_y {
            return Vec::new();
        }
        let i0 = to_cell(x0, self.nx).unwrap_or(0);
        let i1 = to_cell(x1, self.nx).unwrap_or(0);
        let j0 = to_cell(y0, self.ny).unwrap_or(0);
        let j1 = to_cell(y1, self.ny).unwrap_or(0);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = j * self.nx + i;
                for &idx in &self.members[self.starts[k]..self.starts[k + 1]] {
                    if (points[idx] - disk.center).norm() < disk.radius {
                        out.push(idx);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
