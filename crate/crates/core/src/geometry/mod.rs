//! 2D computational-geometry primitives: monotone-chain convex hull,
//! shoelace areas, convex clipping, and unions of disjoint convex pieces.

mod alpha;

pub use alpha::{alpha_shape, AlphaShape};

pub type Point = [f64; 2];

/// Grid used to stabilize degenerate intersections.
pub(crate) const SNAP: f64 = 1e-9;

pub(crate) fn snap(p: Point) -> Point {
    [(p[0] / SNAP).round() * SNAP, (p[1] / SNAP).round() * SNAP]
}

/// Cross product of (a - o) x (b - o).
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub(crate) fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Convex hull by the monotone-chain algorithm; vertices returned in
/// counter-clockwise order with collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        acc += (poly[j][0] - poly[i][0]) * (poly[j][1] + poly[i][1]);
        j = i;
    }
    acc / 2.0
}

/// Absolute polygon area via the shoelace formula.
pub fn polygon_area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Sutherland-Hodgman clip of a convex subject against a convex CCW clip
/// polygon. Both convex, so the result is convex (possibly empty).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            return output;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let next = input[(j + 1) % m];
            let cur_in = cross(a, b, cur) >= 0.0;
            let next_in = cross(a, b, next) >= 0.0;
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                if let Some(p) = segment_line_intersection(cur, next, a, b) {
                    output.push(p);
                }
            }
        }
    }
    let mut out: Vec<Point> = output.into_iter().map(snap).collect();
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    if out.len() < 3 || polygon_area(&out) < SNAP * SNAP {
        return Vec::new();
    }
    out
}

fn segment_line_intersection(p: Point, q: Point, a: Point, b: Point) -> Option<Point> {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let denom = dx * (q[1] - p[1]) - dy * (q[0] - p[0]);
    if denom == 0.0 {
        return None;
    }
    let t = (dx * (a[1] - p[1]) - dy * (a[0] - p[0])) / denom;
    Some([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])])
}

/// Inclusive point-in-convex-polygon test (CCW vertex order).
pub fn point_in_convex(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if cross(poly[i], poly[(i + 1) % n], p) < -1e-12 {
            return false;
        }
    }
    true
}

/// Even-odd ray-casting test against a set of closed loops.
pub fn point_in_loops(p: Point, loops: &[Vec<Point>]) -> bool {
    let mut inside = false;
    for lp in loops {
        let n = lp.len();
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = (lp[i][0], lp[i][1]);
            let (xj, yj) = (lp[j][0], lp[j][1]);
            if (yi > p[1]) != (yj > p[1]) {
                let x_cross = xi + (p[1] - yi) / (yj - yi) * (xj - xi);
                if p[0] < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

pub fn bounding_box(points: &[Point]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

/// A set of convex polygons with pairwise-disjoint interiors, bucketed on a
/// uniform grid so intersection and containment queries stay local.
#[derive(Debug, Clone)]
pub struct PieceSet {
    pieces: Vec<Vec<Point>>,
    boxes: Vec<([f64; 2], [f64; 2])>,
    lo: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    grid: Vec<Vec<u32>>,
}

impl PieceSet {
    pub fn new(pieces: Vec<Vec<Point>>) -> Self {
        let pieces: Vec<Vec<Point>> = pieces.into_iter().filter(|p| p.len() >= 3).collect();
        let boxes: Vec<_> = pieces.iter().map(|p| bounding_box(p)).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for (blo, bhi) in &boxes {
            for d in 0..2 {
                lo[d] = lo[d].min(blo[d]);
                hi[d] = hi[d].max(bhi[d]);
            }
        }
        let n = pieces.len().max(1);
        let extent = ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(SNAP);
        let side = (n as f64).sqrt().ceil() as usize;
        let (nx, ny) = (side.max(1), side.max(1));
        let cell = extent / side as f64;
        let mut grid = vec![Vec::new(); nx * ny];
        for (idx, (blo, bhi)) in boxes.iter().enumerate() {
            if pieces.is_empty() {
                break;
            }
            let (x0, y0) = Self::cell_of(lo, cell, nx, ny, *blo);
            let (x1, y1) = Self::cell_of(lo, cell, nx, ny, *bhi);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    grid[gy * nx + gx].push(idx as u32);
                }
            }
        }
        Self {
            pieces,
            boxes,
            lo,
            cell,
            nx,
            ny,
            grid,
        }
    }

    fn cell_of(lo: [f64; 2], cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let gx = (((p[0] - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
        let gy = (((p[1] - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
        (gx, gy)
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[Vec<Point>] {
        &self.pieces
    }

    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| polygon_area(p)).sum()
    }

    fn candidates(&self, bbox: ([f64; 2], [f64; 2]), seen: &mut Vec<bool>) -> Vec<u32> {
        if self.pieces.is_empty() {
            return Vec::new();
        }
        let (x0, y0) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, bbox.0);
        let (x1, y1) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, bbox.1);
        let mut out = Vec::new();
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                for &idx in &self.grid[gy * self.nx + gx] {
                    if !seen[idx as usize] {
                        seen[idx as usize] = true;
                        out.push(idx);
                    }
                }
            }
        }
        for &idx in &out {
            seen[idx as usize] = false;
        }
        out.sort_unstable();
        out
    }

    /// Piecewise intersection with another set; disjointness is preserved.
    pub fn intersect(&self, other: &PieceSet) -> PieceSet {
        let mut pieces = Vec::new();
        let mut seen = vec![false; other.pieces.len()];
        for (i, piece) in self.pieces.iter().enumerate() {
            let bbox = self.boxes[i];
            for idx in other.candidates(bbox, &mut seen) {
                let (blo, bhi) = other.boxes[idx as usize];
                if bhi[0] < bbox.0[0] || blo[0] > bbox.1[0] || bhi[1] < bbox.0[1] || blo[1] > bbox.1[1]
                {
                    continue;
                }
                let clipped = clip_convex(piece, &other.pieces[idx as usize]);
                if !clipped.is_empty() {
                    pieces.push(clipped);
                }
            }
        }
        PieceSet::new(pieces)
    }

    /// Inclusive containment: true when the point lies in any piece.
    pub fn contains(&self, p: Point) -> bool {
        if self.pieces.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.pieces.len()];
        for idx in self.candidates((p, p), &mut seen) {
            if point_in_convex(p, &self.pieces[idx as usize]) {
                return true;
            }
        }
        false
    }
}

/// Area of the union of several piece sets by inclusion-exclusion; recursion
/// only descends into combinations whose intersection is non-empty, so the
/// usual case of disjoint sets costs a single pass.
pub fn union_area(sets: &[PieceSet]) -> f64 {
    fn recurse(sets: &[PieceSet], current: &PieceSet, next: usize, sign: f64, acc: &mut f64) {
        *acc += sign * current.area();
        for j in next..sets.len() {
            let inter = current.intersect(&sets[j]);
            if !inter.is_empty() {
                recurse(sets, &inter, j + 1, -sign, acc);
            }
        }
    }
    let mut acc = 0.0;
    for i in 0..sets.len() {
        recurse(sets, &sets[i], i + 1, 1.0, &mut acc);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lo: f64, hi: f64) -> Vec<Point> {
        vec![[lo, lo], [hi, lo], [hi, hi], [lo, hi]]
    }

    #[test]
    fn hull_of_square_with_interior() {
        let mut pts = square(0.0, 1.0);
        pts.push([0.5, 0.5]);
        pts.push([0.2, 0.8]);
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-12);
        assert!(signed_area(&hull) > 0.0);
    }

    #[test]
    fn hull_of_collinear_points_degenerates() {
        let pts = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let hull = convex_hull(&pts);
        assert!(hull.len() < 3);
    }

    #[test]
    fn shoelace_triangle() {
        let tri = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!((polygon_area(&tri) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_overlapping_squares() {
        let a = square(0.0, 2.0);
        let b = square(1.0, 3.0);
        let c = clip_convex(&a, &b);
        assert!((polygon_area(&c) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clip_disjoint_squares_is_empty() {
        let a = square(0.0, 1.0);
        let b = square(2.0, 3.0);
        assert!(clip_convex(&a, &b).is_empty());
    }

    #[test]
    fn union_area_disjoint_and_overlapping() {
        let a = PieceSet::new(vec![square(0.0, 1.0)]);
        let b = PieceSet::new(vec![square(2.0, 3.0)]);
        assert!((union_area(&[a.clone(), b]) - 2.0).abs() < 1e-9);
        let c = PieceSet::new(vec![square(0.5, 1.5)]);
        // 1 + 1 - 0.25 overlap
        assert!((union_area(&[a, c]) - 1.75).abs() < 1e-9);
    }

    #[test]
    fn union_area_triple_overlap() {
        let a = PieceSet::new(vec![square(0.0, 2.0)]);
        let b = PieceSet::new(vec![square(1.0, 3.0)]);
        let c = PieceSet::new(vec![square(1.5, 2.5)]);
        // brute force by sampling
        let mut hits = 0usize;
        let n = 400;
        for i in 0..n {
            for j in 0..n {
                let p = [3.0 * (i as f64 + 0.5) / n as f64, 3.0 * (j as f64 + 0.5) / n as f64];
                if a.contains(p) || b.contains(p) || c.contains(p) {
                    hits += 1;
                }
            }
        }
        let mc = 9.0 * hits as f64 / (n * n) as f64;
        let exact = union_area(&[a, b, c]);
        assert!((exact - mc).abs() < 0.05, "exact {exact} vs grid {mc}");
    }

    #[test]
    fn point_in_loops_even_odd() {
        let outer = square(0.0, 4.0);
        let hole = square(1.0, 2.0);
        let loops = vec![outer, hole];
        assert!(point_in_loops([0.5, 0.5], &loops));
        assert!(!point_in_loops([1.5, 1.5], &loops)); // inside the hole
        assert!(point_in_loops([3.0, 3.0], &loops));
        assert!(!point_in_loops([5.0, 1.0], &loops));
    }
}
