//! Density-based footprints of the 2D instance space and the two area
//! metrics derived from them: the area occupied by all instances and the
//! area occupied by failure-revealing instances after the purity rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{alpha_shape, union_area, AlphaShape, PieceSet, Point};

#[derive(Debug, Error)]
pub enum FootprintError {
    #[error("point count must be at least 1, got {0}")]
    InvalidPointCount(usize),
    #[error("coordinate range must be non-negative, got {0}")]
    NegativeRange(f64),
    #[error("area_bugs requires at least one failing scenario")]
    NoFailingScenarios,
    #[error("coordinate/outcome length mismatch: {coords} vs {outcomes}")]
    LengthMismatch { coords: usize, outcomes: usize },
}

/// Which epsilon rule to use for the automatic DBSCAN parameters. `Paper`
/// multiplies the coordinate-range product directly; `DimensionRoot` takes
/// the d-th root of the bracketed product as in the original heuristic,
/// which keeps epsilon in coordinate units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsFormula {
    #[default]
    Paper,
    DimensionRoot,
}

/// Automatically chosen DBSCAN parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    /// Minimum neighbor count (self included) for a core point.
    pub k: usize,
    /// Neighborhood radius in instance-space units.
    pub eps: f64,
}

/// k = max(min(ceil(r/20), 50), 3) and, for the `Paper` rule,
/// eps = k * gamma(2) / sqrt(r * pi) * (range(z1) * range(z2)), with
/// gamma(2) = 1 exactly.
pub fn dbscan_params(
    r: usize,
    z1_range: f64,
    z2_range: f64,
    formula: EpsFormula,
) -> Result<DbscanParams, FootprintError> {
    if r < 1 {
        return Err(FootprintError::InvalidPointCount(r));
    }
    if z1_range < 0.0 || z2_range < 0.0 {
        return Err(FootprintError::NegativeRange(z1_range.min(z2_range)));
    }
    let k = ((r as f64 / 20.0).ceil() as usize).min(50).max(3);
    let r = r as f64;
    let eps = match formula {
        EpsFormula::Paper => k as f64 / (r * std::f64::consts::PI).sqrt() * (z1_range * z2_range),
        EpsFormula::DimensionRoot => {
            (k as f64 * z1_range * z2_range / (r * std::f64::consts::PI)).sqrt()
        }
    };
    Ok(DbscanParams { k, eps })
}

/// Standard DBSCAN over 2D points with Euclidean distance. A core point has
/// at least `k` neighbors within `eps`, counting itself; labels are
/// deterministic for a fixed input order. `None` marks noise.
pub fn dbscan(points: &[Point], params: &DbscanParams) -> Vec<Option<usize>> {
    let n = points.len();
    let eps2 = params.eps * params.eps;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    if n == 0 {
        return labels;
    }

    // when eps covers the whole bounding box every point neighbors every
    // other, so the result is a single cluster (or all noise below k)
    let (lo, hi) = crate::geometry::bounding_box(points);
    let diag2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
    if diag2 <= eps2 {
        if n >= params.k {
            labels.fill(Some(0));
        }
        return labels;
    }

    let mut visited = vec![false; n];
    let mut queued = vec![false; n];
    let mut cluster = 0usize;
    let neighbors = |i: usize, out: &mut Vec<usize>| {
        out.clear();
        let p = points[i];
        for (j, q) in points.iter().enumerate() {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            if dx * dx + dy * dy <= eps2 {
                out.push(j);
            }
        }
    };
    let mut nbrs = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        neighbors(i, &mut nbrs);
        if nbrs.len() < params.k {
            continue; // stays noise unless claimed by a later cluster
        }
        labels[i] = Some(cluster);
        for &j in &nbrs {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if !visited[j] && !queued[j] {
                queued[j] = true;
                queue.push_back(j);
            }
        }
        while let Some(j) = queue.pop_front() {
            queued[j] = false;
            if visited[j] {
                continue;
            }
            visited[j] = true;
            neighbors(j, &mut nbrs);
            if nbrs.len() >= params.k {
                for &m in &nbrs {
                    if labels[m].is_none() {
                        labels[m] = Some(cluster);
                    }
                    if !visited[m] && !queued[m] {
                        queued[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        cluster += 1;
    }
    labels
}

/// Union of per-cluster alpha-shape polygons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Footprint {
    /// Boundary loops of every cluster shape; outer loops CCW, holes CW.
    pub polygons: Vec<Vec<Point>>,
    /// Area of the union of all cluster shapes.
    pub area: f64,
    /// Number of non-noise points.
    pub member_count: usize,
    /// member_count / area, or 0 for an empty footprint.
    pub density: f64,
    #[serde(skip)]
    shapes: Vec<AlphaShape>,
}

impl Footprint {
    pub fn empty() -> Self {
        Self {
            polygons: Vec::new(),
            area: 0.0,
            member_count: 0,
            density: 0.0,
            shapes: Vec::new(),
        }
    }

    /// One piece set per cluster shape (triangles are disjoint within each).
    pub(crate) fn piece_sets(&self) -> Vec<PieceSet> {
        self.shapes
            .iter()
            .map(|s| PieceSet::new(s.triangles.iter().map(|t| t.to_vec()).collect()))
            .collect()
    }

    /// Inclusive containment in any cluster shape.
    pub fn contains(&self, p: Point) -> bool {
        self.shapes.iter().any(|s| {
            s.triangles
                .iter()
                .any(|t| crate::geometry::point_in_convex(p, t.as_slice()))
        })
    }
}

/// Build the footprint of a labelled point set: one alpha shape per cluster,
/// area of the union of all shapes. All-noise input yields an empty
/// footprint with area 0.
pub fn footprint(points: &[Point], labels: &[Option<usize>]) -> Footprint {
    let n_clusters = labels.iter().flatten().copied().max().map_or(0, |m| m + 1);
    if n_clusters == 0 {
        return Footprint::empty();
    }
    let mut member_count = 0usize;
    let mut shapes = Vec::with_capacity(n_clusters);
    for c in 0..n_clusters {
        let cluster: Vec<Point> = points
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == Some(c))
            .map(|(p, _)| *p)
            .collect();
        member_count += cluster.len();
        shapes.push(alpha_shape(&cluster));
    }
    let sets: Vec<PieceSet> = shapes
        .iter()
        .map(|s| PieceSet::new(s.triangles.iter().map(|t| t.to_vec()).collect()))
        .collect();
    let area = union_area(&sets);
    let polygons: Vec<Vec<Point>> = shapes.iter().flat_map(|s| s.loops.clone()).collect();
    Footprint {
        polygons,
        area,
        member_count,
        density: if area > 0.0 {
            member_count as f64 / area
        } else {
            0.0
        },
        shapes,
    }
}

fn coordinate_ranges(points: &[Point]) -> (f64, f64) {
    let (lo, hi) = crate::geometry::bounding_box(points);
    ((hi[0] - lo[0]).max(0.0), (hi[1] - lo[1]).max(0.0))
}

fn footprint_of(points: &[Point], formula: EpsFormula) -> Result<Footprint, FootprintError> {
    let (r1, r2) = coordinate_ranges(points);
    let params = dbscan_params(points.len(), r1, r2, formula)?;
    let labels = dbscan(points, &params);
    Ok(footprint(points, &labels))
}

/// Area occupied by all test instances: DBSCAN over every point with
/// r = total instance count, then the footprint area of all dense clusters.
pub fn area_is(coords: &[Point], formula: EpsFormula) -> Result<f64, FootprintError> {
    Ok(area_is_footprint(coords, formula)?.area)
}

/// The footprint behind [`area_is`], for plotting and reports.
pub fn area_is_footprint(
    coords: &[Point],
    formula: EpsFormula,
) -> Result<Footprint, FootprintError> {
    footprint_of(coords, formula)
}

/// Breakdown of the buggy-region area computation.
#[derive(Debug, Clone)]
pub struct BugArea {
    /// Footprint of the failing points alone.
    pub bug_footprint: Footprint,
    /// Footprint of the safe points (empty when no safe points exist).
    pub safe_footprint: Footprint,
    /// Area subtracted because safe points outnumbered buggy ones.
    pub removed_area: f64,
    /// Final area after the purity rule.
    pub area: f64,
}

/// Area of the buggy region: footprint of the failing points, minus every
/// overlap with the safe-point footprint in which safe points outnumber
/// buggy points. Overlaps where buggy points dominate are kept unchanged.
pub fn area_bugs(
    coords: &[Point],
    outcomes: &[u8],
    formula: EpsFormula,
) -> Result<f64, FootprintError> {
    Ok(area_bugs_detail(coords, outcomes, formula)?.area)
}

pub fn area_bugs_detail(
    coords: &[Point],
    outcomes: &[u8],
    formula: EpsFormula,
) -> Result<BugArea, FootprintError> {
    if coords.len() != outcomes.len() {
        return Err(FootprintError::LengthMismatch {
            coords: coords.len(),
            outcomes: outcomes.len(),
        });
    }
    let bug_points: Vec<Point> = coords
        .iter()
        .zip(outcomes)
        .filter(|(_, y)| **y == 1)
        .map(|(p, _)| *p)
        .collect();
    if bug_points.is_empty() {
        return Err(FootprintError::NoFailingScenarios);
    }
    let safe_points: Vec<Point> = coords
        .iter()
        .zip(outcomes)
        .filter(|(_, y)| **y == 0)
        .map(|(p, _)| *p)
        .collect();

    let bug_footprint = footprint_of(&bug_points, formula)?;
    let safe_footprint = if safe_points.is_empty() {
        Footprint::empty()
    } else {
        footprint_of(&safe_points, formula)?
    };

    let bug_sets = bug_footprint.piece_sets();
    let safe_sets = safe_footprint.piece_sets();
    let bug_area = union_area(&bug_sets);

    // Purity rule per pairwise overlap of bug and safe cluster shapes:
    // count the points of each population inside the overlap region and
    // subtract the region unless buggy points strictly outnumber safe ones.
    let mut impure: Vec<PieceSet> = Vec::new();
    for bug_set in &bug_sets {
        for safe_set in &safe_sets {
            let region = bug_set.intersect(safe_set);
            if region.is_empty() || region.area() <= 0.0 {
                continue;
            }
            let buggy_inside = bug_points.iter().filter(|p| region.contains(**p)).count();
            let safe_inside = safe_points.iter().filter(|p| region.contains(**p)).count();
            if buggy_inside <= safe_inside {
                impure.push(region);
            }
        }
    }
    let removed_area = if impure.is_empty() {
        0.0
    } else {
        union_area(&impure)
    };
    let area = (bug_area - removed_area).max(0.0);
    Ok(BugArea {
        bug_footprint,
        safe_footprint,
        removed_area,
        area,
    })
}
