//! Alpha shapes over a Delaunay triangulation, using the smallest alpha
//! whose triangle complex forms a single edge-connected region.

use std::collections::HashMap;

use super::{cross, dist2, polygon_area, Point};

/// Concave footprint of one point cloud: the triangles of the critical
/// alpha complex, its boundary loops (outer loops CCW, holes CW), and the
/// exact area of the triangle union.
#[derive(Debug, Clone)]
pub struct AlphaShape {
    pub triangles: Vec<[Point; 3]>,
    pub loops: Vec<Vec<Point>>,
    pub area: f64,
    pub alpha: f64,
}

impl AlphaShape {
    pub fn empty() -> Self {
        Self {
            triangles: Vec::new(),
            loops: Vec::new(),
            area: 0.0,
            alpha: 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.triangles.is_empty()
    }
}

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[rb as usize] = ra;
        true
    }
}

fn circumradius(a: Point, b: Point, c: Point) -> f64 {
    let area2 = cross(a, b, c).abs();
    if area2 <= 0.0 {
        return f64::INFINITY;
    }
    let la = dist2(b, c).sqrt();
    let lb = dist2(a, c).sqrt();
    let lc = dist2(a, b).sqrt();
    la * lb * lc / (2.0 * area2)
}

/// Compute the alpha shape of a point cloud at the one-region critical
/// alpha: triangles are admitted in order of circumradius until the admitted
/// complex is a single connected component covering every triangulated
/// point. Degenerate inputs (fewer than 3 distinct points, or all
/// collinear) yield an empty shape with area 0.
pub fn alpha_shape(points: &[Point]) -> AlphaShape {
    let sites: Vec<delaunator::Point> = points
        .iter()
        .map(|p| delaunator::Point { x: p[0], y: p[1] })
        .collect();
    let tri = delaunator::triangulate(&sites);
    let n_tris = tri.triangles.len() / 3;
    if n_tris == 0 {
        return AlphaShape::empty();
    }

    let vertex = |t: usize, k: usize| tri.triangles[3 * t + k];
    let radii: Vec<f64> = (0..n_tris)
        .map(|t| circumradius(points[vertex(t, 0)], points[vertex(t, 1)], points[vertex(t, 2)]))
        .collect();
    let mut order: Vec<usize> = (0..n_tris).collect();
    order.sort_by(|&a, &b| radii[a].partial_cmp(&radii[b]).unwrap().then(a.cmp(&b)));

    // points participating in the triangulation (duplicates never appear)
    let mut in_triangulation = vec![false; points.len()];
    let mut total_vertices = 0usize;
    for &v in &tri.triangles {
        if !in_triangulation[v] {
            in_triangulation[v] = true;
            total_vertices += 1;
        }
    }

    let mut dsu = Dsu::new(n_tris);
    let mut active = vec![false; n_tris];
    let mut covered = vec![false; points.len()];
    let mut covered_count = 0usize;
    let mut components = 0usize;
    let mut kept_alpha = f64::INFINITY;
    let mut pos = 0usize;
    while pos < order.len() {
        let batch_radius = radii[order[pos]];
        while pos < order.len() && radii[order[pos]] == batch_radius {
            let t = order[pos];
            active[t] = true;
            components += 1;
            for k in 0..3 {
                let v = vertex(t, k);
                if !covered[v] {
                    covered[v] = true;
                    covered_count += 1;
                }
            }
            for e in 3 * t..3 * t + 3 {
                let twin = tri.halfedges[e];
                if twin != delaunator::EMPTY {
                    let nb = twin / 3;
                    if active[nb] && dsu.union(t as u32, nb as u32) {
                        components -= 1;
                    }
                }
            }
            pos += 1;
        }
        if components == 1 && covered_count == total_vertices {
            kept_alpha = batch_radius;
            break;
        }
    }
    // The full Delaunay complex is connected and covers every vertex.
    debug_assert!(kept_alpha.is_finite() || (components == 1 && covered_count == total_vertices));

    // Fill enclosed holes so each cluster footprint is solid: excluded
    // triangles whose component never reaches the outer face are inside
    // the shape and get re-admitted.
    let mut outside = vec![false; n_tris];
    let mut stack: Vec<usize> = (0..n_tris)
        .filter(|&t| {
            !active[t] && (3 * t..3 * t + 3).any(|e| tri.halfedges[e] == delaunator::EMPTY)
        })
        .collect();
    for &t in &stack {
        outside[t] = true;
    }
    while let Some(t) = stack.pop() {
        for e in 3 * t..3 * t + 3 {
            let twin = tri.halfedges[e];
            if twin != delaunator::EMPTY {
                let nb = twin / 3;
                if !active[nb] && !outside[nb] {
                    outside[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    for t in 0..n_tris {
        if !active[t] && !outside[t] {
            active[t] = true;
        }
    }

    let kept: Vec<usize> = (0..n_tris).filter(|&t| active[t]).collect();
    let mut triangles = Vec::with_capacity(kept.len());
    let mut area = 0.0;
    for &t in &kept {
        let (a, mut b, mut c) = (
            points[vertex(t, 0)],
            points[vertex(t, 1)],
            points[vertex(t, 2)],
        );
        if cross(a, b, c) < 0.0 {
            std::mem::swap(&mut b, &mut c);
        }
        area += cross(a, b, c).abs() / 2.0;
        triangles.push([a, b, c]);
    }

    let loops = boundary_loops(&kept, &tri, points);
    AlphaShape {
        triangles,
        loops,
        area,
        alpha: kept_alpha,
    }
}

/// Extract the boundary of the kept complex as simple closed loops. Each
/// directed edge whose reverse is absent lies on the boundary; loops that
/// revisit a vertex (pinch points) are split into simple sub-loops.
fn boundary_loops(
    kept: &[usize],
    tri: &delaunator::Triangulation,
    points: &[Point],
) -> Vec<Vec<Point>> {
    let vertex = |t: usize, k: usize| tri.triangles[3 * t + k];
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    let mut tri_edges: Vec<(usize, usize)> = Vec::new();
    for &t in kept {
        let (a, b, c) = (vertex(t, 0), vertex(t, 1), vertex(t, 2));
        // orient CCW so outer boundaries come out CCW
        let ccw = cross(points[a], points[b], points[c]) >= 0.0;
        let edges = if ccw {
            [(a, b), (b, c), (c, a)]
        } else {
            [(a, c), (c, b), (b, a)]
        };
        for e in edges {
            directed.insert(e, ());
            tri_edges.push(e);
        }
    }
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut boundary: Vec<(usize, usize)> = tri_edges
        .into_iter()
        .filter(|&(u, v)| !directed.contains_key(&(v, u)))
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    for &(u, v) in &boundary {
        outgoing.entry(u).or_default().push(v);
    }
    for targets in outgoing.values_mut() {
        targets.sort_unstable();
    }

    let mut loops = Vec::new();
    for &(start, first) in &boundary {
        if !outgoing.get(&start).is_some_and(|t| t.contains(&first)) {
            continue;
        }
        take_edge(&mut outgoing, start, first);
        let mut walk = vec![start];
        let mut cur = first;
        while cur != start {
            walk.push(cur);
            let Some(next) = next_edge(&mut outgoing, cur) else {
                break;
            };
            cur = next;
        }
        for simple in split_simple(&walk) {
            loops.push(simple.into_iter().map(|i| points[i]).collect::<Vec<Point>>());
        }
    }
    loops.retain(|lp: &Vec<Point>| lp.len() >= 3 && polygon_area(lp) > 0.0);
    loops
}

fn take_edge(outgoing: &mut HashMap<usize, Vec<usize>>, u: usize, v: usize) {
    if let Some(targets) = outgoing.get_mut(&u) {
        if let Some(pos) = targets.iter().position(|&t| t == v) {
            targets.remove(pos);
        }
    }
}

fn next_edge(outgoing: &mut HashMap<usize, Vec<usize>>, u: usize) -> Option<usize> {
    let targets = outgoing.get_mut(&u)?;
    if targets.is_empty() {
        return None;
    }
    Some(targets.remove(0))
}

fn split_simple(walk: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            let cycle: Vec<usize> = path.drain(i..).collect();
            for w in &cycle {
                pos.remove(w);
            }
            if cycle.len() >= 3 {
                out.push(cycle);
            }
        }
        pos.insert(v, path.len());
        path.push(v);
    }
    if path.len() >= 3 {
        out.push(path);
    }
    out
}
