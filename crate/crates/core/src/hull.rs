//! Convex hulls in the plane and in space, built from support oracles.
//!
//! A hull is grown by repeatedly asking the oracle for the extreme point in
//! the outer normal of each face; faces whose normal yields nothing new are
//! final. Because every vertex is a point of the body and every final face
//! plane supports it, the result is the exact hull of the body.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

pub type P3 = [f64; 3];
pub type P2 = [f64; 2];

const MAX_ORACLE_CALLS: usize = 5_000_000;
const REL_TOL: f64 = 1e-11;

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &P3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Triangulated boundary of a convex polytope in `R^3`, faces oriented
/// counter-clockwise seen from outside. Empty faces mean a flat body.
#[derive(Debug, Clone, Default)]
pub struct Hull3 {
    pub vertices: Vec<P3>,
    pub faces: Vec<[usize; 3]>,
}

impl Hull3 {
    pub fn is_flat(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn volume(&self) -> f64 {
        if self.faces.is_empty() {
            return 0.0;
        }
        let c = self.centroid();
        self.faces
            .iter()
            .map(|f| {
                let a = sub(&self.vertices[f[0]], &c);
                let b = sub(&self.vertices[f[1]], &c);
                let d = sub(&self.vertices[f[2]], &c);
                dot(&a, &cross(&b, &d))
            })
            .sum::<f64>()
            / 6.0
    }

    fn centroid(&self) -> P3 {
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for i in 0..3 {
                c[i] += v[i];
            }
        }
        scale(&c, 1.0 / self.vertices.len() as f64)
    }

    /// Vertex adjacency along face edges.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                }
                if !adj[b].contains(&a) {
                    adj[b].push(a);
                }
            }
        }
        adj
    }
}

struct Face {
    v: [usize; 3],
    normal: P3,
    alive: bool,
}

fn seed_directions() -> Vec<P3> {
    let mut dirs = Vec::new();
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    let d = [i as f64, j as f64, k as f64];
                    dirs.push(scale(&d, 1.0 / norm(&d)));
                }
            }
        }
    }
    // generic directions break ties on axis-aligned bodies
    for d in [
        [0.31, 0.72, 0.55],
        [-0.64, 0.21, 0.43],
        [0.12, -0.53, 0.88],
        [-0.41, -0.37, -0.74],
    ] {
        dirs.push(scale(&d, 1.0 / norm(&d)));
    }
    dirs
}

fn unit_perpendiculars(d: &P3) -> (P3, P3) {
    let helper = if d[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = cross(d, &helper);
    let u = scale(&u, 1.0 / norm(&u));
    let w = cross(d, &u);
    (u, scale(&w, 1.0 / norm(&w)))
}

/// Hull of a convex body given by an oracle returning an extreme point for a
/// unit direction.
pub fn hull3_from_oracle<F: FnMut(&P3) -> P3>(mut oracle: F) -> Result<Hull3> {
    let mut pts: Vec<P3> = seed_directions().iter().map(&mut oracle).collect();
    let extent = |pts: &[P3]| {
        pts.iter()
            .map(|p| norm(&sub(p, &pts[0])))
            .fold(0.0, f64::max)
    };
    let mut diam = extent(&pts);
    if diam == 0.0 {
        return Ok(Hull3 {
            vertices: vec![pts[0]],
            faces: vec![],
        });
    }
    let tol = REL_TOL * diam.max(pts.iter().map(norm).fold(0.0, f64::max));

    // initial simplex
    let a = pts[0];
    let b = *pts
        .iter()
        .max_by(|p, q| norm(&sub(p, &a)).total_cmp(&norm(&sub(q, &a))))
        .unwrap();
    let ab = sub(&b, &a);
    let line_dist = |p: &P3| norm(&cross(&ab, &sub(p, &a))) / norm(&ab);
    let mut c = *pts
        .iter()
        .max_by(|p, q| line_dist(p).total_cmp(&line_dist(q)))
        .unwrap();
    if line_dist(&c) <= tol {
        let (u, w) = unit_perpendiculars(&scale(&ab, 1.0 / norm(&ab)));
        for d in [u, w, scale(&u, -1.0), scale(&w, -1.0)] {
            pts.push(oracle(&d));
        }
        c = *pts
            .iter()
            .max_by(|p, q| line_dist(p).total_cmp(&line_dist(q)))
            .unwrap();
        if line_dist(&c) <= tol {
            return Ok(Hull3 {
                vertices: vec![a, b],
                faces: vec![],
            });
        }
    }
    let plane = cross(&ab, &sub(&c, &a));
    let plane = scale(&plane, 1.0 / norm(&plane));
    let plane_dist = |p: &P3| dot(&plane, &sub(p, &a)).abs();
    let mut d = *pts
        .iter()
        .max_by(|p, q| plane_dist(p).total_cmp(&plane_dist(q)))
        .unwrap();
    if plane_dist(&d) <= tol {
        pts.push(oracle(&plane));
        pts.push(oracle(&scale(&plane, -1.0)));
        d = *pts
            .iter()
            .max_by(|p, q| plane_dist(p).total_cmp(&plane_dist(q)))
            .unwrap();
        if plane_dist(&d) <= tol {
            return Ok(Hull3 {
                vertices: vec![a, b, c],
                faces: vec![],
            });
        }
    }
    diam = diam.max(extent(&pts));
    let tol = REL_TOL * diam.max(pts.iter().map(norm).fold(0.0, f64::max));

    let mut verts = vec![a, b, c, d];
    let interior = scale(
        &[
            a[0] + b[0] + c[0] + d[0],
            a[1] + b[1] + c[1] + d[1],
            a[2] + b[2] + c[2] + d[2],
        ],
        0.25,
    );
    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let add_face = |v: [usize; 3],
                    verts: &[P3],
                    faces: &mut Vec<Face>,
                    edges: &mut HashMap<(usize, usize), usize>,
                    queue: &mut VecDeque<usize>| {
        let normal = cross(
            &sub(&verts[v[1]], &verts[v[0]]),
            &sub(&verts[v[2]], &verts[v[0]]),
        );
        let idx = faces.len();
        faces.push(Face {
            v,
            normal,
            alive: true,
        });
        for k in 0..3 {
            edges.insert((v[k], v[(k + 1) % 3]), idx);
        }
        queue.push_back(idx);
    };

    for tri in [[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]] {
        let n = cross(
            &sub(&verts[tri[1]], &verts[tri[0]]),
            &sub(&verts[tri[2]], &verts[tri[0]]),
        );
        let oriented = if dot(&n, &sub(&interior, &verts[tri[0]])) > 0.0 {
            [tri[0], tri[2], tri[1]]
        } else {
            tri
        };
        add_face(oriented, &verts, &mut faces, &mut edges, &mut queue);
    }

    let mut calls = 0usize;
    while let Some(f) = queue.pop_front() {
        if !faces[f].alive {
            continue;
        }
        let n = faces[f].normal;
        let len = norm(&n);
        if len == 0.0 {
            continue;
        }
        let u = scale(&n, 1.0 / len);
        calls += 1;
        if calls > MAX_ORACLE_CALLS {
            return Err(Error::NumericalFailure(
                "convex hull did not converge".into(),
            ));
        }
        let p = oracle(&u);
        if dot(&u, &sub(&p, &verts[faces[f].v[0]])) <= tol {
            continue;
        }
        let pi = verts.len();
        verts.push(p);

        let beyond =
            |face: &Face| dot(&face.normal, &sub(&p, &verts[face.v[0]])) > tol * norm(&face.normal);
        let mut visible = vec![f];
        let mut seen = std::collections::HashSet::from([f]);
        let mut head = 0;
        while head < visible.len() {
            let g = visible[head];
            head += 1;
            let v = faces[g].v;
            for k in 0..3 {
                if let Some(&h) = edges.get(&(v[(k + 1) % 3], v[k])) {
                    if !seen.contains(&h) && beyond(&faces[h]) {
                        seen.insert(h);
                        visible.push(h);
                    }
                }
            }
        }
        let mut horizon = Vec::new();
        for &g in &visible {
            let v = faces[g].v;
            for k in 0..3 {
                let (x, y) = (v[k], v[(k + 1) % 3]);
                match edges.get(&(y, x)) {
                    Some(h) if seen.contains(h) => {}
                    _ => horizon.push((x, y)),
                }
            }
        }
        for &g in &visible {
            faces[g].alive = false;
            let v = faces[g].v;
            for k in 0..3 {
                if edges.get(&(v[k], v[(k + 1) % 3])) == Some(&g) {
                    edges.remove(&(v[k], v[(k + 1) % 3]));
                }
            }
        }
        for (x, y) in horizon {
            add_face([x, y, pi], &verts, &mut faces, &mut edges, &mut queue);
        }
    }

    // compact
    let mut remap = vec![usize::MAX; verts.len()];
    let mut vertices = Vec::new();
    let mut out = Vec::new();
    for face in faces.iter().filter(|f| f.alive) {
        let mut t = [0; 3];
        for k in 0..3 {
            let v = face.v[k];
            if remap[v] == usize::MAX {
                remap[v] = vertices.len();
                vertices.push(verts[v]);
            }
            t[k] = remap[v];
        }
        out.push(t);
    }
    Ok(Hull3 {
        vertices,
        faces: out,
    })
}

/// Hull of a finite point set in `R^3`.
pub fn hull3_points(points: &[P3]) -> Result<Hull3> {
    if points.is_empty() {
        return Err(Error::InvalidInput("hull of an empty point set".into()));
    }
    hull3_from_oracle(|u| {
        *points
            .iter()
            .max_by(|p, q| dot(p, u).total_cmp(&dot(q, u)))
            .unwrap()
    })
}

/// A polytope in `R^3` prepared for fast support queries.
#[derive(Debug, Clone)]
pub struct Polytope3 {
    vertices: Vec<P3>,
    adjacency: Vec<Vec<usize>>,
    flat: bool,
}

const BRUTE_FORCE_LIMIT: usize = 48;

impl Polytope3 {
    pub fn new(points: &[P3]) -> Result<Self> {
        let hull = hull3_points(points)?;
        if hull.is_flat() {
            return Ok(Self {
                vertices: points.to_vec(),
                adjacency: vec![],
                flat: true,
            });
        }
        let adjacency = hull.adjacency();
        Ok(Self {
            vertices: hull.vertices,
            adjacency,
            flat: false,
        })
    }

    pub fn vertices(&self) -> &[P3] {
        &self.vertices
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn volume(&self) -> Result<f64> {
        if self.flat {
            return Ok(0.0);
        }
        Ok(hull3_points(&self.vertices)?.volume())
    }

    /// Index of an extreme vertex in direction `u`, starting a hill climb at
    /// `start`.
    pub fn extreme(&self, u: &P3, start: usize) -> usize {
        if self.flat || self.vertices.len() <= BRUTE_FORCE_LIMIT {
            return (0..self.vertices.len())
                .max_by(|&i, &j| dot(&self.vertices[i], u).total_cmp(&dot(&self.vertices[j], u)))
                .unwrap();
        }
        let mut cur = start.min(self.vertices.len() - 1);
        let mut best = dot(&self.vertices[cur], u);
        loop {
            let mut moved = false;
            for &nb in &self.adjacency[cur] {
                let d = dot(&self.vertices[nb], u);
                if d > best {
                    best = d;
                    cur = nb;
                    moved = true;
                }
            }
            if !moved {
                return cur;
            }
        }
    }
}

/// Volume of `sum_i lambda_i P_i` for polytopes in `R^3`.
pub fn minkowski_volume3(parts: &[(f64, &Polytope3)]) -> Result<f64> {
    let active: Vec<(f64, &Polytope3)> = parts.iter().filter(|(l, _)| *l != 0.0).copied().collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let mut cursor = vec![0usize; active.len()];
    let hull = hull3_from_oracle(|u| {
        let mut p = [0.0; 3];
        for (k, (l, poly)) in active.iter().enumerate() {
            cursor[k] = poly.extreme(u, cursor[k]);
            let v = poly.vertices[cursor[k]];
            for i in 0..3 {
                p[i] += l * v[i];
            }
        }
        p
    })?;
    Ok(hull.volume())
}

fn cross2(o: &P2, a: &P2, b: &P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull of a planar point set (monotone chain).
pub fn hull2_points(points: &[P2]) -> Vec<P2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area of a counter-clockwise polygon.
pub fn polygon_area(poly: &[P2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// Area of `sum_i lambda_i P_i` for polygons.
pub fn minkowski_area2(parts: &[(f64, &[P2])]) -> f64 {
    let active: Vec<(f64, Vec<P2>)> = parts
        .iter()
        .filter(|(l, _)| *l != 0.0)
        .map(|(l, p)| (*l, hull2_points(p)))
        .collect();
    if active.is_empty() {
        return 0.0;
    }
    // Minkowski sum of convex polygons: merge edge vectors by angle
    let mut edges: Vec<P2> = Vec::new();
    let mut start = [0.0; 2];
    for (l, poly) in &active {
        let lowest = (0..poly.len())
            .min_by(|&i, &j| {
                poly[i][1]
                    .total_cmp(&poly[j][1])
                    .then(poly[i][0].total_cmp(&poly[j][0]))
            })
            .unwrap();
        start[0] += l * poly[lowest][0];
        start[1] += l * poly[lowest][1];
        if poly.len() < 2 {
            continue;
        }
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            edges.push([l * (b[0] - a[0]), l * (b[1] - a[1])]);
        }
    }
    let angle = |e: &P2| {
        let t = e[1].atan2(e[0]);
        if t < 0.0 {
            t + 2.0 * std::f64::consts::PI
        } else {
            t
        }
    };
    edges.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
    let mut poly = vec![start];
    let mut cur = start;
    for e in &edges {
        cur = [cur[0] + e[0], cur[1] + e[1]];
        poly.push(cur);
    }
    poly.pop();
    polygon_area(&poly)
}

/// Unit vectors of the `level`-times subdivided icosahedron
/// (`10 * 4^level + 2` points) and its triangles.
pub fn icosphere(level: usize) -> (Vec<P3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    subdivide(
        raw.iter().map(|v| scale(v, 1.0 / norm(v))).collect(),
        faces,
        level,
    )
}

/// Unit vectors of the `level`-times subdivided octahedron
/// (`4^{level+1} + 2` points); always contains `+-e_i`.
pub fn octasphere(level: usize) -> (Vec<P3>, Vec<[usize; 3]>) {
    let verts = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    subdivide(verts, faces, level)
}

fn subdivide(
    mut verts: Vec<P3>,
    mut faces: Vec<[usize; 3]>,
    level: usize,
) -> (Vec<P3>, Vec<[usize; 3]>) {
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<P3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = scale(
                    &[
                        verts[a][0] + verts[b][0],
                        verts[a][1] + verts[b][1],
                        verts[a][2] + verts[b][2],
                    ],
                    0.5,
                );
                verts.push(scale(&m, 1.0 / norm(&m)));
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// `m` equally spaced unit vectors in the plane.
pub fn circle_directions(m: usize) -> Vec<P2> {
    (0..m)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cube() -> Vec<P3> {
        (0..8)
            .map(|m| [(m & 1) as f64, ((m >> 1) & 1) as f64, ((m >> 2) & 1) as f64])
            .collect()
    }

    #[test]
    fn cube_and_simplex_volumes() {
        assert_relative_eq!(
            hull3_points(&cube()).unwrap().volume(),
            1.0,
            epsilon = 1e-14
        );
        let simplex = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        assert_relative_eq!(
            hull3_points(&simplex).unwrap().volume(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        let big: Vec<P3> = cube().iter().map(|p| scale(p, 2.0)).collect();
        assert_relative_eq!(hull3_points(&big).unwrap().volume(), 8.0, epsilon = 1e-13);
    }

    #[test]
    fn flat_sets_have_no_volume() {
        let square = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        let h = hull3_points(&square).unwrap();
        assert!(h.is_flat());
        assert_eq!(h.volume(), 0.0);
        let segment = [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        assert!(hull3_points(&segment).unwrap().is_flat());
    }

    #[test]
    fn interior_points_are_dropped() {
        let mut pts = cube();
        pts.push([0.5, 0.5, 0.5]);
        pts.push([0.2, 0.9, 0.4]);
        let h = hull3_points(&pts).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.faces.len(), 12);
    }

    #[test]
    fn icosphere_counts_and_hull() {
        for level in 0..3 {
            let (v, f) = icosphere(level);
            assert_eq!(v.len(), 10 * 4usize.pow(level as u32) + 2);
            assert_eq!(f.len(), 20 * 4usize.pow(level as u32));
            let h = hull3_points(&v).unwrap();
            assert_eq!(h.vertices.len(), v.len());
            assert!(h.volume() < 4.0 * std::f64::consts::PI / 3.0);
        }
        let (v, _) = octasphere(2);
        assert_eq!(v.len(), 66);
    }

    #[test]
    fn minkowski_matches_brute_force() {
        let (ico, _) = icosphere(1);
        let stretched: Vec<P3> = ico
            .iter()
            .map(|p| [2.0 * p[0], p[1] + 0.3 * p[2], 0.5 * p[2]])
            .collect();
        let c = Polytope3::new(&cube()).unwrap();
        let s = Polytope3::new(&stretched).unwrap();
        let fast = minkowski_volume3(&[(1.0, &c), (0.7, &s)]).unwrap();
        let mut sums = Vec::new();
        for a in cube() {
            for b in &stretched {
                sums.push([a[0] + 0.7 * b[0], a[1] + 0.7 * b[1], a[2] + 0.7 * b[2]]);
            }
        }
        let slow = hull3_points(&sums).unwrap().volume();
        assert_relative_eq!(fast, slow, max_relative = 1e-12);
    }

    #[test]
    fn hill_climb_agrees_with_scan() {
        let (ico, _) = icosphere(3);
        let p = Polytope3::new(&ico).unwrap();
        let (dirs, _) = icosphere(2);
        let mut start = 0;
        for u in &dirs {
            start = p.extreme(u, start);
            let best = p
                .vertices()
                .iter()
                .map(|v| dot(v, u))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(dot(&p.vertices()[start], u), best);
        }
    }

    #[test]
    fn planar_hulls() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let h = hull2_points(&sq);
        assert_eq!(h.len(), 4);
        assert_relative_eq!(polygon_area(&h), 1.0);
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // unit square + triangle: 1 + 0.5 + 2 = 3.5 (mixed area term 2 V(S, T) = 2)
        assert_relative_eq!(
            minkowski_area2(&[(1.0, &sq), (1.0, &tri)]),
            3.5,
            epsilon = 1e-14
        );
        let seg = [[0.0, 0.0], [1.0, 0.0]];
        assert_relative_eq!(
            minkowski_area2(&[(1.0, &seg), (2.0, &[[0.0, 0.0], [0.0, 1.0]])]),
            2.0,
            epsilon = 1e-14
        );
    }
}
