//! Reference computations for the integration tests. Nothing here calls into
//! the library's geometry; it is plain `f64` arithmetic on small matrices.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, RngExt};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub type Mat = Vec<Vec<f64>>;

pub fn det(m: &Mat) -> f64 {
    let n = m.len();
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

pub fn inverse(m: &Mat) -> Mat {
    let n = m.len();
    let mut a: Mat = m.to_vec();
    let mut inv: Mat = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(piv, c);
        inv.swap(piv, c);
        let p = a[c][c];
        for k in 0..n {
            a[c][k] /= p;
            inv[c][k] /= p;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for k in 0..n {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    inv
}

pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("d = {d}"),
    }
}

/// Minimum-volume enclosing ellipsoid `(x−c)ᵀA(x−c) ≤ 1` of a point set by
/// Khachiyan's algorithm with away steps, stopped at relative tolerance `tol`.
pub struct RefEllipsoid {
    pub center: Vec<f64>,
    pub a: Mat,
}

impl RefEllipsoid {
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.center.len()) / det(&self.a).sqrt()
    }
}

pub fn khachiyan(points: &[Vec<f64>], tol: f64) -> RefEllipsoid {
    let n = points.len();
    let d = points[0].len();
    let q: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().chain([1.0]).collect()).collect();
    let mut u = vec![1.0 / n as f64; n];
    let m = (d + 1) as f64;
    for _ in 0..1_000_000 {
        let mut x = vec![vec![0.0; d + 1]; d + 1];
        for (qi, &ui) in q.iter().zip(&u) {
            for r in 0..=d {
                for c in 0..=d {
                    x[r][c] += ui * qi[r] * qi[c];
                }
            }
        }
        let xi = inverse(&x);
        let lev: Vec<f64> =
            q.iter().map(|qi| (0..=d).map(|r| (0..=d).map(|c| qi[r] * xi[r][c] * qi[c]).sum::<f64>()).sum()).collect();
        let (jp, mp) = lev.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let (jm, mm) =
            lev.iter().copied().enumerate().filter(|&(i, _)| u[i] > 0.0).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let up = mp / m - 1.0;
        let down = 1.0 - mm / m;
        if up.max(down) <= tol {
            break;
        }
        if up > down {
            let beta = (mp - m) / (m * (mp - 1.0));
            for w in u.iter_mut() {
                *w *= 1.0 - beta;
            }
            u[jp] += beta;
        } else {
            let beta = ((m - mm) / (m * (mm - 1.0))).min(u[jm] / (1.0 - u[jm]));
            for w in u.iter_mut() {
                *w *= 1.0 + beta;
            }
            u[jm] -= beta;
            u[jm] = u[jm].max(0.0);
        }
    }
    let mut c = vec![0.0; d];
    for (p, &w) in points.iter().zip(&u) {
        for k in 0..d {
            c[k] += w * p[k];
        }
    }
    let mut s = vec![vec![0.0; d]; d];
    for (p, &w) in points.iter().zip(&u) {
        for r in 0..d {
            for k in 0..d {
                s[r][k] += w * (p[r] - c[r]) * (p[k] - c[k]);
            }
        }
    }
    let a = inverse(&s).into_iter().map(|row| row.into_iter().map(|v| v / d as f64).collect()).collect();
    RefEllipsoid { center: c, a }
}

/// A convex polytope given by its vertices (all extreme) and, for the
/// planar case, in counter-clockwise order.
#[derive(Clone, Debug)]
pub struct Poly {
    pub vertices: Vec<Vec<f64>>,
    /// Vertex triples of the boundary facets (edges as pairs in 2-D).
    pub facets: Vec<Vec<usize>>,
}

fn random_linear<R: Rng>(rng: &mut R, d: usize) -> Mat {
    // rotation times an axis scaling in [0.5, 1.5]
    loop {
        let m: Mat = (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        if det(&m).abs() > 0.2 {
            let mut q = m.clone();
            for i in 0..d {
                for j in 0..i {
                    let dot: f64 = (0..d).map(|k| q[i][k] * q[j][k]).sum();
                    for k in 0..d {
                        q[i][k] -= dot * q[j][k];
                    }
                }
                let n = q[i].iter().map(|v| v * v).sum::<f64>().sqrt();
                for k in 0..d {
                    q[i][k] /= n;
                }
            }
            let s: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
            return (0..d).map(|i| (0..d).map(|j| q[i][j] * s[j]).collect()).collect();
        }
    }
}

fn apply(m: &Mat, x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Points on an ellipse at sorted random angles; every one is a vertex.
pub fn random_polygon<R: Rng>(rng: &mut R, n: usize) -> Poly {
    let m = random_linear(rng, 2);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    let mut vertices: Vec<Vec<f64>> = angles.iter().map(|t| apply(&m, &[t.cos(), t.sin()])).collect();
    // the linear map may flip orientation
    if signed_area(&vertices) < 0.0 {
        vertices.reverse();
    }
    let facets = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    Poly { vertices, facets }
}

fn signed_area(v: &[Vec<f64>]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>() / 2.0
}

/// Points on a linearly mapped sphere, with facets found by brute force.
pub fn random_polytope_3d<R: Rng>(rng: &mut R, n: usize) -> Poly {
    let m = random_linear(rng, 3);
    let vertices: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            apply(&m, &[r * t.cos(), r * t.sin(), z])
        })
        .collect();
    let mut facets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (&vertices[i], &vertices[j], &vertices[k]);
                let e1: Vec<f64> = (0..3).map(|t| b[t] - a[t]).collect();
                let e2: Vec<f64> = (0..3).map(|t| c[t] - a[t]).collect();
                let nrm = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
                let side = |p: &Vec<f64>| (0..3).map(|t| nrm[t] * (p[t] - a[t])).sum::<f64>();
                let (mut pos, mut neg) = (false, false);
                for p in &vertices {
                    let s = side(p);
                    pos |= s > 1e-12;
                    neg |= s < -1e-12;
                }
                if !(pos && neg) {
                    facets.push(vec![i, j, k]);
                }
            }
        }
    }
    Poly { vertices, facets }
}

impl Poly {
    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.vertices.len() as f64;
        (0..d).map(|k| self.vertices.iter().map(|v| v[k]).sum::<f64>() / n).collect()
    }

    pub fn circumradius_about_origin(&self) -> f64 {
        self.vertices.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// Uniform point on a random facet (not area weighted).
    pub fn boundary_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let f = &self.facets[rng.random_range(0..self.facets.len())];
        let w = random_barycentric(rng, f.len());
        let d = self.dim();
        (0..d).map(|k| f.iter().zip(&w).map(|(&i, wi)| wi * self.vertices[i][k]).sum()).collect()
    }

    /// Exit parameter of the ray `p + t·u` for a planar polygon (CCW).
    pub fn ray_exit_2d(&self, p: &[f64], u: &[f64]) -> f64 {
        let n = self.vertices.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            // outward normal of a CCW edge
            let nrm = [b[1] - a[1], a[0] - b[0]];
            let den = nrm[0] * u[0] + nrm[1] * u[1];
            if den > 0.0 {
                let num = nrm[0] * (a[0] - p[0]) + nrm[1] * (a[1] - p[1]);
                best = best.min(num / den);
            }
        }
        best
    }

    pub fn contains_2d(&self, p: &[f64]) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
        })
    }
}

pub fn random_barycentric<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point of the cross-polytope `c + Σ sᵢhᵢ`, `Σ|sᵢ| ≤ 1`.
pub fn uniform_in_cross_polytope<R: Rng>(rng: &mut R, center: &[f64], half: &[Vec<f64>]) -> Vec<f64> {
    let d = center.len();
    // the first d coordinates of a uniform point of the (d+1)-simplex
    let w = random_barycentric(rng, d + 1);
    let mut x = center.to_vec();
    for (i, h) in half.iter().enumerate() {
        let s = if rng.random::<bool>() { w[i] } else { -w[i] };
        for k in 0..d {
            x[k] += s * h[k];
        }
    }
    x
}

/// `Σᵢ |⟨x−c, hᵢ⟩| / ‖hᵢ‖²` for mutually orthogonal `hᵢ`; ≤ 1 inside.
pub fn cross_gauge(x: &[f64], center: &[f64], half: &[Vec<f64>]) -> f64 {
    half.iter()
        .map(|h| {
            let dot: f64 = h.iter().zip(x.iter().zip(center)).map(|(hk, (xk, ck))| hk * (xk - ck)).sum();
            dot.abs() / h.iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

/// Membership in one of the analytic scenario shapes, read straight from
/// the scenario JSON.
pub fn analytic_contains(shape: &serde_json::Value, p: &[f64]) -> bool {
    let v = |k: &str| -> Vec<f64> { shape[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    match shape["kind"].as_str().unwrap() {
        "ball" => {
            let c = v("center");
            let r = shape["radius"].as_f64().unwrap();
            c.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() <= r * r
        }
        "ellipsoid" => {
            assert!(shape.get("angle").is_none() && shape.get("axes").is_none());
            let c = v("center");
            let s = v("semi_axes");
            (0..c.len()).map(|k| ((p[k] - c[k]) / s[k]).powi(2)).sum::<f64>() <= 1.0
        }
        "box" => {
            let lo = v("lo");
            let hi = v("hi");
            (0..lo.len()).all(|k| lo[k] <= p[k] && p[k] <= hi[k])
        }
        "polytope" => {
            let verts: Vec<Vec<f64>> = shape["vertices"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
                .collect();
            assert_eq!(verts[0].len(), 2, "planar polygons only");
            let mut poly = Poly { facets: vec![], vertices: verts };
            if signed_area(&poly.vertices) < 0.0 {
                poly.vertices.reverse();
            }
            poly.contains_2d(p)
        }
        k => panic!("shape kind {k}"),
    }
}

pub fn scenario_shapes(name: &str) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["map"]["shapes"].as_array().unwrap().clone()
}

pub fn in_any(shapes: &[serde_json::Value], p: &[f64]) -> bool {
    shapes.iter().any(|s| analytic_contains(s, p))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
