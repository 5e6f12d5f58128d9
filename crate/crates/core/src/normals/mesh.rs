//! Subdivided icosahedral mesh of the unit 2-sphere.

use std::collections::HashMap;
use std::sync::OnceLock;

/// Subdivision level used for critical-point search (40962 vertices).
pub const SEARCH_LEVEL: u32 = 6;

pub struct IcoSphere {
    pub vertices: Vec<[f64; 3]>,
    /// Neighbours of each vertex in cyclic order around it.
    pub neighbors: Vec<Vec<u32>>,
    /// Largest angle subtended by a mesh edge.
    pub max_edge_angle: f64,
}

impl IcoSphere {
    pub fn new(level: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<[f64; 3]> = [
            [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
            [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
            [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
        ]
        .into_iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<[f64; 3]>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    let (p, q) = (vertices[a as usize], vertices[b as usize]);
                    vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    (vertices.len() - 1) as u32
                })
            };
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }

        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        let mut max_edge_angle = 0.0f64;
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !neighbors[a as usize].contains(&b) {
                    neighbors[a as usize].push(b);
                    neighbors[b as usize].push(a);
                    max_edge_angle = max_edge_angle.max(angle(vertices[a as usize], vertices[b as usize]));
                }
            }
        }
        for (i, ring) in neighbors.iter_mut().enumerate() {
            let v = vertices[i];
            let (e1, e2) = tangent_basis(v);
            ring.sort_by(|&a, &b| {
                let pa = vertices[a as usize];
                let pb = vertices[b as usize];
                let ta = dot(pa, e2).atan2(dot(pa, e1));
                let tb = dot(pb, e2).atan2(dot(pb, e1));
                ta.total_cmp(&tb)
            });
        }
        Self { vertices, neighbors, max_edge_angle }
    }

    /// Shared mesh at [`SEARCH_LEVEL`].
    pub fn search_mesh() -> &'static IcoSphere {
        static MESH: OnceLock<IcoSphere> = OnceLock::new();
        MESH.get_or_init(|| IcoSphere::new(SEARCH_LEVEL))
    }
}

pub(crate) fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = dot(p, p).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Angle between two unit vectors, accurate for nearby points.
pub(crate) fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Orthonormal basis of the tangent plane at the unit vector `v`.
pub(crate) fn tangent_basis(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if v[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(cross(v, helper));
    let e2 = cross(v, e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts() {
        for level in 0..=3 {
            let m = IcoSphere::new(level);
            assert_eq!(m.vertices.len(), 10 * 4usize.pow(level) + 2);
            let valences: Vec<usize> = m.neighbors.iter().map(Vec::len).collect();
            assert_eq!(valences.iter().filter(|&&k| k == 5).count(), 12);
            assert!(valences.iter().all(|&k| k == 5 || k == 6));
        }
        assert_eq!(IcoSphere::search_mesh().vertices.len(), 40962);
    }

    #[test]
    fn rings_are_cyclic() {
        let m = IcoSphere::new(2);
        for (i, ring) in m.neighbors.iter().enumerate() {
            // consecutive ring members are themselves adjacent
            for k in 0..ring.len() {
                let (a, b) = (ring[k], ring[(k + 1) % ring.len()]);
                assert!(m.neighbors[a as usize].contains(&b), "vertex {i}");
            }
        }
    }
}
