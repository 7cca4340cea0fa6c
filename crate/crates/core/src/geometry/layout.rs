use super::{GeometryError, Layout2D};
use crate::MolecularGraph;

const ITERATIONS: usize = 500;
const STEP: f64 = 0.05;
const SPRING_LENGTH: f64 = 1.0;
/// Coefficient of the inverse-square repulsion between every atom pair.
pub const REPULSION: f64 = 0.04;

fn separation(p: [f64; 2], q: [f64; 2]) -> ([f64; 2], f64) {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let d = (dx * dx + dy * dy).sqrt();
    if d < 1e-9 {
        ([1.0, 0.0], 1e-9)
    } else {
        ([dx / d, dy / d], d)
    }
}

/// Force-directed layout: unit-length bond springs plus inverse-square
/// repulsion between all pairs, started from atom `i` at angle `2πi/n` on
/// the unit circle, then 500 fixed steps of 0.05 and a shift to the
/// centroid.
pub fn layout_2d(graph: &MolecularGraph) -> Result<Layout2D, GeometryError> {
    let n = graph.atom_count();
    if n == 0 {
        return Err(GeometryError::Empty);
    }
    let mut pos: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut force = vec![[0.0f64; 2]; n];
    for _ in 0..ITERATIONS {
        force.iter_mut().for_each(|f| *f = [0.0, 0.0]);
        for b in graph.bonds() {
            let (u, d) = separation(pos[b.i], pos[b.j]);
            let f = d - SPRING_LENGTH;
            for a in 0..2 {
                force[b.i][a] += f * u[a];
                force[b.j][a] -= f * u[a];
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (u, d) = separation(pos[i], pos[j]);
                let f = REPULSION / (d * d);
                for a in 0..2 {
                    force[i][a] -= f * u[a];
                    force[j][a] += f * u[a];
                }
            }
        }
        for (p, f) in pos.iter_mut().zip(&force) {
            p[0] += STEP * f[0];
            p[1] += STEP * f[1];
        }
    }
    let cx = pos.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = pos.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    Ok(Layout2D { coords: pos.into_iter().map(|p| [p[0] - cx, p[1] - cy]).collect() })
}
