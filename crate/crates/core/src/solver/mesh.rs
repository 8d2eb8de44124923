//! Zero-Dirichlet discretisation on the cell-centred grid.
//!
//! Unknowns sit at the cell centres; boundary nodes sit on the faces of the
//! box at half a cell from the first centre and carry the value 0. In 1-D the
//! nodes are joined by segments. In 2-D every rectangle of four neighbouring
//! nodes is split into a lower-left and an upper-right triangle, so for a
//! quadratic N-function the discrete operator is the five-point Laplacian.
//! The load uses the cell measure.

use super::linalg::Csr;
use crate::field::SampledField;

#[derive(Debug, Clone)]
pub struct Element {
    /// Unknown index of each vertex, `None` for boundary nodes.
    pub nodes: [Option<usize>; 3],
    /// Gradient rows: `g[r] = Σ_k coef[r][k] u(node_k)`.
    pub coef: [[f64; 3]; 2],
    /// Length or area.
    pub weight: f64,
    /// Barycentre, used for `x`-dependent data.
    pub centre: [f64; 2],
}

impl Element {
    pub fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let val = |k: usize| self.nodes[k].map_or(0.0, |i| u[i]);
        let mut g = [0.0; 2];
        for (r, gr) in g.iter_mut().enumerate() {
            for k in 0..3 {
                if self.coef[r][k] != 0.0 {
                    *gr += self.coef[r][k] * val(k);
                }
            }
        }
        g
    }

    /// Mean of the vertex values, boundary nodes included.
    pub fn mean_value(&self, u: &[f64], vertices: usize) -> f64 {
        self.nodes[..vertices].iter().map(|n| n.map_or(0.0, |i| u[i])).sum::<f64>() / vertices as f64
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub elements: Vec<Element>,
    /// Vertices per element: 2 in 1-D, 3 in 2-D.
    pub vertices: usize,
}

impl Mesh {
    pub fn new(dim: usize, n: usize, extent: f64) -> Self {
        assert!((dim == 1 || dim == 2) && n >= 2 && extent > 0.0, "mesh needs dim 1 or 2 and n >= 2");
        let h = extent / n as f64;
        // node coordinates: 0, h/2, 3h/2, ..., L - h/2, L
        let coord = |i: usize| -> f64 {
            if i == 0 {
                0.0
            } else if i == n + 1 {
                extent
            } else {
                (i as f64 - 0.5) * h
            }
        };
        let unknown = |i: usize| (1..=n).contains(&i).then(|| i - 1);
        let mut elements = Vec::new();
        if dim == 1 {
            for e in 0..=n {
                let len = coord(e + 1) - coord(e);
                elements.push(Element {
                    nodes: [unknown(e), unknown(e + 1), None],
                    coef: [[-1.0 / len, 1.0 / len, 0.0], [0.0; 3]],
                    weight: len,
                    centre: [0.5 * (coord(e) + coord(e + 1)), 0.0],
                });
            }
        } else {
            let node = |i: usize, j: usize| -> Option<usize> { Some(unknown(i)? + n * unknown(j)?) };
            for j in 0..=n {
                for i in 0..=n {
                    let (x0, x1, y0, y1) = (coord(i), coord(i + 1), coord(j), coord(j + 1));
                    let (hx, hy) = (x1 - x0, y1 - y0);
                    let area = 0.5 * hx * hy;
                    // lower-left: (i,j), (i+1,j), (i,j+1)
                    elements.push(Element {
                        nodes: [node(i, j), node(i + 1, j), node(i, j + 1)],
                        coef: [[-1.0 / hx, 1.0 / hx, 0.0], [-1.0 / hy, 0.0, 1.0 / hy]],
                        weight: area,
                        centre: [(2.0 * x0 + x1) / 3.0, (2.0 * y0 + y1) / 3.0],
                    });
                    // upper-right: (i+1,j+1), (i,j+1), (i+1,j)
                    elements.push(Element {
                        nodes: [node(i + 1, j + 1), node(i, j + 1), node(i + 1, j)],
                        coef: [[1.0 / hx, -1.0 / hx, 0.0], [1.0 / hy, 0.0, -1.0 / hy]],
                        weight: area,
                        centre: [(x0 + 2.0 * x1) / 3.0, (y0 + 2.0 * y1) / 3.0],
                    });
                }
            }
        }
        Mesh { dim, n, extent, elements, vertices: dim + 1 }
    }

    pub fn unknowns(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Empty matrix with the pattern of the element couplings, together with
    /// the value positions of every element's local matrix.
    pub fn matrix_pattern(&self) -> (Csr, Vec<[usize; 9]>) {
        let mut rows = vec![Vec::new(); self.unknowns()];
        for (i, r) in rows.iter_mut().enumerate() {
            r.push(i);
        }
        for e in &self.elements {
            for a in e.nodes[..self.vertices].iter().flatten() {
                for b in e.nodes[..self.vertices].iter().flatten() {
                    rows[*a].push(*b);
                }
            }
        }
        let csr = Csr::from_pattern(rows);
        let slots = self
            .elements
            .iter()
            .map(|e| {
                let mut s = [usize::MAX; 9];
                for a in 0..self.vertices {
                    for b in 0..self.vertices {
                        if let (Some(i), Some(j)) = (e.nodes[a], e.nodes[b]) {
                            s[3 * a + b] = csr.position(i, j);
                        }
                    }
                }
                s
            })
            .collect();
        (csr, slots)
    }

    /// Cell values of a nodal vector as a sampled field.
    pub fn to_field(&self, u: &[f64]) -> SampledField {
        SampledField::scalar(self.dim, self.n, self.extent, u.to_vec()).expect("mesh and field grids agree")
    }

    /// Element gradients as cell-independent samples.
    pub fn gradients(&self, u: &[f64]) -> Vec<[f64; 2]> {
        self.elements.iter().map(|e| e.gradient(u)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_tile_the_box() {
        for dim in [1, 2] {
            let m = Mesh::new(dim, 7, 2.0);
            let total: f64 = m.elements.iter().map(|e| e.weight).sum();
            assert!((total - 2f64.powi(dim as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_field_has_constant_gradient() {
        let m = Mesh::new(2, 5, 1.0);
        let f = SampledField::from_fn(2, 5, 1.0, |x| 2.0 * x[0] - x[1]).unwrap();
        // interior elements only: boundary nodes carry 0, not the linear field
        for e in m.elements.iter().filter(|e| e.nodes.iter().all(|n| n.is_some())) {
            let g = e.gradient(f.values());
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
        }
    }
}
