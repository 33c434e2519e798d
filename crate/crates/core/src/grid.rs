//! Structured lattices over a coordinate box and their finite-difference stencils.
//!
//! Node `(i0, i1, i2)` has linear index `i0 + n0 * (i1 + n1 * i2)`. Fields are
//! stored as flat `Vec<f64>` with `m` components per node.

use serde::{Deserialize, Serialize};

/// Regular lattice with `counts[k]` nodes on `[min[k], max[k]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(min: Vec<f64>, max: Vec<f64>, counts: Vec<usize>) -> Self {
        assert!(min.len() == max.len() && min.len() == counts.len());
        assert!(counts.iter().all(|&n| n >= 4), "at least 4 nodes per axis");
        Self { min, max, counts }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.max[axis] - self.min[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.spacing(k)).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(0.0, f64::max)
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for k in (0..self.dim()).rev() {
            idx = idx * self.counts[k] + multi[k];
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for &n in &self.counts {
            out.push(idx % n);
            idx /= n;
        }
        out
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.counts[..axis].iter().product()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.min[k] + i as f64 * self.spacing(k))
            .collect()
    }

    /// Neighbour of `idx` one step along `axis` in direction `dir` (±1), if inside.
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i32) -> Option<usize> {
        let i = self.multi_index(idx)[axis] as i64 + dir as i64;
        if i < 0 || i >= self.counts[axis] as i64 {
            return None;
        }
        Some((idx as i64 + dir as i64 * self.stride(axis) as i64) as usize)
    }

    /// Same box extended by `pad` nodes beyond each face.
    pub fn padded(&self, pad: usize) -> Grid {
        let mut min = self.min.clone();
        let mut max = self.max.clone();
        let mut counts = self.counts.clone();
        for k in 0..self.dim() {
            let h = self.spacing(k);
            min[k] -= pad as f64 * h;
            max[k] += pad as f64 * h;
            counts[k] += 2 * pad;
        }
        Grid { min, max, counts }
    }

    /// Index in `self.padded(pad)` of node `idx` of `self`.
    pub fn to_padded(&self, idx: usize, pad: usize) -> usize {
        let multi: Vec<usize> = self.multi_index(idx).iter().map(|i| i + pad).collect();
        self.padded(pad).index(&multi)
    }

    /// Predecessor of `idx` on the canonical sweep from node 0, with the edge
    /// axis. Paths run along axis 0 first, then axis 1, then axis 2.
    pub fn sweep_parent(&self, idx: usize) -> Option<(usize, usize)> {
        let multi = self.multi_index(idx);
        for axis in (0..self.dim()).rev() {
            if multi[axis] > 0 {
                return Some((idx - self.stride(axis), axis));
            }
        }
        None
    }

    /// Predecessor on the sweep that visits the axes in reverse order.
    pub fn reverse_sweep_parent(&self, idx: usize) -> Option<(usize, usize)> {
        let multi = self.multi_index(idx);
        for axis in 0..self.dim() {
            if multi[axis] > 0 {
                return Some((idx - self.stride(axis), axis));
            }
        }
        None
    }

    /// Lower corners of all unit cells in the `(k, l)` coordinate plane.
    pub fn plaquettes(&self, k: usize, l: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&idx| {
                let m = self.multi_index(idx);
                m[k] + 1 < self.counts[k] && m[l] + 1 < self.counts[l]
            })
            .collect()
    }

    /// Coordinate planes `(k, l)` with `k < l`.
    pub fn planes(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(|k| ((k + 1)..d).map(move |l| (k, l))).collect()
    }

    /// First derivative along `axis` of an `m`-component field: centred in the
    /// interior, second-order one-sided at the two end nodes.
    pub fn derivative(&self, field: &[f64], m: usize, axis: usize) -> Vec<f64> {
        assert_eq!(field.len(), self.len() * m);
        let h = self.spacing(axis);
        let s = self.stride(axis) * m;
        let n = self.counts[axis];
        let mut out = vec![0.0; field.len()];
        for idx in 0..self.len() {
            let i = self.multi_index(idx)[axis];
            let b = idx * m;
            for c in 0..m {
                let f = |o: i64| field[(b as i64 + o * s as i64) as usize + c];
                out[b + c] = if i == 0 {
                    (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * f(0) - 4.0 * f(-1) + f(-2)) / (2.0 * h)
                } else {
                    (f(1) - f(-1)) / (2.0 * h)
                };
            }
        }
        out
    }

    /// Second derivative along one axis, second order everywhere.
    pub fn second_derivative(&self, field: &[f64], m: usize, axis: usize) -> Vec<f64> {
        assert_eq!(field.len(), self.len() * m);
        let h2 = self.spacing(axis).powi(2);
        let s = self.stride(axis) * m;
        let n = self.counts[axis];
        let mut out = vec![0.0; field.len()];
        for idx in 0..self.len() {
            let i = self.multi_index(idx)[axis];
            let b = idx * m;
            for c in 0..m {
                let f = |o: i64| field[(b as i64 + o * s as i64) as usize + c];
                out[b + c] = if i == 0 {
                    (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
                } else if i == n - 1 {
                    (2.0 * f(0) - 5.0 * f(-1) + 4.0 * f(-2) - f(-3)) / h2
                } else {
                    (f(1) - 2.0 * f(0) + f(-1)) / h2
                };
            }
        }
        out
    }

    /// Second derivative `∂_k ∂_l`; mixed derivatives compose first derivatives.
    pub fn hessian_component(&self, field: &[f64], m: usize, k: usize, l: usize) -> Vec<f64> {
        if k == l {
            self.second_derivative(field, m, k)
        } else {
            self.derivative(&self.derivative(field, m, l), m, k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> Grid {
        Grid::new(vec![0.0, -1.0], vec![1.0, 2.0], vec![n, n + 2])
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![4, 5, 6]);
        for idx in 0..g.len() {
            assert_eq!(g.index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.index(&[1, 2, 3]), 1 + 4 * (2 + 5 * 3));
    }

    #[test]
    fn quadratics_are_differentiated_exactly() {
        let g = grid2(9);
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coords(i);
                x[0] * x[0] - 3.0 * x[0] * x[1] + 2.0 * x[1] * x[1]
            })
            .collect();
        let du = g.derivative(&f, 1, 0);
        let dvv = g.second_derivative(&f, 1, 1);
        let duv = g.hessian_component(&f, 1, 0, 1);
        for i in 0..g.len() {
            let x = g.coords(i);
            assert!((du[i] - (2.0 * x[0] - 3.0 * x[1])).abs() < 1e-12);
            assert!((dvv[i] - 4.0).abs() < 1e-9);
            assert!((duv[i] + 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_error_is_second_order() {
        let err = |n: usize| {
            let g = Grid::new(vec![0.0], vec![1.0], vec![n]);
            let f: Vec<f64> = (0..n).map(|i| g.coords(i)[0].sin()).collect();
            let d = g.derivative(&f, 1, 0);
            (0..n).map(|i| (d[i] - g.coords(i)[0].cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(33) / err(65);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sweep_visits_axis_zero_first() {
        let g = Grid::new(vec![0.0; 2], vec![1.0; 2], vec![4, 4]);
        assert_eq!(g.sweep_parent(0), None);
        assert_eq!(g.sweep_parent(g.index(&[2, 0])), Some((g.index(&[1, 0]), 0)));
        assert_eq!(g.sweep_parent(g.index(&[2, 3])), Some((g.index(&[2, 2]), 1)));
        assert_eq!(g.reverse_sweep_parent(g.index(&[2, 3])), Some((g.index(&[1, 3]), 0)));
        assert_eq!(g.reverse_sweep_parent(g.index(&[0, 3])), Some((g.index(&[0, 2]), 1)));
        let g3 = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![4, 4, 4]);
        for idx in 1..g3.len() {
            let (p, _) = g3.sweep_parent(idx).unwrap();
            assert!(p < idx);
        }
    }

    #[test]
    fn padding_keeps_spacing() {
        let g = grid2(9);
        let p = g.padded(2);
        assert!((p.spacing(0) - g.spacing(0)).abs() < 1e-15);
        let idx = g.index(&[3, 4]);
        for (a, b) in p.coords(g.to_padded(idx, 2)).iter().zip(g.coords(idx)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn plaquette_counts() {
        let g = Grid::new(vec![0.0; 2], vec![1.0; 2], vec![5, 6]);
        assert_eq!(g.plaquettes(0, 1).len(), 4 * 5);
        assert_eq!(g.neighbor(0, 0, -1), None);
        assert_eq!(g.neighbor(0, 1, 1), Some(5));
    }
}
