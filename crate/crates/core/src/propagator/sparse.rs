//! Compressed sparse rows for the superoperator matvec and its coupling graph.

use ndarray::{Array1, Array2};

use crate::quantum_core::C64;

#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(m: &Array2<C64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in m.rows() {
            for (j, &z) in row.iter().enumerate() {
                if z.re != 0.0 || z.im != 0.0 {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0; self.cols.len()];
        let mut vals = vec![C64::new(0.0, 0.0); self.vals.len()];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k];
                let dst = next[c];
                cols[dst] = i;
                vals[dst] = self.vals[k];
                next[c] += 1;
            }
        }
        Self {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn row_dot(&self, i: usize, x: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let xs = x.as_slice().expect("contiguous vector");
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(xs, &mut y);
        Array1::from(y)
    }

    /// Strongly connected components of the influence graph (edge `j → i`
    /// whenever entry `(i, j)` is nonzero), listed so that every edge between
    /// different components points from an earlier to a later one.
    pub fn influence_components(&self) -> Vec<Vec<usize>> {
        // Tarjan on the transposed adjacency: successors of j are the rows i with (i, j) ≠ 0.
        let t = self.transpose();
        let n = self.n;
        const UNSEEN: usize = usize::MAX;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut counter = 0usize;
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            call.push((root, t.row_ptr[root]));
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut k)) = call.last_mut() {
                if *k < t.row_ptr[v + 1] {
                    let w = t.cols[*k];
                    *k += 1;
                    if index[w] == UNSEEN {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, t.row_ptr[w]));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
        // Tarjan emits sinks first
        comps.reverse();
        comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn matvec_matches_dense() {
        let m = Array2::from_shape_fn((4, 4), |(i, j)| if (i + j) % 3 == 0 { c((i * 4 + j) as f64) } else { c(0.0) });
        let x = Array1::from_shape_fn(4, |i| C64::new(i as f64, 1.0));
        let s = Csr::from_dense(&m);
        let d = m.dot(&x);
        assert_eq!(s.matvec(&x), d);
        let st = s.transpose();
        assert_eq!(st.matvec(&x), m.t().dot(&x));
    }

    #[test]
    fn components_are_block_triangular() {
        // 0 <-> 1 feed 2 <-> 3; 4 isolated
        let mut m = Array2::zeros((5, 5));
        m[[0, 1]] = c(1.0);
        m[[1, 0]] = c(1.0);
        m[[2, 3]] = c(1.0);
        m[[3, 2]] = c(1.0);
        m[[2, 1]] = c(1.0);
        let comps = Csr::from_dense(&m).influence_components();
        let pos = |i: usize| comps.iter().position(|b| b.contains(&i)).unwrap();
        assert_eq!(comps.len(), 3);
        assert_eq!(pos(0), pos(1));
        assert_eq!(pos(2), pos(3));
        assert!(pos(1) < pos(2));
        for i in 0..5 {
            for j in 0..5 {
                if m[[i, j]] != c(0.0) {
                    assert!(pos(j) <= pos(i));
                }
            }
        }
    }
}
