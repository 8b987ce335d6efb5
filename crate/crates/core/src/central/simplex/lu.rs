//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Pivots are chosen by a Markowitz search over count buckets with threshold
//! partial pivoting. Rows are indexed by constraint, columns by basis
//! position.

use crate::Scalar;

/// Basis positions and rows left unpivoted when the matrix is singular.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

pub(crate) struct Factor<S> {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<S>,
    u_piv: Vec<S>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<S>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<S>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<S>,
}

/// Doubly linked buckets of items keyed by a count.
struct Buckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    key: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl Buckets {
    fn new(n_items: usize, max_key: usize) -> Self {
        Buckets {
            head: vec![NIL; max_key + 2],
            next: vec![NIL; n_items],
            prev: vec![NIL; n_items],
            key: vec![NIL; n_items],
        }
    }

    fn insert(&mut self, item: usize, key: usize) {
        let key = key.min(self.head.len() - 1);
        self.key[item] = key;
        self.prev[item] = NIL;
        self.next[item] = self.head[key];
        if self.head[key] != NIL {
            self.prev[self.head[key]] = item;
        }
        self.head[key] = item;
    }

    fn remove(&mut self, item: usize) {
        let key = self.key[item];
        if key == NIL {
            return;
        }
        if self.prev[item] != NIL {
            self.next[self.prev[item]] = self.next[item];
        } else {
            self.head[key] = self.next[item];
        }
        if self.next[item] != NIL {
            self.prev[self.next[item]] = self.prev[item];
        }
        self.key[item] = NIL;
    }

    fn update(&mut self, item: usize, key: usize) {
        self.remove(item);
        self.insert(item, key);
    }
}

impl<S: Scalar> Factor<S> {
    /// Factorizes the `m x m` matrix whose column `k` is `cols[k]` as
    /// `(row, value)` entries.
    pub fn new(m: usize, cols: &[Vec<(usize, S)>], threshold: S, abs_tol: S) -> Result<Self, Singular> {
        let mut acol: Vec<Vec<(usize, S)>> = cols.iter().map(|c| c.iter().copied().filter(|e| e.1 != S::zero()).collect()).collect();
        let mut arow: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (k, c) in acol.iter().enumerate() {
            for &(r, _) in c {
                arow[r].push(k);
            }
        }
        let mut cb = Buckets::new(m, m);
        let mut rb = Buckets::new(m, m);
        for k in 0..m {
            cb.insert(k, acol[k].len());
            rb.insert(k, arow[k].len());
        }
        let mut col_done = vec![false; m];
        let mut row_done = vec![false; m];
        let mut f = Factor {
            m,
            prow: Vec::with_capacity(m),
            pcol: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_piv: Vec::with_capacity(m),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            eta_pos: Vec::new(),
            eta_piv: Vec::new(),
            eta_start: vec![0],
            eta_idx: Vec::new(),
            eta_val: Vec::new(),
        };
        let mut slot = vec![NIL; m];
        let mut lbuf: Vec<(usize, S)> = Vec::new();

        for _step in 0..m {
            let Some((r, c)) = Self::choose(&acol, &arow, &cb, &rb, threshold, abs_tol) else {
                break;
            };
            let piv = acol[c].iter().find(|e| e.0 == r).map(|e| e.1).expect("pivot present");
            // multipliers from the pivot column
            lbuf.clear();
            for &(i, v) in &acol[c] {
                if i != r {
                    lbuf.push((i, v / piv));
                }
            }
            // pivot row entries become a row of U
            let prow_cols: Vec<usize> = arow[r].iter().copied().filter(|&q| q != c).collect();
            for &q in &prow_cols {
                let pos = acol[q].iter().position(|e| e.0 == r).expect("row pattern consistent");
                let urq = acol[q].swap_remove(pos).1;
                f.u_idx.push(q);
                f.u_val.push(urq);
                if lbuf.is_empty() || urq == S::zero() {
                    continue;
                }
                for (s, e) in acol[q].iter().enumerate() {
                    slot[e.0] = s;
                }
                for &(i, l) in &lbuf {
                    let s = slot[i];
                    if s != NIL {
                        acol[q][s].1 = acol[q][s].1 - l * urq;
                    } else {
                        acol[q].push((i, -l * urq));
                        arow[i].push(q);
                    }
                }
                for e in acol[q].iter() {
                    slot[e.0] = NIL;
                }
            }
            for &(i, _) in &lbuf {
                if let Some(pos) = arow[i].iter().position(|&q| q == c) {
                    arow[i].swap_remove(pos);
                }
                rb.update(i, arow[i].len());
            }
            for &q in &prow_cols {
                cb.update(q, acol[q].len());
            }
            for &(i, l) in &lbuf {
                f.l_idx.push(i);
                f.l_val.push(l);
            }
            f.l_start.push(f.l_idx.len());
            f.u_piv.push(piv);
            f.u_start.push(f.u_idx.len());
            f.prow.push(r);
            f.pcol.push(c);
            acol[c].clear();
            arow[r].clear();
            cb.remove(c);
            rb.remove(r);
            col_done[c] = true;
            row_done[r] = true;
        }
        if f.prow.len() < m {
            return Err(Singular {
                positions: (0..m).filter(|&k| !col_done[k]).collect(),
                rows: (0..m).filter(|&k| !row_done[k]).collect(),
            });
        }
        Ok(f)
    }

    fn choose(
        acol: &[Vec<(usize, S)>],
        arow: &[Vec<usize>],
        cb: &Buckets,
        rb: &Buckets,
        threshold: S,
        abs_tol: S,
    ) -> Option<(usize, usize)> {
        let max_key = cb.head.len();
        let mut best: Option<(usize, usize)> = None;
        let mut best_cost = usize::MAX;
        let mut searched = 0usize;
        let col_max = |q: usize| acol[q].iter().fold(S::zero(), |m, e| m.max(e.1.abs()));
        for k in 1..max_key {
            let mut item = cb.head[k];
            while item != NIL {
                let q = item;
                let cmax = col_max(q);
                if cmax > abs_tol {
                    for &(i, v) in &acol[q] {
                        if v.abs() >= threshold * cmax {
                            let cost = (arow[i].len() - 1) * (k - 1);
                            if cost < best_cost {
                                best_cost = cost;
                                best = Some((i, q));
                            }
                        }
                    }
                    searched += 1;
                }
                if best_cost <= (k - 1) * (k - 1) || searched >= 4 && best.is_some() {
                    return best;
                }
                item = cb.next[item];
            }
            let mut item = rb.head[k];
            while item != NIL {
                let i = item;
                for &q in &arow[i] {
                    let cmax = col_max(q);
                    if cmax <= abs_tol {
                        continue;
                    }
                    let v = acol[q].iter().find(|e| e.0 == i).map_or(S::zero(), |e| e.1);
                    if v.abs() >= threshold * cmax {
                        let cost = (k - 1) * (acol[q].len() - 1);
                        if cost < best_cost {
                            best_cost = cost;
                            best = Some((i, q));
                        }
                    }
                }
                searched += 1;
                if best_cost <= k * (k - 1) || searched >= 4 && best.is_some() {
                    return best;
                }
                item = rb.next[item];
            }
        }
        best
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_idx.len()
    }

    /// Solves `B x = b`. `b` is indexed by row and is overwritten; the result
    /// is written to `x`, indexed by basis position.
    pub fn ftran(&self, b: &mut [S], x: &mut [S]) {
        for k in 0..self.m {
            let v = b[self.prow[k]];
            if v != S::zero() {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    let i = self.l_idx[e];
                    b[i] = b[i] - self.l_val[e] * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut v = b[self.prow[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                v = v - self.u_val[e] * x[self.u_idx[e]];
            }
            x[self.pcol[k]] = v / self.u_piv[k];
        }
        for k in 0..self.eta_pos.len() {
            let r = self.eta_pos[k];
            let xr = x[r] / self.eta_piv[k];
            x[r] = xr;
            if xr != S::zero() {
                for e in self.eta_start[k]..self.eta_start[k + 1] {
                    let i = self.eta_idx[e];
                    x[i] = x[i] - self.eta_val[e] * xr;
                }
            }
        }
    }

    /// Solves `B^T y = e`. `e` is indexed by basis position and is
    /// overwritten; the result is written to `y`, indexed by row.
    pub fn btran(&self, e: &mut [S], y: &mut [S]) {
        for k in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[k];
            let mut v = e[r];
            for p in self.eta_start[k]..self.eta_start[k + 1] {
                v = v - self.eta_val[p] * e[self.eta_idx[p]];
            }
            e[r] = v / self.eta_piv[k];
        }
        for k in 0..self.m {
            let g = e[self.pcol[k]] / self.u_piv[k];
            y[self.prow[k]] = g;
            if g != S::zero() {
                for p in self.u_start[k]..self.u_start[k + 1] {
                    let q = self.u_idx[p];
                    e[q] = e[q] - self.u_val[p] * g;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut v = y[self.prow[k]];
            for p in self.l_start[k]..self.l_start[k + 1] {
                v = v - self.l_val[p] * y[self.l_idx[p]];
            }
            y[self.prow[k]] = v;
        }
    }

    /// Records that basis position `r` was replaced by a column whose
    /// FTRAN image is `alpha` (indexed by position).
    pub fn push_eta(&mut self, r: usize, alpha: &[S], drop_tol: S) {
        self.eta_pos.push(r);
        self.eta_piv.push(alpha[r]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a.abs() > drop_tol {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}
