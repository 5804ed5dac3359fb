#![allow(clippy::needless_range_loop)]

//! Dense primal active-set solver for `min sum_i w_i (l_i - x_i)^2 / 2` subject to
//! `a_j . l <= c_j`, used as a reference for the order-restricted regressions.

pub struct Qp {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl Qp {
    pub fn new(x: &[f64], w: &[f64]) -> Self {
        Self { x: x.to_vec(), w: w.to_vec(), rows: Vec::new() }
    }

    fn row(&mut self, coefs: &[(usize, f64)], c: f64) {
        let mut a = vec![0.0; self.x.len()];
        for &(i, v) in coefs {
            a[i] += v;
        }
        self.rows.push((a, c));
    }

    /// `l_i <= l_j`
    pub fn le(&mut self, i: usize, j: usize) -> &mut Self {
        self.row(&[(i, 1.0), (j, -1.0)], 0.0);
        self
    }

    pub fn upper(&mut self, i: usize, c: f64) -> &mut Self {
        self.row(&[(i, 1.0)], c);
        self
    }

    pub fn lower(&mut self, i: usize, c: f64) -> &mut Self {
        self.row(&[(i, -1.0)], -c);
        self
    }

    /// `l_i + l_j <= c`
    pub fn pair_upper(&mut self, i: usize, j: usize, c: f64) -> &mut Self {
        self.row(&[(i, 1.0), (j, 1.0)], c);
        self
    }

    /// `l_i + l_j >= c`
    pub fn pair_lower(&mut self, i: usize, j: usize, c: f64) -> &mut Self {
        self.row(&[(i, -1.0), (j, -1.0)], -c);
        self
    }

    pub fn increasing(&mut self) -> &mut Self {
        for i in 1..self.x.len() {
            self.le(i - 1, i);
        }
        self
    }

    pub fn max_violation(&self, l: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(a, c)| a.iter().zip(l).map(|(a, l)| a * l).sum::<f64>() - c)
            .fold(0.0, f64::max)
    }

    pub fn cost(&self, l: &[f64]) -> f64 {
        super::weighted_cost(&self.x, &self.w, l)
    }

    /// Solves from a feasible starting point.
    pub fn solve(&self, start: Vec<f64>) -> Vec<f64> {
        assert!(self.max_violation(&start) < 1e-12, "infeasible start");
        let n = self.x.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut l = start;
        let mut working: Vec<usize> = Vec::new();
        for _ in 0..10_000 {
            let g: Vec<f64> = (0..n).map(|i| self.w[i] * (l[i] - self.x[i])).collect();
            // p = -D^-1 (g + A^T nu), with A D^-1 A^T nu = -A D^-1 g
            let m = working.len();
            let mut mat = vec![vec![0.0; m + 1]; m];
            for (r, &j) in working.iter().enumerate() {
                let aj = &self.rows[j].0;
                for (s, &k) in working.iter().enumerate() {
                    let ak = &self.rows[k].0;
                    mat[r][s] = (0..n).map(|i| aj[i] * ak[i] / self.w[i]).sum();
                }
                mat[r][m] = -(0..n).map(|i| aj[i] * g[i] / self.w[i]).sum::<f64>();
            }
            let nu = gauss(mat);
            let mut p: Vec<f64> = g.clone();
            for (r, &j) in working.iter().enumerate() {
                for i in 0..n {
                    p[i] += self.rows[j].0[i] * nu[r];
                }
            }
            p.iter_mut().zip(&self.w).for_each(|(p, w)| *p = -*p / w);

            let pnorm = p.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let scale = 1.0 + l.iter().chain(&self.x).fold(0.0_f64, |a, v| a.max(v.abs()));
            if pnorm < 1e-13 * scale {
                let worst = nu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1));
                match worst {
                    Some((r, &v)) if v < -1e-13 => {
                        working.remove(r);
                        continue;
                    }
                    _ => return l,
                }
            }
            let mut alpha = 1.0;
            let mut blocking = None;
            for (j, (a, c)) in self.rows.iter().enumerate() {
                if working.contains(&j) {
                    continue;
                }
                let ap = dot(a, &p);
                // constraints whose normal is (numerically) spanned by the working set
                // have a.p at rounding level and must not enter it
                if ap > 1e-11 * pnorm {
                    let t = ((c - dot(a, &l)) / ap).max(0.0);
                    if t < alpha {
                        alpha = t;
                        blocking = Some(j);
                    }
                }
            }
            for i in 0..n {
                l[i] += alpha * p[i];
            }
            if let Some(j) = blocking {
                working.push(j);
            }
        }
        panic!("active-set oracle did not terminate");
    }
}

/// Solves an augmented system `[A | b]` by Gaussian elimination with partial pivoting.
fn gauss(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular working set");
        for r in 0..n {
            if r != col {
                let f = m[r][col] / d;
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}
