//! Dense bounded-variable two-phase primal simplex.

use crate::milp::{Constraint, Sense};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 200_000;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Place {
    Basic(usize),
    Lower,
    Upper,
    Zero,
}

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    head: Vec<usize>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    val: Vec<f64>,
    place: Vec<Place>,
    d: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.cols + j]
    }

    fn price(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.head[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if matches!(self.place[j], Place::Basic(_)) || self.lb[j] == self.ub[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -OPT_TOL && self.val[j] < self.ub[j] {
                1.0
            } else if dj > OPT_TOL && self.val[j] > self.lb[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(b, _)| dj.abs() > self.d[b].abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    /// Returns false when the problem is unbounded along the entering direction.
    fn step(&mut self, j: usize, dir: f64, bland: bool) -> Result<f64, ()> {
        let mut theta = self.ub[j] - self.lb[j];
        let mut leave: Option<(usize, bool)> = None;
        for r in 0..self.rows {
            let alpha = self.at(r, j) * dir;
            let b = self.head[r];
            let lim = if alpha > PIVOT_TOL && self.lb[b].is_finite() {
                ((self.beta[r] - self.lb[b]) / alpha).max(0.0)
            } else if alpha < -PIVOT_TOL && self.ub[b].is_finite() {
                ((self.ub[b] - self.beta[r]) / -alpha).max(0.0)
            } else {
                continue;
            };
            let better = match leave {
                None => lim < theta,
                Some((lr, _)) => {
                    if lim < theta - 1e-12 {
                        true
                    } else if lim <= theta + 1e-12 {
                        if bland {
                            self.head[r] < self.head[lr]
                        } else {
                            alpha.abs() > (self.at(lr, j) * dir).abs()
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                theta = lim;
                leave = Some((r, alpha > 0.0));
            }
        }
        if !theta.is_finite() {
            return Err(());
        }
        for r in 0..self.rows {
            let a = self.at(r, j);
            if a != 0.0 {
                self.beta[r] -= dir * a * theta;
            }
        }
        let entering_value = self.val[j] + dir * theta;
        match leave {
            None => {
                self.val[j] = entering_value;
                self.place[j] = if dir > 0.0 { Place::Upper } else { Place::Lower };
            }
            Some((r, to_lower)) => {
                let out = self.head[r];
                self.val[out] = if to_lower { self.lb[out] } else { self.ub[out] };
                self.place[out] = if to_lower { Place::Lower } else { Place::Upper };
                self.pivot(r, j);
                self.beta[r] = entering_value;
                self.val[j] = entering_value;
            }
        }
        self.iterations += 1;
        Ok(theta)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.at(r, j);
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= p;
            }
        }
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        for k in 0..self.rows {
            if k == r {
                continue;
            }
            let f = self.t[k * cols + j];
            if f != 0.0 {
                let row = &mut self.t[k * cols..(k + 1) * cols];
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, &pv) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.d[j] = 0.0;
        }
        self.place[self.head[r]] = match self.place[self.head[r]] {
            Place::Basic(_) => Place::Lower,
            other => other,
        };
        self.head[r] = j;
        self.place[j] = Place::Basic(r);
    }

    fn run(&mut self, cost: &[f64]) -> LpStatus {
        self.price(cost);
        let mut streak = 0;
        loop {
            if self.iterations >= MAX_ITERS {
                return LpStatus::IterationLimit;
            }
            let bland = streak >= DEGENERATE_STREAK;
            let Some((j, dir)) = self.entering(bland) else { return LpStatus::Optimal };
            match self.step(j, dir, bland) {
                Err(()) => return LpStatus::Unbounded,
                Ok(theta) => {
                    if theta <= 1e-12 {
                        streak += 1;
                    } else {
                        streak = 0;
                    }
                }
            }
        }
    }
}

/// Minimizes `cost . x` subject to `rows` and `lb <= x <= ub`.
pub fn solve_lp(cost: &[f64], lb: &[f64], ub: &[f64], rows: &[Constraint]) -> LpResult {
    let n = cost.len();
    let mut x = vec![0.0; n];
    for j in 0..n {
        if lb[j] > ub[j] + 1e-12 {
            return LpResult { status: LpStatus::Infeasible, x, objective: f64::NAN, iterations: 0 };
        }
        x[j] = if lb[j].is_finite() {
            lb[j]
        } else if ub[j].is_finite() {
            ub[j]
        } else {
            0.0
        };
    }
    // fixed columns are folded into the right-hand side
    let free_cols: Vec<usize> = (0..n).filter(|&j| lb[j] < ub[j]).collect();
    let mut col_of = vec![usize::MAX; n];
    for (k, &j) in free_cols.iter().enumerate() {
        col_of[j] = k;
    }
    let mut kept: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for c in rows {
        let mut rhs = c.rhs;
        let mut terms = Vec::new();
        for &(j, a) in &c.coefs {
            if col_of[j] == usize::MAX {
                rhs -= a * x[j];
            } else {
                terms.push((col_of[j], a));
            }
        }
        if terms.is_empty() {
            let ok = match c.sense {
                Sense::Le => rhs >= -1e-9,
                Sense::Ge => rhs <= 1e-9,
                Sense::Eq => rhs.abs() <= 1e-9,
            };
            if !ok {
                return LpResult { status: LpStatus::Infeasible, x, objective: f64::NAN, iterations: 0 };
            }
            continue;
        }
        kept.push((terms, c.sense, rhs));
    }

    let ns = free_cols.len();
    let m = kept.len();
    let mut residual = Vec::with_capacity(m);
    for (terms, _, rhs) in &kept {
        let act: f64 = terms.iter().map(|&(k, a)| a * x[free_cols[k]]).sum();
        residual.push(rhs - act);
    }
    let needs_art: Vec<bool> = kept
        .iter()
        .zip(&residual)
        .map(|((_, sense, _), &r)| match sense {
            Sense::Le => r < 0.0,
            Sense::Ge => r > 0.0,
            Sense::Eq => r != 0.0,
        })
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let cols = ns + m + n_art;

    let mut tab = Tableau {
        rows: m,
        cols,
        t: vec![0.0; m * cols],
        beta: vec![0.0; m],
        head: vec![0; m],
        lb: vec![0.0; cols],
        ub: vec![0.0; cols],
        val: vec![0.0; cols],
        place: vec![Place::Lower; cols],
        d: vec![0.0; cols],
        iterations: 0,
    };
    for (k, &j) in free_cols.iter().enumerate() {
        tab.lb[k] = lb[j];
        tab.ub[k] = ub[j];
        tab.val[k] = x[j];
        tab.place[k] = if lb[j].is_finite() {
            Place::Lower
        } else if ub[j].is_finite() {
            Place::Upper
        } else {
            Place::Zero
        };
    }
    let mut art = ns + m;
    let mut phase1 = vec![0.0; cols];
    for (r, (terms, sense, _)) in kept.iter().enumerate() {
        let s = ns + r;
        let (slb, sub) = match sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        tab.lb[s] = slb;
        tab.ub[s] = sub;
        let sigma = if needs_art[r] { residual[r].signum() } else { 1.0 };
        for &(k, a) in terms {
            tab.t[r * cols + k] += sigma * a;
        }
        tab.t[r * cols + s] = sigma;
        if needs_art[r] {
            tab.t[r * cols + art] = 1.0;
            tab.lb[art] = 0.0;
            tab.ub[art] = f64::INFINITY;
            tab.head[r] = art;
            tab.place[art] = Place::Basic(r);
            tab.beta[r] = residual[r].abs();
            tab.val[s] = 0.0;
            tab.place[s] = Place::Lower;
            phase1[art] = 1.0;
            art += 1;
        } else {
            tab.head[r] = s;
            tab.place[s] = Place::Basic(r);
            tab.beta[r] = residual[r];
        }
    }

    if n_art > 0 {
        match tab.run(&phase1) {
            LpStatus::Optimal => {}
            LpStatus::IterationLimit => return LpResult { status: LpStatus::IterationLimit, x, objective: f64::NAN, iterations: tab.iterations },
            _ => {}
        }
        let infeas: f64 = (0..m).filter(|&r| tab.head[r] >= ns + m).map(|r| tab.beta[r]).sum::<f64>()
            + (ns + m..cols).filter(|&j| !matches!(tab.place[j], Place::Basic(_))).map(|j| tab.val[j]).sum::<f64>();
        if infeas > PHASE1_TOL {
            return LpResult { status: LpStatus::Infeasible, x, objective: f64::NAN, iterations: tab.iterations };
        }
        for j in ns + m..cols {
            tab.ub[j] = 0.0;
            if !matches!(tab.place[j], Place::Basic(_)) {
                tab.val[j] = 0.0;
                tab.place[j] = Place::Lower;
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    for (k, &j) in free_cols.iter().enumerate() {
        phase2[k] = cost[j];
    }
    let status = tab.run(&phase2);
    for (k, &j) in free_cols.iter().enumerate() {
        x[j] = match tab.place[k] {
            Place::Basic(r) => tab.beta[r].clamp(lb[j], ub[j]),
            _ => tab.val[k],
        };
    }
    let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpResult { status, x, objective, iterations: tab.iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Tag;

    fn row(coefs: &[(usize, f64)], sense: Sense, rhs: f64) -> Constraint {
        Constraint { coefs: coefs.to_vec(), sense, rhs, tag: Tag::Plumbing }
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let rows = [row(&[(0, 1.0)], Sense::Le, 4.0), row(&[(1, 2.0)], Sense::Le, 12.0), row(&[(0, 3.0), (1, 2.0)], Sense::Le, 18.0)];
        let r = solve_lp(&[-3.0, -5.0], &[0.0, 0.0], &[f64::INFINITY; 2], &rows);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 36.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_free_variable() {
        // min x s.t. x - y = -3, y in [0, 2], x free
        let rows = [row(&[(0, 1.0), (1, -1.0)], Sense::Eq, -3.0)];
        let r = solve_lp(&[1.0, 0.0], &[f64::NEG_INFINITY, 0.0], &[f64::INFINITY, 2.0], &rows);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let rows = [row(&[(0, 1.0)], Sense::Ge, 5.0)];
        let r = solve_lp(&[1.0], &[0.0], &[4.0], &rows);
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let rows = [row(&[(0, 1.0), (1, -1.0)], Sense::Le, 1.0)];
        let r = solve_lp(&[-1.0, 0.0], &[0.0, 0.0], &[f64::INFINITY; 2], &rows);
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn upper_bounds_flip() {
        // max x + y, x,y in [0,1], x + y <= 1.5
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Le, 1.5)];
        let r = solve_lp(&[-1.0, -1.0], &[0.0, 0.0], &[1.0, 1.0], &rows);
        assert!((r.objective + 1.5).abs() < 1e-9);
    }

    #[test]
    fn fixed_columns_folded() {
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)];
        let r = solve_lp(&[1.0, 1.0], &[0.0, 2.0], &[10.0, 2.0], &rows);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!((r.objective - 3.0).abs() < 1e-9);
    }
}
