//! Dense dictionary simplex.
//!
//! Problems are stated as `max c·y` subject to `≤`, `≥` and `=` rows, with each
//! variable either non-negative or free. Free variables are split into two
//! non-negative parts, `≥` rows are negated and `=` rows become a pair of `≤`
//! rows. When some right-hand side is negative a phase one with a single
//! auxiliary variable finds a feasible dictionary first.
//!
//! Pivoting uses Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots, which rules out cycling in exact arithmetic. In `f64`
//! every right-hand side is relaxed by a tiny distinct amount while pivoting
//! (see `Scalar::perturbation`) and the unperturbed right-hand side is
//! carried through the same pivots; reported values come from the latter.

#![allow(clippy::needless_range_loop)]

mod scalar;

pub use scalar::{ratio, simplest_rounding_to, Scalar};

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    n_vars: usize,
    objective: Vec<T>,
    free: Vec<bool>,
    constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub status: Status,
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// Pivots taken under Bland's rule.
    pub bland_pivots: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iterations: 500_000,
            degenerate_limit: 50,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    /// Maximisation problem over `n_vars` non-negative variables.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![T::zero(); n_vars],
            free: vec![false; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, c: T) {
        self.objective[var] = c;
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.n_vars));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn solve(&self) -> Solution<T> {
        self.solve_with(Options::default())
    }

    pub fn solve_with(&self, opts: Options) -> Solution<T> {
        // Column layout after splitting: one column per variable, plus a
        // negative-part column for each free variable.
        let col_of: Vec<usize> = (0..self.n_vars).collect();
        let mut neg_col = vec![None; self.n_vars];
        let mut n = self.n_vars;
        for v in 0..self.n_vars {
            if self.free[v] {
                neg_col[v] = Some(n);
                n += 1;
            }
        }

        let mut rows: Vec<(Vec<(usize, T)>, T)> = Vec::new();
        for c in &self.constraints {
            let mut coeffs = Vec::with_capacity(c.coeffs.len() * 2);
            for (v, a) in &c.coeffs {
                coeffs.push((col_of[*v], a.clone()));
                if let Some(nc) = neg_col[*v] {
                    coeffs.push((nc, a.neg()));
                }
            }
            match c.relation {
                Relation::Le => rows.push((coeffs, c.rhs.clone())),
                Relation::Ge => rows.push((
                    coeffs.iter().map(|(j, a)| (*j, a.neg())).collect(),
                    c.rhs.neg(),
                )),
                Relation::Eq => {
                    rows.push((
                        coeffs.iter().map(|(j, a)| (*j, a.neg())).collect(),
                        c.rhs.neg(),
                    ));
                    rows.push((coeffs, c.rhs.clone()));
                }
            }
        }

        let mut c = vec![T::zero(); n];
        for v in 0..self.n_vars {
            c[col_of[v]] = self.objective[v].clone();
            if let Some(nc) = neg_col[v] {
                c[nc] = self.objective[v].neg();
            }
        }

        let mut dict = Dictionary::new(n, &rows, &c);
        let status = dict.run(opts);
        let values = dict.column_values();

        let mut x = Vec::with_capacity(self.n_vars);
        for v in 0..self.n_vars {
            let mut val = values[col_of[v]].clone();
            if let Some(nc) = neg_col[v] {
                val = val.sub(&values[nc]);
            }
            x.push(val);
        }
        let mut objective = T::zero();
        for v in 0..self.n_vars {
            objective = objective.add(&self.objective[v].mul(&x[v]));
        }
        Solution {
            status,
            x,
            objective,
            iterations: dict.iterations,
            bland_pivots: dict.bland_pivots,
        }
    }
}

/// `basic_i = d[i][0] + Σ_j d[i][j] · nonbasic_j`; row 0 is the objective.
struct Dictionary<T> {
    m: usize,
    width: usize,
    d: Vec<T>,
    /// Unperturbed right-hand side, updated like column 0.
    shadow: Vec<T>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    n_struct: usize,
    iterations: usize,
    bland_pivots: usize,
    objective: Vec<T>,
}

/// Label of the phase-one auxiliary variable.
const AUX: usize = usize::MAX;

impl<T: Scalar> Dictionary<T> {
    fn new(n: usize, rows: &[(Vec<(usize, T)>, T)], c: &[T]) -> Self {
        let m = rows.len();
        let width = n + 1;
        let mut d = vec![T::zero(); (m + 1) * width];
        let mut shadow = vec![T::zero(); m + 1];
        for (j, cj) in c.iter().enumerate() {
            d[j + 1] = cj.clone();
        }
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            let base = (i + 1) * width;
            d[base] = rhs.add(&T::perturbation(i, rhs));
            shadow[i + 1] = rhs.clone();
            for (j, a) in coeffs {
                let cell = &mut d[base + j + 1];
                *cell = cell.sub(a);
            }
        }
        Dictionary {
            m,
            width,
            d,
            shadow,
            basic: (0..m).map(|i| n + i).collect(),
            nonbasic: (0..n).collect(),
            n_struct: n,
            iterations: 0,
            bland_pivots: 0,
            objective: c.to_vec(),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> &T {
        &self.d[i * self.width + j]
    }

    fn run(&mut self, opts: Options) -> Status {
        let needs_phase_one = (1..=self.m).any(|i| self.at(i, 0).is_infeasible());
        if needs_phase_one {
            match self.phase_one(opts) {
                Ok(()) => {}
                Err(s) => return s,
            }
        }
        self.optimize(opts)
    }

    fn phase_one(&mut self, opts: Options) -> Result<(), Status> {
        // Append the auxiliary column with coefficient +1 in every row and
        // objective -aux.
        let old_w = self.width;
        let new_w = old_w + 1;
        let mut nd = vec![T::zero(); (self.m + 1) * new_w];
        for i in 0..=self.m {
            for j in 0..old_w {
                nd[i * new_w + j] = self.d[i * old_w + j].clone();
            }
            nd[i * new_w + old_w] = if i == 0 { T::one().neg() } else { T::one() };
        }
        for j in 1..old_w {
            nd[j] = T::zero();
        }
        nd[0] = T::zero();
        self.d = nd;
        self.width = new_w;
        self.nonbasic.push(AUX);
        let aux_col = new_w - 1;

        let mut r = 1;
        for i in 2..=self.m {
            if self.at(i, 0).lt(self.at(r, 0)) {
                r = i;
            }
        }
        self.pivot(r, aux_col);
        let st = self.optimize(opts);
        if st == Status::IterationLimit {
            return Err(st);
        }
        if self.at(0, 0).is_infeasible() {
            return Err(Status::Infeasible);
        }

        // Drive the auxiliary variable out of the basis if it is still there.
        if let Some(r) = (1..=self.m).find(|&i| self.basic[i - 1] == AUX) {
            let s = (1..self.width)
                .filter(|&j| self.nonbasic[j - 1] != AUX)
                .max_by(|&a, &b| {
                    let va = self.at(r, a).abs();
                    let vb = self.at(r, b).abs();
                    if va.lt(&vb) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                });
            match s {
                Some(s) if !self.at(r, s).is_exact_zero() => self.pivot(r, s),
                _ => return Err(Status::Infeasible),
            }
        }

        // Drop the auxiliary column.
        let aux_pos = (1..self.width)
            .find(|&j| self.nonbasic[j - 1] == AUX)
            .expect("auxiliary column is nonbasic");
        let old_w = self.width;
        let new_w = old_w - 1;
        let mut nd = Vec::with_capacity((self.m + 1) * new_w);
        for i in 0..=self.m {
            for j in 0..old_w {
                if j != aux_pos {
                    nd.push(self.d[i * old_w + j].clone());
                }
            }
        }
        self.d = nd;
        self.width = new_w;
        self.nonbasic.remove(aux_pos - 1);

        // Restore the real objective in terms of the current nonbasic set.
        for j in 0..self.width {
            self.d[j] = T::zero();
        }
        for (jj, &label) in self.nonbasic.clone().iter().enumerate() {
            if label < self.n_struct {
                let cj = self.objective[label].clone();
                self.d[jj + 1] = self.d[jj + 1].add(&cj);
            }
        }
        for i in 1..=self.m {
            let label = self.basic[i - 1];
            if label < self.n_struct {
                let cj = self.objective[label].clone();
                if cj.is_exact_zero() {
                    continue;
                }
                for j in 0..self.width {
                    let add = cj.mul(self.at(i, j));
                    self.d[j] = self.d[j].add(&add);
                }
            }
        }
        Ok(())
    }

    fn optimize(&mut self, opts: Options) -> Status {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= opts.max_iterations {
                return Status::IterationLimit;
            }
            let s = if bland {
                self.entering_bland()
            } else {
                self.entering_dantzig()
            };
            let s = match s {
                Some(s) => s,
                None => return Status::Optimal,
            };
            let r = match self.leaving(s, bland) {
                Some(r) => r,
                None => return Status::Unbounded,
            };
            let degenerate = self.at(r, 0).is_exact_zero() || !self.at(r, 0).is_improving();
            if degenerate {
                degenerate_run += 1;
                if degenerate_run > opts.degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            if bland {
                self.bland_pivots += 1;
            }
            self.pivot(r, s);
            self.iterations += 1;
        }
    }

    fn entering_dantzig(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 1..self.width {
            let cj = self.at(0, j);
            if cj.is_improving() {
                match best {
                    None => best = Some(j),
                    Some(b) if self.at(0, b).lt(cj) => best = Some(j),
                    _ => {}
                }
            }
        }
        best
    }

    fn entering_bland(&self) -> Option<usize> {
        (1..self.width)
            .filter(|&j| self.at(0, j).is_improving())
            .min_by_key(|&j| self.nonbasic[j - 1])
    }

    fn leaving(&self, s: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for i in 1..=self.m {
            let a = self.at(i, s);
            if !a.is_pivot_candidate() {
                continue;
            }
            let ratio = self.at(i, 0).div(&a.neg());
            match &best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    let better = if ratio.near(br) {
                        if bland {
                            self.basic[i - 1] < self.basic[*bi - 1]
                        } else {
                            self.at(*bi, s).abs().lt(&a.abs())
                        }
                    } else {
                        ratio.lt(br)
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.width;
        let a = self.at(r, s).clone();
        let base = r * w;
        for j in 0..w {
            if j == s {
                self.d[base + j] = T::one().div(&a);
            } else {
                let v = self.d[base + j].div(&a).neg();
                self.d[base + j] = v;
            }
        }
        let pivot_row: Vec<T> = self.d[base..base + w].to_vec();
        self.shadow[r] = self.shadow[r].div(&a).neg();
        let shadow_r = self.shadow[r].clone();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let ib = i * w;
            let f = self.d[ib + s].clone();
            if f.is_exact_zero() {
                continue;
            }
            self.shadow[i] = self.shadow[i].add(&f.mul(&shadow_r));
            for (j, pj) in pivot_row.iter().enumerate() {
                if j == s || pj.is_exact_zero() {
                    continue;
                }
                let add = f.mul(pj);
                self.d[ib + j] = self.d[ib + j].add(&add);
            }
            self.d[ib + s] = f.mul(&pivot_row[s]);
            if i > 0 {
                self.d[ib].clean();
            }
        }
        std::mem::swap(&mut self.nonbasic[s - 1], &mut self.basic[r - 1]);
    }

    fn column_values(&self) -> Vec<T> {
        let mut vals = vec![T::zero(); self.n_struct];
        for i in 1..=self.m {
            let label = self.basic[i - 1];
            if label < self.n_struct {
                let mut v = self.shadow[i].clone();
                v.clean();
                vals[label] = v;
            }
        }
        vals
    }
}
