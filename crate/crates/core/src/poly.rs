//! Real polynomials in ascending-coefficient form and piecewise polynomials on [0, 1].

/// `c[0] + c[1] x + ... + c[d] x^d`, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    c: Vec<f64>,
}

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.last() == Some(&0.0) {
            c.pop();
        }
        Poly { c }
    }

    pub fn constant(v: f64) -> Self {
        Poly::new(vec![v])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| a * i as f64)
                .collect(),
        )
    }

    pub fn antiderivative(&self) -> Poly {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(0.0);
        for (i, &a) in self.c.iter().enumerate() {
            c.push(a / (i + 1) as f64);
        }
        Poly::new(c)
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b || self.is_zero() {
            return 0.0;
        }
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.c.len().max(other.c.len());
        Poly::new(
            (0..n)
                .map(|i| self.c.get(i).copied().unwrap_or(0.0) + other.c.get(i).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.c.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::default();
        }
        let mut c = vec![0.0; self.c.len() + other.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in other.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    /// Real roots in `[a, b]`, ascending. Each monotone stretch between
    /// critical points holds at most one root, found by bisection to machine
    /// precision. Roots of even multiplicity that never change sign are only
    /// reported when they land exactly on a critical point.
    pub fn roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        if self.c.len() <= 1 || a > b {
            return Vec::new();
        }
        if self.c.len() == 2 {
            let r = -self.c[0] / self.c[1];
            return if r >= a && r <= b { vec![r] } else { Vec::new() };
        }
        let mut pts = vec![a];
        pts.extend(self.derivative().roots_in(a, b));
        pts.push(b);
        let mut roots: Vec<f64> = Vec::new();
        for w in pts.windows(2) {
            let (l, r) = (w[0], w[1]);
            let (fl, fr) = (self.eval(l), self.eval(r));
            if fl == 0.0 {
                roots.push(l);
            } else if fl.signum() != fr.signum() && fr != 0.0 {
                roots.push(self.bisect(l, r, fl));
            }
        }
        if self.eval(b) == 0.0 {
            roots.push(b);
        }
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
        roots
    }

    fn bisect(&self, mut l: f64, mut r: f64, fl: f64) -> f64 {
        let sl = fl.signum();
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if fm.signum() == sl {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    }

    /// Minimum and maximum over `[a, b]`.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = self.eval(a).min(self.eval(b));
        let mut hi = self.eval(a).max(self.eval(b));
        for x in self.derivative().roots_in(a, b) {
            let v = self.eval(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Piecewise polynomial on [0, 1]. Piece `i` covers `[breaks[i], breaks[i+1])`,
/// the last piece also covers 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Piecewise {
    breaks: Vec<f64>,
    polys: Vec<Poly>,
}

impl Piecewise {
    pub fn single(p: Poly) -> Self {
        Piecewise {
            breaks: vec![0.0, 1.0],
            polys: vec![p],
        }
    }

    /// Step function: `values[i]` on `[bp[i-1], bp[i])`. Empty pieces are dropped.
    pub fn step(bp: &[f64], values: &[f64]) -> Self {
        let mut breaks = vec![0.0];
        let mut polys = Vec::new();
        let mut edges: Vec<f64> = bp.to_vec();
        edges.push(1.0);
        let mut lo = 0.0;
        for (i, &hi) in edges.iter().enumerate() {
            if hi > lo {
                polys.push(Poly::constant(values[i]));
                breaks.push(hi);
                lo = hi;
            }
        }
        if polys.is_empty() {
            polys.push(Poly::constant(*values.last().unwrap_or(&0.0)));
            breaks.push(1.0);
        }
        Piecewise { breaks, polys }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, &Poly)> {
        self.polys
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.breaks[i], self.breaks[i + 1], p))
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.polys.iter().all(|p| p.degree() == 0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.piece_index(x);
        self.polys[k].eval(x)
    }

    fn piece_index(&self, x: f64) -> usize {
        let n = self.polys.len();
        // First break strictly greater than x, minus one.
        let idx = self.breaks[1..n].partition_point(|&b| b <= x);
        idx.min(n - 1)
    }

    /// `∫_a^b f` for `0 <= a <= b <= 1`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut s = 0.0;
        for (lo, hi, p) in self.pieces() {
            let l = lo.max(a);
            let h = hi.min(b);
            if h > l {
                s += p.integral(l, h);
            }
        }
        s
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Piecewise {
        Piecewise {
            breaks: self.breaks.clone(),
            polys: self.polys.iter().map(f).collect(),
        }
    }

    /// Pointwise combination over the common refinement of both partitions.
    pub fn combine(&self, other: &Piecewise, f: impl Fn(&Poly, &Poly) -> Poly) -> Piecewise {
        let mut breaks: Vec<f64> = self.breaks.iter().chain(other.breaks.iter()).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut polys = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            polys.push(f(
                &self.polys[self.piece_index(mid)],
                &other.polys[other.piece_index(mid)],
            ));
        }
        Piecewise { breaks, polys }
    }

    pub fn add(&self, other: &Piecewise) -> Piecewise {
        self.combine(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Piecewise) -> Piecewise {
        self.combine(other, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &Piecewise) -> Piecewise {
        self.combine(other, |a, b| a.mul(b))
    }

    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b, p) in self.pieces() {
            let (l, h) = p.range_on(a, b);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        (lo, hi)
    }

    /// Maximal intervals of [0, 1] on which `f <= c` (or `f >= c` when
    /// `below` is false), up to measure zero.
    pub fn level_set(&self, c: f64, below: bool) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (lo, hi, p) in self.pieces() {
            let q = p.sub(&Poly::constant(c));
            let mut cuts = vec![lo];
            cuts.extend(q.roots_in(lo, hi).into_iter().filter(|&r| r > lo && r < hi));
            cuts.push(hi);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let v = q.eval(0.5 * (a + b));
                let keep = if below { v <= 0.0 } else { v >= 0.0 };
                if keep {
                    match out.last_mut() {
                        Some(last) if last.1 == a => last.1 = b,
                        _ => out.push((a, b)),
                    }
                }
            }
        }
        out
    }

    /// `∫ (f - c)^+` over [0, 1].
    pub fn positive_part_integral(&self, c: f64) -> f64 {
        self.level_set(c, false)
            .iter()
            .map(|&(a, b)| self.integral(a, b) - c * (b - a))
            .sum::<f64>()
            .max(0.0)
    }

    /// `∫ (c - f)^+` over [0, 1].
    pub fn negative_part_integral(&self, c: f64) -> f64 {
        self.level_set(c, true)
            .iter()
            .map(|&(a, b)| c * (b - a) - self.integral(a, b))
            .sum::<f64>()
            .max(0.0)
    }

    /// Non-decreasing on [0, 1]: derivative non-negative on every piece and
    /// no downward jump at a break.
    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        for (a, b, p) in self.pieces() {
            let (lo, _) = p.derivative().range_on(a, b);
            if lo < -tol {
                return false;
            }
        }
        for i in 1..self.polys.len() {
            let x = self.breaks[i];
            if self.polys[i].eval(x) < self.polys[i - 1].eval(x) - tol {
                return false;
            }
        }
        true
    }
}
