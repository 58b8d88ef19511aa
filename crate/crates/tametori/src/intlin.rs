//! Exact integer linear algebra: Smith normal form, finite abelian
//! cokernels, torsion fixed points and coinvariants of lattice
//! endomorphisms, and torsion torsor equations.
//!
//! All computations here are exact. Group element matrices elsewhere in the
//! crate use `i64`; this module switches to arbitrary precision for the
//! Smith reduction where intermediate entries can blow up.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::Result;

/// Dense integer matrix with arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, a: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        IntMatrix { rows, cols, a: entries.iter().map(|&x| BigInt::from(x)).collect() }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row_i += q * row_j
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        for c in 0..self.cols {
            let t = q * &self[(j, c)];
            self[(i, c)] += t;
        }
    }

    /// col_i += q * col_j
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        for r in 0..self.rows {
            let t = q * &self[(r, j)];
            self[(r, i)] += t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = -self[(i, c)].clone();
            self[(i, c)] = v;
        }
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let pivot = (k + 1..n).find(|&r| !m[(r, k)].is_zero());
                match pivot {
                    Some(r) => {
                        m.swap_rows(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[(k, k)] * &m[(i, j)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = &t / &prev;
                }
            }
            for i in k + 1..n {
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.a[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.a[r * self.cols + c]
    }
}

/// Smith normal form decomposition `u * m * v = d`.
#[derive(Debug, Clone)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

/// Compute the Smith normal form of `m`.
///
/// Pivoting picks the entry of smallest absolute value in the remaining
/// block to limit intermediate growth. The transforms are accumulated and
/// the factorization `u * m * v = d` together with `|det u| = |det v| = 1`
/// is asserted before returning.
pub fn smith(m: &IntMatrix) -> Smith {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let steps = rows.min(cols);
    for k in 0..steps {
        loop {
            // smallest nonzero |entry| in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if !d[(i, j)].is_zero()
                        && best.map_or(true, |(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let (pi, pj) = match best {
                Some(p) => p,
                None => break,
            };
            d.swap_rows(k, pi);
            u.swap_rows(k, pi);
            d.swap_cols(k, pj);
            v.swap_cols(k, pj);

            let mut clean = true;
            for i in k + 1..rows {
                if !d[(i, k)].is_zero() {
                    let q = -(&d[(i, k)] / &d[(k, k)]);
                    d.add_row(i, k, &q);
                    u.add_row(i, k, &q);
                    if !d[(i, k)].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in k + 1..cols {
                if !d[(k, j)].is_zero() {
                    let q = -(&d[(k, j)] / &d[(k, k)]);
                    d.add_col(j, k, &q);
                    v.add_col(j, k, &q);
                    if !d[(k, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                // pivot must divide the rest of the block
                let mut done = true;
                'scan: for i in k + 1..rows {
                    for j in k + 1..cols {
                        if !(&d[(i, j)] % &d[(k, k)]).is_zero() {
                            let one = BigInt::one();
                            d.add_row(k, i, &one);
                            u.add_row(k, i, &one);
                            done = false;
                            break 'scan;
                        }
                    }
                }
                if done {
                    break;
                }
            }
        }
        if d[(k, k)].is_negative() {
            d.negate_row(k);
            u.negate_row(k);
        }
    }
    let s = Smith { u, d, v };
    debug_assert!(smith_is_valid(m, &s), "smith factorization invalid");
    assert!(s.u.det().abs().is_one(), "left transform not unimodular");
    assert!(s.v.det().abs().is_one(), "right transform not unimodular");
    s
}

fn smith_is_valid(m: &IntMatrix, s: &Smith) -> bool {
    if s.u.mul(m).mul(&s.v) != s.d {
        return false;
    }
    let k = s.d.rows.min(s.d.cols);
    for i in 0..s.d.rows {
        for j in 0..s.d.cols {
            if i != j && !s.d[(i, j)].is_zero() {
                return false;
            }
        }
    }
    for i in 0..k.saturating_sub(1) {
        if !s.d[(i + 1, i + 1)].is_zero() || !s.d[(i, i)].is_zero() {
            if s.d[(i, i)].is_zero() && !s.d[(i + 1, i + 1)].is_zero() {
                return false;
            }
            if !s.d[(i, i)].is_zero() && !(&s.d[(i + 1, i + 1)] % &s.d[(i, i)]).is_zero() {
                return false;
            }
        }
    }
    true
}

/// A finite abelian group in invariant factor form `Z/d1 x ... x Z/dk`
/// with `d1 | d2 | ... | dk` and every `di > 1`.
///
/// `gen_lift` columns express the chosen generators in the coordinates of
/// the ambient lattice the group was presented in (when applicable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    pub invariant_factors: Vec<u64>,
    pub gen_lift: IntMatrix,
}

impl FiniteAbelianGroup {
    pub fn trivial(ambient_rank: usize) -> Self {
        FiniteAbelianGroup {
            invariant_factors: vec![],
            gen_lift: IntMatrix::zero(ambient_rank, 0),
        }
    }

    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Exponent of the group: the largest invariant factor.
    pub fn exponent(&self) -> u64 {
        self.invariant_factors.last().copied().unwrap_or(1)
    }

    /// Iterate over all element coordinate vectors (small groups only).
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for &d in &self.invariant_factors {
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for e in &out {
                for x in 0..d {
                    let mut e2 = e.clone();
                    e2.push(x);
                    next.push(e2);
                }
            }
            out = next;
        }
        out
    }

    /// Remove the p-part of every invariant factor.
    pub fn strip_p_part(&self, p: u64) -> FiniteAbelianGroup {
        if p == 0 {
            return self.clone();
        }
        let mut factors = Vec::new();
        let mut keep_cols = Vec::new();
        for (i, &d) in self.invariant_factors.iter().enumerate() {
            let mut d2 = d;
            while d2 % p == 0 {
                d2 /= p;
            }
            if d2 > 1 {
                factors.push(d2);
                keep_cols.push(i);
            }
        }
        let mut lift = IntMatrix::zero(self.gen_lift.rows, keep_cols.len());
        for (jnew, &jold) in keep_cols.iter().enumerate() {
            // multiply the generator by the p-part to land in the prime-to-p component
            let d = self.invariant_factors[jold];
            let mut ppart: u64 = 1;
            let mut d2 = d;
            while d2 % p == 0 {
                d2 /= p;
                ppart *= p;
            }
            for r in 0..self.gen_lift.rows {
                lift[(r, jnew)] = &self.gen_lift[(r, jold)] * BigInt::from(ppart);
            }
        }
        FiniteAbelianGroup { invariant_factors: factors, gen_lift: lift }
    }
}

/// Cokernel of an integer matrix acting between free modules:
/// `Z^rows / image(m)`.
///
/// Errors with `InfiniteCokernel` when the quotient has positive rank.
pub fn cokernel(m: &IntMatrix) -> Result<FiniteAbelianGroup> {
    let s = smith(m);
    let k = m.rows.min(m.cols);
    let mut diag: Vec<BigInt> = (0..k).map(|i| s.d[(i, i)].clone()).collect();
    diag.resize(m.rows, BigInt::zero());
    if diag.iter().any(|d| d.is_zero()) {
        return Err(Error::InfiniteCokernel);
    }
    // coordinates y = u x; generator of the i-th cyclic factor is u^(-1) e_i
    let uinv = invert_unimodular(&s.u);
    let mut factors = Vec::new();
    let mut cols = Vec::new();
    for (i, d) in diag.iter().enumerate() {
        let d: u64 = u64::try_from(d.clone()).expect("invariant factor too large");
        if d > 1 {
            factors.push(d);
            cols.push(i);
        }
    }
    let mut lift = IntMatrix::zero(m.rows, cols.len());
    for (jnew, &jold) in cols.iter().enumerate() {
        for r in 0..m.rows {
            lift[(r, jnew)] = uinv[(r, jold)].clone();
        }
    }
    Ok(FiniteAbelianGroup { invariant_factors: factors, gen_lift: lift })
}

/// Invert a unimodular integer matrix exactly.
pub fn invert_unimodular(m: &IntMatrix) -> IntMatrix {
    let n = m.rows;
    assert_eq!(m.rows, m.cols);
    let s = smith(m);
    // u m v = d = identity up to unit diagonal entries (all 1 since unimodular)
    for i in 0..n {
        assert!(s.d[(i, i)].abs().is_one(), "matrix is not unimodular");
    }
    // m^-1 = v d^-1 u, and d^-1 is diagonal +-1
    let mut dinv = IntMatrix::zero(n, n);
    for i in 0..n {
        dinv[(i, i)] = s.d[(i, i)].clone();
    }
    s.v.mul(&dinv).mul(&s.u)
}

/// Fixed points of finite order on the torsion points of a lattice:
/// `(X (x) (Q/Z)_{p'})^phi`, presented as `coker(phi - 1)` with the p-part
/// of each invariant factor removed.
pub fn torsion_fixed_points(phi: &IntMatrix, p: u64) -> Result<FiniteAbelianGroup> {
    let n = phi.rows;
    assert_eq!(phi.rows, phi.cols);
    let mut m = phi.clone();
    for i in 0..n {
        m[(i, i)] -= BigInt::one();
    }
    if m.det().is_zero() {
        return Err(Error::NonElliptic);
    }
    Ok(cokernel(&m)?.strip_p_part(p))
}

/// Coinvariants `g / (1 - e) g` of a finite abelian group under an
/// endomorphism given in generator coordinates.
pub fn coinvariants(g: &FiniteAbelianGroup, e: &IntMatrix) -> Result<FiniteAbelianGroup> {
    let k = g.rank();
    assert_eq!(e.rows, k);
    assert_eq!(e.cols, k);
    // well-definedness: e(d_j g_j) must vanish, i.e. d_j e_ij = 0 mod d_i
    for j in 0..k {
        let dj = BigInt::from(g.invariant_factors[j]);
        for i in 0..k {
            let di = BigInt::from(g.invariant_factors[i]);
            if !((&dj * &e[(i, j)]) % &di).is_zero() {
                return Err(Error::IllDefinedEndo);
            }
        }
    }
    // present the quotient: generators with relations diag(d) and (1 - e)
    let mut m = IntMatrix::zero(k, 2 * k);
    for i in 0..k {
        m[(i, i)] = BigInt::from(g.invariant_factors[i]);
        for j in 0..k {
            let delta = if i == j { BigInt::one() } else { BigInt::zero() };
            m[(i, k + j)] = delta - &e[(i, j)];
        }
    }
    let s = smith(&m);
    let mut factors = Vec::new();
    let mut cols = Vec::new();
    let uinv = invert_unimodular(&s.u);
    for i in 0..k {
        let d = s.d[(i, i)].clone();
        assert!(!d.is_zero(), "coinvariants of a finite group must be finite");
        let d: u64 = u64::try_from(d).expect("factor too large");
        if d > 1 {
            factors.push(d);
            cols.push(i);
        }
    }
    // generator lifts back into the ambient lattice coordinates of g
    let mut lift = IntMatrix::zero(g.gen_lift.rows, cols.len());
    for (jnew, &jold) in cols.iter().enumerate() {
        for r in 0..g.gen_lift.rows {
            let mut acc = BigInt::zero();
            for t in 0..k {
                acc += &g.gen_lift[(r, t)] * &uinv[(t, jold)];
            }
            lift[(r, jnew)] = acc;
        }
    }
    Ok(FiniteAbelianGroup { invariant_factors: factors, gen_lift: lift })
}

/// A rational vector representing a torsion point of the compact torus
/// `(Q/Z)^n`, kept normalized to `[0, 1)` coordinatewise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionVec(pub Vec<Rational64>);

fn norm_frac(x: Rational64) -> Rational64 {
    let mut x = x;
    let one = Rational64::one();
    while x < Rational64::zero() {
        x += one;
    }
    while x >= one {
        x -= one;
    }
    x
}

impl TorsionVec {
    pub fn zero(n: usize) -> Self {
        TorsionVec(vec![Rational64::zero(); n])
    }

    pub fn from_raw(v: Vec<Rational64>) -> Self {
        TorsionVec(v.into_iter().map(norm_frac).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &TorsionVec) -> TorsionVec {
        TorsionVec::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &TorsionVec) -> TorsionVec {
        TorsionVec::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> TorsionVec {
        TorsionVec::from_raw(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, k: i64) -> TorsionVec {
        TorsionVec::from_raw(self.0.iter().map(|a| a * Rational64::from_integer(k)).collect())
    }

    /// Apply an integer matrix (rows act on coordinates).
    pub fn apply(&self, m: &[i64], n: usize) -> TorsionVec {
        assert_eq!(self.len(), n);
        let mut out = vec![Rational64::zero(); n];
        for i in 0..n {
            let mut acc = Rational64::zero();
            for j in 0..n {
                acc += Rational64::from_integer(m[i * n + j]) * self.0[j];
            }
            out[i] = acc;
        }
        TorsionVec::from_raw(out)
    }

    /// Multiplicative order as an element of `(Q/Z)^n`.
    pub fn order(&self) -> u64 {
        let mut l: u64 = 1;
        for x in &self.0 {
            l = l.lcm(&(*x.denom() as u64));
        }
        l
    }
}

/// Solution set of `(1 - phi) t = c` on the torsion points `(Q/Z)^n`.
#[derive(Debug, Clone)]
pub enum TorsorSolution {
    NoSolution,
    Torsor { base: TorsionVec, stabilizer: Vec<TorsionVec> },
}

impl TorsorSolution {
    pub fn all(&self) -> Vec<TorsionVec> {
        match self {
            TorsorSolution::NoSolution => vec![],
            TorsorSolution::Torsor { base, stabilizer } => {
                let mut seen = std::collections::BTreeSet::new();
                let mut queue = vec![base.clone()];
                seen.insert(base.clone());
                while let Some(x) = queue.pop() {
                    for s in stabilizer {
                        let y = x.add(s);
                        if seen.insert(y.clone()) {
                            queue.push(y);
                        }
                    }
                }
                seen.into_iter().collect()
            }
        }
    }
}

/// Solve `(1 - phi) t = c` over `(Q/Z)^n` exactly.
///
/// The solution set, when nonempty, is a coset of `ker(1 - phi)` on the
/// torsion group; the kernel generators returned have orders given by the
/// elementary divisors of `1 - phi`.
pub fn solve_torsion_equation(phi: &IntMatrix, c: &TorsionVec) -> TorsorSolution {
    let n = phi.rows;
    assert_eq!(phi.rows, phi.cols);
    assert_eq!(c.len(), n);
    let mut m = IntMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            let t = m[(i, j)].clone() - &phi[(i, j)];
            m[(i, j)] = t;
        }
    }
    let s = smith(&m);
    // m t = c mod Z^n  <=>  d s' = (u c) mod Z^n with t = v s'
    let uc: Vec<Rational64> = (0..n)
        .map(|i| {
            let mut acc = Rational64::zero();
            for j in 0..n {
                let uij = i64::try_from(s.u[(i, j)].clone()).expect("transform entry overflow");
                acc += Rational64::from_integer(uij) * c.0[j];
            }
            acc
        })
        .collect();
    let mut base_s = vec![Rational64::zero(); n];
    let mut stab_s: Vec<Vec<Rational64>> = Vec::new();
    for i in 0..n {
        let d = i64::try_from(s.d[(i, i)].clone()).expect("divisor overflow");
        if d == 0 {
            if !norm_frac(uc[i]).is_zero() {
                return TorsorSolution::NoSolution;
            }
            // free coordinate on torsion: the whole circle; irrelevant for
            // finite groups, represent by the zero generator (callers in
            // this crate only hit d = 0 together with uc = 0 and do not
            // need the infinite part)
        } else {
            base_s[i] = uc[i] / Rational64::from_integer(d);
            if d.abs() > 1 {
                let mut g = vec![Rational64::zero(); n];
                g[i] = Rational64::new(1, d.abs());
                stab_s.push(g);
            }
        }
    }
    let apply_v = |sv: &[Rational64]| -> TorsionVec {
        let mut out = vec![Rational64::zero(); n];
        for i in 0..n {
            let mut acc = Rational64::zero();
            for j in 0..n {
                let vij = i64::try_from(s.v[(i, j)].clone()).expect("transform entry overflow");
                acc += Rational64::from_integer(vij) * sv[j];
            }
            out[i] = acc;
        }
        TorsionVec::from_raw(out)
    };
    let base = apply_v(&base_s);
    let stabilizer = stab_s.iter().map(|g| apply_v(g)).collect();
    TorsorSolution::Torsor { base, stabilizer }
}

/// A finite quotient `Z^n / M Z^k` kept together with the data needed to
/// project ambient vectors onto generator coordinates.
#[derive(Debug, Clone)]
pub struct QuotientPresentation {
    pub group: FiniteAbelianGroup,
    u: IntMatrix,
    kept_rows: Vec<usize>,
}

impl QuotientPresentation {
    /// Present `Z^n / (columns of rels)`; errors when the quotient is infinite.
    pub fn new(rels: &IntMatrix) -> Result<QuotientPresentation> {
        let n = rels.rows;
        let s = smith(rels);
        let k = rels.rows.min(rels.cols);
        let mut diag: Vec<BigInt> = (0..k).map(|i| s.d[(i, i)].clone()).collect();
        diag.resize(n, BigInt::zero());
        if diag.iter().any(|d| d.is_zero()) {
            return Err(Error::InfiniteCokernel);
        }
        let uinv = invert_unimodular(&s.u);
        let mut factors = Vec::new();
        let mut kept = Vec::new();
        for (i, d) in diag.iter().enumerate() {
            let d: u64 = u64::try_from(d.clone()).expect("invariant factor too large");
            if d > 1 {
                factors.push(d);
                kept.push(i);
            }
        }
        let mut lift = IntMatrix::zero(n, kept.len());
        for (jnew, &jold) in kept.iter().enumerate() {
            for r in 0..n {
                lift[(r, jnew)] = uinv[(r, jold)].clone();
            }
        }
        Ok(QuotientPresentation {
            group: FiniteAbelianGroup { invariant_factors: factors, gen_lift: lift },
            u: s.u,
            kept_rows: kept,
        })
    }

    /// Generator coordinates of an ambient integer vector.
    pub fn project(&self, v: &[BigInt]) -> Vec<u64> {
        let n = self.u.rows;
        assert_eq!(v.len(), n);
        self.kept_rows
            .iter()
            .zip(&self.group.invariant_factors)
            .map(|(&row, &d)| {
                let mut acc = BigInt::zero();
                for j in 0..n {
                    acc += &self.u[(row, j)] * &v[j];
                }
                let r = acc.mod_floor(&BigInt::from(d));
                u64::try_from(r).unwrap()
            })
            .collect()
    }

    pub fn project_i64(&self, v: &[i64]) -> Vec<u64> {
        let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.project(&big)
    }

    /// Matrix of an ambient endomorphism on the generator coordinates.
    pub fn induced_endo(&self, m: &IntMatrix) -> IntMatrix {
        let k = self.group.rank();
        let n = self.u.rows;
        let mut out = IntMatrix::zero(k, k);
        for j in 0..k {
            let mut img = vec![BigInt::zero(); n];
            for r in 0..n {
                for t in 0..n {
                    img[r] += &m[(r, t)] * &self.group.gen_lift[(t, j)];
                }
            }
            let coords = self.project(&img);
            for i in 0..k {
                out[(i, j)] = BigInt::from(coords[i]);
            }
        }
        out
    }
}

/// Characteristic polynomial of a small integer matrix, exact, by the
/// Faddeev-LeVerrier recursion. Returned with leading coefficient first.
pub fn char_poly(m: &IntMatrix) -> Vec<BigInt> {
    let n = m.rows;
    assert_eq!(m.rows, m.cols);
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[0] = BigInt::one();
    let mut aux = IntMatrix::identity(n);
    for k in 1..=n {
        let prod = m.mul(&aux);
        let mut tr = BigInt::zero();
        for i in 0..n {
            tr += prod[(i, i)].clone();
        }
        let c = -tr / BigInt::from(k as i64);
        coeffs[k] = c.clone();
        aux = prod;
        for i in 0..n {
            aux[(i, i)] += &c;
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2(a: i64, b: i64, c: i64, d: i64) -> IntMatrix {
        IntMatrix::from_i64(2, 2, &[a, b, c, d])
    }

    #[test]
    fn smith_identity() {
        let s = smith(&IntMatrix::identity(2));
        assert_eq!(s.d, IntMatrix::identity(2));
    }

    #[test]
    fn smith_upper_triangular() {
        // [[2,1],[0,2]] has invariant factors (1, 4)
        let s = smith(&m2(2, 1, 0, 2));
        assert_eq!(s.d[(0, 0)], BigInt::from(1));
        assert_eq!(s.d[(1, 1)], BigInt::from(4));
    }

    #[test]
    fn smith_already_diagonal() {
        let s = smith(&m2(2, 0, 0, 2));
        assert_eq!(s.d[(0, 0)], BigInt::from(2));
        assert_eq!(s.d[(1, 1)], BigInt::from(2));
    }

    #[test]
    fn cokernel_a2_coxeter() {
        // Coxeter rotation on the A2 coroot lattice; det(w - 1) = 3
        let w = m2(0, -1, 1, -1);
        let mut m = w.clone();
        m[(0, 0)] -= BigInt::one();
        m[(1, 1)] -= BigInt::one();
        let g = cokernel(&m).unwrap();
        assert_eq!(g.invariant_factors, vec![3]);
    }

    #[test]
    fn cokernel_infinite() {
        let m = IntMatrix::zero(1, 1);
        assert!(matches!(cokernel(&m), Err(Error::InfiniteCokernel)));
    }

    #[test]
    fn torsion_fixed_points_strip() {
        // reflection on Z: coker(-2) = Z/2, no 3-part to strip
        let phi = IntMatrix::from_i64(1, 1, &[-1]);
        let g = torsion_fixed_points(&phi, 3).unwrap();
        assert_eq!(g.invariant_factors, vec![2]);
        // A2 Coxeter with p = 5 keeps the full Z/3
        let w = m2(0, -1, 1, -1);
        let g = torsion_fixed_points(&w, 5).unwrap();
        assert_eq!(g.invariant_factors, vec![3]);
        // and with p = 3 the whole group is a p-group
        let g = torsion_fixed_points(&w, 3).unwrap();
        assert!(g.is_trivial());
    }

    #[test]
    fn coinvariants_examples() {
        let z3 = FiniteAbelianGroup {
            invariant_factors: vec![3],
            gen_lift: IntMatrix::identity(1),
        };
        // identity endomorphism: the group itself
        let g = coinvariants(&z3, &IntMatrix::identity(1)).unwrap();
        assert_eq!(g.invariant_factors, vec![3]);
        // multiplication by 7 on Z/3: 1 - 7 = -6 = 0 mod 3
        let g = coinvariants(&z3, &IntMatrix::from_i64(1, 1, &[7])).unwrap();
        assert_eq!(g.invariant_factors, vec![3]);
        // multiplication by 5: 1 - 5 = -4 invertible mod 3
        let g = coinvariants(&z3, &IntMatrix::from_i64(1, 1, &[5])).unwrap();
        assert!(g.is_trivial());
    }

    #[test]
    fn coinvariants_brute_force_oracle() {
        // check |G/(1-e)G| against explicit enumeration on Z/3
        let z3 = FiniteAbelianGroup {
            invariant_factors: vec![3],
            gen_lift: IntMatrix::identity(1),
        };
        for mult in 0..9i64 {
            let e = IntMatrix::from_i64(1, 1, &[mult]);
            let g = coinvariants(&z3, &e).unwrap();
            let image: std::collections::BTreeSet<i64> =
                (0..3).map(|x| ((1 - mult) * x).rem_euclid(3)).collect();
            assert_eq!(g.order(), 3 / image.len() as u64);
        }
    }

    #[test]
    fn ill_defined_endo() {
        // Z/2 x Z/4, endomorphism sending the order-4 generator to the
        // order-2 generator is fine, but g1 -> g2 requires 2 g2 = 0 in Z/4
        let g = FiniteAbelianGroup {
            invariant_factors: vec![2, 4],
            gen_lift: IntMatrix::identity(2),
        };
        let bad = IntMatrix::from_i64(2, 2, &[0, 0, 1, 0]);
        assert!(matches!(coinvariants(&g, &bad), Err(Error::IllDefinedEndo)));
    }

    #[test]
    fn torsor_cases() {
        // phi = 0: unique solution t = c
        let phi = IntMatrix::zero(1, 1);
        let c = TorsionVec::from_raw(vec![Rational64::new(1, 3)]);
        match solve_torsion_equation(&phi, &c) {
            TorsorSolution::Torsor { base, stabilizer } => {
                assert_eq!(base, c);
                assert!(stabilizer.is_empty());
            }
            _ => panic!("expected solution"),
        }
        // phi = -1 on Z, c = 1/2: base 1/4, stabilizer Z/2
        let phi = IntMatrix::from_i64(1, 1, &[-1]);
        let c = TorsionVec::from_raw(vec![Rational64::new(1, 2)]);
        match solve_torsion_equation(&phi, &c) {
            TorsorSolution::Torsor { base, stabilizer } => {
                assert_eq!(base.0[0] * Rational64::from_integer(2), Rational64::new(1, 2));
                assert_eq!(stabilizer.len(), 1);
                assert_eq!(stabilizer[0].0[0], Rational64::new(1, 2));
                assert_eq!(
                    solve_torsion_equation(&phi, &c).all().len(),
                    2,
                    "two solutions of 2t = 1/2 in Q/Z"
                );
            }
            _ => panic!("expected torsor"),
        }
        // phi = 1, c != 0: no solution
        let phi = IntMatrix::from_i64(1, 1, &[1]);
        let c = TorsionVec::from_raw(vec![Rational64::new(1, 2)]);
        assert!(matches!(solve_torsion_equation(&phi, &c), TorsorSolution::NoSolution));
    }

    #[test]
    fn char_poly_small() {
        let m = m2(0, -1, 1, -1);
        // x^2 + x + 1
        assert_eq!(
            char_poly(&m),
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)]
        );
    }

    proptest! {
        #[test]
        fn smith_roundtrip(entries in proptest::collection::vec(-5i64..=5, 9)) {
            let m = IntMatrix::from_i64(3, 3, &entries);
            let s = smith(&m);
            prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d);
            prop_assert!(s.u.det().abs().is_one());
            prop_assert!(s.v.det().abs().is_one());
        }

        #[test]
        fn cokernel_order_is_det(entries in proptest::collection::vec(-5i64..=5, 9)) {
            let m = IntMatrix::from_i64(3, 3, &entries);
            let d = m.det();
            prop_assume!(!d.is_zero());
            let g = cokernel(&m).unwrap();
            prop_assert_eq!(BigInt::from(g.order()), d.abs());
        }

        #[test]
        fn coinvariant_order_divides(entries in proptest::collection::vec(-3i64..=3, 4)) {
            let g = FiniteAbelianGroup {
                invariant_factors: vec![2, 6],
                gen_lift: IntMatrix::identity(2),
            };
            let e = IntMatrix::from_i64(2, 2, &entries);
            if let Ok(q) = coinvariants(&g, &e) {
                prop_assert_eq!(g.order() % q.order(), 0);
            }
        }
    }
}
