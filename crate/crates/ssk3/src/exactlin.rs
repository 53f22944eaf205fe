//! Exact integer and rational matrices: Smith and Hermite normal forms,
//! determinants, inverses and Howell forms over Z/p^k.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, x) in r.iter().enumerate() {
                m[(i, j)] = x.clone().into();
            }
        }
        m
    }

    /// Builds a matrix with `cols` columns from flat row-major data.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IntMatrix { rows, cols, data }
    }

    pub fn diagonal(entries: &[BigInt]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, d) in entries.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| BigRational::from_integer(x.clone())).collect(),
        }
    }

    /// Block diagonal sum.
    pub fn block_diag(blocks: &[IntMatrix]) -> IntMatrix {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(n, m);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)].clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = &self.data[src * self.cols + j];
            if !s.is_zero() {
                let v = s * k;
                self.data[dst * self.cols + j] += v;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + src];
            if !s.is_zero() {
                let v = s * k;
                self.data[i * self.cols + dst] += v;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let x = &mut self.data[r * self.cols + j];
            *x = -std::mem::take(x);
        }
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect();
        write!(f, "{:?}", rows)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let n = rows.len();
        let data: Vec<BigRational> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * cols, "ragged rows");
        RatMatrix { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn scale(&self, k: &BigRational) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * k).collect() }
    }

    /// Least common multiple of all denominators.
    pub fn denominator(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    /// Integer matrix `d * self`; panics if `d * self` is not integral.
    pub fn scaled_to_int(&self, d: &BigInt) -> IntMatrix {
        let data = self
            .data
            .iter()
            .map(|x| {
                let y = x * BigRational::from_integer(d.clone());
                assert!(y.is_integer(), "scale does not clear denominators");
                y.to_integer()
            })
            .collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect();
        write!(f, "{:?}", rows)
    }
}

/// `left * m * right` is diagonal with entries `diag` (padded with zeros).
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub left: IntMatrix,
    pub diag: Vec<BigInt>,
    pub right: IntMatrix,
}

impl SmithDecomposition {
    pub fn diagonal_matrix(&self) -> IntMatrix {
        let mut d = IntMatrix::zeros(self.left.rows(), self.right.cols());
        for (i, x) in self.diag.iter().enumerate() {
            d[(i, i)] = x.clone();
        }
        d
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let steps = rows.min(cols);
    let mut t = 0;
    while t < steps {
        // smallest nonzero entry of the trailing block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = &a[(i, j)];
                if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < a[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap_rows(t, bi);
        u.swap_rows(t, bi);
        a.swap_cols(t, bj);
        v.swap_cols(t, bj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let q = -a[(i, t)].div_floor(&a[(t, t)]);
                a.add_row(i, t, &q);
                u.add_row(i, t, &q);
                if !a[(i, t)].is_zero() {
                    a.swap_rows(t, i);
                    u.swap_rows(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let q = -a[(t, j)].div_floor(&a[(t, t)]);
                a.add_col(j, t, &q);
                v.add_col(j, t, &q);
                if !a[(t, j)].is_zero() {
                    a.swap_cols(t, j);
                    v.swap_cols(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // the pivot must divide the whole trailing block
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !a[(i, j)].is_multiple_of(&a[(t, t)]) {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let diag = (0..steps).map(|i| a[(i, i)].clone()).collect();
    SmithDecomposition { left: u, diag, right: v }
}

/// Row-style Hermite normal form: nonzero rows only, positive pivots moving
/// strictly right, entries above each pivot reduced into `[0, pivot)`.
pub fn hermite_normal_form(m: &IntMatrix) -> IntMatrix {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == rows {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows {
                if !a[(i, c)].is_zero() && best.map_or(true, |b| a[(i, c)].abs() < a[(b, c)].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            a.swap_rows(r, b);
            let mut clean = true;
            for i in r + 1..rows {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let q = -a[(i, c)].div_floor(&a[(r, c)]);
                a.add_row(i, r, &q);
                if !a[(i, c)].is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if a[(r, c)].is_zero() {
            continue;
        }
        if a[(r, c)].is_negative() {
            a.negate_row(r);
        }
        for i in 0..r {
            let q = -a[(i, c)].div_floor(&a[(r, c)]);
            a.add_row(i, r, &q);
        }
        pivots.push(c);
        r += 1;
    }
    let data = a.data[..r * cols].to_vec();
    IntMatrix { rows: r, cols, data }
}

/// Fraction-free Bareiss determinant.
pub fn det(m: &IntMatrix) -> Result<BigInt> {
    if !m.is_square() {
        return Err(Error::Shape(format!("determinant of a {}x{} matrix", m.rows, m.cols)));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(k, i);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                a[(i, j)] = v / &prev;
            }
        }
        prev = a[(k, k)].clone();
    }
    Ok(sign * &a[(n - 1, n - 1)])
}

pub fn inverse_rational(m: &IntMatrix) -> Result<RatMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!("inverse of a {}x{} matrix", m.rows, m.cols)));
    }
    let n = m.rows;
    let mut a = m.to_rational();
    let mut inv = RatMatrix::identity(n);
    for c in 0..n {
        let p = (c..n).find(|&i| !a[(i, c)].is_zero()).ok_or(Error::Singular)?;
        if p != c {
            for j in 0..n {
                a.data.swap(p * n + j, c * n + j);
                inv.data.swap(p * n + j, c * n + j);
            }
        }
        let piv = a[(c, c)].clone();
        for j in 0..n {
            a[(c, j)] = &a[(c, j)] / &piv;
            inv[(c, j)] = &inv[(c, j)] / &piv;
        }
        for i in 0..n {
            if i == c || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in 0..n {
                let d = &a[(c, j)] * &f;
                a[(i, j)] -= d;
                let d = &inv[(c, j)] * &f;
                inv[(i, j)] -= d;
            }
        }
    }
    Ok(inv)
}

/// Splits `q` as `p^k` for a prime `p`; `None` if `q` is not a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut k = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    (r == 1).then_some((p, k))
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn valuation(mut x: u64, p: u64) -> u32 {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Howell form of a module over Z/N, N = p^k, together with the row
/// transformation that produced each output row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HowellForm {
    pub modulus: u64,
    pub rows: Vec<Vec<u64>>,
    pub pivots: Vec<usize>,
    pub transform: Vec<Vec<u64>>,
}

/// Howell normal form of the row span of `rows` over Z/modulus.  `modulus`
/// must be a prime power.
pub fn howell_form(rows: &[Vec<u64>], modulus: u64) -> HowellForm {
    howell_with_transform(rows, modulus, false)
}

fn howell_with_transform(rows: &[Vec<u64>], modulus: u64, track: bool) -> HowellForm {
    let (p, k) = prime_power(modulus).expect("Howell form needs a prime-power modulus");
    let ncols = rows.first().map_or(0, |r| r.len());
    let nrows = rows.len();
    let mut work: Vec<(Vec<u64>, Vec<u64>)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut t = vec![];
            if track {
                t = vec![0; nrows];
                t[i] = 1;
            }
            (r.iter().map(|x| x % modulus).collect(), t)
        })
        .collect();
    let sub = |dst: &mut (Vec<u64>, Vec<u64>), src: &(Vec<u64>, Vec<u64>), f: u64| {
        for (d, s) in dst.0.iter_mut().zip(&src.0) {
            *d = (*d + modulus - mulmod(*s, f, modulus)) % modulus;
        }
        for (d, s) in dst.1.iter_mut().zip(&src.1) {
            *d = (*d + modulus - mulmod(*s, f, modulus)) % modulus;
        }
    };
    let mut out: Vec<(Vec<u64>, Vec<u64>)> = Vec::new();
    let mut pivots = Vec::new();
    for c in 0..ncols {
        let Some(bi) = (0..work.len())
            .filter(|&i| work[i].0[c] != 0)
            .min_by_key(|&i| valuation(work[i].0[c], p))
        else {
            continue;
        };
        let mut piv = work.swap_remove(bi);
        let x = piv.0[c];
        let j = valuation(x, p);
        let unit = x / p.pow(j);
        let inv = mod_inverse(unit % modulus, modulus);
        for e in piv.0.iter_mut().chain(piv.1.iter_mut()) {
            *e = mulmod(*e, inv, modulus);
        }
        let pj = p.pow(j);
        for w in work.iter_mut() {
            let y = w.0[c];
            if y != 0 {
                sub(w, &piv, y / pj);
            }
        }
        let ann = p.pow(k - j);
        let extra: (Vec<u64>, Vec<u64>) = (
            piv.0.iter().map(|e| mulmod(*e, ann, modulus)).collect(),
            piv.1.iter().map(|e| mulmod(*e, ann, modulus)).collect(),
        );
        if extra.0.iter().any(|&e| e != 0) {
            work.push(extra);
        }
        work.retain(|w| w.0.iter().any(|&e| e != 0));
        out.push(piv);
        pivots.push(c);
    }
    for i in 0..out.len() {
        let c = pivots[i];
        let pv = out[i].0[c];
        let (head, tail) = out.split_at_mut(i);
        for row in head.iter_mut() {
            let f = row.0[c] / pv;
            if f != 0 {
                sub(row, &tail[0], f);
            }
        }
    }
    let (rows, transform) = out.into_iter().unzip();
    HowellForm { modulus, rows, pivots, transform }
}

impl HowellForm {
    /// Writes `target` as a combination of the Howell rows; returns the
    /// coefficients if `target` lies in the span.
    pub fn reduce(&self, target: &[u64]) -> Option<Vec<u64>> {
        let m = self.modulus;
        let mut t: Vec<u64> = target.iter().map(|x| x % m).collect();
        let mut coeffs = vec![0; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let c = self.pivots[i];
            let pv = row[c];
            if t[c] % pv != 0 {
                return None;
            }
            let f = t[c] / pv;
            coeffs[i] = f;
            for (x, r) in t.iter_mut().zip(row) {
                *x = (*x + m - mulmod(*r, f, m)) % m;
            }
        }
        t.iter().all(|&x| x == 0).then_some(coeffs)
    }

    pub fn contains(&self, target: &[u64]) -> bool {
        self.reduce(target).is_some()
    }

    /// Number of elements in the spanned submodule.
    pub fn order(&self) -> u64 {
        self.rows
            .iter()
            .zip(&self.pivots)
            .map(|(r, &c)| self.modulus / r[c])
            .product()
    }
}

/// Solves `m * x ≡ target (mod modulus)` for a prime-power modulus.
pub fn solve_mod(m: &IntMatrix, target: &[BigInt], modulus: u64) -> Option<Vec<BigInt>> {
    assert!(prime_power(modulus).is_some(), "modulus must be a prime power");
    assert_eq!(m.rows(), target.len());
    let big_mod = BigInt::from(modulus);
    let reduce = |x: &BigInt| x.mod_floor(&big_mod).to_u64().unwrap();
    let gens: Vec<Vec<u64>> = (0..m.cols()).map(|j| (0..m.rows()).map(|i| reduce(&m[(i, j)])).collect()).collect();
    let t: Vec<u64> = target.iter().map(reduce).collect();
    if gens.is_empty() {
        return t.iter().all(|&x| x == 0).then(Vec::new);
    }
    let h = howell_with_transform(&gens, modulus, true);
    let coeffs = h.reduce(&t)?;
    let mut x = vec![0u64; m.cols()];
    for (c, tr) in coeffs.iter().zip(&h.transform) {
        for (xi, ti) in x.iter_mut().zip(tr) {
            *xi = (*xi + mulmod(*c, *ti, modulus)) % modulus;
        }
    }
    Some(x.into_iter().map(BigInt::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn im(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn snf_small_examples() {
        let s = smith_normal_form(&im(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(s.diag, big(&[1, 6]));
        let s = smith_normal_form(&IntMatrix::identity(3));
        assert_eq!(s.diag, big(&[1, 1, 1]));
        let a2 = im(&[vec![-2, 1], vec![1, -2]]);
        let s = smith_normal_form(&a2);
        assert_eq!(s.diag, big(&[1, 3]));
        assert_eq!(s.left.mul(&a2).mul(&s.right), s.diagonal_matrix());
    }

    #[test]
    fn hnf_small_examples() {
        let h = hermite_normal_form(&im(&[vec![2, 0], vec![0, 2], vec![1, 1]]));
        assert_eq!(h, im(&[vec![1, 1], vec![0, 2]]));
        assert_eq!(hermite_normal_form(&IntMatrix::identity(3)), IntMatrix::identity(3));
        let z = hermite_normal_form(&im(&[vec![0, 0]]));
        assert_eq!((z.rows(), z.cols()), (0, 2));
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&im(&[vec![-2]])).unwrap(), BigInt::from(-2));
        assert_eq!(det(&im(&[vec![-2, 1], vec![1, -2]])).unwrap(), BigInt::from(3));
        assert_eq!(det(&im(&[vec![0, 1], vec![1, 0]])).unwrap(), BigInt::from(-1));
        assert!(det(&im(&[vec![1, 2]])).is_err());
    }

    #[test]
    fn inverses() {
        let inv = inverse_rational(&im(&[vec![-2]])).unwrap();
        assert_eq!(inv[(0, 0)], BigRational::new((-1).into(), 2.into()));
        let inv = inverse_rational(&im(&[vec![-2, 1], vec![1, -2]])).unwrap();
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(inv, RatMatrix::from_rows(vec![vec![q(-2, 3), q(-1, 3)], vec![q(-1, 3), q(-2, 3)]]));
        assert!(matches!(inverse_rational(&im(&[vec![1, 2], vec![2, 4]])), Err(Error::Singular)));
    }

    #[test]
    fn solve_mod_examples() {
        let m = im(&[vec![2]]);
        let x = solve_mod(&m, &big(&[0]), 4).unwrap();
        assert!(x[0] == BigInt::from(0) || x[0] == BigInt::from(2));
        assert!(solve_mod(&m, &big(&[1]), 4).is_none());
        assert_eq!(solve_mod(&m, &big(&[2]), 4).unwrap(), big(&[1]));
        let empty = IntMatrix::zeros(3, 0);
        assert_eq!(solve_mod(&empty, &big(&[0, 0, 0]), 5), Some(vec![]));
        assert_eq!(solve_mod(&empty, &big(&[0, 1, 0]), 5), None);
    }

    #[test]
    fn howell_needs_annihilator_rows() {
        // span of (2, 1) over Z/4 contains (0, 2)
        let h = howell_form(&[vec![2, 1]], 4);
        assert_eq!(h.rows, vec![vec![2, 1], vec![0, 2]]);
        assert!(h.contains(&[0, 2]));
        assert!(!h.contains(&[0, 1]));
        assert_eq!(h.order(), 4);
    }
}
