//! Finite quadratic modules, their subgroups, and even overlattices.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::ade::{coset_vector_table, AdeType, GramLattice};
use crate::error::{Error, Result};
use crate::exactlin::{
    hermite_normal_form, howell_form, inverse_rational, smith_normal_form, IntMatrix, RatMatrix,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FqmElement(pub Vec<u64>);

/// A finite abelian group `⊕ Z/d_i` with a quadratic form into Q/2Z.
#[derive(Clone, Debug)]
pub struct FiniteQuadraticModule {
    divisors: Vec<u64>,
    q: Vec<Rational64>,
    b: Vec<Vec<Rational64>>,
    /// Generator lifts in the coordinates of the source lattice basis.
    lifts: Option<RatMatrix>,
    /// Maps dual-basis coordinates of a dual vector to generator residues.
    residue_map: Option<IntMatrix>,
}

pub fn mod2(r: Rational64) -> Rational64 {
    let two = Rational64::from_integer(2);
    let k = (r / two).floor();
    r - k * two
}

pub fn mod1(r: Rational64) -> Rational64 {
    r - r.floor()
}

fn big_to_small(r: &BigRational) -> Rational64 {
    Rational64::new(r.numer().to_i64().expect("numerator overflow"), r.denom().to_i64().expect("denominator overflow"))
}

/// `k * r` reduced modulo `m` (1 or 2) without intermediate overflow.
fn scale_mod(r: Rational64, k: u128, m: i64) -> Rational64 {
    let den = *r.denom() as i128;
    let num = (*r.numer() as i128).rem_euclid(m as i128 * den);
    let kk = (k % (m as u128 * den as u128)) as i128;
    let v = (num * kk).rem_euclid(m as i128 * den);
    Rational64::new(v as i64, den as i64)
}

impl FiniteQuadraticModule {
    /// Builds a module from explicit data; values are reduced and checked.
    pub fn from_data(divisors: Vec<u64>, q: Vec<Rational64>, b: Vec<Vec<Rational64>>) -> Result<Self> {
        let k = divisors.len();
        if q.len() != k || b.len() != k || b.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("quadratic data does not match the divisors".into()));
        }
        if divisors.iter().any(|&d| d < 2) {
            return Err(Error::Invalid("divisors must exceed 1".into()));
        }
        let g = FiniteQuadraticModule {
            q: q.into_iter().map(mod2).collect(),
            b: b.into_iter().map(|r| r.into_iter().map(mod1).collect()).collect(),
            divisors,
            lifts: None,
            residue_map: None,
        };
        g.check_consistency()?;
        Ok(g)
    }

    pub fn trivial() -> Self {
        FiniteQuadraticModule { divisors: vec![], q: vec![], b: vec![], lifts: None, residue_map: None }
    }

    fn check_consistency(&self) -> Result<()> {
        let k = self.divisors.len();
        for i in 0..k {
            if mod1(self.q[i]) != self.b[i][i] {
                return Err(Error::Invalid("b(g,g) differs from q(g) mod 1".into()));
            }
            if scale_mod(self.q[i], self.divisors[i] as u128 * self.divisors[i] as u128, 2) != Rational64::zero() {
                return Err(Error::Invalid("q is not well defined on a generator".into()));
            }
            for j in 0..k {
                if self.b[i][j] != self.b[j][i] {
                    return Err(Error::Invalid("b is not symmetric".into()));
                }
                if scale_mod(self.b[i][j], self.divisors[i] as u128, 1) != Rational64::zero() {
                    return Err(Error::Invalid("d_i * b(g_i, g_j) is not integral".into()));
                }
            }
        }
        Ok(())
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn q_gens(&self) -> &[Rational64] {
        &self.q
    }

    pub fn b_gens(&self) -> &[Vec<Rational64>] {
        &self.b
    }

    pub fn lifts(&self) -> Option<&RatMatrix> {
        self.lifts.as_ref()
    }

    pub fn order(&self) -> u64 {
        self.divisors.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.divisors.iter().fold(1, |a, &d| a.lcm(&d))
    }

    pub fn rank(&self) -> usize {
        self.divisors.len()
    }

    pub fn zero(&self) -> FqmElement {
        FqmElement(vec![0; self.divisors.len()])
    }

    pub fn generator(&self, i: usize) -> FqmElement {
        let mut e = self.zero();
        e.0[i] = 1;
        e
    }

    pub fn reduce(&self, v: &[i64]) -> FqmElement {
        FqmElement(v.iter().zip(&self.divisors).map(|(&x, &d)| x.rem_euclid(d as i64) as u64).collect())
    }

    pub fn is_valid(&self, x: &FqmElement) -> bool {
        x.0.len() == self.divisors.len() && x.0.iter().zip(&self.divisors).all(|(a, d)| a < d)
    }

    pub fn add(&self, x: &FqmElement, y: &FqmElement) -> FqmElement {
        FqmElement(x.0.iter().zip(&y.0).zip(&self.divisors).map(|((a, b), d)| (a + b) % d).collect())
    }

    pub fn neg(&self, x: &FqmElement) -> FqmElement {
        FqmElement(x.0.iter().zip(&self.divisors).map(|(a, d)| (d - a) % d).collect())
    }

    pub fn scale(&self, x: &FqmElement, k: u64) -> FqmElement {
        FqmElement(
            x.0.iter().zip(&self.divisors).map(|(&a, &d)| ((a as u128 * k as u128) % d as u128) as u64).collect(),
        )
    }

    pub fn element_order(&self, x: &FqmElement) -> u64 {
        x.0.iter().zip(&self.divisors).fold(1, |acc, (&a, &d)| acc.lcm(&(d / a.gcd(&d))))
    }

    pub fn is_zero(&self, x: &FqmElement) -> bool {
        x.0.iter().all(|&a| a == 0)
    }

    pub fn index_of(&self, x: &FqmElement) -> usize {
        let mut idx = 0usize;
        for (a, d) in x.0.iter().zip(&self.divisors).rev() {
            idx = idx * *d as usize + *a as usize;
        }
        idx
    }

    pub fn element_at(&self, mut idx: usize) -> FqmElement {
        FqmElement(
            self.divisors
                .iter()
                .map(|&d| {
                    let r = idx % d as usize;
                    idx /= d as usize;
                    r as u64
                })
                .collect(),
        )
    }

    pub fn elements(&self) -> impl Iterator<Item = FqmElement> + '_ {
        (0..self.order() as usize).map(move |i| self.element_at(i))
    }

    pub fn q_value(&self, x: &FqmElement) -> Rational64 {
        let mut s = Rational64::zero();
        for i in 0..x.0.len() {
            if x.0[i] == 0 {
                continue;
            }
            s += scale_mod(self.q[i], x.0[i] as u128 * x.0[i] as u128, 2);
            for j in i + 1..x.0.len() {
                if x.0[j] != 0 {
                    s += scale_mod(self.b[i][j], 2 * x.0[i] as u128 * x.0[j] as u128, 2);
                }
            }
        }
        mod2(s)
    }

    pub fn b_value(&self, x: &FqmElement, y: &FqmElement) -> Rational64 {
        let mut s = Rational64::zero();
        for i in 0..x.0.len() {
            if x.0[i] == 0 {
                continue;
            }
            for j in 0..y.0.len() {
                if y.0[j] != 0 {
                    s += scale_mod(self.b[i][j], x.0[i] as u128 * y.0[j] as u128, 1);
                }
            }
        }
        mod1(s)
    }

    /// Residue class of a dual vector given in dual-basis coordinates.
    pub fn class_of_dual(&self, u: &[BigInt]) -> FqmElement {
        let map = self.residue_map.as_ref().expect("module has no source lattice");
        let r = map.mul_vec(u);
        FqmElement(
            r.iter().zip(&self.divisors).map(|(x, &d)| x.mod_floor(&BigInt::from(d)).to_u64().unwrap()).collect(),
        )
    }

    /// Rational lattice coordinates of a lift of `x`.
    pub fn lift(&self, x: &FqmElement) -> Vec<BigRational> {
        let l = self.lifts.as_ref().expect("module has no source lattice");
        let mut v = vec![BigRational::zero(); l.cols()];
        for (i, &a) in x.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let k = BigRational::from_integer(a.into());
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += &l[(i, j)] * &k;
            }
        }
        v
    }

    /// Lattice automorphism `p` (acting on lattice coordinates) induced on
    /// the module, as images of the generators.
    pub fn induced_action(&self, p: &IntMatrix, gram: &IntMatrix) -> Vec<FqmElement> {
        let l = self.lifts.as_ref().expect("module has no source lattice");
        (0..self.rank())
            .map(|i| {
                let c: Vec<BigRational> = (0..l.cols())
                    .map(|j| {
                        (0..l.cols())
                            .map(|k| BigRational::from_integer(p[(j, k)].clone()) * &l[(i, k)])
                            .sum::<BigRational>()
                    })
                    .collect();
                let u: Vec<BigInt> = (0..gram.rows())
                    .map(|j| {
                        let s: BigRational =
                            (0..gram.cols()).map(|k| BigRational::from_integer(gram[(j, k)].clone()) * &c[k]).sum();
                        assert!(s.is_integer());
                        s.to_integer()
                    })
                    .collect();
                self.class_of_dual(&u)
            })
            .collect()
    }
}

pub fn discriminant_form(l: &GramLattice) -> Result<FiniteQuadraticModule> {
    let m = l.gram();
    let snf = smith_normal_form(m);
    if snf.diag.iter().any(|d| d.is_zero()) || snf.diag.len() < m.rows() {
        return Err(Error::Singular);
    }
    let uinv = inverse_rational(&snf.left)?;
    let minv = inverse_rational(m)?;
    let n = m.rows();
    let keep: Vec<usize> = (0..n).filter(|&i| !snf.diag[i].is_one()).collect();
    let divisors: Vec<u64> = keep.iter().map(|&i| snf.diag[i].to_u64().expect("divisor overflow")).collect();
    let mut lift_rows = Vec::new();
    let mut dual_rows = Vec::new();
    for &i in &keep {
        let u: Vec<BigRational> = (0..n).map(|r| uinv[(r, i)].clone()).collect();
        let c: Vec<BigRational> =
            (0..n).map(|r| (0..n).map(|s| &minv[(r, s)] * &u[s]).sum::<BigRational>()).collect();
        dual_rows.push(u);
        lift_rows.push(c);
    }
    let k = keep.len();
    let mut q = Vec::with_capacity(k);
    let mut b = vec![vec![Rational64::zero(); k]; k];
    for i in 0..k {
        for j in 0..k {
            let v: BigRational = (0..n).map(|r| &dual_rows[i][r] * &lift_rows[j][r]).sum();
            b[i][j] = mod1(big_to_small(&(&v - v.floor())));
            if i == j {
                let two = BigRational::from_integer(2.into());
                let w = &v - (&v / &two).floor() * &two;
                q.push(big_to_small(&w));
            }
        }
    }
    let residue_map = IntMatrix::from_rows(
        &keep.iter().map(|&i| snf.left.row(i).to_vec()).collect::<Vec<Vec<BigInt>>>(),
    );
    let residue_map = if k == 0 { IntMatrix::zeros(0, n) } else { residue_map };
    let mut g = FiniteQuadraticModule::from_data(divisors, q, b)?;
    g.lifts = Some(if k == 0 { RatMatrix::zeros(0, n) } else { RatMatrix::from_rows(lift_rows) });
    g.residue_map = Some(residue_map);
    Ok(g)
}

fn block_diag_rat(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let mut out = RatMatrix::zeros(a.rows() + b.rows(), a.cols() + b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out[(i, j)] = a[(i, j)].clone();
        }
    }
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            out[(a.rows() + i, a.cols() + j)] = b[(i, j)].clone();
        }
    }
    out
}

pub fn direct_sum(a: &FiniteQuadraticModule, b: &FiniteQuadraticModule) -> FiniteQuadraticModule {
    let (ka, kb) = (a.rank(), b.rank());
    let mut bb = vec![vec![Rational64::zero(); ka + kb]; ka + kb];
    for i in 0..ka {
        for j in 0..ka {
            bb[i][j] = a.b[i][j];
        }
    }
    for i in 0..kb {
        for j in 0..kb {
            bb[ka + i][ka + j] = b.b[i][j];
        }
    }
    let lifts = match (&a.lifts, &b.lifts) {
        (Some(x), Some(y)) => Some(block_diag_rat(x, y)),
        _ => None,
    };
    let residue_map = match (&a.residue_map, &b.residue_map) {
        (Some(x), Some(y)) => Some(IntMatrix::block_diag(&[x.clone(), y.clone()])),
        _ => None,
    };
    FiniteQuadraticModule {
        divisors: a.divisors.iter().chain(&b.divisors).copied().collect(),
        q: a.q.iter().chain(&b.q).copied().collect(),
        b: bb,
        lifts,
        residue_map,
    }
}

/// Discriminant form of I(n), generated by the class of e_n / n.
pub fn fqm_of_i(n: u64) -> FiniteQuadraticModule {
    let l = GramLattice::new(IntMatrix::from_rows(&[vec![BigInt::from(n)]])).expect("n > 0 even");
    discriminant_form(&l).expect("nondegenerate")
}

/// Discriminant form of Q(R) as the direct sum of its components, in the
/// coordinates of `gram_of_type`.
pub fn fqm_of_type(r: &AdeType) -> FiniteQuadraticModule {
    r.components().into_iter().fold(
        FiniteQuadraticModule {
            lifts: Some(RatMatrix::zeros(0, 0)),
            residue_map: Some(IntMatrix::zeros(0, 0)),
            ..FiniteQuadraticModule::trivial()
        },
        |acc, s| direct_sum(&acc, &coset_vector_table(s).fqm),
    )
}

/// Discriminant form of Q(R) + I(n); the last generator is ε_n.
pub fn fqm_of(r: &AdeType, n: u64) -> FiniteQuadraticModule {
    direct_sum(&fqm_of_type(r), &fqm_of_i(n))
}

/// The ℓ-primary part, with the images of its generators in `g`.
pub fn prime_part(g: &FiniteQuadraticModule, l: u64) -> (FiniteQuadraticModule, Vec<FqmElement>) {
    let mut divisors = Vec::new();
    let mut cof = Vec::new();
    let mut embed = Vec::new();
    for (i, &d) in g.divisors.iter().enumerate() {
        let mut pe = 1;
        while d % (pe * l) == 0 {
            pe *= l;
        }
        if pe > 1 {
            divisors.push(pe);
            cof.push((i, d / pe));
            let mut e = g.zero();
            e.0[i] = d / pe;
            embed.push(e);
        }
    }
    let k = divisors.len();
    let q = (0..k).map(|a| g.q_value(&embed[a])).collect();
    let b = (0..k).map(|a| (0..k).map(|c| g.b_value(&embed[a], &embed[c])).collect()).collect();
    let lifts = g.lifts.as_ref().map(|lm| {
        RatMatrix::from_rows(
            cof.iter()
                .map(|&(i, c)| {
                    let k = BigRational::from_integer(c.into());
                    (0..lm.cols()).map(|j| &lm[(i, j)] * &k).collect()
                })
                .collect(),
        )
    });
    let out = FiniteQuadraticModule { divisors, q, b, lifts, residue_map: None };
    (out, embed)
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// All elements of the subgroup generated by `gens`, sorted.
pub fn span(g: &FiniteQuadraticModule, gens: &[FqmElement]) -> Vec<FqmElement> {
    let mut seen: HashSet<FqmElement> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(g.zero());
    queue.push_back(g.zero());
    while let Some(x) = queue.pop_front() {
        for s in gens {
            let y = g.add(&x, s);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    let mut v: Vec<FqmElement> = seen.into_iter().collect();
    v.sort();
    v
}

/// Generators of `S^⊥` for `S` generated by `gens`.
pub fn orthogonal_complement(g: &FiniteQuadraticModule, gens: &[FqmElement]) -> Vec<FqmElement> {
    let k = g.rank();
    if k == 0 {
        return vec![];
    }
    let e = g.exponent();
    // x ⊥ s  <=>  Σ_i x_i * (e * b(g_i, s)) ≡ 0 mod e
    let mut a = IntMatrix::zeros(gens.len().max(1), k);
    for (r, s) in gens.iter().enumerate() {
        for i in 0..k {
            let v = g.b_value(&g.generator(i), s) * Rational64::from_integer(e as i64);
            a[(r, i)] = BigInt::from(v.to_integer());
        }
    }
    let snf = smith_normal_form(&a);
    let big_e = BigInt::from(e);
    let mut out = Vec::new();
    for j in 0..k {
        let d = snf.diag.get(j).cloned().unwrap_or_else(BigInt::zero);
        let step = if d.is_zero() { BigInt::one() } else { &big_e / d.gcd(&big_e) };
        let col: Vec<i64> = (0..k)
            .map(|i| (&snf.right[(i, j)] * &step).mod_floor(&big_e).to_i64().unwrap())
            .collect();
        let x = g.reduce(&col);
        if !g.is_zero(&x) {
            out.push(x);
        }
    }
    out
}

/// Per-prime Howell form of a subgroup: for each prime ℓ | |G|, the rows of
/// the Howell form of its ℓ-part embedded in (Z/ℓ^E)^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalForm(pub Vec<(u64, Vec<Vec<u64>>)>);

pub fn canonical_form(g: &FiniteQuadraticModule, gens: &[FqmElement]) -> CanonicalForm {
    let mut out = Vec::new();
    for l in prime_factors(g.order()) {
        let exps: Vec<u32> = g.divisors.iter().map(|&d| valuation(d, l)).collect();
        let emax = *exps.iter().max().unwrap();
        let modulus = l.pow(emax);
        let rows: Vec<Vec<u64>> = gens
            .iter()
            .map(|x| {
                x.0.iter()
                    .zip(&exps)
                    .map(|(&a, &e)| (a % l.pow(e)) * l.pow(emax - e) % modulus)
                    .collect()
            })
            .collect();
        let h = if rows.is_empty() { vec![] } else { howell_form(&rows, modulus).rows };
        out.push((l, h));
    }
    CanonicalForm(out)
}

/// Inverse of the per-prime embedding used by `canonical_form`.
pub fn generators_from_canonical(g: &FiniteQuadraticModule, c: &CanonicalForm) -> Vec<FqmElement> {
    let mut out = Vec::new();
    for (l, rows) in &c.0 {
        let exps: Vec<u32> = g.divisors.iter().map(|&d| valuation(d, *l)).collect();
        let emax = *exps.iter().max().unwrap();
        for r in rows {
            let mut x = g.zero();
            for (i, (&v, &e)) in r.iter().zip(&exps).enumerate() {
                if e == 0 {
                    continue;
                }
                let local = v / l.pow(emax - e);
                let pe = l.pow(e);
                let d = g.divisors[i];
                let cof = d / pe;
                // x_i ≡ local mod ℓ^e and ≡ 0 mod d/ℓ^e
                let inv = (cof as i128).extended_gcd(&(pe as i128)).x.rem_euclid(pe as i128) as u64;
                x.0[i] = (cof as u128 * ((local as u128 * inv as u128) % pe as u128) % d as u128) as u64;
            }
            out.push(x);
        }
    }
    out
}

/// An isotropic subgroup in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsotropicSubgroup {
    pub form: CanonicalForm,
    pub gens: Vec<FqmElement>,
    pub order: u64,
}

impl IsotropicSubgroup {
    pub fn new(g: &FiniteQuadraticModule, gens: &[FqmElement]) -> Result<IsotropicSubgroup> {
        for (i, x) in gens.iter().enumerate() {
            if !g.q_value(x).is_zero() {
                return Err(Error::Invalid("generator is not isotropic".into()));
            }
            if gens[..i].iter().any(|y| !g.b_value(x, y).is_zero()) {
                return Err(Error::Invalid("generators are not orthogonal".into()));
            }
        }
        let form = canonical_form(g, gens);
        let gens = generators_from_canonical(g, &form);
        let order = form
            .0
            .iter()
            .map(|(l, rows)| {
                let exps: Vec<u32> = g.divisors.iter().map(|&d| valuation(d, *l)).collect();
                let modulus = l.pow(*exps.iter().max().unwrap());
                if rows.is_empty() {
                    1
                } else {
                    howell_form(rows, modulus).order()
                }
            })
            .product();
        Ok(IsotropicSubgroup { form, gens, order })
    }

    pub fn elements(&self, g: &FiniteQuadraticModule) -> Vec<FqmElement> {
        span(g, &self.gens)
    }
}

/// Invariant factors of a finite abelian group given as a quotient
/// `⊕ Z/d_i` presentation, dropping trivial factors.
pub fn invariant_factors(divisors: &[BigInt]) -> Vec<BigInt> {
    let m = IntMatrix::diagonal(divisors);
    smith_normal_form(&m).diag.into_iter().filter(|d| !d.is_one()).collect()
}

/// Invariant factors of S^⊥/S.
pub fn quotient_invariants(g: &FiniteQuadraticModule, s_gens: &[FqmElement]) -> Vec<BigInt> {
    let perp = orthogonal_complement(g, s_gens);
    quotient_of_subgroups(g, &perp, s_gens)
}

/// Invariant factors of A/B for subgroups B ⊆ A of `g`.
pub fn quotient_of_subgroups(g: &FiniteQuadraticModule, a: &[FqmElement], b: &[FqmElement]) -> Vec<BigInt> {
    let ng = a.len();
    if ng == 0 {
        return vec![];
    }
    // relations among the a_j modulo B: left kernel of [a; b; diag(d)]
    // projected onto the a-coordinates
    let k = g.rank();
    let mut rows: Vec<Vec<BigInt>> = a.iter().chain(b).map(|x| x.0.iter().map(|&v| BigInt::from(v)).collect()).collect();
    for i in 0..k {
        let mut c = vec![BigInt::zero(); k];
        c[i] = BigInt::from(g.divisors[i]);
        rows.push(c);
    }
    let rel: Vec<Vec<BigInt>> =
        integer_left_kernel(&IntMatrix::from_rows(&rows)).into_iter().map(|r| r[..ng].to_vec()).collect();
    let snf = smith_normal_form(&IntMatrix::from_rows(&rel));
    debug_assert!(snf.diag.len() == ng && snf.diag.iter().all(|d| !d.is_zero()));
    snf.diag.into_iter().filter(|d| !d.is_one()).collect()
}

/// Basis of { c : c * m = 0 } over Z (rows).
pub fn integer_left_kernel(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    // HNF of [m | I]: rows whose m-part vanishes span the kernel.
    let (r, c) = (m.rows(), m.cols());
    let mut aug = IntMatrix::zeros(r, c + r);
    for i in 0..r {
        for j in 0..c {
            aug[(i, j)] = m[(i, j)].clone();
        }
        aug[(i, c + i)] = BigInt::one();
    }
    let h = hermite_normal_form(&aug);
    (0..h.rows())
        .filter(|&i| (0..c).all(|j| h[(i, j)].is_zero()))
        .map(|i| h.row(i)[c..].to_vec())
        .collect()
}

/// An even overlattice given by a basis in the coordinates of the original
/// lattice.
#[derive(Clone, Debug)]
pub struct Overlattice {
    pub basis: RatMatrix,
    pub gram: IntMatrix,
}

impl Overlattice {
    pub fn lattice(&self) -> Result<GramLattice> {
        GramLattice::new(self.gram.clone())
    }
}

fn rat_gram(basis: &RatMatrix, gram: &IntMatrix) -> RatMatrix {
    basis.mul(&gram.to_rational()).mul(&basis.transpose())
}

pub fn overlattice(q: &GramLattice, g: &FiniteQuadraticModule, s_gens: &[FqmElement]) -> Result<Overlattice> {
    let n = q.rank();
    let e = BigInt::from(g.exponent());
    let mut rows: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { e.clone() } else { BigInt::zero() }).collect())
        .collect();
    for s in s_gens {
        let v = g.lift(s);
        rows.push(
            v.iter()
                .map(|x| {
                    let y = x * BigRational::from_integer(e.clone());
                    assert!(y.is_integer(), "lift denominators exceed the exponent");
                    y.to_integer()
                })
                .collect(),
        );
    }
    let h = hermite_normal_form(&IntMatrix::from_rows(&rows));
    let basis = h.to_rational().scale(&BigRational::new(BigInt::one(), e));
    let gr = rat_gram(&basis, q.gram());
    if !gr.is_integral() {
        return Err(Error::Invalid("subgroup is not isotropic: Gram not integral".into()));
    }
    let gram = gr.scaled_to_int(&BigInt::one());
    if (0..n).any(|i| gram[(i, i)].is_odd()) {
        return Err(Error::Invalid("subgroup is not isotropic: lattice not even".into()));
    }
    Ok(Overlattice { basis, gram })
}

pub fn is_p_elementary(gram: &IntMatrix, p: u64) -> Result<bool> {
    let inv = inverse_rational(gram)?;
    Ok(inv.scale(&BigRational::from_integer(p.into())).is_integral())
}

pub fn is_type_i(gram: &IntMatrix) -> Result<bool> {
    if !is_p_elementary(gram, 2)? {
        return Err(Error::Invalid("type I test needs a 2-elementary lattice".into()));
    }
    let inv = inverse_rational(gram)?;
    Ok((0..gram.rows()).all(|i| inv[(i, i)].is_integer()))
}

/// Invariants of a finitely generated abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbelianInvariants {
    pub torsion: Vec<u64>,
    pub free_rank: usize,
}

/// Structure of `L / M` where the rows of `l` are a basis of L and the rows
/// of `m` span M ⊆ L (both in the same ambient coordinates).
pub fn quotient_structure(l: &RatMatrix, m: &RatMatrix) -> Result<AbelianInvariants> {
    let r = l.rows();
    if r == 0 {
        return Ok(AbelianInvariants { torsion: vec![], free_rank: 0 });
    }
    // coordinates c = m l^T (l l^T)^{-1}
    let llt = l.mul(&l.transpose());
    let den = llt.denominator();
    let llt_int = llt.scaled_to_int(&den);
    let inv = inverse_rational(&llt_int)?.scale(&BigRational::from_integer(den));
    let coords = m.mul(&l.transpose()).mul(&inv);
    if !coords.mul(l).eq(m) || !coords.is_integral() {
        return Err(Error::Invalid("sublattice is not contained in the lattice".into()));
    }
    let ci = coords.scaled_to_int(&BigInt::one());
    let snf = smith_normal_form(&ci);
    let rank = snf.diag.iter().filter(|d| !d.is_zero()).count();
    let torsion = snf
        .diag
        .iter()
        .filter(|d| !d.is_zero() && !d.is_one())
        .map(|d| d.to_u64().expect("torsion overflow"))
        .collect();
    Ok(AbelianInvariants { torsion, free_rank: r - rank })
}

/// Subgroups of `g` as sorted element sets, by closing all generator sets.
/// Exponential; used by tests on tiny modules.
pub fn all_subgroups(g: &FiniteQuadraticModule) -> Vec<Vec<FqmElement>> {
    let mut found: BTreeSet<Vec<FqmElement>> = BTreeSet::new();
    let mut frontier = vec![vec![g.zero()]];
    found.insert(vec![g.zero()]);
    while let Some(s) = frontier.pop() {
        for x in g.elements() {
            if s.binary_search(&x).is_ok() {
                continue;
            }
            let mut gens: Vec<FqmElement> = s.clone();
            gens.push(x);
            let t = span(g, &gens);
            if found.insert(t.clone()) {
                frontier.push(t);
            }
        }
    }
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ade::{gram_of_indecomposable, Symbol};

    fn r(a: i64, b: i64) -> Rational64 {
        Rational64::new(a, b)
    }

    #[test]
    fn small_forms() {
        let i6 = fqm_of_i(6);
        assert_eq!(i6.divisors(), &[6]);
        assert_eq!(i6.q_gens()[0], r(1, 6));
        let a1 = discriminant_form(&gram_of_indecomposable(Symbol::A(1))).unwrap();
        assert_eq!(a1.q_gens()[0], r(3, 2));
        let e8 = discriminant_form(&gram_of_indecomposable(Symbol::E(8))).unwrap();
        assert_eq!(e8.order(), 1);
        let s = direct_sum(&a1, &fqm_of_i(2));
        assert_eq!(s.q_gens(), &[r(3, 2), r(1, 2)]);
        assert_eq!(s.q_value(&FqmElement(vec![1, 1])), r(0, 1));
    }

    #[test]
    fn prime_parts() {
        let a5 = discriminant_form(&gram_of_indecomposable(Symbol::A(5))).unwrap();
        let (p3, emb) = prime_part(&a5, 3);
        assert_eq!(p3.divisors(), &[3]);
        assert_eq!(p3.q_gens()[0], r(2, 3));
        assert_eq!(a5.element_order(&emb[0]), 3);
        let (p3, _) = prime_part(&fqm_of_i(6), 3);
        assert_eq!(p3.q_gens()[0], r(2, 3));
        let (p5, _) = prime_part(&a5, 5);
        assert_eq!(p5.order(), 1);
    }

    #[test]
    fn complement_orders() {
        let g = fqm_of(&"4A1".parse().unwrap(), 2);
        let s = vec![FqmElement(vec![1, 1, 1, 1, 0])];
        let perp = orthogonal_complement(&g, &s);
        assert_eq!(span(&g, &perp).len(), 16);
        assert_eq!(quotient_invariants(&g, &s), vec![BigInt::from(2); 3]);
    }

    #[test]
    fn d4_overlattice() {
        let t: AdeType = "4A1".parse().unwrap();
        let q = GramLattice::new(crate::ade::gram_of_type(&t)).unwrap();
        let g = fqm_of_type(&t);
        let o = overlattice(&q, &g, &[FqmElement(vec![1, 1, 1, 1])]).unwrap();
        let lat = o.lattice().unwrap();
        assert_eq!(lat.disc(), BigInt::from(4));
        let m2 = BigRational::from_integer((-2).into());
        assert_eq!(crate::ade::enumerate_short_vectors(&lat, &m2).unwrap().len(), 25);
        assert!(overlattice(&q, &g, &[FqmElement(vec![1, 1, 0, 0])]).is_err());
    }

    #[test]
    fn type_one_examples() {
        let a1 = IntMatrix::from_rows(&[vec![-2]]);
        assert!(is_p_elementary(&a1, 2).unwrap());
        assert!(!is_type_i(&a1).unwrap());
        let u = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        assert!(is_type_i(&u).unwrap());
        let e8 = gram_of_indecomposable(Symbol::E(8));
        assert!(is_p_elementary(e8.gram(), 7).unwrap());
        let a2 = IntMatrix::from_rows(&[vec![-2, 1], vec![1, -2]]);
        assert!(is_type_i(&a2).is_err());
    }

    #[test]
    fn quotients() {
        let id = RatMatrix::identity(2);
        assert_eq!(quotient_structure(&id, &id).unwrap(), AbelianInvariants { torsion: vec![], free_rank: 0 });
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]).to_rational();
        assert_eq!(quotient_structure(&id, &m).unwrap(), AbelianInvariants { torsion: vec![6], free_rank: 0 });
        let half = IntMatrix::from_rows(&[vec![1, 0]]).to_rational().scale(&BigRational::new(1.into(), 2.into()));
        assert!(quotient_structure(&id, &half).is_err());
        let line = IntMatrix::from_rows(&[vec![2, 0]]).to_rational();
        assert_eq!(quotient_structure(&id, &line).unwrap(), AbelianInvariants { torsion: vec![2], free_rank: 1 });
    }
}
