//! ADE root lattices, the rank one lattices I(n), short vectors and per-coset
//! norm tables of dual lattices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::discform::{discriminant_form, FiniteQuadraticModule, FqmElement};
use crate::error::{parse_err, Error, Result};
use crate::exactlin::{det, inverse_rational, IntMatrix, RatMatrix};

/// An indecomposable root system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Symbol {
    A(u32),
    D(u32),
    E(u32),
}

impl Symbol {
    pub fn new(kind: char, index: u32) -> Result<Symbol> {
        let s = match kind {
            'A' if index >= 1 => Symbol::A(index),
            'D' if index >= 4 => Symbol::D(index),
            'E' if (6..=8).contains(&index) => Symbol::E(index),
            _ => return Err(Error::Symbol(format!("{kind}{index}"))),
        };
        Ok(s)
    }

    pub fn rank(self) -> u32 {
        match self {
            Symbol::A(i) | Symbol::D(i) | Symbol::E(i) => i,
        }
    }

    /// Order of the discriminant group.
    pub fn disc_order(self) -> u64 {
        match self {
            Symbol::A(l) => l as u64 + 1,
            Symbol::D(_) => 4,
            Symbol::E(6) => 3,
            Symbol::E(7) => 2,
            Symbol::E(_) => 1,
        }
    }

    /// Smallest N with N * q(x) in 2Z for every x in the discriminant group.
    pub fn level(self) -> u64 {
        match self {
            Symbol::A(l) if l % 2 == 0 => l as u64 + 1,
            Symbol::A(l) => 2 * (l as u64 + 1),
            Symbol::D(m) if m % 4 == 0 => 2,
            Symbol::D(m) if m % 2 == 0 => 4,
            Symbol::D(_) => 8,
            Symbol::E(6) => 3,
            Symbol::E(7) => 4,
            Symbol::E(_) => 1,
        }
    }

    pub fn root_count(self) -> u64 {
        let r = self.rank() as u64;
        match self {
            Symbol::A(_) => r * (r + 1),
            Symbol::D(_) => 2 * r * (r - 1),
            Symbol::E(6) => 72,
            Symbol::E(7) => 126,
            Symbol::E(_) => 240,
        }
    }

    fn key(self) -> (u8, u32) {
        match self {
            Symbol::A(i) => (0, i),
            Symbol::D(i) => (1, i),
            Symbol::E(i) => (2, i),
        }
    }

    /// Edges of the Dynkin diagram, 0-based.  A is a chain, D forks at its
    /// last two nodes, E uses the Bourbaki numbering.
    pub fn dynkin_edges(self) -> Vec<(usize, usize)> {
        let r = self.rank() as usize;
        match self {
            Symbol::A(_) => (1..r).map(|i| (i - 1, i)).collect(),
            Symbol::D(_) => {
                let mut e: Vec<_> = (1..r - 1).map(|i| (i - 1, i)).collect();
                e.push((r - 3, r - 1));
                e
            }
            Symbol::E(_) => {
                let mut e = vec![(0, 2), (1, 3)];
                e.extend((3..r).map(|i| (i - 1, i)));
                e
            }
        }
    }
}

impl Ord for Symbol {
    /// Canonical order lists E8 first and A1 last.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::A(i) => write!(f, "A{i}"),
            Symbol::D(i) => write!(f, "D{i}"),
            Symbol::E(i) => write!(f, "E{i}"),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Symbol> {
        let mut chars = s.chars();
        let kind = chars.next().ok_or_else(|| parse_err(s, "empty symbol"))?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return Err(parse_err(s, "expected a positive index"));
        }
        let index: u32 = digits.parse().map_err(|_| parse_err(s, "index out of range"))?;
        Symbol::new(kind, index)
    }
}

/// A finite formal sum of indecomposable symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct AdeType {
    parts: Vec<(Symbol, u32)>,
}

impl AdeType {
    pub fn from_parts(parts: impl IntoIterator<Item = (Symbol, u32)>) -> AdeType {
        let mut map: BTreeMap<Symbol, u32> = BTreeMap::new();
        for (s, k) in parts {
            if k > 0 {
                *map.entry(s).or_default() += k;
            }
        }
        AdeType { parts: map.into_iter().collect() }
    }

    pub fn single(s: Symbol) -> AdeType {
        AdeType { parts: vec![(s, 1)] }
    }

    pub fn parts(&self) -> &[(Symbol, u32)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn multiplicity(&self, s: Symbol) -> u32 {
        self.parts.iter().find(|(t, _)| *t == s).map_or(0, |p| p.1)
    }

    /// Components in canonical order, repeated by multiplicity.
    pub fn components(&self) -> Vec<Symbol> {
        self.parts.iter().flat_map(|&(s, k)| std::iter::repeat(s).take(k as usize)).collect()
    }

    pub fn rank(&self) -> u32 {
        self.parts.iter().map(|&(s, k)| s.rank() * k).sum()
    }

    pub fn disc_order(&self) -> u64 {
        self.parts.iter().map(|&(s, k)| s.disc_order().pow(k)).product()
    }

    pub fn root_count(&self) -> u64 {
        self.parts.iter().map(|&(s, k)| s.root_count() * k as u64).sum()
    }

    pub fn plus(&self, other: &AdeType) -> AdeType {
        AdeType::from_parts(self.parts.iter().chain(other.parts.iter()).copied())
    }

    /// Removes one copy of `s`, if present.
    pub fn minus(&self, s: Symbol) -> Option<AdeType> {
        let k = self.multiplicity(s);
        (k > 0).then(|| {
            AdeType::from_parts(self.parts.iter().map(|&(t, m)| if t == s { (t, m - 1) } else { (t, m) }))
        })
    }
}

impl fmt::Display for AdeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, k)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if *k > 1 {
                write!(f, "{k}")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<AdeType> for String {
    fn from(r: AdeType) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for AdeType {
    type Error = Error;
    fn try_from(s: String) -> Result<AdeType> {
        s.parse()
    }
}

impl FromStr for AdeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<AdeType> {
        let s = s.trim();
        if s == "0" {
            return Ok(AdeType::default());
        }
        if s.is_empty() {
            return Err(parse_err(s, "empty type"));
        }
        let mut parts = Vec::new();
        for term in s.split('+') {
            let term = term.trim();
            let split = term.find(|c: char| !c.is_ascii_digit()).ok_or_else(|| parse_err(term, "missing symbol"))?;
            let (mult, sym) = term.split_at(split);
            let k = if mult.is_empty() {
                1
            } else {
                if mult.starts_with('0') {
                    return Err(parse_err(term, "multiplicity must be positive"));
                }
                mult.parse::<u32>().map_err(|_| parse_err(term, "multiplicity out of range"))?
            };
            let sym: Symbol = sym.parse()?;
            if sym.rank().checked_mul(k).map_or(true, |r| r > 1_000) {
                return Err(parse_err(term, "rank out of range"));
            }
            parts.push((sym, k));
        }
        let t = AdeType::from_parts(parts);
        if t.rank() > 1_000 {
            return Err(parse_err(s, "rank out of range"));
        }
        Ok(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    NegativeDefinite,
    PositiveRankOne,
    Indefinite,
}

/// A nondegenerate even lattice given by its Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramLattice {
    gram: IntMatrix,
    signature: Signature,
}

impl GramLattice {
    pub fn new(gram: IntMatrix) -> Result<GramLattice> {
        if !gram.is_symmetric() {
            return Err(Error::Invalid("Gram matrix is not symmetric".into()));
        }
        let n = gram.rows();
        if (0..n).any(|i| gram[(i, i)].clone() % 2 != BigInt::zero()) {
            return Err(Error::Invalid("lattice is not even".into()));
        }
        if det(&gram)?.is_zero() {
            return Err(Error::Singular);
        }
        let signature = if is_negative_definite(&gram) {
            Signature::NegativeDefinite
        } else if n == 1 {
            Signature::PositiveRankOne
        } else {
            Signature::Indefinite
        };
        Ok(GramLattice { gram, signature })
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn disc(&self) -> BigInt {
        det(&self.gram).expect("square")
    }
}

fn is_negative_definite(g: &IntMatrix) -> bool {
    // Sylvester's criterion on -g.
    let n = g.rows();
    (1..=n).all(|k| {
        let minor = IntMatrix::from_flat(
            k,
            k,
            (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| -g[(i, j)].clone()).collect(),
        );
        det(&minor).expect("square").is_positive()
    })
}

pub fn gram_of_indecomposable(x: Symbol) -> GramLattice {
    let r = x.rank() as usize;
    let mut g = IntMatrix::zeros(r, r);
    for i in 0..r {
        g[(i, i)] = BigInt::from(-2);
    }
    for (a, b) in x.dynkin_edges() {
        g[(a, b)] = BigInt::one();
        g[(b, a)] = BigInt::one();
    }
    GramLattice { gram: g, signature: Signature::NegativeDefinite }
}

pub fn gram_of_type(r: &AdeType) -> IntMatrix {
    let blocks: Vec<IntMatrix> = r.components().into_iter().map(|s| gram_of_indecomposable(s).gram).collect();
    IntMatrix::block_diag(&blocks)
}

/// Gram matrix of Q(R) + I(n).
pub fn gram_of(r: &AdeType, n: u64) -> Result<GramLattice> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::Invalid(format!("n = {n} must be even and positive")));
    }
    let g = IntMatrix::block_diag(&[gram_of_type(r), IntMatrix::from_rows(&[vec![BigInt::from(n)]])]);
    GramLattice::new(g)
}

pub fn root_count(r: &AdeType) -> u64 {
    r.root_count()
}

/// All integer vectors `x` with `x^T a x <= bound` for a positive definite
/// rational matrix `a`.
fn short_vectors_pd(a: &RatMatrix, bound: &BigRational) -> Vec<Vec<i64>> {
    let n = a.rows();
    if n == 0 {
        return vec![vec![]];
    }
    let mut q = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            let v = &q[(i, j)] / &q[(i, i)];
            q[(j, i)] = q[(i, j)].clone();
            q[(i, j)] = v;
        }
        for k in i + 1..n {
            for l in k..n {
                let v = &q[(k, i)] * &q[(i, l)];
                q[(k, l)] -= v;
            }
        }
    }
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    fp_recurse(&q, n - 1, bound.clone(), &mut x, &mut out);
    out
}

fn fp_recurse(q: &RatMatrix, i: usize, budget: BigRational, x: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let n = q.cols();
    let mut c = BigRational::zero();
    for j in i + 1..n {
        if x[j] != 0 {
            c += &q[(i, j)] * BigRational::from_integer(x[j].into());
        }
    }
    // (x_i + c)^2 * q_ii <= budget
    let r = &budget / &q[(i, i)];
    let s = r.ceil().to_integer().sqrt() + BigInt::one();
    let center = -c.clone();
    let lo = (center.floor().to_integer() - &s).to_i64().expect("coordinate overflow");
    let hi = (center.ceil().to_integer() + &s).to_i64().expect("coordinate overflow");
    for v in lo..=hi {
        let t = BigRational::from_integer(v.into()) + &c;
        let used = &t * &t * &q[(i, i)];
        if used > budget {
            continue;
        }
        x[i] = v;
        if i == 0 {
            out.push(x.clone());
        } else {
            fp_recurse(q, i - 1, &budget - used, x, out);
        }
    }
    x[i] = 0;
}

/// Lattice vectors `v` with `v^2 >= bound` (bound <= 0) in a negative
/// definite lattice.
pub fn enumerate_short_vectors(l: &GramLattice, bound: &BigRational) -> Result<Vec<Vec<i64>>> {
    if l.signature != Signature::NegativeDefinite {
        return Err(Error::NotDefinite);
    }
    if bound.is_positive() {
        return Err(Error::Invalid("bound must be non-positive".into()));
    }
    let neg = l.gram.to_rational().scale(&-BigRational::one());
    Ok(short_vectors_pd(&neg, &-bound.clone()))
}

/// Dual vectors of norm at least -2 grouped by discriminant class.
#[derive(Clone, Debug)]
pub struct CosetVectorTable {
    pub symbol: Symbol,
    pub fqm: FiniteQuadraticModule,
    pub classes: Vec<CosetClass>,
}

#[derive(Clone, Debug, Default)]
pub struct CosetClass {
    /// (norm, count), norms descending from 0.
    pub norms: Vec<(Rational64, u64)>,
    /// Dual vectors in dual-basis coordinates.
    pub vectors: Vec<(Rational64, Vec<i64>)>,
}

impl CosetVectorTable {
    fn build(x: Symbol) -> CosetVectorTable {
        let lat = gram_of_indecomposable(x);
        let fqm = discriminant_form(&lat).expect("root lattices are nondegenerate");
        let d = lat.disc().abs();
        let minv = inverse_rational(lat.gram()).expect("nonsingular");
        // -d * M^{-1} is a positive definite integral Gram of the rescaled dual
        let scaled = minv.scale(&BigRational::from_integer(-d.clone()));
        let bound = BigRational::from_integer(BigInt::from(2) * &d);
        let d64 = d.to_i64().unwrap();
        let mut classes = vec![CosetClass::default(); fqm.order() as usize];
        for u in short_vectors_pd(&scaled, &bound) {
            let mut s = BigRational::zero();
            for i in 0..u.len() {
                for j in 0..u.len() {
                    if u[i] != 0 && u[j] != 0 {
                        s += &scaled[(i, j)] * BigRational::from_integer((u[i] * u[j]).into());
                    }
                }
            }
            let norm = Rational64::new(-s.to_integer().to_i64().unwrap(), d64);
            let big: Vec<BigInt> = u.iter().map(|&v| BigInt::from(v)).collect();
            let class = fqm.class_of_dual(&big);
            classes[fqm.index_of(&class)].vectors.push((norm, u));
        }
        for c in classes.iter_mut() {
            c.vectors.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let mut norms: Vec<(Rational64, u64)> = Vec::new();
            for (nrm, _) in &c.vectors {
                match norms.last_mut() {
                    Some((m, k)) if m == nrm => *k += 1,
                    _ => norms.push((*nrm, 1)),
                }
            }
            c.norms = norms;
        }
        CosetVectorTable { symbol: x, fqm, classes }
    }

    pub fn class(&self, g: &FqmElement) -> &CosetClass {
        &self.classes[self.fqm.index_of(g)]
    }

    /// Largest norm in the coset, i.e. minus the minimal length; `None` when
    /// every vector of the coset has norm below -2.
    pub fn top_norm(&self, index: usize) -> Option<Rational64> {
        self.classes[index].norms.first().map(|p| p.0)
    }
}

pub fn coset_vector_table(x: Symbol) -> Arc<CosetVectorTable> {
    static CACHE: OnceLock<Mutex<HashMap<Symbol, Arc<CosetVectorTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(&x) {
        return t.clone();
    }
    let t = Arc::new(CosetVectorTable::build(x));
    cache.lock().unwrap().entry(x).or_insert(t).clone()
}

/// Splits an element of G_R (residues concatenated over the components in
/// canonical order) into per-component elements.
pub fn split_components(r: &AdeType, g: &FqmElement) -> Vec<(Symbol, FqmElement)> {
    let mut out = Vec::new();
    let mut at = 0;
    for s in r.components() {
        let k = coset_vector_table(s).fqm.divisors().len();
        out.push((s, FqmElement(g.0[at..at + k].to_vec())));
        at += k;
    }
    assert_eq!(at, g.0.len(), "element does not match the type");
    out
}

/// Number of dual vectors of norm -2 whose class lies in `s0`.
pub fn rho_of_glue(r: &AdeType, s0: &[FqmElement]) -> Result<u64> {
    let set: HashSet<&FqmElement> = s0.iter().collect();
    let comps = r.components();
    let g = crate::discform::fqm_of_type(r);
    if !s0.iter().all(|a| s0.iter().all(|b| set.contains(&g.add(a, b)))) || !set.contains(&g.zero()) {
        return Err(Error::Invalid("S0 is not a subgroup".into()));
    }
    let tables: Vec<Arc<CosetVectorTable>> = comps.iter().map(|&s| coset_vector_table(s)).collect();
    let minus_two = Rational64::from_integer(-2);
    let mut total = 0u64;
    for x in s0 {
        let mut poly: BTreeMap<Rational64, u64> = BTreeMap::new();
        poly.insert(Rational64::zero(), 1);
        for (t, (_, part)) in tables.iter().zip(split_components(r, x)) {
            let mut next: BTreeMap<Rational64, u64> = BTreeMap::new();
            for (a, ca) in &poly {
                for (b, cb) in &t.class(&part).norms {
                    let s = a + b;
                    if s >= minus_two {
                        *next.entry(s).or_default() += ca * cb;
                    }
                }
            }
            poly = next;
        }
        total += poly.get(&minus_two).copied().unwrap_or(0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> AdeType {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(t("3A1+E8+2D4").to_string(), "E8+2D4+3A1");
        assert_eq!(t("A1+A1").to_string(), "2A1");
        assert_eq!(t("A18+A3").rank(), 21);
        assert!("D3".parse::<AdeType>().is_err());
        assert!("E9".parse::<AdeType>().is_err());
        assert!("0A1".parse::<AdeType>().is_err());
        assert!("A01".parse::<AdeType>().is_err());
        assert!("".parse::<AdeType>().is_err());
        assert!("A1+".parse::<AdeType>().is_err());
    }

    #[test]
    fn grams() {
        assert_eq!(gram_of_indecomposable(Symbol::A(1)).gram(), &IntMatrix::from_rows(&[vec![-2]]));
        assert_eq!(gram_of_indecomposable(Symbol::A(2)).gram(), &IntMatrix::from_rows(&[vec![-2, 1], vec![1, -2]]));
        assert_eq!(gram_of_indecomposable(Symbol::E(8)).disc(), BigInt::one());
        let g = gram_of(&t("A1"), 2).unwrap();
        assert_eq!(g.gram(), &IntMatrix::from_rows(&[vec![-2, 0], vec![0, 2]]));
        assert!(gram_of(&t("A1"), 3).is_err());
        let g = gram_of(&t("A18+A3"), 76).unwrap();
        assert_eq!(g.rank(), 22);
        assert_eq!(g.disc().abs(), BigInt::from(19 * 4 * 76));
        assert_eq!(g.signature(), Signature::Indefinite);
    }

    #[test]
    fn short_vectors_small() {
        let m2 = BigRational::from_integer((-2).into());
        let a1 = enumerate_short_vectors(&gram_of_indecomposable(Symbol::A(1)), &m2).unwrap();
        assert_eq!(a1.len(), 3);
        let a2 = enumerate_short_vectors(&gram_of_indecomposable(Symbol::A(2)), &m2).unwrap();
        assert_eq!(a2.len(), 7);
        let d4 = enumerate_short_vectors(&gram_of_indecomposable(Symbol::D(4)), &m2).unwrap();
        assert_eq!(d4.len(), 25);
        let i2 = GramLattice::new(IntMatrix::from_rows(&[vec![2]])).unwrap();
        assert_eq!(enumerate_short_vectors(&i2, &m2), Err(Error::NotDefinite));
    }

    #[test]
    fn coset_tables() {
        let a1 = coset_vector_table(Symbol::A(1));
        let half = Rational64::new(-1, 2);
        assert_eq!(a1.classes[0].norms, vec![(Rational64::zero(), 1), (Rational64::from_integer(-2), 2)]);
        assert_eq!(a1.classes[1].norms, vec![(half, 2)]);
        let a2 = coset_vector_table(Symbol::A(2));
        assert_eq!(a2.classes[1].norms, vec![(Rational64::new(-2, 3), 3)]);
        assert_eq!(a2.classes[2].norms, vec![(Rational64::new(-2, 3), 3)]);
        let e8 = coset_vector_table(Symbol::E(8));
        assert_eq!(e8.classes.len(), 1);
        assert_eq!(e8.classes[0].norms[1], (Rational64::from_integer(-2), 240));
    }

    #[test]
    fn rho_examples() {
        let e = |v: &[u64]| FqmElement(v.to_vec());
        assert_eq!(rho_of_glue(&t("A1"), &[e(&[0])]).unwrap(), 2);
        assert_eq!(rho_of_glue(&t("2A1"), &[e(&[0, 0]), e(&[1, 1])]).unwrap(), 4);
        assert_eq!(rho_of_glue(&t("4A1"), &[e(&[0, 0, 0, 0]), e(&[1, 1, 1, 1])]).unwrap(), 24);
        assert!(rho_of_glue(&t("2A1"), &[e(&[0, 0]), e(&[1, 0]), e(&[0, 1])]).is_err());
    }
}
