//! Automorphisms of discriminant forms induced by lattice automorphisms, and
//! a reference enumerator of isotropic subgroups up to a symmetry group.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::ade::{coset_vector_table, gram_of_indecomposable, AdeType, Symbol};
use crate::discform::{
    fqm_of_type, orthogonal_complement, span, FiniteQuadraticModule, FqmElement, IsotropicSubgroup,
};
use crate::error::{Error, Result};
use crate::exactlin::IntMatrix;

/// An automorphism of a finite quadratic module, stored as the images of
/// the generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FqmAutomorphism {
    images: Vec<FqmElement>,
}

impl FqmAutomorphism {
    /// Checks well-definedness and preservation of q and b on generators.
    /// The bilinear form of a discriminant form is nondegenerate, so this
    /// also forces bijectivity.
    pub fn new(g: &FiniteQuadraticModule, images: Vec<FqmElement>) -> Result<FqmAutomorphism> {
        if images.len() != g.rank() || !images.iter().all(|x| g.is_valid(x)) {
            return Err(Error::Shape("generator images do not match the module".into()));
        }
        for (i, x) in images.iter().enumerate() {
            if !g.is_zero(&g.scale(x, g.divisors()[i])) {
                return Err(Error::Invalid("image order does not divide the generator order".into()));
            }
            if g.q_value(x) != g.q_gens()[i] {
                return Err(Error::Invalid("map does not preserve q".into()));
            }
            for (j, y) in images.iter().enumerate().take(i) {
                if g.b_value(x, y) != g.b_gens()[i][j] {
                    return Err(Error::Invalid("map does not preserve b".into()));
                }
            }
        }
        Ok(FqmAutomorphism { images })
    }

    pub fn identity(g: &FiniteQuadraticModule) -> FqmAutomorphism {
        FqmAutomorphism { images: (0..g.rank()).map(|i| g.generator(i)).collect() }
    }

    pub fn images(&self) -> &[FqmElement] {
        &self.images
    }

    pub fn apply(&self, g: &FiniteQuadraticModule, x: &FqmElement) -> FqmElement {
        let mut out = g.zero();
        for (a, img) in x.0.iter().zip(&self.images) {
            if *a != 0 {
                out = g.add(&out, &g.scale(img, *a));
            }
        }
        out
    }

    pub fn compose(&self, g: &FiniteQuadraticModule, inner: &FqmAutomorphism) -> FqmAutomorphism {
        FqmAutomorphism { images: inner.images.iter().map(|x| self.apply(g, x)).collect() }
    }

    pub fn is_identity(&self, g: &FiniteQuadraticModule) -> bool {
        self.images.iter().enumerate().all(|(i, x)| *x == g.generator(i))
    }
}

/// Node permutations of the Dynkin diagram of `x` generating its symmetry
/// group.
pub fn dynkin_automorphisms(x: Symbol) -> Vec<Vec<usize>> {
    let r = x.rank() as usize;
    let id: Vec<usize> = (0..r).collect();
    let swap = |a: usize, b: usize| {
        let mut p = id.clone();
        p.swap(a, b);
        p
    };
    match x {
        Symbol::A(l) if l >= 2 => vec![(0..r).rev().collect()],
        Symbol::D(4) => vec![swap(2, 3), swap(0, 2)],
        Symbol::D(_) => vec![swap(r - 2, r - 1)],
        Symbol::E(6) => {
            let mut p = swap(0, 5);
            p.swap(2, 4);
            vec![p]
        }
        _ => vec![],
    }
}

fn permutation_matrix(p: &[usize]) -> IntMatrix {
    let n = p.len();
    let mut m = IntMatrix::zeros(n, n);
    for (i, &j) in p.iter().enumerate() {
        m[(j, i)] = BigInt::from(1);
    }
    m
}

/// Generators of the image of Aut(Q(X)) in the discriminant form of `x`,
/// induced from -1 and the diagram automorphisms.  Identity maps are
/// dropped.
pub fn symbol_generators(x: Symbol) -> Vec<FqmAutomorphism> {
    let table = coset_vector_table(x);
    let g = &table.fqm;
    let lat = gram_of_indecomposable(x);
    let r = x.rank() as usize;
    let mut mats = vec![{
        let mut m = IntMatrix::zeros(r, r);
        for i in 0..r {
            m[(i, i)] = BigInt::from(-1);
        }
        m
    }];
    mats.extend(dynkin_automorphisms(x).iter().map(|p| permutation_matrix(p)));
    let mut out: Vec<FqmAutomorphism> = Vec::new();
    for m in mats {
        debug_assert!(m.transpose().mul(lat.gram()).mul(&m) == *lat.gram());
        let images = g.induced_action(&m, lat.gram());
        if let Ok(a) = FqmAutomorphism::new(g, images) {
            if !a.is_identity(g) && !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out
}

/// The group generated by `symbol_generators(x)` as permutations of the
/// element indices of the discriminant group of `x`.
pub fn symbol_group(x: Symbol) -> Vec<Vec<usize>> {
    let table = coset_vector_table(x);
    let g = &table.fqm;
    let gens: Vec<Vec<usize>> = symbol_generators(x)
        .iter()
        .map(|a| g.elements().map(|e| g.index_of(&a.apply(g, &e))).collect())
        .collect();
    close_permutations(g.order() as usize, &gens, usize::MAX).0
}

/// Closure of a set of permutations of `0..n` under composition.  Returns
/// the elements found and whether the closure completed within `budget`.
pub fn close_permutations(n: usize, gens: &[Vec<usize>], budget: usize) -> (Vec<Vec<usize>>, bool) {
    let id: Vec<usize> = (0..n).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = vec![id.clone()];
    seen.insert(id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for s in gens {
            let q: Vec<usize> = p.iter().map(|&i| s[i]).collect();
            if seen.insert(q.clone()) {
                if out.len() >= budget {
                    return (out, false);
                }
                out.push(q.clone());
                queue.push_back(q);
            }
        }
    }
    (out, true)
}

/// Embeds a per-component automorphism into the module of a whole type by
/// acting on generator block `offset..offset+k`.
fn embed_block(g: &FiniteQuadraticModule, offset: usize, local: &FiniteQuadraticModule, a: &FqmAutomorphism) -> Vec<FqmElement> {
    let mut images: Vec<FqmElement> = (0..g.rank()).map(|i| g.generator(i)).collect();
    for i in 0..local.rank() {
        let mut x = g.zero();
        x.0[offset..offset + local.rank()].copy_from_slice(&a.images()[i].0);
        images[offset + i] = x;
    }
    images
}

fn block_swap(g: &FiniteQuadraticModule, a: usize, b: usize, k: usize) -> Vec<FqmElement> {
    let mut images: Vec<FqmElement> = (0..g.rank()).map(|i| g.generator(i)).collect();
    for i in 0..k {
        images.swap(a + i, b + i);
    }
    images
}

/// Generators of Γ acting on `g = fqm_of_type(r) ⊕ extra`, where the
/// components of `r` occupy the leading generators in canonical order.
fn type_generators(r: &AdeType, g: &FiniteQuadraticModule) -> Vec<FqmAutomorphism> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut prev: Option<(Symbol, usize)> = None;
    for s in r.components() {
        let local = &coset_vector_table(s).fqm;
        let k = local.rank();
        for a in symbol_generators(s) {
            if let Ok(x) = FqmAutomorphism::new(g, embed_block(g, offset, local, &a)) {
                out.push(x);
            }
        }
        if let Some((t, at)) = prev {
            if t == s && k > 0 {
                if let Ok(x) = FqmAutomorphism::new(g, block_swap(g, at, offset, k)) {
                    out.push(x);
                }
            }
        }
        prev = Some((s, offset));
        offset += k;
    }
    out.retain(|a| !a.is_identity(g));
    let mut uniq = Vec::new();
    for a in out {
        if !uniq.contains(&a) {
            uniq.push(a);
        }
    }
    uniq
}

/// Generators of the image of Aut(Q(R)) in the discriminant form of Q(R).
pub fn gamma_generators_of_type(r: &AdeType) -> Vec<FqmAutomorphism> {
    type_generators(r, &fqm_of_type(r))
}

/// Generators of Γ_{R,n} on the discriminant form of Q(R) ⊕ I(n): the
/// component automorphisms, swaps of identical components and -1 on G_n.
pub fn gamma_generators(r: &AdeType, n: u64) -> Vec<FqmAutomorphism> {
    let g = crate::discform::fqm_of(r, n);
    let mut out = type_generators(r, &g);
    if n > 2 {
        let mut images: Vec<FqmElement> = (0..g.rank()).map(|i| g.generator(i)).collect();
        let last = g.rank() - 1;
        images[last] = g.neg(&g.generator(last));
        if let Ok(a) = FqmAutomorphism::new(&g, images) {
            out.push(a);
        }
    }
    out
}

/// A subgroup stored as the sorted element indices of its members.
pub type ElementSet = Vec<u32>;

/// Reference enumerator of isotropic subgroups up to a symmetry group.
/// Intended for small modules: it materialises element index tables and
/// the group as permutations.
pub struct OrbitEnumerator<'a> {
    g: &'a FiniteQuadraticModule,
    elements: Vec<FqmElement>,
    add: Vec<Vec<u32>>,
    isotropic: Vec<bool>,
    group: Vec<Vec<u32>>,
    /// True when the whole group was materialised.
    pub group_complete: bool,
}

impl<'a> OrbitEnumerator<'a> {
    /// `budget` caps the number of group elements used for canonical forms;
    /// a truncated group still gives a sound (if weaker) reduction.
    pub fn new(g: &'a FiniteQuadraticModule, symmetry: &[FqmAutomorphism], budget: usize) -> OrbitEnumerator<'a> {
        let order = g.order() as usize;
        let elements: Vec<FqmElement> = g.elements().collect();
        let gens: Vec<Vec<usize>> = symmetry
            .iter()
            .map(|a| elements.iter().map(|e| g.index_of(&a.apply(g, e))).collect())
            .collect();
        let (group, group_complete) = close_permutations(order, &gens, budget.max(1));
        let group = group.into_iter().map(|p| p.into_iter().map(|i| i as u32).collect()).collect();
        let add = elements
            .iter()
            .map(|x| elements.iter().map(|y| g.index_of(&g.add(x, y)) as u32).collect())
            .collect();
        let isotropic = elements.iter().map(|x| g.q_value(x).is_zero()).collect();
        OrbitEnumerator { g, elements, add, isotropic, group, group_complete }
    }

    pub fn group_order(&self) -> usize {
        self.group.len()
    }

    pub fn element(&self, i: u32) -> &FqmElement {
        &self.elements[i as usize]
    }

    fn close(&self, set: &mut BTreeSet<u32>, x: u32) {
        let mut frontier: Vec<u32> = vec![x];
        while let Some(y) = frontier.pop() {
            if !set.insert(y) {
                continue;
            }
            let members: Vec<u32> = set.iter().copied().collect();
            for m in members {
                let z = self.add[m as usize][y as usize];
                if !set.contains(&z) {
                    frontier.push(z);
                }
            }
        }
    }

    fn canonical(&self, set: &[u32]) -> ElementSet {
        let mut best: Option<ElementSet> = None;
        for p in &self.group {
            let mut img: Vec<u32> = set.iter().map(|&i| p[i as usize]).collect();
            img.sort_unstable();
            if best.as_ref().map_or(true, |b| img < *b) {
                best = Some(img);
            }
        }
        best.unwrap_or_else(|| set.to_vec())
    }

    /// One representative per orbit of isotropic subgroups all of whose
    /// members pass `allowed`, and which as a whole pass `constraint`.  Both
    /// predicates must be monotone: once violated by T, violated by every
    /// S containing T.
    pub fn enumerate(
        &self,
        allowed: &dyn Fn(&FqmElement) -> bool,
        constraint: &dyn Fn(&[FqmElement]) -> bool,
    ) -> Vec<ElementSet> {
        let zero = self.g.index_of(&self.g.zero()) as u32;
        let ok: Vec<bool> =
            self.elements.iter().enumerate().map(|(i, x)| i as u32 == zero || (self.isotropic[i] && allowed(x))).collect();
        let root: ElementSet = vec![zero];
        let mut seen: HashSet<ElementSet> = HashSet::new();
        seen.insert(root.clone());
        let mut out = vec![root.clone()];
        let mut level = vec![root];
        while !level.is_empty() {
            let mut next = Vec::new();
            for s in &level {
                let gens: Vec<FqmElement> = s.iter().map(|&i| self.elements[i as usize].clone()).collect();
                let perp: BTreeSet<u32> =
                    span(self.g, &orthogonal_complement(self.g, &gens)).iter().map(|e| self.g.index_of(e) as u32).collect();
                let members: HashSet<u32> = s.iter().copied().collect();
                let mut tried: HashSet<ElementSet> = HashSet::new();
                for &x in &perp {
                    if members.contains(&x) || !ok[x as usize] {
                        continue;
                    }
                    let mut t: BTreeSet<u32> = s.iter().copied().collect();
                    self.close(&mut t, x);
                    let t: ElementSet = t.into_iter().collect();
                    if !tried.insert(t.clone()) {
                        continue;
                    }
                    if !t.iter().all(|&i| ok[i as usize]) {
                        continue;
                    }
                    let elems: Vec<FqmElement> = t.iter().map(|&i| self.elements[i as usize].clone()).collect();
                    if !constraint(&elems) {
                        continue;
                    }
                    let c = self.canonical(&t);
                    if seen.insert(c.clone()) {
                        out.push(c.clone());
                        next.push(c);
                    }
                }
            }
            level = next;
        }
        out
    }

    /// Converts an element set into an isotropic subgroup record.
    pub fn subgroup(&self, set: &[u32]) -> Result<IsotropicSubgroup> {
        let gens: Vec<FqmElement> = set.iter().map(|&i| self.elements[i as usize].clone()).collect();
        IsotropicSubgroup::new(self.g, &gens)
    }
}

/// Streams representatives of isotropic subgroups up to the group generated
/// by `symmetry`, pruned by monotone predicates.  See [`OrbitEnumerator`].
pub fn enumerate_isotropic(
    g: &FiniteQuadraticModule,
    symmetry: &[FqmAutomorphism],
    allowed: &dyn Fn(&FqmElement) -> bool,
    constraint: &dyn Fn(&[FqmElement]) -> bool,
    budget: usize,
) -> Vec<Vec<FqmElement>> {
    let e = OrbitEnumerator::new(g, symmetry, budget);
    e.enumerate(allowed, constraint)
        .into_iter()
        .map(|s| s.iter().map(|&i| e.element(i).clone()).collect())
        .collect()
}

/// Applies every element of a permutation group given on element indices
/// and returns the orbit of a subgroup, as sorted element sets.
pub fn orbit_of(group: &[Vec<u32>], set: &[u32]) -> BTreeSet<ElementSet> {
    group
        .iter()
        .map(|p| {
            let mut img: Vec<u32> = set.iter().map(|&i| p[i as usize]).collect();
            img.sort_unstable();
            img
        })
        .collect()
}

/// Cached symbol groups keyed by symbol.
pub fn symbol_group_cached(x: Symbol) -> std::sync::Arc<Vec<Vec<usize>>> {
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<Symbol, Arc<Vec<Vec<usize>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&x) {
        return v.clone();
    }
    let v = Arc::new(symbol_group(x));
    cache.lock().unwrap().entry(x).or_insert(v).clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discform::{all_subgroups, fqm_of};
    use num_rational::Rational64;

    fn t(s: &str) -> AdeType {
        s.parse().unwrap()
    }

    #[test]
    fn generators_small() {
        let gens = gamma_generators(&t("A2"), 2);
        assert_eq!(gens.len(), 1);
        let g = fqm_of(&t("A2"), 2);
        assert_eq!(gens[0].images()[0], FqmElement(vec![2, 0]));
        let swap = gamma_generators(&t("2A1"), 2);
        assert_eq!(swap.len(), 1);
        assert_eq!(swap[0].images()[0], g_elem(&[0, 1, 0]));
        assert!(gamma_generators(&t("E8"), 2).is_empty());
        let _ = g;
    }

    fn g_elem(v: &[u64]) -> FqmElement {
        FqmElement(v.to_vec())
    }

    #[test]
    fn symbol_groups() {
        assert_eq!(symbol_group(Symbol::D(4)).len(), 6);
        assert_eq!(symbol_group(Symbol::D(6)).len(), 2);
        assert_eq!(symbol_group(Symbol::D(5)).len(), 2);
        assert_eq!(symbol_group(Symbol::A(1)).len(), 1);
        assert_eq!(symbol_group(Symbol::A(4)).len(), 2);
        assert_eq!(symbol_group(Symbol::E(6)).len(), 2);
        assert_eq!(symbol_group(Symbol::E(7)).len(), 1);
    }

    #[test]
    fn rejects_non_isometries() {
        let g = fqm_of(&t("A2"), 2);
        // swapping Z/3 and Z/2 is not even well defined
        assert!(FqmAutomorphism::new(&g, vec![g_elem(&[0, 1]), g_elem(&[1, 0])]).is_err());
        let a3 = fqm_of_type(&t("A3"));
        // x -> 3x... is -1, fine; x -> 2x is not injective and fails q
        assert!(FqmAutomorphism::new(&a3, vec![g_elem(&[2])]).is_err());
        assert!(FqmAutomorphism::new(&a3, vec![g_elem(&[3])]).is_ok());
    }

    #[test]
    fn enumerates_a1_n2() {
        let g = fqm_of(&t("A1"), 2);
        let subs = enumerate_isotropic(&g, &gamma_generators(&t("A1"), 2), &|_| true, &|_| true, 1000);
        assert_eq!(subs.len(), 2);
        assert!(subs.iter().any(|s| s.contains(&g_elem(&[1, 1]))));
        let triv = FiniteQuadraticModule::trivial();
        assert_eq!(enumerate_isotropic(&triv, &[], &|_| true, &|_| true, 10).len(), 1);
    }

    #[test]
    fn orbits_cover_all_isotropic_subgroups() {
        for (r, n) in [("4A1", 2u64), ("2A2", 6), ("A3+A1", 2), ("D4", 4), ("2A1+A2", 6)] {
            let r = t(r);
            let g = fqm_of(&r, n);
            let gens = gamma_generators(&r, n);
            let e = OrbitEnumerator::new(&g, &gens, 100_000);
            assert!(e.group_complete);
            let reps = e.enumerate(&|_| true, &|_| true);
            let mut covered: BTreeSet<ElementSet> = BTreeSet::new();
            for s in &reps {
                covered.extend(orbit_of(&e.group, s));
            }
            let brute: BTreeSet<ElementSet> = all_subgroups(&g)
                .into_iter()
                .filter(|s| s.iter().all(|x| g.q_value(x) == Rational64::zero()))
                .map(|s| {
                    let mut v: Vec<u32> = s.iter().map(|x| g.index_of(x) as u32).collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            assert_eq!(covered, brute, "{r} {n}");
            // no two representatives share an orbit
            let mut reps_seen = BTreeSet::new();
            for s in &reps {
                assert!(reps_seen.insert(orbit_of(&e.group, s).into_iter().next().unwrap()));
            }
        }
    }
}
