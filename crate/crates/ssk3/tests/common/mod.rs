//! Independent oracles shared by the property tests and the acceptance run.
//! Every check returns `Err(message)` on the first disagreement.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use ssk3::ade::{enumerate_short_vectors, gram_of, gram_of_type, rho_of_glue, AdeType, GramLattice};
use ssk3::discform::{
    all_subgroups, discriminant_form, fqm_of, fqm_of_type, invariant_factors, orthogonal_complement, overlattice,
    quotient_of_subgroups, span, FiniteQuadraticModule, FqmElement,
};
use ssk3::exactlin::{det, hermite_normal_form, inverse_rational, smith_normal_form, IntMatrix};
use ssk3::rdp::{
    algorithm_i, algorithm_ii, ade_types_of_rank, candidates_in_scope, Budget, PartitionAB, RdpCandidate, Status,
};
use ssk3::symmetry::{close_permutations, enumerate_isotropic, gamma_generators, gamma_generators_of_type};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// A finite quadratic module together with a lattice it comes from.
pub struct CorpusEntry {
    pub name: String,
    pub r: AdeType,
    pub n: Option<u64>,
    pub g: FiniteQuadraticModule,
    pub lattice: GramLattice,
}

/// Discriminant forms of Q(R) for rank ≤ 8 and of Q(R) + I(n) for n ∈ {2, 4, 6},
/// restricted to groups of order at most `max_order`.
pub fn corpus(max_order: u64) -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for rank in 1..=8 {
        for r in ade_types_of_rank(rank) {
            if r.disc_order() <= max_order {
                out.push(CorpusEntry {
                    name: r.to_string(),
                    g: fqm_of_type(&r),
                    lattice: GramLattice::new(gram_of_type(&r)).unwrap(),
                    r: r.clone(),
                    n: None,
                });
            }
            for n in [2u64, 4, 6] {
                if r.disc_order() * n <= max_order && rank <= 6 {
                    out.push(CorpusEntry {
                        name: format!("{r} + I({n})"),
                        g: fqm_of(&r, n),
                        lattice: gram_of(&r, n).unwrap(),
                        r: r.clone(),
                        n: Some(n),
                    });
                }
            }
        }
    }
    out
}

pub fn is_isotropic(g: &FiniteQuadraticModule, elems: &[FqmElement]) -> bool {
    elems.iter().all(|x| g.q_value(x).is_zero())
}

/// All isotropic subgroups by brute force over element subsets.
pub fn isotropic_subgroups(g: &FiniteQuadraticModule) -> Vec<Vec<FqmElement>> {
    all_subgroups(g).into_iter().filter(|s| is_isotropic(g, s)).collect()
}

// ---------------------------------------------------------------------------
// (a) index and discriminant laws, S^⊥/S ≅ disc(Λ_S)

/// Cosets of `s` inside `perp`, each represented by its least element.
struct Quotient<'a> {
    g: &'a FiniteQuadraticModule,
    s: Vec<FqmElement>,
    reps: Vec<FqmElement>,
}

impl<'a> Quotient<'a> {
    fn new(g: &'a FiniteQuadraticModule, perp: &[FqmElement], s: &[FqmElement]) -> Quotient<'a> {
        let mut q = Quotient { g, s: s.to_vec(), reps: Vec::new() };
        let reps: BTreeSet<FqmElement> = perp.iter().map(|x| q.rep(x)).collect();
        q.reps = reps.into_iter().collect();
        q
    }

    fn rep(&self, x: &FqmElement) -> FqmElement {
        self.s.iter().map(|y| self.g.add(x, y)).min().unwrap()
    }

    fn scale(&self, x: &FqmElement, k: u64) -> FqmElement {
        self.rep(&self.g.scale(x, k))
    }
}

/// Searches for an isometry from `d` onto the quotient by assigning images
/// to the generators of `d`.
fn isometric(d: &FiniteQuadraticModule, t: &Quotient) -> bool {
    if d.order() as usize != t.reps.len() {
        return false;
    }
    fn extend(d: &FiniteQuadraticModule, t: &Quotient, images: &mut Vec<FqmElement>) -> bool {
        let i = images.len();
        if i == d.rank() {
            return true;
        }
        let gi = d.generator(i);
        for x in &t.reps {
            if !t.g.is_zero(&t.scale(x, d.divisors()[i])) || t.g.q_value(x) != d.q_value(&gi) {
                continue;
            }
            if (0..i).any(|j| t.g.b_value(x, &images[j]) != d.b_value(&gi, &d.generator(j))) {
                continue;
            }
            images.push(x.clone());
            if extend(d, t, images) {
                return true;
            }
            images.pop();
        }
        false
    }
    extend(d, t, &mut Vec::new())
}

pub fn check_nikulin(e: &CorpusEntry, s: &[FqmElement]) -> Check {
    let g = &e.g;
    let perp = span(g, &orthogonal_complement(g, s));
    ensure!(perp.iter().all(|x| s.iter().all(|y| g.b_value(x, y).is_zero())), "{}: S^⊥ not orthogonal", e.name);
    ensure!(
        perp.len() * s.len() == g.order() as usize,
        "{}: |S^⊥|·|S| = {}·{} ≠ {}",
        e.name,
        perp.len(),
        s.len(),
        g.order()
    );
    let ov = overlattice(&e.lattice, g, s).map_err(|err| format!("{}: overlattice: {err}", e.name))?;
    let lat = ov.lattice().map_err(|err| format!("{}: {err}", e.name))?;
    let k = BigInt::from(s.len() as u64);
    ensure!(lat.disc() * &k * &k == e.lattice.disc(), "{}: disc(Λ_S)·|S|² ≠ disc(Q) for |S| = {}", e.name, s.len());
    let d = discriminant_form(&lat).map_err(|err| format!("{}: {err}", e.name))?;
    let perp_gens = orthogonal_complement(g, s);
    let inv = quotient_of_subgroups(g, &perp_gens, s);
    let dinv = invariant_factors(&d.divisors().iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
    ensure!(inv == dinv, "{}: invariants of S^⊥/S {:?} vs disc(Λ_S) {:?}", e.name, inv, dinv);
    let t = Quotient::new(g, &perp, s);
    ensure!(isometric(&d, &t), "{}: disc(Λ_S) not isometric to S^⊥/S for S of order {}", e.name, s.len());
    Ok(())
}

/// Runs the index and isometry checks on every isotropic subgroup of every
/// corpus entry.  Returns the number of subgroups checked.
pub fn suite_nikulin(max_order: u64) -> Result<usize, String> {
    let mut count = 0;
    for e in corpus(max_order) {
        for s in isotropic_subgroups(&e.g) {
            check_nikulin(&e, &s)?;
            count += 1;
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// (b) rho_of_glue against roots of the overlattice

pub fn check_rho(r: &AdeType, s: &[FqmElement]) -> Check {
    let g = fqm_of_type(r);
    let q = GramLattice::new(gram_of_type(r)).unwrap();
    let ov = overlattice(&q, &g, s).map_err(|e| format!("{r}: {e}"))?;
    let lat = ov.lattice().map_err(|e| format!("{r}: {e}"))?;
    let bound = BigRational::from_integer(BigInt::from(-2));
    let vecs = enumerate_short_vectors(&lat, &bound).map_err(|e| format!("{r}: {e}"))?;
    let gram = lat.gram();
    let roots = vecs
        .iter()
        .filter(|v| {
            let v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            let gv = gram.mul_vec(&v);
            v.iter().zip(&gv).map(|(a, b)| a * b).sum::<BigInt>() == BigInt::from(-2)
        })
        .count() as u64;
    let rho = rho_of_glue(r, s).map_err(|e| format!("{r}: {e}"))?;
    ensure!(rho == roots, "{r}: rho_of_glue = {rho}, overlattice has {roots} roots (|S| = {})", s.len());
    Ok(())
}

/// Every ADE type of rank ≤ `max_rank` and every isotropic subgroup up to
/// the diagram symmetries (rho is invariant under them).
pub fn suite_rho(max_rank: u32) -> Result<usize, String> {
    let mut count = 0;
    for rank in 1..=max_rank {
        for r in ade_types_of_rank(rank) {
            let g = fqm_of_type(&r);
            let subs = enumerate_isotropic(&g, &gamma_generators_of_type(&r), &|_| true, &|_| true, 100_000);
            for s in subs {
                check_rho(&r, &s)?;
                count += 1;
            }
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// (c) Algorithm I against Algorithm II with B = ∅

/// `count` pairs (R, n) with |G_{R,n}| ≤ `max_order`: half taken from
/// published rows, half from candidates without one, spread by order.
pub fn sample_candidates(max_order: u64, count: usize) -> Vec<RdpCandidate> {
    let published: BTreeSet<(AdeType, u64)> = ssk3::tables::rdp_rows().unwrap().into_iter().map(|x| (x.r, x.n)).collect();
    let mut pairs: Vec<(u64, AdeType, u64)> = candidates_in_scope(None, &|_| true)
        .into_iter()
        .map(|c| (fqm_of(&c.r, c.n).order(), c.r, c.n))
        .filter(|x| x.0 <= max_order)
        .collect();
    pairs.sort();
    pairs.dedup();
    let (hits, misses): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|(_, r, n)| published.contains(&(r.clone(), *n)));
    let spread = |v: Vec<(u64, AdeType, u64)>, k: usize| {
        let step = (v.len() / k.max(1)).max(1);
        v.into_iter().step_by(step).take(k).collect::<Vec<_>>()
    };
    let half = count / 2;
    spread(hits, half)
        .into_iter()
        .chain(spread(misses, count - half))
        .map(|(_, r, n)| RdpCandidate { r, n, p: 0 })
        .collect()
}

/// Returns the number of primes compared and of σ values realized.
pub fn check_algorithms_agree(r: &AdeType, n: u64, max_order: u64) -> Result<(usize, usize), String> {
    let by_i = algorithm_i(r, n, max_order);
    ensure!(!by_i.is_empty(), "{r}/{n}: no primes");
    for (p, res_i) in &by_i {
        ensure!(res_i.status == Status::Complete, "{r}/{n}/{p}: Algorithm I undecided");
        let res_ii = algorithm_ii(r, n, *p, &PartitionAB::all_in_a(r, n), &Budget::default());
        ensure!(res_ii.status == Status::Complete, "{r}/{n}/{p}: Algorithm II undecided");
        ensure!(
            res_i.sigmas == res_ii.sigmas,
            "{r}/{n}/{p}: Algorithm I {:?} vs Algorithm II {:?}",
            res_i.sigmas,
            res_ii.sigmas
        );
    }
    Ok((by_i.len(), by_i.values().map(|x| x.sigmas.len()).sum()))
}

// ---------------------------------------------------------------------------
// (d) symmetry-reduced enumeration against brute force

pub fn check_reduction(e: &CorpusEntry) -> Result<usize, String> {
    let g = &e.g;
    let k = fqm_of_type(&e.r).rank();
    let (gamma, allowed, root_total): (_, Box<dyn Fn(&FqmElement) -> bool>, u64) = match e.n {
        None => (gamma_generators_of_type(&e.r), Box::new(|_| true), 0),
        Some(n) => (gamma_generators(&e.r, n), Box::new(move |x: &FqmElement| x.0[..k].iter().any(|&v| v != 0)), e.r.root_count()),
    };
    let constraint = |elems: &[FqmElement]| {
        if e.n.is_none() {
            return true;
        }
        let s0: Vec<FqmElement> =
            elems.iter().filter(|x| x.0[k] == 0).map(|x| FqmElement(x.0[..k].to_vec())).collect();
        rho_of_glue(&e.r, &s0).unwrap() == root_total
    };
    let brute: BTreeSet<Vec<FqmElement>> = isotropic_subgroups(g)
        .into_iter()
        .filter(|s| s.iter().all(|x| g.is_zero(x) || allowed(x)) && constraint(s))
        .collect();

    let plain = enumerate_isotropic(g, &[], &*allowed, &constraint, 1);
    let plain: BTreeSet<Vec<FqmElement>> = plain.iter().map(|s| span(g, s)).collect();
    ensure!(plain == brute, "{}: unreduced enumeration {} subgroups, brute force {}", e.name, plain.len(), brute.len());

    let elements: Vec<FqmElement> = g.elements().collect();
    let perms: Vec<Vec<usize>> = gamma
        .iter()
        .map(|a| elements.iter().map(|x| g.index_of(&a.apply(g, x))).collect())
        .collect();
    let (group, complete) = close_permutations(elements.len(), &perms, 1_000_000);
    ensure!(complete, "{}: symmetry group too large", e.name);
    let reduced = enumerate_isotropic(g, &gamma, &*allowed, &constraint, 1_000_000);
    let mut closed: BTreeSet<Vec<FqmElement>> = BTreeSet::new();
    let mut orbits = 0;
    for s in &reduced {
        let s = span(g, s);
        let idx: Vec<usize> = s.iter().map(|x| g.index_of(x)).collect();
        let orbit: BTreeSet<Vec<FqmElement>> = group
            .iter()
            .map(|p| {
                let mut img: Vec<FqmElement> = idx.iter().map(|&i| elements[p[i]].clone()).collect();
                img.sort();
                img
            })
            .collect();
        ensure!(orbit.is_disjoint(&closed), "{}: two representatives of one orbit", e.name);
        closed.extend(orbit);
        orbits += 1;
    }
    ensure!(closed == brute, "{}: reduced enumeration closes to {} subgroups, brute force {}", e.name, closed.len(), brute.len());
    Ok(orbits)
}

pub fn suite_reduction(max_order: u64) -> Result<usize, String> {
    let mut count = 0;
    for e in corpus(max_order) {
        count += check_reduction(&e)?;
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// (e) exact linear algebra

pub fn int_matrix(rows: &[Vec<i64>]) -> IntMatrix {
    IntMatrix::from_rows(rows)
}

/// Leibniz expansion, for small matrices only.
pub fn det_by_permutations(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    let mut total = BigInt::zero();
    let mut perm: Vec<usize> = (0..n).collect();
    fn rec(m: &[Vec<i64>], k: usize, perm: &mut Vec<usize>, total: &mut BigInt) {
        let n = perm.len();
        if k == n {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if perm[i] > perm[j] {
                        inversions += 1;
                    }
                }
            }
            let mut t = BigInt::one();
            for (i, &j) in perm.iter().enumerate() {
                t *= m[i][j];
            }
            if inversions % 2 == 1 {
                t = -t;
            }
            *total += t;
            return;
        }
        for i in k..n {
            perm.swap(k, i);
            rec(m, k + 1, perm, total);
            perm.swap(k, i);
        }
    }
    rec(m, 0, &mut perm, &mut total);
    total
}

pub fn check_det_inverse(m: &[Vec<i64>]) -> Check {
    let a = int_matrix(m);
    let d = det(&a).map_err(|e| e.to_string())?;
    ensure!(d == det_by_permutations(m), "det mismatch on {m:?}");
    match inverse_rational(&a) {
        Ok(inv) => {
            ensure!(!d.is_zero(), "inverse of a singular matrix {m:?}");
            let n = m.len();
            let prod = a.to_rational().mul(&inv);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { BigRational::one() } else { BigRational::zero() };
                    ensure!(prod[(i, j)] == want, "m·m⁻¹ ≠ I for {m:?}");
                }
            }
        }
        Err(_) => ensure!(d.is_zero(), "no inverse for {m:?} with det {d}"),
    }
    Ok(())
}

pub fn check_snf(m: &[Vec<i64>]) -> Check {
    let a = int_matrix(m);
    let snf = smith_normal_form(&a);
    ensure!(snf.left.mul(&a).mul(&snf.right) == snf.diagonal_matrix(), "left·m·right not diagonal for {m:?}");
    ensure!(det(&snf.left).map_err(|e| e.to_string())?.abs().is_one(), "left factor not unimodular for {m:?}");
    ensure!(det(&snf.right).map_err(|e| e.to_string())?.abs().is_one(), "right factor not unimodular for {m:?}");
    ensure!(snf.diag.iter().all(|d| !d.is_negative()), "negative invariant for {m:?}");
    for w in snf.diag.windows(2) {
        ensure!(w[1].is_zero() || (!w[0].is_zero() && w[1].is_multiple_of(&w[0])), "divisibility fails for {m:?}");
    }
    let g = m.iter().flatten().fold(BigInt::zero(), |acc, &x| acc.gcd(&BigInt::from(x)));
    ensure!(snf.diag.first().cloned().unwrap_or_else(BigInt::zero) == g, "first invariant ≠ gcd of entries for {m:?}");
    if a.is_square() {
        let p: BigInt = snf.diag.iter().product();
        ensure!(p == det_by_permutations(m).abs(), "product of invariants ≠ |det| for {m:?}");
    }
    Ok(())
}

/// `h0` is a matrix in Hermite form and `u` an invertible integer matrix
/// with `u.len() ≥ h0.len()`; the Hermite form of u·[h0; 0] must be h0.
pub fn check_hnf(h0: &[Vec<i64>], u: &[Vec<i64>]) -> Check {
    let cols = h0.first().map_or(0, |r| r.len());
    let mut padded: Vec<Vec<i64>> = h0.to_vec();
    padded.resize(u.len(), vec![0; cols]);
    let m = int_matrix(u).mul(&int_matrix(&padded));
    let h = hermite_normal_form(&m);
    ensure!(h == int_matrix(h0), "HNF of u·h0 is {h:?}, expected {h0:?}");
    ensure!(hermite_normal_form(&h) == h, "HNF not idempotent on {h0:?}");
    Ok(())
}

/// Makes a matrix in Hermite form out of arbitrary entries: pivots on a
/// strictly increasing set of columns, positive, with reduced entries above.
pub fn hermite_shape(raw: &[Vec<i64>], pivots: &[usize]) -> Vec<Vec<i64>> {
    let mut h: Vec<Vec<i64>> = raw.iter().take(pivots.len()).cloned().collect();
    for (i, &c) in pivots.iter().enumerate() {
        for j in 0..c {
            h[i][j] = 0;
        }
        h[i][c] = h[i][c].abs() + 1;
        for k in 0..i {
            h[k][c] = h[k][c].rem_euclid(h[i][c]);
        }
    }
    h
}

/// A unimodular matrix from a list of elementary row operations.
pub fn unimodular(n: usize, ops: &[(usize, usize, i64)]) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for &(a, b, k) in ops.iter().filter(|_| n > 0) {
        let (a, b) = (a % n, b % n);
        if a == b {
            u.swap(a, (a + 1) % n);
        } else {
            for j in 0..n {
                u[a][j] += k * u[b][j];
            }
        }
    }
    u
}
