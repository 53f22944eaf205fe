//! Extremal elliptic and quasi-elliptic fibrations: the list of rank-20
//! types, their Mordell-Weil groups, and the fiber-type bookkeeping.
//!
//! With h = e the polarization of I(2), a the extra A_1 root and z = -a,
//! the class f = (h - z)/2 is isotropic with f.z = 1.  A subgroup S of
//! G_{R+A_1,2} contains the class of f exactly when S = <f> + M with M a
//! subgroup of G_R, and then S^perp/S is M^perp/M.  The search therefore
//! runs on G_R alone and MW is M.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::ade::{gram_of, gram_of_type, AdeType, Symbol};
use crate::discform::{
    fqm_of, integer_left_kernel, is_p_elementary, overlattice, prime_factors, quotient_structure, FqmElement,
};
use crate::error::{parse_err, Error, Result};
use crate::exactlin::{IntMatrix, RatMatrix};
use crate::rdp::{
    check_conditions, combos_for, coupling_classes, joint_choices, prime_choices, Budget, ChoiceOutcome, Columns,
    PrimeChoice, RdpResult, Status, Telemetry,
};
use crate::search::{search, GammaMode, LocalModule, Objective, SearchConfig};

const A1: Symbol = Symbol::A(1);

/// Types R of rank 20 with (R + A_1, 2, σ) realizable for some σ and p.
/// The flag is set when some n = 2 candidate containing A_1 was left
/// undecided, so that the list may be incomplete.
pub fn build_script_e(results: &[RdpResult]) -> (Vec<AdeType>, bool) {
    let mut out = BTreeSet::new();
    let mut incomplete = false;
    for res in results.iter().filter(|r| r.n == 2) {
        let Some(r) = res.r.minus(A1) else { continue };
        if res.status == Status::Undecided {
            incomplete = true;
        }
        if !res.sigmas.is_empty() {
            out.insert(r);
        }
    }
    (out.into_iter().collect(), incomplete)
}

/// Primes p with (R + A_1, 2, σ) realizable at p for some σ.
pub fn primes_for(r: &AdeType, results: &[RdpResult]) -> Vec<u64> {
    let big = r.plus(&AdeType::from_parts([(A1, 1)]));
    let ps: BTreeSet<u64> =
        results.iter().filter(|x| x.n == 2 && x.r == big && !x.sigmas.is_empty()).map(|x| x.p).collect();
    ps.into_iter().collect()
}

/// Kodaira fiber types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Fiber {
    I(u32),
    IStar(u32),
    II,
    III,
    IV,
    IIStar,
    IIIStar,
    IVStar,
}

impl fmt::Display for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fiber::I(n) => write!(f, "I_{n}"),
            Fiber::IStar(n) => write!(f, "I*_{n}"),
            Fiber::II => write!(f, "II"),
            Fiber::III => write!(f, "III"),
            Fiber::IV => write!(f, "IV"),
            Fiber::IIStar => write!(f, "II*"),
            Fiber::IIIStar => write!(f, "III*"),
            Fiber::IVStar => write!(f, "IV*"),
        }
    }
}

/// Fiber types per component of R, in component order.  For a
/// quasi-elliptic fibration each component has exactly one type.
pub type Kodaira = Vec<(Symbol, Vec<Fiber>)>;

pub fn kodaira_annotate(r: &AdeType, p: u64, quasi: bool) -> Result<Kodaira> {
    r.components()
        .into_iter()
        .map(|s| {
            let types = if quasi {
                let t = match (p, s) {
                    (2, Symbol::A(1)) => Fiber::III,
                    (2, Symbol::D(m)) if m % 2 == 0 => Fiber::IStar(m - 4),
                    (2, Symbol::E(7)) => Fiber::IIIStar,
                    (3, Symbol::A(2)) => Fiber::IV,
                    (3, Symbol::E(6)) => Fiber::IVStar,
                    (2 | 3, Symbol::E(8)) => Fiber::IIStar,
                    _ => {
                        return Err(Error::Invalid(format!(
                            "{s} cannot be a fiber of a quasi-elliptic fibration in characteristic {p}"
                        )))
                    }
                };
                vec![t]
            } else {
                match s {
                    Symbol::A(1) => vec![Fiber::I(2), Fiber::III],
                    Symbol::A(2) => vec![Fiber::I(3), Fiber::IV],
                    Symbol::A(l) => vec![Fiber::I(l + 1)],
                    Symbol::D(m) => vec![Fiber::IStar(m - 4)],
                    Symbol::E(6) => vec![Fiber::IVStar],
                    Symbol::E(7) => vec![Fiber::IIIStar],
                    Symbol::E(_) => vec![Fiber::IIStar],
                }
            };
            Ok((s, types))
        })
        .collect()
}

/// Whether an extremal fibration with fibers R in characteristic p is
/// quasi-elliptic: Q(R) must be p-elementary.
pub fn quasi_elliptic_test(r: &AdeType, p: u64) -> Result<bool> {
    if p != 2 && p != 3 {
        return Err(Error::Invalid(format!("no quasi-elliptic fibrations in characteristic {p}")));
    }
    is_p_elementary(&gram_of_type(r), p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EllipticResult {
    pub r: AdeType,
    pub p: u64,
    pub sigma: u32,
    /// Invariant factors d_1 | d_2 | ..., empty for the trivial group.
    pub mw: Vec<u64>,
    pub quasi_elliptic: bool,
    pub kodaira: Option<Kodaira>,
    /// dim over F_p of MW, for quasi-elliptic rows.
    pub torsion_rank: Option<u32>,
    /// Generators of S in G_{R+A_1,2}.
    pub witness: Vec<FqmElement>,
}

impl EllipticResult {
    pub fn mw_string(&self) -> String {
        format_mw(&self.mw)
    }
}

/// "0", "[a]" or "[a,b]".
pub fn format_mw(mw: &[u64]) -> String {
    if mw.is_empty() {
        return "0".into();
    }
    let v: Vec<String> = mw.iter().map(|d| d.to_string()).collect();
    format!("[{}]", v.join(","))
}

pub fn parse_mw(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if s == "0" {
        return Ok(vec![]);
    }
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err(s, "expected 0 or [a,b,...]"))?;
    let v = inner
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| parse_err(s, "bad integer")))
        .collect::<Result<Vec<u64>>>()?;
    if v.iter().any(|&d| d < 2) || v.windows(2).any(|w| w[1] % w[0] != 0) {
        return Err(parse_err(s, "not in invariant-factor form"));
    }
    Ok(v)
}

/// 2(σ + r) against the fiber count of the one-to-one Kodaira annotation.
pub fn torsion_rank_check(res: &EllipticResult) -> bool {
    if !res.quasi_elliptic {
        return false;
    }
    let Some(r) = res.torsion_rank else { return false };
    let Ok(kod) = kodaira_annotate(&res.r, res.p, true) else { return false };
    let count = |pred: &dyn Fn(Fiber) -> bool| kod.iter().filter(|(_, t)| pred(t[0])).count() as u32;
    let rhs = match res.p {
        2 => {
            2 * count(&|t| matches!(t, Fiber::IStar(m) if m % 2 == 0))
                + count(&|t| t == Fiber::III)
                + count(&|t| t == Fiber::IIIStar)
        }
        3 => count(&|t| t == Fiber::IV) + count(&|t| t == Fiber::IVStar),
        _ => return false,
    };
    2 * (res.sigma + r) == rhs
}

/// Invariant factors (ascending) of a direct sum of groups given by their
/// invariant factors.
pub fn combine_groups(parts: &[&[u64]]) -> Vec<u64> {
    let mut powers: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for part in parts {
        for &d in *part {
            let mut d = d;
            for l in prime_factors(d) {
                let mut q = 1;
                while d % l == 0 {
                    d /= l;
                    q *= l;
                }
                powers.entry(l).or_default().push(q);
            }
        }
    }
    let len = powers.values().map(|v| v.len()).max().unwrap_or(0);
    let mut out = vec![1u64; len];
    for v in powers.values_mut() {
        v.sort_unstable_by(|a, b| b.cmp(a));
        for (i, q) in v.iter().enumerate() {
            out[i] *= q;
        }
    }
    out.reverse();
    out
}

/// The pieces of G_{R+A_1,2} used to go between M and S.
struct Embedding {
    big: AdeType,
    /// fqm coordinate of each G_R coordinate
    fqm_map: Vec<usize>,
    /// fqm coordinate of the extra A_1
    a1_fqm: usize,
    /// lattice coordinates of R inside Q(R + A_1) + I(2)
    lat_r: Vec<usize>,
    a1_lat: usize,
    rank: usize,
}

impl Embedding {
    fn new(r: &AdeType) -> Embedding {
        let big = r.plus(&AdeType::from_parts([(A1, 1)]));
        let comps = big.components();
        let extra = comps.iter().rposition(|&s| s == A1).unwrap();
        let (mut fqm_map, mut lat_r) = (Vec::new(), Vec::new());
        let (mut fo, mut lo) = (0usize, 0usize);
        let (mut a1_fqm, mut a1_lat) = (0, 0);
        for (i, &s) in comps.iter().enumerate() {
            let gens = crate::ade::coset_vector_table(s).fqm.rank();
            let rk = s.rank() as usize;
            if i == extra {
                a1_fqm = fo;
                a1_lat = lo;
            } else {
                fqm_map.extend(fo..fo + gens);
                lat_r.extend(lo..lo + rk);
            }
            fo += gens;
            lo += rk;
        }
        Embedding { big, fqm_map, a1_fqm, lat_r, a1_lat, rank: lo + 1 }
    }

    fn f_bar(&self) -> FqmElement {
        let g = fqm_of(&self.big, 2);
        let mut x = g.zero();
        x.0[self.a1_fqm] = 1;
        x.0[g.rank() - 1] = 1;
        x
    }

    fn lift(&self, m: &FqmElement) -> FqmElement {
        let g = fqm_of(&self.big, 2);
        let mut x = g.zero();
        for (i, &v) in m.0.iter().enumerate() {
            x.0[self.fqm_map[i]] = v;
        }
        x
    }
}

fn rat(v: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(v), BigInt::from(d))
}

/// MW as U^perp / (U^perp)_roots computed in the overlattice Λ_S, where S
/// is given by generators in G_{R+A_1,2} containing the class of f.
/// Fails if f is not in Λ_S or the quotient is not finite.
pub fn mordell_weil_of(r: &AdeType, s_gens: &[FqmElement]) -> Result<Vec<u64>> {
    let emb = Embedding::new(r);
    let g = fqm_of(&emb.big, 2);
    let lat = gram_of(&emb.big, 2)?;
    let ov = overlattice(&lat, &g, s_gens)?;
    let n = emb.rank;
    let mut f = vec![BigRational::zero(); n];
    f[emb.a1_lat] = rat(1, 2);
    f[n - 1] = rat(1, 2);
    let mut z = vec![BigRational::zero(); n];
    z[emb.a1_lat] = rat(-1, 1);
    let uz = RatMatrix::from_rows(vec![f.clone(), z.clone()]);
    let gram = lat.gram().to_rational();
    let u_gram = uz.mul(&gram).mul(&uz.transpose());
    let expect = [[0, 1], [1, -2]];
    for i in 0..2 {
        for j in 0..2 {
            debug_assert_eq!(u_gram[(i, j)], rat(expect[i][j], 1));
        }
    }
    // f must lie in Λ_S
    quotient_structure(&ov.basis, &RatMatrix::from_rows(vec![f]))
        .map_err(|_| Error::Invalid("(h - z)/2 is not in the overlattice".into()))?;
    // pairings of the basis with f and z
    let pair = ov.basis.mul(&gram).mul(&uz.transpose());
    if !pair.is_integral() {
        return Err(Error::Invalid("overlattice is not integral".into()));
    }
    let pair_int: IntMatrix = pair.scaled_to_int(&BigInt::one());
    let ker = integer_left_kernel(&pair_int);
    let ker_rows: Vec<Vec<BigRational>> =
        ker.iter().map(|k| k.iter().map(|v| BigRational::from_integer(v.clone())).collect()).collect();
    let u_perp = RatMatrix::from_rows(ker_rows).mul(&ov.basis);
    let roots = RatMatrix::from_rows(
        emb.lat_r
            .iter()
            .map(|&i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect(),
    );
    let q = quotient_structure(&u_perp, &roots)?;
    if q.free_rank != 0 {
        return Err(Error::Invalid("roots of U^perp do not have full rank".into()));
    }
    let mut mw = q.torsion;
    mw.sort_unstable();
    Ok(mw)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EllipticOutcome {
    pub r: AdeType,
    pub p: u64,
    pub rows: Vec<EllipticResult>,
    pub status: Status,
    pub telemetry: Telemetry,
}

/// All (σ, MW) for fibrations with fibers R in characteristic p.  Each row
/// carries a subgroup S re-checked against the lattice conditions, and MW
/// is recomputed from the lattice.
pub fn elliptic_classify(r: &AdeType, p: u64, budget: &Budget) -> Result<EllipticOutcome> {
    if r.rank() != 20 {
        return Err(Error::Invalid(format!("{r} has rank {} instead of 20", r.rank())));
    }
    let start = Instant::now();
    let budget = &budget.started();
    let mut nodes = 0u64;
    let mut outcome =
        EllipticOutcome { r: r.clone(), p, rows: vec![], status: Status::Complete, telemetry: Telemetry::default() };
    let done = |mut o: EllipticOutcome, nodes: u64, status: Status| {
        o.status = status;
        o.telemetry = Telemetry { nodes, millis: start.elapsed().as_millis() as u64 };
        Ok(o)
    };
    let primes = prime_factors(r.disc_order());
    if !primes.contains(&p) {
        return done(outcome, nodes, Status::Complete);
    }
    let cols = Columns::new(r, None);
    let classes = coupling_classes(r, &primes);
    let mut p_lists: Vec<Vec<PrimeChoice>> = Vec::new();
    // per uncoupled class: distinct structures with the generators realizing them
    let mut free: Vec<Vec<(Vec<u64>, Vec<FqmElement>)>> = Vec::new();
    for class in &classes {
        let coupled = class.contains(&p);
        let mode = if class.len() > 1 { GammaMode::Local } else { GammaMode::Full };
        let mut lists = Vec::new();
        for &l in class.iter().filter(|&&l| l != p) {
            match prime_choices(r, None, l, &cols, false, mode, budget, &mut nodes) {
                ChoiceOutcome::Undecided => return done(outcome, nodes, Status::Undecided),
                ChoiceOutcome::Choices(c) if c.is_empty() => return done(outcome, nodes, Status::Complete),
                ChoiceOutcome::Choices(c) => lists.push(c),
            }
        }
        if coupled {
            p_lists = lists;
            continue;
        }
        let mut seen: BTreeMap<Vec<u64>, Vec<FqmElement>> = BTreeMap::new();
        for idx in joint_choices(&cols, &lists, false) {
            let parts: Vec<&[u64]> = lists.iter().zip(&idx).map(|(l, &i)| &l[i].structure[..]).collect();
            seen.entry(combine_groups(&parts))
                .or_insert_with(|| lists.iter().zip(&idx).flat_map(|(l, &i)| l[i].gens.clone()).collect());
        }
        if seen.is_empty() {
            return done(outcome, nodes, Status::Complete);
        }
        free.push(seen.into_iter().collect());
    }
    let m = LocalModule::new(r, None, p, GammaMode::Full);
    let mut cfg = SearchConfig::new(Objective::Structures);
    budget.configure(&mut cfg);
    cfg.type_one = p == 2;
    let mut class_structs: Vec<Vec<u64>> = Vec::new();
    let (combos, joint) = if p_lists.is_empty() {
        (None, vec![])
    } else {
        let joint = joint_choices(&cols, &p_lists, false);
        for idx in &joint {
            let parts: Vec<&[u64]> = p_lists.iter().zip(idx).map(|(l, &i)| &l[i].structure[..]).collect();
            let s = combine_groups(&parts);
            if !class_structs.contains(&s) {
                class_structs.push(s);
            }
        }
        let class_of = |idx: &[usize]| {
            let parts: Vec<&[u64]> = p_lists.iter().zip(idx).map(|(l, &i)| &l[i].structure[..]).collect();
            let s = combine_groups(&parts);
            class_structs.iter().position(|c| *c == s).unwrap()
        };
        let c = combos_for(&m, &cols, &p_lists, &joint, class_of);
        (Some(c), joint)
    };
    let out = search(&m, &cfg, combos.as_deref());
    nodes += out.nodes;
    let quasi = (p == 2 || p == 3) && quasi_elliptic_test(r, p)?;
    let kodaira = kodaira_annotate(r, p, quasi).ok();
    let emb = Embedding::new(r);
    let mut rows: BTreeMap<(u32, Vec<u64>), EllipticResult> = BTreeMap::new();
    for (key, found) in &out.found {
        let mut m_gens: Vec<FqmElement> = found.gens.iter().map(|&x| m.to_global(x)).collect();
        let mut parts: Vec<&[u64]> = vec![&key.structure];
        if let Some(ci) = found.combo {
            for (list, &i) in p_lists.iter().zip(&joint[ci]) {
                m_gens.extend(list[i].gens.iter().cloned());
            }
            parts.push(&class_structs[key.class]);
        }
        // every choice of structure in each uncoupled class
        let mut pick = vec![0usize; free.len()];
        loop {
            let mut gens = m_gens.clone();
            let mut all = parts.clone();
            for (c, &i) in free.iter().zip(&pick) {
                all.push(&c[i].0);
                gens.extend(c[i].1.iter().cloned());
            }
            let mw = combine_groups(&all);
            if !rows.contains_key(&(key.sigma, mw.clone())) {
                let mut s: Vec<FqmElement> = gens.iter().map(|x| emb.lift(x)).collect();
                s.push(emb.f_bar());
                if !check_conditions(&emb.big, 2, &s, p, key.sigma)? {
                    return Err(Error::Invalid(format!("witness for {r} σ={} fails the conditions", key.sigma)));
                }
                let lattice_mw = mordell_weil_of(r, &s)?;
                if lattice_mw != mw {
                    return Err(Error::Invalid(format!(
                        "{r} σ={}: MW {} from the subgroup but {} from the lattice",
                        key.sigma,
                        format_mw(&mw),
                        format_mw(&lattice_mw)
                    )));
                }
                let torsion_rank = quasi.then(|| mw.len() as u32);
                rows.insert(
                    (key.sigma, mw.clone()),
                    EllipticResult {
                        r: r.clone(),
                        p,
                        sigma: key.sigma,
                        mw,
                        quasi_elliptic: quasi,
                        kodaira: kodaira.clone(),
                        torsion_rank,
                        witness: s,
                    },
                );
            }
            let mut i = 0;
            loop {
                if i == pick.len() {
                    break;
                }
                pick[i] += 1;
                if pick[i] < free[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == pick.len() {
                break;
            }
        }
    }
    outcome.rows = rows.into_values().collect();
    let status = if out.complete { Status::Complete } else { Status::Undecided };
    done(outcome, nodes, status)
}

/// Pairs (R, p) to run: every R in the list at every prime where
/// (R + A_1, 2) is realizable.
pub fn elliptic_tasks(script_e: &[AdeType], rdp: &[RdpResult], p: Option<u64>) -> Vec<(AdeType, u64)> {
    script_e
        .iter()
        .flat_map(|r| primes_for(r, rdp).into_iter().map(move |q| (r.clone(), q)))
        .filter(|(_, q)| p.map_or(true, |x| x == *q))
        .collect()
}

/// Runs the tasks in parallel; sorted by p descending, then R.
pub fn run_tasks(tasks: &[(AdeType, u64)], budget: &Budget) -> Result<Vec<EllipticOutcome>> {
    use rayon::prelude::*;
    let mut out = tasks.par_iter().map(|(r, q)| elliptic_classify(r, *q, budget)).collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.p.cmp(&a.p).then_with(|| a.r.cmp(&b.r)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> AdeType {
        s.parse().unwrap()
    }

    #[test]
    fn groups_combine_to_invariant_factors() {
        assert_eq!(combine_groups(&[&[2], &[3, 3]]), vec![3, 6]);
        assert_eq!(combine_groups(&[&[2], &[5]]), vec![10]);
        assert_eq!(combine_groups(&[&[], &[]]), Vec::<u64>::new());
        assert_eq!(combine_groups(&[&[2, 4], &[2]]), vec![2, 2, 4]);
    }

    #[test]
    fn mw_strings() {
        assert_eq!(format_mw(&[3, 6]), "[3,6]");
        assert_eq!(format_mw(&[]), "0");
        assert_eq!(parse_mw("[2, 2]").unwrap(), vec![2, 2]);
        assert!(parse_mw("[6,3]").is_err());
    }

    #[test]
    fn quasi_elliptic_examples() {
        assert!(quasi_elliptic_test(&t("2E8+D4"), 2).unwrap());
        assert!(!quasi_elliptic_test(&t("A17+3A1"), 2).unwrap());
        assert!(quasi_elliptic_test(&t("2E8+2A2"), 3).unwrap());
        assert!(quasi_elliptic_test(&t("10A2"), 5).is_err());
    }

    #[test]
    fn fiber_types() {
        let k = kodaira_annotate(&t("D6"), 2, true).unwrap();
        assert_eq!(k[0].1, vec![Fiber::IStar(2)]);
        let k = kodaira_annotate(&t("E6"), 3, true).unwrap();
        assert_eq!(k[0].1, vec![Fiber::IVStar]);
        let k = kodaira_annotate(&t("A3"), 5, false).unwrap();
        assert_eq!(k[0].1, vec![Fiber::I(4)]);
        assert!(kodaira_annotate(&t("A2"), 2, true).is_err());
    }

    #[test]
    fn two_a10_at_eleven() {
        let o = elliptic_classify(&t("2A10"), 11, &Budget::default()).unwrap();
        assert_eq!(o.status, Status::Complete);
        let rows: Vec<(u32, String)> = o.rows.iter().map(|x| (x.sigma, x.mw_string())).collect();
        assert_eq!(rows, vec![(1, "0".to_string())]);
        assert!(!o.rows[0].quasi_elliptic);
    }

    #[test]
    fn ten_a2_at_three() {
        let o = elliptic_classify(&t("10A2"), 3, &Budget::default()).unwrap();
        let rows: Vec<(u32, usize)> = o.rows.iter().map(|x| (x.sigma, x.mw.len())).collect();
        assert_eq!(rows, (1..=5).map(|s| (s, 5 - s as usize)).collect::<Vec<_>>());
        assert!(o.rows.iter().all(|x| x.quasi_elliptic && torsion_rank_check(x)));
    }
}
