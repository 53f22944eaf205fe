//! Candidates [R, n, p], pruning, and the classification of realizable
//! triples (R, n, σ).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::ade::{gram_of, rho_of_glue, AdeType, Symbol};
use crate::discform::{
    fqm_of, fqm_of_type, is_type_i, orthogonal_complement, overlattice, prime_factors, quotient_of_subgroups, span,
    valuation, FiniteQuadraticModule, FqmElement,
};
use crate::error::Result;
use crate::search::{search, Combo, ComboEntry, GammaMode, LocalModule, Objective, SearchConfig, MU_INF};
use crate::symmetry::{gamma_generators, OrbitEnumerator};

/// All ADE types of rank `r`, sorted.
pub fn ade_types_of_rank(r: u32) -> Vec<AdeType> {
    let mut syms: Vec<Symbol> = (1..=r).map(Symbol::A).collect();
    syms.extend((4..=r).map(Symbol::D));
    syms.extend((6..=8.min(r)).map(Symbol::E));
    let mut out = Vec::new();
    let mut cur: Vec<(Symbol, u32)> = Vec::new();
    fn rec(syms: &[Symbol], rem: u32, cur: &mut Vec<(Symbol, u32)>, out: &mut Vec<AdeType>) {
        if rem == 0 {
            out.push(AdeType::from_parts(cur.iter().copied()));
            return;
        }
        let Some((&s, rest)) = syms.split_first() else { return };
        let mut k = 0;
        while k * s.rank() <= rem {
            if k > 0 {
                cur.push((s, k));
            }
            rec(rest, rem - k * s.rank(), cur, out);
            if k > 0 {
                cur.pop();
            }
            k += 1;
        }
    }
    rec(&syms, r, &mut cur, &mut out);
    out.sort();
    out
}

/// lcm of the levels of the components.
pub fn n_r(r: &AdeType) -> u64 {
    r.parts().iter().fold(1, |acc, (s, _)| acc.lcm(&s.level()))
}

fn is_square(x: u128) -> bool {
    let s = (x as f64).sqrt() as u128;
    (s.saturating_sub(2)..=s + 2).any(|t| t * t == x)
}

/// Pairs (n, p) allowed for R.
pub fn np_set(r: &AdeType) -> BTreeSet<(u64, u64)> {
    let g = r.disc_order();
    let nr = n_r(r);
    let mut out = BTreeSet::new();
    for p in prime_factors(g) {
        let m = nr * p * p;
        for n in (2..=m).step_by(2) {
            if m % (2 * n) != 0 {
                continue;
            }
            let ng = n as u128 * g as u128;
            if ng % (p * p) as u128 != 0 || !is_square(ng) {
                continue;
            }
            out.insert((n, p));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RdpCandidate {
    pub r: AdeType,
    pub n: u64,
    pub p: u64,
}

impl RdpCandidate {
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.r, self.n, self.p)
    }
}

/// All triples [R, n, p] with rank R = 21 and the set of pairs (R, n).
pub fn build_candidates() -> (Vec<RdpCandidate>, Vec<(AdeType, u64)>) {
    let mut triples = Vec::new();
    let mut pairs = BTreeSet::new();
    for r in ade_types_of_rank(21) {
        for (n, p) in np_set(&r) {
            pairs.insert((r.clone(), n));
            triples.push(RdpCandidate { r: r.clone(), n, p });
        }
    }
    (triples, pairs.into_iter().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneReason {
    /// ord_p(n) is at least the exponent of (G_R)_p plus 2.
    HighPower,
    /// The 3-part has no admissible Lagrangian.
    ThreePart,
    /// The 7-part has no admissible Lagrangian.
    SevenPart,
}

/// Exponent of the p-part of G_R.
pub fn p_exponent(r: &AdeType, p: u64) -> u32 {
    fqm_of_type(r).divisors().iter().map(|&d| valuation(d, p)).max().unwrap_or(0)
}

pub fn prune_reason(c: &RdpCandidate) -> Option<PruneReason> {
    let (r, n, p) = (&c.r, c.n, c.p);
    if valuation(n, p) >= p_exponent(r, p) + 2 {
        return Some(PruneReason::HighPower);
    }
    let g = r.disc_order();
    let a = |l| r.multiplicity(Symbol::A(l));
    if p != 3 && g % 3 == 0 {
        let (o3, on) = (valuation(g, 3), valuation(n, 3));
        if o3 == 2 && on == 0 && (a(2) == 2 || a(5) == 2) {
            return Some(PruneReason::ThreePart);
        }
        if o3 == 1 && on == 1 {
            let m = n / 3;
            if (m % 6 == 4 && a(2) == 1) || (m % 6 == 2 && a(5) == 1) {
                return Some(PruneReason::ThreePart);
            }
        }
    }
    if p != 7 && g % 7 == 0 && valuation(g, 7) == 2 && valuation(n, 7) == 0 && a(6) == 2 {
        return Some(PruneReason::SevenPart);
    }
    None
}

#[derive(Clone, Debug)]
pub struct PruneSummary {
    pub kept: Vec<RdpCandidate>,
    pub removed_triples: usize,
    pub removed_pairs: usize,
}

pub fn prune(cands: &[RdpCandidate]) -> PruneSummary {
    let all_pairs: BTreeSet<(&AdeType, u64)> = cands.iter().map(|c| (&c.r, c.n)).collect();
    let kept: Vec<RdpCandidate> = cands.iter().filter(|c| prune_reason(c).is_none()).cloned().collect();
    let kept_pairs: BTreeSet<(&AdeType, u64)> = kept.iter().map(|c| (&c.r, c.n)).collect();
    PruneSummary {
        removed_triples: cands.len() - kept.len(),
        removed_pairs: all_pairs.len() - kept_pairs.len(),
        kept,
    }
}

/// Elements of the subgroup generated by `gens` whose I(n) coordinate
/// vanishes, as elements of G_R.
pub fn s_zero(r: &AdeType, g: &FiniteQuadraticModule, gens: &[FqmElement]) -> Vec<FqmElement> {
    let k = fqm_of_type(r).rank();
    span(g, gens).into_iter().filter(|x| x.0[k] == 0).map(|x| FqmElement(x.0[..k].to_vec())).collect()
}

/// The four conditions for S ⊆ G_{R,n} to give a realizable (R, n, σ) at p,
/// evaluated directly on lattices and discriminant forms.
pub fn check_conditions(r: &AdeType, n: u64, gens: &[FqmElement], p: u64, sigma: u32) -> Result<bool> {
    let g = fqm_of(r, n);
    if gens.iter().any(|x| !g.q_value(x).numer().eq(&0)) {
        return Ok(false);
    }
    let perp = orthogonal_complement(&g, gens);
    let inv = quotient_of_subgroups(&g, &perp, gens);
    if inv.len() != 2 * sigma as usize || inv.iter().any(|d| *d != BigInt::from(p)) {
        return Ok(false);
    }
    let k = g.rank() - 1;
    let elems = span(&g, gens);
    if elems.iter().any(|x| x.0[k] != 0 && x.0[..k].iter().all(|&v| v == 0)) {
        return Ok(false);
    }
    let s0 = s_zero(r, &g, gens);
    if rho_of_glue(r, &s0)? != r.root_count() {
        return Ok(false);
    }
    if p == 2 {
        let lat = gram_of(r, n)?;
        let ov = overlattice(&lat, &g, gens)?;
        if !is_type_i(&ov.gram)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A split of the primes of |G_{R,n}| with p in A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionAB {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl PartitionAB {
    pub fn default_for(r: &AdeType, n: u64, p: u64) -> PartitionAB {
        let ps = prime_factors(r.disc_order() * n);
        PartitionAB { a: vec![p], b: ps.into_iter().filter(|&l| l != p).collect() }
    }

    pub fn all_in_a(r: &AdeType, n: u64) -> PartitionAB {
        PartitionAB { a: prime_factors(r.disc_order() * n), b: vec![] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Complete,
    Undecided,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Telemetry {
    pub nodes: u64,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdpResult {
    pub r: AdeType,
    pub n: u64,
    pub p: u64,
    pub sigmas: BTreeSet<u32>,
    /// One subgroup per σ, as generators in G_{R,n}.
    pub witnesses: BTreeMap<u32, Vec<FqmElement>>,
    pub status: Status,
    pub telemetry: Telemetry,
}

/// Limits for one candidate: search nodes per search, and optionally wall
/// time from the start of the candidate.
#[derive(Clone, Debug)]
pub struct Budget {
    pub nodes: u64,
    pub time: Option<Duration>,
    deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { nodes: 20_000_000, time: None, deadline: None }
    }
}

impl Budget {
    pub fn new(nodes: u64, time: Option<Duration>) -> Budget {
        Budget { nodes, time, deadline: None }
    }

    /// A copy whose clock starts now.
    pub fn started(&self) -> Budget {
        Budget { deadline: self.time.map(|t| Instant::now() + t), ..self.clone() }
    }

    pub fn configure(&self, cfg: &mut SearchConfig) {
        cfg.node_budget = self.nodes;
        cfg.deadline = self.deadline;
    }
}

/// Bookkeeping for the columns of G_{R,n} (or G_R): per source column its
/// module and weights, used to combine elements of different primes.
pub(crate) struct Columns {
    pub mods: Vec<FiniteQuadraticModule>,
    pub is_n: Vec<bool>,
    pub mu: Vec<Vec<u64>>,
    pub offsets: Vec<usize>,
    pub dmu: u64,
}

impl Columns {
    pub fn new(r: &AdeType, n: Option<u64>) -> Columns {
        let dmu = crate::search::mu_scale(r);
        let mut mods = Vec::new();
        let mut mu = Vec::new();
        let mut is_n = Vec::new();
        for s in r.components() {
            let t = crate::ade::coset_vector_table(s);
            mu.push(
                (0..t.fqm.order() as usize)
                    .map(|f| match t.top_norm(f) {
                        Some(top) => (-top * num_rational::Rational64::from_integer(dmu as i64)).to_integer() as u64,
                        None => MU_INF,
                    })
                    .collect(),
            );
            mods.push(t.fqm.clone());
            is_n.push(false);
        }
        if let Some(n) = n {
            let g = crate::discform::fqm_of_i(n);
            mu.push(vec![0; g.order() as usize]);
            mods.push(g);
            is_n.push(true);
        }
        let mut offsets = vec![0];
        for m in &mods {
            offsets.push(offsets.last().unwrap() + m.rank());
        }
        Columns { mods, is_n, mu, offsets, dmu }
    }

    /// Full column indices of a global element.
    pub fn split(&self, x: &FqmElement) -> Vec<usize> {
        self.mods
            .iter()
            .enumerate()
            .map(|(c, m)| m.index_of(&FqmElement(x.0[self.offsets[c]..self.offsets[c + 1]].to_vec())))
            .collect()
    }

    pub fn add(&self, a: &[usize], b: &[usize]) -> Vec<usize> {
        self.mods
            .iter()
            .enumerate()
            .map(|(c, m)| m.index_of(&m.add(&m.element_at(a[c]), &m.element_at(b[c]))))
            .collect()
    }
}

/// A Lagrangian choice at one prime, as split global elements.
#[derive(Clone, Debug)]
pub(crate) struct PrimeChoice {
    pub gens: Vec<FqmElement>,
    pub elements: Vec<Vec<usize>>,
    pub structure: Vec<u64>,
}

/// Primes coupled through a component whose discriminant group has order
/// divisible by both.
pub(crate) fn coupling_classes(r: &AdeType, primes: &[u64]) -> Vec<Vec<u64>> {
    let mut parent: HashMap<u64, u64> = primes.iter().map(|&p| (p, p)).collect();
    fn find(parent: &mut HashMap<u64, u64>, x: u64) -> u64 {
        let y = parent[&x];
        if y == x {
            x
        } else {
            let z = find(parent, y);
            parent.insert(x, z);
            z
        }
    }
    for (s, _) in r.parts() {
        let ps: Vec<u64> = prime_factors(s.disc_order()).into_iter().filter(|l| primes.contains(l)).collect();
        for w in ps.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent.insert(a, b);
        }
    }
    let mut classes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &p in primes {
        let root = find(&mut parent, p);
        classes.entry(root).or_default().push(p);
    }
    classes.into_values().collect()
}

pub(crate) enum ChoiceOutcome {
    Choices(Vec<PrimeChoice>),
    Undecided,
}

/// Lagrangians of the l-part passing the local conditions, one per orbit
/// of the symmetries acting trivially on the other primes.
pub(crate) fn prime_choices(
    r: &AdeType,
    n: Option<u64>,
    l: u64,
    cols: &Columns,
    first_only: bool,
    mode: GammaMode,
    budget: &Budget,
    nodes: &mut u64,
) -> ChoiceOutcome {
    let m = LocalModule::new(r, n, l, mode);
    let mut cfg = SearchConfig::new(Objective::Lagrangian { first_only });
    budget.configure(&mut cfg);
    let out = search(&m, &cfg, None);
    *nodes += out.nodes;
    if !out.complete {
        return ChoiceOutcome::Undecided;
    }
    ChoiceOutcome::Choices(
        out.lagrangians
            .iter()
            .map(|f| PrimeChoice {
                gens: f.gens.iter().map(|&x| m.to_global(x)).collect(),
                elements: f.elements.iter().map(|&x| cols.split(&m.to_global(x))).collect(),
                structure: m.structure(&f.elements),
            })
            .collect(),
    )
}

/// Product of per-prime choices, keeping those whose combined S_0 passes
/// the root condition.  Each result lists the chosen index per prime.
pub(crate) fn joint_choices(cols: &Columns, lists: &[Vec<PrimeChoice>], first_only: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; lists.len()];
    if lists.iter().any(|l| l.is_empty()) {
        return out;
    }
    let target = 2 * cols.dmu;
    loop {
        let elems = combined_zero_elements(cols, lists, &idx);
        let ok = elems.iter().skip(1).all(|x| weight(cols, x) != target);
        if ok {
            out.push(idx.clone());
            if first_only {
                return out;
            }
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return out;
            }
            idx[i] += 1;
            if idx[i] < lists[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn weight(cols: &Columns, x: &[usize]) -> u64 {
    x.iter().enumerate().filter(|(c, _)| !cols.is_n[*c]).fold(0u64, |a, (c, &v)| a.saturating_add(cols.mu[c][v]))
}

/// Elements of the sum of the chosen subgroups with vanishing I(n)
/// coordinate; the zero element comes first.
pub(crate) fn combined_zero_elements(cols: &Columns, lists: &[Vec<PrimeChoice>], idx: &[usize]) -> Vec<Vec<usize>> {
    let zero = vec![0usize; cols.mods.len()];
    let mut acc = vec![zero];
    for (list, &i) in lists.iter().zip(idx) {
        let part: Vec<&Vec<usize>> =
            list[i].elements.iter().filter(|e| e.iter().enumerate().all(|(c, &v)| !cols.is_n[c] || v == 0)).collect();
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for a in &acc {
            for b in &part {
                next.push(cols.add(a, b));
            }
        }
        acc = next;
    }
    acc
}

/// Combos seen from the p-module: weights on columns without p-part and
/// values on the mixed columns.
pub(crate) fn combos_for(
    m: &LocalModule,
    cols: &Columns,
    lists: &[Vec<PrimeChoice>],
    joint: &[Vec<usize>],
    class_of: impl Fn(&[usize]) -> usize,
) -> Vec<Combo> {
    let local_sources: Vec<usize> = m.columns.iter().map(|c| c.source).collect();
    let mixed_sources: Vec<usize> = m.mixed.iter().map(|&c| m.columns[c].source).collect();
    joint
        .iter()
        .map(|idx| {
            let mut entries = Vec::new();
            for x in combined_zero_elements(cols, lists, idx).into_iter().skip(1) {
                let w = x
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| !cols.is_n[*c] && !local_sources.contains(c))
                    .fold(0u64, |a, (c, &v)| a.saturating_add(cols.mu[c][v]));
                if w > 2 * cols.dmu {
                    continue;
                }
                let e = ComboEntry { weight: w, mixed: mixed_sources.iter().map(|&c| x[c] as u16).collect() };
                if !entries.contains(&e) {
                    entries.push(e);
                }
            }
            Combo { class: class_of(idx), entries }
        })
        .collect()
}

/// Algorithm II: the p-part is searched directly, every other prime through
/// its Lagrangians.  Primes in B are settled first so that a candidate with
/// no admissible B-part is rejected before the p-search.
pub fn algorithm_ii(r: &AdeType, n: u64, p: u64, partition: &PartitionAB, budget: &Budget) -> RdpResult {
    let start = Instant::now();
    let budget = &budget.started();
    let mut result = RdpResult {
        r: r.clone(),
        n,
        p,
        sigmas: BTreeSet::new(),
        witnesses: BTreeMap::new(),
        status: Status::Complete,
        telemetry: Telemetry::default(),
    };
    let mut nodes = 0u64;
    let finish = |mut res: RdpResult, nodes: u64, status: Status| {
        res.status = status;
        res.telemetry = Telemetry { nodes, millis: start.elapsed().as_millis() as u64 };
        res
    };
    let primes = prime_factors(r.disc_order() * n);
    if !primes.contains(&p) {
        return finish(result, nodes, Status::Complete);
    }
    let cols = Columns::new(r, Some(n));
    let classes = coupling_classes(r, &primes);
    let mut order: Vec<&Vec<u64>> = classes.iter().collect();
    // classes made only of B-primes go first
    order.sort_by_key(|c| (c.contains(&p), c.iter().any(|l| partition.a.contains(l))));
    let mut extra_gens: Vec<FqmElement> = Vec::new();
    let mut p_lists: Vec<Vec<PrimeChoice>> = Vec::new();
    for class in order {
        let others: Vec<u64> = class.iter().copied().filter(|&l| l != p).collect();
        let coupled_to_p = class.contains(&p);
        let mode = if class.len() > 1 { GammaMode::Local } else { GammaMode::Full };
        let mut lists = Vec::new();
        for &l in &others {
            let first_only = class.len() == 1;
            match prime_choices(r, Some(n), l, &cols, first_only, mode, budget, &mut nodes) {
                ChoiceOutcome::Undecided => return finish(result, nodes, Status::Undecided),
                ChoiceOutcome::Choices(c) => {
                    if c.is_empty() {
                        return finish(result, nodes, Status::Complete);
                    }
                    lists.push(c);
                }
            }
        }
        if coupled_to_p {
            p_lists = lists;
        } else {
            let joint = joint_choices(&cols, &lists, true);
            let Some(idx) = joint.first() else { return finish(result, nodes, Status::Complete) };
            for (list, &i) in lists.iter().zip(idx) {
                extra_gens.extend(list[i].gens.iter().cloned());
            }
        }
    }
    let m = LocalModule::new(r, Some(n), p, GammaMode::Full);
    let mut cfg = SearchConfig::new(Objective::Sigma);
    budget.configure(&mut cfg);
    cfg.type_one = p == 2;
    let (combos, joint) = if p_lists.is_empty() {
        (None, vec![])
    } else {
        let joint = joint_choices(&cols, &p_lists, false);
        let c = combos_for(&m, &cols, &p_lists, &joint, |_| 0);
        (Some(c), joint)
    };
    let out = search(&m, &cfg, combos.as_deref());
    nodes += out.nodes;
    for (key, found) in &out.found {
        let mut gens: Vec<FqmElement> = found.gens.iter().map(|&x| m.to_global(x)).collect();
        if let Some(ci) = found.combo {
            for (list, &i) in p_lists.iter().zip(&joint[ci]) {
                gens.extend(list[i].gens.iter().cloned());
            }
        }
        gens.extend(extra_gens.iter().cloned());
        result.sigmas.insert(key.sigma);
        result.witnesses.insert(key.sigma, gens);
    }
    let status = if out.complete { Status::Complete } else { Status::Undecided };
    finish(result, nodes, status)
}

/// Algorithm I: enumerate the isotropic subgroups of the whole G_{R,n} up
/// to symmetry and test each against every p.  Only feasible for small
/// groups; larger ones come back undecided.
pub fn algorithm_i(r: &AdeType, n: u64, max_order: u64) -> BTreeMap<u64, RdpResult> {
    let start = Instant::now();
    let g = fqm_of(r, n);
    let np: Vec<u64> = np_set(r).into_iter().filter(|&(m, _)| m == n).map(|(_, p)| p).collect();
    let mut out = BTreeMap::new();
    let blank = |p| RdpResult {
        r: r.clone(),
        n,
        p,
        sigmas: BTreeSet::new(),
        witnesses: BTreeMap::new(),
        status: Status::Complete,
        telemetry: Telemetry::default(),
    };
    if g.order() > max_order {
        for p in np {
            let mut res = blank(p);
            res.status = Status::Undecided;
            out.insert(p, res);
        }
        return out;
    }
    let k = g.rank() - 1;
    let gamma = gamma_generators(r, n);
    let en = OrbitEnumerator::new(&g, &gamma, 100_000);
    let allowed = |x: &FqmElement| x.0[..k].iter().any(|&v| v != 0);
    let root_total = r.root_count();
    let constraint = |elems: &[FqmElement]| {
        let s0: Vec<FqmElement> =
            elems.iter().filter(|x| x.0[k] == 0).map(|x| FqmElement(x.0[..k].to_vec())).collect();
        rho_of_glue(r, &s0).map(|v| v == root_total).unwrap_or(false)
    };
    let subgroups = en.enumerate(&allowed, &constraint);
    for &p in &np {
        let mut res = blank(p);
        for set in &subgroups {
            let elems: Vec<FqmElement> = set.iter().map(|&i| en.element(i).clone()).collect();
            let perp = orthogonal_complement(&g, &elems);
            let inv = quotient_of_subgroups(&g, &perp, &elems);
            if inv.is_empty() || inv.iter().any(|d| *d != BigInt::from(p)) || inv.len() % 2 == 1 {
                continue;
            }
            let sigma = inv.len() as u32 / 2;
            if sigma > 10 || res.sigmas.contains(&sigma) {
                continue;
            }
            if p == 2 {
                let ok = gram_of(r, n)
                    .and_then(|lat| overlattice(&lat, &g, &elems))
                    .and_then(|ov| is_type_i(&ov.gram))
                    .unwrap_or(false);
                if !ok {
                    continue;
                }
            }
            res.sigmas.insert(sigma);
            res.witnesses.insert(sigma, minimal_generators(&g, &elems));
        }
        res.telemetry = Telemetry { nodes: subgroups.len() as u64, millis: start.elapsed().as_millis() as u64 };
        out.insert(p, res);
    }
    out
}

/// A small generating set of the subgroup with the given elements.
pub fn minimal_generators(g: &FiniteQuadraticModule, elems: &[FqmElement]) -> Vec<FqmElement> {
    let mut gens: Vec<FqmElement> = Vec::new();
    let mut cur = span(g, &gens);
    let mut sorted: Vec<&FqmElement> = elems.iter().collect();
    sorted.sort_by_key(|x| std::cmp::Reverse(g.element_order(x)));
    for x in sorted {
        if cur.binary_search(x).is_err() {
            gens.push(x.clone());
            cur = span(g, &gens);
        }
    }
    gens
}

/// Kept candidates with the given prime (all primes when `p` is `None`)
/// passing `filter`.
pub fn candidates_in_scope(p: Option<u64>, filter: &dyn Fn(&RdpCandidate) -> bool) -> Vec<RdpCandidate> {
    let (cands, _) = build_candidates();
    prune(&cands).kept.into_iter().filter(|c| p.map_or(true, |q| c.p == q) && filter(c)).collect()
}

/// Runs Algorithm II on each candidate in parallel; the output is sorted
/// by p descending, then R, then n.
pub fn run_candidates(todo: &[RdpCandidate], budget: &Budget) -> Vec<RdpResult> {
    use rayon::prelude::*;
    let mut out: Vec<RdpResult> = todo
        .par_iter()
        .map(|c| algorithm_ii(&c.r, c.n, c.p, &PartitionAB::default_for(&c.r, c.n, c.p), budget))
        .collect();
    sort_results(&mut out);
    out
}

pub fn sort_results(v: &mut [RdpResult]) {
    v.sort_by(|a, b| b.p.cmp(&a.p).then_with(|| a.r.cmp(&b.r)).then(a.n.cmp(&b.n)));
}

/// Classifies every kept candidate in scope.
pub fn classify(p: Option<u64>, filter: &dyn Fn(&RdpCandidate) -> bool, budget: &Budget) -> Vec<RdpResult> {
    run_candidates(&candidates_in_scope(p, filter), budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> AdeType {
        s.parse().unwrap()
    }

    #[test]
    fn types_of_rank_four() {
        let v: Vec<String> = ade_types_of_rank(4).iter().map(|r| r.to_string()).collect();
        assert_eq!(v.len(), 6);
        for s in ["A4", "A3+A1", "2A2", "A2+2A1", "4A1", "D4"] {
            assert!(v.contains(&t(s).to_string()), "{s}");
        }
        assert_eq!(ade_types_of_rank(1), vec![t("A1")]);
    }

    #[test]
    fn levels() {
        assert_eq!(n_r(&t("A3")), 8);
        assert_eq!(n_r(&t("D7")), 8);
        assert_eq!(n_r(&t("E8")), 1);
        assert_eq!(n_r(&t("A2+D6")), 12);
    }

    #[test]
    fn np_examples() {
        assert!(np_set(&t("A18+A3")).contains(&(76, 19)));
        assert!(np_set(&t("21A1")).contains(&(2, 2)));
        assert!(np_set(&t("E8+E7+A6")).contains(&(14, 7)));
    }

    #[test]
    fn coupling() {
        let c = coupling_classes(&t("A14+A5+2A1"), &[2, 3, 5]);
        assert_eq!(c, vec![vec![2, 3, 5]]);
        let c = coupling_classes(&t("A4+A2+15A1"), &[2, 3, 5]);
        assert_eq!(c.len(), 3);
    }
}
