//! Depth-first search for isotropic subgroups of one primary part of
//! G_{R,n}.
//!
//! Elements of the p-part are packed into a `u64`, one bit field per
//! column (a component of R, or the I(n) factor).  Subgroups are grown
//! along chains whose generators have nondecreasing key, and siblings are
//! reduced by the stabilizer of the chain inside the symmetry group.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_integer::Integer;
use num_rational::Rational64;

use crate::ade::{coset_vector_table, AdeType, Symbol};
use crate::discform::{fqm_of_i, mod1, mod2, valuation, FiniteQuadraticModule, FqmElement};
use crate::exactlin::howell_form;
use crate::symmetry::symbol_group_cached;

/// Weight standing in for cosets without vectors of norm -2 or more.
pub const MU_INF: u64 = u64::MAX / 4;

/// Which symmetries are used for orbit reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaMode {
    /// The full projection of the symmetry group to the p-part.
    Full,
    /// Only symmetries acting trivially on every other primary part.
    Local,
}

#[derive(Clone, Debug)]
pub struct Column {
    /// Position among the components of R; the I(n) column comes last.
    pub source: usize,
    pub symbol: Option<Symbol>,
    /// First generator of this column inside `fqm_of(R, n)`.
    pub gen_offset: usize,
    pub size: usize,
    pub offset: u32,
    pub width: u32,
    /// The column group has no part outside p.
    pub pure: bool,
    pub block: usize,
    pub values: Vec<FqmElement>,
    pub full_index: Vec<usize>,
    pub add: Vec<u16>,
    pub neg: Vec<u16>,
    pub q: Vec<i64>,
    pub b: Vec<i64>,
    pub key: Vec<u64>,
    pub mu: Vec<u64>,
    /// Symmetries of this column as permutations of values; entry 0 is the
    /// identity.
    pub group: Vec<Vec<u16>>,
    pub compose: Vec<Vec<u8>>,
    pub full_order: usize,
    pub full_add: Vec<u16>,
    pub full_mu: Vec<u64>,
}

impl Column {
    fn mask(&self) -> u64 {
        (1u64 << self.width) - 1
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Coord {
    pub shift: u32,
    pub width: u32,
    pub exp: u32,
}

/// The p-primary part of G_{R,n} (or of G_R when `n` is absent).
#[derive(Clone, Debug)]
pub struct LocalModule {
    pub prime: u64,
    pub columns: Vec<Column>,
    pub n_column: Option<usize>,
    /// Local columns whose group also has a part prime to p.
    pub mixed: Vec<usize>,
    pub coords: Vec<Coord>,
    /// log_p of the order.
    pub log_order: u32,
    pub max_exp: u32,
    pub elementary: bool,
    pub binary: bool,
    pub dq: i64,
    pub dmu: u64,
    pub global_len: usize,
    pub n: Option<u64>,
    bin: BinaryMasks,
}

#[derive(Clone, Debug, Default)]
struct BinaryMasks {
    diag: u64,
    klo: u64,
    q1: u64,
    q2: u64,
    q3: u64,
}

fn width_for(size: usize) -> u32 {
    if size <= 1 {
        0
    } else {
        usize::BITS - (size - 1).leading_zeros()
    }
}

fn scaled(r: Rational64, d: i64, m: i64) -> i64 {
    let v = r * Rational64::from_integer(d);
    assert!(v.is_integer(), "denominator does not divide the scale");
    v.to_integer().rem_euclid(m * d)
}

/// lcm of the discriminant orders of the components; all coset norms are
/// multiples of `1/dmu`.
pub fn mu_scale(r: &AdeType) -> u64 {
    r.components().iter().fold(1u64, |acc, s| acc.lcm(&s.disc_order()))
}

impl LocalModule {
    pub fn new(r: &AdeType, n: Option<u64>, p: u64, mode: GammaMode) -> LocalModule {
        let dmu = mu_scale(r);
        let mut sources: Vec<(Option<Symbol>, FiniteQuadraticModule)> =
            r.components().into_iter().map(|s| (Some(s), coset_vector_table(s).fqm.clone())).collect();
        if let Some(n) = n {
            sources.push((None, fqm_of_i(n)));
        }
        let mut columns = Vec::new();
        let mut coords = Vec::new();
        let mut gen_offset = 0;
        let mut offset = 0u32;
        let mut block_ids: HashMap<Symbol, usize> = HashMap::new();
        let mut next_block = 0usize;
        let mut n_column = None;
        for (source, (sym, g)) in sources.iter().enumerate() {
            let this_offset = gen_offset;
            gen_offset += g.divisors().len();
            let mut cs = Vec::new();
            for (i, &d) in g.divisors().iter().enumerate() {
                let e = valuation(d, p);
                if e > 0 {
                    cs.push((i, e, d / p.pow(e)));
                }
            }
            let size: usize = cs.iter().map(|&(_, e, _)| p.pow(e) as usize).product();
            if size == 1 {
                continue;
            }
            let binary_col = cs.iter().all(|&(_, e, _)| p == 2 && e == 1);
            assert!(cs.len() == 1 || binary_col, "non-cyclic column part must be 2-elementary");
            let width = if binary_col { cs.len() as u32 } else { width_for(size) };
            let mut sh = offset;
            for &(_, e, _) in &cs {
                let w = if binary_col { 1 } else { width };
                coords.push(Coord { shift: sh, width: w, exp: e });
                sh += w;
            }
            let values: Vec<FqmElement> = (0..size)
                .map(|mut idx| {
                    let mut el = g.zero();
                    for &(i, e, unit) in &cs {
                        let m = p.pow(e) as usize;
                        el.0[i] = (idx % m) as u64 * unit % g.divisors()[i];
                        idx /= m;
                    }
                    el
                })
                .collect();
            let full_index: Vec<usize> = values.iter().map(|v| g.index_of(v)).collect();
            let full_order = g.order() as usize;
            let mut local_of = vec![u16::MAX; full_order];
            for (v, &f) in full_index.iter().enumerate() {
                local_of[f] = v as u16;
            }
            let mut add = vec![0u16; size * size];
            for u in 0..size {
                for v in 0..size {
                    add[u * size + v] = local_of[g.index_of(&g.add(&values[u], &values[v]))];
                }
            }
            let neg = (0..size).map(|v| local_of[g.index_of(&g.neg(&values[v]))]).collect();
            let (key, mu, full_mu): (Vec<u64>, Vec<u64>, Vec<u64>) = match sym {
                Some(s) => {
                    let t = coset_vector_table(*s);
                    let full_mu: Vec<u64> = (0..full_order)
                        .map(|f| match t.top_norm(f) {
                            Some(top) => {
                                let v = -top * Rational64::from_integer(dmu as i64);
                                v.to_integer() as u64
                            }
                            None => MU_INF,
                        })
                        .collect();
                    let mu: Vec<u64> = full_index.iter().map(|&f| full_mu[f]).collect();
                    let key = mu.iter().map(|&m| if m == MU_INF { 3 * dmu } else { m }).collect();
                    (key, mu, full_mu)
                }
                None => {
                    let nn = g.divisors()[0];
                    let key = values.iter().map(|v| dmu * v.0[0].min(nn - v.0[0])).collect();
                    (key, vec![0; size], vec![0; full_order])
                }
            };
            let mut full_add = vec![];
            let pure = size == full_order;
            if !pure {
                full_add = vec![0u16; full_order * full_order];
                for a in 0..full_order {
                    for b in 0..full_order {
                        let s = g.add(&g.element_at(a), &g.element_at(b));
                        full_add[a * full_order + b] = g.index_of(&s) as u16;
                    }
                }
            }
            let complement: Vec<usize> = (0..full_order)
                .filter(|&f| {
                    let o = g.element_order(&g.element_at(f));
                    o % p != 0 && o > 1
                })
                .collect();
            let full_perms: Vec<Vec<usize>> = match sym {
                Some(s) => symbol_group_cached(*s).as_ref().clone(),
                None => {
                    let id: Vec<usize> = (0..full_order).collect();
                    let ng: Vec<usize> =
                        (0..full_order).map(|f| g.index_of(&g.neg(&g.element_at(f)))).collect();
                    vec![id, ng]
                }
            };
            let mut group: Vec<Vec<u16>> = vec![(0..size as u16).collect()];
            for h in &full_perms {
                if mode == GammaMode::Local && complement.iter().any(|&f| h[f] != f) {
                    continue;
                }
                let perm: Vec<u16> = full_index.iter().map(|&f| local_of[h[f]]).collect();
                assert!(perm.iter().all(|&v| v != u16::MAX));
                if !group.contains(&perm) {
                    group.push(perm);
                }
            }
            assert!(group.len() <= 64, "column symmetry group too large");
            let compose: Vec<Vec<u8>> = (0..group.len())
                .map(|i| {
                    (0..group.len())
                        .map(|j| {
                            let c: Vec<u16> = group[j].iter().map(|&v| group[i][v as usize]).collect();
                            group.iter().position(|h| *h == c).expect("column symmetries form a group") as u8
                        })
                        .collect()
                })
                .collect();
            let block = match sym {
                Some(s) if pure || mode == GammaMode::Full => *block_ids.entry(*s).or_insert_with(|| {
                    next_block += 1;
                    next_block - 1
                }),
                _ => {
                    next_block += 1;
                    next_block - 1
                }
            };
            let mut q = vec![Rational64::from_integer(0); size];
            let mut b = vec![Rational64::from_integer(0); size * size];
            for u in 0..size {
                q[u] = mod2(g.q_value(&values[u]));
                for v in 0..size {
                    b[u * size + v] = mod1(g.b_value(&values[u], &values[v]));
                }
            }
            if sym.is_none() {
                n_column = Some(columns.len());
            }
            columns.push((
                Column {
                    source,
                    symbol: *sym,
                    gen_offset: this_offset,
                    size,
                    offset,
                    width,
                    pure,
                    block,
                    values,
                    full_index,
                    add,
                    neg,
                    q: vec![],
                    b: vec![],
                    key,
                    mu,
                    group,
                    compose,
                    full_order,
                    full_add,
                    full_mu,
                },
                q,
                b,
            ));
            offset += width;
        }
        assert!(offset <= 64, "packed width exceeds 64 bits");
        let mut dq = 1i64;
        for (_, q, b) in &columns {
            for r in q.iter().chain(b.iter()) {
                dq = dq.lcm(r.denom());
            }
        }
        let columns: Vec<Column> = columns
            .into_iter()
            .map(|(mut c, q, b)| {
                c.q = q.iter().map(|&r| scaled(r, dq, 2)).collect();
                c.b = b.iter().map(|&r| scaled(r, dq, 1)).collect();
                c
            })
            .collect();
        let log_order = coords.iter().map(|c| c.exp).sum();
        let max_exp = coords.iter().map(|c| c.exp).max().unwrap_or(0);
        let elementary = max_exp <= 1;
        let binary = p == 2 && elementary;
        let mixed = (0..columns.len()).filter(|&c| !columns[c].pure && columns[c].symbol.is_some()).collect();
        let mut m = LocalModule {
            prime: p,
            columns,
            n_column,
            mixed,
            coords,
            log_order,
            max_exp,
            elementary,
            binary,
            dq,
            dmu,
            global_len: gen_offset,
            n,
            bin: BinaryMasks::default(),
        };
        if binary {
            m.bin = m.binary_masks();
        }
        m
    }

    fn binary_masks(&self) -> BinaryMasks {
        assert_eq!(self.dq, 2);
        let mut bm = BinaryMasks::default();
        for c in &self.columns {
            for bit in 0..c.width {
                let v = 1usize << bit;
                if c.b[v * c.size + v] != 0 {
                    bm.diag |= 1 << (c.offset + bit);
                }
                match c.q[v] {
                    0 => {}
                    1 => bm.q1 |= 1 << (c.offset + bit),
                    2 => bm.q2 |= 1 << (c.offset + bit),
                    _ => bm.q3 |= 1 << (c.offset + bit),
                }
            }
            if c.width == 2 && c.b[c.size + 2] != 0 {
                bm.klo |= 1 << c.offset;
            }
        }
        bm
    }

    pub fn order(&self) -> u64 {
        self.prime.pow(self.log_order)
    }

    #[inline]
    pub fn get(&self, x: u64, c: usize) -> usize {
        let col = &self.columns[c];
        ((x >> col.offset) & col.mask()) as usize
    }

    pub fn pack(&self, values: &[usize]) -> u64 {
        self.columns.iter().zip(values).fold(0, |acc, (c, &v)| acc | (v as u64) << c.offset)
    }

    #[inline]
    pub fn add(&self, x: u64, y: u64) -> u64 {
        if self.binary {
            return x ^ y;
        }
        let mut out = 0;
        for c in &self.columns {
            let m = c.mask();
            let u = ((x >> c.offset) & m) as usize;
            let v = ((y >> c.offset) & m) as usize;
            out |= (c.add[u * c.size + v] as u64) << c.offset;
        }
        out
    }

    pub fn neg(&self, x: u64) -> u64 {
        if self.binary {
            return x;
        }
        let mut out = 0;
        for c in &self.columns {
            let u = ((x >> c.offset) & c.mask()) as usize;
            out |= (c.neg[u] as u64) << c.offset;
        }
        out
    }

    pub fn scale(&self, x: u64, k: u64) -> u64 {
        let mut acc = 0;
        for _ in 0..k {
            acc = self.add(acc, x);
        }
        acc
    }

    /// q(x) scaled by `dq`, modulo `2 dq`.
    #[inline]
    pub fn q(&self, x: u64) -> i64 {
        if self.binary {
            let bm = &self.bin;
            let s = (x & bm.q1).count_ones()
                + 2 * (x & bm.q2).count_ones()
                + 3 * (x & bm.q3).count_ones()
                + 2 * (x & (x >> 1) & bm.klo).count_ones();
            return (s % 4) as i64;
        }
        self.q_generic(x)
    }

    pub fn q_generic(&self, x: u64) -> i64 {
        let s: i64 = self.columns.iter().map(|c| c.q[((x >> c.offset) & c.mask()) as usize]).sum();
        s.rem_euclid(2 * self.dq)
    }

    /// b(x, y) scaled by `dq`, modulo `dq`.
    #[inline]
    pub fn b(&self, x: u64, y: u64) -> i64 {
        if self.binary {
            let bm = &self.bin;
            let s = (x & y & bm.diag).count_ones()
                + (x & (y >> 1) & bm.klo).count_ones()
                + ((x >> 1) & y & bm.klo).count_ones();
            return (s % 2) as i64;
        }
        self.b_generic(x, y)
    }

    pub fn b_generic(&self, x: u64, y: u64) -> i64 {
        let s: i64 = self
            .columns
            .iter()
            .map(|c| {
                let m = c.mask();
                c.b[((x >> c.offset) & m) as usize * c.size + ((y >> c.offset) & m) as usize]
            })
            .sum();
        s.rem_euclid(self.dq)
    }

    pub fn key(&self, x: u64) -> u64 {
        self.columns.iter().map(|c| c.key[((x >> c.offset) & c.mask()) as usize]).sum()
    }

    pub fn n_value(&self, x: u64) -> usize {
        self.n_column.map_or(0, |c| self.get(x, c))
    }

    /// Sum of coset weights over the component columns, skipping `skip`.
    fn weight(&self, x: u64, skip_mixed: bool) -> u64 {
        let mut w = 0u64;
        for (i, c) in self.columns.iter().enumerate() {
            if c.symbol.is_none() || (skip_mixed && !c.pure) {
                continue;
            }
            let _ = i;
            w = w.saturating_add(c.mu[((x >> c.offset) & c.mask()) as usize]);
        }
        w
    }

    /// Isotropic, meets I(n) trivially, and passes the root condition when
    /// it has no I(n) part.
    pub fn is_ok(&self, x: u64) -> bool {
        if x == 0 || self.q(x) != 0 {
            return false;
        }
        if let Some(nc) = self.n_column {
            let col = &self.columns[nc];
            if x & !(col.mask() << col.offset) == 0 {
                return false;
            }
        }
        self.n_value(x) != 0 || self.weight(x, false) != 2 * self.dmu
    }

    /// Calls `f` on every element of the module.
    pub fn for_each_element(&self, mut f: impl FnMut(u64)) {
        let mut vals = vec![0usize; self.columns.len()];
        loop {
            f(self.pack(&vals));
            let mut i = 0;
            loop {
                if i == vals.len() {
                    return;
                }
                vals[i] += 1;
                if vals[i] < self.columns[i].size {
                    break;
                }
                vals[i] = 0;
                i += 1;
            }
        }
    }

    /// Characteristic element c with b(x, x) = b(x, c), for a 2-elementary
    /// module.
    pub fn characteristic(&self) -> u64 {
        assert!(self.binary);
        let k = self.coords.len();
        let unit = |i: usize| 1u64 << self.coords[i].shift;
        // rows of the augmented system over F_2
        let mut rows: Vec<(u64, bool)> = (0..k)
            .map(|i| {
                let mut r = 0u64;
                for j in 0..k {
                    if self.b(unit(i), unit(j)) != 0 {
                        r |= 1 << j;
                    }
                }
                (r, self.b(unit(i), unit(i)) != 0)
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..k {
            let Some(pi) = (rank..k).find(|&i| rows[i].0 >> col & 1 == 1) else { continue };
            rows.swap(rank, pi);
            let pr = rows[rank];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != rank && r.0 >> col & 1 == 1 {
                    r.0 ^= pr.0;
                    r.1 ^= pr.1;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        assert_eq!(rank, k, "bilinear form is degenerate");
        let mut c = 0;
        for (i, &col) in pivots.iter().enumerate() {
            if rows[i].1 {
                c |= unit(col);
            }
        }
        c
    }

    fn embed(&self, x: u64) -> Vec<u64> {
        self.coords
            .iter()
            .map(|c| ((x >> c.shift) & ((1 << c.width) - 1)) * self.prime.pow(self.max_exp - c.exp))
            .collect()
    }

    fn unembed(&self, v: &[u64]) -> u64 {
        self.coords
            .iter()
            .zip(v)
            .fold(0, |acc, (c, &a)| acc | (a / self.prime.pow(self.max_exp - c.exp)) << c.shift)
    }

    /// The element of `fqm_of(R, n)` (or of G_R) represented by `x`.
    pub fn to_global(&self, x: u64) -> FqmElement {
        let mut out = vec![0; self.global_len];
        for (i, c) in self.columns.iter().enumerate() {
            let v = &c.values[self.get(x, i)];
            out[c.gen_offset..c.gen_offset + v.0.len()].copy_from_slice(&v.0);
        }
        FqmElement(out)
    }

    /// Invariant factors (descending) of the p-group with elements `elems`.
    pub fn structure(&self, elems: &[u64]) -> Vec<u64> {
        let p = self.prime;
        let mut counts = vec![1u64];
        let mut k = 1;
        loop {
            let pk = p.pow(k);
            let c = elems.iter().filter(|&&x| self.scale(x, pk) == 0).count() as u64;
            counts.push(c);
            if c == elems.len() as u64 {
                break;
            }
            k += 1;
        }
        // number of cyclic factors of order >= p^j is log_p(c_j / c_{j-1})
        let mut ge = Vec::new();
        for j in 1..counts.len() {
            let mut r = counts[j] / counts[j - 1];
            let mut e = 0;
            while r > 1 {
                r /= p;
                e += 1;
            }
            ge.push(e);
        }
        let mut out = Vec::new();
        for j in (0..ge.len()).rev() {
            let next = ge.get(j + 1).copied().unwrap_or(0);
            for _ in 0..ge[j] - next {
                out.push(p.pow(j as u32 + 1));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Basis {
    Binary(Vec<(u64, u64)>),
    Howell { rows: Vec<Vec<u64>>, pivots: Vec<usize> },
}

impl Basis {
    fn empty(m: &LocalModule) -> Basis {
        if m.binary {
            Basis::Binary(vec![])
        } else {
            Basis::Howell { rows: vec![], pivots: vec![] }
        }
    }

    fn reduce(&self, m: &LocalModule, x: u64) -> u64 {
        match self {
            Basis::Binary(rows) => {
                let mut x = x;
                for &(pm, v) in rows {
                    if x & pm != 0 {
                        x ^= v;
                    }
                }
                x
            }
            Basis::Howell { rows, pivots } => {
                if rows.is_empty() {
                    return x;
                }
                let md = m.prime.pow(m.max_exp);
                let mut t = m.embed(x);
                for (row, &c) in rows.iter().zip(pivots) {
                    let f = t[c] / row[c];
                    if f != 0 {
                        for (a, r) in t.iter_mut().zip(row) {
                            *a = (*a + md - (r * f) % md) % md;
                        }
                    }
                }
                m.unembed(&t)
            }
        }
    }

    fn insert(&self, m: &LocalModule, g: u64) -> Basis {
        match self {
            Basis::Binary(rows) => {
                let y = self.reduce(m, g);
                assert!(y != 0);
                let pm = y & y.wrapping_neg();
                let mut rows: Vec<(u64, u64)> =
                    rows.iter().map(|&(p, v)| (p, if v & pm != 0 { v ^ y } else { v })).collect();
                rows.push((pm, y));
                rows.sort_unstable();
                Basis::Binary(rows)
            }
            Basis::Howell { rows, .. } => {
                let mut all = rows.clone();
                all.push(m.embed(g));
                let h = howell_form(&all, m.prime.pow(m.max_exp));
                Basis::Howell { rows: h.rows, pivots: h.pivots }
            }
        }
    }

    fn canonical(&self, m: &LocalModule) -> Vec<u64> {
        match self {
            Basis::Binary(rows) => rows.iter().map(|r| r.1).collect(),
            Basis::Howell { rows, .. } => rows.iter().map(|r| m.unembed(r)).collect(),
        }
    }
}

/// One element of a fixed choice of subgroups at the other primes, seen
/// from the p-part: its weight over columns without p-part and its values
/// (as indices into the full column group) on the mixed columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComboEntry {
    pub weight: u64,
    pub mixed: Vec<u16>,
}

/// A fixed choice of subgroups at the other primes.
#[derive(Clone, Debug)]
pub struct Combo {
    pub class: usize,
    pub entries: Vec<ComboEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Record every realizable σ.
    Sigma,
    /// Record every (σ, isomorphism type of the subgroup, combo class).
    Structures,
    /// Lagrangian subgroups: one per symmetry orbit, or only the first.
    Lagrangian { first_only: bool },
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub objective: Objective,
    pub node_budget: u64,
    /// Give up (incomplete) once this instant has passed.
    pub deadline: Option<std::time::Instant>,
    pub sigma_min: u32,
    pub sigma_max: u32,
    /// Require S^⊥/S of type I (only meaningful at p = 2).
    pub type_one: bool,
}

impl SearchConfig {
    pub fn new(objective: Objective) -> SearchConfig {
        SearchConfig { objective, node_budget: 20_000_000, deadline: None, sigma_min: 1, sigma_max: 10, type_one: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FoundKey {
    pub sigma: u32,
    pub structure: Vec<u64>,
    pub class: usize,
}

#[derive(Clone, Debug)]
pub struct Found {
    pub gens: Vec<u64>,
    pub elements: Vec<u64>,
    pub combo: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct SearchOutcome {
    pub complete: bool,
    pub nodes: u64,
    pub found: BTreeMap<FoundKey, Found>,
    pub lagrangians: Vec<Found>,
}

#[derive(Clone, Copy, Debug)]
struct ColState {
    class: u32,
    norm: u8,
    stab: u64,
}

struct Node {
    gens: Vec<u64>,
    elems: Vec<u64>,
    basis: Basis,
    log_order: u32,
    cands: Vec<(u64, u64)>,
    perp: Option<Vec<u64>>,
    cols: Vec<ColState>,
    alive: Vec<bool>,
}

struct Ctx<'a> {
    m: &'a LocalModule,
    cfg: &'a SearchConfig,
    combos: Option<&'a [Combo]>,
    nodes: u64,
    aborted: bool,
    done: bool,
    seen: HashMap<Vec<u64>, u64>,
    out: SearchOutcome,
}

/// Searches isotropic subgroups S of the p-part with S ∩ G_n = 0 and the
/// root condition, reporting according to `cfg.objective`.  `combos`
/// lists the admissible choices at the other primes when mixed columns
/// couple them to p.
pub fn search(m: &LocalModule, cfg: &SearchConfig, combos: Option<&[Combo]>) -> SearchOutcome {
    let mut ctx = Ctx {
        m,
        cfg,
        combos,
        nodes: 0,
        aborted: false,
        done: false,
        seen: HashMap::new(),
        out: SearchOutcome::default(),
    };
    let lagrangian = matches!(cfg.objective, Objective::Lagrangian { .. });
    if lagrangian && m.log_order % 2 == 1 {
        ctx.out.complete = true;
        return ctx.out;
    }
    let need_perp = !lagrangian && !m.elementary;
    let mut cands = Vec::new();
    let mut perp = need_perp.then(Vec::new);
    m.for_each_element(|x| {
        if let Some(pl) = perp.as_mut() {
            pl.push(x);
        }
        if m.is_ok(x) {
            cands.push((m.key(x), x));
        }
    });
    let ncombo = combos.map_or(0, |c| c.len());
    let cols: Vec<ColState> = m
        .columns
        .iter()
        .map(|c| ColState { class: c.block as u32, norm: 0, stab: (1u64 << c.group.len()) - 1 })
        .collect();
    let mut root = Node {
        gens: vec![],
        elems: vec![0],
        basis: Basis::empty(m),
        log_order: 0,
        cands,
        perp,
        cols,
        alive: vec![true; ncombo],
    };
    if cfg.type_one && m.prime == 2 && m.elementary && !lagrangian {
        let c = m.characteristic();
        if c != 0 {
            if !m.is_ok(c) {
                ctx.out.complete = true;
                return ctx.out;
            }
            if let Some(cb) = combos {
                for (i, a) in root.alive.iter_mut().enumerate() {
                    *a = m.n_value(c) != 0 || survives(m, c, &cb[i]);
                }
            }
            root.cands.retain(|&(_, x)| x != c && m.b(x, c) == 0);
            root.basis = root.basis.insert(m, c);
            root.elems = vec![0, c];
            root.gens = vec![c];
            root.log_order = 1;
        }
    }
    if ncombo == 0 && combos.is_some() {
        ctx.out.complete = true;
        return ctx.out;
    }
    if root.alive.iter().any(|&a| a) || combos.is_none() {
        ctx.dfs(root);
    }
    ctx.out.complete = !ctx.aborted;
    ctx.out.nodes = ctx.nodes;
    ctx.out
}

fn survives(m: &LocalModule, x: u64, combo: &Combo) -> bool {
    let wp = m.weight(x, true);
    let target = 2 * m.dmu;
    combo.entries.iter().all(|e| {
        let mut tot = wp.saturating_add(e.weight);
        for (k, &c) in m.mixed.iter().enumerate() {
            let col = &m.columns[c];
            let fi = col.full_index[m.get(x, c)];
            let s = col.full_add[fi * col.full_order + e.mixed[k] as usize];
            tot = tot.saturating_add(col.full_mu[s as usize]);
        }
        tot != target
    })
}

impl Ctx<'_> {
    fn sigma_of(&self, log_order: u32) -> Option<u32> {
        let m = self.m.log_order;
        if 2 * log_order > m || (m - 2 * log_order) % 2 == 1 {
            return None;
        }
        let s = (m - 2 * log_order) / 2;
        (self.cfg.sigma_min..=self.cfg.sigma_max).contains(&s).then_some(s)
    }

    fn alive_classes(&self, node: &Node) -> Vec<(usize, usize)> {
        match self.combos {
            None => vec![(0, usize::MAX)],
            Some(cb) => {
                let mut seen = BTreeMap::new();
                for (i, a) in node.alive.iter().enumerate() {
                    if *a {
                        seen.entry(cb[i].class).or_insert(i);
                    }
                }
                seen.into_iter().collect()
            }
        }
    }

    fn quotient_ok(&self, node: &Node) -> bool {
        let m = self.m;
        if let Some(perp) = &node.perp {
            for &y in perp {
                if node.basis.reduce(m, m.scale(y, m.prime)) != 0 {
                    return false;
                }
                if self.cfg.type_one && m.prime == 2 && m.q(y) % m.dq != 0 {
                    return false;
                }
            }
        }
        true
    }

    fn record(&mut self, node: &Node) {
        let m = self.m;
        match self.cfg.objective {
            Objective::Lagrangian { first_only } => {
                if 2 * node.log_order == m.log_order {
                    self.out.lagrangians.push(Found {
                        gens: node.gens.clone(),
                        elements: node.elems.clone(),
                        combo: None,
                    });
                    if first_only {
                        self.done = true;
                    }
                }
            }
            Objective::Sigma | Objective::Structures => {
                let Some(sigma) = self.sigma_of(node.log_order) else { return };
                let classes = self.alive_classes(node);
                if classes.is_empty() || !self.quotient_ok(node) {
                    return;
                }
                let structure = if self.cfg.objective == Objective::Structures {
                    m.structure(&node.elems)
                } else {
                    vec![]
                };
                let classes = if self.cfg.objective == Objective::Sigma { &classes[..1] } else { &classes[..] };
                for &(class, idx) in classes {
                    let class = if self.cfg.objective == Objective::Sigma { 0 } else { class };
                    let key = FoundKey { sigma, structure: structure.clone(), class };
                    self.out.found.entry(key).or_insert_with(|| Found {
                        gens: node.gens.clone(),
                        elements: node.elems.clone(),
                        combo: (idx != usize::MAX).then_some(idx),
                    });
                }
            }
        }
    }

    /// Whether some subgroup of order p^t with t in `lo..=hi` could still
    /// add something new.
    fn worth_exploring(&self, node: &Node, lo: u32, hi: u32) -> bool {
        let m = self.m;
        match self.cfg.objective {
            Objective::Lagrangian { .. } => (lo..=hi).contains(&(m.log_order / 2)),
            Objective::Sigma => (lo..=hi)
                .filter_map(|t| self.sigma_of(t))
                .any(|s| !self.out.found.contains_key(&FoundKey { sigma: s, structure: vec![], class: 0 })),
            Objective::Structures => {
                let sig: Vec<(u32, u32)> = (lo..=hi).filter_map(|t| self.sigma_of(t).map(|s| (t, s))).collect();
                if sig.is_empty() {
                    return false;
                }
                if !m.elementary {
                    return true;
                }
                let classes = self.alive_classes(node);
                sig.iter().any(|&(t, s)| {
                    classes.iter().any(|&(class, _)| {
                        let key = FoundKey { sigma: s, structure: vec![m.prime; t as usize], class };
                        !self.out.found.contains_key(&key)
                    })
                })
            }
        }
    }

    fn label(&self, x: u64, cols: &[ColState]) -> Vec<u64> {
        let m = self.m;
        let mut l: Vec<u64> = cols
            .iter()
            .enumerate()
            .map(|(c, st)| {
                let col = &m.columns[c];
                let v = m.get(x, c);
                let u = col.group[st.norm as usize][v];
                let mut best = u;
                let mut s = st.stab;
                while s != 0 {
                    let i = s.trailing_zeros() as usize;
                    s &= s - 1;
                    best = best.min(col.group[i][u as usize]);
                }
                (st.class as u64) << 32 | best as u64
            })
            .collect();
        l.sort_unstable();
        l
    }

    fn child_cols(&self, g: u64, cols: &[ColState]) -> Vec<ColState> {
        let m = self.m;
        let mut classes: HashMap<(u32, u16), u32> = HashMap::new();
        cols.iter()
            .enumerate()
            .map(|(c, st)| {
                let col = &m.columns[c];
                let u = col.group[st.norm as usize][m.get(g, c)];
                let mut best = (u, 0usize);
                let mut s = st.stab;
                while s != 0 {
                    let i = s.trailing_zeros() as usize;
                    s &= s - 1;
                    let w = col.group[i][u as usize];
                    if w < best.0 {
                        best = (w, i);
                    }
                }
                let (ustar, si) = best;
                let norm = col.compose[si][st.norm as usize];
                let mut stab = 0u64;
                let mut s = st.stab;
                while s != 0 {
                    let i = s.trailing_zeros() as usize;
                    s &= s - 1;
                    if col.group[i][ustar as usize] == ustar {
                        stab |= 1 << i;
                    }
                }
                let n = classes.len() as u32;
                let class = *classes.entry((st.class, ustar)).or_insert(n);
                ColState { class, norm, stab }
            })
            .collect()
    }

    fn dfs(&mut self, node: Node) {
        if self.aborted || self.done {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            self.aborted = true;
            return;
        }
        if self.nodes % 512 == 0 && self.cfg.deadline.is_some_and(|d| std::time::Instant::now() > d) {
            self.aborted = true;
            return;
        }
        self.record(&node);
        if self.done || node.cands.is_empty() {
            return;
        }
        if let Objective::Lagrangian { .. } = self.cfg.objective {
            if 2 * node.log_order >= self.m.log_order {
                return;
            }
        }
        let m = self.m;
        let p = m.prime;
        let size = node.elems.len() as u32;
        let reps: Vec<u64> = node.cands.iter().map(|&(_, x)| node.basis.reduce(m, x)).collect();
        let mut cos: HashMap<u64, (u32, u64)> = HashMap::new();
        for (i, &(k, _)) in node.cands.iter().enumerate() {
            let e = cos.entry(reps[i]).or_insert((0, u64::MAX));
            e.0 += 1;
            e.1 = e.1.min(k);
        }
        let mut full: Vec<u64> = cos.iter().filter(|(_, v)| v.0 == size).map(|(&r, _)| r).collect();
        full.sort_unstable();
        let nfull = full.len() as u64;
        let mut jmax = 0;
        while p.pow(jmax + 1) <= nfull + 1 {
            jmax += 1;
        }
        if jmax == 0 || !self.worth_exploring(&node, node.log_order + 1, node.log_order + jmax) {
            return;
        }
        // candidate extensions T = <S, r>
        struct Child {
            kappa: u64,
            newreps: Vec<u64>,
            genreps: Vec<u64>,
            order: u64,
            best: Option<(Vec<u64>, u64)>,
        }
        let mut children: Vec<Child> = Vec::new();
        let mut tids: HashSet<u64> = HashSet::new();
        for &r in &full {
            let (newreps, genreps, order, tid) = if m.binary {
                (vec![r], vec![r], 2, r)
            } else {
                let mut mults = vec![r];
                loop {
                    let next = node.basis.reduce(m, m.add(*mults.last().unwrap(), r));
                    if next == 0 {
                        break;
                    }
                    mults.push(next);
                }
                let o = mults.len() as u64 + 1;
                if !mults.iter().all(|y| cos.get(y).is_some_and(|v| v.0 == size)) {
                    continue;
                }
                let genreps: Vec<u64> =
                    (1..o).filter(|k| k.gcd(&o) == 1).map(|k| mults[k as usize - 1]).collect();
                let tid = *genreps.iter().min().unwrap();
                (mults, genreps, o, tid)
            };
            if !tids.insert(tid) {
                continue;
            }
            // the chain reaches T through a generator of minimal key only
            let kappa = genreps.iter().map(|y| cos[y].1).min().unwrap();
            if newreps.iter().any(|y| cos[y].1 < kappa) {
                continue;
            }
            children.push(Child { kappa, newreps, genreps, order, best: None });
        }
        let mut owner: HashMap<u64, Vec<usize>> = HashMap::new();
        for (ci, ch) in children.iter().enumerate() {
            for &y in &ch.genreps {
                owner.entry(y).or_default().push(ci);
            }
        }
        for (i, &(k, x)) in node.cands.iter().enumerate() {
            let Some(list) = owner.get(&reps[i]) else { continue };
            for &ci in list {
                if children[ci].kappa != k {
                    continue;
                }
                let l = self.label(x, &node.cols);
                let better = match &children[ci].best {
                    None => true,
                    Some((bl, bx)) => (&l, x) < (bl, *bx),
                };
                if better {
                    children[ci].best = Some((l, x));
                }
            }
        }
        drop(owner);
        let mut order: Vec<usize> = (0..children.len()).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&children[a], &children[b]);
            (ca.kappa, &ca.best.as_ref().unwrap().0).cmp(&(cb.kappa, &cb.best.as_ref().unwrap().0))
        });
        let mut labels_done: HashSet<Vec<u64>> = HashSet::new();
        for ci in order {
            if self.aborted || self.done {
                return;
            }
            let ch = &children[ci];
            let (label, g) = ch.best.clone().unwrap();
            if !labels_done.insert(label) {
                continue;
            }
            let basis = node.basis.insert(m, g);
            let canon = basis.canonical(m);
            if let Some(&k) = self.seen.get(&canon) {
                if k <= ch.kappa {
                    continue;
                }
            }
            self.seen.insert(canon, ch.kappa);
            let mut elems = node.elems.clone();
            let mut kg = 0;
            for _ in 1..ch.order {
                kg = m.add(kg, g);
                for &s in &node.elems {
                    elems.push(m.add(kg, s));
                }
            }
            let mut alive = node.alive.clone();
            if let Some(cb) = self.combos {
                for &y in &elems[node.elems.len()..] {
                    if m.n_value(y) != 0 {
                        continue;
                    }
                    for (i, a) in alive.iter_mut().enumerate() {
                        if *a && !survives(m, y, &cb[i]) {
                            *a = false;
                        }
                    }
                }
                if !alive.iter().any(|&a| a) {
                    continue;
                }
            }
            let newreps: HashSet<u64> = ch.newreps.iter().copied().collect();
            let kappa = ch.kappa;
            let cands: Vec<(u64, u64)> = node
                .cands
                .iter()
                .zip(&reps)
                .filter(|&(&(k, x), r)| k >= kappa && !newreps.contains(r) && m.b(x, g) == 0)
                .map(|(&c, _)| c)
                .collect();
            let perp = node.perp.as_ref().map(|pl| pl.iter().copied().filter(|&y| m.b(y, g) == 0).collect());
            let mut gens = node.gens.clone();
            gens.push(g);
            let child = Node {
                gens,
                elems,
                basis,
                log_order: node.log_order + valuation(ch.order, p),
                cands,
                perp,
                cols: self.child_cols(g, &node.cols),
                alive,
            };
            self.dfs(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module(r: &str, n: Option<u64>, p: u64) -> LocalModule {
        LocalModule::new(&r.parse().unwrap(), n, p, GammaMode::Full)
    }

    #[test]
    fn binary_arithmetic_matches_tables() {
        for (r, n) in [("4A1+D4", Some(2)), ("D6+E7+A1", Some(2)), ("D8+2A1", None)] {
            let m = module(r, n, 2);
            assert!(m.binary);
            let mut all = vec![];
            m.for_each_element(|x| all.push(x));
            for &x in &all {
                assert_eq!(m.q(x), m.q_generic(x), "{r} q({x:b})");
                for &y in all.iter().step_by(3) {
                    assert_eq!(m.b(x, y), m.b_generic(x, y));
                }
            }
        }
    }

    #[test]
    fn characteristic_element() {
        let m = module("21A1", Some(2), 2);
        let c = m.characteristic();
        assert_eq!(c.count_ones(), 22);
        let m = module("D8", None, 2);
        assert_eq!(m.characteristic(), 0);
    }

    #[test]
    fn structure_of_subgroups() {
        let m = module("A7+A3", None, 2);
        let g8 = m.pack(&[1, 0]);
        let g4 = m.pack(&[0, 1]);
        let mut elems = vec![];
        for i in 0..8 {
            for j in 0..4 {
                elems.push(m.add(m.scale(g8, i), m.scale(g4, j)));
            }
        }
        assert_eq!(m.structure(&elems), vec![8, 4]);
        assert_eq!(m.structure(&[0]), Vec::<u64>::new());
    }

    #[test]
    fn lagrangians_of_small_forms() {
        let cfg = SearchConfig::new(Objective::Lagrangian { first_only: false });
        let out = search(&module("A2", Some(6), 3), &cfg, None);
        assert!(out.complete);
        assert_eq!(out.lagrangians.len(), 1);
        // the glue of A2+E6 creates new roots
        let out = search(&module("A2+E6", None, 3), &cfg, None);
        assert!(out.lagrangians.is_empty());
        let out = search(&module("A2", None, 3), &cfg, None);
        assert!(out.lagrangians.is_empty());
    }

    #[test]
    fn sigma_search_small() {
        // 2A1 + I(2): only S = 0 gives σ over 2A1+I(2) of order 8: odd, none
        let cfg = SearchConfig::new(Objective::Sigma);
        let out = search(&module("2A1", Some(2), 2), &cfg, None);
        assert!(out.complete);
        assert!(out.found.is_empty());
        let out = search(&module("3A1", Some(2), 2), &cfg, None);
        let sig: Vec<u32> = out.found.keys().map(|k| k.sigma).collect();
        assert_eq!(sig, vec![1, 2]);
    }
}
