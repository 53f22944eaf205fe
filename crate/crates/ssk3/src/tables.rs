//! Published tables shipped as TSV fixtures, the integer codec for the
//! 21A1 code table, and set-wise diffs between computed and published rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ade::{AdeType, Symbol};
use crate::discform::{fqm_of, overlattice, FqmElement};
use crate::elliptic::{format_mw, parse_mw, EllipticResult};
use crate::error::{parse_err, Error, Result};
use crate::rdp::{check_conditions, RdpResult};

pub const RDP_TSV: &str = include_str!("../data/rdp.tsv");
pub const QE_TSV: &str = include_str!("../data/qe.tsv");
pub const E_TSV: &str = include_str!("../data/e.tsv");
pub const T1_TSV: &str = include_str!("../data/t1.tsv");
pub const T2_TSV: &str = include_str!("../data/t2.tsv");

/// Number of bits in a code: x_1 .. x_21 and y.
pub const CODE_BITS: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TableId {
    Rdp,
    Qe,
    E,
    T1,
    T2,
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableId::Rdp => "RDP",
            TableId::Qe => "QE",
            TableId::E => "E",
            TableId::T1 => "T1",
            TableId::T2 => "T2",
        })
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<TableId> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RDP" => Ok(TableId::Rdp),
            "QE" => Ok(TableId::Qe),
            "E" => Ok(TableId::E),
            "T1" => Ok(TableId::T1),
            "T2" => Ok(TableId::T2),
            _ => Err(parse_err(s, "unknown table")),
        }
    }
}

/// A parsed fixture: header fields and raw string rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub table: TableId,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn sha256_hex(data: &str) -> String {
    let d = Sha256::digest(data.as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses a fixture.  The header must name the table and the columns and
/// carry the SHA-256 of the data lines (each terminated by a newline).
pub fn parse_fixture(text: &str) -> Result<Fixture> {
    let mut table = None;
    let mut columns: Option<Vec<String>> = None;
    let mut checksum = None;
    let mut data = String::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if let Some(v) = h.strip_prefix("table:") {
                table = Some(v.parse::<TableId>()?);
            } else if let Some(v) = h.strip_prefix("columns:") {
                columns = Some(v.split('\t').map(|c| c.trim().to_string()).collect());
            } else if let Some(v) = h.strip_prefix("sha256:") {
                checksum = Some(v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = columns.as_ref().ok_or_else(|| parse_err(line, "data before the columns header"))?;
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != cols.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        data.push_str(line);
        data.push('\n');
        rows.push(fields);
    }
    let table = table.ok_or_else(|| parse_err("fixture", "missing table header"))?;
    let columns = columns.ok_or_else(|| parse_err("fixture", "missing columns header"))?;
    if let Some(c) = checksum {
        let got = sha256_hex(&data);
        if got != c {
            return Err(parse_err("fixture", format!("checksum mismatch: header {c}, data {got}")));
        }
    }
    Ok(Fixture { table, columns, rows })
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim().parse::<u64>().map_err(|_| parse_err(s, "expected a non-negative integer"))
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',').map(|t| t.trim().parse::<u32>().map_err(|_| parse_err(s, "expected a comma list"))).collect()
}

fn parse_type(s: &str, rank: u32) -> Result<AdeType> {
    let r: AdeType = s.parse()?;
    if r.rank() != rank {
        return Err(parse_err(s, format!("rank {} instead of {rank}", r.rank())));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RdpRow {
    pub p: u64,
    pub r: AdeType,
    pub n: u64,
    pub sigmas: Vec<u32>,
}

pub fn rdp_rows() -> Result<Vec<RdpRow>> {
    let f = parse_fixture(RDP_TSV)?;
    f.rows
        .iter()
        .map(|r| {
            Ok(RdpRow { p: parse_u64(&r[0])?, r: parse_type(&r[1], 21)?, n: parse_u64(&r[2])?, sigmas: parse_u32_list(&r[3])? })
        })
        .collect()
}

/// The torsion rank of a quasi-elliptic row: a constant or `c-sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankExpr {
    Const(u32),
    MinusSigma(u32),
}

impl RankExpr {
    pub fn eval(self, sigma: u32) -> Option<u32> {
        match self {
            RankExpr::Const(c) => Some(c),
            RankExpr::MinusSigma(c) => c.checked_sub(sigma),
        }
    }
}

impl std::str::FromStr for RankExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<RankExpr> {
        let t = s.trim();
        match t.strip_suffix("-sigma") {
            Some(c) => Ok(RankExpr::MinusSigma(parse_u64(c)? as u32)),
            None => Ok(RankExpr::Const(parse_u64(t)? as u32)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QeRow {
    pub p: u64,
    pub r: AdeType,
    pub sigmas: Vec<u32>,
    pub rank: RankExpr,
}

pub fn qe_rows() -> Result<Vec<QeRow>> {
    let f = parse_fixture(QE_TSV)?;
    f.rows
        .iter()
        .map(|r| {
            Ok(QeRow {
                p: parse_u64(&r[0])?,
                r: parse_type(&r[1], 20)?,
                sigmas: parse_u32_list(&r[2])?,
                rank: r[3].parse()?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ERow {
    pub p: u64,
    pub r: AdeType,
    pub sigma: u32,
    pub mw: Vec<u64>,
}

pub fn e_rows() -> Result<Vec<ERow>> {
    let f = parse_fixture(E_TSV)?;
    f.rows
        .iter()
        .map(|r| {
            Ok(ERow {
                p: parse_u64(&r[0])?,
                r: parse_type(&r[1], 20)?,
                sigma: parse_u64(&r[2])? as u32,
                mw: parse_mw(&r[3])?,
            })
        })
        .collect()
}

/// A row of the N_X table: for the symbols of one family and case,
/// N_X = n_mul * rank + n_add and |G_X| = g_mul * rank + g_add.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct T1Row {
    pub family: char,
    pub case: String,
    pub n_mul: u64,
    pub n_add: u64,
    pub g_mul: u64,
    pub g_add: u64,
}

impl T1Row {
    pub fn applies(&self, s: Symbol) -> bool {
        match (self.family, s) {
            ('A', Symbol::A(l)) => (self.case == "even") == (l % 2 == 0),
            ('D', Symbol::D(m)) => match self.case.as_str() {
                "0mod4" => m % 4 == 0,
                "2mod4" => m % 4 == 2,
                _ => m % 2 == 1,
            },
            ('E', Symbol::E(n)) => self.case == n.to_string(),
            _ => false,
        }
    }
}

pub fn t1_rows() -> Result<Vec<T1Row>> {
    let f = parse_fixture(T1_TSV)?;
    f.rows
        .iter()
        .map(|r| {
            Ok(T1Row {
                family: r[0].chars().next().ok_or_else(|| parse_err(&r[0], "empty family"))?,
                case: r[1].clone(),
                n_mul: parse_u64(&r[2])?,
                n_add: parse_u64(&r[3])?,
                g_mul: parse_u64(&r[4])?,
                g_add: parse_u64(&r[5])?,
            })
        })
        .collect()
}

/// Code sets by σ.
pub fn t2_codes() -> Result<BTreeMap<u32, Vec<u64>>> {
    let f = parse_fixture(T2_TSV)?;
    f.rows
        .iter()
        .map(|r| {
            let codes = r[1].split(',').map(parse_u64).collect::<Result<Vec<u64>>>()?;
            Ok((parse_u64(&r[0])? as u32, codes))
        })
        .collect()
}

/// Bits (x_1, ..., x_21, y) of a code; x_1 is the most significant.
pub fn decode_code(code: u64) -> Result<Vec<u8>> {
    if code >> CODE_BITS != 0 {
        return Err(Error::CodeRange(code));
    }
    Ok((0..CODE_BITS).map(|i| ((code >> (CODE_BITS - 1 - i)) & 1) as u8).collect())
}

pub fn encode_code(bits: &[u8]) -> Result<u64> {
    if bits.len() != CODE_BITS || bits.iter().any(|&b| b > 1) {
        return Err(Error::Invalid(format!("expected {CODE_BITS} bits")));
    }
    Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64))
}

/// Outcome of re-deriving one code set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCheck {
    pub sigma: u32,
    pub isotropic: bool,
    pub conditions: bool,
    /// |disc| of the overlattice as log_2, and whether its sign is negative.
    pub disc_log2: Option<u32>,
    pub disc_negative: bool,
    pub two_elementary: bool,
    pub type_one: bool,
}

impl CodeCheck {
    pub fn passed(&self) -> bool {
        self.isotropic
            && self.conditions
            && self.disc_log2 == Some(2 * self.sigma)
            && self.disc_negative
            && self.two_elementary
            && self.type_one
    }
}

/// Checks each code set as a subgroup of G_{21A1,2}: isotropy, the four
/// conditions at p = 2, and the overlattice invariants.
pub fn verify_codes(codes: &BTreeMap<u32, Vec<u64>>) -> Result<Vec<CodeCheck>> {
    use num_bigint::BigInt;
    use num_traits::{One, Signed, Zero};
    let r: AdeType = "21A1".parse()?;
    let g = fqm_of(&r, 2);
    let lat = crate::ade::gram_of(&r, 2)?;
    let mut out = Vec::new();
    for (&sigma, cs) in codes {
        let gens: Vec<FqmElement> = cs
            .iter()
            .map(|&c| decode_code(c).map(|b| FqmElement(b.into_iter().map(u64::from).collect())))
            .collect::<Result<_>>()?;
        let span = crate::discform::span(&g, &gens);
        let isotropic = span.iter().all(|x| g.q_value(x).numer().is_zero());
        let mut check = CodeCheck {
            sigma,
            isotropic,
            conditions: false,
            disc_log2: None,
            disc_negative: false,
            two_elementary: false,
            type_one: false,
        };
        if isotropic {
            check.conditions = check_conditions(&r, 2, &gens, 2, sigma)?;
            let ov = overlattice(&lat, &g, &gens)?;
            let d = crate::exactlin::det(&ov.gram)?;
            check.disc_negative = d.is_negative();
            let mut a = d.abs();
            let mut k = 0;
            let two = BigInt::from(2);
            while !a.is_one() && (&a % &two).is_zero() {
                a /= &two;
                k += 1;
            }
            check.disc_log2 = a.is_one().then_some(k);
            check.two_elementary = crate::discform::is_p_elementary(&ov.gram, 2)?;
            check.type_one = check.two_elementary && crate::discform::is_type_i(&ov.gram)?;
        }
        out.push(check);
    }
    Ok(out)
}

/// Set-wise difference between published and computed rows, keyed by a
/// string per row.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diff {
    pub table: Option<TableId>,
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    /// (key, published, computed)
    pub mismatched: Vec<(String, String, String)>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.mismatched.is_empty()
    }

    fn of(table: TableId, published: BTreeMap<String, String>, computed: BTreeMap<String, String>) -> Diff {
        let mut d = Diff { table: Some(table), ..Diff::default() };
        for (k, v) in &published {
            match computed.get(k) {
                None => d.missing.push(format!("{k}\t{v}")),
                Some(w) if w != v => d.mismatched.push((k.clone(), v.clone(), w.clone())),
                _ => {}
            }
        }
        for (k, v) in &computed {
            if !published.contains_key(k) {
                d.extra.push(format!("{k}\t{v}"));
            }
        }
        d
    }
}

impl fmt::Display for Diff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.table.map_or(String::new(), |t| t.to_string());
        writeln!(
            f,
            "table {t}: missing {} extra {} mismatched {}",
            self.missing.len(),
            self.extra.len(),
            self.mismatched.len()
        )?;
        for m in &self.missing {
            writeln!(f, "missing\t{m}")?;
        }
        for e in &self.extra {
            writeln!(f, "extra\t{e}")?;
        }
        for (k, a, b) in &self.mismatched {
            writeln!(f, "mismatch\t{k}\tpublished {a}\tcomputed {b}")?;
        }
        Ok(())
    }
}

fn join<T: fmt::Display>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Compares RDP results against the published rows whose prime passes
/// `scope`.  Results with no σ are not rows.
pub fn diff_rdp(computed: &[RdpResult], published: &[RdpRow], scope: &dyn Fn(u64) -> bool) -> Diff {
    let key = |p: u64, r: &AdeType, n: u64| format!("{p}\t{r}\t{n}");
    let pubm = published.iter().filter(|x| scope(x.p)).map(|x| (key(x.p, &x.r, x.n), join(&x.sigmas))).collect();
    let comp = computed
        .iter()
        .filter(|x| scope(x.p) && !x.sigmas.is_empty())
        .map(|x| (key(x.p, &x.r, x.n), join(&x.sigmas)))
        .collect();
    Diff::of(TableId::Rdp, pubm, comp)
}

/// Quasi-elliptic rows expanded to one entry per σ with value r.
pub fn diff_qe(computed: &[EllipticResult], published: &[QeRow], scope: &dyn Fn(u64) -> bool) -> Diff {
    let key = |p: u64, r: &AdeType, s: u32| format!("{p}\t{r}\t{s}");
    let mut pubm = BTreeMap::new();
    for row in published.iter().filter(|x| scope(x.p)) {
        for &s in &row.sigmas {
            let r = row.rank.eval(s).map_or("?".to_string(), |v| v.to_string());
            pubm.insert(key(row.p, &row.r, s), r);
        }
    }
    let comp = computed
        .iter()
        .filter(|x| scope(x.p) && x.quasi_elliptic)
        .map(|x| {
            let v = if x.mw.iter().all(|&d| d == x.p) { x.mw.len().to_string() } else { format_mw(&x.mw) };
            (key(x.p, &x.r, x.sigma), v)
        })
        .collect();
    Diff::of(TableId::Qe, pubm, comp)
}

/// Elliptic rows keyed by (p, R, σ, MW); rows differing only in MW are
/// distinct.
pub fn diff_e(computed: &[EllipticResult], published: &[ERow], scope: &dyn Fn(u64) -> bool) -> Diff {
    let key = |p: u64, r: &AdeType, s: u32, mw: &[u64]| format!("{p}\t{r}\t{s}\t{}", format_mw(mw));
    let pubm = published.iter().filter(|x| scope(x.p)).map(|x| (key(x.p, &x.r, x.sigma, &x.mw), String::new())).collect();
    let comp = computed
        .iter()
        .filter(|x| scope(x.p) && !x.quasi_elliptic)
        .map(|x| (key(x.p, &x.r, x.sigma, &x.mw), String::new()))
        .collect();
    Diff::of(TableId::E, pubm, comp)
}

/// The set of primes with at least one published RDP row.
pub fn rdp_primes(rows: &[RdpRow]) -> BTreeSet<u64> {
    rows.iter().map(|r| r.p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        assert_eq!(rdp_rows().unwrap().len(), 794);
        assert_eq!(qe_rows().unwrap().len(), 52);
        assert_eq!(e_rows().unwrap().len(), 13);
        assert_eq!(t1_rows().unwrap().len(), 8);
        assert_eq!(t2_codes().unwrap().len(), 10);
    }

    #[test]
    fn checksum_is_enforced() {
        let bad = RDP_TSV.replacen("A18+A3\t76", "A18+A3\t78", 1);
        assert!(parse_fixture(&bad).is_err());
    }

    #[test]
    fn codec() {
        assert_eq!(decode_code(4194303).unwrap(), vec![1; 22]);
        assert_eq!(decode_code(0).unwrap(), vec![0; 22]);
        let b = decode_code(2101246).unwrap();
        assert_eq!(b[0], 1);
        assert_eq!(encode_code(&b).unwrap(), 2101246);
        assert!(decode_code(1 << 22).is_err());
    }

    #[test]
    fn rank_expressions() {
        assert_eq!("10-sigma".parse::<RankExpr>().unwrap().eval(3), Some(7));
        assert_eq!("0".parse::<RankExpr>().unwrap().eval(5), Some(0));
    }

    #[test]
    fn table_one_matches_levels() {
        let rows = t1_rows().unwrap();
        let syms = (1..=24).map(Symbol::A).chain((4..=24).map(Symbol::D)).chain((6..=8).map(Symbol::E));
        for s in syms {
            let hits: Vec<&T1Row> = rows.iter().filter(|r| r.applies(s)).collect();
            assert_eq!(hits.len(), 1, "{s}");
            let k = s.rank() as u64;
            assert_eq!(hits[0].n_mul * k + hits[0].n_add, s.level(), "{s}");
            assert_eq!(hits[0].g_mul * k + hits[0].g_add, s.disc_order(), "{s}");
        }
    }

    #[test]
    fn injected_fault_shows_as_missing() {
        let rows = rdp_rows().unwrap();
        let mut comp: Vec<RdpResult> = rows
            .iter()
            .filter(|r| r.p == 19)
            .map(|r| RdpResult {
                r: r.r.clone(),
                n: r.n,
                p: r.p,
                sigmas: r.sigmas.iter().copied().collect(),
                witnesses: BTreeMap::new(),
                status: crate::rdp::Status::Complete,
                telemetry: Default::default(),
            })
            .collect();
        assert!(diff_rdp(&comp, &rows, &|p| p == 19).is_empty());
        comp.pop();
        let d = diff_rdp(&comp, &rows, &|p| p == 19);
        assert_eq!((d.missing.len(), d.extra.len(), d.mismatched.len()), (1, 0, 0));
    }
}
