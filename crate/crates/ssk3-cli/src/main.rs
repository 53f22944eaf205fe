use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use regex::Regex;
use serde::Serialize;

use ssk3::ade::AdeType;
use ssk3::cache::Cache;
use ssk3::elliptic::{build_script_e, elliptic_tasks, format_mw, run_tasks, EllipticOutcome, EllipticResult};
use ssk3::rdp::{
    build_candidates, candidates_in_scope, prune, prune_reason, run_candidates, sort_results, Budget,
    RdpCandidate, RdpResult, Status,
};
use ssk3::tables::{self, TableId};

/// Primes with realizable rational double points.
const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

const CHECKPOINTS: [usize; 4] = [20169, 14487, 9247, 7722];

#[derive(Parser, Debug)]
#[command(name = "ssk3", version, about = "Exact lattice classification for supersingular K3 surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Only this characteristic.
    #[arg(long, global = true)]
    p: Option<u64>,

    /// ADE type, or a pattern with `*` wildcards, matched against the
    /// canonical type string.
    #[arg(long = "R", global = true)]
    r: Option<String>,

    /// Only report rows with this Artin invariant.
    #[arg(long, global = true)]
    sigma: Option<u32>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Search nodes per search.
    #[arg(long, global = true, default_value_t = 20_000_000)]
    node_budget: u64,

    /// Seconds per candidate.
    #[arg(long, global = true)]
    time_budget: Option<f64>,

    #[arg(long, global = true, env = "SSK3_CACHE_DIR", default_value = ".ssk3-cache")]
    cache_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,

    /// Fail when candidate counts differ from the expected checkpoints.
    #[arg(long, global = true)]
    strict: bool,

    /// Table for `verify`.
    #[arg(long, global = true)]
    table: Option<TableId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// List candidate triples [R, n, p] with the pruning verdict.
    Candidates,
    /// Classify RDP candidates.
    ClassifyRdp {
        /// Only candidates with this n.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Classify extremal (quasi-)elliptic fibrations.
    ClassifyElliptic,
    /// Compare cached results with a published table.
    Verify,
    /// Inspect or clean the result cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum CacheAction {
    Ls,
    Gc,
}

/// Outcome of a command: 0 success, 1 failure, 2 incomplete.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Ok,
    Failed,
    Incomplete,
}

struct TypeFilter(Option<Regex>);

impl TypeFilter {
    fn new(pat: Option<&str>) -> Result<TypeFilter> {
        let Some(pat) = pat else { return Ok(TypeFilter(None)) };
        let canon = if pat.contains('*') {
            pat.replace(' ', "")
        } else {
            pat.parse::<AdeType>().with_context(|| format!("--R {pat:?}"))?.to_string()
        };
        let re = format!("^{}$", regex::escape(&canon).replace(r"\*", ".*"));
        Ok(TypeFilter(Some(Regex::new(&re)?)))
    }

    fn matches(&self, r: &AdeType) -> bool {
        self.0.as_ref().map_or(true, |re| re.is_match(&r.to_string()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Ok(Outcome::Incomplete) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if cli.node_budget == 0 {
        bail!("--node-budget must be positive");
    }
    if cli.time_budget.is_some_and(|t| !(t > 0.0)) {
        bail!("--time-budget must be positive");
    }
    let filter = TypeFilter::new(cli.r.as_deref())?;
    let budget = Budget::new(cli.node_budget, cli.time_budget.map(Duration::from_secs_f64));
    let cache = Cache::new(&cli.cache_dir);
    let mut out = std::io::stdout().lock();
    match &cli.command {
        Command::Candidates => candidates(cli, &filter, &mut out),
        Command::ClassifyRdp { n } => {
            let res = classify_rdp(cli.p, &filter, *n, &budget, &cache)?;
            write_rdp(cli, &res, &mut out)?;
            Ok(if res.iter().any(|r| r.status == Status::Undecided) { Outcome::Incomplete } else { Outcome::Ok })
        }
        Command::ClassifyElliptic => {
            let res = classify_elliptic(cli, &filter, &budget, &cache)?;
            write_elliptic(cli, &res, &mut out)?;
            Ok(if res.iter().any(|r| r.status == Status::Undecided) { Outcome::Incomplete } else { Outcome::Ok })
        }
        Command::Verify => verify(cli, &filter, &cache, &mut out),
        Command::Cache { action } => {
            match action {
                CacheAction::Ls => {
                    for l in cache.ls()? {
                        let kind = l.kind.map_or("invalid".to_string(), |k| format!("{k:?}").to_lowercase());
                        let p = l.p.map_or("-".to_string(), |p| p.to_string());
                        writeln!(out, "{}\t{kind}\t{p}\t{}\t{}", l.path.display(), l.entries, l.undecided)?;
                    }
                }
                CacheAction::Gc => {
                    let (files, dropped) = cache.gc()?;
                    writeln!(out, "removed {files} files, dropped {dropped} undecided entries")?;
                }
            }
            Ok(Outcome::Ok)
        }
    }
}

fn primes_in_scope(cli: &Cli) -> Vec<u64> {
    match cli.p {
        Some(p) => vec![p],
        None => PRIMES.to_vec(),
    }
}

fn candidates(cli: &Cli, filter: &TypeFilter, out: &mut impl Write) -> Result<Outcome> {
    let (cands, pairs) = build_candidates();
    let summary = prune(&cands);
    let counts = [cands.len(), pairs.len(), summary.removed_triples, summary.removed_pairs];
    let shown: Vec<&RdpCandidate> =
        cands.iter().filter(|c| cli.p.map_or(true, |p| c.p == p) && filter.matches(&c.r)).collect();
    #[derive(Serialize)]
    struct Line<'a> {
        p: u64,
        r: &'a AdeType,
        n: u64,
        pruned: Option<String>,
    }
    let lines: Vec<Line> = shown
        .iter()
        .map(|c| Line { p: c.p, r: &c.r, n: c.n, pruned: prune_reason(c).map(|x| format!("{x:?}")) })
        .collect();
    let summary_line = format!(
        "triples={} pairs={} pruned_triples={} pruned_pairs={}",
        counts[0], counts[1], counts[2], counts[3]
    );
    match cli.format {
        Format::Tsv => {
            for l in &lines {
                writeln!(out, "{}\t{}\t{}\t{}", l.p, l.r, l.n, l.pruned.as_deref().unwrap_or("kept"))?;
            }
            writeln!(out, "# {summary_line}")?;
        }
        Format::Json => {
            let v = serde_json::json!({
                "schema": ssk3::cache::SCHEMA,
                "candidates": lines,
                "triples": counts[0], "pairs": counts[1],
                "pruned_triples": counts[2], "pruned_pairs": counts[3],
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
    }
    if cli.strict && counts != CHECKPOINTS {
        eprintln!("candidate counts differ from the checkpoints {CHECKPOINTS:?}");
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Ok)
}

/// Results for every kept candidate in scope, computing what the cache
/// lacks or holds only as undecided.
fn classify_rdp(
    p: Option<u64>,
    filter: &TypeFilter,
    n: Option<u64>,
    budget: &Budget,
    cache: &Cache,
) -> Result<Vec<RdpResult>> {
    let scope = candidates_in_scope(p, &|c| filter.matches(&c.r) && n.map_or(true, |m| c.n == m));
    let mut results = Vec::new();
    let mut by_p: BTreeMap<u64, Vec<RdpCandidate>> = BTreeMap::new();
    for c in scope {
        by_p.entry(c.p).or_default().push(c);
    }
    for (p, cands) in by_p {
        let cached = cache.load_rdp(p)?;
        let mut todo = Vec::new();
        for c in cands {
            match cached.get(&c.key()) {
                Some(r) if r.status == Status::Complete => results.push(r.clone()),
                _ => todo.push(c),
            }
        }
        if !todo.is_empty() {
            eprintln!("p={p}: classifying {} candidates", todo.len());
            let fresh = run_candidates(&todo, budget);
            cache.store_rdp(p, &fresh)?;
            results.extend(fresh);
        }
    }
    sort_results(&mut results);
    Ok(results)
}

fn write_rdp(cli: &Cli, res: &[RdpResult], out: &mut impl Write) -> Result<()> {
    let shown: Vec<&RdpResult> = res
        .iter()
        .filter(|r| r.status == Status::Undecided || !r.sigmas.is_empty())
        .filter(|r| cli.sigma.map_or(true, |s| r.sigmas.contains(&s)))
        .collect();
    match cli.format {
        Format::Tsv => {
            for r in &shown {
                let s: Vec<String> = r.sigmas.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{}\t{}\t{}\t{}\t{:?}", r.p, r.r, r.n, s.join(","), r.status)?;
            }
            let und = res.iter().filter(|r| r.status == Status::Undecided).count();
            writeln!(out, "# candidates={} rows={} undecided={und}", res.len(), shown.len() - und)?;
        }
        Format::Json => {
            let v = serde_json::json!({ "schema": ssk3::cache::SCHEMA, "results": shown });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
    }
    Ok(())
}

/// Elliptic outcomes for every (R, p) in scope.  The list of types comes
/// from the n = 2 RDP results at the primes in scope.
fn classify_elliptic(cli: &Cli, filter: &TypeFilter, budget: &Budget, cache: &Cache) -> Result<Vec<EllipticOutcome>> {
    // (R + A_1, 2) candidates: filter on R after removing one A_1
    let a1 = ssk3::ade::Symbol::A(1);
    let rdp_filter = TypeFilter(None);
    let mut rdp = Vec::new();
    for p in primes_in_scope(cli) {
        let all = classify_rdp(Some(p), &rdp_filter, Some(2), budget, cache)?;
        rdp.extend(all.into_iter().filter(|r| r.r.minus(a1).is_some_and(|t| filter.matches(&t))));
    }
    let (script_e, incomplete) = build_script_e(&rdp);
    if incomplete {
        eprintln!("warning: some n = 2 candidates are undecided; the list of types may be incomplete");
    }
    if cli.p.is_none() && cli.r.is_none() {
        eprintln!("{} types of rank 20 with (R + A1, 2) realizable", script_e.len());
    }
    let tasks = elliptic_tasks(&script_e, &rdp, cli.p);
    let mut results = Vec::new();
    let mut by_p: BTreeMap<u64, Vec<(AdeType, u64)>> = BTreeMap::new();
    for t in tasks {
        by_p.entry(t.1).or_default().push(t);
    }
    for (p, ts) in by_p {
        let cached = cache.load_elliptic(p)?;
        let mut todo = Vec::new();
        for (r, q) in ts {
            match cached.get(&format!("{r}/{q}")) {
                Some(o) if o.status == Status::Complete => results.push(o.clone()),
                _ => todo.push((r, q)),
            }
        }
        if !todo.is_empty() {
            eprintln!("p={p}: classifying {} fibration types", todo.len());
            let fresh = run_tasks(&todo, budget)?;
            cache.store_elliptic(p, &fresh)?;
            results.extend(fresh);
        }
    }
    results.sort_by(|a, b| b.p.cmp(&a.p).then_with(|| a.r.cmp(&b.r)));
    Ok(results)
}

fn kodaira_string(r: &EllipticResult) -> String {
    match &r.kodaira {
        None => "-".into(),
        Some(k) => k
            .iter()
            .map(|(s, ts)| format!("{s}:{}", ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("|")))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn write_elliptic(cli: &Cli, res: &[EllipticOutcome], out: &mut impl Write) -> Result<()> {
    let rows: Vec<&EllipticResult> =
        res.iter().flat_map(|o| o.rows.iter()).filter(|r| cli.sigma.map_or(true, |s| r.sigma == s)).collect();
    let undecided: Vec<&EllipticOutcome> = res.iter().filter(|o| o.status == Status::Undecided).collect();
    match cli.format {
        Format::Tsv => {
            for r in &rows {
                let kind = if r.quasi_elliptic { "quasi" } else { "elliptic" };
                writeln!(out, "{}\t{}\t{}\t{}\t{kind}\t{}", r.p, r.r, r.sigma, format_mw(&r.mw), kodaira_string(r))?;
            }
            for o in &undecided {
                writeln!(out, "{}\t{}\t-\t-\tundecided\t-", o.p, o.r)?;
            }
            writeln!(out, "# types={} rows={} undecided={}", res.len(), rows.len(), undecided.len())?;
        }
        Format::Json => {
            let v = serde_json::json!({ "schema": ssk3::cache::SCHEMA, "rows": rows,
                "undecided": undecided.iter().map(|o| format!("{}/{}", o.r, o.p)).collect::<Vec<_>>() });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
    }
    Ok(())
}

fn verify(cli: &Cli, filter: &TypeFilter, cache: &Cache, out: &mut impl Write) -> Result<Outcome> {
    let Some(table) = cli.table else { bail!("verify needs --table (RDP, QE, E, T1 or T2)") };
    let primes: BTreeSet<u64> = primes_in_scope(cli).into_iter().collect();
    match table {
        TableId::Rdp => {
            let expected = candidates_in_scope(cli.p, &|c| filter.matches(&c.r));
            let mut computed = Vec::new();
            let mut absent = Vec::new();
            let mut loaded: BTreeMap<u64, BTreeMap<String, RdpResult>> = BTreeMap::new();
            for p in &primes {
                loaded.insert(*p, cache.load_rdp(*p)?);
            }
            for c in &expected {
                match loaded.get(&c.p).and_then(|m| m.get(&c.key())) {
                    Some(r) => computed.push(r.clone()),
                    None => absent.push(c.key()),
                }
            }
            if !absent.is_empty() {
                bail!("no cached result for {} candidates, e.g. {}", absent.len(), absent[..absent.len().min(10)].join(", "));
            }
            let published: Vec<tables::RdpRow> =
                tables::rdp_rows()?.into_iter().filter(|r| filter.matches(&r.r)).collect();
            let d = tables::diff_rdp(&computed, &published, &|p| primes.contains(&p));
            report_diff(&d, &computed.iter().filter(|r| r.status == Status::Undecided).map(ssk3::cache::rdp_key).collect::<Vec<_>>(), out)
        }
        TableId::Qe | TableId::E => {
            let mut rdp = Vec::new();
            let mut missing = Vec::new();
            for p in &primes {
                let m = cache.load_rdp(*p)?;
                for c in candidates_in_scope(Some(*p), &|c| c.n == 2) {
                    match m.get(&c.key()) {
                        Some(r) => rdp.push(r.clone()),
                        None => missing.push(c.key()),
                    }
                }
            }
            if !missing.is_empty() {
                bail!(
                    "no cached n = 2 RDP result for {} candidates, e.g. {}; run classify-elliptic first",
                    missing.len(),
                    missing[..missing.len().min(10)].join(", ")
                );
            }
            let (script_e, _) = build_script_e(&rdp);
            let script_e: Vec<AdeType> = script_e.into_iter().filter(|r| filter.matches(r)).collect();
            let tasks = elliptic_tasks(&script_e, &rdp, cli.p);
            let mut computed = Vec::new();
            let mut undecided: Vec<String> =
                rdp.iter().filter(|r| r.status == Status::Undecided).map(ssk3::cache::rdp_key).collect();
            let mut absent = Vec::new();
            let mut loaded: BTreeMap<u64, BTreeMap<String, EllipticOutcome>> = BTreeMap::new();
            for p in &primes {
                loaded.insert(*p, cache.load_elliptic(*p)?);
            }
            for (r, p) in &tasks {
                let key = format!("{r}/{p}");
                match loaded.get(p).and_then(|m| m.get(&key)) {
                    Some(o) => {
                        if o.status == Status::Undecided {
                            undecided.push(key);
                        }
                        computed.extend(o.rows.iter().cloned());
                    }
                    None => absent.push(key),
                }
            }
            if !absent.is_empty() {
                bail!("no cached elliptic result for {}", absent.join(", "));
            }
            let scope = |p: u64| primes.contains(&p);
            let d = if table == TableId::Qe {
                let published: Vec<tables::QeRow> =
                    tables::qe_rows()?.into_iter().filter(|r| filter.matches(&r.r)).collect();
                tables::diff_qe(&computed, &published, &scope)
            } else {
                let published: Vec<tables::ERow> =
                    tables::e_rows()?.into_iter().filter(|r| filter.matches(&r.r)).collect();
                tables::diff_e(&computed, &published, &scope)
            };
            report_diff(&d, &undecided, out)
        }
        TableId::T1 => {
            let rows = tables::t1_rows()?;
            let mut bad = 0;
            let syms = (1..=24)
                .map(ssk3::ade::Symbol::A)
                .chain((4..=24).map(ssk3::ade::Symbol::D))
                .chain((6..=8).map(ssk3::ade::Symbol::E));
            for s in syms {
                let hits: Vec<&tables::T1Row> = rows.iter().filter(|r| r.applies(s)).collect();
                let k = s.rank() as u64;
                let ok = hits.len() == 1
                    && hits[0].n_mul * k + hits[0].n_add == s.level()
                    && hits[0].g_mul * k + hits[0].g_add == s.disc_order();
                if !ok {
                    writeln!(out, "mismatch\t{s}")?;
                    bad += 1;
                }
            }
            writeln!(out, "table T1: mismatched {bad}")?;
            Ok(if bad == 0 { Outcome::Ok } else { Outcome::Failed })
        }
        TableId::T2 => {
            let checks = tables::verify_codes(&tables::t2_codes()?)?;
            for c in &checks {
                writeln!(
                    out,
                    "sigma={}\tisotropic={}\tconditions={}\tdisc={}2^{}\ttype_one={}\t{}",
                    c.sigma,
                    c.isotropic,
                    c.conditions,
                    if c.disc_negative { "-" } else { "" },
                    c.disc_log2.map_or("?".into(), |d| d.to_string()),
                    c.type_one,
                    if c.passed() { "ok" } else { "FAIL" }
                )?;
            }
            Ok(if checks.iter().all(|c| c.passed()) { Outcome::Ok } else { Outcome::Failed })
        }
    }
}

fn report_diff(d: &tables::Diff, undecided: &[String], out: &mut impl Write) -> Result<Outcome> {
    write!(out, "{d}")?;
    for u in undecided {
        writeln!(out, "undecided\t{u}")?;
    }
    Ok(if !undecided.is_empty() {
        Outcome::Incomplete
    } else if d.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Failed
    })
}
