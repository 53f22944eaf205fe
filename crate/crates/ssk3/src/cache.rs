//! On-disk JSON cache of per-candidate results, one file per kind and
//! prime.  Entries are keyed "R/n/p" for RDP and "R/p" for elliptic runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticOutcome;
use crate::error::{parse_err, Error, Result};
use crate::rdp::{RdpResult, Status};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Rdp,
    Elliptic,
}

impl Kind {
    fn prefix(self) -> &'static str {
        match self {
            Kind::Rdp => "rdp",
            Kind::Elliptic => "elliptic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheFile<T> {
    pub schema: u32,
    pub kind: Kind,
    pub p: u64,
    pub entries: BTreeMap<String, T>,
}

pub fn rdp_key(r: &RdpResult) -> String {
    format!("{}/{}/{}", r.r, r.n, r.p)
}

pub fn elliptic_key(o: &EllipticOutcome) -> String {
    format!("{}/{}", o.r, o.p)
}

/// Parses a cache file, rejecting other schemas and mismatched kinds.
pub fn parse_cache<T: DeserializeOwned>(text: &str, kind: Kind) -> Result<CacheFile<T>> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_err("cache", e.to_string()))?;
    let schema = v.get("schema").and_then(|s| s.as_u64()).ok_or_else(|| parse_err("cache", "missing schema"))?;
    if schema != SCHEMA as u64 {
        return Err(parse_err("cache", format!("schema {schema}, expected {SCHEMA}")));
    }
    let f: CacheFile<T> = serde_json::from_value(v).map_err(|e| parse_err("cache", e.to_string()))?;
    if f.kind != kind {
        return Err(parse_err("cache", "wrong kind"));
    }
    Ok(f)
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

/// One cache file as listed by `ls`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheListing {
    pub path: PathBuf,
    pub kind: Option<Kind>,
    pub p: Option<u64>,
    pub entries: usize,
    pub undecided: usize,
    pub valid: bool,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, kind: Kind, p: u64) -> PathBuf {
        self.dir.join(format!("{}-p{p}.json", kind.prefix()))
    }

    fn load<T: DeserializeOwned>(&self, kind: Kind, p: u64) -> Result<BTreeMap<String, T>> {
        let path = self.path(kind, p);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(parse_cache::<T>(&text, kind)
                .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?
                .entries),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(Error::Invalid(format!("{}: {e}", path.display()))),
        }
    }

    fn store<T: Serialize + Clone>(&self, kind: Kind, p: u64, new: BTreeMap<String, T>) -> Result<()>
    where
        T: DeserializeOwned,
    {
        let mut entries: BTreeMap<String, T> = self.load(kind, p).unwrap_or_default();
        entries.extend(new);
        let file = CacheFile { schema: SCHEMA, kind, p, entries };
        let io = |e: std::io::Error| Error::Invalid(format!("{}: {e}", self.dir.display()));
        fs::create_dir_all(&self.dir).map_err(io)?;
        let path = self.path(kind, p);
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Invalid(e.to_string()))?;
        fs::write(&tmp, text + "\n").map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    pub fn load_rdp(&self, p: u64) -> Result<BTreeMap<String, RdpResult>> {
        self.load(Kind::Rdp, p)
    }

    pub fn store_rdp(&self, p: u64, results: &[RdpResult]) -> Result<()> {
        self.store(Kind::Rdp, p, results.iter().map(|r| (rdp_key(r), r.clone())).collect())
    }

    pub fn load_elliptic(&self, p: u64) -> Result<BTreeMap<String, EllipticOutcome>> {
        self.load(Kind::Elliptic, p)
    }

    pub fn store_elliptic(&self, p: u64, results: &[EllipticOutcome]) -> Result<()> {
        self.store(Kind::Elliptic, p, results.iter().map(|r| (elliptic_key(r), r.clone())).collect())
    }

    pub fn ls(&self) -> Result<Vec<CacheListing>> {
        let mut out = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(Error::Invalid(format!("{}: {e}", self.dir.display()))),
        };
        let mut paths: Vec<PathBuf> =
            rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).unwrap_or_default();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let listing = if name.starts_with("rdp-") {
                parse_cache::<RdpResult>(&text, Kind::Rdp).ok().map(|f| {
                    let und = f.entries.values().filter(|r| r.status == Status::Undecided).count();
                    (Kind::Rdp, f.p, f.entries.len(), und)
                })
            } else if name.starts_with("elliptic-") {
                parse_cache::<EllipticOutcome>(&text, Kind::Elliptic).ok().map(|f| {
                    let und = f.entries.values().filter(|r| r.status == Status::Undecided).count();
                    (Kind::Elliptic, f.p, f.entries.len(), und)
                })
            } else {
                None
            };
            out.push(match listing {
                Some((kind, p, entries, undecided)) => {
                    CacheListing { path, kind: Some(kind), p: Some(p), entries, undecided, valid: true }
                }
                None => CacheListing { path, kind: None, p: None, entries: 0, undecided: 0, valid: false },
            });
        }
        Ok(out)
    }

    /// Removes unreadable or outdated files and drops undecided entries.
    /// Returns the number of files removed and entries dropped.
    pub fn gc(&self) -> Result<(usize, usize)> {
        let (mut files, mut dropped) = (0, 0);
        for l in self.ls()? {
            let io = |e: std::io::Error| Error::Invalid(format!("{}: {e}", l.path.display()));
            match (l.valid, l.kind, l.p) {
                (true, Some(Kind::Rdp), Some(p)) if l.undecided > 0 => {
                    let kept: BTreeMap<String, RdpResult> =
                        self.load_rdp(p)?.into_iter().filter(|(_, r)| r.status == Status::Complete).collect();
                    fs::remove_file(&l.path).map_err(io)?;
                    self.store(Kind::Rdp, p, kept)?;
                    dropped += l.undecided;
                }
                (true, Some(Kind::Elliptic), Some(p)) if l.undecided > 0 => {
                    let kept: BTreeMap<String, EllipticOutcome> =
                        self.load_elliptic(p)?.into_iter().filter(|(_, r)| r.status == Status::Complete).collect();
                    fs::remove_file(&l.path).map_err(io)?;
                    self.store(Kind::Elliptic, p, kept)?;
                    dropped += l.undecided;
                }
                (false, _, _) => {
                    fs::remove_file(&l.path).map_err(io)?;
                    files += 1;
                }
                _ => {}
            }
        }
        Ok((files, dropped))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::{algorithm_ii, Budget, PartitionAB};

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("ssk3-cache-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let cache = Cache::new(&dir);
        let r: crate::ade::AdeType = "A18+A3".parse().unwrap();
        let res = algorithm_ii(&r, 76, 19, &PartitionAB::default_for(&r, 76, 19), &Budget::default());
        cache.store_rdp(19, &[res.clone()]).unwrap();
        let back = cache.load_rdp(19).unwrap();
        assert_eq!(back.get("A18+A3/76/19"), Some(&res));
        fs::write(dir.join("rdp-p7.json"), "{\"schema\": 99}").unwrap();
        let ls = cache.ls().unwrap();
        assert_eq!(ls.iter().filter(|l| l.valid).count(), 1);
        assert_eq!(cache.gc().unwrap(), (1, 0));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn schema_is_checked() {
        let text = r#"{"schema": 2, "kind": "rdp", "p": 3, "entries": {}}"#;
        assert!(parse_cache::<RdpResult>(text, Kind::Rdp).is_err());
        let text = r#"{"schema": 1, "kind": "rdp", "p": 3, "entries": {}}"#;
        assert!(parse_cache::<RdpResult>(text, Kind::Rdp).is_ok());
        assert!(parse_cache::<RdpResult>(text, Kind::Elliptic).is_err());
    }
}
