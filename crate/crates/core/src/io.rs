//! File formats: hypergraph text files, sparse observation CSV, bipartite
//! membership CSV and JSON documents with provenance.
//!
//! Every format carries a `format_version`, as a `# format_version=1`
//! comment in the text formats and as a field in JSON documents.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{parse_error, Result};
use crate::model::{Hypergraph, ObservationMatrix};

pub const FORMAT_VERSION: u32 = 1;
const VERSION_COMMENT: &str = "# format_version=1";

fn check_version(line: usize, text: &str) -> Result<()> {
    match text.trim().parse::<u32>() {
        Ok(FORMAT_VERSION) => Ok(()),
        _ => Err(parse_error(line, format!("unsupported format_version {}", text.trim()))),
    }
}

fn parse_index(line: usize, tok: &str, n: usize) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| parse_error(line, format!("invalid vertex index {tok:?}")))?;
    if v >= n {
        return Err(parse_error(line, format!("vertex index {v} out of range for n={n}")));
    }
    Ok(v)
}

pub fn write_hypergraph_string(h: &Hypergraph) -> String {
    let mut out = format!("{VERSION_COMMENT}\nn {}\n", h.n());
    for &(i, j) in h.two_edges() {
        writeln!(out, "e2 {i} {j}").unwrap();
    }
    for &(i, j, k) in h.three_edges() {
        writeln!(out, "e3 {i} {j} {k}").unwrap();
    }
    out
}

/// Parses a hypergraph file: an `n <count>` header, then `e2 i j` and
/// `e3 i j k` lines with strictly increasing indices. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_hypergraph(text: &str) -> Result<Hypergraph> {
    let mut h: Option<Hypergraph> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(comment) = s.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("format_version=") {
                check_version(line, v)?;
            }
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        let Some(hg) = h.as_mut() else {
            if toks.len() != 2 || toks[0] != "n" {
                return Err(parse_error(line, "expected header `n <count>`"));
            }
            let n = toks[1]
                .parse()
                .map_err(|_| parse_error(line, format!("invalid vertex count {:?}", toks[1])))?;
            h = Some(Hypergraph::new(n));
            continue;
        };
        let n = hg.n();
        match (toks[0], toks.len()) {
            ("e2", 3) => {
                let (i, j) = (parse_index(line, toks[1], n)?, parse_index(line, toks[2], n)?);
                if i >= j {
                    return Err(parse_error(line, "2-edge indices must be strictly increasing"));
                }
                if !hg.add_two_edge(i, j)? {
                    return Err(parse_error(line, format!("duplicate 2-edge ({i}, {j})")));
                }
            }
            ("e3", 4) => {
                let v = [
                    parse_index(line, toks[1], n)?,
                    parse_index(line, toks[2], n)?,
                    parse_index(line, toks[3], n)?,
                ];
                if !(v[0] < v[1] && v[1] < v[2]) {
                    return Err(parse_error(line, "3-edge indices must be strictly increasing"));
                }
                if !hg.add_three_edge(v[0], v[1], v[2])? {
                    return Err(parse_error(line, format!("duplicate 3-edge ({}, {}, {})", v[0], v[1], v[2])));
                }
            }
            ("n", _) => return Err(parse_error(line, "repeated header")),
            _ => return Err(parse_error(line, format!("unrecognized record {s:?}"))),
        }
    }
    h.ok_or_else(|| parse_error(text.lines().count().max(1), "missing header `n <count>`"))
}

pub fn write_observations_string(x: &ObservationMatrix) -> String {
    let mut out = format!("{VERSION_COMMENT}\n# n={}\ni,j,count\n", x.n());
    for (i, j, c) in x.nonzero() {
        writeln!(out, "{i},{j},{c}").unwrap();
    }
    out
}

/// Parses the sparse observation CSV: `# n=<count>` comment, `i,j,count`
/// header, one row per pair with `i < j`. Missing pairs are zero.
pub fn parse_observations(text: &str) -> Result<ObservationMatrix> {
    let mut n: Option<usize> = None;
    let mut header_line = 1;
    for (idx, raw) in text.lines().enumerate() {
        let s = raw.trim();
        let Some(comment) = s.strip_prefix('#') else {
            if s.is_empty() {
                continue;
            }
            header_line = idx + 1;
            break;
        };
        let comment = comment.trim();
        if let Some(v) = comment.strip_prefix("n=") {
            n = Some(
                v.trim()
                    .parse()
                    .map_err(|_| parse_error(idx + 1, format!("invalid vertex count {v:?}")))?,
            );
        } else if let Some(v) = comment.strip_prefix("format_version=") {
            check_version(idx + 1, v)?;
        }
    }
    let n = n.ok_or_else(|| parse_error(1, "missing `# n=<count>` comment"))?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["i", "j", "count"] {
        return Err(parse_error(header_line, "expected header `i,j,count`"));
    }
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_error(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let i = parse_index(line, &rec[0], n)?;
        let j = parse_index(line, &rec[1], n)?;
        if i >= j {
            return Err(parse_error(line, "pair indices must satisfy i < j"));
        }
        let c: u64 = rec[2]
            .parse()
            .map_err(|_| parse_error(line, format!("invalid count {:?}", &rec[2])))?;
        if !seen.insert((i, j)) {
            return Err(parse_error(line, format!("duplicate pair ({i}, {j})")));
        }
        entries.push((i, j, c));
    }
    ObservationMatrix::from_sparse(n, entries)
}

/// Parses `entity,group` membership rows (with that header).
pub fn parse_bipartite(text: &str) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["entity", "group"] {
        return Err(parse_error(1, "expected header `entity,group`"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(parse_error(line, "expected non-empty `entity,group`"));
        }
        rows.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(rows)
}

pub fn read_hypergraph(path: impl AsRef<Path>) -> Result<Hypergraph> {
    parse_hypergraph(&std::fs::read_to_string(path)?)
}

pub fn write_hypergraph(path: impl AsRef<Path>, h: &Hypergraph) -> Result<()> {
    Ok(std::fs::write(path, write_hypergraph_string(h))?)
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<ObservationMatrix> {
    parse_observations(&std::fs::read_to_string(path)?)
}

pub fn write_observations(path: impl AsRef<Path>, x: &ObservationMatrix) -> Result<()> {
    Ok(std::fs::write(path, write_observations_string(x))?)
}

pub fn read_bipartite(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    parse_bipartite(&std::fs::read_to_string(path)?)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    Ok(std::fs::write(path, to_json_string(value)?)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Hash of the canonical JSON encoding of a value.
pub fn json_sha256<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

/// Where a result came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub config_sha256: String,
    /// Hash of the observation file contents, when inference read one.
    pub data_sha256: Option<String>,
    pub master_seed: u64,
    pub rng: String,
}

impl Provenance {
    pub fn new<C: Serialize>(config: &C, data: Option<&ObservationMatrix>, master_seed: u64) -> Result<Self> {
        Ok(Provenance {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: json_sha256(config)?,
            data_sha256: data.map(|x| sha256_hex(write_observations_string(x).as_bytes())),
            master_seed,
            rng: crate::rng::RNG_NAME.to_string(),
        })
    }
}
