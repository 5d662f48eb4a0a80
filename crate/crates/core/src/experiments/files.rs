//! Plain-text region and string files.
//!
//! Region files list one bond per line as `row col h|v`. String files list
//! one domain per line in circuit order:
//!
//! ```text
//! plaquette 3 4
//! disk 5 5 1
//! edges 2 3 h, 2 4 v
//! ```
//!
//! Both accept `#` comments and an optional `lattice L d` header that must
//! match the lattice in use.

use std::fmt::Write as _;
use std::path::Path;

use crate::circuits::{DomainShape, DomainString};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Orientation};
use crate::region::Region;

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn int(tok: Option<&str>, what: &str) -> std::result::Result<isize, String> {
    let t = tok.ok_or_else(|| format!("missing {what}"))?;
    t.parse().map_err(|_| format!("bad {what} `{t}`"))
}

fn triple(text: &str) -> std::result::Result<(isize, isize, Orientation), String> {
    let mut it = text.split_whitespace();
    let r = int(it.next(), "row")?;
    let c = int(it.next(), "column")?;
    let o = it.next().ok_or("missing orientation")?;
    let o = Orientation::from_symbol(o).ok_or_else(|| format!("bad orientation `{o}`"))?;
    if let Some(extra) = it.next() {
        return Err(format!("unexpected `{extra}`"));
    }
    Ok((r, c, o))
}

/// Returns `Ok(true)` when the line was a matching header.
fn header(lattice: &Lattice, line: &str) -> std::result::Result<bool, String> {
    let Some(rest) = line.strip_prefix("lattice") else {
        return Ok(false);
    };
    let mut it = rest.split_whitespace();
    let l = int(it.next(), "lattice size")?;
    let d = int(it.next(), "lattice dimension")?;
    if l as usize != lattice.size() || d as u32 != lattice.dim() {
        return Err(format!(
            "file is for L={l} d={d}, lattice is L={} d={}",
            lattice.size(),
            lattice.dim()
        ));
    }
    Ok(true)
}

/// `(L, d)` from a `lattice L d` header, if the text has one.
pub fn lattice_header(text: &str) -> Option<(usize, u32)> {
    let (_, line) = lines(text).find(|(_, l)| l.starts_with("lattice"))?;
    let mut it = line["lattice".len()..].split_whitespace();
    Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
}

pub fn parse_region(lattice: &Lattice, text: &str, source: &str) -> Result<Region> {
    let mut triples = Vec::new();
    for (n, line) in lines(text) {
        let at = |m: String| Error::parse(format!("{source}:{n}"), m);
        if header(lattice, line).map_err(at)? {
            continue;
        }
        triples.push(triple(line).map_err(at)?);
    }
    Region::from_triples(lattice, &triples)
}

pub fn format_region(lattice: &Lattice, region: &Region) -> String {
    let mut out = format!("lattice {} {}\n", lattice.size(), lattice.dim());
    for (r, c, o) in region.to_triples(lattice) {
        let _ = writeln!(out, "{r} {c} {}", o.symbol());
    }
    out
}

pub fn parse_string(lattice: &Lattice, text: &str, source: &str) -> Result<DomainString> {
    let mut domains = Vec::new();
    for (n, line) in lines(text) {
        let at = |m: String| Error::parse(format!("{source}:{n}"), m);
        if header(lattice, line).map_err(at)? {
            continue;
        }
        let (kind, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let mut it = rest.split_whitespace();
        let domain = match kind {
            "plaquette" => {
                let r = int(it.next(), "row").map_err(at)?;
                let c = int(it.next(), "column").map_err(at)?;
                DomainShape::Plaquette.at(lattice, r, c)
            }
            "disk" => {
                let r = int(it.next(), "row").map_err(at)?;
                let c = int(it.next(), "column").map_err(at)?;
                let radius = int(it.next(), "radius").map_err(at)?;
                if radius < 0 {
                    return Err(at("negative radius".into()));
                }
                DomainShape::Disk {
                    radius: radius as usize,
                }
                .at(lattice, r, c)
            }
            "edges" => {
                let ts = rest
                    .split(',')
                    .map(triple)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(at)?;
                Region::from_triples(lattice, &ts)?
            }
            other => return Err(at(format!("unknown domain kind `{other}`"))),
        };
        if kind != "edges" {
            if let Some(extra) = it.next() {
                return Err(at(format!("unexpected `{extra}`")));
            }
        }
        if domain.is_empty() {
            return Err(at("empty domain".into()));
        }
        domains.push(domain);
    }
    DomainString::new(domains)
}

/// Writes every domain as an explicit edge list.
pub fn format_string(lattice: &Lattice, string: &DomainString) -> String {
    let mut out = format!("lattice {} {}\n", lattice.size(), lattice.dim());
    for x in string.domains() {
        let parts: Vec<String> = x
            .to_triples(lattice)
            .into_iter()
            .map(|(r, c, o)| format!("{r} {c} {}", o.symbol()))
            .collect();
        let _ = writeln!(out, "edges {}", parts.join(", "));
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_region_file(lattice: &Lattice, path: &Path) -> Result<Region> {
    parse_region(lattice, &read(path)?, &path.display().to_string())
}

pub fn read_string_file(lattice: &Lattice, path: &Path) -> Result<DomainString> {
    parse_string(lattice, &read(path)?, &path.display().to_string())
}
