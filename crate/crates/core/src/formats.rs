//! On-disk formats. All node ids are zero-based.
//!
//! | extension | contents |
//! |-----------|----------|
//! | `.pts`    | `n d`, then `n` lines of `d` decimal floats |
//! | `.pm1`    | `n d`, then `n` lines of `d` tokens `+1` / `-1` |
//! | `.fvecs`  | per vector: `i32` LE dimension, then that many `f32` LE values (lossy) |
//! | `.adj`    | `n`, then line `i` is `i k j_1 .. j_k` with ascending neighbors |
//! | `.perm`   | `n`, then line `i` is the `n` ids of permutation row `i` |

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::model::{NodeId, PointSet};
use crate::permute::PermutationTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointFormat {
    Pts,
    Pm1,
    Fvecs,
}

impl PointFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pts") => Ok(Self::Pts),
            Some("pm1") => Ok(Self::Pm1),
            Some("fvecs") => Ok(Self::Fvecs),
            other => Err(Error::InvalidPoints(format!(
                "unknown point file extension {other:?} (expected .pts, .pm1 or .fvecs)"
            ))),
        }
    }
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(k, line)| line.map(|l| (k + 1, l)).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

fn parse_header(
    lines: &mut impl Iterator<Item = Result<(usize, String)>>,
) -> Result<(usize, usize)> {
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))??;
    let mut toks = header.split_whitespace();
    let n = parse_usize(toks.next(), no, "n")?;
    let d = parse_usize(toks.next(), no, "d")?;
    if toks.next().is_some() {
        return Err(Error::parse(no, "header must be `n d`"));
    }
    Ok((n, d))
}

fn read_matrix(
    reader: impl BufRead,
    token: impl Fn(&str) -> Option<f64>,
) -> Result<(usize, usize, Vec<f64>)> {
    let mut lines = content_lines(reader);
    let (n, d) = parse_header(&mut lines)?;
    let mut data = Vec::with_capacity(n * d);
    for row in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(row + 2, format!("expected {n} rows, found {row}")))??;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v = token(tok).ok_or_else(|| Error::parse(no, format!("invalid value {tok:?}")))?;
            data.push(v);
        }
        if data.len() - before != d {
            return Err(Error::parse(
                no,
                format!("expected {d} values, found {}", data.len() - before),
            ));
        }
    }
    if let Some(extra) = lines.next() {
        let (no, _) = extra?;
        return Err(Error::parse(no, "trailing data after last row"));
    }
    Ok((n, d, data))
}

pub fn read_pts(reader: impl BufRead) -> Result<PointSet> {
    let (n, d, data) = read_matrix(reader, |t| t.parse().ok())?;
    PointSet::new(n, d, data)
}

pub fn write_pts(ps: &PointSet, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", ps.len(), ps.dim())?;
    for row in ps.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pm1(reader: impl BufRead) -> Result<PointSet> {
    let (n, d, data) = read_matrix(reader, |t| match t {
        "+1" | "1" => Some(1.0),
        "-1" => Some(-1.0),
        _ => None,
    })?;
    PointSet::new_sign(n, d, data)
}

pub fn write_pm1(ps: &PointSet, writer: impl Write) -> Result<()> {
    if !ps.is_sign() {
        return Err(Error::WrongKind);
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", ps.len(), ps.dim())?;
    for row in ps.rows() {
        let line: Vec<&str> = row
            .iter()
            .map(|&v| if v > 0.0 { "+1" } else { "-1" })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fvecs(mut reader: impl Read) -> Result<PointSet> {
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    let mut n = 0;
    loop {
        let d = match reader.read_i32::<LittleEndian>() {
            Ok(d) => d,
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        };
        if d <= 0 {
            return Err(Error::InvalidPoints(format!(
                "vector {n} has dimension {d}"
            )));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::InvalidPoints(format!(
                    "vector {n} has dimension {d}, expected {expected}"
                )))
            }
            Some(_) => {}
        }
        let mut buf = vec![0f32; d];
        reader.read_f32_into::<LittleEndian>(&mut buf)?;
        data.extend(buf.into_iter().map(f64::from));
        n += 1;
    }
    let d = dim.ok_or_else(|| Error::InvalidPoints("empty fvecs file".into()))?;
    PointSet::new(n, d, data)
}

/// Coordinates are narrowed to `f32`.
pub fn write_fvecs(ps: &PointSet, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let d =
        i32::try_from(ps.dim()).map_err(|_| Error::out_of_range("d", ps.dim(), "<= i32::MAX"))?;
    for row in ps.rows() {
        w.write_i32::<LittleEndian>(d)?;
        for &v in row {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads by extension. `.pts` and `.fvecs` files whose entries are all `±1`
/// are tagged as sign point sets.
pub fn read_points(path: &Path) -> Result<PointSet> {
    let file = BufReader::new(File::open(path)?);
    let ps = match PointFormat::from_path(path)? {
        PointFormat::Pts => read_pts(file)?,
        PointFormat::Pm1 => return read_pm1(file),
        PointFormat::Fvecs => read_fvecs(file)?,
    };
    let all_signs = ps.as_slice().iter().all(|&v| v == 1.0 || v == -1.0);
    if all_signs {
        ps.into_sign()
    } else {
        Ok(ps)
    }
}

pub fn write_points(ps: &PointSet, path: &Path) -> Result<()> {
    let format = PointFormat::from_path(path)?;
    let file = File::create(path)?;
    match format {
        PointFormat::Pts => write_pts(ps, file),
        PointFormat::Pm1 => write_pm1(ps, file),
        PointFormat::Fvecs => write_fvecs(ps, file),
    }
}

fn parse_count_header(lines: &mut impl Iterator<Item = Result<(usize, String)>>) -> Result<usize> {
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))??;
    let mut toks = header.split_whitespace();
    let n = parse_usize(toks.next(), no, "n")?;
    if toks.next().is_some() {
        return Err(Error::parse(no, "header must be `n`"));
    }
    Ok(n)
}

pub fn read_adj(reader: impl BufRead) -> Result<DirectedGraph> {
    let mut lines = content_lines(reader);
    let n = parse_count_header(&mut lines)?;
    let mut adj: Vec<Vec<NodeId>> = Vec::with_capacity(n);
    for i in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(i + 2, format!("expected {n} nodes, found {i}")))??;
        let mut toks = line.split_whitespace();
        let id = parse_usize(toks.next(), no, "node id")?;
        if id != i {
            return Err(Error::parse(no, format!("expected node {i}, found {id}")));
        }
        let k = parse_usize(toks.next(), no, "degree")?;
        let list = toks
            .map(|t| parse_usize(Some(t), no, "neighbor"))
            .collect::<Result<Vec<_>>>()?;
        if list.len() != k {
            return Err(Error::parse(
                no,
                format!("degree {k} but {} neighbors", list.len()),
            ));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(no, "neighbors must be strictly ascending"));
        }
        if list.iter().any(|&j| j >= n || j == i) {
            return Err(Error::parse(no, "neighbor out of range or self-loop"));
        }
        adj.push(list);
    }
    if let Some(extra) = lines.next() {
        let (no, _) = extra?;
        return Err(Error::parse(no, "trailing data after last node"));
    }
    DirectedGraph::from_adjacency(adj)
}

pub fn write_adj(g: &DirectedGraph, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", g.len())?;
    for i in 0..g.len() {
        let nbrs = g.neighbors(i);
        write!(w, "{i} {}", nbrs.len())?;
        for j in nbrs {
            write!(w, " {j}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_adj_file(path: &Path) -> Result<DirectedGraph> {
    read_adj(BufReader::new(File::open(path)?))
}

pub fn write_adj_file(g: &DirectedGraph, path: &Path) -> Result<()> {
    write_adj(g, File::create(path)?)
}

pub fn read_perm(reader: impl BufRead) -> Result<PermutationTable> {
    let mut lines = content_lines(reader);
    let n = parse_count_header(&mut lines)?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(i + 2, format!("expected {n} rows, found {i}")))??;
        let row = line
            .split_whitespace()
            .map(|t| parse_usize(Some(t), no, "node id"))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    PermutationTable::from_rows(rows)
}

pub fn write_perm(pt: &PermutationTable, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", pt.len())?;
    for i in 0..pt.len() {
        let line: Vec<String> = pt.row(i).iter().map(u32::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}
