//! alist parity-check files: dimensions, maximum degrees, the degree of every
//! column and row, then the 1-based neighbor lists of columns and rows, zero padded.

use std::io::{BufRead, Write};
use std::path::Path;

use cvqkd_core::ldpc::SparseParityCheck;

use super::{create, open};
use crate::error::{LabError, LabResult};

/// Writes `code` in alist layout.
pub fn write_alist<W: Write>(code: &SparseParityCheck, mut w: W) -> std::io::Result<()> {
    let (n, m) = (code.n(), code.m_rows());
    let col_deg: Vec<usize> = (0..n).map(|v| code.col(v).len()).collect();
    let row_deg: Vec<usize> = (0..m).map(|c| code.row(c).len()).collect();
    let max_col = col_deg.iter().copied().max().unwrap_or(0);
    let max_row = row_deg.iter().copied().max().unwrap_or(0);
    writeln!(w, "{n} {m}")?;
    writeln!(w, "{max_col} {max_row}")?;
    writeln!(w, "{}", join(col_deg.iter().copied()))?;
    writeln!(w, "{}", join(row_deg.iter().copied()))?;
    for v in 0..n {
        let mut checks: Vec<usize> = code.col(v).iter().map(|&c| c as usize + 1).collect();
        checks.sort_unstable();
        checks.resize(max_col, 0);
        writeln!(w, "{}", join(checks.into_iter()))?;
    }
    for c in 0..m {
        let mut vars: Vec<usize> = code.row(c).iter().map(|&v| v as usize + 1).collect();
        vars.sort_unstable();
        vars.resize(max_row, 0);
        writeln!(w, "{}", join(vars.into_iter()))?;
    }
    w.flush()
}

fn join(it: impl Iterator<Item = usize>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn save_alist(code: &SparseParityCheck, path: &Path) -> LabResult<()> {
    write_alist(code, create(path)?).map_err(|e| LabError::io(path, e))
}

/// Parses an alist stream; `path` only labels errors.
pub fn read_alist<R: BufRead>(r: R, path: &Path) -> LabResult<SparseParityCheck> {
    let mut lines = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| LabError::io(path, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut it = lines.iter();
    let mut next = |what: &str| -> LabResult<(usize, Vec<usize>)> {
        let (no, text) = it
            .next()
            .ok_or_else(|| LabError::parse(path, lines.last().map_or(0, |l| l.0), format!("missing {what}")))?;
        let nums = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| LabError::parse(path, *no, format!("bad integer '{t}' in {what}"))))
            .collect::<LabResult<Vec<_>>>()?;
        Ok((*no, nums))
    };
    let expect = |no: usize, nums: &[usize], len: usize, what: &str| -> LabResult<()> {
        if nums.len() == len {
            Ok(())
        } else {
            Err(LabError::parse(path, no, format!("{what}: expected {len} values, got {}", nums.len())))
        }
    };

    let (no, dims) = next("dimensions")?;
    expect(no, &dims, 2, "dimensions")?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(LabError::parse(path, no, "empty matrix"));
    }
    let (no, maxes) = next("maximum degrees")?;
    expect(no, &maxes, 2, "maximum degrees")?;
    let (max_col, max_row) = (maxes[0], maxes[1]);
    let (no_cd, col_deg) = next("column degrees")?;
    expect(no_cd, &col_deg, n, "column degrees")?;
    let (no_rd, row_deg) = next("row degrees")?;
    expect(no_rd, &row_deg, m, "row degrees")?;
    if col_deg.iter().any(|&d| d > max_col) {
        return Err(LabError::parse(path, no_cd, "column degree exceeds maximum"));
    }
    if row_deg.iter().any(|&d| d > max_row) {
        return Err(LabError::parse(path, no_rd, "row degree exceeds maximum"));
    }

    let mut edges = Vec::new();
    for (v, &deg) in col_deg.iter().enumerate() {
        let (no, list) = next("column list")?;
        neighbors(&list, deg, max_col, m, path, no)?.for_each(|c| edges.push((c as u32, v as u32)));
    }
    let mut from_rows = Vec::new();
    for (c, &deg) in row_deg.iter().enumerate() {
        let (no, list) = next("row list")?;
        neighbors(&list, deg, max_row, n, path, no)?.for_each(|v| from_rows.push((c as u32, v as u32)));
    }
    if let Some((no, _)) = it.next() {
        return Err(LabError::parse(path, *no, "trailing data"));
    }
    edges.sort_unstable();
    from_rows.sort_unstable();
    if edges != from_rows {
        return Err(LabError::format(path, "row and column lists disagree"));
    }
    SparseParityCheck::from_edges(n, m, &edges).map_err(|e| LabError::format(path, e.to_string()))
}

fn neighbors<'a>(
    list: &'a [usize],
    deg: usize,
    width: usize,
    bound: usize,
    path: &Path,
    no: usize,
) -> LabResult<impl Iterator<Item = usize> + 'a> {
    if list.len() != width && list.len() != deg {
        return Err(LabError::parse(path, no, format!("expected {width} entries, got {}", list.len())));
    }
    if list[..deg].iter().any(|&x| x == 0 || x > bound) {
        return Err(LabError::parse(path, no, format!("index outside 1..={bound}")));
    }
    if list[deg..].iter().any(|&x| x != 0) {
        return Err(LabError::parse(path, no, "nonzero padding"));
    }
    Ok(list[..deg].iter().map(|&x| x - 1))
}

pub fn load_alist(path: &Path) -> LabResult<SparseParityCheck> {
    read_alist(open(path)?, path)
}
