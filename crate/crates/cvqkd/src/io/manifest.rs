//! Catalog manifests: one code per line, `code_id path rate snr_threshold`,
//! whitespace separated, `#` starts a comment. Paths are relative to the manifest.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use super::{create, open};
use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub code_id: String,
    pub path: PathBuf,
    pub rate: f64,
    pub snr_threshold: f64,
}

pub fn read_manifest<R: BufRead>(r: R, path: &Path) -> LabResult<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| LabError::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 4 {
            return Err(LabError::parse(path, no, format!("expected 4 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| LabError::parse(path, no, format!("bad {what} '{s}'")))
        };
        let rate = num(f[2], "rate")?;
        let snr_threshold = num(f[3], "snr_threshold")?;
        if !(rate > 0.0 && rate < 1.0) || !(snr_threshold > 0.0) {
            return Err(LabError::parse(path, no, "rate must lie in (0, 1) and threshold be positive"));
        }
        if out.iter().any(|e: &ManifestEntry| e.code_id == f[0]) {
            return Err(LabError::parse(path, no, format!("duplicate code_id '{}'", f[0])));
        }
        out.push(ManifestEntry {
            code_id: f[0].to_string(),
            path: base.join(f[1]),
            rate,
            snr_threshold,
        });
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> LabResult<Vec<ManifestEntry>> {
    read_manifest(open(path)?, path)
}

/// Writes entries with paths stored as given.
pub fn save_manifest(entries: &[ManifestEntry], path: &Path) -> LabResult<()> {
    let mut w = create(path)?;
    let mut text = String::from("# code_id path rate snr_threshold\n");
    for e in entries {
        text += &format!("{} {} {} {}\n", e.code_id, e.path.display(), e.rate, e.snr_threshold);
    }
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| LabError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_relative_paths_and_comments() {
        let text = "# catalog\nhalf half.alist 0.5 1.3\n\ntenth tenth.alist 0.097 0.1685 # low snr\n";
        let e = read_manifest(text.as_bytes(), Path::new("/codes/catalog.txt")).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].path, Path::new("/codes/tenth.alist"));
        assert_eq!(e[1].snr_threshold, 0.1685);
    }

    #[test]
    fn reports_line_of_bad_entry() {
        for (text, line) in [("a a.alist 0.5\n", 1), ("a a.alist 0.5 1\nb b.alist 1.5 1\n", 2), ("\na a 0.5 x\n", 2)] {
            match read_manifest(text.as_bytes(), Path::new("m")) {
                Err(LabError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{other:?}"),
            }
        }
    }
}
