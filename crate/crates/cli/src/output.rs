//! Delimited-text and JSON writers with checksums.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ghostdiff::Pattern;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes files under one root and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write(&mut self, rel: &str, data: &[u8]) -> io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, data)?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }
}

/// Three-column text: coordinate, value, standard error. Masked samples
/// are written as `nan`.
pub fn pattern_tsv(p: &Pattern<f64>, coordinate: &str) -> String {
    let mut out = format!("{coordinate}\tvalue\tstandard_error\n");
    for i in 0..p.len() {
        let x = p.axis.coordinate(i);
        if p.mask[i] {
            out.push_str(&format!("{x}\t{}\t{}\n", p.values[i], p.std_error[i]));
        } else {
            out.push_str(&format!("{x}\tnan\tnan\n"));
        }
    }
    out
}

/// Parses [`pattern_tsv`] output back into a pattern on a uniform axis.
pub fn read_pattern_tsv(text: &str) -> Result<Pattern<f64>, String> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut es = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(format!("line {}: expected at least two columns", ln + 1));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", ln + 1))
        };
        xs.push(num(cols[0])?);
        vs.push(num(cols[1])?);
        es.push(cols.get(2).map(|c| num(c)).transpose()?.unwrap_or(f64::NAN));
    }
    if xs.len() < 2 {
        return Err("pattern has fewer than two rows".into());
    }
    let pitch = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + pitch * i as f64)).abs() > 1e-6 * pitch.abs() {
            return Err(format!("coordinate column is not uniform at row {}", i + 1));
        }
    }
    let axis = ghostdiff::GridAxis::new(xs.len(), pitch, xs[0]).map_err(|e| e.to_string())?;
    let mask: Vec<bool> = vs.iter().map(|v| v.is_finite()).collect();
    let values = vs.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    let mut p = Pattern::new(axis, values);
    p.mask = mask;
    p.std_error = es;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ghostdiff::GridAxis;

    #[test]
    fn tsv_round_trip() {
        let axis = GridAxis::new(4, 0.5, -1.0).unwrap();
        let mut p = Pattern::new(axis, vec![1.0, 2.5, -3.0, 0.125]);
        p.mask[2] = false;
        p.values[2] = 0.0;
        let back = read_pattern_tsv(&pattern_tsv(&p, "x_um")).unwrap();
        assert_eq!(back.values, p.values);
        assert_eq!(back.mask, p.mask);
        assert!(back.axis.matches(&p.axis));
    }

    #[test]
    fn rejects_ragged_axis() {
        assert!(read_pattern_tsv("x\tv\n0\t1\n1\t1\n3\t1\n").is_err());
        assert!(read_pattern_tsv("x\tv\n0\t1\n").is_err());
    }
}
