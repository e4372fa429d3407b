//! Complex-pair text files and atomic output writes.
//!
//! A complex-pair file holds one complex number per line as two
//! whitespace-separated reals `re im`. Text after `#` is a comment and blank
//! lines are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result, C64};

pub fn parse_complex_pairs(text: &str) -> Result<Vec<C64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = || Error::Config { line: i + 1, message: format!("expected `re im`, got '{content}'") };
        let mut parts = content.split_whitespace();
        let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        out.push(C64::new(re, im));
    }
    Ok(out)
}

pub fn format_complex_pairs(values: &[C64]) -> String {
    values.iter().map(|z| format!("{:.16e} {:.16e}\n", z.re, z.im)).collect()
}

pub fn read_complex_pairs(path: &Path) -> Result<Vec<C64>> {
    parse_complex_pairs(&fs::read_to_string(path)?)
}

pub fn write_complex_pairs(path: &Path, values: &[C64]) -> Result<()> {
    write_atomic(path, format_complex_pairs(values).as_bytes())
}

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = staging_path(path);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `files` (paths relative to `dir`) into a staging directory and renames it to `dir`,
/// replacing any previous contents.
pub fn write_tree_atomic(dir: &Path, files: &[(PathBuf, String)]) -> Result<()> {
    let tmp = staging_path(dir);
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    for (rel, contents) in files {
        if rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
            return Err(Error::InvalidArgument(format!("output path {} escapes the bundle", rel.display())));
        }
        let path = tmp.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    if let Some(parent) = dir.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_and_blank_lines() {
        let v = parse_complex_pairs("# header\n1 2\n\n  -0.5e-3   4  # trailing\n").unwrap();
        assert_eq!(v, vec![C64::new(1.0, 2.0), C64::new(-0.5e-3, 4.0)]);
    }

    #[test]
    fn malformed_lines_are_located() {
        for (text, line) in [("1 2\n3\n", 2), ("1 2 3\n", 1), ("# c\nx 1\n", 2)] {
            match parse_complex_pairs(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn atomic_directory_replaces_contents() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("cell");
        write_tree_atomic(&dir, &[("a.csv".into(), "1".into()), ("sub/b.csv".into(), "2".into())]).unwrap();
        assert_eq!(fs::read_to_string(dir.join("sub/b.csv")).unwrap(), "2");
        write_tree_atomic(&dir, &[("a.csv".into(), "3".into())]).unwrap();
        assert_eq!(fs::read_to_string(dir.join("a.csv")).unwrap(), "3");
        assert!(!dir.join("sub").exists());
        assert!(!root.path().join("cell.partial").exists());
        assert!(write_tree_atomic(&dir, &[("../x".into(), String::new())]).is_err());
    }

    proptest! {
        #[test]
        fn pairs_round_trip_exactly(v in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..40)) {
            let values: Vec<C64> = v.iter().map(|&(a, b)| C64::new(a, b)).collect();
            prop_assert_eq!(parse_complex_pairs(&format_complex_pairs(&values)).unwrap(), values);
        }
    }
}
