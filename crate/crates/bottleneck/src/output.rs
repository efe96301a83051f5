//! CSV tables and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

/// One result file held in memory until the run has finished.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    /// File name inside the output directory.
    pub name: String,
    /// Full contents.
    pub contents: String,
}

/// CSV with a `time` column followed by one column per series.
///
/// Every series must have one value per time point.
pub fn csv_table(times: &[f64], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("time");
    for (name, values) in columns {
        assert_eq!(values.len(), times.len(), "column {name} has the wrong length");
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, t) in times.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for (_, values) in columns {
            write!(out, ",{}", values[k]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Standard `time,F_a,F_b` table.
pub fn cdf_table(times: &[f64], fa: &[f64], fb: &[f64]) -> String {
    csv_table(times, &[("F_a", fa), ("F_b", fb)])
}

/// Writes every file to `dir` through a temporary sibling and a rename, so a
/// reader never sees a half-written file.
pub fn write_all(dir: &Path, files: &[OutputFile]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for file in files {
        let target = dir.join(&file.name);
        let tmp = dir.join(format!(".{}.tmp", file.name));
        let mut handle = fs::File::create(&tmp)?;
        handle.write_all(file.contents.as_bytes())?;
        handle.sync_all()?;
        drop(handle);
        fs::rename(&tmp, &target)?;
    }
    Ok(())
}
