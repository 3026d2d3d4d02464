//! The single writer: every file is rendered in memory, written to a hidden
//! temporary next to its target and renamed into place only once all of them
//! are on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::report::Report;
use crate::CliError;

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_report(report: &Report, default_name: &str) -> Result<Vec<PathBuf>, CliError> {
    let out = &report.config.output;
    let stem = out.name.clone().unwrap_or_else(|| default_name.to_string());
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if out.format.json() {
        let text = report.to_json()?;
        Report::round_trip(&text)?;
        files.push((out.dir.join(format!("{stem}.json")), text));
    }
    if out.format.csv() {
        files.push((out.dir.join(format!("{stem}.csv")), report.to_csv()?));
    }
    fs::create_dir_all(&out.dir).map_err(|e| io(&out.dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (target, text) in &files {
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("report");
        let tmp = target.with_file_name(format!(".{name}.tmp"));
        let result = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(text.as_bytes())?;
            f.sync_all()
        });
        if let Err(e) = result {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io(&tmp, e));
        }
        staged.push((tmp, target.clone()));
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target).map_err(|e| io(target, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
