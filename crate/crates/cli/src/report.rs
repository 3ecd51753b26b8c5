use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cil_core::MetricsReport;

use crate::config::config_hash;
use crate::error::{CliError, CliResult};

/// A report file that could not be used, with the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    /// `config_hash,seed,task,accuracy,mean_accuracy` with the mean taken
    /// over seeds sharing the hash and task.
    pub csv: String,
    pub loaded: usize,
    pub skipped: Vec<Skipped>,
}

fn report_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let entries = fs::read_dir(dir).map_err(|e| e.to_string())?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("report-seed-") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err("no report-seed-*.json files".into());
    }
    Ok(files)
}

/// Merges the reports found in `dirs`. Unreadable directories and corrupt
/// reports are skipped; it is an error only when nothing could be loaded.
pub fn aggregate(dirs: &[PathBuf]) -> CliResult<Aggregate> {
    if dirs.is_empty() {
        return Err(CliError::Config("no run directories given".into()));
    }
    let mut skipped = Vec::new();
    let mut rows: Vec<(String, u64, usize, f64)> = Vec::new();
    let mut loaded = 0;
    for dir in dirs {
        let files = match report_files(dir) {
            Ok(f) => f,
            Err(reason) => {
                skipped.push(Skipped { path: dir.clone(), reason });
                continue;
            }
        };
        for path in files {
            let parsed = fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|text| MetricsReport::from_json(&text).map_err(|e| e.to_string()));
            match parsed {
                Ok(report) => {
                    loaded += 1;
                    let hash = config_hash(&report.config_echo);
                    for (k, acc) in report.per_task_accuracy.iter().enumerate() {
                        rows.push((hash.clone(), report.seed, k + 1, *acc));
                    }
                }
                Err(reason) => skipped.push(Skipped { path, reason }),
            }
        }
    }
    if loaded == 0 {
        return Err(CliError::Data(format!("no usable reports among {} candidates", skipped.len())));
    }

    rows.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    rows.dedup_by(|a, b| (&a.0, a.1, a.2) == (&b.0, b.1, b.2));
    let mut sums: BTreeMap<(&str, usize), (f64, usize)> = BTreeMap::new();
    for (hash, _, task, acc) in &rows {
        let e = sums.entry((hash.as_str(), *task)).or_default();
        e.0 += acc;
        e.1 += 1;
    }
    let mut csv = String::from("config_hash,seed,task,accuracy,mean_accuracy\n");
    for (hash, seed, task, acc) in &rows {
        let (sum, n) = sums[&(hash.as_str(), *task)];
        csv.push_str(&format!("{hash},{seed},{task},{acc},{}\n", sum / n as f64));
    }
    Ok(Aggregate { csv, loaded, skipped })
}
