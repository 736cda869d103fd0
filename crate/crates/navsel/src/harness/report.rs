use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::selection::{cumulative_regret, TrialLogEntry};

use super::precompute::CostMatrix;
use super::HarnessError;

/// Per-trial-index aggregate across deployments.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub k: usize,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Aggregated results for one selector configuration.
#[derive(Debug, Clone)]
pub struct ConfigReport {
    pub config_label: String,
    pub n_deployments: usize,
    /// Mean average navigation cost (cumulative cost over k) per trial index.
    pub avg_cost: Vec<SeriesPoint>,
    /// Mean cumulative regret per trial index.
    pub regret: Vec<SeriesPoint>,
    /// Fraction of all trials in which each policy was selected.
    pub selection_freq: BTreeMap<String, f64>,
}

/// The full report over every configuration found in a logs directory.
#[derive(Debug, Clone)]
pub struct DeploymentReport {
    pub configs: Vec<ConfigReport>,
    /// Mean cost per (policy, environment family) from the matrix alone.
    pub single_policy: Vec<(String, String, f64)>,
}

impl DeploymentReport {
    pub fn config(&self, label: &str) -> Option<&ConfigReport> {
        self.configs.iter().find(|c| c.config_label == label)
    }
}

/// Linear-interpolation quantile of already-sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn aggregate(series: &[Vec<f64>]) -> Vec<SeriesPoint> {
    if series.is_empty() {
        return Vec::new();
    }
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let mut vals: Vec<f64> = series.iter().map(|s| s[i]).collect();
            vals.sort_by(f64::total_cmp);
            SeriesPoint {
                k: i + 1,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                p10: quantile(&vals, 0.10),
                p90: quantile(&vals, 0.90),
            }
        })
        .collect()
}

fn read_log(path: &Path) -> Result<Vec<TrialLogEntry>, HarnessError> {
    let mut entries = Vec::new();
    for line in fs::read_to_string(path)?.lines() {
        if !line.trim().is_empty() {
            entries.push(serde_json::from_str(line)?);
        }
    }
    Ok(entries)
}

/// Environment family of a scenario id (`<family>-<hex seed>`).
fn family_of(scenario_id: &str) -> String {
    scenario_id
        .rsplit_once('-')
        .map(|(fam, _)| fam.to_string())
        .unwrap_or_else(|| scenario_id.to_string())
}

fn one_config(
    label: &str,
    log_files: &[PathBuf],
    matrix: &CostMatrix,
) -> Result<ConfigReport, HarnessError> {
    let mut cost_series = Vec::new();
    let mut regret_series = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total_trials = 0usize;

    let mut files = log_files.to_vec();
    files.sort();
    for path in &files {
        let log = read_log(path)?;
        if log.is_empty() {
            continue;
        }
        let mut cum = 0.0;
        let avg: Vec<f64> = log
            .iter()
            .map(|e| {
                cum += e.cost;
                cum / e.k as f64
            })
            .collect();
        cost_series.push(avg);
        regret_series.push(cumulative_regret(&log, &matrix.policies, matrix)?);
        for e in &log {
            *counts.entry(e.selected_policy.clone()).or_insert(0) += 1;
            total_trials += 1;
        }
    }
    if cost_series.is_empty() {
        return Err(HarnessError::EmptyLogs);
    }
    let selection_freq = matrix
        .policies
        .iter()
        .map(|p| {
            (
                p.clone(),
                *counts.get(p).unwrap_or(&0) as f64 / total_trials as f64,
            )
        })
        .collect();
    Ok(ConfigReport {
        config_label: label.to_string(),
        n_deployments: cost_series.len(),
        avg_cost: aggregate(&cost_series),
        regret: aggregate(&regret_series),
        selection_freq,
    })
}

/// Aggregate every configuration under `logs_dir` (either a directory of
/// per-config subdirectories or a directory of log files itself).
pub fn report(logs_dir: &Path, matrix: &CostMatrix) -> Result<DeploymentReport, HarnessError> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    let direct: Vec<PathBuf> = jsonl_files(logs_dir)?;
    if !direct.is_empty() {
        let label = logs_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "logs".into());
        groups.push((label, direct));
    } else {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(logs_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for dir in subdirs {
            let files = jsonl_files(&dir)?;
            if !files.is_empty() {
                let label = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                groups.push((label, files));
            }
        }
    }
    if groups.is_empty() {
        return Err(HarnessError::EmptyLogs);
    }

    let configs = groups
        .iter()
        .map(|(label, files)| one_config(label, files, matrix))
        .collect::<Result<Vec<_>, _>>()?;

    // Per-policy, per-family means straight from the matrix.
    let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for e in &matrix.entries {
        let key = (e.policy.clone(), family_of(&e.scenario_id));
        let slot = acc.entry(key).or_insert((0.0, 0));
        slot.0 += e.cost;
        slot.1 += 1;
    }
    let single_policy = acc
        .into_iter()
        .map(|((policy, family), (sum, n))| (policy, family, sum / n as f64))
        .collect();

    Ok(DeploymentReport {
        configs,
        single_policy,
    })
}

fn jsonl_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn series_csv(configs: &[ConfigReport], pick: impl Fn(&ConfigReport) -> &[SeriesPoint]) -> String {
    let mut out = String::from("config,k,mean,p10,p90\n");
    for config in configs {
        for p in pick(config) {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6}",
                config.config_label, p.k, p.mean, p.p10, p.p90
            )
            .expect("string write cannot fail");
        }
    }
    out
}

/// Write `avg_cost.csv`, `regret.csv`, `single_policy.csv`, and
/// `selection_freq.csv` into `out_dir`.
pub fn write_report_csvs(report: &DeploymentReport, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("avg_cost.csv"),
        series_csv(&report.configs, |c| &c.avg_cost),
    )?;
    fs::write(
        out_dir.join("regret.csv"),
        series_csv(&report.configs, |c| &c.regret),
    )?;

    let mut single = String::from("policy,environment,mean_cost\n");
    for (policy, family, mean) in &report.single_policy {
        writeln!(single, "{policy},{family},{mean:.6}").expect("string write cannot fail");
    }
    fs::write(out_dir.join("single_policy.csv"), single)?;

    let mut freq = String::from("config,policy,fraction\n");
    for config in &report.configs {
        for (policy, fraction) in &config.selection_freq {
            writeln!(freq, "{},{policy},{fraction:.6}", config.config_label)
                .expect("string write cannot fail");
        }
    }
    fs::write(out_dir.join("selection_freq.csv"), freq)?;
    Ok(())
}
