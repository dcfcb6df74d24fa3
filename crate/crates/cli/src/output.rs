use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use coop_bandits::simulator::format_float;

use crate::experiment::{mean, sample_std, PointResult};
use crate::CliError;

pub const SUMMARY_HEADER: &str = "policy,gamma,gamma_value,alpha,horizon,repetitions,mean_regret,std_regret,lower_bound,clique_cover_number,independence_number";

fn alpha_label(r: &PointResult) -> String {
    r.point
        .instance
        .alpha()
        .map_or_else(|| "na".into(), |a| a.to_string())
}

pub fn curve_file_name(r: &PointResult) -> String {
    format!(
        "curve_{}_gamma-{}_alpha-{}.csv",
        r.point.policy,
        r.point.gamma.label(),
        alpha_label(r)
    )
}

pub fn curve_csv(r: &PointResult) -> String {
    let mut out = String::from("round,mean_regret,std_regret\n");
    for (i, (m, s)) in r.curve().into_iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, format_float(m), format_float(s));
    }
    out
}

fn mean_usize(xs: impl Iterator<Item = usize>) -> f64 {
    let v: Vec<f64> = xs.map(|x| x as f64).collect();
    mean(&v)
}

pub fn summary_csv(results: &[PointResult]) -> String {
    let mut sorted: Vec<&PointResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.point
            .policy
            .name()
            .cmp(b.point.policy.name())
            .then(a.point.gamma.sort_key().cmp(&b.point.gamma.sort_key()))
            .then(
                a.point
                    .instance
                    .alpha()
                    .unwrap_or(0.0)
                    .total_cmp(&b.point.instance.alpha().unwrap_or(0.0)),
            )
    });
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in sorted {
        let finals = r.final_regrets();
        let bounds: Vec<f64> = r.reps.iter().map(|x| x.lower_bound).collect();
        // a fixed instance reports its exact bound rather than a rounded mean
        let lower = if bounds.windows(2).all(|w| w[0] == w[1]) {
            bounds[0]
        } else {
            mean(&bounds)
        };
        let alpha = r
            .point
            .instance
            .alpha()
            .map_or_else(String::new, format_float);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.point.policy,
            r.point.gamma.label(),
            format_float(mean_usize(r.reps.iter().map(|x| x.gamma))),
            alpha,
            r.reps[0].cumulative.len(),
            r.reps.len(),
            format_float(mean(&finals)),
            format_float(sample_std(&finals)),
            format_float(lower),
            format_float(mean_usize(r.reps.iter().map(|x| x.cover_blocks))),
            format_float(mean_usize(r.reps.iter().map(|x| x.leaders))),
        );
    }
    out
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

/// Writes one curve file per point plus `summary_name`; returns the paths written.
pub fn write_results(
    dir: &Path,
    results: &[PointResult],
    summary_name: &str,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for r in results {
        written.push(write(dir.join(curve_file_name(r)), &curve_csv(r))?);
    }
    written.push(write(dir.join(summary_name), &summary_csv(results))?);
    Ok(written)
}
