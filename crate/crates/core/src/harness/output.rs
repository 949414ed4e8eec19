use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ExperimentKind};
use super::runners::ExperimentResult;
use crate::error::Result;

/// Fixed rendering of a CSV value: integers without a fraction, other finite
/// values in 10-digit scientific notation, NaN as an empty field.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.9e}")
    }
}

const KEY_COLUMNS: [&str; 8] = ["cell", "ensemble", "n", "s", "m", "sigma", "label", "trials"];

/// Header row plus one row per cell, in cell order.
pub fn csv_string(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(result.columns.iter().map(String::as_str));
    header.push("error");
    w.write_record(&header)?;
    for r in &result.records {
        let mut row = vec![
            r.cell.to_string(),
            r.ensemble.clone(),
            r.n.to_string(),
            r.s.to_string(),
            r.m.to_string(),
            format_value(r.sigma),
            r.label.clone(),
            r.trials.to_string(),
        ];
        row.extend(r.metrics.iter().map(|m| format_value(m.value)));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Whitespace-delimited table for gnuplot; strings are quoted, NaN is `NaN`.
pub fn dat_string(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", KEY_COLUMNS.join(" "), result.columns.join(" "));
    for r in &result.records {
        let _ = write!(out, "{} \"{}\" {} {} {} {} \"{}\" {}", r.cell, r.ensemble, r.n, r.s, r.m, r.sigma, r.label, r.trials);
        for m in &r.metrics {
            let v = if m.value.is_nan() { "NaN".to_string() } else { format!("{}", m.value) };
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

fn column(result: &ExperimentResult, name: &str) -> usize {
    // gnuplot columns are 1-based
    KEY_COLUMNS.len() + 1 + result.columns.iter().position(|c| c == name).unwrap_or(0)
}

/// A plotting script for the experiment's headline quantity against `m`.
pub fn gnuplot_script(result: &ExperimentResult, dat_name: &str) -> String {
    let m = 5;
    let (ylabel, y, extra, logscale) = match result.kind {
        ExperimentKind::PhaseTransition | ExperimentKind::EnsembleCompare => {
            ("success rate", column(result, "success_rate"), None, "")
        }
        ExperimentKind::ErrorScaling => (
            "median squared l2 error",
            column(result, "median_l2_sq"),
            Some(("l2 bound squared", column(result, "l2_bound_sq"))),
            "set logscale xy\n",
        ),
        ExperimentKind::CertificateRate => {
            ("certificate success rate", column(result, "success_rate"), Some(("reference", column(result, "ref_probability"))), "")
        }
        ExperimentKind::EstimateSweep => {
            ("event frequency", column(result, "empirical_rate"), Some(("bound", column(result, "bound"))), "")
        }
    };
    let mut s = String::new();
    let _ = writeln!(s, "# {} (seed {}, config {})", result.kind.name(), result.seed, result.config_hash);
    let _ = write!(s, "set xlabel \"m\"\nset ylabel \"{ylabel}\"\n{logscale}set key outside\n");
    let _ = write!(s, "plot \"{dat_name}\" using {m}:{y} with points title \"empirical\"");
    if let Some((title, c)) = extra {
        let _ = write!(s, ", \\\n     \"{dat_name}\" using {m}:{c} with lines title \"{title}\"");
    }
    s.push('\n');
    s
}

/// Files written for one experiment.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub dat: PathBuf,
    pub gp: PathBuf,
    pub config: PathBuf,
}

/// The config sidecar stored next to a results CSV, used by replay.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    csv.with_file_name(format!("{stem}.config.json"))
}

/// Writes `<kind>.csv`, `.json`, `.dat`, `.gp` and `.config.json` into `dir`.
pub fn write_outputs(result: &ExperimentResult, cfg: &ExperimentConfig, dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let stem = result.kind.name();
    let csv = dir.join(format!("{stem}.csv"));
    let paths = OutputPaths {
        json: dir.join(format!("{stem}.json")),
        dat: dir.join(format!("{stem}.dat")),
        gp: dir.join(format!("{stem}.gp")),
        config: sidecar_path(&csv),
        csv,
    };
    std::fs::write(&paths.csv, csv_string(result)?)?;
    std::fs::write(&paths.json, serde_json::to_string_pretty(result)?)?;
    let dat = dat_string(result);
    std::fs::write(&paths.dat, dat)?;
    let dat_name = paths.dat.file_name().and_then(|s| s.to_str()).unwrap_or("data.dat");
    std::fs::write(&paths.gp, gnuplot_script(result, dat_name))?;
    std::fs::write(&paths.config, serde_json::to_string_pretty(cfg)?)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(3.0), "3");
        assert_eq!(format_value(0.95), "9.500000000e-1");
        assert_eq!(format_value(f64::NAN), "");
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(format_value(-1.5e-8), "-1.500000000e-8");
    }

    #[test]
    fn sidecar_next_to_csv() {
        assert_eq!(sidecar_path(Path::new("out/phase_transition.csv")), Path::new("out/phase_transition.config.json"));
    }
}
