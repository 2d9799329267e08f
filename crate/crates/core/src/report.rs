//! Report emission: CSV tables, JSON mirrors, static SVG plots and a
//! provenance block. Every writer is a pure function of its inputs, so
//! reruns with the same configuration and seed produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::{ExperimentReport, RatePoint};
use crate::optimizers::Method;
use crate::spectral::StabilityVerdict;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed csv in {path}: {message}")]
    MalformedCsv { path: PathBuf, message: String },
}

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|source| ReportError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, content).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn json_to(path: &Path, value: &impl Serialize) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    write_file(path, &(text + "\n"))
}

/// Rate table: one row per (method, kappa) with the measured decay rate.
pub fn rates_csv(points: &[(Method, Vec<RatePoint>)]) -> String {
    let mut out = String::from("method,kappa,rate,one_over_rate\n");
    for (method, series) in points {
        for p in series {
            match p.rate {
                Some(r) => {
                    let _ = writeln!(out, "{},{},{},{}", method.label(), p.kappa, r, 1.0 / r);
                }
                None => {
                    let _ = writeln!(out, "{},{},divergent,divergent", method.label(), p.kappa);
                }
            }
        }
    }
    out
}

/// Slope table: fitted gamma per method.
pub fn slopes_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,distribution,gamma,residual\n");
    for s in &report.slopes {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.method.label(),
            report.distribution.label(),
            s.gamma,
            s.residual
        );
    }
    out
}

/// Chosen hyperparameters per (method, kappa).
pub fn chosen_csv(points: &[(Method, Vec<RatePoint>)]) -> String {
    let mut out =
        String::from("method,kappa,learning_rate,momentum,long_step,advantage,converged_trials\n");
    for (method, series) in points {
        for p in series {
            match p.chosen_hp {
                Some(hp) => {
                    let momentum = match method {
                        Method::Asgd | Method::AsgdReference => hp.asgd_momentum(),
                        _ => hp.alpha,
                    };
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        method.label(),
                        p.kappa,
                        hp.delta,
                        momentum,
                        hp.kappa_long,
                        hp.xi,
                        p.converged_trials
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{},{},none,none,none,none,{}",
                        method.label(),
                        p.kappa,
                        p.converged_trials
                    );
                }
            }
        }
    }
    out
}

/// Stability-verdict table rows.
pub fn verdicts_csv(rows: &[(f64, f64, StabilityVerdict)]) -> String {
    let mut out = String::from("alpha,delta,lambda_max_top,lambda_max_bottom,classification\n");
    for (alpha, delta, v) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            alpha,
            delta,
            v.lambda_max_top,
            v.lambda_max_bottom,
            v.classification.label()
        );
    }
    out
}

/// Loss trace of a single trial.
pub fn trial_csv(trace: &[(u64, f64)]) -> String {
    let mut out = String::from("iteration,loss\n");
    for (it, loss) in trace {
        let _ = writeln!(out, "{it},{loss}");
    }
    out
}

/// Writes the full bundle for one experiment report.
pub fn write_experiment_report(
    dir: &Path,
    report: &ExperimentReport,
    json: bool,
) -> Result<Vec<PathBuf>, ReportError> {
    let label = report.distribution.label();
    let mut written = Vec::new();
    let rates_path = dir.join(format!("rates_{label}.csv"));
    write_file(&rates_path, &rates_csv(&report.points))?;
    written.push(rates_path);
    let slopes_path = dir.join(format!("slopes_{label}.csv"));
    write_file(&slopes_path, &slopes_csv(report))?;
    written.push(slopes_path);
    let chosen_path = dir.join(format!("chosen_params_{label}.csv"));
    write_file(&chosen_path, &chosen_csv(&report.points))?;
    written.push(chosen_path);
    if json {
        let path = dir.join(format!("slopes_{label}.json"));
        json_to(&path, &report.slopes)?;
        written.push(path);
        let path = dir.join(format!("rates_{label}.json"));
        json_to(&path, &report.points)?;
        written.push(path);
    }
    Ok(written)
}

/// Provenance block: configuration hash, seed and version, enough to
/// re-derive every emitted file.
pub fn provenance_text(config_text: &str, master_seed: u64, command: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    format!(
        "tool = momentlab {}\ncommand = {command}\nmaster_seed = {master_seed}\nconfig_sha256 = {hex}\n",
        env!("CARGO_PKG_VERSION"),
    )
}

pub fn write_provenance(
    dir: &Path,
    config_text: &str,
    master_seed: u64,
    command: &str,
) -> Result<(), ReportError> {
    write_file(&dir.join("provenance.txt"), &provenance_text(config_text, master_seed, command))
}

/// One plotted series: label plus (kappa, 1/rate) points.
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Parses a rates CSV back into plottable series (divergent rows skipped).
pub fn read_rates_csv(path: &Path) -> Result<Vec<PlotSeries>, ReportError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "method,kappa,rate,one_over_rate" {
        return Err(ReportError::MalformedCsv {
            path: path.to_path_buf(),
            message: format!("unexpected header '{header}'"),
        });
    }
    let mut series: Vec<PlotSeries> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ReportError::MalformedCsv {
                path: path.to_path_buf(),
                message: format!("line {}: expected 4 fields", lineno + 2),
            });
        }
        if fields[2] == "divergent" {
            continue;
        }
        let kappa: f64 = fields[1].parse().map_err(|_| ReportError::MalformedCsv {
            path: path.to_path_buf(),
            message: format!("line {}: bad kappa", lineno + 2),
        })?;
        let inv_rate: f64 = fields[3].parse().map_err(|_| ReportError::MalformedCsv {
            path: path.to_path_buf(),
            message: format!("line {}: bad one_over_rate", lineno + 2),
        })?;
        match series.iter_mut().find(|s| s.label == fields[0]) {
            Some(s) => s.points.push((kappa, inv_rate)),
            None => series.push(PlotSeries {
                label: fields[0].to_string(),
                points: vec![(kappa, inv_rate)],
            }),
        }
    }
    Ok(series)
}

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-log plot of 1/rate against the condition number, emitted directly as
/// SVG so figures are byte-stable.
pub fn plot_svg(title: &str, series: &[PlotSeries]) -> String {
    let (width, height) = (640.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 36.0, 56.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let all_points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all_points {
        x_min = x_min.min(x.log2());
        x_max = x_max.max(x.log2());
        y_min = y_min.min(y.log10());
        y_max = y_max.max(y.log10());
    }
    if !x_min.is_finite() {
        (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_max - x_min < 1e-9 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-9 {
        y_max = y_min + 1.0;
    }
    let sx = move |x: f64| left + (x.log2() - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| top + (1.0 - (y.log10() - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>",
        left + plot_w / 2.0
    );
    // axes
    let _ = writeln!(
        svg,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"black\"/>"
    );
    // x ticks at powers of two
    let mut e = x_min.ceil() as i64;
    while (e as f64) <= x_max {
        let px = left + (e as f64 - x_min) / (x_max - x_min) * plot_w;
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{:.1}\" x2=\"{px:.2}\" y2=\"{:.1}\" stroke=\"#cccccc\"/>",
            top,
            top + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">2^{e}</text>",
            top + plot_h + 16.0
        );
        e += 2;
    }
    // y ticks at powers of ten
    let mut d = y_min.ceil() as i64;
    while (d as f64) <= y_max {
        let py = top + (1.0 - (d as f64 - y_min) / (y_max - y_min)) * plot_h;
        let _ = writeln!(
            svg,
            "<line x1=\"{left}\" y1=\"{py:.2}\" x2=\"{:.1}\" y2=\"{py:.2}\" stroke=\"#cccccc\"/>",
            left + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>",
            left - 6.0,
            py + 4.0
        );
        d += 1;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">condition number</text>",
        left + plot_w / 2.0,
        height - 14.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">1/rate</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut path = String::new();
        for (k, (x, y)) in s.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            path.trim_end()
        );
        for (x, y) in s.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>",
                sx(*x),
                sy(*y)
            );
        }
        let ly = top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            left + 8.0,
            left + 28.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            left + 34.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads every `rates_*.csv` in a directory and writes a matching
/// `plot_*.svg` next to it. Returns the written paths.
pub fn plot_results_dir(dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let entries = fs::read_dir(dir)
        .map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let mut rate_files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("rates_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    rate_files.sort();
    let mut written = Vec::new();
    for file in rate_files {
        let series = read_rates_csv(&file)?;
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("rates")
            .trim_start_matches("rates_")
            .to_string();
        let svg = plot_svg(&format!("1/rate vs condition number ({stem})"), &series);
        let out = out_dir.join(format!("plot_{stem}.svg"));
        write_file(&out, &svg)?;
        written.push(out);
    }
    Ok(written)
}
