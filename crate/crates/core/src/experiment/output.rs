use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::runs::{rep_seed, run_rep, RepDetail, RepOutcome};
use crate::coreset::stream_rng;
use crate::error::{argument, Error, Result};
use crate::eval::ComparisonRecord;
use crate::measure::format_float;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "plot_histogram.csv";
pub const DETAIL_FILE: &str = "plot_detail.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rep: usize,
    pub seed: u64,
    pub d_coreset_full: f64,
    pub d_unit_full: f64,
    pub diff: f64,
    pub win: bool,
}

impl ResultRow {
    pub fn new(rep: usize, seed: u64, r: &ComparisonRecord) -> Self {
        Self {
            rep,
            seed,
            d_coreset_full: r.d_coreset_full,
            d_unit_full: r.d_unit_full,
            diff: r.diff,
            win: r.win,
        }
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rep", "seed", "d_coreset_full", "d_unit_full", "diff", "win"])?;
    for r in rows {
        w.write_record([
            r.rep.to_string(),
            r.seed.to_string(),
            format_float(r.d_coreset_full),
            format_float(r.d_unit_full),
            format_float(r.diff),
            r.win.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub wins: usize,
    pub win_fraction: f64,
    pub mean_diff: f64,
    pub median_diff: f64,
    /// Percentile bootstrap 95% interval of the win fraction.
    pub win_fraction_ci: (f64, f64),
    pub bootstrap_resamples: usize,
}

const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0x5eed;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    if rows.is_empty() {
        return argument("no result rows to summarise");
    }
    let n = rows.len();
    let wins = rows.iter().filter(|r| r.win).count();
    let mut diffs: Vec<f64> = rows.iter().map(|r| r.diff).collect();
    let mean_diff = diffs.iter().sum::<f64>() / n as f64;
    diffs.sort_by(f64::total_cmp);
    let mut rng = stream_rng(BOOTSTRAP_SEED, 0);
    let mut fractions: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).filter(|_| rows[rng.random_range(0..n)].win).count() as f64 / n as f64)
        .collect();
    fractions.sort_by(f64::total_cmp);
    Ok(Summary {
        count: n,
        wins,
        win_fraction: wins as f64 / n as f64,
        mean_diff,
        median_diff: median(&diffs),
        win_fraction_ci: (quantile(&fractions, 0.025), quantile(&fractions, 0.975)),
        bootstrap_resamples: BOOTSTRAP_RESAMPLES,
    })
}

pub fn summarize_file(path: impl AsRef<Path>) -> Result<Summary> {
    summarize(&read_results(std::fs::File::open(path)?)?)
}

/// Equal-width histogram of the differences: `bin_lo,bin_hi,count`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + width * i as f64, lo + width * (i + 1) as f64, c))
        .collect()
}

pub fn write_histogram<W: Write>(rows: &[ResultRow], bins: usize, writer: W) -> Result<()> {
    let diffs: Vec<f64> = rows.iter().map(|r| r.diff).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (lo, hi, c) in histogram(&diffs, bins) {
        w.write_record([format_float(lo), format_float(hi), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Curves (densities on the grid, logits along the first covariate) or
/// per-point cluster labels for one repetition.
pub fn write_detail<W: Write>(detail: &RepDetail, covariate_range: (f64, f64), writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match detail {
        RepDetail::Densities { full, coreset, unit } => {
            w.write_record(["x", "full", "coreset", "unit"])?;
            for i in 0..full.grid.len() {
                w.write_record([
                    format_float(full.grid[i]),
                    format_float(full.values[i]),
                    format_float(coreset.values[i]),
                    format_float(unit.values[i]),
                ])?;
            }
        }
        RepDetail::Logits { full, coreset, unit } => {
            w.write_record(["x", "full", "coreset", "unit"])?;
            let dim = full.beta.len() - 1;
            let (lo, hi) = covariate_range;
            for i in 0..200 {
                let t = lo + (hi - lo) * i as f64 / 199.0;
                let mut x = vec![0.0; dim];
                x[0] = t;
                w.write_record([
                    format_float(t),
                    format_float(full.logit(&x)),
                    format_float(coreset.logit(&x)),
                    format_float(unit.logit(&x)),
                ])?;
            }
        }
        RepDetail::Partitions {
            points,
            truth,
            full,
            coreset,
            unit,
        } => {
            let dim = points.first().map_or(0, |p| p.dim());
            let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
            header.extend(["truth", "full", "coreset", "unit"].map(String::from));
            w.write_record(&header)?;
            for (i, p) in points.iter().enumerate() {
                let mut row: Vec<String> = p.coords.iter().map(|c| format_float(*c)).collect();
                row.push(truth.get(i).map_or(String::new(), |t| t.to_string()));
                row.push(full.labels()[i].to_string());
                row.push(coreset.labels()[i].to_string());
                row.push(unit.labels()[i].to_string());
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub complete: bool,
    pub failures: Vec<RepFailure>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }

    /// Rechecks every listed file against its checksum.
    pub fn verify(&self, dir: &Path) -> Result<bool> {
        for f in &self.files {
            let bytes = std::fs::read(dir.join(&f.path))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_tracked(dir: &Path, name: &str, bytes: Vec<u8>, files: &mut Vec<FileEntry>) -> Result<()> {
    std::fs::write(dir.join(name), &bytes)?;
    files.push(FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    });
    Ok(())
}

/// Everything `run_experiment` produced.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub manifest: RunManifest,
    pub rows: Vec<ResultRow>,
    pub summary: Option<Summary>,
    pub outcomes: Vec<RepOutcome>,
}

/// Runs all repetitions (in parallel, collected in rep order) and writes
/// results, summary, plot data and the manifest into `cfg.output_dir`.
/// Failed repetitions are skipped and recorded; the manifest is then marked
/// incomplete.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let started = unix_now();
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;

    let results: Vec<(usize, Result<RepOutcome>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| (rep, run_rep(cfg, rep)))
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(RepFailure {
                rep,
                seed: rep_seed(cfg.master_seed, rep),
                error: e.to_string(),
            }),
        }
    }
    let rows: Vec<ResultRow> = outcomes.iter().map(|o| ResultRow::new(o.rep, o.seed, &o.record)).collect();

    let mut files = Vec::new();
    let mut buf = Vec::new();
    write_results(&rows, &mut buf)?;
    write_tracked(&dir, RESULTS_FILE, buf, &mut files)?;

    let summary = if rows.is_empty() { None } else { Some(summarize(&rows)?) };
    let summary_json = serde_json::to_vec_pretty(&serde_json::json!({
        "experiment": cfg.experiment.name(),
        "summary": summary,
        "failed_reps": failures.len(),
    }))?;
    write_tracked(&dir, SUMMARY_FILE, summary_json, &mut files)?;

    let mut buf = Vec::new();
    write_histogram(&rows, 20, &mut buf)?;
    write_tracked(&dir, HISTOGRAM_FILE, buf, &mut files)?;

    let mut buf = Vec::new();
    if let Some(first) = outcomes.first() {
        let spread = 3.0 * cfg.logistic.covariate_var.sqrt();
        write_detail(&first.detail, (-spread, spread), &mut buf)?;
    }
    write_tracked(&dir, DETAIL_FILE, buf, &mut files)?;

    let config_text = cfg.to_toml()?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: cfg.clone(),
        seeds: (0..cfg.reps).map(|r| rep_seed(cfg.master_seed, r)).collect(),
        started_unix: started,
        finished_unix: unix_now(),
        complete: failures.is_empty(),
        failures,
        files,
    };
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(ExperimentRun {
        manifest,
        rows,
        summary,
        outcomes,
    })
}

fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(field.parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    Ok((header, cols))
}

const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#66a182", "#edae49", "#00798c", "#30343f"];

/// Renders a plot-data CSV as SVG: `bin_lo,bin_hi,count` files become a
/// histogram, anything else a line chart of every column against the first.
pub fn render_svg(input: &Path, output: &Path) -> Result<()> {
    let (header, cols) = read_numeric_csv(input)?;
    if header.len() < 2 || cols[0].is_empty() {
        return Err(Error::Argument(format!("{} has nothing to plot", input.display())));
    }
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let finite = |v: &Vec<f64>| v.iter().cloned().filter(|x| x.is_finite()).collect::<Vec<_>>();
    let span = |vals: &[f64]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    if header[..] == ["bin_lo", "bin_hi", "count"] {
        let (x0, _) = span(&cols[0]);
        let (_, x1) = span(&cols[1]);
        let ymax = cols[2].iter().cloned().fold(1.0, f64::max);
        for i in 0..cols[0].len() {
            let bx = pad + (cols[0][i] - x0) / (x1 - x0) * (w - 2.0 * pad);
            let bw = (cols[1][i] - cols[0][i]) / (x1 - x0) * (w - 2.0 * pad);
            let bh = cols[2][i] / ymax * (h - 2.0 * pad);
            let _ = writeln!(
                svg,
                r#"<rect x="{bx:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{}" stroke="white"/>"#,
                h - pad - bh,
                bw.max(0.5),
                PALETTE[0]
            );
        }
        if x0 < 0.0 && x1 > 0.0 {
            let zx = pad + (0.0 - x0) / (x1 - x0) * (w - 2.0 * pad);
            let _ = writeln!(
                svg,
                r#"<line x1="{zx:.2}" y1="{pad}" x2="{zx:.2}" y2="{}" stroke="black" stroke-dasharray="4 3"/>"#,
                h - pad
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">difference ({x0:.3} .. {x1:.3})</text>"#,
            w / 2.0,
            h - 12.0
        );
    } else {
        let (x0, x1) = span(&finite(&cols[0]));
        let ys: Vec<f64> = cols[1..].iter().flat_map(finite).collect();
        let (y0, y1) = span(&ys);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        for (k, col) in cols[1..].iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = cols[0]
                .iter()
                .zip(col)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
                w - pad - 80.0,
                pad + 16.0 * k as f64,
                header[k + 1]
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    svg.push_str("</svg>\n");
    std::fs::write(output, svg)?;
    Ok(())
}

/// Writes the histogram file for an existing results CSV into `dir`.
pub fn plot_data_from_results(results: &Path, dir: &Path) -> Result<PathBuf> {
    let rows = read_results(std::fs::File::open(results)?)?;
    std::fs::create_dir_all(dir)?;
    let out = dir.join(HISTOGRAM_FILE);
    write_histogram(&rows, 20, std::fs::File::create(&out)?)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, diff: f64) -> ResultRow {
        ResultRow::new(rep, rep as u64, &ComparisonRecord::from_distances(1.0 + diff, 1.0))
    }

    #[test]
    fn summary_examples() {
        let all: Vec<ResultRow> = (0..5).map(|i| row(i, -0.1)).collect();
        assert_eq!(summarize(&all).unwrap().win_fraction, 1.0);
        let half = vec![row(0, -0.3), row(1, 0.0)];
        assert_eq!(summarize(&half).unwrap().win_fraction, 0.5);
        let mixed: Vec<ResultRow> = (0..100).map(|i| row(i, if i < 81 { -0.1 } else { 0.2 })).collect();
        let s = summarize(&mixed).unwrap();
        assert_eq!(s.wins, 81);
        assert_eq!(s.win_fraction, 0.81);
        assert!(s.win_fraction_ci.0 <= 0.81 && 0.81 <= s.win_fraction_ci.1);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn results_round_trip() {
        let rows = vec![row(0, -0.25), row(1, 0.125)];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rep,seed,d_coreset_full,d_unit_full,diff,win\n"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.1, 0.5, 1.0, 1.0], 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[3].2, 2);
    }
}
