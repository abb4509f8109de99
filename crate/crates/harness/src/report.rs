use std::fmt::Write as _;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const COLUMNS: [&str; 14] = [
    "experiment",
    "trial",
    "N",
    "d",
    "ell",
    "m",
    "constraint",
    "activation",
    "preconditioned",
    "rel_l2",
    "wall_s",
    "pct_nn_trunc",
    "pct_poly_trunc",
    "final_loss",
];

/// One trial or fold.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub trial: String,
    pub n: usize,
    pub d: usize,
    pub ell: u32,
    pub m: usize,
    pub constraint: String,
    pub activation: String,
    pub preconditioned: bool,
    pub rel_l2: f64,
    /// `None` when timing is not recorded.
    pub wall_s: Option<f64>,
    pub pct_nn_trunc: f64,
    pub pct_poly_trunc: f64,
    pub final_loss: f64,
    pub diverged: bool,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        "nan".into()
    }
}

impl ReportRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.trial.clone(),
            self.n.to_string(),
            self.d.to_string(),
            self.ell.to_string(),
            self.m.to_string(),
            self.constraint.clone(),
            self.activation.clone(),
            self.preconditioned.to_string(),
            num(self.rel_l2),
            self.wall_s.map_or_else(|| "-".into(), |w| format!("{w:.3}")),
            format!("{:.2}", self.pct_nn_trunc),
            format!("{:.2}", self.pct_poly_trunc),
            num(self.final_loss),
        ]
    }
}

/// Mean and sample standard deviation over the finite entries.
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn summary_row(rows: &[ReportRow], label: &str, pick: fn((f64, f64)) -> f64) -> ReportRow {
    let first = &rows[0];
    let ok: Vec<&ReportRow> = rows.iter().filter(|r| !r.diverged).collect();
    let stat = |f: fn(&ReportRow) -> f64| pick(mean_std(ok.iter().map(|r| f(r))));
    ReportRow {
        trial: label.into(),
        rel_l2: stat(|r| r.rel_l2),
        wall_s: first.wall_s.map(|_| stat(|r| r.wall_s.unwrap_or(f64::NAN))),
        pct_nn_trunc: stat(|r| r.pct_nn_trunc),
        pct_poly_trunc: stat(|r| r.pct_poly_trunc),
        final_loss: stat(|r| r.final_loss),
        diverged: ok.is_empty(),
        ..first.clone()
    }
}

/// CSV text: `#` preamble with every setting, the fixed header, one row per
/// trial and `mean` / `std` summary rows.
pub fn render_csv(cfg: &ExperimentConfig, rows: &[ReportRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# pann experiment report").unwrap();
    writeln!(out, "# config-digest={}", cfg.digest()).unwrap();
    writeln!(out, "# note=loss terms are means over points").unwrap();
    for (k, v) in cfg.entries() {
        writeln!(out, "# {k}={v}").unwrap();
    }
    let diverged: Vec<&str> = rows.iter().filter(|r| r.diverged).map(|r| r.trial.as_str()).collect();
    if !diverged.is_empty() {
        writeln!(out, "# diverged-trials={}", diverged.join(",")).unwrap();
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(COLUMNS).unwrap();
    for r in rows {
        w.write_record(r.fields()).unwrap();
    }
    if !rows.is_empty() {
        w.write_record(summary_row(rows, "mean", |s| s.0).fields()).unwrap();
        w.write_record(summary_row(rows, "std", |s| s.1).fields()).unwrap();
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"));
    out
}

pub fn write_csv(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
