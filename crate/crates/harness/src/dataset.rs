use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

/// Per-feature affine map to `[-1,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaling {
    pub fn fit(raw: &Array2<f64>, names: &[String]) -> Result<Self> {
        let mut min = Vec::with_capacity(raw.ncols());
        let mut max = Vec::with_capacity(raw.ncols());
        for (j, col) in raw.columns().into_iter().enumerate() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(HarnessError::Data(format!(
                    "feature `{}` has zero range (every value is {lo})",
                    names[j]
                )));
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Scaling { min, max })
    }

    pub fn scale(&self, j: usize, v: f64) -> f64 {
        2.0 * (v - self.min[j]) / (self.max[j] - self.min[j]) - 1.0
    }

    pub fn unscale(&self, j: usize, s: f64) -> f64 {
        self.min[j] + 0.5 * (s + 1.0) * (self.max[j] - self.min[j])
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Scaled features, `n x d`.
    pub points: Array2<f64>,
    pub targets: Array1<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub scaling: Scaling,
}

/// Reads a headered numeric CSV. Every column except `target_column` is a
/// feature and is min-max scaled to `[-1,1]` over the whole file.
pub fn load_csv_dataset(path: &Path, target_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(HarnessError::Data(format!("{}: file is empty", path.display())));
    }
    let target = headers.iter().position(|h| h == target_column).ok_or_else(|| {
        HarnessError::Data(format!(
            "{}: no column named `{target_column}` (columns: {})",
            path.display(),
            headers.join(", ")
        ))
    })?;
    if headers.len() < 2 {
        return Err(HarnessError::Data("dataset needs at least one feature column".into()));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut bad = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::Data(format!("line {line}: {e}")))?;
        if rec.len() != headers.len() {
            bad.push(format!("line {line}: expected {} fields, found {}", headers.len(), rec.len()));
            continue;
        }
        let mut row = Vec::with_capacity(feature_names.len());
        let mut y = 0.0;
        let mut ok = true;
        for (j, cell) in rec.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    if j == target {
                        y = v;
                    } else {
                        row.push(v);
                    }
                }
                _ => {
                    bad.push(format!("line {line}: column `{}` is not numeric: `{cell}`", headers[j]));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            features.extend(row);
            targets.push(y);
        }
    }
    if !bad.is_empty() {
        let shown: Vec<_> = bad.iter().take(5).cloned().collect();
        return Err(HarnessError::Data(format!(
            "{}: {} malformed row(s): {}{}",
            path.display(),
            bad.len(),
            shown.join("; "),
            if bad.len() > 5 { "; ..." } else { "" }
        )));
    }
    if targets.is_empty() {
        return Err(HarnessError::Data(format!("{}: no data rows", path.display())));
    }
    let n = targets.len();
    let d = feature_names.len();
    let raw = Array2::from_shape_vec((n, d), features).expect("rectangular rows");
    let scaling = Scaling::fit(&raw, &feature_names)?;
    let points = Array2::from_shape_fn((n, d), |(i, j)| scaling.scale(j, raw[[i, j]]));
    Ok(Dataset {
        points,
        targets: Array1::from(targets),
        feature_names,
        target_name: target_column.to_string(),
        scaling,
    })
}

/// Seeded shuffle cut into `k` contiguous folds whose sizes differ by at
/// most one. Returns `(train, test)` index lists.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || n < k {
        return Err(HarnessError::Config(format!("k-fold needs k >= 2 and n >= k (n={n}, k={k})")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let test = idx[start..start + len].to_vec();
        let train = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
        folds.push((train, test));
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_rows_scale_to_endpoints() {
        let f = write("a,y\n0,1\n10,2\n");
        let d = load_csv_dataset(f.path(), "y").unwrap();
        assert_eq!(d.points.column(0).to_vec(), vec![-1.0, 1.0]);
        assert_eq!(d.targets.to_vec(), vec![1.0, 2.0]);
    }

    #[test]
    fn descriptive_errors() {
        let f = write("a,b,y\n1,5,0\n2,5,1\n");
        let e = load_csv_dataset(f.path(), "y").unwrap_err().to_string();
        assert!(e.contains("zero range") && e.contains('b'), "{e}");
        let f = write("a,y\n1,2\nx,3\n4,5\n");
        let e = load_csv_dataset(f.path(), "y").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let f = write("a,y\n1,2\n");
        assert!(load_csv_dataset(f.path(), "target").unwrap_err().to_string().contains("no column"));
        let f = write("");
        assert!(load_csv_dataset(f.path(), "y").is_err());
        let f = write("a,y\n");
        assert!(load_csv_dataset(f.path(), "y").is_err());
    }

    #[test]
    fn folds_partition() {
        let folds = kfold_split(20640, 4, 0).unwrap();
        let mut seen = vec![0u8; 20640];
        for (train, test) in &folds {
            assert_eq!(test.len(), 5160);
            assert_eq!(train.len() + test.len(), 20640);
            for &i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(kfold_split(10, 3, 1).unwrap(), kfold_split(10, 3, 1).unwrap());
        let sizes: Vec<usize> = kfold_split(10, 3, 1).unwrap().iter().map(|f| f.1.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert!(kfold_split(3, 4, 0).is_err());
    }
}
