use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Per-dimension polynomial degrees of one tensor-product basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex(v.to_vec())
    }
}

/// Index-set family used to pick the polynomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    /// `max_i k_i <= degree`
    TensorProduct,
    /// `sum_i k_i <= degree`
    TotalDegree,
    /// `prod_i (k_i + 1) <= degree + 1`
    HyperbolicCross,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::TensorProduct => "tensor-product",
            BasisKind::TotalDegree => "total-degree",
            BasisKind::HyperbolicCross => "hyperbolic-cross",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tp" | "tensor-product" | "tensorproduct" => Ok(BasisKind::TensorProduct),
            "td" | "total-degree" | "totaldegree" => Ok(BasisKind::TotalDegree),
            "hc" | "hyperbolic-cross" | "hyperboliccross" => Ok(BasisKind::HyperbolicCross),
            other => Err(format!("unknown basis kind `{other}` (expected tp, td or hc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub dim: usize,
    pub degree: u32,
}

impl BasisSpec {
    pub fn new(kind: BasisKind, dim: usize, degree: u32) -> Self {
        assert!(dim >= 1, "basis dimension must be at least 1");
        BasisSpec { kind, dim, degree }
    }

    pub fn total_degree(dim: usize, degree: u32) -> Self {
        Self::new(BasisKind::TotalDegree, dim, degree)
    }

    fn admits(&self, idx: &[u32]) -> bool {
        let l = self.degree as u64;
        match self.kind {
            BasisKind::TensorProduct => idx.iter().all(|&k| k as u64 <= l),
            BasisKind::TotalDegree => idx.iter().map(|&k| k as u64).sum::<u64>() <= l,
            BasisKind::HyperbolicCross => {
                let mut p = 1u64;
                for &k in idx {
                    p = p.saturating_mul(k as u64 + 1);
                }
                p <= l + 1
            }
        }
    }
}

/// Ordered polynomial basis with a truncation mask.
///
/// Indices are sorted by total degree, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    spec: BasisSpec,
    indices: Vec<MultiIndex>,
    active: Vec<bool>,
}

impl MultiIndexSet {
    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.active[k]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn deactivate(&mut self, k: usize) {
        self.active[k] = false;
    }

    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|i| i == idx)
    }

    pub fn active_indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices
            .iter()
            .zip(&self.active)
            .filter_map(|(i, &a)| a.then_some(i))
    }

    /// Largest degree appearing in each coordinate.
    pub fn max_degree_per_dim(&self) -> Vec<u32> {
        let mut out = vec![0; self.spec.dim];
        for idx in &self.indices {
            for (o, &k) in out.iter_mut().zip(&idx.0) {
                *o = (*o).max(k);
            }
        }
        out
    }
}

/// Enumerates the multi-index set described by `spec`, all entries active.
pub fn enumerate_indices(spec: BasisSpec) -> MultiIndexSet {
    let mut indices = Vec::new();
    let mut current = vec![0u32; spec.dim];
    push_indices(&spec, 0, &mut current, &mut indices);
    indices.sort_by(|a, b| a.total_degree().cmp(&b.total_degree()).then_with(|| a.cmp(b)));
    let active = vec![true; indices.len()];
    MultiIndexSet {
        spec,
        indices,
        active,
    }
}

// Depth-first fill of coordinate `pos`; admissibility of a prefix (with the
// remaining coordinates at zero) is monotone for all three families, so
// pruning on the prefix is exact.
fn push_indices(spec: &BasisSpec, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos == spec.dim {
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in 0..=spec.degree {
        current[pos] = k;
        if !spec.admits(current) {
            break;
        }
        push_indices(spec, pos + 1, current, out);
    }
    current[pos] = 0;
}
