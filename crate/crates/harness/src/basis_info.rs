use std::fmt::Write as _;

use pann_core::polybasis::{degree_schedule, enumerate_indices, BasisKind, BasisSpec};

/// A degree-schedule study: rows of `(c, N, ell, m)`.
pub struct ScheduleTable {
    pub name: &'static str,
    pub cs: &'static [f64],
    pub ns: &'static [usize],
    pub offset: u32,
    pub doubled: bool,
}

pub const TABLES: [ScheduleTable; 3] = [
    ScheduleTable {
        name: "legendre-recovery",
        cs: &[0.001, 0.002, 0.003],
        ns: &[256, 1024, 4096, 16384],
        offset: 8,
        doubled: true,
    },
    ScheduleTable {
        name: "nonsmooth",
        cs: &[0.001, 0.002, 0.003],
        ns: &[256, 1024, 4096, 16384],
        offset: 8,
        doubled: false,
    },
    ScheduleTable {
        name: "pde",
        cs: &[0.003, 0.004],
        ns: &[64, 256, 1024, 4096],
        offset: 8,
        doubled: true,
    },
];

/// `(table, c, N, ell, m)` for every cell, 2-D total-degree bases.
pub fn schedule_cells() -> Vec<(&'static str, f64, usize, u32, usize)> {
    let mut cells = Vec::new();
    for t in &TABLES {
        for &c in t.cs {
            for &n in t.ns {
                let ell = degree_schedule(n, c, t.offset, t.doubled);
                let m = enumerate_indices(BasisSpec::total_degree(2, ell)).len();
                cells.push((t.name, c, n, ell, m));
            }
        }
    }
    cells
}

/// Schedule grids followed by index-set sizes per family at `ell = 8`.
pub fn render_basis_info() -> String {
    let mut out = String::from("table,c,N,ell,m\n");
    for (name, c, n, ell, m) in schedule_cells() {
        writeln!(out, "{name},{c},{n},{ell},{m}").unwrap();
    }
    out.push_str("\nfamily,d,ell,m\n");
    for kind in [BasisKind::TotalDegree, BasisKind::HyperbolicCross, BasisKind::TensorProduct] {
        for d in 2..=5 {
            let m = enumerate_indices(BasisSpec::new(kind, d, 8)).len();
            writeln!(out, "{},{d},8,{m}", kind.name()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_tables() {
        let want: &[(&str, f64, usize, u32, usize)] = &[
            ("legendre-recovery", 0.001, 4096, 26, 378),
            ("legendre-recovery", 0.003, 16384, 116, 6903),
            ("nonsmooth", 0.001, 4096, 13, 105),
            ("nonsmooth", 0.003, 16384, 58, 1770),
            ("pde", 0.003, 256, 18, 190),
            ("pde", 0.004, 4096, 50, 1326),
        ];
        let cells = schedule_cells();
        for w in want {
            assert!(cells.contains(w), "{w:?}");
        }
        assert_eq!(cells.len(), 12 + 12 + 8);
    }
}
