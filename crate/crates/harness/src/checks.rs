//! Fast invariant suites shared by `pann check` and the acceptance tests.

use std::time::Instant;

use ndarray::{Array1, Array2};
use pann_core::model::{
    pde_loss, predict, regression_loss, ConstraintKind, LossConfig, NetworkPart, PannModel,
    ParamLayout, PdeData, PolyLayer,
};
use pann_core::network::{init_params, Activation, MlpConfig};
use pann_core::optim::{adam_run, lbfgs_run, AdamConfig, LbfgsConfig};
use pann_core::pde::{
    gauss_legendre_rule, l2_projection, manufactured_allen_cahn, manufactured_poisson, PdeKind,
};
use pann_core::polybasis::{
    assemble_design, compute_preconditioner, enumerate_indices,
    legendre_derivs_1d, legendre_values_1d, BasisKind, BasisSpec, DesignBundle, DesignOrder,
    MultiIndex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis_info::schedule_cells;
use crate::sampling::{grid_points, uniform_points};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!("[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn binom(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

/// Index-set sizes and the published degree-schedule tables.
pub fn basis_cardinalities() -> CheckResult {
    let mut problems = Vec::new();
    for d in 1..=5usize {
        for ell in 0..=10u32 {
            let m = enumerate_indices(BasisSpec::total_degree(d, ell)).len() as u64;
            if m != binom(d as u64 + ell as u64, d as u64) {
                problems.push(format!("TD d={d} l={ell}: {m}"));
            }
            let hc = enumerate_indices(BasisSpec::new(BasisKind::HyperbolicCross, d, ell)).len();
            let brute = brute_force_hc(d, ell);
            if hc != brute {
                problems.push(format!("HC d={d} l={ell}: {hc} vs brute force {brute}"));
            }
        }
    }
    for (d, td, hc) in [(2, 45, 23), (3, 165, 44), (4, 495, 73), (5, 1287, 111)] {
        let m = enumerate_indices(BasisSpec::total_degree(d, 8)).len();
        let h = enumerate_indices(BasisSpec::new(BasisKind::HyperbolicCross, d, 8)).len();
        if m != td || h != hc {
            problems.push(format!("d={d}: TD {m} (want {td}), HC {h} (want {hc})"));
        }
    }
    // (c, ell, m) per N of the three published schedule tables
    let t2: [(f64, [(u32, usize); 4]); 3] = [
        (0.001, [(18, 190), (20, 231), (26, 378), (50, 1326)]),
        (0.002, [(18, 190), (22, 276), (34, 630), (82, 3486)]),
        (0.003, [(18, 190), (24, 325), (42, 946), (116, 6903)]),
    ];
    let t5: [(f64, [(u32, usize); 4]); 3] = [
        (0.001, [(9, 55), (10, 66), (13, 105), (25, 351)]),
        (0.002, [(9, 55), (11, 78), (17, 171), (41, 903)]),
        (0.003, [(9, 55), (12, 91), (21, 253), (58, 1770)]),
    ];
    let t7: [(f64, [(u32, usize); 4]); 2] = [
        (0.003, [(18, 190), (18, 190), (24, 325), (42, 946)]),
        (0.004, [(18, 190), (20, 231), (26, 378), (50, 1326)]),
    ];
    let mut expected = Vec::new();
    for (name, ns, table) in [
        ("legendre-recovery", [256, 1024, 4096, 16384], &t2[..]),
        ("nonsmooth", [256, 1024, 4096, 16384], &t5[..]),
        ("pde", [64, 256, 1024, 4096], &t7[..]),
    ] {
        for &(c, row) in table {
            for (&n, &(ell, m)) in ns.iter().zip(row.iter()) {
                expected.push((name, c, n, ell, m));
            }
        }
    }
    let got = schedule_cells();
    let cells = expected.len();
    if got.len() != cells {
        problems.push(format!("{} schedule cells, want {cells}", got.len()));
    }
    for (g, e) in got.iter().zip(&expected) {
        if g != e {
            problems.push(format!("schedule cell {g:?}, want {e:?}"));
        }
    }
    CheckResult::new(
        "basis cardinalities",
        problems.is_empty(),
        if problems.is_empty() {
            format!("TD/HC formulas and brute force for d<=5, l<=10; figure counts; {cells} schedule cells exact")
        } else {
            problems.join("; ")
        },
    )
}

fn brute_force_hc(d: usize, ell: u32) -> usize {
    let mut count = 0;
    let mut idx = vec![0u32; d];
    loop {
        if idx.iter().map(|&k| k + 1).product::<u32>() <= ell + 1 {
            count += 1;
        }
        let mut j = 0;
        loop {
            if j == d {
                return count;
            }
            idx[j] += 1;
            if idx[j] <= ell {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn p10_explicit(z: f64) -> f64 {
    let z2 = z * z;
    (((((46189.0 * z2 - 109395.0) * z2 + 90090.0) * z2 - 30030.0) * z2 + 3465.0) * z2 - 63.0) / 256.0
}

/// Recurrence against the explicit degree-10 formula and finite differences.
pub fn legendre_recurrence() -> CheckResult {
    let mut max_dev = 0.0f64;
    for i in 0..1000 {
        let z = -1.0 + 2.0 * i as f64 / 999.0;
        max_dev = max_dev.max((legendre_values_1d(10, z)[10] - p10_explicit(z)).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 2e-4;
    // fourth-order central differences
    let d4 = |fm2: f64, fm1: f64, fp1: f64, fp2: f64| (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let mut max_rel = 0.0f64;
    for _ in 0..200 {
        let z: f64 = rng.gen_range(-0.99..0.99);
        let t = legendre_derivs_1d(12, z);
        let at: Vec<_> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| legendre_derivs_1d(12, z + k * h)).collect();
        for n in 1..=12 {
            let fd1 = d4(at[0].values[n], at[1].values[n], at[2].values[n], at[3].values[n]);
            let fd2 = d4(at[0].first[n], at[1].first[n], at[2].first[n], at[3].first[n]);
            let r1 = (fd1 - t.first[n]).abs() / t.first[n].abs().max(1.0);
            let r2 = (fd2 - t.second[n]).abs() / t.second[n].abs().max(1.0);
            max_rel = max_rel.max(r1).max(r2);
        }
    }
    CheckResult::new(
        "Legendre recurrence",
        max_dev < 1e-12 && max_rel < 1e-6,
        format!("max |P10 - explicit| = {max_dev:.2e} (< 1e-12); derivative FD rel. error = {max_rel:.2e} (< 1e-6)"),
    )
}

fn grad_model(act: Activation, seed: u64) -> PannModel<f64> {
    let config = MlpConfig::new(2, vec![8, 8], act).expect("valid shape");
    let mut params = init_params(&config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for b in params.biases.iter_mut() {
        b.mapv_inplace(|_| rng.gen_range(-0.3..0.3));
    }
    let mut poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 3)));
    poly.coeffs.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    PannModel::new(Some(NetworkPart { config, params }), Some(poly)).expect("consistent model")
}

fn bundle(m: &PannModel<f64>, pts: &Array2<f64>, order: DesignOrder) -> DesignBundle<f64> {
    let basis = &m.poly.as_ref().expect("poly").basis;
    compute_preconditioner(assemble_design(basis, pts.view(), order).expect("design"), basis).expect("precond")
}

fn fd_rel_error(model: &PannModel<f64>, loss: &dyn Fn(&PannModel<f64>) -> (f64, Array1<f64>)) -> f64 {
    let layout = ParamLayout::of(model);
    let theta = layout.pack(model);
    let (_, g) = loss(model);
    let mut work = model.clone();
    let h = 1e-6;
    let mut fd = Array1::zeros(theta.len());
    for i in 0..theta.len() {
        let mut t = theta.clone();
        t[i] = theta[i] + h;
        layout.unpack(&mut work, t.as_slice().unwrap()).unwrap();
        let fp = loss(&work).0;
        t[i] = theta[i] - h;
        layout.unpack(&mut work, t.as_slice().unwrap()).unwrap();
        let fm = loss(&work).0;
        fd[i] = (fp - fm) / (2.0 * h);
    }
    let diff = &fd - &g;
    diff.dot(&diff).sqrt() / fd.dot(&fd).sqrt().max(1e-300)
}

/// Full-loss gradients against central differences.
pub fn gradient_suite() -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Array2<f64> = Array2::from_shape_simple_fn((20, 2), || rng.gen_range(-0.95..0.95));
    let bpts: Array2<f64> = Array2::from_shape_simple_fn((20, 2), || rng.gen_range(-0.95..0.95));
    let y: Array1<f64> = pts.rows().into_iter().map(|r| (2.0 * r[0]).sin() * r[1]).collect();
    let g: Array1<f64> = bpts.rows().into_iter().map(|r| r[0] * r[1]).collect();
    let mut worst_smooth = 0.0f64;
    let mut worst_relu = 0.0f64;
    let mut cases = 0;
    let mut failures = Vec::new();
    for (si, kind) in ConstraintKind::ALL.into_iter().enumerate() {
        for pre in [false, true] {
            let cfg = LossConfig {
                lambda_r: 1e-3,
                lambda_c: 0.05,
                lambda_pde: 0.3,
                preconditioned: pre,
                constraint: kind,
                ..LossConfig::default()
            };
            for act in [Activation::Tanh, Activation::Repu(3), Activation::Relu] {
                let tol = if act == Activation::Relu { 1e-4 } else { 1e-5 };
                let m = grad_model(act, si as u64 * 7 + pre as u64);
                let d = bundle(&m, &pts, DesignOrder::Values);
                let e = fd_rel_error(&m, &|m| {
                    let ev = regression_loss(m, pts.view(), y.view(), Some(&d), &cfg).unwrap();
                    (ev.loss, ParamLayout::of(m).pack_grad(&ev.grad))
                });
                cases += 1;
                if act == Activation::Relu {
                    worst_relu = worst_relu.max(e);
                } else {
                    worst_smooth = worst_smooth.max(e);
                }
                if !(e < tol) {
                    failures.push(format!("regression {kind} {} pre={pre}: {e:.1e}", act.name()));
                }
                if act == Activation::Relu {
                    continue;
                }
                for problem in [PdeKind::Poisson, PdeKind::AllenCahn] {
                    let data = PdeData::new(
                        bpts.clone(),
                        g.clone(),
                        Some(bundle(&m, &bpts, DesignOrder::Values)),
                        pts.clone(),
                        y.clone(),
                        Some(bundle(&m, &pts, DesignOrder::Laplacian)),
                    )
                    .unwrap();
                    let e = fd_rel_error(&m, &|m| {
                        let ev = pde_loss(m, &data, problem, &cfg).unwrap();
                        (ev.loss, ParamLayout::of(m).pack_grad(&ev.grad))
                    });
                    cases += 1;
                    worst_smooth = worst_smooth.max(e);
                    if !(e < tol) {
                        failures.push(format!("{problem} {kind} {} pre={pre}: {e:.1e}", act.name()));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = failures.is_empty() && secs < 60.0;
    CheckResult::new(
        "gradient suite",
        passed,
        if failures.is_empty() {
            format!(
                "{cases} cases; worst rel. error {worst_smooth:.1e} smooth (< 1e-5), {worst_relu:.1e} ReLU (< 1e-4); {secs:.1}s (< 60s)"
            )
        } else {
            failures.join("; ")
        },
    )
}

/// `K(x)^2 sum_k phi_k(x)^2 = m` for total-degree bases.
pub fn preconditioner_identity() -> CheckResult {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in 1..=4usize {
        for ell in [0u32, 1, 5, 13, 26] {
            let basis = enumerate_indices(BasisSpec::total_degree(d, ell));
            let m = basis.len() as f64;
            let pts = uniform_points(1000, d, 31 + d as u64 * 100 + ell as u64);
            for chunk in 0..10 {
                let rows = pts.slice(ndarray::s![chunk * 100..(chunk + 1) * 100, ..]);
                let b = compute_preconditioner(
                    assemble_design(&basis, rows, DesignOrder::Values).unwrap(),
                    &basis,
                )
                .unwrap();
                let k = b.precond.as_ref().unwrap();
                for (i, row) in b.phi.rows().into_iter().enumerate() {
                    let energy: f64 = row.iter().map(|v| v * v).sum();
                    worst = worst.max((k[i] * k[i] * energy - m).abs() / m);
                }
            }
            cases += 1;
        }
    }
    CheckResult::new(
        "preconditioner identity",
        worst <= 1e-10,
        format!("{cases} bases x 1000 points, max |K^2 sum phi^2 - m| / m = {worst:.1e} (<= 1e-10)"),
    )
}

/// Exact solutions satisfy their operators.
pub fn pde_identities() -> CheckResult {
    let mut worst = [0.0f64; 2];
    for (i, p) in [manufactured_poisson(), manufactured_allen_cahn()].iter().enumerate() {
        let pts = uniform_points(1000, 2, 77 + i as u64);
        for r in pts.rows() {
            let x = [r[0] * 0.999, r[1] * 0.999];
            worst[i] = worst[i].max(p.exact_residual(&x).abs());
        }
    }
    CheckResult::new(
        "manufactured-solution identity",
        worst[0] <= 1e-10 && worst[1] <= 1e-10,
        format!("1000 interior points: Poisson {:.1e}, Allen-Cahn {:.1e} (<= 1e-10)", worst[0], worst[1]),
    )
}

/// Optimizer sanity on classical problems.
pub fn optimizer_sanity() -> CheckResult {
    let m = Array2::from_shape_fn((5, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin());
    let a = m.t().dot(&m) + Array2::<f64>::eye(5);
    let quad = lbfgs_run(
        |x: &Array1<f64>| {
            let ax = a.dot(x);
            Ok((0.5 * x.dot(&ax), ax))
        },
        Array1::from_elem(5, 1.0),
        &LbfgsConfig {
            iterations: 50,
            ..LbfgsConfig::default()
        },
    )
    .map(|(x, _)| {
        let g = a.dot(&x);
        g.dot(&g).sqrt()
    })
    .unwrap_or(f64::INFINITY);

    let rosen = lbfgs_run(
        |x: &Array1<f64>| {
            let (u, v) = (x[0], x[1]);
            let f = (1.0 - u).powi(2) + 100.0 * (v - u * u).powi(2);
            let g = Array1::from(vec![-2.0 * (1.0 - u) - 400.0 * u * (v - u * u), 200.0 * (v - u * u)]);
            Ok((f, g))
        },
        Array1::from(vec![-1.2, 1.0]),
        &LbfgsConfig::default(),
    )
    .map(|(_, r)| r.final_loss)
    .unwrap_or(f64::INFINITY);

    let adam = adam_run(
        |x: &Array1<f64>| Ok(((x[0] - 3.0).powi(2), Array1::from(vec![2.0 * (x[0] - 3.0)]))),
        Array1::from(vec![0.0]),
        &AdamConfig::default(),
    )
    .map(|(x, _)| (x[0] - 3.0).abs())
    .unwrap_or(f64::INFINITY);

    CheckResult::new(
        "optimizer sanity",
        quad < 1e-10 && rosen < 1e-8 && adam < 1e-3,
        format!(
            "SPD quadratic |g| = {quad:.1e} (< 1e-10, 50 its); Rosenbrock f = {rosen:.1e} (< 1e-8, 400 its); Adam |x-3| = {adam:.1e} (< 1e-3)"
        ),
    )
}

/// Projection recovers span members; a network-free model equals the
/// standalone polynomial layer.
pub fn projection_baseline() -> CheckResult {
    let basis = enumerate_indices(BasisSpec::total_degree(2, 20));
    let rule = gauss_legendre_rule(32, 2).expect("rule");
    let test = grid_points(64, 2);
    let f = |x: &[f64]| legendre_values_1d(10, x[0])[10] * legendre_values_1d(10, x[1])[10];
    let proj = l2_projection(&f, &basis, &rule, true, test.view());
    let (err, coeff_dev) = match &proj {
        Ok(p) => {
            let k = basis.position(&MultiIndex(vec![10, 10])).unwrap();
            let dev = p
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| (c - if j == k { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            (p.rel_l2, dev)
        }
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 8)));
    poly.coeffs.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    let pts = uniform_points(500, 2, 12);
    let design = assemble_design(&poly.basis, pts.view(), DesignOrder::Values).unwrap();
    let model = PannModel::new(None, Some(poly.clone())).unwrap();
    let via_model = predict(&model, pts.view(), Some(&design)).unwrap();
    let standalone = design.phi.dot(&poly.coeffs);
    let identical = via_model == standalone;

    CheckResult::new(
        "L2 projection baseline",
        err < 1e-10 && coeff_dev < 1e-10 && identical,
        format!(
            "P10(x)P10(y) on TD(2,20) with 32x32 Gauss-Legendre: rel. error {err:.1e} (< 1e-10), max coeff dev {coeff_dev:.1e}; zero-width model == PL: {identical}"
        ),
    )
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        basis_cardinalities(),
        legendre_recurrence(),
        gradient_suite(),
        preconditioner_identity(),
        pde_identities(),
        optimizer_sanity(),
        projection_baseline(),
    ]
}
