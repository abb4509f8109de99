use std::collections::VecDeque;
use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::report::{StopReason, TrainReport};
use crate::error::{config_err, PannError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub iterations: usize,
    /// First trial step of every line search.
    pub lr0: f64,
    pub history_size: usize,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
    pub grad_tol: f64,
    /// Curvature pairs with `s^T y` at or below this are dropped.
    pub curvature_eps: f64,
    /// Step of the single steepest-descent fallback after a failed search.
    pub fallback_lr: f64,
    pub trace_every: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            iterations: 400,
            lr0: 1.0,
            history_size: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            grad_tol: 1e-12,
            curvature_eps: 1e-10,
            fallback_lr: 1e-3,
            trace_every: 10,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_size == 0 {
            return Err(config_err!("L-BFGS history size must be at least 1"));
        }
        if !(self.lr0 > 0.0) || !(self.fallback_lr > 0.0) {
            return Err(config_err!("L-BFGS step sizes must be positive"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(config_err!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1,
                self.c2
            ));
        }
        if self.max_line_search == 0 {
            return Err(config_err!("line search needs at least one trial"));
        }
        Ok(())
    }
}

fn dot<F: Scalar>(a: &Array1<F>, b: &Array1<F>) -> f64 {
    a.dot(b).to_f64_lossy()
}

struct Probe<F> {
    a: f64,
    f: f64,
    dg: f64,
    x: Array1<F>,
    g: Array1<F>,
}

impl<F> Probe<F> {
    fn finite(&self) -> bool {
        self.f.is_finite() && self.dg.is_finite()
    }
}

struct Search<'a, F, L> {
    loss_fn: &'a mut L,
    x0: &'a Array1<F>,
    d: &'a Array1<F>,
    f0: f64,
    dg0: f64,
    evals: usize,
}

impl<F, L> Search<'_, F, L>
where
    F: Scalar,
    L: FnMut(&Array1<F>) -> Result<(F, Array1<F>)>,
{
    fn probe(&mut self, a: f64) -> Result<Probe<F>> {
        let mut x = self.x0.clone();
        x.scaled_add(F::of(a), self.d);
        self.evals += 1;
        match (self.loss_fn)(&x) {
            Ok((f, g)) => {
                let f = f.to_f64_lossy();
                let dg = dot(&g, self.d);
                Ok(Probe { a, f, dg, x, g })
            }
            Err(PannError::NonFinite) => Ok(Probe {
                a,
                f: f64::INFINITY,
                dg: f64::NAN,
                x,
                g: Array1::zeros(0),
            }),
            Err(e) => Err(e),
        }
    }

    fn armijo(&self, p: &Probe<F>, c1: f64) -> bool {
        p.finite() && p.f <= self.f0 + c1 * p.a * self.dg0
    }

    fn curvature(&self, p: &Probe<F>, c2: f64) -> bool {
        p.dg.abs() <= -c2 * self.dg0
    }
}

/// Minimiser of the cubic through two points with slopes, kept inside the
/// central 80% of the bracket; bisection when the fit is unusable.
fn interpolate(a1: f64, f1: f64, g1: f64, a2: f64, f2: f64, g2: f64) -> f64 {
    let (lo, hi) = (a1.min(a2), a1.max(a2));
    let mid = 0.5 * (lo + hi);
    if !(f2.is_finite() && g2.is_finite()) {
        return mid;
    }
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (a1 - a2);
    let disc = d1 * d1 - g1 * g2;
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (a2 - a1).signum() * disc.sqrt();
    let t = a2 - (a2 - a1) * (g2 + d2 - d1) / (g2 - g1 + 2.0 * d2);
    let w = hi - lo;
    if t.is_finite() {
        t.clamp(lo + 0.1 * w, hi - 0.1 * w)
    } else {
        mid
    }
}

/// Strong Wolfe line search (bracketing then zoom). `None` when no
/// acceptable point was found within the evaluation budget.
fn strong_wolfe<F, L>(s: &mut Search<'_, F, L>, cfg: &LbfgsConfig) -> Result<Option<Probe<F>>>
where
    F: Scalar,
    L: FnMut(&Array1<F>) -> Result<(F, Array1<F>)>,
{
    let origin = |s: &Search<'_, F, L>| Probe {
        a: 0.0,
        f: s.f0,
        dg: s.dg0,
        x: s.x0.clone(),
        g: Array1::zeros(0),
    };
    let mut prev = origin(s);
    let mut a = cfg.lr0;
    let (lo, hi) = loop {
        if s.evals >= cfg.max_line_search {
            return Ok(None);
        }
        let p = s.probe(a)?;
        if !s.armijo(&p, cfg.c1) || (prev.a > 0.0 && p.f >= prev.f) {
            break (prev, p);
        }
        if s.curvature(&p, cfg.c2) {
            return Ok(Some(p));
        }
        if p.dg >= 0.0 {
            break (p, prev);
        }
        prev = p;
        a *= 2.0;
    };
    let (mut lo, mut hi) = (lo, hi);
    while s.evals < cfg.max_line_search {
        if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1.0) {
            return Ok(None);
        }
        let a = interpolate(lo.a, lo.f, lo.dg, hi.a, hi.f, hi.dg);
        let p = s.probe(a)?;
        if !s.armijo(&p, cfg.c1) || p.f >= lo.f {
            hi = p;
        } else {
            if s.curvature(&p, cfg.c2) {
                return Ok(Some(p));
            }
            if p.dg * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    Ok(None)
}

struct History<F> {
    pairs: VecDeque<(Array1<F>, Array1<F>, f64)>,
    cap: usize,
}

impl<F: Scalar> History<F> {
    fn push(&mut self, s: Array1<F>, y: Array1<F>, sy: f64) {
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H g` by the two-loop recursion.
    fn direction(&self, g: &Array1<F>) -> Array1<F> {
        let mut q = g.clone();
        let mut alpha = vec![0.0; self.pairs.len()];
        for (i, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            alpha[i] = rho * dot(s, &q);
            q.scaled_add(F::of(-alpha[i]), y);
        }
        let gamma = match self.pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => {
                let l1 = g.iter().map(|v| v.abs()).sum::<F>().to_f64_lossy();
                (1.0 / l1).min(1.0)
            }
        };
        q.mapv_inplace(|v| v * F::of(gamma));
        for (i, (s, y, rho)) in self.pairs.iter().enumerate() {
            let beta = rho * dot(y, &q);
            q.scaled_add(F::of(alpha[i] - beta), s);
        }
        q.mapv_inplace(|v| -v);
        q
    }
}

/// Limited-memory BFGS. Accepted steps satisfy the strong Wolfe conditions;
/// after a failed search a single steepest-descent step is tried, and a
/// second consecutive failure ends the run.
pub fn lbfgs_run<F, L>(mut loss_fn: L, params: Array1<F>, cfg: &LbfgsConfig) -> Result<(Array1<F>, TrainReport)>
where
    F: Scalar,
    L: FnMut(&Array1<F>) -> Result<(F, Array1<F>)>,
{
    cfg.validate()?;
    let start = Instant::now();
    let mut report = TrainReport::empty();
    let mut x = params;
    let (f, mut g) = match loss_fn(&x) {
        Ok(r) => r,
        Err(PannError::NonFinite) => {
            report.diverged = true;
            report.stop = StopReason::Diverged;
            report.evaluations = 1;
            return Ok((x, report));
        }
        Err(e) => return Err(e),
    };
    let mut f = f.to_f64_lossy();
    report.evaluations = 1;
    report.final_loss = f;
    report.trace.push((0, f));
    if !f.is_finite() {
        report.diverged = true;
        report.stop = StopReason::Diverged;
        return Ok((x, report));
    }
    if x.is_empty() {
        report.stop = StopReason::EmptyParameters;
        report.wall_s = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }
    let mut hist = History {
        pairs: VecDeque::with_capacity(cfg.history_size),
        cap: cfg.history_size,
    };
    let mut failures = 0;
    let every = cfg.trace_every.max(1);
    report.stop = StopReason::IterationLimit;

    for it in 1..=cfg.iterations {
        if dot(&g, &g).sqrt() < cfg.grad_tol {
            report.stop = StopReason::GradientTolerance;
            break;
        }
        let mut d = hist.direction(&g);
        let mut dg0 = dot(&g, &d);
        if !(dg0 < 0.0) {
            hist.pairs.clear();
            d = hist.direction(&g);
            dg0 = dot(&g, &d);
        }
        let mut search = Search {
            loss_fn: &mut loss_fn,
            x0: &x,
            d: &d,
            f0: f,
            dg0,
            evals: 0,
        };
        let found = strong_wolfe(&mut search, cfg)?;
        report.evaluations += search.evals;
        match found {
            Some(p) => {
                let s = &p.x - &x;
                let y = &p.g - &g;
                let sy = dot(&s, &y);
                if sy > cfg.curvature_eps {
                    hist.push(s, y, sy);
                }
                x = p.x;
                g = p.g;
                f = p.f;
                failures = 0;
            }
            None => {
                failures += 1;
                if failures >= 2 {
                    report.stop = StopReason::LineSearchFailure;
                    break;
                }
                let mut xt = x.clone();
                xt.scaled_add(F::of(-cfg.fallback_lr), &g);
                report.evaluations += 1;
                match loss_fn(&xt) {
                    Ok((ft, gt)) if ft.to_f64_lossy() < f => {
                        x = xt;
                        g = gt;
                        f = ft.to_f64_lossy();
                        hist.pairs.clear();
                    }
                    Ok(_) | Err(PannError::NonFinite) => {
                        report.stop = StopReason::LineSearchFailure;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        report.lbfgs_iterations = it;
        report.final_loss = f;
        if it % every == 0 || it == cfg.iterations {
            report.trace.push((it, f));
        }
    }
    if report.trace.last().map(|t| t.0) != Some(report.lbfgs_iterations) {
        report.trace.push((report.lbfgs_iterations, f));
    }
    report.wall_s = start.elapsed().as_secs_f64();
    Ok((x, report))
}
