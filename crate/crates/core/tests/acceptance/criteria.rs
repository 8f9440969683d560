use narrownet::compile_convex::{compile_convex, ConvexCompileOptions, PositivityShift};
use narrownet::compile_dc::{compile_dc, DcCompileOptions};
use narrownet::dc_decompose::convexity_check;
use narrownet::deepen::{accumulator_trace, deepen};
use narrownet::maxaffine_fit::{error_bound, loglog_slope};
use narrownet::pipeline::{self, ContinuousBuild};
use narrownet::registry::BuiltinTarget;
use narrownet::scan::{random_points, sup_error};
use narrownet::simplex::{SimplicialInterpolant, DEFAULT_VERTEX_BUDGET};
use narrownet::{MaxAffineFn, OutputMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::common::*;
use crate::Outcome;

fn output_mode(i: usize) -> OutputMode {
    if i.is_multiple_of(2) {
        OutputMode::ReluReadout
    } else {
        OutputMode::LinearReadout
    }
}

pub fn convex_compilation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    let dims = [1, 2, 3, 5];
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for i in 0..200 {
        let d = dims[i % dims.len()];
        let n = rng.random_range(1..=20);
        let mode = output_mode(i);
        let raw = max_affine(&mut rng, d, n);
        // ReLU readouts need a nonnegative target; linear readouts take it signed.
        let f = if mode == OutputMode::ReluReadout { lift_nonnegative(&raw) } else { raw };
        let opts = ConvexCompileOptions {
            output_mode: mode,
            positivity_shift: PositivityShift::Auto,
        };
        let net = compile_convex(&f, &opts).unwrap();
        let pts = random_points(d, SCAN_POINTS, 1000 + i as u64);
        let err = sup_error(&pts, |x| net.eval_scalar(x).unwrap(), |x| f.eval_unchecked(x)).value;
        worst = worst.max(err);
        if net.hidden_width() != d + 1 || net.hidden_blocks() != n || err > TOL {
            bad.push(format!("#{i} d={d} N={n} width={} blocks={} err={err:e}", net.hidden_width(), net.hidden_blocks()));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("200 targets, width d+1 and blocks N, worst error {worst:.3e} (tol 1e-9){}", failures(&bad)),
    )
}

pub fn dc_compilation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDC);
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for i in 0..100 {
        let d = 1 + i % 3;
        let (n, m) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let mode = output_mode(i);
        let raw = dc(&mut rng, d, n, m);
        let f = if mode == OutputMode::ReluReadout { lift_dc(&raw) } else { raw };
        let net = compile_dc(&f, &DcCompileOptions { output_mode: mode }).unwrap();
        let pts = random_points(d, SCAN_POINTS, 2000 + i as u64);
        let err = sup_error(&pts, |x| net.eval_scalar(x).unwrap(), |x| f.eval_unchecked(x)).value;
        worst = worst.max(err);
        if net.hidden_width() != d + 3 || net.hidden_blocks() != 2 * (n + m) || err > TOL {
            bad.push(format!("#{i} d={d} N={n} M={m} width={} blocks={} err={err:e}", net.hidden_width(), net.hidden_blocks()));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("100 targets, width d+3 and blocks 2(M+N), worst error {worst:.3e} (tol 1e-9){}", failures(&bad)),
    )
}

pub fn wide_to_deep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDE);
    let mut worst: f64 = 0.0;
    let mut min_z = f64::INFINITY;
    let mut bad = Vec::new();
    for i in 0..100 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(1..=32);
        let s = shallow(&mut rng, d, n);
        let net = deepen(&s).unwrap();
        let pts = random_points(d, SCAN_POINTS, 3000 + i as u64);
        let err = sup_error(&pts, |x| net.eval_scalar(x).unwrap(), |x| s.eval(x).unwrap()).value;
        let z = pts
            .par_iter()
            .map(|x| accumulator_trace(&net, x).unwrap().into_iter().fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min);
        worst = worst.max(err);
        min_z = min_z.min(z);
        if net.hidden_width() != d + 2 || net.relu_depth() != n + 2 || err > TOL || z <= 0.0 {
            bad.push(format!(
                "#{i} d={d} n={n} width={} depth={} err={err:e} min z={z:e}",
                net.hidden_width(),
                net.relu_depth()
            ));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "100 shallow nets, width d+2 and n+2 layers, worst error {worst:.3e} (tol 1e-9), min prefix z {min_z:.3e} > 0{}",
            failures(&bad)
        ),
    )
}

pub struct ContinuousCase {
    pub name: &'static str,
    pub dim: usize,
    pub eps: f64,
    pub target: BuiltinTarget,
    pub build: ContinuousBuild,
}

/// The end-to-end builds shared by the continuous-pipeline and decomposition checks.
pub fn continuous_cases() -> &'static [ContinuousCase] {
    static CASES: OnceLock<Vec<ContinuousCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let specs = [("hat", 1, 0.2), ("hat", 1, 0.1), ("hat", 1, 0.05), ("sin2d-positive", 2, 0.2), ("sin2d-positive", 2, 0.1)];
        specs
            .iter()
            .map(|&(name, dim, eps)| {
                let target = BuiltinTarget::lookup(name, dim, &BTreeMap::new()).unwrap();
                let build =
                    pipeline::continuous(&target.target_fn(), eps, DEFAULT_VERTEX_BUDGET, OutputMode::ReluReadout).unwrap();
                ContinuousCase {
                    name,
                    dim,
                    eps,
                    target,
                    build,
                }
            })
            .collect()
    })
}

fn dense_scan(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => cube_grid(1, 20_001),
        _ => cube_grid(2, 201),
    }
}

pub fn continuous_pipeline() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for c in continuous_cases() {
        let net = &c.build.net;
        let pts = dense_scan(c.dim);
        let err = sup_error(&pts, |x| net.eval_scalar(x).unwrap(), |x| c.target.eval(x)).value;
        let pass = net.hidden_width() == c.dim + 3 && err <= c.eps;
        ok &= pass;
        lines.push(format!(
            "{} eps={}: width {} blocks {} error {err:.3e}{}",
            c.name,
            c.eps,
            net.hidden_width(),
            net.hidden_blocks(),
            if pass { "" } else { " FAILED" }
        ));
    }
    Outcome::new(ok, lines.join("; "))
}

pub fn convex_rate() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, d) in [("parabola", 1), ("norm2-sq", 2), ("norm2-sq", 3)] {
        let target = BuiltinTarget::lookup(name, d, &BTreeMap::new()).unwrap();
        let ct = target.convex_target().unwrap();
        // Grid fine enough to contain every cell corner of the m = 8 tangent grid.
        let pts = match d {
            1 => cube_grid(1, 10_001),
            2 => cube_grid(2, 129),
            _ => cube_grid(3, 33),
        };
        let opts = ConvexCompileOptions::default();
        let mut sweep = Vec::new();
        for m in [1usize, 2, 4, 8] {
            let k = m.pow(d as u32);
            let build = pipeline::convex_fit(&ct, k, &opts).unwrap();
            let err = sup_error(&pts, |x| build.net.eval_scalar(x).unwrap(), |x| target.eval(x)).value;
            let bound = error_bound(target.lipschitz, d, k);
            ok &= err <= bound && build.net.hidden_width() == d + 1 && build.net.hidden_blocks() <= k;
            if m > 1 {
                sweep.push((k as f64, err));
            }
        }
        let slope = loglog_slope(&sweep);
        let limit = -2.0 / d as f64 + 0.3;
        ok &= slope <= limit;
        let errs: Vec<String> = sweep.iter().map(|(k, e)| format!("k={k}:{e:.2e}")).collect();
        lines.push(format!("{name} d={d} [{}] slope {slope:.3} (limit {limit:.3})", errs.join(" ")));
    }
    Outcome::new(ok, lines.join("; "))
}

fn part_interpolant(p: &SimplicialInterpolant, f: &MaxAffineFn) -> SimplicialInterpolant {
    SimplicialInterpolant::from_fn(p.dim(), p.resolution(), DEFAULT_VERTEX_BUDGET, |x| f.eval_unchecked(x)).unwrap()
}

pub fn decomposition_soundness() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, c) in continuous_cases().iter().enumerate() {
        let p = &c.build.interpolant;
        let dc = &c.build.decomposition.dc;
        let pts = random_points(c.dim, SCAN_POINTS, 6000 + i as u64);
        let mut convex = true;
        let mut lift_err: f64 = 0.0;
        for part in [&dc.g, &dc.h] {
            // Each part is affine on every simplex, so its lattice interpolant is the part itself.
            let q = part_interpolant(p, part);
            convex &= convexity_check(&q).is_convex();
            lift_err = lift_err.max(sup_error(&pts, |x| q.eval(x).unwrap(), |x| part.eval_unchecked(x)).value);
        }
        let lower = dc.g.cube_lower_bound().min(dc.h.cube_lower_bound());
        let recon = sup_error(&pts, |x| dc.eval_unchecked(x), |x| p.eval(x).unwrap()).value;
        let pass = convex && lift_err <= TOL && lower >= 0.0 && recon <= TOL;
        ok &= pass;
        lines.push(format!(
            "{} eps={}: convex {convex}, min lower bound {lower:.3e}, |g-h-f| {recon:.3e}{}",
            c.name,
            c.eps,
            if pass { "" } else { " FAILED" }
        ));
    }
    Outcome::new(ok, lines.join("; "))
}

fn failures(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; {} failures, first: {}", bad.len(), bad[0])
    }
}
