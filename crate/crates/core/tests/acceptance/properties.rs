//! Invariant suites run through a deterministic proptest runner, 1000 cases each.

use std::collections::BTreeMap;
use std::time::Instant;

use narrownet::affine::compose_affine;
use narrownet::compile_convex::{compile_convex, positivity_constant, running_maxima, ConvexCompileOptions, PositivityShift};
use narrownet::compile_dc::{compile_dc, memory_layer_index, shift_constants, DcCompileOptions};
use narrownet::dc_decompose::{convexity_check, decompose, interior_facets, CreaseSet, DecomposeOptions, HingeSum};
use narrownet::deepen::{accumulator_trace, deepen, ShallowNet};
use narrownet::maxaffine_fit::{error_bound, fit_max_affine};
use narrownet::registry::BuiltinTarget;
use narrownet::scan::random_points;
use narrownet::simplex::{build_interpolant, lattice_coords, permutations, Simplex, SimplicialInterpolant, TargetFn};
use narrownet::{AffineFunctional, AffineMap, DcFn, Layer, MaxAffineFn, OutputMode, ReluNet};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use crate::common::cube_grid;
use crate::Outcome;

const CASES: u32 = 1000;
const TOL: f64 = 1e-9;

type Check = std::result::Result<(), TestCaseError>;

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

struct Suite {
    passed: usize,
    failed: Vec<String>,
}

impl Suite {
    fn check<S: Strategy>(&mut self, name: &str, strategy: S, test: impl Fn(S::Value) -> Check) {
        let start = Instant::now();
        let result = runner().run(&strategy, test);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => {
                self.passed += 1;
                println!("    [PASS] {name} ({CASES} cases, {secs:.1}s)");
            }
            Err(e) => {
                println!("    [FAIL] {name}: {e}");
                self.failed.push(name.to_string());
            }
        }
    }
}

fn functional(d: usize) -> impl Strategy<Value = AffineFunctional> {
    (vec(-1.0f64..=1.0, d), -1.0f64..=1.0).prop_map(|(a, b)| AffineFunctional::new(a, b).unwrap())
}

fn pieces(d: usize, max: usize) -> impl Strategy<Value = MaxAffineFn> {
    vec(functional(d), 1..=max).prop_map(move |p| MaxAffineFn::new(d, p).unwrap())
}

fn max_affine(dims: &'static [usize], max: usize) -> impl Strategy<Value = MaxAffineFn> {
    prop::sample::select(dims).prop_flat_map(move |d| pieces(d, max))
}

fn dc_fn(max_dim: usize, max: usize) -> impl Strategy<Value = DcFn> {
    (1..=max_dim).prop_flat_map(move |d| (pieces(d, max), pieces(d, max)).prop_map(|(g, h)| DcFn::new(g, h).unwrap()))
}

fn shallow(max_dim: usize, max_width: usize) -> impl Strategy<Value = ShallowNet> {
    (1..=max_dim, 1..=max_width).prop_flat_map(|(d, n)| {
        (vec(functional(d), n), vec(-1.0f64..=1.0, n), -1.0f64..=1.0)
            .prop_map(|(p, c, b)| ShallowNet::new(p, c, b).unwrap())
    })
}

fn affine_map(rows: usize, cols: usize, entry: impl Strategy<Value = f64> + Clone) -> impl Strategy<Value = AffineMap> {
    (vec(entry.clone(), rows * cols), vec(entry, rows))
        .prop_map(move |(w, b)| AffineMap::new(rows, cols, w, b).unwrap())
}

fn finite_double() -> impl Strategy<Value = f64> + Clone {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

/// Random nets with a ReLU on every layer (`ReluNet` allows linear only at the end).
fn relu_net(entry: impl Strategy<Value = f64> + Clone + 'static) -> impl Strategy<Value = ReluNet> {
    vec(1usize..=5, 2..=5).prop_flat_map(move |widths| {
        let maps: Vec<_> = widths.windows(2).map(|w| affine_map(w[1], w[0], entry.clone())).collect();
        let input = widths[0];
        maps.prop_map(move |maps| ReluNet::new(input, maps.into_iter().map(Layer::relu).collect()).unwrap())
    })
}

/// Interpolant on a small lattice with random vertex values.
fn interpolant(max_dim: usize, max_n: usize, scale: f64) -> impl Strategy<Value = SimplicialInterpolant> {
    (1..=max_dim)
        .prop_flat_map(move |d| {
            let top = if d == 3 { max_n.min(3) } else { max_n };
            (Just(d), 1..=top)
        })
        .prop_flat_map(move |(d, n)| {
            vec(-scale..=scale, (n + 1).pow(d as u32))
                .prop_map(move |v| SimplicialInterpolant::from_values(d, n, v).unwrap())
        })
}

fn random_simplex(p: &SimplicialInterpolant, pick: usize) -> Simplex {
    let d = p.dim();
    let perms = permutations(d);
    let cells = p.resolution().pow(d as u32);
    let idx = pick % (cells * perms.len());
    Simplex {
        cell: lattice_coords(d, p.resolution() - 1, idx / perms.len()),
        perm: perms[idx % perms.len()].clone(),
    }
}

/// Convex combination of the simplex vertices with weights proportional to `w`.
fn point_in(p: &SimplicialInterpolant, s: &Simplex, w: &[f64]) -> Vec<f64> {
    let verts = s.vertices();
    let total: f64 = w.iter().take(verts.len()).sum();
    let mut x = vec![0.0; p.dim()];
    for (v, wi) in verts.iter().zip(w) {
        for (xk, pk) in x.iter_mut().zip(p.vertex_point(v)) {
            *xk += wi / total * pk;
        }
    }
    x
}

fn points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    random_points(d, count, seed)
}

fn affine_suite(s: &mut Suite) {
    s.check(
        "affine_core: max-affine is convex on random triples",
        max_affine(&[1, 2, 3, 5], 10).prop_flat_map(|f| {
            let d = f.dim();
            (Just(f), vec(0.0f64..=1.0, d), vec(0.0f64..=1.0, d), 0.0f64..=1.0)
        }),
        |(f, x, y, t)| {
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let lhs = f.eval(&z).unwrap();
            let rhs = t * f.eval(&x).unwrap() + (1.0 - t) * f.eval(&y).unwrap();
            prop_assert!(lhs <= rhs + TOL, "{lhs} > {rhs}");
            Ok(())
        },
    );
    s.check(
        "affine_core: cube_bounds contain 10^4 samples and are attained at vertices",
        (1usize..=6).prop_flat_map(|d| (functional(d), any::<u64>())),
        |(f, seed)| {
            let (lo, hi) = f.cube_bounds();
            for x in points(f.dim(), 10_000, seed) {
                let v = f.eval(&x);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
            prop_assert!((f.eval(&f.argmin_vertex()) - lo).abs() <= 1e-12);
            prop_assert!((f.eval(&f.argmax_vertex()) - hi).abs() <= 1e-12);
            Ok(())
        },
    );
    s.check(
        "affine_core: compose_affine associates",
        (1usize..=4, 1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(p, q, r, t)| {
            let e = -1.0f64..=1.0;
            (affine_map(t, r, e.clone()), affine_map(r, q, e.clone()), affine_map(q, p, e))
        }),
        |(a, b, c)| {
            let left = compose_affine(&compose_affine(&a, &b).unwrap(), &c).unwrap();
            let right = compose_affine(&a, &compose_affine(&b, &c).unwrap()).unwrap();
            for (u, v) in left.weights().iter().zip(right.weights()).chain(left.bias().iter().zip(right.bias())) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
            Ok(())
        },
    );
}

fn net_suite(s: &mut Suite) {
    s.check(
        "relu_net: compiled nets report the constructed width and depth",
        (max_affine(&[1, 2, 3, 5], 20), dc_fn(3, 12), shallow(5, 32)),
        |(f, g, sh)| {
            let d = f.dim();
            let opts = ConvexCompileOptions {
                output_mode: OutputMode::LinearReadout,
                positivity_shift: PositivityShift::Auto,
            };
            let net = compile_convex(&f, &opts).unwrap();
            prop_assert_eq!((net.hidden_width(), net.hidden_blocks()), (d + 1, f.len()));
            let net = compile_dc(&g, &DcCompileOptions { output_mode: OutputMode::LinearReadout }).unwrap();
            prop_assert_eq!((net.hidden_width(), net.hidden_blocks()), (g.dim() + 3, 2 * (g.g.len() + g.h.len())));
            let net = deepen(&sh).unwrap();
            prop_assert_eq!((net.hidden_width(), net.relu_depth()), (sh.dim() + 2, sh.width() + 2));
            Ok(())
        },
    );
    s.check(
        "relu_net: ReLU final layer gives nonnegative outputs",
        relu_net(-2.0f64..=2.0).prop_flat_map(|net| {
            let d = net.input_dim();
            (Just(net), vec(-3.0f64..=3.0, d))
        }),
        |(net, x)| {
            prop_assert!(net.eval(&x).unwrap().iter().all(|&v| v >= 0.0));
            Ok(())
        },
    );
    s.check(
        "relu_net: serialization round-trips every finite double bit-exactly",
        relu_net(finite_double()),
        |net| {
            let back = ReluNet::from_json(&net.to_json()).unwrap();
            prop_assert_eq!(net.layers().len(), back.layers().len());
            for (a, b) in net.layers().iter().zip(back.layers()) {
                let bits = |m: &AffineMap| m.weights().iter().chain(m.bias()).map(|v| v.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(&a.map), bits(&b.map));
                prop_assert_eq!(a.activation, b.activation);
            }
            Ok(())
        },
    );
}

fn convex_suite(s: &mut Suite) {
    let relu = ConvexCompileOptions::default();
    s.check(
        "compile_convex: net equals a nonnegative target",
        (max_affine(&[1, 2, 3, 5], 20), any::<u64>()),
        |(raw, seed)| {
            let f = raw.shifted((-raw.cube_lower_bound()).max(0.0));
            let net = compile_convex(&f, &relu).unwrap();
            for x in points(f.dim(), 100, seed) {
                prop_assert!((net.eval_scalar(&x).unwrap() - f.eval(&x).unwrap()).abs() <= TOL);
            }
            Ok(())
        },
    );
    s.check(
        "compile_convex: last channel carries the running maximum after every block",
        (max_affine(&[1, 2, 3, 5], 20), any::<u64>()),
        |(f, seed)| {
            let net = compile_convex(&f, &relu).unwrap();
            let c = positivity_constant(&f);
            for x in points(f.dim(), 20, seed) {
                let running = running_maxima(&net, &f, c, &x).unwrap();
                let mut best = f64::NEG_INFINITY;
                for (k, r) in running.iter().enumerate() {
                    best = best.max(f.pieces()[k].eval(&x) + c);
                    prop_assert!((r - best.max(0.0)).abs() <= TOL, "block {k}: {r} vs {best}");
                }
            }
            Ok(())
        },
    );
    s.check(
        "compile_convex: width d+1 and input copy stays nonnegative",
        (max_affine(&[1, 2, 3, 5], 20), any::<u64>()),
        |(f, seed)| {
            let d = f.dim();
            let net = compile_convex(&f, &relu).unwrap();
            prop_assert!(net.layers()[..net.layers().len() - 1].iter().all(|l| l.map.rows() <= d + 1));
            for x in points(d, 20, seed) {
                let trace = net.trace(&x).unwrap();
                for t in &trace[..trace.len() - 1] {
                    prop_assert!(t.post[..d].iter().zip(&x).all(|(a, b)| *a >= 0.0 && (a - b).abs() <= 1e-12));
                }
            }
            Ok(())
        },
    );
    s.check(
        "compile_convex: output does not depend on piece order",
        (max_affine(&[1, 2, 3, 5], 20), any::<u64>()).prop_flat_map(|(f, seed)| {
            let n = f.len();
            (Just(f), Just(seed), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        }),
        |(f, seed, order)| {
            let g = MaxAffineFn::new(f.dim(), order.iter().map(|&i| f.pieces()[i].clone()).collect()).unwrap();
            let opts = ConvexCompileOptions {
                output_mode: OutputMode::LinearReadout,
                positivity_shift: PositivityShift::Auto,
            };
            let (a, b) = (compile_convex(&f, &opts).unwrap(), compile_convex(&g, &opts).unwrap());
            for x in points(f.dim(), 50, seed) {
                prop_assert!((a.eval_scalar(&x).unwrap() - b.eval_scalar(&x).unwrap()).abs() <= TOL);
            }
            Ok(())
        },
    );
}

fn dc_suite(s: &mut Suite) {
    let linear = DcCompileOptions { output_mode: OutputMode::LinearReadout };
    s.check(
        "compile_dc: net equals g - h",
        (dc_fn(3, 12), any::<u64>()),
        |(f, seed)| {
            let net = compile_dc(&f, &linear).unwrap();
            for x in points(f.dim(), 100, seed) {
                prop_assert!((net.eval_scalar(&x).unwrap() - f.eval(&x).unwrap()).abs() <= TOL);
            }
            Ok(())
        },
    );
    s.check(
        "compile_dc: memory channel holds g + T_g after the g phase",
        (dc_fn(3, 12), any::<u64>()),
        |(f, seed)| {
            let net = compile_dc(&f, &linear).unwrap();
            let (tg, _) = shift_constants(&f);
            let (idx, m) = (memory_layer_index(&f), f.dim() + 2);
            for x in points(f.dim(), 50, seed) {
                let t = net.trace(&x).unwrap();
                prop_assert!((t[idx].post[m] - (f.g.eval(&x).unwrap() + tg)).abs() <= TOL);
            }
            Ok(())
        },
    );
    s.check(
        "compile_dc: every max gadget sees a nonnegative running value",
        (dc_fn(3, 12), any::<u64>()),
        |(f, seed)| {
            let net = compile_dc(&f, &linear).unwrap();
            let d = f.dim();
            let gadgets = f.g.len() + f.h.len();
            for x in points(d, 50, seed) {
                let t = net.trace(&x).unwrap();
                for k in 0..gadgets {
                    let y = t[2 * k].pre[d + 1];
                    prop_assert!(y >= -1e-12, "gadget {k}: y = {y}");
                }
            }
            Ok(())
        },
    );
}

fn deepen_suite(s: &mut Suite) {
    s.check(
        "deepen: accumulator stays positive at every prefix",
        (shallow(5, 32), any::<u64>()),
        |(sh, seed)| {
            let net = deepen(&sh).unwrap();
            for x in points(sh.dim(), 50, seed) {
                prop_assert!(accumulator_trace(&net, &x).unwrap().iter().all(|&z| z > 0.0));
            }
            Ok(())
        },
    );
    s.check(
        "deepen: deep net equals the shallow net on the cube",
        (shallow(5, 32), any::<u64>()),
        |(sh, seed)| {
            let net = deepen(&sh).unwrap();
            for x in points(sh.dim(), 100, seed) {
                prop_assert!((net.eval_scalar(&x).unwrap() - sh.eval(&x).unwrap()).abs() <= TOL);
            }
            Ok(())
        },
    );
    s.check(
        "deepen: width d+2 and n+2 layers",
        shallow(5, 32),
        |sh| {
            let net = deepen(&sh).unwrap();
            prop_assert_eq!(net.hidden_width(), sh.dim() + 2);
            prop_assert_eq!(net.relu_depth(), sh.width() + 2);
            prop_assert_eq!(net.layers().len(), sh.width() + 2);
            Ok(())
        },
    );
}

fn simplex_suite(s: &mut Suite) {
    s.check(
        "simplex_interp: interpolant matches vertex values exactly",
        interpolant(3, 12, 1.0),
        |p| {
            let total = (p.resolution() + 1).pow(p.dim() as u32);
            for idx in 0..total {
                let v = lattice_coords(p.dim(), p.resolution(), idx);
                prop_assert_eq!(p.eval(&p.vertex_point(&v)).unwrap(), p.vertex_value(&v));
            }
            Ok(())
        },
    );
    s.check(
        "simplex_interp: sup error within L * spacing * sqrt(d)",
        (1usize..=3)
            .prop_flat_map(|d| (vec(-3.0f64..=3.0, d), 0.1f64..=0.5, any::<u64>())),
        |(a, eps, seed)| {
            let d = a.len();
            let l = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
            let w = a.clone();
            let f = TargetFn::new(d, Some(l), move |x| w.iter().zip(x).map(|(u, v)| u * v).sum::<f64>().sin());
            let p = build_interpolant(&f, eps, 1 << 20).unwrap();
            let bound = l * p.spacing() * (d as f64).sqrt();
            prop_assert!(bound <= eps + 1e-12);
            for x in points(d, 200, seed) {
                prop_assert!((p.eval(&x).unwrap() - f.eval(&x)).abs() <= bound + 1e-12);
            }
            Ok(())
        },
    );
    s.check(
        "simplex_interp: affine inside each simplex",
        (interpolant(3, 6, 1.0), any::<usize>(), vec(0.0f64..=1.0, 4), vec(0.0f64..=1.0, 4)),
        |(p, pick, w1, w2)| {
            prop_assume!(w1.iter().take(p.dim() + 1).sum::<f64>() > 1e-3);
            prop_assume!(w2.iter().take(p.dim() + 1).sum::<f64>() > 1e-3);
            let s = random_simplex(&p, pick);
            let (x, y) = (point_in(&p, &s, &w1), point_in(&p, &s, &w2));
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let expect = 0.5 * (p.eval(&x).unwrap() + p.eval(&y).unwrap());
            prop_assert!((p.eval(&mid).unwrap() - expect).abs() <= 1e-12);
            Ok(())
        },
    );
    s.check(
        "simplex_interp: continuous across interior facets",
        (interpolant(3, 6, 1.0), any::<usize>(), vec(0.0f64..=1.0, 3)),
        |(p, pick, w)| {
            prop_assume!(w.iter().take(p.dim()).sum::<f64>() > 1e-3);
            let facets = interior_facets(&p);
            prop_assume!(!facets.is_empty());
            let (a, b, _, verts) = &facets[pick % facets.len()];
            let total: f64 = w.iter().take(verts.len()).sum();
            let mut x = vec![0.0; p.dim()];
            for (v, wi) in verts.iter().zip(&w) {
                for (xk, pk) in x.iter_mut().zip(p.vertex_point(v)) {
                    *xk += wi / total * pk;
                }
            }
            let (fa, fb) = (p.affine_piece(a).eval(&x), p.affine_piece(b).eval(&x));
            prop_assert!((fa - fb).abs() <= 1e-12, "{fa} vs {fb}");
            Ok(())
        },
    );
}

fn decompose_suite(s: &mut Suite) {
    s.check(
        "dc_decompose: both parts convex, nonnegative, and reconstruct the interpolant",
        (interpolant(3, 4, 1.0), any::<u64>()),
        |(p, seed)| {
            let dec = decompose(&p, &DecomposeOptions::default()).unwrap();
            for part in [&dec.dc.g, &dec.dc.h] {
                prop_assert!(part.cube_lower_bound() >= 0.0);
                let q = SimplicialInterpolant::from_fn(p.dim(), p.resolution(), 1 << 20, |x| part.eval_unchecked(x)).unwrap();
                prop_assert!(convexity_check(&q).is_convex());
            }
            prop_assert!(convexity_check(&dec.convex_part).is_convex());
            for x in points(p.dim(), 100, seed) {
                prop_assert!((dec.dc.eval(&x).unwrap() - p.eval(&x).unwrap()).abs() <= TOL);
            }
            Ok(())
        },
    );
    s.check(
        "dc_decompose: hinge sum is affine inside each simplex",
        (interpolant(3, 6, 1.0), 0.0f64..=10.0, any::<usize>(), vec(0.0f64..=1.0, 4), vec(0.0f64..=1.0, 4)),
        |(p, lambda, pick, w1, w2)| {
            prop_assume!(w1.iter().take(p.dim() + 1).sum::<f64>() > 1e-3);
            prop_assume!(w2.iter().take(p.dim() + 1).sum::<f64>() > 1e-3);
            let h = HingeSum {
                creases: CreaseSet::new(p.dim(), p.resolution()),
                lambda,
            };
            let s = random_simplex(&p, pick);
            let (x, y) = (point_in(&p, &s, &w1), point_in(&p, &s, &w2));
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let expect = 0.5 * (h.eval(&x) + h.eval(&y));
            prop_assert!((h.eval(&mid) - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            Ok(())
        },
    );
    s.check(
        "dc_decompose: lambda doubling terminates and piece counts are reported",
        (interpolant(2, 5, 1.0), -6i32..=6),
        |(p, exp)| {
            let scale = 10f64.powi(exp);
            let scaled = SimplicialInterpolant::from_values(p.dim(), p.resolution(), p.values().iter().map(|v| v * scale).collect()).unwrap();
            let dec = decompose(&scaled, &DecomposeOptions::default()).unwrap();
            prop_assert!(dec.doublings <= 64);
            prop_assert_eq!(dec.g_pieces(), dec.dc.g.len());
            prop_assert_eq!(dec.h_pieces(), dec.dc.h.len());
            prop_assert!(dec.g_pieces() >= 1 && dec.h_pieces() >= 1);
            Ok(())
        },
    );
}

/// Convex builtins in the dimensions where they are defined.
fn convex_builtin() -> impl Strategy<Value = BuiltinTarget> {
    let names = ["affine", "parabola", "norm2-sq", "hat-complement", "abs-diff"];
    (prop::sample::select(names.to_vec()), 1usize..=3, -1.0f64..=1.0, -1.0f64..=1.0).prop_filter_map(
        "target not defined in this dimension",
        |(name, d, b, c)| {
            let mut params = BTreeMap::new();
            if name == "affine" {
                params.insert("b".to_string(), b);
                params.insert("c".to_string(), c);
            }
            BuiltinTarget::lookup(name, d, &params).ok()
        },
    )
}

fn fit_grid(d: usize) -> Vec<Vec<f64>> {
    // Contains every cell corner and centre of the tangent grids with m ∈ {1, 2, 4, 8}.
    cube_grid(d, if d == 1 { 129 } else { 17 })
}

fn fit_suite(s: &mut Suite) {
    s.check(
        "maxaffine_fit: fit never exceeds the target",
        (convex_builtin(), 1usize..=64, any::<u64>()),
        |(t, k, seed)| {
            let fit = fit_max_affine(&t.convex_target().unwrap(), k).unwrap();
            for x in points(t.dim, 200, seed) {
                prop_assert!(fit.eval(&x).unwrap() <= t.eval(&x) + 1e-6);
            }
            Ok(())
        },
    );
    s.check(
        "maxaffine_fit: sup error non-increasing along k = m^d",
        convex_builtin(),
        |t| {
            let ct = t.convex_target().unwrap();
            let grid = fit_grid(t.dim);
            let mut prev = f64::INFINITY;
            for m in [1usize, 2, 4, 8] {
                let fit = fit_max_affine(&ct, m.pow(t.dim as u32)).unwrap();
                let err = grid.iter().map(|x| t.eval(x) - fit.eval_unchecked(x)).fold(0.0, f64::max);
                prop_assert!(err <= prev + 1e-12, "m={m}: {err} > {prev}");
                prev = err;
            }
            Ok(())
        },
    );
    s.check(
        "maxaffine_fit: dense-scan error within 72 L d^(3/2) k^(-2/d)",
        (convex_builtin(), prop::sample::select(vec![1usize, 2, 4, 8])),
        |(t, m)| {
            let k = m.pow(t.dim as u32);
            let fit = fit_max_affine(&t.convex_target().unwrap(), k).unwrap();
            let err = fit_grid(t.dim)
                .iter()
                .map(|x| (t.eval(x) - fit.eval_unchecked(x)).abs())
                .fold(0.0, f64::max);
            prop_assert!(err <= error_bound(t.lipschitz, t.dim, k));
            Ok(())
        },
    );
    s.check(
        "maxaffine_fit: compiled fit keeps width d+1, at most k blocks, and the fit error",
        (convex_builtin(), 1usize..=64, any::<u64>()),
        |(t, k, seed)| {
            let fit = fit_max_affine(&t.convex_target().unwrap(), k).unwrap();
            let opts = ConvexCompileOptions {
                output_mode: OutputMode::LinearReadout,
                positivity_shift: PositivityShift::Auto,
            };
            let net = compile_convex(&fit, &opts).unwrap();
            prop_assert_eq!(net.hidden_width(), t.dim + 1);
            prop_assert!(net.hidden_blocks() <= k);
            for x in points(t.dim, 100, seed) {
                let net_err = t.eval(&x) - net.eval_scalar(&x).unwrap();
                let fit_err = t.eval(&x) - fit.eval_unchecked(&x);
                prop_assert!((net_err - fit_err).abs() <= TOL);
            }
            Ok(())
        },
    );
}

pub fn run_all() -> Outcome {
    let mut suite = Suite {
        passed: 0,
        failed: Vec::new(),
    };
    affine_suite(&mut suite);
    net_suite(&mut suite);
    convex_suite(&mut suite);
    dc_suite(&mut suite);
    deepen_suite(&mut suite);
    simplex_suite(&mut suite);
    decompose_suite(&mut suite);
    fit_suite(&mut suite);
    let total = suite.passed + suite.failed.len();
    Outcome::new(
        suite.failed.is_empty(),
        if suite.failed.is_empty() {
            format!("{total} properties, {CASES} cases each")
        } else {
            format!("{} of {total} properties failed: {}", suite.failed.len(), suite.failed.join(", "))
        },
    )
}
