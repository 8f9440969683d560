use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use narrownet::compile_convex::{compile_convex, ConvexCompileOptions, PositivityShift};
use narrownet::compile_dc::{compile_dc, DcCompileOptions};
use narrownet::deepen::deepen;
use narrownet::maxaffine_fit::{error_bound, loglog_slope};
use narrownet::pipeline::{self, ContinuousBuild};
use narrownet::scan::{sup_error, Scan, SupError};
use narrownet::simplex::{modulus_scaled_simplex_count, DEFAULT_VERTEX_BUDGET};
use narrownet::{Error, MaxAffineFn, OutputMode, ReluNet, DEFAULT_TOL};
use serde_json::{json, Value};

use crate::report::{Assertion, ScanInfo, VerifyReport};
use crate::target::{LoadedTarget, Target};
use crate::{CompileArgs, EvalArgs, Failure, Mode, RateArgs, ScanArgs, VerifyArgs};

pub const BUDGET_ENV: &str = "NARROWNET_BUDGET";

fn vertex_budget(flag: Option<u128>) -> Result<u128, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Usage(Error::Parse(format!("{BUDGET_ENV}={v:?} is not a vertex count")))
        }),
        Err(_) => Ok(DEFAULT_VERTEX_BUDGET),
    }
}

fn resolve_scan(args: &ScanArgs, dim: usize) -> Result<Scan, Failure> {
    let scan = match &args.scan {
        Some(s) => s.parse::<Scan>()?,
        None => Scan::default_for(dim),
    };
    Ok(match args.seed {
        Some(seed) => scan.with_seed(seed),
        None => scan,
    })
}

fn scan_info(scan: &Scan, dim: usize) -> ScanInfo {
    ScanInfo {
        description: scan.to_string(),
        kind: match scan {
            Scan::Grid { .. } => "grid",
            Scan::Random { .. } => "random",
        },
        points: scan.point_count(dim),
        seed: match scan {
            Scan::Random { seed, .. } => Some(*seed),
            Scan::Grid { .. } => None,
        },
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Usage(Error::Io(format!("{}: {e}", path.display()))))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(Error::Io(e.to_string())))
        }
    }
}

fn net_scalar(net: &ReluNet) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x| net.eval_scalar(x).expect("dimension checked")
}

fn clamp_if(mode: OutputMode, v: f64) -> f64 {
    match mode {
        OutputMode::ReluReadout => v.max(0.0),
        OutputMode::LinearReadout => v,
    }
}

fn exactness(name: &str, err: &SupError) -> Assertion {
    Assertion::le(name, DEFAULT_TOL, err.value)
}

fn continuous_details(build: &ContinuousBuild, lipschitz: Option<f64>, eps: Option<f64>) -> BTreeMap<String, Value> {
    let p = &build.interpolant;
    let dec = &build.decomposition;
    let mut d = BTreeMap::new();
    d.insert("grid_resolution".into(), json!(p.resolution()));
    d.insert("grid_spacing".into(), json!(p.spacing()));
    d.insert("simplices".into(), json!(p.simplex_count() as f64));
    d.insert("lambda0".into(), json!(dec.lambda0));
    d.insert("lambda".into(), json!(dec.lambda));
    d.insert("lambda_doublings".into(), json!(dec.doublings));
    d.insert("g_pieces".into(), json!(dec.g_pieces()));
    d.insert("h_pieces".into(), json!(dec.h_pieces()));
    d.insert("dc_shift".into(), json!(dec.shift));
    d.insert("depth_formula_2(M+N)".into(), json!(2 * (dec.g_pieces() + dec.h_pieces())));
    if let (Some(l), Some(e)) = (lipschitz, eps) {
        let count = modulus_scaled_simplex_count(p.dim(), l, e);
        d.insert("modulus_scaled_simplex_count".into(), json!(count));
        d.insert("modulus_scaled_depth_2d!/w^d".into(), json!(2.0 * count));
    }
    d
}

struct Compiled {
    net: ReluNet,
    assertions: Vec<Assertion>,
    details: BTreeMap<String, Value>,
}

fn compile_net(a: &CompileArgs, target: &LoadedTarget, points: &[Vec<f64>]) -> Result<Compiled, Failure> {
    let d = target.dim();
    let output_mode: OutputMode = a.output_mode.into();
    let mut details = BTreeMap::new();
    let mut assertions = Vec::new();
    let incompatible = |why: &str| {
        Failure::Usage(Error::InvalidArgument(format!(
            "mode {} cannot use a {} target: {why}",
            mode_name(a.mode),
            target.kind()
        )))
    };

    let net = match (a.mode, &target.target) {
        (Mode::Convex, Target::Builtin(b)) => {
            let ct = b.convex_target().map_err(Failure::from)?;
            let k = a
                .k
                .ok_or_else(|| Failure::Usage(Error::InvalidArgument("--k is required for convex fits".into())))?;
            let opts = ConvexCompileOptions {
                output_mode,
                positivity_shift: PositivityShift::Auto,
            };
            let build = pipeline::convex_fit(&ct, k, &opts)?;
            let net = build.net;
            let fit = build.fit;
            assertions.push(Assertion::eq("hidden_width == d+1", d + 1, net.hidden_width()));
            assertions.push(Assertion::eq("hidden_blocks == pieces", fit.len(), net.hidden_blocks()));
            assertions.push(Assertion::le("hidden_blocks <= k", k as f64, net.hidden_blocks() as f64));
            let exact = sup_error(points, net_scalar(&net), |x| clamp_if(output_mode, fit.eval_unchecked(x)));
            assertions.push(exactness("net matches compiled max-affine fit", &exact));
            let approx = sup_error(points, net_scalar(&net), |x| b.eval(x));
            assertions.push(Assertion::le(
                "sup_error <= 72 L d^(3/2) k^(-2/d)",
                error_bound(b.lipschitz, d, k),
                approx.value,
            ));
            details.insert("k".into(), json!(k));
            details.insert("pieces".into(), json!(fit.len()));
            details.insert("lipschitz".into(), json!(b.lipschitz));
            net
        }
        (Mode::Convex, Target::Dc(f)) => {
            if f.h.pieces().iter().any(|p| p.a.iter().any(|&v| v != 0.0)) {
                return Err(incompatible("h must be constant for a convex compile"));
            }
            let c = f.h.eval_unchecked(&vec![0.0; d]);
            let g: MaxAffineFn = f.g.shifted(-c);
            let opts = ConvexCompileOptions {
                output_mode,
                positivity_shift: PositivityShift::Auto,
            };
            let net = compile_convex(&g, &opts)?;
            assertions.push(Assertion::eq("hidden_width == d+1", d + 1, net.hidden_width()));
            assertions.push(Assertion::eq("hidden_blocks == N", g.len(), net.hidden_blocks()));
            let exact = sup_error(points, net_scalar(&net), |x| f.eval_unchecked(x));
            assertions.push(exactness("net matches g - h", &exact));
            details.insert("pieces".into(), json!(g.len()));
            net
        }
        (Mode::Dc, Target::Dc(f)) => {
            let net = compile_dc(f, &DcCompileOptions { output_mode })?;
            let (n, m) = (f.g.len(), f.h.len());
            assertions.push(Assertion::eq("hidden_width == d+3", d + 3, net.hidden_width()));
            assertions.push(Assertion::eq("hidden_blocks == 2(M+N)", 2 * (m + n), net.hidden_blocks()));
            let exact = sup_error(points, net_scalar(&net), |x| f.eval_unchecked(x));
            assertions.push(exactness("net matches g - h", &exact));
            details.insert("g_pieces".into(), json!(n));
            details.insert("h_pieces".into(), json!(m));
            net
        }
        (Mode::Dc | Mode::Continuous, Target::Builtin(b)) => {
            let eps = a.eps.ok_or_else(|| {
                Failure::Usage(Error::InvalidArgument("--eps is required to interpolate a builtin target".into()))
            })?;
            let build = pipeline::continuous(&b.target_fn(), eps, vertex_budget(a.budget_vertices)?, output_mode)?;
            details = continuous_details(&build, Some(b.lipschitz), Some(eps));
            let dec = &build.decomposition;
            let net = build.net.clone();
            assertions.push(Assertion::eq("hidden_width == d+3", d + 3, net.hidden_width()));
            assertions.push(Assertion::eq(
                "hidden_blocks == 2(M+N)",
                2 * (dec.g_pieces() + dec.h_pieces()),
                net.hidden_blocks(),
            ));
            let exact = sup_error(points, net_scalar(&net), |x| build.interpolant.eval(x).expect("dim"));
            assertions.push(exactness("net matches interpolant", &exact));
            let approx = sup_error(points, net_scalar(&net), |x| b.eval(x));
            assertions.push(Assertion::le("sup_error <= eps", eps, approx.value));
            net
        }
        (Mode::Dc | Mode::Continuous, Target::Vertex(p)) => {
            let build = pipeline::from_interpolant(p.clone(), output_mode)?;
            details = continuous_details(&build, None, None);
            let dec = &build.decomposition;
            let net = build.net.clone();
            assertions.push(Assertion::eq("hidden_width == d+3", d + 3, net.hidden_width()));
            assertions.push(Assertion::eq(
                "hidden_blocks == 2(M+N)",
                2 * (dec.g_pieces() + dec.h_pieces()),
                net.hidden_blocks(),
            ));
            let exact = sup_error(points, net_scalar(&net), |x| p.eval(x).expect("dim"));
            assertions.push(exactness("net matches interpolant", &exact));
            net
        }
        (Mode::Deepen, Target::Shallow(s)) => {
            let net = deepen(s)?;
            assertions.push(Assertion::eq("hidden_width == d+2", d + 2, net.hidden_width()));
            assertions.push(Assertion::eq("relu_depth == n+2", s.width() + 2, net.relu_depth()));
            let exact = sup_error(points, net_scalar(&net), |x| s.eval(x).expect("dim"));
            assertions.push(exactness("net matches shallow net on the cube", &exact));
            details.insert("neurons".into(), json!(s.width()));
            details.insert("domain".into(), json!("equivalence is claimed on [0,1]^d only"));
            net
        }
        (Mode::Convex, _) => return Err(incompatible("needs a convex builtin or a dc-file with constant h")),
        (Mode::Dc, _) => return Err(incompatible("needs a dc-file, vertex-file or builtin")),
        (Mode::Continuous, _) => return Err(incompatible("needs a builtin or vertex-file")),
        (Mode::Deepen, _) => return Err(incompatible("needs a shallow-file")),
    };
    Ok(Compiled {
        net,
        assertions,
        details,
    })
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Convex => "convex",
        Mode::Dc => "dc",
        Mode::Continuous => "continuous",
        Mode::Deepen => "deepen",
    }
}

pub fn compile(a: &CompileArgs) -> Result<(), Failure> {
    let target = LoadedTarget::load(&a.target, a.dim)?;
    let d = target.dim();
    let scan = resolve_scan(&a.scan, d)?;
    let points = scan.points(d);
    let Compiled {
        mut net,
        assertions,
        details,
    } = compile_net(a, &target, &points)?;
    net.set_provenance("target", target.spec.clone());
    net.set_provenance("source_sha256", target.digest.clone());
    net.set_provenance("mode", mode_name(a.mode));
    write_file(&a.out, &net.to_json())?;

    let err = sup_error(&points, net_scalar(&net), |x| target.eval(x));
    let report = VerifyReport {
        command: "compile",
        target: target.spec.clone(),
        metrics: net.metrics(),
        scan: scan_info(&scan, d),
        sup_error: err.value,
        sup_error_at: err.at,
        assertions,
        details,
        passed: false,
    }
    .finish();
    emit(a.report.as_deref(), &(report.to_json() + "\n"))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertion("compile verification failed".into()))
    }
}

fn load_net(path: &Path) -> Result<ReluNet, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(Error::Io(format!("{}: {e}", path.display()))))?;
    Ok(ReluNet::from_json(&text)?)
}

pub fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let net = load_net(&a.net)?;
    let d = net.input_dim();
    let target = LoadedTarget::load(&a.target, Some(a.dim.unwrap_or(d)))?;
    if target.dim() != d {
        return Err(Failure::Usage(Error::DimensionMismatch {
            context: "target vs net input".into(),
            expected: d,
            got: target.dim(),
        }));
    }
    if net.output_dim() != 1 {
        return Err(Failure::Usage(Error::DimensionMismatch {
            context: "net output".into(),
            expected: 1,
            got: net.output_dim(),
        }));
    }
    let scan = resolve_scan(&a.scan, d)?;
    let points = scan.points(d);
    let err = sup_error(&points, net_scalar(&net), |x| target.eval(x));
    let mut assertions = vec![Assertion::le("sup_error <= max_error", a.max_error, err.value)];
    if let Some(w) = a.expect_width {
        assertions.push(Assertion::eq("hidden_width", w, net.hidden_width()));
    }
    if let Some(b) = a.expect_blocks {
        assertions.push(Assertion::eq("hidden_blocks", b, net.hidden_blocks()));
    }
    let mut details = BTreeMap::new();
    details.insert("domain".into(), json!("[0,1]^d"));
    if let Some(c) = net.provenance().get("compiler") {
        details.insert("compiler".into(), json!(c));
    }
    let report = VerifyReport {
        command: "verify",
        target: target.spec.clone(),
        metrics: net.metrics(),
        scan: scan_info(&scan, d),
        sup_error: err.value,
        sup_error_at: err.at,
        assertions,
        details,
        passed: false,
    }
    .finish();
    emit(a.report.as_deref(), &(report.to_json() + "\n"))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "verification failed: sup_error {:e}",
            report.sup_error
        )))
    }
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let net = load_net(&a.net)?;
    let d = net.input_dim();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&a.points)
        .map_err(|e| Failure::Usage(Error::Io(format!("{}: {e}", a.points.display()))))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Failure::Usage(Error::Parse(format!("points row {row}: {e}"))))?;
        if record.len() != d {
            return Err(Failure::Usage(Error::Parse(format!(
                "points row {row}: expected {d} columns, got {}",
                record.len()
            ))));
        }
        let x = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    Failure::Usage(Error::Parse(format!("points row {row}, column {}: {field:?} is not a number", c + 1)))
                })
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        points.push(x);
    }
    let outputs = net.eval_batch(&points)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (0..net.output_dim()).map(|j| format!("y{j}")).collect();
    let csv_err = |e: csv::Error| Failure::Usage(Error::Io(e.to_string()));
    writer.write_record(&header).map_err(csv_err)?;
    for y in outputs {
        writer
            .write_record(y.iter().map(|v| format!("{v:?}")))
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Failure::Usage(Error::Io(e.to_string())))?;
    emit(a.out.as_deref(), &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rate(a: &RateArgs) -> Result<(), Failure> {
    let target = LoadedTarget::load(&a.target, a.dim)?;
    let Target::Builtin(b) = &target.target else {
        return Err(Failure::Usage(Error::InvalidArgument("rate sweeps need a builtin target".into())));
    };
    let d = b.dim;
    let output_mode: OutputMode = a.output_mode.into();
    let scan = resolve_scan(&a.scan, d)?;
    let points = scan.points(d);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::Usage(Error::Io(e.to_string()));
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();

    if !a.k.is_empty() {
        let ct = b.convex_target()?;
        let opts = ConvexCompileOptions {
            output_mode,
            positivity_shift: PositivityShift::Auto,
        };
        writer
            .write_record(["k", "depth", "width", "sup_error", "paper_bound"])
            .map_err(csv_err)?;
        for &k in &a.k {
            let build = pipeline::convex_fit(&ct, k, &opts)?;
            let err = sup_error(&points, net_scalar(&build.net), |x| b.eval(x));
            let bound = error_bound(b.lipschitz, d, k);
            writer
                .write_record([
                    k.to_string(),
                    build.net.hidden_blocks().to_string(),
                    build.net.hidden_width().to_string(),
                    format!("{:?}", err.value),
                    format!("{bound:?}"),
                ])
                .map_err(csv_err)?;
            rows.push((k as f64, err.value, bound));
        }
    } else if !a.eps.is_empty() {
        let budget = vertex_budget(a.budget_vertices)?;
        writer
            .write_record(["eps", "depth", "width", "sup_error", "paper_bound"])
            .map_err(csv_err)?;
        for &eps in &a.eps {
            let build = pipeline::continuous(&b.target_fn(), eps, budget, output_mode)?;
            let err = sup_error(&points, net_scalar(&build.net), |x| b.eval(x));
            writer
                .write_record([
                    format!("{eps:?}"),
                    build.net.hidden_blocks().to_string(),
                    build.net.hidden_width().to_string(),
                    format!("{:?}", err.value),
                    format!("{eps:?}"),
                ])
                .map_err(csv_err)?;
            rows.push((eps, err.value, eps));
        }
    } else {
        return Err(Failure::Usage(Error::InvalidArgument("give --k or --eps values to sweep".into())));
    }

    let bytes = writer.into_inner().map_err(|e| Failure::Usage(Error::Io(e.to_string())))?;
    emit(a.out.as_deref(), &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    let positive: Vec<(f64, f64)> = rows.iter().filter(|r| r.1 > 0.0).map(|r| (r.0, r.1)).collect();
    if positive.len() >= 2 {
        eprintln!("log-log slope of sup_error: {:.4}", loglog_slope(&positive));
    }
    match rows.iter().find(|r| r.1 > r.2) {
        Some(r) => Err(Failure::Assertion(format!(
            "sup_error {:e} exceeds bound {:e} at {}",
            r.1, r.2, r.0
        ))),
        None => Ok(()),
    }
}
