use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use diffcurv::curvature::{
    curvature_correlation, pointwise_curvature, CurvatureSidecar, RadiusRule,
};
use diffcurv::experiments::{
    correlation_surfaces, correlation_trial, ordering_trial, CurvatureParams,
};
use diffcurv::geometry::{
    anisotropic_normalize, diffusion_coordinates, gaussian_affinity, markov_normalize,
    spectral_decompose_top, DiffusionOperator,
};
use diffcurv::io::fmt_f64;
use diffcurv::manifest::RunManifest;
use diffcurv::manifold::{
    derive_seed, n_coefficients, sample_quadric, sample_surface, Quadric, Surface,
};
use diffcurv::net::{
    active_coefficient_mse, build_corpus, corpus_quadric, ls_quadric_fit, random_baseline, train,
    CorpusConfig, EmbeddingConfig, NetModel, TrainConfig,
};
use diffcurv::probe::{
    estimate_hessian, sample_around, spectrum_report, BuiltinObjective, Estimator, HessianEstimate,
    ProbeConfig,
};
use diffcurv::{Error, PointCloud};
use ndarray::{Array1, Array2};
use serde_json::json;

use crate::args::*;

/// Command failure: bad invocation (exit 1) or a library error (exit 2 or 3).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Lib(e.into())
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

struct Ctx<'a> {
    seed: u64,
    out: &'a Path,
}

pub fn run(cli: &Cli) -> CmdResult {
    fs::create_dir_all(&cli.out_dir)?;
    let ctx = Ctx {
        seed: cli.seed,
        out: &cli.out_dir,
    };
    match &cli.command {
        Command::Gen(a) => gen(&ctx, a),
        Command::Operator(a) => operator(&ctx, a),
        Command::Curvature(a) => curvature(&ctx, a),
        Command::Corpus(a) => corpus(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Probe(a) => probe(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn create(dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> CmdResult {
    fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn surface_from(a: &GenArgs) -> Surface {
    match a.surface {
        SurfaceKind::Sphere => Surface::Sphere { radius: a.radius },
        SurfaceKind::Torus => Surface::Torus {
            major: a.major,
            minor: a.minor,
        },
        SurfaceKind::Ellipsoid => Surface::Ellipsoid {
            a: a.a,
            b: a.b,
            c: a.c,
        },
        SurfaceKind::HyperbolicParaboloid => Surface::HyperbolicParaboloid {
            scale: a.scale,
            radius: a.radius,
        },
        SurfaceKind::Hyperboloid => Surface::Hyperboloid {
            a: a.a,
            c: a.c,
            height: a.height,
        },
        SurfaceKind::Plane => Surface::Plane { radius: a.radius },
        SurfaceKind::QuadricGraph => Surface::QuadricGraph {
            q: [[a.q11, a.q12], [a.q12, a.q22]],
            radius: a.radius,
        },
    }
}

fn gen(ctx: &Ctx, a: &GenArgs) -> CmdResult {
    let surface = surface_from(a);
    let sample = sample_surface(&surface, a.n, a.noise, ctx.seed)?;
    sample.cloud.write_csv(create(ctx.out, "cloud.csv")?)?;
    let mut w = create(ctx.out, "curvature.csv")?;
    writeln!(w, "point_id,gauss_curvature,interior")?;
    for (i, (k, inside)) in sample
        .gauss_curvature
        .iter()
        .zip(&sample.interior)
        .enumerate()
    {
        writeln!(w, "{i},{},{}", fmt_f64(*k), u8::from(*inside))?;
    }
    w.flush()?;
    let config = json!({ "surface": surface, "n": a.n, "noise_sd": a.noise, "seed": ctx.seed });
    RunManifest::new("gen", config).write(ctx.out)?;
    Ok(())
}

fn curvature_params(a: &CurvatureParamArgs) -> CurvatureParams {
    CurvatureParams {
        knn: a.kernel.knn,
        sigma: a.kernel.sigma,
        alpha: a.kernel.alpha,
        truncate: a.kernel.truncate,
        t: a.t,
        radius: match a.radius {
            Some(r) => RadiusRule::Fixed(r),
            None => RadiusRule::Quantile(a.r_quantile),
        },
    }
}

/// Operator plus the bandwidth the kernel used.
fn build(cloud: &PointCloud, params: &CurvatureParams) -> Result<(DiffusionOperator, f64), Error> {
    let cfg = params.kernel(cloud.len());
    let g = gaussian_affinity(cloud, &cfg)?;
    let sigma = g.sigma;
    let op = markov_normalize(&anisotropic_normalize(&g, cfg.alpha)?)?;
    Ok((op, sigma))
}

fn operator(ctx: &Ctx, a: &OperatorArgs) -> CmdResult {
    let cloud = PointCloud::load(&a.input)?;
    let params = CurvatureParams {
        knn: a.kernel.knn,
        sigma: a.kernel.sigma,
        alpha: a.kernel.alpha,
        truncate: a.kernel.truncate,
        ..CurvatureParams::default()
    };
    let (op, sigma) = build(&cloud, &params)?;
    op.write_binary(create(ctx.out, "operator.bin")?)?;
    let m = a.eigenpairs.unwrap_or(cloud.len());
    let map = spectral_decompose_top(&op, m)?.with_time(a.t);
    map.write_binary(create(ctx.out, "map.bin")?)?;
    let mut w = create(ctx.out, "eigenvalues.csv")?;
    writeln!(w, "index,eigenvalue")?;
    for (i, v) in map.eigenvalues.iter().enumerate() {
        writeln!(w, "{i},{}", fmt_f64(*v))?;
    }
    w.flush()?;
    let coords = diffusion_coordinates(&map, a.t, a.coords);
    write_rows(ctx.out, "coordinates.csv", &cloud, &coords, "phi")?;
    let mut manifest = RunManifest::new(
        "operator",
        json!({ "kernel": params.kernel(cloud.len()), "sigma": sigma, "t": a.t, "eigenpairs": m, "coords": a.coords, "seed": ctx.seed }),
    );
    manifest.add_input(&a.input)?;
    manifest.write(ctx.out)?;
    Ok(())
}

fn write_rows(
    dir: &Path,
    name: &str,
    cloud: &PointCloud,
    rows: &Array2<f64>,
    prefix: &str,
) -> CmdResult {
    let mut w = create(dir, name)?;
    let header: Vec<String> = (0..rows.ncols()).map(|j| format!("{prefix}{j}")).collect();
    writeln!(w, "point_id,{}", header.join(","))?;
    for (i, row) in rows.rows().into_iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{}", cloud.label(i), vals.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reference values and interior mask from a CSV with a `gauss_curvature`,
/// `reference` or `curvature` column and an optional `interior` column.
fn read_reference(path: &Path, n: usize) -> Result<(Vec<f64>, Vec<bool>), Failure> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = ["gauss_curvature", "reference", "curvature"]
        .iter()
        .find_map(|name| headers.iter().position(|h| h == *name))
        .ok_or_else(|| {
            Error::Format(format!("{}: no reference curvature column", path.display()))
        })?;
    let interior_col = headers.iter().position(|h| h == "interior");
    let (mut values, mut mask) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for rec in rdr.records() {
        let rec = rec?;
        let v: f64 = rec[col]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad reference value {:?}", &rec[col])))?;
        values.push(v);
        mask.push(match interior_col {
            Some(c) => matches!(rec[c].trim(), "1" | "true"),
            None => true,
        });
    }
    if values.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} reference rows"),
            got: values.len().to_string(),
        }
        .into());
    }
    Ok((values, mask))
}

fn curvature(ctx: &Ctx, a: &CurvatureArgs) -> CmdResult {
    let cloud = PointCloud::load(&a.input)?;
    let params = curvature_params(&a.params);
    let (op, sigma) = build(&cloud, &params)?;
    let field = pointwise_curvature(&op, params.t, params.radius)?;
    field.write_csv(create(ctx.out, "curvature.csv")?, cloud.ids())?;
    let sidecar = CurvatureSidecar {
        t: params.t,
        radius_rule: params.radius,
        sigma,
        alpha: params.alpha,
        seed: ctx.seed,
    };
    write_json(ctx.out, "curvature.json", &sidecar)?;
    let mut manifest = RunManifest::new(
        "curvature",
        json!({ "params": params, "sigma": sigma, "seed": ctx.seed }),
    );
    manifest.add_input(&a.input)?;
    if let Some(reference) = &a.reference {
        let (values, mask) = read_reference(reference, cloud.len())?;
        let corr = curvature_correlation(&field, &values, &mask)?;
        let mut w = create(ctx.out, "biaxial.csv")?;
        writeln!(w, "reference,curvature")?;
        for i in (0..cloud.len()).filter(|&i| mask[i]) {
            writeln!(w, "{},{}", fmt_f64(values[i]), fmt_f64(field.values[i]))?;
        }
        w.flush()?;
        let mut w = create(ctx.out, "correlation.csv")?;
        writeln!(w, "pearson,spearman,n")?;
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(corr.pearson),
            fmt_f64(corr.spearman),
            corr.n
        )?;
        w.flush()?;
        manifest.add_input(reference)?;
    }
    manifest.write(ctx.out)?;
    Ok(())
}

fn corpus_config(seed: u64, a: &CorpusParamArgs) -> CorpusConfig {
    CorpusConfig {
        n_quadrics: a.quadrics,
        n_points: a.points,
        dims: a.dims.clone(),
        quadric_size: a
            .size
            .unwrap_or_else(|| a.dims.iter().copied().max().unwrap_or(2)),
        coeff_range: a.coeff_range,
        domain_radius: a.domain_radius,
        embedding: EmbeddingConfig {
            d_emb: a.d_emb,
            t: a.t,
        },
        seed,
    }
}

fn load_corpus_config(path: &Path) -> Result<CorpusConfig, Failure> {
    let cfg: CorpusConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

fn corpus(ctx: &Ctx, a: &CorpusArgs) -> CmdResult {
    let cfg = corpus_config(ctx.seed, &a.corpus);
    cfg.validate()?;
    write_json(ctx.out, "corpus.json", &cfg)?;
    let m = n_coefficients(cfg.quadric_size);
    let mut w = create(ctx.out, "corpus_targets.csv")?;
    let header: Vec<String> = (0..m).map(|j| format!("q{j}")).collect();
    writeln!(w, "index,intrinsic_dim,{}", header.join(","))?;
    for i in 0..cfg.n_quadrics {
        let q = corpus_quadric(&cfg, i)?;
        let vals: Vec<String> = q.upper_triangle().iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{i},{},{}", q.intrinsic_dim, vals.join(","))?;
    }
    w.flush()?;
    RunManifest::new("corpus", serde_json::to_value(&cfg)?).write(ctx.out)?;
    Ok(())
}

fn train_cmd(ctx: &Ctx, a: &TrainArgs) -> CmdResult {
    let cfg = match &a.corpus {
        Some(path) => load_corpus_config(path)?,
        None => corpus_config(ctx.seed, &a.params),
    };
    cfg.validate()?;
    let corpus = build_corpus(&cfg)?;
    let mut model = NetModel::new(
        cfg.embedding,
        cfg.quadric_size,
        a.encoder.clone(),
        a.head.clone(),
        a.alpha,
        ctx.seed,
    )?;
    let tc = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        momentum: a.momentum,
        seed: ctx.seed,
    };
    let log = train(&mut model, &corpus, &tc)?;
    model.write_binary(create(ctx.out, "model.bin")?)?;
    let mut w = create(ctx.out, "loss.csv")?;
    writeln!(w, "epoch,loss")?;
    for (e, l) in log.epoch_loss.iter().enumerate() {
        writeln!(w, "{},{}", e + 1, fmt_f64(*l))?;
    }
    w.flush()?;
    let config = json!({
        "corpus": cfg,
        "train": tc,
        "encoder": a.encoder,
        "head": a.head,
        "l1_weight": a.alpha,
        "seed": ctx.seed,
    });
    let mut manifest = RunManifest::new("train", config);
    if let Some(path) = &a.corpus {
        manifest.add_input(path)?;
    }
    manifest.write(ctx.out)?;
    Ok(())
}

struct EvalRow {
    dim: usize,
    net: f64,
    baseline: f64,
    least_squares: f64,
    max_abs_err: f64,
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> CmdResult {
    let model = NetModel::read_binary(File::open(&a.model)?)?;
    let mut cfg = match &a.corpus {
        Some(path) => load_corpus_config(path)?,
        None => corpus_config(ctx.seed, &a.params),
    };
    if a.corpus.is_none() && a.params.size.is_none() {
        cfg.quadric_size = model.quadric_size();
    }
    if cfg.quadric_size != model.quadric_size() || cfg.embedding != model.embedding {
        return Err(Error::ShapeMismatch {
            expected: format!(
                "{0}x{0} quadrics embedded as {1:?}",
                model.quadric_size(),
                model.embedding
            ),
            got: format!(
                "{0}x{0} quadrics embedded as {1:?}",
                cfg.quadric_size, cfg.embedding
            ),
        }
        .into());
    }
    if a.baseline_draws == 0 {
        return Err(Failure::Usage("--baseline-draws must be positive".into()));
    }
    let corpus = build_corpus(&cfg)?;
    let mut rows = Vec::with_capacity(corpus.len());
    for (i, ex) in corpus.iter().enumerate() {
        let target = Quadric::from_upper_triangle(&ex.target, cfg.quadric_size)?;
        let target = Quadric {
            intrinsic_dim: ex.intrinsic_dim,
            ..target
        };
        let pred = model.predict(&ex.phi, &ex.loss_axis)?;
        let net = active_coefficient_mse(&pred, &target)?;
        let k = ex.intrinsic_dim;
        let max_abs_err = (0..k)
            .flat_map(|r| (r..k).map(move |c| (r, c)))
            .map(|(r, c)| (pred.q[[r, c]] - target.q[[r, c]]).abs())
            .fold(0.0, f64::max);
        let mut baseline = 0.0;
        for d in 0..a.baseline_draws {
            let seed = derive_seed(derive_seed(ctx.seed ^ 0xba5e, i as u64), d as u64);
            baseline += active_coefficient_mse(
                &random_baseline(cfg.quadric_size, cfg.coeff_range, seed)?,
                &target,
            )?;
        }
        baseline /= a.baseline_draws as f64;
        let sample = sample_quadric(
            &target,
            cfg.n_points,
            cfg.domain_radius,
            cfg.example_seeds(i).1,
        )?;
        let fit = ls_quadric_fit(&sample.xs, &sample.ys, 0.0)?;
        let mut padded = Array2::zeros((cfg.quadric_size, cfg.quadric_size));
        padded.slice_mut(ndarray::s![..k, ..k]).assign(&fit.q);
        let least_squares = active_coefficient_mse(
            &Quadric {
                q: padded,
                intrinsic_dim: k,
            },
            &target,
        )?;
        rows.push(EvalRow {
            dim: k,
            net,
            baseline,
            least_squares,
            max_abs_err,
        });
    }
    let mut w = create(ctx.out, "predictions.csv")?;
    writeln!(
        w,
        "index,intrinsic_dim,curvenet,baseline_random,least_squares,curvenet_max_abs_err"
    )?;
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{}",
            r.dim,
            fmt_f64(r.net),
            fmt_f64(r.baseline),
            fmt_f64(r.least_squares),
            fmt_f64(r.max_abs_err)
        )?;
    }
    w.flush()?;
    let mut dims: Vec<usize> = rows.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    let mean = |sel: &dyn Fn(&EvalRow) -> bool, f: &dyn Fn(&EvalRow) -> f64| {
        let v: Vec<f64> = rows.iter().filter(|r| sel(r)).map(f).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mut w = create(ctx.out, "mse_table.csv")?;
    writeln!(w, "dim,n_quadrics,curvenet,baseline_random,least_squares")?;
    let mut emit = |label: String, sel: &dyn Fn(&EvalRow) -> bool| -> std::io::Result<()> {
        writeln!(
            w,
            "{label},{},{},{},{}",
            rows.iter().filter(|r| sel(r)).count(),
            fmt_f64(mean(sel, &|r| r.net)),
            fmt_f64(mean(sel, &|r| r.baseline)),
            fmt_f64(mean(sel, &|r| r.least_squares)),
        )
    };
    for &d in &dims {
        emit(d.to_string(), &|r| r.dim == d)?;
    }
    emit("all".into(), &|_| true)?;
    drop(emit);
    w.flush()?;
    let all = |_: &EvalRow| true;
    let net = mean(&all, &|r| r.net);
    let baseline = mean(&all, &|r| r.baseline);
    let summary = json!({
        "curvenet_mse": net,
        "baseline_random_mse": baseline,
        "baseline_expected_mse": 2.0 / 3.0 * cfg.coeff_range * cfg.coeff_range,
        "least_squares_mse": mean(&all, &|r| r.least_squares),
        "baseline_over_curvenet": baseline / net,
    });
    write_json(ctx.out, "eval.json", &summary)?;
    let mut manifest = RunManifest::new(
        "eval",
        json!({ "corpus": cfg, "baseline_draws": a.baseline_draws, "seed": ctx.seed }),
    );
    manifest.add_input(&a.model)?;
    if let Some(path) = &a.corpus {
        manifest.add_input(path)?;
    }
    manifest.write(ctx.out)?;
    Ok(())
}

/// Offsets and centered values from a CSV of `x..., f(x)` rows.
fn csv_samples(
    path: &Path,
    a: &ProbeArgs,
) -> Result<(Vec<f64>, Array2<f64>, Array1<f64>), Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            // a non-numeric first line is a header
            Err(_) if rows.is_empty() => continue,
            Err(_) => {
                return Err(Error::Format(format!("{}: non-numeric row", path.display())).into())
            }
        }
    }
    let width = rows.first().map_or(0, Vec::len);
    if width < 2 || rows.iter().any(|r| r.len() != width) {
        return Err(
            Error::Format(format!("{}: need rows of equal width >= 2", path.display())).into(),
        );
    }
    let k = width - 1;
    let center = a.center.clone().unwrap_or_else(|| vec![0.0; k]);
    if center.len() != k {
        return Err(Failure::Usage(format!(
            "--center has {} entries, samples have {k}",
            center.len()
        )));
    }
    let center_row = rows.iter().position(|r| r[..k] == center[..]);
    let fc = match (a.center_value, center_row) {
        (Some(v), _) => v,
        (None, Some(i)) => rows[i][k],
        (None, None) => {
            return Err(Failure::Usage(
                "samples contain no center row; pass --center-value".into(),
            ));
        }
    };
    let kept: Vec<&Vec<f64>> = rows.iter().filter(|r| r[..k] != center[..]).collect();
    let xs = Array2::from_shape_fn((kept.len(), k), |(i, j)| kept[i][j] - center[j]);
    let ys = kept.iter().map(|r| r[k] - fc).collect();
    Ok((center, xs, ys))
}

fn probe(ctx: &Ctx, a: &ProbeArgs) -> CmdResult {
    let estimator = match a.estimator {
        EstimatorKind::Ls => Estimator::LeastSquares { ridge: a.ridge },
        EstimatorKind::Net => {
            let path = a
                .model
                .as_ref()
                .ok_or_else(|| Failure::Usage("--estimator net needs --model".into()))?;
            Estimator::Net(Box::new(NetModel::read_binary(File::open(path)?)?))
        }
    };
    let mut cfg = ProbeConfig {
        n_samples: a.samples,
        dim: a.dim,
        radius_scale: a.radius_scale,
        rel_loss_tol: a.tol,
        seed: ctx.seed,
        estimator,
        shell: a.shell,
    };
    let mut manifest_inputs: Vec<PathBuf> = a.model.iter().cloned().collect();
    let (center, xs, ys, radius, halvings, source) = match (&a.objective, &a.samples_csv) {
        (Some(name), None) => {
            let objective = BuiltinObjective::from_name(name, a.dim, ctx.seed)?;
            cfg.dim = objective.dim();
            let center = a
                .center
                .clone()
                .unwrap_or_else(|| objective.critical_point());
            let s = sample_around(&objective, &center, &cfg)?;
            (
                center,
                s.xs,
                s.ys,
                Some(s.radius),
                Some(s.halvings),
                name.clone(),
            )
        }
        (None, Some(path)) => {
            let (center, xs, ys) = csv_samples(path, a)?;
            cfg.dim = xs.ncols();
            cfg.n_samples = xs.nrows();
            cfg.validate()?;
            manifest_inputs.push(path.clone());
            (center, xs, ys, None, None, path.display().to_string())
        }
        _ => {
            return Err(Failure::Usage(
                "pass exactly one of --objective or --samples-csv".into(),
            ))
        }
    };
    let est = estimate_hessian(&xs, &ys, &cfg)?;
    let mut w = create(ctx.out, "samples.csv")?;
    let header: Vec<String> = (0..xs.ncols()).map(|j| format!("dx{j}")).collect();
    writeln!(w, "{},dy", header.join(","))?;
    for (row, y) in xs.rows().into_iter().zip(ys.iter()) {
        let vals: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{}", vals.join(","), fmt_f64(*y))?;
    }
    w.flush()?;
    write_json(ctx.out, "hessian.json", &est)?;
    spectrum_report(std::slice::from_ref(&est), &[a.label.clone()])?.write(ctx.out)?;
    let config = json!({
        "source": source,
        "center": center,
        "dim": cfg.dim,
        "samples": cfg.n_samples,
        "radius_scale": cfg.radius_scale,
        "rel_loss_tol": cfg.rel_loss_tol,
        "estimator": match a.estimator { EstimatorKind::Ls => "ls", EstimatorKind::Net => "net" },
        "ridge": a.ridge,
        "shell": a.shell,
        "radius": radius,
        "halvings": halvings,
        "seed": ctx.seed,
        "embedding": match &cfg.estimator { Estimator::Net(m) => Some(m.embedding), _ => None },
    });
    let mut manifest = RunManifest::new("probe", config);
    for p in &manifest_inputs {
        manifest.add_input(p)?;
    }
    manifest.write(ctx.out)?;
    Ok(())
}

fn report(ctx: &Ctx, a: &ReportArgs) -> CmdResult {
    match &a.kind {
        ReportKind::Ordering { trials, n, params } => {
            let params = curvature_params(params);
            let mut w = create(ctx.out, "ordering.csv")?;
            writeln!(w, "trial,sphere,plane,saddle,ordered")?;
            let mut ordered = 0;
            for trial in 0..*trials {
                let r = ordering_trial(ctx.seed, trial, *n, &params)?;
                ordered += usize::from(r.ordered());
                writeln!(
                    w,
                    "{trial},{},{},{},{}",
                    fmt_f64(r.sphere),
                    fmt_f64(r.plane),
                    fmt_f64(r.saddle),
                    u8::from(r.ordered())
                )?;
            }
            w.flush()?;
            write_json(
                ctx.out,
                "ordering.json",
                &json!({ "trials": trials, "ordered": ordered }),
            )?;
            RunManifest::new(
                "report ordering",
                json!({ "trials": trials, "n": n, "params": params, "seed": ctx.seed }),
            )
            .write(ctx.out)?;
        }
        ReportKind::Correlation { n, params } => {
            let params = curvature_params(params);
            let mut w = create(ctx.out, "correlation.csv")?;
            writeln!(w, "surface,seed,pearson,spearman,n")?;
            let mut surfaces = Vec::new();
            for (i, (name, surface)) in correlation_surfaces().iter().enumerate() {
                let seed = derive_seed(ctx.seed, i as u64);
                let trial = correlation_trial(surface, *n, seed, &params)?;
                let c = trial.correlation;
                writeln!(
                    w,
                    "{name},{seed},{},{},{}",
                    fmt_f64(c.pearson),
                    fmt_f64(c.spearman),
                    c.n
                )?;
                let mut b = create(ctx.out, &format!("biaxial_{name}.csv"))?;
                writeln!(b, "gauss_curvature,diffusion_curvature")?;
                for j in (0..*n).filter(|&j| trial.sample.interior[j]) {
                    writeln!(
                        b,
                        "{},{}",
                        fmt_f64(trial.sample.gauss_curvature[j]),
                        fmt_f64(trial.field.values[j])
                    )?;
                }
                b.flush()?;
                surfaces.push(json!({ "name": name, "surface": surface, "seed": seed }));
            }
            w.flush()?;
            RunManifest::new(
                "report correlation",
                json!({ "n": n, "params": params, "surfaces": surfaces, "seed": ctx.seed }),
            )
            .write(ctx.out)?;
        }
        ReportKind::Spectrum { inputs, labels } => {
            if !labels.is_empty() && labels.len() != inputs.len() {
                return Err(Failure::Usage(format!(
                    "{} labels for {} inputs",
                    labels.len(),
                    inputs.len()
                )));
            }
            let mut estimates = Vec::with_capacity(inputs.len());
            for path in inputs {
                let est: HessianEstimate = serde_json::from_str(&fs::read_to_string(path)?)?;
                estimates.push(est);
            }
            let labels: Vec<String> = if labels.is_empty() {
                inputs
                    .iter()
                    .map(|p| {
                        p.parent().and_then(|d| d.file_name()).map_or_else(
                            || p.display().to_string(),
                            |s| s.to_string_lossy().into_owned(),
                        )
                    })
                    .collect()
            } else {
                labels.clone()
            };
            spectrum_report(&estimates, &labels)?.write(ctx.out)?;
            let mut manifest = RunManifest::new(
                "report spectrum",
                json!({ "labels": labels, "seed": ctx.seed }),
            );
            for p in inputs {
                manifest.add_input(p)?;
            }
            manifest.write(ctx.out)?;
        }
    }
    Ok(())
}
