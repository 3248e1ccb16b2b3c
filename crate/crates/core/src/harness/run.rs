//! Dispatch of experiments and artifact writing.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, SourceKind};
use super::hypothesis::hypothesis_check;
use super::regime::{mollified_holder_drift, regime_study};
use super::report::{num, overall, sha256_hex, Artifacts, Check, LinePlot, Status, Table};
use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::lp::{self, DyadicPartition, Grid, GridField};
use crate::nonlocal::{self, DriftField, JumpKernel};
use crate::pde::{self, AprioriConfig, PdeProblem, Source};
use crate::rng::domain_stream;
use crate::sde::{self, FkPdeConfig, Simulator};
use crate::stats::mean_and_stderr;
use crate::zvonkin::{self, MapConfig};

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub status: Status,
    pub checks: Vec<Check>,
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    kind: &'a str,
    anchor: &'a str,
    status: Status,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct FileEntry<'a> {
    path: &'a str,
    sha256: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    seed: Option<u64>,
    version: &'a str,
    config_sha256: String,
    status: Status,
    files: Vec<FileEntry<'a>>,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    error: &'a str,
    message: String,
}

/// What each experiment checks, named in its summary header.
pub fn anchor(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Symbol => "symbol bound Re psi(xi) <= -C0 |xi|^alpha + C1",
        ExperimentKind::Lp => "Littlewood-Paley decomposition and Besov norms",
        ExperimentKind::Pde => "non-local drift-diffusion equation",
        ExperimentKind::Simulate => "jump SDE driven by a thinned Poisson random measure",
        ExperimentKind::VerifyApriori => {
            "a-priori Besov estimate ||u||_{B^{alpha+gamma}_{q,inf}} <= C ||f||_{B^gamma_{q,inf}} and its decay in lambda"
        }
        ExperimentKind::VerifyKrylov => "Krylov estimate E int_0^T f(s, X_s) ds <= C ||f||_{B^0_{q,inf}}",
        ExperimentKind::VerifyFeynmanKac => "Feynman-Kac identity u(0, x) = E int_0^T f(s, X_s(x)) ds",
        ExperimentKind::VerifyZvonkin => {
            "Zvonkin transform: smallness ||u|| + ||grad u|| <= 1/2, bi-Lipschitz bounds, transformed equation"
        }
        ExperimentKind::VerifyMaxprinciple => {
            "maximum principle: L u(x0) <= -c 2^{alpha j} ||u||_inf at the maximum of a band-limited u"
        }
        ExperimentKind::VerifyCoercivity => "L^p coercivity of the non-local operator on dyadic blocks",
        ExperimentKind::VerifyCommutator => "commutator estimate for [Lambda_j, L^sigma]",
        ExperimentKind::RegimeStudy => "weak well-posedness in the balance regime alpha + beta >= 1",
    }
}

/// Run the experiment described by `cfg` and write its artifacts to
/// `out_dir`. On failure an `error.toml` record is written before the error
/// is returned.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let result = cfg.validate().and_then(|_| run_inner(cfg, out_dir));
    if let Err(e) = &result {
        let record = ErrorRecord {
            kind: cfg.kind.name(),
            error: e.kind(),
            message: e.to_string(),
        };
        if std::fs::create_dir_all(out_dir).is_ok() {
            if let Ok(text) = toml::to_string(&record) {
                let _ = std::fs::write(out_dir.join("error.toml"), text);
            }
        }
    }
    result
}

fn run_inner(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut art = Artifacts::new(out_dir)?;
    let stale = out_dir.join("error.toml");
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    let config_text = cfg.to_toml()?;
    art.write_text("config.toml", &config_text)?;
    let checks = match cfg.kind {
        ExperimentKind::Symbol => symbol(cfg, &mut art)?,
        ExperimentKind::Lp => littlewood_paley(cfg, &mut art)?,
        ExperimentKind::Pde => pde_run(cfg, &mut art)?,
        ExperimentKind::Simulate => simulate(cfg, &mut art)?,
        ExperimentKind::VerifyApriori => apriori(cfg, &mut art)?,
        ExperimentKind::VerifyKrylov => krylov(cfg, &mut art)?,
        ExperimentKind::VerifyFeynmanKac => feynman_kac(cfg, &mut art)?,
        ExperimentKind::VerifyZvonkin => zvonkin_run(cfg, &mut art)?,
        ExperimentKind::VerifyMaxprinciple => maxprinciple(cfg, &mut art)?,
        ExperimentKind::VerifyCoercivity => coercivity(cfg, &mut art)?,
        ExperimentKind::VerifyCommutator => commutator(cfg, &mut art)?,
        ExperimentKind::RegimeStudy => regime(cfg, &mut art)?,
    };
    let status = overall(&checks);
    let summary = SummaryFile {
        kind: cfg.kind.name(),
        anchor: anchor(cfg.kind),
        status,
        checks: &checks,
    };
    let mut checks_table = Table::new(&["check", "status", "detail"]);
    for c in &checks {
        checks_table.push(vec![c.name.clone(), c.status.label().into(), c.detail.clone()]);
    }
    art.table("checks.csv", &checks_table)?;
    art.write_text("summary.toml", &toml_text(&summary)?)?;
    let files = art.files().to_vec();
    let manifest = Manifest {
        kind: cfg.kind.name(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config_text.as_bytes()),
        status,
        files: files
            .iter()
            .map(|(p, h)| FileEntry { path: p, sha256: h })
            .collect(),
    };
    std::fs::write(out_dir.join("manifest.toml"), toml_text(&manifest)?)?;
    Ok(RunSummary {
        kind: cfg.kind,
        status,
        checks,
        out_dir: out_dir.to_path_buf(),
    })
}

fn toml_text<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Format(e.to_string()))
}

struct Setup {
    model: LevyModel,
    kernel: JumpKernel,
    drift: DriftField,
    grid: Grid,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let model = cfg.model.build()?;
    let grid = cfg.grid()?;
    let kernel = cfg.kernel.build(&model, grid)?;
    let drift = cfg.drift.build(cfg.model.dim)?;
    Ok(Setup {
        model,
        kernel,
        drift,
        grid,
    })
}

fn hypothesis_lines(s: &Setup, cfg: &ExperimentConfig) -> Vec<Check> {
    hypothesis_check(&s.model, &s.kernel, &s.drift, s.grid, 1000, cfg.seed())
        .into_iter()
        .map(|c| Check::new(format!("hypothesis: {}", c.name), c.status, c.detail))
        .collect()
}

fn hypothesis_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["hypothesis", "status", "detail"]);
    for c in checks.iter().filter(|c| c.name.starts_with("hypothesis: ")) {
        t.push(vec![
            c.name.trim_start_matches("hypothesis: ").to_string(),
            c.status.label().into(),
            c.detail.clone(),
        ]);
    }
    t
}

fn frequency_samples(dim: usize) -> Vec<Vec<f64>> {
    let radii: Vec<f64> = (0..=48).map(|k| 2f64.powf(k as f64 / 8.0)).collect();
    let dirs: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|k| {
                let a = PI * k as f64 / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let s = 1.0 / 3f64.sqrt();
            let mut v: Vec<Vec<f64>> = (0..dim)
                .map(|i| (0..dim).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
                .collect();
            v.push(vec![s; dim]);
            v.push(vec![s, -s, s]);
            v
        }
    };
    let mut out = Vec::new();
    for d in &dirs {
        for r in &radii {
            out.push(d.iter().map(|v| v * r).collect());
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn symbol(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let model = cfg.model.build()?;
    let dim = model.dim();
    let xis = frequency_samples(dim);
    let psi = model.symbol_table(&xis)?;
    let header: Vec<String> = (1..=dim)
        .map(|i| format!("xi_{i}"))
        .chain(["re_psi".into(), "im_psi".into()])
        .collect();
    let mut table = Table::new(&header);
    for (xi, p) in xis.iter().zip(&psi) {
        let row: Vec<f64> = xi.iter().copied().chain([p.re, p.im]).collect();
        table.push_nums(&row);
    }
    art.table("symbol.csv", &table)?;
    let mut checks = Vec::new();
    match model.check_nondegeneracy(64) {
        Ok(m) => checks.push(Check::new("nondegeneracy", Status::Pass, format!("projected mass {m:.4e}"))),
        Err(e) => checks.push(Check::new("nondegeneracy", Status::Fail, e.to_string())),
    }
    let fit = model.symbol_bound_fit(&xis)?;
    checks.push(Check::new(
        "coercive bound",
        Status::from_bool(fit.c0 > 0.0),
        format!("C0 = {}, C1 = {} over |xi| in [1, 64]", num(fit.c0), num(fit.c1)),
    ));
    let mut fit_table = Table::new(&["alpha", "c0", "c1"]);
    fit_table.push_nums(&[model.alpha(), fit.c0, fit.c1]);
    art.table("symbol_fit.csv", &fit_table)?;
    let first: Vec<(f64, f64)> = xis
        .iter()
        .zip(&psi)
        .take(49)
        .map(|(xi, p)| (norm(xi), -p.re))
        .collect();
    let bound: Vec<(f64, f64)> = first
        .iter()
        .map(|(r, _)| (*r, fit.c0 * r.powf(model.alpha()) - fit.c1))
        .filter(|p| p.1 > 0.0)
        .collect();
    let plot = LinePlot::new("symbol", "|xi|", "-Re psi")
        .log_x()
        .log_y()
        .series("-Re psi (first direction)", first)
        .series("C0 |xi|^alpha - C1", bound);
    art.plot("symbol.svg", &plot)?;
    Ok(checks)
}

fn resolved_band(f: &GridField) -> GridField {
    let top = 2f64.powi(f.grid().j_max());
    f.real_multiplier(|xi| if norm(xi) <= top { 1.0 } else { 0.0 })
}

fn littlewood_paley(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let f = match cfg.pde.source.kind {
        SourceKind::Zero => lp::random_field(grid, 0.5, &mut domain_stream(cfg.seed(), "lp", 0)),
        _ => cfg.pde.source.build(grid, cfg.seed()).at(0.0, grid)?,
    };
    let part = DyadicPartition::for_grid(grid)?;
    let p = cfg.study.p;
    let blocks = lp::blocks(&f, &part)?;
    let mut table = Table::new(&["j", "lp_norm", "sup_norm", "bernstein_ratio"]);
    let mut series = Vec::new();
    for (b, j) in blocks.iter().zip(part.blocks()) {
        let bern = if j >= 0 {
            lp::bernstein_ratio(&f, j, 1, p, p).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let n = b.lp_norm(p);
        table.push_nums(&[j as f64, n, b.max_abs(), bern]);
        series.push((j as f64, n));
    }
    art.table("blocks.csv", &table)?;
    let sum = blocks
        .iter()
        .skip(1)
        .try_fold(blocks[0].clone(), |acc, b| acc.add(b))?;
    let err_full = sum.sub(&f)?.max_abs();
    // the blocks sum to the identity on |ξ| ≤ 2^{j_max}
    let band = resolved_band(&f);
    let band_blocks = lp::blocks(&band, &part)?;
    let band_sum = band_blocks
        .iter()
        .skip(1)
        .try_fold(band_blocks[0].clone(), |acc, b| acc.add(b))?;
    let err_band = band_sum.sub(&band)?.max_abs();
    let mut besov = Table::new(&["s", "p", "besov_norm", "top_block"]);
    for s in [0.0, 0.5, 1.0] {
        let n = lp::besov_norm(&f, s, p, f64::INFINITY, &part)?;
        besov.push_nums(&[s, p, n.value, n.top_block]);
    }
    art.table("besov.csv", &besov)?;
    f.write_csv(art.root().join("field.csv"))?;
    art.register("field.csv")?;
    art.plot(
        "blocks.svg",
        &LinePlot::new("dyadic blocks", "j", &format!("||Lambda_j f||_{}", num(p)))
            .log_y()
            .series("block norm", series),
    )?;
    Ok(vec![
        Check::new(
            "reconstruction",
            Status::from_bool(err_band < 1e-10),
            format!(
                "sup |sum_j Lambda_j f - f| = {err_band:.2e} for f band-limited to |xi| <= 2^{}; {err_full:.2e} for the unrestricted field",
                grid.j_max()
            ),
        ),
    ])
}

fn pde_problem(cfg: &ExperimentConfig, s: &Setup) -> PdeProblem {
    let mut p = PdeProblem::new(
        cfg.pde.direction(),
        s.model.clone(),
        s.kernel.clone(),
        s.drift.clone(),
        cfg.pde.source.build(s.grid, cfg.seed()),
        cfg.pde.horizon,
        cfg.pde.dt,
        s.grid,
    )
    .with_lambda(cfg.pde.lambda);
    p.quasilinear_kappa = cfg.pde.quasilinear_kappa;
    p.reference_kappa = cfg.pde.reference_kappa;
    p
}

fn pde_run(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let mut problem = pde_problem(cfg, &s);
    problem.diagnostics = Some((cfg.study.gamma, cfg.study.q));
    let sol = pde::solve(&problem)?;
    sol.write_snapshots(art.root().join("snapshots"))?;
    art.register_dir("snapshots")?;
    let mut diag = Table::new(&["t", "besov_ratio", "remainder_bound", "dt"]);
    for d in &sol.diagnostics {
        diag.push_nums(&[d.t, d.besov_ratio, d.remainder_bound, d.dt]);
    }
    art.table("diagnostics.csv", &diag)?;
    let mut norms = Table::new(&["t", "sup_norm", "min", "l2_norm"]);
    let mut sup = Vec::new();
    for (t, u) in sol.times.iter().zip(&sol.snapshots) {
        norms.push_nums(&[*t, u.max_abs(), u.min(), u.lp_norm(2.0)]);
        sup.push((*t, u.max_abs()));
    }
    art.table("norms.csv", &norms)?;
    art.plot("sup_norm.svg", &LinePlot::new("solution size", "t", "||u(t)||_inf").series("sup norm", sup))?;
    let mut checks = vec![Check::new(
        "solved",
        Status::Pass,
        format!(
            "{} snapshots, sup norm {}, step halvings {}",
            sol.snapshots.len(),
            num(sol.sup_norm()),
            sol.halvings
        ),
    )];
    if problem.source.is_zero() {
        checks.push(Check::new(
            "zero solution",
            Status::from_bool(sol.sup_norm() == 0.0),
            format!("zero source gives sup norm {}", num(sol.sup_norm())),
        ));
    }
    for w in pde::drift_regime_warnings(&s.model, &s.drift) {
        checks.push(Check::new("regime", Status::Warn, w));
    }
    Ok(checks)
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let sim_cfg = cfg.sim.build(s.model.dim(), &s.kernel, cfg.seed());
    let sim = Simulator::new(&s.model, &s.kernel, &s.drift, &sim_cfg)?;
    let x0 = sim_cfg.x0.clone();
    let per_path = sim.map_paths(sim_cfg.n_paths, |_, props| {
        let rec = sim.record(&x0, props)?;
        let acc = rec.events.iter().filter(|e| e.accepted).count();
        Ok((rec.terminal().to_vec(), rec.events.len(), acc))
    })?;
    let d = s.model.dim();
    let header: Vec<String> = std::iter::once("path".to_string())
        .chain((1..=d).map(|i| format!("x_{i}")))
        .chain(["proposals".into(), "accepted".into()])
        .collect();
    let mut terminal = Table::new(&header);
    for (i, (x, n, a)) in per_path.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.iter().map(|v| num(*v)));
        row.push(n.to_string());
        row.push(a.to_string());
        terminal.push(row);
    }
    art.table("terminal.csv", &terminal)?;
    let mut moments = Table::new(&["coordinate", "mean", "stderr"]);
    for k in 0..d {
        let v: Vec<f64> = per_path.iter().map(|p| p.0[k]).collect();
        let (m, se) = mean_and_stderr(&v);
        moments.push(vec![format!("x_{}", k + 1), num(m), num(se)]);
    }
    art.table("moments.csv", &moments)?;
    let mut first = Vec::new();
    for i in 0..cfg.sim.record_paths.min(sim_cfg.n_paths) {
        let props = sim.proposals(&mut sim.path_stream(i as u64));
        let rec = sim.record(&x0, &props)?;
        art.write_text(&format!("paths/path_{i:04}.csv"), &rec.to_csv())?;
        if i == 0 {
            first = rec.times.iter().zip(&rec.states).map(|(t, x)| (*t, x[0])).collect();
        }
    }
    if !first.is_empty() {
        art.plot("path.svg", &LinePlot::new("first path", "t", "x_1").series("path 0", first))?;
    }
    let events: usize = per_path.iter().map(|p| p.1).sum();
    let accepted: usize = per_path.iter().map(|p| p.2).sum();
    let freq = accepted as f64 / events.max(1) as f64;
    let mut checks = vec![Check::new(
        "simulated",
        Status::Pass,
        format!("{} paths, {events} proposals, acceptance {freq:.4}", sim_cfg.n_paths),
    )];
    if s.kernel.is_constant() && events > 0 {
        let p = s.kernel.kappa1 / sim_cfg.thinning_bound;
        let tol = cfg.thresholds.sigma * (p * (1.0 - p) / events as f64).sqrt();
        checks.push(Check::new(
            "acceptance frequency",
            Status::from_bool((freq - p).abs() <= tol),
            format!("{freq:.5} vs sigma / bound = {p:.5} (tolerance {tol:.2e})"),
        ));
    }
    Ok(checks)
}

fn sources(cfg: &ExperimentConfig, grid: Grid) -> Vec<Source> {
    let src = &cfg.pde.source;
    (0..cfg.study.sources as u64)
        .map(|k| {
            let mut rng = domain_stream(cfg.seed(), "apriori", k);
            Source::Static(lp::random_band_limited(grid, src.lo, src.hi, &mut rng))
        })
        .collect()
}

fn apriori(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let mut base = pde_problem(cfg, &s);
    base.source = Source::Zero;
    let gamma = cfg.study.gamma;
    let acfg = AprioriConfig {
        gamma,
        q: cfg.study.q,
        eta: cfg.study.eta.unwrap_or(s.model.alpha() + gamma - 0.25),
        lambdas: cfg.study.lambdas.clone(),
        stride: 10,
    };
    let report = pde::verify_apriori(&base, &sources(cfg, s.grid), &acfg)?;
    let mut ratios = Table::new(&["source", "ratio_coarse", "ratio_fine"]);
    for (k, r) in report.ratios.iter().enumerate() {
        match r {
            Some((a, b)) => ratios.push(vec![k.to_string(), num(*a), num(*b)]),
            None => ratios.push(vec![k.to_string(), String::new(), String::new()]),
        }
    }
    art.table("ratios.csv", &ratios)?;
    let mut lam = Table::new(&["lambda", "ratio"]);
    for (l, r) in acfg.lambdas.iter().zip(&report.lambda_ratios) {
        lam.push_nums(&[*l, *r]);
    }
    art.table("lambda.csv", &lam)?;
    art.plot(
        "lambda.svg",
        &LinePlot::new("decay in lambda", "lambda", "ratio")
            .log_x()
            .log_y()
            .series(
                &format!("B^{} ratio", num(acfg.eta)),
                acfg.lambdas.iter().copied().zip(report.lambda_ratios.iter().copied()).collect(),
            ),
    )?;
    let finite = report
        .ratios
        .iter()
        .flatten()
        .all(|(a, b)| a.is_finite() && b.is_finite());
    let mut checks = vec![
        Check::new(
            "ratio finite",
            Status::from_bool(finite && report.ratios.iter().any(|r| r.is_some())),
            format!("max ratio {} (coarse), {} (fine)", num(report.max_coarse), num(report.max_fine)),
        ),
        Check::new(
            "refinement stability",
            Status::from_bool(report.refinement_change <= cfg.thresholds.refinement),
            format!(
                "relative change {:.4} under grid doubling (threshold {})",
                report.refinement_change, cfg.thresholds.refinement
            ),
        ),
        Check::new(
            "lambda decay",
            Status::from_bool(report.lambda_decreasing),
            format!(
                "ratios {:?} at lambdas {:?}",
                report.lambda_ratios.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                acfg.lambdas
            ),
        ),
    ];
    for w in &report.warnings {
        checks.push(Check::new("regime", Status::Warn, w.clone()));
    }
    checks.extend(hypothesis_lines(&s, cfg));
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

fn x_points(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    cfg.study.x_points.clone().unwrap_or_else(|| {
        (0..5)
            .map(|k| {
                let mut x = vec![0.0; cfg.model.dim];
                x[0] = 0.3 + 1.2 * k as f64;
                x
            })
            .collect()
    })
}

fn require_source(cfg: &ExperimentConfig, grid: Grid) -> Result<Source> {
    let f = cfg.pde.source.build(grid, cfg.seed());
    if f.is_zero() {
        return Err(Error::Config(format!("'{}' needs a non-zero [pde.source]", cfg.kind)));
    }
    Ok(f)
}

fn krylov(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let f = require_source(cfg, s.grid)?;
    let xs = x_points(cfg);
    let mut sim_cfg = cfg.sim.build(s.model.dim(), &s.kernel, cfg.seed());
    let q = cfg.study.q;
    let one = sde::krylov_estimate(&s.model, &s.kernel, &s.drift, &Source::Constant(1.0), &xs, &sim_cfg, q, s.grid)?;
    let exact = one.rows.iter().all(|r| (r.estimate - sim_cfg.horizon).abs() <= 1e-12);
    let a = sde::krylov_estimate(&s.model, &s.kernel, &s.drift, &f, &xs, &sim_cfg, q, s.grid)?;
    sim_cfg.n_paths *= 4;
    let b = sde::krylov_estimate(&s.model, &s.kernel, &s.drift, &f, &xs, &sim_cfg, q, s.grid)?;
    let mut table = Table::new(&["x", "n_paths", "estimate", "stderr"]);
    for r in a.rows.iter().chain(&b.rows) {
        table.push(vec![point(&r.x), r.n_paths.to_string(), num(r.estimate), num(r.stderr)]);
    }
    art.table("estimates.csv", &table)?;
    let mut ratios = Table::new(&["n_paths", "sup", "f_norm", "ratio"]);
    ratios.push_nums(&[(sim_cfg.n_paths / 4) as f64, a.sup, a.f_norm, a.ratio]);
    ratios.push_nums(&[sim_cfg.n_paths as f64, b.sup, b.f_norm, b.ratio]);
    art.table("ratios.csv", &ratios)?;
    art.plot(
        "estimates.svg",
        &LinePlot::new("occupation estimate", "x_1", "E int f(X)")
            .series("n paths", a.rows.iter().map(|r| (r.x[0], r.estimate)).collect())
            .series("4n paths", b.rows.iter().map(|r| (r.x[0], r.estimate)).collect()),
    )?;
    let change = (b.ratio / a.ratio - 1.0).abs();
    let mut checks = vec![
        Check::new(
            "unit source",
            Status::from_bool(exact),
            format!("f = 1 gives {} for T = {}", num(one.rows[0].estimate), num(sim_cfg.horizon)),
        ),
        Check::new(
            "ratio stability",
            Status::from_bool(change <= cfg.thresholds.refinement && a.ratio.is_finite()),
            format!("ratio {} -> {} as paths quadruple (change {change:.4})", num(a.ratio), num(b.ratio)),
        ),
    ];
    checks.extend(hypothesis_lines(&s, cfg));
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

fn feynman_kac(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let f = require_source(cfg, s.grid)?;
    let xs = x_points(cfg);
    let sim_cfg = cfg.sim.build(s.model.dim(), &s.kernel, cfg.seed());
    let pde_grid = Grid::new(s.grid.dim, cfg.study.pde_grid.unwrap_or(s.grid.n), s.grid.length)?;
    let pde_cfg = FkPdeConfig {
        grid: pde_grid,
        dt: cfg.study.pde_dt.unwrap_or(cfg.pde.dt),
    };
    let r = sde::feynman_kac_check(&s.model, &s.kernel, &s.drift, &f, &xs, &sim_cfg, pde_cfg)?;
    let sigma = cfg.thresholds.sigma;
    let mut table = Table::new(&["x", "pde", "mc", "stderr", "discrepancy", "allowance", "pass"]);
    let mut checks = Vec::new();
    for row in &r.rows {
        let pass = row.discrepancy <= sigma * row.stderr + row.allowance;
        table.push(vec![
            point(&row.x),
            num(row.pde),
            num(row.mc),
            num(row.stderr),
            num(row.discrepancy),
            num(row.allowance),
            pass.to_string(),
        ]);
        checks.push(Check::new(
            format!("identity at x = {}", point(&row.x)),
            Status::from_bool(pass),
            format!(
                "|u - MC| = {:.3e} against {sigma} SE + allowance = {:.3e}",
                row.discrepancy,
                sigma * row.stderr + row.allowance
            ),
        ));
    }
    art.table("feynman_kac.csv", &table)?;
    let mut parts = Table::new(&["pde_dt", "pde_grid", "sim_dt", "cutoff"]);
    parts.push_nums(&r.allowance_parts);
    art.table("allowance.csv", &parts)?;
    art.plot(
        "feynman_kac.svg",
        &LinePlot::new("Feynman-Kac", "x_1", "value")
            .series("PDE u(0, x)", r.rows.iter().map(|w| (w.x[0], w.pde)).collect())
            .series("Monte Carlo", r.rows.iter().map(|w| (w.x[0], w.mc)).collect()),
    )?;
    for w in &r.warnings {
        checks.push(Check::new("regime", Status::Warn, w.clone()));
    }
    checks.extend(hypothesis_lines(&s, cfg));
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

fn zvonkin_run(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let mcfg = MapConfig {
        grid: s.grid,
        horizon: cfg.sim.horizon,
        dt: cfg.study.pde_dt.unwrap_or(cfg.pde.dt),
        reference_kappa: cfg.pde.reference_kappa,
    };
    let schedule = cfg.study.schedule.clone().unwrap_or_else(zvonkin::doubling_schedule);
    let map = zvonkin::build(&s.model, &s.kernel, &s.drift, &schedule, &mcfg)?;
    map.write(art.root().join("map"))?;
    art.register_dir("map")?;
    let mut trials = Table::new(&["lambda", "sup_u", "sup_grad_u", "certificate"]);
    for t in map.trials() {
        trials.push_nums(&[t.lambda, t.sup_u, t.sup_grad, t.certificate()]);
    }
    art.table("lambda_schedule.csv", &trials)?;

    let d = map.dim();
    let mut rng = domain_stream(cfg.seed(), "zvonkin-pairs", 0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..cfg.study.pairs {
        let t = rng.random::<f64>() * mcfg.horizon;
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * s.grid.length).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 2.0 * rng.random::<f64>() - 1.0).collect();
        let dist = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist < 1e-9 {
            continue;
        }
        let fx = map.forward(t, &x);
        let fy = map.forward(t, &y);
        let ix = map.inverse(t, &x)?;
        let iy = map.inverse(t, &y)?;
        let qf = norm(&fx.iter().zip(&fy).map(|(a, b)| a - b).collect::<Vec<_>>()) / dist;
        let qi = norm(&ix.iter().zip(&iy).map(|(a, b)| a - b).collect::<Vec<_>>()) / dist;
        lo = lo.min(qf).min(qi);
        hi = hi.max(qf).max(qi);
    }

    let mut gaps = Vec::new();
    for &dt in &cfg.study.dts {
        let mut sc = cfg.sim.build(d, &s.kernel, cfg.seed());
        sc.dt = dt;
        gaps.push(zvonkin::verify_transform(&s.model, &s.kernel, &s.drift, &map, &sc)?);
    }
    let mut gap_table = Table::new(&["dt", "max_gap", "mean_gap"]);
    for g in &gaps {
        gap_table.push_nums(&[g.dt, g.max, g.mean]);
    }
    art.table("transform_gaps.csv", &gap_table)?;
    art.plot(
        "transform_gaps.svg",
        &LinePlot::new("pathwise gap", "dt", "max |Phi(X) - Y|")
            .log_x()
            .log_y()
            .series("max gap", gaps.iter().map(|g| (g.dt, g.max)).collect()),
    )?;
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0].max / w[1].max).collect();
    let tol = cfg.thresholds.halving;
    let halving_ok = match ratios.first() {
        Some(r) => (r / 2.0 - 1.0).abs() <= tol,
        None => false,
    };
    let mut checks = vec![
        Check::new(
            "smallness certificate",
            Status::from_bool(map.certificate() <= zvonkin::SMALLNESS),
            format!("lambda {} gives ||u|| + ||grad u|| = {:.4}", num(map.lambda()), map.certificate()),
        ),
        Check::new(
            "bi-Lipschitz",
            Status::from_bool(lo >= 0.5 && hi <= 2.0),
            format!("difference quotients of the map and its inverse in [{lo:.4}, {hi:.4}]"),
        ),
        Check::new(
            "gap halving",
            Status::from_bool(halving_ok),
            format!(
                "successive ratios {:?} (target 2 within {})",
                ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
                tol
            ),
        ),
    ];
    for w in &map.warnings {
        checks.push(Check::new("regime", Status::Warn, w.clone()));
    }
    checks.extend(hypothesis_lines(&s, cfg));
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

fn spread(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn maxprinciple(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let model = cfg.model.build()?;
    let kappa = cfg.kernel.base;
    let mut values = Table::new(&["j", "trial", "value"]);
    let mut per_j = Table::new(&["j", "c_j", "mean"]);
    let mut cs = Vec::new();
    let mut all_negative = true;
    for &j in &cfg.study.js {
        let mut rng = domain_stream(cfg.seed(), "maxprinciple", j as u64);
        let vals = nonlocal::maxprinciple_check(&model, kappa, j, cfg.study.trials, &mut rng)?;
        for (k, v) in vals.iter().enumerate() {
            values.push(vec![j.to_string(), k.to_string(), num(*v)]);
        }
        let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        all_negative &= worst < 0.0;
        cs.push(-worst);
        per_j.push_nums(&[j as f64, -worst, vals.iter().sum::<f64>() / vals.len().max(1) as f64]);
    }
    art.table("values.csv", &values)?;
    art.table("constants.csv", &per_j)?;
    art.plot(
        "constants.svg",
        &LinePlot::new("maximum principle", "j", "c_j").series(
            "c_j",
            cfg.study.js.iter().map(|j| *j as f64).zip(cs.iter().copied()).collect(),
        ),
    )?;
    let sp = spread(&cs);
    Ok(vec![
        Check::new(
            "strictly negative",
            Status::from_bool(all_negative),
            format!("{} trials per block", cfg.study.trials),
        ),
        Check::new(
            "uniform constant",
            Status::from_bool(all_negative && sp <= cfg.thresholds.spread),
            format!(
                "c_j = {:?}, spread {sp:.3} (threshold {})",
                cs.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
                cfg.thresholds.spread
            ),
        ),
    ])
}

fn coercivity(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let model = cfg.model.build()?;
    let grid = cfg.grid()?;
    let kappa = cfg.kernel.base;
    let p = cfg.study.p;
    let mut samples = Vec::new();
    let mut table = Table::new(&["j", "trial", "lhs", "rhs_scale", "norm_pp"]);
    let mut c0s = Vec::new();
    let mut all_negative = true;
    for &j in &cfg.study.js {
        let lo = 2f64.powi(j - 1);
        let mut c0 = f64::INFINITY;
        for t in 0..cfg.study.trials {
            let mut rng = domain_stream(cfg.seed(), &format!("coercivity-{j}"), t as u64);
            let f = lp::random_band_limited(grid, lo, 4.0 * lo, &mut rng);
            let c = nonlocal::coercivity_check(&f, j, p, &model, kappa)?;
            all_negative &= c.lhs < 0.0;
            c0 = c0.min(-c.lhs / c.rhs_scale);
            table.push_nums(&[j as f64, t as f64, c.lhs, c.rhs_scale, c.norm_pp]);
            samples.push(c);
        }
        c0s.push(c0);
    }
    art.table("samples.csv", &table)?;
    let (fit_c0, fit_c1) = nonlocal::fit_coercivity(&samples)?;
    let mut per_j = Table::new(&["j", "c0_j"]);
    for (j, c) in cfg.study.js.iter().zip(&c0s) {
        per_j.push_nums(&[*j as f64, *c]);
    }
    art.table("constants.csv", &per_j)?;
    art.plot(
        "constants.svg",
        &LinePlot::new("coercivity", "j", "C0_j").series(
            "C0_j",
            cfg.study.js.iter().map(|j| *j as f64).zip(c0s.iter().copied()).collect(),
        ),
    )?;
    let sp = spread(&c0s);
    Ok(vec![
        Check::new(
            "strictly negative",
            Status::from_bool(all_negative),
            format!("{} samples at p = {}", samples.len(), num(p)),
        ),
        Check::new(
            "uniform constant",
            Status::from_bool(all_negative && sp <= cfg.thresholds.spread),
            format!(
                "C0_j = {:?}, spread {sp:.3}; regression C0 = {}, C1 = {}",
                c0s.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
                num(fit_c0),
                num(fit_c1)
            ),
        ),
    ])
}

fn commutator(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let s = setup(cfg)?;
    let u = lp::random_field(s.grid, s.model.alpha(), &mut domain_stream(cfg.seed(), "commutator", 0));
    let fit = nonlocal::commutator_decay(
        &cfg.study.js,
        &u,
        &s.model,
        &s.kernel,
        cfg.study.thetabar,
        cfg.study.gamma,
        cfg.study.p,
    )?;
    let mut table = Table::new(&["j", "norm"]);
    for (j, n) in cfg.study.js.iter().zip(&fit.norms) {
        table.push_nums(&[*j as f64, *n]);
    }
    art.table("commutator.csv", &table)?;
    art.plot(
        "commutator.svg",
        &LinePlot::new("commutator", "j", "||[Lambda_j, L] u||_p")
            .log_y()
            .series(
                "norm",
                cfg.study.js.iter().map(|j| *j as f64).zip(fit.norms.iter().copied()).collect(),
            ),
    )?;
    let ok = fit.slope <= fit.predicted + cfg.thresholds.slope;
    let mut checks = vec![Check::new(
        "decay rate",
        Status::from_bool(ok),
        format!(
            "fitted slope {:.4} against predicted {:.4} (slack {})",
            fit.slope, fit.predicted, cfg.thresholds.slope
        ),
    )];
    checks.extend(hypothesis_lines(&s, cfg));
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

fn regime(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let model = cfg.model.build()?;
    let grid = cfg.grid()?;
    let kernel = cfg.kernel.build(&model, grid)?;
    let beta = cfg.drift.holder;
    let amplitude = cfg.drift.amplitude;
    let sim_cfg = cfg.sim.build(model.dim(), &kernel, cfg.seed());
    let study = regime_study(&model, &kernel, amplitude, beta, &cfg.study.mollifications, &sim_cfg)?;
    let mut header = vec!["path".to_string()];
    header.extend(study.deltas.iter().map(|d| format!("delta_{}", num(*d))));
    let mut terminals = Table::new(&header);
    for i in 0..sim_cfg.n_paths {
        let mut row = vec![i.to_string()];
        row.extend(study.terminals.iter().map(|t| num(t[i])));
        terminals.push(row);
    }
    art.table("terminals.csv", &terminals)?;
    let mut ks = Table::new(&["delta_coarse", "delta_fine", "ks"]);
    for (w, k) in study.deltas.windows(2).zip(&study.ks) {
        ks.push_nums(&[w[0], w[1], *k]);
    }
    art.table("ks.csv", &ks)?;
    art.plot(
        "ks.svg",
        &LinePlot::new("distance between mollified laws", "finer delta", "KS distance")
            .log_x()
            .series("KS", study.deltas[1..].iter().copied().zip(study.ks.iter().copied()).collect()),
    )?;
    let n = sim_cfg.n_paths as f64;
    let critical = (-(0.5 * cfg.thresholds.ks).ln() / 2.0).sqrt() * (2.0 / n).sqrt();
    let detail = format!(
        "{} regime, alpha + beta = {}; KS distances {:?}; two-sample critical value {critical:.4} at level {}",
        study.regime,
        model.alpha() + beta,
        study.ks.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
        cfg.thresholds.ks
    );
    let check = if study.balance {
        Check::new("KS decreasing", Status::from_bool(study.decreasing), detail)
    } else {
        Check::new("KS distances", Status::Descriptive, detail)
    };
    let s = Setup {
        drift: mollified_holder_drift(model.dim(), amplitude, beta, 0.0),
        model,
        kernel,
        grid,
    };
    let mut checks = vec![check];
    // below the balance threshold the hypotheses are expected to fail
    let hyp = hypothesis_lines(&s, cfg).into_iter().map(|mut c| {
        if !study.balance && c.status == Status::Warn {
            c.status = Status::Descriptive;
        }
        c
    });
    checks.extend(hyp);
    art.table("hypotheses.csv", &hypothesis_table(&checks))?;
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_has_an_anchor() {
        for k in ExperimentKind::ALL {
            assert!(!anchor(k).is_empty());
        }
    }

    #[test]
    fn frequency_samples_span_one_to_sixty_four() {
        for d in 1..=3 {
            let xs = frequency_samples(d);
            let r: Vec<f64> = xs.iter().map(|x| norm(x)).collect();
            let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = r.iter().copied().fold(0.0, f64::max);
            assert!((lo - 1.0).abs() < 1e-12 && (hi - 64.0).abs() < 1e-9);
        }
    }
}
