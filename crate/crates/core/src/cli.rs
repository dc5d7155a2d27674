//! Experiment runner behind the `toric-lab` binary.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numeric failure. Failures
//! print one JSON record on stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::fit::{fit_log_law, fit_power_law, FitError, MIN_SAMPLES};
use crate::asymptotics::{is_nonincreasing, log_grid, AsymptoticsError, SectionDensity, MONOTONE_SLACK};
use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::laplace::{
    self, check_cut_bound, curve_limit, term_transform_exact, truncated_transform, CurveOptions, LaplaceError,
    MonomialCurve,
};
use crate::lattice::{format_rational, rational_to_f64, Rational, RationalPoint, Weight};
use crate::potential::PotentialError;
use crate::rays::{limiting_support, order_profile, vanishing_order, RaysError};
use crate::report::{f, Report, Table};
use crate::selftest::{run_selftest, Fault, SelfTestError, SelfTestOptions};

/// Reference level for the tail-law regression.
pub const TAIL_REFERENCE_T: f64 = 1.0;
const DEFAULT_SEED: u64 = 7;
const DEFAULT_T_POINTS: usize = 9;

#[derive(Debug, Parser)]
#[command(name = "toric-lab", version, about = "Peak sections on toric manifolds: norms, tails and Laplace asymptotics")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `outputs`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Quadrature nodes per axis.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice points of N·P with per-facet vanishing orders.
    Sections,
    /// The sequence α_N, its deviation from Nξ and its tameness.
    Ray,
    /// Norms ‖s_N‖² and the fitted power law against −κ.
    Norms,
    /// Tail volumes D_N(t) and the fitted (log N/N)^κ law.
    Tails,
    /// Moment expectations against the Dirac mass at ξ.
    Weak,
    /// Laplace-transform identities, cut bounds and curve limits.
    Laplace,
    /// The invariant suite.
    Selftest {
        /// Corrupt the computation to confirm the checks can fail.
        #[arg(long, value_enum)]
        inject: Option<Fault>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn validation(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.to_string() }
    }

    fn numeric(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Numeric, message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Numeric => 2,
        }
    }

    /// The machine-readable record printed on stderr.
    pub fn record(&self) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Potential(p) => p.into(),
            other => CliError::validation(other),
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::NoConvergence { .. } => CliError::numeric(e),
            other => CliError::validation(other),
        }
    }
}

impl From<RaysError> for CliError {
    fn from(e: RaysError) -> Self {
        CliError::validation(e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::numeric(e)
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::InvalidResolution(_)
            | AsymptoticsError::BoxDimension { .. }
            | AsymptoticsError::NonPositiveThreshold(_)
            | AsymptoticsError::Rays(_) => CliError::validation(e),
            AsymptoticsError::Potential(p) => p.into(),
            _ => CliError::numeric(e),
        }
    }
}

impl From<LaplaceError> for CliError {
    fn from(e: LaplaceError) -> Self {
        match e {
            LaplaceError::NonConvergentFit(_) => CliError::numeric(e),
            other => CliError::validation(other),
        }
    }
}

impl From<SelfTestError> for CliError {
    fn from(e: SelfTestError) -> Self {
        match e {
            SelfTestError::Asymptotics(a) => a.into(),
            SelfTestError::Potential(p) => p.into(),
            SelfTestError::Laplace(l) => l.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(format!("cannot write outputs: {e}"))
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::validation(e.to_string().trim_end());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(pool) => pool,
        Err(e) => {
            let err = CliError::validation(e);
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(err) => {
            eprintln!("{}", err.record());
            err.exit_code()
        }
    }
}

/// Runs one command, writes its report, and returns the markdown summary.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let (report, failure) = match &cli.command {
        Command::Laplace => laplace_report(seed)?,
        Command::Selftest { inject } => {
            let opts = SelfTestOptions {
                seed,
                resolution: cli.resolution.unwrap_or(SelfTestOptions::default().resolution),
                fault: *inject,
            };
            selftest_report(&opts)?
        }
        command => {
            let path = cli.config.as_ref().ok_or_else(|| CliError::validation("--config is required"))?;
            let mut config = ExperimentConfig::from_path(path)?;
            if let Some(r) = cli.resolution {
                config.quadrature.resolution = Some(r);
            }
            let ex = config.build()?;
            let out = cli.out.clone().unwrap_or_else(|| config.outputs.clone());
            let (report, failure) = match command {
                Command::Sections => (sections_report(&ex)?, None),
                Command::Ray => ray_report(&ex)?,
                Command::Norms => norms_report(&ex)?,
                Command::Tails => tails_report(&ex)?,
                Command::Weak => weak_report(&ex)?,
                Command::Laplace | Command::Selftest { .. } => unreachable!("handled above"),
            };
            report.write(&out)?;
            return failure.map_or(Ok(report.summary), Err);
        }
    };
    report.write(&cli.out.clone().unwrap_or_else(|| PathBuf::from("out")))?;
    failure.map_or(Ok(report.summary), Err)
}

/// A report plus the error to raise after it has been written.
type Outcome = (Report, Option<CliError>);

fn density(ex: &Experiment, alpha: &Weight, n: u64) -> Result<SectionDensity, AsymptoticsError> {
    let res = ex.config.resolution();
    match ex.fixed_box(res) {
        Some(q) => SectionDensity::with_quadrature(&ex.potential, alpha, n, q),
        None => SectionDensity::new(&ex.potential, alpha, n, res),
    }
}

fn kappa(ex: &Experiment) -> Result<Rational, CliError> {
    ex.polytope.kappa(&ex.config.ray).map_err(CliError::validation)
}

fn header(ex: &Experiment, title: &str) -> String {
    format!(
        "# {title}\n\nray ξ = {}, sequence {:?}, κ = {}\n\n",
        ex.config.ray,
        ex.config.sequence,
        ex.polytope.kappa(&ex.config.ray).map(|k| format_rational(&k)).unwrap_or_default()
    )
}

fn row_failure(rows: &[Result<Vec<String>, String>]) -> Option<CliError> {
    let bad = rows.iter().filter(|r| r.is_err()).count();
    (bad > 0).then(|| CliError::numeric(format!("{bad} of {} rows failed; see the status column", rows.len())))
}

fn push_rows(table: &mut Table, ns: &[u64], rows: &[Result<Vec<String>, String>]) {
    let width = table.headers.len();
    for (n, row) in ns.iter().zip(rows) {
        match row {
            Ok(cells) => {
                let mut cells = cells.clone();
                cells.push("ok".into());
                table.push(cells);
            }
            Err(msg) => {
                let mut cells = vec![n.to_string()];
                cells.resize(width - 1, String::new());
                cells.push(msg.clone());
                table.push(cells);
            }
        }
    }
}

pub fn sections_report(ex: &Experiment) -> Result<Report, CliError> {
    let p = &ex.polytope;
    let facets = p.facets().len();
    let mut headers = vec!["N".to_string(), "alpha".to_string()];
    headers.extend((0..facets).map(|j| format!("order_{j}")));
    let mut table = Table::new(headers);
    let mut counts = Table::new(["N", "sections"]);
    for &n in &ex.config.n_list {
        let points = p.lattice_points(n).map_err(CliError::validation)?;
        counts.push(vec![n.to_string(), points.len().to_string()]);
        for alpha in points {
            let mut row = vec![n.to_string(), alpha.to_string()];
            for j in 0..facets {
                row.push(vanishing_order(p, &alpha, n, j)?.to_string());
            }
            table.push(row);
        }
    }
    let profile = order_profile(p, &ex.config.ray)?;
    let mut prof = Table::new(["facet", "normal", "offset", "k", "in_support"]);
    for (j, facet) in p.facets().iter().enumerate() {
        prof.push(vec![
            j.to_string(),
            format!("{:?}", facet.normal.0),
            facet.offset.to_string(),
            format_rational(&profile.k[j]),
            profile.support.contains(&j).to_string(),
        ]);
    }
    let summary = format!(
        "{}## Section counts\n\n{}\n## Asymptotic vanishing orders k_j at ξ\n\n{}",
        header(ex, "Sections"),
        counts.to_markdown(),
        prof.to_markdown()
    );
    Ok(Report { tables: vec![("sections".into(), table), ("profile".into(), prof)], summary })
}

pub fn ray_report(ex: &Experiment) -> Result<Outcome, CliError> {
    let seq = &ex.sequence;
    let ns = &ex.config.n_list;
    let rows: Vec<Result<Vec<String>, String>> = ns
        .iter()
        .map(|&n| {
            let alpha = seq.alpha(n).map_err(|e| e.to_string())?;
            let dev = seq.deviation(n).map_err(|e| e.to_string())?;
            Ok(vec![n.to_string(), alpha.to_string(), format_rational(&dev), f(rational_to_f64(&dev))])
        })
        .collect();
    let mut table = Table::new(["N", "alpha", "deviation", "deviation_f64", "status"]);
    push_rows(&mut table, ns, &rows);
    let tame = seq.is_tame(ns.iter().copied())?;
    let support = limiting_support(&ex.polytope, &ex.config.ray)?;
    let verdict = match tame.witness {
        None => "tame on the N list".to_string(),
        Some((n, j)) => format!("not tame: nonzero order along facet {j} (which contains ξ) at N = {n}"),
    };
    let summary = format!(
        "{}- {verdict}\n- a priori bound on ‖α_N − Nξ‖_∞: {}\n- rule valid from N = {}\n- limiting support (facets with k_j > 0): {:?}\n",
        header(ex, "Ray"),
        format_rational(&seq.bound),
        seq.n0,
        support
    );
    Ok((Report { tables: vec![("ray".into(), table)], summary }, row_failure(&rows)))
}

struct NormRow {
    cells: Vec<String>,
    n: u64,
    scaled: f64,
}

pub fn norms_report(ex: &Experiment) -> Result<Outcome, CliError> {
    ex.config.require_samples("norms", MIN_SAMPLES)?;
    let k = kappa(ex)?;
    let ns = &ex.config.n_list;
    let results: Vec<Result<NormRow, String>> = ns
        .par_iter()
        .map(|&n| -> Result<NormRow, String> {
            let alpha = ex.sequence.alpha(n).map_err(|e| e.to_string())?;
            let d = density(ex, &alpha, n).map_err(|e| e.to_string())?;
            let ratio = RationalPoint(alpha.0.iter().map(|&a| Rational::new(a, n as i64)).collect());
            let (_, min) = ex.potential.face_minimize(&ratio).map_err(|e| e.to_string())?;
            let norm = d.norm();
            let scaled = norm.log_value + n as f64 * min.f_min;
            Ok(NormRow {
                cells: vec![
                    n.to_string(),
                    alpha.to_string(),
                    f(norm.log_value),
                    f(min.f_min),
                    f(scaled),
                    format_rational(&k),
                    f(norm.tail_margin),
                    min.iterations.to_string(),
                ],
                n,
                scaled,
            })
        })
        .collect();
    let mut table = Table::new([
        "N",
        "alpha",
        "log_norm_sq",
        "f_min",
        "scaled_log_norm_sq",
        "kappa_expected",
        "tail_margin",
        "newton_iterations",
        "status",
    ]);
    let rows: Vec<Result<Vec<String>, String>> =
        results.iter().map(|r| r.as_ref().map(|x| x.cells.clone()).map_err(Clone::clone)).collect();
    push_rows(&mut table, ns, &rows);
    let samples: Vec<(u64, f64)> = results.iter().flatten().map(|r| (r.n, r.scaled)).collect();
    let mut failure = row_failure(&rows);
    let fit_line = match fit_power_law(&samples) {
        Ok(fit) => format!(
            "| {} | {} | {} | {}..{} |\n",
            f(fit.exponent),
            f(-rational_to_f64(&k)),
            f(fit.residual),
            fit.n_min,
            fit.n_max
        ),
        Err(e) => {
            failure = failure.or(Some(e.clone().into()));
            format!("| fit failed: {e} | {} | | |\n", f(-rational_to_f64(&k)))
        }
    };
    let summary = format!(
        "{}`log ‖s_N‖² + N min f_N` regressed on `log N`.\n\n| fitted exponent | expected −κ | residual | N range |\n|---|---|---|---|\n{fit_line}\n{}",
        header(ex, "Norms"),
        table.to_markdown()
    );
    Ok((Report { tables: vec![("norms".into(), table)], summary }, failure))
}

pub fn tails_report(ex: &Experiment) -> Result<Outcome, CliError> {
    ex.config.require_samples("tails", MIN_SAMPLES)?;
    let k = kappa(ex)?;
    let ns = &ex.config.n_list;
    let grid = match &ex.config.t_grid {
        Some(g) => g.clone(),
        None => {
            let n = *ns.last().expect("nonempty N list");
            let tmax = density(ex, &ex.sequence.alpha(n)?, n)?.log_max_density()?.exp();
            log_grid(1e-3, tmax, DEFAULT_T_POINTS)
        }
    };
    let results: Vec<Result<(Vec<String>, f64), String>> = ns
        .par_iter()
        .map(|&n| {
            let run = || -> Result<(Vec<String>, f64), AsymptoticsError> {
                let alpha = ex.sequence.alpha(n)?;
                let d = density(ex, &alpha, n)?;
                let d0 = d.tail_volume(TAIL_REFERENCE_T)?;
                let mut cells = vec![n.to_string(), alpha.to_string(), f(d0)];
                for &t in &grid {
                    cells.push(f(d.tail_volume(t)?));
                }
                cells.push(f(d.tail_truncation_bound(TAIL_REFERENCE_T)));
                cells.push(f(d.log_max_density()?.exp()));
                Ok((cells, d0))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut headers = vec!["N".to_string(), "alpha".to_string(), format!("D_t{TAIL_REFERENCE_T}")];
    headers.extend(grid.iter().map(|t| format!("D_t{}", f(*t))));
    headers.extend(["truncation_bound".to_string(), "max_density".to_string(), "status".to_string()]);
    let mut table = Table::new(headers);
    let rows: Vec<Result<Vec<String>, String>> =
        results.iter().map(|r| r.as_ref().map(|x| x.0.clone()).map_err(Clone::clone)).collect();
    push_rows(&mut table, ns, &rows);
    let samples: Vec<(u64, f64)> =
        ns.iter().zip(&results).filter_map(|(&n, r)| r.as_ref().ok().map(|x| (n, x.1.ln()))).collect();
    let mut failure = row_failure(&rows);
    let fit_line = match fit_log_law(&samples, rational_to_f64(&k)) {
        Ok(fit) => format!(
            "| {} | {} | {} | {} |\n",
            f(fit.fit.exponent),
            format_rational(&k),
            f(fit.slope_error),
            f(fit.fit.residual)
        ),
        Err(e) => {
            failure = failure.or(Some(e.clone().into()));
            format!("| fit failed: {e} | {} | | |\n", format_rational(&k))
        }
    };
    let summary = format!(
        "{}`log D_N(t₀)` at t₀ = {TAIL_REFERENCE_T} regressed on `log(log N / N)`.\n\n| slope | κ | slope − κ | residual |\n|---|---|---|---|\n{fit_line}",
        header(ex, "Tails")
    );
    Ok((Report { tables: vec![("tails".into(), table)], summary }, failure))
}

pub fn weak_report(ex: &Experiment) -> Result<Outcome, CliError> {
    let xi = ex.config.ray.to_f64();
    let xi_sq: f64 = xi.iter().map(|x| x * x).sum();
    let ns = &ex.config.n_list;
    let results: Vec<Result<[f64; 3], String>> = ns
        .par_iter()
        .map(|&n| {
            let run = || -> Result<[f64; 3], AsymptoticsError> {
                let d = density(ex, &ex.sequence.alpha(n)?, n)?;
                let mut e_p = 0.0f64;
                for (i, &x) in xi.iter().enumerate() {
                    e_p = e_p.max((d.expectation(|p| p[i]) - x).abs());
                }
                let e_p2 = (d.expectation(|p| p.iter().map(|x| x * x).sum()) - xi_sq).abs();
                let e_dist = d.expectation(|p| p.iter().zip(&xi).map(|(a, b)| (a - b).powi(2)).sum());
                Ok([e_p, e_p2, e_dist])
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let rows: Vec<Result<Vec<String>, String>> = ns
        .iter()
        .zip(&results)
        .map(|(n, r)| r.as_ref().map(|e| vec![n.to_string(), f(e[0]), f(e[1]), f(e[2])]).map_err(Clone::clone))
        .collect();
    let mut table = Table::new(["N", "err_p", "err_p_sq", "err_dist_sq", "status"]);
    push_rows(&mut table, ns, &rows);
    let ok: Vec<&[f64; 3]> = results.iter().flatten().collect();
    let monotone = |i: usize| is_nonincreasing(&ok.iter().map(|e| e[i]).collect::<Vec<_>>(), MONOTONE_SLACK);
    let summary = format!(
        "{}Errors `|∫ T |φ_N|² − T(ξ)|` for T = p, |p|², |p − ξ|² in moment coordinates.\n\n| test | monotone | last |\n|---|---|---|\n| p | {} | {} |\n| p² | {} | {} |\n| (p−ξ)² | {} | {} |\n",
        header(ex, "Weak convergence"),
        monotone(0),
        ok.last().map_or(String::new(), |e| f(e[0])),
        monotone(1),
        ok.last().map_or(String::new(), |e| f(e[1])),
        monotone(2),
        ok.last().map_or(String::new(), |e| f(e[2])),
    );
    Ok((Report { tables: vec![("weak".into(), table)], summary }, row_failure(&rows)))
}

pub fn laplace_report(seed: u64) -> Result<Outcome, CliError> {
    let mut transforms =
        Table::new(["alpha", "j", "t", "cutoff", "exact", "truncated", "quadrature_error", "tail_bound", "within"]);
    let mut bad = 0;
    for alpha in [0.0, 0.5, 1.0] {
        for j in 0..=2u32 {
            for t in [10.0, 50.0, 200.0] {
                let cutoff = 30.0 / t;
                let exact = term_transform_exact(alpha, j, t)?;
                let tr = truncated_transform(alpha, j, t, cutoff)?;
                let within = (exact - tr.value).abs() <= tr.tail_bound + tr.quadrature_error + 1e-8 * exact.abs();
                bad += usize::from(!within);
                transforms.push(vec![
                    f(alpha),
                    j.to_string(),
                    f(t),
                    f(cutoff),
                    f(exact),
                    f(tr.value),
                    f(tr.quadrature_error),
                    f(tr.tail_bound),
                    within.to_string(),
                ]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts = Table::new(["c", "npow", "omega", "t", "integral", "bound", "holds"]);
    for _ in 0..20 {
        let c: f64 = rng.gen_range(0.1..5.0);
        let npow = rng.gen_range(0..5u32);
        let omega: f64 = rng.gen_range(0.5..20.0);
        let t: f64 = rng.gen_range(2.0..300.0);
        let chk = check_cut_bound(|s: f64| c * s.powi(npow as i32) * (1.0 + (omega * s).sin().powi(2)) / 2.0, c, npow, t, 1.0)?;
        bad += usize::from(!chk.holds);
        cuts.push(vec![f(c), npow.to_string(), f(omega), f(t), f(chk.integral), f(chk.bound), chk.holds.to_string()]);
    }
    let grid = laplace::geometric_grid(100.0, 1000.0, 10);
    let opts = CurveOptions::default();
    let mut curves = Table::new(["curve", "limit", "expected", "relative_error", "fit_residual", "exponent", "t_F_at_tmax"]);
    for (name, curve, expected) in [
        ("line", MonomialCurve::line(), std::f64::consts::PI),
        ("cusp", MonomialCurve::cusp(), 2.0 * std::f64::consts::PI),
    ] {
        let lim = curve_limit(&curve, &laplace::norm_sq, 1, &grid, &opts)?;
        curves.push(vec![
            name.into(),
            f(lim.limit),
            f(expected),
            f((lim.limit / expected - 1.0).abs()),
            f(lim.residual),
            f(lim.exponent),
            f(lim.last_scaled),
        ]);
    }
    let summary = format!(
        "# Laplace oracle\n\n## Curve limits t·F(t)\n\n{}\n{} of {} transform and cut-bound checks failed.\n",
        curves.to_markdown(),
        bad,
        transforms.rows.len() + cuts.rows.len()
    );
    let failure = (bad > 0).then(|| CliError::numeric(format!("{bad} Laplace checks failed")));
    Ok((
        Report {
            tables: vec![("transforms".into(), transforms), ("cut_bounds".into(), cuts), ("curves".into(), curves)],
            summary,
        },
        failure,
    ))
}

pub fn selftest_report(opts: &SelfTestOptions) -> Result<Outcome, CliError> {
    let checks = run_selftest(opts)?;
    let mut table = Table::new(["check", "passed", "worst", "tolerance"]);
    for c in &checks {
        table.push(vec![c.name.into(), c.passed.to_string(), f(c.worst), f(c.tolerance)]);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let summary = format!("# Self-test\n\n{}\n{} of {} checks passed.\n", table.to_markdown(), checks.len() - failed.len(), checks.len());
    let failure = (!failed.is_empty()).then(|| CliError::numeric(format!("failed checks: {}", failed.join(", "))));
    Ok((Report { tables: vec![("selftest".into(), table)], summary }, failure))
}
