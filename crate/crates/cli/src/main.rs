mod config;
mod schema;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use torquesplit::allocator::{allocate, AllocationQuery, Drive, GradientOptions, Init};
use torquesplit::cyclesim::{comparison_table, fit_models, run_cycle, sigma_map, sigma_map_csv, trace_csv, SimMethod};
use torquesplit::fixtures;
use torquesplit::powertrain::{fit_loss_model, generate_synthetic_map, uniform_grid, LossMap, LossModel, SyntheticKind};
use torquesplit::sos::{fit_pseudoconvex, fit_unconstrained, FitDataset, MAX_DEGREE};
use torquesplit::Error;

/// Shape-constrained loss models and front/rear torque allocation for
/// four-motor electric vehicles.
///
/// Units are fixed: rad/s, N·m, W, kWh, m/s, s.
#[derive(Parser, Debug)]
#[command(name = "torquesplit", disable_version_flag = true)]
struct Cli {
    /// Print name and version as JSON and exit.
    #[arg(long)]
    version: bool,
    /// Print JSON schemas for model and config files and exit.
    #[arg(long)]
    schema: bool,
    /// Seed for every stochastic choice (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one loss polynomial per speed slice of a loss map.
    Fit(FitArgs),
    /// Solve one allocation, or a batch from CSV.
    Allocate(AllocateArgs),
    /// Allocation ratio over a (ω_w, τ_ref) grid, as long-form CSV.
    Sweep(SweepArgs),
    /// Run the configured cycles with every configured method.
    Simulate(SimulateArgs),
    /// Write a synthetic loss map.
    Genmap(GenmapArgs),
    /// Re-check positivity and monotonicity of every slice of a model.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Loss map CSV, or a single-slice `torque_nm,loss_w` dataset.
    map: PathBuf,
    #[arg(long, default_value_t = 10)]
    degree: usize,
    #[arg(long, default_value_t = torquesplit::sos::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Fit pseudoconvex (monotone, positive) polynomials.
    #[arg(long)]
    constrained: bool,
    /// Output model JSON.
    #[arg(short, long)]
    output: PathBuf,
    /// Per-slice rmse and min-derivative CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AllocateArgs {
    /// Config JSON naming the motors and fit options.
    #[arg(long)]
    config: PathBuf,
    /// GS, UP, PP, UP_KKT or PP_KKT.
    #[arg(long, default_value = "PP_KKT")]
    method: SimMethod,
    /// Wheel speed, rad/s.
    #[arg(long, required_unless_present = "batch")]
    omega_w: Option<f64>,
    /// Per-side wheel torque demand, N·m.
    #[arg(long, required_unless_present = "batch", allow_hyphen_values = true)]
    tau_ref: Option<f64>,
    /// CSV with `omega_w,tau_ref` rows.
    #[arg(long, requires = "output")]
    batch: Option<PathBuf>,
    /// Output CSV for `--batch`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "PP_KKT")]
    method: SimMethod,
    /// Wheel speed grid `start:stop:step`, rad/s.
    #[arg(long)]
    omega_w: String,
    /// Demand grid `start:stop:step`, N·m.
    #[arg(long, allow_hyphen_values = true)]
    tau_ref: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    config: PathBuf,
    /// Allowed clamped (infeasible) steps per method and cycle.
    #[arg(long, default_value_t = 0)]
    max_infeasible: usize,
}

#[derive(Args, Debug)]
struct GenmapArgs {
    /// `type1`, `type2`, `convex`, or a JSON file with a generator spec.
    #[arg(long)]
    kind: String,
    /// Motor speed grid `start:stop:step`, rad/s.
    #[arg(long, default_value = "0:720:10")]
    speeds: String,
    /// Torque grid `start:stop:step`, N·m.
    #[arg(long, default_value = "0:250:2")]
    torques: String,
    /// Relative multiplicative noise, uniform in `1 ± noise`.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    model: PathBuf,
    /// Map the model was fitted to.
    map: PathBuf,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Parse { .. } | Error::Json(_) => 2,
            Error::SliceFitFailed { .. }
            | Error::NumericalFailure(_)
            | Error::Infeasible(_)
            | Error::DegenerateData(_) => 3,
            Error::InfeasibleDemand(_) => 5,
            _ => 4,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

type CmdResult = Result<(), Failure>;

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &str) -> CmdResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
    tmp.write_all(contents.as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| fail(2, format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| fail(4, format!("bad grid {spec:?}, expected start:stop:step")))?;
    match nums[..] {
        [v] => Ok(vec![v]),
        [a, b, s] if s > 0.0 && b >= a => Ok(uniform_grid(a, b, s)),
        _ => Err(fail(4, format!("bad grid {spec:?}, expected start:stop:step"))),
    }
}

fn cmd_fit(a: &FitArgs) -> CmdResult {
    if a.degree > MAX_DEGREE || a.degree == 0 {
        return Err(Error::DegreeCap {
            degree: a.degree,
            max: MAX_DEGREE,
        }
        .into());
    }
    let text = std::fs::read_to_string(&a.map)?;
    if text.trim_start().starts_with("torque_nm") {
        return fit_dataset(a, &text);
    }
    let map = LossMap::from_csv_str(&text, &a.map.display().to_string())?;
    let model = fit_loss_model(&map, a.degree, a.epsilon, a.constrained)?;
    write_atomic(&a.output, &model.to_json()?)?;
    if let Some(path) = &a.report {
        let mut out = String::from("index,omega_radps,rmse_w,min_derivative,monotone\n");
        for (i, m) in model.fit_meta.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{},{}", m.omega, m.rmse, m.min_derivative, m.monotone);
        }
        write_atomic(path, &out)?;
    }
    let worst = model.fit_meta.iter().map(|m| m.rmse).fold(0.0, f64::max);
    println!(
        "fitted {} slices, degree {}, {}; worst rmse {worst:.6e} W",
        model.polys.len(),
        model.degree,
        if model.constrained { "constrained" } else { "unconstrained" }
    );
    Ok(())
}

fn fit_dataset(a: &FitArgs, text: &str) -> CmdResult {
    let data = FitDataset::from_csv_str(text, &a.map.display().to_string())?;
    let rep = if a.constrained {
        fit_pseudoconvex(&data, a.degree, a.epsilon)?
    } else {
        fit_unconstrained(&data, a.degree)?
    };
    let json = serde_json::to_string_pretty(&rep.to_fit_json()).map_err(Error::from)?;
    write_atomic(&a.output, &json)?;
    println!(
        "fitted degree {} to {} points; rmse {:.6e} W, min derivative {:.6e}",
        rep.degree,
        data.len(),
        rep.rmse,
        rep.min_derivative_on_range
    );
    if a.constrained && !rep.monotone_on_range {
        return Err(fail(3, "certified fit is not monotone on the data range"));
    }
    Ok(())
}

#[derive(Serialize)]
struct AllocationOut {
    omega_w: f64,
    tau_ref: f64,
    sigma: f64,
    loss_w: f64,
    method: SimMethod,
    front_motor_torque: f64,
    rear_motor_torque: f64,
    solve_time_s: f64,
    converged: bool,
}

fn read_batch(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if k == 0 {
            if line.replace(' ', "") != "omega_w,tau_ref" {
                return Err(fail(2, format!("{}:1: expected header omega_w,tau_ref", path.display())));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = || fail(2, format!("{}:{}: expected two numbers", path.display(), k + 1));
        let (w, t) = line.split_once(',').ok_or_else(bad)?;
        rows.push((w.trim().parse().map_err(|_| bad())?, t.trim().parse().map_err(|_| bad())?));
    }
    Ok(rows)
}

fn cmd_allocate(a: &AllocateArgs, seed: Option<u64>) -> CmdResult {
    let loaded = config::load(&a.config, seed)?;
    let cfg = loaded.sim_config(vec![a.method], None)?;
    let models = fit_models(&cfg)?;
    let pair = match a.method.constrained() {
        Some(true) => models.constrained.as_ref(),
        Some(false) => models.unconstrained.as_ref(),
        None => None,
    };
    let front = Drive::new(&cfg.front, pair.map(|p| &p.0));
    let rear = Drive::new(&cfg.rear, pair.map(|p| &p.1));
    let solve = |k: usize, w: f64, t: f64| -> Result<AllocationOut, Failure> {
        let q = AllocationQuery::new(w, t, cfg.config, front, rear);
        q.validate()?;
        let opts = GradientOptions {
            init: Init::Random(cfg.seed.wrapping_add(k as u64)),
            ..GradientOptions::default()
        };
        let r = allocate(&q, a.method.solver(), &opts, cfg.grid_step)?;
        Ok(AllocationOut {
            omega_w: w,
            tau_ref: t,
            sigma: r.sigma,
            loss_w: r.loss_total,
            method: a.method,
            front_motor_torque: r.front_motor_torque,
            rear_motor_torque: r.rear_motor_torque,
            solve_time_s: r.solve_time_s,
            converged: r.converged,
        })
    };
    match &a.batch {
        Some(path) => {
            let mut out = String::from("omega_w,tau_ref,sigma,loss_w,method,solve_time_s\n");
            for (k, (w, t)) in read_batch(path)?.into_iter().enumerate() {
                let r = solve(k, w, t)?;
                let _ = writeln!(out, "{w},{t},{},{},{},{}", r.sigma, r.loss_w, r.method, r.solve_time_s);
            }
            write_atomic(a.output.as_ref().expect("clap requires --output"), &out)
        }
        None => {
            let r = solve(0, a.omega_w.unwrap_or_default(), a.tau_ref.unwrap_or_default())?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?);
            Ok(())
        }
    }
}

fn cmd_sweep(a: &SweepArgs, seed: Option<u64>) -> CmdResult {
    let loaded = config::load(&a.config, seed)?;
    let cfg = loaded.sim_config(vec![a.method], None)?;
    let models = fit_models(&cfg)?;
    let cells = sigma_map(&cfg, &models, &parse_grid(&a.omega_w)?, &parse_grid(&a.tau_ref)?, a.method)?;
    let missing = cells.iter().filter(|c| c.sigma.is_none()).count();
    write_atomic(&a.output, &sigma_map_csv(&cells))?;
    println!("{} cells, {missing} out of range or infeasible", cells.len());
    Ok(())
}

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> CmdResult {
    let loaded = config::load(&a.config, seed)?;
    if loaded.cycles.is_empty() {
        return Err(fail(4, "config lists no cycles"));
    }
    let methods = loaded.file.methods.clone();
    let base = loaded.sim_config(methods.clone(), Some(&loaded.cycles[0]))?;
    let models = fit_models(&base)?;
    std::fs::create_dir_all(&loaded.output_dir)?;
    let mut reports = Vec::new();
    let mut over = Vec::new();
    for cycle in &loaded.cycles {
        let cfg = loaded.sim_config(methods.clone(), Some(cycle))?;
        let rep = run_cycle(&cfg, &models)?;
        let stem = file_safe(&cycle.name);
        for m in &rep.methods {
            let path = loaded.output_dir.join(format!("{stem}_{}_trace.csv", m.method));
            write_atomic(&path, &trace_csv(&m.trace))?;
            if m.infeasible_steps > a.max_infeasible {
                over.push(format!("{} on {}: {} infeasible steps", m.method, cycle.name, m.infeasible_steps));
            }
        }
        write_atomic(&loaded.output_dir.join(format!("{stem}_report.json")), &rep.to_json()?)?;
        reports.push(rep);
    }
    let table = comparison_table(&reports);
    write_atomic(&loaded.output_dir.join("comparison.csv"), &table.to_csv())?;
    let text = table.to_text();
    write_atomic(&loaded.output_dir.join("comparison.txt"), &text)?;
    print!("{text}");
    if !over.is_empty() {
        return Err(fail(
            5,
            format!("{} (allowed {})", over.join("; "), a.max_infeasible),
        ));
    }
    Ok(())
}

fn cmd_genmap(a: &GenmapArgs, seed: Option<u64>) -> CmdResult {
    let kind = match a.kind.as_str() {
        "type1" => fixtures::type1_kind(),
        "type2" => fixtures::type2_kind(),
        "convex" => fixtures::convex_kind(0.02),
        path => {
            let text = std::fs::read_to_string(path)?;
            let kind: SyntheticKind = serde_json::from_str(&text).map_err(Error::from)?;
            kind
        }
    };
    let mut map = generate_synthetic_map(&kind, &parse_grid(&a.speeds)?, &parse_grid(&a.torques)?)?;
    if a.noise > 0.0 {
        map = fixtures::perturb(&map, a.noise, seed.unwrap_or(0))?;
    }
    write_atomic(&a.output, &map.to_csv_string())
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.model)?;
    let model = LossModel::from_json(&text)?;
    let map = LossMap::from_csv_path(&a.map)?;
    if model.speeds != map.speeds() || model.max_torque() != map.max_torque() {
        return Err(fail(4, "model speed grid or torque range does not match the map"));
    }
    let checks = model.check_slices()?;
    let worst_d = checks.iter().min_by(|x, y| x.min_derivative.total_cmp(&y.min_derivative));
    let worst_p = checks.iter().min_by(|x, y| x.value_at_zero.total_cmp(&y.value_at_zero));
    if let (Some(d), Some(p)) = (worst_d, worst_p) {
        println!("worst min derivative: {:.6e} W/(N·m) at slice {} (ω = {})", d.min_derivative, d.index, d.omega);
        println!("worst loss at zero torque: {:.6e} W at slice {} (ω = {})", p.value_at_zero, p.index, p.omega);
    }
    let bad: Vec<_> = checks.iter().filter(|c| !c.ok()).collect();
    if bad.is_empty() {
        println!("all {} slices monotone and positive", checks.len());
        return Ok(());
    }
    let mut msg = format!("{} of {} slices violate invariants:", bad.len(), checks.len());
    for c in bad {
        let _ = write!(
            msg,
            "\n  slice {} (ω = {}): min derivative {:.6e}, loss at zero {:.6e}",
            c.index, c.omega, c.min_derivative, c.value_at_zero
        );
    }
    Err(fail(6, msg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.version {
        println!("{}", serde_json::json!({ "name": "torquesplit", "version": env!("CARGO_PKG_VERSION") }));
        return ExitCode::SUCCESS;
    }
    if cli.schema {
        let s = serde_json::json!({ "model": schema::model(), "config": schema::config() });
        println!("{}", serde_json::to_string_pretty(&s).expect("static schema"));
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let res = match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Allocate(a) => cmd_allocate(a, cli.seed),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Genmap(a) => cmd_genmap(a, cli.seed),
        Command::Validate(a) => cmd_validate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
