use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use rotman_core::beamspace::{monte_carlo, LensResponse};
use rotman_core::config::{parse_config, RunConfig};
use rotman_core::coupling::{
    observation_profile, simulate_doa, sweep, write_vector_csv, CouplingTable, LensModel,
};
use rotman_core::fdtd::export::write_field_binary;
use rotman_core::fdtd::{validate_line_source, ValidationConfig};
use rotman_core::geometry_csv::export_geometry;
use rotman_core::lens::{synthesize, LensGeometry};
use rotman_core::Error;

const OUTPUT_ENV: &str = "ROTMAN_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "rotman", version, about = "Rotman lens synthesis, FDTD coupling and beamspace uplink simulation")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config and the environment.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the lens geometry CSV.
    Synthesize,
    /// Simulate one direction of arrival.
    Doa(DoaArgs),
    /// Simulate every DoA of the sweep section and write the coupling table.
    Sweep,
    /// Monte Carlo uplink simulation.
    Sysim(SysimArgs),
    /// Compare the solver with the analytic line-source field.
    ValidateFdtd(ValidateArgs),
}

#[derive(Args, Debug)]
struct DoaArgs {
    /// Direction of arrival in degrees.
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Observation curve offset inside the beam contour (m).
    #[arg(long, default_value_t = 200e-6)]
    profile_offset: f64,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "lens_model")]
struct LensChoice {
    /// Coupling table from `sweep`; both models are simulated.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Simulate only the one-hot lens.
    #[arg(long)]
    ideal_only: bool,
}

#[derive(Args, Debug)]
struct SysimArgs {
    #[command(flatten)]
    lens: LensChoice,
    /// Trial count, overriding `system.trials`
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed, overriding `system.seed`
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Cells per guided wavelength.
    #[arg(long, default_value_t = 20.0)]
    resolution: f64,
    /// Grid nodes per side.
    #[arg(long, default_value_t = 300)]
    size: usize,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Failure { code: 2, error }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = if error.is_config_error() { 2 } else { 3 };
        Failure { code, error }
    }
}

type CmdResult<T> = Result<T, Failure>;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    config_hash: String,
    seed: Option<u64>,
    versions: Value,
    outputs: Vec<String>,
    summary: Value,
    config: &'a RunConfig,
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, command: &str, seed: Option<u64>, outputs: &[PathBuf], summary: Value) -> CmdResult<()> {
        let m = Manifest {
            command,
            argv: std::env::args().collect(),
            config_hash: self.cfg.hash(),
            seed,
            versions: json!({
                "rotman": env!("CARGO_PKG_VERSION"),
                "format": 1,
            }),
            outputs: outputs
                .iter()
                .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
                .collect(),
            summary,
            config: &self.cfg,
        };
        let path = self.path(&format!("{command}.manifest.json"));
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Failure::from(io_error(&path, e)))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn geometry(cfg: &RunConfig) -> CmdResult<LensGeometry> {
    let params = cfg.lens.params()?;
    Ok(synthesize(&params)?)
}

fn cmd_synthesize(ctx: &Context) -> CmdResult<()> {
    let g = geometry(&ctx.cfg)?;
    let path = ctx.path("geometry.csv");
    export_geometry(&g, &path)?;
    let summary = json!({
        "n_beam": g.n_beam(),
        "n_array": g.n_array(),
        "f1_m": g.f1,
        "eps_eff": g.eps_eff,
        "max_path_residual_m": rotman_core::lens::max_path_residual(&g),
    });
    ctx.manifest("synthesize", None, &[path], summary)
}

fn angle_tag(deg: f64) -> String {
    let s = format!("{deg}");
    s.replace('-', "m").replace('.', "p")
}

fn cmd_doa(ctx: &Context, args: &DoaArgs) -> CmdResult<()> {
    let g = geometry(&ctx.cfg)?;
    let model = LensModel::new(&g, &ctx.cfg.fdtd)?;
    let theta = args.theta.to_radians();
    let run = simulate_doa(theta, &model, true).map_err(|e| match e {
        Error::Domain(_) => Failure::config(e),
        other => Failure::from(other),
    })?;
    let tag = angle_tag(args.theta);
    let mut outputs = Vec::new();

    let vec_path = ctx.path(&format!("doa_{tag}.csv"));
    write_vector_csv(&run.vector, &vec_path)?;
    let v = &run.vector;
    let meta = json!({
        "theta_deg": args.theta,
        "peak_port": v.peak_port,
        "focus_fraction": v.focus_fraction,
        "spillover_fraction": v.spillover_fraction,
        "top_two_gap_db": v.top_two_gap_db(),
        "opposite_side_reflection": run.opposite_side_reflection(&g),
        "power_balance": run.balance,
        "energy_closure": run.balance.closure(),
        "resolution": ctx.cfg.fdtd.resolution,
    });
    let meta_path = ctx.path(&format!("doa_{tag}.csv.json"));
    write_json(&meta_path, &meta)?;
    outputs.push(vec_path);
    outputs.push(meta_path);

    let field = run.run.field.as_ref().expect("field requested");
    let profile = observation_profile(field, &model.grid, &g, args.profile_offset)?;
    let prof_path = ctx.path(&format!("profile_{tag}.csv"));
    profile.write_csv(&prof_path)?;
    outputs.push(prof_path);

    if ctx.cfg.output.field_map {
        let mag: Vec<f64> = field.iter().map(|z| z.norm()).collect();
        let p = ctx.path(&format!("field_{tag}.f64"));
        write_field_binary(&model.grid, &mag, "abs_ez_phasor", run.run.n_steps, 0.0, &p)?;
        outputs.push(p);
    }
    for (step, ez) in &run.run.snapshots {
        let p = ctx.path(&format!("snapshot_{tag}_{step:06}.f64"));
        write_field_binary(&model.grid, ez, "ez", *step, *step as f64 * run.run.dt, &p)?;
        outputs.push(p);
    }
    let maxima = profile.dominant_maxima(0.01, 0.5).len();
    let mut summary = meta;
    summary["profile_maxima"] = json!(maxima);
    ctx.manifest("doa", None, &outputs, summary)
}

fn write_json(path: &Path, v: &Value) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(v).expect("json serializes");
    fs::write(path, text + "\n").map_err(|e| Failure::from(io_error(path, e)))
}

fn cmd_sweep(ctx: &Context) -> CmdResult<()> {
    let g = geometry(&ctx.cfg)?;
    let model = LensModel::new(&g, &ctx.cfg.fdtd)?;
    let doas = ctx.cfg.sweep.doas()?;
    let table = sweep(&doas, &model)?;
    let path = ctx.path("coupling_table.csv");
    table.write(&path)?;
    let side = rotman_core::coupling::sidecar_path(&path);
    let summary = json!({
        "n_doas": doas.len(),
        "peak_ports": table.vectors.iter().map(|v| v.peak_port).collect::<Vec<_>>(),
        "spillover": table.vectors.iter().map(|v| v.spillover_fraction).collect::<Vec<_>>(),
    });
    ctx.manifest("sweep", None, &[path, side], summary)
}

fn cmd_sysim(ctx: &Context, args: &SysimArgs) -> CmdResult<()> {
    let lens = ctx.cfg.lens.params()?;
    let g = synthesize(&lens)?;
    let params = ctx.cfg.system.params(&lens)?;
    let trials = args.trials.unwrap_or(ctx.cfg.system.trials);
    let seed = args.seed.unwrap_or(ctx.cfg.system.seed);
    if trials == 0 {
        return Err(Failure::config(Error::Config {
            key: "trials".into(),
            msg: "must be >= 1".into(),
        }));
    }
    let mut models = vec![LensResponse::ideal(g.beam_angles())];
    if let Some(path) = &args.lens.table {
        let table = CouplingTable::read(path).map_err(Failure::config)?;
        if table.n_beam() != g.n_beam() {
            return Err(Failure::config(Error::Invalid(format!(
                "table has {} beam ports, lens has {}",
                table.n_beam(),
                g.n_beam()
            ))));
        }
        let (lo, hi) = table.range();
        let (a, b) = params.channel.scan_range;
        if lo > a || hi < b {
            return Err(Failure::config(Error::Invalid(format!(
                "table covers [{:.2}, {:.2}] deg, scan range is [{:.2}, {:.2}] deg",
                lo.to_degrees(),
                hi.to_degrees(),
                a.to_degrees(),
                b.to_degrees()
            ))));
        }
        models.push(LensResponse::aberrated(table)?);
    }
    let result = monte_carlo(&params, &models, trials, seed)?;
    let res_path = ctx.path("sysim_results.csv");
    let cdf_path = ctx.path("sysim_cdf.csv");
    result.write(&res_path, &cdf_path)?;
    let mut medians = serde_json::Map::new();
    for m in &result.models {
        let name = &m.model;
        medians.insert(
            name.clone(),
            json!({
                "desired_db": result.median(name, rotman_core::beamspace::Metric::Desired).map(|v| 10.0 * v.log10()),
                "interference_db": result.median(name, rotman_core::beamspace::Metric::Interference).map(|v| 10.0 * v.log10()),
                "degenerate": m.users.iter().map(|u| u.degenerate).sum::<usize>(),
            }),
        );
    }
    let summary = json!({
        "trials": trials,
        "table": args.lens.table.as_ref().map(|p| p.display().to_string()),
        "medians": medians,
    });
    ctx.manifest("sysim", Some(seed), &[res_path, cdf_path], summary)
}

fn cmd_validate(ctx: &Context, args: &ValidateArgs) -> CmdResult<()> {
    let vc = ValidationConfig {
        n: args.size,
        resolution: args.resolution,
        ..ValidationConfig::default()
    };
    let report = validate_line_source(&vc)?;
    let path = ctx.path("validate_fdtd.json");
    write_json(&path, &serde_json::to_value(&report).expect("report serializes"))?;
    let pass = report.passes(0.02, 3.0, 1e-6);
    ctx.manifest(
        "validate-fdtd",
        None,
        &[path],
        json!({
            "pass": pass,
            "max_magnitude_error": report.max_magnitude_error,
            "max_phase_error_deg": report.max_phase_error_deg,
            "final_energy_ratio": report.final_energy_ratio,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            error: Error::Invalid(format!(
                "line-source check failed: magnitude {:.3e}, phase {:.3} deg, energy {:.3e}",
                report.max_magnitude_error, report.max_phase_error_deg, report.final_energy_ratio
            )),
        })
    }
}

fn error_record(f: &Failure) -> Value {
    let (kind, key) = match &f.error {
        Error::Config { key, .. } => ("config", Some(key.clone())),
        Error::Parse { .. } => ("parse", None),
        Error::Io { .. } => ("io", None),
        _ if f.code == 2 => ("input", None),
        _ => ("numerical", None),
    };
    json!({
        "error": {
            "kind": kind,
            "key": key,
            "message": f.error.to_string(),
            "exit_code": f.code,
        }
    })
}

fn run(cli: Cli) -> CmdResult<()> {
    let cfg = match &cli.config {
        Some(p) => parse_config(p).map_err(Failure::config)?,
        None => {
            let c = RunConfig::default();
            c.validate().map_err(Failure::config)?;
            c
        }
    };
    let out = cli
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.directory.clone());
    fs::create_dir_all(&out).map_err(|e| Failure::config(io_error(&out, e)))?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(Error::Invalid(e.to_string())))?;
    }
    let ctx = Context { cfg, out };
    match &cli.command {
        Command::Synthesize => cmd_synthesize(&ctx),
        Command::Doa(a) => cmd_doa(&ctx, a),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Sysim(a) => cmd_sysim(&ctx, a),
        Command::ValidateFdtd(a) => cmd_validate(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", error_record(&f));
            ExitCode::from(f.code)
        }
    }
}
