//! `mcenergy`: simulate, linearize, validate logs and check sensor limits
//! from the command line.

mod error;
mod scenario;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use multicopter_energy::energy_aware::{simulate, validate_against_log, EcmModel, SimMode, ValidationOptions};
use multicopter_energy::fixtures::HOLYBRO_S500_V2_TOML;
use multicopter_energy::frames::EulerAngles;
use multicopter_energy::linear::{energy_aware_segment_model, LinearOptions};
use multicopter_energy::sensors::check_sensors;
use multicopter_energy::vehicle::UavState;
use multicopter_energy::{FlightLog, ModelConfig};
use nalgebra::Vector3;

use error::{code, CliError};
use scenario::{Overrides, Scenario};

/// Name that selects the shipped Holybro S500 V2 parameters when no file
/// of that name exists.
const BUILTIN_CONFIG: &str = "holybro_s500_v2";
const CONFIG_DIR_ENV: &str = "MCENERGY_CONFIG_DIR";
const DEFAULT_CONFIG_FILE: &str = "vehicle.toml";

#[derive(Debug, Parser)]
#[command(name = "mcenergy", version, about = "Energy-aware multicopter models")]
struct Cli {
    /// Vehicle config (TOML). Relative paths are also looked up in
    /// $MCENERGY_CONFIG_DIR, which supplies vehicle.toml when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (a directory with --sweep). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Time step, s.
    #[arg(long, global = true)]
    dt: Option<f64>,

    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Taylor-Lie discretization order for both model blocks.
    #[arg(long, global = true)]
    order: Option<usize>,

    /// OCV segment to linearize about, starting at 1.
    #[arg(long, global = true)]
    segment: Option<usize>,

    /// Run every *.toml scenario in this directory in parallel.
    #[arg(long, global = true)]
    sweep: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Nonlinear,
    Lpv,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nonlinear => SimMode::Nonlinear,
            ModeArg::Lpv => SimMode::LinearLpv,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write the trajectory as CSV.
    Simulate {
        /// Scenario file; a hover from a full battery when omitted.
        scenario: Option<PathBuf>,
        /// Horizon of the default hover scenario, s.
        #[arg(long, default_value_t = 300.0)]
        horizon: f64,
    },
    /// Write the discrete energy-aware model about hover as labeled CSV.
    Linearize,
    /// Replay flight logs through the four battery models.
    Validate {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Print camera and LiDAR bounds for a vehicle state.
    SensorCheck {
        /// Height above the target ground, m.
        #[arg(long, default_value_t = 30.0)]
        altitude: f64,
        /// Down coordinate of the ground, m.
        #[arg(long, default_value_t = 0.0)]
        ground: f64,
        /// Ground speed along north, m/s.
        #[arg(long, default_value_t = 0.0)]
        speed: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        roll_deg: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        pitch_deg: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        yaw_deg: f64,
        /// Camera target `x,y,z` (NED, m); the point below the vehicle by default.
        #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
        target: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.render().to_string().lines().next().unwrap_or("usage error").to_string());
            eprintln!("{}", err.json_line());
            let _ = e.print();
            return ExitCode::from(code::USAGE);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_line());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.sweep.is_some() && !matches!(cli.command, Command::Simulate { .. }) {
        return Err(CliError::Usage("--sweep only applies to simulate".into()));
    }
    if cli.order == Some(0) {
        return Err(CliError::Usage("--order must be at least 1".into()));
    }
    if cli.segment == Some(0) {
        return Err(CliError::Usage("--segment counts from 1".into()));
    }
    let cfg = load_config(cli.config.as_deref())?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    match &cli.command {
        Command::Simulate { scenario, horizon } => cmd_simulate(cli, &cfg, scenario.as_deref(), *horizon),
        Command::Linearize => cmd_linearize(cli, &cfg),
        Command::Validate { logs } => cmd_validate(cli, &cfg, logs),
        Command::SensorCheck {
            altitude,
            ground,
            speed,
            roll_deg,
            pitch_deg,
            yaw_deg,
            target,
        } => {
            let state = UavState {
                position: Vector3::new(0.0, 0.0, ground - altitude),
                velocity: Vector3::new(*speed, 0.0, 0.0),
                attitude: EulerAngles::new(roll_deg.to_radians(), pitch_deg.to_radians(), yaw_deg.to_radians()),
                ..Default::default()
            };
            let target = target.as_ref().map(|t| Vector3::new(t[0], t[1], t[2]));
            cmd_sensor_check(cli, &cfg, &state, *ground, target)
        }
    }
}

fn resolve_config(arg: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
    let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
    let Some(arg) = arg else {
        let dir = dir.ok_or_else(|| {
            CliError::Usage(format!("no --config given and {CONFIG_DIR_ENV} is not set"))
        })?;
        let p = dir.join(DEFAULT_CONFIG_FILE);
        return if p.is_file() { Ok(Some(p)) } else { Err(CliError::ConfigNotFound(p)) };
    };
    if arg.is_file() {
        return Ok(Some(arg.to_path_buf()));
    }
    if arg.is_relative() {
        if let Some(p) = dir.map(|d| d.join(arg)).filter(|p| p.is_file()) {
            return Ok(Some(p));
        }
    }
    if arg.as_os_str() == BUILTIN_CONFIG {
        return Ok(None);
    }
    Err(CliError::ConfigNotFound(arg.to_path_buf()))
}

fn load_config(arg: Option<&Path>) -> Result<ModelConfig, CliError> {
    Ok(match resolve_config(arg)? {
        Some(path) => ModelConfig::from_path(&path)?,
        None => ModelConfig::from_toml_str(HOLYBRO_S500_V2_TOML, BUILTIN_CONFIG)?,
    })
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        dt: cli.dt,
        mode: cli.mode.map(SimMode::from),
        order: cli.order,
    }
}

/// Runs one scenario and writes its trajectory; returns the final SoC.
fn run_scenario(cfg: &ModelConfig, sc: &Scenario, label: &Path, ov: Overrides, out: Option<&Path>) -> Result<f64, CliError> {
    let prep = sc.prepare(cfg, ov, label)?;
    let traj = simulate(&prep.x0, &prep.inputs, &prep.wind, cfg, &prep.options)?;
    let mut w = open_out(out)?;
    traj.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))?;
    Ok(traj.last().output.soc)
}

fn cmd_simulate(cli: &Cli, cfg: &ModelConfig, scenario: Option<&Path>, horizon: f64) -> Result<(), CliError> {
    let ov = overrides(cli);
    if let Some(dir) = &cli.sweep {
        return sweep(cfg, dir, cli.out.as_deref(), ov);
    }
    let (sc, label) = match scenario {
        Some(p) => (Scenario::from_path(p)?, p.to_path_buf()),
        None => (Scenario::hover(horizon), PathBuf::from("<hover>")),
    };
    let soc = run_scenario(cfg, &sc, &label, ov, cli.out.as_deref())?;
    if let Some(out) = &cli.out {
        println!("wrote {}; final SoC {soc:.6}", out.display());
    }
    Ok(())
}

fn sweep(cfg: &ModelConfig, dir: &Path, out: Option<&Path>, ov: Overrides) -> Result<(), CliError> {
    let out = out.ok_or_else(|| CliError::Usage("--sweep needs --out <directory>".into()))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no *.toml scenarios in {}", dir.display())));
    }
    let results: Vec<Result<f64, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| {
                s.spawn(move || {
                    let sc = Scenario::from_path(f)?;
                    let target = out.join(f.file_stem().unwrap()).with_extension("csv");
                    run_scenario(cfg, &sc, f, ov, Some(&target))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut first_err = None;
    for (f, r) in files.iter().zip(results) {
        let name = f.file_name().unwrap().to_string_lossy();
        match r {
            Ok(soc) => println!("{name}: ok, final SoC {soc:.6}"),
            Err(e) => {
                println!("{name}: failed ({})", e.kind());
                eprintln!("{}", e.json_line());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_linearize(cli: &Cli, cfg: &ModelConfig) -> Result<(), CliError> {
    let mut opts = LinearOptions::default();
    if let Some(dt) = cli.dt {
        opts.dt = dt;
    }
    if let Some(o) = cli.order {
        opts.vehicle_order = o;
        opts.ecm_order = o;
    }
    let segment = cli.segment.unwrap_or(1) - 1;
    let (sp, model) = energy_aware_segment_model(&cfg.vehicle, &cfg.battery, &cfg.motor, segment, &opts)?;
    let mut w = open_out(cli.out.as_deref())?;
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    model.write_labeled_csv(&mut w).map_err(|e| CliError::io(&path, e))?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    if cli.out.is_some() {
        println!(
            "segment {}: T_SP {:.4} N, Omega_SP {:.2} rad/s, i_SP {:.4} A, {}x{} A_d",
            segment + 1,
            sp.thrust,
            sp.motor_speed,
            sp.i_b,
            model.state_dim(),
            model.state_dim()
        );
    }
    Ok(())
}

struct ModelRow {
    model: EcmModel,
    report: Option<multicopter_energy::ValidationReport>,
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}

fn cmd_validate(cli: &Cli, cfg: &ModelConfig, logs: &[PathBuf]) -> Result<(), CliError> {
    let mut table: Vec<(String, Vec<ModelRow>)> = Vec::new();
    for path in logs {
        let log = FlightLog::from_path(path)?;
        let mut rows = Vec::new();
        for model in EcmModel::ALL {
            let report = match validate_against_log(&log, cfg, &ValidationOptions::new(model)) {
                Ok(r) => Some(r),
                // a model whose OCV curve is not configured is skipped
                Err(multicopter_energy::Error::InvalidParameter { .. }) if model.battery(cfg).is_err() => None,
                Err(e) => return Err(e.into()),
            };
            rows.push(ModelRow { model, report });
        }
        table.push((path.display().to_string(), rows));
    }

    let width = table.iter().map(|(n, _)| n.len()).max().unwrap_or(3).max(3);
    println!("SoC estimation error f_error [%] after 300 s (* = end of a shorter log)");
    print!("{:width$}", "log");
    for m in EcmModel::ALL {
        print!("  {:>10}", m.name());
    }
    println!();
    for (name, rows) in &table {
        print!("{name:width$}");
        for r in rows {
            let cell = match &r.report {
                Some(rep) => match rep.f_error_window {
                    Some(f) => format!("{f:.4}"),
                    None => format!("{:.4}*", rep.f_error_end),
                },
                None => "n/a".into(),
            };
            print!("  {cell:>10}");
        }
        println!();
    }
    println!();
    println!(
        "{:width$}  {:>10}  {:>12}  {:>12}  {:>10}  {:>10}  {:>8}",
        "log", "model", "f_err_300s", "f_err_end", "rms_u_b", "rms_i_b", "partial"
    );
    for (name, rows) in &table {
        for r in rows {
            let rep = r.report.as_ref();
            println!(
                "{name:width$}  {:>10}  {:>12}  {:>12}  {:>10}  {:>10}  {:>8}",
                r.model.name(),
                fmt_opt(rep.and_then(|x| x.f_error_window), 4),
                fmt_opt(rep.map(|x| x.f_error_end), 4),
                fmt_opt(rep.map(|x| x.rms_voltage), 4),
                fmt_opt(rep.map(|x| x.rms_current), 4),
                rep.map_or("n/a".into(), |x| x.partial.to_string()),
            );
        }
    }

    if let Some(out) = &cli.out {
        let mut w = open_out(Some(out))?;
        let mut body = String::from("log,model,f_error_300s,f_error_end,rms_u_b,rms_i_b,partial,duration\n");
        for (name, rows) in &table {
            for r in rows {
                let rep = r.report.as_ref();
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                body.push_str(&format!(
                    "{name},{},{},{},{},{},{},{}\n",
                    r.model.name(),
                    opt(rep.and_then(|x| x.f_error_window)),
                    opt(rep.map(|x| x.f_error_end)),
                    opt(rep.map(|x| x.rms_voltage)),
                    opt(rep.map(|x| x.rms_current)),
                    rep.map(|x| x.partial.to_string()).unwrap_or_default(),
                    opt(rep.map(|x| x.duration)),
                ));
            }
        }
        w.write_all(body.as_bytes()).map_err(|e| CliError::io(out, e))?;
        w.flush().map_err(|e| CliError::io(out, e))?;
    }
    Ok(())
}

fn cmd_sensor_check(
    cli: &Cli,
    cfg: &ModelConfig,
    state: &UavState,
    ground: f64,
    target: Option<Vector3<f64>>,
) -> Result<(), CliError> {
    if cfg.camera.is_none() && cfg.lidar.is_none() {
        return Err(CliError::NoSensorConfigured);
    }
    let check = check_sensors(state, ground, target, cfg.camera.as_ref(), cfg.lidar.as_ref(), &cfg.vehicle)?;
    if let Some(c) = &check.camera {
        println!("camera.d_max_m = {:.4}", c.d_max);
        println!("camera.v_g_max_m_s = {:.4}", c.v_g_max);
        if let Some(a) = &c.alignment {
            println!("camera.chi_rad = {:.6}", a.chi);
            println!("camera.chi_bound_rad = {:.6}", a.bound);
        }
    }
    if let Some(g) = &check.lidar_ground {
        println!("lidar.d_max_density_m = {:.4}", g.d_max_density);
        println!("lidar.d_max_range_m = {:.4}", g.d_max_range);
        println!("lidar.d_max_m = {:.4}", g.d_max);
        println!("lidar.v_g_max_m_s = {:.4}", g.v_g_max);
    }
    if let Some(o) = &check.lidar_obstacle {
        println!("lidar.v_g_max_m_s = {:.4}", o.v_g_max);
        println!("lidar.alpha_max_sensor_deg = {:.4}", o.alpha_max_sensor.to_degrees());
        println!("lidar.alpha_max_deg = {:.4}", o.alpha_max_effective.to_degrees());
    }
    for c in &check.report.checks {
        let bound = c.upper.or(c.lower).unwrap_or(f64::NAN);
        println!(
            "check {} = {:.6} (bound {:.6}): {}",
            c.name,
            c.value,
            bound,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(out) = &cli.out {
        let json = serde_json::to_string_pretty(&check).expect("sensor report serializes");
        std::fs::write(out, json + "\n").map_err(|e| CliError::io(out, e))?;
    }
    Ok(())
}
