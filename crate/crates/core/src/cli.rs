//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{Correspondence, RunConfig, Scene};
use crate::error::{Error, Result};
use crate::geometry::calibrate_alpha;
use crate::harness::{emit_report, trials_csv, ReportFormat};
use crate::image::TactileImage;
use crate::json::to_string_sig6;
use crate::output::{PredictionRecord, RenderSidecar};
use crate::pipeline::predict_contact;
use crate::simulator::{add_noise, render_imprint};

#[derive(Debug, Parser)]
#[command(name = "fingertact", version, about = "Finger-shaped optical tactile sensor toolkit")]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "FINGERTACT_CONFIG")]
    pub config: Option<PathBuf>,

    /// Random seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report format printed by `experiment`: csv, md or json.
    #[arg(long, global = true)]
    pub format: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene into a difference-domain PNG and a JSON sidecar.
    Simulate {
        /// Scene file (TOML).
        scene: PathBuf,
    },
    /// Detect and localize a contact from a reference and a contact frame.
    Detect { reference: PathBuf, contact: PathBuf },
    /// Fit alpha from one annotated correspondence and write it to the config.
    Calibrate { correspondence: PathBuf },
    /// Run the simulated localization experiment.
    Experiment,
}

/// Process exit code for an error: 2 for configuration and input problems,
/// 1 for internal failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Internal(_) => 1,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn internal(e: impl std::fmt::Display) -> Error {
    Error::Internal(e.to_string())
}

/// Runs one invocation, writing data to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let format = cli.format.as_deref().map(str::parse::<ReportFormat>).transpose()?;
    match &cli.command {
        Command::Simulate { scene } => simulate(cli, scene, stdout),
        Command::Detect { reference, contact } => detect(cli, reference, contact, stdout),
        Command::Calibrate { correspondence } => calibrate(cli, correspondence, stdout),
        Command::Experiment => experiment(cli, format.unwrap_or(ReportFormat::Markdown), stdout),
    }
}

fn simulate(cli: &Cli, scene_path: &Path, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let scene = Scene::load(scene_path)?;
    let render = render_imprint(
        &scene.solid,
        &scene.pose.to_pose()?,
        &cfg.model()?,
        cfg.image_width,
        cfg.image_height,
        cfg.simulator.normalization,
    )?;
    let sigma = cfg.simulator.noise_sigma;
    let contact = add_noise(&render.image, sigma, cfg.seed.wrapping_add(1))?;
    let reference = add_noise(&TactileImage::zeros(cfg.image_width, cfg.image_height), sigma, cfg.seed)?;

    let dir = out_dir(cli)?;
    let stem = scene_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scene")
        .to_string();
    contact.save_png16(dir.join(format!("{stem}.png")))?;
    reference.save_png16(dir.join(format!("{stem}_reference.png")))?;
    let sidecar = RenderSidecar::new(&render).to_json()?;
    std::fs::write(dir.join(format!("{stem}.json")), &sidecar)?;
    stdout.write_all(sidecar.as_bytes())?;
    Ok(())
}

fn detect(cli: &Cli, reference: &Path, contact: &Path, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let reference = TactileImage::load_png(reference)?;
    let contact = TactileImage::load_png(contact)?;
    let pred = predict_contact(&reference, &contact, &cfg.pipeline, &cfg.intrinsics(), &cfg.geometry())?;
    stdout.write_all(PredictionRecord::new(pred.as_ref()).to_json()?.as_bytes())?;
    Ok(())
}

fn calibrate(cli: &Cli, correspondence: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let pair = Correspondence::load(correspondence)?;
    let fit = calibrate_alpha(&pair.pixel(), &pair.point(), pair.cx_px, pair.cy_px)?;
    cfg.alpha_px = fit.alpha;
    cfg.cx_px = pair.cx_px;
    cfg.cy_px = pair.cy_px;
    cfg.validate()?;

    let dest = match (&cli.out, &cli.config) {
        (Some(dir), _) => {
            std::fs::create_dir_all(dir)?;
            dir.join("config.toml")
        }
        (None, Some(path)) => path.clone(),
        (None, None) => {
            return Err(Error::Usage("calibrate needs --config or --out to know where to write".into()))
        }
    };
    cfg.save(&dest)?;
    let echo = serde_json::json!({
        "alpha_px": fit.alpha,
        "cx_px": pair.cx_px,
        "cy_px": pair.cy_px,
        "residual_mm": fit.residual_mm,
        "config": dest.display().to_string(),
    });
    let mut s = to_string_sig6(&echo).map_err(internal)?;
    s.push('\n');
    stdout.write_all(s.as_bytes())?;
    Ok(())
}

fn experiment(cli: &Cli, format: ReportFormat, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let exp = cfg.experiment()?;
    let outcome = exp.run(&cfg.harness.objects)?;
    let dir = out_dir(cli)?;
    std::fs::write(dir.join("trials.csv"), trials_csv(&outcome.trials))?;
    std::fs::write(dir.join("report.md"), emit_report(&outcome.report, ReportFormat::Markdown)?)?;
    std::fs::write(dir.join("report.csv"), emit_report(&outcome.report, ReportFormat::Csv)?)?;
    std::fs::write(dir.join("report.json"), emit_report(&outcome.report, ReportFormat::Json)?)?;
    stdout.write_all(emit_report(&outcome.report, format)?.as_bytes())?;
    Ok(())
}
