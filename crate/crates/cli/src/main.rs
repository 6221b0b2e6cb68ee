use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use esfe_core::bench::{run_experiment, write_csv, write_pgm, Case, ExperimentConfig, Method, SelectOptions};
use esfe_core::energy::{NoiseMode, DEFAULT_BLOCK_SIZE};
use esfe_core::localizer::SearchSchedule;
use esfe_core::scene::{load_wav, synth_source, SampledSignal, Scene, SynthSpec};
use esfe_core::selection::{SelectionMethod, DEFAULT_KAPPA, DEFAULT_MARGIN_FRACTION, MIN_SELECTED};
use esfe_core::stationarity::{ins, InsConfig, DEFAULT_SCALES, DEFAULT_SURROGATES};

#[derive(Parser)]
#[command(name = "esfe", version, about = "Acoustic scene simulation, energy localization and sensor selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index of non-stationarity of a WAV file or a synthetic source.
    Ins(InsArgs),
    /// Pick sensors for one scene.
    Select(SelectArgs),
    /// Localize the target of one scene block by block.
    Localize(LocalizeArgs),
    /// Experiment sweeps and cost maps.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct InsArgs {
    /// WAV path, or a synthetic spec such as `burst_train:period=0.25,duty=0.5`.
    source: String,
    /// Window lengths as fractions of the signal length.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_SURROGATES)]
    surrogates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length of a synthetic source in seconds.
    #[arg(long, default_value_t = 3.0)]
    duration: f64,
    /// Sample rate of a synthetic source.
    #[arg(long, default_value_t = 16000.0)]
    rate: f64,
}

#[derive(Args)]
struct SceneArgs {
    /// Scene TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scene SNR in dB (`inf` for no noise).
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, value_enum, default_value_t = NoiseArg::Oracle)]
    noise: NoiseArg,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Oracle,
    Blind,
}

impl From<NoiseArg> for NoiseMode {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Oracle => NoiseMode::Oracle,
            NoiseArg::Blind => NoiseMode::Blind,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Esfe,
    Snr,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_enum)]
    method: SelectArg,
    /// Fixed threshold instead of the one derived from scene size and sensor count.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xi: f64,
    #[arg(long, default_value_t = 20)]
    surrogates: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ml,
    Hml,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ml => Method::Ml,
            MethodArg::Hml => Method::Hml,
        }
    }
}

#[derive(Args)]
struct LocalizeArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, group = "selector")]
    esfe: bool,
    #[arg(long = "snr-select", group = "selector")]
    snr_select: bool,
    #[arg(long = "all-sensors", group = "selector")]
    all_sensors: bool,
    /// Search resolution in metres; defaults to 1/200 of the larger scene side.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 20)]
    surrogates: usize,
    /// Skip blocks that still hold propagation-delay padding.
    #[arg(long)]
    skip_warmup: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run an experiment file and write one CSV row per configuration.
    Run(BenchRunArgs),
    /// Write the localization cost over the scene as a PGM image.
    Map(BenchMapArgs),
}

#[derive(Args)]
struct BenchRunArgs {
    /// Experiment TOML file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Add selection and INS timings as extra columns.
    #[arg(long)]
    profile: bool,
}

#[derive(Args)]
struct BenchMapArgs {
    /// Experiment or scene TOML file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    cell: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Hml)]
    method: MethodArg,
    /// Block to map; defaults to the one with the most target energy.
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if threads > 0 {
        // ignore: a global pool can only be set once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match cli.command {
        Command::Ins(a) => cmd_ins(a),
        Command::Select(a) => cmd_select(a),
        Command::Localize(a) => cmd_localize(a),
        Command::Bench(BenchCommand::Run(a)) => cmd_bench_run(a, threads),
        Command::Bench(BenchCommand::Map(a)) => cmd_bench_map(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn threads_from_env() -> CliResult<usize> {
    match std::env::var("ESFE_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| format!("ESFE_THREADS must be a non-negative integer, got `{v}`").into()),
        _ => Ok(0),
    }
}

fn load_source(a: &InsArgs) -> CliResult<SampledSignal> {
    let path = Path::new(&a.source);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) || path.is_file() {
        return Ok(load_wav(path)?);
    }
    let text = a.source.strip_prefix("synth:").unwrap_or(&a.source);
    let spec: SynthSpec = text.parse()?;
    Ok(synth_source(&spec, a.duration, a.rate, a.seed)?)
}

fn cmd_ins(a: InsArgs) -> CliResult<ExitCode> {
    let signal = load_source(&a)?;
    let cfg = InsConfig {
        scales: a.scales.clone().unwrap_or_else(|| DEFAULT_SCALES.to_vec()),
        ..InsConfig::default()
    }
    .with_surrogates(a.surrogates)
    .with_seed(a.seed);
    let profile = ins(&signal, &cfg)?;
    let mut out = io::stdout().lock();
    writeln!(out, "scale,ins,gamma,verdict")?;
    for ((s, v), g) in profile.scales.iter().zip(&profile.ins_values).zip(&profile.thresholds) {
        let verdict = if v > g { "nonstationary" } else { "stationary" };
        writeln!(out, "{s},{v:.6},{g:.6},{verdict}")?;
    }
    writeln!(out, "INS_max {:.6} {}", profile.ins_max, profile.classification)?;
    Ok(ExitCode::SUCCESS)
}

fn load_scene(a: &SceneArgs) -> CliResult<Scene> {
    let mut scene = Scene::load(&a.config)?;
    if let Some(seed) = a.seed {
        scene.seed = seed;
    }
    if let Some(snr) = a.snr {
        scene.snr_db = snr;
    }
    Ok(scene)
}

fn select_options(alpha: Option<f64>, xi: f64, surrogates: usize, resolution: f64) -> SelectOptions {
    SelectOptions {
        alpha,
        kappa: DEFAULT_KAPPA,
        xi,
        margin_fraction: DEFAULT_MARGIN_FRACTION,
        min_selected: MIN_SELECTED,
        resolution,
        ins_surrogates: surrogates,
    }
}

fn cmd_select(a: SelectArgs) -> CliResult<ExitCode> {
    let scene = load_scene(&a.scene)?;
    let resolution = scene.largest_dimension() / 200.0;
    let mut case = Case::prepare(scene, a.scene.block_size, a.scene.noise.into(), false)?;
    let opts = select_options(a.alpha, a.xi, a.surrogates, resolution);
    let mut out = io::stdout().lock();
    let ids: Vec<String> = case.scene.sensors.iter().map(|s| s.id.clone()).collect();
    let selection = match a.method {
        SelectArg::Esfe => {
            let values = case.ins_max(a.surrogates)?.to_vec();
            writeln!(out, "sensor,ins_max")?;
            for (id, v) in ids.iter().zip(&values) {
                writeln!(out, "{id},{v:.6}")?;
            }
            let sel = case.select(SelectionMethod::Esfe, &opts)?;
            writeln!(out, "alpha {:.4}", sel.alpha)?;
            sel
        }
        SelectArg::Snr => {
            let scores = case.snr_scores()?;
            writeln!(out, "sensor,snr_post")?;
            for (id, v) in ids.iter().zip(&scores.snr_post) {
                writeln!(out, "{id},{v:.6}")?;
            }
            let sel = case.select(SelectionMethod::Snr, &opts)?;
            writeln!(out, "keep top {}", sel.selected_ids.len())?;
            sel
        }
    };
    let r = selection.area.rect();
    writeln!(out, "selected {}", selection.selected_ids.join(" "))?;
    writeln!(out, "area x {}..{} y {}..{}", r.x_min, r.x_max, r.y_min, r.y_max)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_localize(a: LocalizeArgs) -> CliResult<ExitCode> {
    let scene = load_scene(&a.scene)?;
    let resolution = a.resolution.unwrap_or(scene.largest_dimension() / 200.0);
    let mut case = Case::prepare(scene, a.scene.block_size, a.scene.noise.into(), a.skip_warmup)?;
    let selector = if a.esfe {
        SelectionMethod::Esfe
    } else if a.snr_select {
        SelectionMethod::Snr
    } else {
        SelectionMethod::All
    };
    let opts = select_options(a.alpha, 0.0, a.surrogates, resolution);
    let selection = case.select(selector, &opts)?;
    let loc = case.localize(a.method.into(), &selection, &SearchSchedule::default())?;
    let truth = case.target_position();
    let mut out = io::stdout().lock();
    writeln!(out, "selected {}", selection.selected_ids.join(" "))?;
    writeln!(out, "block,x,y,energy,error_m")?;
    for (q, e) in case.blocks.clone().zip(&loc.estimates) {
        writeln!(
            out,
            "{q},{:.4},{:.4},{:.6e},{:.4}",
            e.position.x,
            e.position.y,
            e.source_energy,
            e.position.distance(&truth)
        )?;
    }
    writeln!(out, "truth {:.4} {:.4}", truth.x, truth.y)?;
    writeln!(out, "rmse {:.6}", loc.rmse)?;
    match &loc.crlb {
        Ok(c) => writeln!(out, "crlb {c:.6}")?,
        Err(e) => writeln!(out, "crlb unavailable: {e}")?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench_run(a: BenchRunArgs, threads: usize) -> CliResult<ExitCode> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.profile |= a.profile;
    if threads > 0 {
        cfg.threads = threads;
    }
    let out = a
        .out
        .or(cfg.output.clone())
        .ok_or("no output path: pass --out or set `output` in the config")?;
    let rows = run_experiment(&cfg)?;
    let mut w = BufWriter::new(File::create(&out)?);
    write_csv(&mut w, &rows, cfg.profile)?;
    w.flush()?;
    let failed = rows.iter().filter(|r| r.is_failed()).count();
    eprintln!("{} rows written to {}, {failed} failed", rows.len(), out.display());
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn map_scene(a: &BenchMapArgs) -> CliResult<(Scene, usize, NoiseMode, bool)> {
    match ExperimentConfig::load(&a.config) {
        Ok(cfg) => {
            let snr = cfg.snr_list[0];
            let scene = cfg.scene.instantiate(snr, a.seed.unwrap_or(cfg.seed))?;
            Ok((scene, cfg.block_size, cfg.noise_mode, cfg.skip_warmup))
        }
        Err(experiment_err) => match Scene::load(&a.config) {
            Ok(mut scene) => {
                if let Some(seed) = a.seed {
                    scene.seed = seed;
                }
                Ok((scene, DEFAULT_BLOCK_SIZE, NoiseMode::Oracle, false))
            }
            Err(scene_err) => Err(format!(
                "{} is neither an experiment file ({experiment_err}) nor a scene file ({scene_err})",
                a.config.display()
            )
            .into()),
        },
    }
}

fn cmd_bench_map(a: BenchMapArgs) -> CliResult<ExitCode> {
    let (scene, block_size, noise, skip_warmup) = map_scene(&a)?;
    let case = Case::prepare(scene, block_size, noise, skip_warmup)?;
    let block = a.block.unwrap_or_else(|| case.loudest_block());
    let map = case.energy_map(a.method.into(), block, a.cell)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    write_pgm(&mut w, &map)?;
    w.flush()?;
    let best = map.argmin().ok_or("every cell is too close to a sensor")?;
    let truth = case.target_position();
    eprintln!(
        "block {block}: {}x{} cells, minimum at ({:.2}, {:.2}), target at ({:.2}, {:.2})",
        map.nx, map.ny, best.x, best.y, truth.x, truth.y
    );
    Ok(ExitCode::SUCCESS)
}
