//! The `bandsel` command line.
//!
//! Stages talk through files in the output directory:
//! `manifest.json` → `search.json` + `correlation.csv` → `selection_m{M}.json`
//! → `summary.json` and CSV tables → `report.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::correlation::{band_correlation, CorrelationMatrix};
use crate::error::{ensure, Error, Result};
use crate::eval::{
    ablation_m_beta, compare_methods, train_and_predict, write_ablation_csv, write_comparison_csv, LabelledRun,
    Summary,
};
use crate::hypercube::{load_cube, save_cube, split_train_val, synth_dataset, Mixing, SpectralCube, SynthConfig, TrainVal};
use crate::metrics::{write_image_csv, write_per_wavelength_csv};
use crate::oracle::{exhaustive_search, write_ranking_csv};
use crate::recovery::ModelKind;
use crate::relax_search::{bilevel_search, spectral_mode_search, SearchConfig, SearchMode, SearchRecord};
use crate::select::{m_equal_split_search, manual_selection, select_bands, SelectionMethod, SelectionResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SEARCH_FILE: &str = "search.json";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.csv";

/// RGB-like targets used by the manual baseline when none are given.
pub const DEFAULT_MANUAL_TARGETS: [f64; 3] = [630.0, 530.0, 470.0];

#[derive(Debug, Parser)]
#[command(name = "bandsel", version, about = "One-shot hyperspectral band selection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for generation, splitting, initialization and shuffling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for oracle scoring and multi-run eval (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic cubes and a manifest.
    Synth(SynthArgs),
    /// Band-wise correlation of the training split.
    Corr(CorrArgs),
    /// Run the relaxed band search.
    Search(SearchArgs),
    /// Read selections of several sizes off one search.
    Select(SelectArgs),
    /// Train recovery models on selections and score them.
    Eval(EvalArgs),
    /// Collect summary files into one table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    pub bands: usize,
    #[arg(long, default_value_t = 8)]
    pub height: usize,
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub latents: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Band pair `i:j` forcing band j to equal band i; repeatable.
    #[arg(long = "duplicate", value_parser = parse_pair)]
    pub duplicates: Vec<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = MixingArg::Random)]
    pub mixing: MixingArg,
    #[arg(long, default_value_t = 6)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MixingArg {
    Random,
    Identity,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
}

/// Overrides on top of the search defaults.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Training epochs [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Model learning rate, cosine annealed [default: 0.0004]
    #[arg(long)]
    pub lr_w: Option<f64>,
    /// Gate learning rate; 0 freezes the gates [default: 0.0004]
    #[arg(long)]
    pub lr_alpha: Option<f64>,
    /// Weight of the squared L2 penalty on gate logits [default: 0.01]
    #[arg(long)]
    pub l2_alpha: Option<f64>,
    /// Share of cubes held out for validation [default: 0.2]
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// linear-per-pixel, mlp-per-pixel or conv-spatial [default: conv-spatial]
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Hidden width of the MLP and conv models [default: 16]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Odd conv kernel size [default: 3]
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Cubes per minibatch [default: 12]
    #[arg(long)]
    pub batch: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self, seed: u64, beta: Option<f64>) -> Result<SearchConfig> {
        let d = SearchConfig::default();
        let config = SearchConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            lr_w: self.lr_w.unwrap_or(d.lr_w),
            lr_alpha: self.lr_alpha.unwrap_or(d.lr_alpha),
            l2_alpha: self.l2_alpha.unwrap_or(d.l2_alpha),
            val_fraction: self.val_fraction.unwrap_or(d.val_fraction),
            beta: beta.unwrap_or(d.beta),
            model_kind: self.model.unwrap_or(d.model_kind),
            hidden: self.hidden.unwrap_or(d.hidden),
            kernel: self.kernel.unwrap_or(d.kernel),
            seed,
            batch: self.batch.unwrap_or(d.batch),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Nbs,
    Spectral,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Nbs)]
    pub mode: ModeArg,
    /// Suppression exponent recorded with the search [default: 0.5]
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// `search.json` from a previous search.
    #[arg(long)]
    pub search: Option<PathBuf>,
    /// Selection sizes, e.g. `2,3,4`.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Defaults to the beta recorded in the search.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Manual baseline: nearest bands to these wavelengths (nm).
    #[arg(long, value_delimiter = ',')]
    pub manual: Vec<f64>,
    /// Source of wavelengths for `--manual` when no search is given.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Selection files to evaluate one by one.
    #[arg(long, value_delimiter = ',')]
    pub selection: Vec<PathBuf>,
    /// `search.json` for the ablation and the nbs comparison entry.
    #[arg(long)]
    pub search: Option<PathBuf>,
    /// M x beta table from a single search.
    #[arg(long)]
    pub ablation: bool,
    /// Comparison of methods at one M, e.g. `nbs,manual`.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<SelectionMethod>,
    /// Exhaustive least-squares ranking for each M.
    #[arg(long)]
    pub oracle: bool,
    /// Selection sizes for --ablation and --oracle; a single size for --compare
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Suppression exponents for --ablation; --compare uses the first
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Wavelengths for the manual entry of `--compare`.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<f64>,
    /// Also write per-wavelength PSNR tables.
    #[arg(long)]
    pub per_wavelength: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more `summary.json` files.
    #[arg(long, value_delimiter = ',', required = true)]
    pub summary: Vec<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected i:j, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Generator settings plus the cube files they produced, relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: SynthConfig,
    pub count: usize,
    pub cubes: Vec<String>,
}

impl Manifest {
    pub fn load_cubes(&self, dir: &Path) -> Result<Vec<SpectralCube>> {
        self.cubes.iter().map(|name| load_cube(dir.join(name))).collect()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_manifest(path: &Path) -> Result<(Manifest, Vec<SpectralCube>)> {
    let manifest: Manifest = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let cubes = manifest.load_cubes(dir)?;
    ensure!(cubes.len() >= 2, Invalid, "{} lists {} cubes; need at least 2", path.display(), cubes.len());
    Ok((manifest, cubes))
}

fn load_split(path: &Path, val_fraction: f64, seed: u64) -> Result<TrainVal> {
    let (_, cubes) = load_manifest(path)?;
    split_train_val(&cubes, val_fraction, seed)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn require_file(path: &Path) -> Result<()> {
    ensure!(path.is_file(), Invalid, "{} does not exist", path.display());
    Ok(())
}

/// Writes `count` cube pairs and `manifest.json`.
pub fn cmd_synth(global: &GlobalArgs, args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let generator = SynthConfig {
        bands: args.bands,
        height: args.height,
        width: args.width,
        latents: args.latents,
        noise_sigma: args.noise,
        duplicate_pairs: args.duplicates.clone(),
        mixing: match args.mixing {
            MixingArg::Random => Mixing::Random,
            MixingArg::Identity => Mixing::Identity,
        },
        seed: global.seed,
    };
    generator.validate()?;
    ensure!(args.count >= 1, Invalid, "count must be >= 1");
    let cubes = synth_dataset(&generator, args.count)?;
    prepare_out(&global.out)?;
    let mut names = Vec::with_capacity(cubes.len());
    for (i, cube) in cubes.iter().enumerate() {
        let name = format!("cube_{i:03}.json");
        save_cube(cube, global.out.join(&name))?;
        names.push(name);
    }
    let manifest = Manifest {
        generator,
        count: args.count,
        cubes: names,
    };
    let path = global.out.join(MANIFEST_FILE);
    write_json(&manifest, &path)?;
    Ok(vec![path])
}

pub fn cmd_corr(global: &GlobalArgs, args: &CorrArgs) -> Result<Vec<PathBuf>> {
    require_file(&args.manifest)?;
    ensure!(
        args.val_fraction > 0.0 && args.val_fraction < 1.0,
        Invalid,
        "val_fraction must be in (0, 1)"
    );
    let data = load_split(&args.manifest, args.val_fraction, global.seed)?;
    prepare_out(&global.out)?;
    let path = global.out.join(CORRELATION_FILE);
    band_correlation(&data.train)?.write_csv(&path)?;
    Ok(vec![path])
}

/// Writes `search.json` and the correlation matrix it refers to.
pub fn cmd_search(global: &GlobalArgs, args: &SearchArgs) -> Result<Vec<PathBuf>> {
    require_file(&args.manifest)?;
    let config = args.config.resolve(global.seed, args.beta)?;
    let data = load_split(&args.manifest, config.val_fraction, global.seed)?;
    let result = match args.mode {
        ModeArg::Nbs => bilevel_search(&data, &config)?,
        ModeArg::Spectral => spectral_mode_search(&data, &config)?,
    };
    prepare_out(&global.out)?;
    let corr_path = global.out.join(CORRELATION_FILE);
    result.correlation.write_csv(&corr_path)?;
    let record = SearchRecord::from_result(&result, CORRELATION_FILE);
    let path = global.out.join(SEARCH_FILE);
    write_json(&record, &path)?;
    Ok(vec![path, corr_path])
}

fn load_search(path: &Path) -> Result<(SearchRecord, CorrelationMatrix)> {
    require_file(path)?;
    let record: SearchRecord = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let corr = CorrelationMatrix::read_csv(dir.join(&record.correlation_path))?;
    ensure!(
        corr.size() == record.priorities.len(),
        Shape,
        "correlation is {0}x{0} but the search has {1} bands",
        corr.size(),
        record.priorities.len()
    );
    Ok((record, corr))
}

pub fn selection_file_name(sel: &SelectionResult) -> String {
    match sel.method {
        SelectionMethod::Nbs => format!("selection_m{}.json", sel.m),
        other => format!("selection_{}_m{}.json", other.name(), sel.m),
    }
}

/// One selection file per M, all read off a single search.
pub fn cmd_select(global: &GlobalArgs, args: &SelectArgs) -> Result<Vec<PathBuf>> {
    ensure!(
        !args.m.is_empty() || !args.manual.is_empty(),
        Invalid,
        "nothing to select: pass --m and/or --manual"
    );
    let mut selections = Vec::new();
    let mut wavelengths = None;
    if let Some(path) = &args.search {
        let (record, corr) = load_search(path)?;
        let beta = args.beta.unwrap_or(record.config.beta);
        for &m in &args.m {
            let mut sel = select_bands(&record.priorities, &corr, m, beta, &record.wavelengths_nm)?;
            if record.mode == SearchMode::Spectral {
                sel.method = SelectionMethod::Spectral;
            }
            selections.push(sel);
        }
        wavelengths = Some(record.wavelengths_nm);
    } else {
        ensure!(args.m.is_empty(), Invalid, "--m needs --search");
    }
    if !args.manual.is_empty() {
        let wl = match (wavelengths, &args.manifest) {
            (Some(wl), _) => wl,
            (None, Some(manifest)) => {
                require_file(manifest)?;
                load_manifest(manifest)?.1[0].wavelengths_nm().to_vec()
            }
            (None, None) => return Err(Error::Invalid("--manual needs --search or --manifest".into())),
        };
        selections.push(manual_selection(&wl, &args.manual)?);
    }
    prepare_out(&global.out)?;
    selections
        .iter()
        .map(|sel| {
            let path = global.out.join(selection_file_name(sel));
            write_json(sel, &path)?;
            Ok(path)
        })
        .collect()
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Trains and scores every requested run; writes CSV tables and `summary.json`.
pub fn cmd_eval(global: &GlobalArgs, args: &EvalArgs) -> Result<Vec<PathBuf>> {
    require_file(&args.manifest)?;
    args.selection.iter().try_for_each(|p| require_file(p))?;
    if let Some(p) = &args.search {
        require_file(p)?;
    }
    let modes = [!args.selection.is_empty(), args.ablation, !args.compare.is_empty(), args.oracle];
    ensure!(
        modes.iter().filter(|&&x| x).count() == 1,
        Invalid,
        "choose exactly one of --selection, --ablation, --compare, --oracle"
    );
    let config = args.config.resolve(global.seed, args.beta.first().copied())?;
    let data = load_split(&args.manifest, config.val_fraction, global.seed)?;
    let kind = config.model_kind;
    prepare_out(&global.out)?;
    let mut written = Vec::new();

    if args.oracle {
        ensure!(!args.m.is_empty(), Invalid, "--oracle needs --m");
        for &m in &args.m {
            let path = global.out.join(format!("oracle_m{m}.csv"));
            write_ranking_csv(&exhaustive_search(&data, m)?, &path)?;
            written.push(path);
        }
        return Ok(written);
    }

    let (mode, runs): (&str, Vec<LabelledRun>) = if args.ablation {
        let path = args.search.as_ref().ok_or_else(|| Error::Invalid("--ablation needs --search".into()))?;
        ensure!(!args.m.is_empty(), Invalid, "--ablation needs --m");
        let (record, corr) = load_search(path)?;
        let betas = if args.beta.is_empty() { vec![record.config.beta] } else { args.beta.clone() };
        let rows = ablation_m_beta(&data, &record.priorities, &corr, &args.m, &betas, kind, &config)?;
        let table = global.out.join("ablation.csv");
        write_ablation_csv(&rows, &table)?;
        written.push(table);
        let runs = rows
            .into_iter()
            .map(|r| LabelledRun {
                label: format!("m{}_beta{}", r.m, r.beta),
                run: r.run,
            })
            .collect();
        ("ablation", runs)
    } else if !args.compare.is_empty() {
        let m = match args.m.as_slice() {
            [m] => *m,
            [] => DEFAULT_MANUAL_TARGETS.len(),
            _ => return Err(Error::Invalid("--compare takes a single --m".into())),
        };
        let methods = args
            .compare
            .iter()
            .map(|&method| Ok((method.name().to_string(), compare_selection(method, m, &data, &config, args)?)))
            .collect::<Result<Vec<_>>>()?;
        let rows = compare_methods(&data, &methods, kind, &config)?;
        let table = global.out.join("comparison.csv");
        write_comparison_csv(&rows, &table)?;
        written.push(table);
        let runs = rows
            .into_iter()
            .map(|r| LabelledRun {
                label: r.method,
                run: r.run,
            })
            .collect();
        ("compare", runs)
    } else {
        let mut runs = Vec::new();
        for path in &args.selection {
            let sel = SelectionResult::read_json(path)?;
            let trained = train_and_predict(&data, &sel, kind, &config)?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let images = global.out.join(format!("images_{}.csv", slug(&label)));
            write_image_csv(&trained.run.report, &images)?;
            written.push(images);
            runs.push(LabelledRun { label, run: trained.run });
        }
        ("single", runs)
    };

    if args.per_wavelength {
        for r in &runs {
            let path = global.out.join(format!("per_wavelength_{}.csv", slug(&r.label)));
            write_per_wavelength_csv(&r.run.report, &path)?;
            written.push(path);
        }
    }
    let summary = Summary {
        mode: mode.to_string(),
        model_kind: kind,
        config,
        runs,
    };
    let path = global.out.join(SUMMARY_FILE);
    write_json(&summary, &path)?;
    written.push(path);
    Ok(written)
}

fn compare_selection(
    method: SelectionMethod,
    m: usize,
    data: &TrainVal,
    config: &SearchConfig,
    args: &EvalArgs,
) -> Result<SelectionResult> {
    match method {
        SelectionMethod::Nbs => {
            let (priorities, corr) = match &args.search {
                Some(path) => {
                    let (record, corr) = load_search(path)?;
                    (record.priorities, corr)
                }
                None => {
                    let r = bilevel_search(data, config)?;
                    (r.priorities(), r.correlation)
                }
            };
            select_bands(&priorities, &corr, m, config.beta, data.wavelengths_nm())
        }
        SelectionMethod::Spectral => {
            let r = spectral_mode_search(data, config)?;
            let mut sel = select_bands(&r.priorities(), &r.correlation, m, config.beta, data.wavelengths_nm())?;
            sel.method = SelectionMethod::Spectral;
            Ok(sel)
        }
        SelectionMethod::Manual => {
            let targets = if args.targets.is_empty() { DEFAULT_MANUAL_TARGETS.to_vec() } else { args.targets.clone() };
            manual_selection(data.wavelengths_nm(), &targets)
        }
        SelectionMethod::MEqualSplit => m_equal_split_search(data, m, config),
        SelectionMethod::AllBands => Ok(SelectionResult::all_bands(data.wavelengths_nm())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportRow {
    summary: String,
    label: String,
    method: &'static str,
    m: usize,
    model: &'static str,
    wavelengths: String,
    mrae: f64,
    rmse: f64,
    psnr: String,
}

/// Flattens summaries into `report.csv` and returns the rendered text table.
pub fn cmd_report(global: &GlobalArgs, args: &ReportArgs) -> Result<(Vec<PathBuf>, String)> {
    args.summary.iter().try_for_each(|p| require_file(p))?;
    let mut rows = Vec::new();
    for path in &args.summary {
        let summary: Summary = read_json(path)?;
        let name = path.display().to_string();
        for r in summary.runs {
            let wl = r.run.selection.wavelengths_nm.iter().map(|w| format!("{w}")).collect::<Vec<_>>();
            rows.push(ReportRow {
                summary: name.clone(),
                label: r.label,
                method: r.run.selection.method.name(),
                m: r.run.selection.m,
                model: r.run.model_kind.name(),
                wavelengths: wl.join(";"),
                mrae: r.run.report.mrae,
                rmse: r.run.report.rmse,
                psnr: if r.run.report.psnr.is_finite() { format!("{}", r.run.report.psnr) } else { "inf".into() },
            });
        }
    }
    prepare_out(&global.out)?;
    let path = global.out.join(REPORT_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    rows.iter().try_for_each(|r| w.serialize(r))?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let mut table = format!("{:<24} {:<14} {:>3} {:<18} {:>10} {:>10} {:>8}\n", "label", "method", "M", "model", "mrae", "rmse", "psnr");
    for r in &rows {
        table.push_str(&format!(
            "{:<24} {:<14} {:>3} {:<18} {:>10.5} {:>10.5} {:>8}\n",
            r.label,
            r.method,
            r.m,
            r.model,
            r.mrae,
            r.rmse,
            r.psnr.parse::<f64>().map(|p| format!("{p:.2}")).unwrap_or_else(|_| r.psnr.clone())
        ));
    }
    Ok((vec![path], table))
}

/// Runs one parsed invocation; returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    if cli.global.jobs > 0 {
        // a second call in the same process finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global();
    }
    let g = &cli.global;
    match &cli.command {
        Command::Synth(a) => cmd_synth(g, a),
        Command::Corr(a) => cmd_corr(g, a),
        Command::Search(a) => cmd_search(g, a),
        Command::Select(a) => cmd_select(g, a),
        Command::Eval(a) => cmd_eval(g, a),
        Command::Report(a) => {
            let (files, table) = cmd_report(g, a)?;
            print!("{table}");
            Ok(files)
        }
    }
}

/// Entry point for the binary: parses `std::env::args`, prints written paths,
/// exits nonzero with a one-line diagnostic on failure.
pub fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("bandsel: {e}");
            std::process::exit(1);
        }
    }
}
