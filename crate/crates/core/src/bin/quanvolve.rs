use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quanvolve::circuit::{CircuitSpec, Family, MappingKind};
use quanvolve::data::{load_dataset, save_csv, save_idx, save_raw, synth_dataset, Dataset, Format, LoadOptions, Split, SynthConfig};
use quanvolve::expr::{expr_sweep, SweepSpec, DEFAULT_BINS, DEFAULT_PAIRS, DEFAULT_REPEATS};
use quanvolve::layer::{preprocess_dataset, FeatureSet, LayerConfig, Padding, Provenance};
use quanvolve::nn::{evaluate, train, AdamConfig, Model, ModelSpec, RunFile, TrainConfig};
use quanvolve::pipeline::{rerun, run_pipeline, LayerSettings, Manifest, RunConfig};
use quanvolve::quantize::{mse, mse_bound, patch_census, quantize_all, MemoTable, Rounding};
use quanvolve::sim::DecodeMode;
use quanvolve::{par, seed, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "quanvolve", version, about = "Quanvolutional filters, preprocessing and training")]
#[command(args_override_self = true)]
struct Cli {
    /// Master seed, or an inclusive range `a..b` where a command runs once per seed.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file: a run config for `pipeline`, flag defaults for other commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a filter circuit as JSON.
    GenCircuit(GenCircuit),
    /// Quantisation error and patch statistics per level count.
    QuantizeReport(QuantizeReport),
    /// Apply quanvolutional filters to a dataset.
    Preprocess(Preprocess),
    /// Expressibility sweep over gate counts or connection probabilities.
    Expressibility(Expressibility),
    /// Train the classical head on images or feature maps.
    Train(Train),
    /// Accuracy of a trained model.
    Eval(Eval),
    /// Run every stage from a config, or rerun a manifest.
    Pipeline(Pipeline),
    /// Write a synthetic bars/blobs/stripes dataset.
    SynthData(SynthData),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Dataset file (images for IDX).
    #[arg(long)]
    dataset: Vec<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// IDX label file when it cannot be inferred.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 255.0)]
    csv_divisor: f64,
}

impl DataArgs {
    fn load(&self, n_classes: Option<usize>) -> Result<Dataset> {
        let Some(first) = self.dataset.first() else {
            return Err(Error::Config("--dataset is required".into()));
        };
        let opts = LoadOptions {
            format: self.format,
            labels: if self.dataset.len() == 1 { self.labels.clone() } else { None },
            n_classes,
            csv_divisor: self.csv_divisor,
            split: Split::Train,
        };
        let mut ds = load_dataset(first, &opts)?;
        for p in &self.dataset[1..] {
            let more = load_dataset(p, &opts)?;
            ds.images.extend(more.images);
            ds.labels.extend(more.labels);
        }
        Ok(ds)
    }
}

#[derive(Args, Debug)]
struct GenCircuit {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    #[arg(long, default_value_t = 0)]
    gates: usize,
    #[arg(long, default_value = "simple")]
    alpha: MappingKind,
    /// Connection probability for the Henderson families.
    #[arg(long, default_value_t = 0.15)]
    p: f64,
    /// Number of circuits; more than one writes `<stem><i>.json`.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuantizeReport {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated level counts.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,30,50,100")]
    levels: Vec<usize>,
    #[arg(long, default_value = "nearest")]
    rounding: Rounding,
    #[arg(long, default_value = "none")]
    padding: PaddingArg,
    /// Min-max scale each image first.
    #[arg(long)]
    minmax: bool,
    /// Use only the first n images.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum PaddingArg {
    Same,
    None,
}

impl From<PaddingArg> for Padding {
    fn from(p: PaddingArg) -> Self {
        match p {
            PaddingArg::Same => Padding::Same,
            PaddingArg::None => Padding::None,
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum DecodeArg {
    Analytic,
    Sampled,
}

#[derive(Args, Debug)]
struct Preprocess {
    #[command(flatten)]
    data: DataArgs,
    /// Filter files; `f0.json..f7.json` expands to eight files.
    #[arg(long, num_args = 1.., required = true)]
    filters: Vec<String>,
    #[arg(long, default_value_t = 50)]
    levels: usize,
    #[arg(long, default_value = "nearest")]
    rounding: Rounding,
    #[arg(long, value_enum, default_value = "analytic")]
    decode: DecodeArg,
    #[arg(long, default_value_t = 1000)]
    shots: usize,
    #[arg(long, value_enum, default_value = "same")]
    padding: PaddingArg,
    /// Downscale images to `size×size` first.
    #[arg(long)]
    size: Option<usize>,
    /// Memo table file, loaded if present and saved afterwards.
    #[arg(long)]
    memo: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct Expressibility {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    #[arg(long, default_value = "simple")]
    alpha: MappingKind,
    /// Gate counts `a:b[:step]` (step defaults to 4) or a comma list.
    #[arg(long)]
    gates: Option<String>,
    /// Comma-separated connection probabilities.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_PAIRS)]
    pairs: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// CSV by default; a `.json` name writes full per-seed reports.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Feature file from `preprocess`.
    #[arg(long, conflicts_with = "images")]
    features: Option<PathBuf>,
    /// Image dataset (raw, csv or idx).
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// IDX label file.
    #[arg(long)]
    labels: Option<PathBuf>,
}

struct Loaded {
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    shape: (usize, usize, usize),
}

impl Inputs {
    fn load(&self, n_classes: Option<usize>) -> Result<Loaded> {
        if let Some(path) = &self.features {
            let set = FeatureSet::load(path)?;
            let y = set
                .labels
                .ok_or_else(|| Error::Data(format!("{} carries no labels", path.display())))?;
            let shape = set.maps.first().map_or((0, 0, 0), |m| (m.channels, m.height, m.width));
            return Ok(Loaded {
                x: set.maps.into_iter().map(|m| m.data).collect(),
                y,
                shape,
            });
        }
        let Some(path) = &self.images else {
            return Err(Error::Config("pass --features or --images".into()));
        };
        let ds = load_dataset(
            path,
            &LoadOptions {
                format: self.format,
                labels: self.labels.clone(),
                n_classes,
                ..Default::default()
            },
        )?
        .normalized(None)?;
        let (h, w) = ds.shape()?.unwrap_or((0, 0));
        Ok(Loaded {
            x: ds.images.into_iter().map(|i| i.data).collect(),
            y: ds.labels,
            shape: (1, h, w),
        })
    }
}

#[derive(Args, Debug)]
struct Train {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 3e-4)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    /// ReLU on the output logits.
    #[arg(long)]
    output_relu: bool,
    /// Test set to score after training.
    #[arg(long)]
    test_features: Option<PathBuf>,
    /// Run file; with a seed range, `<stem>.<seed>.json` per seed.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Args, Debug)]
struct Pipeline {
    /// Rerun this manifest and verify every artifact hash.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SynthData {
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 30)]
    size: usize,
    #[arg(long, default_value = "train")]
    split: SplitArg,
    #[arg(long, default_value = "raw")]
    format: Format,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

/// `a` or the inclusive range `a..b`.
fn parse_seeds(s: Option<&str>) -> Result<Vec<u64>> {
    let Some(s) = s else { return Ok(vec![0]) };
    let bad = || Error::Config(format!("bad seed `{s}`: expected an integer or a range a..b"));
    match s.split_once("..") {
        None => Ok(vec![s.trim().parse().map_err(|_| bad())?]),
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
    }
}

fn single_seed(s: Option<&str>) -> Result<u64> {
    match parse_seeds(s)?.as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::Config("this command takes a single --seed, not a range".into())),
    }
}

/// Expands `f0.json..f7.json` into `f0.json`, …, `f7.json`.
fn expand_range(item: &str) -> Result<Vec<String>> {
    let Some((a, b)) = item.split_once("..") else {
        return Ok(vec![item.to_string()]);
    };
    fn split(s: &str) -> Option<(&str, &str, &str)> {
        let end = s.rfind(|c: char| c.is_ascii_digit())? + 1;
        let start = s[..end].rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
        Some((&s[..start], &s[start..end], &s[end..]))
    }
    let bad = || Error::Config(format!("cannot expand filter range `{item}`"));
    let (pa, na, sa) = split(a).ok_or_else(bad)?;
    let (pb, nb, sb) = split(b).ok_or_else(bad)?;
    if pa != pb || sa != sb {
        return Err(bad());
    }
    let (lo, hi): (usize, usize) = (na.parse().map_err(|_| bad())?, nb.parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).map(|i| format!("{pa}{i}{sa}")).collect())
}

/// Gate grid `a:b[:step]` or `a,b,c`.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad grid `{s}`: expected a:b[:step] or a comma list"));
    if s.contains(':') {
        let parts: Vec<usize> = s.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 4),
            [a, b, st] if *st > 0 => (*a, *b, *st),
            _ => return Err(bad()),
        };
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).step_by(step).map(|v| v as f64).collect())
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn gen_circuit(cli: &Cli, a: &GenCircuit) -> Result<()> {
    let master = single_seed(cli.seed.as_deref())?;
    let settings = LayerSettings {
        family: a.family,
        k: a.k,
        filters: a.count,
        n_qubits: a.qubits,
        gates: a.gates,
        alpha: a.alpha,
        p: a.p,
        decode: DecodeMode::Analytic,
        padding: Padding::Same,
    };
    for i in 0..a.count {
        let s = if a.count == 1 { master } else { seed::derive(master, &format!("filter/{i}")) };
        let c = settings.build_filter(s)?;
        let path = match (&a.output, a.count) {
            (Some(p), 1) => Some(p.clone()),
            (Some(p), _) => {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Some(p.with_file_name(format!("{stem}{i}.json")))
            }
            (None, _) => None,
        };
        match path {
            Some(p) => c.save(&p)?,
            None => println!("{}", c.to_json()),
        }
    }
    Ok(())
}

fn quantize_report(a: &QuantizeReport) -> Result<()> {
    let mut ds = a.data.load(None)?;
    if let Some(n) = a.limit {
        ds = ds.take(n);
    }
    if a.minmax {
        ds = ds.normalized(None)?;
    }
    if let Some(i) = ds.images.iter().position(|img| !img.in_unit_range()) {
        return Err(Error::Data(format!("image {i} has pixels outside [0, 1]; try --minmax")));
    }
    let mut csv = String::from("levels,mean_mse,mse_bound,total_patches,unique_patches,reduction_percent\n");
    for &n in &a.levels {
        let q = quantize_all(&ds.images, n, a.rounding)?;
        let errors = par::try_map(&ds.images.iter().zip(&q).collect::<Vec<_>>(), |(img, q)| mse(img, q))?;
        let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
        let census = patch_census(&q, a.k, a.padding.into())?;
        csv.push_str(&format!(
            "{n},{mean:.6e},{:.6e},{},{},{:.4}\n",
            mse_bound(n)?,
            census.total_patches,
            census.unique_patches,
            census.reduction_percent()
        ));
    }
    write_out(a.output.as_deref(), &csv)
}

fn preprocess(cli: &Cli, a: &Preprocess) -> Result<()> {
    let master = single_seed(cli.seed.as_deref())?;
    let mut files = Vec::new();
    for f in &a.filters {
        files.extend(expand_range(f)?);
    }
    let filters = files.iter().map(CircuitSpec::load).collect::<Result<Vec<_>>>()?;
    let decode = match a.decode {
        DecodeArg::Analytic => DecodeMode::Analytic,
        DecodeArg::Sampled => DecodeMode::Sampled { shots: a.shots },
    };
    let mut cfg = LayerConfig::new(filters, decode, master)?;
    cfg.padding = a.padding.into();

    let ds = a.data.load(None)?.normalized(a.size.map(|s| (s, s)))?;
    let q = quantize_all(&ds.images, a.levels, a.rounding)?;
    let memo = match &a.memo {
        Some(p) if p.exists() => MemoTable::load(p)?,
        _ => MemoTable::new(cfg.k, a.levels)?,
    };
    let (maps, report) = preprocess_dataset(&q, &cfg, &memo)?;
    if let Some(p) = &a.memo {
        memo.save(p)?;
    }
    FeatureSet {
        maps,
        labels: Some(ds.labels),
        provenance: Some(Provenance {
            filter_hashes: cfg.filter_ids().to_vec(),
            levels: a.levels,
            seed: master,
            decode,
        }),
    }
    .save(&a.output)?;
    eprintln!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn expressibility(cli: &Cli, a: &Expressibility) -> Result<()> {
    let grid = match (a.family, &a.gates) {
        (Family::Integrated, Some(g)) => parse_grid(g)?,
        (Family::Integrated, None) => return Err(Error::Config("--gates is required for the integrated family".into())),
        (_, _) if !a.p.is_empty() => a.p.clone(),
        _ => return Err(Error::Config("--p is required for the Henderson families".into())),
    };
    let reports = expr_sweep(&SweepSpec {
        family: a.family,
        k: a.k,
        n_qubits: a.qubits,
        alpha: a.alpha,
        grid,
        repeats: a.repeats,
        pairs: a.pairs,
        bins: a.bins,
        seed: single_seed(cli.seed.as_deref())?,
    })?;
    let json = a.output.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let text = if json {
        serde_json::to_string_pretty(&reports)?
    } else {
        let mut csv = String::from("grid_value,mean_expr_prime,std\n");
        for r in &reports {
            csv.push_str(&format!("{},{:.6},{:.6}\n", r.grid_value, r.mean, r.std));
        }
        csv
    };
    write_out(a.output.as_deref(), &text)
}

fn run_train(cli: &Cli, a: &Train) -> Result<()> {
    let seeds = parse_seeds(cli.seed.as_deref())?;
    let data = a.inputs.load(Some(a.classes))?;
    let test = match &a.test_features {
        Some(p) => Some(Inputs { features: Some(p.clone()), images: None, format: None, labels: None }.load(Some(a.classes))?),
        None => None,
    };
    let (c, h, w) = data.shape;
    let mut spec = ModelSpec::new(c, a.classes).with_input(h, w);
    spec.output_relu = a.output_relu;
    for &s in &seeds {
        let cfg = TrainConfig {
            adam: AdamConfig {
                lr: a.lr,
                ..Default::default()
            },
            batch_size: a.batch_size,
            patience: a.patience,
            max_epochs: a.max_epochs,
            seed: seed::derive(s, "train"),
        };
        let model = Model::init(spec.clone(), seed::derive(s, "model/init"))?;
        let (model, history) = train(model, &data.x, &data.y, &cfg)?;
        let test_accuracy = match &test {
            Some(t) => Some(evaluate(&model, &t.x, &t.y)?),
            None => None,
        };
        eprintln!(
            "seed {s}: {} epochs, final loss {:.4}{}",
            history.epochs(),
            history.loss.last().copied().unwrap_or(f64::NAN),
            test_accuracy.map_or(String::new(), |a| format!(", test accuracy {a:.4}"))
        );
        let path = if seeds.len() == 1 {
            a.output.clone()
        } else {
            let stem = a.output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            a.output.with_file_name(format!("{stem}.{s}.json"))
        };
        RunFile {
            model,
            train: cfg,
            history,
            test_accuracy,
        }
        .save(path)?;
    }
    Ok(())
}

fn run_eval(a: &Eval) -> Result<()> {
    let run = RunFile::load(&a.model)?;
    let data = a.inputs.load(Some(run.model.spec.n_classes))?;
    println!("{:.6}", evaluate(&run.model, &data.x, &data.y)?);
    Ok(())
}

fn run_pipeline_cmd(cli: &Cli, a: &Pipeline) -> Result<()> {
    let outcome = match (&a.manifest, &cli.config) {
        (Some(m), _) => rerun(&Manifest::load(m)?, &a.output)?,
        (None, Some(c)) => {
            let mut cfg = RunConfig::load(c)?;
            if cli.seed.is_some() {
                cfg.seed = single_seed(cli.seed.as_deref())?;
            }
            run_pipeline(&cfg, &a.output)?
        }
        (None, None) => return Err(Error::Config("pipeline needs --config or --manifest".into())),
    };
    if let Some(r) = &outcome.preprocess {
        eprintln!("preprocess: {:.2}s, hit rate {:.4}", r.wall_seconds, r.hit_rate());
    }
    println!("{}", serde_json::to_string_pretty(&outcome.manifest.results)?);
    Ok(())
}

fn synth_data(cli: &Cli, a: &SynthData) -> Result<()> {
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let ds = synth_dataset(
        &SynthConfig {
            n_classes: a.classes,
            count: a.count,
            size: a.size,
            seed: single_seed(cli.seed.as_deref())?,
        },
        split,
    )?;
    match a.format {
        Format::Raw => save_raw(&ds, &a.output),
        Format::Csv => save_csv(&ds, &a.output, 255.0),
        Format::Idx => {
            let name = a.output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if !name.contains("images") {
                return Err(Error::Config("IDX output name must contain `images`; labels go beside it".into()));
            }
            save_idx(&ds, &a.output, a.output.with_file_name(name.replacen("images", "labels", 1)))
        }
    }
}

/// Turns a JSON object of flag defaults into arguments placed right after the
/// subcommand, so flags given on the command line still win.
fn with_config_defaults(args: Vec<String>) -> Result<Vec<String>> {
    let mut config = None;
    let mut it = args.iter().enumerate();
    while let Some((_, a)) = it.next() {
        if a == "--config" {
            config = it.next().map(|(_, v)| v.clone());
        } else if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        }
    }
    let Some(path) = config else { return Ok(args) };
    let names = [
        "gen-circuit",
        "quantize-report",
        "preprocess",
        "expressibility",
        "train",
        "eval",
        "synth-data",
    ];
    let Some(pos) = args.iter().position(|a| names.contains(&a.as_str())) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let serde_json::Value::Object(map) = value else {
        return Err(Error::Config(format!("{path}: expected a JSON object of flag defaults")));
    };
    let mut extra = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::Config(format!("{path}: unsupported value for `{key}`: {other}"))),
        };
        match &v {
            serde_json::Value::Bool(true) => extra.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone());
                    extra.push(scalar(item)?);
                }
            }
            other => {
                extra.push(flag);
                extra.push(scalar(other)?);
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn run() -> Result<()> {
    let args = with_config_defaults(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        par::set_threads(n)?;
    }
    match &cli.command {
        Command::GenCircuit(a) => gen_circuit(&cli, a),
        Command::QuantizeReport(a) => quantize_report(a),
        Command::Preprocess(a) => preprocess(&cli, a),
        Command::Expressibility(a) => expressibility(&cli, a),
        Command::Train(a) => run_train(&cli, a),
        Command::Eval(a) => run_eval(a),
        Command::Pipeline(a) => run_pipeline_cmd(&cli, a),
        Command::SynthData(a) => synth_data(&cli, a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
