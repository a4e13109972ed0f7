use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use emsca::emitter::{high_end_profile, low_end_profile, read_profile, synth_trace, EmitterProfile};
use emsca::experiments::{
    run_crypto, run_downsample, run_programs, run_tamper, CryptoConfig, DownsampleConfig, ExperimentReport, ProgramsConfig,
    TamperConfig,
};
use emsca::features::{batch_features, FeatureConfig, Reduction, Trim};
use emsca::mlp::{cross_validate, evaluate, load_model, save_model, train, MlpConfig};
use emsca::novelty::{detect_tampering, fit, load_novelty_model, save_novelty_model, Gamma, NoveltyConfig};
use emsca::signal::{downsample, read_trace, storage_budget, write_trace, RawParams};
use emsca::store::{build_corpus, resample_corpus, split, CorpusManifest};
use emsca::stream::{
    benchmark_latency, connect_and_consume, render_latency_table, serve_on, BenchConfig, ConsumeConfig, ScheduleEntry,
    StreamSource,
};
use emsca::{Dataset, Error};

/// Exit code for a run that completed but missed its acceptance thresholds.
const ACCEPTANCE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "emsca", version, about = "Electromagnetic side-channel triage toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one labeled trace from an emitter profile
    Synth(SynthArgs),
    /// Build a labeled on-disk corpus with a manifest
    Corpus(CorpusArgs),
    /// Down-sample a trace or a whole corpus
    Resample(ResampleArgs),
    /// Extract feature vectors into a dataset file
    Features(FeaturesArgs),
    /// Train the classifier on a dataset
    Train(TrainArgs),
    /// Evaluate a classifier on a dataset
    Eval(EvalArgs),
    /// k-fold cross-validation on a dataset
    Crossval(CrossvalArgs),
    /// Fit or apply the one-class tamper detector
    #[command(subcommand)]
    Novelty(NoveltyCommand),
    /// Stream raw cf32 I/Q over TCP at a paced rate
    Serve(ServeArgs),
    /// Classify a live cf32 stream window by window
    Watch(WatchArgs),
    /// Loopback latency benchmark against the processing deadline
    Bench(BenchArgs),
    /// Storage needed for a capture
    Budget(BudgetArgs),
    /// Four-workload crypto classification experiment
    ExpCrypto(ExpArgs),
    /// Ten-program detection experiment
    ExpPrograms(ExpArgs),
    /// Accuracy versus sample rate experiment
    ExpDownsample(ExpDownsampleArgs),
    /// Firmware modification detection experiment
    ExpTamper(ExpArgs),
}

#[derive(Args)]
struct ProfileArg {
    /// `high_end`, `low_end`, or a profile file
    #[arg(long, default_value = "high_end")]
    profile: String,
}

impl ProfileArg {
    fn load(&self) -> anyhow::Result<EmitterProfile> {
        Ok(match self.profile.as_str() {
            "high_end" => high_end_profile(),
            "low_end" => low_end_profile(),
            path => read_profile(Path::new(path))?,
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long)]
    class: String,
    /// Seconds
    #[arg(long, default_value_t = 0.01)]
    duration: f64,
    /// Hz
    #[arg(long, default_value_t = 20e6)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long, default_value_t = 600)]
    per_class: usize,
    #[arg(long, default_value_t = 0.01)]
    duration: f64,
    #[arg(long, default_value_t = 20e6)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write train.tsv and test.tsv manifests with this train fraction
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Args)]
struct ResampleArgs {
    /// Corpus root holding manifest.tsv
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    corpus: Option<PathBuf>,
    /// Single cf32 payload (with sidecar)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Target rate in Hz
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Crypto,
    Programs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReductionArg {
    Mean,
    Max,
}

#[derive(Args)]
struct FeatureArgs {
    /// Starting point: crypto (500 mean buckets) or programs (1000 max buckets)
    #[arg(long, value_enum, default_value = "crypto")]
    preset: Preset,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long, value_enum)]
    reduction: Option<ReductionArg>,
    /// Segment length in seconds
    #[arg(long)]
    segment: Option<f64>,
    /// Keep the whole spectrum instead of the middle half
    #[arg(long)]
    no_trim: bool,
}

impl FeatureArgs {
    fn config(&self) -> FeatureConfig {
        let mut c = match self.preset {
            Preset::Crypto => FeatureConfig::crypto(),
            Preset::Programs => FeatureConfig::programs(),
        };
        if let Some(b) = self.buckets {
            c.n_buckets = b;
        }
        if let Some(r) = self.reduction {
            c.reduction = match r {
                ReductionArg::Mean => Reduction::Mean,
                ReductionArg::Max => Reduction::Max,
            };
        }
        if let Some(s) = self.segment {
            c.segment_s = s;
        }
        if self.no_trim {
            c.trim = Trim::None;
        }
        c
    }
}

#[derive(Args)]
struct FeaturesArgs {
    /// Corpus root holding manifest.tsv
    #[arg(long, conflicts_with = "traces", required_unless_present = "traces")]
    corpus: Option<PathBuf>,
    /// Alternative manifest file inside the corpus root (e.g. train.tsv)
    #[arg(long, requires = "corpus")]
    manifest: Option<String>,
    /// Labeled cf32 payloads
    #[arg(long, num_args = 1..)]
    traces: Vec<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MlpArgs {
    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "10,5")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MlpArgs {
    fn config(&self) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden.clone(),
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch,
            seed: self.seed,
            ..MlpConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    mlp: MlpArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Write per-class metrics here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    mlp: MlpArgs,
    /// Write fold accuracies here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum NoveltyCommand {
    /// Fit on the rows of one class of a dataset
    Fit(NoveltyFitArgs),
    /// Score traces against a fitted model
    Detect(NoveltyDetectArgs),
}

#[derive(Args)]
struct NoveltyFitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Legitimate class; defaults to all rows
    #[arg(long)]
    class: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// `scale` or a positive number
    #[arg(long, default_value = "scale")]
    gamma: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoveltyDetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    traces: Vec<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
    /// Write verdicts here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:5555")]
    listen: String,
    #[arg(long, default_value_t = 20e6)]
    rate: f64,
    /// Stream this payload instead of a live emitter
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArg,
    /// `start_s:class` pairs, e.g. `0:prog0,2:prog3`
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<String>,
    /// Seconds of emitter output
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WatchArgs {
    #[arg(long, default_value = "127.0.0.1:5555")]
    connect: String,
    #[arg(long, default_value_t = 20e6)]
    rate: f64,
    #[arg(long, default_value_t = 10.0)]
    window_ms: f64,
    /// Distance between window starts; defaults to the window length
    #[arg(long)]
    hop_ms: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    deadline_ms: f64,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    features: FeatureArgs,
    /// Write per-window results here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Rates in Hz, comma separated
    #[arg(long, value_delimiter = ',', default_value = "20e6,16e6,12e6,8e6,4e6")]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    window_ms: f64,
    #[arg(long, default_value_t = 100)]
    windows: usize,
    #[arg(long, default_value_t = 200.0)]
    deadline_ms: f64,
    /// Classifier to run; a small one is trained on the fly when omitted
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long, default_value = "aes128")]
    class: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 20e6)]
    rate: f64,
    /// Seconds
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
}

#[derive(Args)]
struct ExpArgs {
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the traces per class
    #[arg(long)]
    per_class: Option<usize>,
    /// Override the acceptance threshold (accuracy, or legit error for exp-tamper)
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct ExpDownsampleArgs {
    #[command(flatten)]
    common: ExpArgs,
    /// Keep the generated corpora under <out>/corpora
    #[arg(long)]
    keep_corpora: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", render_chain(&e));
            match e.downcast_ref::<Error>() {
                Some(err) if err.is_usage() => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Corpus(a) => corpus(a),
        Command::Resample(a) => resample(a),
        Command::Features(a) => features(a),
        Command::Train(a) => {
            let ds = Dataset::read(&a.data)?;
            let model = train(&ds, &a.mlp.config())?;
            save_model(&model, &a.out)?;
            println!("trained {:?} on {} rows -> {}", model.topology(), ds.len(), a.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(a) => {
            let model = load_model(&a.model)?;
            let ds = Dataset::read(&a.data)?;
            let report = evaluate(&model, &ds)?;
            let rows = report.default_rows();
            print!("{}", report.render_table(&rows));
            if let Some(p) = a.csv {
                fs::write(&p, report.to_csv(&rows)).with_context(|| p.display().to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Crossval(a) => {
            let ds = Dataset::read(&a.data)?;
            let cv = cross_validate(&ds, &a.mlp.config(), a.k)?;
            print!("{}", cv.pooled.render_table(&cv.pooled.default_rows()));
            println!("mean accuracy {:.4} +/- {:.4}", cv.mean_accuracy, cv.ci95_halfwidth);
            if let Some(p) = a.csv {
                let mut s = String::from("fold,accuracy\n");
                for (i, acc) in cv.fold_accuracies.iter().enumerate() {
                    s.push_str(&format!("{i},{acc:.6}\n"));
                }
                fs::write(&p, s).with_context(|| p.display().to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Novelty(NoveltyCommand::Fit(a)) => novelty_fit(a),
        Command::Novelty(NoveltyCommand::Detect(a)) => novelty_detect(a),
        Command::Serve(a) => serve(a),
        Command::Watch(a) => watch(a),
        Command::Bench(a) => bench(a),
        Command::Budget(a) => {
            println!("{}", storage_budget(a.rate, a.duration));
            Ok(ExitCode::SUCCESS)
        }
        Command::ExpCrypto(a) => {
            let mut cfg = CryptoConfig { seed: a.seed, ..CryptoConfig::default() };
            cfg.per_class = a.per_class.unwrap_or(cfg.per_class);
            cfg.min_accuracy = a.threshold.unwrap_or(cfg.min_accuracy);
            finish(run_crypto(&cfg)?.report(), &a.out)
        }
        Command::ExpPrograms(a) => {
            let mut cfg = ProgramsConfig { seed: a.seed, ..ProgramsConfig::default() };
            cfg.per_class = a.per_class.unwrap_or(cfg.per_class);
            cfg.min_accuracy = a.threshold.unwrap_or(cfg.min_accuracy);
            finish(run_programs(&cfg)?.report(), &a.out)
        }
        Command::ExpDownsample(a) => {
            let c = a.common;
            let mut cfg = DownsampleConfig {
                seed: c.seed,
                keep_corpora: a.keep_corpora,
                ..DownsampleConfig::default()
            };
            cfg.per_class = c.per_class.unwrap_or(cfg.per_class);
            cfg.max_drop_at_4mhz = c.threshold.unwrap_or(cfg.max_drop_at_4mhz);
            let report = run_downsample(&cfg, &c.out.join("corpora"))?.report();
            finish(report, &c.out)
        }
        Command::ExpTamper(a) => {
            let mut cfg = TamperConfig { seed: a.seed, ..TamperConfig::default() };
            cfg.train_traces = a.per_class.unwrap_or(cfg.train_traces);
            cfg.max_legit_error = a.threshold.unwrap_or(cfg.max_legit_error);
            finish(run_tamper(&cfg)?.report(), &a.out)
        }
    }
}

/// The error and its causes, leaving out causes already quoted by the
/// message above them.
fn render_chain(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !out.contains(&c) {
            out.push_str(": ");
            out.push_str(&c);
        }
    }
    out
}

fn finish(report: ExperimentReport, out: &Path) -> anyhow::Result<ExitCode> {
    print!("{}", report.text);
    for p in report.write_files(out)? {
        println!("wrote {}", p.display());
    }
    print!("{}", report.check_lines());
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(ACCEPTANCE_FAILURE)
    })
}

fn synth(a: SynthArgs) -> anyhow::Result<ExitCode> {
    let profile = a.profile.load()?;
    let trace = synth_trace(&profile, &a.class, a.duration, a.rate, a.seed)?;
    write_trace(&trace, &a.out)?;
    println!("{} samples, {} bytes -> {}", trace.len(), trace.payload_bytes(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn corpus(a: CorpusArgs) -> anyhow::Result<ExitCode> {
    let profile = a.profile.load()?;
    let m = build_corpus(&profile, a.per_class, a.duration, a.rate, a.seed, &a.out)?;
    println!(
        "{} traces in {} classes, {} payload bytes -> {}",
        m.len(),
        m.labels().len(),
        m.payload_bytes(),
        a.out.display()
    );
    if let Some(f) = a.split {
        let (train, test) = split(&m, f, a.seed)?;
        train.save_as(&a.out.join("train.tsv"))?;
        test.save_as(&a.out.join("test.tsv"))?;
        println!("split {} train / {} test", train.len(), test.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn resample(a: ResampleArgs) -> anyhow::Result<ExitCode> {
    if let Some(root) = a.corpus {
        let m = CorpusManifest::load(&root)?;
        let r = resample_corpus(&m, a.rate, &a.out)?;
        println!(
            "{} traces, {} -> {} payload bytes ({:.2}%)",
            r.len(),
            m.payload_bytes(),
            r.payload_bytes(),
            100.0 * r.payload_bytes() as f64 / m.payload_bytes().max(1) as f64
        );
    } else if let Some(path) = a.trace {
        let t = read_trace(&path, None)?;
        let out = downsample(&t, a.rate)?;
        write_trace(&out, &a.out)?;
        println!("{} -> {} samples", t.len(), out.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn features(a: FeaturesArgs) -> anyhow::Result<ExitCode> {
    let fc = a.features.config();
    let traces = match &a.corpus {
        Some(root) => {
            let m = match &a.manifest {
                Some(name) => {
                    let p = root.join(name);
                    CorpusManifest::parse(root, &fs::read_to_string(&p).with_context(|| p.display().to_string())?)?
                }
                None => CorpusManifest::load(root)?,
            };
            m.read_all()?
        }
        None => a.traces.iter().map(|p| read_trace(p, None)).collect::<emsca::Result<Vec<_>>>()?,
    };
    let ds = batch_features(&traces, &fc)?;
    ds.write(&a.out)?;
    println!(
        "{} rows x {} features, classes {:?} -> {}",
        ds.len(),
        ds.feature_dim(),
        ds.class_table(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn novelty_fit(a: NoveltyFitArgs) -> anyhow::Result<ExitCode> {
    let ds = Dataset::read(&a.data)?;
    let rows: Vec<Vec<f64>> = match &a.class {
        Some(c) => {
            let idx = ds.class_table().iter().position(|x| x == c).ok_or_else(|| Error::UnknownClass {
                class: c.clone(),
                known: ds.class_table().to_vec(),
            })?;
            (0..ds.len()).filter(|&i| ds.label(i) == idx).map(|i| ds.row(i).to_vec()).collect()
        }
        None => ds.rows().map(<[f64]>::to_vec).collect(),
    };
    let gamma = match a.gamma.as_str() {
        "scale" => Gamma::Scale,
        g => Gamma::Value(g.parse().map_err(|_| Error::invalid(format!("gamma `{g}` is not a number")))?),
    };
    let model = fit(&rows, &NoveltyConfig { nu: a.nu, gamma, seed: a.seed, ..NoveltyConfig::default() })?;
    save_novelty_model(&model, &a.out)?;
    println!(
        "fit on {} rows: {} support vectors, gamma {:.3e}, training outliers {:.4} -> {}",
        rows.len(),
        model.n_support(),
        model.gamma,
        model.outlier_fraction(&rows)?,
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn novelty_detect(a: NoveltyDetectArgs) -> anyhow::Result<ExitCode> {
    let model = load_novelty_model(&a.model)?;
    let traces = a.traces.iter().map(|p| read_trace(p, None)).collect::<emsca::Result<Vec<_>>>()?;
    let report = detect_tampering(&model, &traces, &a.features.config())?;
    print!("{}", report.render());
    if let Some(p) = a.csv {
        let mut s = String::from("trace,score,verdict\n");
        for v in &report.verdicts {
            s.push_str(&format!("{},{:.9},{}\n", v.id, v.score, if v.inlier { "legit" } else { "tampered" }));
        }
        fs::write(&p, s).with_context(|| p.display().to_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_schedule(items: &[String]) -> anyhow::Result<Vec<ScheduleEntry>> {
    items
        .iter()
        .map(|item| {
            let Some((t, class)) = item.split_once(':') else {
                bail!(Error::invalid(format!("schedule item `{item}` is not start_s:class")));
            };
            let start_s = t
                .parse()
                .map_err(|_| Error::invalid(format!("bad start time in `{item}`")))?;
            Ok(ScheduleEntry {
                start_s,
                class_id: class.to_string(),
            })
        })
        .collect()
}

fn serve(a: ServeArgs) -> anyhow::Result<ExitCode> {
    let source = match &a.trace {
        Some(p) => StreamSource::Trace {
            trace: read_trace(p, Some(RawParams { sample_rate_hz: a.rate, center_freq_hz: 0.0 }))?,
            total_samples: None,
        },
        None => {
            let profile = a.profile.load()?;
            let mut schedule = parse_schedule(&a.schedule)?;
            if schedule.is_empty() {
                schedule.push(ScheduleEntry { start_s: 0.0, class_id: profile.classes[0].class_id.clone() });
            }
            StreamSource::Emitter { profile, schedule, duration_s: a.duration, seed: a.seed }
        }
    };
    eprintln!("serving on {} at {} Hz", a.listen, a.rate);
    let s = serve_on(&source, a.rate, &a.listen)?;
    println!(
        "sent {} bytes ({} samples) in {:.3} s{}",
        s.bytes_sent,
        s.samples_sent,
        s.elapsed_s,
        if s.client_disconnected { ", client disconnected" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

fn watch(a: WatchArgs) -> anyhow::Result<ExitCode> {
    let model = load_model(&a.model)?;
    let mut fc = a.features.config();
    fc.segment_s = a.window_ms / 1e3;
    let cfg = ConsumeConfig {
        window_s: a.window_ms / 1e3,
        hop_s: a.hop_ms.map(|h| h / 1e3),
        deadline_ms: a.deadline_ms,
        ..ConsumeConfig::default()
    };
    let mut csv = String::from("seq,class,score,delay_ms,overrun\n");
    println!("seq  label  score  delay_ms");
    let summary = connect_and_consume(&a.connect, a.rate, &cfg, &model, &fc, |w| {
        println!("{}  {}  {:.4}  {:.2}{}", w.seq, w.class, w.score, w.processing_delay_ms, if w.overrun { "  OVERRUN" } else { "" });
        csv.push_str(&format!("{},{},{:.6},{:.3},{}\n", w.seq, w.class, w.score, w.processing_delay_ms, w.overrun));
    })?;
    let l = &summary.latency;
    println!(
        "{} windows, mean {:.2} ms, p95 {:.2} ms, max {:.2} ms, overruns {}, backpressure {}",
        l.windows, l.mean_ms, l.p95_ms, l.max_ms, l.overruns, l.backpressure_events
    );
    if let Some(p) = a.csv {
        fs::write(&p, csv).with_context(|| p.display().to_string())?;
    }
    Ok(if l.overruns == 0 { ExitCode::SUCCESS } else { ExitCode::from(ACCEPTANCE_FAILURE) })
}

fn bench(a: BenchArgs) -> anyhow::Result<ExitCode> {
    let profile = a.profile.load()?;
    let mut fc = a.features.config();
    fc.segment_s = a.window_ms / 1e3;
    let model = match &a.model {
        Some(p) => load_model(p)?,
        None => {
            let rate = a.rates.iter().copied().fold(0.0, f64::max);
            let ds = emsca::experiments::synthetic_dataset(&profile, 10, fc.segment_s, rate, a.seed, &fc)?;
            train(&ds, &MlpConfig { epochs: 20, seed: a.seed, ..MlpConfig::default() })?
        }
    };
    let cfg = BenchConfig {
        window_s: a.window_ms / 1e3,
        n_windows: a.windows,
        deadline_ms: a.deadline_ms,
        seed: a.seed,
        ..BenchConfig::new(a.rates.clone(), a.class.clone())
    };
    let reports = benchmark_latency(&cfg, &model, &fc, &profile)?;
    let table = render_latency_table(&reports);
    print!("{table}");
    fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
    let mut csv = String::from("rate_hz,window_samples,windows,min_ms,mean_ms,p95_ms,max_ms,deadline_ms,overruns\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{:.3},{:.3},{:.3},{:.3},{},{}\n",
            r.sample_rate_hz, r.window_len_samples, r.windows, r.min_ms, r.mean_ms, r.p95_ms, r.max_ms, r.deadline_ms, r.overruns
        ));
    }
    let p = a.out.join("bench.csv");
    fs::write(&p, csv).with_context(|| p.display().to_string())?;
    let overruns: usize = reports.iter().map(|r| r.overruns).sum();
    Ok(if overruns == 0 { ExitCode::SUCCESS } else { ExitCode::from(ACCEPTANCE_FAILURE) })
}
