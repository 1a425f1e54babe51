//! The `vdlab` command line: one subcommand per experiment step.
//!
//! Every run writes its artifacts under the output directory together with
//! `manifest.json` (command, arguments, overrides, config hash, seed, versions)
//! and `config.effective.toml`, the fully resolved configuration.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::audio::{parse_lab, read_wav, write_wav};
use crate::config::ExperimentConfig;
use crate::dsp::grid_io::{write_descriptor, write_grid, write_grid_csv};
use crate::dsp::Grid;
use crate::error::{Error, Result};
use crate::eval::{fmt_opt, snr_sweep, write_sweep_csv, Detector, EvaluationSummary, MetricsReport, SweepTrack};
use crate::features::assemble_features;
use crate::models::serialize::MODEL_VERSION;
use crate::pipeline::{
    corpus_split, evaluate_detector, hpss_frontend, mel_frontend, stress_vibrato, train_detector, LabeledClip, Pipeline,
    TrainedModel,
};
use crate::stress::corpus::{gen_synthetic_corpus, read_corpus, write_corpus, CorpusTrack, Split};
use crate::stress::snr::mix_at_snr;
use crate::stress::vibrato::gen_vibrato_grid;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EFFECTIVE_CONFIG_FILE: &str = "config.effective.toml";
pub const MODEL_FILE: &str = "model.vdm";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "vdlab", version, about = "Singing voice detection experiments")]
pub struct Cli {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Detector pipeline: fe, cnn or rnn.
    #[arg(long, global = true)]
    pub pipeline: Option<Pipeline>,
    /// Master seed for corpus generation and training
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Config override, e.g. `--set detector.fe.forest.n_trees=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractKind {
    /// Hand-crafted feature stack with context.
    Features,
    /// Log-mel input of the CNN.
    Mel,
    /// Harmonic and percussive log-mels of the recurrent detector.
    Hpss,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write detector inputs of WAV files to disk.
    Extract {
        /// WAV files or directories of WAV files.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "features")]
        kind: ExtractKind,
        /// Also write a CSV next to each binary grid.
        #[arg(long)]
        csv: bool,
    },
    /// Train the selected pipeline on the training split.
    Train,
    /// Per-frame predictions for WAV files.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Frame metrics of a model on the test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Generate the 336-clip vibrato grid.
    GenVibrato,
    /// Generate the labeled synthetic corpus.
    GenCorpus {
        /// Number of tracks; overrides `corpus.n_tracks`.
        #[arg(long)]
        tracks: Option<usize>,
    },
    /// Remix one vocal/instrumental stem pair at the configured SNR levels.
    MixSnr {
        #[arg(long)]
        vocal: PathBuf,
        #[arg(long)]
        instrumental: PathBuf,
        /// Comma-separated dB levels; overrides `snr.levels`.
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<String>,
    },
    /// Run models over a vibrato grid and write accuracy heatmaps.
    StressVibrato {
        #[arg(long)]
        model: PathBuf,
        /// Directory written by gen-vibrato.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Error rates of models on test-split remixes across SNR levels.
    StressSnr {
        #[arg(long, required = true, num_args = 1..)]
        model: Vec<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<String>,
    },
    /// Tabulate evaluation summaries.
    Report {
        /// `summary.json` files written by evaluate.
        #[arg(long, required = true, num_args = 1..)]
        summary: Vec<PathBuf>,
        /// Songs listed per model in the worst-song table.
        #[arg(long, default_value_t = 5)]
        bottom: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Extract { .. } => "extract",
            Command::Train => "train",
            Command::Predict { .. } => "predict",
            Command::Evaluate { .. } => "evaluate",
            Command::GenVibrato => "gen-vibrato",
            Command::GenCorpus { .. } => "gen-corpus",
            Command::MixSnr { .. } => "mix-snr",
            Command::StressVibrato { .. } => "stress-vibrato",
            Command::StressSnr { .. } => "stress-snr",
            Command::Report { .. } => "report",
        }
    }
}

#[derive(Debug, Serialize)]
struct Versions {
    vdlab: &'static str,
    model_format: u32,
    summary_schema: u32,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    args: Vec<String>,
    config_file: Option<String>,
    overrides: &'a [String],
    config_sha256: String,
    seed: u64,
    versions: Versions,
    outputs: Vec<String>,
}

/// Parses arguments (program name first) and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

/// Overrides implied by the global flags, then the explicit `--set` ones.
fn collect_overrides(cli: &Cli) -> Vec<String> {
    let mut o = Vec::new();
    if let Some(p) = cli.pipeline {
        o.push(format!("pipeline=\"{p}\""));
    }
    if let Some(s) = cli.seed {
        o.push(format!("seed={s}"));
    }
    if let Some(out) = &cli.out {
        o.push(format!("out={}", toml::Value::String(out.display().to_string())));
    }
    if let Command::GenCorpus { tracks: Some(n) } = &cli.command {
        o.push(format!("corpus.n_tracks={n}"));
    }
    o.extend(cli.overrides.iter().cloned());
    o
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let overrides = collect_overrides(&cli);
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?;
    std::fs::create_dir_all(&cfg.out)?;
    log::info!("{} -> {}", cli.command.name(), cfg.out.display());
    let outputs = pool.install(|| dispatch(&cli.command, &cfg))?;

    let manifest = RunManifest {
        command: cli.command.name(),
        args: argv,
        config_file: cli.config.as_ref().map(|p| p.display().to_string()),
        overrides: &overrides,
        config_sha256: cfg.hash()?,
        seed: cfg.seed,
        versions: Versions {
            vdlab: env!("CARGO_PKG_VERSION"),
            model_format: MODEL_VERSION,
            summary_schema: crate::eval::SUMMARY_SCHEMA_VERSION,
        },
        outputs: outputs.iter().map(|p| relative(p, &cfg.out)).collect(),
    };
    std::fs::write(cfg.out.join(EFFECTIVE_CONFIG_FILE), cfg.to_toml()?)?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(cfg.out.join(MANIFEST_FILE), text)?;
    Ok(())
}

fn relative(p: &Path, base: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}

fn dispatch(cmd: &Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Extract { input, kind, csv } => extract(cfg, input, *kind, *csv),
        Command::Train => train(cfg),
        Command::Predict { model, input } => predict(cfg, model, input),
        Command::Evaluate { model } => evaluate(cfg, model),
        Command::GenVibrato => {
            let v = &cfg.vibrato;
            let infos = gen_vibrato_grid(v.duration, v.sample_rate, &cfg.out, &v.synth)?;
            println!("wrote {} vibrato clips to {}", infos.len(), cfg.out.display());
            let mut out: Vec<PathBuf> = infos.iter().map(|i| cfg.out.join(&i.filename)).collect();
            out.push(cfg.out.join(crate::stress::vibrato::VIBRATO_MANIFEST));
            Ok(out)
        }
        Command::GenCorpus { .. } => {
            let c = &cfg.corpus;
            let tracks = gen_synthetic_corpus(cfg.seed, c.n_tracks, c.sample_rate, &c.synth)?;
            let entries = write_corpus(&tracks, &cfg.out)?;
            println!("wrote {} tracks to {}", entries.len(), cfg.out.display());
            let mut out = vec![cfg.out.join(crate::stress::corpus::CORPUS_MANIFEST)];
            for e in entries {
                out.extend([e.mix, e.vocal, e.instrumental, e.labels].map(|f| cfg.out.join(f)));
            }
            Ok(out)
        }
        Command::MixSnr { vocal, instrumental, levels } => mix_snr(cfg, vocal, instrumental, levels.as_deref()),
        Command::StressVibrato { model, grid } => {
            let det = TrainedModel::load(model)?;
            let heat = stress_vibrato(&det, grid)?;
            let mut out = heat.write(&cfg.out)?;
            let path = cfg.out.join("heatmap.json");
            std::fs::write(&path, serde_json::to_string_pretty(&heat)? + "\n")?;
            out.push(path);
            let overall = heat.region_mean(|_, _| true).unwrap_or(0.0);
            println!("{}: mean cell accuracy {:.3}", det.name(), overall);
            Ok(out)
        }
        Command::StressSnr { model, levels } => stress_snr(cfg, model, levels.as_deref()),
        Command::Report { summary, bottom } => report(cfg, summary, *bottom),
    }
}

fn parse_levels(raw: Option<&str>, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let Some(raw) = raw else {
        return Ok(cfg.snr.levels.clone());
    };
    let levels = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("SNR level {s:?} is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if levels.is_empty() {
        return Err(Error::InvalidParameter("no SNR levels given".into()));
    }
    Ok(levels)
}

/// WAV files named directly or found (sorted) in the given directories.
fn wav_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")));
            found.sort();
            out.extend(found);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(Error::FileNotFound(p.clone()));
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no WAV inputs found".into()));
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "clip".into())
}

fn extract(cfg: &ExperimentConfig, inputs: &[PathBuf], kind: ExtractKind, csv: bool) -> Result<Vec<PathBuf>> {
    use rayon::prelude::*;
    let files = wav_inputs(inputs)?;
    let written: Vec<Vec<PathBuf>> = files
        .par_iter()
        .map(|f| {
            let clip = read_wav(f)?;
            let (grid, layout, tag): (Grid, Vec<(String, usize, usize)>, &str) = match kind {
                ExtractKind::Features => {
                    let fc = &cfg.detector.fe.features;
                    let clip = if clip.sample_rate == fc.sample_rate {
                        clip
                    } else {
                        crate::audio::resample(&clip, fc.sample_rate)?
                    };
                    let m = assemble_features(&clip, fc)?;
                    (m.rows, m.layout, "features")
                }
                ExtractKind::Mel => {
                    let g = mel_frontend(&clip, &cfg.detector.cnn.frontend)?;
                    let n = g.n_cols();
                    (g, vec![("mel".into(), 0, n)], "mel")
                }
                ExtractKind::Hpss => {
                    let g = hpss_frontend(&clip, &cfg.detector.rnn.frontend)?;
                    let n = g.n_cols() / 2;
                    (g, vec![("harmonic".into(), 0, n), ("percussive".into(), n, 2 * n)], "hpss")
                }
            };
            let base = cfg.out.join(format!("{}.{tag}", stem(f)));
            let grid_path = base.with_extension(format!("{tag}.vdg"));
            let desc_path = base.with_extension(format!("{tag}.layout"));
            write_grid(&grid, &grid_path)?;
            write_descriptor(&desc_path, &layout)?;
            let mut out = vec![grid_path, desc_path];
            if csv {
                let header: Vec<String> = layout
                    .iter()
                    .flat_map(|(name, a, b)| (*a..*b).map(move |i| format!("{name}_{}", i - a)))
                    .collect();
                let csv_path = base.with_extension(format!("{tag}.csv"));
                write_grid_csv(&grid, &csv_path, Some(&header))?;
                out.push(csv_path);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    println!("extracted {} {:?} grids to {}", files.len(), kind, cfg.out.display());
    Ok(written.into_iter().flatten().collect())
}

/// Labeled clips of one split from the configured data source.
pub fn load_split(cfg: &ExperimentConfig, split: Split) -> Result<Vec<LabeledClip>> {
    let d = &cfg.data;
    if let Some(dir) = &d.corpus_dir {
        let tracks = read_corpus(dir)?;
        let clips = corpus_split(&tracks, split);
        if clips.is_empty() {
            return Err(Error::InvalidParameter(format!("corpus {} has no {split:?} tracks", dir.display())));
        }
        return Ok(clips);
    }
    let (audio, labels) = match split {
        Split::Train => (&d.train_audio, &d.train_labels),
        Split::Test => (&d.test_audio, &d.test_labels),
    };
    let (Some(audio), Some(labels)) = (audio, labels) else {
        let name = if split == Split::Train { "train" } else { "test" };
        return Err(Error::Config(format!(
            "no {name} data: set data.corpus_dir or data.{name}_audio and data.{name}_labels"
        )));
    };
    let aliases: HashSet<String> = d.vocal_labels.iter().cloned().collect();
    wav_inputs(std::slice::from_ref(audio))?
        .into_iter()
        .map(|f| {
            let id = stem(&f);
            Ok(LabeledClip {
                labels: parse_lab(labels.join(format!("{id}.lab")), &aliases)?,
                clip: read_wav(&f)?,
                id,
            })
        })
        .collect()
}

fn train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let data = load_split(cfg, Split::Train)?;
    log::info!("training {} on {} clips", cfg.pipeline, data.len());
    let model = train_detector(cfg.pipeline, &cfg.detector, &data, cfg.seed)?;
    let path = cfg.out.join(MODEL_FILE);
    model.save(&path)?;
    println!("trained {} on {} clips -> {}", cfg.pipeline, data.len(), path.display());
    Ok(vec![path])
}

fn predict(cfg: &ExperimentConfig, model: &Path, inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    use rayon::prelude::*;
    let det = TrainedModel::load(model)?;
    let files = wav_inputs(inputs)?;
    let out: Vec<PathBuf> = files
        .par_iter()
        .map(|f| {
            let track = det.detect(&read_wav(f)?)?;
            let path = cfg.out.join(format!("{}.csv", stem(f)));
            track.write_csv(&path)?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    println!("wrote {} prediction files to {}", out.len(), cfg.out.display());
    Ok(out)
}

fn evaluate(cfg: &ExperimentConfig, model: &Path) -> Result<Vec<PathBuf>> {
    let det = TrainedModel::load(model)?;
    let data = load_split(cfg, Split::Test)?;
    let report = evaluate_detector(&det, &data)?;
    let post = det.post();
    print!("{} on {} clips (frames pooled)\n{}", det.name(), data.len(), report.micro.to_table());
    let summary = EvaluationSummary::new(det.pipeline().name(), post.threshold, post.smooth_ms, report);
    let json = cfg.out.join(SUMMARY_FILE);
    summary.write_json(&json)?;
    let per_song = cfg.out.join("per_song.csv");
    summary.report.write_csv(&per_song)?;
    Ok(vec![json, per_song])
}

fn mix_snr(cfg: &ExperimentConfig, vocal: &Path, instrumental: &Path, levels: Option<&str>) -> Result<Vec<PathBuf>> {
    let levels = parse_levels(levels, cfg)?;
    let v = read_wav(vocal)?;
    let i = read_wav(instrumental)?;
    let csv_path = cfg.out.join("mix_report.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["file", "target_snr_db", "achieved_snr_db", "gain", "clipped", "normalization"])?;
    let mut out = Vec::new();
    for &level in &levels {
        let r = mix_at_snr(&v, &i, &cfg.snr.mix_spec(level))?;
        let name = format!("{}_snr{level:+}dB.wav", stem(vocal));
        write_wav(&r.mix, cfg.out.join(&name))?;
        w.write_record([
            name.clone(),
            level.to_string(),
            format!("{:.4}", r.achieved_snr_db),
            format!("{:.6}", r.gain),
            r.clipped.to_string(),
            format!("{:.6}", r.normalization),
        ])?;
        println!("{name}: achieved {:.3} dB (target {level} dB)", r.achieved_snr_db);
        out.push(cfg.out.join(name));
    }
    w.flush()?;
    out.push(csv_path);
    Ok(out)
}

fn stress_snr(cfg: &ExperimentConfig, models: &[PathBuf], levels: Option<&str>) -> Result<Vec<PathBuf>> {
    let levels = parse_levels(levels, cfg)?;
    let Some(dir) = &cfg.data.corpus_dir else {
        return Err(Error::Config("stress-snr needs separate stems: set data.corpus_dir".into()));
    };
    let tracks: Vec<SweepTrack> = read_corpus(dir)?
        .into_iter()
        .filter(|t: &CorpusTrack| t.split == Split::Test)
        .map(|t| SweepTrack {
            id: t.id,
            vocal: t.vocal,
            instrumental: t.instrumental,
            truth: t.labels,
        })
        .collect();
    let dets = models.iter().map(TrainedModel::load).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Detector> = dets.iter().map(|d| d as &dyn Detector).collect();
    let rows = snr_sweep(&tracks, &refs, &levels, &cfg.snr.mix_spec(0.0))?;
    println!("{:<6}{:>8}{:>9}{:>9}{:>9}", "model", "snr_db", "FPR(%)", "FNR(%)", "err(%)");
    for r in &rows {
        println!("{:<6}{:>8}{:>9}{:>9}{:>9.1}", r.model, r.snr_db, fmt_opt(r.fpr), fmt_opt(r.fnr), r.error);
    }
    let path = cfg.out.join("sweep.csv");
    write_sweep_csv(&rows, &path)?;
    Ok(vec![path])
}

fn report(cfg: &ExperimentConfig, summaries: &[PathBuf], bottom: usize) -> Result<Vec<PathBuf>> {
    let docs = summaries
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(Error::FileNotFound(p.clone()));
            }
            let s: EvaluationSummary = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;

    let names = ["Acc.(%)", "Recall(%)", "Precision(%)", "F-measure(%)", "FPR(%)", "FNR(%)"];
    let mut md = String::from("# Detector comparison\n\nFrames pooled over all test songs.\n\n| Metric |");
    for d in &docs {
        md.push_str(&format!(" {} |", d.pipeline.to_uppercase()));
    }
    md.push_str("\n|---|");
    md.push_str(&"---:|".repeat(docs.len()));
    md.push('\n');
    for (k, name) in names.iter().enumerate() {
        md.push_str(&format!("| {name} |"));
        for d in &docs {
            md.push_str(&format!(" {} |", fmt_opt(d.report.micro.values()[k])));
        }
        md.push('\n');
    }
    md.push_str("\nMean over songs:\n\n| Metric |");
    for d in &docs {
        md.push_str(&format!(" {} |", d.pipeline.to_uppercase()));
    }
    md.push_str("\n|---|");
    md.push_str(&"---:|".repeat(docs.len()));
    md.push('\n');
    for (k, name) in names.iter().enumerate() {
        md.push_str(&format!("| {name} |"));
        for d in &docs {
            let m = &d.report.macro_;
            let v = [Some(m.accuracy), m.recall, m.precision, m.f_measure, m.fpr, m.fnr][k];
            md.push_str(&format!(" {} |", fmt_opt(v)));
        }
        md.push('\n');
    }
    for d in &docs {
        md.push_str(&format!(
            "\n## {}: lowest-accuracy songs\n\n| Song | Acc.(%) | FPR(%) | FNR(%) |\n|---|---:|---:|---:|\n",
            d.pipeline.to_uppercase()
        ));
        for s in d.report.bottom(bottom) {
            let m: &MetricsReport = &s.metrics;
            md.push_str(&format!("| {} | {:.1} | {} | {} |\n", s.song, m.accuracy, fmt_opt(m.fpr), fmt_opt(m.fnr)));
        }
    }
    print!("{md}");
    let md_path = cfg.out.join("report.md");
    std::fs::write(&md_path, &md)?;

    let csv_path = cfg.out.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut header = vec!["pipeline".to_string(), "averaging".to_string()];
    header.extend(MetricsReport::COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.4}"));
    for d in &docs {
        let mut rec = vec![d.pipeline.clone(), "frames".to_string()];
        rec.extend(d.report.micro.values().into_iter().map(cell));
        w.write_record(&rec)?;
        let m = &d.report.macro_;
        let mut rec = vec![d.pipeline.clone(), "songs".to_string()];
        rec.extend([Some(m.accuracy), m.recall, m.precision, m.f_measure, m.fpr, m.fnr].into_iter().map(cell));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(vec![md_path, csv_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_become_recorded_overrides() {
        let cli = Cli::try_parse_from(["vdlab", "train", "--pipeline", "cnn", "--seed", "3", "--set", "detector.cnn.dense=8"]).unwrap();
        let o = collect_overrides(&cli);
        assert_eq!(o, vec!["pipeline=\"cnn\"", "seed=3", "detector.cnn.dense=8"]);
        let cfg = ExperimentConfig::from_toml_str("", &o).unwrap();
        assert_eq!((cfg.pipeline, cfg.seed, cfg.detector.cnn.dense), (Pipeline::Cnn, 3, 8));
    }

    #[test]
    fn levels_parse_with_negative_values() {
        let cfg = ExperimentConfig::default();
        assert_eq!(parse_levels(Some("-12,-6,0,6,12"), &cfg).unwrap(), vec![-12.0, -6.0, 0.0, 6.0, 12.0]);
        assert_eq!(parse_levels(None, &cfg).unwrap(), cfg.snr.levels);
        assert!(parse_levels(Some("-3,x"), &cfg).is_err());
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(["vdlab", "train", "--bogus"]), 1);
        assert_eq!(main_with_args(["vdlab", "frobnicate"]), 1);
    }

    #[test]
    fn every_subcommand_parses() {
        for args in [
            vec!["extract", "--input", "a.wav", "--kind", "mel"],
            vec!["train"],
            vec!["predict", "--model", "m", "--input", "a.wav"],
            vec!["evaluate", "--model", "m"],
            vec!["gen-vibrato"],
            vec!["gen-corpus", "--tracks", "4"],
            vec!["mix-snr", "--vocal", "v", "--instrumental", "i", "--levels", "-6,6"],
            vec!["stress-vibrato", "--model", "m", "--grid", "g"],
            vec!["stress-snr", "--model", "m", "--levels", "-12,-6,0,6,12"],
            vec!["report", "--summary", "s.json"],
        ] {
            let name = args[0];
            let cli = Cli::try_parse_from(std::iter::once("vdlab").chain(args)).unwrap();
            assert_eq!(cli.command.name(), name);
        }
    }
}
