//! `fd-harness`: benchmark full-duplex spoken dialogue servers.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fd_core::audio::{read_wav, write_wav};
use fd_core::corpus::{
    assemble_session, mix_noise, parse_script_json, validate_script, Difficulty, NoiseMode,
    SessionManifest,
};
use fd_core::events::read_events_jsonl;
use fd_core::metrics::{
    aggregate, breakdown_by_type, render_csv, render_markdown, render_to_dir, MetricReport,
    QualityInputs, RenderFormat, ReportLabel,
};
use fd_core::mockd::BehaviorScript;
use fd_core::scriptgen::{corpus_stats, generate_scripts, GenParams};
use fd_core::segment::{
    extract_timeline, Channel, EnergyVad, FileVad, ServiceVad, VadAdapter, VadParams,
};
use fd_core::stream::{
    reconstruct_output_timeline, run_session_tcp, run_session_virtual, write_trace_jsonl,
};
use fd_core::svc::{OpenAiChatClient, ReplayChatClient};
use fd_core::Wave;

use fd_harness::config::PipelineConfig;
use fd_harness::pipeline::run_pipeline;

#[derive(Parser)]
#[command(
    name = "fd-harness",
    about = "Benchmarking harness for full-duplex spoken dialogue systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate conversation scripts through an LLM service or replay file.
    Generate(GenerateArgs),
    /// Assemble per-utterance audio into sessions with silence gaps and
    /// optional noise.
    BuildCorpus(BuildCorpusArgs),
    /// Stream one session to a duplex server and record the trace.
    Run(RunArgs),
    /// Serve the deterministic scripted mock server over TCP.
    MockServe(MockServeArgs),
    /// Extract an utterance timeline from a WAV file.
    Segment(SegmentArgs),
    /// Aggregate per-session events into a metric report.
    Analyze(AnalyzeArgs),
    /// Render per-type SVG charts from a report file.
    Plot(PlotArgs),
    /// Run the whole pipeline from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Topics file, one topic per line.
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    /// Replay file for offline generation.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Chat service base URL (used when no replay file is given).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    model: String,
    #[arg(long, default_value_t = 0.7)]
    temperature: f64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

#[derive(Args)]
struct BuildCorpusArgs {
    /// Directory of script JSON files.
    #[arg(long)]
    scripts: PathBuf,
    /// Directory of per-utterance WAVs: `<conversation_id>/utt000.wav`, ...
    #[arg(long)]
    audio: PathBuf,
    #[arg(long, value_enum)]
    difficulty: DifficultyArg,
    #[arg(long, value_enum, default_value = "none")]
    noise_mode: NoiseModeArg,
    /// Target SNR in dB (0, 10, or 20), required for bg/gap noise.
    #[arg(long)]
    snr: Option<i32>,
    /// Directory of noise WAVs, required for bg/gap noise.
    #[arg(long)]
    noise_dir: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Session manifest path; the session WAV sits next to it.
    #[arg(long)]
    session: PathBuf,
    /// `host:port`, or `mock:<behavior.json>` for the in-process mock.
    #[arg(long)]
    endpoint: String,
    #[arg(long, default_value_t = 80)]
    chunk_ms: i64,
    #[arg(long, value_enum, default_value = "real")]
    clock: ClockArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MockServeArgs {
    #[arg(long)]
    behavior: PathBuf,
    #[arg(long)]
    port: u16,
}

#[derive(Args)]
struct SegmentArgs {
    /// Input WAV.
    #[arg(long = "in")]
    input: PathBuf,
    /// `builtin`, `file:PATH`, or `service:URL`.
    #[arg(long, default_value = "builtin")]
    vad: String,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 250)]
    min_speech_ms: i64,
    #[arg(long, default_value_t = 300)]
    min_silence_ms: i64,
    #[arg(long, value_enum, default_value = "model")]
    channel: ChannelArg,
    /// Output timeline JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of per-session `.events.jsonl` files. When omitted, events
    /// are detected from `--timelines`.
    #[arg(long, required_unless_present = "timelines")]
    events: Option<PathBuf>,
    /// Directory of per-session `.timeline.json` files; runs the event
    /// detector before aggregating.
    #[arg(long)]
    timelines: Option<PathBuf>,
    /// Directory of per-session `.manifest.json` files.
    #[arg(long)]
    manifests: PathBuf,
    /// Optional quality scores JSON file.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    t_early_ms: i64,
    #[arg(long, default_value_t = 15_000)]
    t_si_max_ms: i64,
    #[arg(long, default_value = "model")]
    model: String,
    #[arg(long, default_value = "dataset")]
    dataset: String,
    /// Report path; the extension picks the format (.json, .csv, .md).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Report JSON produced by `analyze`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DifficultyArg {
    Easy,
    Medium,
    Hard,
}

impl From<DifficultyArg> for Difficulty {
    fn from(v: DifficultyArg) -> Self {
        match v {
            DifficultyArg::Easy => Difficulty::Easy,
            DifficultyArg::Medium => Difficulty::Medium,
            DifficultyArg::Hard => Difficulty::Hard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseModeArg {
    None,
    Bg,
    Gap,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(v: NoiseModeArg) -> Self {
        match v {
            NoiseModeArg::None => NoiseMode::None,
            NoiseModeArg::Bg => NoiseMode::Bg,
            NoiseModeArg::Gap => NoiseMode::Gap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Real,
    Virtual,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    User,
    Model,
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::BuildCorpus(args) => cmd_build_corpus(args),
        Command::Run(args) => cmd_run(args),
        Command::MockServe(args) => cmd_mock_serve(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let topics: Vec<String> = std::fs::read_to_string(&args.topics)
        .with_context(|| format!("reading topics {}", args.topics.display()))?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if topics.is_empty() {
        bail!("topics file is empty");
    }
    let client: Box<dyn fd_core::svc::ChatClient> = match (&args.replay, &args.endpoint) {
        (Some(path), _) => Box::new(ReplayChatClient::from_file(path)?),
        (None, Some(endpoint)) => {
            Box::new(OpenAiChatClient::new(endpoint.clone(), args.model.clone()))
        }
        (None, None) => bail!("pass --replay FILE or --endpoint URL"),
    };
    let params = GenParams { retry_budget: args.retries, temperature: args.temperature };
    let scripts = generate_scripts(&topics, args.count, client.as_ref(), &params)?;
    std::fs::create_dir_all(&args.out)?;
    for script in &scripts {
        let path = args.out.join(format!("{}.json", script.conversation_id));
        std::fs::write(path, serde_json::to_string_pretty(script)?)?;
    }
    println!("{}", corpus_stats(&scripts));
    Ok(())
}

fn cmd_build_corpus(args: BuildCorpusArgs) -> Result<()> {
    let noise_mode: NoiseMode = args.noise_mode.into();
    if !matches!(noise_mode, NoiseMode::None) && (args.snr.is_none() || args.noise_dir.is_none())
    {
        bail!("--noise-mode bg|gap requires --snr and --noise-dir");
    }
    std::fs::create_dir_all(&args.out)?;

    let mut script_paths: Vec<PathBuf> = std::fs::read_dir(&args.scripts)
        .with_context(|| format!("reading {}", args.scripts.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    script_paths.sort();
    if script_paths.is_empty() {
        bail!("no scripts in {}", args.scripts.display());
    }

    let mut noise_files: Vec<PathBuf> = Vec::new();
    if let Some(dir) = &args.noise_dir {
        noise_files = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "wav"))
            .collect();
        noise_files.sort();
        if noise_files.is_empty() {
            bail!("noise dir {} has no wav files", dir.display());
        }
    }

    for (i, path) in script_paths.iter().enumerate() {
        let doc = parse_script_json(&std::fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let script = validate_script(&doc)
            .map_err(|v| anyhow!("script {} is invalid: {v:?}", path.display()))?;
        let sid = script.conversation_id.clone();
        let utterances: Vec<Wave> = (0..script.utterance_count())
            .map(|k| {
                let p = args.audio.join(&sid).join(format!("utt{k:03}.wav"));
                read_wav(&p, fd_core::SAMPLE_RATE_HZ)
                    .map_err(|e| anyhow!("reading {}: {e}", p.display()))
            })
            .collect::<Result<_>>()?;
        let seed = args.seed.wrapping_add(i as u64);
        let (mut wave, mut manifest) =
            assemble_session(&utterances, &script, args.difficulty.into(), seed)?;
        if !matches!(noise_mode, NoiseMode::None) {
            let noise_path = &noise_files[i % noise_files.len()];
            let noise: Wave = read_wav(noise_path, fd_core::SAMPLE_RATE_HZ)?;
            let (mixed, updated) = mix_noise(
                &wave,
                &manifest,
                noise_mode,
                args.snr.expect("checked"),
                &noise,
                seed.wrapping_add(1),
            )?;
            wave = mixed;
            manifest = updated;
        }
        write_wav(&args.out.join(format!("{sid}.wav")), &wave)?;
        manifest.write_file(&args.out.join(format!("{sid}.manifest.json")))?;
        println!(
            "built {sid}: {} segments, {} gaps, {:.1} s",
            manifest.segments.len(),
            manifest.gaps.len(),
            wave.duration_ms() as f64 / 1000.0
        );
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let manifest = SessionManifest::read_file(&args.session)
        .map_err(|e| anyhow!("reading manifest {}: {e}", args.session.display()))?;
    let wav_path = sibling_wav(&args.session)?;
    let wave: Wave = read_wav(&wav_path, fd_core::SAMPLE_RATE_HZ)
        .map_err(|e| anyhow!("reading session wav {}: {e}", wav_path.display()))?;
    std::fs::create_dir_all(&args.out)?;

    let trace = match (args.clock, args.endpoint.strip_prefix("mock:")) {
        (ClockArg::Virtual, Some(behavior_path)) => {
            let behavior = BehaviorScript::read_file(Path::new(behavior_path))?;
            run_session_virtual(&wave, &manifest, &behavior, args.chunk_ms)?
        }
        (ClockArg::Virtual, None) => {
            bail!("--clock virtual requires --endpoint mock:<behavior.json>")
        }
        (ClockArg::Real, Some(behavior_path)) => {
            let behavior = BehaviorScript::read_file(Path::new(behavior_path))?;
            let server = fd_core::mockd::spawn_server(behavior, "127.0.0.1:0")?;
            let trace =
                run_session_tcp(&wave, &manifest, &server.addr().to_string(), args.chunk_ms)?;
            server.shutdown();
            trace
        }
        (ClockArg::Real, None) => {
            run_session_tcp(&wave, &manifest, &args.endpoint, args.chunk_ms)?
        }
    };

    let sid = &manifest.session_id;
    write_trace_jsonl(&trace, &args.out.join(format!("{sid}.trace.jsonl")))?;
    let (out_wave, _) = reconstruct_output_timeline(&trace);
    write_wav(&args.out.join(format!("{sid}.out.wav")), &out_wave)?;
    println!(
        "session {sid}: complete={}, {} events, {} ms of model audio",
        trace.complete,
        trace.events.len(),
        trace.received_audio_ms()
    );
    if !trace.complete {
        bail!("trace incomplete: {}", trace.failure.as_deref().unwrap_or("unknown"));
    }
    Ok(())
}

fn cmd_mock_serve(args: MockServeArgs) -> Result<()> {
    let behavior = BehaviorScript::read_file(&args.behavior)?;
    let server = fd_core::mockd::spawn_server(behavior, &format!("127.0.0.1:{}", args.port))?;
    println!("mock server listening on {}", server.addr());
    // runs until killed
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    let wave: Wave = read_wav(&args.input, fd_core::SAMPLE_RATE_HZ)
        .map_err(|e| anyhow!("reading {}: {e}", args.input.display()))?;
    let vad: Box<dyn VadAdapter> = if args.vad == "builtin" {
        Box::new(EnergyVad::default())
    } else if let Some(path) = args.vad.strip_prefix("file:") {
        Box::new(FileVad { path: PathBuf::from(path) })
    } else if let Some(url) = args.vad.strip_prefix("service:") {
        Box::new(ServiceVad { url: url.to_string() })
    } else {
        bail!("unknown vad `{}` (use builtin, file:PATH, or service:URL)", args.vad)
    };
    let params = VadParams {
        threshold: args.threshold,
        min_speech_ms: args.min_speech_ms,
        min_silence_ms: args.min_silence_ms,
    };
    let channel = match args.channel {
        ChannelArg::User => Channel::User,
        ChannelArg::Model => Channel::Model,
    };
    let timeline = extract_timeline(&wave, vad.as_ref(), &params, channel)?;
    let json = serde_json::to_string_pretty(&timeline)?;
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

#[derive(serde::Deserialize, Default)]
struct ScoresFile {
    wer_percent: Option<f64>,
    c_ppl: Option<f64>,
    #[serde(default)]
    subjective: Vec<fd_core::judge::SubjectiveScore>,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let mut analyses = Vec::new();
    let mut manifests = Vec::new();
    if let Some(events_dir) = &args.events {
        let mut event_paths: Vec<PathBuf> = std::fs::read_dir(events_dir)
            .with_context(|| format!("reading {}", events_dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".events.jsonl"))
            .collect();
        event_paths.sort();
        if event_paths.is_empty() {
            bail!("no .events.jsonl files in {}", events_dir.display());
        }
        for path in &event_paths {
            let analysis = read_events_jsonl(path)?;
            let manifest_path =
                args.manifests.join(format!("{}.manifest.json", analysis.session_id));
            manifests.push(SessionManifest::read_file(&manifest_path).map_err(|e| {
                anyhow!("manifest for `{}`: {e}", analysis.session_id)
            })?);
            analyses.push(analysis);
        }
    } else {
        let timelines_dir = args.timelines.as_ref().expect("clap enforces one of the two");
        let mut timeline_paths: Vec<PathBuf> = std::fs::read_dir(timelines_dir)
            .with_context(|| format!("reading {}", timelines_dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".timeline.json"))
            .collect();
        timeline_paths.sort();
        if timeline_paths.is_empty() {
            bail!("no .timeline.json files in {}", timelines_dir.display());
        }
        let detector = fd_core::events::DetectorConfig {
            t_early_ms: args.t_early_ms,
            t_si_max_ms: args.t_si_max_ms,
            ..Default::default()
        };
        for path in &timeline_paths {
            let sid = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".timeline.json"))
                .ok_or_else(|| anyhow!("bad timeline file name {}", path.display()))?
                .to_string();
            let timeline = fd_core::segment::SegmentTimeline::read_file(path)?;
            let manifest =
                SessionManifest::read_file(&args.manifests.join(format!("{sid}.manifest.json")))
                    .map_err(|e| anyhow!("manifest for `{sid}`: {e}"))?;
            analyses.push(fd_core::events::detect_session(&manifest, &timeline, &detector)?);
            manifests.push(manifest);
        }
    }

    let quality = match &args.scores {
        None => QualityInputs::default(),
        Some(path) => {
            let scores: ScoresFile = serde_json::from_str(&std::fs::read_to_string(path)?)
                .with_context(|| format!("parsing scores {}", path.display()))?;
            QualityInputs {
                wer_percent: scores.wer_percent,
                c_ppl: scores.c_ppl,
                subjective: scores.subjective,
            }
        }
    };

    let mut report = aggregate(&analyses, &quality);
    report.label = ReportLabel { model: args.model.clone(), dataset: args.dataset.clone() };
    let pairs: Vec<_> = analyses.iter().zip(manifests.iter()).collect();
    report.per_type = breakdown_by_type(&pairs);

    let rendered = match args.out.extension().and_then(|e| e.to_str()) {
        Some("json") => report.to_json(),
        Some("csv") => render_csv(&[&report]),
        Some("md") => render_markdown(&[&report]),
        other => bail!("unsupported report extension {other:?} (use .json, .csv, or .md)"),
    };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, rendered)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading report {}", args.report.display()))?;
    // a report file holds either one report or a list of them
    let reports: Vec<MetricReport> = match serde_json::from_str::<Vec<MetricReport>>(&text) {
        Ok(list) => list,
        Err(_) => vec![MetricReport::from_json(&text).context("parsing report")?],
    };
    let refs: Vec<&MetricReport> = reports.iter().collect();
    let written = render_to_dir(&refs, RenderFormat::SvgPlots, &args.out, "report")?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let config = PipelineConfig::load(&args.config)?;
    let report = run_pipeline(&config)?;
    let skipped = report.outcomes.iter().filter(|o| o.skipped).count();
    let executed = report.outcomes.len() - skipped;
    println!("pipeline finished: {executed} stage runs, {skipped} skipped");
    for path in &report.report_paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sibling_wav(manifest_path: &Path) -> Result<PathBuf> {
    let name = manifest_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow!("bad session path"))?;
    let stem = name.strip_suffix(".manifest.json").unwrap_or_else(|| {
        manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or(name)
    });
    Ok(manifest_path.with_file_name(format!("{stem}.wav")))
}
