//! End-to-end pipeline: build corpus, stream sessions, segment, detect
//! events, and aggregate the report. Every stage is idempotent: outputs are
//! stamped with a hash of their inputs and skipped when nothing changed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use fd_core::audio::{read_wav, write_wav};
use fd_core::corpus::{
    assemble_session, mix_noise, parse_script_json, validate_script, ConversationScript,
    NoiseMode, SessionManifest,
};
use fd_core::events::{detect_session, read_events_jsonl, write_events_jsonl, SessionAnalysis};
use fd_core::hashutil::{sha256_hex, sha256_hex_parts};
use fd_core::judge::{conditioned_ppl_for, score_batch, JudgeConfig, SubjectiveScore};
use fd_core::metrics::{
    aggregate, breakdown_by_type, render_to_dir, QualityInputs, RenderFormat,
    ReportLabel,
};
use fd_core::mockd::BehaviorScript;
use fd_core::segment::{
    extract_timeline, AsrAdapter, CachedAsr, Channel, EnergyVad, FileVad, HttpAsr,
    PrecomputedAsr, SegmentTimeline, ServiceVad, VadAdapter, VadParams,
};
use fd_core::stream::{
    read_trace_jsonl, reconstruct_output_timeline, run_session_tcp, run_session_virtual,
    write_trace_jsonl, ClockMode, TraceEventKind,
};
use fd_core::svc::{HttpLogprobClient, OpenAiChatClient, ReplayChatClient};
use fd_core::Wave;

use crate::config::PipelineConfig;

const STAMPS_FILE: &str = ".stamps.json";

/// What happened to each (stage, session) pair during a pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub session_id: String,
    pub skipped: bool,
}

#[derive(Debug, Default)]
pub struct PipelineReport {
    pub outcomes: Vec<StageOutcome>,
    pub report_paths: Vec<PathBuf>,
}

impl PipelineReport {
    pub fn all_skipped(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|o| o.skipped)
    }
}

struct Stamps {
    path: PathBuf,
    map: Mutex<BTreeMap<String, String>>,
}

impl Stamps {
    fn load(dir: &Path) -> Self {
        let path = dir.join(STAMPS_FILE);
        let map = std::fs::read_to_string(&path)
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_default();
        Self { path, map: Mutex::new(map) }
    }

    fn is_fresh(&self, key: &str, input_hash: &str, outputs: &[PathBuf]) -> bool {
        let map = self.map.lock().unwrap();
        map.get(key).map(String::as_str) == Some(input_hash)
            && outputs.iter().all(|p| p.exists())
    }

    fn record(&self, key: &str, input_hash: &str) {
        self.map.lock().unwrap().insert(key.to_string(), input_hash.to_string());
    }

    fn save(&self) -> Result<()> {
        let map = self.map.lock().unwrap();
        std::fs::write(&self.path, serde_json::to_string_pretty(&*map)?)?;
        Ok(())
    }
}

macro_rules! stage_err {
    ($stage:expr, $session:expr) => {
        |e| anyhow!("stage `{}` failed for session `{}`: {e}", $stage, $session)
    };
}

/// Runs the whole pipeline described by `config`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let out = &config.out.dir;
    for sub in ["audio", "manifests", "traces", "timelines", "events"] {
        std::fs::create_dir_all(out.join(sub))?;
    }
    let stamps = Stamps::load(out);
    let outcomes: Mutex<Vec<StageOutcome>> = Mutex::new(Vec::new());

    if let Some(generate) = &config.generate {
        run_generate_stage(config, generate, &stamps, &outcomes)?;
    }

    let scripts = load_scripts(&config.corpus.scripts_dir)?;
    if scripts.is_empty() {
        bail!("no scripts found in {}", config.corpus.scripts_dir.display());
    }

    // fan sessions out across workers; stages within one session stay
    // sequential
    let results: Mutex<Vec<Result<()>>> = Mutex::new(Vec::new());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = config.out.workers.max(1).min(scripts.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= scripts.len() {
                    break;
                }
                let result = run_session_chain(config, &scripts[i], &stamps, &outcomes);
                results.lock().unwrap().push(result);
            });
        }
    });
    for result in results.into_inner().unwrap() {
        if let Err(e) = result {
            stamps.save().ok(); // keep completed stages skippable on rerun
            return Err(e);
        }
    }

    let report_paths = run_analysis(config, &scripts, &stamps, &outcomes)?;
    stamps.save()?;

    Ok(PipelineReport { outcomes: outcomes.into_inner().unwrap(), report_paths })
}

fn run_generate_stage(
    config: &PipelineConfig,
    generate: &crate::config::GenerateConfig,
    stamps: &Stamps,
    outcomes: &Mutex<Vec<StageOutcome>>,
) -> Result<()> {
    use fd_core::scriptgen::{generate_scripts, GenParams};

    std::fs::create_dir_all(&config.corpus.scripts_dir)?;
    let mut topics = generate.topics.clone();
    if let Some(file) = &generate.topics_file {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("reading topics {}", file.display()))?;
        topics.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if topics.is_empty() {
        topics.push("daily life".into());
    }

    let hash = sha256_hex_parts(&[
        topics.join("\n").as_bytes(),
        generate.count.to_string().as_bytes(),
        format!("{:.3}", generate.temperature).as_bytes(),
    ]);
    let outputs: Vec<PathBuf> = (0..generate.count)
        .map(|i| config.corpus.scripts_dir.join(format!("conv{i:04}.json")))
        .collect();
    if stamps.is_fresh("generate", &hash, &outputs) {
        outcomes.lock().unwrap().push(StageOutcome {
            stage: "generate".into(),
            session_id: "*".into(),
            skipped: true,
        });
        return Ok(());
    }

    let client: Box<dyn fd_core::svc::ChatClient> = match (&generate.replay_file, &generate.endpoint) {
        (Some(path), _) => Box::new(
            ReplayChatClient::from_file(path).map_err(stage_err!("generate", "*"))?,
        ),
        (None, Some(endpoint)) => Box::new(OpenAiChatClient::new(
            endpoint.clone(),
            generate.model.clone().unwrap_or_else(|| "gpt-4o".into()),
        )),
        (None, None) => bail!("stage `generate` needs replay_file or endpoint"),
    };
    let params = GenParams { retry_budget: generate.retry_budget, temperature: generate.temperature };
    let scripts = generate_scripts(&topics, generate.count, client.as_ref(), &params)
        .map_err(stage_err!("generate", "*"))?;
    for (script, path) in scripts.iter().zip(&outputs) {
        std::fs::write(path, serde_json::to_string_pretty(script)?)?;
    }
    stamps.record("generate", &hash);
    outcomes.lock().unwrap().push(StageOutcome {
        stage: "generate".into(),
        session_id: "*".into(),
        skipped: false,
    });
    Ok(())
}

fn load_scripts(dir: &Path) -> Result<Vec<ConversationScript>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading scripts dir {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut scripts = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let doc = parse_script_json(&text)
            .with_context(|| format!("parsing script {}", path.display()))?;
        let script = validate_script(&doc).map_err(|violations| {
            anyhow!("script {} is invalid: {:?}", path.display(), violations)
        })?;
        scripts.push(script);
    }
    Ok(scripts)
}

/// Derives the per-session gap seed from the corpus seed and the id, so
/// sessions differ but reruns are stable.
fn session_seed(base: u64, session_id: &str) -> u64 {
    let h = sha256_hex(session_id.as_bytes());
    let mut bytes = [0u8; 8];
    for (i, b) in bytes.iter_mut().enumerate() {
        *b = u8::from_str_radix(&h[i * 2..i * 2 + 2], 16).unwrap_or(0);
    }
    base ^ u64::from_le_bytes(bytes)
}

struct SessionPaths {
    wav: PathBuf,
    manifest: PathBuf,
    trace: PathBuf,
    out_wav: PathBuf,
    timeline: PathBuf,
    events: PathBuf,
}

fn session_paths(out: &Path, sid: &str) -> SessionPaths {
    SessionPaths {
        wav: out.join("audio").join(format!("{sid}.wav")),
        manifest: out.join("manifests").join(format!("{sid}.manifest.json")),
        trace: out.join("traces").join(format!("{sid}.trace.jsonl")),
        out_wav: out.join("traces").join(format!("{sid}.out.wav")),
        timeline: out.join("timelines").join(format!("{sid}.timeline.json")),
        events: out.join("events").join(format!("{sid}.events.jsonl")),
    }
}

fn run_session_chain(
    config: &PipelineConfig,
    script: &ConversationScript,
    stamps: &Stamps,
    outcomes: &Mutex<Vec<StageOutcome>>,
) -> Result<()> {
    let sid = script.conversation_id.clone();
    let out = &config.out.dir;
    let paths = session_paths(out, &sid);
    let note = |stage: &str, skipped: bool| {
        outcomes.lock().unwrap().push(StageOutcome {
            stage: stage.into(),
            session_id: sid.clone(),
            skipped,
        });
    };

    // ---- build-corpus ----
    let utterance_files = utterance_paths(&config.corpus.audio_dir, script)?;
    let mut build_parts: Vec<Vec<u8>> = vec![serde_json::to_string(script)?.into_bytes()];
    for p in &utterance_files {
        build_parts.push(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
    }
    build_parts.push(
        format!(
            "{:?}|{:?}|{:?}|{}",
            config.corpus.difficulty, config.corpus.noise_mode, config.corpus.snr_db,
            config.corpus.seed
        )
        .into_bytes(),
    );
    if let (NoiseMode::Bg | NoiseMode::Gap, Some(dir)) =
        (config.corpus.noise_mode, config.corpus.noise_dir.as_ref())
    {
        let noise = pick_noise_file(dir, &sid)?;
        build_parts.push(noise.to_string_lossy().into_owned().into_bytes());
    }
    let build_hash =
        sha256_hex_parts(&build_parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let build_outputs = vec![paths.wav.clone(), paths.manifest.clone()];
    if stamps.is_fresh(&format!("build/{sid}"), &build_hash, &build_outputs) {
        note("build-corpus", true);
    } else {
        let on_err = "build-corpus";
        let utterances: Vec<Wave> = utterance_files
            .iter()
            .map(|p| read_wav(p, fd_core::SAMPLE_RATE_HZ))
            .collect::<Result<_, _>>()
            .map_err(stage_err!(on_err, &sid))?;
        let seed = session_seed(config.corpus.seed, &sid);
        let (mut wave, mut manifest) =
            assemble_session(&utterances, script, config.corpus.difficulty, seed)
                .map_err(stage_err!(on_err, &sid))?;
        if let (NoiseMode::Bg | NoiseMode::Gap, Some(dir), Some(snr)) = (
            config.corpus.noise_mode,
            config.corpus.noise_dir.as_ref(),
            config.corpus.snr_db,
        ) {
            let noise_path = pick_noise_file(dir, &sid)?;
            let noise: Wave =
                read_wav(&noise_path, fd_core::SAMPLE_RATE_HZ).map_err(stage_err!(on_err, &sid))?;
            let (mixed, updated) = mix_noise(
                &wave,
                &manifest,
                config.corpus.noise_mode,
                snr,
                &noise,
                seed.wrapping_add(1),
            )
            .map_err(stage_err!(on_err, &sid))?;
            wave = mixed;
            manifest = updated;
        }
        write_wav(&paths.wav, &wave).map_err(stage_err!(on_err, &sid))?;
        manifest.write_file(&paths.manifest).map_err(stage_err!(on_err, &sid))?;
        stamps.record(&format!("build/{sid}"), &build_hash);
        note("build-corpus", false);
    }

    // ---- run ----
    let wav_bytes = std::fs::read(&paths.wav)?;
    let manifest_bytes = std::fs::read(&paths.manifest)?;
    let mut run_parts: Vec<Vec<u8>> = vec![
        wav_bytes.clone(),
        manifest_bytes.clone(),
        format!("{}|{}|{:?}", config.run.endpoint, config.run.chunk_ms, config.run.clock)
            .into_bytes(),
    ];
    if let Some(behavior_path) = config.run.mock_behavior_path() {
        run_parts.push(std::fs::read(behavior_path)?);
    }
    let run_hash = sha256_hex_parts(&run_parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let run_outputs = vec![paths.trace.clone(), paths.out_wav.clone()];
    if stamps.is_fresh(&format!("run/{sid}"), &run_hash, &run_outputs) {
        note("run", true);
    } else {
        let on_err = "run";
        let wave: Wave = read_wav(&paths.wav, fd_core::SAMPLE_RATE_HZ).map_err(stage_err!(on_err, &sid))?;
        let manifest = SessionManifest::read_file(&paths.manifest).map_err(stage_err!(on_err, &sid))?;
        let trace = match (config.run.clock, config.run.mock_behavior_path()) {
            (ClockMode::Virtual, Some(behavior_path)) => {
                let behavior =
                    BehaviorScript::read_file(Path::new(behavior_path)).map_err(stage_err!(on_err, &sid))?;
                run_session_virtual(&wave, &manifest, &behavior, config.run.chunk_ms)
                    .map_err(stage_err!(on_err, &sid))?
            }
            (ClockMode::Virtual, None) => {
                return Err(anyhow!(
                    "stage `run` failed for session `{sid}`: virtual clock needs a mock endpoint"
                ))
            }
            (ClockMode::RealTime, Some(behavior_path)) => {
                // spin up a private mock server for this session
                let behavior =
                    BehaviorScript::read_file(Path::new(behavior_path)).map_err(stage_err!(on_err, &sid))?;
                let server = fd_core::mockd::spawn_server(behavior, "127.0.0.1:0")
                    .map_err(stage_err!(on_err, &sid))?;
                let trace =
                    run_session_tcp(&wave, &manifest, &server.addr().to_string(), config.run.chunk_ms)
                        .map_err(stage_err!(on_err, &sid))?;
                server.shutdown();
                trace
            }
            (ClockMode::RealTime, None) => {
                run_session_tcp(&wave, &manifest, &config.run.endpoint, config.run.chunk_ms)
                    .map_err(stage_err!(on_err, &sid))?
            }
        };
        if !trace.complete {
            return Err(anyhow!(
                "stage `run` failed for session `{sid}`: incomplete trace: {}",
                trace.failure.as_deref().unwrap_or("unknown")
            ));
        }
        write_trace_jsonl(&trace, &paths.trace).map_err(stage_err!(on_err, &sid))?;
        let (out_wave, _) = reconstruct_output_timeline(&trace);
        write_wav(&paths.out_wav, &out_wave).map_err(stage_err!(on_err, &sid))?;
        stamps.record(&format!("run/{sid}"), &run_hash);
        note("run", false);
    }

    // ---- segment ----
    let out_wav_bytes = std::fs::read(&paths.out_wav)?;
    let segment_hash = sha256_hex_parts(&[
        &out_wav_bytes,
        format!(
            "{}|{}|{}|{}",
            config.segment.vad,
            config.segment.threshold,
            config.segment.min_speech_ms,
            config.segment.min_silence_ms
        )
        .as_bytes(),
    ]);
    if stamps.is_fresh(&format!("segment/{sid}"), &segment_hash, &[paths.timeline.clone()]) {
        note("segment", true);
    } else {
        let on_err = "segment";
        let out_wave: Wave = read_wav(&paths.out_wav, fd_core::SAMPLE_RATE_HZ).map_err(stage_err!(on_err, &sid))?;
        let vad = make_vad(&config.segment.vad, &sid)?;
        let params = VadParams {
            threshold: config.segment.threshold,
            min_speech_ms: config.segment.min_speech_ms,
            min_silence_ms: config.segment.min_silence_ms,
        };
        let timeline =
            extract_timeline(&out_wave, vad.as_ref(), &params, Channel::Model).map_err(stage_err!(on_err, &sid))?;
        timeline.write_file(&paths.timeline).map_err(stage_err!(on_err, &sid))?;
        stamps.record(&format!("segment/{sid}"), &segment_hash);
        note("segment", false);
    }

    // ---- events ----
    let timeline_bytes = std::fs::read(&paths.timeline)?;
    let detector = config.detector.to_detector_config();
    let events_hash = sha256_hex_parts(&[
        &manifest_bytes,
        &timeline_bytes,
        format!("{detector:?}").as_bytes(),
    ]);
    if stamps.is_fresh(&format!("events/{sid}"), &events_hash, &[paths.events.clone()]) {
        note("events", true);
    } else {
        let on_err = "events";
        let manifest = SessionManifest::read_file(&paths.manifest).map_err(stage_err!(on_err, &sid))?;
        let timeline = SegmentTimeline::read_file(&paths.timeline).map_err(stage_err!(on_err, &sid))?;
        let analysis = detect_session(&manifest, &timeline, &detector).map_err(stage_err!(on_err, &sid))?;
        write_events_jsonl(&analysis, &paths.events).map_err(stage_err!(on_err, &sid))?;
        stamps.record(&format!("events/{sid}"), &events_hash);
        note("events", false);
    }

    Ok(())
}

/// Utterance files for a script: `<audio_dir>/<conversation_id>/utt###.wav`
/// in conversational order.
fn utterance_paths(audio_dir: &Path, script: &ConversationScript) -> Result<Vec<PathBuf>> {
    let dir = audio_dir.join(&script.conversation_id);
    let count = script.utterance_count();
    let paths: Vec<PathBuf> =
        (0..count).map(|i| dir.join(format!("utt{i:03}.wav"))).collect();
    for p in &paths {
        if !p.exists() {
            bail!(
                "stage `build-corpus` failed for session `{}`: missing utterance file {}",
                script.conversation_id,
                p.display()
            );
        }
    }
    Ok(paths)
}

/// Deterministic noise clip choice per session from the pool directory.
fn pick_noise_file(dir: &Path, session_id: &str) -> Result<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading noise dir {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wav"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("noise dir {} has no wav files", dir.display());
    }
    let index = (session_seed(0, session_id) % files.len() as u64) as usize;
    Ok(files[index].clone())
}

fn make_vad(spec: &str, sid: &str) -> Result<Box<dyn VadAdapter>> {
    if spec == "builtin" {
        Ok(Box::new(EnergyVad::default()))
    } else if let Some(dir) = spec.strip_prefix("file:") {
        Ok(Box::new(FileVad { path: Path::new(dir).join(format!("{sid}.json")) }))
    } else if let Some(url) = spec.strip_prefix("service:") {
        Ok(Box::new(ServiceVad { url: url.to_string() }))
    } else {
        bail!("unknown vad adapter `{spec}` (use builtin, file:DIR, or service:URL)")
    }
}

fn make_asr(section: &crate::config::AsrConfigSection) -> Result<Box<dyn AsrAdapter>> {
    if let Some(dir) = section.adapter.strip_prefix("precomputed:") {
        return Ok(Box::new(PrecomputedAsr { dir: PathBuf::from(dir) }));
    }
    if let Some(url) = section.adapter.strip_prefix("service:") {
        let http = HttpAsr { url: url.to_string() };
        return Ok(match &section.cache_dir {
            Some(dir) => Box::new(CachedAsr::new(http, dir.clone(), 3)?),
            None => Box::new(http),
        });
    }
    bail!("unknown asr adapter `{}` (use precomputed:DIR or service:URL)", section.adapter)
}

/// Final stage: quality scoring plus aggregation into the report files.
fn run_analysis(
    config: &PipelineConfig,
    scripts: &[ConversationScript],
    stamps: &Stamps,
    outcomes: &Mutex<Vec<StageOutcome>>,
) -> Result<Vec<PathBuf>> {
    let out = &config.out.dir;
    let mut analyses: Vec<SessionAnalysis> = Vec::new();
    let mut manifests: Vec<SessionManifest> = Vec::new();
    let mut hash_parts: Vec<Vec<u8>> = Vec::new();
    for script in scripts {
        let paths = session_paths(out, &script.conversation_id);
        hash_parts.push(std::fs::read(&paths.events)?);
        hash_parts.push(std::fs::read(&paths.manifest)?);
        analyses.push(read_events_jsonl(&paths.events).map_err(stage_err!("analyze", "*"))?);
        manifests.push(SessionManifest::read_file(&paths.manifest).map_err(stage_err!("analyze", "*"))?);
    }

    let quality = compute_quality(config, scripts).map_err(|e| anyhow!("stage `analyze`: {e}"))?;
    hash_parts.push(
        format!(
            "{}|{}|{:?}|{:?}",
            config.model_name, config.dataset_name, quality.wer_percent, quality.c_ppl
        )
        .into_bytes(),
    );
    let analyze_hash =
        sha256_hex_parts(&hash_parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let report_outputs = vec![
        out.join("report.json"),
        out.join("report.csv"),
        out.join("report.md"),
    ];
    if stamps.is_fresh("analyze", &analyze_hash, &report_outputs) {
        outcomes.lock().unwrap().push(StageOutcome {
            stage: "analyze".into(),
            session_id: "*".into(),
            skipped: true,
        });
        return Ok(report_outputs);
    }

    let mut report = aggregate(&analyses, &quality);
    report.label = ReportLabel {
        model: config.model_name.clone(),
        dataset: config.dataset_name.clone(),
    };
    let pairs: Vec<(&SessionAnalysis, &SessionManifest)> =
        analyses.iter().zip(manifests.iter()).collect();
    report.per_type = breakdown_by_type(&pairs);

    let mut written = Vec::new();
    written.extend(render_to_dir(&[&report], RenderFormat::Json, out, "report")?);
    written.extend(render_to_dir(&[&report], RenderFormat::Csv, out, "report")?);
    written.extend(render_to_dir(&[&report], RenderFormat::Markdown, out, "report")?);
    written.extend(render_to_dir(&[&report], RenderFormat::SvgPlots, &out.join("plots"), "report")?);
    stamps.record("analyze", &analyze_hash);
    outcomes.lock().unwrap().push(StageOutcome {
        stage: "analyze".into(),
        session_id: "*".into(),
        skipped: false,
    });
    Ok(written)
}

/// Gathers WER, c-PPL, and judge scores from the per-session traces,
/// against the configured adapters. Anything disabled stays absent.
fn compute_quality(config: &PipelineConfig, scripts: &[ConversationScript]) -> Result<QualityInputs> {
    let out = &config.out.dir;
    let mut quality = QualityInputs::default();

    // reply texts per session come from the trace; the reply audio is the
    // reconstructed output wav
    let mut wer_pairs: Vec<(String, String)> = Vec::new();
    let mut judge_items: Vec<(String, String)> = Vec::new();
    let mut cppl_values: Vec<f64> = Vec::new();

    for script in scripts {
        let paths = session_paths(out, &script.conversation_id);
        let trace = read_trace_jsonl(&paths.trace)?;
        let texts: Vec<String> = trace
            .events
            .iter()
            .filter(|e| e.kind == TraceEventKind::TextReceived)
            .filter_map(|e| e.text.clone())
            .collect();
        if texts.is_empty() {
            continue;
        }
        let reply_text = texts.join(" ");
        let context: String = script
            .utterances_in_order()
            .iter()
            .map(|u| u.text.clone())
            .collect::<Vec<_>>()
            .join("\n");

        if let Some(asr) = config.asr.as_ref().filter(|a| a.enabled) {
            let adapter = make_asr(asr)?;
            let out_wave: Wave = read_wav(&paths.out_wav, fd_core::SAMPLE_RATE_HZ)
                .map_err(|e| anyhow!("reading {}: {e}", paths.out_wav.display()))?;
            let transcript = adapter
                .transcribe(&out_wave, asr.beam_size)
                .map_err(|e| anyhow!("asr for `{}`: {e}", script.conversation_id))?;
            wer_pairs.push((reply_text.clone(), transcript.text));
        }
        if config.judge.as_ref().is_some_and(|j| j.enabled) {
            judge_items.push((context.clone(), reply_text.clone()));
        }
        if let Some(cppl) = config.cppl.as_ref().filter(|c| c.enabled) {
            let lm = HttpLogprobClient { url: cppl.service_url.clone() };
            cppl_values.push(
                conditioned_ppl_for(&context, &reply_text, &lm)
                    .map_err(|e| anyhow!("c-ppl for `{}`: {e}", script.conversation_id))?,
            );
        }
    }

    if !wer_pairs.is_empty() {
        quality.wer_percent =
            Some(fd_core::segment::pooled_wer(&wer_pairs).map_err(|e| anyhow!("wer: {e}"))?.wer_percent);
    }
    if !cppl_values.is_empty() {
        quality.c_ppl = Some(cppl_values.iter().sum::<f64>() / cppl_values.len() as f64);
    }
    if let Some(judge) = config.judge.as_ref().filter(|j| j.enabled) {
        let judge_config = JudgeConfig {
            temperature: judge.temperature,
            max_retries: judge.max_retries,
            max_in_flight: judge.max_in_flight,
        };
        let client: Box<dyn fd_core::svc::ChatClient> = match (&judge.replay_file, &judge.endpoint)
        {
            (Some(path), _) => Box::new(ReplayChatClient::from_file(path)?),
            (None, Some(endpoint)) => Box::new(OpenAiChatClient::new(
                endpoint.clone(),
                judge.model.clone().unwrap_or_else(|| "gpt-4o".into()),
            )),
            (None, None) => bail!("judge.enabled requires replay_file or endpoint"),
        };
        let batch = score_batch(&judge_items, client.as_ref(), &judge_config);
        let scores: Vec<SubjectiveScore> = batch.scores.into_iter().flatten().collect();
        quality.subjective = scores;
    }
    Ok(quality)
}
