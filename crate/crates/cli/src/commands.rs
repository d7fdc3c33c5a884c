use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Duration;

use serde::Serialize;
use sessionforge::curation::{self, FilterMode};
use sessionforge::dialogue::{
    ambiguity_distribution, export_jsonl, import_jsonl, AmbiguityLabel, AmbiguityType, AnnotatedDialogue, LabelClass,
};
use sessionforge::dsp::{denoise_session, prefilter_native, DenoisePolicy};
use sessionforge::metrics::{compute_trial_metrics, MetricsReport};
use sessionforge::pipeline::{grid_rate, run_pipeline, PipelineOptions, PipelineReport};
use sessionforge::session::{load_session, save_session, ChannelDescriptor, FailureFlag, StreamDescriptor};
use sessionforge::sync::{read_synced, sync_session, write_synced, SyncOptions, SYNCED_FILE};
use sessionforge::synth::{gen_dataset, gen_session, DatasetSpec, Scenario};
use sessionforge::transport::{start_recording, RecorderConfig};
use sessionforge::Task;

use super::*;

type Result<T = ()> = std::result::Result<T, Failure>;

// Output may go to a pipe that closes early (`| head`); that is not an error.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub fn run(command: Command) -> Result {
    match command {
        Command::Record(a) => record(a),
        Command::Synth(a) => synth(a),
        Command::Sync(a) => sync(a),
        Command::Denoise(a) => denoise(a),
        Command::Analyze(a) => analyze(a),
        Command::Curate(c) => curate(c),
        Command::Dialogue(c) => dialogue(c),
        Command::Report(a) => report(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn print_json<T: Serialize>(value: &T) {
    outln!("{}", serde_json::to_string_pretty(value).expect("value serializes"));
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn load_policy(arg: &FilterArgs) -> Result<DenoisePolicy> {
    if arg.policy == "default" {
        Ok(DenoisePolicy::default())
    } else {
        Ok(DenoisePolicy::from_file(Path::new(&arg.policy))?)
    }
}

fn sync_options(tau: Option<f64>, max_gap: Option<f64>) -> Result<SyncOptions> {
    let mut opts = SyncOptions::default();
    if let Some(t) = tau {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::usage(format!("--tau must be a non-negative number of seconds, got {t}")));
        }
        opts.tau = Some(t);
    }
    if let Some(g) = max_gap {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Failure::usage(format!("--max-gap must be non-negative, got {g}")));
        }
        opts.max_gap = g;
    }
    Ok(opts)
}

fn parse_rate(name: &str, rate: &str, spec: &str) -> Result<f64> {
    match rate.parse::<f64>() {
        Ok(r) if r > 0.0 && r.is_finite() => Ok(r),
        _ => Err(Failure::usage(format!("bad rate in '{spec}' for stream '{name}'"))),
    }
}

/// `NAME=RATE:CH1,CH2`, each channel optionally `CH/UNIT`; the unit defaults to "1".
fn numeric_stream(spec: &str) -> Result<StreamDescriptor> {
    let bad = || Failure::usage(format!("stream spec '{spec}' is not NAME=RATE:CH1[/UNIT],CH2[/UNIT],..."));
    let (name, rest) = spec.split_once('=').ok_or_else(bad)?;
    let (rate, chans) = rest.split_once(':').ok_or_else(bad)?;
    let channels: Vec<ChannelDescriptor> = chans
        .split(',')
        .filter(|c| !c.is_empty())
        .map(|c| match c.split_once('/') {
            Some((c, unit)) => ChannelDescriptor::new(c, unit),
            None => ChannelDescriptor::new(c, "1"),
        })
        .collect();
    if name.is_empty() || channels.is_empty() || channels.iter().any(|c| c.name.is_empty() || c.unit.is_empty()) {
        return Err(bad());
    }
    Ok(StreamDescriptor::numeric(name, parse_rate(name, rate, spec)?, channels))
}

/// `NAME=RATE`
fn video_stream(spec: &str) -> Result<StreamDescriptor> {
    let (name, rate) = spec
        .split_once('=')
        .filter(|(n, _)| !n.is_empty())
        .ok_or_else(|| Failure::usage(format!("video spec '{spec}' is not NAME=RATE")))?;
    Ok(StreamDescriptor::video(name, parse_rate(name, rate, spec)?))
}

fn record(a: RecordArgs) -> Result {
    if a.streams.is_empty() && a.videos.is_empty() && a.udp_port.is_none() {
        return Err(Failure::usage("nothing to record: give --stream, --video or --udp-port"));
    }
    let mut config = RecorderConfig::new(a.out.join(&a.session_id), &a.session_id, Task::from(a.task));
    config.participant_id = a.participant;
    config.tcp_addr = SocketAddr::new(a.bind, a.tcp_port);
    for s in &a.streams {
        config.streams.push(numeric_stream(s)?);
    }
    for v in &a.videos {
        config.streams.push(video_stream(v)?);
    }
    if let Some(port) = a.udp_port {
        config.udp_addr = Some(SocketAddr::new(a.bind, port));
        config.audio = Some(StreamDescriptor::audio("mic", a.audio_rate));
        config.audio_expected_datagrams = a.expected_datagrams;
    }
    let handle = start_recording(config)?;
    match handle.udp_addr() {
        Some(u) => outln!("listening tcp={} udp={u}", handle.tcp_addr()),
        None => outln!("listening tcp={}", handle.tcp_addr()),
    }
    std::io::stdout().flush().ok();

    match a.duration {
        Some(secs) if secs >= 0.0 && secs.is_finite() => std::thread::sleep(Duration::from_secs_f64(secs)),
        Some(secs) => return Err(Failure::usage(format!("--duration must be non-negative, got {secs}"))),
        None => {
            // stop on the first line or at end of input
            let (tx, rx) = mpsc::channel();
            std::thread::spawn(move || {
                let mut line = String::new();
                let _ = std::io::stdin().lock().read_line(&mut line);
                let _ = tx.send(());
            });
            let _ = rx.recv();
        }
    }
    let summary = handle.stop()?;
    print_json(&summary);
    Ok(())
}

fn synth(a: SynthArgs) -> Result {
    let file = match &a.scenario {
        Some(p) => Some(
            serde_json::from_slice::<Scenario>(&read_file(p)?)
                .map_err(|e| Failure::data("malformed_scenario", format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    if a.dataset {
        let defaults = DatasetSpec::default();
        let base = file.unwrap_or(defaults.base.clone());
        let spec = DatasetSpec {
            seed: a.seed.unwrap_or(base.seed),
            base,
            label: !a.unlabeled,
            ..defaults
        };
        let truths = gen_dataset(&spec, &a.out)?;
        write_file(&a.out.join("ground_truth.json"), json_text(&truths))?;
        outln!("{} trials written to {}", truths.len(), a.out.display());
    } else {
        let mut scenario = file.unwrap_or_default();
        if let Some(seed) = a.seed {
            scenario.seed = seed;
        }
        let out = gen_session(&scenario)?;
        save_session(&out.session, &a.out)?;
        write_file(&a.out.join("ground_truth.json"), json_text(&out.truth))?;
        print_json(&out.truth);
    }
    Ok(())
}

fn sync(a: SyncArgs) -> Result {
    let opts = sync_options(a.tau, a.max_gap)?;
    let raw = load_session(&a.input)?;
    let (raw, native) = match (a.no_prefilter, grid_rate(&raw)) {
        (false, Some(rate)) => {
            let (r, rec) = prefilter_native(&raw, &load_policy(&a.filter)?, rate)?;
            (Cow::Owned(r), rec)
        }
        _ => (Cow::Borrowed(&raw), BTreeMap::new()),
    };
    let mut synced = sync_session(&raw, opts)?;
    synced.filtered = native;
    write_synced(&synced, &a.out)?;
    print_json(&synced.report());
    Ok(())
}

fn denoise(a: DenoiseArgs) -> Result {
    let policy = load_policy(&a.filter)?;
    let synced = read_synced(&a.input)?;
    let out = denoise_session(&synced, &policy)?;
    write_synced(&out, &a.out)?;
    print_json(&out.filtered);
    Ok(())
}

/// `dir` itself when it holds a synchronized session, else its children that do.
fn synced_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(SYNCED_FILE).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SYNCED_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Failure::data(
            "no_synced_session",
            format!("{}: no {SYNCED_FILE} here or one level down", dir.display()),
        ));
    }
    Ok(dirs)
}

fn analyze(a: AnalyzeArgs) -> Result {
    let mut trials = Vec::new();
    for dir in synced_dirs(&a.input)? {
        trials.push(compute_trial_metrics(&read_synced(&dir)?)?);
    }
    let report = MetricsReport::from_trials(trials);
    match &a.report {
        Some(p) => write_file(p, json_text(&report)),
        None => {
            print_json(&report);
            Ok(())
        }
    }
}

fn curate(c: CurateCommand) -> Result {
    match c {
        CurateCommand::Label { trial, root, flags } => {
            let flags: Vec<FailureFlag> = flags
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| f.parse().expect("flag parsing is infallible"))
                .collect();
            let m = curation::label_trial(&root, &trial, &flags)?;
            print_json(&m);
        }
        CurateCommand::Stats { root, format } => {
            let entries = curation::load_dataset(&root)?;
            let stats = curation::dataset_stats(entries.iter().map(|t| &t.manifest))?;
            match format {
                TableFormat::Json => print_json(&stats),
                TableFormat::Csv => out!("{}", stats.to_csv()),
            }
        }
        CurateCommand::Filter { root, out, lenient } => {
            let mode = if lenient { FilterMode::Lenient } else { FilterMode::Strict };
            let list: String = curation::filter_successful(&root, mode)?
                .iter()
                .map(|t| format!("{}\n", t.path.display()))
                .collect();
            match out {
                Some(p) => write_file(&p, list)?,
                None => out!("{list}"),
            }
        }
        CurateCommand::Survey { input, format } => {
            let summary = curation::survey_stats(&curation::read_survey_csv(&input)?)?;
            match format {
                TableFormat::Json => print_json(&summary),
                TableFormat::Csv => {
                    outln!("question_id,n,median,top_box_percent");
                    for (q, r) in &summary {
                        outln!("{q},{},{},{}", r.n, r.median, r.top_box_percent);
                    }
                }
            }
        }
    }
    Ok(())
}

fn parse_label(s: &str) -> Result<AmbiguityLabel> {
    if s.eq_ignore_ascii_case("specific") {
        return Ok(AmbiguityLabel::specific());
    }
    Ok(AmbiguityLabel::ambiguous(s.parse::<AmbiguityType>()?))
}

/// Dialogues stored with the trials of a dataset, in trial order.
fn dataset_dialogues(root: &Path) -> Result<Vec<AnnotatedDialogue>> {
    let mut out = Vec::new();
    for t in curation::load_dataset(root)? {
        out.extend(load_session(&t.path)?.dialogue);
    }
    Ok(out)
}

fn dialogue(c: DialogueCommand) -> Result {
    match c {
        DialogueCommand::Annotate {
            file,
            trial,
            turn,
            label,
            out,
        } => {
            let label = parse_label(&label)?;
            let mut all = import_jsonl(&read_file(&file)?)?;
            let d = all
                .iter_mut()
                .find(|d| d.trial_id == trial)
                .ok_or_else(|| Failure::data("unknown_trial", format!("no dialogue for trial '{trial}'")))?;
            *d = d.annotate_utterance(turn, label)?;
            write_file(out.as_deref().unwrap_or(&file), export_jsonl(&all)?)?;
        }
        DialogueCommand::Export { root, out } => {
            let all = dataset_dialogues(&root)?;
            write_file(&out, export_jsonl(&all)?)?;
            outln!("{} dialogues written to {}", all.len(), out.display());
        }
        DialogueCommand::Stats {
            input,
            root,
            by,
            format,
        } => {
            let all = match (input, root) {
                (Some(p), _) => import_jsonl(&read_file(&p)?)?,
                (None, Some(r)) => dataset_dialogues(&r)?,
                (None, None) => return Err(Failure::usage(format!("give --in or --root (or set {ROOT_ENV})"))),
            };
            let dist = ambiguity_distribution(&all);
            match (by, format) {
                (StatsBy::Task, TableFormat::Json) => {
                    #[derive(Serialize)]
                    struct ByTask<'a> {
                        labels: &'a BTreeMap<Task, BTreeMap<LabelClass, usize>>,
                        utterances: &'a BTreeMap<Task, usize>,
                    }
                    print_json(&ByTask {
                        labels: &dist.matrix,
                        utterances: &dist.utterance_counts,
                    });
                }
                (StatsBy::Type, TableFormat::Json) => print_json(&dist.type_task_shares),
                (StatsBy::Task, TableFormat::Csv) => {
                    let header: Vec<&str> = LabelClass::ALL.iter().map(|c| c.as_str()).collect();
                    outln!("task,{},utterances", header.join(","));
                    for (task, row) in &dist.matrix {
                        let cells: Vec<String> = LabelClass::ALL.iter().map(|c| row[c].to_string()).collect();
                        outln!("{task},{},{}", cells.join(","), dist.utterance_counts[task]);
                    }
                }
                (StatsBy::Type, TableFormat::Csv) => {
                    outln!("class,task,share");
                    for (class, row) in &dist.type_task_shares {
                        for (task, share) in row {
                            outln!("{},{task},{share}", class.as_str());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn emit_report(report: &PipelineReport, out: &Path, format: ReportFormat) -> Result {
    let written = report.write(out, format.json(), format.csv())?;
    out!("{}", report.task_summary_csv());
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result {
    let metrics: MetricsReport = serde_json::from_slice(&read_file(&a.metrics)?)
        .map_err(|e| Failure::data("malformed_metrics", format!("{}: {e}", a.metrics.display())))?;
    let entries = curation::load_dataset(&a.root)?;
    let stats = curation::dataset_stats(entries.iter().map(|t| &t.manifest))?;
    let dialogues = match &a.dialogues {
        Some(p) => import_jsonl(&read_file(p)?)?,
        None => dataset_dialogues(&a.root)?,
    };
    let survey = match &a.survey {
        Some(p) => Some(curation::survey_stats(&curation::read_survey_csv(p)?)?),
        None => None,
    };
    let report = PipelineReport::assemble(stats, metrics, &dialogues, survey);
    emit_report(&report, &a.out, a.format)
}

fn pipeline(a: PipelineArgs) -> Result {
    let opts = PipelineOptions {
        sync: sync_options(a.tau, a.max_gap)?,
        policy: load_policy(&a.filter)?,
        prefilter: !a.no_prefilter,
        all_trials: a.all_trials,
        jobs: a.jobs,
        survey: a.survey,
    };
    let report = run_pipeline(&a.root, &opts)?;
    emit_report(&report, &a.out, a.format)
}
