//! `sessionforge` command line: record, synthesize, synchronize, denoise,
//! analyze, curate and report on multimodal assistive-robot sessions.

mod commands;
mod failure;

use std::ffi::OsString;
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

const ROOT_ENV: &str = sessionforge::transport::ROOT_ENV;

#[derive(Debug, Parser)]
#[command(name = "sessionforge", version, about = "Multimodal session recording and analysis")]
struct Cli {
    /// How errors are printed on stderr.
    #[arg(long, value_enum, default_value_t = ErrorFormat::Text, global = true)]
    errors: ErrorFormat,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ErrorFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Receive TCP frames and UDP audio into a new session directory.
    Record(RecordArgs),
    /// Generate a synthetic session, or a whole labeled dataset.
    Synth(SynthArgs),
    /// Put a raw session on the reference grid.
    Sync(SyncArgs),
    /// Low-pass filter the numeric channels of a synchronized session.
    Denoise(DenoiseArgs),
    /// Motion metrics of one or more synchronized sessions.
    Analyze(AnalyzeArgs),
    /// Trial labels, success statistics and survey summaries.
    #[command(subcommand)]
    Curate(CurateCommand),
    /// Dialogue annotation, export and ambiguity statistics.
    #[command(subcommand)]
    Dialogue(DialogueCommand),
    /// Assemble the consolidated report from stage outputs.
    Report(ReportArgs),
    /// Sync, denoise and analyze every trial, then report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct RecordArgs {
    /// Dataset root; the session is written to <out>/<session-id>.
    #[arg(long, env = ROOT_ENV)]
    out: PathBuf,
    #[arg(long)]
    session_id: String,
    #[arg(long, default_value = "Other")]
    task: String,
    #[arg(long, default_value = "P00")]
    participant: String,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 0)]
    tcp_port: u16,
    /// Enables audio capture when given.
    #[arg(long)]
    udp_port: Option<u16>,
    /// Numeric stream as NAME=RATE:CH1[/UNIT],CH2[/UNIT],...
    #[arg(long = "stream", value_name = "SPEC")]
    streams: Vec<String>,
    /// Video stream as NAME=RATE.
    #[arg(long = "video", value_name = "SPEC")]
    videos: Vec<String>,
    #[arg(long, default_value_t = 48_000)]
    audio_rate: u32,
    /// Datagrams the audio sender will emit, to detect trailing losses.
    #[arg(long)]
    expected_datagrams: Option<u32>,
    /// Stop after this many seconds instead of waiting for stdin to close.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output session directory, or dataset root with --dataset.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario JSON; missing fields take their defaults.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Generate the five-task labeled dataset instead of one session.
    #[arg(long)]
    dataset: bool,
    /// With --dataset, leave trials unlabeled.
    #[arg(long, requires = "dataset")]
    unlabeled: bool,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// `default` or a JSON file mapping class to {order, cutoff}.
    #[arg(long, default_value = "default")]
    policy: String,
}

#[derive(Debug, Args)]
struct SyncArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Frame matching tolerance in seconds; half the grid period by default.
    #[arg(long)]
    tau: Option<f64>,
    /// Longest run of missing numeric samples bridged by interpolation, s.
    #[arg(long)]
    max_gap: Option<f64>,
    /// Skip filtering fast numeric streams at their own rate before resampling.
    #[arg(long)]
    no_prefilter: bool,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// A synchronized session, or a directory of them.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output JSON; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum CurateCommand {
    /// Mark a trial successful (no flags) or failed.
    Label {
        trial: String,
        #[arg(long, env = ROOT_ENV)]
        root: PathBuf,
        /// Failure reasons, comma separated.
        #[arg(long, value_delimiter = ',')]
        flags: Vec<String>,
    },
    /// Raw and successful trial counts per task.
    Stats {
        #[arg(long, env = ROOT_ENV)]
        root: PathBuf,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// List successful trials.
    Filter {
        #[arg(long, env = ROOT_ENV)]
        root: PathBuf,
        /// One trial directory per line; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip unlabeled trials instead of failing on them.
        #[arg(long)]
        lenient: bool,
    },
    /// Median and top-box share per question of a rating CSV.
    Survey {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatsBy {
    Task,
    Type,
}

#[derive(Debug, Subcommand)]
enum DialogueCommand {
    /// Label one user turn in a JSONL file.
    Annotate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        trial: String,
        #[arg(long)]
        turn: u32,
        /// `specific` or an ambiguity type (spatial, referential,
        /// intent-pragmatic, temporal-incremental, out-of-scope).
        #[arg(long)]
        label: String,
        /// Write here instead of rewriting the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect the dialogues of every trial into one JSONL file.
    Export {
        #[arg(long, env = ROOT_ENV)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label counts by task or by ambiguity type.
    Stats {
        /// JSONL file; the dataset root is used when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, env = ROOT_ENV)]
        root: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StatsBy::Task)]
        by: StatsBy,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
    Both,
}

impl ReportFormat {
    fn json(self) -> bool {
        self != ReportFormat::Csv
    }

    fn csv(self) -> bool {
        self != ReportFormat::Json
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Dataset root, for the trial counts and dialogues.
    #[arg(long, env = ROOT_ENV)]
    root: PathBuf,
    /// Output of `analyze`.
    #[arg(long)]
    metrics: PathBuf,
    /// Dialogue JSONL; read from the trials when omitted.
    #[arg(long)]
    dialogues: Option<PathBuf>,
    /// Rating CSV (question_id, participant_id, rating).
    #[arg(long)]
    survey: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, env = ROOT_ENV)]
    root: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_gap: Option<f64>,
    #[arg(long)]
    no_prefilter: bool,
    #[command(flatten)]
    filter: FilterArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Analyze failed and unlabeled trials too.
    #[arg(long)]
    all_trials: bool,
    #[arg(long)]
    survey: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
    format: ReportFormat,
}

fn wants_json_errors(args: &[OsString]) -> bool {
    args.iter().zip(args.iter().skip(1)).any(|(a, b)| a == "--errors" && b == "json")
        || args.iter().any(|a| a == "--errors=json")
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if wants_json_errors(&args) => {
            Failure::usage(e.render().to_string().trim()).print(true);
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.print(cli.errors == ErrorFormat::Json);
            ExitCode::from(f.exit)
        }
    }
}
