use std::collections::BTreeMap;
use std::io::{ErrorKind, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::{audio_reassemble, frame_decode, skip_len, AudioDatagram, GapReport, TcpFrame, TransportError};
use crate::session::{
    save_session, AudioMeta, AudioTrack, FrameTimestampLog, RawSession, SessionManifest, StreamDescriptor,
    StreamKind, TimedSeries,
};
use crate::task::Task;

pub const DEFAULT_HIGH_WATER_MARK: usize = 10_000;
/// Default dataset root for recordings when no output is given.
pub const ROOT_ENV: &str = "SESSIONFORGE_ROOT";

const POLL: Duration = Duration::from_millis(20);

pub fn default_dataset_root() -> Option<PathBuf> {
    std::env::var_os(ROOT_ENV).map(PathBuf::from)
}

#[derive(Debug, Clone)]
pub struct RecorderConfig {
    /// Port 0 picks a free port; see [`RecordingHandle::tcp_addr`].
    pub tcp_addr: SocketAddr,
    pub udp_addr: Option<SocketAddr>,
    pub session_root: PathBuf,
    pub session_id: String,
    pub participant_id: String,
    pub task: Task,
    pub created_at: DateTime<Utc>,
    /// Numeric and video streams; a frame's topic is the stream name.
    /// Video topics carry the source frame number as their only value, or
    /// no value, in which case frames are numbered in arrival order.
    pub streams: Vec<StreamDescriptor>,
    /// Audio stream written from the UDP datagrams.
    pub audio: Option<StreamDescriptor>,
    /// Number of datagrams the sender will emit, if known.
    pub audio_expected_datagrams: Option<u32>,
    /// Queue depth at which TCP readers stop reading.
    pub high_water_mark: usize,
}

impl RecorderConfig {
    pub fn new(session_root: impl Into<PathBuf>, session_id: impl Into<String>, task: Task) -> Self {
        Self {
            tcp_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
            udp_addr: None,
            session_root: session_root.into(),
            session_id: session_id.into(),
            participant_id: "P00".into(),
            task,
            created_at: Utc::now(),
            streams: Vec::new(),
            audio: None,
            audio_expected_datagrams: None,
            high_water_mark: DEFAULT_HIGH_WATER_MARK,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RecordingSummary {
    pub session_root: PathBuf,
    pub rows: BTreeMap<String, usize>,
    pub malformed_frames: u64,
    pub malformed_datagrams: u64,
    pub unknown_topic_frames: u64,
    /// Frames whose timestamp did not advance on their topic; dropped.
    pub out_of_order_frames: u64,
    /// Frames whose value count did not match the stream's channels; dropped.
    pub width_mismatch_frames: u64,
    pub audio: Option<GapReport>,
    /// Configured streams that received nothing and were left out.
    pub omitted_streams: Vec<String>,
}

enum Msg {
    Frame(TcpFrame),
    Audio(AudioDatagram),
}

#[derive(Default)]
struct Counters {
    malformed_frames: AtomicU64,
    malformed_datagrams: AtomicU64,
}

struct Running {
    stop: Arc<AtomicBool>,
    acceptor: JoinHandle<()>,
    udp: Option<JoinHandle<()>>,
    sink: JoinHandle<Sink>,
    counters: Arc<Counters>,
}

enum State {
    Running(Running),
    Stopped(Result<RecordingSummary, String>),
}

/// A recording in progress. Clones share the same recording.
#[derive(Clone)]
pub struct RecordingHandle {
    tcp_addr: SocketAddr,
    udp_addr: Option<SocketAddr>,
    config: Arc<RecorderConfig>,
    state: Arc<Mutex<State>>,
}

/// Binds the sockets and starts receiving.
///
/// One thread accepts TCP connections and one reads each connection; one
/// thread reads UDP. All of them feed a bounded queue drained by a single
/// writer thread, so frames of one topic are stored in arrival order.
pub fn start_recording(config: RecorderConfig) -> Result<RecordingHandle, TransportError> {
    let bind = |addr: SocketAddr| move |source| TransportError::Bind { addr, source };
    let listener = TcpListener::bind(config.tcp_addr).map_err(bind(config.tcp_addr))?;
    let tcp_addr = listener.local_addr().map_err(bind(config.tcp_addr))?;
    listener.set_nonblocking(true).map_err(bind(tcp_addr))?;
    let udp = match config.udp_addr {
        Some(addr) => {
            let sock = UdpSocket::bind(addr).map_err(bind(addr))?;
            sock.set_read_timeout(Some(POLL)).map_err(bind(addr))?;
            Some(sock)
        }
        None => None,
    };
    let udp_addr = udp.as_ref().and_then(|s| s.local_addr().ok());

    let stop = Arc::new(AtomicBool::new(false));
    let counters = Arc::new(Counters::default());
    let (tx, rx) = sync_channel::<Msg>(config.high_water_mark.max(1));

    let sink = {
        let streams: BTreeMap<String, StreamDescriptor> =
            config.streams.iter().map(|d| (d.name.clone(), d.clone())).collect();
        thread::spawn(move || Sink::new(streams).run(rx))
    };
    let acceptor = {
        let (stop, counters, tx) = (stop.clone(), counters.clone(), tx.clone());
        thread::spawn(move || accept_loop(listener, tx, stop, counters))
    };
    let udp = udp.map(|sock| {
        let (stop, counters) = (stop.clone(), counters.clone());
        thread::spawn(move || udp_loop(sock, tx, stop, counters))
    });
    log::info!("recording '{}' on tcp {tcp_addr}", config.session_id);

    Ok(RecordingHandle {
        tcp_addr,
        udp_addr,
        config: Arc::new(config),
        state: Arc::new(Mutex::new(State::Running(Running {
            stop,
            acceptor,
            udp,
            sink,
            counters,
        }))),
    })
}

fn accept_loop(listener: TcpListener, tx: SyncSender<Msg>, stop: Arc<AtomicBool>, counters: Arc<Counters>) {
    let mut readers = Vec::new();
    loop {
        // read the flag before accepting so connections queued before stop are still served
        let stopping = stop.load(Ordering::Acquire);
        match listener.accept() {
            Ok((conn, peer)) => {
                log::debug!("tcp connection from {peer}");
                let (tx, stop, counters) = (tx.clone(), stop.clone(), counters.clone());
                readers.push(thread::spawn(move || read_connection(conn, tx, stop, counters)));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if stopping {
                    break;
                }
                thread::sleep(POLL);
            }
            Err(e) => {
                log::warn!("accept failed: {e}");
                if stopping {
                    break;
                }
            }
        }
    }
    for r in readers {
        let _ = r.join();
    }
}

/// Reads frames until EOF, or until `stop` is set and no more bytes arrive.
fn read_connection(mut conn: TcpStream, tx: SyncSender<Msg>, stop: Arc<AtomicBool>, counters: Arc<Counters>) {
    if conn.set_nonblocking(false).is_err() || conn.set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let mut buf: Vec<u8> = Vec::with_capacity(1 << 16);
    let mut chunk = vec![0u8; 1 << 16];
    loop {
        match conn.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if stop.load(Ordering::Acquire) {
                    break;
                }
                continue;
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => {
                log::warn!("tcp read failed: {e}");
                break;
            }
        }
        let mut pos = 0;
        loop {
            match frame_decode(&buf[pos..]) {
                Ok((frame, used)) => {
                    pos += used;
                    // blocks while the queue is at its high-water mark
                    if tx.send(Msg::Frame(frame)).is_err() {
                        return;
                    }
                }
                Err(TransportError::NeedMoreBytes(_)) => break,
                Err(e) => {
                    counters.malformed_frames.fetch_add(1, Ordering::Relaxed);
                    match skip_len(&buf[pos..]) {
                        Some(n) => {
                            log::warn!("skipping malformed frame: {e}");
                            pos += n;
                        }
                        None => {
                            log::warn!("dropping connection, cannot resynchronize: {e}");
                            return;
                        }
                    }
                }
            }
        }
        buf.drain(..pos);
    }
    if !buf.is_empty() {
        counters.malformed_frames.fetch_add(1, Ordering::Relaxed);
        log::warn!("connection closed with {} bytes of a partial frame", buf.len());
    }
}

fn udp_loop(sock: UdpSocket, tx: SyncSender<Msg>, stop: Arc<AtomicBool>, counters: Arc<Counters>) {
    let mut buf = vec![0u8; 65_536];
    loop {
        match sock.recv(&mut buf) {
            Ok(n) => match AudioDatagram::decode(&buf[..n]) {
                Ok(d) => {
                    if tx.send(Msg::Audio(d)).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    counters.malformed_datagrams.fetch_add(1, Ordering::Relaxed);
                    log::warn!("{e}");
                }
            },
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if stop.load(Ordering::Acquire) {
                    return;
                }
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => {
                log::warn!("udp receive failed: {e}");
                return;
            }
        }
    }
}

/// Single writer: owns all recorded data.
struct Sink {
    streams: BTreeMap<String, StreamDescriptor>,
    numeric: BTreeMap<String, TimedSeries>,
    frames: BTreeMap<String, FrameTimestampLog>,
    datagrams: Vec<AudioDatagram>,
    unknown_topic: u64,
    out_of_order: u64,
    width_mismatch: u64,
}

impl Sink {
    fn new(streams: BTreeMap<String, StreamDescriptor>) -> Self {
        Self {
            streams,
            numeric: BTreeMap::new(),
            frames: BTreeMap::new(),
            datagrams: Vec::new(),
            unknown_topic: 0,
            out_of_order: 0,
            width_mismatch: 0,
        }
    }

    fn run(mut self, rx: Receiver<Msg>) -> Self {
        for msg in rx {
            match msg {
                Msg::Frame(f) => self.push_frame(f),
                Msg::Audio(d) => self.datagrams.push(d),
            }
        }
        self
    }

    fn push_frame(&mut self, f: TcpFrame) {
        let Some(desc) = self.streams.get(&f.topic) else {
            self.unknown_topic += 1;
            return;
        };
        match desc.kind {
            StreamKind::Numeric => {
                let series = self
                    .numeric
                    .entry(f.topic.clone())
                    .or_insert_with(|| TimedSeries::empty(desc.channels.clone()));
                if f.payload.len() != series.channels.len() {
                    self.width_mismatch += 1;
                } else if series.last_time().is_some_and(|t| !(f.timestamp > t)) || !f.timestamp.is_finite() {
                    self.out_of_order += 1;
                } else {
                    series.push_row(f.timestamp, &f.payload);
                }
            }
            StreamKind::VideoFrames => {
                let log = self.frames.entry(f.topic.clone()).or_insert_with(|| FrameTimestampLog {
                    stream: f.topic.clone(),
                    timestamps: Vec::new(),
                    frame_numbers: Vec::new(),
                });
                let number = match f.payload.as_slice() {
                    [] => Some(log.timestamps.len() as u64),
                    [n] if *n >= 0.0 && n.fract() == 0.0 => Some(*n as u64),
                    _ => None,
                };
                match number {
                    None => self.width_mismatch += 1,
                    Some(_) if log.timestamps.last().is_some_and(|&t| !(f.timestamp > t)) => self.out_of_order += 1,
                    Some(_) if !f.timestamp.is_finite() => self.out_of_order += 1,
                    Some(n) => {
                        log.timestamps.push(f.timestamp);
                        log.frame_numbers.push(n);
                    }
                }
            }
            StreamKind::Audio => self.unknown_topic += 1,
        }
    }
}

impl RecordingHandle {
    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn udp_addr(&self) -> Option<SocketAddr> {
        self.udp_addr
    }

    pub fn is_running(&self) -> bool {
        matches!(*self.state.lock().unwrap(), State::Running(_))
    }

    /// Stops receiving, drains what is already on the sockets and writes the
    /// session. Later calls return the first call's outcome.
    pub fn stop(&self) -> Result<RecordingSummary, TransportError> {
        let mut state = self.state.lock().unwrap();
        let running = match std::mem::replace(&mut *state, State::Stopped(Err("stop in progress".into()))) {
            State::Running(r) => r,
            State::Stopped(outcome) => {
                *state = State::Stopped(outcome.clone());
                return outcome.map_err(TransportError::Recording);
            }
        };
        let outcome = self.finish(running);
        *state = State::Stopped(outcome.as_ref().cloned().map_err(|e| e.to_string()));
        outcome
    }

    fn finish(&self, r: Running) -> Result<RecordingSummary, TransportError> {
        r.stop.store(true, Ordering::Release);
        let _ = r.acceptor.join();
        if let Some(u) = r.udp {
            let _ = u.join();
        }
        let sink = r.sink.join().map_err(|_| TransportError::Recording("writer thread panicked".into()))?;
        let cfg = &self.config;

        let mut summary = RecordingSummary {
            session_root: cfg.session_root.clone(),
            malformed_frames: r.counters.malformed_frames.load(Ordering::Relaxed),
            malformed_datagrams: r.counters.malformed_datagrams.load(Ordering::Relaxed),
            unknown_topic_frames: sink.unknown_topic,
            out_of_order_frames: sink.out_of_order,
            width_mismatch_frames: sink.width_mismatch,
            ..Default::default()
        };

        let mut session = RawSession::new(SessionManifest {
            session_id: cfg.session_id.clone(),
            participant_id: cfg.participant_id.clone(),
            task: cfg.task.clone(),
            success: None,
            flags: Vec::new(),
            created_at: cfg.created_at,
            streams: Vec::new(),
            notes: String::new(),
        });
        let Sink {
            mut numeric,
            mut frames,
            datagrams,
            ..
        } = sink;
        for desc in &cfg.streams {
            let rows = match desc.kind {
                StreamKind::Numeric => numeric.remove(&desc.name).map(|s| {
                    let n = s.len();
                    session.numeric.insert(desc.name.clone(), s);
                    n
                }),
                StreamKind::VideoFrames => frames.remove(&desc.name).map(|l| {
                    let n = l.len();
                    session.frames.insert(desc.name.clone(), l);
                    n
                }),
                StreamKind::Audio => None,
            };
            match rows {
                Some(n) if n > 0 => {
                    summary.rows.insert(desc.name.clone(), n);
                    session.manifest.streams.push(desc.clone());
                }
                _ => summary.omitted_streams.push(desc.name.clone()),
            }
        }
        if let Some(desc) = &cfg.audio {
            let (pcm, report) = audio_reassemble(&desc.name, &datagrams, cfg.audio_expected_datagrams);
            if pcm.is_empty() {
                summary.omitted_streams.push(desc.name.clone());
            } else {
                let meta = AudioMeta::pcm16_mono(desc.nominal_rate as u32, desc.file.clone());
                session.audio.insert(desc.name.clone(), AudioTrack { meta, samples: pcm });
                session.manifest.streams.push(desc.clone());
                summary.rows.insert(desc.name.clone(), report.received as usize);
            }
            if report.missing() > 0 {
                log::warn!("{}: {} of {} datagrams lost", desc.name, report.missing(), report.expected);
            }
            summary.audio = Some(report);
        }
        if !summary.omitted_streams.is_empty() {
            log::warn!("no data received for: {}", summary.omitted_streams.join(", "));
        }
        save_session(&session, &cfg.session_root)?;
        Ok(summary)
    }
}
