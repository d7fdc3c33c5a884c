use std::io::Write;
use std::net::{TcpStream, UdpSocket};
use std::thread;
use std::time::Duration;

use sessionforge::session::{load_session, ChannelDescriptor, StreamDescriptor};
use sessionforge::transport::{
    frame_decode, start_recording, AudioDatagram, RecorderConfig, SeqRange, TcpFrame,
};
use sessionforge::Task;

fn numeric(name: &str, width: usize) -> StreamDescriptor {
    let channels = (0..width).map(|i| ChannelDescriptor::new(format!("{name}_{i}"), "1")).collect();
    StreamDescriptor::numeric(name, 100.0, channels)
}

#[test]
fn ten_thousand_frames_over_five_topics() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RecorderConfig::new(dir.path().join("s"), "s", Task::Drinking);
    let topics = ["ee_pose", "wheelchair", "imu", "ego", "wrist"];
    cfg.streams = vec![
        numeric("ee_pose", 7),
        numeric("wheelchair", 5),
        numeric("imu", 3),
        StreamDescriptor::video("ego", 12.0),
        StreamDescriptor::video("wrist", 15.0),
    ];
    let h = start_recording(cfg).unwrap();
    let width = |t: &str| match t {
        "ee_pose" => 7,
        "wheelchair" => 5,
        "imu" => 3,
        _ => 1,
    };

    // two connections, each owning some topics, interleaved in time
    let send = |topics: Vec<&'static str>, addr| {
        thread::spawn(move || {
            let mut conn = TcpStream::connect(addr).unwrap();
            let mut buf = Vec::new();
            for k in 0..2000u32 {
                for t in &topics {
                    let payload: Vec<f64> = (0..width(t)).map(|c| (k * 10 + c) as f64).collect();
                    TcpFrame::new(*t, k as f64 * 0.01, payload).encode_into(&mut buf);
                }
                if buf.len() > 32 * 1024 {
                    conn.write_all(&buf).unwrap();
                    buf.clear();
                }
            }
            conn.write_all(&buf).unwrap();
        })
    };
    let a = send(vec!["ee_pose", "ego", "imu"], h.tcp_addr());
    let b = send(vec!["wheelchair", "wrist"], h.tcp_addr());
    a.join().unwrap();
    b.join().unwrap();
    let summary = h.stop().unwrap();

    assert_eq!(summary.rows.values().sum::<usize>(), 10_000);
    assert_eq!(summary.malformed_frames + summary.out_of_order_frames + summary.width_mismatch_frames, 0);
    let s = load_session(dir.path().join("s")).unwrap();
    for t in topics {
        if let Some(series) = s.numeric.get(t) {
            assert_eq!(series.len(), 2000, "{t}");
            for (k, ts) in series.timestamps.iter().enumerate() {
                assert_eq!(*ts, k as f64 * 0.01, "{t} row {k}");
                assert_eq!(series.columns[0][k], (k * 10) as f64);
            }
        } else {
            let log = &s.frames[t];
            assert_eq!(log.frame_numbers, (0..2000).map(|k| k * 10).collect::<Vec<u64>>(), "{t}");
        }
    }
}

#[test]
fn two_seconds_of_audio() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RecorderConfig::new(dir.path().join("a"), "a", Task::Feeding);
    cfg.udp_addr = Some("127.0.0.1:0".parse().unwrap());
    cfg.audio = Some(StreamDescriptor::audio("mic", 48_000));
    cfg.audio_expected_datagrams = Some(100);
    let h = start_recording(cfg).unwrap();
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    for seq in 0..100u32 {
        let pcm: Vec<i16> = (0..960).map(|i| ((seq * 960 + i) % 30_000) as i16).collect();
        let d = AudioDatagram {
            sequence: seq,
            timestamp: f64::from(seq) * 0.02,
            pcm,
        };
        sock.send_to(&d.encode(), h.udp_addr().unwrap()).unwrap();
        if seq % 10 == 9 {
            thread::sleep(Duration::from_millis(2));
        }
    }
    thread::sleep(Duration::from_millis(100));
    let summary = h.stop().unwrap();
    let gaps = summary.audio.unwrap();
    assert_eq!(gaps.missing_sequences, Vec::<SeqRange>::new());
    let s = load_session(dir.path().join("a")).unwrap();
    let track = &s.audio["mic"];
    assert_eq!(track.samples.len(), 96_000);
    assert_eq!(track.meta.sample_rate, 48_000);
    assert!(track.samples.iter().enumerate().all(|(i, &v)| v == (i % 30_000) as i16));
}

#[test]
fn nothing_received_gives_an_empty_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RecorderConfig::new(dir.path().join("e"), "e", Task::Cleaning);
    cfg.streams = vec![numeric("ee_pose", 7), StreamDescriptor::video("ego", 12.0)];
    let h = start_recording(cfg).unwrap();
    let summary = h.stop().unwrap();
    assert!(summary.rows.is_empty());
    assert_eq!(summary.omitted_streams, ["ee_pose", "ego"]);
    // idempotent
    assert_eq!(h.stop().unwrap(), summary);
    assert!(!h.is_running());
    let s = load_session(dir.path().join("e")).unwrap();
    assert!(s.manifest.streams.is_empty());
    assert!(s.numeric.is_empty() && s.frames.is_empty());
}

#[test]
fn bad_frames_do_not_stop_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RecorderConfig::new(dir.path().join("m"), "m", Task::Cleaning);
    cfg.streams = vec![numeric("wheelchair", 2)];
    let h = start_recording(cfg).unwrap();
    let mut buf = Vec::new();
    TcpFrame::new("wheelchair", 0.0, vec![1.0, 2.0]).encode_into(&mut buf);
    // a topic without its terminator, skippable by its length prefix
    buf.extend_from_slice(&12u32.to_be_bytes());
    buf.extend_from_slice(b"no-nul-here!");
    TcpFrame::new("wheelchair", 0.1, vec![3.0]).encode_into(&mut buf);
    TcpFrame::new("wheelchair", 0.05, vec![3.0, 4.0]).encode_into(&mut buf);
    TcpFrame::new("elsewhere", 0.2, vec![]).encode_into(&mut buf);
    TcpFrame::new("wheelchair", 0.2, vec![5.0, 6.0]).encode_into(&mut buf);
    let mut conn = TcpStream::connect(h.tcp_addr()).unwrap();
    conn.write_all(&buf).unwrap();
    drop(conn);
    let summary = h.stop().unwrap();
    assert_eq!(summary.rows["wheelchair"], 3);
    assert_eq!(summary.malformed_frames, 1);
    assert_eq!(summary.width_mismatch_frames, 1);
    assert_eq!(summary.unknown_topic_frames, 1);
    assert_eq!(summary.out_of_order_frames, 0);
}

#[test]
fn encode_decode_hundred_thousand_frames() {
    let mut buf = Vec::new();
    for k in 0..100_000u32 {
        let payload: Vec<f64> = (0..(k % 8)).map(|i| f64::from(k) * 0.5 + f64::from(i)).collect();
        TcpFrame::new(format!("topic{}", k % 5), f64::from(k) * 1e-3, payload).encode_into(&mut buf);
    }
    let mut pos = 0;
    let mut k = 0u32;
    while pos < buf.len() {
        let (f, used) = frame_decode(&buf[pos..]).unwrap();
        assert_eq!(f.topic, format!("topic{}", k % 5));
        assert_eq!(f.timestamp, f64::from(k) * 1e-3);
        assert_eq!(f.payload.len(), (k % 8) as usize);
        pos += used;
        k += 1;
    }
    assert_eq!(k, 100_000);
}
