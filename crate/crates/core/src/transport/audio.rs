use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TransportError;

pub const DATAGRAM_HEADER: usize = 4 + 8;

/// One UDP audio chunk: `u32` sequence and `f64` timestamp (both big-endian)
/// followed by 16-bit little-endian PCM.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioDatagram {
    pub sequence: u32,
    pub timestamp: f64,
    pub pcm: Vec<i16>,
}

impl AudioDatagram {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DATAGRAM_HEADER + 2 * self.pcm.len());
        out.extend_from_slice(&self.sequence.to_be_bytes());
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        for s in &self.pcm {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, TransportError> {
        if buf.len() < DATAGRAM_HEADER {
            return Err(TransportError::MalformedDatagram(format!("{} bytes, header needs 12", buf.len())));
        }
        let pcm = &buf[DATAGRAM_HEADER..];
        if pcm.len() % 2 != 0 {
            return Err(TransportError::MalformedDatagram("odd PCM byte count".into()));
        }
        Ok(Self {
            sequence: u32::from_be_bytes(buf[..4].try_into().unwrap()),
            timestamp: f64::from_be_bytes(buf[4..12].try_into().unwrap()),
            pcm: pcm.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect(),
        })
    }
}

/// Inclusive range of sequence numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqRange {
    pub start: u32,
    pub end: u32,
}

impl SeqRange {
    pub fn len(&self) -> u64 {
        u64::from(self.end - self.start) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub stream: String,
    pub missing_sequences: Vec<SeqRange>,
    pub received: u64,
    pub expected: u64,
    /// Later copies of an already received sequence number, dropped.
    pub duplicates: u64,
    /// Samples per zero-filled chunk.
    pub chunk_size: usize,
}

impl GapReport {
    pub fn missing(&self) -> u64 {
        self.missing_sequences.iter().map(SeqRange::len).sum()
    }
}

/// Orders datagrams by sequence number and concatenates their PCM.
///
/// Sequences are counted from 0. The first copy of a sequence number wins.
/// Each missing sequence is replaced by a chunk of silence the length of the
/// most common chunk (the shorter one on a tie). Losses after the last
/// received sequence are only visible when `expected` datagrams is given.
pub fn audio_reassemble(
    stream: &str,
    datagrams: &[AudioDatagram],
    expected: Option<u32>,
) -> (Vec<i16>, GapReport) {
    let mut by_seq: BTreeMap<u32, &AudioDatagram> = BTreeMap::new();
    let mut duplicates = 0;
    for d in datagrams {
        if by_seq.contains_key(&d.sequence) {
            duplicates += 1;
        } else {
            by_seq.insert(d.sequence, d);
        }
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for d in by_seq.values() {
        *sizes.entry(d.pcm.len()).or_default() += 1;
    }
    let chunk_size = sizes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map_or(0, |(&s, _)| s);

    let seen_end = by_seq.keys().next_back().map_or(0, |&s| u64::from(s) + 1);
    let expected = seen_end.max(expected.map_or(0, u64::from));

    let mut pcm = Vec::new();
    let mut missing = Vec::new();
    let mut next: u64 = 0;
    let mut gap = |from: u64, to: u64, pcm: &mut Vec<i16>| {
        if from < to {
            missing.push(SeqRange {
                start: from as u32,
                end: (to - 1) as u32,
            });
            pcm.resize(pcm.len() + (to - from) as usize * chunk_size, 0);
        }
    };
    for (&seq, d) in &by_seq {
        gap(next, u64::from(seq), &mut pcm);
        pcm.extend_from_slice(&d.pcm);
        next = u64::from(seq) + 1;
    }
    gap(next, expected, &mut pcm);

    let report = GapReport {
        stream: stream.to_owned(),
        missing_sequences: missing,
        received: by_seq.len() as u64,
        expected,
        duplicates,
        chunk_size,
    };
    (pcm, report)
}
