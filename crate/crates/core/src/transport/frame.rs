use super::TransportError;

/// Upper bound on the length field; anything larger is treated as corrupt
/// rather than buffered.
pub const MAX_FRAME_LEN: usize = 16 << 20;
/// Smallest valid body: one topic byte, the terminator, the timestamp.
pub const MIN_FRAME_LEN: usize = 1 + 1 + 8;

/// One sample of a numeric topic.
///
/// Wire layout, all integers and floats big-endian:
///
/// | bytes | field |
/// |---|---|
/// | 4 | `u32` length of everything after it |
/// | n | topic, UTF-8, no NUL |
/// | 1 | `0x00` |
/// | 8 | `f64` timestamp, seconds |
/// | 8 C | `f64` channel values |
#[derive(Debug, Clone, PartialEq)]
pub struct TcpFrame {
    pub topic: String,
    pub timestamp: f64,
    pub payload: Vec<f64>,
}

impl TcpFrame {
    pub fn new(topic: impl Into<String>, timestamp: f64, payload: Vec<f64>) -> Self {
        Self {
            topic: topic.into(),
            timestamp,
            payload,
        }
    }

    pub fn body_len(&self) -> usize {
        self.topic.len() + 1 + 8 + 8 * self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let len = self.body_len();
        let mut out = Vec::with_capacity(4 + len);
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        debug_assert!(!self.topic.is_empty() && !self.topic.contains('\0'));
        out.extend_from_slice(&(self.body_len() as u32).to_be_bytes());
        out.extend_from_slice(self.topic.as_bytes());
        out.push(0);
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        for v in &self.payload {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
}

/// Reads the length prefix, if complete. Returns the total frame size in bytes.
fn frame_size(buf: &[u8]) -> Result<usize, TransportError> {
    let Some(prefix) = buf.get(..4) else {
        return Err(TransportError::NeedMoreBytes(4 - buf.len()));
    };
    let len = u32::from_be_bytes(prefix.try_into().unwrap()) as usize;
    if !(MIN_FRAME_LEN..=MAX_FRAME_LEN).contains(&len) {
        return Err(TransportError::MalformedFrame(format!(
            "length {len} outside {MIN_FRAME_LEN}..={MAX_FRAME_LEN}"
        )));
    }
    Ok(4 + len)
}

/// Decodes one frame from the front of `buf`, returning it with the number
/// of bytes consumed.
///
/// `NeedMoreBytes(n)` means at least `n` more bytes are required. A
/// `MalformedFrame` whose length prefix was readable can be skipped with
/// [`skip_len`]; otherwise the stream cannot be resynchronized.
pub fn frame_decode(buf: &[u8]) -> Result<(TcpFrame, usize), TransportError> {
    let size = frame_size(buf)?;
    if buf.len() < size {
        return Err(TransportError::NeedMoreBytes(size - buf.len()));
    }
    let body = &buf[4..size];
    let bad = |why: &str| Err(TransportError::MalformedFrame(why.to_owned()));
    let Some(nul) = body.iter().position(|&b| b == 0) else {
        return bad("missing topic terminator");
    };
    if nul == 0 {
        return bad("empty topic");
    }
    let Ok(topic) = std::str::from_utf8(&body[..nul]) else {
        return bad("topic is not UTF-8");
    };
    let rest = &body[nul + 1..];
    if rest.len() < 8 {
        return bad("truncated timestamp");
    }
    if (rest.len() - 8) % 8 != 0 {
        return bad("payload length not a multiple of 8");
    }
    let f = |c: &[u8]| f64::from_be_bytes(c.try_into().unwrap());
    let timestamp = f(&rest[..8]);
    let payload = rest[8..].chunks_exact(8).map(f).collect();
    Ok((
        TcpFrame {
            topic: topic.to_owned(),
            timestamp,
            payload,
        },
        size,
    ))
}

/// Bytes to discard after a malformed frame, when its length prefix is sane.
pub fn skip_len(buf: &[u8]) -> Option<usize> {
    frame_size(buf).ok().filter(|&n| n <= buf.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seven_channel_pose() {
        let f = TcpFrame::new("ee_pose", 0.0, vec![0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 1.0]);
        let bytes = f.encode();
        assert_eq!(bytes.len(), 4 + 7 + 1 + 8 + 56);
        assert_eq!(&bytes[..4], &(72u32).to_be_bytes());
        let (g, used) = frame_decode(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(g.payload.len(), 7);
        assert_eq!(g, f);
    }

    #[test]
    fn partial_input_asks_for_more() {
        let bytes = TcpFrame::new("t", 1.5, vec![2.0]).encode();
        assert!(matches!(frame_decode(&bytes[..2]), Err(TransportError::NeedMoreBytes(2))));
        assert!(matches!(frame_decode(&bytes[..10]), Err(TransportError::NeedMoreBytes(n)) if n == bytes.len() - 10));
    }

    #[test]
    fn length_three_is_malformed() {
        let mut bytes = 3u32.to_be_bytes().to_vec();
        bytes.extend_from_slice(b"ab\0");
        assert!(matches!(frame_decode(&bytes), Err(TransportError::MalformedFrame(_))));
        assert_eq!(skip_len(&bytes), None);
    }

    #[test]
    fn bad_bodies_are_malformed() {
        let mut no_nul = 12u32.to_be_bytes().to_vec();
        no_nul.extend_from_slice(&[b'a'; 12]);
        assert!(matches!(frame_decode(&no_nul), Err(TransportError::MalformedFrame(_))));
        assert_eq!(skip_len(&no_nul), Some(16));

        let mut ragged = TcpFrame::new("x", 0.0, vec![1.0]).encode();
        ragged.truncate(ragged.len() - 3);
        let len = (ragged.len() - 4) as u32;
        ragged[..4].copy_from_slice(&len.to_be_bytes());
        assert!(matches!(frame_decode(&ragged), Err(TransportError::MalformedFrame(_))));

        let mut empty_topic = 9u32.to_be_bytes().to_vec();
        empty_topic.push(0);
        empty_topic.extend_from_slice(&0f64.to_be_bytes());
        assert!(matches!(frame_decode(&empty_topic), Err(TransportError::MalformedFrame(_))));
    }

    #[test]
    fn back_to_back_frames() {
        let a = TcpFrame::new("a", 1.0, vec![]);
        let b = TcpFrame::new("bb", 2.0, vec![3.0, 4.0]);
        let mut buf = a.encode();
        b.encode_into(&mut buf);
        let (x, n) = frame_decode(&buf).unwrap();
        let (y, m) = frame_decode(&buf[n..]).unwrap();
        assert_eq!((x, y), (a, b));
        assert_eq!(n + m, buf.len());
    }

    fn topic() -> impl Strategy<Value = String> {
        "[a-z_][a-z0-9_/é]{0,20}"
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn encode_decode_is_identity(
            topic in topic(),
            bits in any::<u64>(),
            payload in prop::collection::vec(any::<u64>(), 0..16),
        ) {
            // raw bit patterns exercise NaN payloads and signed zeros
            let f = TcpFrame::new(topic, f64::from_bits(bits), payload.into_iter().map(f64::from_bits).collect());
            let bytes = f.encode();
            let (g, used) = frame_decode(&bytes).unwrap();
            prop_assert_eq!(used, bytes.len());
            prop_assert_eq!(g.encode(), bytes);
        }
    }
}
