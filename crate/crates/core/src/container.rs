//! The compressed stream file (`CDMZ`).
//!
//! All integers are little-endian.
//!
//! ```text
//! offset size
//!      0    4  magic "CDMZ"
//!      4    2  version (1)
//!      6    1  codec tag (0 = zvc, 1 = rle, 2 = deflate)
//!      7    4  window_bytes
//!     11    8  original_len (bytes of uncompressed words)
//!     19       ceil(original_len / window_bytes) blocks, each
//!                u32 payload length, then the payload
//! ```
//!
//! Streams written from a tensor carry an optional 28-byte trailer after the
//! last block so the tensor file can be rebuilt and verified:
//!
//! ```text
//!      0    4  magic "CDMT"
//!      4    1  layout code
//!      5    1  dtype code
//!      6    2  reserved (0)
//!      8   16  dims N, C, H, W as u32
//!     24    4  CRC-32 (IEEE) of trailer bytes 4..24, then the
//!                uncompressed data bytes
//! ```
//!
//! A stream without a trailer decodes to bare words.

use crate::codec::{self, CodecId, CompressedBlock, CompressionReport};
use crate::error::{Error, Result};
use crate::tensor::{ActivationTensor, Dims, Layout, TensorHeader, DTYPE_F32};

pub const STREAM_MAGIC: [u8; 4] = *b"CDMZ";
pub const STREAM_VERSION: u16 = 1;
pub const STREAM_HEADER_BYTES: usize = 19;
pub const TRAILER_MAGIC: [u8; 4] = *b"CDMT";
pub const TRAILER_BYTES: usize = 28;

fn crc_of(meta: &[u8], words: &[u32]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(meta);
    for w in words {
        h.update(&w.to_le_bytes());
    }
    h.finalize()
}

fn write_stream(
    codec: CodecId,
    window_bytes: usize,
    blocks: &[CompressedBlock],
    original_len: u64,
) -> Vec<u8> {
    let body: usize = blocks.iter().map(|b| 4 + b.payload.len()).sum();
    let mut out = Vec::with_capacity(STREAM_HEADER_BYTES + body + TRAILER_BYTES);
    out.extend_from_slice(&STREAM_MAGIC);
    out.extend_from_slice(&STREAM_VERSION.to_le_bytes());
    out.push(codec.tag());
    out.extend_from_slice(&(window_bytes as u32).to_le_bytes());
    out.extend_from_slice(&original_len.to_le_bytes());
    for b in blocks {
        out.extend_from_slice(&(b.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&b.payload);
    }
    out
}

/// Compresses a bare word stream (no trailer).
pub fn encode_words(
    words: &[u32],
    codec: CodecId,
    window_bytes: usize,
) -> Result<(Vec<u8>, CompressionReport)> {
    let (blocks, report) = codec::compress_words(words, codec, window_bytes)?;
    let out = write_stream(codec, window_bytes, &blocks, words.len() as u64 * 4);
    Ok((out, report))
}

/// Compresses a tensor's data section and appends the tensor trailer.
pub fn encode_tensor(
    tensor: &ActivationTensor,
    codec: CodecId,
    window_bytes: usize,
) -> Result<(Vec<u8>, CompressionReport)> {
    let (mut out, report) = encode_words(tensor.words(), codec, window_bytes)?;
    let d = tensor.dims();
    out.extend_from_slice(&TRAILER_MAGIC);
    out.push(tensor.layout().code());
    out.push(DTYPE_F32);
    out.extend_from_slice(&[0, 0]);
    for x in [d.n, d.c, d.h, d.w] {
        out.extend_from_slice(&(x as u32).to_le_bytes());
    }
    let crc = crc_of(&out[out.len() - (TRAILER_BYTES - 8)..], tensor.words());
    out.extend_from_slice(&crc.to_le_bytes());
    Ok((out, report))
}

/// Result of decoding a `CDMZ` stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedStream {
    pub codec: CodecId,
    pub window_bytes: usize,
    pub blocks: Vec<CompressedBlock>,
    pub words: Vec<u32>,
    /// Present when the stream carried a tensor trailer.
    pub tensor: Option<TensorHeader>,
}

impl DecodedStream {
    pub fn report(&self) -> CompressionReport {
        let nonzero = self.words.iter().filter(|&&w| w != 0).count() as u64;
        CompressionReport::from_blocks(self.codec, &self.blocks, nonzero)
    }

    pub fn into_tensor(self) -> Result<ActivationTensor> {
        let header = self
            .tensor
            .ok_or_else(|| Error::input("stream has no tensor trailer; dims are unknown"))?;
        ActivationTensor::new(header.dims, header.layout, self.words)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::corrupt(format!("stream truncated in {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

/// Parses, decompresses and verifies a complete `CDMZ` stream.
pub fn decode(bytes: &[u8]) -> Result<DecodedStream> {
    let mut cur = Cursor { bytes, pos: 0 };
    let header = cur.take(STREAM_HEADER_BYTES, "header")?;
    if header[0..4] != STREAM_MAGIC {
        return Err(Error::corrupt("bad stream magic"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != STREAM_VERSION {
        return Err(Error::corrupt(format!(
            "unsupported stream version {version}"
        )));
    }
    let codec = CodecId::from_tag(header[6])
        .ok_or_else(|| Error::corrupt(format!("unknown codec tag {}", header[6])))?;
    let window_bytes = u32::from_le_bytes(header[7..11].try_into().unwrap()) as usize;
    codec::validate_window(window_bytes)
        .map_err(|_| Error::corrupt(format!("invalid window size {window_bytes}")))?;
    let original_len = u64::from_le_bytes(header[11..19].try_into().unwrap());
    if original_len % 4 != 0 {
        return Err(Error::corrupt(format!(
            "original length {original_len} is not word-granular"
        )));
    }
    let block_count = original_len.div_ceil(window_bytes as u64);
    // every block costs at least its 4-byte length prefix
    if block_count > (bytes.len() / 4) as u64 {
        return Err(Error::corrupt(format!(
            "original length {original_len} implies more blocks than the stream holds"
        )));
    }

    let mut blocks = Vec::with_capacity(block_count as usize);
    let mut left = original_len;
    for i in 0..block_count {
        let len = cur.u32("block length")? as usize;
        let payload = cur.take(len, &format!("block {i}"))?;
        let original = left.min(window_bytes as u64) as u32;
        left -= original as u64;
        blocks.push(CompressedBlock {
            codec,
            param: codec.codec().header_param(),
            window_bytes: window_bytes as u32,
            original_len_bytes: original,
            payload: payload.to_vec(),
        });
    }

    let trailer = match cur.remaining() {
        [] => None,
        t if t.len() == TRAILER_BYTES && t[0..4] == TRAILER_MAGIC => {
            let (header, crc) = parse_trailer(t, original_len)?;
            Some((header, crc, &t[4..24]))
        }
        t => {
            return Err(Error::corrupt(format!(
                "{} unexpected bytes after the last block",
                t.len()
            )))
        }
    };

    let words = codec::decompress_blocks(&blocks)?;
    if let Some((_, expected, meta)) = trailer {
        if crc_of(meta, &words) != expected {
            return Err(Error::corrupt("data checksum mismatch"));
        }
    }
    Ok(DecodedStream {
        codec,
        window_bytes,
        blocks,
        words,
        tensor: trailer.map(|(header, _, _)| header),
    })
}

fn parse_trailer(t: &[u8], original_len: u64) -> Result<(TensorHeader, u32)> {
    let layout = Layout::from_code(t[4])
        .ok_or_else(|| Error::corrupt(format!("trailer: unknown layout code {}", t[4])))?;
    if t[5] != DTYPE_F32 || t[6] != 0 || t[7] != 0 {
        return Err(Error::corrupt("trailer: bad dtype or reserved bytes"));
    }
    let dim = |i: usize| u32::from_le_bytes(t[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let dims = Dims::new(
        dim(0) as usize,
        dim(1) as usize,
        dim(2) as usize,
        dim(3) as usize,
    );
    let elems = [dim(0), dim(1), dim(2), dim(3)]
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
    if elems.and_then(|e| e.checked_mul(4)) != Some(original_len) {
        return Err(Error::corrupt(format!(
            "trailer dims {dims} disagree with stream length {original_len}"
        )));
    }
    let crc = u32::from_le_bytes(t[24..28].try_into().unwrap());
    Ok((TensorHeader { dims, layout }, crc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ActivationTensor {
        let d = Dims::new(1, 3, 7, 11);
        let words = (0..d.len() as u32)
            .map(|i| {
                if i % 3 == 0 {
                    0
                } else {
                    i.wrapping_mul(2654435761)
                }
            })
            .collect();
        ActivationTensor::new(d, Layout::Nhwc, words).unwrap()
    }

    #[test]
    fn header_bytes_are_exact() {
        let words = vec![0u32; 40];
        let (bytes, _) = encode_words(&words, CodecId::Zvc, 128).unwrap();
        assert_eq!(&bytes[0..4], b"CDMZ");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(&bytes[7..11], &128u32.to_le_bytes());
        assert_eq!(&bytes[11..19], &160u64.to_le_bytes());
        // block 0: 32 words -> 4-byte mask; block 1: 8 words -> 4-byte mask
        assert_eq!(&bytes[19..23], &4u32.to_le_bytes());
        assert_eq!(&bytes[23..27], &[0; 4]);
        assert_eq!(&bytes[27..31], &4u32.to_le_bytes());
        assert_eq!(bytes.len(), 19 + 8 + 8);
        let dec = decode(&bytes).unwrap();
        assert_eq!(dec.words, words);
        assert!(dec.tensor.is_none());
    }

    #[test]
    fn tensor_round_trip_all_codecs() {
        let t = sample();
        for codec in CodecId::ALL {
            let (bytes, report) = encode_tensor(&t, codec, 256).unwrap();
            let dec = decode(&bytes).unwrap();
            assert_eq!(dec.report(), report);
            assert_eq!(dec.into_tensor().unwrap(), t);
        }
    }

    #[test]
    fn bare_stream_cannot_become_tensor() {
        let (bytes, _) = encode_words(&[1, 2, 3], CodecId::Rle, 128).unwrap();
        assert!(decode(&bytes).unwrap().into_tensor().is_err());
    }

    #[test]
    fn rejects_damaged_streams() {
        let (bytes, _) = encode_tensor(&sample(), CodecId::Zvc, 128).unwrap();
        for cut in [
            0,
            5,
            18,
            19,
            22,
            bytes.len() - 1,
            bytes.len() - TRAILER_BYTES - 1,
        ] {
            assert!(decode(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());

        let mut bad_crc = bytes.clone();
        let n = bad_crc.len();
        bad_crc[n - 1] ^= 0x40;
        assert!(matches!(decode(&bad_crc), Err(Error::Corrupt(_))));

        // layout codes 0 and 1 are both valid; only the checksum catches this
        let mut bad_layout = bytes.clone();
        bad_layout[n - TRAILER_BYTES + 4] ^= 0x01;
        assert!(matches!(decode(&bad_layout), Err(Error::Corrupt(_))));

        let mut bad_len = bytes.clone();
        bad_len[11] ^= 0x04;
        assert!(decode(&bad_len).is_err());
    }
}
