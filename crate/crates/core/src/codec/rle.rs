//! Run-length encoding of alternating zero and literal runs.
//!
//! The payload is a token stream. Every token starts with a 16-bit
//! little-endian header; the top bit selects the run kind and the low 15
//! bits hold its length `L` (1..=32767):
//!
//! * `1LLL_LLLL_LLLL_LLLL` - a run of `L` zero words, no data follows;
//! * `0LLL_LLLL_LLLL_LLLL` - a literal run, followed by `L` raw words.
//!
//! The encoder emits greedy maximal runs, so literal runs never contain a
//! zero word. Runs longer than 32767 are split across tokens.

use super::{Codec, CodecId};
use crate::error::{Error, Result};

pub const MAX_RUN: usize = 0x7FFF;
const ZERO_RUN_FLAG: u16 = 0x8000;

#[derive(Debug, Clone, Copy, Default)]
pub struct Rle;

fn run_length(words: &[u32], zero: bool) -> usize {
    words
        .iter()
        .position(|&w| (w == 0) != zero)
        .unwrap_or(words.len())
}

impl Codec for Rle {
    fn id(&self) -> CodecId {
        CodecId::Rle
    }

    fn compress(&self, words: &[u32]) -> Vec<u8> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let zero = words[i] == 0;
            let run = run_length(&words[i..], zero);
            for start in (i..i + run).step_by(MAX_RUN) {
                let len = (i + run - start).min(MAX_RUN);
                if zero {
                    out.extend_from_slice(&(ZERO_RUN_FLAG | len as u16).to_le_bytes());
                } else {
                    out.extend_from_slice(&(len as u16).to_le_bytes());
                    for w in &words[start..start + len] {
                        out.extend_from_slice(&w.to_le_bytes());
                    }
                }
            }
            i += run;
        }
        out
    }

    fn decompress(&self, payload: &[u8], word_count: usize) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(word_count);
        let mut pos = 0usize;
        while pos < payload.len() {
            let header = payload
                .get(pos..pos + 2)
                .ok_or_else(|| Error::corrupt("rle: truncated token header"))?;
            let header = u16::from_le_bytes([header[0], header[1]]);
            pos += 2;
            let len = (header & !ZERO_RUN_FLAG) as usize;
            if len == 0 {
                return Err(Error::corrupt("rle: zero-length token"));
            }
            if out.len() + len > word_count {
                return Err(Error::corrupt("rle: runs overflow the declared length"));
            }
            if header & ZERO_RUN_FLAG != 0 {
                out.resize(out.len() + len, 0);
            } else {
                let raw = payload
                    .get(pos..pos + len * 4)
                    .ok_or_else(|| Error::corrupt("rle: truncated literal run"))?;
                pos += len * 4;
                out.extend(
                    raw.chunks_exact(4)
                        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])),
                );
            }
        }
        if out.len() != word_count {
            return Err(Error::corrupt(format!(
                "rle: decoded {} words, expected {word_count}",
                out.len()
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_zero_run_is_one_token() {
        let payload = Rle.compress(&[0; 1024]);
        assert_eq!(payload, 0x8400u16.to_le_bytes());
        assert_eq!(Rle.decompress(&payload, 1024).unwrap(), vec![0; 1024]);
    }

    #[test]
    fn dense_literal_run() {
        let words: Vec<u32> = (1..=32).collect();
        let payload = Rle.compress(&words);
        assert_eq!(payload.len(), 130);
        assert_eq!(&payload[..2], &0x0020u16.to_le_bytes());
        assert_eq!(Rle.decompress(&payload, 32).unwrap(), words);
    }

    #[test]
    fn alternating_pattern_gains_nothing() {
        let words: Vec<u32> = (0..32).map(|i| if i % 2 == 0 { 5 } else { 0 }).collect();
        let payload = Rle.compress(&words);
        assert_eq!(payload.len(), 16 * (2 + 4) + 16 * 2);
        assert_eq!(payload.len(), 128);
        assert_eq!(Rle.decompress(&payload, 32).unwrap(), words);
    }

    #[test]
    fn runs_split_at_max_length() {
        let mut words = vec![0u32; MAX_RUN + 5];
        words.extend(std::iter::repeat_n(3u32, MAX_RUN + 1));
        let payload = Rle.compress(&words);
        // two zero tokens, two literal tokens
        assert_eq!(payload.len(), 4 * 2 + (MAX_RUN + 1) * 4);
        assert_eq!(&payload[..2], &0xFFFFu16.to_le_bytes());
        assert_eq!(&payload[2..4], &(0x8000u16 | 5).to_le_bytes());
        assert_eq!(Rle.decompress(&payload, words.len()).unwrap(), words);
    }

    #[test]
    fn empty_payload_is_empty_stream() {
        assert!(Rle.compress(&[]).is_empty());
        assert_eq!(Rle.decompress(&[], 0).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        // zero-length tokens of both kinds
        assert!(Rle.decompress(&[0x00, 0x80], 0).is_err());
        assert!(Rle.decompress(&[0x00, 0x00], 0).is_err());
        // literal of 2 words with only one present
        assert!(Rle.decompress(&[0x02, 0x00, 1, 0, 0, 0], 2).is_err());
        // dangling half header
        assert!(Rle.decompress(&[0x01, 0x80, 0x01], 1).is_err());
        // length mismatch both ways
        assert!(Rle.decompress(&[0x04, 0x80], 3).is_err());
        assert!(Rle.decompress(&[0x04, 0x80], 5).is_err());
    }
}
