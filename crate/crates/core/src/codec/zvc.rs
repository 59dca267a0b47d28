//! Zero-value compression.
//!
//! The stream is processed in groups of 32 words. Each group becomes one
//! record: a little-endian 32-bit mask whose bit `i` is set iff word `i` of
//! the group is nonzero, followed by the group's nonzero words in order.
//!
//! ```text
//! [mask][nz0][nz1]...[mask][nz0]...
//! ```
//!
//! A trailing group shorter than 32 words still emits a full mask with its
//! unused high bits clear; the decoder learns the group length from the
//! block's original length.

use super::{Codec, CodecId};
use crate::error::{Error, Result};

/// Words per mask record.
pub const GROUP_WORDS: usize = 32;
pub const MASK_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, Default)]
pub struct Zvc;

/// Compression ratio of the ZVC record format (masks included) for a stream
/// of whole groups whose nonzero fraction is `density`.
pub fn expected_ratio(density: f64) -> f64 {
    GROUP_WORDS as f64 / (1.0 + GROUP_WORDS as f64 * density)
}

/// Encodes one group of at most 32 words into `out` at `pos`, returning the
/// position after the record. `out` must have room for a dense record.
#[inline]
fn encode_group(group: &[u32], out: &mut [u8], pos: usize) -> usize {
    let mask = group
        .iter()
        .enumerate()
        .fold(0u32, |m, (i, &w)| m | ((w != 0) as u32) << i);
    out[pos..pos + MASK_BYTES].copy_from_slice(&mask.to_le_bytes());
    let mut at = pos + MASK_BYTES;
    let mut bits = mask;
    while bits != 0 {
        let w = group[bits.trailing_zeros() as usize];
        out[at..at + 4].copy_from_slice(&w.to_le_bytes());
        at += 4;
        bits &= bits - 1;
    }
    at
}

impl Codec for Zvc {
    fn id(&self) -> CodecId {
        CodecId::Zvc
    }

    fn compress(&self, words: &[u32]) -> Vec<u8> {
        let groups = words.len().div_ceil(GROUP_WORDS);
        let mut out = vec![0u8; groups * MASK_BYTES + words.len() * 4];
        let mut pos = 0;
        for group in words.chunks(GROUP_WORDS) {
            pos = encode_group(group, &mut out, pos);
        }
        out.truncate(pos);
        out
    }

    fn decompress(&self, payload: &[u8], word_count: usize) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(word_count);
        let mut pos = 0usize;
        while out.len() < word_count {
            let group_len = (word_count - out.len()).min(GROUP_WORDS);
            let mask_bytes = payload
                .get(pos..pos + MASK_BYTES)
                .ok_or_else(|| Error::corrupt("zvc: truncated mask"))?;
            let mask = u32::from_le_bytes(mask_bytes.try_into().unwrap());
            pos += MASK_BYTES;
            if group_len < GROUP_WORDS && mask >> group_len != 0 {
                return Err(Error::corrupt("zvc: mask marks words past the stream end"));
            }
            let packed = mask.count_ones() as usize * 4;
            let values = payload
                .get(pos..pos + packed)
                .ok_or_else(|| Error::corrupt("zvc: truncated group payload"))?;
            pos += packed;
            let base = out.len();
            out.resize(base + group_len, 0);
            let mut bits = mask;
            for c in values.chunks_exact(4) {
                out[base + bits.trailing_zeros() as usize] =
                    u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                bits &= bits - 1;
            }
        }
        if pos != payload.len() {
            return Err(Error::corrupt(format!(
                "zvc: {} trailing bytes after the last record",
                payload.len() - pos
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_group_is_single_mask() {
        let payload = Zvc.compress(&[0; 32]);
        assert_eq!(payload, vec![0, 0, 0, 0]);
        assert_eq!(Zvc.decompress(&payload, 32).unwrap(), vec![0; 32]);
    }

    #[test]
    fn dense_group_costs_one_mask_word() {
        let words: Vec<u32> = (1..=32).collect();
        let payload = Zvc.compress(&words);
        assert_eq!(payload.len(), 132);
        assert_eq!(&payload[..4], &[0xFF; 4]);
        assert_eq!((payload.len() - 128) as f64 / 128.0, 0.03125);
    }

    #[test]
    fn single_leading_nonzero() {
        let mut words = [0u32; 32];
        words[0] = 0x3F80_0000;
        let payload = Zvc.compress(&words);
        assert_eq!(payload, vec![0x01, 0, 0, 0, 0x00, 0x00, 0x80, 0x3F]);
        assert_eq!(Zvc.decompress(&payload, 32).unwrap(), words);
    }

    #[test]
    fn tail_group_keeps_full_mask() {
        let words = [0u32, 9, 0];
        let payload = Zvc.compress(&words);
        assert_eq!(payload, vec![0b010, 0, 0, 0, 9, 0, 0, 0]);
        assert_eq!(Zvc.decompress(&payload, 3).unwrap(), words);
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let mut words = [0u32; 32];
        words[3] = 1;
        words[7] = 2;
        let payload = Zvc.compress(&words);
        // missing one packed word
        assert!(Zvc.decompress(&payload[..payload.len() - 4], 32).is_err());
        // half a mask
        assert!(Zvc.decompress(&payload[..2], 32).is_err());
        let mut long = payload.clone();
        long.push(0);
        assert!(Zvc.decompress(&long, 32).is_err());
        // mask bit beyond a 4-word tail
        assert!(Zvc.decompress(&[0x10, 0, 0, 0, 1, 0, 0, 0], 4).is_err());
    }

    #[test]
    fn closed_form_size() {
        // g groups with k nonzeros total compress to g + k words
        let mut words = vec![0u32; 32 * 5];
        for i in [0, 1, 40, 77, 78, 79, 159] {
            words[i] = i as u32 + 1;
        }
        assert_eq!(Zvc.compress(&words).len(), (5 + 7) * 4);
        assert!((expected_ratio(0.4) - 32.0 / 13.8).abs() < 1e-12);
        assert_eq!(expected_ratio(0.0), 32.0);
    }
}
