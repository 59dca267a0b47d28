//! Lossless codecs over 32-bit word streams.
//!
//! Three schemes share one contract ([`Codec`]): zero-value compression
//! ([`zvc`]), run-length encoding of zero/literal runs ([`rle`]), and a
//! DEFLATE baseline ([`deflate`]) that bounds what a general-purpose
//! compressor could recover.
//!
//! A tensor's flat stream is cut into fixed-size windows (4 KiB by default)
//! and every window is compressed independently into a [`CompressedBlock`].
//! Each block is charged a 10-byte header in all ratio accounting.

pub mod deflate;
pub mod rle;
pub mod zvc;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{ActivationTensor, DensityStats};

pub use deflate::Deflate;
pub use rle::Rle;
pub use zvc::Zvc;

/// Default compression window in bytes.
pub const DEFAULT_WINDOW_BYTES: usize = 4096;
/// Per-block header charged in ratio math: codec u8, reserved u8, window u32, length u32.
pub const BLOCK_HEADER_BYTES: usize = 10;
/// Window sizes must be a multiple of one 128-byte ZVC group.
pub const WINDOW_GRANULE_BYTES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodecId {
    Zvc,
    Rle,
    Deflate,
}

impl CodecId {
    pub const ALL: [CodecId; 3] = [CodecId::Zvc, CodecId::Rle, CodecId::Deflate];

    pub fn tag(self) -> u8 {
        match self {
            CodecId::Zvc => 0,
            CodecId::Rle => 1,
            CodecId::Deflate => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<CodecId> {
        match tag {
            0 => Some(CodecId::Zvc),
            1 => Some(CodecId::Rle),
            2 => Some(CodecId::Deflate),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Zvc => "zvc",
            CodecId::Rle => "rle",
            CodecId::Deflate => "deflate",
        }
    }

    /// The shared codec instance for this tag.
    pub fn codec(self) -> &'static dyn Codec {
        static ZVC: Zvc = Zvc;
        static RLE: Rle = Rle;
        static DEFLATE: Deflate = Deflate::DEFAULT;
        match self {
            CodecId::Zvc => &ZVC,
            CodecId::Rle => &RLE,
            CodecId::Deflate => &DEFLATE,
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zvc" => Ok(CodecId::Zvc),
            "rle" => Ok(CodecId::Rle),
            "deflate" | "zlib" => Ok(CodecId::Deflate),
            other => Err(Error::config(format!("unknown codec `{other}`"))),
        }
    }
}

/// A lossless word-stream codec.
pub trait Codec: Send + Sync {
    fn id(&self) -> CodecId;

    /// Value stored in the block header's reserved byte.
    fn header_param(&self) -> u8 {
        0
    }

    fn compress(&self, words: &[u32]) -> Vec<u8>;

    /// Decodes a payload that must expand to exactly `word_count` words.
    fn decompress(&self, payload: &[u8], word_count: usize) -> Result<Vec<u32>>;
}

/// One independently compressed window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub codec: CodecId,
    /// Header reserved byte; holds the DEFLATE effort level, zero otherwise.
    pub param: u8,
    pub window_bytes: u32,
    pub original_len_bytes: u32,
    pub payload: Vec<u8>,
}

impl CompressedBlock {
    pub fn encode(codec: &dyn Codec, words: &[u32], window_bytes: u32) -> Self {
        CompressedBlock {
            codec: codec.id(),
            param: codec.header_param(),
            window_bytes,
            original_len_bytes: (words.len() * 4) as u32,
            payload: codec.compress(words),
        }
    }

    /// Compresses `words` as a single window sized to cover the whole input.
    pub fn encode_whole(codec: &dyn Codec, words: &[u32]) -> Self {
        let window = (words.len() * 4)
            .max(WINDOW_GRANULE_BYTES)
            .next_power_of_two();
        Self::encode(codec, words, window as u32)
    }

    pub fn decode(&self) -> Result<Vec<u32>> {
        if !self.original_len_bytes.is_multiple_of(4) {
            return Err(Error::corrupt(format!(
                "block length {} is not word-granular",
                self.original_len_bytes
            )));
        }
        self.codec
            .codec()
            .decompress(&self.payload, self.original_len_bytes as usize / 4)
    }

    /// Header plus payload.
    pub fn stored_bytes(&self) -> usize {
        BLOCK_HEADER_BYTES + self.payload.len()
    }

    fn expect_codec(&self, codec: CodecId) -> Result<()> {
        if self.codec != codec {
            return Err(Error::input(format!(
                "expected a {codec} block, got {}",
                self.codec
            )));
        }
        Ok(())
    }
}

pub fn zvc_compress(words: &[u32]) -> CompressedBlock {
    CompressedBlock::encode_whole(&Zvc, words)
}

pub fn zvc_decompress(block: &CompressedBlock) -> Result<Vec<u32>> {
    block.expect_codec(CodecId::Zvc)?;
    block.decode()
}

pub fn rle_compress(words: &[u32]) -> CompressedBlock {
    CompressedBlock::encode_whole(&Rle, words)
}

pub fn rle_decompress(block: &CompressedBlock) -> Result<Vec<u32>> {
    block.expect_codec(CodecId::Rle)?;
    block.decode()
}

pub fn deflate_compress(words: &[u32]) -> CompressedBlock {
    CompressedBlock::encode_whole(&Deflate::DEFAULT, words)
}

pub fn deflate_decompress(block: &CompressedBlock) -> Result<Vec<u32>> {
    block.expect_codec(CodecId::Deflate)?;
    block.decode()
}

/// Size accounting for a compressed stream.
///
/// Three ratios are derived from it:
/// * [`ratio`](Self::ratio) charges everything, block headers included;
/// * [`payload_ratio`](Self::payload_ratio) charges codec payloads only
///   (ZVC masks and RLE token headers count, block headers do not);
/// * [`value_ratio`](Self::value_ratio) charges only the stored activation
///   values, i.e. the mask-free figure. DEFLATE has no separable framing,
///   so its value bytes equal its payload bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionReport {
    pub codec: CodecId,
    pub blocks: usize,
    pub input_bytes: u64,
    pub payload_bytes: u64,
    pub output_bytes: u64,
    pub value_bytes: u64,
}

fn quotient(num: u64, den: u64) -> f64 {
    if num == 0 {
        1.0
    } else if den == 0 {
        f64::INFINITY
    } else {
        num as f64 / den as f64
    }
}

impl CompressionReport {
    pub fn ratio(&self) -> f64 {
        quotient(self.input_bytes, self.output_bytes)
    }

    pub fn payload_ratio(&self) -> f64 {
        quotient(self.input_bytes, self.payload_bytes)
    }

    pub fn value_ratio(&self) -> f64 {
        quotient(self.input_bytes, self.value_bytes)
    }

    pub fn from_blocks(codec: CodecId, blocks: &[CompressedBlock], nonzero_words: u64) -> Self {
        let input_bytes = blocks.iter().map(|b| b.original_len_bytes as u64).sum();
        let payload_bytes: u64 = blocks.iter().map(|b| b.payload.len() as u64).sum();
        let value_bytes = match codec {
            CodecId::Zvc | CodecId::Rle => nonzero_words * 4,
            CodecId::Deflate => payload_bytes,
        };
        CompressionReport {
            codec,
            blocks: blocks.len(),
            input_bytes,
            payload_bytes,
            output_bytes: payload_bytes + (blocks.len() * BLOCK_HEADER_BYTES) as u64,
            value_bytes,
        }
    }
}

pub fn validate_window(window_bytes: usize) -> Result<()> {
    if window_bytes == 0 || !window_bytes.is_multiple_of(WINDOW_GRANULE_BYTES) {
        return Err(Error::config(format!(
            "window of {window_bytes} bytes is not a positive multiple of {WINDOW_GRANULE_BYTES}"
        )));
    }
    if window_bytes > u32::MAX as usize {
        return Err(Error::config(format!(
            "window of {window_bytes} bytes is too large"
        )));
    }
    Ok(())
}

/// Splits `words` into windows and compresses each one independently.
///
/// Windows are compressed in parallel; the returned blocks are in stream order.
pub fn compress_words(
    words: &[u32],
    codec: CodecId,
    window_bytes: usize,
) -> Result<(Vec<CompressedBlock>, CompressionReport)> {
    validate_window(window_bytes)?;
    let imp = codec.codec();
    let blocks: Vec<CompressedBlock> = words
        .par_chunks(window_bytes / 4)
        .map(|w| CompressedBlock::encode(imp, w, window_bytes as u32))
        .collect();
    let nonzero = DensityStats::of_words(words).nonzero_count;
    let report = CompressionReport::from_blocks(codec, &blocks, nonzero);
    Ok((blocks, report))
}

pub fn compress_tensor(
    tensor: &ActivationTensor,
    codec: CodecId,
    window_bytes: usize,
) -> Result<(Vec<CompressedBlock>, CompressionReport)> {
    compress_words(tensor.words(), codec, window_bytes)
}

/// Decodes blocks in order and concatenates their words.
pub fn decompress_blocks(blocks: &[CompressedBlock]) -> Result<Vec<u32>> {
    let decoded: Vec<Vec<u32>> = blocks
        .par_iter()
        .map(CompressedBlock::decode)
        .collect::<Result<_>>()?;
    Ok(decoded.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Dims, Layout};

    #[test]
    fn tags_are_stable() {
        for id in CodecId::ALL {
            assert_eq!(CodecId::from_tag(id.tag()), Some(id));
            assert_eq!(id.codec().id(), id);
            assert_eq!(id.name().parse::<CodecId>().unwrap(), id);
        }
        assert_eq!(CodecId::Zvc.tag(), 0);
        assert_eq!(CodecId::Rle.tag(), 1);
        assert_eq!(CodecId::Deflate.tag(), 2);
        assert_eq!(CodecId::from_tag(3), None);
    }

    #[test]
    fn all_zero_4k_tensor_is_32x_under_zvc() {
        let t = ActivationTensor::zeros(Dims::new(1, 1, 32, 32), Layout::Nchw);
        let (blocks, report) = compress_tensor(&t, CodecId::Zvc, DEFAULT_WINDOW_BYTES).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(report.payload_bytes, 128);
        assert_eq!(report.output_bytes, 138);
        assert_eq!(report.payload_ratio(), 32.0);
        assert_eq!(report.ratio(), 4096.0 / 138.0);
    }

    #[test]
    fn window_must_be_multiple_of_128() {
        let t = ActivationTensor::zeros(Dims::new(1, 1, 1, 64), Layout::Nchw);
        for bad in [0, 100, 4000] {
            assert!(matches!(
                compress_tensor(&t, CodecId::Zvc, bad),
                Err(Error::InvalidConfig(_))
            ));
        }
        assert!(compress_tensor(&t, CodecId::Zvc, 384).is_ok());
    }

    #[test]
    fn short_last_window() {
        let words: Vec<u32> = (0..1500).map(|i| i % 3).collect();
        for codec in CodecId::ALL {
            let (blocks, report) = compress_words(&words, codec, 4096).unwrap();
            assert_eq!(blocks.len(), 2);
            assert_eq!(blocks[0].original_len_bytes, 4096);
            assert_eq!(blocks[1].original_len_bytes, 1500 * 4 - 4096);
            assert_eq!(report.input_bytes, 6000);
            assert_eq!(decompress_blocks(&blocks).unwrap(), words);
        }
    }

    #[test]
    fn named_entry_points_check_codec() {
        let words = [1u32, 0, 2, 0];
        let z = zvc_compress(&words);
        assert!(rle_decompress(&z).is_err());
        assert_eq!(zvc_decompress(&z).unwrap(), words);
        let r = rle_compress(&words);
        assert_eq!(rle_decompress(&r).unwrap(), words);
        let d = deflate_compress(&words);
        assert_eq!(d.param, 6);
        assert_eq!(deflate_decompress(&d).unwrap(), words);
        assert!(z.window_bytes.is_power_of_two());
    }

    #[test]
    fn empty_input_reports_unit_ratio() {
        let (blocks, report) = compress_words(&[], CodecId::Zvc, 4096).unwrap();
        assert!(blocks.is_empty());
        assert_eq!(report.ratio(), 1.0);
    }
}
