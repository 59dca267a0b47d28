//! Raw DEFLATE (RFC 1951) over the little-endian byte image of the words.

use std::io::{Read, Write};

use flate2::bufread::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::{Codec, CodecId};
use crate::error::{Error, Result};
use crate::tensor::{words_from_le_bytes, words_to_le_bytes};

#[derive(Debug, Clone, Copy)]
pub struct Deflate {
    level: u8,
}

impl Deflate {
    /// The encoder's default effort level.
    pub const DEFAULT: Deflate = Deflate { level: 6 };

    pub fn with_level(level: u8) -> Result<Self> {
        if level > 9 {
            return Err(Error::config(format!(
                "deflate level {level} is outside 0..=9"
            )));
        }
        Ok(Deflate { level })
    }

    pub fn level(&self) -> u8 {
        self.level
    }
}

impl Default for Deflate {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl Codec for Deflate {
    fn id(&self) -> CodecId {
        CodecId::Deflate
    }

    fn header_param(&self) -> u8 {
        self.level
    }

    fn compress(&self, words: &[u32]) -> Vec<u8> {
        let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(self.level.into()));
        enc.write_all(&words_to_le_bytes(words))
            .expect("writing to a Vec cannot fail");
        enc.finish().expect("writing to a Vec cannot fail")
    }

    fn decompress(&self, payload: &[u8], word_count: usize) -> Result<Vec<u32>> {
        let expected = word_count * 4;
        let mut dec = DeflateDecoder::new(payload);
        let mut bytes = Vec::with_capacity(expected);
        (&mut dec)
            .take(expected as u64 + 1)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::corrupt(format!("deflate: {e}")))?;
        if bytes.len() != expected {
            return Err(Error::corrupt(format!(
                "deflate: stream expands to {}{} bytes, expected {expected}",
                if bytes.len() > expected {
                    "more than "
                } else {
                    ""
                },
                bytes.len().min(expected)
            )));
        }
        if !dec.into_inner().is_empty() {
            return Err(Error::corrupt(
                "deflate: trailing bytes after the final block",
            ));
        }
        Ok(words_from_le_bytes(&bytes))
    }
}
