//! Cycle-approximate model of the ZVC (de)compression engines and the DMA
//! staging buffer.
//!
//! The compression engine consumes one 32-byte sector (8 words) per cycle
//! through three stages:
//!
//! 1. compare the 8 words against zero to form an 8-bit mask, and run a
//!    prefix sum over the mask bits to get each nonzero word's output slot;
//! 2. shift the nonzero words into their slots (mux selects driven by the
//!    prefix sum);
//! 3. append the packed words and the 8-bit mask segment to the record being
//!    built for the current 128-byte line.
//!
//! The decompression engine reads an 8-bit mask segment, pop-counts it to
//! know how many payload words the sector uses, and muxes payload words or
//! zeros into place.
//!
//! Latencies assume back-to-back sectors with an initiation interval of one
//! sector per cycle and no output back-pressure.

use crate::codec::zvc::{self, GROUP_WORDS};
use crate::codec::Codec;
use crate::error::{Error, Result};

const SECTOR_WORDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub sector_bytes: usize,
    pub line_bytes: usize,
    pub compress_pipeline_stages: u64,
    pub decompress_extra_cycles: u64,
    pub clock_hz: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            sector_bytes: 32,
            line_bytes: 128,
            compress_pipeline_stages: 3,
            decompress_extra_cycles: 2,
            clock_hz: 1e9,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sector_bytes == 0
            || self.line_bytes == 0
            || !self.line_bytes.is_multiple_of(self.sector_bytes)
        {
            return Err(Error::config(format!(
                "line of {} bytes is not a whole number of {}-byte sectors",
                self.line_bytes, self.sector_bytes
            )));
        }
        if self.compress_pipeline_stages == 0 {
            return Err(Error::config(
                "compression pipeline needs at least one stage",
            ));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::config(format!("clock of {} Hz", self.clock_hz)));
        }
        Ok(())
    }

    pub fn sectors_per_line(&self) -> u64 {
        (self.line_bytes / self.sector_bytes) as u64
    }
}

/// Cycles to compress a stream of `lines` back-to-back lines.
pub fn compress_latency_cycles(lines: u64, cfg: &EngineConfig) -> u64 {
    if lines == 0 {
        return 0;
    }
    lines * cfg.sectors_per_line() + (cfg.compress_pipeline_stages - 1)
}

/// Cycles to decompress a contiguous stream of `lines` lines.
pub fn decompress_latency_cycles(lines: u64, cfg: &EngineConfig) -> u64 {
    if lines == 0 {
        return 0;
    }
    lines * cfg.sectors_per_line() + cfg.decompress_extra_cycles
}

/// Sustained engine throughput in bytes per second.
pub fn engine_throughput(cfg: &EngineConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.sector_bytes as f64 * cfg.clock_hz)
}

/// Staging buffer needed to cover the bandwidth-delay product of the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferSpec {
    pub read_bandwidth: f64,
    pub round_trip_latency: f64,
    pub required_bytes: u64,
}

/// Sizes the DMA staging buffer as `ceil(read_bandwidth * round_trip_latency)`.
///
/// Bandwidth must be positive. A zero latency is accepted and needs no buffer.
pub fn size_buffer(read_bandwidth: f64, round_trip_latency: f64) -> Result<BufferSpec> {
    if !(read_bandwidth.is_finite() && read_bandwidth > 0.0) {
        return Err(Error::config(format!(
            "read bandwidth {read_bandwidth} B/s"
        )));
    }
    if !(round_trip_latency.is_finite() && round_trip_latency >= 0.0) {
        return Err(Error::config(format!(
            "round-trip latency {round_trip_latency} s"
        )));
    }
    let product = read_bandwidth * round_trip_latency;
    // decimal inputs like 350e-9 are inexact in binary; snap representation noise
    let nearest = product.round();
    let required = if (product - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        product.ceil()
    };
    Ok(BufferSpec {
        read_bandwidth,
        round_trip_latency,
        required_bytes: required as u64,
    })
}

/// In-place Brent-Kung inclusive scan over 8 lanes, as `(dst, src)` pairs
/// meaning `lane[dst] += lane[src]`.
pub const PREFIX_NETWORK: [(usize, usize); 11] = [
    (1, 0),
    (3, 2),
    (5, 4),
    (7, 6),
    (3, 1),
    (7, 5),
    (7, 3),
    (5, 3),
    (2, 1),
    (4, 3),
    (6, 5),
];

/// Inclusive prefix sum of the mask bits through [`PREFIX_NETWORK`].
pub fn prefix_sum(mask: u8) -> [u8; 8] {
    let mut lanes = [0u8; 8];
    for (i, lane) in lanes.iter_mut().enumerate() {
        *lane = (mask >> i) & 1;
    }
    for &(dst, src) in &PREFIX_NETWORK {
        lanes[dst] += lanes[src];
    }
    lanes
}

/// Widest adder operand seen over all 256 sector masks, in bits.
pub fn prefix_operand_bits() -> u32 {
    let mut widest = 0u8;
    for mask in 0..=255u8 {
        let mut lanes = [0u8; 8];
        for (i, lane) in lanes.iter_mut().enumerate() {
            *lane = (mask >> i) & 1;
        }
        for &(dst, src) in &PREFIX_NETWORK {
            widest = widest.max(lanes[dst]).max(lanes[src]);
            lanes[dst] += lanes[src];
        }
    }
    u8::BITS - widest.leading_zeros()
}

#[derive(Debug, Clone, Copy)]
struct MaskedSector {
    words: [u32; SECTOR_WORDS],
    mask: u8,
    slots: [u8; SECTOR_WORDS],
    count: u8,
    index: usize,
}

#[derive(Debug, Clone, Copy)]
struct PackedSector {
    mask: u8,
    packed: [u32; SECTOR_WORDS],
    count: u8,
    index: usize,
}

fn stage_mask(words: [u32; SECTOR_WORDS], index: usize) -> MaskedSector {
    let mut mask = 0u8;
    for (i, &w) in words.iter().enumerate() {
        if w != 0 {
            mask |= 1 << i;
        }
    }
    let inclusive = prefix_sum(mask);
    let mut slots = [0u8; SECTOR_WORDS];
    slots[1..].copy_from_slice(&inclusive[..SECTOR_WORDS - 1]);
    MaskedSector {
        words,
        mask,
        slots,
        count: inclusive[SECTOR_WORDS - 1],
        index,
    }
}

fn stage_shift(s: MaskedSector) -> PackedSector {
    let mut packed = [0u32; SECTOR_WORDS];
    for i in 0..SECTOR_WORDS {
        if s.mask & (1 << i) != 0 {
            packed[s.slots[i] as usize] = s.words[i];
        }
    }
    PackedSector {
        mask: s.mask,
        packed,
        count: s.count,
        index: s.index,
    }
}

#[derive(Default)]
struct LineAssembler {
    mask: u32,
    data: Vec<u32>,
}

/// Result of a sector-level run of the compression datapath.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatapathRun {
    pub output: Vec<u8>,
    pub cycles: u64,
}

/// Cycle-steps the three-stage compression pipeline over `words`.
///
/// The stream is cut into 128-byte lines; a short final line is padded with
/// zero words, which only ever contribute clear mask bits.
pub fn simulate_compress(words: &[u32]) -> DatapathRun {
    let sectors_per_line = GROUP_WORDS / SECTOR_WORDS;
    let mut sectors = Vec::new();
    for line in words.chunks(GROUP_WORDS) {
        let mut padded = [0u32; GROUP_WORDS];
        padded[..line.len()].copy_from_slice(line);
        for (k, s) in padded.chunks_exact(SECTOR_WORDS).enumerate() {
            sectors.push((s.try_into().unwrap(), k));
        }
    }

    let mut output = Vec::new();
    let mut line = LineAssembler::default();
    let mut next = sectors.into_iter();
    // pipeline registers: contents of stages 1, 2 and 3 during a cycle
    let mut masked: Option<MaskedSector> = None;
    let mut shifted: Option<PackedSector> = None;
    let mut cycles = 0u64;
    loop {
        let appending = shifted.take();
        shifted = masked.take().map(stage_shift);
        masked = next.next().map(|(words, k)| stage_mask(words, k));
        if appending.is_none() && shifted.is_none() && masked.is_none() {
            break;
        }
        cycles += 1;
        if let Some(p) = appending {
            line.mask |= (p.mask as u32) << (SECTOR_WORDS * p.index);
            line.data.extend_from_slice(&p.packed[..p.count as usize]);
            if p.index == sectors_per_line - 1 {
                output.extend_from_slice(&line.mask.to_le_bytes());
                for w in line.data.drain(..) {
                    output.extend_from_slice(&w.to_le_bytes());
                }
                line.mask = 0;
            }
        }
    }
    DatapathRun { output, cycles }
}

/// Expands one record through the sector-level decompression datapath.
///
/// Returns the 32 decoded words and the number of payload bytes consumed.
pub fn simulate_decompress_line(record: &[u8]) -> Result<([u32; GROUP_WORDS], usize)> {
    let mask = record
        .get(..4)
        .map(|m| u32::from_le_bytes(m.try_into().unwrap()))
        .ok_or_else(|| Error::corrupt("record shorter than its mask"))?;
    let mut out = [0u32; GROUP_WORDS];
    let mut cursor = 4usize;
    for sector in 0..GROUP_WORDS / SECTOR_WORDS {
        let segment = (mask >> (SECTOR_WORDS * sector)) as u8;
        let used = segment.count_ones() as usize;
        let payload = record
            .get(cursor..cursor + 4 * used)
            .ok_or_else(|| Error::corrupt("record payload truncated"))?;
        let inclusive = prefix_sum(segment);
        for i in 0..SECTOR_WORDS {
            if segment & (1 << i) != 0 {
                let slot = (inclusive[i] - 1) as usize;
                let b = &payload[4 * slot..4 * slot + 4];
                out[sector * SECTOR_WORDS + i] = u32::from_le_bytes(b.try_into().unwrap());
            }
        }
        cursor += 4 * used;
    }
    Ok((out, cursor))
}

/// Checks that the sector-level datapath emits exactly the bytes of the
/// word-level ZVC encoder, and that the decompression datapath inverts them.
pub fn functional_equivalence_check(words: &[u32]) -> bool {
    let reference = zvc::Zvc.compress(words);
    let run = simulate_compress(words);
    if run.output != reference {
        return false;
    }
    let mut pos = 0;
    for line in words.chunks(GROUP_WORDS) {
        match simulate_decompress_line(&run.output[pos..]) {
            Ok((decoded, used)) => {
                if decoded[..line.len()] != *line || decoded[line.len()..].iter().any(|&w| w != 0) {
                    return false;
                }
                pos += used;
            }
            Err(_) => return false,
        }
    }
    pos == run.output.len()
}
