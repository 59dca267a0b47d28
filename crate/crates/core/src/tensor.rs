//! Activation tensors, their memory layouts, and density statistics.
//!
//! A tensor holds `n * c * h * w` 32-bit words. The layout name lists the
//! dimensions from outermost to innermost, so `NCHW` iterates `W` fastest and
//! `CHWN` iterates the minibatch index fastest.
//!
//! Words are stored as raw bit patterns. A word counts as zero only when its
//! pattern is `0x0000_0000`; negative zero is a nonzero word.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Magic bytes at the start of a tensor file.
pub const TENSOR_MAGIC: [u8; 4] = *b"CDMA";
/// Tensor file format version written and accepted by this crate.
pub const TENSOR_FORMAT_VERSION: u16 = 1;
/// Size of the fixed tensor file header in bytes.
pub const TENSOR_HEADER_BYTES: usize = 24;
/// Element type code for 32-bit IEEE-754 floats.
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layout {
    Nchw,
    Nhwc,
    Chwn,
}

impl Layout {
    pub const ALL: [Layout; 3] = [Layout::Nchw, Layout::Nhwc, Layout::Chwn];

    pub fn code(self) -> u8 {
        match self {
            Layout::Nchw => 0,
            Layout::Nhwc => 1,
            Layout::Chwn => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Layout> {
        match code {
            0 => Some(Layout::Nchw),
            1 => Some(Layout::Nhwc),
            2 => Some(Layout::Chwn),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Layout::Nchw => "NCHW",
            Layout::Nhwc => "NHWC",
            Layout::Chwn => "CHWN",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NCHW" => Ok(Layout::Nchw),
            "NHWC" => Ok(Layout::Nhwc),
            "CHWN" => Ok(Layout::Chwn),
            other => Err(Error::config(format!("unknown layout `{other}`"))),
        }
    }
}

/// Logical extents of a 4D activation array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Dims { n, c, h, w }
    }

    /// Total element count, or `None` on overflow.
    pub fn checked_len(&self) -> Option<usize> {
        self.n
            .checked_mul(self.c)?
            .checked_mul(self.h)?
            .checked_mul(self.w)
    }

    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of logical index `(n, c, h, w)` under `layout`.
    #[inline]
    pub fn offset(&self, layout: Layout, n: usize, c: usize, h: usize, w: usize) -> usize {
        match layout {
            Layout::Nchw => ((n * self.c + c) * self.h + h) * self.w + w,
            Layout::Nhwc => ((n * self.h + h) * self.w + w) * self.c + c,
            Layout::Chwn => ((c * self.h + h) * self.w + w) * self.n + n,
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.n, self.c, self.h, self.w)
    }
}

impl FromStr for Dims {
    type Err = Error;

    /// Parses `N,C,H,W`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::config(format!("dims `{s}` must be N,C,H,W")));
        }
        let mut v = [0usize; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::config(format!("bad dimension `{p}` in `{s}`")))?;
        }
        Ok(Dims::new(v[0], v[1], v[2], v[3]))
    }
}

/// A 4D array of 32-bit words tagged with its linearization order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationTensor {
    dims: Dims,
    layout: Layout,
    data: Vec<u32>,
}

impl ActivationTensor {
    /// Builds a tensor from raw word bit patterns already in `layout` order.
    pub fn new(dims: Dims, layout: Layout, data: Vec<u32>) -> Result<Self> {
        let expected = dims
            .checked_len()
            .ok_or_else(|| Error::input(format!("dims {dims} overflow")))?;
        if data.len() != expected {
            return Err(Error::input(format!(
                "data holds {} words but dims {dims} need {expected}",
                data.len()
            )));
        }
        Ok(ActivationTensor { dims, layout, data })
    }

    pub fn from_f32(dims: Dims, layout: Layout, values: &[f32]) -> Result<Self> {
        Self::new(dims, layout, values.iter().map(|v| v.to_bits()).collect())
    }

    pub fn zeros(dims: Dims, layout: Layout) -> Self {
        ActivationTensor {
            dims,
            layout,
            data: vec![0; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Flat word stream in this tensor's layout order.
    pub fn words(&self) -> &[u32] {
        &self.data
    }

    pub fn into_words(self) -> Vec<u32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn size_bytes(&self) -> usize {
        self.data.len() * 4
    }

    /// Word at logical index `(n, c, h, w)`, independent of layout.
    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> u32 {
        self.data[self.dims.offset(self.layout, n, c, h, w)]
    }

    /// Returns the same logical tensor linearized in `target` order.
    pub fn permute_layout(&self, target: Layout) -> ActivationTensor {
        if target == self.layout {
            return self.clone();
        }
        let d = self.dims;
        let mut out = vec![0u32; self.data.len()];
        for n in 0..d.n {
            for c in 0..d.c {
                for h in 0..d.h {
                    let src_row = d.offset(self.layout, n, c, h, 0);
                    for w in 0..d.w {
                        let src = if self.layout == Layout::Nchw {
                            src_row + w
                        } else {
                            d.offset(self.layout, n, c, h, w)
                        };
                        out[d.offset(target, n, c, h, w)] = self.data[src];
                    }
                }
            }
        }
        ActivationTensor {
            dims: d,
            layout: target,
            data: out,
        }
    }

    pub fn density(&self) -> DensityStats {
        DensityStats::of_words(&self.data)
    }

    /// Serializes to the tensor file format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TENSOR_HEADER_BYTES + self.size_bytes());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_FORMAT_VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.layout.code());
        for d in [self.dims.n, self.dims.c, self.dims.h, self.dims.w] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for w in &self.data {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Parses a complete tensor file image.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = TensorHeader::parse(bytes)?;
        let body = &bytes[TENSOR_HEADER_BYTES..];
        let expected = header
            .dims
            .checked_len()
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::corrupt("tensor dims overflow"))?;
        if body.len() != expected {
            return Err(Error::corrupt(format!(
                "tensor data section is {} bytes, dims {} need {expected}",
                body.len(),
                header.dims
            )));
        }
        Ok(ActivationTensor {
            dims: header.dims,
            layout: header.layout,
            data: words_from_le_bytes(body),
        })
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Decoded fixed-size header of a tensor file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorHeader {
    pub dims: Dims,
    pub layout: Layout,
}

impl TensorHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < TENSOR_HEADER_BYTES {
            return Err(Error::corrupt("tensor file shorter than its header"));
        }
        if bytes[0..4] != TENSOR_MAGIC {
            return Err(Error::corrupt("bad tensor magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != TENSOR_FORMAT_VERSION {
            return Err(Error::corrupt(format!(
                "unsupported tensor format version {version}"
            )));
        }
        if bytes[6] != DTYPE_F32 {
            return Err(Error::corrupt(format!(
                "unsupported dtype code {}",
                bytes[6]
            )));
        }
        let layout = Layout::from_code(bytes[7])
            .ok_or_else(|| Error::corrupt(format!("unknown layout code {}", bytes[7])))?;
        let dim = |i: usize| {
            let o = 8 + 4 * i;
            u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize
        };
        Ok(TensorHeader {
            dims: Dims::new(dim(0), dim(1), dim(2), dim(3)),
            layout,
        })
    }

    /// The header bytes, identical to the prefix `ActivationTensor::to_bytes` writes.
    pub fn to_bytes(&self) -> [u8; TENSOR_HEADER_BYTES] {
        let mut out = [0u8; TENSOR_HEADER_BYTES];
        out[0..4].copy_from_slice(&TENSOR_MAGIC);
        out[4..6].copy_from_slice(&TENSOR_FORMAT_VERSION.to_le_bytes());
        out[6] = DTYPE_F32;
        out[7] = self.layout.code();
        for (i, d) in [self.dims.n, self.dims.c, self.dims.h, self.dims.w]
            .into_iter()
            .enumerate()
        {
            out[8 + 4 * i..12 + 4 * i].copy_from_slice(&(d as u32).to_le_bytes());
        }
        out
    }
}

pub(crate) fn words_from_le_bytes(bytes: &[u8]) -> Vec<u32> {
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub(crate) fn words_to_le_bytes(words: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(words.len() * 4);
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

/// Nonzero/zero counts over a word stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub nonzero_count: u64,
    pub total_count: u64,
    pub density: f64,
    pub sparsity: f64,
}

impl DensityStats {
    pub fn from_counts(nonzero_count: u64, total_count: u64) -> Self {
        // an empty tensor has no nonzero words; report it as fully sparse
        let density = if total_count == 0 {
            0.0
        } else {
            nonzero_count as f64 / total_count as f64
        };
        DensityStats {
            nonzero_count,
            total_count,
            density,
            sparsity: 1.0 - density,
        }
    }

    pub fn of_words(words: &[u32]) -> Self {
        let nonzero = words.iter().filter(|&&w| w != 0).count() as u64;
        Self::from_counts(nonzero, words.len() as u64)
    }
}

/// Network-wide sparsity with each layer weighted by its activation size.
pub fn weighted_network_sparsity(layers: &[(DensityStats, u64)]) -> Result<f64> {
    if layers.is_empty() {
        return Err(Error::input("cannot aggregate sparsity over zero layers"));
    }
    if let Some(i) = layers.iter().position(|(_, bytes)| *bytes == 0) {
        return Err(Error::input(format!("layer {i} has zero bytes")));
    }
    let total: f64 = layers.iter().map(|(_, b)| *b as f64).sum();
    let weighted: f64 = layers.iter().map(|(s, b)| s.sparsity * *b as f64).sum();
    Ok(weighted / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(dims: Dims, layout: Layout, words: &[u32]) -> ActivationTensor {
        ActivationTensor::new(dims, layout, words.to_vec()).unwrap()
    }

    #[test]
    fn single_channel_layouts_coincide() {
        let t = tensor(Dims::new(1, 1, 2, 2), Layout::Nchw, &[1, 2, 3, 4]);
        let p = t.permute_layout(Layout::Nhwc);
        assert_eq!(p.layout(), Layout::Nhwc);
        assert_eq!(p.words(), t.words());
    }

    #[test]
    fn two_channel_nchw_to_nhwc_interleaves() {
        // channel a = [a0, a1], channel b = [b0, b1] along W
        let (a0, a1, b0, b1) = (10, 11, 20, 21);
        let t = tensor(Dims::new(1, 2, 1, 2), Layout::Nchw, &[a0, a1, b0, b1]);
        assert_eq!(t.permute_layout(Layout::Nhwc).words(), &[a0, b0, a1, b1]);
    }

    #[test]
    fn chwn_puts_batch_innermost() {
        let d = Dims::new(2, 1, 1, 2);
        // NCHW: image0 = [x0, x1], image1 = [y0, y1]
        let t = tensor(d, Layout::Nchw, &[1, 2, 3, 4]);
        assert_eq!(t.permute_layout(Layout::Chwn).words(), &[1, 3, 2, 4]);
    }

    #[test]
    fn logical_reads_survive_permutation() {
        let d = Dims::new(2, 3, 4, 5);
        let words: Vec<u32> = (0..d.len() as u32).collect();
        let t = tensor(d, Layout::Nchw, &words);
        for target in Layout::ALL {
            let p = t.permute_layout(target);
            for n in 0..d.n {
                for c in 0..d.c {
                    for h in 0..d.h {
                        for w in 0..d.w {
                            assert_eq!(p.get(n, c, h, w), t.get(n, c, h, w));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn density_examples() {
        let d = Dims::new(1, 1, 4, 8);
        assert_eq!(
            ActivationTensor::zeros(d, Layout::Nchw).density().density,
            0.0
        );
        let ones = ActivationTensor::from_f32(d, Layout::Nchw, &[1.0; 32]).unwrap();
        assert_eq!(ones.density().density, 1.0);

        let mut words = vec![0u32; 32];
        for i in (0..32).step_by(5).take(7) {
            words[i] = 0x3F80_0000;
        }
        for w in words.iter_mut().skip(1).step_by(5).take(6) {
            *w = 7;
        }
        let t = tensor(d, Layout::Nchw, &words);
        let s = t.density();
        assert_eq!(s.nonzero_count, 13);
        assert_eq!(s.density, 13.0 / 32.0);
        assert_eq!(s.density + s.sparsity, 1.0);
    }

    #[test]
    fn negative_zero_is_nonzero() {
        let t =
            ActivationTensor::from_f32(Dims::new(1, 1, 1, 2), Layout::Nchw, &[-0.0, 0.0]).unwrap();
        assert_eq!(t.density().nonzero_count, 1);
    }

    #[test]
    fn weighted_sparsity_examples() {
        let s = |sp: f64| DensityStats {
            nonzero_count: 0,
            total_count: 0,
            density: 1.0 - sp,
            sparsity: sp,
        };
        assert!((weighted_network_sparsity(&[(s(0.494), 10)]).unwrap() - 0.494).abs() < 1e-12);
        assert_eq!(
            weighted_network_sparsity(&[(s(0.5), 100), (s(0.5), 300)]).unwrap(),
            0.5
        );
        let mixed = weighted_network_sparsity(&[(s(0.2), 100), (s(0.8), 300)]).unwrap();
        assert!((mixed - 0.65).abs() < 1e-12);
        assert!(weighted_network_sparsity(&[]).is_err());
        assert!(weighted_network_sparsity(&[(s(0.1), 0)]).is_err());
    }

    #[test]
    fn new_rejects_length_mismatch() {
        assert!(ActivationTensor::new(Dims::new(1, 1, 2, 2), Layout::Nchw, vec![0; 3]).is_err());
    }

    #[test]
    fn file_header_layout() {
        let t = tensor(Dims::new(1, 2, 1, 1), Layout::Chwn, &[0xAABB_CCDD, 0]);
        let b = t.to_bytes();
        assert_eq!(&b[0..4], b"CDMA");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(b[6], 0);
        assert_eq!(b[7], 2);
        assert_eq!(&b[8..24], &[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&b[24..28], &[0xDD, 0xCC, 0xBB, 0xAA]);
        assert_eq!(ActivationTensor::from_bytes(&b).unwrap(), t);
    }

    #[test]
    fn reader_rejects_bad_headers() {
        let t = tensor(Dims::new(1, 1, 1, 1), Layout::Nchw, &[5]);
        let good = t.to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            ActivationTensor::from_bytes(&bad_magic),
            Err(Error::Corrupt(_))
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(
            ActivationTensor::from_bytes(&bad_version),
            Err(Error::Corrupt(_))
        ));

        let mut bad_layout = good.clone();
        bad_layout[7] = 9;
        assert!(ActivationTensor::from_bytes(&bad_layout).is_err());

        assert!(ActivationTensor::from_bytes(&good[..good.len() - 1]).is_err());
        let mut long = good.clone();
        long.push(0);
        assert!(ActivationTensor::from_bytes(&long).is_err());
    }

    #[test]
    fn parse_dims_and_layout() {
        assert_eq!("2, 3,4,5".parse::<Dims>().unwrap(), Dims::new(2, 3, 4, 5));
        assert!("2,3,4".parse::<Dims>().is_err());
        assert_eq!("nhwc".parse::<Layout>().unwrap(), Layout::Nhwc);
        assert!("hwcn".parse::<Layout>().is_err());
    }
}
