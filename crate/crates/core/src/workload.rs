//! Synthetic activation tensors and per-network offload traces.
//!
//! Zero placement follows a two-state (zero / nonzero) Markov chain over the
//! NCHW stream. For density `d` and clustering `k`, the chain's lag-one
//! correlation is `k`, so a zero run ends with probability `d * (1 - k)` and
//! the mean zero-run length is `1 / (d * (1 - k))`. Generation conditions
//! the chain on its sufficient statistics: the number of nonzeros is fixed at
//! `round(d * len)` and the number of zero runs at its expectation, and run
//! lengths are drawn uniformly among the arrangements that satisfy both. The
//! realized density is therefore exact up to rounding, and `k = 1` gives a
//! single contiguous zero run.
//!
//! Nonzero values are half-normal magnitudes, positive like ReLU outputs.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::codec::{compress_words, CodecId, DEFAULT_WINDOW_BYTES};
use crate::error::{Error, Result};
use crate::tensor::{ActivationTensor, Dims, Layout};
use crate::trace::{format_trace, parse_trace, LayerTraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityProfile {
    /// Target fraction of nonzero words.
    pub density: f64,
    /// 0 = independent zeros, 1 = one contiguous zero run.
    pub clustering: f64,
    pub seed: u64,
}

impl SparsityProfile {
    pub fn new(density: f64, clustering: f64, seed: u64) -> Self {
        SparsityProfile {
            density,
            clustering,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::config(format!(
                "density {} is outside [0, 1]",
                self.density
            )));
        }
        if !(0.0..=1.0).contains(&self.clustering) {
            return Err(Error::config(format!(
                "clustering {} is outside [0, 1]",
                self.clustering
            )));
        }
        Ok(())
    }

    /// Expected zero-run length of the underlying chain.
    pub fn mean_zero_run(&self) -> f64 {
        1.0 / (self.density * (1.0 - self.clustering))
    }
}

/// Sorted cut points splitting `total` into `parts` positive pieces.
fn positive_composition<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    debug_assert!(parts >= 1 && parts <= total);
    let mut cuts: Vec<usize> = index::sample(rng, total - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
}

/// Splits `total` into `parts` pieces that may be empty.
fn weak_composition<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    positive_composition(rng, total + parts, parts)
        .into_iter()
        .map(|s| s - 1)
        .collect()
}

/// Zero/nonzero indicator of length `len` in stream order.
pub fn sparsity_pattern<R: Rng>(rng: &mut R, len: usize, profile: &SparsityProfile) -> Vec<bool> {
    let nonzeros = ((profile.density * len as f64).round() as usize).min(len);
    let zeros = len - nonzeros;
    if zeros == 0 || nonzeros == 0 {
        return vec![nonzeros > 0; len];
    }
    let expected_runs = zeros as f64 * profile.density * (1.0 - profile.clustering);
    let runs = (expected_runs.round() as usize).clamp(1, zeros.min(nonzeros + 1));

    let zero_runs = positive_composition(rng, zeros, runs);
    // runs + 1 nonzero segments; the interior ones separate zero runs
    let mut segments = weak_composition(rng, nonzeros - (runs - 1), runs + 1);
    for s in &mut segments[1..runs] {
        *s += 1;
    }

    let mut out = Vec::with_capacity(len);
    for (i, &seg) in segments.iter().enumerate() {
        out.resize(out.len() + seg, true);
        if let Some(&z) = zero_runs.get(i) {
            out.resize(out.len() + z, false);
        }
    }
    debug_assert_eq!(out.len(), len);
    out
}

/// Generates a tensor whose zeros follow `profile`.
///
/// Clustering acts on the NCHW stream (zeros cluster along rows of a
/// channel); the result is then permuted into `layout`.
pub fn generate(dims: Dims, layout: Layout, profile: &SparsityProfile) -> Result<ActivationTensor> {
    profile.validate()?;
    let len = dims
        .checked_len()
        .ok_or_else(|| Error::config(format!("dims {dims} overflow")))?;
    if len == 0 {
        return Err(Error::config(format!("dims {dims} hold no elements")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let pattern = sparsity_pattern(&mut rng, len, profile);
    let normal = Normal::new(0.0f32, 1.0).expect("unit normal");
    let words = pattern
        .into_iter()
        .map(|nz| {
            if !nz {
                return 0;
            }
            loop {
                let v = normal.sample(&mut rng).abs();
                if v != 0.0 {
                    return v.to_bits();
                }
            }
        })
        .collect();
    let t = ActivationTensor::new(dims, Layout::Nchw, words)?;
    Ok(t.permute_layout(layout))
}

/// Mean length of maximal zero runs in a word stream.
pub fn mean_zero_run(words: &[u32]) -> f64 {
    let mut runs = 0usize;
    let mut zeros = 0usize;
    let mut prev_zero = false;
    for &w in words {
        let z = w == 0;
        if z {
            zeros += 1;
            if !prev_zero {
                runs += 1;
            }
        }
        prev_zero = z;
    }
    if runs == 0 {
        0.0
    } else {
        zeros as f64 / runs as f64
    }
}

/// Largest sample used when estimating a layer's compression ratio.
pub const MAX_SAMPLE_WORDS: usize = 1 << 20;

/// How per-layer ratios are estimated from a trace's densities.
///
/// Zeros are placed along the NCHW stream, so a sample's ratio depends only
/// on its length, density and clustering; samples are capped at
/// [`MAX_SAMPLE_WORDS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimator {
    pub codec: CodecId,
    pub clustering: f64,
    pub window_bytes: usize,
    pub seed: u64,
}

impl RatioEstimator {
    pub fn new(codec: CodecId) -> Self {
        RatioEstimator {
            codec,
            clustering: 0.0,
            window_bytes: DEFAULT_WINDOW_BYTES,
            seed: 0,
        }
    }

    /// Measures the ratio, headers included, of a generated stream of
    /// `words` words. Ratios below 1 are clamped to 1: the engine ships such
    /// data uncompressed.
    pub fn estimate(&self, words: usize, density: f64, salt: u64) -> Result<f64> {
        let profile = SparsityProfile::new(density, self.clustering, self.seed ^ salt);
        let dims = Dims::new(1, 1, 1, words.clamp(1, MAX_SAMPLE_WORDS));
        let t = generate(dims, Layout::Nchw, &profile)?;
        let (_, report) = compress_words(t.words(), self.codec, self.window_bytes)?;
        Ok(report.ratio().max(1.0))
    }

    /// One ratio per trace row: the pinned ratio when the row has one, else
    /// an estimate at the row's density.
    pub fn ratios_for(&self, trace: &[LayerTraceRecord]) -> Result<Vec<f64>> {
        trace
            .iter()
            .enumerate()
            .map(|(i, rec)| match rec.ratio {
                Some(r) => Ok(r),
                None => self.estimate((rec.offload_bytes / 4) as usize, rec.density, i as u64),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    /// 1x1 convolutions and fire/inception modules.
    Pointwise,
    Pool,
    Fc,
}

impl LayerKind {
    /// Synthetic forward throughput in bytes of output per second.
    fn forward_rate(self) -> f64 {
        match self {
            LayerKind::Conv => 24e9,
            LayerKind::Pointwise => 32e9,
            LayerKind::Pool => 64e9,
            LayerKind::Fc => 16e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerShape {
    pub name: &'static str,
    pub kind: LayerKind,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

const fn l(name: &'static str, kind: LayerKind, c: usize, h: usize, w: usize) -> LayerShape {
    LayerShape {
        name,
        kind,
        c,
        h,
        w,
    }
}

use LayerKind::{Conv, Fc, Pointwise, Pool};

const ALEXNET: &[LayerShape] = &[
    l("conv0", Conv, 96, 55, 55),
    l("pool0", Pool, 96, 27, 27),
    l("conv1", Conv, 256, 27, 27),
    l("pool1", Pool, 256, 13, 13),
    l("conv2", Conv, 384, 13, 13),
    l("conv3", Conv, 384, 13, 13),
    l("conv4", Conv, 256, 13, 13),
    l("pool2", Pool, 256, 6, 6),
    l("fc0", Fc, 4096, 1, 1),
    l("fc1", Fc, 4096, 1, 1),
];

const OVERFEAT: &[LayerShape] = &[
    l("conv0", Conv, 96, 56, 56),
    l("pool0", Pool, 96, 28, 28),
    l("conv1", Conv, 256, 24, 24),
    l("pool1", Pool, 256, 12, 12),
    l("conv2", Conv, 512, 12, 12),
    l("conv3", Conv, 1024, 12, 12),
    l("conv4", Conv, 1024, 12, 12),
    l("pool2", Pool, 1024, 6, 6),
    l("fc0", Fc, 3072, 1, 1),
    l("fc1", Fc, 4096, 1, 1),
];

const NIN: &[LayerShape] = &[
    l("conv0", Conv, 96, 54, 54),
    l("cccp0", Pointwise, 96, 54, 54),
    l("cccp1", Pointwise, 96, 54, 54),
    l("pool0", Pool, 96, 27, 27),
    l("conv1", Conv, 256, 27, 27),
    l("cccp2", Pointwise, 256, 27, 27),
    l("cccp3", Pointwise, 256, 27, 27),
    l("pool1", Pool, 256, 13, 13),
    l("conv2", Conv, 384, 13, 13),
    l("cccp4", Pointwise, 384, 13, 13),
    l("cccp5", Pointwise, 384, 13, 13),
    l("pool2", Pool, 384, 6, 6),
    l("conv3", Conv, 1024, 6, 6),
    l("cccp6", Pointwise, 1024, 6, 6),
    l("cccp7", Pointwise, 1000, 6, 6),
];

const VGG16: &[LayerShape] = &[
    l("conv0", Conv, 64, 224, 224),
    l("conv1", Conv, 64, 224, 224),
    l("pool0", Pool, 64, 112, 112),
    l("conv2", Conv, 128, 112, 112),
    l("conv3", Conv, 128, 112, 112),
    l("pool1", Pool, 128, 56, 56),
    l("conv4", Conv, 256, 56, 56),
    l("conv5", Conv, 256, 56, 56),
    l("conv6", Conv, 256, 56, 56),
    l("pool2", Pool, 256, 28, 28),
    l("conv7", Conv, 512, 28, 28),
    l("conv8", Conv, 512, 28, 28),
    l("conv9", Conv, 512, 28, 28),
    l("pool3", Pool, 512, 14, 14),
    l("conv10", Conv, 512, 14, 14),
    l("conv11", Conv, 512, 14, 14),
    l("conv12", Conv, 512, 14, 14),
    l("pool4", Pool, 512, 7, 7),
    l("fc0", Fc, 4096, 1, 1),
    l("fc1", Fc, 4096, 1, 1),
];

const SQUEEZENET: &[LayerShape] = &[
    l("conv0", Conv, 96, 111, 111),
    l("pool0", Pool, 96, 55, 55),
    l("fire0", Pointwise, 128, 55, 55),
    l("fire1", Pointwise, 128, 55, 55),
    l("fire2", Pointwise, 256, 55, 55),
    l("pool1", Pool, 256, 27, 27),
    l("fire3", Pointwise, 256, 27, 27),
    l("fire4", Pointwise, 384, 27, 27),
    l("fire5", Pointwise, 384, 27, 27),
    l("fire6", Pointwise, 512, 27, 27),
    l("pool2", Pool, 512, 13, 13),
    l("fire7", Pointwise, 512, 13, 13),
    l("conv1", Conv, 1000, 13, 13),
];

const GOOGLENET: &[LayerShape] = &[
    l("conv0", Conv, 64, 112, 112),
    l("pool0", Pool, 64, 56, 56),
    l("conv1", Pointwise, 64, 56, 56),
    l("conv2", Conv, 192, 56, 56),
    l("pool1", Pool, 192, 28, 28),
    l("incep3a", Pointwise, 256, 28, 28),
    l("incep3b", Pointwise, 480, 28, 28),
    l("pool2", Pool, 480, 14, 14),
    l("incep4a", Pointwise, 512, 14, 14),
    l("incep4b", Pointwise, 512, 14, 14),
    l("incep4c", Pointwise, 512, 14, 14),
    l("incep4d", Pointwise, 528, 14, 14),
    l("incep4e", Pointwise, 832, 14, 14),
    l("pool3", Pool, 832, 7, 7),
    l("incep5a", Pointwise, 832, 7, 7),
    l("incep5b", Pointwise, 1024, 7, 7),
    l("pool4", Pool, 1024, 1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    AlexNet,
    OverFeat,
    NiN,
    Vgg,
    SqueezeNet,
    GoogLeNet,
}

impl Network {
    pub const ALL: [Network; 6] = [
        Network::AlexNet,
        Network::OverFeat,
        Network::NiN,
        Network::Vgg,
        Network::SqueezeNet,
        Network::GoogLeNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Network::AlexNet => "alexnet",
            Network::OverFeat => "overfeat",
            Network::NiN => "nin",
            Network::Vgg => "vgg",
            Network::SqueezeNet => "squeezenet",
            Network::GoogLeNet => "googlenet",
        }
    }

    pub fn from_name(name: &str) -> Result<Network> {
        Network::ALL
            .into_iter()
            .find(|n| n.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::config(format!("unknown preset `{name}`")))
    }

    /// Training minibatch size.
    pub fn batch(self) -> usize {
        match self {
            Network::AlexNet | Network::OverFeat | Network::GoogLeNet => 256,
            Network::NiN | Network::Vgg => 128,
            Network::SqueezeNet => 512,
        }
    }

    pub fn layers(self) -> &'static [LayerShape] {
        match self {
            Network::AlexNet => ALEXNET,
            Network::OverFeat => OVERFEAT,
            Network::NiN => NIN,
            Network::Vgg => VGG16,
            Network::SqueezeNet => SQUEEZENET,
            Network::GoogLeNet => GOOGLENET,
        }
    }

    /// Per-image output shape of every layer, as `1,C,H,W`.
    pub fn sample_dims(self) -> Vec<Dims> {
        self.layers()
            .iter()
            .map(|s| Dims::new(1, s.c, s.h, s.w))
            .collect()
    }

    /// Builds the trace with every layer at `density`.
    ///
    /// Offload sizes come from the layer shapes and minibatch. Compute times
    /// are synthetic: output bytes over a fixed per-kind rate, with backward
    /// taking twice the forward time.
    pub fn trace(self, density: f64) -> Vec<LayerTraceRecord> {
        self.layers()
            .iter()
            .map(|s| {
                let bytes = (self.batch() * s.c * s.h * s.w * 4) as u64;
                let fwd = bytes as f64 / s.kind.forward_rate();
                LayerTraceRecord::new(s.name, bytes, density, fwd, 2.0 * fwd)
            })
            .collect()
    }

    /// Trace file text as shipped in `data/presets/`.
    pub fn trace_file(self, density: f64) -> String {
        let title = format!("{} preset, batch {}", self.name(), self.batch());
        format_trace(
            &self.trace(density),
            &[
                title.as_str(),
                "layer shapes follow the published architecture;",
                "compute times are synthetic, not measurements",
            ],
        )
    }

    fn shipped(self) -> &'static str {
        match self {
            Network::AlexNet => include_str!("../data/presets/alexnet.trace"),
            Network::OverFeat => include_str!("../data/presets/overfeat.trace"),
            Network::NiN => include_str!("../data/presets/nin.trace"),
            Network::Vgg => include_str!("../data/presets/vgg.trace"),
            Network::SqueezeNet => include_str!("../data/presets/squeezenet.trace"),
            Network::GoogLeNet => include_str!("../data/presets/googlenet.trace"),
        }
    }
}

/// Network-wide density written into the shipped presets (62% sparsity).
pub const PRESET_DENSITY: f64 = 0.38;

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub network: Network,
    pub records: Vec<LayerTraceRecord>,
}

impl Preset {
    /// The same trace with every layer set to `density`.
    pub fn with_density(&self, density: f64) -> Vec<LayerTraceRecord> {
        self.records
            .iter()
            .cloned()
            .map(|mut r| {
                r.density = density;
                r
            })
            .collect()
    }
}

/// Parses the six shipped preset trace files.
pub fn load_trace_presets() -> Result<Vec<Preset>> {
    Network::ALL
        .into_iter()
        .map(|network| {
            Ok(Preset {
                network,
                records: parse_trace(network.shipped())?,
            })
        })
        .collect()
}
