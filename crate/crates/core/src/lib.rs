//! Compression of sparse activation maps for CPU offloading, and a timing
//! model of the DMA engine that performs it.
//!
//! * [`tensor`]: activation tensors, layouts and the `CDMA` tensor file.
//! * [`codec`]: zero-value compression, run-length encoding and DEFLATE,
//!   applied per window.
//! * [`container`]: the `CDMZ` compressed stream file.
//! * [`microarch`]: latency, throughput and buffer sizing of the engine,
//!   plus a cycle-stepped model of its datapath.
//! * [`transfer`]: offload/prefetch time for a layer trace against
//!   uncompressed offloading and a transfer-free oracle.
//! * [`workload`]: synthetic tensors with controlled density and zero
//!   clustering, and per-network trace presets.
//! * [`cli`]: the `cdma` command line.

pub mod cli;
pub mod codec;
pub mod container;
pub mod error;
pub mod microarch;
pub mod report;
pub mod tensor;
pub mod trace;
pub mod transfer;
pub mod workload;

pub use codec::{CodecId, CompressedBlock, CompressionReport};
pub use error::{Error, Result};
pub use tensor::{ActivationTensor, DensityStats, Dims, Layout};
pub use trace::LayerTraceRecord;
pub use transfer::{PlatformConfig, SimReport};
pub use workload::SparsityProfile;
