//! Analytical model of activation offload and prefetch over PCIe.
//!
//! Every layer's activations are offloaded to host memory during the forward
//! pass and prefetched back during the backward pass. A transfer overlaps
//! compute; when it takes longer than the compute it hides under, the
//! difference is a stall.
//!
//! Compressed transfers move `bytes / ratio` over the link. Keeping the link
//! saturated needs the engine to read GPU memory at `ratio * pcie_bw`
//! (`COMP_BW`). When that exceeds the DRAM budget granted to the engine, the
//! transfer is stretched by `COMP_BW / budget`, which makes its time
//! `bytes / budget`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::LayerTraceRecord;

/// Which compute window a layer's transfer hides under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Overlap {
    /// Layer `n`'s transfer overlaps layer `n`'s own compute, and the next
    /// layer waits for both.
    #[default]
    SameLayer,
    /// Offload of layer `n` overlaps the forward compute of layer `n + 1`;
    /// prefetch of layer `n` overlaps the backward compute of layer `n + 1`.
    /// The transfers at the ends of each pass are exposed.
    NextLayer,
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Overlap::SameLayer => "same",
            Overlap::NextLayer => "next",
        })
    }
}

impl FromStr for Overlap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same" | "same-layer" => Ok(Overlap::SameLayer),
            "next" | "next-layer" => Ok(Overlap::NextLayer),
            other => Err(Error::config(format!("unknown overlap policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformConfig {
    /// Effective PCIe bandwidth, bytes/s.
    pub pcie_bw: f64,
    /// GPU memory bandwidth the compression engine may consume, bytes/s.
    pub dram_comp_budget: f64,
    /// DRAM bandwidth left over by compute, bytes/s. Reporting only.
    pub dram_leftover: f64,
    /// Request-to-data latency from GPU memory to the DMA engine, seconds.
    pub memory_latency: f64,
    pub overlap: Overlap,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            pcie_bw: 16e9,
            dram_comp_budget: 200e9,
            dram_leftover: 236e9,
            memory_latency: 350e-9,
            overlap: Overlap::SameLayer,
        }
    }
}

impl PlatformConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("pcie bandwidth", self.pcie_bw),
            ("compression budget", self.dram_comp_budget),
            ("leftover dram bandwidth", self.dram_leftover),
            ("memory latency", self.memory_latency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{what} must be positive, got {v}")));
            }
        }
        if self.dram_comp_budget > self.dram_leftover {
            return Err(Error::config(format!(
                "compression budget {} B/s exceeds leftover dram bandwidth {} B/s",
                self.dram_comp_budget, self.dram_leftover
            )));
        }
        Ok(())
    }

    /// Ratio at which `COMP_BW` reaches the DRAM budget.
    pub fn crossover_ratio(&self) -> f64 {
        self.dram_comp_budget / self.pcie_bw
    }
}

fn check_transfer(bytes: u64, ratio: f64) -> Result<()> {
    if bytes == 0 {
        return Err(Error::input("transfer of zero bytes"));
    }
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(Error::input(format!(
            "compression ratio {ratio} is below 1"
        )));
    }
    Ok(())
}

/// Both sides of the offload rule at one ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadBranches {
    /// Link-limited time: compressed bytes over PCIe.
    pub link_limited: f64,
    /// Link-limited time stretched by `COMP_BW / budget`.
    pub inflated: f64,
    /// `COMP_BW` at this ratio.
    pub comp_bw: f64,
}

pub fn offload_branches(bytes: u64, ratio: f64, cfg: &PlatformConfig) -> Result<OffloadBranches> {
    check_transfer(bytes, ratio)?;
    let link_limited = (bytes as f64 / ratio) / cfg.pcie_bw;
    let comp_bw = ratio * cfg.pcie_bw;
    Ok(OffloadBranches {
        link_limited,
        inflated: link_limited * (comp_bw / cfg.dram_comp_budget),
        comp_bw,
    })
}

/// Time to move `bytes` of activations compressed by `ratio` to host memory.
pub fn offload_time(bytes: u64, ratio: f64, cfg: &PlatformConfig) -> Result<f64> {
    let b = offload_branches(bytes, ratio, cfg)?;
    Ok(if b.comp_bw <= cfg.dram_comp_budget {
        b.link_limited
    } else {
        b.inflated
    })
}

/// Prefetch follows the offload rule in the other direction.
pub fn prefetch_time(bytes: u64, ratio: f64, cfg: &PlatformConfig) -> Result<f64> {
    offload_time(bytes, ratio, cfg)
}

/// A layer step lasts as long as the longer of its compute and its transfer.
pub fn layer_step_time(compute: f64, transfer: f64) -> f64 {
    compute.max(transfer)
}

/// Pass time when transfer `i` trails compute `i` (offload during forward).
fn pass_time(compute: &[f64], transfer: &[f64], overlap: Overlap, ahead: bool) -> f64 {
    match overlap {
        Overlap::SameLayer => compute
            .iter()
            .zip(transfer)
            .map(|(&c, &t)| layer_step_time(c, t))
            .sum(),
        Overlap::NextLayer if !ahead => {
            // c0, max(c1, t0), ..., max(c[n-1], t[n-2]), t[n-1]
            let n = compute.len();
            compute[0]
                + (1..n)
                    .map(|i| layer_step_time(compute[i], transfer[i - 1]))
                    .sum::<f64>()
                + transfer[n - 1]
        }
        Overlap::NextLayer => {
            // t0, max(c0, t1), ..., max(c[n-2], t[n-1]), c[n-1]
            let n = compute.len();
            transfer[0]
                + (0..n - 1)
                    .map(|i| layer_step_time(compute[i], transfer[i + 1]))
                    .sum::<f64>()
                + compute[n - 1]
        }
    }
}

/// Exposed part of each transfer under `overlap`, indexed like `transfer`.
fn stalls(compute: &[f64], transfer: &[f64], overlap: Overlap, ahead: bool) -> Vec<f64> {
    let n = compute.len();
    (0..n)
        .map(|i| {
            let window = match overlap {
                Overlap::SameLayer => compute[i],
                Overlap::NextLayer if !ahead => compute.get(i + 1).copied().unwrap_or(0.0),
                Overlap::NextLayer => i.checked_sub(1).map_or(0.0, |j| compute[j]),
            };
            (transfer[i] - window).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTiming {
    pub name: String,
    pub offload_bytes: u64,
    pub ratio: f64,
    pub offload_time: f64,
    pub prefetch_time: f64,
    /// Exposed offload plus prefetch time with compression.
    pub stall_time: f64,
    pub vdnn_offload_time: f64,
    pub vdnn_stall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficReport {
    pub vdnn_bytes: f64,
    pub cdma_bytes: f64,
}

impl TrafficReport {
    /// Compressed traffic as a fraction of uncompressed traffic.
    pub fn normalized(&self) -> f64 {
        self.cdma_bytes / self.vdnn_bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSummary {
    /// Size-weighted (traffic-true) average ratio.
    pub weighted_avg: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub layers: Vec<LayerTiming>,
    pub vdnn_time: f64,
    pub cdma_time: f64,
    pub oracle_time: f64,
    pub speedup_vs_vdnn: f64,
    pub traffic: TrafficReport,
    pub ratios: RatioSummary,
    pub overlap: Overlap,
}

impl SimReport {
    /// Performance of uncompressed offloading relative to the oracle (1.0 = no loss).
    pub fn vdnn_perf(&self) -> f64 {
        self.oracle_time / self.vdnn_time
    }

    pub fn cdma_perf(&self) -> f64 {
        self.oracle_time / self.cdma_time
    }
}

fn check_pairs(trace: &[LayerTraceRecord], ratios: &[f64]) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::input("empty trace"));
    }
    if trace.len() != ratios.len() {
        return Err(Error::input(format!(
            "{} layers but {} ratios",
            trace.len(),
            ratios.len()
        )));
    }
    for (rec, &r) in trace.iter().zip(ratios) {
        rec.validate()?;
        check_transfer(rec.offload_bytes, r)?;
    }
    Ok(())
}

pub fn traffic_report(trace: &[LayerTraceRecord], ratios: &[f64]) -> Result<TrafficReport> {
    check_pairs(trace, ratios)?;
    Ok(TrafficReport {
        vdnn_bytes: trace.iter().map(|r| r.offload_bytes as f64).sum(),
        cdma_bytes: trace
            .iter()
            .zip(ratios)
            .map(|(r, &x)| r.offload_bytes as f64 / x)
            .sum(),
    })
}

/// Ratio of total uncompressed to total compressed bytes, and the largest
/// per-layer ratio.
pub fn weighted_avg_ratio(trace: &[LayerTraceRecord], ratios: &[f64]) -> Result<RatioSummary> {
    let t = traffic_report(trace, ratios)?;
    Ok(RatioSummary {
        weighted_avg: t.vdnn_bytes / t.cdma_bytes,
        max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Runs one training iteration of the trace under uncompressed offloading,
/// compressed offloading at `ratios`, and the transfer-free oracle.
pub fn simulate(
    trace: &[LayerTraceRecord],
    ratios: &[f64],
    cfg: &PlatformConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    check_pairs(trace, ratios)?;

    let fwd: Vec<f64> = trace.iter().map(|r| r.fwd_time).collect();
    let bwd: Vec<f64> = trace.iter().map(|r| r.bwd_time).collect();
    let transfer_times = |ratio_of: &dyn Fn(usize) -> f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut off = Vec::with_capacity(trace.len());
        let mut pre = Vec::with_capacity(trace.len());
        for (i, rec) in trace.iter().enumerate() {
            off.push(offload_time(rec.offload_bytes, ratio_of(i), cfg)?);
            pre.push(prefetch_time(rec.offload_bytes, ratio_of(i), cfg)?);
        }
        Ok((off, pre))
    };
    let (vdnn_off, vdnn_pre) = transfer_times(&|_| 1.0)?;
    let (cdma_off, cdma_pre) = transfer_times(&|i| ratios[i])?;

    // the backward pass walks layers last to first
    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
    let (bwd_rev, vdnn_pre_rev, cdma_pre_rev) = (rev(&bwd), rev(&vdnn_pre), rev(&cdma_pre));
    let ov = cfg.overlap;
    let iteration = |off: &[f64], pre_rev: &[f64]| {
        pass_time(&fwd, off, ov, false) + pass_time(&bwd_rev, pre_rev, ov, true)
    };
    let vdnn_time = iteration(&vdnn_off, &vdnn_pre_rev);
    let cdma_time = iteration(&cdma_off, &cdma_pre_rev);
    let oracle_time = fwd.iter().sum::<f64>() + bwd.iter().sum::<f64>();

    let per_layer_stall = |off: &[f64], pre_rev: &[f64]| {
        let f = stalls(&fwd, off, ov, false);
        let mut b = stalls(&bwd_rev, pre_rev, ov, true);
        b.reverse();
        f.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>()
    };
    let cdma_stall = per_layer_stall(&cdma_off, &cdma_pre_rev);
    let vdnn_stall = per_layer_stall(&vdnn_off, &vdnn_pre_rev);

    let layers = trace
        .iter()
        .enumerate()
        .map(|(i, rec)| LayerTiming {
            name: rec.name.clone(),
            offload_bytes: rec.offload_bytes,
            ratio: ratios[i],
            offload_time: cdma_off[i],
            prefetch_time: cdma_pre[i],
            stall_time: cdma_stall[i],
            vdnn_offload_time: vdnn_off[i],
            vdnn_stall_time: vdnn_stall[i],
        })
        .collect();

    Ok(SimReport {
        layers,
        vdnn_time,
        cdma_time,
        oracle_time,
        speedup_vs_vdnn: vdnn_time / cdma_time,
        traffic: traffic_report(trace, ratios)?,
        ratios: weighted_avg_ratio(trace, ratios)?,
        overlap: ov,
    })
}
