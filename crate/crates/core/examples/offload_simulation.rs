//! Offload/prefetch time of every preset network at a few densities.

use cdma::codec::CodecId;
use cdma::transfer::{simulate, PlatformConfig};
use cdma::workload::{load_trace_presets, RatioEstimator};

fn main() -> cdma::Result<()> {
    let cfg = PlatformConfig::default();
    let est = RatioEstimator::new(CodecId::Zvc);
    println!(
        "{:<11} {:>7} {:>7} {:>8} {:>9} {:>9}",
        "network", "density", "ratio", "traffic", "vdnn/orc", "cdma/orc"
    );
    for preset in load_trace_presets()? {
        for density in [0.2, 0.38, 0.6] {
            let trace = preset.with_density(density);
            let ratios = est.ratios_for(&trace)?;
            let r = simulate(&trace, &ratios, &cfg)?;
            println!(
                "{:<11} {density:>7} {:>7.2} {:>8.3} {:>9.3} {:>9.3}",
                preset.network.name(),
                r.ratios.weighted_avg,
                r.traffic.normalized(),
                r.vdnn_perf(),
                r.cdma_perf()
            );
        }
    }
    Ok(())
}
