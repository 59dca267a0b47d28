//! Latency, throughput and buffer sizing of the compression engine, and a
//! cycle-stepped run of its datapath.

use cdma::codec::{zvc, Codec};
use cdma::microarch::{
    compress_latency_cycles, decompress_latency_cycles, engine_throughput, prefix_sum,
    simulate_compress, size_buffer, EngineConfig,
};

fn main() -> cdma::Result<()> {
    let cfg = EngineConfig::default();
    for lines in [1, 10, 100] {
        println!(
            "{lines:>4} lines: compress {} cycles, decompress {} cycles",
            compress_latency_cycles(lines, &cfg),
            decompress_latency_cycles(lines, &cfg)
        );
    }
    println!(
        "throughput at {} GHz: {} GB/s",
        cfg.clock_hz / 1e9,
        engine_throughput(&cfg)? / 1e9
    );

    let buf = size_buffer(200e9, 350e-9)?;
    println!(
        "buffer for 200 GB/s over 350 ns: {} bytes",
        buf.required_bytes
    );

    println!("prefix sum of 0b1011_0110: {:?}", prefix_sum(0b1011_0110));

    let words: Vec<u32> = (0..128u32)
        .map(|i| if i % 3 == 0 { i } else { 0 })
        .collect();
    let run = simulate_compress(&words);
    assert_eq!(run.output, zvc::Zvc.compress(&words));
    println!(
        "datapath: {} words -> {} bytes in {} cycles (formula {})",
        words.len(),
        run.output.len(),
        run.cycles,
        compress_latency_cycles(4, &cfg)
    );
    Ok(())
}
