//! The `cdma` command line.
//!
//! Every subcommand writes its report to the given writer; output files are
//! written to a temporary sibling and renamed into place only once complete.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::codec::{self, CodecId, DEFAULT_WINDOW_BYTES};
use crate::container;
use crate::error::{Error, Result};
use crate::microarch::size_buffer;
use crate::report::{sig3, table, KeyValues};
use crate::tensor::{ActivationTensor, Dims, Layout};
use crate::trace::{read_trace, write_trace};
use crate::transfer::{simulate, Overlap, PlatformConfig};
use crate::workload::{generate, Network, RatioEstimator, SparsityProfile};

#[derive(Debug, Parser)]
#[command(
    name = "cdma",
    version,
    about = "Activation compression and offload modeling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a tensor file into a CDMZ stream.
    Compress(CompressArgs),
    /// Restore a tensor file from a CDMZ stream.
    Decompress(DecompressArgs),
    /// Report density and per-codec ratios across layouts.
    Analyze(AnalyzeArgs),
    /// Generate synthetic tensors or preset traces.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Model offload/prefetch time for a trace.
    Simulate(SimulateArgs),
    /// Measure single-threaded codec throughput on generated data.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long, default_value = "zvc")]
    pub codec: CodecId,
    #[arg(long, default_value_t = DEFAULT_WINDOW_BYTES)]
    pub window: usize,
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Dims for streams written without a tensor trailer.
    #[arg(long)]
    pub dims: Option<Dims>,
    #[arg(long, default_value = "nchw")]
    pub layout: Layout,
    /// Write only the little-endian data section.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// `all` or a comma-separated list of layouts.
    #[arg(long, default_value = "all")]
    pub layouts: String,
    #[arg(long, default_value_t = DEFAULT_WINDOW_BYTES)]
    pub window: usize,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Write a synthetic activation tensor.
    Tensor(GenTensorArgs),
    /// Write a preset network trace.
    Trace(GenTraceArgs),
}

#[derive(Debug, Args)]
pub struct GenTensorArgs {
    #[arg(long)]
    pub dims: Dims,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0.0)]
    pub clustering: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "nchw")]
    pub layout: Layout,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    #[arg(long)]
    pub preset: String,
    /// Uniform per-layer density.
    #[arg(long, default_value_t = crate::workload::PRESET_DENSITY)]
    pub density: f64,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 16.0)]
    pub pcie_gbps: f64,
    #[arg(long, default_value_t = 200.0)]
    pub comp_budget_gbps: f64,
    #[arg(long, default_value_t = 236.0)]
    pub leftover_gbps: f64,
    #[arg(long, default_value_t = 350.0)]
    pub latency_ns: f64,
    #[arg(long, default_value = "zvc")]
    pub codec: CodecId,
    #[arg(long, default_value_t = DEFAULT_WINDOW_BYTES)]
    pub window: usize,
    /// `same`: transfers hide under their own layer; `next`: under the following one.
    #[arg(long, default_value = "same")]
    pub overlap: Overlap,
    /// Zero clustering assumed when estimating ratios from density.
    #[arg(long, default_value_t = 0.0)]
    pub clustering: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Bytes pushed through each codec; accepts `1e9`.
    #[arg(long, default_value_t = 1e9)]
    pub bytes: f64,
    #[arg(long, default_value_t = 0.4)]
    pub density: f64,
    #[arg(long, default_value_t = 0.0)]
    pub clustering: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_WINDOW_BYTES)]
    pub window: usize,
    /// `all` or a comma-separated list of codecs.
    #[arg(long, default_value = "all")]
    pub codecs: String,
}

/// Parses `args` (program name first) and runs the command, printing the
/// report to stdout and errors to stderr. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cdma: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Compress(a) => compress(&a, out),
        Command::Decompress(a) => decompress(&a, out),
        Command::Analyze(a) => analyze(&a, out),
        Command::Gen(GenCommand::Tensor(a)) => gen_tensor(&a, out),
        Command::Gen(GenCommand::Trace(a)) => gen_trace(&a, out),
        Command::Simulate(a) => simulate_cmd(&a, out),
        Command::Bench(a) => bench(&a, out),
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| io_context(e, path))?;
    Ok(bytes)
}

fn io_context(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Fails early if `path` cannot be created: its directory must exist.
fn check_output(path: &Path) -> Result<()> {
    let dir = output_dir(path);
    if !dir.is_dir() {
        return Err(io_context(
            io::Error::new(io::ErrorKind::NotFound, "output directory does not exist"),
            path,
        ));
    }
    if path.is_dir() {
        return Err(io_context(
            io::Error::new(io::ErrorKind::InvalidInput, "output path is a directory"),
            path,
        ));
    }
    Ok(())
}

fn output_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp =
        tempfile::NamedTempFile::new_in(output_dir(path)).map_err(|e| io_context(e, path))?;
    tmp.write_all(bytes).map_err(|e| io_context(e, path))?;
    tmp.as_file().sync_all().map_err(|e| io_context(e, path))?;
    tmp.persist(path).map_err(|e| io_context(e.error, path))?;
    Ok(())
}

fn compress(a: &CompressArgs, out: &mut dyn Write) -> Result<()> {
    codec::validate_window(a.window)?;
    check_output(&a.output)?;
    let tensor = ActivationTensor::from_bytes(&read_input(&a.input)?)?;
    let (bytes, report) = container::encode_tensor(&tensor, a.codec, a.window)?;
    write_atomic(&a.output, &bytes)?;

    let mut kv = KeyValues::new();
    kv.put("codec", a.codec)
        .put("window_bytes", a.window)
        .put("dims", tensor.dims())
        .put("layout", tensor.layout())
        .put("blocks", report.blocks)
        .put("input_bytes", report.input_bytes)
        .put("payload_bytes", report.payload_bytes)
        .put("output_bytes", report.output_bytes)
        .put("file_bytes", bytes.len())
        .num("density", tensor.density().density)
        .num("ratio", report.ratio())
        .num("payload_ratio", report.payload_ratio())
        .num("value_ratio", report.value_ratio());
    out.write_all(kv.as_str().as_bytes())?;
    Ok(())
}

fn decompress(a: &DecompressArgs, out: &mut dyn Write) -> Result<()> {
    check_output(&a.output)?;
    let stream = container::decode(&read_input(&a.input)?)?;
    let codec = stream.codec;
    let bytes = if a.raw {
        stream.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    } else {
        let tensor = match (stream.tensor, a.dims) {
            (Some(_), _) => stream.into_tensor()?,
            (None, Some(dims)) => ActivationTensor::new(dims, a.layout, stream.words)?,
            (None, None) => {
                return Err(Error::input(
                    "stream carries no tensor trailer; pass --dims or --raw",
                ))
            }
        };
        tensor.to_bytes()
    };
    write_atomic(&a.output, &bytes)?;
    let mut kv = KeyValues::new();
    kv.put("codec", codec).put("output_bytes", bytes.len());
    out.write_all(kv.as_str().as_bytes())?;
    Ok(())
}

fn parse_list<T>(list: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = Error> + Copy,
{
    if list.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    list.split(',').map(|s| s.trim().parse()).collect()
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    codec::validate_window(a.window)?;
    let layouts = parse_list(&a.layouts, &Layout::ALL)?;
    let tensor = ActivationTensor::from_bytes(&read_input(&a.input)?)?;
    let stats = tensor.density();

    let mut kv = KeyValues::new();
    kv.put("dims", tensor.dims())
        .put("layout", tensor.layout())
        .put("nonzero", stats.nonzero_count)
        .put("total", stats.total_count)
        .num("density", stats.density)
        .num("sparsity", stats.sparsity);
    out.write_all(kv.as_str().as_bytes())?;
    writeln!(out)?;

    let mut rows = Vec::new();
    for codec in CodecId::ALL {
        for &layout in &layouts {
            let t = tensor.permute_layout(layout);
            let (_, r) = codec::compress_tensor(&t, codec, a.window)?;
            rows.push(vec![
                codec.to_string(),
                layout.to_string(),
                sig3(r.ratio()),
                sig3(r.payload_ratio()),
                sig3(r.value_ratio()),
            ]);
        }
    }
    let header = ["codec", "layout", "ratio", "payload_ratio", "value_ratio"];
    out.write_all(table(&header, &rows).as_bytes())?;
    Ok(())
}

fn gen_tensor(a: &GenTensorArgs, out: &mut dyn Write) -> Result<()> {
    check_output(&a.output)?;
    let profile = SparsityProfile::new(a.density, a.clustering, a.seed);
    let tensor = generate(a.dims, a.layout, &profile)?;
    write_atomic(&a.output, &tensor.to_bytes())?;
    let mut kv = KeyValues::new();
    kv.put("dims", tensor.dims())
        .put("layout", tensor.layout())
        .put("seed", a.seed)
        .num("density", tensor.density().density);
    out.write_all(kv.as_str().as_bytes())?;
    Ok(())
}

fn gen_trace(a: &GenTraceArgs, out: &mut dyn Write) -> Result<()> {
    let net = Network::from_name(&a.preset)?;
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Error::config(format!(
            "density {} is outside [0, 1]",
            a.density
        )));
    }
    match &a.output {
        Some(path) => {
            check_output(path)?;
            write_atomic(path, net.trace_file(a.density).as_bytes())
        }
        None => write_trace(out, &net.trace(a.density), &[net.name()]),
    }
}

fn simulate_cmd(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    codec::validate_window(a.window)?;
    let cfg = PlatformConfig {
        pcie_bw: a.pcie_gbps * 1e9,
        dram_comp_budget: a.comp_budget_gbps * 1e9,
        dram_leftover: a.leftover_gbps * 1e9,
        memory_latency: a.latency_ns * 1e-9,
        overlap: a.overlap,
    };
    cfg.validate()?;
    SparsityProfile::new(0.5, a.clustering, a.seed).validate()?;
    let file = File::open(&a.input).map_err(|e| io_context(e, &a.input))?;
    let trace = read_trace(BufReader::new(file))?;
    if trace.is_empty() {
        return Err(Error::input(format!(
            "{}: trace has no layers",
            a.input.display()
        )));
    }

    let estimator = RatioEstimator {
        codec: a.codec,
        clustering: a.clustering,
        window_bytes: a.window,
        seed: a.seed,
    };
    let ratios = estimator.ratios_for(&trace)?;
    let rep = simulate(&trace, &ratios, &cfg)?;

    let ms = |s: f64| sig3(s * 1e3);
    let rows: Vec<Vec<String>> = trace
        .iter()
        .zip(&rep.layers)
        .map(|(rec, l)| {
            vec![
                l.name.clone(),
                l.offload_bytes.to_string(),
                sig3(rec.density),
                sig3(l.ratio),
                ms(rec.fwd_time),
                ms(rec.bwd_time),
                ms(l.vdnn_offload_time),
                ms(l.offload_time),
                ms(l.vdnn_stall_time),
                ms(l.stall_time),
            ]
        })
        .collect();
    let header = [
        "layer",
        "bytes",
        "density",
        "ratio",
        "fwd_ms",
        "bwd_ms",
        "vdnn_xfer_ms",
        "cdma_xfer_ms",
        "vdnn_stall_ms",
        "cdma_stall_ms",
    ];
    out.write_all(table(&header, &rows).as_bytes())?;
    writeln!(out)?;

    let buffer = size_buffer(cfg.dram_comp_budget, cfg.memory_latency)?;
    let mut kv = KeyValues::new();
    kv.put("codec", a.codec)
        .put("overlap", rep.overlap)
        .put("layers", trace.len())
        .num("oracle_ms", rep.oracle_time * 1e3)
        .num("vdnn_ms", rep.vdnn_time * 1e3)
        .num("cdma_ms", rep.cdma_time * 1e3)
        .num("speedup", rep.speedup_vs_vdnn)
        .num("vdnn_perf", rep.vdnn_perf())
        .num("cdma_perf", rep.cdma_perf())
        .num("traffic_normalized", rep.traffic.normalized())
        .num("avg_ratio", rep.ratios.weighted_avg)
        .num("max_ratio", rep.ratios.max)
        .num("crossover_ratio", cfg.crossover_ratio())
        .put("buffer_bytes", buffer.required_bytes);
    out.write_all(kv.as_str().as_bytes())?;
    Ok(())
}

/// Size of the generated pool the benchmark cycles through.
const BENCH_POOL_BYTES: usize = 64 << 20;

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    codec::validate_window(a.window)?;
    if !(a.bytes.is_finite() && a.bytes >= 1.0) {
        return Err(Error::config(format!("bench size {} bytes", a.bytes)));
    }
    let codecs = parse_list(&a.codecs, &CodecId::ALL)?;
    let total = a.bytes as usize;
    let pool_words = total.min(BENCH_POOL_BYTES).div_ceil(4).max(1);
    let profile = SparsityProfile::new(a.density, a.clustering, a.seed);
    let pool = generate(Dims::new(1, 1, 1, pool_words), Layout::Nchw, &profile)?;
    let windows: Vec<&[u32]> = pool.words().chunks(a.window / 4).collect();

    let mut kv = KeyValues::new();
    kv.put("env", bench_env())
        .put("threads", 1)
        .put("bytes", total)
        .num("density", a.density);
    out.write_all(kv.as_str().as_bytes())?;

    let mut rows = Vec::new();
    for c in codecs {
        let r = bench_codec(c, &windows, total)?;
        rows.push(vec![
            c.to_string(),
            sig3(r.compress_bps / 1e9),
            sig3(r.decompress_bps / 1e9),
            sig3(r.ratio),
        ]);
    }
    out.write_all(
        table(
            &["codec", "compress_gbps", "decompress_gbps", "ratio"],
            &rows,
        )
        .as_bytes(),
    )?;
    Ok(())
}

pub struct BenchResult {
    pub compress_bps: f64,
    pub decompress_bps: f64,
    pub ratio: f64,
}

/// Single-threaded throughput of `codec` over `windows`, cycling until at
/// least `total_bytes` have been compressed.
pub fn bench_codec(codec: CodecId, windows: &[&[u32]], total_bytes: usize) -> Result<BenchResult> {
    let imp = codec.codec();
    let pool_bytes: usize = windows.iter().map(|w| w.len() * 4).sum();
    let passes = total_bytes.div_ceil(pool_bytes.max(1)).max(1);

    let mut compressed: Vec<Vec<u8>> = Vec::with_capacity(windows.len());
    let start = Instant::now();
    for pass in 0..passes {
        if pass + 1 == passes {
            compressed = windows.iter().map(|w| imp.compress(w)).collect();
        } else {
            for w in windows {
                std::hint::black_box(imp.compress(w));
            }
        }
    }
    let c_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    for _ in 0..passes {
        for (w, p) in windows.iter().zip(&compressed) {
            std::hint::black_box(imp.decompress(p, w.len())?);
        }
    }
    let d_time = start.elapsed().as_secs_f64();

    let moved = (passes * pool_bytes) as f64;
    let stored: usize = compressed.iter().map(Vec::len).sum();
    Ok(BenchResult {
        compress_bps: moved / c_time.max(1e-9),
        decompress_bps: moved / d_time.max(1e-9),
        ratio: pool_bytes as f64 / stored.max(1) as f64,
    })
}

fn bench_env() -> String {
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    format!(
        "{}-{}-{profile}",
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}
