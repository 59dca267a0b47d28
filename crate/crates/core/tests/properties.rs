use cdma::codec::{self, zvc, Codec, CodecId};
use cdma::container;
use cdma::microarch::{functional_equivalence_check, prefix_sum, size_buffer};
use cdma::tensor::{ActivationTensor, Dims, Layout};
use cdma::trace::LayerTraceRecord;
use cdma::transfer::{offload_branches, offload_time, simulate, PlatformConfig};
use cdma::workload::{generate, mean_zero_run, SparsityProfile};
use proptest::prelude::*;

fn sparse_words(max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(
        prop_oneof![3 => Just(0u32), 2 => any::<u32>(), 1 => Just(0x8000_0000u32)],
        0..max_len,
    )
}

fn codec_id() -> impl Strategy<Value = CodecId> {
    prop::sample::select(CodecId::ALL.to_vec())
}

fn window() -> impl Strategy<Value = usize> {
    (1usize..40).prop_map(|k| k * 128)
}

fn small_dims() -> impl Strategy<Value = Dims> {
    (1usize..4, 1usize..6, 1usize..9, 1usize..9).prop_map(|(n, c, h, w)| Dims::new(n, c, h, w))
}

proptest! {
    #[test]
    fn every_codec_round_trips(words in sparse_words(3000), c in codec_id(), w in window()) {
        let (blocks, report) = codec::compress_words(&words, c, w).unwrap();
        prop_assert_eq!(codec::decompress_blocks(&blocks).unwrap(), words.clone());
        prop_assert_eq!(report.input_bytes, words.len() as u64 * 4);
        let (bytes, _) = container::encode_words(&words, c, w).unwrap();
        prop_assert_eq!(container::decode(&bytes).unwrap().words, words);
    }

    #[test]
    fn zvc_size_is_masks_plus_nonzeros(words in sparse_words(5000)) {
        let out = zvc::Zvc.compress(&words).len();
        let nonzero = words.iter().filter(|&&x| x != 0).count();
        prop_assert_eq!(out, words.len().div_ceil(32) * 4 + nonzero * 4);
    }

    #[test]
    fn zvc_ratio_ignores_layout(dims in small_dims(), d in 0.0f64..=1.0, k in 0.0f64..=1.0, seed: u64) {
        let t = generate(dims, Layout::Nchw, &SparsityProfile::new(d, k, seed)).unwrap();
        let base = codec::compress_tensor(&t, CodecId::Zvc, 256).unwrap().1;
        for layout in Layout::ALL {
            let r = codec::compress_tensor(&t.permute_layout(layout), CodecId::Zvc, 256).unwrap().1;
            prop_assert_eq!(r.output_bytes, base.output_bytes);
        }
    }

    #[test]
    fn permutation_is_invertible(dims in small_dims(), seed: u64) {
        let t = generate(dims, Layout::Nhwc, &SparsityProfile::new(0.5, 0.5, seed)).unwrap();
        for a in Layout::ALL {
            for b in Layout::ALL {
                prop_assert_eq!(&t.permute_layout(a).permute_layout(b).permute_layout(Layout::Nhwc), &t);
            }
        }
    }

    #[test]
    fn tensor_file_round_trips(dims in small_dims(), seed: u64, layout in prop::sample::select(Layout::ALL.to_vec())) {
        let t = generate(dims, layout, &SparsityProfile::new(0.3, 0.2, seed)).unwrap();
        prop_assert_eq!(ActivationTensor::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    #[test]
    fn generator_hits_density(len in 1usize..20_000, d in 0.0f64..=1.0, k in 0.0f64..=1.0, seed: u64) {
        let t = generate(Dims::new(1, 1, 1, len), Layout::Nchw, &SparsityProfile::new(d, k, seed)).unwrap();
        let got = t.density().nonzero_count as f64;
        prop_assert!((got - d * len as f64).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn clustering_lengthens_zero_runs(seed: u64, d in 0.1f64..0.9) {
        let dims = Dims::new(1, 1, 1, 50_000);
        let loose = generate(dims, Layout::Nchw, &SparsityProfile::new(d, 0.0, seed)).unwrap();
        let tight = generate(dims, Layout::Nchw, &SparsityProfile::new(d, 0.8, seed)).unwrap();
        prop_assert!(mean_zero_run(tight.words()) > mean_zero_run(loose.words()));
    }

    #[test]
    fn datapath_matches_encoder(words in sparse_words(400)) {
        prop_assert!(functional_equivalence_check(&words));
    }

    #[test]
    fn prefix_sum_counts_bits(mask: u8) {
        let p = prefix_sum(mask);
        for (i, &sum) in p.iter().enumerate() {
            prop_assert_eq!(sum as u32, (mask as u32 & ((2u32 << i) - 1)).count_ones());
        }
    }

    #[test]
    fn buffer_covers_bandwidth_delay(bw in 1e6f64..1e12, lat in 0.0f64..1e-5) {
        let b = size_buffer(bw, lat).unwrap().required_bytes as f64;
        prop_assert!(b + 1e-6 >= bw * lat && b < bw * lat + 1.0 + 1e-6);
    }

    #[test]
    fn offload_time_is_monotone_and_bounded(bytes in 1u64..1 << 34, r in 1.0f64..64.0, bump in 0.0f64..8.0) {
        let cfg = PlatformConfig::default();
        let t = offload_time(bytes, r, &cfg).unwrap();
        let faster = offload_time(bytes, r + bump, &cfg).unwrap();
        prop_assert!(faster <= t * (1.0 + 1e-12));
        // never slower than uncompressed, never faster than the DRAM budget allows
        prop_assert!(t <= offload_time(bytes, 1.0, &cfg).unwrap() * (1.0 + 1e-12));
        prop_assert!(t >= bytes as f64 / cfg.dram_comp_budget * (1.0 - 1e-12));
        let b = offload_branches(bytes, r, &cfg).unwrap();
        prop_assert!(t >= b.link_limited * (1.0 - 1e-12));
    }

    #[test]
    fn simulated_time_is_bracketed(
        layers in prop::collection::vec((1u64..1 << 30, 0.0f64..0.05, 0.0f64..0.1, 1.0f64..40.0), 1..20),
        next in any::<bool>(),
    ) {
        let trace: Vec<_> = layers
            .iter()
            .enumerate()
            .map(|(i, &(b, f, bw, _))| LayerTraceRecord::new(format!("l{i}"), b, 0.5, f, bw))
            .collect();
        let ratios: Vec<f64> = layers.iter().map(|l| l.3).collect();
        let mut cfg = PlatformConfig::default();
        if next {
            cfg.overlap = "next".parse().unwrap();
        }
        let r = simulate(&trace, &ratios, &cfg).unwrap();
        let eps = 1e-12 * r.vdnn_time;
        prop_assert!(r.oracle_time <= r.cdma_time + eps);
        prop_assert!(r.cdma_time <= r.vdnn_time + eps);
        prop_assert!(r.traffic.normalized() <= 1.0 + 1e-12);
    }
}

#[test]
fn rle_prefers_clustered_zeros() {
    let dims = Dims::new(1, 1, 1, 1 << 16);
    let mut last = 0.0;
    for k in [0.0, 0.3, 0.6, 0.9, 0.99] {
        let t = generate(dims, Layout::Nchw, &SparsityProfile::new(0.3, k, 11)).unwrap();
        let r = codec::compress_tensor(&t, CodecId::Rle, 4096)
            .unwrap()
            .1
            .ratio();
        assert!(
            r >= last,
            "rle ratio {r} fell below {last} at clustering {k}"
        );
        last = r;
    }
}

#[test]
fn zvc_ratio_ignores_clustering() {
    let dims = Dims::new(1, 1, 1, 1 << 16);
    let ratios: Vec<f64> = [0.0, 0.5, 0.95]
        .iter()
        .map(|&k| {
            let t = generate(dims, Layout::Nchw, &SparsityProfile::new(0.4, k, 3)).unwrap();
            codec::compress_tensor(&t, CodecId::Zvc, 4096)
                .unwrap()
                .1
                .ratio()
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] == w[1]), "{ratios:?}");
}
