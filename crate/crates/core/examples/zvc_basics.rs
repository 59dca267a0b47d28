//! Compresses a few hand-built word streams with every codec and prints the
//! three ratios the library reports.

use cdma::codec::{self, zvc, Codec, CodecId};

fn main() -> cdma::Result<()> {
    let one = {
        let mut w = vec![0u32; 32];
        w[0] = 1.0f32.to_bits();
        w
    };
    let record = zvc::Zvc.compress(&one);
    println!("one nonzero in 32 words -> {record:02x?}");

    let streams: [(&str, Vec<u32>); 3] = [
        ("all zero", vec![0; 1024]),
        ("dense", (1..=1024).collect()),
        ("alternating", (0..1024).map(|i| i % 2).collect()),
    ];
    for (name, words) in &streams {
        for c in CodecId::ALL {
            let (blocks, r) = codec::compress_words(words, c, 4096)?;
            assert_eq!(&codec::decompress_blocks(&blocks)?, words);
            println!(
                "{name:<12} {c:<8} ratio {:>7.3}  payload {:>7.3}  values {:>7.3}",
                r.ratio(),
                r.payload_ratio(),
                r.value_ratio()
            );
        }
    }

    for d in [0.1, 0.4, 0.7] {
        println!(
            "zvc closed form at density {d}: {:.3}",
            zvc::expected_ratio(d)
        );
    }
    Ok(())
}
