//! The same clustered activation map stored in each layout: ZVC does not
//! care, RLE does.

use cdma::codec::{self, CodecId};
use cdma::tensor::{Dims, Layout};
use cdma::workload::{generate, SparsityProfile};

fn main() -> cdma::Result<()> {
    let dims = Dims::new(16, 32, 27, 27);
    for clustering in [0.0, 0.6, 0.9] {
        let t = generate(
            dims,
            Layout::Nchw,
            &SparsityProfile::new(0.4, clustering, 7),
        )?;
        println!("clustering {clustering}");
        for c in CodecId::ALL {
            let ratios: Vec<String> = Layout::ALL
                .iter()
                .map(|&l| {
                    let r = codec::compress_tensor(&t.permute_layout(l), c, 4096)
                        .unwrap()
                        .1;
                    format!("{l} {:.3}", r.ratio())
                })
                .collect();
            println!("  {c:<8} {}", ratios.join("  "));
        }
    }
    Ok(())
}
