//! Synthetic activation maps: density is exact, clustering stretches zero
//! runs, and the seed pins everything.

use cdma::tensor::{Dims, Layout};
use cdma::workload::{generate, mean_zero_run, SparsityProfile};

fn main() -> cdma::Result<()> {
    let dims = Dims::new(1, 64, 56, 56);
    for clustering in [0.0, 0.5, 0.9, 0.99] {
        let p = SparsityProfile::new(0.38, clustering, 1);
        let t = generate(dims, Layout::Nchw, &p)?;
        println!(
            "clustering {clustering:<4}  density {:.4}  mean zero run {:>7.2} (chain mean {:.2})",
            t.density().density,
            mean_zero_run(t.words()),
            p.mean_zero_run()
        );
    }
    let p = SparsityProfile::new(0.5, 0.3, 42);
    assert_eq!(
        generate(dims, Layout::Nhwc, &p)?,
        generate(dims, Layout::Nhwc, &p)?
    );
    println!("same seed, same tensor");
    Ok(())
}
