//! Writes a tensor file, compresses it to a stream file, and restores it.

use std::fs;

use cdma::codec::CodecId;
use cdma::container;
use cdma::tensor::{ActivationTensor, Dims, Layout};
use cdma::workload::{generate, SparsityProfile};

fn main() -> cdma::Result<()> {
    let dir = tempfile::tempdir()?;
    let tensor_path = dir.path().join("conv1.cdma");
    let stream_path = dir.path().join("conv1.cdmz");

    let t = generate(
        Dims::new(8, 96, 27, 27),
        Layout::Nhwc,
        &SparsityProfile::new(0.3, 0.5, 3),
    )?;
    fs::write(&tensor_path, t.to_bytes())?;

    let original = ActivationTensor::from_bytes(&fs::read(&tensor_path)?)?;
    let (stream, report) = container::encode_tensor(&original, CodecId::Zvc, 4096)?;
    fs::write(&stream_path, &stream)?;
    println!(
        "{} bytes -> {} bytes on disk (ratio {:.3})",
        original.size_bytes(),
        stream.len(),
        report.ratio()
    );

    let restored = container::decode(&fs::read(&stream_path)?)?.into_tensor()?;
    assert_eq!(restored.to_bytes(), fs::read(&tensor_path)?);
    println!(
        "restored {} {} tensor, identical",
        restored.dims(),
        restored.layout()
    );
    Ok(())
}
