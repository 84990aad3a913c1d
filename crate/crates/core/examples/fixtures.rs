//! Codes every synthetic fixture losslessly and at each lossy quality.

use taco_core::lossless::bits_per_byte_of;
use taco_core::metrics::{bpp_of, format_real, psnr};
use taco_core::{decode_lossy, encode_lossy, synth, LosslessConfig, QualityPoint};

fn main() -> taco_core::Result<()> {
    let cfg = LosslessConfig::default();
    println!("{:<22} {:>10}  lossy bpp / PSNR dB per quality", "fixture", "bits/Byte");
    for (name, frame) in synth::fixtures() {
        let bpb = bits_per_byte_of(std::slice::from_ref(&frame), &cfg)?;
        let mut cells = Vec::new();
        for q in QualityPoint::all() {
            let bits = encode_lossy(&frame, &q)?;
            let recon = decode_lossy(&bits)?;
            let bpp = bpp_of(bits.bit_len() as u64, frame.width(), frame.height())?;
            cells.push(format!("{bpp:.3}/{}", format_real(psnr(&frame, &recon)?, 2)));
        }
        println!("{name:<22} {bpb:>10.4}  {}", cells.join("  "));
    }
    Ok(())
}
