//! MS-SSIM against values produced by `tf.image.ssim_multiscale` (float32,
//! max_val 255, power factors renormalized over the scales used) on the same
//! deterministic frames. Dimensions are even at every scale so pooling
//! conventions agree.

use taco_core::metrics::ms_ssim_with_scales;
use taco_core::{decode_lossy, encode_lossy, synth, QualityPoint};

const TOL: f64 = 1e-5;

#[test]
fn five_scale_pairs() {
    let a = synth::tactile_frame(192, 176, 21);
    let coded = decode_lossy(&encode_lossy(&a, &QualityPoint::from_index(0).unwrap()).unwrap()).unwrap();
    let noise = synth::noise_frame(192, 176, 22);
    for (b, reference) in [(&coded, 0.975_190_401_077_270_5), (&noise, 0.114_404_581_487_178_8)] {
        let (v, scales) = ms_ssim_with_scales(&a, b).unwrap();
        assert_eq!(scales, 5);
        assert!((v - reference).abs() < TOL, "{v} vs {reference}");
    }
}

#[test]
fn four_scale_pair() {
    let d = synth::smooth_frame(128, 96, 3.0, 23);
    let e = synth::smooth_frame(128, 96, 3.0, 24);
    let (v, scales) = ms_ssim_with_scales(&d, &e).unwrap();
    assert_eq!(scales, 4);
    assert!((v - 0.352_897_971_868_515).abs() < TOL, "{v}");
}
