//! YCoCg-R colour decorrelation and the orthonormal 8×8 DCT.

use std::sync::OnceLock;

pub const BLOCK: usize = 8;
pub const BLOCK_AREA: usize = BLOCK * BLOCK;

/// Integer-reversible RGB → (Y, Co, Cg). Y ∈ [0, 255]; Co, Cg ∈ [−255, 255].
#[inline]
pub fn ycocg_r_forward(r: i32, g: i32, b: i32) -> (i32, i32, i32) {
    let co = r - b;
    let t = b + (co >> 1);
    let cg = g - t;
    let y = t + (cg >> 1);
    (y, co, cg)
}

#[inline]
pub fn ycocg_r_inverse(y: i32, co: i32, cg: i32) -> (i32, i32, i32) {
    let t = y - (cg >> 1);
    let g = cg + t;
    let b = t - (co >> 1);
    let r = b + co;
    (r, g, b)
}

/// DCT-II basis, `basis[k][n] = α(k)·cos((2n + 1)kπ / 16)`.
fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; BLOCK]; BLOCK];
        for (k, row) in m.iter_mut().enumerate() {
            let alpha = if k == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (n, v) in row.iter_mut().enumerate() {
                *v = alpha * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / (2 * BLOCK) as f64).cos();
            }
        }
        m
    })
}

/// Separable 2-D DCT-II of a row-major 8×8 block.
pub fn dct2d(block: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    let c = basis();
    let mut tmp = [0.0; BLOCK_AREA];
    // rows
    for y in 0..BLOCK {
        for k in 0..BLOCK {
            tmp[y * BLOCK + k] = (0..BLOCK).map(|n| c[k][n] * block[y * BLOCK + n]).sum();
        }
    }
    let mut out = [0.0; BLOCK_AREA];
    // columns
    for x in 0..BLOCK {
        for k in 0..BLOCK {
            out[k * BLOCK + x] = (0..BLOCK).map(|n| c[k][n] * tmp[n * BLOCK + x]).sum();
        }
    }
    out
}

/// Inverse (DCT-III) of [`dct2d`].
pub fn idct2d(coeffs: &[f64; BLOCK_AREA]) -> [f64; BLOCK_AREA] {
    let c = basis();
    let mut tmp = [0.0; BLOCK_AREA];
    for x in 0..BLOCK {
        for n in 0..BLOCK {
            tmp[n * BLOCK + x] = (0..BLOCK).map(|k| c[k][n] * coeffs[k * BLOCK + x]).sum();
        }
    }
    let mut out = [0.0; BLOCK_AREA];
    for y in 0..BLOCK {
        for n in 0..BLOCK {
            out[y * BLOCK + n] = (0..BLOCK).map(|k| c[k][n] * tmp[y * BLOCK + k]).sum();
        }
    }
    out
}

/// Zigzag scan order: `ZIGZAG[i]` is the raster index of the i-th coefficient.
pub const ZIGZAG: [usize; BLOCK_AREA] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(N⁴) evaluation of the orthonormal 2-D DCT-II.
    fn naive_dct(block: &[f64; 64]) -> [f64; 64] {
        let a = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
        let mut out = [0.0; 64];
        for u in 0..8 {
            for v in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += block[y * 8 + x]
                            * ((2 * x + 1) as f64 * v as f64 * std::f64::consts::PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
                    }
                }
                out[u * 8 + v] = a(u) * a(v) * s;
            }
        }
        out
    }

    #[test]
    fn matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let block: [f64; 64] = std::array::from_fn(|_| rng.gen_range(-128.0..128.0));
        let fast = dct2d(&block);
        let slow = naive_dct(&block);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let c = dct2d(&[10.0; 64]);
        assert!((c[0] - 80.0).abs() < 1e-9);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn zigzag_is_a_permutation() {
        let mut seen = [false; 64];
        for &i in &ZIGZAG {
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert_eq!(ZIGZAG[63], 63);
    }

    #[test]
    fn ycocg_exhaustive_round_trip() {
        for r in (0..256).step_by(3) {
            for g in 0..256 {
                for b in (0..256).step_by(5) {
                    let (y, co, cg) = ycocg_r_forward(r, g, b);
                    assert!((0..=255).contains(&y));
                    assert!((-255..=255).contains(&co) && (-255..=255).contains(&cg));
                    assert_eq!(ycocg_r_inverse(y, co, cg), (r, g, b));
                }
            }
        }
    }
}
