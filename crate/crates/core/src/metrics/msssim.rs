use crate::error::{Error, Result};
use crate::frame::{TactileFrame, CHANNELS};

pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Number of dyadic scales usable for a `w`×`h` frame: the largest `m ≤ 5`
/// with `min(w, h) > 10 · 2^(m−1)`. `None` below 11 pixels.
pub fn ms_ssim_scales(w: usize, h: usize) -> Option<usize> {
    let d = w.min(h);
    (1..=MS_SSIM_WEIGHTS.len()).rev().find(|&m| d > 10 << (m - 1))
}

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn downsample(&self) -> Plane {
        let (w, h) = (self.w / 2, self.h / 2);
        let mut v = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = 2 * y * self.w + 2 * x;
                v.push((self.v[i] + self.v[i + 1] + self.v[i + self.w] + self.v[i + self.w + 1]) * 0.25);
            }
        }
        Plane { w, h, v }
    }

    fn mul(&self, o: &Plane) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            v: self.v.iter().zip(&o.v).map(|(a, b)| a * b).collect(),
        }
    }

    /// Separable "valid" filtering with kernel `k`.
    fn filter(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let ow = self.w + 1 - n;
        let oh = self.h + 1 - n;
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.v[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut v = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                v[y * ow + x] = k.iter().enumerate().map(|(j, a)| a * tmp[(y + j) * ow + x]).sum();
            }
        }
        Plane { w: ow, h: oh, v }
    }
}

fn gaussian(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Mean SSIM and mean contrast-structure term at one scale. The window
/// shrinks to the plane size when the plane is smaller than 11 pixels.
fn ssim_cs(a: &Plane, b: &Plane) -> (f64, f64) {
    let k = gaussian(WINDOW.min(a.w).min(a.h));
    let mu_a = a.filter(&k);
    let mu_b = b.filter(&k);
    let e_aa = a.mul(a).filter(&k);
    let e_bb = b.mul(b).filter(&k);
    let e_ab = a.mul(b).filter(&k);
    let n = mu_a.v.len() as f64;
    let (mut ssim, mut cs) = (0.0, 0.0);
    for i in 0..mu_a.v.len() {
        let (ma, mb) = (mu_a.v[i], mu_b.v[i]);
        let var_sum = (e_aa.v[i] - ma * ma) + (e_bb.v[i] - mb * mb);
        let cov = e_ab.v[i] - ma * mb;
        let c = (2.0 * cov + C2) / (var_sum + C2);
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        cs += c;
        ssim += l * c;
    }
    (ssim / n, cs / n)
}

fn channel_ms_ssim(mut a: Plane, mut b: Plane, scales: usize) -> f64 {
    let weights = &MS_SSIM_WEIGHTS[..scales];
    let wsum: f64 = weights.iter().sum();
    let mut value = 1.0;
    for (s, w) in weights.iter().enumerate() {
        let (ssim, cs) = ssim_cs(&a, &b);
        let term = if s + 1 == scales { ssim } else { cs };
        value *= term.max(0.0).powf(w / wsum);
        if s + 1 < scales {
            a = a.downsample();
            b = b.downsample();
        }
    }
    value
}

fn planes(f: &TactileFrame) -> Vec<Plane> {
    (0..CHANNELS)
        .map(|c| Plane {
            w: f.width(),
            h: f.height(),
            v: f.pixels().iter().skip(c).step_by(CHANNELS).map(|&p| p as f64).collect(),
        })
        .collect()
}

/// MS-SSIM averaged over channels, and the number of scales used.
pub fn ms_ssim_with_scales(a: &TactileFrame, b: &TactileFrame) -> Result<(f64, usize)> {
    a.same_dims(b)?;
    let scales = ms_ssim_scales(a.width(), a.height())
        .ok_or(Error::TooSmallForAnyScale(a.width(), a.height()))?;
    let total: f64 = planes(a)
        .into_iter()
        .zip(planes(b))
        .map(|(pa, pb)| channel_ms_ssim(pa, pb, scales))
        .sum();
    Ok(((total / CHANNELS as f64).clamp(0.0, 1.0), scales))
}

pub fn ms_ssim(a: &TactileFrame, b: &TactileFrame) -> Result<f64> {
    ms_ssim_with_scales(a, b).map(|(v, _)| v)
}
