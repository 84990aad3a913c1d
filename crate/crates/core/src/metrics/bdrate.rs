//! Bjøntegaard delta rate with monotone piecewise-cubic Hermite fits.

use super::RdCurve;
use crate::error::{Error, Result};

/// Quality axis used for the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BdQuality {
    #[default]
    Psnr,
    /// `−10·log10(1 − MS-SSIM)`, in dB.
    MsSsim,
}

/// Fritsch–Carlson slopes for strictly increasing `x`.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Monotone piecewise-cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InsufficientPoints {
                needed: 2,
                found: x.len().min(y.len()),
            });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonMonotoneCurve("abscissae must be finite and strictly increasing".into()));
        }
        let d = pchip_slopes(&x, &y);
        Ok(Self { x, y, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Evaluates at `t`, clamping to the fitted range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn quality_axis(curve: &RdCurve, q: BdQuality) -> Result<(Vec<f64>, Vec<f64>)> {
    const MIN_POINTS: usize = 4;
    if curve.points.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_POINTS,
            found: curve.points.len(),
        });
    }
    let mut qs = Vec::with_capacity(curve.points.len());
    let mut rates = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        let v = match q {
            BdQuality::Psnr => p.psnr,
            BdQuality::MsSsim => {
                let s = p.ms_ssim.ok_or_else(|| {
                    Error::NonMonotoneCurve(format!("{}: point without MS-SSIM", curve.label))
                })?;
                -10.0 * (1.0 - s).log10()
            }
        };
        if !v.is_finite() {
            return Err(Error::NonMonotoneCurve(format!(
                "{}: infinite quality value (lossless point) cannot be fitted",
                curve.label
            )));
        }
        qs.push(v);
        rates.push(p.bpp.log10());
    }
    if rates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneCurve(format!("{}: bpp not strictly increasing", curve.label)));
    }
    if qs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneCurve(format!(
            "{}: quality not strictly increasing with bpp",
            curve.label
        )));
    }
    Ok((qs, rates))
}

/// PSNR-anchored BD-Rate in percent; negative means `test` needs fewer bits.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    bd_rate_with(anchor, test, BdQuality::Psnr)
}

pub fn bd_rate_with(anchor: &RdCurve, test: &RdCurve, quality: BdQuality) -> Result<f64> {
    let (qa, ra) = quality_axis(anchor, quality)?;
    let (qt, rt) = quality_axis(test, quality)?;
    let lo = qa[0].max(qt[0]);
    let hi = qa[qa.len() - 1].min(qt[qt.len() - 1]);
    if !(hi > lo) {
        return Err(Error::NoQualityOverlap);
    }
    let fa = Pchip::new(qa, ra)?;
    let fb = Pchip::new(qt, rt)?;

    // Both fits are cubic between consecutive knots of either curve, so
    // 2-point Gauss–Legendre is exact on each sub-interval.
    let mut cuts: Vec<f64> = fa
        .knots()
        .iter()
        .chain(fb.knots())
        .copied()
        .filter(|&v| v > lo && v < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let g = 0.5 / 3f64.sqrt();
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = ((a + b) / 2.0, b - a);
        for t in [mid - g * half, mid + g * half] {
            integral += 0.5 * half * (fb.eval(t) - fa.eval(t));
        }
    }
    let mean = integral / (hi - lo);
    Ok((10f64.powf(mean) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::RdPoint;

    fn curve(label: &str, pts: &[(f64, f64)]) -> RdCurve {
        RdCurve::new(
            label,
            pts.iter().map(|&(bpp, psnr)| RdPoint { bpp, psnr, ms_ssim: None }).collect(),
        )
        .unwrap()
    }

    fn anchor() -> Vec<(f64, f64)> {
        vec![(0.1, 30.0), (0.25, 34.5), (0.6, 38.0), (1.4, 42.5), (3.0, 46.0)]
    }

    fn scaled(f: f64) -> Vec<(f64, f64)> {
        anchor().into_iter().map(|(b, p)| (b * f, p)).collect()
    }

    #[test]
    fn self_is_zero() {
        let a = curve("a", &anchor());
        assert_eq!(bd_rate(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn constant_offsets() {
        let a = curve("a", &anchor());
        let d = bd_rate(&a, &curve("b", &scaled(2.0))).unwrap();
        assert!((d - 100.0).abs() < 0.1, "{d}");
        let h = bd_rate(&a, &curve("c", &scaled(0.5))).unwrap();
        assert!((h + 50.0).abs() < 0.1, "{h}");
    }

    #[test]
    fn antisymmetry_on_smooth_curves() {
        let a = curve("a", &anchor());
        let b = curve("b", &[(0.08, 30.5), (0.2, 34.0), (0.55, 38.5), (1.2, 42.0), (2.5, 45.5)]);
        let ab = bd_rate(&a, &b).unwrap();
        let ba = bd_rate(&b, &a).unwrap();
        let predicted = -ba / (1.0 + ba / 100.0);
        assert!((ab - predicted).abs() < 0.5, "{ab} vs {predicted}");
    }

    #[test]
    fn interpolates_knots() {
        let x = vec![30.0, 34.5, 38.0, 42.5];
        let y = vec![-1.0, -0.6, -0.2, 0.15];
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a) - b).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=300 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn errors() {
        let a = curve("a", &anchor());
        let short = curve("s", &anchor()[..3]);
        assert!(matches!(bd_rate(&a, &short), Err(Error::InsufficientPoints { needed: 4, found: 3 })));
        let far = curve("f", &[(0.1, 60.0), (0.2, 61.0), (0.3, 62.0), (0.4, 63.0)]);
        assert!(matches!(bd_rate(&a, &far), Err(Error::NoQualityOverlap)));
        let bent = curve("n", &[(0.1, 30.0), (0.2, 35.0), (0.3, 33.0), (0.4, 40.0)]);
        assert!(matches!(bd_rate(&a, &bent), Err(Error::NonMonotoneCurve(_))));
        let inf = curve("i", &[(0.1, 30.0), (0.2, 35.0), (0.3, 40.0), (0.4, f64::INFINITY)]);
        assert!(matches!(bd_rate(&a, &inf), Err(Error::NonMonotoneCurve(_))));
    }

    #[test]
    fn ms_ssim_anchored() {
        let mk = |f: f64| {
            RdCurve::new(
                "m",
                [(0.1, 0.90), (0.3, 0.95), (0.9, 0.98), (2.0, 0.995)]
                    .iter()
                    .map(|&(b, s)| RdPoint { bpp: b * f, psnr: 0.0, ms_ssim: Some(s) })
                    .collect(),
            )
            .unwrap()
        };
        let d = bd_rate_with(&mk(1.0), &mk(2.0), BdQuality::MsSsim).unwrap();
        assert!((d - 100.0).abs() < 0.1);
    }
}
