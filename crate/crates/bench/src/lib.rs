//! Inputs shared by the criterion benches.

use taco_core::{synth, TactileFrame};

/// Frames at the visuo-tactile benchmark resolutions, labelled `WxH`.
pub fn frames() -> Vec<(String, TactileFrame)> {
    [(640, 480), (240, 320), (120, 160)]
        .into_iter()
        .enumerate()
        .map(|(i, (w, h))| (format!("{w}x{h}"), synth::tactile_frame(w, h, i as u64 + 1)))
        .collect()
}
