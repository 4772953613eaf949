use crate::error::{Error, Result};

/// Base period of the sinusoidal step embedding.
pub const TIME_BASE: f64 = 1000.0;

/// Multi-frequency sin/cos features of a diffusion step.
///
/// Pair `i` of `width / 2` is `[sin(t / b^e_i), cos(t / b^e_i)]` with
/// `e_i = i / (width/2 - 1)` and `b = 1000`, so the slowest pair has period
/// `2 pi b` and the bank is injective over `0..=T`.
pub fn time_embed(t: usize, width: usize) -> Result<Vec<f64>> {
    if width == 0 || width % 2 != 0 {
        return Err(Error::config("time_embed_width", format!("must be a positive even number, got {width}")));
    }
    let half = width / 2;
    let t = t as f64;
    let mut out = Vec::with_capacity(width);
    for i in 0..half {
        let exponent = if half == 1 { 1.0 } else { i as f64 / (half - 1) as f64 };
        let angle = t / TIME_BASE.powf(exponent);
        out.push(angle.sin());
        out.push(angle.cos());
    }
    Ok(out)
}
