//! Linear variance schedule and its respaced reverse chains.

use crate::error::{Error, Result};

/// Precomputed `beta_t`, `alpha_t = 1 - beta_t` and `alpha_bar_t`, indexed
/// by step `t` in `1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    beta_start: f64,
    beta_end: f64,
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::config("diffusion_steps", format!("need at least 2 steps, got {steps}")));
        }
        if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
            return Err(Error::config(
                "beta_start",
                format!("need 0 < beta_start < beta_end < 1, got {beta_start} and {beta_end}"),
            ));
        }
        let span = (steps - 1) as f64;
        let betas: Vec<f64> = (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    beta_end
                } else {
                    beta_start + (beta_end - beta_start) * (i as f64 / span)
                }
            })
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        Ok(NoiseSchedule { beta_start, beta_end, betas, alphas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta_start(&self) -> f64 {
        self.beta_start
    }

    pub fn beta_end(&self) -> f64 {
        self.beta_end
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::usage(format!("diffusion step {t} outside 1..={}", self.steps())));
        }
        Ok(())
    }

    /// Reverse chain over `n_steps` evenly strided schedule steps ending at `T`.
    ///
    /// Each link uses the effective variance between consecutive retained
    /// steps, `1 - alpha_bar[t_i] / alpha_bar[t_{i-1}]`; with `n_steps == T`
    /// the chain is the original schedule.
    pub fn strided(&self, n_steps: usize) -> Result<ReverseChain> {
        let total = self.steps();
        if n_steps == 0 || n_steps > total {
            return Err(Error::config(
                "sampling_steps",
                format!("reverse chain length must lie in 1..={total}, got {n_steps}"),
            ));
        }
        let timesteps: Vec<usize> = (1..=n_steps)
            .map(|i| ((i * total) as f64 / n_steps as f64).round() as usize)
            .collect();
        let mut betas = Vec::with_capacity(n_steps);
        let mut prev_t = 0usize;
        for &t in &timesteps {
            let beta = if t == prev_t + 1 {
                self.beta(t)
            } else {
                let prev_bar = if prev_t == 0 { 1.0 } else { self.alpha_bar(prev_t) };
                1.0 - self.alpha_bar(t) / prev_bar
            };
            betas.push(beta);
            prev_t = t;
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = timesteps.iter().map(|&t| self.alpha_bar(t)).collect();
        Ok(ReverseChain { timesteps, betas, alphas, alpha_bars, clip_x0: false })
    }
}

/// A (possibly respaced) reverse chain. Link `i` (0-based, ascending in
/// time) denoises from model step `timesteps[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReverseChain {
    pub timesteps: Vec<usize>,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_bars: Vec<f64>,
    /// Clamp the implied clean sample to `[-1, 1]` before each update.
    pub clip_x0: bool,
}

impl ReverseChain {
    pub fn with_clip(mut self, clip: bool) -> Self {
        self.clip_x0 = clip;
        self
    }

    pub fn len(&self) -> usize {
        self.timesteps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timesteps.is_empty()
    }

    /// Noise scale injected by link `i`; zero on the final link.
    pub fn sigma(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.betas[i].sqrt()
        }
    }
}

/// Closed-form marginal sample `sqrt(abar_t) x0 + sqrt(1 - abar_t) eps`.
pub fn forward_diffuse(x0: &[f64], t: usize, eps: &[f64], sched: &NoiseSchedule) -> Result<Vec<f64>> {
    sched.check_step(t)?;
    if x0.len() != eps.len() {
        return Err(Error::shape("forward diffusion noise", x0.len(), eps.len()));
    }
    let abar = sched.alpha_bar(t);
    let (a, b) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_defaults_have_exact_endpoints() {
        let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
        assert_eq!(s.beta(1), 1e-4);
        assert_eq!(s.beta(1000), 0.02);
        let mid = 1e-4 + (0.02 - 1e-4) * (499.0 / 999.0);
        assert!((s.beta(500) - mid).abs() < 1e-15);
    }

    #[test]
    fn two_step_products() {
        let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
        let oracle = [0.9, 0.9 * 0.8];
        for (a, b) in s.alpha_bars().iter().zip(oracle) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_bounds_are_configuration_errors() {
        for (t, a, b) in [(1, 0.1, 0.2), (10, 0.0, 0.2), (10, 0.3, 0.2), (10, 0.1, 1.0)] {
            assert!(matches!(NoiseSchedule::linear(t, a, b), Err(Error::Config { .. })));
        }
    }

    #[test]
    fn noise_free_diffusion_scales_input() {
        let s = NoiseSchedule::linear(100, 1e-4, 0.02).unwrap();
        let x = forward_diffuse(&[1.0, -2.0], 40, &[0.0, 0.0], &s).unwrap();
        let a = s.alpha_bar(40).sqrt();
        assert_eq!(x, vec![a, -2.0 * a]);
        assert!(forward_diffuse(&[1.0], 40, &[0.0, 0.0], &s).is_err());
        assert!(forward_diffuse(&[1.0], 0, &[0.0], &s).is_err());
    }

    #[test]
    fn final_step_is_almost_pure_noise() {
        let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
        let x0 = [3.0, -1.0, 0.5];
        let eps = [0.2, 0.7, -1.1];
        let xt = forward_diffuse(&x0, 1000, &eps, &s).unwrap();
        let gap: f64 = xt.iter().zip(&eps).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let bound = s.alpha_bar(1000).sqrt() * x0.iter().map(|v| v * v).sum::<f64>().sqrt()
            + (1.0 - (1.0 - s.alpha_bar(1000)).sqrt()) * eps.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gap <= bound);
        assert!(gap <= s.alpha_bar(1000).sqrt() * 3.2 + 1e-4);
    }

    #[test]
    fn full_length_chain_is_the_schedule() {
        let s = NoiseSchedule::linear(50, 1e-4, 0.02).unwrap();
        let c = s.strided(50).unwrap();
        assert_eq!(c.timesteps, (1..=50).collect::<Vec<_>>());
        assert_eq!(c.betas, s.betas());
    }

    #[test]
    fn strided_chain_preserves_cumulative_products() {
        let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
        let c = s.strided(50).unwrap();
        assert_eq!(c.timesteps[0], 20);
        assert_eq!(*c.timesteps.last().unwrap(), 1000);
        let mut acc = 1.0;
        for i in 0..c.len() {
            acc *= c.alphas[i];
            assert!((acc - c.alpha_bars[i]).abs() < 1e-12);
        }
        assert!(s.strided(1001).is_err());
        assert!(s.strided(0).is_err());
    }

    proptest! {
        #[test]
        fn schedule_invariants(steps in 2usize..400, lo in 1e-5f64..0.05, span in 1e-4f64..0.5) {
            let hi = (lo + span).min(0.999);
            prop_assume!(hi > lo);
            let s = NoiseSchedule::linear(steps, lo, hi).unwrap();
            let mut acc = 1.0;
            for t in 1..=steps {
                prop_assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
                if t > 1 {
                    prop_assert!(s.beta(t) > s.beta(t - 1));
                    prop_assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
                }
                acc *= s.alpha(t);
                prop_assert!((acc - s.alpha_bar(t)).abs() <= 1e-12);
            }
        }
    }
}
