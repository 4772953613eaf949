//! Twin critics and the bounded actor.

use crate::diffusion::EncodedState;
use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp, NetSpec, ParamSet, Parameterized, Tensor};
use crate::rng;

/// Row-wise `[states | actions]`.
pub fn concat_rows(states: &Tensor, actions: &Tensor) -> Result<Tensor> {
    if states.rows() != actions.rows() {
        return Err(Error::shape("state/action rows", states.rows(), actions.rows()));
    }
    let (n, sw, aw) = (states.rows(), states.cols(), actions.cols());
    let mut v = Vec::with_capacity(n * (sw + aw));
    for r in 0..n {
        v.extend_from_slice(states.row_slice(r));
        v.extend_from_slice(actions.row_slice(r));
    }
    Tensor::new(vec![n, sw + aw], v)
}

/// A scalar action-value over batches, with its action gradient.
pub trait ActionValue {
    /// Q per row and dQ/da per row.
    fn value_and_action_grad(&self, states: &Tensor, actions: &Tensor) -> Result<(Vec<f64>, Tensor)>;
}

impl ActionValue for Mlp {
    fn value_and_action_grad(&self, states: &Tensor, actions: &Tensor) -> Result<(Vec<f64>, Tensor)> {
        let input = concat_rows(states, actions)?;
        let (q, cache) = self.forward_cached(&input)?;
        let (_, gin) = self.backward(&cache, &Tensor::new(q.shape().to_vec(), vec![1.0; q.len()])?)?;
        let (n, sw, aw) = (states.rows(), states.cols(), actions.cols());
        let mut ga = Vec::with_capacity(n * aw);
        for r in 0..n {
            ga.extend_from_slice(&gin.row_slice(r)[sw..]);
        }
        Ok((q.into_values(), Tensor::new(vec![n, aw], ga)?))
    }
}

#[derive(Clone, Debug)]
pub struct CriticPair {
    pub q1: Mlp,
    pub q2: Mlp,
    act_dim: usize,
}

impl CriticPair {
    /// Two ReLU critics `[state + action, hidden..., 1]` with independent seeds.
    pub fn new(state_dim: usize, act_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut widths = vec![state_dim + act_dim];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let spec = NetSpec::mlp(widths, Activation::Relu, Activation::Identity)?;
        Ok(CriticPair { q1: Mlp::new(spec.clone(), rng::mix(seed, 11)), q2: Mlp::new(spec, rng::mix(seed, 12)), act_dim })
    }

    /// Wraps two existing networks with matching widths.
    pub fn from_nets(q1: Mlp, q2: Mlp, act_dim: usize) -> Result<Self> {
        if q1.spec() != q2.spec() {
            return Err(Error::usage("twin critics must share a layout"));
        }
        if q1.output_width() != 1 || q1.input_width() <= act_dim {
            return Err(Error::shape("critic widths", act_dim + 1, q1.input_width()));
        }
        Ok(CriticPair { q1, q2, act_dim })
    }

    pub fn net(&self, which: usize) -> Result<&Mlp> {
        match which {
            1 => Ok(&self.q1),
            2 => Ok(&self.q2),
            _ => Err(Error::usage(format!("critic index must be 1 or 2, got {which}"))),
        }
    }

    pub fn action_dim(&self) -> usize {
        self.act_dim
    }

    pub fn state_dim(&self) -> usize {
        self.q1.input_width() - self.act_dim
    }

    /// Both critics over a batch.
    pub fn q_both(&self, states: &Tensor, actions: &Tensor) -> Result<(Vec<f64>, Vec<f64>)> {
        if states.cols() != self.state_dim() || actions.cols() != self.act_dim {
            return Err(Error::shape("critic input", self.state_dim() + self.act_dim, states.cols() + actions.cols()));
        }
        let input = concat_rows(states, actions)?;
        Ok((self.q1.forward(&input)?.into_values(), self.q2.forward(&input)?.into_values()))
    }

    /// `min(Q1, Q2)` per row.
    pub fn q_min(&self, states: &Tensor, actions: &Tensor) -> Result<Vec<f64>> {
        let (a, b) = self.q_both(states, actions)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect())
    }
}

impl Parameterized for CriticPair {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.q1.params(), self.q2.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.q1.params_mut(), self.q2.params_mut()]
    }
}

/// Single-critic value of one state-action pair.
pub fn critic_q(critics: &CriticPair, which: usize, s: &EncodedState, a: &[f64]) -> Result<f64> {
    let net = critics.net(which)?;
    if s.width() != critics.state_dim() || a.len() != critics.action_dim() {
        return Err(Error::shape("critic input", critics.state_dim() + critics.action_dim(), s.width() + a.len()));
    }
    let mut x = s.0.clone();
    x.extend_from_slice(a);
    Ok(net.forward(&Tensor::row(x))?.values()[0])
}

/// Deterministic policy with tanh-bounded outputs.
#[derive(Clone, Debug)]
pub struct Actor {
    pub net: Mlp,
}

impl Actor {
    pub fn new(state_dim: usize, act_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut widths = vec![state_dim];
        widths.extend_from_slice(hidden);
        widths.push(act_dim);
        let spec = NetSpec::mlp(widths, Activation::Relu, Activation::Tanh)?;
        Ok(Actor { net: Mlp::new(spec, rng::mix(seed, 13)) })
    }

    pub fn from_net(net: Mlp) -> Self {
        Actor { net }
    }

    pub fn act(&self, s: &EncodedState) -> Result<Vec<f64>> {
        Ok(self.net.forward(&Tensor::row(s.0.clone()))?.into_values())
    }

    pub fn act_batch(&self, states: &Tensor) -> Result<Tensor> {
        self.net.forward(states)
    }
}

impl Parameterized for Actor {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.net.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.net.params_mut()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_critic_scores_zero() {
        let mut c = CriticPair::new(4, 2, &[8, 8], 1).unwrap();
        for p in c.q1.params_mut().entries.iter_mut() {
            p.tensor.values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let s = EncodedState(vec![0.3, -1.0, 2.0, 0.5]);
        assert_eq!(critic_q(&c, 1, &s, &[0.4, 0.1]).unwrap(), 0.0);
        assert!(critic_q(&c, 3, &s, &[0.4, 0.1]).is_err());
        assert!(matches!(critic_q(&c, 1, &s, &[0.4]), Err(Error::Shape { .. })));
    }

    #[test]
    fn critic_matches_straight_line_arithmetic() {
        let c = CriticPair::new(3, 1, &[5, 4], 9).unwrap();
        let s = EncodedState(vec![0.2, -0.7, 1.1]);
        let a = [0.35];
        let mut x: Vec<f64> = s.0.iter().chain(a.iter()).copied().collect();
        let p = &c.q2.params().entries;
        for l in 0..3 {
            let w = &p[2 * l].tensor;
            let b = p[2 * l + 1].tensor.values();
            let (rows, cols) = (w.shape()[0], w.shape()[1]);
            let mut y = vec![0.0; rows];
            for o in 0..rows {
                let mut z = b[o];
                for i in 0..cols {
                    z += w.values()[o * cols + i] * x[i];
                }
                y[o] = if l < 2 { z.max(0.0) } else { z };
            }
            x = y;
        }
        let q = critic_q(&c, 2, &s, &a).unwrap();
        assert!((q - x[0]).abs() <= 1e-12);
        assert_eq!(q, critic_q(&c, 2, &s, &a).unwrap());
    }

    #[test]
    fn actor_is_bounded() {
        let mut actor = Actor::new(3, 2, &[6], 2).unwrap();
        for p in actor.net.params_mut().entries.iter_mut() {
            p.tensor.values_mut().iter_mut().for_each(|v| *v *= 50.0);
        }
        let a = actor.act(&EncodedState(vec![10.0, -20.0, 30.0])).unwrap();
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn action_gradient_matches_differences() {
        let c = CriticPair::new(2, 2, &[6], 5).unwrap();
        let s = Tensor::row(vec![0.4, -0.3]);
        let a = vec![0.2, -0.6];
        let (_, g) = c.q1.value_and_action_grad(&s, &Tensor::row(a.clone())).unwrap();
        for j in 0..2 {
            let mut hi = a.clone();
            let mut lo = a.clone();
            hi[j] += 1e-6;
            lo[j] -= 1e-6;
            let f = |v: Vec<f64>| c.q1.forward(&concat_rows(&s, &Tensor::row(v)).unwrap()).unwrap().values()[0];
            let num = (f(hi) - f(lo)) / 2e-6;
            assert!((num - g.values()[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn from_nets_rejects_mismatch() {
        let a = CriticPair::new(3, 1, &[4], 0).unwrap();
        let b = CriticPair::new(3, 1, &[5], 0).unwrap();
        assert!(CriticPair::from_nets(a.q1.clone(), b.q1.clone(), 1).is_err());
    }
}
