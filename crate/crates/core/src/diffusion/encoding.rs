//! Observation-plus-history state encoding.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// `[o_t, past observations oldest->newest, past actions oldest->newest]`,
/// zero-filled where history is missing.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedState(pub Vec<f64>);

impl EncodedState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }
}

pub fn encoded_width(obs_dim: usize, act_dim: usize, history: usize) -> usize {
    obs_dim * (history + 1) + act_dim * history
}

/// Builds the encoding from explicit history slices (oldest first).
/// Shorter histories are padded at the old end.
pub fn encode_state(
    obs: &[f64],
    hist_obs: &[Vec<f64>],
    hist_act: &[Vec<f64>],
    history: usize,
    act_dim: usize,
) -> Result<EncodedState> {
    let obs_dim = obs.len();
    if hist_obs.len() > history || hist_act.len() > history {
        return Err(Error::usage(format!("history holds more than {history} entries")));
    }
    if let Some(h) = hist_obs.iter().find(|h| h.len() != obs_dim) {
        return Err(Error::shape("observation history", obs_dim, h.len()));
    }
    if let Some(h) = hist_act.iter().find(|h| h.len() != act_dim) {
        return Err(Error::shape("action history", act_dim, h.len()));
    }
    let mut out = Vec::with_capacity(encoded_width(obs_dim, act_dim, history));
    out.extend_from_slice(obs);
    out.resize(out.len() + obs_dim * (history - hist_obs.len()), 0.0);
    hist_obs.iter().for_each(|h| out.extend_from_slice(h));
    out.resize(out.len() + act_dim * (history - hist_act.len()), 0.0);
    hist_act.iter().for_each(|h| out.extend_from_slice(h));
    Ok(EncodedState(out))
}

/// Fixed-length ring of past (observation, action) pairs.
#[derive(Clone, Debug)]
pub struct History {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    obs: VecDeque<Vec<f64>>,
    acts: VecDeque<Vec<f64>>,
}

impl History {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Self {
        History {
            capacity,
            obs_dim,
            act_dim,
            obs: VecDeque::with_capacity(capacity + 1),
            acts: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn clear(&mut self) {
        self.obs.clear();
        self.acts.clear();
    }

    /// Appends the observation an action was taken from and the action itself.
    pub fn push(&mut self, obs: &[f64], act: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim {
            return Err(Error::shape("history observation", self.obs_dim, obs.len()));
        }
        if act.len() != self.act_dim {
            return Err(Error::shape("history action", self.act_dim, act.len()));
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.obs.len() == self.capacity {
            self.obs.pop_front();
            self.acts.pop_front();
        }
        self.obs.push_back(obs.to_vec());
        self.acts.push_back(act.to_vec());
        Ok(())
    }

    pub fn encode(&self, obs: &[f64]) -> Result<EncodedState> {
        let ho: Vec<Vec<f64>> = self.obs.iter().cloned().collect();
        let ha: Vec<Vec<f64>> = self.acts.iter().cloned().collect();
        encode_state(obs, &ho, &ha, self.capacity, self.act_dim)
    }
}
