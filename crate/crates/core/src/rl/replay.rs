//! Transitions, the bounded replay buffer and its flat record file.
//!
//! Record file layout (little-endian): magic `NDRB`, version `u32` = 1,
//! state width `u32`, action width `u32`, plan width `u32`, record count
//! `u64`, then per record: state `f64 x sw`, action `f64 x aw`, reward `f64`,
//! next state `f64 x sw`, done `u8` (0 or 1), plan `f64 x pw`.

use rand::Rng as _;
use std::collections::VecDeque;
use std::path::Path;

use crate::diffusion::EncodedState;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: EncodedState,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: EncodedState,
    pub done: bool,
    /// The action plan starting at this step (diffusion training target).
    pub plan: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

/// Column-stacked view of a sampled batch.
#[derive(Clone, Debug)]
pub struct Batch {
    pub states: Tensor,
    pub actions: Tensor,
    pub rewards: Vec<f64>,
    pub next_states: Tensor,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        let first = items.first().ok_or_else(|| Error::usage("empty batch"))?;
        let (sw, aw) = (first.state.width(), first.action.len());
        let n = items.len();
        let mut s = Vec::with_capacity(n * sw);
        let mut a = Vec::with_capacity(n * aw);
        let mut s2 = Vec::with_capacity(n * sw);
        for t in items {
            if t.state.width() != sw || t.next_state.width() != sw || t.action.len() != aw {
                return Err(Error::shape("batch transition", sw + aw, t.state.width() + t.action.len()));
            }
            s.extend_from_slice(t.state.as_slice());
            a.extend_from_slice(&t.action);
            s2.extend_from_slice(t.next_state.as_slice());
        }
        Ok(Batch {
            states: Tensor::new(vec![n, sw], s)?,
            actions: Tensor::new(vec![n, aw], a)?,
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: Tensor::new(vec![n, sw], s2)?,
            dones: items.iter().map(|t| t.done).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be at least 1"));
        }
        Ok(ReplayBuffer { items: VecDeque::with_capacity(capacity.min(1 << 16)), capacity })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Appends, evicting the oldest item at capacity. Non-finite rewards are refused.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        if !t.reward.is_finite() {
            return Err(Error::usage("transition reward must be finite"));
        }
        if let Some(f) = self.items.front() {
            if f.state.width() != t.state.width() || f.action.len() != t.action.len() || f.plan.len() != t.plan.len() {
                return Err(Error::shape("transition widths", f.state.width(), t.state.width()));
            }
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        Ok(())
    }

    /// `n` draws, uniform with replacement over the current contents.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::usage("cannot sample from an empty replay buffer"));
        }
        Ok((0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect())
    }

    pub fn encode(&self) -> Vec<u8> {
        let (sw, aw, pw) = self.items.front().map_or((0, 0, 0), |t| (t.state.width(), t.action.len(), t.plan.len()));
        let mut out = Vec::with_capacity(28 + self.items.len() * record_len(sw, aw, pw));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for w in [sw, aw, pw] {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.items.len() as u64).to_le_bytes());
        for t in &self.items {
            let put = |out: &mut Vec<u8>, v: &[f64]| v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            put(&mut out, t.state.as_slice());
            put(&mut out, &t.action);
            put(&mut out, &[t.reward]);
            put(&mut out, t.next_state.as_slice());
            out.push(t.done as u8);
            put(&mut out, &t.plan);
        }
        out
    }

    /// Parses a record file into a buffer of the given capacity (keeping the
    /// newest records if the file holds more).
    pub fn decode(bytes: &[u8], capacity: usize) -> Result<Self> {
        let mut buf = ReplayBuffer::new(capacity)?;
        if bytes.len() < 28 || &bytes[..4] != MAGIC {
            return Err(Error::load("not a replay record file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(Error::load(format!("unsupported replay file version {}", u32_at(4))));
        }
        let (sw, aw, pw) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
        let count = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let rec = record_len(sw, aw, pw);
        let body = bytes.len() - 28;
        if count.checked_mul(rec as u64) != Some(body as u64) {
            return Err(Error::load(format!("replay file body of {body} bytes does not hold {count} records of {rec} bytes")));
        }
        if count > 0 && (sw == 0 || aw == 0) {
            return Err(Error::load("replay records need non-zero state and action widths"));
        }
        let skip = (count as usize).saturating_sub(capacity);
        for r in skip..count as usize {
            let mut off = 28 + r * rec;
            let state = EncodedState(read_f64s(bytes, &mut off, sw)?);
            let action = read_f64s(bytes, &mut off, aw)?;
            let reward = read_f64s(bytes, &mut off, 1)?[0];
            let next_state = EncodedState(read_f64s(bytes, &mut off, sw)?);
            let done = match bytes[off] {
                0 => false,
                1 => true,
                b => return Err(Error::load(format!("invalid done flag {b}"))),
            };
            off += 1;
            let plan = read_f64s(bytes, &mut off, pw)?;
            buf.push(Transition { state, action, reward, next_state, done, plan })?;
        }
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path, capacity: usize) -> Result<Self> {
        Self::decode(&std::fs::read(path)?, capacity)
    }
}

const MAGIC: &[u8; 4] = b"NDRB";
const VERSION: u32 = 1;

fn read_f64s(bytes: &[u8], off: &mut usize, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = bytes[*off..*off + 8 * n].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    *off += 8 * n;
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::load("non-finite value in replay record"))
    }
}

fn record_len(sw: usize, aw: usize, pw: usize) -> usize {
    8 * (2 * sw + aw + 1 + pw) + 1
}
