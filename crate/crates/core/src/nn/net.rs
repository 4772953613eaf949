//! Dense feed-forward networks with exact reverse-mode gradients.

use rand::Rng as _;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Swish,
    Relu,
    Tanh,
    Identity,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Swish => z * sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`, given `y = apply(z)`.
    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Swish => {
                let s = sigmoid(z);
                s + z * s * (1.0 - s)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Layer widths plus a per-layer activation and residual flag.
///
/// Layer `i` maps `widths[i]` to `widths[i + 1]`. A residual layer adds its
/// input to its activated output and therefore needs equal widths.
#[derive(Clone, Debug, PartialEq)]
pub struct NetSpec {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    residual: Vec<bool>,
}

impl NetSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>, residual: Vec<bool>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::config("net.widths", "a network needs at least one layer"));
        }
        if let Some(i) = widths.iter().position(|&w| w == 0) {
            return Err(Error::config("net.widths", format!("width at position {i} is zero")));
        }
        let layers = widths.len() - 1;
        if activations.len() != layers || residual.len() != layers {
            return Err(Error::config(
                "net.activations",
                format!("expected {layers} activations and residual flags"),
            ));
        }
        for (i, &r) in residual.iter().enumerate() {
            if r && widths[i] != widths[i + 1] {
                return Err(Error::config(
                    "net.residual",
                    format!("residual layer {i} maps {} to {}", widths[i], widths[i + 1]),
                ));
            }
        }
        Ok(NetSpec { widths, activations, residual })
    }

    /// Plain MLP: `hidden` on every layer but the last, `output` on the last.
    pub fn mlp(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let layers = widths.len().saturating_sub(1);
        let mut acts = vec![hidden; layers];
        if let Some(last) = acts.last_mut() {
            *last = output;
        }
        NetSpec::new(widths, acts, vec![false; layers])
    }

    /// MLP whose interior square layers carry residual connections.
    pub fn residual_mlp(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let layers = widths.len().saturating_sub(1);
        let mut acts = vec![hidden; layers];
        if let Some(last) = acts.last_mut() {
            *last = output;
        }
        let residual = (0..layers)
            .map(|i| i > 0 && i + 1 < layers && widths[i] == widths[i + 1])
            .collect();
        NetSpec::new(widths, acts, residual)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn residual(&self) -> &[bool] {
        &self.residual
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor,
}

/// Ordered named weights. For a network built from a [`NetSpec`], entry
/// `2i` is layer `i`'s `[out, in]` weight and `2i + 1` its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub entries: Vec<NamedTensor>,
    pub init_seed: u64,
}

impl ParamSet {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    pub fn init(spec: &NetSpec, seed: u64) -> Self {
        let mut rng = rng::seeded(seed, rng::stream::INIT);
        let mut entries = Vec::with_capacity(2 * spec.layers());
        for (i, w) in spec.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            entries.push(NamedTensor {
                name: format!("layer{i}.weight"),
                tensor: Tensor::matrix(fan_out, fan_in, weights),
            });
            entries.push(NamedTensor {
                name: format!("layer{i}.bias"),
                tensor: Tensor::zeros(vec![fan_out]),
            });
        }
        ParamSet { entries, init_seed: seed }
    }

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| NamedTensor { name: e.name.clone(), tensor: e.tensor.zeros_like() })
                .collect(),
            init_seed: self.init_seed,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.tensor)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.tensor.is_finite())
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.tensor.shape() == b.tensor.shape())
    }

    /// Checks that the entries are exactly what `spec` needs.
    pub fn check_against(&self, spec: &NetSpec) -> Result<()> {
        if self.entries.len() != 2 * spec.layers() {
            return Err(Error::shape("parameter count", 2 * spec.layers(), self.entries.len()));
        }
        for (i, w) in spec.widths.windows(2).enumerate() {
            let weight = &self.entries[2 * i].tensor;
            let bias = &self.entries[2 * i + 1].tensor;
            if weight.shape() != [w[1], w[0]] {
                return Err(Error::shape("layer weight", w[0] * w[1], weight.len()));
            }
            if bias.shape() != [w[1]] {
                return Err(Error::shape("layer bias", w[1], bias.len()));
            }
        }
        Ok(())
    }

    /// `self += scale * other`, entrywise.
    pub fn add_scaled(&mut self, other: &ParamSet, scale: f64) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            for (x, y) in a.tensor.values_mut().iter_mut().zip(b.tensor.values()) {
                *x += scale * y;
            }
        }
    }

    /// Euclidean distance over all scalars.
    pub fn distance(&self, other: &ParamSet) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| a.tensor.values().iter().zip(b.tensor.values()))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Renames every entry with `prefix.` in front.
    pub fn prefixed(&self, prefix: &str) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| NamedTensor { name: format!("{prefix}.{}", e.name), tensor: e.tensor.clone() })
                .collect(),
            init_seed: self.init_seed,
        }
    }
}

/// Intermediate values recorded by [`Mlp::forward_cached`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    batch: usize,
    /// `inputs[i]` is the input of layer `i`, `[batch, widths[i]]`.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// A network: spec, parameters, and a generation counter that invalidates
/// caches whenever the parameters are replaced through this handle.
#[derive(Clone, Debug)]
pub struct Mlp {
    spec: NetSpec,
    params: ParamSet,
    generation: u64,
}

impl Mlp {
    pub fn new(spec: NetSpec, seed: u64) -> Self {
        let params = ParamSet::init(&spec, seed);
        Mlp { spec, params, generation: 0 }
    }

    pub fn from_params(spec: NetSpec, params: ParamSet) -> Result<Self> {
        params.check_against(&spec)?;
        Ok(Mlp { spec, params, generation: 0 })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    /// Mutable parameter access; bumps the generation so older caches are rejected.
    pub fn params_mut(&mut self) -> &mut ParamSet {
        self.generation += 1;
        &mut self.params
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.spec.output_width()
    }

    fn check_input(&self, input: &Tensor) -> Result<usize> {
        if input.cols() != self.spec.input_width() {
            return Err(Error::shape("network input", self.spec.input_width(), input.cols()));
        }
        Ok(input.rows())
    }

    fn layer(&self, i: usize, x: &[f64], batch: usize, pre: &mut Vec<f64>, out: &mut Vec<f64>) {
        let n_in = self.spec.widths[i];
        let n_out = self.spec.widths[i + 1];
        let w = self.params.entries[2 * i].tensor.values();
        let b = self.params.entries[2 * i + 1].tensor.values();
        let act = self.spec.activations[i];
        let residual = self.spec.residual[i];
        pre.clear();
        pre.reserve(batch * n_out);
        out.clear();
        out.reserve(batch * n_out);
        for r in 0..batch {
            let xr = &x[r * n_in..(r + 1) * n_in];
            for o in 0..n_out {
                let wr = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + dot(wr, xr);
                pre.push(z);
                let mut y = act.apply(z);
                if residual {
                    y += xr[o];
                }
                out.push(y);
            }
        }
    }

    /// Forward pass without recording intermediates.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let batch = self.check_input(input)?;
        let mut x = input.values().to_vec();
        let mut pre = Vec::new();
        let mut out = Vec::new();
        for i in 0..self.spec.layers() {
            self.layer(i, &x, batch, &mut pre, &mut out);
            std::mem::swap(&mut x, &mut out);
        }
        Ok(Tensor::matrix(batch, self.spec.output_width(), x))
    }

    /// Forward pass that keeps what [`Mlp::backward`] needs.
    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        let batch = self.check_input(input)?;
        let layers = self.spec.layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut pres = Vec::with_capacity(layers);
        let mut posts = Vec::with_capacity(layers);
        let mut x = input.values().to_vec();
        for i in 0..layers {
            let mut pre = Vec::new();
            let mut out = Vec::new();
            self.layer(i, &x, batch, &mut pre, &mut out);
            inputs.push(x);
            pres.push(pre);
            x = out.clone();
            posts.push(out);
        }
        let output = Tensor::matrix(batch, self.spec.output_width(), x);
        let cache = ForwardCache { generation: self.generation, batch, inputs, pre: pres, post: posts };
        Ok((output, cache))
    }

    /// Reverse-mode pass. Returns parameter gradients (summed over the batch)
    /// and the gradient with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<(ParamSet, Tensor)> {
        if cache.generation != self.generation || cache.inputs.len() != self.spec.layers() {
            return Err(Error::usage("forward cache is stale or belongs to another network"));
        }
        let batch = cache.batch;
        if grad_out.rows() != batch || grad_out.cols() != self.spec.output_width() {
            return Err(Error::shape(
                "backward gradient",
                batch * self.spec.output_width(),
                grad_out.len(),
            ));
        }
        let mut grads = self.params.zeros_like();
        let mut delta = grad_out.values().to_vec();
        for i in (0..self.spec.layers()).rev() {
            let n_in = self.spec.widths[i];
            let n_out = self.spec.widths[i + 1];
            let act = self.spec.activations[i];
            let w = self.params.entries[2 * i].tensor.values();
            let x = &cache.inputs[i];
            let pre = &cache.pre[i];
            let post = &cache.post[i];
            let residual = self.spec.residual[i];
            let mut dx = vec![0.0; batch * n_in];
            let mut dz = vec![0.0; n_out];
            {
                let (gw, gb) = grads.entries.split_at_mut(2 * i + 1);
                let gw = gw[2 * i].tensor.values_mut();
                let gb = gb[0].tensor.values_mut();
                for r in 0..batch {
                    let xr = &x[r * n_in..(r + 1) * n_in];
                    let dxr = &mut dx[r * n_in..(r + 1) * n_in];
                    for o in 0..n_out {
                        let k = r * n_out + o;
                        let y = if residual { post[k] - xr[o] } else { post[k] };
                        dz[o] = delta[k] * act.derivative(pre[k], y);
                    }
                    for o in 0..n_out {
                        let d = dz[o];
                        gb[o] += d;
                        if d == 0.0 {
                            continue;
                        }
                        let gwr = &mut gw[o * n_in..(o + 1) * n_in];
                        let wr = &w[o * n_in..(o + 1) * n_in];
                        for j in 0..n_in {
                            gwr[j] += d * xr[j];
                            dxr[j] += d * wr[j];
                        }
                    }
                    if residual {
                        for o in 0..n_out {
                            dxr[o] += delta[r * n_out + o];
                        }
                    }
                }
            }
            delta = dx;
        }
        Ok((grads, Tensor::matrix(batch, self.spec.input_width(), delta)))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}
