use rand::Rng;

use crate::{Error, Result};

use super::ParamVector;

/// Shape of a fully connected ReLU network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = NetworkSpec {
            input_dim,
            hidden_dims,
            output_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims().any(|d| d == 0) {
            return Err(Error::InvalidSpec(format!(
                "all layer sizes must be positive, got {:?}",
                self.dims().collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input_dim)
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(self.output_dim))
    }

    fn layers(&self) -> Vec<Layer> {
        let dims: Vec<usize> = self.dims().collect();
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let layer = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += (w[0] + 1) * w[1];
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        let dims: Vec<usize> = self.dims().collect();
        dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.fan_in * self.fan_out]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.fan_in * self.fan_out;
        &params[start..start + self.fan_out]
    }
}

/// Weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
pub fn init_params<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> ParamVector {
    let mut params = vec![0.0; spec.param_count()];
    for layer in spec.layers() {
        let bound = 1.0 / (layer.fan_in as f64).sqrt();
        for w in &mut params[layer.offset..layer.offset + layer.fan_in * layer.fan_out] {
            *w = rng.random_range(-bound..bound);
        }
    }
    ParamVector::from(params)
}

fn check_params(spec: &NetworkSpec, params: &[f64]) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(Error::shape("parameter vector", spec.param_count(), params.len()));
    }
    Ok(())
}

/// Activations of a forward pass over a batch of rows, kept for backprop.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    rows: usize,
    /// `activations[0]` is the input, the last entry the network output.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least one layer")
    }

    pub fn output_row(&self, row: usize) -> &[f64] {
        let out = self.output();
        let width = out.len() / self.rows.max(1);
        &out[row * width..(row + 1) * width]
    }
}

/// Forward pass over `rows` inputs stored back to back in `inputs`.
pub fn forward_batch(
    spec: &NetworkSpec,
    params: &[f64],
    inputs: &[f64],
    rows: usize,
) -> Result<ForwardCache> {
    check_params(spec, params)?;
    if inputs.len() != rows * spec.input_dim {
        return Err(Error::shape("network input", rows * spec.input_dim, inputs.len()));
    }
    let layers = spec.layers();
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(inputs.to_vec());
    for (l, layer) in layers.iter().enumerate() {
        let x = &activations[l];
        let w = layer.weights(params);
        let b = layer.bias(params);
        let hidden = l + 1 < layers.len();
        let mut out = vec![0.0; rows * layer.fan_out];
        for r in 0..rows {
            let xr = &x[r * layer.fan_in..(r + 1) * layer.fan_in];
            let yr = &mut out[r * layer.fan_out..(r + 1) * layer.fan_out];
            for (o, y) in yr.iter_mut().enumerate() {
                let wo = &w[o * layer.fan_in..(o + 1) * layer.fan_in];
                let z = b[o] + wo.iter().zip(xr).map(|(a, c)| a * c).sum::<f64>();
                *y = if hidden { z.max(0.0) } else { z };
            }
        }
        activations.push(out);
    }
    Ok(ForwardCache { rows, activations })
}

/// Q-values for a single observation.
pub fn forward(spec: &NetworkSpec, params: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
    if obs.len() != spec.input_dim {
        return Err(Error::shape("observation", spec.input_dim, obs.len()));
    }
    let cache = forward_batch(spec, params, obs, 1)?;
    Ok(cache.output().to_vec())
}

/// Gradient of `sum_r seeds_r . output_r` with respect to every parameter.
///
/// `seeds` holds one `output_dim` row per cached input row.
pub fn backward_batch(
    spec: &NetworkSpec,
    params: &[f64],
    cache: &ForwardCache,
    seeds: &[f64],
) -> Result<ParamVector> {
    check_params(spec, params)?;
    let rows = cache.rows;
    if seeds.len() != rows * spec.output_dim {
        return Err(Error::shape("output error", rows * spec.output_dim, seeds.len()));
    }
    let layers = spec.layers();
    let mut grad = vec![0.0; params.len()];
    let mut delta = seeds.to_vec();
    for (l, layer) in layers.iter().enumerate().rev() {
        let input = &cache.activations[l];
        let w = layer.weights(params);
        let (fan_in, fan_out) = (layer.fan_in, layer.fan_out);
        let mut delta_prev = if l > 0 { vec![0.0; rows * fan_in] } else { Vec::new() };
        {
            let (gw, gb) = grad[layer.offset..layer.offset + (fan_in + 1) * fan_out]
                .split_at_mut(fan_in * fan_out);
            for r in 0..rows {
                let a = &input[r * fan_in..(r + 1) * fan_in];
                let d = &delta[r * fan_out..(r + 1) * fan_out];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    gb[o] += dv;
                    for (g, x) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(a) {
                        *g += dv * x;
                    }
                    if l > 0 {
                        let wo = &w[o * fan_in..(o + 1) * fan_in];
                        for (p, wv) in delta_prev[r * fan_in..(r + 1) * fan_in].iter_mut().zip(wo) {
                            *p += dv * wv;
                        }
                    }
                }
            }
        }
        if l > 0 {
            // ReLU derivative, read off the post-activation values.
            for (p, a) in delta_prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = delta_prev;
        }
    }
    Ok(ParamVector::from(grad))
}

/// Gradient of `output_error . Q(obs)` for a single observation.
pub fn backward(
    spec: &NetworkSpec,
    params: &[f64],
    obs: &[f64],
    output_error: &[f64],
) -> Result<ParamVector> {
    if obs.len() != spec.input_dim {
        return Err(Error::shape("observation", spec.input_dim, obs.len()));
    }
    if output_error.len() != spec.output_dim {
        return Err(Error::shape("output error", spec.output_dim, output_error.len()));
    }
    let cache = forward_batch(spec, params, obs, 1)?;
    backward_batch(spec, params, &cache, output_error)
}
