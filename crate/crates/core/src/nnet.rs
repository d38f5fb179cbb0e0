//! Fully connected tanh networks with hand-written forward and reverse passes.
//!
//! Parameters live in a single flat vector. Layout, layer by layer from the
//! input: the weight matrix row-major with shape `(fan_out, fan_in)` followed
//! by the `fan_out` biases. Hidden layers apply `tanh`; the output layer is
//! linear.
//!
//! Besides the single-sample passes there are batched variants used by the
//! learner: a forward pass that keeps every activation, a summed
//! vector-Jacobian product, and a Jacobian-vector product. Together they give
//! Fisher-vector products without materialising per-sample gradients.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::flat::FlatVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Offset of the weight block in the flat vector.
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.fan_in * self.fan_out
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    pub fn end(&self) -> usize {
        self.bias_offset() + self.fan_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub flat: FlatVector,
}

impl MlpParams {
    pub fn new(spec: &MlpSpec, flat: FlatVector) -> Result<Self> {
        ensure_len(flat.dim(), spec.param_count(), "parameter vector")?;
        Ok(MlpParams { flat })
    }

    pub fn zeros(spec: &MlpSpec) -> Self {
        MlpParams {
            flat: FlatVector::zeros(spec.param_count()),
        }
    }
}

/// Activations of every layer for a batch of inputs, row per sample.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`.
    acts: Vec<Array2<f64>>,
}

impl BatchTrace {
    pub fn outputs(&self) -> ArrayView2<'_, f64> {
        self.acts.last().expect("trace has at least one layer").view()
    }

    pub fn batch_size(&self) -> usize {
        self.acts[0].nrows()
    }
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_sizes: &[usize], output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden_sizes.contains(&0) {
            return Err(Error::invalid("all network dimensions must be at least 1"));
        }
        Ok(MlpSpec {
            input_dim,
            hidden_sizes: hidden_sizes.to_vec(),
            output_dim,
            activation: Activation::Tanh,
        })
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_sizes);
        dims.push(self.output_dim);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let layer = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset = layer.end();
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, LayerShape::end)
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> MlpParams {
        let mut flat = vec![0.0; self.param_count()];
        for layer in self.layers() {
            let scale = 1.0 / (layer.fan_in as f64).sqrt();
            for w in &mut flat[layer.offset..layer.bias_offset()] {
                *w = rng.random_range(-scale..=scale);
            }
        }
        MlpParams { flat: flat.into() }
    }

    fn check_params(&self, params: &MlpParams) -> Result<()> {
        ensure_len(params.flat.dim(), self.param_count(), "parameter vector")
    }

    pub fn forward(&self, params: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        ensure_len(input.len(), self.input_dim, "network input")?;
        let layers = self.layers();
        let mut x = input.to_vec();
        for (l, layer) in layers.iter().enumerate() {
            let mut z = dense(&params.flat, layer, &x);
            if l + 1 < layers.len() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            x = z;
        }
        Ok(x)
    }

    /// Gradient of `output_grad · f(input)` with respect to the parameters
    /// and to the input.
    pub fn backward(
        &self,
        params: &MlpParams,
        input: &[f64],
        output_grad: &[f64],
    ) -> Result<(FlatVector, Vec<f64>)> {
        self.check_params(params)?;
        ensure_len(input.len(), self.input_dim, "network input")?;
        ensure_len(output_grad.len(), self.output_dim, "output gradient")?;
        let layers = self.layers();
        let theta = params.flat.as_slice();

        let mut acts = vec![input.to_vec()];
        for (l, layer) in layers.iter().enumerate() {
            let mut z = dense(theta, layer, &acts[l]);
            if l + 1 < layers.len() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }

        let mut grad = vec![0.0; theta.len()];
        let mut delta = output_grad.to_vec();
        for (l, layer) in layers.iter().enumerate().rev() {
            let a_prev = &acts[l];
            let w = &theta[layer.offset..layer.bias_offset()];
            for j in 0..layer.fan_out {
                let row = &mut grad[layer.offset + j * layer.fan_in..][..layer.fan_in];
                for (g, a) in row.iter_mut().zip(a_prev) {
                    *g = delta[j] * a;
                }
            }
            grad[layer.bias_offset()..layer.end()].copy_from_slice(&delta);

            let mut d_prev = vec![0.0; layer.fan_in];
            for (j, d) in delta.iter().enumerate() {
                let row = &w[j * layer.fan_in..][..layer.fan_in];
                for (dp, wv) in d_prev.iter_mut().zip(row) {
                    *dp += d * wv;
                }
            }
            if l > 0 {
                for (dp, a) in d_prev.iter_mut().zip(a_prev) {
                    *dp *= 1.0 - a * a;
                }
            }
            delta = d_prev;
        }
        Ok((grad.into(), delta))
    }

    pub fn forward_batch(&self, params: &MlpParams, inputs: ArrayView2<'_, f64>) -> Result<BatchTrace> {
        self.check_params(params)?;
        ensure_len(inputs.ncols(), self.input_dim, "batch input width")?;
        let layers = self.layers();
        let theta = params.flat.as_slice();
        let mut acts = vec![inputs.to_owned()];
        for (l, layer) in layers.iter().enumerate() {
            let (w, b) = weight_views(theta, layer);
            let mut z = acts[l].dot(&w.t());
            z += &b;
            if l + 1 < layers.len() {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        Ok(BatchTrace { acts })
    }

    /// Sum over the batch of the parameter gradients of `cotangent[i] · f(x_i)`.
    pub fn vjp_batch(
        &self,
        params: &MlpParams,
        trace: &BatchTrace,
        cotangent: ArrayView2<'_, f64>,
    ) -> Result<Vec<f64>> {
        self.check_params(params)?;
        ensure_len(cotangent.ncols(), self.output_dim, "cotangent width")?;
        ensure_len(cotangent.nrows(), trace.batch_size(), "cotangent rows")?;
        let layers = self.layers();
        let theta = params.flat.as_slice();
        let mut grad = vec![0.0; theta.len()];
        let mut delta = cotangent.to_owned();
        for (l, layer) in layers.iter().enumerate().rev() {
            let a_prev = &trace.acts[l];
            let gw = delta.t().dot(a_prev);
            grad[layer.offset..layer.bias_offset()]
                .copy_from_slice(gw.as_standard_layout().as_slice().expect("standard layout"));
            let gb = delta.sum_axis(Axis(0));
            grad[layer.bias_offset()..layer.end()].copy_from_slice(gb.as_slice().expect("contiguous"));
            if l > 0 {
                let (w, _) = weight_views(theta, layer);
                let mut d_prev = delta.dot(&w);
                ndarray::Zip::from(&mut d_prev)
                    .and(a_prev)
                    .for_each(|d, &a| *d *= 1.0 - a * a);
                delta = d_prev;
            }
        }
        Ok(grad)
    }

    /// Directional derivative of every output row along `tangent` in
    /// parameter space.
    pub fn jvp_batch(&self, params: &MlpParams, trace: &BatchTrace, tangent: &[f64]) -> Result<Array2<f64>> {
        self.check_params(params)?;
        ensure_len(tangent.len(), self.param_count(), "tangent")?;
        let layers = self.layers();
        let theta = params.flat.as_slice();
        let mut d_act: Option<Array2<f64>> = None;
        for (l, layer) in layers.iter().enumerate() {
            let (dw, db) = weight_views(tangent, layer);
            let mut dz = trace.acts[l].dot(&dw.t());
            dz += &db;
            if let Some(da) = &d_act {
                let (w, _) = weight_views(theta, layer);
                dz += &da.dot(&w.t());
            }
            if l + 1 < layers.len() {
                ndarray::Zip::from(&mut dz)
                    .and(&trace.acts[l + 1])
                    .for_each(|d, &a| *d *= 1.0 - a * a);
            }
            d_act = Some(dz);
        }
        Ok(d_act.expect("network has at least one layer"))
    }
}

fn dense(theta: &[f64], layer: &LayerShape, x: &[f64]) -> Vec<f64> {
    let w = &theta[layer.offset..layer.bias_offset()];
    let b = &theta[layer.bias_offset()..layer.end()];
    (0..layer.fan_out)
        .map(|j| {
            let row = &w[j * layer.fan_in..][..layer.fan_in];
            b[j] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

fn weight_views<'a>(theta: &'a [f64], layer: &LayerShape) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let w = ArrayView2::from_shape(
        (layer.fan_out, layer.fan_in),
        &theta[layer.offset..layer.bias_offset()],
    )
    .expect("layer shape matches parameter layout");
    let b = ArrayView1::from(&theta[layer.bias_offset()..layer.end()]);
    (w, b)
}

/// Stacks equal-length rows into a matrix.
pub fn stack_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut n = 0;
    for row in rows {
        ensure_len(row.len(), width, "row")?;
        data.extend_from_slice(row);
        n += 1;
    }
    Ok(Array2::from_shape_vec((n, width), data).expect("row lengths checked"))
}


const CHECKPOINT_MAGIC: &[u8; 8] = b"DAPGMLP1";

/// Writes `spec`, `params` and an arbitrary tail (the policy's log-std) as
/// little-endian binary.
pub fn write_checkpoint(path: &Path, spec: &MlpSpec, params: &MlpParams, tail: &[f64]) -> Result<()> {
    ensure_finite(params.flat.as_slice(), "parameters")?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    let mut put_u32 = |v: usize| buf.extend_from_slice(&(v as u32).to_le_bytes());
    put_u32(match spec.activation {
        Activation::Tanh => 0,
    });
    put_u32(spec.input_dim);
    put_u32(spec.output_dim);
    put_u32(spec.hidden_sizes.len());
    for &h in &spec.hidden_sizes {
        put_u32(h);
    }
    put_u32(tail.len());
    for v in params.flat.iter().chain(tail) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(MlpSpec, MlpParams, Vec<f64>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| Error::format(path, 0, msg.to_string());
    if bytes.len() < 8 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a network checkpoint"));
    }
    let mut pos = 8;
    let take_u32 = |pos: &mut usize| -> Result<usize> {
        let chunk = bytes.get(*pos..*pos + 4).ok_or_else(|| bad("truncated header"))?;
        *pos += 4;
        Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")) as usize)
    };
    if take_u32(&mut pos)? != 0 {
        return Err(bad("unknown activation"));
    }
    let input_dim = take_u32(&mut pos)?;
    let output_dim = take_u32(&mut pos)?;
    let n_hidden = take_u32(&mut pos)?;
    let hidden = (0..n_hidden)
        .map(|_| take_u32(&mut pos))
        .collect::<Result<Vec<_>>>()?;
    let tail_len = take_u32(&mut pos)?;
    let spec = MlpSpec::new(input_dim, &hidden, output_dim).map_err(|e| bad(&e.to_string()))?;
    let n = spec.param_count();
    let body = &bytes[pos..];
    if body.len() != 8 * (n + tail_len) {
        return Err(bad("parameter payload length does not match header"));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = MlpParams {
        flat: values[..n].to_vec().into(),
    };
    Ok((spec, params, values[n..].to_vec()))
}
