//! Two-layer GCN encoder with batch normalization, a one-hidden-layer MLP
//! projector with row L2 normalization, and its exact reverse pass.
//!
//! Forward in [`Mode::Train`]:
//!
//! ```text
//! P_l = Â H_{l-1} W_l          Â = D̄^-1/2 (A + I) D̄^-1/2
//! H_l = relu(bn(P_l))          l = 1, 2
//! U_1 = H_2 Q_1 + c_1,  V = relu(U_1),  U_2 = V Q_2 + c_2
//! Z   = U_2 / max(|U_2|_row, 1e-12)
//! ```
//!
//! [`Mode::Linear`] replaces every batch norm and ReLU by the identity so the
//! stack before normalization collapses to `Â² X W_1 W_2 Q_1 Q_2` plus bias
//! terms.

mod adam;
pub mod checkpoint;

pub use adam::Adam;

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Seed;

pub const BN_EPSILON: f64 = 1e-5;
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Linear,
}

/// Widths along the stack: features -> GCN hidden -> embedding -> projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDims {
    pub input: usize,
    pub hidden: usize,
    pub embed: usize,
    pub output: usize,
}

impl LayerDims {
    pub fn new(input: usize, hidden: usize, embed: usize, output: usize) -> Self {
        LayerDims { input, hidden, embed, output }
    }

    fn validate(&self) -> Result<()> {
        if [self.input, self.hidden, self.embed, self.output].contains(&0) {
            return Err(Error::invalid(format!("layer widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Learnable parameters. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gcn_weights: [Array2<f64>; 2],
    pub bn_scale: [Array1<f64>; 2],
    pub bn_shift: [Array1<f64>; 2],
    pub proj_weights: [Array2<f64>; 2],
    pub proj_biases: [Array1<f64>; 2],
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound))
}

/// Glorot-uniform weights, unit batch-norm scale, zero shifts and biases.
pub fn init_params(seed: u64, dims: LayerDims) -> Result<ModelParams> {
    dims.validate()?;
    let mut rng = Seed(seed).named("init-params").rng();
    let w1 = glorot(&mut rng, dims.input, dims.hidden);
    let w2 = glorot(&mut rng, dims.hidden, dims.embed);
    let q1 = glorot(&mut rng, dims.embed, dims.output);
    let q2 = glorot(&mut rng, dims.output, dims.output);
    Ok(ModelParams {
        gcn_weights: [w1, w2],
        bn_scale: [Array1::ones(dims.hidden), Array1::ones(dims.embed)],
        bn_shift: [Array1::zeros(dims.hidden), Array1::zeros(dims.embed)],
        proj_weights: [q1, q2],
        proj_biases: [Array1::zeros(dims.output), Array1::zeros(dims.output)],
    })
}

impl ModelParams {
    pub fn dims(&self) -> LayerDims {
        LayerDims {
            input: self.gcn_weights[0].nrows(),
            hidden: self.gcn_weights[0].ncols(),
            embed: self.gcn_weights[1].ncols(),
            output: self.proj_weights[1].ncols(),
        }
    }

    /// Checks that every block has the shape implied by [`Self::dims`].
    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        let expect = [
            (self.gcn_weights[0].dim(), (d.input, d.hidden)),
            (self.gcn_weights[1].dim(), (d.hidden, d.embed)),
            (self.proj_weights[0].dim(), (d.embed, d.output)),
            (self.proj_weights[1].dim(), (d.output, d.output)),
        ];
        let lens = [
            (self.bn_scale[0].len(), d.hidden),
            (self.bn_shift[0].len(), d.hidden),
            (self.bn_scale[1].len(), d.embed),
            (self.bn_shift[1].len(), d.embed),
            (self.proj_biases[0].len(), d.output),
            (self.proj_biases[1].len(), d.output),
        ];
        if expect.iter().any(|(a, b)| a != b) || lens.iter().any(|(a, b)| a != b) {
            return Err(Error::shape("parameter blocks do not chain"));
        }
        if self.tensors().iter().any(|(_, t)| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> ModelParams {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.dim());
        let z1 = |a: &Array1<f64>| Array1::zeros(a.len());
        ModelParams {
            gcn_weights: [z2(&self.gcn_weights[0]), z2(&self.gcn_weights[1])],
            bn_scale: [z1(&self.bn_scale[0]), z1(&self.bn_scale[1])],
            bn_shift: [z1(&self.bn_shift[0]), z1(&self.bn_shift[1])],
            proj_weights: [z2(&self.proj_weights[0]), z2(&self.proj_weights[1])],
            proj_biases: [z1(&self.proj_biases[0]), z1(&self.proj_biases[1])],
        }
    }

    pub const TENSOR_NAMES: [&'static str; 10] = [
        "gcn.0.weight",
        "gcn.0.bn_scale",
        "gcn.0.bn_shift",
        "gcn.1.weight",
        "gcn.1.bn_scale",
        "gcn.1.bn_shift",
        "proj.0.weight",
        "proj.0.bias",
        "proj.1.weight",
        "proj.1.bias",
    ];

    /// Named views of every block, in [`Self::TENSOR_NAMES`] order.
    pub fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        let views = vec![
            self.gcn_weights[0].view().into_dyn(),
            self.bn_scale[0].view().into_dyn(),
            self.bn_shift[0].view().into_dyn(),
            self.gcn_weights[1].view().into_dyn(),
            self.bn_scale[1].view().into_dyn(),
            self.bn_shift[1].view().into_dyn(),
            self.proj_weights[0].view().into_dyn(),
            self.proj_biases[0].view().into_dyn(),
            self.proj_weights[1].view().into_dyn(),
            self.proj_biases[1].view().into_dyn(),
        ];
        Self::TENSOR_NAMES.into_iter().zip(views).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        let [w1, w2] = &mut self.gcn_weights;
        let [s1, s2] = &mut self.bn_scale;
        let [b1, b2] = &mut self.bn_shift;
        let [q1, q2] = &mut self.proj_weights;
        let [c1, c2] = &mut self.proj_biases;
        let views = vec![
            w1.view_mut().into_dyn(),
            s1.view_mut().into_dyn(),
            b1.view_mut().into_dyn(),
            w2.view_mut().into_dyn(),
            s2.view_mut().into_dyn(),
            b2.view_mut().into_dyn(),
            q1.view_mut().into_dyn(),
            c1.view_mut().into_dyn(),
            q2.view_mut().into_dyn(),
            c2.view_mut().into_dyn(),
        ];
        Self::TENSOR_NAMES.into_iter().zip(views).collect()
    }

    /// `W_1 W_2`, the encoder's weight once nonlinearities are dropped.
    pub fn encoder_weight(&self) -> Array2<f64> {
        self.gcn_weights[0].dot(&self.gcn_weights[1])
    }

    /// `W_1 W_2 Q_1 Q_2`, the whole stack's weight in linear mode.
    pub fn equivalent_weight(&self) -> Array2<f64> {
        self.encoder_weight()
            .dot(&self.proj_weights[0])
            .dot(&self.proj_weights[1])
    }
}

/// Sparse `D̄^-1/2 (A + I) D̄^-1/2` in row-compressed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    offsets: Vec<usize>,
    ids: Vec<usize>,
    weights: Vec<f64>,
}

impl Propagator {
    pub fn gcn(graph: &Graph) -> Self {
        let n = graph.num_nodes();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / ((graph.degree(i) + 1) as f64).sqrt())
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut ids = Vec::with_capacity(graph.neighbor_ids().len() + n);
        let mut weights = Vec::with_capacity(ids.capacity());
        offsets.push(0);
        for i in 0..n {
            let nbrs = graph.neighbors(i);
            let split = nbrs.partition_point(|&j| j < i);
            let row = nbrs[..split].iter().chain(std::iter::once(&i)).chain(&nbrs[split..]);
            for &j in row {
                ids.push(j);
                weights.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            offsets.push(ids.len());
        }
        Propagator { offsets, ids, weights }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `Â x`. `Â` is symmetric, so this is also the adjoint.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.dim());
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            for k in self.offsets[i]..self.offsets[i + 1] {
                row.scaled_add(self.weights[k], &x.row(self.ids[k]));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                d[[i, self.ids[k]]] = self.weights[k];
            }
        }
        d
    }
}

#[derive(Debug, Clone)]
struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

#[derive(Debug, Clone)]
struct GcnLayerCache {
    input: Array2<f64>,
    bn: Option<BatchNormCache>,
    /// Pre-activation, kept for the ReLU mask.
    pre_act: Array2<f64>,
}

#[derive(Debug, Clone)]
struct ProjectionCache {
    hidden_pre: Array2<f64>,
    hidden: Array2<f64>,
    out: Array2<f64>,
    norms: Array1<f64>,
}

/// Everything the reverse pass needs.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    mode: Mode,
    propagator: Propagator,
    layers: Vec<GcnLayerCache>,
    embedding: Array2<f64>,
    projection: Option<ProjectionCache>,
}

impl ForwardTrace {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn embedding(&self) -> &Array2<f64> {
        &self.embedding
    }
}

fn batch_norm(p: &Array2<f64>, scale: &Array1<f64>, shift: &Array1<f64>) -> (Array2<f64>, BatchNormCache) {
    let mean = p.mean_axis(Axis(0)).expect("non-empty batch");
    let centered = p - &mean;
    let var = centered.mapv(|x| x * x).mean_axis(Axis(0)).expect("non-empty batch");
    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
    let x_hat = centered * &inv_std;
    let y = &x_hat * scale + shift;
    (y, BatchNormCache { x_hat, inv_std })
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn relu_backward(grad: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut g = grad.clone();
    g.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    g
}

/// Encoder output `H` and the trace needed to differentiate through it.
pub fn gcn_forward(
    params: &ModelParams,
    propagator: &Propagator,
    features: &Array2<f64>,
    mode: Mode,
) -> Result<(Array2<f64>, ForwardTrace)> {
    let dims = params.dims();
    if features.ncols() != dims.input {
        return Err(Error::shape(format!(
            "features have width {}, encoder expects {}",
            features.ncols(),
            dims.input
        )));
    }
    if features.nrows() != propagator.num_nodes() {
        return Err(Error::shape("feature rows do not match node count"));
    }
    if features.nrows() == 0 {
        return Err(Error::shape("empty graph"));
    }
    let mut layers = Vec::with_capacity(2);
    let mut h = features.clone();
    for l in 0..2 {
        let p = propagator.apply(&h.dot(&params.gcn_weights[l]));
        let (pre_act, bn, out) = match mode {
            Mode::Train => {
                let (y, cache) = batch_norm(&p, &params.bn_scale[l], &params.bn_shift[l]);
                let out = relu(&y);
                (y, Some(cache), out)
            }
            Mode::Linear => (Array2::zeros((0, 0)), None, p),
        };
        layers.push(GcnLayerCache { input: h, bn, pre_act });
        h = out;
    }
    let trace = ForwardTrace {
        mode,
        propagator: propagator.clone(),
        layers,
        embedding: h.clone(),
        projection: None,
    };
    Ok((h, trace))
}

/// Projector head; returns `Z` with unit rows (or zero rows for zero input).
pub fn project(params: &ModelParams, h: &Array2<f64>, trace: &mut ForwardTrace) -> Array2<f64> {
    let hidden_pre = h.dot(&params.proj_weights[0]) + &params.proj_biases[0];
    let hidden = match trace.mode {
        Mode::Train => relu(&hidden_pre),
        Mode::Linear => hidden_pre.clone(),
    };
    let out = hidden.dot(&params.proj_weights[1]) + &params.proj_biases[1];
    let norms = Array1::from_iter(out.rows().into_iter().map(|r| r.dot(&r).sqrt()));
    let mut z = out.clone();
    for (mut row, &n) in z.rows_mut().into_iter().zip(norms.iter()) {
        row /= n.max(NORM_FLOOR);
    }
    trace.projection = Some(ProjectionCache { hidden_pre, hidden, out, norms });
    z
}

/// Runs encoder and projector: `(H, Z, trace)`.
pub fn forward(
    params: &ModelParams,
    propagator: &Propagator,
    features: &Array2<f64>,
    mode: Mode,
) -> Result<(Array2<f64>, Array2<f64>, ForwardTrace)> {
    let (h, mut trace) = gcn_forward(params, propagator, features, mode)?;
    let z = project(params, &h, &mut trace);
    Ok((h, z, trace))
}

fn batch_norm_backward(dy: &Array2<f64>, scale: &Array1<f64>, cache: &BatchNormCache) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let n = dy.nrows() as f64;
    let d_scale = (dy * &cache.x_hat).sum_axis(Axis(0));
    let d_shift = dy.sum_axis(Axis(0));
    let dx_hat = dy * scale;
    let sum_dx_hat = dx_hat.sum_axis(Axis(0));
    let sum_dx_hat_xhat = (&dx_hat * &cache.x_hat).sum_axis(Axis(0));
    let dp = (dx_hat * n - &sum_dx_hat - &cache.x_hat * &sum_dx_hat_xhat) * &(&cache.inv_std / n);
    (dp, d_scale, d_shift)
}

/// Exact gradient of a scalar loss with respect to every parameter, given
/// the loss gradient with respect to `Z`.
pub fn backward(params: &ModelParams, trace: &ForwardTrace, grad_z: &Array2<f64>) -> Result<ModelParams> {
    let proj = trace
        .projection
        .as_ref()
        .ok_or_else(|| Error::shape("trace has no projector pass"))?;
    if grad_z.dim() != proj.out.dim() {
        return Err(Error::shape(format!(
            "gradient is {:?}, Z is {:?}",
            grad_z.dim(),
            proj.out.dim()
        )));
    }
    let mut grads = params.zeros_like();

    // Row normalization z = u / max(|u|, floor).
    let mut d_out = grad_z.clone();
    for (i, mut row) in d_out.rows_mut().into_iter().enumerate() {
        let norm = proj.norms[i];
        if norm > NORM_FLOOR {
            let u = proj.out.row(i);
            let proj_coef = u.dot(&row) / (norm * norm);
            row.scaled_add(-proj_coef, &u);
            row /= norm;
        } else {
            row /= NORM_FLOOR;
        }
    }

    grads.proj_weights[1] = proj.hidden.t().dot(&d_out);
    grads.proj_biases[1] = d_out.sum_axis(Axis(0));
    let mut d_hidden = d_out.dot(&params.proj_weights[1].t());
    if trace.mode == Mode::Train {
        d_hidden = relu_backward(&d_hidden, &proj.hidden_pre);
    }
    grads.proj_weights[0] = trace.embedding.t().dot(&d_hidden);
    grads.proj_biases[0] = d_hidden.sum_axis(Axis(0));
    let mut d_h = d_hidden.dot(&params.proj_weights[0].t());

    for l in (0..2).rev() {
        let layer = &trace.layers[l];
        let d_p = match (&layer.bn, trace.mode) {
            (Some(bn), Mode::Train) => {
                let d_y = relu_backward(&d_h, &layer.pre_act);
                let (dp, ds, db) = batch_norm_backward(&d_y, &params.bn_scale[l], bn);
                grads.bn_scale[l] = ds;
                grads.bn_shift[l] = db;
                dp
            }
            _ => d_h,
        };
        let d_m = trace.propagator.apply(&d_p);
        grads.gcn_weights[l] = layer.input.t().dot(&d_m);
        d_h = d_m.dot(&params.gcn_weights[l].t());
    }
    Ok(grads)
}

/// One Adam update of `params` in place.
pub fn adam_step(state: &mut Adam, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
    let g: Vec<ArrayViewD<'_, f64>> = grads.tensors().into_iter().map(|(_, t)| t).collect();
    let p: Vec<ArrayViewMutD<'_, f64>> = params.tensors_mut().into_iter().map(|(_, t)| t).collect();
    state.step(p, &g)
}

/// Fresh Adam state shaped like `params`.
pub fn adam_for(params: &ModelParams, learning_rate: f64) -> Adam {
    Adam::new(
        learning_rate,
        params.tensors().iter().map(|(_, t)| t.shape().to_vec()).collect(),
    )
}
