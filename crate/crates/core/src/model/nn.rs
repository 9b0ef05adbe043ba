//! Residual tanh encoder and two-layer head with hand-written backprop.
//!
//! Weights are flat row-major `Vec<f64>`s so optimizers, checksums and
//! finite-difference checks all see one contiguous parameter vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub blocks: usize,
    pub head_hidden: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            input: crate::features::INPUT_DIM,
            hidden: 64,
            blocks: 8,
            head_hidden: 32,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4 * 4;
    for i in (0..chunks).step_by(4) {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out = W x + b` for `W` with `out.len()` rows.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = b[i] + dot(&w[i * n..(i + 1) * n], x);
    }
}

/// Accumulates `dW += g x^T`, `db += g`, and `gx += W^T g` when requested.
fn affine_backward(w: &[f64], x: &[f64], g: &[f64], grads: Option<(&mut [f64], &mut [f64])>, gx: Option<&mut [f64]>) {
    let n = x.len();
    if let Some((dw, db)) = grads {
        for (i, &gi) in g.iter().enumerate() {
            if gi != 0.0 {
                axpy(&mut dw[i * n..(i + 1) * n], gi, x);
            }
            db[i] += gi;
        }
    }
    if let Some(gx) = gx {
        for (i, &gi) in g.iter().enumerate() {
            if gi != 0.0 {
                axpy(gx, gi, &w[i * n..(i + 1) * n]);
            }
        }
    }
}

fn xavier(rng: &mut impl Rng, fan_in: usize, fan_out: usize, gain: f64, out: &mut [f64]) {
    let a = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in out {
        *v = rng.gen_range(-a..a);
    }
}

/// One steering injection: `share` of the budget at block `block` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub block: usize,
    pub share: f64,
}

/// What a steering injection did, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub share: f64,
    pub wsum: f64,
    pub v: Vec<f64>,
}

/// Activations of one forward pass: `h[0]` is the projection, `h[l]` the
/// output of block `l` after any steering; `z[l-1]` is block `l`'s tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct Acts {
    pub xn: Vec<f64>,
    pub h: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub steer: Vec<Option<Applied>>,
}

impl Acts {
    pub fn last(&self) -> &[f64] {
        self.h.last().expect("at least the projection")
    }
}

/// Per-query steering inputs: neighbour weights and their unsteered activations.
pub struct Plan<'a> {
    pub injections: &'a [Injection],
    pub gamma: &'a [f64],
    pub neighbors: Vec<(f64, &'a Acts)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub dims: Dims,
    /// Input standardization, fixed when the encoder is first fit.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub params: Vec<f64>,
}

impl Encoder {
    pub fn param_count(d: &Dims) -> usize {
        d.hidden * d.input + d.hidden + d.blocks * (2 * d.hidden * d.hidden + 2 * d.hidden)
    }

    pub fn zeros(dims: Dims) -> Encoder {
        Encoder {
            dims,
            shift: vec![0.0; dims.input],
            scale: vec![1.0; dims.input],
            params: vec![0.0; Self::param_count(&dims)],
        }
    }

    pub fn init(dims: Dims, rng: &mut impl Rng) -> Encoder {
        let mut e = Encoder::zeros(dims);
        let (d, n) = (dims.hidden, dims.input);
        xavier(rng, n, d, 1.0, &mut e.params[..d * n]);
        let residual_gain = 1.0 / (dims.blocks as f64).sqrt();
        for l in 1..=dims.blocks {
            let (a, c) = (e.block_offset(l), e.block_offset(l) + d * d + d);
            xavier(rng, d, d, 1.0, &mut e.params[a..a + d * d]);
            xavier(rng, d, d, residual_gain, &mut e.params[c..c + d * d]);
        }
        e
    }

    fn block_offset(&self, l: usize) -> usize {
        let d = self.dims.hidden;
        d * self.dims.input + d + (l - 1) * (2 * d * d + 2 * d)
    }

    /// `(A, a, C, c)` of block `l`.
    fn block(&self, l: usize) -> (&[f64], &[f64], &[f64], &[f64]) {
        let d = self.dims.hidden;
        let o = self.block_offset(l);
        let p = &self.params;
        (
            &p[o..o + d * d],
            &p[o + d * d..o + d * d + d],
            &p[o + d * d + d..o + 2 * d * d + d],
            &p[o + 2 * d * d + d..o + 2 * d * d + 2 * d],
        )
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).zip(&self.scale).map(|((v, s), k)| (v - s) / k).collect()
    }

    fn run_block(&self, l: usize, prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dims.hidden;
        let (a, ab, c, cb) = self.block(l);
        let mut z = vec![0.0; d];
        affine(a, ab, prev, &mut z);
        z.iter_mut().for_each(|v| *v = v.tanh());
        let mut h = vec![0.0; d];
        affine(c, cb, &z, &mut h);
        for (hi, pi) in h.iter_mut().zip(prev) {
            *hi += pi;
        }
        (h, z)
    }

    /// Unsteered forward pass.
    pub fn forward(&self, x: &[f64]) -> Acts {
        let d = self.dims.hidden;
        let xn = self.normalize(x);
        let mut h0 = vec![0.0; d];
        affine(&self.params[..d * self.dims.input], &self.params[d * self.dims.input..d * self.dims.input + d], &xn, &mut h0);
        let mut acts = Acts {
            xn,
            h: vec![h0],
            z: Vec::with_capacity(self.dims.blocks),
            steer: vec![None; self.dims.blocks + 1],
        };
        for l in 1..=self.dims.blocks {
            let (h, z) = self.run_block(l, &acts.h[l - 1]);
            acts.h.push(h);
            acts.z.push(z);
        }
        acts
    }

    /// Re-runs `base` (an unsteered pass) with steering applied after the
    /// residual add of every injected block. Blocks before the first
    /// injection are reused, not recomputed.
    pub fn forward_steered(&self, base: &Acts, plan: &Plan) -> Acts {
        let Some(first) = plan.injections.iter().map(|i| i.block).min() else {
            return base.clone();
        };
        let mut acts = Acts {
            xn: base.xn.clone(),
            h: base.h[..first].to_vec(),
            z: base.z[..first - 1].to_vec(),
            steer: vec![None; self.dims.blocks + 1],
        };
        for l in first..=self.dims.blocks {
            let (mut h, z) = if l == first {
                (base.h[l].clone(), base.z[l - 1].clone())
            } else {
                self.run_block(l, &acts.h[l - 1])
            };
            for inj in plan.injections.iter().filter(|i| i.block == l) {
                let applied = steer_in_place(&mut h, l, inj.share, plan.gamma, &plan.neighbors);
                acts.steer[l] = Some(applied);
            }
            acts.h.push(h);
            acts.z.push(z);
        }
        acts
    }

    /// Backpropagates `g` (gradient w.r.t. the final block output) down to
    /// block `stop` (0 = through the projection). Accumulates parameter
    /// gradients into `pgrad` and diagonal-gamma gradients into `ggrad`.
    pub fn backward(
        &self,
        acts: &Acts,
        gamma: &[f64],
        mut g: Vec<f64>,
        stop: usize,
        mut pgrad: Option<&mut [f64]>,
        mut ggrad: Option<&mut [f64]>,
    ) {
        let d = self.dims.hidden;
        for l in (1..=self.dims.blocks).rev() {
            if let Some(app) = &acts.steer[l] {
                if let Some(gg) = ggrad.as_deref_mut() {
                    for j in 0..d {
                        gg[j] += app.share * app.v[j] * g[j];
                    }
                }
                for j in 0..d {
                    let c = app.share * gamma[j];
                    if c != 0.0 {
                        g[j] *= 1.0 - c * app.wsum;
                    }
                }
            }
            if l == stop {
                return;
            }
            let (a, _, c, _) = self.block(l);
            let o = self.block_offset(l);
            let z = &acts.z[l - 1];
            let prev = &acts.h[l - 1];
            let mut gz = vec![0.0; d];
            match pgrad.as_deref_mut() {
                Some(p) => {
                    let (_, rest) = p.split_at_mut(o);
                    let (da, rest) = rest.split_at_mut(d * d);
                    let (dab, rest) = rest.split_at_mut(d);
                    let (dc, rest) = rest.split_at_mut(d * d);
                    let dcb = &mut rest[..d];
                    affine_backward(c, z, &g, Some((dc, dcb)), Some(&mut gz));
                    for (gi, zi) in gz.iter_mut().zip(z) {
                        *gi *= 1.0 - zi * zi;
                    }
                    affine_backward(a, prev, &gz, Some((da, dab)), Some(&mut g));
                }
                None => {
                    affine_backward(c, z, &g, None, Some(&mut gz));
                    for (gi, zi) in gz.iter_mut().zip(z) {
                        *gi *= 1.0 - zi * zi;
                    }
                    affine_backward(a, prev, &gz, None, Some(&mut g));
                }
            }
        }
        if stop == 0 {
            if let Some(p) = pgrad {
                let n = self.dims.input;
                let (dw, rest) = p.split_at_mut(d * n);
                affine_backward(&self.params[..d * n], &acts.xn, &g, Some((dw, &mut rest[..d])), None);
            }
        }
    }
}

/// `h += share * gamma ⊙ sum_i w_i (n_i - h)`, skipping coordinates whose
/// coefficient is exactly zero so a zero budget leaves `h` bit-identical.
pub fn steer_in_place(h: &mut [f64], block: usize, share: f64, gamma: &[f64], neighbors: &[(f64, &Acts)]) -> Applied {
    let d = h.len();
    let mut v = vec![0.0; d];
    let mut wsum = 0.0;
    for (w, n) in neighbors {
        wsum += w;
        let nh = &n.h[block];
        for j in 0..d {
            v[j] += w * (nh[j] - h[j]);
        }
    }
    for j in 0..d {
        let c = share * gamma[j];
        if c != 0.0 {
            h[j] += c * v[j];
        }
    }
    Applied { share, wsum, v }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub input: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

pub struct HeadActs {
    pub p: Vec<f64>,
    pub y: [f64; 2],
}

impl Head {
    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + 2 * hidden + 2
    }

    pub fn init(input: usize, hidden: usize, bias: [f64; 2], rng: &mut impl Rng) -> Head {
        let mut params = vec![0.0; Self::param_count(input, hidden)];
        xavier(rng, input, hidden, 1.0, &mut params[..hidden * input]);
        let o = hidden * input + hidden;
        xavier(rng, hidden, 2, 1.0, &mut params[o..o + 2 * hidden]);
        params[o + 2 * hidden] = bias[0];
        params[o + 2 * hidden + 1] = bias[1];
        Head { input, hidden, params }
    }

    pub fn forward(&self, h: &[f64]) -> HeadActs {
        let (n, k) = (self.input, self.hidden);
        let p = &self.params;
        let mut hid = vec![0.0; k];
        affine(&p[..k * n], &p[k * n..k * n + k], h, &mut hid);
        hid.iter_mut().for_each(|v| *v = v.tanh());
        let o = k * n + k;
        let mut y = [0.0; 2];
        affine(&p[o..o + 2 * k], &p[o + 2 * k..o + 2 * k + 2], &hid, &mut y);
        HeadActs { p: hid, y }
    }

    /// Accumulates parameter gradients (when `grad` is given) and returns
    /// the gradient w.r.t. the head input.
    pub fn backward(&self, h: &[f64], acts: &HeadActs, gy: [f64; 2], grad: Option<&mut [f64]>) -> Vec<f64> {
        let (n, k) = (self.input, self.hidden);
        let o = k * n + k;
        let mut gp = vec![0.0; k];
        let mut gh = vec![0.0; n];
        match grad {
            Some(grad) => {
                let (g1, rest) = grad.split_at_mut(k * n);
                let (gb1, rest) = rest.split_at_mut(k);
                let (g2, gb2) = rest.split_at_mut(2 * k);
                affine_backward(&self.params[o..o + 2 * k], &acts.p, &gy, Some((g2, gb2)), Some(&mut gp));
                for (g, p) in gp.iter_mut().zip(&acts.p) {
                    *g *= 1.0 - p * p;
                }
                affine_backward(&self.params[..k * n], h, &gp, Some((g1, gb1)), Some(&mut gh));
            }
            None => {
                affine_backward(&self.params[o..o + 2 * k], &acts.p, &gy, None, Some(&mut gp));
                for (g, p) in gp.iter_mut().zip(&acts.p) {
                    *g *= 1.0 - p * p;
                }
                affine_backward(&self.params[..k * n], h, &gp, None, Some(&mut gh));
            }
        }
        gh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_activations() {
        let e = Encoder::zeros(Dims::default());
        let acts = e.forward(&[0.7; 36]);
        assert!(acts.h.iter().all(|h| h.iter().all(|&v| v == 0.0)));
        assert_eq!(acts.h.len(), 9);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..13).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn empty_plan_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = Encoder::init(Dims { hidden: 8, ..Dims::default() }, &mut rng);
        let base = e.forward(&[0.3; 36]);
        let gamma = vec![1.0; 8];
        let plan = Plan {
            injections: &[],
            gamma: &gamma,
            neighbors: vec![],
        };
        assert_eq!(e.forward_steered(&base, &plan), base);
    }
}
