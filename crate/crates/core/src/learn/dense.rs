//! Fully connected ReLU stack over a flat parameter vector.

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Layer widths `[input, hidden.., output]`. Hidden layers use ReLU, the
/// output layer is linear. Each layer's weights are stored row-major as
/// `in × out` followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayout {
    pub sizes: Vec<usize>,
}

impl DenseLayout {
    pub fn new(sizes: Vec<usize>) -> DenseLayout {
        assert!(sizes.len() >= 2, "a dense stack needs input and output widths");
        DenseLayout { sizes }
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Start offsets of (weights, biases) for each layer.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let o = (off, off + w[0] * w[1]);
                off += w[0] * w[1] + w[1];
                o
            })
            .collect()
    }

    fn weights<'a>(&self, params: &'a [f64], l: usize, off: usize) -> ArrayView2<'a, f64> {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        ArrayView2::from_shape((i, o), &params[off..off + i * o]).expect("layout")
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init<R: Rng>(&self, rng: &mut R, params: &mut [f64]) {
        for (l, (w_off, b_off)) in self.offsets().into_iter().enumerate() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let limit = (6.0 / (i + o) as f64).sqrt();
            for p in &mut params[w_off..b_off] {
                *p = rng.random_range(-limit..=limit);
            }
            for p in &mut params[b_off..b_off + o] {
                *p = 0.0;
            }
        }
    }

    /// Returns the activations of every layer, starting with the input.
    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        let last = self.n_layers() - 1;
        for (l, (w_off, b_off)) in self.offsets().into_iter().enumerate() {
            let w = self.weights(params, l, w_off);
            let b = ArrayView1::from(&params[b_off..b_off + self.sizes[l + 1]]);
            let mut z = acts[l].dot(&w) + &b;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, params: &[f64], x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(params, x).pop().expect("output layer")
    }

    /// Accumulates parameter gradients into `grads` given the loss gradient
    /// at the output, and returns the gradient at the input.
    pub fn backward(&self, params: &[f64], acts: &[Array2<f64>], d_out: Array2<f64>, grads: &mut [f64]) -> Array2<f64> {
        let offsets = self.offsets();
        let mut delta = d_out;
        for l in (0..self.n_layers()).rev() {
            let (w_off, b_off) = offsets[l];
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            {
                let (gw, rest) = grads[w_off..].split_at_mut(i * o);
                let mut gw = ArrayViewMut2::from_shape((i, o), gw).expect("layout");
                gw += &acts[l].t().dot(&delta);
                let mut gb = ArrayViewMut1::from(&mut rest[..o]);
                gb += &delta.sum_axis(Axis(0));
                debug_assert_eq!(b_off, w_off + i * o);
            }
            let w = self.weights(params, l, w_off);
            let mut d_prev = delta.dot(&w.t());
            if l > 0 {
                ndarray::Zip::from(&mut d_prev)
                    .and(&acts[l])
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    });
            }
            delta = d_prev;
        }
        delta
    }
}

/// Mean over rows of the squared error summed over columns, and its gradient
/// with respect to `pred`.
pub fn mse_rows(pred: &Array2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let n = pred.nrows().max(1) as f64;
    let diff = pred - &target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}
