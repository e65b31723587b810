//! TrajCNN: convolutional blocks over the trajectory image, fused with the
//! flight feature vector and followed by a dense head with six outputs.
//!
//! Each block is a 3×3 convolution with 'same' zero padding and stride 1,
//! ReLU, then 2×2 max-pooling with stride 2 (odd sizes round down), so two
//! blocks map 28×28 to 7×7. Feature maps are stored row-major with the
//! channel innermost.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{mse_rows, DenseLayout};
use super::nn::{train_adam, LoopSettings, TrainingLog};
use super::{rmse, CnnConfig, Standardizer};
use crate::ingest::LabelVector;
use crate::raster::{CHANNELS, GRID, PIXELS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    /// Input height and width.
    pub size: usize,
    pub in_ch: usize,
    pub out_ch: usize,
}

impl ConvBlock {
    pub fn out_size(&self) -> usize {
        self.size / 2
    }

    fn n_weights(&self) -> usize {
        self.out_ch * self.in_ch * 9
    }

    fn n_params(&self) -> usize {
        self.n_weights() + self.out_ch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajCnnModel {
    pub blocks: Vec<ConvBlock>,
    pub head: DenseLayout,
    #[serde(with = "super::serialize::f64_base64")]
    pub params: Vec<f64>,
    pub input: Standardizer,
    pub target: Standardizer,
}

/// Intermediate values of one sample's convolutional pass.
struct ConvTrace {
    /// Input of each block.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation convolution output of each block.
    pre: Vec<Vec<f64>>,
    /// For each pooled value, the index in `pre` it was taken from.
    argmax: Vec<Vec<usize>>,
}

/// Same-padded 3×3 convolution. `w` is `[out][in][3][3]`, followed by `out`
/// biases in `b`.
pub(crate) fn conv3x3(block: &ConvBlock, w: &[f64], b: &[f64], input: &[f64]) -> Vec<f64> {
    let (s, ci, co) = (block.size, block.in_ch, block.out_ch);
    let mut out = vec![0.0; s * s * co];
    for r in 0..s {
        for c in 0..s {
            for o in 0..co {
                let mut acc = b[o];
                for dr in 0..3 {
                    let rr = r as isize + dr as isize - 1;
                    if rr < 0 || rr >= s as isize {
                        continue;
                    }
                    for dc in 0..3 {
                        let cc = c as isize + dc as isize - 1;
                        if cc < 0 || cc >= s as isize {
                            continue;
                        }
                        let base = (rr as usize * s + cc as usize) * ci;
                        for i in 0..ci {
                            acc += w[((o * ci + i) * 3 + dr) * 3 + dc] * input[base + i];
                        }
                    }
                }
                out[(r * s + c) * co + o] = acc;
            }
        }
    }
    out
}

/// ReLU followed by 2×2 max-pooling. Returns pooled values and the source
/// index of each; ties go to the first position in row-major order.
pub(crate) fn relu_maxpool(pre: &[f64], size: usize, ch: usize) -> (Vec<f64>, Vec<usize>) {
    let half = size / 2;
    let mut out = vec![0.0; half * half * ch];
    let mut arg = vec![0; half * half * ch];
    for pr in 0..half {
        for pc in 0..half {
            for o in 0..ch {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0;
                for a in 0..2 {
                    for b in 0..2 {
                        let i = ((2 * pr + a) * size + 2 * pc + b) * ch + o;
                        let v = pre[i].max(0.0);
                        if v > best {
                            best = v;
                            best_i = i;
                        }
                    }
                }
                out[(pr * half + pc) * ch + o] = best;
                arg[(pr * half + pc) * ch + o] = best_i;
            }
        }
    }
    (out, arg)
}

impl TrajCnnModel {
    /// Builds the architecture for `n_features` flight features and `n_out`
    /// outputs, Glorot-initialized from `seed`.
    pub fn init(n_features: usize, n_out: usize, config: &CnnConfig, seed: u64) -> Result<TrajCnnModel> {
        if config.n_conv_layer == 0 || config.n_conv == 0 {
            return Err(Error::Config("TrajCNN needs at least one convolution block and filter".into()));
        }
        let mut blocks = Vec::new();
        let mut size = GRID;
        let mut ch = CHANNELS;
        for _ in 0..config.n_conv_layer {
            if size < 2 {
                return Err(Error::Config(format!(
                    "{} pooling blocks do not fit a {GRID}x{GRID} image",
                    config.n_conv_layer
                )));
            }
            blocks.push(ConvBlock {
                size,
                in_ch: ch,
                out_ch: config.n_conv,
            });
            size /= 2;
            ch = config.n_conv;
        }
        let flat = size * size * ch;
        let mut sizes = vec![flat + n_features];
        sizes.extend(std::iter::repeat_n(config.n_fc, config.n_fc_layer));
        sizes.push(n_out);
        let head = DenseLayout::new(sizes);
        let conv_params: usize = blocks.iter().map(ConvBlock::n_params).sum();
        let mut params = vec![0.0; conv_params + head.n_params()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for blk in &blocks {
            let fan = 9.0 * (blk.in_ch + blk.out_ch) as f64;
            let limit = (6.0 / fan).sqrt();
            for p in &mut params[off..off + blk.n_weights()] {
                *p = rng.random_range(-limit..=limit);
            }
            off += blk.n_params();
        }
        head.init(&mut rng, &mut params[conv_params..]);
        Ok(TrajCnnModel {
            blocks,
            head,
            params,
            input: Standardizer::identity(n_features),
            target: Standardizer::identity(n_out),
        })
    }

    /// Length of the flattened convolutional output.
    pub fn flat_len(&self) -> usize {
        let last = self.blocks.last().expect("at least one block");
        last.out_size() * last.out_size() * last.out_ch
    }

    fn conv_param_len(&self) -> usize {
        self.blocks.iter().map(ConvBlock::n_params).sum()
    }

    fn conv_forward(&self, params: &[f64], image: &[f64]) -> (Vec<f64>, ConvTrace) {
        let mut trace = ConvTrace {
            inputs: Vec::with_capacity(self.blocks.len()),
            pre: Vec::with_capacity(self.blocks.len()),
            argmax: Vec::with_capacity(self.blocks.len()),
        };
        let mut x = image.to_vec();
        let mut off = 0;
        for blk in &self.blocks {
            let w = &params[off..off + blk.n_weights()];
            let b = &params[off + blk.n_weights()..off + blk.n_params()];
            let pre = conv3x3(blk, w, b, &x);
            let (pooled, arg) = relu_maxpool(&pre, blk.size, blk.out_ch);
            trace.inputs.push(std::mem::replace(&mut x, pooled));
            trace.pre.push(pre);
            trace.argmax.push(arg);
            off += blk.n_params();
        }
        (x, trace)
    }

    fn conv_backward(&self, params: &[f64], trace: &ConvTrace, d_flat: &[f64], grads: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for blk in &self.blocks {
            offsets.push(off);
            off += blk.n_params();
        }
        let mut d_out = d_flat.to_vec();
        for (l, blk) in self.blocks.iter().enumerate().rev() {
            let (s, ci, co) = (blk.size, blk.in_ch, blk.out_ch);
            let pre = &trace.pre[l];
            let mut d_pre = vec![0.0; pre.len()];
            for (k, &src) in trace.argmax[l].iter().enumerate() {
                if pre[src] > 0.0 {
                    d_pre[src] += d_out[k];
                }
            }
            let input = &trace.inputs[l];
            let w_off = offsets[l];
            let b_off = w_off + blk.n_weights();
            let need_input_grad = l > 0;
            let mut d_in = if need_input_grad { vec![0.0; input.len()] } else { Vec::new() };
            for r in 0..s {
                for c in 0..s {
                    for o in 0..co {
                        let g = d_pre[(r * s + c) * co + o];
                        if g == 0.0 {
                            continue;
                        }
                        grads[b_off + o] += g;
                        for dr in 0..3 {
                            let rr = r as isize + dr as isize - 1;
                            if rr < 0 || rr >= s as isize {
                                continue;
                            }
                            for dc in 0..3 {
                                let cc = c as isize + dc as isize - 1;
                                if cc < 0 || cc >= s as isize {
                                    continue;
                                }
                                let base = (rr as usize * s + cc as usize) * ci;
                                for i in 0..ci {
                                    let wi = w_off + ((o * ci + i) * 3 + dr) * 3 + dc;
                                    grads[wi] += g * input[base + i];
                                    if need_input_grad {
                                        d_in[base + i] += g * params[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            d_out = d_in;
        }
    }

    fn fused(&self, params: &[f64], images: ArrayView2<f64>, xz: ArrayView2<f64>) -> (Array2<f64>, Vec<ConvTrace>) {
        let n = images.nrows();
        let flat = self.flat_len();
        let mut conv_out = Array2::zeros((n, flat));
        let mut traces = Vec::with_capacity(n);
        for (i, img) in images.rows().into_iter().enumerate() {
            let img = img.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| img.to_vec());
            let (out, trace) = self.conv_forward(params, &img);
            conv_out.row_mut(i).assign(&ndarray::ArrayView1::from(&out));
            traces.push(trace);
        }
        (concatenate![Axis(1), conv_out, xz], traces)
    }

    /// Loss on scaled features and targets; gradient accumulated into `grads`.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        images: ArrayView2<f64>,
        xz: ArrayView2<f64>,
        yz: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> f64 {
        let split = self.conv_param_len();
        let (fused, traces) = self.fused(params, images, xz);
        let acts = self.head.forward(&params[split..], fused.view());
        let (loss, d_out) = mse_rows(acts.last().expect("output"), yz);
        let (conv_grads, head_grads) = grads.split_at_mut(split);
        let d_in = self.head.backward(&params[split..], &acts, d_out, head_grads);
        let flat = self.flat_len();
        for (i, trace) in traces.iter().enumerate() {
            let d_flat: Vec<f64> = d_in.row(i).iter().take(flat).copied().collect();
            self.conv_backward(params, trace, &d_flat, conv_grads);
        }
        loss
    }

    pub fn loss(&self, params: &[f64], images: ArrayView2<f64>, xz: ArrayView2<f64>, yz: ArrayView2<f64>) -> f64 {
        let split = self.conv_param_len();
        let (fused, _) = self.fused(params, images, xz);
        mse_rows(&self.head.predict(&params[split..], fused.view()), yz).0
    }

    fn predict_scaled(&self, params: &[f64], images: ArrayView2<f64>, xz: ArrayView2<f64>) -> Array2<f64> {
        let split = self.conv_param_len();
        let (fused, _) = self.fused(params, images, xz);
        self.head.predict(&params[split..], fused.view())
    }

    /// Predictions in original units, one column per label.
    pub fn predict(&self, images: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_rows(images, x)?;
        if x.ncols() != self.input.dim() {
            return Err(Error::Dimension {
                expected: self.input.dim(),
                got: x.ncols(),
            });
        }
        let z = self.predict_scaled(&self.params, images, self.input.transform(x).view());
        Ok(self.target.inverse(z.view()))
    }
}

fn check_rows(images: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<()> {
    if images.nrows() != x.nrows() {
        return Err(Error::Contract(format!(
            "{} images for {} feature rows",
            images.nrows(),
            x.nrows()
        )));
    }
    if images.ncols() != PIXELS {
        return Err(Error::Dimension {
            expected: PIXELS,
            got: images.ncols(),
        });
    }
    Ok(())
}

/// Training data for TrajCNN: scaled images (`rows × 2352`), flight features
/// and six-column targets.
#[derive(Debug, Clone, Copy)]
pub struct CnnData<'a> {
    pub images: ArrayView2<'a, f64>,
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView2<'a, f64>,
}

pub fn fit_trajcnn(
    train: CnnData<'_>,
    valid: Option<CnnData<'_>>,
    config: &CnnConfig,
    seed: u64,
) -> Result<(TrajCnnModel, TrainingLog)> {
    check_rows(train.images, train.x)?;
    if train.y.nrows() != train.x.nrows() || train.x.nrows() == 0 {
        return Err(Error::Contract("TrajCNN targets must align with nonempty feature rows".into()));
    }
    if let Some(v) = valid {
        check_rows(v.images, v.x)?;
    }
    let mut model = TrajCnnModel::init(train.x.ncols(), train.y.ncols(), config, seed)?;
    model.input = Standardizer::fit(train.x);
    let t = Standardizer::fit(train.y);
    model.target = Standardizer {
        std: t.std.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect(),
        ..t
    };
    let xz = model.input.transform(train.x);
    let yz = model.target.transform(train.y);
    let total = if train.y.ncols() == LabelVector::NAMES.len() { LabelVector::TOTAL } else { train.y.ncols() - 1 };
    let valid = valid.map(|v| (v.images, model.input.transform(v.x), v.y.column(total).to_vec()));
    let settings = LoopSettings {
        n_train: train.x.nrows(),
        batch_size: config.batch_size,
        n_epoch: config.n_epoch,
        patience: config.patience,
        lr: config.learning_rate,
        seed,
    };
    let (params, log) = {
        let m = &model;
        train_adam(
            model.params.clone(),
            &settings,
            |p, batch, g| {
                let bi = train.images.select(Axis(0), batch);
                let bx = xz.select(Axis(0), batch);
                let by = yz.select(Axis(0), batch);
                m.loss_and_grad(p, bi.view(), bx.view(), by.view(), g)
            },
            |p| {
                let (vi, vx, vy) = valid.as_ref()?;
                let z = m.predict_scaled(p, *vi, vx.view());
                let pred = m.target.inverse(z.view());
                rmse(&pred.column(total).to_vec(), vy).ok()
            },
        )?
    };
    model.params = params;
    Ok((model, log))
}
