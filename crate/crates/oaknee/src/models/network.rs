//! Network architectures built from tensornet kernels, with hand-chained
//! forward/backward passes.
//!
//! Three conv blocks (1->32->64->128 channels, each conv3x3 -> batchnorm ->
//! maxpool2x2 -> relu) shrink a 48x48 patch to 128x6x6 = 4608 features.
//! The descriptor net and the classifier heads are two stacked linears
//! with a relu and dropout between them; without the relu the pair would
//! collapse to a single linear map.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Checkpoint, DataError, TensorRecord};
use crate::tensornet::{
    dropout_backward, dropout_eval, dropout_train, maxpool2x2_backward, maxpool2x2_forward,
    relu_backward, relu_forward, softmax_cross_entropy, BatchNorm2d, BnCache, Conv2d, Linear,
    Scalar, Tensor, TensorError,
};

use super::train::Dataset;
use super::ModelError;

pub const JS2_DIM: usize = 221;
pub const TRUNK_DIM: usize = 128 * 6 * 6;
pub const HIDDEN: usize = 256;
pub const N_CLASSES: usize = 2;
const CONV_CHANNELS: [usize; 4] = [1, 32, 64, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    TinyCnn,
    Js2Net,
    Combined,
}

impl Arch {
    pub fn tag(self) -> &'static str {
        match self {
            Arch::TinyCnn => "cnn",
            Arch::Js2Net => "js2-nn",
            Arch::Combined => "combined",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cnn" => Some(Arch::TinyCnn),
            "js2-nn" => Some(Arch::Js2Net),
            "combined" => Some(Arch::Combined),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvBlock<F> {
    pub conv: Conv2d<F>,
    pub bn: BatchNorm2d<F>,
}

pub struct BlockCache<F> {
    x: Tensor<F>,
    bn_cache: BnCache<F>,
    bn_shape: Vec<usize>,
    argmax: Vec<u32>,
    /// Post-pool pre-activation; its shape is the block's output shape.
    pub pre_relu: Tensor<F>,
}

impl<F: Scalar> ConvBlock<F> {
    fn init(in_ch: usize, out_ch: usize, rng: &mut impl Rng) -> Self {
        ConvBlock {
            conv: Conv2d::init_random(out_ch, in_ch, rng),
            bn: BatchNorm2d::new(out_ch),
        }
    }

    fn forward_train(&mut self, x: &Tensor<F>) -> Result<(Tensor<F>, BlockCache<F>), TensorError> {
        let conv_out = self.conv.forward(x)?;
        let (bn_out, bn_cache) = self.bn.forward_train(&conv_out)?;
        let bn_shape = bn_out.shape.clone();
        let (pooled, argmax) = maxpool2x2_forward(&bn_out)?;
        let y = relu_forward(&pooled);
        Ok((
            y,
            BlockCache {
                x: x.clone(),
                bn_cache,
                bn_shape,
                argmax,
                pre_relu: pooled,
            },
        ))
    }

    fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        let conv_out = self.conv.forward(x)?;
        let bn_out = self.bn.forward_eval(&conv_out)?;
        let (pooled, _) = maxpool2x2_forward(&bn_out)?;
        Ok(relu_forward(&pooled))
    }

    /// Returns (gx, [gw, gb, ggamma, gbeta]).
    fn backward(
        &self,
        cache: &BlockCache<F>,
        gy: &Tensor<F>,
    ) -> Result<(Tensor<F>, Vec<Tensor<F>>), TensorError> {
        let g_pool = relu_backward(&cache.pre_relu, gy);
        let g_bn = maxpool2x2_backward(&cache.bn_shape, &cache.argmax, &g_pool)?;
        let (g_conv, ggamma, gbeta) = self.bn.backward(&cache.bn_cache, &g_bn)?;
        let (gx, gw, gb) = self.conv.backward(&cache.x, &g_conv)?;
        Ok((gx, vec![gw, gb, ggamma, gbeta]))
    }
}

/// Shared two-linear classifier head: fc1 -> relu -> dropout -> fc2.
#[derive(Debug, Clone)]
pub struct Head<F> {
    pub fc1: Linear<F>,
    pub fc2: Linear<F>,
    pub dropout: f64,
}

pub struct HeadCache<F> {
    x: Tensor<F>,
    pre_relu: Tensor<F>,
    mask: Tensor<F>,
    fc2_in: Tensor<F>,
}

impl<F: Scalar> Head<F> {
    fn init(in_dim: usize, dropout: f64, rng: &mut impl Rng) -> Self {
        Head {
            fc1: Linear::init_random(in_dim, HIDDEN, rng),
            fc2: Linear::init_random(HIDDEN, N_CLASSES, rng),
            dropout,
        }
    }

    fn forward_train(
        &self,
        x: &Tensor<F>,
        rng: &mut impl Rng,
    ) -> Result<(Tensor<F>, HeadCache<F>), TensorError> {
        let pre_relu = self.fc1.forward(x)?;
        let hidden = relu_forward(&pre_relu);
        let (fc2_in, mask) = dropout_train(&hidden, self.dropout, rng);
        let logits = self.fc2.forward(&fc2_in)?;
        Ok((
            logits,
            HeadCache {
                x: x.clone(),
                pre_relu,
                mask,
                fc2_in,
            },
        ))
    }

    fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        let hidden = dropout_eval(&relu_forward(&self.fc1.forward(x)?));
        self.fc2.forward(&hidden)
    }

    /// Returns (gx, [gw1, gb1, gw2, gb2]).
    fn backward(
        &self,
        cache: &HeadCache<F>,
        g_logits: &Tensor<F>,
    ) -> Result<(Tensor<F>, Vec<Tensor<F>>), TensorError> {
        let (g_fc2_in, gw2, gb2) = self.fc2.backward(&cache.fc2_in, g_logits)?;
        let g_hidden = dropout_backward(&cache.mask, &g_fc2_in);
        let g_pre = relu_backward(&cache.pre_relu, &g_hidden);
        let (gx, gw1, gb1) = self.fc1.backward(&cache.x, &g_pre)?;
        Ok((gx, vec![gw1, gb1, gw2, gb2]))
    }
}

#[derive(Debug, Clone)]
pub struct TinyCnn<F> {
    pub blocks: Vec<ConvBlock<F>>,
    pub head: Head<F>,
}

#[derive(Debug, Clone)]
pub struct Js2Net<F> {
    pub head: Head<F>,
}

#[derive(Debug, Clone)]
pub struct Combined<F> {
    pub blocks: Vec<ConvBlock<F>>,
    pub head: Head<F>,
}

fn init_blocks<F: Scalar>(rng: &mut impl Rng) -> Vec<ConvBlock<F>> {
    (0..3)
        .map(|i| ConvBlock::init(CONV_CHANNELS[i], CONV_CHANNELS[i + 1], rng))
        .collect()
}

fn trunk_train<F: Scalar>(
    blocks: &mut [ConvBlock<F>],
    x: &Tensor<F>,
) -> Result<(Tensor<F>, Vec<BlockCache<F>>), TensorError> {
    let mut caches = Vec::with_capacity(blocks.len());
    let mut cur = x.clone();
    for b in blocks.iter_mut() {
        let (y, cache) = b.forward_train(&cur)?;
        caches.push(cache);
        cur = y;
    }
    let n = cur.dim(0);
    cur.shape = vec![n, TRUNK_DIM];
    Ok((cur, caches))
}

fn trunk_eval<F: Scalar>(blocks: &[ConvBlock<F>], x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
    let mut cur = x.clone();
    for b in blocks {
        cur = b.forward_eval(&cur)?;
    }
    let n = cur.dim(0);
    cur.shape = vec![n, TRUNK_DIM];
    Ok(cur)
}

fn trunk_backward<F: Scalar>(
    blocks: &[ConvBlock<F>],
    caches: &[BlockCache<F>],
    g_flat: Tensor<F>,
    n: usize,
) -> Result<Vec<Tensor<F>>, TensorError> {
    let mut g = g_flat;
    g.shape = vec![n, 128, 6, 6];
    let mut grads_rev = Vec::new();
    for (b, cache) in blocks.iter().zip(caches).rev() {
        let (gx, pgrads) = b.backward(cache, &g)?;
        grads_rev.push(pgrads);
        g = gx;
    }
    let mut out = Vec::new();
    for pg in grads_rev.into_iter().rev() {
        out.extend(pg);
    }
    Ok(out)
}

pub enum NetCache<F> {
    TinyCnn {
        blocks: Vec<BlockCache<F>>,
        head: HeadCache<F>,
        n: usize,
    },
    Js2Net {
        head: HeadCache<F>,
    },
    Combined {
        blocks: Vec<BlockCache<F>>,
        head: HeadCache<F>,
        n: usize,
    },
}

#[derive(Debug, Clone)]
pub enum Network<F> {
    TinyCnn(TinyCnn<F>),
    Js2Net(Js2Net<F>),
    Combined(Combined<F>),
}

fn concat_rows<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>) -> Tensor<F> {
    let (n, da, db) = (a.dim(0), a.dim(1), b.dim(1));
    let mut out = Tensor::zeros(&[n, da + db]);
    for ni in 0..n {
        out.data[ni * (da + db)..ni * (da + db) + da]
            .copy_from_slice(&a.data[ni * da..(ni + 1) * da]);
        out.data[ni * (da + db) + da..(ni + 1) * (da + db)]
            .copy_from_slice(&b.data[ni * db..(ni + 1) * db]);
    }
    out
}

fn split_rows_left<F: Scalar>(g: &Tensor<F>, da: usize) -> Tensor<F> {
    let (n, d) = (g.dim(0), g.dim(1));
    let mut left = Tensor::zeros(&[n, da]);
    for ni in 0..n {
        left.data[ni * da..(ni + 1) * da].copy_from_slice(&g.data[ni * d..ni * d + da]);
    }
    left
}

impl<F: Scalar> Network<F> {
    pub fn init(arch: Arch, rng: &mut ChaCha8Rng) -> Self {
        match arch {
            Arch::TinyCnn => Network::TinyCnn(TinyCnn {
                blocks: init_blocks(rng),
                head: Head::init(TRUNK_DIM, 0.5, rng),
            }),
            Arch::Js2Net => Network::Js2Net(Js2Net {
                head: Head::init(JS2_DIM, 0.5, rng),
            }),
            Arch::Combined => Network::Combined(Combined {
                blocks: init_blocks(rng),
                head: Head::init(TRUNK_DIM + JS2_DIM, 0.3, rng),
            }),
        }
    }

    pub fn arch(&self) -> Arch {
        match self {
            Network::TinyCnn(_) => Arch::TinyCnn,
            Network::Js2Net(_) => Arch::Js2Net,
            Network::Combined(_) => Arch::Combined,
        }
    }

    pub fn needs_images(&self) -> bool {
        !matches!(self, Network::Js2Net(_))
    }

    pub fn needs_features(&self) -> bool {
        !matches!(self, Network::TinyCnn(_))
    }

    pub fn forward_train(
        &mut self,
        batch: &Dataset<F>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor<F>, NetCache<F>), ModelError> {
        match self {
            Network::TinyCnn(m) => {
                let x = batch.images_checked()?;
                let n = x.dim(0);
                let (flat, blocks) = trunk_train(&mut m.blocks, x)?;
                let (logits, head) = m.head.forward_train(&flat, rng)?;
                Ok((logits, NetCache::TinyCnn { blocks, head, n }))
            }
            Network::Js2Net(m) => {
                let x = batch.features_checked(JS2_DIM)?;
                let (logits, head) = m.head.forward_train(x, rng)?;
                Ok((logits, NetCache::Js2Net { head }))
            }
            Network::Combined(m) => {
                let x = batch.images_checked()?;
                let f = batch.features_checked(JS2_DIM)?;
                let n = x.dim(0);
                let (flat, blocks) = trunk_train(&mut m.blocks, x)?;
                let fused = concat_rows(&flat, f);
                let (logits, head) = m.head.forward_train(&fused, rng)?;
                Ok((logits, NetCache::Combined { blocks, head, n }))
            }
        }
    }

    /// Gradients in the same order as [`Network::params_mut`].
    pub fn backward(
        &self,
        cache: &NetCache<F>,
        g_logits: &Tensor<F>,
    ) -> Result<Vec<Tensor<F>>, ModelError> {
        match (self, cache) {
            (Network::TinyCnn(m), NetCache::TinyCnn { blocks, head, n }) => {
                let (g_flat, head_grads) = m.head.backward(head, g_logits)?;
                let mut grads = trunk_backward(&m.blocks, blocks, g_flat, *n)?;
                grads.extend(head_grads);
                Ok(grads)
            }
            (Network::Js2Net(m), NetCache::Js2Net { head }) => {
                let (_, head_grads) = m.head.backward(head, g_logits)?;
                Ok(head_grads)
            }
            (Network::Combined(m), NetCache::Combined { blocks, head, n }) => {
                let (g_fused, head_grads) = m.head.backward(head, g_logits)?;
                let g_flat = split_rows_left(&g_fused, TRUNK_DIM);
                let mut grads = trunk_backward(&m.blocks, blocks, g_flat, *n)?;
                grads.extend(head_grads);
                Ok(grads)
            }
            _ => Err(ModelError::Invalid("cache does not match architecture".into())),
        }
    }

    pub fn forward_eval(&self, batch: &Dataset<F>) -> Result<Tensor<F>, ModelError> {
        match self {
            Network::TinyCnn(m) => {
                let flat = trunk_eval(&m.blocks, batch.images_checked()?)?;
                Ok(m.head.forward_eval(&flat)?)
            }
            Network::Js2Net(m) => Ok(m.head.forward_eval(batch.features_checked(JS2_DIM)?)?),
            Network::Combined(m) => {
                let flat = trunk_eval(&m.blocks, batch.images_checked()?)?;
                let fused = concat_rows(&flat, batch.features_checked(JS2_DIM)?);
                Ok(m.head.forward_eval(&fused)?)
            }
        }
    }

    /// Softmax class-1 probability per sample, evaluated in chunks.
    pub fn predict_scores(&self, data: &Dataset<F>) -> Result<Vec<f64>, ModelError> {
        let n = data.len();
        let mut scores = Vec::with_capacity(n);
        let chunk = 64;
        let mut start = 0;
        while start < n {
            let idx: Vec<usize> = (start..(start + chunk).min(n)).collect();
            let logits = self.forward_eval(&data.gather(&idx))?;
            for ni in 0..idx.len() {
                let a = logits.data[ni * N_CLASSES].to_f64();
                let b = logits.data[ni * N_CLASSES + 1].to_f64();
                let m = a.max(b);
                let ea = (a - m).exp();
                let eb = (b - m).exp();
                scores.push(eb / (ea + eb));
            }
            start += chunk;
        }
        Ok(scores)
    }

    /// One full forward/backward on a batch; returns the loss and the
    /// parameter gradients.
    pub fn loss_and_grads(
        &mut self,
        batch: &Dataset<F>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(F, Vec<Tensor<F>>), ModelError> {
        let (logits, cache) = self.forward_train(batch, rng)?;
        let (loss, g_logits) = softmax_cross_entropy(&logits, &batch.labels)?;
        let grads = self.backward(&cache, &g_logits)?;
        Ok((loss, grads))
    }

    fn head(&self) -> &Head<F> {
        match self {
            Network::TinyCnn(m) => &m.head,
            Network::Js2Net(m) => &m.head,
            Network::Combined(m) => &m.head,
        }
    }

    fn head_mut(&mut self) -> &mut Head<F> {
        match self {
            Network::TinyCnn(m) => &mut m.head,
            Network::Js2Net(m) => &mut m.head,
            Network::Combined(m) => &mut m.head,
        }
    }

    fn blocks(&self) -> &[ConvBlock<F>] {
        match self {
            Network::TinyCnn(m) => &m.blocks,
            Network::Combined(m) => &m.blocks,
            Network::Js2Net(_) => &[],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out: Vec<&mut Tensor<F>> = Vec::new();
        let (blocks, head): (&mut [ConvBlock<F>], &mut Head<F>) = match self {
            Network::TinyCnn(m) => (&mut m.blocks, &mut m.head),
            Network::Combined(m) => (&mut m.blocks, &mut m.head),
            Network::Js2Net(m) => (&mut [], &mut m.head),
        };
        for b in blocks.iter_mut() {
            out.push(&mut b.conv.weight);
            out.push(&mut b.conv.bias);
            out.push(&mut b.bn.gamma);
            out.push(&mut b.bn.beta);
        }
        out.push(&mut head.fc1.weight);
        out.push(&mut head.fc1.bias);
        out.push(&mut head.fc2.weight);
        out.push(&mut head.fc2.bias);
        out
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for b in self.blocks() {
            out.push(b.conv.weight.shape.clone());
            out.push(b.conv.bias.shape.clone());
            out.push(b.bn.gamma.shape.clone());
            out.push(b.bn.beta.shape.clone());
        }
        let head = self.head();
        out.push(head.fc1.weight.shape.clone());
        out.push(head.fc1.bias.shape.clone());
        out.push(head.fc2.weight.shape.clone());
        out.push(head.fc2.bias.shape.clone());
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.head().dropout
    }
}

impl Network<f32> {
    pub fn to_checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        let mut tensors = Vec::new();
        for (i, b) in self.blocks().iter().enumerate() {
            let p = format!("block{i}");
            tensors.push(rec(&format!("{p}.conv.weight"), &b.conv.weight));
            tensors.push(rec(&format!("{p}.conv.bias"), &b.conv.bias));
            tensors.push(rec(&format!("{p}.bn.gamma"), &b.bn.gamma));
            tensors.push(rec(&format!("{p}.bn.beta"), &b.bn.beta));
            tensors.push(rec(&format!("{p}.bn.running_mean"), &b.bn.running_mean));
            tensors.push(rec(&format!("{p}.bn.running_var"), &b.bn.running_var));
        }
        let head = self.head();
        tensors.push(rec("fc1.weight", &head.fc1.weight));
        tensors.push(rec("fc1.bias", &head.fc1.bias));
        tensors.push(rec("fc2.weight", &head.fc2.weight));
        tensors.push(rec("fc2.bias", &head.fc2.bias));
        let mut meta = meta;
        meta["dropout"] = serde_json::json!(head.dropout);
        Checkpoint {
            arch: self.arch().tag().to_string(),
            meta,
            tensors,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, DataError> {
        let arch = Arch::from_tag(&ck.arch)
            .ok_or_else(|| DataError::CheckpointError(format!("unknown arch '{}'", ck.arch)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let mut net = Network::init(arch, &mut rng);
        let dropout = ck.meta["dropout"].as_f64().unwrap_or(net.dropout_rate());
        net.head_mut().dropout = dropout;

        let n_blocks = net.blocks().len();
        let blocks: &mut [ConvBlock<f32>] = match &mut net {
            Network::TinyCnn(m) => &mut m.blocks,
            Network::Combined(m) => &mut m.blocks,
            Network::Js2Net(_) => &mut [],
        };
        for i in 0..n_blocks {
            let p = format!("block{i}");
            load(ck, &format!("{p}.conv.weight"), &mut blocks[i].conv.weight)?;
            load(ck, &format!("{p}.conv.bias"), &mut blocks[i].conv.bias)?;
            load(ck, &format!("{p}.bn.gamma"), &mut blocks[i].bn.gamma)?;
            load(ck, &format!("{p}.bn.beta"), &mut blocks[i].bn.beta)?;
            load(ck, &format!("{p}.bn.running_mean"), &mut blocks[i].bn.running_mean)?;
            load(ck, &format!("{p}.bn.running_var"), &mut blocks[i].bn.running_var)?;
        }
        let head = net.head_mut();
        load(ck, "fc1.weight", &mut head.fc1.weight)?;
        load(ck, "fc1.bias", &mut head.fc1.bias)?;
        load(ck, "fc2.weight", &mut head.fc2.weight)?;
        load(ck, "fc2.bias", &mut head.fc2.bias)?;
        Ok(net)
    }
}

fn rec(name: &str, t: &Tensor<f32>) -> TensorRecord {
    TensorRecord {
        name: name.to_string(),
        tensor: t.clone(),
    }
}

fn load(ck: &Checkpoint, name: &str, dst: &mut Tensor<f32>) -> Result<(), DataError> {
    let src = ck.tensor(name)?;
    if src.shape != dst.shape {
        return Err(DataError::CheckpointError(format!(
            "tensor '{name}' has shape {:?}, expected {:?}",
            src.shape, dst.shape
        )));
    }
    dst.data.copy_from_slice(&src.data);
    Ok(())
}


/// Central finite-difference check of the full TinyCnn backward in f64,
/// sampling a handful of coordinates per parameter tensor (the full
/// 1.25M-parameter sweep would take hours). Dropout is disabled so the
/// loss is a deterministic function of the parameters.
pub fn composite_gradcheck(n_seeds: u64) -> crate::tensornet::GradCheckEntry {
    use crate::tensornet::gradcheck::FD_EPS;
    use rand::SeedableRng;

    let mut worst = 0.0f64;
    for seed in 0..n_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut net = Network::<f64>::init(Arch::TinyCnn, &mut rng);
        if let Network::TinyCnn(m) = &mut net {
            m.head.dropout = 0.0;
        }
        let n = 2;
        let mut x = Tensor::<f64>::zeros(&[n, 1, 48, 48]);
        for v in x.data.iter_mut() {
            *v = rng.random::<f64>() - 0.5;
        }
        let batch = Dataset {
            images: Some(x),
            features: None,
            labels: (0..n).map(|i| (i % 2) as u8).collect(),
        };

        // Train-mode loss as a pure function of one perturbed parameter;
        // each probe clones the pristine network, so the running-stat
        // updates inside forward_train never leak between evaluations.
        let snapshot = net.clone();
        let loss_at = |pi: usize, idx: usize, v: f64| -> f64 {
            let mut probe = snapshot.clone();
            probe.params_mut()[pi].data[idx] = v;
            let mut r = ChaCha8Rng::seed_from_u64(0);
            let (logits, _) = probe.forward_train(&batch, &mut r).unwrap();
            softmax_cross_entropy(&logits, &batch.labels).unwrap().0
        };

        let mut work = snapshot.clone();
        let mut fd_rng = ChaCha8Rng::seed_from_u64(0);
        let (_, grads) = work.loss_and_grads(&batch, &mut fd_rng).unwrap();

        let shapes = snapshot.param_shapes();
        for (pi, shape) in shapes.iter().enumerate() {
            let len: usize = shape.iter().product();
            for k in 0..3.min(len) {
                let idx = if len <= 3 { k } else { rng.random_range(0..len) };
                let orig = {
                    let mut c = snapshot.clone();
                    c.params_mut()[pi].data[idx]
                };
                let analytic = grads[pi].data[idx];
                // A relu or pool unit sitting within eps of its threshold
                // corrupts the central difference even when the analytic
                // gradient is exact. Shrinking eps moves the probe off the
                // kink; a real gradient bug keeps failing at every eps.
                let mut rel = f64::INFINITY;
                for eps in [FD_EPS, FD_EPS / 8.0, FD_EPS / 64.0] {
                    let numeric =
                        (loss_at(pi, idx, orig + eps) - loss_at(pi, idx, orig - eps))
                            / (2.0 * eps);
                    rel = rel.min(
                        (analytic - numeric).abs()
                            / analytic.abs().max(numeric.abs()).max(1.0),
                    );
                    if rel < 1e-5 {
                        break;
                    }
                }
                worst = worst.max(rel);
            }
        }
    }
    crate::tensornet::GradCheckEntry {
        name: "tiny_cnn_composite".into(),
        max_rel_err: worst,
        tolerance: 1e-4,
    }
}
