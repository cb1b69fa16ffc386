use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{par, seed, Error, Result};

/// Layer sizes. The default chain for a 30×30 input is
/// conv 3×3 → 28×28×16, pool → 14×14×16, flatten 3136, dense 32, dense classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub conv_channels: usize,
    pub kernel: usize,
    pub pool: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub dropout: f64,
    /// Apply ReLU to the output logits before the log-softmax.
    #[serde(default)]
    pub output_relu: bool,
}

impl ModelSpec {
    pub fn new(in_channels: usize, n_classes: usize) -> Self {
        ModelSpec {
            in_channels,
            height: 30,
            width: 30,
            conv_channels: 16,
            kernel: 3,
            pool: 2,
            hidden: 32,
            n_classes,
            dropout: 0.2,
            output_relu: false,
        }
    }

    pub fn with_input(mut self, height: usize, width: usize) -> Self {
        self.height = height;
        self.width = width;
        self
    }

    pub fn conv_out(&self) -> (usize, usize) {
        (self.height + 1 - self.kernel, self.width + 1 - self.kernel)
    }

    pub fn pooled(&self) -> (usize, usize) {
        let (h, w) = self.conv_out();
        (h / self.pool, w / self.pool)
    }

    pub fn flat(&self) -> usize {
        let (h, w) = self.pooled();
        self.conv_channels * h * w
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        vec![
            vec![self.conv_channels, self.in_channels, self.kernel, self.kernel],
            vec![self.conv_channels],
            vec![self.hidden, self.flat()],
            vec![self.hidden],
            vec![self.n_classes, self.hidden],
            vec![self.n_classes],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.in_channels,
            self.conv_channels,
            self.kernel,
            self.pool,
            self.hidden,
        ];
        if positive.contains(&0) {
            return Err(Error::Config("model sizes must be positive".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", self.n_classes)));
        }
        if self.kernel > self.height || self.kernel > self.width {
            return Err(Error::Config(format!(
                "{}×{} kernel does not fit a {}×{} input",
                self.kernel, self.kernel, self.height, self.width
            )));
        }
        if self.flat() == 0 {
            return Err(Error::Config("pooling leaves no features".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

pub const PARAM_NAMES: [&str; 6] = ["conv.weight", "conv.bias", "dense1.weight", "dense1.bias", "dense2.weight", "dense2.bias"];

const CONV_W: usize = 0;
const CONV_B: usize = 1;
const D1_W: usize = 2;
const D1_B: usize = 3;
const D2_W: usize = 4;
const D2_B: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: Vec<Tensor>,
    #[serde(skip)]
    version: u64,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params
    }
}

#[derive(Clone, Debug)]
struct SampleCache {
    x: Vec<f64>,
    z1: Vec<f64>,
    argmax: Vec<usize>,
    m1: Vec<f64>,
    f: Vec<f64>,
    z2: Vec<f64>,
    m2: Vec<f64>,
    g: Vec<f64>,
    z3: Vec<f64>,
    logp: Vec<f64>,
}

/// Intermediate values of one forward pass, consumed by [`Model::backward`].
#[derive(Clone, Debug)]
pub struct Cache {
    samples: Vec<SampleCache>,
    version: u64,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn dropout_mask(n: usize, p: f64, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// `out[o] = b[o] + Σ_i w[o, i]·x[i]`
fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .zip(w.chunks_exact(x.len()))
        .map(|(&b, row)| b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
        .collect()
}

impl Model {
    /// Uniform `±1/√fan_in` initialisation.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(seed);
        let fans = [
            spec.in_channels * spec.kernel * spec.kernel,
            spec.in_channels * spec.kernel * spec.kernel,
            spec.flat(),
            spec.flat(),
            spec.hidden,
            spec.hidden,
        ];
        let params = spec
            .param_shapes()
            .into_iter()
            .zip(fans)
            .map(|(shape, fan)| {
                let bound = 1.0 / (fan as f64).sqrt();
                let mut t = Tensor::zeros(shape);
                for v in t.data_mut() {
                    *v = rng.gen_range(-bound..bound);
                }
                t
            })
            .collect();
        Ok(Model { spec, params, version: 0 })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let params = spec.param_shapes().into_iter().map(Tensor::zeros).collect();
        Ok(Model { spec, params, version: 0 })
    }

    /// Checks parameter shapes against `self.spec`, e.g. after deserialising.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let shapes = self.spec.param_shapes();
        if self.params.len() != shapes.len()
            || self.params.iter().zip(&shapes).any(|(p, s)| p.shape() != s.as_slice())
        {
            return Err(Error::Data("model parameters do not match the model spec".into()));
        }
        if !self.params.iter().all(Tensor::all_finite) {
            return Err(Error::Numeric("model has non-finite parameters".into()));
        }
        Ok(())
    }

    /// Marks cached activations as stale after an in-place parameter update.
    pub fn touch(&mut self) {
        self.version += 1;
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        self.version += 1;
        &mut self.params
    }

    fn forward_sample(&self, x: &[f64], mask_seed: Option<u64>) -> SampleCache {
        let s = &self.spec;
        let (ch, cw) = s.conv_out();
        let (ph, pw) = s.pooled();
        let k = s.kernel;
        let (w, b) = (self.params[CONV_W].data(), self.params[CONV_B].data());

        let mut z1 = vec![0.0; s.conv_channels * ch * cw];
        for o in 0..s.conv_channels {
            let out = &mut z1[o * ch * cw..(o + 1) * ch * cw];
            out.fill(b[o]);
            for i in 0..s.in_channels {
                let plane = &x[i * s.height * s.width..(i + 1) * s.height * s.width];
                for u in 0..k {
                    for v in 0..k {
                        let wt = w[((o * s.in_channels + i) * k + u) * k + v];
                        for r in 0..ch {
                            let src = &plane[(r + u) * s.width + v..(r + u) * s.width + v + cw];
                            for (acc, &px) in out[r * cw..(r + 1) * cw].iter_mut().zip(src) {
                                *acc += wt * px;
                            }
                        }
                    }
                }
            }
        }

        let mut pooled = vec![0.0; s.conv_channels * ph * pw];
        let mut argmax = vec![0usize; pooled.len()];
        for o in 0..s.conv_channels {
            for r in 0..ph {
                for c in 0..pw {
                    let mut best = usize::MAX;
                    let mut best_v = f64::NEG_INFINITY;
                    for u in 0..s.pool {
                        for v in 0..s.pool {
                            let idx = (o * ch + r * s.pool + u) * cw + c * s.pool + v;
                            let a = relu(z1[idx]);
                            if a > best_v {
                                best_v = a;
                                best = idx;
                            }
                        }
                    }
                    let j = (o * ph + r) * pw + c;
                    pooled[j] = best_v;
                    argmax[j] = best;
                }
            }
        }

        let mut rng = mask_seed.map(seed::rng);
        let active = s.dropout > 0.0;
        let m1 = match rng.as_mut() {
            Some(r) if active => dropout_mask(pooled.len(), s.dropout, r),
            _ => Vec::new(),
        };
        let f = if m1.is_empty() { pooled } else { pooled.iter().zip(&m1).map(|(a, m)| a * m).collect() };

        let z2 = dense(self.params[D1_W].data(), self.params[D1_B].data(), &f);
        let m2 = match rng.as_mut() {
            Some(r) if active => dropout_mask(z2.len(), s.dropout, r),
            _ => Vec::new(),
        };
        let g: Vec<f64> = if m2.is_empty() {
            z2.iter().map(|&z| relu(z)).collect()
        } else {
            z2.iter().zip(&m2).map(|(&z, m)| relu(z) * m).collect()
        };

        let z3 = dense(self.params[D2_W].data(), self.params[D2_B].data(), &g);
        let logp = if s.output_relu {
            log_softmax(&z3.iter().map(|&z| relu(z)).collect::<Vec<_>>())
        } else {
            log_softmax(&z3)
        };
        SampleCache {
            x: x.to_vec(),
            z1,
            argmax,
            m1,
            f,
            z2,
            m2,
            g,
            z3,
            logp,
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let s = &self.spec;
        match batch.shape() {
            &[n, c, h, w] if c == s.in_channels && h == s.height && w == s.width => Ok(n),
            other => Err(Error::Data(format!(
                "batch shape {other:?} does not match model input (_, {}, {}, {})",
                s.in_channels, s.height, s.width
            ))),
        }
    }

    /// Log-probabilities `(batch, n_classes)`. In train mode sample `i` draws
    /// its dropout masks from a stream derived from `(mask_seed, i)`.
    pub fn forward(&self, batch: &Tensor, mode: Mode, mask_seed: u64) -> Result<(Tensor, Cache)> {
        let n = self.check_batch(batch)?;
        let per = self.spec.input_len();
        let samples: Vec<SampleCache> = par::map_range(n, |i| {
            let seed = (mode == Mode::Train).then(|| seed::mix(mask_seed, i as u64));
            self.forward_sample(&batch.data()[i * per..(i + 1) * per], seed)
        });
        let mut out = Vec::with_capacity(n * self.spec.n_classes);
        for c in &samples {
            out.extend_from_slice(&c.logp);
        }
        let out = Tensor::new(vec![n, self.spec.n_classes], out)?;
        if !out.all_finite() {
            return Err(Error::Numeric("forward pass produced non-finite values".into()));
        }
        Ok((out, Cache { samples, version: self.version }))
    }

    /// Mean NLL loss of a cached forward pass.
    pub fn loss(&self, cache: &Cache, targets: &[usize]) -> Result<f64> {
        self.check_targets(cache, targets)?;
        let n = targets.len() as f64;
        Ok(cache.samples.iter().zip(targets).map(|(c, &t)| -c.logp[t]).sum::<f64>() / n)
    }

    fn check_targets(&self, cache: &Cache, targets: &[usize]) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::Data("stale cache: parameters changed since the forward pass".into()));
        }
        if targets.len() != cache.samples.len() {
            return Err(Error::Data(format!(
                "{} targets for a batch of {}",
                targets.len(),
                cache.samples.len()
            )));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= self.spec.n_classes) {
            return Err(Error::Data(format!("label {t} out of range for {} classes", self.spec.n_classes)));
        }
        if cache.samples.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        Ok(())
    }

    fn backward_sample(&self, c: &SampleCache, target: usize, scale: f64) -> Vec<Vec<f64>> {
        let s = &self.spec;
        let (ch, cw) = s.conv_out();
        let k = s.kernel;
        let mut grads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();

        let mut dz3: Vec<f64> = c.logp.iter().map(|lp| lp.exp() * scale).collect();
        dz3[target] -= scale;
        if s.output_relu {
            for (d, &z) in dz3.iter_mut().zip(&c.z3) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
        }

        let hidden = s.hidden;
        let w2 = self.params[D2_W].data();
        let mut dg = vec![0.0; hidden];
        for (o, &d) in dz3.iter().enumerate() {
            grads[D2_B][o] = d;
            let row = &mut grads[D2_W][o * hidden..(o + 1) * hidden];
            for ((gw, &g), (dgj, &w)) in row.iter_mut().zip(&c.g).zip(dg.iter_mut().zip(&w2[o * hidden..])) {
                *gw = d * g;
                *dgj += d * w;
            }
        }

        let dz2: Vec<f64> = (0..hidden)
            .map(|j| {
                let m = if c.m2.is_empty() { 1.0 } else { c.m2[j] };
                if c.z2[j] > 0.0 {
                    dg[j] * m
                } else {
                    0.0
                }
            })
            .collect();

        let flat = c.f.len();
        let w1 = self.params[D1_W].data();
        let mut df = vec![0.0; flat];
        for (j, &d) in dz2.iter().enumerate() {
            grads[D1_B][j] = d;
            if d == 0.0 {
                continue;
            }
            let row = &mut grads[D1_W][j * flat..(j + 1) * flat];
            for ((gw, &f), (dfi, &w)) in row.iter_mut().zip(&c.f).zip(df.iter_mut().zip(&w1[j * flat..])) {
                *gw = d * f;
                *dfi += d * w;
            }
        }

        let mut dz1 = vec![0.0; c.z1.len()];
        for (j, &d) in df.iter().enumerate() {
            let d = if c.m1.is_empty() { d } else { d * c.m1[j] };
            let idx = c.argmax[j];
            if c.z1[idx] > 0.0 {
                dz1[idx] += d;
            }
        }

        for o in 0..s.conv_channels {
            let dplane = &dz1[o * ch * cw..(o + 1) * ch * cw];
            grads[CONV_B][o] = dplane.iter().sum();
            for i in 0..s.in_channels {
                let plane = &c.x[i * s.height * s.width..(i + 1) * s.height * s.width];
                for u in 0..k {
                    for v in 0..k {
                        let mut acc = 0.0;
                        for r in 0..ch {
                            let src = &plane[(r + u) * s.width + v..(r + u) * s.width + v + cw];
                            acc += dplane[r * cw..(r + 1) * cw].iter().zip(src).map(|(d, x)| d * x).sum::<f64>();
                        }
                        grads[CONV_W][((o * s.in_channels + i) * k + u) * k + v] = acc;
                    }
                }
            }
        }
        grads
    }

    /// Gradients of the mean NLL loss with respect to every parameter tensor.
    pub fn backward(&self, cache: &Cache, targets: &[usize]) -> Result<Vec<Tensor>> {
        self.check_targets(cache, targets)?;
        let scale = 1.0 / targets.len() as f64;
        let idx: Vec<usize> = (0..targets.len()).collect();
        let per_sample = par::map(&idx, |&i| self.backward_sample(&cache.samples[i], targets[i], scale));
        let mut total: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        for g in per_sample {
            for (t, g) in total.iter_mut().zip(g) {
                for (t, g) in t.iter_mut().zip(g) {
                    *t += g;
                }
            }
        }
        let grads = self
            .params
            .iter()
            .zip(total)
            .map(|(p, g)| Tensor::new(p.shape().to_vec(), g))
            .collect::<Result<Vec<_>>>()?;
        if !grads.iter().all(Tensor::all_finite) {
            return Err(Error::Numeric("backward pass produced non-finite gradients".into()));
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tiny(dropout: f64, output_relu: bool) -> ModelSpec {
        ModelSpec {
            in_channels: 2,
            height: 4,
            width: 4,
            conv_channels: 2,
            kernel: 3,
            pool: 2,
            hidden: 3,
            n_classes: 3,
            dropout,
            output_relu,
        }
    }

    fn random_batch(spec: &ModelSpec, n: usize, seed: u64) -> Tensor {
        let mut rng = seed::rng(seed);
        let data = (0..n * spec.input_len()).map(|_| rng.gen::<f64>()).collect();
        Tensor::new(vec![n, spec.in_channels, spec.height, spec.width], data).unwrap()
    }

    fn max_relative_error(model: &Model, batch: &Tensor, targets: &[usize], mask_seed: u64) -> f64 {
        let (_, cache) = model.forward(batch, Mode::Train, mask_seed).unwrap();
        let grads = model.backward(&cache, targets).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (p, g) in grads.iter().enumerate() {
            for j in 0..g.len() {
                let mut plus = model.clone();
                plus.params[p].data_mut()[j] += h;
                let mut minus = model.clone();
                minus.params[p].data_mut()[j] -= h;
                let lp = plus.loss(&plus.forward(batch, Mode::Train, mask_seed).unwrap().1, targets).unwrap();
                let lm = minus.loss(&minus.forward(batch, Mode::Train, mask_seed).unwrap().1, targets).unwrap();
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = g.data()[j];
                let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn default_shape_chain() {
        let s = ModelSpec::new(1, 2);
        assert_eq!(s.conv_out(), (28, 28));
        assert_eq!(s.pooled(), (14, 14));
        assert_eq!(s.flat(), 3136);
        let m = Model::init(s, 0).unwrap();
        assert_eq!(m.params[D1_W].shape(), &[32, 3136]);
        let (out, _) = m.forward(&Tensor::zeros(vec![2, 1, 30, 30]), Mode::Eval, 0).unwrap();
        assert_eq!(out.shape(), &[2, 2]);
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = Model::zeros(ModelSpec::new(8, 7)).unwrap();
        let (out, _) = m.forward(&Tensor::zeros(vec![1, 8, 30, 30]), Mode::Train, 3).unwrap();
        for v in out.data() {
            assert!((v + 7f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let m = Model::zeros(ModelSpec::new(1, 2)).unwrap();
        assert!(m.forward(&Tensor::zeros(vec![1, 2, 30, 30]), Mode::Eval, 0).is_err());
        assert!(m.forward(&Tensor::zeros(vec![1, 1, 28, 28]), Mode::Eval, 0).is_err());
    }

    #[test]
    fn eval_is_deterministic_and_train_is_seeded() {
        let spec = tiny(0.5, false);
        let m = Model::init(spec.clone(), 1).unwrap();
        let x = random_batch(&spec, 4, 2);
        assert_eq!(m.forward(&x, Mode::Eval, 0).unwrap().0, m.forward(&x, Mode::Eval, 9).unwrap().0);
        assert_eq!(m.forward(&x, Mode::Train, 5).unwrap().0, m.forward(&x, Mode::Train, 5).unwrap().0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for s in 0..10 {
            for (dropout, output_relu) in [(0.0, false), (0.3, false), (0.3, true)] {
                let spec = tiny(dropout, output_relu);
                let model = Model::init(spec.clone(), s).unwrap();
                let batch = random_batch(&spec, 3, 100 + s);
                let err = max_relative_error(&model, &batch, &[0, 2, 1], 7 + s);
                assert!(err < 1e-4, "seed {s}, dropout {dropout}: {err}");
            }
        }
    }

    #[test]
    fn saturated_softmax_has_no_gradient() {
        let spec = tiny(0.0, false);
        let mut m = Model::zeros(spec.clone()).unwrap();
        m.params[D2_B].data_mut().copy_from_slice(&[60.0, -60.0, -60.0]);
        let (_, cache) = m.forward(&random_batch(&spec, 1, 0), Mode::Train, 0).unwrap();
        let grads = m.backward(&cache, &[0]).unwrap();
        let norm: f64 = grads.iter().flat_map(|g| g.data()).map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "{norm}");
    }

    #[test]
    fn dead_relu_units_get_no_gradient() {
        let spec = tiny(0.0, false);
        let mut m = Model::init(spec.clone(), 4).unwrap();
        m.params[D1_B].data_mut()[1] = -1e3;
        let (_, cache) = m.forward(&random_batch(&spec, 2, 1), Mode::Train, 0).unwrap();
        let grads = m.backward(&cache, &[1, 0]).unwrap();
        let flat = spec.flat();
        assert!(grads[D1_W].data()[flat..2 * flat].iter().all(|&g| g == 0.0));
        assert_eq!(grads[D1_B].data()[1], 0.0);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let spec = tiny(0.0, false);
        let mut m = Model::init(spec.clone(), 0).unwrap();
        let (_, cache) = m.forward(&random_batch(&spec, 1, 0), Mode::Train, 0).unwrap();
        m.params_mut()[0].data_mut()[0] += 1.0;
        assert!(m.backward(&cache, &[0]).is_err());
        assert!(m.backward(&m.forward(&random_batch(&spec, 1, 0), Mode::Train, 0).unwrap().1, &[3]).is_err());
    }

    #[test]
    fn dropout_preserves_expectation() {
        let spec = tiny(0.2, false);
        let m = Model::init(spec.clone(), 6).unwrap();
        let x = random_batch(&spec, 1, 8);
        let eval = m.forward_sample(x.data(), None);
        let n = 20_000;
        let mut mean = vec![0.0; spec.hidden];
        for i in 0..n {
            let c = m.forward_sample(x.data(), Some(i));
            for (acc, z) in mean.iter_mut().zip(&c.z2) {
                *acc += z / n as f64;
            }
        }
        for (a, b) in mean.iter().zip(&eval.z2) {
            assert!((a - b).abs() <= 0.02 * b.abs().max(1e-3), "{a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn rows_normalise(seed in 0u64..1000) {
            let spec = tiny(0.2, false);
            let m = Model::init(spec.clone(), seed).unwrap();
            let (out, _) = m.forward(&random_batch(&spec, 3, seed), Mode::Train, seed).unwrap();
            for row in out.data().chunks(3) {
                let lse = row.iter().map(|v| v.exp()).sum::<f64>().ln();
                prop_assert!(lse.abs() < 1e-9);
            }
        }
    }
}
