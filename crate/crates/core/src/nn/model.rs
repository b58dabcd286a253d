use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{pixel_shuffle, pixel_unshuffle, Activation, Conv2d, ConvGrads};
use crate::resample::Scale;
use crate::{Error, Plane, Real, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// 9-1-5 convolutions on the bicubic-upscaled input.
    Srcnn,
    /// 5-3-3 convolutions on the LR input, then pixel shuffle.
    Espcn,
}

impl Architecture {
    pub fn tag(self) -> u32 {
        match self {
            Architecture::Srcnn => 0,
            Architecture::Espcn => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Architecture::Srcnn),
            1 => Some(Architecture::Espcn),
            _ => None,
        }
    }

    fn activations(self) -> [Activation; 3] {
        match self {
            Architecture::Srcnn => [Activation::Relu, Activation::Relu, Activation::Identity],
            Architecture::Espcn => [Activation::Tanh, Activation::Tanh, Activation::Identity],
        }
    }

    fn kernels(self) -> [usize; 3] {
        match self {
            Architecture::Srcnn => [9, 1, 5],
            Architecture::Espcn => [5, 3, 3],
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Srcnn => "srcnn",
            Architecture::Espcn => "espcn",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srcnn" => Ok(Architecture::Srcnn),
            "espcn" => Ok(Architecture::Espcn),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}` (expected srcnn or espcn)"))),
        }
    }
}

/// Architecture plus layer widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub arch: Architecture,
    pub scale: Scale,
    pub filters: (usize, usize),
}

impl ModelSpec {
    /// The published widths, 64 and 32 filters.
    pub fn full(arch: Architecture, scale: Scale) -> Self {
        Self { arch, scale, filters: (64, 32) }
    }

    /// Reduced widths (8 and 4) for quick experiments and tests.
    pub fn small(arch: Architecture, scale: Scale) -> Self {
        Self { arch, scale, filters: (8, 4) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T: Real = f32> {
    pub name: String,
    pub conv: Conv2d<T>,
    pub activation: Activation,
}

/// The learnable parameters of one SRCNN or ESPCN model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real = f32> {
    arch: Architecture,
    scale: Scale,
    layers: Vec<Layer<T>>,
}

pub type ModelParams<T = f32> = Model<T>;

/// Per-sample forward record needed by [`Model::backward`].
#[derive(Debug, Clone)]
pub struct Tape<T: Real> {
    inputs: Vec<Tensor<T>>,
    pre: Vec<Tensor<T>>,
    post: Vec<Tensor<T>>,
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real = f32> {
    pub layers: Vec<ConvGrads<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &Model<T>) -> Self {
        Self { layers: model.layers.iter().map(|l| ConvGrads::zeros_like(&l.conv)).collect() }
    }

    /// Weight, bias, weight, bias… in layer order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|g| [&g.weight, &g.bias]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }
}

fn layer_names() -> [(&'static str, &'static str); 3] {
    [("conv1", "feature"), ("conv2", "mapping"), ("conv3", "reconstruction")]
}

/// Zero-initialized model for `spec`.
pub fn build_model<T: Real>(spec: &ModelSpec) -> Model<T> {
    let (f1, f2) = spec.filters;
    let [k1, k2, k3] = spec.arch.kernels();
    let out = match spec.arch {
        Architecture::Srcnn => 1,
        Architecture::Espcn => spec.scale.get() * spec.scale.get(),
    };
    let convs = [Conv2d::zeros(f1, 1, k1, k1), Conv2d::zeros(f2, f1, k2, k2), Conv2d::zeros(out, f2, k3, k3)];
    let layers = convs
        .into_iter()
        .zip(spec.arch.activations())
        .zip(layer_names())
        .map(|((conv, activation), (name, _))| Layer { name: name.into(), conv, activation })
        .collect();
    Model { arch: spec.arch, scale: spec.scale, layers }
}

/// He-normal kernels from a seeded xoshiro256++ stream, zero biases.
pub fn init_params<T: Real>(model: &mut Model<T>, seed: u64) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for layer in &mut model.layers {
        let s = layer.conv.weight.shape();
        let fan_in = (s[1] * s[2] * s[3]) as f64;
        let std = Float::sqrt(2.0 / fan_in);
        for w in layer.conv.weight.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = T::of(z * std);
        }
        layer.conv.bias.data_mut().fill(T::zero());
    }
}

impl<T: Real> Model<T> {
    pub fn new(spec: &ModelSpec, seed: u64) -> Self {
        let mut m = build_model(spec);
        init_params(&mut m, seed);
        m
    }

    /// Assemble from explicit convolutions (checkpoint loading). Activations
    /// follow the architecture; shapes must chain.
    pub fn from_convs(arch: Architecture, scale: Scale, convs: Vec<Conv2d<T>>) -> Result<Self> {
        if convs.len() != 3 {
            return Err(Error::InvalidConfig(format!("expected 3 layers, found {}", convs.len())));
        }
        if convs[0].in_channels() != 1 {
            return Err(Error::ChannelMismatch { expected: 1, found: convs[0].in_channels() });
        }
        for pair in convs.windows(2) {
            if pair[0].out_channels() != pair[1].in_channels() {
                return Err(Error::ChannelMismatch { expected: pair[0].out_channels(), found: pair[1].in_channels() });
            }
        }
        let want_out = match arch {
            Architecture::Srcnn => 1,
            Architecture::Espcn => scale.get() * scale.get(),
        };
        if convs[2].out_channels() != want_out {
            return Err(Error::ChannelMismatch { expected: want_out, found: convs[2].out_channels() });
        }
        let layers = convs
            .into_iter()
            .zip(arch.activations())
            .zip(layer_names())
            .map(|((conv, activation), (name, _))| Layer { name: name.into(), conv, activation })
            .collect();
        Ok(Model { arch, scale, layers })
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.conv.weight.len() + l.conv.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.conv.weight, &l.conv.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.conv.weight, &mut l.conv.bias]).collect()
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            arch: self.arch,
            scale: self.scale,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    name: l.name.clone(),
                    conv: Conv2d { weight: l.conv.weight.cast(), bias: l.conv.bias.cast() },
                    activation: l.activation,
                })
                .collect(),
        }
    }

    fn check_sample(&self, input: &Tensor<T>) -> Result<()> {
        match input.shape() {
            [1, _, _] => Ok(()),
            [c, _, _] => Err(Error::ChannelMismatch { expected: 1, found: *c }),
            s => Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected 1×H×W model input" }),
        }
    }

    /// One sample, `1 × h × w` in. SRCNN returns the same size, ESPCN `1 × rh × rw`.
    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Tape<T>)> {
        self.check_sample(input)?;
        let mut tape = Tape { inputs: Vec::new(), pre: Vec::new(), post: Vec::new() };
        let mut x = input.clone();
        for layer in &self.layers {
            let z = layer.conv.forward(&x)?;
            let a = layer.activation.forward(&z);
            tape.inputs.push(x);
            tape.pre.push(z);
            x = a.clone();
            tape.post.push(a);
        }
        if self.arch == Architecture::Espcn {
            x = pixel_shuffle(&x, self.scale.get())?;
        }
        Ok((x, tape))
    }

    /// Forward without keeping intermediates.
    pub fn infer(&self, input: &Plane<T>) -> Result<Plane<T>> {
        let mut x = input.to_tensor();
        for layer in &self.layers {
            x = layer.activation.forward(&layer.conv.forward(&x)?);
        }
        if self.arch == Architecture::Espcn {
            x = pixel_shuffle(&x, self.scale.get())?;
        }
        Plane::from_tensor(&x)
    }

    /// Accumulate parameter gradients for one sample into `grads`.
    pub fn backward_into(&self, tape: &Tape<T>, grad_out: &Tensor<T>, grads: &mut Gradients<T>) -> Result<()> {
        let mut g = if self.arch == Architecture::Espcn {
            pixel_unshuffle(grad_out, self.scale.get())?
        } else {
            grad_out.clone()
        };
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let gz = layer.activation.backward(&tape.pre[i], &tape.post[i], &g)?;
            let gin = layer.conv.backward(&tape.inputs[i], &gz, &mut grads.layers[i], i > 0)?;
            if let Some(gin) = gin {
                g = gin;
            }
        }
        Ok(())
    }

    pub fn backward(&self, tape: &Tape<T>, grad_out: &Tensor<T>) -> Result<Gradients<T>> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(tape, grad_out, &mut grads)?;
        Ok(grads)
    }

    /// Batched forward over `B × 1 × h × w`.
    pub fn forward_batch(&self, inputs: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tape<T>>)> {
        let (b, h, w) = match inputs.shape() {
            [b, 1, h, w] => (*b, *h, *w),
            s => return Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected B×1×H×W batch" }),
        };
        let mut out = Vec::new();
        let mut tapes = Vec::with_capacity(b);
        let mut oshape = (0, 0);
        for i in 0..b {
            let sample = Tensor::new(&[1, h, w], inputs.data()[i * h * w..(i + 1) * h * w].to_vec())?;
            let (y, tape) = self.forward(&sample)?;
            oshape = (y.shape()[1], y.shape()[2]);
            out.extend_from_slice(y.data());
            tapes.push(tape);
        }
        Ok((Tensor::new(&[b, 1, oshape.0, oshape.1], out)?, tapes))
    }

    /// Summed parameter gradients of a batch.
    pub fn backward_batch(&self, tapes: &[Tape<T>], grad_out: &Tensor<T>) -> Result<Gradients<T>> {
        let (b, h, w) = match grad_out.shape() {
            [b, 1, h, w] => (*b, *h, *w),
            s => return Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected B×1×H×W gradient" }),
        };
        if b != tapes.len() {
            return Err(Error::ShapeMismatch { left: alloc::vec![tapes.len()], right: alloc::vec![b] });
        }
        let mut grads = Gradients::zeros_like(self);
        for (i, tape) in tapes.iter().enumerate() {
            let g = Tensor::new(&[1, h, w], grad_out.data()[i * h * w..(i + 1) * h * w].to_vec())?;
            self.backward_into(tape, &g, &mut grads)?;
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testutil::{assert_grad_close_tol, random_tensor};
    use crate::tensor::mean_sq;

    fn s(v: usize) -> Scale {
        Scale::new(v).unwrap()
    }

    #[test]
    fn shape_contracts() {
        let m = Model::<f32>::new(&ModelSpec::small(Architecture::Srcnn, s(2)), 1);
        let (y, _) = m.forward(&Tensor::zeros(&[1, 32, 32])).unwrap();
        assert_eq!(y.shape(), &[1, 32, 32]);

        let m = Model::<f32>::new(&ModelSpec::small(Architecture::Espcn, s(3)), 1);
        let (y, _) = m.forward(&Tensor::zeros(&[1, 16, 16])).unwrap();
        assert_eq!(y.shape(), &[1, 48, 48]);

        for sc in Scale::ALL {
            let m = Model::<f32>::new(&ModelSpec::small(Architecture::Espcn, sc), 2);
            let out = m.infer(&Plane::filled(7, 5, 0.5)).unwrap();
            assert_eq!(out.dims(), (7 * sc.get(), 5 * sc.get()));
        }
    }

    #[test]
    fn full_widths() {
        let m = Model::<f32>::new(&ModelSpec::full(Architecture::Srcnn, s(2)), 0);
        assert_eq!(m.parameter_count(), 64 * 81 + 64 + 32 * 64 + 32 + 32 * 25 + 1);
        let m = Model::<f32>::new(&ModelSpec::full(Architecture::Espcn, s(4)), 0);
        assert_eq!(m.layers()[2].conv.out_channels(), 16);
    }

    #[test]
    fn init_is_deterministic_and_he_scaled() {
        let spec = ModelSpec::full(Architecture::Srcnn, s(2));
        let a = Model::<f32>::new(&spec, 42);
        let b = Model::<f32>::new(&spec, 42);
        let bits = |m: &Model<f32>| -> Vec<u32> { m.params().iter().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect() };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&Model::<f32>::new(&spec, 43)));
        let w = &a.layers()[1].conv.weight;
        let var = w.frobenius_sq() / w.len() as f64;
        assert!((var - 2.0 / 64.0).abs() < 0.2 * 2.0 / 64.0, "variance {var}");
        assert!(a.layers().iter().all(|l| l.conv.bias.data().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        use rand::SeedableRng;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(21);
        for arch in [Architecture::Srcnn, Architecture::Espcn] {
            let spec = ModelSpec { arch, scale: s(2), filters: (4, 2) };
            let mut model = Model::<f64>::new(&spec, 7);
            for b in model.params_mut() {
                if b.shape().len() == 1 {
                    for v in b.data_mut() {
                        *v = 0.05;
                    }
                }
            }
            let (ih, oh) = match arch {
                Architecture::Srcnn => (12, 12),
                Architecture::Espcn => (6, 12),
            };
            let x = random_tensor(&[1, ih, ih], &mut rng).map(|v| 0.5 + 0.5 * v);
            let target = random_tensor(&[1, oh, oh], &mut rng).map(|v| 0.5 + 0.5 * v);
            let (y, tape) = model.forward(&x).unwrap();
            let n = y.len() as f64;
            let grad_out = y.sub(&target).unwrap().scale(2.0 / n);
            let grads = model.backward(&tape, &grad_out).unwrap();
            let loss = |m: &Model<f64>| mean_sq(&m.forward(&x).unwrap().0, &target).unwrap();
            let h = 1e-6;
            let gt: Vec<Tensor<f64>> = grads.tensors().into_iter().cloned().collect();
            for (pi, g) in gt.iter().enumerate() {
                for i in 0..g.len() {
                    let mut p = model.clone();
                    p.params_mut()[pi].data_mut()[i] += h;
                    let mut m = model.clone();
                    m.params_mut()[pi].data_mut()[i] -= h;
                    let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                    assert_grad_close_tol(g.data()[i], fd, 1e-4, 1e-8);
                }
            }
        }
    }

    #[test]
    fn from_convs_validates_chain() {
        let m = Model::<f32>::new(&ModelSpec::small(Architecture::Espcn, s(2)), 0);
        let mut convs: Vec<Conv2d<f32>> = m.layers().iter().map(|l| l.conv.clone()).collect();
        assert!(Model::from_convs(Architecture::Espcn, s(2), convs.clone()).is_ok());
        assert!(Model::from_convs(Architecture::Espcn, s(3), convs.clone()).is_err());
        convs.swap(0, 1);
        assert!(Model::from_convs(Architecture::Espcn, s(2), convs).is_err());
    }
}
