use crate::{Error, Real, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn forward<T: Real>(self, x: &Tensor<T>) -> Tensor<T> {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => x.map(|v| if v > T::zero() { v } else { T::zero() }),
            Activation::Tanh => x.map(|v| v.tanh()),
        }
    }

    /// Gradient w.r.t. the pre-activation. ReLU needs the input `x`, tanh
    /// reuses the output `y`.
    pub fn backward<T: Real>(self, x: &Tensor<T>, y: &Tensor<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        if grad.shape() != x.shape() || y.shape() != x.shape() {
            return Err(Error::ShapeMismatch { left: x.shape().to_vec(), right: grad.shape().to_vec() });
        }
        Ok(match self {
            Activation::Identity => grad.clone(),
            Activation::Relu => x.zip_map(grad, |v, g| if v > T::zero() { g } else { T::zero() }),
            Activation::Tanh => y.zip_map(grad, |t, g| g * (T::one() - t * t)),
        })
    }
}

impl<T: Real> Tensor<T> {
    pub(crate) fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        Tensor::new(self.shape(), self.data().iter().zip(other.data()).map(|(&a, &b)| f(a, b)).collect())
            .expect("same shape")
    }
}
