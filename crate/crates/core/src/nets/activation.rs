//! Pointwise activations and their derivatives.

use serde::{Deserialize, Serialize};

/// Scale used by sine activations unless configured otherwise.
pub const DEFAULT_OMEGA0: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Activation {
    /// `v * sigmoid(v)` (no trainable slope).
    Swish,
    Tanh,
    Relu,
    /// `sin(omega0 * v)`.
    Sine { omega0: f64 },
    Identity,
}

impl Activation {
    pub fn sine(omega0: f64) -> Self {
        Activation::Sine { omega0 }
    }

    pub fn sine_default() -> Self {
        Activation::Sine { omega0: DEFAULT_OMEGA0 }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Activation::Swish => v / (1.0 + (-v).exp()),
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
            Activation::Sine { omega0 } => (omega0 * v).sin(),
            Activation::Identity => v,
        }
    }

    /// Derivative with respect to the pre-activation. ReLU uses the
    /// subgradient 0 at the kink.
    #[inline]
    pub fn deriv(&self, v: f64) -> f64 {
        match *self {
            Activation::Swish => {
                let s = 1.0 / (1.0 + (-v).exp());
                s * (1.0 + v * (1.0 - s))
            }
            Activation::Tanh => {
                let t = v.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sine { omega0 } => omega0 * (omega0 * v).cos(),
            Activation::Identity => 1.0,
        }
    }

    pub fn is_sine(&self) -> bool {
        matches!(self, Activation::Sine { .. })
    }
}
