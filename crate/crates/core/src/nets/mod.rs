//! Network definitions, initialization, forward evaluation and hand-rolled
//! reverse-mode gradients.
//!
//! Architectures: the hypernetwork pair ([`NifModel`]), the coordinate
//! chain network used both as its spatial half and as the MLP / monolithic
//! sine baselines ([`CoordNet`]), the branch/trunk operator baseline
//! ([`DeepOnet`]) and the random-Fourier-feature baseline ([`FourierNet`]).
//! Only these fixed architectures are differentiated; there is no general
//! computation-graph autodiff here.

mod activation;
mod checkpoint;
mod coordnet;
mod deeponet;
mod fourier;
mod init;
mod kernels;
mod layout;
mod model;
mod nif;

pub use activation::{Activation, DEFAULT_OMEGA0};
pub use checkpoint::{load_model, save_model, AnyModel};
pub use coordnet::{BlockStyle, CoordNet, ShapeNetConfig};
pub use deeponet::{DeepOnet, DeepOnetConfig};
pub use fourier::{FourierConfig, FourierNet};
pub use init::{sine_bias_bound, sine_weight_bound, HYPER_LAST_LAYER_SCALE, TRUNC_NORMAL_CUTOFF, TRUNC_NORMAL_STD};
pub use layout::{FlatParamLayout, Segment};
pub use model::Model;
pub use nif::{NifForward, NifModel, ParamTarget, ParameterNetConfig};

pub(crate) use coordnet::{coord_forward, input_gradient_from};
