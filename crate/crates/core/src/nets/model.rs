//! Common interface every trainable network exposes to the training loop.

use crate::error::Result;
use crate::numerics::Matrix;

/// A differentiable map from dataset input rows to predictions, with a flat
/// trainable parameter vector.
///
/// `inputs` always carries the dataset's full input block (parameter, time
/// and spatial columns in schema order); each architecture splits those
/// columns internally.
pub trait Model {
    fn n_params(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Expected input width.
    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;

    fn forward(&self, inputs: &Matrix) -> Result<Matrix>;

    /// Forward pass followed by one reverse sweep. `upstream` receives the
    /// predictions and returns `dL/dpred`; the result pairs the predictions
    /// with `dL/dparams`.
    fn forward_backward(
        &self,
        inputs: &Matrix,
        upstream: &mut dyn FnMut(&Matrix) -> Matrix,
    ) -> Result<(Matrix, Vec<f64>)>;
}
