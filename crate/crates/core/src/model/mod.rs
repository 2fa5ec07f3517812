//! Network, feature construction and objective.

pub mod features;
pub mod loss;
pub mod network;

pub use features::{
    build_features, concat_trajectory, reconstruction_target, BBox, BoxSequence, DeltaSequence, FeatureWindow,
};
pub use loss::{
    composite_loss, loss_and_gradients, loss_value, make_batch, BatchTargets, LossBreakdown, LossMode, LossWeights,
    Sample,
};
pub use network::{
    backward_batch, concat_backward, concat_trajectory_batch, decode_future, encode, forward_batch, forward_train,
    predict, predict_window, reconstruct, BatchInput, DecoderInit, ForwardOutput, ForwardTrace, HeadGrads, Linear,
    ModelDims, ModelParams, INPUT_DIM, OUTPUT_DIM, TENSOR_NAMES,
};

#[cfg(test)]
mod tests;
