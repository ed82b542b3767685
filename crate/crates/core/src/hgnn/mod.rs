//! Relational GCN numerics in f64.
//!
//! For a destination `v` at layer `l`:
//! `h_v = act( Σ_r mean_{u ∈ N_r(v)} h_u · W_r^(l) )`, with ReLU on inner
//! layers and no activation on the output layer. Computation follows the
//! metatree: every tree position holds the nodes reached at that position and
//! every link into a position applies one relation's weight.

mod adam;
mod aggregate;
mod checkpoint;
mod forward;
mod gradcheck;
mod model;

pub use adam::{AdamConfig, AdamState, LearnableFeatureTable, LearnableTables};
pub use aggregate::{
    agg_all, agg_relation, expand, mean_rows, mean_rows_backward, relu, relu_backward, Embedding,
    LinkSample,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MANIFEST, CHECKPOINT_TENSORS};
pub use forward::{
    backward, batch_labels, combine_order, forward_vanilla, loss_and_grad, output_dim, sample_tree,
    softmax_cross_entropy, FeatureSource, GraphInputs, PositionTape, Tape,
};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use model::{param_keys, Gradients, HgnnConfig, HgnnModel, ParamKey};
