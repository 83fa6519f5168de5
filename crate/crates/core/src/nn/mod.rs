//! Small dense networks in double precision: tanh MLPs over a flat
//! parameter vector, exact reverse-mode gradients, AdamW.

pub mod checkpoint;
pub mod dist;
mod net;
pub mod optim;

pub use checkpoint::{load_net, net_from_json, net_to_json, save_net};
pub use dist::{argmax, entropy_with_grad, kl_divergence, kl_with_grad, log_softmax, softmax, KL_FLOOR};
pub use net::{DenseNet, ForwardCache, Head, NetSpec, DEFAULT_HIDDEN};
pub use optim::{clip_grad_norm, AdamW, DEFAULT_LR};
