//! The segment classifier: tokenizer, encoder stages, pooled head; plus
//! parameter/FLOP accounting, training, prediction and checkpoints.

mod checkpoint;
mod config;
mod net;
mod train;


pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{count_flops, count_params, DilationMode, ModelConfig, MAX_STAGES};
pub use net::{
    classifier_forward, encoder_forward, forward, resblock_forward, stage_forward, tokenizer_forward, Model,
    CLASSIFIER_PARAMS, STAGE_NORMS, STAGE_PARAMS, TOKENIZER_PARAMS,
};
pub use train::{accuracy, predict_segments, predict_subject, train, Predictions, TrainConfig, TrainHistory};
