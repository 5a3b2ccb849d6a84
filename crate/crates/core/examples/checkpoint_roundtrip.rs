//! Saves a model, loads it back and checks that both give the same logits.

use eegtoken::grad::Tensor;
use eegtoken::model::{decode_checkpoint, encode_checkpoint, Model, ModelConfig};

fn main() -> eegtoken::Result<()> {
    let cfg = ModelConfig { d_model: 16, bottleneck: 8, n_stages: 2, ..ModelConfig::default() };
    let model = Model::<f32>::new(cfg, 42)?;
    let bytes = encode_checkpoint(&model)?;
    let loaded: Model<f32> = decode_checkpoint(&bytes)?;
    let x = Tensor::from_fn(&[4, 19, 128], |i| ((i % 97) as f32 / 48.0) - 1.0);
    let (a, b) = (model.logits(x.clone())?, loaded.logits(x)?);
    println!("{} bytes, {} tensors", bytes.len(), model.params.len() + 2 * model.stats.len());
    println!("logits identical: {}", a == b);
    Ok(())
}
