//! Finite-difference check of the whole classifier in 64-bit, with and
//! without a deliberately broken backward pass.

use eegtoken::grad::{gradcheck, Fault, Graph, GradcheckOptions, Mode, Tensor, Var};
use eegtoken::model::{forward, Model, ModelConfig};
use eegtoken::rng::{stream, Purpose};
use rand::Rng;

fn main() -> eegtoken::Result<()> {
    let cfg = ModelConfig { n_channels: 3, seq_len: 16, d_model: 6, bottleneck: 4, n_stages: 2, ..ModelConfig::default() };
    let model = Model::<f64>::new(cfg.clone(), 7)?;
    let mut rng = stream(1, Purpose::Test, &[]);
    let x = Tensor::from_fn(&[2, 3, 16], |_| rng.random_range(-1.0..1.0));
    let mut inputs = vec![x];
    inputs.extend(model.params.iter().cloned());
    let f = |g: &mut Graph<f64>, v: &[Var]| {
        let mut stats = model.stats.clone();
        let mut rng = stream(0, Purpose::Dropout, &[]);
        let logits = forward(&cfg, g, v[0], &v[1..], &mut stats, Mode::Eval, &mut rng)?;
        g.softmax_cross_entropy(logits, &[0, 1])
    };
    let good = gradcheck(f, &inputs, &GradcheckOptions::default())?;
    println!("correct backward: max relative error {:.2e}", good.max_rel_err);
    let opts = GradcheckOptions { fault: Some(Fault::ReluIgnoresMask), ..GradcheckOptions::default() };
    let bad = gradcheck(f, &inputs, &opts)?;
    println!("broken ReLU mask: max relative error {:.2e}", bad.max_rel_err);
    Ok(())
}
