//! Trains a narrow classifier on synthetic subjects and scores held-out ones
//! at segment and subject level.

use eegtoken::eegio::{synthesize_dataset, SynthSpec};
use eegtoken::eval::score;
use eegtoken::model::{train, Model, ModelConfig, TrainConfig};
use eegtoken::pipeline::{preprocess_dataset, stack, PreprocessConfig};
use eegtoken::Band;

fn main() -> eegtoken::Result<()> {
    let spec = SynthSpec { n_subjects_per_class: 4, duration_s: 16.0, ..SynthSpec::default() };
    let (groups, _) = preprocess_dataset(&synthesize_dataset(&spec)?, Band::Full, &PreprocessConfig::default())?;
    // Hold out one subject per class.
    let (test, train_groups): (Vec<_>, Vec<_>) = groups.iter().partition(|g| g.subject_id.ends_with("003"));
    let (x, y) = stack(train_groups.iter().copied());

    let cfg = ModelConfig { d_model: 32, bottleneck: 16, ..ModelConfig::default() };
    let mut model = Model::<f32>::new(cfg, 3)?;
    let history = train(&mut model, &x, &y, &TrainConfig { epochs: 15, batch_size: 32, ..TrainConfig::default() }, 3)?;
    for (e, loss) in history.epoch_loss.iter().enumerate().step_by(3) {
        println!("epoch {e:>3}  loss {loss:.4}");
    }
    let (seg, subj) = score(&model, &test, 256)?;
    println!("held-out segment accuracy {:.1} %, subject accuracy {:.1} %", 100.0 * seg.metrics.accuracy, 100.0 * subj.metrics.accuracy);
    Ok(())
}
