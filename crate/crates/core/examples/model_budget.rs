//! Parameter and FLOP counts across widths and depths, plus a short
//! throughput measurement of the default model.

use std::time::Duration;

use eegtoken::cli::bench;
use eegtoken::model::{count_flops, count_params, ModelConfig};

fn main() -> eegtoken::Result<()> {
    println!("{:>7} {:>6} {:>10} {:>14}", "d_model", "stages", "params", "FLOPs/segment");
    for d in [32, 64, 128, 192] {
        for stages in [1, 3, 5] {
            let cfg = ModelConfig { d_model: d, bottleneck: d / 2, n_stages: stages, ..ModelConfig::default() };
            println!("{d:>7} {stages:>6} {:>10} {:>14}", count_params(&cfg)?, count_flops(&cfg, cfg.seq_len)?);
        }
    }
    let r = bench(&ModelConfig::default(), 128, Duration::from_secs(2), 0)?;
    println!("default model: {} params, {:.0} segments/s in eval mode", r.params, r.segments_per_s);
    Ok(())
}
