use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_STAGES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DilationMode {
    /// Every stage uses `dilation`.
    Constant,
    /// Stage `j` (1-based) uses `dilation^j`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_channels: usize,
    pub seq_len: usize,
    pub d_model: usize,
    pub bottleneck: usize,
    pub k_token: usize,
    pub k_res: usize,
    pub n_stages: usize,
    pub dilation: usize,
    pub dilation_mode: DilationMode,
    pub n_classes: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_channels: crate::N_CHANNELS,
            seq_len: crate::SEGMENT_LEN,
            d_model: 128,
            bottleneck: 64,
            k_token: 7,
            k_res: 3,
            n_stages: 3,
            dilation: 2,
            dilation_mode: DilationMode::Constant,
            n_classes: 2,
            dropout: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(1..=MAX_STAGES).contains(&self.n_stages) {
            return bad(format!("n_stages {} outside 1..={MAX_STAGES}", self.n_stages));
        }
        if self.k_token % 2 == 0 || self.k_res % 2 == 0 {
            return bad(format!("kernel sizes must be odd (k_token {}, k_res {})", self.k_token, self.k_res));
        }
        if self.d_model == 0 || self.bottleneck == 0 || self.n_channels == 0 || self.seq_len == 0 {
            return bad("widths and lengths must be positive".into());
        }
        if self.dilation == 0 {
            return bad("dilation must be at least 1".into());
        }
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Per-stage dilation rates.
    pub fn dilations(&self) -> Vec<usize> {
        (1..=self.n_stages as u32)
            .map(|j| match self.dilation_mode {
                DilationMode::Constant => self.dilation,
                DilationMode::Exponential => self.dilation.pow(j),
            })
            .collect()
    }

    /// Trainable tensors in registration order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let (c, d, bn) = (self.n_channels, self.d_model, self.bottleneck);
        let (kt, kr) = (self.k_token, self.k_res);
        let mut v: Vec<(String, Vec<usize>)> = vec![
            ("tokenizer.depthwise.weight".into(), vec![c, 1, kt]),
            ("tokenizer.depthwise.bias".into(), vec![c]),
            ("tokenizer.pointwise.weight".into(), vec![d, c, 1]),
            ("tokenizer.pointwise.bias".into(), vec![d]),
        ];
        for j in 0..self.n_stages {
            let p = |s: &str| format!("encoder.{j}.{s}");
            v.extend([
                (p("res.conv1.weight"), vec![bn, d, kr]),
                (p("res.conv1.bias"), vec![bn]),
                (p("res.bn1.weight"), vec![bn]),
                (p("res.bn1.bias"), vec![bn]),
                (p("res.conv2.weight"), vec![d, bn, kr]),
                (p("res.conv2.bias"), vec![d]),
                (p("res.bn2.weight"), vec![d]),
                (p("res.bn2.bias"), vec![d]),
                (p("res.shortcut.weight"), vec![d, d, 1]),
                (p("res.shortcut.bias"), vec![d]),
                (p("res.shortcut_bn.weight"), vec![d]),
                (p("res.shortcut_bn.bias"), vec![d]),
                (p("cross.weight"), vec![d, d, 1]),
                (p("cross.bias"), vec![d]),
            ]);
        }
        v.extend([
            ("classifier.norm.weight".into(), vec![2 * d]),
            ("classifier.norm.bias".into(), vec![2 * d]),
            ("classifier.fc.weight".into(), vec![2 * d, self.n_classes]),
            ("classifier.fc.bias".into(), vec![self.n_classes]),
        ]);
        v
    }

    /// Batch-norm layers with running statistics, in registration order.
    pub fn norm_specs(&self) -> Vec<(String, usize)> {
        (0..self.n_stages)
            .flat_map(|j| {
                [
                    (format!("encoder.{j}.res.bn1"), self.bottleneck),
                    (format!("encoder.{j}.res.bn2"), self.d_model),
                    (format!("encoder.{j}.res.shortcut_bn"), self.d_model),
                ]
            })
            .collect()
    }
}

/// Exact trainable parameter total (running statistics excluded).
pub fn count_params(config: &ModelConfig) -> Result<usize> {
    config.validate()?;
    Ok(config.param_specs().iter().map(|(_, s)| s.iter().product::<usize>()).sum())
}

fn conv_flops(c_in_per_group: usize, c_out: usize, k: usize, l: usize) -> u64 {
    (2 * c_out * c_in_per_group * k * l + c_out * l) as u64
}

/// Forward FLOPs for one segment of length `l` in eval mode.
///
/// Convolutions and the linear layer count 2 per multiply-accumulate plus one
/// per bias add; batch norm 2 per element, ReLU and residual adds 1, each
/// pooling 1 per input element, layer norm 7 per feature.
pub fn count_flops(config: &ModelConfig, l: usize) -> Result<u64> {
    config.validate()?;
    let (c, d, bn) = (config.n_channels, config.d_model, config.bottleneck);
    let kr = config.k_res;
    let el = |n: usize| (n * l) as u64;
    let mut f = conv_flops(1, c, config.k_token, l) + conv_flops(c, d, 1, l);
    for _ in 0..config.n_stages {
        f += conv_flops(d, bn, kr, l) + 2 * el(bn) + el(bn);
        f += conv_flops(bn, d, kr, l) + 2 * el(d);
        f += conv_flops(d, d, 1, l) + 2 * el(d);
        f += el(d) + el(d);
        f += conv_flops(d, d, 1, l) + el(d);
    }
    f += 2 * el(d);
    f += 7 * 2 * d as u64;
    f += (2 * 2 * d * config.n_classes + config.n_classes) as u64;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent per-layer tally for the default architecture shape.
    fn hand_count(c: usize, d: usize, bn: usize, kt: usize, kr: usize, stages: usize) -> usize {
        let tokenizer = (c * kt + c) + (d * c + d);
        let res = (bn * d * kr + bn) + 2 * bn + (d * bn * kr + d) + 2 * d + (d * d + d) + 2 * d;
        let cross = d * d + d;
        let classifier = 2 * (2 * d) + (2 * d * 2 + 2);
        tokenizer + stages * (res + cross) + classifier
    }

    #[test]
    fn default_parameter_count() {
        let n = count_params(&ModelConfig::default()).unwrap();
        assert_eq!(n, 252_762);
        assert_eq!(n, hand_count(19, 128, 64, 7, 3, 3));
        assert!((232_000..=348_000).contains(&n));
    }

    #[test]
    fn parameter_count_tracks_width() {
        let mut prev = 0;
        for d in [16, 32, 64, 128, 256] {
            let cfg = ModelConfig { d_model: d, bottleneck: d / 2, ..ModelConfig::default() };
            let n = count_params(&cfg).unwrap();
            assert_eq!(n, hand_count(19, d, d / 2, 7, 3, 3));
            assert!(n > prev);
            prev = n;
        }
        let small = ModelConfig { d_model: 64, bottleneck: 32, ..ModelConfig::default() };
        let big = ModelConfig { d_model: 128, bottleneck: 64, ..ModelConfig::default() };
        let stage = |c: &ModelConfig| {
            let one = ModelConfig { n_stages: 1, ..c.clone() };
            let two = ModelConfig { n_stages: 2, ..c.clone() };
            count_params(&two).unwrap() - count_params(&one).unwrap()
        };
        let ratio = stage(&big) as f64 / stage(&small) as f64;
        assert!((3.9..4.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn stage_bounds_and_dilations() {
        for n in [0, 6] {
            let cfg = ModelConfig { n_stages: n, ..ModelConfig::default() };
            assert!(count_params(&cfg).is_err());
        }
        assert_eq!(ModelConfig::default().dilations(), vec![2, 2, 2]);
        let exp = ModelConfig { dilation_mode: DilationMode::Exponential, ..ModelConfig::default() };
        assert_eq!(exp.dilations(), vec![2, 4, 8]);
        assert!(ModelConfig { k_res: 4, ..ModelConfig::default() }.validate().is_err());
    }

    #[test]
    fn pointwise_flops_closed_form() {
        let (d, l) = (16, 10);
        assert_eq!(conv_flops(d, d, 1, l), (2 * d * d * l + d * l) as u64);
    }

    #[test]
    fn tiny_config_flops_by_hand() {
        // C=2, d=4, bottleneck=2, k_token=3, k_res=3, 1 stage, L=8.
        let cfg = ModelConfig {
            n_channels: 2,
            seq_len: 8,
            d_model: 4,
            bottleneck: 2,
            k_token: 3,
            k_res: 3,
            n_stages: 1,
            ..ModelConfig::default()
        };
        let depthwise = 2 * 2 * 3 * 8 + 2 * 8; // 112
        let pointwise = 2 * 4 * 2 * 8 + 4 * 8; // 160
        let conv1 = 2 * 2 * 4 * 3 * 8 + 2 * 8; // 400
        let bn1_relu = 3 * 2 * 8; // 48
        let conv2 = 2 * 4 * 2 * 3 * 8 + 4 * 8; // 416
        let bn2 = 2 * 4 * 8; // 64
        let shortcut = 2 * 4 * 4 * 8 + 4 * 8 + 2 * 4 * 8; // 352
        let add_relu = 2 * 4 * 8; // 64
        let cross_add = 2 * 4 * 4 * 8 + 4 * 8 + 4 * 8; // 320
        let pools = 2 * 4 * 8; // 64
        let layernorm = 7 * 8; // 56
        let fc = 2 * 8 * 2 + 2; // 34
        let total = depthwise + pointwise + conv1 + bn1_relu + conv2 + bn2 + shortcut + add_relu + cross_add + pools + layernorm + fc;
        assert_eq!(total, 2090);
        assert_eq!(count_flops(&cfg, 8).unwrap(), total);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ModelConfig { dilation_mode: DilationMode::Exponential, ..ModelConfig::default() };
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"exponential\""));
        assert_eq!(serde_json::from_str::<ModelConfig>(&s).unwrap(), cfg);
        let partial: ModelConfig = serde_json::from_str(r#"{"d_model": 32}"#).unwrap();
        assert_eq!(partial.bottleneck, 64);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"width": 3}"#).is_err());
    }
}
