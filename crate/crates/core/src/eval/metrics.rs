use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with AD (class 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(truth: &[usize], pred: &[usize]) -> Result<Confusion> {
    if truth.len() != pred.len() {
        return Err(Error::Shape(format!("{} labels vs {} predictions", truth.len(), pred.len())));
    }
    let mut c = Confusion::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            (1, 0) => c.fn_ += 1,
            _ => return Err(Error::InvalidLabel(t.max(p))),
        }
    }
    Ok(c)
}

/// Set when a ratio had a zero denominator and was reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

/// Fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub undefined: UndefinedFlags,
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["precision", "recall", "f1", "accuracy"];

    pub fn values(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.accuracy]
    }
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 { (0.0, true) } else { (num / den, false) }
}

pub fn metrics(c: &Confusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::Empty("confusion has no instances".into()));
    }
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let (precision, p_undef) = ratio(tp, tp + fp);
    let (recall, r_undef) = ratio(tp, tp + fn_);
    let (f1, f_undef) = ratio(2.0 * precision * recall, precision + recall);
    Ok(Metrics {
        precision,
        recall,
        f1,
        accuracy: (tp + tn) / (tp + tn + fp + fn_),
        undefined: UndefinedFlags { precision: p_undef, recall: r_undef, f1: f_undef },
    })
}
