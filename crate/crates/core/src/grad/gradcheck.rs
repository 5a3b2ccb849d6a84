//! Central finite-difference gradient checks in f64.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

use super::{Fault, Graph, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    /// Step relative to `max(1, |x|)`.
    pub h: f64,
    /// Coordinates checked per tensor (all of them when the tensor is smaller).
    pub samples: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub seed: u64,
    /// Corrupts the analytic pass only; the numeric pass is unaffected.
    pub fault: Option<Fault>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { h: 1e-6, samples: 200, floor: 1e-6, seed: 0, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub index: usize,
    pub checked: usize,
    pub max_rel_err: f64,
    /// Coordinate and (analytic, numeric) pair of the worst entry.
    pub worst: (usize, f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub tensors: Vec<TensorCheck>,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn evaluate<F>(f: &F, inputs: &[Tensor<f64>], fault: Option<Fault>, grads: bool) -> Result<(f64, Vec<Vec<f64>>)>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = match fault {
        Some(fault) => Graph::with_fault(fault),
        None => Graph::new(),
    };
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), grads)).collect();
    let out = f(&mut g, &vars)?;
    let loss = g.value(out).data()[0];
    if !loss.is_finite() {
        return Err(Error::NonFinite("gradcheck loss".into()));
    }
    if !grads {
        return Ok((loss, Vec::new()));
    }
    g.backward(out)?;
    let gs = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| g.grad(*v).map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec))
        .collect();
    Ok((loss, gs))
}

/// Compares backward-pass gradients of the scalar `f(inputs)` with central
/// differences on a random subsample of every input tensor.
pub fn gradcheck<F>(f: F, inputs: &[Tensor<f64>], opts: &GradcheckOptions) -> Result<GradcheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let (_, analytic) = evaluate(&f, inputs, opts.fault, true)?;
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut tensors = Vec::with_capacity(inputs.len());
    for (ti, t) in inputs.iter().enumerate() {
        let mut rng = stream(opts.seed, Purpose::Test, &[ti as u64]);
        let coords: Vec<usize> = if t.len() <= opts.samples {
            (0..t.len()).collect()
        } else {
            sample(&mut rng, t.len(), opts.samples).into_vec()
        };
        let mut check = TensorCheck { index: ti, checked: coords.len(), max_rel_err: 0.0, worst: (0, 0.0, 0.0) };
        for &j in &coords {
            let x0 = t.data()[j];
            let h = opts.h * x0.abs().max(1.0);
            work[ti].data_mut()[j] = x0 + h;
            let (lp, _) = evaluate(&f, &work, None, false)?;
            work[ti].data_mut()[j] = x0 - h;
            let (lm, _) = evaluate(&f, &work, None, false)?;
            work[ti].data_mut()[j] = x0;
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic[ti][j];
            let err = relative_error(a, numeric, opts.floor);
            if err > check.max_rel_err {
                check.max_rel_err = err;
                check.worst = (j, a, numeric);
            }
        }
        tensors.push(check);
    }
    let max_rel_err = tensors.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    Ok(GradcheckReport { max_rel_err, tensors })
}
