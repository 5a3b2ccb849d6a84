//! Montage harmonization by spherical spline interpolation.
//!
//! The scalp potential is modelled as `V(r) = c0 + Σ_j c_j g_m(cos(r, r_j))`
//! with the kernel
//!
//! ```text
//! g_m(x) = 1/(4π) Σ_{n≥1} (2n+1) / (n(n+1))^m · P_n(x)
//! ```
//!
//! Coefficients come from the symmetric augmented system
//! `[[G_ss + λI, 1], [1ᵀ, 0]] · [c; c0] = [v; 0]`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::eegio::Recording;
use crate::error::{Error, Result};

/// Canonical channel order of the 19-channel 10–20 montage.
pub const STANDARD_1020: [&str; 19] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz", "C4", "T8", "P7", "P3", "Pz", "P4", "P8", "O1", "O2",
];

/// Idealized spherical coordinates in degrees: (angle from the vertex Cz,
/// azimuth from the right ear towards the nose). +x right, +y nasion, +z up.
const STANDARD_1020_SPHERICAL: [(f64, f64); 19] = [
    (72.0, 108.0), // Fp1
    (72.0, 72.0),  // Fp2
    (72.0, 144.0), // F7
    (51.0, 129.0), // F3
    (36.0, 90.0),  // Fz
    (51.0, 51.0),  // F4
    (72.0, 36.0),  // F8
    (72.0, 180.0), // T7
    (36.0, 180.0), // C3
    (0.0, 0.0),    // Cz
    (36.0, 0.0),   // C4
    (72.0, 0.0),   // T8
    (72.0, 216.0), // P7
    (51.0, 231.0), // P3
    (36.0, 270.0), // Pz
    (51.0, 309.0), // P4
    (72.0, 324.0), // P8
    (72.0, 252.0), // O1
    (72.0, 288.0), // O2
];

/// Older 10–20 names mapped to their modern equivalents.
const ALIASES: [(&str, &str); 4] = [("T3", "T7"), ("T4", "T8"), ("T5", "P7"), ("T6", "P8")];

pub type Position = [f64; 3];

pub fn canonical_name(name: &str) -> &str {
    ALIASES
        .iter()
        .find(|(old, _)| old.eq_ignore_ascii_case(name))
        .map_or(name, |(_, new)| new)
}

fn same_channel(a: &str, b: &str) -> bool {
    canonical_name(a).eq_ignore_ascii_case(canonical_name(b))
}

pub fn spherical_to_unit(polar_deg: f64, azimuth_deg: f64) -> Position {
    let (t, p) = (polar_deg.to_radians(), azimuth_deg.to_radians());
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

/// Named electrode set with unit-sphere positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MontageSpec {
    names: Vec<String>,
    positions: Vec<Position>,
}

impl MontageSpec {
    pub fn new(names: Vec<String>, positions: Vec<Position>) -> Result<Self> {
        if names.len() != positions.len() {
            return Err(Error::InvalidMontage(format!("{} names, {} positions", names.len(), positions.len())));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].iter().any(|m| same_channel(m, n)) {
                return Err(Error::InvalidMontage(format!("duplicate channel {n}")));
            }
        }
        for (n, p) in names.iter().zip(&positions) {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !p.iter().all(|v| v.is_finite()) || (norm - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMontage(format!("position of {n} is not on the unit sphere (norm {norm})")));
            }
        }
        Ok(MontageSpec { names, positions })
    }

    /// Built-in 19-channel 10–20 montage.
    pub fn standard_1020() -> Self {
        let names = STANDARD_1020.iter().map(|s| s.to_string()).collect();
        let positions = STANDARD_1020_SPHERICAL.iter().map(|&(t, p)| spherical_to_unit(t, p)).collect();
        MontageSpec { names, positions }
    }

    /// Loads `{"name": [x, y, z], ...}`; positions are projected onto the
    /// unit sphere and the file order is kept.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut names = Vec::with_capacity(map.len());
        let mut positions = Vec::with_capacity(map.len());
        for (name, v) in map {
            let xyz: [f64; 3] = serde_json::from_value(v)?;
            let norm = xyz.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::InvalidMontage(format!("degenerate position for {name}")));
            }
            positions.push(xyz.map(|v| v / norm));
            names.push(name);
        }
        MontageSpec::new(names, positions)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> =
            self.names.iter().zip(&self.positions).map(|(n, p)| (n.clone(), serde_json::json!(p))).collect();
        serde_json::to_string_pretty(&map).unwrap()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| same_channel(n, name))
    }

    pub fn position(&self, name: &str) -> Option<Position> {
        self.index_of(name).map(|i| self.positions[i])
    }

    pub fn subset(&self, names: &[&str]) -> Result<MontageSpec> {
        let mut n = Vec::new();
        let mut p = Vec::new();
        for name in names {
            let pos = self.position(name).ok_or_else(|| Error::UnknownChannel(name.to_string()))?;
            n.push(name.to_string());
            p.push(pos);
        }
        MontageSpec::new(n, p)
    }
}

/// Legendre polynomials `P_0(x) ..= P_n_max(x)` by the Bonnet recurrence
/// `(n+1) P_{n+1} = (2n+1) x P_n − n P_{n−1}`.
pub fn legendre_all(n_max: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(1.0);
    if n_max >= 1 {
        p.push(x);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    Ok(p)
}

pub fn legendre(n: usize, x: f64) -> Result<f64> {
    Ok(legendre_all(n, x)?[n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineParams {
    /// Smoothing order `m` (≥ 2).
    pub order: u32,
    /// Ridge added to the kernel diagonal.
    pub lambda: f64,
    /// Series truncation length (≥ 7).
    pub n_terms: usize,
}

impl Default for SplineParams {
    fn default() -> Self {
        SplineParams { order: 4, lambda: 1e-5, n_terms: 50 }
    }
}

impl SplineParams {
    pub fn with_lambda(lambda: f64) -> Self {
        SplineParams { lambda, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::Domain(format!("spline order {} < 2", self.order)));
        }
        if self.n_terms < 7 {
            return Err(Error::Domain(format!("n_terms {} < 7", self.n_terms)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda {} must be non-negative", self.lambda)));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        (0..=self.n_terms)
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    let nf = n as f64;
                    (2.0 * nf + 1.0) / (nf * (nf + 1.0)).powi(self.order as i32) / (4.0 * PI)
                }
            })
            .collect()
    }
}

/// Spherical spline kernel `g_m(x)` truncated after `n_terms` terms.
pub fn spline_kernel(x: f64, order: u32, n_terms: usize) -> Result<f64> {
    let params = SplineParams { order, lambda: 0.0, n_terms };
    params.validate()?;
    Kernel::new(&params).eval(x)
}

struct Kernel {
    weights: Vec<f64>,
}

impl Kernel {
    fn new(params: &SplineParams) -> Self {
        Kernel { weights: params.weights() }
    }

    fn eval(&self, x: f64) -> Result<f64> {
        let p = legendre_all(self.weights.len() - 1, x)?;
        Ok(self.weights.iter().zip(&p).map(|(w, p)| w * p).sum())
    }

    fn between(&self, a: &Position, b: &Position) -> f64 {
        // Clamped cosine, so eval cannot fail.
        self.eval(cosine(a, b)).unwrap()
    }
}

fn cosine(a: &Position, b: &Position) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Fitted spline: `V(r) = c0 + Σ_j c_j g_m(cos(r, r_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    pub params: SplineParams,
    pub c0: f64,
    pub c: Vec<f64>,
}

fn check_sources(src: &[Position]) -> Result<()> {
    if src.len() < 4 {
        return Err(Error::TooFewChannels { needed: 4, have: src.len() });
    }
    for i in 0..src.len() {
        for j in (i + 1)..src.len() {
            let d: f64 = src[i].iter().zip(&src[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d < 1e-9 {
                return Err(Error::SingularSystem(format!("source positions {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// Augmented system matrix `[[G_ss + λI, 1], [1ᵀ, 0]]`.
fn system_matrix(src: &[Position], params: &SplineParams) -> DMatrix<f64> {
    let kernel = Kernel::new(params);
    let n = src.len();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in i..n {
            let g = kernel.between(&src[i], &src[j]);
            a[(i, j)] = g;
            a[(j, i)] = g;
        }
        a[(i, i)] += params.lambda;
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
    }
    a
}

pub fn fit_spline(src: &[Position], values: &[f64], params: SplineParams) -> Result<SplineModel> {
    params.validate()?;
    check_sources(src)?;
    if values.len() != src.len() {
        return Err(Error::Shape(format!("{} values for {} positions", values.len(), src.len())));
    }
    let n = src.len();
    let a = system_matrix(src, &params);
    let rhs = DVector::from_iterator(n + 1, values.iter().copied().chain(std::iter::once(0.0)));
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("augmented spline matrix is singular".into()))?;
    let residual = (&a * &sol - &rhs).norm();
    let scale = DVector::from_column_slice(values).norm().max(1e-300);
    if !(residual <= 1e-8 * scale) {
        return Err(Error::SingularSystem(format!("solve residual {residual:e}")));
    }
    Ok(SplineModel { params, c0: sol[n], c: sol.as_slice()[..n].to_vec() })
}

/// Evaluates `T_d c0 + G_ds c` at the destination positions.
pub fn interpolate_at(model: &SplineModel, src: &[Position], dst: &[Position]) -> Result<Vec<f64>> {
    if src.len() != model.c.len() {
        return Err(Error::Shape(format!("model has {} coefficients, {} sources given", model.c.len(), src.len())));
    }
    let kernel = Kernel::new(&model.params);
    Ok(dst
        .iter()
        .map(|d| model.c0 + src.iter().zip(&model.c).map(|(s, c)| c * kernel.between(d, s)).sum::<f64>())
        .collect())
}

/// Precomputed linear map from source values to destination values. The
/// system matrix depends only on geometry, so one factorization serves every
/// time sample.
#[derive(Debug, Clone)]
pub struct SplineInterpolator {
    /// Row-major `[n_dst × n_src]`.
    weights: Vec<f64>,
    n_src: usize,
    n_dst: usize,
}

impl SplineInterpolator {
    pub fn new(src: &[Position], dst: &[Position], params: SplineParams) -> Result<Self> {
        params.validate()?;
        check_sources(src)?;
        let n = src.len();
        let m = dst.len();
        let kernel = Kernel::new(&params);
        let a = system_matrix(src, &params);
        // Rows of [G_ds  T_d]; solving Aᵀ Wᵀ = [G_ds T_d]ᵀ gives W = [G_ds T_d] A⁻¹.
        let mut e = DMatrix::<f64>::zeros(n + 1, m);
        for (k, d) in dst.iter().enumerate() {
            for (j, s) in src.iter().enumerate() {
                e[(j, k)] = kernel.between(d, s);
            }
            e[(n, k)] = 1.0;
        }
        let lu = a.transpose().lu();
        let sol = lu
            .solve(&e)
            .ok_or_else(|| Error::SingularSystem("augmented spline matrix is singular".into()))?;
        // Only the first n columns of W act on values; the last multiplies the zero constraint.
        let mut weights = vec![0.0; m * n];
        for k in 0..m {
            for j in 0..n {
                weights[k * n + j] = sol[(j, k)];
            }
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite interpolation weights".into()));
        }
        Ok(SplineInterpolator { weights, n_src: n, n_dst: m })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n_src);
        self.weights
            .chunks_exact(self.n_src)
            .map(|row| row.iter().zip(values).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Interpolates every sample of channel-major source rows.
    pub fn apply_rows(&self, rows: &[&[f32]]) -> Vec<Vec<f32>> {
        assert_eq!(rows.len(), self.n_src);
        let t = rows.first().map_or(0, |r| r.len());
        let mut out = vec![vec![0f32; t]; self.n_dst];
        let mut acc = vec![0f64; t];
        for (k, out_row) in out.iter_mut().enumerate() {
            acc.iter_mut().for_each(|v| *v = 0.0);
            for (j, row) in rows.iter().enumerate() {
                let w = self.weights[k * self.n_src + j];
                for (a, &v) in acc.iter_mut().zip(row.iter()) {
                    *a += w * v as f64;
                }
            }
            for (o, a) in out_row.iter_mut().zip(&acc) {
                *o = *a as f32;
            }
        }
        out
    }
}

/// Maps a recording onto `target`.
///
/// If every target channel is present, those rows are selected and the rest
/// discarded. Otherwise all input channels must have positions in
/// `known` (the target itself is always consulted first) and the missing
/// target channels are spline-interpolated from them.
pub fn harmonize_with(
    rec: &Recording,
    target: &MontageSpec,
    known: Option<&MontageSpec>,
    params: SplineParams,
) -> Result<Recording> {
    let present: Vec<Option<usize>> = target.names().iter().map(|n| rec.channels.iter().position(|c| same_channel(c, n))).collect();
    let out_names: Vec<String> = target.names().to_vec();
    if present.iter().all(Option::is_some) {
        let rows = present.iter().map(|i| rec.channel(i.unwrap()).to_vec()).collect();
        return Recording::new(rec.subject_id.clone(), rec.label, rec.fs, out_names, rows);
    }

    let mut lookup: HashMap<String, Position> = HashMap::new();
    if let Some(k) = known {
        for (n, p) in k.names().iter().zip(k.positions()) {
            lookup.insert(canonical_name(n).to_ascii_lowercase(), *p);
        }
    }
    for (n, p) in target.names().iter().zip(target.positions()) {
        lookup.insert(canonical_name(n).to_ascii_lowercase(), *p);
    }
    let src_pos = rec
        .channels
        .iter()
        .map(|c| lookup.get(&canonical_name(c).to_ascii_lowercase()).copied().ok_or_else(|| Error::UnknownChannel(c.clone())))
        .collect::<Result<Vec<_>>>()?;
    if src_pos.len() < 4 {
        return Err(Error::TooFewChannels { needed: 4, have: src_pos.len() });
    }
    let missing: Vec<usize> = (0..target.len()).filter(|&i| present[i].is_none()).collect();
    let dst_pos: Vec<Position> = missing.iter().map(|&i| target.positions()[i]).collect();
    let interp = SplineInterpolator::new(&src_pos, &dst_pos, params)?;
    let src_rows: Vec<&[f32]> = (0..rec.n_channels()).map(|i| rec.channel(i)).collect();
    let mut filled = interp.apply_rows(&src_rows).into_iter();
    let rows = present
        .iter()
        .map(|p| match p {
            Some(i) => rec.channel(*i).to_vec(),
            None => filled.next().unwrap(),
        })
        .collect();
    Recording::new(rec.subject_id.clone(), rec.label, rec.fs, out_names, rows)
}

/// [`harmonize_with`] using the built-in positions and default spline
/// parameters.
pub fn harmonize(rec: &Recording, target: &MontageSpec) -> Result<Recording> {
    harmonize_with(rec, target, None, SplineParams::default())
}
