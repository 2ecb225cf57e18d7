//! Local covariance dimension.
//!
//! A distribution has covariance dimension `(d, ε)` when its top `d`
//! covariance eigenvalues carry at least a `1 − ε` share of the trace. The
//! local estimate `d(r)` averages that `d` over balls `B(x, r)` centered at
//! data points, and `n(r)` tracks how many points those balls hold.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::diameters::exact_max_diam_sq;
use crate::error::{Error, Result};
use crate::linalg::{covariance, covariance_spectrum, dist_sq, eig_sym, Spectrum, SymMatrix};

/// Variance-loss presets used for dimension profiles.
pub const DEFAULT_EPSILONS: [f64; 2] = [0.1, 0.01];
pub const DEFAULT_NUM_RADII: usize = 20;
pub const DEFAULT_CENTER_CAP: usize = 2000;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Smallest `d` whose top-`d` eigenvalues reach `(1 − ε)` of the trace.
/// Returns 0 for an all-zero spectrum. Slightly negative round-off
/// eigenvalues are treated as zero.
pub fn cov_dim(spectrum: &Spectrum, epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    let total: f64 = spectrum.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Ok(0);
    }
    let target = (1.0 - epsilon) * total;
    let mut prefix = 0.0;
    for (i, l) in spectrum.eigenvalues.iter().enumerate() {
        prefix += l.max(0.0);
        if prefix >= target {
            return Ok(i + 1);
        }
    }
    Ok(spectrum.dim())
}

/// `k = (λ_1 + … + λ_d) / λ_1`; always `k ≤ d`.
pub fn spectrum_ratio_k(spectrum: &Spectrum, d: usize) -> Result<f64> {
    if d == 0 || d > spectrum.dim() {
        return Err(Error::param(format!(
            "d must lie in 1..={}, got {d}",
            spectrum.dim()
        )));
    }
    let top = spectrum.eigenvalues[0];
    if !(top > 0.0) {
        return Err(Error::DegenerateCell("top eigenvalue is zero"));
    }
    Ok(spectrum.eigenvalues[..d].iter().sum::<f64>() / top)
}

/// `k` together with the covariance dimension it was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRatio {
    pub k: f64,
    pub d: usize,
    pub epsilon: f64,
}

impl SpectrumRatio {
    pub fn from_spectrum(spectrum: &Spectrum, epsilon: f64) -> Result<Self> {
        let d = cov_dim(spectrum, epsilon)?;
        if d == 0 {
            return Err(Error::DegenerateCell("all-zero spectrum"));
        }
        Ok(SpectrumRatio {
            k: spectrum_ratio_k(spectrum, d)?,
            d,
            epsilon,
        })
    }
}

/// Covariance dimension of one closed ball. `dim` is `None` when the ball
/// holds fewer than two points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDim {
    pub dim: Option<usize>,
    pub count: usize,
}

pub fn local_dim_at(data: &PointSet, center: &[f64], r: f64, epsilon: f64) -> Result<LocalDim> {
    check_epsilon(epsilon)?;
    if !(r > 0.0) {
        return Err(Error::param(format!("radius must be positive, got {r}")));
    }
    if center.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: center.len(),
        });
    }
    let r_sq = r * r;
    let ball: Vec<&[f64]> = data.iter().filter(|p| dist_sq(p, center) <= r_sq).collect();
    let count = ball.len();
    if count < 2 {
        return Ok(LocalDim { dim: None, count });
    }
    let spectrum = covariance_spectrum(&ball)?;
    Ok(LocalDim {
        dim: Some(cov_dim(&spectrum, epsilon)?),
        count,
    })
}

/// Settings for [`dimension_profiles`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_num_radii")]
    pub num_radii: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Maximum number of ball centers; larger sets are subsampled.
    #[serde(default = "default_center_cap")]
    pub center_cap: usize,
}

fn default_num_radii() -> usize {
    DEFAULT_NUM_RADII
}
fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}
fn default_center_cap() -> usize {
    DEFAULT_CENTER_CAP
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            num_radii: DEFAULT_NUM_RADII,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            center_cap: DEFAULT_CENTER_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub r: f64,
    /// Mean covariance dimension over centers whose ball holds at least two
    /// points; `None` if there is no such center.
    pub d_mean: Option<f64>,
    pub d_std: Option<f64>,
    /// Mean ball occupancy over all centers.
    pub n_mean: f64,
    pub valid_centers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionProfile {
    pub epsilon: f64,
    /// Largest interpoint distance of the data.
    pub diameter: f64,
    pub centers: usize,
    pub records: Vec<DimensionRecord>,
}

impl DimensionProfile {
    pub const CSV_HEADER: &'static str = "r,d_mean,d_std,n_mean,epsilon";

    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for rec in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                rec.r,
                rec.d_mean.unwrap_or(f64::NAN),
                rec.d_std.unwrap_or(f64::NAN),
                rec.n_mean,
                self.epsilon
            )?;
        }
        Ok(())
    }
}

/// Writes several profiles into one CSV (they share the header).
pub fn write_profiles_csv<W: Write>(profiles: &[DimensionProfile], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", DimensionProfile::CSV_HEADER)?;
    for p in profiles {
        p.write_csv_rows(&mut w)?;
    }
    Ok(())
}

pub(crate) fn select_centers(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    picked.sort_unstable();
    picked
}

/// Spectra of the nested balls around one center, one entry per radius.
/// Covariances are accumulated incrementally over points sorted by distance,
/// in coordinates relative to the center.
fn ball_spectra(data: &PointSet, center: usize, radii: &[f64]) -> Vec<(usize, Option<Spectrum>)> {
    let dim = data.dim();
    let c = data.point(center);
    let mut order: Vec<(f64, usize)> = (0..data.len()).map(|i| (dist_sq(data.point(i), c), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut sum = vec![0.0; dim];
    let mut outer = vec![0.0; dim * dim];
    let mut y = vec![0.0; dim];
    let mut taken = 0usize;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let r_sq = r * r;
        while taken < order.len() && order[taken].0 <= r_sq {
            let p = data.point(order[taken].1);
            for j in 0..dim {
                y[j] = p[j] - c[j];
                sum[j] += y[j];
            }
            for i in 0..dim {
                let yi = y[i];
                if yi == 0.0 {
                    continue;
                }
                let row = &mut outer[i * dim..(i + 1) * dim];
                for j in i..dim {
                    row[j] += yi * y[j];
                }
            }
            taken += 1;
        }
        if taken < 2 {
            out.push((taken, None));
            continue;
        }
        let spectrum = if taken < dim {
            let rows: Vec<&[f64]> = order[..taken].iter().map(|&(_, i)| data.point(i)).collect();
            covariance_spectrum(&rows).expect("nonempty ball")
        } else {
            let m = taken as f64;
            let mut cov = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in i..dim {
                    let v = outer[i * dim + j] / m - (sum[i] / m) * (sum[j] / m);
                    cov[i * dim + j] = v;
                    cov[j * dim + i] = v;
                }
            }
            let s = SymMatrix::new(dim, cov).expect("symmetric by construction");
            eig_sym(&s, false).expect("symmetric by construction")
        };
        out.push((taken, Some(spectrum)));
    }
    out
}

/// One profile per entry of `config.epsilons`, sharing the ball spectra.
///
/// Radii form the uniform grid `Δ·i/num_radii`, `i = 1..=num_radii`, where
/// `Δ` is the data diameter. Balls are closed. Per-center results are
/// aggregated in center order, so the output does not depend on how rayon
/// schedules the work.
pub fn dimension_profiles(data: &PointSet, config: &ProfileConfig, seed: u64) -> Result<Vec<DimensionProfile>> {
    if data.len() < 2 {
        return Err(Error::DegenerateData(
            "dimension profile needs at least two points".into(),
        ));
    }
    if config.num_radii == 0 {
        return Err(Error::param("num_radii must be at least 1"));
    }
    if config.center_cap == 0 {
        return Err(Error::param("center_cap must be at least 1"));
    }
    if config.epsilons.is_empty() {
        return Err(Error::param("at least one epsilon is required"));
    }
    for &e in &config.epsilons {
        check_epsilon(e)?;
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let diameter = exact_max_diam_sq(data, &all).sqrt();
    if diameter == 0.0 {
        return Err(Error::DegenerateData("all points are identical".into()));
    }
    let radii: Vec<f64> = (1..=config.num_radii)
        .map(|i| diameter * i as f64 / config.num_radii as f64)
        .collect();
    let centers = select_centers(data.len(), config.center_cap, seed);

    // per center: per radius: (count, dims per epsilon)
    let per_center: Vec<Vec<(usize, Option<Vec<usize>>)>> = centers
        .par_iter()
        .map(|&c| {
            ball_spectra(data, c, &radii)
                .into_iter()
                .map(|(count, spec)| {
                    let dims = spec.map(|s| {
                        config
                            .epsilons
                            .iter()
                            .map(|&e| cov_dim(&s, e).expect("epsilon checked"))
                            .collect()
                    });
                    (count, dims)
                })
                .collect()
        })
        .collect();

    let nc = centers.len() as f64;
    let profiles = config
        .epsilons
        .iter()
        .enumerate()
        .map(|(ei, &epsilon)| {
            let records = radii
                .iter()
                .enumerate()
                .map(|(ri, &r)| {
                    let mut n_sum = 0.0;
                    let mut ds = Vec::new();
                    for center in &per_center {
                        let (count, dims) = &center[ri];
                        n_sum += *count as f64;
                        if let Some(d) = dims {
                            ds.push(d[ei] as f64);
                        }
                    }
                    let (d_mean, d_std) = if ds.is_empty() {
                        (None, None)
                    } else {
                        let k = ds.len() as f64;
                        let mean = ds.iter().sum::<f64>() / k;
                        let var = ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / k;
                        (Some(mean), Some(var.sqrt()))
                    };
                    DimensionRecord {
                        r,
                        d_mean,
                        d_std,
                        n_mean: n_sum / nc,
                        valid_centers: ds.len(),
                    }
                })
                .collect();
            DimensionProfile {
                epsilon,
                diameter,
                centers: centers.len(),
                records,
            }
        })
        .collect();
    Ok(profiles)
}

/// Single-epsilon convenience wrapper around [`dimension_profiles`].
pub fn dimension_profile(
    data: &PointSet,
    num_radii: usize,
    epsilon: f64,
    center_cap: usize,
    seed: u64,
) -> Result<DimensionProfile> {
    let config = ProfileConfig {
        num_radii,
        epsilons: vec![epsilon],
        center_cap,
    };
    Ok(dimension_profiles(data, &config, seed)?.remove(0))
}

/// Covariance dimension of the whole data set.
pub fn global_cov_dim(data: &PointSet, epsilon: f64) -> Result<usize> {
    let rows: Vec<&[f64]> = data.iter().collect();
    cov_dim(&eig_sym(&covariance(&rows)?, false)?, epsilon)
}
