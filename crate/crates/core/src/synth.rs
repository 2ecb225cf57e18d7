//! Synthetic datasets with known intrinsic dimension.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::dataset::{DatasetMeta, PointSet};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};

/// Default sample size for the sinusoidal manifold.
pub const SINUSOID_DEFAULT_N: usize = 20_000;
/// Ambient dimensions used for the sinusoidal manifold sweeps.
pub const SINUSOID_DIMS: [usize; 4] = [10, 30, 50, 80];

pub const SWISSROLL_T_RANGE: (f64, f64) = (1.5 * PI, 4.5 * PI);
pub const SWISSROLL_HEIGHT: f64 = 20.0;
pub const SWISSROLL_DEFAULT_NOISE: f64 = 0.5;

/// Image of `t` under the sinusoidal embedding
/// `sqrt(2/D) (sin t, cos t, sin 2t, cos 2t, …, sin(Dt/2), cos(Dt/2))`.
pub fn sinusoid_point(t: f64, dim: usize) -> Vec<f64> {
    let scale = (2.0 / dim as f64).sqrt();
    let mut p = Vec::with_capacity(dim);
    for j in 1..=dim / 2 {
        let (s, c) = (j as f64 * t).sin_cos();
        p.push(scale * s);
        p.push(scale * c);
    }
    p
}

/// One-dimensional closed curve in `R^D` sampled at `t ~ U[0, 2π]`.
/// Responses are the `t` values.
pub fn sinusoid_manifold(n: usize, dim: usize, seed: u64) -> Result<PointSet> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::param(format!(
            "sinusoid manifold needs an even ambient dimension, got {dim}"
        )));
    }
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.random::<f64>() * TAU;
        data.extend(sinusoid_point(t, dim));
        ts.push(t);
    }
    Ok(PointSet::new(dim, data)?
        .with_responses(ts)?
        .with_meta(DatasetMeta {
            generator: "sinusoid".into(),
            seed: Some(seed),
            params: json!({ "n": n, "D": dim }),
        }))
}

/// Swiss roll `(t cos t, h, t sin t)` in `R^3` with `t ~ U[3π/2, 9π/2]`,
/// `h ~ U[0, 20]` and isotropic Gaussian noise. Responses are the `t` values.
pub fn noisy_swissroll(n: usize, noise_sigma: f64, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::param(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = SWISSROLL_T_RANGE;
    let mut data = Vec::with_capacity(n * 3);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = t0 + (t1 - t0) * rng.random::<f64>();
        let h = SWISSROLL_HEIGHT * rng.random::<f64>();
        let base = [t * t.cos(), h, t * t.sin()];
        for b in base {
            let noise: f64 = if noise_sigma > 0.0 {
                noise_sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            data.push(b + noise);
        }
        ts.push(t);
    }
    Ok(PointSet::new(3, data)?
        .with_responses(ts)?
        .with_meta(DatasetMeta {
            generator: "swissroll".into(),
            seed: Some(seed),
            params: json!({ "n": n, "noise_sigma": noise_sigma }),
        }))
}

/// Random orthonormal basis of a `d`-dimensional subspace of `R^D`.
fn random_basis(rng: &mut ChaCha8Rng, dim: usize, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        // Two Gram-Schmidt passes keep the basis orthonormal to machine precision.
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Standard Gaussian sample inside a random `d`-dimensional linear subspace
/// of `R^D`.
pub fn affine_cloud(n: usize, dim: usize, d: usize, seed: u64) -> Result<PointSet> {
    if d == 0 || d > dim {
        return Err(Error::param(format!("need 1 <= d <= D, got d={d}, D={dim}")));
    }
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = random_basis(&mut rng, dim, d);
    let mut data = vec![0.0; n * dim];
    for row in data.chunks_exact_mut(dim) {
        for b in &basis {
            let z: f64 = rng.sample(StandardNormal);
            row.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
        }
    }
    Ok(PointSet::new(dim, data)?.with_meta(DatasetMeta {
        generator: "affine".into(),
        seed: Some(seed),
        params: json!({ "n": n, "D": dim, "d": d }),
    }))
}
