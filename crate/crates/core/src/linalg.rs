//! Dense vector and small symmetric-matrix primitives.
//!
//! Everything here works on plain `f64` slices. Matrices are small (the
//! ambient dimension of the data, rarely above a couple hundred), so the
//! symmetric eigensolver is a cyclic Jacobi sweep and the principal direction
//! uses power iteration with a Jacobi fallback.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Absolute tolerance for the symmetry check on [`SymMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;

const POWER_MAX_ITERS: usize = 10_000;
const POWER_RESIDUAL_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn check_dims(points: &[&[f64]]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyCell("no points"))?;
    let dim = first.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
    }
    Ok(dim)
}

/// Coordinate-wise arithmetic mean.
pub fn mean(points: &[&[f64]]) -> Result<Vec<f64>> {
    let dim = check_dims(points)?;
    let mut acc = vec![0.0; dim];
    for p in points {
        for (a, x) in acc.iter_mut().zip(p.iter()) {
            *a += x;
        }
    }
    let m = points.len() as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    Ok(acc)
}

/// Population covariance `(1/m) Σ (x - mean)(x - mean)^T`.
pub fn covariance(points: &[&[f64]]) -> Result<SymMatrix> {
    let dim = check_dims(points)?;
    let mu = mean(points)?;
    let mut data = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for p in points {
        for (c, (x, m)) in centered.iter_mut().zip(p.iter().zip(&mu)) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut data[i * dim..(i + 1) * dim];
            for j in i..dim {
                row[j] += ci * centered[j];
            }
        }
    }
    let m = points.len() as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = data[i * dim + j] / m;
            data[i * dim + j] = v;
            data[j * dim + i] = v;
        }
    }
    Ok(SymMatrix { dim, data })
}

/// Mean squared distance to the mean, i.e. `trace(covariance(points))`,
/// computed without forming the matrix.
pub fn total_variance(points: &[&[f64]]) -> Result<f64> {
    let mu = mean(points)?;
    let ss: f64 = points.iter().map(|p| dist_sq(p, &mu)).sum();
    Ok(ss / points.len() as f64)
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, rejecting non-square,
    /// non-finite or non-symmetric input.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {dim}x{dim} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let m = SymMatrix { dim, data };
        m.check_symmetric()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::InvalidMatrix("matrix is not square".into()));
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim]).expect("identity is symmetric")
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    fn check_symmetric(&self) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.data[i * n + j], self.data[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| dot(row, v))
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Eigenvalues sorted in descending order, optionally with matching
/// orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl Spectrum {
    /// Wraps a list of eigenvalues, sorting them in descending order.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Spectrum {
            eigenvalues,
            eigenvectors: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Flips `v` so its first nonzero coordinate is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().copied().find(|x| *x != 0.0) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym(s: &SymMatrix, want_vectors: bool) -> Result<Spectrum> {
    s.check_symmetric()?;
    let n = s.dim;
    let mut a = s.data.clone();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        (0..n).for_each(|i| id[i * n + i] = 1.0);
        Some(id)
    } else {
        None
    };

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = frob * 1e-15;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - sn * vkq;
                        v[k * n + q] = sn * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = v.map(|v| {
        order
            .iter()
            .map(|&col| {
                let mut e: Vec<f64> = (0..n).map(|k| v[k * n + col]).collect();
                canonical_sign(&mut e);
                e
            })
            .collect()
    });
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn power_iteration(s: &SymMatrix) -> Option<Vec<f64>> {
    let n = s.dim;
    // Fixed irregular weights keep the start vector off any structured
    // eigenspace (e.g. the all-ones direction).
    let w: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let mut v = s.mul_vec(&w);
    if normalize(&mut v) == 0.0 {
        v = w;
        normalize(&mut v);
    }
    let scale = (s.trace() / n as f64).abs().max(s.max_abs());
    for _ in 0..POWER_MAX_ITERS {
        let mut y = s.mul_vec(&v);
        let lambda = dot(&v, &y);
        let residual: f64 = y
            .iter()
            .zip(&v)
            .map(|(yi, vi)| (yi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_RESIDUAL_TOL * scale {
            return (lambda >= 0.0).then_some(v);
        }
        if normalize(&mut y) == 0.0 {
            return None;
        }
        v = y;
    }
    None
}

/// Unit eigenvector for the largest eigenvalue.
///
/// Power iteration first; when it stalls (near-tied top eigenvalues) or lands
/// on a negative eigenvalue, the full Jacobi decomposition decides.
pub fn top_eigenvector(s: &SymMatrix) -> Result<Vec<f64>> {
    if !(s.trace() > 0.0) {
        return Err(Error::DegenerateCell("zero trace"));
    }
    let mut v = match power_iteration(s) {
        Some(v) => v,
        None => {
            let spec = eig_sym(s, true)?;
            spec.eigenvectors.expect("requested vectors").swap_remove(0)
        }
    };
    canonical_sign(&mut v);
    Ok(v)
}

fn centered_rows(points: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let mu = mean(points)?;
    Ok(points
        .iter()
        .map(|p| p.iter().zip(&mu).map(|(x, m)| x - m).collect())
        .collect())
}

/// `(1/m) Y Y^T` for centered rows `Y`; shares its nonzero spectrum with the
/// covariance matrix.
fn gram(centered: &[Vec<f64>]) -> SymMatrix {
    let m = centered.len();
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let g = dot(&centered[i], &centered[j]) / m as f64;
            data[i * m + j] = g;
            data[j * m + i] = g;
        }
    }
    SymMatrix { dim: m, data }
}

/// Eigenvalues of the population covariance of `points`, padded with zeros
/// to the ambient dimension. Uses the Gram matrix when there are fewer points
/// than dimensions.
pub fn covariance_spectrum(points: &[&[f64]]) -> Result<Spectrum> {
    let dim = check_dims(points)?;
    if points.len() < dim {
        let g = gram(&centered_rows(points)?);
        let mut values = eig_sym(&g, false)?.eigenvalues;
        values.resize(dim, 0.0);
        Ok(Spectrum::from_eigenvalues(values))
    } else {
        eig_sym(&covariance(points)?, false)
    }
}

/// Principal direction of `points` (top eigenvector of their covariance),
/// routed through the Gram matrix when there are fewer points than
/// dimensions.
pub fn principal_direction(points: &[&[f64]]) -> Result<Vec<f64>> {
    let dim = check_dims(points)?;
    if points.len() >= dim {
        return top_eigenvector(&covariance(points)?);
    }
    let centered = centered_rows(points)?;
    let u = top_eigenvector(&gram(&centered))?;
    let mut v = vec![0.0; dim];
    for (row, ui) in centered.iter().zip(&u) {
        for (vk, yk) in v.iter_mut().zip(row) {
            *vk += ui * yk;
        }
    }
    if normalize(&mut v) == 0.0 {
        return Err(Error::DegenerateCell("zero trace"));
    }
    canonical_sign(&mut v);
    Ok(v)
}

/// Uniform direction on the unit sphere `S^{dim-1}` (normalized Gaussian).
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1, "sphere dimension must be at least 1");
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}
