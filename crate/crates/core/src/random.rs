//! Seeded random instances for property suites.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, CVector};

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    CVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    loop {
        let v = gaussian_vector(rng, d);
        let n = v.norm();
        if n > 1e-6 {
            return v.unscale(n);
        }
    }
}

pub fn real_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    loop {
        let v = CVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), 0.0));
        let n = v.norm();
        if n > 1e-6 {
            return v.unscale(n);
        }
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, d);
    (&g + g.adjoint()).scale(0.5)
}

pub fn real_symmetric<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), 0.0));
    (&g + g.transpose()).scale(0.5)
}

/// Haar-ish unitary from the QR factor of a Ginibre matrix, with the
/// diagonal phases of R removed.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..d {
        let z = rr[(j, j)];
        if z.norm() > 0.0 {
            let ph = z / z.norm();
            let mut col = q.column_mut(j);
            col *= ph;
        }
    }
    q
}

/// Random PSD matrix `G G*` of the given rank.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, rank);
    &g * g.adjoint()
}

/// Real symmetric positive definite matrix with spectrum in [floor, floor + d].
pub fn real_pd<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> CMatrix {
    let g = gaussian_matrix(rng, d, d).map(|z| c(z.re, 0.0));
    &g * g.transpose() + CMatrix::identity(d, d) * c(floor, 0.0)
}

/// Σᵢ pᵢ ρᵢ ⊗ σᵢ over `terms` products with ρᵢ real symmetric PD (ka × ka) and
/// σᵢ complex PD (kb × kb): positive definite, invariant under left partial
/// transpose, operator Schmidt rank `terms` generically.
pub fn invariant_separable<R: Rng + ?Sized>(rng: &mut R, ka: usize, kb: usize, terms: usize) -> CMatrix {
    let mut out = CMatrix::zeros(ka * kb, ka * kb);
    for _ in 0..terms {
        let p: f64 = 0.2 + rng.random::<f64>();
        let rho = real_pd(rng, ka, 0.1);
        let sigma = psd(rng, kb, kb) + CMatrix::identity(kb, kb) * c(0.1, 0.0);
        out += crate::linalg::kron_matrix(&rho, &sigma) * c(p, 0.0);
    }
    out
}

/// Unit vector on the antisymmetric subspace of C^k ⊗ C^k with Schmidt rank
/// 2·`pairs` (pairs ≤ k/2), built from a random skew block form.
pub fn antisymmetric_unit<R: Rng + ?Sized>(rng: &mut R, k: usize, pairs: usize) -> CVector {
    assert!(pairs >= 1 && 2 * pairs <= k);
    let u = unitary(rng, k);
    let mut v = CVector::zeros(k * k);
    for p in 0..pairs {
        let lam: f64 = 0.2 + rng.random::<f64>();
        let a = u.column(2 * p);
        let b = u.column(2 * p + 1);
        for i in 0..k {
            for j in 0..k {
                v[i * k + j] += (a[i] * b[j] - b[i] * a[j]) * lam;
            }
        }
    }
    let n = v.norm();
    v.unscale(n)
}

/// Generic vector on the antisymmetric subspace (projected Gaussian).
pub fn generic_antisymmetric_unit<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CVector {
    let g = gaussian_vector(rng, k * k);
    let mut v = CVector::zeros(k * k);
    for i in 0..k {
        for j in 0..k {
            v[i * k + j] = (g[i * k + j] - g[j * k + i]) * 0.5;
        }
    }
    let n = v.norm();
    v.unscale(n)
}
