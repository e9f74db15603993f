//! Dense complex helpers shared by every module: Kronecker products,
//! Hermitian eigensolves and SVDs with a fixed (descending, stable) ordering.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn kron_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vector(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            out[i * b.len() + k] = a[i] * b[k];
        }
    }
    out
}

/// |x⟩⟨x|
pub fn outer(x: &CVector) -> CMatrix {
    x * x.adjoint()
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Largest entry of |X − X*|.
pub fn hermitian_deviation(x: &CMatrix) -> f64 {
    let (n, m) = x.shape();
    if n != m {
        return f64::INFINITY;
    }
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((x[(i, j)] - x[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

pub fn max_abs_entry(x: &CMatrix) -> f64 {
    x.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
/// Ties keep the solver's original order. Eigenvectors are the columns.
pub fn eigh(x: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = x.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(x).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(x: &CMatrix) -> Vec<f64> {
    eigh(x).0
}

/// Real symmetric eigendecomposition, descending.
pub fn eigh_real(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let sym = (x + x.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Thin SVD `X = U diag(s) V*` with singular values descending.
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// Columns are the right singular vectors (not conjugated).
    pub v: CMatrix,
}

pub fn svd(x: &CMatrix) -> Svd {
    let (u, singular_values, v) = checked_svd(x);
    Svd { u, singular_values, v }
}

pub struct RealSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_real(x: &DMatrix<f64>) -> RealSvd {
    let (u, singular_values, v) = checked_svd(x);
    RealSvd { u, singular_values, v }
}

pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    checked_svd(x).1
}

/// Relative recomposition error accepted from one SVD attempt.
const SVD_RECOMPOSE_TOL: f64 = 1e-11;

type SvdParts<T> = (DMatrix<T>, Vec<f64>, DMatrix<T>);

/// nalgebra's bidiagonal SVD occasionally returns a factorization that does
/// not recompose on rank-deficient input. Each attempt is checked; on failure
/// the adjoint and fixed orthogonal rotations of the input are tried, and the
/// factors are mapped back. The most accurate attempt is kept.
fn checked_svd<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> SvdParts<T> {
    let (rows, cols) = x.shape();
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let err = |p: &SvdParts<T>| {
        let s = DMatrix::from_diagonal(&DVector::from_iterator(p.1.len(), p.1.iter().map(|&v| T::from_real(v))));
        (&p.0 * s * p.2.adjoint() - x).norm() / scale
    };
    let mut best = raw_svd(x);
    let mut best_err = err(&best);
    if best_err <= SVD_RECOMPOSE_TOL {
        return best;
    }
    let mut consider = |p: SvdParts<T>| {
        let e = err(&p);
        if e < best_err {
            best = p;
            best_err = e;
        }
        best_err <= SVD_RECOMPOSE_TOL
    };
    let (v, s, u) = raw_svd(&x.adjoint());
    if consider((u, s, v)) {
        return best;
    }
    for seed in 1..=40 {
        let p = rotation::<T>(rows, seed);
        let q = rotation::<T>(cols, seed + 100);
        let (u, s, v) = raw_svd(&(&p * x * &q));
        if consider((p.adjoint() * u, s, &q * v)) {
            return best;
        }
    }
    best
}

/// Fixed real orthogonal matrix: a product of two Householder reflectors
/// with integer patterns determined by `seed`.
fn rotation<T: ComplexField<RealField = f64>>(n: usize, seed: usize) -> DMatrix<T> {
    let reflect = |shift: usize| {
        let w: Vec<f64> = (0..n).map(|i| ((i * (2 * shift + 1) + shift) % 11) as f64 - 5.0).collect();
        let nn: f64 = w.iter().map(|v| v * v).sum::<f64>().max(1.0);
        DMatrix::<f64>::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 2.0 * w[i] * w[j] / nn)
    };
    (reflect(seed) * reflect(seed + 37)).map(T::from_real)
}

/// One nalgebra SVD, sorted descending; V holds the right singular vectors.
fn raw_svd<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> SvdParts<T> {
    let (rows, cols) = x.shape();
    let k = rows.min(cols);
    let dec = x.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let mut uo = DMatrix::zeros(rows, k);
    let mut vo = DMatrix::zeros(cols, k);
    for (dst, &src) in order.iter().enumerate() {
        uo.set_column(dst, &u.column(src));
        vo.set_column(dst, &v_t.row(src).adjoint());
    }
    (uo, order.iter().map(|&i| dec.singular_values[i]).collect(), vo)
}

/// Operator (spectral) norm.
pub fn op_norm(x: &CMatrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    singular_values(x)[0]
}

/// Count of values above `rel_tol · max`.
pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|v| v.abs() > rel_tol * top).count()
}

pub fn matrix_rank(x: &CMatrix, rel_tol: f64) -> usize {
    numerical_rank(&singular_values(x), rel_tol)
}

/// Unitary `W` with `W x = y` for vectors of equal norm, built from one
/// complex Householder reflection and a global phase.
pub fn householder_to(x: &CVector, y: &CVector) -> Result<CMatrix> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Shape(format!("householder: lengths {} and {}", n, y.len())));
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || (nx - ny).abs() > 1e-10 * nx.max(ny) {
        return Err(Error::Domain(format!("householder: norms {nx} and {ny} differ")));
    }
    let overlap = y.dotc(x);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let z = y * phase;
    let u = x - &z;
    let uu = u.norm_squared();
    let h = if uu <= 1e-30 * nx * nx {
        identity(n)
    } else {
        identity(n) - (&u * u.adjoint()).scale(2.0 / uu)
    };
    Ok(h * phase.conj())
}

/// Square root and inverse square root of a Hermitian PSD matrix with the
/// spectrum floored at `floor`.
pub fn psd_sqrt_and_inv(x: &CMatrix, floor: f64) -> (CMatrix, CMatrix) {
    let (vals, vecs) = eigh(x);
    let n = vals.len();
    let mut s = CMatrix::zeros(n, n);
    let mut si = CMatrix::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        let v = v.max(floor);
        s[(i, i)] = r(v.sqrt());
        si[(i, i)] = r(1.0 / v.sqrt());
    }
    (
        &vecs * s * vecs.adjoint(),
        &vecs * si * vecs.adjoint(),
    )
}

/// Orthonormal completion of the given orthonormal columns to a full basis,
/// by Gram–Schmidt against the canonical vectors.
pub fn complete_basis(cols: &[CVector], dim: usize) -> Vec<CVector> {
    let mut out: Vec<CVector> = cols.to_vec();
    for i in 0..dim {
        if out.len() == dim {
            break;
        }
        let mut e = CVector::zeros(dim);
        e[i] = ONE;
        for _ in 0..2 {
            for b in &out {
                let p = b.dotc(&e);
                e -= b * p;
            }
        }
        let nrm = e.norm();
        if nrm > 1e-8 {
            out.push(e.unscale(nrm));
        }
    }
    out
}

/// Multiplies `v` by the phase that makes its first entry above `tol`
/// real and positive. Returns that phase.
pub fn fix_phase(v: &mut CVector, tol: f64) -> C64 {
    let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for z in v.iter() {
        if z.norm() > tol * scale {
            let ph = (z / z.norm()).conj();
            *v *= ph;
            return ph;
        }
    }
    ONE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_diagonals() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![r(1.0), r(2.0)]));
        let b = CMatrix::from_diagonal(&CVector::from_vec(vec![r(3.0), r(4.0)]));
        let k = kron_matrix(&a, &b);
        let expect = [3.0, 4.0, 6.0, 8.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert_eq!(k[(i, j)], r(want));
            }
        }
    }

    #[test]
    fn householder_maps_vector() {
        let x = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), ZERO]);
        let y = CVector::from_vec(vec![ZERO, ZERO, c(0.0, 1.0)]);
        let w = householder_to(&x, &y).unwrap();
        assert!((&w * &x - &y).norm() < 1e-14);
        assert!((w.adjoint() * &w - identity(3)).norm() < 1e-14);
        // x already equal to y
        let w = householder_to(&y, &y).unwrap();
        assert!((&w * &y - &y).norm() < 1e-14);
    }

    #[test]
    fn eigh_is_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![r(-1.0), r(3.0), r(0.5)]));
        let (vals, vecs) = eigh(&m);
        assert_eq!(vals, vec![3.0, 0.5, -1.0]);
        let back = &vecs * CMatrix::from_diagonal(&CVector::from_vec(vals.iter().map(|&v| r(v)).collect())) * vecs.adjoint();
        assert!((back - m).norm() < 1e-14);
    }

    #[test]
    fn svd_reconstructs() {
        let m = CMatrix::from_fn(3, 5, |i, j| c((i * 5 + j) as f64 * 0.3 - 1.0, (i as f64) - 0.2 * j as f64));
        let s = svd(&m);
        let mut back = CMatrix::zeros(3, 5);
        for k in 0..s.singular_values.len() {
            back += s.u.column(k) * s.v.column(k).adjoint() * r(s.singular_values[k]);
        }
        assert!((back - &m).norm() < 1e-12);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}
