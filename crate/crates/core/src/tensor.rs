//! Bipartite and four-site carriers: kets, operators, partial traces and
//! transposes, flip and symmetric projector, spectral positivity checks.
//!
//! Index convention: a site tuple `(i1, .., ir)` with dims `(d1, .., dr)` maps
//! to the row-major flat index, matching the Kronecker product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, ONE, ZERO};

/// Largest total dimension any carrier may have.
pub const DESK_CAP: usize = 4096;

/// Relative cut for numerical ranks (σᵢ > tol·σ₁).
pub const RANK_TOL: f64 = 1e-9;
/// Relative margin for positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-8;
/// Relative tolerance on |X − X*| when a Hermitian operator is required.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Shape(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteShape {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::Shape(format!("dimensions must be positive, got ({dim_a}, {dim_b})")));
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }
}

impl Shape {
    pub fn single(d: usize) -> Self {
        Shape(vec![d])
    }

    pub fn bipartite(m: usize, n: usize) -> Self {
        Shape(vec![m, n])
    }

    pub fn four_site(m: usize, n: usize) -> Self {
        Shape(vec![m, n, m, n])
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || self.0.contains(&0) {
            return Err(Error::Shape(format!("invalid shape {:?}", self.0)));
        }
        let mut total: usize = 1;
        for &d in &self.0 {
            total = total.saturating_mul(d);
        }
        if total > DESK_CAP {
            return Err(Error::Size { dim: total, cap: DESK_CAP });
        }
        Ok(())
    }

    /// The shape as a two-party split. Four-site shapes split as (m·n | m·n).
    pub fn as_bipartite(&self) -> Result<BipartiteShape> {
        match self.0.as_slice() {
            [a, b] => BipartiteShape::new(*a, *b),
            [m, n, m2, n2] if m == m2 && n == n2 => BipartiteShape::new(m * n, m * n),
            other => Err(Error::Shape(format!("expected a bipartite shape, got {other:?}"))),
        }
    }

    pub fn as_four_site(&self) -> Result<(usize, usize)> {
        match self.0.as_slice() {
            [m, n, m2, n2] if m == m2 && n == n2 => Ok((*m, *n)),
            other => Err(Error::Shape(format!("expected a four-site shape (m,n,m,n), got {other:?}"))),
        }
    }

    fn concat(&self, other: &Shape) -> Shape {
        let mut dims = self.0.clone();
        dims.extend_from_slice(&other.0);
        Shape(dims)
    }
}

impl From<BipartiteShape> for Shape {
    fn from(s: BipartiteShape) -> Self {
        Shape(vec![s.dim_a, s.dim_b])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::json::KetJson", try_from = "crate::json::KetJson")]
pub struct Ket {
    pub entries: CVector,
    pub shape: Shape,
}

impl Ket {
    pub fn new(entries: CVector, shape: Shape) -> Result<Self> {
        shape.validate()?;
        if entries.len() != shape.total() {
            return Err(Error::Shape(format!(
                "ket of length {} does not match shape {:?}",
                entries.len(),
                shape.0
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("ket has non-finite entries".into()));
        }
        Ok(Self { entries, shape })
    }

    pub fn single(entries: CVector) -> Result<Self> {
        let d = entries.len();
        Self::new(entries, Shape::single(d))
    }

    pub fn bipartite(entries: CVector, m: usize, n: usize) -> Result<Self> {
        Self::new(entries, Shape::bipartite(m, n))
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = CVector::zeros(d);
        v[i] = ONE;
        Ket { entries: v, shape: Shape::single(d) }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero vector".into()));
        }
        Ok(Ket { entries: self.entries.unscale(n), shape: self.shape.clone() })
    }

    pub fn with_shape(mut self, shape: Shape) -> Result<Self> {
        shape.validate()?;
        if shape.total() != self.dim() {
            return Err(Error::Shape(format!("cannot reshape length {} to {:?}", self.dim(), shape.0)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn kron(&self, other: &Ket) -> Result<Ket> {
        let shape = self.shape.concat(&other.shape);
        shape.validate()?;
        Ok(Ket { entries: linalg::kron_vector(&self.entries, &other.entries), shape })
    }

    /// |w⟩⟨w| carrying the ket's shape.
    pub fn projector(&self) -> Operator {
        Operator {
            matrix: linalg::outer(&self.entries),
            shape: self.shape.clone(),
            hermitian: true,
        }
    }

    pub fn conj(&self) -> Ket {
        Ket { entries: self.entries.map(|z| z.conj()), shape: self.shape.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::json::OperatorJson", try_from = "crate::json::OperatorJson")]
pub struct Operator {
    pub matrix: CMatrix,
    pub shape: Shape,
    pub hermitian: bool,
}

impl Operator {
    pub fn new(matrix: CMatrix, shape: Shape) -> Result<Self> {
        shape.validate()?;
        let (rows, cols) = matrix.shape();
        if rows != cols || rows != shape.total() {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} does not match shape {:?}",
                shape.0
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator has non-finite entries".into()));
        }
        Ok(Self { matrix, shape, hermitian: false })
    }

    /// Builds an operator and asserts Hermiticity within [`HERMITIAN_TOL`].
    pub fn hermitian(matrix: CMatrix, shape: Shape) -> Result<Self> {
        let mut op = Self::new(matrix, shape)?;
        op.require_hermitian()?;
        op.hermitian = true;
        Ok(op)
    }

    pub fn bipartite(matrix: CMatrix, m: usize, n: usize) -> Result<Self> {
        Self::new(matrix, Shape::bipartite(m, n))
    }

    pub fn identity(shape: Shape) -> Result<Self> {
        shape.validate()?;
        let d = shape.total();
        Ok(Self { matrix: linalg::identity(d), shape, hermitian: true })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn bipartite_shape(&self) -> Result<BipartiteShape> {
        self.shape.as_bipartite()
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let dev = linalg::hermitian_deviation(&self.matrix);
        let scale = linalg::max_abs_entry(&self.matrix).max(f64::MIN_POSITIVE);
        if dev > HERMITIAN_TOL * scale.max(1e-300) && dev > 0.0 {
            return Err(Error::Hermiticity { deviation: dev });
        }
        Ok(())
    }

    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        let shape = self.shape.concat(&other.shape);
        shape.validate()?;
        Ok(Operator {
            matrix: linalg::kron_matrix(&self.matrix, &other.matrix),
            shape,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { matrix: self.matrix.scale(s), shape: self.shape.clone(), hermitian: self.hermitian }
    }

    pub fn trace(&self) -> linalg::C64 {
        self.matrix.trace()
    }

    /// Tr_A: traces out the first party, result acts on the second.
    pub fn partial_trace_left(&self) -> Result<CMatrix> {
        let s = self.bipartite_shape()?;
        Ok(partial_trace_left(&self.matrix, s))
    }

    /// Tr_B: traces out the second party.
    pub fn partial_trace_right(&self) -> Result<CMatrix> {
        let s = self.bipartite_shape()?;
        Ok(partial_trace_right(&self.matrix, s))
    }

    /// Traces out sites 1 and 3 of an (m, n, m, n) operator.
    pub fn partial_trace_sites_13(&self) -> Result<Operator> {
        let (m, n) = self.shape.as_four_site()?;
        let mut out = CMatrix::zeros(n * n, n * n);
        let idx = |i1: usize, i2: usize, i3: usize, i4: usize| ((i1 * n + i2) * m + i3) * n + i4;
        for i2 in 0..n {
            for i4 in 0..n {
                for j2 in 0..n {
                    for j4 in 0..n {
                        let mut acc = ZERO;
                        for i1 in 0..m {
                            for i3 in 0..m {
                                acc += self.matrix[(idx(i1, i2, i3, i4), idx(i1, j2, i3, j4))];
                            }
                        }
                        out[(i2 * n + i4, j2 * n + j4)] = acc;
                    }
                }
            }
        }
        Ok(Operator { matrix: out, shape: Shape::bipartite(n, n), hermitian: self.hermitian })
    }

    /// Γ: transpose of the second factor.
    pub fn partial_transpose_right(&self) -> Result<Operator> {
        let s = self.bipartite_shape()?;
        Ok(Operator {
            matrix: partial_transpose_right(&self.matrix, s),
            shape: self.shape.clone(),
            hermitian: self.hermitian,
        })
    }

    pub fn partial_transpose_left(&self) -> Result<Operator> {
        let s = self.bipartite_shape()?;
        Ok(Operator {
            matrix: partial_transpose_left(&self.matrix, s),
            shape: self.shape.clone(),
            hermitian: self.hermitian,
        })
    }
}

pub fn partial_trace_left(x: &CMatrix, s: BipartiteShape) -> CMatrix {
    let (a, b) = (s.dim_a, s.dim_b);
    CMatrix::from_fn(b, b, |k, l| (0..a).map(|i| x[(i * b + k, i * b + l)]).sum())
}

pub fn partial_trace_right(x: &CMatrix, s: BipartiteShape) -> CMatrix {
    let (a, b) = (s.dim_a, s.dim_b);
    CMatrix::from_fn(a, a, |i, j| (0..b).map(|k| x[(i * b + k, j * b + k)]).sum())
}

pub fn partial_transpose_right(x: &CMatrix, s: BipartiteShape) -> CMatrix {
    let (a, b) = (s.dim_a, s.dim_b);
    let mut out = CMatrix::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..a {
            for k in 0..b {
                for l in 0..b {
                    out[(i * b + k, j * b + l)] = x[(i * b + l, j * b + k)];
                }
            }
        }
    }
    out
}

pub fn partial_transpose_left(x: &CMatrix, s: BipartiteShape) -> CMatrix {
    let (a, b) = (s.dim_a, s.dim_b);
    let mut out = CMatrix::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..a {
            for k in 0..b {
                for l in 0..b {
                    out[(i * b + k, j * b + l)] = x[(j * b + k, i * b + l)];
                }
            }
        }
    }
    out
}

fn check_dim(d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if d.saturating_mul(d) > DESK_CAP {
        return Err(Error::Size { dim: d * d, cap: DESK_CAP });
    }
    Ok(())
}

/// F_d(|a⟩⊗|b⟩) = |b⟩⊗|a⟩.
pub fn flip(d: usize) -> Result<Operator> {
    check_dim(d)?;
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = ONE;
        }
    }
    Ok(Operator { matrix: m, shape: Shape::bipartite(d, d), hermitian: true })
}

/// Unnormalized projector onto the symmetric subspace, ½(Id + F_d).
pub fn sym_projector(d: usize) -> Result<Operator> {
    let f = flip(d)?;
    let m = (linalg::identity(d * d) + f.matrix).scale(0.5);
    Ok(Operator { matrix: m, shape: Shape::bipartite(d, d), hermitian: true })
}

/// ½(Id − F_d).
pub fn antisym_projector(d: usize) -> Result<Operator> {
    let f = flip(d)?;
    let m = (linalg::identity(d * d) - f.matrix).scale(0.5);
    Ok(Operator { matrix: m, shape: Shape::bipartite(d, d), hermitian: true })
}

/// |Φ⟩ = Σ_j |j⟩⊗|j⟩, unnormalized.
pub fn max_ent_unnormalized(n: usize) -> Result<Ket> {
    check_dim(n)?;
    let mut v = CVector::zeros(n * n);
    for j in 0..n {
        v[j * n + j] = ONE;
    }
    Ket::bipartite(v, n, n)
}

/// Tr(ρ²).
pub fn purity(rho: &CMatrix) -> Result<f64> {
    let (n, m) = rho.shape();
    if n != m {
        return Err(Error::Shape(format!("purity of a non-square {n}x{m} matrix")));
    }
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho[(i, j)] * rho[(j, i)];
        }
    }
    let scale = acc.norm().max(1.0);
    if acc.im.abs() > HERMITIAN_TOL * scale {
        return Err(Error::Hermiticity { deviation: acc.im.abs() });
    }
    Ok(acc.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub tolerance: f64,
    /// Largest |eigenvalue|; the margin is `tolerance · scale`.
    pub scale: f64,
}

impl SpectralReport {
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, tolerance: f64) -> Self {
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        SpectralReport {
            psd: min >= -tolerance * scale,
            min_eigenvalue: if eigenvalues.is_empty() { 0.0 } else { min },
            eigenvalues,
            tolerance,
            scale,
        }
    }
}

/// Full Hermitian eigensolve with the relative PSD margin `tol`.
pub fn psd_check(x: &CMatrix, tol: f64) -> Result<SpectralReport> {
    if x.nrows() != x.ncols() {
        return Err(Error::Shape("psd check of a non-square matrix".into()));
    }
    let dev = linalg::hermitian_deviation(x);
    let scale = linalg::max_abs_entry(x);
    if dev > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && dev > 0.0 {
        return Err(Error::Hermiticity { deviation: dev });
    }
    Ok(SpectralReport::from_eigenvalues(linalg::eigvalsh(x), tol))
}

/// Real scalar multiple of the identity on the given shape.
pub fn scaled_identity(shape: &Shape, s: f64) -> Result<Operator> {
    let id = Operator::identity(shape.clone())?;
    Ok(Operator { matrix: id.matrix.map(|z| z * r(s)), ..id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn ket(v: &[f64]) -> CVector {
        CVector::from_vec(v.iter().map(|&x| r(x)).collect())
    }

    #[test]
    fn kron_identities_and_basis_kets() {
        let i2 = Operator::identity(Shape::single(2)).unwrap();
        let i4 = i2.kron(&i2).unwrap();
        assert_eq!(i4.matrix, linalg::identity(4));
        assert_eq!(i4.shape, Shape::bipartite(2, 2));
        let k = Ket::basis(2, 0).kron(&Ket::basis(2, 1)).unwrap();
        assert_eq!(k.entries, ket(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_respects_cap() {
        let big = Operator::identity(Shape::single(64)).unwrap();
        let err = big.kron(&Operator::identity(Shape::single(65)).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let bell = Ket::bipartite(ket(&[s, 0.0, 0.0, s]), 2, 2).unwrap();
        let m = bell.projector().partial_trace_left().unwrap();
        assert!((m - linalg::identity(2).scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn marginal_of_basis_product() {
        let w = Ket::bipartite(ket(&[1.0, 0.0, 0.0, 0.0]), 2, 2).unwrap();
        let m = w.projector().partial_trace_left().unwrap();
        assert_eq!(m, CMatrix::from_diagonal(&ket(&[1.0, 0.0])));
    }

    #[test]
    fn sites_13_trace_of_identity() {
        let id = Operator::identity(Shape::four_site(2, 2)).unwrap();
        let t = id.partial_trace_sites_13().unwrap();
        assert_eq!(t.matrix, linalg::identity(4).scale(4.0));
    }

    #[test]
    fn sites_13_of_product() {
        let a = CMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0));
        let cc = CMatrix::from_fn(2, 2, |i, j| c(2.0 - i as f64, -(j as f64)));
        let d = CMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64, 0.5));
        let x = linalg::kron_matrix(&linalg::kron_matrix(&a, &b), &linalg::kron_matrix(&cc, &d));
        let op = Operator::new(x, Shape::four_site(2, 3)).unwrap();
        let t = op.partial_trace_sites_13().unwrap();
        let expect = linalg::kron_matrix(&b, &d) * (a.trace() * cc.trace());
        assert!((t.matrix - expect).norm() < 1e-12);
    }

    #[test]
    fn unnormalized_phi_transposes_to_flip() {
        let phi = max_ent_unnormalized(2).unwrap();
        let pt = phi.projector().partial_transpose_right().unwrap();
        assert_eq!(pt.matrix, flip(2).unwrap().matrix);
    }

    #[test]
    fn flip_basics() {
        let f = flip(2).unwrap();
        let k01 = ket(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(&f.matrix * k01, ket(&[0.0, 0.0, 1.0, 0.0]));
        let vals = linalg::eigvalsh(&f.matrix);
        let want = [1.0, 1.0, 1.0, -1.0];
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-12);
        }
        for d in 1..6 {
            assert_eq!(flip(d).unwrap().matrix.trace(), r(d as f64));
        }
        assert!(flip(0).is_err());
    }

    #[test]
    fn sym_projector_rank_and_kernel() {
        let p = sym_projector(2).unwrap();
        assert_eq!(linalg::matrix_rank(&p.matrix, RANK_TOL), 3);
        let singlet = ket(&[0.0, 1.0, -1.0, 0.0]);
        assert!((&p.matrix * singlet).norm() < 1e-15);
        assert!((&p.matrix * &p.matrix - &p.matrix).norm() < 1e-14);
    }

    #[test]
    fn sym_projector_partial_transpose_min_eig_is_half() {
        for d in 2..7 {
            let p = sym_projector(d).unwrap();
            let pt = p.partial_transpose_right().unwrap();
            let vals = linalg::eigvalsh(&pt.matrix);
            assert!((vals.last().unwrap() - 0.5).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn purity_values() {
        assert!((purity(&linalg::identity(2).scale(0.5)).unwrap() - 0.5).abs() < 1e-15);
        let w = Ket::bipartite(ket(&[0.6, 0.8, 0.0, 0.0]), 2, 2).unwrap();
        let m = w.projector().partial_trace_left().unwrap();
        assert!((purity(&m).unwrap() - 1.0).abs() < 1e-14);
        assert!(purity(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn psd_checks() {
        let rep = psd_check(&sym_projector(3).unwrap().matrix, PSD_TOL).unwrap();
        assert!(rep.psd);
        assert!(rep.min_eigenvalue.abs() < 1e-12);
        let rep = psd_check(&flip(2).unwrap().matrix, PSD_TOL).unwrap();
        assert!(!rep.psd);
        assert!((rep.min_eigenvalue + 1.0).abs() < 1e-12);
        let x = linalg::identity(4) - sym_projector(2).unwrap().matrix.scale(2.0);
        assert!(!psd_check(&x, PSD_TOL).unwrap().psd);
        let bad = CMatrix::from_fn(2, 2, |i, j| if i < j { ONE } else { ZERO });
        assert!(matches!(psd_check(&bad, PSD_TOL), Err(Error::Hermiticity { .. })));
    }

    #[test]
    fn max_ent_vectors() {
        assert_eq!(max_ent_unnormalized(2).unwrap().entries, ket(&[1.0, 0.0, 0.0, 1.0]));
        assert!((max_ent_unnormalized(3).unwrap().entries.norm_squared() - 3.0).abs() < 1e-15);
        let phi = max_ent_unnormalized(3).unwrap();
        assert_eq!(phi.projector().partial_trace_left().unwrap(), linalg::identity(3));
        assert!(max_ent_unnormalized(0).is_err());
    }
}
