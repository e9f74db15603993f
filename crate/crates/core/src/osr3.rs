//! Separability of left-partial-transpose invariant states with operator
//! Schmidt rank at most 3: normal form, the local congruence chain, the
//! explicit ensemble for the [[Id, L], [L, L²]] block and the SN ≤ k − 2 report.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, r, CMatrix, CVector, ONE};
use crate::ppt::{self, PptCertificate, ProductEnsemble, Provenance};
use crate::schmidt;
use crate::tensor::{self, BipartiteShape, Operator, Shape, PSD_TOL, RANK_TOL};

/// |m| below this fraction of max|M| counts as zero when choosing a branch.
pub const M_ZERO_GATE: f64 = 1e-10;
/// Stage checks (block structure, normalized corner) fail above this.
const STRUCTURE_TOL: f64 = 1e-6;

pub const OSR2_CITATION: &str = "PSD operators with operator Schmidt rank at most 2 are separable (external theorem)";
pub const RESIDUAL_CITATION: &str =
    "PSD operators of M_2 ⊗ M_k with operator Schmidt rank at most 3 are separable (external theorem)";

fn rel_frobenius(x: &CMatrix, reference: &CMatrix) -> f64 {
    x.norm() / reference.norm().max(f64::MIN_POSITIVE)
}

fn block(x: &CMatrix, i: usize, j: usize, kb: usize) -> CMatrix {
    x.view((i * kb, j * kb), (kb, kb)).into_owned()
}

fn realify(x: &CMatrix) -> CMatrix {
    x.map(|z| c(z.re, 0.0))
}

fn condition_number(x: &CMatrix) -> f64 {
    let sv = linalg::singular_values(x);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeftPtCheck {
    pub invariant: bool,
    /// ‖A − A^{Γ_left}‖_F / ‖A‖_F.
    pub residual: f64,
}

pub fn left_pt_invariance_check(a: &Operator, tol: f64) -> Result<LeftPtCheck> {
    let t = a.partial_transpose_left()?;
    let residual = rel_frobenius(&(&a.matrix - &t.matrix), &a.matrix);
    Ok(LeftPtCheck { invariant: residual <= tol, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalOp {
    pub side: Side,
    #[serde(with = "crate::json::cmat")]
    pub matrix: CMatrix,
    pub kind: String,
    pub label: String,
    pub condition_number: f64,
}

/// Congruences X ↦ (G ⊗ Id) X (G ⊗ Id)* or (Id ⊗ G) X (Id ⊗ G)*, in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalOpChain {
    pub shape: BipartiteShape,
    pub ops: Vec<LocalOp>,
}

impl LocalOpChain {
    pub fn new(shape: BipartiteShape) -> Self {
        LocalOpChain { shape, ops: Vec::new() }
    }

    pub fn push(&mut self, side: Side, matrix: CMatrix, label: &str) -> Result<()> {
        let want = match side {
            Side::Left => self.shape.dim_a,
            Side::Right => self.shape.dim_b,
        };
        if matrix.nrows() != want || matrix.ncols() != want {
            return Err(Error::Shape(format!("{label}: local operator must be {want}×{want}")));
        }
        let cond = condition_number(&matrix);
        if !cond.is_finite() {
            return Err(Error::NumericalDegeneracy(format!("{label}: local operator is singular")));
        }
        self.ops.push(LocalOp {
            side,
            matrix,
            kind: "congruence".into(),
            label: label.into(),
            condition_number: cond,
        });
        Ok(())
    }

    /// Composite (G_left, G_right) with the chain equal to one congruence by G_left ⊗ G_right.
    pub fn factors(&self) -> (CMatrix, CMatrix) {
        let mut l = linalg::identity(self.shape.dim_a);
        let mut rr = linalg::identity(self.shape.dim_b);
        for op in &self.ops {
            match op.side {
                Side::Left => l = &op.matrix * l,
                Side::Right => rr = &op.matrix * rr,
            }
        }
        (l, rr)
    }

    pub fn inverse_factors(&self) -> Result<(CMatrix, CMatrix)> {
        let (l, rr) = self.factors();
        let li = l.try_inverse().ok_or_else(|| Error::NumericalDegeneracy("left chain not invertible".into()))?;
        let ri = rr.try_inverse().ok_or_else(|| Error::NumericalDegeneracy("right chain not invertible".into()))?;
        Ok((li, ri))
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let (l, rr) = self.factors();
        let k = linalg::kron_matrix(&l, &rr);
        &k * x * k.adjoint()
    }

    pub fn replay_inverse(&self, x: &CMatrix) -> Result<CMatrix> {
        let (li, ri) = self.inverse_factors()?;
        let k = linalg::kron_matrix(&li, &ri);
        Ok(&k * x * k.adjoint())
    }

    /// Maps a ket of the final frame back to the input frame.
    pub fn map_ket_back(&self, v: &CVector) -> Result<CVector> {
        let (li, ri) = self.inverse_factors()?;
        Ok(linalg::kron_matrix(&li, &ri) * v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalForm {
    pub shape: BipartiteShape,
    pub n: usize,
    #[serde(with = "crate::json::cmat_list")]
    pub gammas: Vec<CMatrix>,
    #[serde(with = "crate::json::cmat_list")]
    pub deltas: Vec<CMatrix>,
    /// ‖A − Σ γᵢ⊗δᵢ‖_F / ‖A‖_F.
    pub residual: f64,
    /// max ‖(Id − P₁) γᵢ‖ / ‖γᵢ‖ with P₁ the range projector of γ₁.
    pub gamma_range_defect: f64,
    pub delta_range_defect: f64,
    pub gamma1_min_eig: f64,
    pub delta1_min_eig: f64,
    pub delta1_psd: bool,
    pub diagnostics: Vec<String>,
}

impl NormalForm {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.shape.total();
        self.gammas
            .iter()
            .zip(&self.deltas)
            .fold(CMatrix::zeros(d, d), |acc, (g, dl)| acc + linalg::kron_matrix(g, dl))
    }
}

fn range_projector(x: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::eigh(x);
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut p = CMatrix::zeros(x.nrows(), x.ncols());
    for (i, v) in vals.iter().enumerate() {
        if v.abs() > RANK_TOL * top {
            let col: CVector = vecs.column(i).into_owned();
            p += linalg::outer(&col);
        }
    }
    p
}

fn range_defect(p: &CMatrix, xs: &[CMatrix]) -> f64 {
    let id = linalg::identity(p.nrows());
    let q = id - p;
    xs.iter()
        .map(|x| (&q * x).norm() / x.norm().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max)
}

fn min_eig(x: &CMatrix) -> f64 {
    linalg::eigvalsh(x).into_iter().fold(f64::INFINITY, f64::min)
}

/// Tr_A((G ⊗ Id) A).
fn left_contract(g: &CMatrix, a: &CMatrix, s: BipartiteShape) -> CMatrix {
    let prod = linalg::kron_matrix(g, &linalg::identity(s.dim_b)) * a;
    linalg::hermitian_part(&tensor::partial_trace_left(&prod, s))
}

/// Solves A = Σ γᵢ⊗δᵢ for the δᵢ given a linearly independent Hermitian γ list.
fn solve_deltas(gammas: &[CMatrix], a: &CMatrix, s: BipartiteShape) -> Result<Vec<CMatrix>> {
    let n = gammas.len();
    let gram = DMatrix::<f64>::from_fn(n, n, |i, j| (&gammas[i] * &gammas[j]).trace().re);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::NormalForm("left factors are linearly dependent".into()))?;
    let rhs: Vec<CMatrix> = gammas.iter().map(|g| left_contract(g, a, s)).collect();
    Ok((0..n)
        .map(|i| {
            rhs.iter()
                .enumerate()
                .fold(CMatrix::zeros(s.dim_b, s.dim_b), |acc, (j, x)| acc + x * r(inv[(i, j)]))
        })
        .collect())
}

/// A = Σ γᵢ⊗δᵢ with γ₁ = Tr_B(A), the other γᵢ an HS-orthonormal Hermitian
/// completion of the left operator span, and the δᵢ solved from the Gram system.
pub fn normal_form(a: &Operator, tol: f64) -> Result<NormalForm> {
    let s = a.bipartite_shape()?;
    a.require_hermitian()?;
    let spec = tensor::psd_check(&a.matrix, PSD_TOL)?;
    if !spec.psd {
        return Err(Error::Precondition(format!("A is not PSD (min eigenvalue {:.3e})", spec.min_eigenvalue)));
    }
    let osd = schmidt::operator_schmidt_decompose(a, tol)?;
    let n = osd.rank;
    if n > 3 {
        return Err(Error::Rank { rank: n, reason: "normal form is implemented for operator Schmidt rank ≤ 3".into() });
    }
    let g1 = linalg::hermitian_part(&tensor::partial_trace_right(&a.matrix, s));
    let g1n = g1.norm();
    if g1n == 0.0 {
        return Err(Error::Degenerate("A has zero trace".into()));
    }
    let mut basis = vec![g1.unscale(g1n)];
    for op in &osd.left_operators {
        if basis.len() == n {
            break;
        }
        let mut x = op.clone();
        for _ in 0..2 {
            for b in &basis {
                let ip = (b * &x).trace().re;
                x -= b * r(ip);
            }
        }
        let nx = x.norm();
        if nx > 1e-8 {
            basis.push(linalg::hermitian_part(&x.unscale(nx)));
        }
    }
    if basis.len() != n {
        return Err(Error::NormalForm(format!(
            "Tr_B(A) is not in the {n}-dimensional left operator span"
        )));
    }
    let mut gammas = vec![g1];
    gammas.extend(basis.into_iter().skip(1));
    let deltas = solve_deltas(&gammas, &a.matrix, s)?;
    finish_normal_form(a, s, gammas, deltas)
}

fn finish_normal_form(a: &Operator, s: BipartiteShape, gammas: Vec<CMatrix>, deltas: Vec<CMatrix>) -> Result<NormalForm> {
    let n = gammas.len();
    let mut nf = NormalForm {
        shape: s,
        n,
        gammas,
        deltas,
        residual: 0.0,
        gamma_range_defect: 0.0,
        delta_range_defect: 0.0,
        gamma1_min_eig: 0.0,
        delta1_min_eig: 0.0,
        delta1_psd: true,
        diagnostics: Vec::new(),
    };
    nf.residual = rel_frobenius(&(nf.reconstruct() - &a.matrix), &a.matrix);
    if nf.residual > 1e-9 {
        return Err(Error::NormalForm(format!("reconstruction residual {:.3e} exceeds 1e-9", nf.residual)));
    }
    nf.gamma_range_defect = range_defect(&range_projector(&nf.gammas[0]), &nf.gammas[1..]);
    if nf.gamma_range_defect > 1e-8 {
        return Err(Error::NormalForm(format!(
            "Im(γᵢ) ⊄ Im(γ₁): defect {:.3e}",
            nf.gamma_range_defect
        )));
    }
    nf.delta_range_defect = range_defect(&range_projector(&nf.deltas[0]), &nf.deltas[1..]);
    if nf.delta_range_defect > 1e-8 {
        nf.diagnostics.push(format!("Im(δᵢ) ⊄ Im(δ₁): defect {:.3e}", nf.delta_range_defect));
    }
    nf.gamma1_min_eig = min_eig(&nf.gammas[0]);
    nf.delta1_min_eig = min_eig(&nf.deltas[0]);
    let scale = linalg::op_norm(&nf.deltas[0]);
    nf.delta1_psd = nf.delta1_min_eig >= -PSD_TOL * scale;
    if !nf.delta1_psd {
        nf.diagnostics.push(format!("δ₁ is not PSD (min eigenvalue {:.3e})", nf.delta1_min_eig));
    }
    Ok(nf)
}

/// Product ensemble for [[Id, L], [L, L²]] ∈ M_2 ⊗ M_k: one term (1, μᵢ) ⊗ uᵢ
/// per eigenpair of L.
pub fn lblock_ensemble(l: &CMatrix) -> Result<ProductEnsemble> {
    let k = l.nrows();
    if l.ncols() != k || k == 0 {
        return Err(Error::Shape("L must be square and non-empty".into()));
    }
    let dev = linalg::hermitian_deviation(l);
    if dev > tensor::HERMITIAN_TOL * linalg::max_abs_entry(l).max(1.0) {
        return Err(Error::Hermiticity { deviation: dev });
    }
    let (mus, us) = linalg::eigh(&linalg::hermitian_part(l));
    let mut ens = ProductEnsemble::new(BipartiteShape::new(2, k)?);
    for (i, mu) in mus.iter().enumerate() {
        let head = CVector::from_vec(vec![ONE, r(*mu)]);
        ens.push(1.0, linalg::kron_vector(&head, &us.column(i).into_owned()), 1);
    }
    Ok(ens)
}

/// [[Id, L], [L, L²]].
pub fn lblock_matrix(l: &CMatrix) -> CMatrix {
    let k = l.nrows();
    let mut out = CMatrix::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(&linalg::identity(k));
    out.view_mut((0, k), (k, k)).copy_from(l);
    out.view_mut((k, 0), (k, k)).copy_from(l);
    out.view_mut((k, k), (k, k)).copy_from(&(l * l));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparabilityStatus {
    FullyConstructive,
    ConstructivePlusCited,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CitedPart {
    /// The cited block in the frame of the input state.
    pub block: Operator,
    /// The same block in the final frame of the chain (zero first block row
    /// and column for the residual of the L-block split).
    pub block_transformed: Operator,
    pub embedding_defect: Option<f64>,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub operator_schmidt_rank: usize,
    pub ppt: PptCertificate,
    pub ppt_verified: bool,
    pub citation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Regularization {
    pub eps_reg: f64,
    pub eps_abs: f64,
    /// ‖A − A(ε)‖ (operator norm).
    pub gap_norm: f64,
    /// ‖A − A(ε)‖ / ‖A‖.
    pub gap_relative: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparabilityCertificate {
    pub shape: BipartiteShape,
    pub status: SeparabilityStatus,
    pub branch: String,
    pub operator_schmidt_rank: usize,
    pub constructive_part: ProductEnsemble,
    pub cited_part: Option<CitedPart>,
    /// Against A(ε) when regularized, otherwise against A.
    pub reconstruction_residual: f64,
    pub residual_vs_input: f64,
    pub regularization: Option<Regularization>,
    pub stage5_defect: Option<f64>,
    pub chain_replay_residual: f64,
    pub normal_form_residual: Option<f64>,
    pub delta1_psd: Option<bool>,
    pub chain: LocalOpChain,
    pub diagnostics: Vec<String>,
}

impl SeparabilityCertificate {
    /// Constructive terms plus the cited block, in the input frame.
    pub fn reconstruct(&self) -> CMatrix {
        let mut out = self.constructive_part.reconstruct();
        if let Some(cp) = &self.cited_part {
            out += &cp.block.matrix;
        }
        out
    }
}

fn cited_part(block: Operator, transformed: Operator, embedding_defect: Option<f64>, citation: &str, tol: f64) -> Result<CitedPart> {
    let spec = tensor::psd_check(&linalg::hermitian_part(&block.matrix), PSD_TOL)?;
    let osr = if linalg::max_abs_entry(&block.matrix) == 0.0 {
        0
    } else {
        schmidt::operator_schmidt_rank(&block, tol)?
    };
    let herm = Operator::hermitian(linalg::hermitian_part(&block.matrix), block.shape.clone())?;
    let scale = linalg::op_norm(&herm.matrix).max(f64::MIN_POSITIVE);
    let ppt = ppt::ppt_check(&herm, PSD_TOL * scale)?;
    Ok(CitedPart {
        block,
        block_transformed: transformed,
        embedding_defect,
        min_eigenvalue: spec.min_eigenvalue,
        psd: spec.psd,
        operator_schmidt_rank: osr,
        ppt_verified: ppt.ppt,
        ppt,
        citation: citation.into(),
    })
}

struct Checked {
    shape: BipartiteShape,
    osr: usize,
    lambda_min: f64,
    lambda_max: f64,
}

fn check_input(a: &Operator, tol: f64) -> Result<Checked> {
    let s = a.bipartite_shape()?;
    a.require_hermitian()?;
    let spec = tensor::psd_check(&a.matrix, PSD_TOL)?;
    if !spec.psd {
        return Err(Error::Precondition(format!("A is not PSD (min eigenvalue {:.3e})", spec.min_eigenvalue)));
    }
    let lpt = left_pt_invariance_check(a, tol)?;
    if !lpt.invariant {
        return Err(Error::Precondition(format!(
            "A is not invariant under left partial transpose (residual {:.3e})",
            lpt.residual
        )));
    }
    let osr = schmidt::operator_schmidt_rank(a, tol)?;
    Ok(Checked { shape: s, osr, lambda_min: spec.min_eigenvalue, lambda_max: spec.scale })
}

/// Runs the separability construction for A ∈ M_3 ⊗ M_k.
pub fn theorem42_separate(a: &Operator, eps_reg: f64, tol: f64) -> Result<(SeparabilityCertificate, LocalOpChain)> {
    let s = a.bipartite_shape()?;
    if s.dim_a != 3 {
        return Err(Error::Shape(format!("left dimension must be 3, got {}", s.dim_a)));
    }
    if !(eps_reg > 0.0 && eps_reg.is_finite()) {
        return Err(Error::Domain(format!("eps_reg must be positive, got {eps_reg}")));
    }
    let chk = check_input(a, tol)?;
    let cert = match chk.osr {
        1 => osr1_path(a, tol)?,
        2 => osr2_path(a, tol)?,
        3 => osr3_path(a, &chk, eps_reg, tol)?,
        n => {
            return Err(Error::Rank { rank: n, reason: "construction covers operator Schmidt rank ≤ 3".into() });
        }
    };
    let chain = cert.chain.clone();
    Ok((cert, chain))
}

fn osr1_path(a: &Operator, tol: f64) -> Result<SeparabilityCertificate> {
    let s = a.bipartite_shape()?;
    let nf = normal_form(a, tol)?;
    let (ga, va) = linalg::eigh(&nf.gammas[0]);
    let (gb, vb) = linalg::eigh(&nf.deltas[0]);
    let mut ens = ProductEnsemble::new(s);
    for (i, x) in ga.iter().enumerate() {
        for (j, y) in gb.iter().enumerate() {
            let w = x * y;
            if *x > 0.0 && *y > 0.0 {
                ens.push(w, linalg::kron_vector(&va.column(i).into_owned(), &vb.column(j).into_owned()), 1);
            }
        }
    }
    let res = rel_frobenius(&(ens.reconstruct() - &a.matrix), &a.matrix);
    Ok(SeparabilityCertificate {
        shape: s,
        status: SeparabilityStatus::FullyConstructive,
        branch: "osr1".into(),
        operator_schmidt_rank: 1,
        constructive_part: ens,
        cited_part: None,
        reconstruction_residual: res,
        residual_vs_input: res,
        regularization: None,
        stage5_defect: None,
        chain_replay_residual: 0.0,
        normal_form_residual: Some(nf.residual),
        delta1_psd: Some(nf.delta1_psd),
        chain: LocalOpChain::new(s),
        diagnostics: nf.diagnostics,
    })
}

fn osr2_path(a: &Operator, tol: f64) -> Result<SeparabilityCertificate> {
    let s = a.bipartite_shape()?;
    let cp = cited_part(a.clone(), a.clone(), None, OSR2_CITATION, tol)?;
    Ok(SeparabilityCertificate {
        shape: s,
        status: SeparabilityStatus::ConstructivePlusCited,
        branch: "osr2_cited".into(),
        operator_schmidt_rank: 2,
        constructive_part: ProductEnsemble::new(s),
        cited_part: Some(cp),
        reconstruction_residual: 0.0,
        residual_vs_input: 0.0,
        regularization: None,
        stage5_defect: None,
        chain_replay_residual: 0.0,
        normal_form_residual: None,
        delta1_psd: None,
        chain: LocalOpChain::new(s),
        diagnostics: Vec::new(),
    })
}

fn osr3_path(a: &Operator, chk: &Checked, eps_reg: f64, tol: f64) -> Result<SeparabilityCertificate> {
    let s = chk.shape;
    let kb = s.dim_b;
    let mut diagnostics = Vec::new();
    let nf = normal_form(a, tol)?;
    diagnostics.extend(nf.diagnostics.iter().cloned());

    // left factors are real symmetric for left-PT invariant A
    let max_imag = nf.gammas.iter().flat_map(|g| g.iter()).fold(0.0f64, |m, z| m.max(z.im.abs()));
    if max_imag > 1e-8 * nf.gammas[0].norm() {
        diagnostics.push(format!("left factors carry imaginary parts up to {max_imag:.3e}; discarded"));
    }
    let mut gammas: Vec<CMatrix> = nf.gammas.iter().map(realify).collect();
    let mut deltas = solve_deltas(&gammas, &a.matrix, s)?;

    // balanced split ‖γ₁‖ = ‖δ₁‖
    let (ng, nd) = (linalg::op_norm(&gammas[0]), linalg::op_norm(&deltas[0]));
    if ng == 0.0 || nd == 0.0 {
        return Err(Error::Degenerate("vanishing γ₁ or δ₁".into()));
    }
    let bal = (nd / ng).sqrt();
    gammas[0] *= r(bal);
    deltas[0] *= r(1.0 / bal);

    let mut target = a.matrix.clone();
    let mut regularization = None;
    if chk.lambda_min < eps_reg * chk.lambda_max {
        let eps_abs = eps_reg * (ng * nd).sqrt();
        gammas[0] += linalg::identity(3) * r(eps_abs);
        deltas[0] += linalg::identity(kb) * r(eps_abs);
        target = gammas
            .iter()
            .zip(&deltas)
            .fold(CMatrix::zeros(s.total(), s.total()), |acc, (g, d)| acc + linalg::kron_matrix(g, d));
        target = linalg::hermitian_part(&target);
        let gap = linalg::op_norm(&(&target - &a.matrix));
        regularization = Some(Regularization {
            eps_reg,
            eps_abs,
            gap_norm: gap,
            gap_relative: gap / chk.lambda_max,
        });
    }

    // whitening by γ₁^{-1/2}
    let top = linalg::op_norm(&gammas[0]);
    let (_, rinv) = linalg::psd_sqrt_and_inv(&gammas[0], eps_reg * top);
    let rinv = realify(&rinv);
    let mut chain = LocalOpChain::new(s);
    chain.push(Side::Left, rinv.clone(), "whiten: R^-1 with R² = γ₁")?;

    // orthogonal diagonalization of R⁻¹γ₂R⁻¹
    let g2 = realify(&(&rinv * &gammas[1] * &rinv)).map(|z| z.re);
    let g2 = (&g2 + g2.transpose()) * 0.5;
    let (_, v) = linalg::eigh_real(&g2);
    let o = v.transpose().map(|x| c(x, 0.0));
    chain.push(Side::Left, o.clone(), "diagonalize: O R^-1 γ₂ R^-1 O^t = D")?;
    let m3 = realify(&(&o * &rinv * &gammas[2] * &rinv * o.transpose()));
    let m = linalg::hermitian_part(&m3);

    let cmat = chain.apply(&target);
    let scale = linalg::max_abs_entry(&cmat);
    let mut stage5 = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let diff = block(&cmat, i, j, kb) - &deltas[2] * m[(i, j)];
                stage5 = stage5.max(linalg::max_abs_entry(&diff) / scale);
            }
        }
    }
    if stage5 > STRUCTURE_TOL {
        return Err(Error::NormalForm(format!("off-diagonal blocks are not m_ij δ₃ (defect {stage5:.3e})")));
    }

    let mnorm = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let gate = M_ZERO_GATE * mnorm;
    let (m21, m31) = (m[(1, 0)].re, m[(2, 0)].re);
    let branch = if m31.abs() <= gate {
        if m21.abs() <= gate { "m21_m31_zero" } else { "m31_zero" }
    } else if m21.abs() <= gate {
        let p = CMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 2) | (2, 1) => ONE,
            _ => c(0.0, 0.0),
        });
        chain.push(Side::Left, p, "swap sites 2 and 3")?;
        "m21_zero_swapped"
    } else {
        let t = CMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => ONE,
            (2, 1) => r(m31),
            (2, 2) => r(-m21),
            _ => c(0.0, 0.0),
        });
        chain.push(Side::Left, t, "zero the (1,3) block")?;
        "general"
    };

    let c2 = linalg::hermitian_part(&chain.apply(&target));
    let f1 = block(&c2, 0, 0, kb);
    let chol = Cholesky::new(f1.clone()).ok_or_else(|| {
        Error::NumericalDegeneracy(format!(
            "F₁ not positive definite (min eigenvalue {:.3e}, condition {:.3e}); raise eps_reg",
            min_eig(&f1),
            condition_number(&f1)
        ))
    })?;
    let uinv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("Cholesky factor of F₁ not invertible".into()))?;
    chain.push(Side::Right, uinv, "normalize: F₁ = U U*")?;

    let x = linalg::hermitian_part(&chain.apply(&target));
    let xscale = linalg::max_abs_entry(&x);
    let corner = linalg::max_abs_entry(&(block(&x, 0, 0, kb) - linalg::identity(kb)));
    let b13 = linalg::max_abs_entry(&block(&x, 0, 2, kb)) / xscale;
    if corner > STRUCTURE_TOL || b13 > STRUCTURE_TOL {
        return Err(Error::NumericalDegeneracy(format!(
            "normalized corner off by {corner:.3e}, (1,3) block {b13:.3e}"
        )));
    }
    let l = linalg::hermitian_part(&block(&x, 0, 1, kb));
    let lens = lblock_ensemble(&l)?;

    // embed (1, μ, 0) ⊗ u into C^3 ⊗ C^k
    let mut lfull = CMatrix::zeros(s.total(), s.total());
    lfull.view_mut((0, 0), (2 * kb, 2 * kb)).copy_from(&lblock_matrix(&l));
    let rb = linalg::hermitian_part(&(&x - &lfull));
    let mut emb = 0.0f64;
    for j in 0..3 {
        emb = emb.max(linalg::max_abs_entry(&block(&rb, 0, j, kb)));
        emb = emb.max(linalg::max_abs_entry(&block(&rb, j, 0, kb)));
    }
    let emb = emb / xscale;

    let (li, ri) = chain.inverse_factors()?;
    let k = linalg::kron_matrix(&li, &ri);
    let mut ens = ProductEnsemble::new(s);
    for t in &lens.terms {
        let mut v = CVector::zeros(s.total());
        v.rows_mut(0, 2 * kb).copy_from(&t.ket);
        ens.push(t.weight, &k * v, 1);
    }
    let rb_orig = linalg::hermitian_part(&(&k * &rb * k.adjoint()));
    let rb_is_zero = linalg::max_abs_entry(&rb) <= 1e-12 * xscale;
    let cited = if rb_is_zero {
        None
    } else {
        let cp = cited_part(
            Operator::new(rb_orig, Shape::from(s))?,
            Operator::new(rb.clone(), Shape::from(s))?,
            Some(emb),
            RESIDUAL_CITATION,
            tol,
        )?;
        if !cp.psd {
            diagnostics.push(format!("residual block min eigenvalue {:.3e}", cp.min_eigenvalue));
        }
        if cp.operator_schmidt_rank > 3 {
            diagnostics.push(format!("residual block operator Schmidt rank {}", cp.operator_schmidt_rank));
        }
        Some(cp)
    };

    let chain_replay_residual = rel_frobenius(&(chain.replay_inverse(&x)? - &target), &target);
    let mut cert = SeparabilityCertificate {
        shape: s,
        status: if cited.is_some() {
            SeparabilityStatus::ConstructivePlusCited
        } else {
            SeparabilityStatus::FullyConstructive
        },
        branch: branch.into(),
        operator_schmidt_rank: 3,
        constructive_part: ens,
        cited_part: cited,
        reconstruction_residual: 0.0,
        residual_vs_input: 0.0,
        regularization,
        stage5_defect: Some(stage5),
        chain_replay_residual,
        normal_form_residual: Some(nf.residual),
        delta1_psd: Some(nf.delta1_psd),
        chain,
        diagnostics,
    };
    let total = cert.reconstruct();
    cert.reconstruction_residual = rel_frobenius(&(&total - &target), &target);
    cert.residual_vs_input = rel_frobenius(&(&total - &a.matrix), &a.matrix);
    Ok(cert)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corollary43Report {
    pub k: usize,
    pub m: usize,
    pub operator_schmidt_rank: usize,
    pub bound: usize,
    pub provenance: Provenance,
    pub note: String,
    pub certificate: Option<SeparabilityCertificate>,
    /// Max Schmidt rank over the eigenvectors of A.
    pub spectral_upper: Option<usize>,
}

/// SN(A) ≤ k − 2 for PSD, left-PT invariant A ∈ M_k ⊗ M_m of operator Schmidt rank 3.
pub fn corollary43_report(a: &Operator, eps_reg: f64, tol: f64) -> Result<Corollary43Report> {
    let s = a.bipartite_shape()?;
    let (k, m) = (s.dim_a, s.dim_b);
    if k > m {
        return Err(Error::Domain(format!("need k ≤ m, got k={k}, m={m}")));
    }
    if k < 3 {
        return Err(Error::Domain(format!("bound k − 2 needs k ≥ 3, got {k}")));
    }
    let chk = check_input(a, tol)?;
    match chk.osr {
        3 => {}
        n if n < 3 => {
            return Err(Error::Rank { rank: n, reason: format!("{OSR2_CITATION}; the bound addresses rank 3") });
        }
        n => return Err(Error::Rank { rank: n, reason: "the bound addresses operator Schmidt rank 3".into() }),
    }
    let spectral_upper = ppt::spectral_ensemble(a)?.ensemble_sn().ok();
    if k == 3 {
        let (cert, _) = theorem42_separate(a, eps_reg, tol)?;
        return Ok(Corollary43Report {
            k,
            m,
            operator_schmidt_rank: 3,
            bound: 1,
            provenance: Provenance::Computed,
            note: "separability certificate attached".into(),
            certificate: Some(cert),
            spectral_upper,
        });
    }
    Ok(Corollary43Report {
        k,
        m,
        operator_schmidt_rank: 3,
        bound: k - 2,
        provenance: Provenance::Cited,
        note: "sub-block reduction to the k = 3 case is external; bound not recomputed".into(),
        certificate: None,
        spectral_upper,
    })
}
