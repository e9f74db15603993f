//! PPT mixtures P_sym + ε·γ with explicit product-vector ensembles that bound
//! their Schmidt number from above, SIC-POVM support data and PPT checks.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{self, SCHEMA_VERSION};
use crate::linalg::{self, c, r, CMatrix, CVector, C64};
use crate::mub::{self, MAX_PRIME};
use crate::schmidt::{self, AntisymCanonicalForm};
use crate::tensor::{self, BipartiteShape, Ket, Operator, Shape, PSD_TOL, RANK_TOL};

/// Terms with weight below this are dropped from ensembles.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Relative slack allowed when comparing ε against a regime boundary.
pub const BOUNDARY_SLACK: f64 = 1e-12;
/// Sign patterns are enumerated exhaustively up to this many pairs; beyond it
/// the rows of a Sylvester–Hadamard matrix are used.
pub const MAX_FULL_SIGN_PAIRS: usize = 10;
/// Tolerance for equiangularity and the SIC resolution of P_sym.
pub const SIC_TOL: f64 = 1e-8;

const SIC_D2: &str = include_str!("../data/sic_d2.json");
const SIC_D3: &str = include_str!("../data/sic_d3.json");
const SIC_D4: &str = include_str!("../data/sic_d4.json");
const SIC_D5: &str = include_str!("../data/sic_d5.json");
const SIC_D6: &str = include_str!("../data/sic_d6.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleTerm {
    pub weight: f64,
    /// Unit ket on the ensemble's target shape.
    #[serde(with = "crate::json::cvec")]
    pub ket: CVector,
    pub sr_tag: usize,
}

/// Σ weight·|ket⟩⟨ket| over terms whose Schmidt ranks are bounded by their tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductEnsemble {
    pub target_shape: BipartiteShape,
    pub terms: Vec<EnsembleTerm>,
}

impl ProductEnsemble {
    pub fn new(target_shape: BipartiteShape) -> Self {
        ProductEnsemble { target_shape, terms: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds weight·|x⟩⟨x| as a unit ket, folding ‖x‖² into the weight.
    pub fn push(&mut self, weight: f64, x: CVector, sr_tag: usize) {
        let nn = x.norm_squared();
        let w = weight * nn;
        if w <= WEIGHT_FLOOR || nn == 0.0 {
            return;
        }
        let ket = x.unscale(nn.sqrt());
        self.terms.push(EnsembleTerm { weight: w, ket, sr_tag });
    }

    /// Adds weight·|x⊗x⟩⟨x⊗x|.
    pub fn push_product(&mut self, weight: f64, x: &CVector) {
        self.push(weight, linalg::kron_vector(x, x), 1);
    }

    pub fn extend_scaled(&mut self, other: ProductEnsemble, scale: f64) {
        for t in other.terms {
            let w = t.weight * scale;
            if w > WEIGHT_FLOOR {
                self.terms.push(EnsembleTerm { weight: w, ..t });
            }
        }
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.target_shape.total();
        if self.terms.is_empty() {
            return CMatrix::zeros(d, d);
        }
        let x = CMatrix::from_fn(d, self.terms.len(), |i, j| {
            self.terms[j].ket[i] * self.terms[j].weight.sqrt()
        });
        &x * x.adjoint()
    }

    /// ‖Σ wᵢ|kᵢ⟩⟨kᵢ| − target‖_F / ‖target‖_F.
    pub fn reconstruction_residual(&self, target: &CMatrix) -> f64 {
        let diff = (self.reconstruct() - target).norm();
        diff / target.norm().max(f64::MIN_POSITIVE)
    }

    /// Largest tag; errors on an empty ensemble.
    pub fn ensemble_sn(&self) -> Result<usize> {
        self.terms
            .iter()
            .map(|t| t.sr_tag)
            .max()
            .ok_or_else(|| Error::Degenerate("Schmidt number of an empty ensemble".into()))
    }

    /// Recomputes every term's Schmidt rank; returns the largest one or the
    /// first term whose tag undercounts it.
    pub fn verify_tags(&self, tol: f64) -> Result<usize> {
        let s = self.target_shape;
        let mut worst = 0;
        for (i, t) in self.terms.iter().enumerate() {
            let sr = schmidt::schmidt_rank(&Ket::bipartite(t.ket.clone(), s.dim_a, s.dim_b)?, tol)?;
            if sr > t.sr_tag {
                return Err(Error::Consistency(format!(
                    "ensemble term {i} has Schmidt rank {sr} above its tag {}",
                    t.sr_tag
                )));
            }
            worst = worst.max(sr);
        }
        Ok(worst)
    }
}

/// Max tag of a non-empty ensemble after re-verifying each tag.
pub fn sn_upper_from_ensemble(e: &ProductEnsemble) -> Result<usize> {
    let sn = e.ensemble_sn()?;
    e.verify_tags(RANK_TOL)?;
    Ok(sn)
}

/// Spectral decomposition of a PSD operator as an ensemble whose tags are the
/// Schmidt ranks of the eigenvectors; a generic upper bound on SN.
pub fn spectral_ensemble(x: &Operator) -> Result<ProductEnsemble> {
    let s = x.bipartite_shape()?;
    x.require_hermitian()?;
    let (vals, vecs) = linalg::eigh(&x.matrix);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::Degenerate("spectral ensemble of an operator with no positive eigenvalue".into()));
    }
    let mut ens = ProductEnsemble::new(s);
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= 1e-12 * top {
            break;
        }
        let v: CVector = vecs.column(i).into_owned();
        let sr = schmidt::schmidt_rank_of(&v, s.dim_a, s.dim_b)?;
        ens.push(lam, v, sr);
    }
    Ok(ens)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PptCertificate {
    pub min_eig_state: f64,
    pub min_eig_pt: f64,
    pub ppt: bool,
    /// ‖|v⟩⟨v|^Γ‖_∞ for the antisymmetric direction, when one is involved.
    pub gamma_norm_inf: Option<f64>,
    pub tolerance: f64,
}

/// Eigensolves of B and B^Γ; PPT iff both minima are ≥ −tol.
pub fn ppt_check(b: &Operator, tol: f64) -> Result<PptCertificate> {
    b.require_hermitian()?;
    let bt = b.partial_transpose_right()?;
    let min = |m: &CMatrix| linalg::eigvalsh(m).into_iter().fold(f64::INFINITY, f64::min);
    let min_eig_state = min(&b.matrix);
    let min_eig_pt = min(&bt.matrix);
    Ok(PptCertificate {
        min_eig_state,
        min_eig_pt,
        ppt: min_eig_state >= -tol && min_eig_pt >= -tol,
        gamma_norm_inf: None,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eq2Report {
    pub k: usize,
    pub terms: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Σ_{j,i} |Ψ_ji⟩⟨Ψ_ji|^{⊗2} = 2 P_sym for the complete prime family of C^k.
pub fn eq2_check(k: usize) -> Result<Eq2Report> {
    let fam = mub::mub_prime(k)?;
    let mut ens = ProductEnsemble::new(BipartiteShape::new(k, k)?);
    for b in &fam.bases {
        for v in &b.vectors {
            ens.push_product(1.0, v);
        }
    }
    let target = tensor::sym_projector(k)?.matrix.scale(2.0);
    let residual = linalg::op_norm(&(ens.reconstruct() - target));
    let tolerance = 1e-9;
    Ok(Eq2Report { k, terms: ens.len(), residual, tolerance, passed: residual <= tolerance })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SicPovm {
    pub k: usize,
    #[serde(with = "crate::json::cvec")]
    pub fiducial: CVector,
    #[serde(with = "crate::json::cvec_list")]
    pub vectors: Vec<CVector>,
    pub verified: bool,
    /// max over i≠j of | |⟨vᵢ,vⱼ⟩|² − 1/(k+1) |.
    pub max_overlap_deviation: f64,
    /// ‖(k+1)/(2k) Σ |vᵢvᵢ⟩⟨vᵢvᵢ| − P_sym‖.
    pub resolution_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SicJson {
    #[serde(default = "default_version")]
    schema_version: u32,
    d: usize,
    fiducial: Vec<json::Pair>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Weyl–Heisenberg orbit X^p Z^q |fid⟩ of a normalized fiducial, verified.
pub fn sic_from_fiducial(fiducial: &CVector) -> Result<SicPovm> {
    let k = fiducial.len();
    if k < 2 {
        return Err(Error::Domain("SIC fiducial needs dimension ≥ 2".into()));
    }
    if k * k > tensor::DESK_CAP {
        return Err(Error::Size { dim: k * k, cap: tensor::DESK_CAP });
    }
    let nrm = fiducial.norm();
    if nrm == 0.0 {
        return Err(Error::Degenerate("zero SIC fiducial".into()));
    }
    let fid = fiducial.unscale(nrm);
    let omega = |e: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (e % k) as f64 / k as f64);
    let mut vectors = Vec::with_capacity(k * k);
    for p in 0..k {
        for q in 0..k {
            // (X^p Z^q f)[x] = ω^{q(x−p)} f[x−p]
            vectors.push(CVector::from_fn(k, |x, _| {
                let src = (x + k - p) % k;
                omega(q * src) * fid[src]
            }));
        }
    }
    Ok(sic_verify(SicPovm {
        k,
        fiducial: fid,
        vectors,
        verified: false,
        max_overlap_deviation: f64::NAN,
        resolution_residual: f64::NAN,
    }))
}

/// Recomputes equiangularity and the P_sym resolution on the stored vectors.
pub fn sic_verify(mut s: SicPovm) -> SicPovm {
    let k = s.k;
    let target = 1.0 / (k as f64 + 1.0);
    let mut worst = 0.0f64;
    for (i, a) in s.vectors.iter().enumerate() {
        for b in s.vectors.iter().skip(i + 1) {
            worst = worst.max((a.dotc(b).norm_sqr() - target).abs());
        }
    }
    let count_ok = s.vectors.len() == k * k && s.vectors.iter().all(|v| v.len() == k);
    let residual = if count_ok {
        let mut ens = ProductEnsemble::new(BipartiteShape { dim_a: k, dim_b: k });
        for v in &s.vectors {
            ens.push_product((k as f64 + 1.0) / (2.0 * k as f64), v);
        }
        tensor::sym_projector(k)
            .map(|p| linalg::op_norm(&(ens.reconstruct() - p.matrix)))
            .unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    s.max_overlap_deviation = worst;
    s.resolution_residual = residual;
    s.verified = count_ok && worst <= SIC_TOL && residual <= SIC_TOL;
    s
}

fn sic_from_json_text(text: &str, origin: &str) -> Result<SicPovm> {
    let j: SicJson = json::parse_str(text, origin)?;
    json::check_version(j.schema_version)?;
    if j.fiducial.len() != j.d {
        return Err(Error::Shape(format!("fiducial has {} entries for d = {}", j.fiducial.len(), j.d)));
    }
    sic_from_fiducial(&json::pairs_to_vec(&j.fiducial))
}

/// Shipped fiducials: k = 2 (tetrahedron), k = 3, and numerically solved k = 4, 5, 6.
pub fn sic_load(k: usize) -> Result<SicPovm> {
    match k {
        2 => sic_from_json_text(SIC_D2, "builtin:sic_d2.json"),
        3 => sic_from_json_text(SIC_D3, "builtin:sic_d3.json"),
        4 => sic_from_json_text(SIC_D4, "builtin:sic_d4.json"),
        5 => sic_from_json_text(SIC_D5, "builtin:sic_d5.json"),
        6 => sic_from_json_text(SIC_D6, "builtin:sic_d6.json"),
        other => Err(Error::UnsupportedDimension {
            dim: other,
            reason: "no SIC fiducial shipped; SIC existence is open in general, supply a fiducial file".into(),
        }),
    }
}

pub fn sic_load_file(path: &Path) -> Result<SicPovm> {
    let text = json::read_text(path)?;
    sic_from_json_text(&text, &path.display().to_string())
}

pub fn sic_save(s: &SicPovm, path: &Path) -> Result<()> {
    json::save(&SicJson { schema_version: SCHEMA_VERSION, d: s.k, fiducial: json::vec_to_pairs(&s.fiducial) }, path)
}

fn require_verified_sic(k: usize) -> Result<SicPovm> {
    let s = sic_load(k)?;
    if !s.verified {
        return Err(Error::Consistency(format!("shipped SIC for k = {k} failed verification")));
    }
    Ok(s)
}

fn check_eps(eps: f64, max: f64, regime: &str) -> Result<()> {
    if !eps.is_finite() || eps < 0.0 || eps > max * (1.0 + BOUNDARY_SLACK) {
        return Err(Error::Regime { eps, regime: regime.to_string(), max });
    }
    Ok(())
}

fn require_unit(v: &CVector, what: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("{what} must be a unit vector (norm {})", v.norm())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma33Mode {
    Prime,
    Sic,
}

/// Separable decomposition of P_sym^{k,2} − ε|aa⟩⟨aa|.
pub fn lemma33_ensemble(a: &CVector, eps: f64, mode: Lemma33Mode) -> Result<ProductEnsemble> {
    match mode {
        Lemma33Mode::Prime => lemma33_prime(a, eps),
        Lemma33Mode::Sic => lemma33_sic(a, eps, &require_verified_sic(a.len())?),
    }
}

/// Prime mode: n+1 MUBs of C^n (n the smallest prime above k) rotated so the
/// first vector is (a; 0), then compressed to the first k coordinates.
pub fn lemma33_prime(a: &CVector, eps: f64) -> Result<ProductEnsemble> {
    let k = a.len();
    check_eps(eps, 0.5, "lemma33/prime")?;
    require_unit(a, "a")?;
    let n = mub::smallest_prime_above(k);
    if n > MAX_PRIME {
        return Err(Error::UnsupportedDimension {
            dim: k,
            reason: format!("needs MUBs in prime dimension {n} > {MAX_PRIME}"),
        });
    }
    let fam = mub::mub_prime(n)?;
    let mut target = CVector::zeros(n);
    target.rows_mut(0, k).copy_from(a);
    let w = linalg::householder_to(&fam.bases[0].vectors[0], &target)?;
    let mut ens = ProductEnsemble::new(BipartiteShape::new(k, k)?);
    for (j, basis) in fam.bases.iter().enumerate() {
        for (i, v) in basis.vectors.iter().enumerate() {
            let weight = if j == 0 && i == 0 { (0.5 - eps).max(0.0) } else { 0.5 };
            let x: CVector = (&w * v).rows(0, k).into_owned();
            ens.push_product(weight, &x);
        }
    }
    Ok(ens)
}

/// SIC mode: rotate the SIC so v₁ = a and lower its weight by ε.
pub fn lemma33_sic(a: &CVector, eps: f64, sic: &SicPovm) -> Result<ProductEnsemble> {
    let k = a.len();
    if sic.k != k {
        return Err(Error::Shape(format!("SIC dimension {} differs from k = {k}", sic.k)));
    }
    if !sic.verified {
        return Err(Error::Precondition("SIC must be verified".into()));
    }
    let top = (k as f64 + 1.0) / (2.0 * k as f64);
    check_eps(eps, top, "lemma33/sic")?;
    require_unit(a, "a")?;
    let w = linalg::householder_to(&sic.vectors[0], a)?;
    let mut ens = ProductEnsemble::new(BipartiteShape::new(k, k)?);
    for (i, v) in sic.vectors.iter().enumerate() {
        let weight = if i == 0 { (top - eps).max(0.0) } else { top };
        ens.push_product(weight, &(&w * v));
    }
    Ok(ens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma34Regime {
    Sn2,
    Sep,
    SepSic,
}

impl Lemma34Regime {
    pub fn max_eps(self, k: usize) -> f64 {
        match self {
            Lemma34Regime::Sn2 => 0.5,
            Lemma34Regime::Sep => 1.0 / 12.0,
            Lemma34Regime::SepSic => (k as f64 + 1.0) / (12.0 * k as f64),
        }
    }
}

impl fmt::Display for Lemma34Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lemma34Regime::Sn2 => "sn2",
            Lemma34Regime::Sep => "sep",
            Lemma34Regime::SepSic => "sep_sic",
        })
    }
}

/// Decomposition of P_sym − ε|s⟩⟨s| with s = a₁⊗a₂ + a₂⊗a₁.
pub fn lemma34_ensemble(a1: &CVector, a2: &CVector, eps: f64, regime: Lemma34Regime) -> Result<ProductEnsemble> {
    let k = a1.len();
    if a2.len() != k {
        return Err(Error::Shape("a1 and a2 have different lengths".into()));
    }
    if k < 2 {
        return Err(Error::Domain("two orthonormal vectors need k ≥ 2".into()));
    }
    require_unit(a1, "a1")?;
    require_unit(a2, "a2")?;
    if a1.dotc(a2).norm() > 1e-10 {
        return Err(Error::Domain(format!("a1, a2 not orthogonal (overlap {:.3e})", a1.dotc(a2).norm())));
    }
    check_eps(eps, regime.max_eps(k), &format!("lemma34/{regime}"))?;
    let shape = BipartiteShape::new(k, k)?;
    let mut ens = ProductEnsemble::new(shape);
    match regime {
        Lemma34Regime::Sn2 => {
            let basis = linalg::complete_basis(&[a1.clone(), a2.clone()], k);
            for a in &basis {
                ens.push_product(1.0, a);
            }
            for i in 0..k {
                for j in (i + 1)..k {
                    let s = linalg::kron_vector(&basis[i], &basis[j]) + linalg::kron_vector(&basis[j], &basis[i]);
                    let weight = if (i, j) == (0, 1) { (0.5 - eps).max(0.0) } else { 0.5 };
                    ens.push(weight, s, 2);
                }
            }
        }
        Lemma34Regime::Sep | Lemma34Regime::SepSic => {
            let mode = if regime == Lemma34Regime::Sep { Lemma33Mode::Prime } else { Lemma33Mode::Sic };
            let sic = match mode {
                Lemma33Mode::Sic => Some(require_verified_sic(k)?),
                Lemma33Mode::Prime => None,
            };
            let h = 0.5f64.sqrt();
            let bs = [
                a1.clone(),
                a2.clone(),
                (a1 + a2) * r(h),
                (a1 - a2) * r(h),
                (a1 + a2 * c(0.0, 1.0)) * r(h),
                (a1 - a2 * c(0.0, 1.0)) * r(h),
            ];
            // P_sym − ε ss* = Σᵢ (1/6)(P_sym − 6ε bᵢbᵢ) + 2ε Σⱼ aⱼaⱼ
            let inner = (6.0 * eps).min(match mode {
                Lemma33Mode::Prime => 0.5,
                Lemma33Mode::Sic => (k as f64 + 1.0) / (2.0 * k as f64),
            });
            for b in &bs {
                let sub = match &sic {
                    Some(s) => lemma33_sic(b, inner, s)?,
                    None => lemma33_prime(b, inner)?,
                };
                ens.extend_scaled(sub, 1.0 / 6.0);
            }
            ens.push_product(2.0 * eps, a1);
            ens.push_product(2.0 * eps, a2);
        }
    }
    Ok(ens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureRegime {
    A,
    B,
    C,
}

impl MixtureRegime {
    pub fn max_eps(self, k: usize) -> f64 {
        match self {
            MixtureRegime::A => 1.0,
            MixtureRegime::B => 1.0 / 6.0,
            MixtureRegime::C => (k as f64 + 1.0) / (6.0 * k as f64),
        }
    }

    pub fn inner(self) -> Lemma34Regime {
        match self {
            MixtureRegime::A => Lemma34Regime::Sn2,
            MixtureRegime::B => Lemma34Regime::Sep,
            MixtureRegime::C => Lemma34Regime::SepSic,
        }
    }
}

impl fmt::Display for MixtureRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixtureRegime::A => "a",
            MixtureRegime::B => "b",
            MixtureRegime::C => "c",
        })
    }
}

impl std::str::FromStr for MixtureRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(MixtureRegime::A),
            "b" => Ok(MixtureRegime::B),
            "c" => Ok(MixtureRegime::C),
            other => Err(Error::Domain(format!("unknown regime {other:?} (a|b|c)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma35Result {
    pub b: Operator,
    pub ensemble: ProductEnsemble,
    pub ppt: PptCertificate,
    pub canonical_form: AntisymCanonicalForm,
    pub schmidt_rank_v: usize,
    pub correction_terms: usize,
    pub reconstruction_residual: f64,
}

/// Rows of the Sylvester–Hadamard matrix of order 2^p, as ±1 signs.
fn sylvester_rows(order: usize) -> Vec<Vec<f64>> {
    (0..order)
        .map(|i| (0..order).map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect())
        .collect()
}

/// Sign patterns s with Σ_s s_a s_b = N δ_ab over n+1 slots; returns (patterns, N).
fn sign_design(slots: usize) -> (Vec<Vec<f64>>, usize) {
    let pairs = slots - 1;
    if pairs <= MAX_FULL_SIGN_PAIRS {
        let count = 1usize << pairs;
        let pats = (0..count)
            .map(|bits| {
                let mut s = vec![1.0];
                s.extend((0..pairs).map(|t| if bits >> t & 1 == 0 { 1.0 } else { -1.0 }));
                s
            })
            .collect();
        (pats, count)
    } else {
        let order = slots.next_power_of_two();
        let pats = sylvester_rows(order).into_iter().map(|row| row[..slots].to_vec()).collect();
        (pats, order)
    }
}

/// Ensemble and PPT certificate for B = P_sym + ε|v⟩⟨v|, v antisymmetric.
pub fn lemma35_mixture(v: &Ket, eps: f64, regime: MixtureRegime) -> Result<Lemma35Result> {
    let shape = v.shape.as_bipartite()?;
    if shape.dim_a != shape.dim_b {
        return Err(Error::Shape(format!("mixture needs k⊗k, got {shape:?}")));
    }
    let k = shape.dim_a;
    require_unit(&v.entries, "v")?;
    check_eps(eps, regime.max_eps(k), &format!("lemma35/{regime}"))?;
    let sym = schmidt::symmetric_component(&v.entries, k);
    if sym > 1e-8 {
        return Err(Error::Support { residual: sym });
    }
    if regime == MixtureRegime::C {
        require_verified_sic(k)?;
    }
    let form = schmidt::antisym_canonical_form(v, RANK_TOL)?;
    let sr = schmidt::schmidt_rank(v, RANK_TOL)?;
    if sr % 2 != 0 || sr != 2 * form.n {
        return Err(Error::Consistency(format!(
            "antisymmetric vector with Schmidt rank {sr} but {} canonical pairs",
            form.n
        )));
    }
    let psym = tensor::sym_projector(k)?;
    let target = &psym.matrix + linalg::outer(&v.entries).scale(eps);
    let b = Operator::hermitian(linalg::hermitian_part(&target), Shape::bipartite(k, k))?;

    let mut ens = ProductEnsemble::new(shape);
    let mut correction_terms = 0;
    if eps == 0.0 {
        let e0 = Ket::basis(k, 0).entries;
        ens = lemma33_prime(&e0, 0.0)?;
    } else {
        for ((lam, vi), wi) in form.lambdas.iter().zip(&form.v_vectors).zip(&form.w_vectors) {
            let sub = lemma34_ensemble(vi, wi, eps / 2.0, regime.inner())?;
            ens.extend_scaled(sub, 2.0 * lam * lam);
        }
        // slots: m_n, m_{n−1}, …, m_1, v
        let ms: Vec<CVector> = form
            .lambdas
            .iter()
            .zip(&form.v_vectors)
            .zip(&form.w_vectors)
            .map(|((lam, vi), wi)| (linalg::kron_vector(vi, wi) + linalg::kron_vector(wi, vi)) * r(*lam))
            .rev()
            .collect();
        let mut slots = ms;
        slots.push(v.entries.clone());
        let (patterns, count) = sign_design(slots.len());
        for pat in &patterns {
            let mut x = CVector::zeros(k * k);
            for (s, vec) in pat.iter().zip(&slots) {
                x += vec * r(*s);
            }
            ens.push(eps / count as f64, x, form.n);
            correction_terms += 1;
        }
    }
    let reconstruction_residual = ens.reconstruction_residual(&b.matrix);
    let mut ppt = ppt_check(&b, PSD_TOL)?;
    ppt.gamma_norm_inf = Some(form.lambdas.iter().fold(0.0f64, |m, l| m.max(l * l)));
    Ok(Lemma35Result {
        b,
        ensemble: ens,
        ppt,
        canonical_form: form,
        schmidt_rank_v: sr,
        correction_terms,
        reconstruction_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Cited,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnCertificate {
    pub lower: usize,
    pub lower_provenance: Provenance,
    pub lower_note: String,
    /// False when the lower bound rests on a proxy for SN(γ).
    pub certified: bool,
    pub upper: usize,
    pub upper_source: String,
    pub epsilon: f64,
    pub regime: MixtureRegime,
    pub gamma_pure: bool,
    /// SR(γ) for pure γ, else max SR over the computed eigenbasis.
    pub sn_gamma: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub beta: f64,
    pub schmidt_rank: usize,
    pub pt_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem36Result {
    pub b: Operator,
    pub ensemble: ProductEnsemble,
    pub sn: SnCertificate,
    pub ppt: PptCertificate,
    pub components: Vec<MixtureComponent>,
    pub reconstruction_residual: f64,
}

/// Relative eigenvalue cut for the spectral decomposition of γ.
pub const GAMMA_EIG_CUT: f64 = 1e-10;

/// B = P_sym + ε·γ for a state γ on the antisymmetric subspace, with a merged
/// ensemble upper bound and the SN(γ)/2 lower bound.
pub fn theorem36_mixture(gamma: &Operator, eps: f64, regime: MixtureRegime) -> Result<Theorem36Result> {
    let shape = gamma.bipartite_shape()?;
    if shape.dim_a != shape.dim_b {
        return Err(Error::Shape(format!("mixture needs k⊗k, got {shape:?}")));
    }
    let k = shape.dim_a;
    gamma.require_hermitian()?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Regime { eps, regime: regime.to_string(), max: regime.max_eps(k) });
    }
    check_eps(eps, regime.max_eps(k), &format!("theorem36/{regime}"))?;
    let spec = tensor::psd_check(&gamma.matrix, PSD_TOL)?;
    if !spec.psd {
        return Err(Error::Precondition(format!("γ is not PSD (min eigenvalue {:.3e})", spec.min_eigenvalue)));
    }
    let tr = gamma.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("γ must have unit trace, got {tr}")));
    }
    let support = schmidt::antisym_support_check(gamma, 1e-8)?;
    if !support.supported {
        return Err(Error::Support { residual: support.residual });
    }

    let (vals, vecs) = linalg::eigh(&gamma.matrix);
    let top = vals[0];
    let anti = tensor::antisym_projector(k)?.matrix;
    let mut ens = ProductEnsemble::new(shape);
    let mut components = Vec::new();
    for (i, &beta) in vals.iter().enumerate() {
        if beta <= GAMMA_EIG_CUT * top {
            break;
        }
        let raw: CVector = &anti * vecs.column(i);
        let v = Ket::bipartite(raw.unscale(raw.norm()), k, k)?;
        let part = lemma35_mixture(&v, eps, regime)?;
        components.push(MixtureComponent {
            beta,
            schmidt_rank: part.schmidt_rank_v,
            pt_norm: part.ppt.gamma_norm_inf.unwrap_or(f64::NAN),
        });
        ens.extend_scaled(part.ensemble, beta);
    }
    if components.is_empty() {
        return Err(Error::Degenerate("γ has no eigenvalue above the cut".into()));
    }
    let target = &tensor::sym_projector(k)?.matrix + gamma.matrix.scale(eps);
    let b = Operator::hermitian(linalg::hermitian_part(&target), Shape::bipartite(k, k))?;
    let reconstruction_residual = ens.reconstruction_residual(&b.matrix);
    let upper = sn_upper_from_ensemble(&ens)?;
    let pure = components.len() == 1;
    let sn_gamma = components.iter().map(|c| c.schmidt_rank).max().unwrap_or(0);
    let lower = sn_gamma / 2;
    if lower > upper {
        return Err(Error::Consistency(format!("lower bound {lower} exceeds ensemble bound {upper}")));
    }
    let (lower_provenance, lower_note) = if pure {
        (Provenance::Computed, "SR(γ)/2 with SR(γ) from the Schmidt decomposition of the pure γ".to_string())
    } else {
        (
            Provenance::Cited,
            "SN(P_sym + εγ) ≥ SN(γ)/2 (external result); SN(γ) replaced by max SR over the computed eigenbasis"
                .to_string(),
        )
    };
    let mut ppt = ppt_check(&b, PSD_TOL)?;
    ppt.gamma_norm_inf = components.iter().map(|c| c.pt_norm).reduce(f64::max);
    Ok(Theorem36Result {
        b,
        sn: SnCertificate {
            lower,
            lower_provenance,
            lower_note,
            certified: pure,
            upper,
            upper_source: format!("product ensemble with {} terms", ens.len()),
            epsilon: eps,
            regime,
            gamma_pure: pure,
            sn_gamma,
            exact: lower == upper,
        },
        ensemble: ens,
        ppt,
        components,
        reconstruction_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psym_minus(k: usize, eps: f64, x: &CVector) -> CMatrix {
        let p = tensor::sym_projector(k).unwrap().matrix;
        p - linalg::outer(x).scale(eps)
    }

    fn singlet() -> Ket {
        let h = 0.5f64.sqrt();
        Ket::bipartite(CVector::from_vec(vec![ZERO, r(h), r(-h), ZERO]), 2, 2).unwrap()
    }

    #[test]
    fn eq2_small_primes() {
        assert!(eq2_check(2).unwrap().residual <= 1e-12);
        assert!(eq2_check(3).unwrap().residual <= 1e-12);
        assert!(eq2_check(5).unwrap().residual <= 1e-11);
        assert!(eq2_check(4).is_err());
    }

    #[test]
    fn sic_shipped() {
        let s = sic_load(2).unwrap();
        assert!(s.verified);
        assert!((s.vectors[0].dotc(&s.vectors[1]).norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
        let s = sic_load(3).unwrap();
        assert!(s.verified);
        assert!((s.vectors[0].dotc(&s.vectors[4]).norm_sqr() - 0.25).abs() < 1e-12);
        for k in 4..=6 {
            let s = sic_load(k).unwrap();
            assert!(s.verified && s.max_overlap_deviation <= 1e-12, "k = {k}");
        }
        assert!(matches!(sic_load(7), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn non_sic_fiducial_fails() {
        let s = sic_from_fiducial(&Ket::basis(3, 0).entries).unwrap();
        assert!(!s.verified);
    }

    #[test]
    fn lemma33_prime_k2() {
        let a = Ket::basis(2, 0).entries;
        let e = lemma33_ensemble(&a, 0.5, Lemma33Mode::Prime).unwrap();
        assert!(e.len() <= 12);
        assert!(e.reconstruction_residual(&psym_minus(2, 0.5, &linalg::kron_vector(&a, &a))) <= 1e-9);
        assert_eq!(sn_upper_from_ensemble(&e).unwrap(), 1);
        let e = lemma33_ensemble(&a, 0.0, Lemma33Mode::Prime).unwrap();
        assert!(e.reconstruction_residual(&tensor::sym_projector(2).unwrap().matrix) <= 1e-10);
        assert!(matches!(lemma33_ensemble(&a, 0.6, Lemma33Mode::Prime), Err(Error::Regime { .. })));
    }

    #[test]
    fn lemma33_random_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [3, 4, 6] {
            let a = random::unit_vector(&mut rng, k);
            let e = lemma33_prime(&a, 0.3).unwrap();
            let t = psym_minus(k, 0.3, &linalg::kron_vector(&a, &a));
            assert!(e.reconstruction_residual(&t) <= 1e-9, "k={k}");
        }
    }

    #[test]
    fn lemma33_sic_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random::unit_vector(&mut rng, 3);
        let e = lemma33_ensemble(&a, 2.0 / 3.0, Lemma33Mode::Sic).unwrap();
        assert_eq!(e.len(), 8);
        assert!(e.reconstruction_residual(&psym_minus(3, 2.0 / 3.0, &linalg::kron_vector(&a, &a))) <= 1e-9);
        assert!(lemma33_ensemble(&a, 0.7, Lemma33Mode::Sic).is_err());
        let a4 = random::unit_vector(&mut rng, 4);
        let e = lemma33_ensemble(&a4, 0.1, Lemma33Mode::Sic).unwrap();
        assert!(e.reconstruction_residual(&psym_minus(4, 0.1, &linalg::kron_vector(&a4, &a4))) <= 1e-9);
        let a7 = Ket::basis(7, 0).entries;
        assert!(matches!(lemma33_ensemble(&a7, 0.1, Lemma33Mode::Sic), Err(Error::UnsupportedDimension { .. })));
    }

    fn s_vec(a1: &CVector, a2: &CVector) -> CVector {
        linalg::kron_vector(a1, a2) + linalg::kron_vector(a2, a1)
    }

    #[test]
    fn lemma34_regimes() {
        let a1 = Ket::basis(3, 0).entries;
        let a2 = Ket::basis(3, 1).entries;
        let s = s_vec(&a1, &a2);
        let e = lemma34_ensemble(&a1, &a2, 1.0 / 12.0, Lemma34Regime::Sep).unwrap();
        assert!(e.reconstruction_residual(&psym_minus(3, 1.0 / 12.0, &s)) <= 1e-8);
        assert_eq!(sn_upper_from_ensemble(&e).unwrap(), 1);
        let e = lemma34_ensemble(&a1, &a2, 0.5, Lemma34Regime::Sn2).unwrap();
        assert!(e.reconstruction_residual(&psym_minus(3, 0.5, &s)) <= 1e-10);
        assert_eq!(sn_upper_from_ensemble(&e).unwrap(), 2);
        assert_eq!(e.len(), 3 + 2);
        let e = lemma34_ensemble(&a1, &a2, 4.0 / 36.0, Lemma34Regime::SepSic).unwrap();
        assert!(e.reconstruction_residual(&psym_minus(3, 4.0 / 36.0, &s)) <= 1e-8);
        assert!(lemma34_ensemble(&a1, &a2, 0.1, Lemma34Regime::Sep).is_err());
        assert!(lemma34_ensemble(&a1, &a1, 0.05, Lemma34Regime::Sep).is_err());
    }

    #[test]
    fn lemma34_random_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::unitary(&mut rng, 4);
        let a1: CVector = u.column(0).into_owned();
        let a2: CVector = u.column(1).into_owned();
        let s = s_vec(&a1, &a2);
        for (eps, reg) in [(0.05, Lemma34Regime::Sep), (0.4, Lemma34Regime::Sn2)] {
            let e = lemma34_ensemble(&a1, &a2, eps, reg).unwrap();
            assert!(e.reconstruction_residual(&psym_minus(4, eps, &s)) <= 1e-8);
        }
        let a1 = Ket::basis(2, 0).entries;
        let a2 = Ket::basis(2, 1).entries;
        for reg in [Lemma34Regime::Sn2, Lemma34Regime::Sep, Lemma34Regime::SepSic] {
            let e = lemma34_ensemble(&a1, &a2, 0.0, reg).unwrap();
            assert!(e.reconstruction_residual(&tensor::sym_projector(2).unwrap().matrix) <= 1e-10);
        }
    }

    #[test]
    fn lemma35_singlet() {
        let res = lemma35_mixture(&singlet(), 1.0, MixtureRegime::A).unwrap();
        // the |s⟩ weight vanishes at ε/2 = 1/2 and k = 2 has no other pair
        assert!(res.ensemble.ensemble_sn().unwrap() <= 2);
        assert!(res.ppt.ppt && res.ppt.min_eig_pt >= 0.0);
        assert!(res.reconstruction_residual <= 1e-8);
        assert!((res.ppt.gamma_norm_inf.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lemma35_sr4() {
        let h = 0.5;
        let e = |i| Ket::basis(4, i).entries;
        let v = (linalg::kron_vector(&e(0), &e(1)) - linalg::kron_vector(&e(1), &e(0))) * r(h)
            + (linalg::kron_vector(&e(2), &e(3)) - linalg::kron_vector(&e(3), &e(2))) * r(h);
        let v = Ket::bipartite(v, 4, 4).unwrap();
        let res = lemma35_mixture(&v, 1.0 / 6.0, MixtureRegime::B).unwrap();
        assert_eq!(sn_upper_from_ensemble(&res.ensemble).unwrap(), 2);
        assert_eq!(res.correction_terms, 4);
        for t in res.ensemble.terms.iter().filter(|t| t.sr_tag == 2) {
            let sr = schmidt::schmidt_rank(&Ket::bipartite(t.ket.clone(), 4, 4).unwrap(), RANK_TOL).unwrap();
            assert_eq!(sr, 2);
        }
        assert!(res.reconstruction_residual <= 1e-8);
        assert!(res.ppt.ppt);
    }

    #[test]
    fn lemma35_zero_eps_and_errors() {
        let res = lemma35_mixture(&singlet(), 0.0, MixtureRegime::A).unwrap();
        assert_eq!(res.ensemble.ensemble_sn().unwrap(), 1);
        assert!(res.ppt.ppt);
        let sym = Ket::bipartite(CVector::from_vec(vec![ONE, ZERO, ZERO, ZERO]), 2, 2).unwrap();
        assert!(matches!(lemma35_mixture(&sym, 0.1, MixtureRegime::B), Err(Error::Support { .. })));
        assert!(matches!(lemma35_mixture(&singlet(), 0.2, MixtureRegime::B), Err(Error::Regime { .. })));
    }

    #[test]
    fn lemma35_hadamard_design() {
        let (pats, n) = sign_design(13);
        assert_eq!(n, 16);
        for a in 0..13 {
            for b in 0..13 {
                let s: f64 = pats.iter().map(|p| p[a] * p[b]).sum();
                assert_eq!(s, if a == b { 16.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn theorem36_examples() {
        let g = singlet().projector();
        let res = theorem36_mixture(&g, 1.0 / 6.0, MixtureRegime::B).unwrap();
        assert_eq!((res.sn.lower, res.sn.upper), (1, 1));
        assert!(res.ppt.ppt && res.sn.certified);

        let anti = tensor::antisym_projector(3).unwrap();
        let g = anti.scale(1.0 / 3.0);
        let res = theorem36_mixture(&g, 1.0 / 6.0, MixtureRegime::B).unwrap();
        assert_eq!(res.sn.upper, 1);
        assert!(res.ppt.ppt);
        assert!(!res.sn.certified);
        assert_eq!(res.sn.lower_provenance, Provenance::Cited);
        assert!(res.reconstruction_residual <= 1e-8);

        let res = theorem36_mixture(&singlet().projector(), 1.0, MixtureRegime::A).unwrap();
        assert_eq!(res.sn.lower, 1);
        assert!(res.sn.upper <= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = Ket::bipartite(random::antisymmetric_unit(&mut rng, 4, 1), 4, 4).unwrap();
        let res = theorem36_mixture(&v.projector(), 0.8, MixtureRegime::A).unwrap();
        assert_eq!((res.sn.lower, res.sn.upper), (1, 2));
        assert!(theorem36_mixture(&singlet().projector(), 0.0, MixtureRegime::B).is_err());
    }

    #[test]
    fn ppt_check_examples() {
        assert!(ppt_check(&tensor::sym_projector(3).unwrap(), PSD_TOL).unwrap().ppt);
        let c = ppt_check(&singlet().projector(), PSD_TOL).unwrap();
        assert!(!c.ppt);
        assert!((c.min_eig_pt + 0.5).abs() < 1e-12);
        let e = ProductEnsemble::new(BipartiteShape::new(2, 2).unwrap());
        assert!(matches!(sn_upper_from_ensemble(&e), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tag_undercount_detected() {
        let mut e = ProductEnsemble::new(BipartiteShape::new(2, 2).unwrap());
        e.push(1.0, singlet().entries, 1);
        assert!(matches!(sn_upper_from_ensemble(&e), Err(Error::Consistency(_))));
    }
}
