//! Mutually unbiased bases: construction for prime dimensions, loading and
//! verification of shipped families, marginal purity sums and the bound
//! arithmetic they are compared against.

use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{self, KetOrEntries, SCHEMA_VERSION};
use crate::linalg::{self, c, r, CMatrix, CVector, C64, ONE, ZERO};
use crate::random;
use crate::schmidt::coefficient_matrix;
use crate::tensor::{self, BipartiteShape, Ket, Operator, Shape, PSD_TOL};

/// Default tolerance for unbiasedness and orthonormality defects.
pub const MUB_TOL: f64 = 1e-10;
/// Largest prime accepted by [`mub_prime`].
pub const MAX_PRIME: usize = 31;

const FAMILY_D4: &str = include_str!("../data/mub_d4.json");
const FAMILY_D9: &str = include_str!("../data/mub_d9.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Complex => write!(f, "complex"),
            Field::Real => write!(f, "real"),
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Field::Complex),
            "real" => Ok(Field::Real),
            other => Err(Error::Domain(format!("unknown field {other:?} (complex|real)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub vectors: Vec<CVector>,
}

impl Basis {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn transformed(&self, u: &CMatrix) -> Basis {
        Basis { vectors: self.vectors.iter().map(|v| u * v).collect() }
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let want = if i == j { ONE } else { ZERO };
                worst = worst.max((a.dotc(b) - want).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedDefect {
    pub basis_a: usize,
    pub vector_i: usize,
    pub basis_b: usize,
    pub vector_j: usize,
    pub overlap_modulus: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub verified: bool,
    pub max_deviation: f64,
    pub max_unbiasedness_deviation: f64,
    pub max_gram_defect: f64,
    /// Largest |Im| over all entries; zero certifies a real family.
    pub max_imaginary: f64,
    pub worst: Option<LocatedDefect>,
    pub tolerance: f64,
    pub pairs_checked: usize,
}

impl VerificationRecord {
    pub fn is_real(&self) -> bool {
        self.max_imaginary <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily {
    pub d: usize,
    pub bases: Vec<Basis>,
    pub verified: bool,
    pub max_deviation: f64,
}

impl MubFamily {
    /// Builds a family and runs [`family_verify`] at the default tolerance.
    pub fn new(d: usize, bases: Vec<Basis>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("family dimension must be positive".into()));
        }
        for (a, b) in bases.iter().enumerate() {
            if b.vectors.len() != d || b.vectors.iter().any(|v| v.len() != d) {
                return Err(Error::Shape(format!("basis {a} is not {d} vectors of length {d}")));
            }
        }
        let mut fam = MubFamily { d, bases, verified: false, max_deviation: f64::NAN };
        let rec = family_verify(&fam, MUB_TOL);
        fam.verified = rec.verified;
        fam.max_deviation = rec.max_deviation;
        Ok(fam)
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn transformed(&self, u: &CMatrix) -> Result<MubFamily> {
        MubFamily::new(self.d, self.bases.iter().map(|b| b.transformed(u)).collect())
    }

    pub fn subfamily(&self, count: usize) -> Result<MubFamily> {
        MubFamily::new(self.d, self.bases.iter().take(count).cloned().collect())
    }

    pub fn without_basis(&self, index: usize) -> Result<MubFamily> {
        let bases = self
            .bases
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .map(|(_, b)| b.clone())
            .collect();
        MubFamily::new(self.d, bases)
    }
}

/// Unbiasedness of every cross pair plus orthonormality of every basis.
/// Failures are reported in the record, never as errors.
pub fn family_verify(f: &MubFamily, tol: f64) -> VerificationRecord {
    let target = 1.0 / (f.d as f64).sqrt();
    let mut max_unbias = 0.0f64;
    let mut worst: Option<LocatedDefect> = None;
    let mut pairs = 0;
    for a in 0..f.bases.len() {
        for b in (a + 1)..f.bases.len() {
            pairs += 1;
            for (i, x) in f.bases[a].vectors.iter().enumerate() {
                for (j, y) in f.bases[b].vectors.iter().enumerate() {
                    let m = x.dotc(y).norm();
                    let dev = (m - target).abs();
                    if dev > max_unbias {
                        max_unbias = dev;
                        worst = Some(LocatedDefect {
                            basis_a: a,
                            vector_i: i,
                            basis_b: b,
                            vector_j: j,
                            overlap_modulus: m,
                            deviation: dev,
                        });
                    }
                }
            }
        }
    }
    let max_gram = f.bases.iter().map(Basis::gram_defect).fold(0.0f64, f64::max);
    let max_imag = f
        .bases
        .iter()
        .flat_map(|b| b.vectors.iter())
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, z| m.max(z.im.abs()));
    let max_deviation = max_unbias.max(max_gram);
    VerificationRecord {
        verified: max_deviation <= tol,
        max_deviation,
        max_unbiasedness_deviation: max_unbias,
        max_gram_defect: max_gram,
        max_imaginary: max_imag,
        worst: if max_unbias > tol { worst } else { None },
        tolerance: tol,
        pairs_checked: pairs,
    }
}

pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2;
    while q * q <= p {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

pub fn smallest_prime_above(k: usize) -> usize {
    let mut p = k + 1;
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Complete family of p+1 MUBs in C^p. For p = 2 the Pauli eigenbases; for
/// odd p the computational basis plus ψ_{a,b}(x) = ω^{a x² + b x}/√p.
pub fn mub_prime(p: usize) -> Result<MubFamily> {
    if !is_prime(p) || p > MAX_PRIME {
        return Err(Error::UnsupportedDimension {
            dim: p,
            reason: format!("mub_prime needs a prime ≤ {MAX_PRIME}; prime powers are loaded as data"),
        });
    }
    let s = 1.0 / (p as f64).sqrt();
    let computational: Vec<CVector> = (0..p).map(|i| Ket::basis(p, i).entries).collect();
    let mut bases = vec![Basis { vectors: computational }];
    if p == 2 {
        let x = vec![
            CVector::from_vec(vec![r(s), r(s)]),
            CVector::from_vec(vec![r(s), r(-s)]),
        ];
        let y = vec![
            CVector::from_vec(vec![r(s), c(0.0, s)]),
            CVector::from_vec(vec![r(s), c(0.0, -s)]),
        ];
        bases.push(Basis { vectors: x });
        bases.push(Basis { vectors: y });
    } else {
        let roots: Vec<C64> = (0..p)
            .map(|e| C64::from_polar(s, 2.0 * std::f64::consts::PI * e as f64 / p as f64))
            .collect();
        for a in 0..p {
            let vectors = (0..p)
                .map(|b| CVector::from_fn(p, |x, _| roots[(a * x * x + b * x) % p]))
                .collect();
            bases.push(Basis { vectors });
        }
    }
    MubFamily::new(p, bases)
}

/// On-disk family: `{"d": int, "bases": [[ket, ..], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyJson {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub d: usize,
    pub bases: Vec<Vec<KetOrEntries>>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

impl FamilyJson {
    pub fn from_family(f: &MubFamily) -> Self {
        let bases = f
            .bases
            .iter()
            .map(|b| {
                b.vectors
                    .iter()
                    .map(|v| KetOrEntries::Ket(json::KetJson::from(&Ket { entries: v.clone(), shape: Shape::single(f.d) })))
                    .collect()
            })
            .collect();
        FamilyJson { schema_version: SCHEMA_VERSION, d: f.d, bases }
    }

    pub fn into_family(self) -> Result<MubFamily> {
        json::check_version(self.schema_version)?;
        let bases = self
            .bases
            .into_iter()
            .map(|b| Ok(Basis { vectors: b.into_iter().map(KetOrEntries::into_vector).collect::<Result<_>>()? }))
            .collect::<Result<Vec<_>>>()?;
        MubFamily::new(self.d, bases)
    }
}

pub fn family_from_str(text: &str, origin: &str) -> Result<MubFamily> {
    json::parse_str::<FamilyJson>(text, origin)?.into_family()
}

pub fn family_load(path: &Path) -> Result<MubFamily> {
    json::load::<FamilyJson>(path)?.into_family()
}

pub fn family_save(f: &MubFamily, path: &Path) -> Result<()> {
    json::save(&FamilyJson::from_family(f), path)
}

/// Families shipped with the crate (d = 4 with 5 bases, d = 9 with 10 bases).
pub fn builtin_family(d: usize) -> Result<MubFamily> {
    match d {
        4 => family_from_str(FAMILY_D4, "builtin:mub_d4.json"),
        9 => family_from_str(FAMILY_D9, "builtin:mub_d9.json"),
        other => Err(Error::UnsupportedDimension { dim: other, reason: "no shipped family".into() }),
    }
}

/// Bases {A_i ⊗ B_j} for each pair (i, j) of 0-based basis indices.
pub fn product_mub(fa: &MubFamily, fb: &MubFamily, pairing: &[(usize, usize)]) -> Result<MubFamily> {
    let d = fa.d * fb.d;
    if d > tensor::DESK_CAP {
        return Err(Error::Size { dim: d, cap: tensor::DESK_CAP });
    }
    let mut bases = Vec::with_capacity(pairing.len());
    for &(i, j) in pairing {
        let a = fa.bases.get(i).ok_or_else(|| Error::Domain(format!("left basis {i} out of range")))?;
        let b = fb.bases.get(j).ok_or_else(|| Error::Domain(format!("right basis {j} out of range")))?;
        let mut vectors = Vec::with_capacity(d);
        for x in &a.vectors {
            for y in &b.vectors {
                vectors.push(linalg::kron_vector(x, y));
            }
        }
        bases.push(Basis { vectors });
    }
    MubFamily::new(d, bases)
}

/// |Ψ⟩ = Σ_{i,j} |e_i f_j e_i f_j⟩ on the (m, n, m, n) sites.
pub fn psi_unnormalized(m: usize, n: usize) -> Result<Ket> {
    let d = m * n;
    let mut v = CVector::zeros(d * d);
    for x in 0..d {
        v[x * d + x] = ONE;
    }
    Ket::new(v, Shape::four_site(m, n))
}

/// f(X) = Tr(Tr_{1,3}(X) |Φ⟩⟨Φ|) with |Φ⟩ = Σ_j |f_j f_j⟩.
pub fn functional_f(x: &Operator) -> Result<C64> {
    let (_, n) = x.shape.as_four_site()?;
    let t = x.partial_trace_sites_13()?;
    let mut acc = ZERO;
    for j in 0..n {
        for l in 0..n {
            acc += t.matrix[(j * n + j, l * n + l)];
        }
    }
    Ok(acc)
}

/// P(Tr_A(|w⟩⟨w|)) from the coefficient matrix, without forming the projector.
pub fn marginal_purity(w: &CVector, s: BipartiteShape) -> f64 {
    let m = coefficient_matrix(w, s);
    let y = m.transpose() * m.map(|z| z.conj());
    y.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        let relative_error = (value - expected).abs() / expected.abs().max(1.0);
        IdentityCheck { name: name.to_string(), value, expected, relative_error, passed: relative_error <= tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma24Report {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
    pub all_passed: bool,
}

/// Checks the five values of the positive functional f: the purity identity
/// on `trials` random kets, f(|Ψ⟩⟨Ψ|) = mn², f(Id) = m²n, f(F_mn) = mn and
/// f(P_sym) = (m²n + mn)/2.
pub fn lemma24_suite<R: Rng + ?Sized>(m: usize, n: usize, trials: usize, rng: &mut R, tol: f64) -> Result<Lemma24Report> {
    let d = m * n;
    if d * d > tensor::DESK_CAP || m == 0 || n == 0 {
        return Err(Error::Size { dim: d * d, cap: tensor::DESK_CAP });
    }
    let shape4 = Shape::four_site(m, n);
    let (mf, nf) = (m as f64, n as f64);
    let mut checks = Vec::new();

    let mut worst: Option<IdentityCheck> = None;
    for _ in 0..trials {
        let w = random::unit_vector(rng, d);
        let proj = linalg::outer(&w);
        let x = Operator::new(linalg::kron_matrix(&proj, &proj.map(|z| z.conj())), shape4.clone())?;
        let value = functional_f(&x)?.re;
        let marginal = tensor::partial_trace_left(&proj, BipartiteShape::new(m, n)?);
        let expected = tensor::purity(&marginal)?;
        let chk = IdentityCheck::new("f(|w><w| ⊗ |w̄><w̄|) = P(Tr_A |w><w|)", value, expected, tol);
        if worst.as_ref().is_none_or(|w| chk.relative_error > w.relative_error) {
            worst = Some(chk);
        }
    }
    if let Some(w) = worst {
        checks.push(w);
    }

    let psi = psi_unnormalized(m, n)?.projector();
    checks.push(IdentityCheck::new("f(|Psi><Psi|) = m n^2", functional_f(&psi)?.re, mf * nf * nf, tol));
    let id = Operator::identity(shape4.clone())?;
    checks.push(IdentityCheck::new("f(Id) = m^2 n", functional_f(&id)?.re, mf * mf * nf, tol));
    let flip = tensor::flip(d)?;
    let flip = Operator { shape: shape4.clone(), ..flip };
    checks.push(IdentityCheck::new("f(F_mn) = m n", functional_f(&flip)?.re, mf * nf, tol));
    let psym = tensor::sym_projector(d)?;
    let psym = Operator { shape: shape4, ..psym };
    checks.push(IdentityCheck::new(
        "f(P_sym) = (m^2 n + m n)/2",
        functional_f(&psym)?.re,
        (mf * mf * nf + mf * nf) / 2.0,
        tol,
    ));
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(Lemma24Report { m, n, trials, tolerance: tol, checks, all_passed })
}

/// [`lemma24_suite`] driven by a ChaCha8 stream seeded with `seed`.
pub fn lemma24_seeded(m: usize, n: usize, trials: usize, seed: u64, tol: f64) -> Result<Lemma24Report> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    lemma24_suite(m, n, trials, &mut rng, tol)
}

/// Σ over all bases and vectors of P(Tr_A(|Ψ⟩⟨Ψ|)).
pub fn purity_sum(family: &MubFamily, shape: BipartiteShape) -> Result<f64> {
    Ok(basis_purities(family, shape)?.iter().sum())
}

/// Per-basis contributions to [`purity_sum`].
pub fn basis_purities(family: &MubFamily, shape: BipartiteShape) -> Result<Vec<f64>> {
    if shape.total() != family.d {
        return Err(Error::Shape(format!(
            "family dimension {} does not factor as {}x{}",
            family.d, shape.dim_a, shape.dim_b
        )));
    }
    Ok(family
        .bases
        .iter()
        .map(|b| b.vectors.iter().map(|v| marginal_purity(v, shape)).sum())
        .collect())
}

/// (m² + t − 1)·n over C, (m(m+1)/2 + t − 1)·n over R. Exact.
pub fn theorem_bound(m: usize, n: usize, t: usize, field: Field) -> Result<u64> {
    if t < 1 {
        return Err(Error::Domain("need at least one basis (t ≥ 1)".into()));
    }
    if m == 0 || n == 0 {
        return Err(Error::Domain("dimensions must be positive".into()));
    }
    let (m, n, t) = (m as u64, n as u64, t as u64);
    let local = match field {
        Field::Complex => m * m,
        Field::Real => m * (m + 1) / 2,
    };
    Ok((local + t - 1) * n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub field_kind: Field,
    pub purity_sum: f64,
    pub bound: u64,
    pub slack: f64,
    pub satisfied: bool,
    pub tolerance: f64,
    pub family_verified: bool,
    /// Set for real-field reports: largest imaginary entry seen.
    pub max_imaginary: Option<f64>,
}

pub fn check_bound(family: &MubFamily, shape: BipartiteShape, field: Field, tol: f64) -> Result<BoundReport> {
    let rec = family_verify(family, MUB_TOL);
    if !rec.verified {
        return Err(Error::Precondition(format!(
            "family is not mutually unbiased (max deviation {:.3e})",
            rec.max_deviation
        )));
    }
    let max_imaginary = match field {
        Field::Real => {
            if !rec.is_real() {
                return Err(Error::Precondition(format!(
                    "real-field bound needs real vectors (max |Im| = {:.3e})",
                    rec.max_imaginary
                )));
            }
            Some(rec.max_imaginary)
        }
        Field::Complex => None,
    };
    let t = family.len();
    let ps = purity_sum(family, shape)?;
    let bound = theorem_bound(shape.dim_a, shape.dim_b, t, field)?;
    let slack = bound as f64 - ps;
    Ok(BoundReport {
        m: shape.dim_a,
        n: shape.dim_b,
        t,
        field_kind: field,
        purity_sum: ps,
        bound,
        slack,
        satisfied: slack >= -tol,
        tolerance: tol,
        family_verified: true,
        max_imaginary,
    })
}

/// Largest number of MUBs made of Schmidt-rank ≤ k vectors:
/// k(m²−1)/(m−k) over C, (k/2)(m(m+1)−2)/(m−k) over R.
pub fn corollary_max_bases(k: usize, m: usize, field: Field) -> Result<Ratio<i64>> {
    if k < 1 || k >= m {
        return Err(Error::Domain(format!("need 1 ≤ k < m, got k={k}, m={m}")));
    }
    let (k, m) = (k as i64, m as i64);
    Ok(match field {
        Field::Complex => Ratio::new(k * (m * m - 1), m - k),
        Field::Real => Ratio::new(k * (m * (m + 1) - 2), 2 * (m - k)),
    })
}

/// min_j d_j + 1.
pub fn multipartite_product_bound(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .min()
        .map(|d| d + 1)
        .ok_or_else(|| Error::Domain("empty dimension list".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NStrictness {
    pub n: usize,
    pub mn_minus_1: i64,
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiReport {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub bound: Ratio<i64>,
    pub mn_plus_1: i64,
    pub bound_below_mn_plus_1: bool,
    pub k_below_ratio: bool,
    pub equivalence_holds: bool,
    /// k ≤ m/2.
    pub half_regime: bool,
    pub bound_below_mn_minus_1: bool,
    /// bound < mn − 1 for each n in m..=max(n, 2m).
    pub sweep: Vec<NStrictness>,
}

/// Compares the corollary bound with mn ± 1 in exact arithmetic.
pub fn shi_comparison(k: usize, m: usize, n: usize) -> Result<ShiReport> {
    if n < m {
        return Err(Error::Domain(format!("need n ≥ m, got m={m}, n={n}")));
    }
    let bound = corollary_max_bases(k, m, Field::Complex)?;
    let (ki, mi, ni) = (k as i64, m as i64, n as i64);
    let mn_plus_1 = mi * ni + 1;
    let bound_below = bound < Ratio::from_integer(mn_plus_1);
    let k_below = Ratio::from_integer(ki) < Ratio::new(mn_plus_1, mi + ni);
    let sweep = (m..=n.max(2 * m))
        .map(|nn| {
            let v = mi * nn as i64 - 1;
            NStrictness { n: nn, mn_minus_1: v, strict: bound < Ratio::from_integer(v) }
        })
        .collect();
    Ok(ShiReport {
        k,
        m,
        n,
        bound,
        mn_plus_1,
        bound_below_mn_plus_1: bound_below,
        k_below_ratio: k_below,
        equivalence_holds: bound_below == k_below,
        half_regime: 2 * k <= m,
        bound_below_mn_minus_1: bound < Ratio::from_integer(mi * ni - 1),
        sweep,
    })
}

/// A_j = Σ_i |Ψ_ji⟩⟨Ψ_ji| ⊗ |Ψ̄_ji⟩⟨Ψ̄_ji| (entrywise conjugate).
pub fn twirl_projector(basis: &Basis) -> CMatrix {
    let d = basis.dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for v in &basis.vectors {
        let x = linalg::kron_vector(v, &v.map(|z| z.conj()));
        out += linalg::outer(&x);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutationReport {
    pub d: usize,
    pub t: usize,
    pub pairs_checked: usize,
    /// max over j ≠ k of ‖A_j A_k − |Ψ⟩⟨Ψ|/d‖.
    pub max_product_residual: f64,
    pub b_spectrum: tensor::SpectralReport,
    pub b_norm: f64,
    pub identity_holds: bool,
    pub b_psd: bool,
}

/// Verifies A_j A_k = |Ψ⟩⟨Ψ|/d for j ≠ k and that
/// B = Id + (t−1)/d |Ψ⟩⟨Ψ| − Σ A_j is PSD.
pub fn commutation_projector_check(family: &MubFamily, tol: f64) -> Result<CommutationReport> {
    if !family.verified {
        return Err(Error::Precondition("family must be verified".into()));
    }
    let d = family.d;
    if d * d > tensor::DESK_CAP {
        return Err(Error::Size { dim: d * d, cap: tensor::DESK_CAP });
    }
    let t = family.len();
    let a: Vec<CMatrix> = family.bases.iter().map(twirl_projector).collect();
    let psi = tensor::max_ent_unnormalized(d)?.entries;
    let psi_proj = linalg::outer(&psi);
    let target = psi_proj.unscale(d as f64);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for j in 0..t {
        for k in 0..t {
            if j != k {
                pairs += 1;
                worst = worst.max(linalg::op_norm(&(&a[j] * &a[k] - &target)));
            }
        }
    }
    let mut b = linalg::identity(d * d) + psi_proj.scale((t as f64 - 1.0) / d as f64);
    for aj in &a {
        b -= aj;
    }
    let spectrum = tensor::psd_check(&b, PSD_TOL)?;
    // B can vanish (complete families); judge PSD against the unit scale of Id.
    let b_psd = spectrum.min_eigenvalue >= -PSD_TOL;
    Ok(CommutationReport {
        d,
        t,
        pairs_checked: pairs,
        max_product_residual: worst,
        b_norm: linalg::op_norm(&b),
        b_spectrum: spectrum,
        identity_holds: worst <= tol,
        b_psd,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub m: usize,
    pub n: usize,
    pub purity_sum: f64,
    pub expected: u64,
    pub deviation: f64,
    pub passed: bool,
}

/// For a complete family (mn + 1 bases): Σ purities = mn(m + n).
pub fn conservation_check(family: &MubFamily, shape: BipartiteShape, tol: f64) -> Result<ConservationReport> {
    if family.len() != family.d + 1 {
        return Err(Error::Precondition(format!(
            "conservation law needs a complete family of {} bases, got {}",
            family.d + 1,
            family.len()
        )));
    }
    if !family.verified {
        return Err(Error::Precondition("family must be verified".into()));
    }
    let ps = purity_sum(family, shape)?;
    let (m, n) = (shape.dim_a as u64, shape.dim_b as u64);
    let expected = m * n * (m + n);
    let deviation = (ps - expected as f64).abs();
    Ok(ConservationReport { m: shape.dim_a, n: shape.dim_b, purity_sum: ps, expected, deviation, passed: deviation <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn overlaps_all_equal(f: &MubFamily) -> (usize, f64) {
        let target = 1.0 / (f.d as f64).sqrt();
        let mut count = 0;
        let mut worst = 0.0f64;
        for a in 0..f.len() {
            for b in (0..f.len()).filter(|&b| b != a) {
                for x in &f.bases[a].vectors {
                    for y in &f.bases[b].vectors {
                        count += 1;
                        worst = worst.max((x.dotc(y).norm() - target).abs());
                    }
                }
            }
        }
        (count, worst)
    }

    #[test]
    fn prime_families_exhaustive() {
        let f = mub_prime(2).unwrap();
        assert_eq!(f.len(), 3);
        let (count, worst) = overlaps_all_equal(&f);
        assert_eq!(count, 24);
        assert!(worst < 1e-15);
        let f = mub_prime(3).unwrap();
        assert_eq!(f.len(), 4);
        let (count, worst) = overlaps_all_equal(&f);
        assert_eq!(count, 108);
        assert!(worst < 1e-14);
        let f = mub_prime(5).unwrap();
        assert_eq!(f.len(), 6);
        assert!(f.verified);
        for p in [7, 11, 13, 31] {
            assert!(mub_prime(p).unwrap().verified, "p={p}");
        }
    }

    #[test]
    fn non_prime_rejected() {
        for p in [0, 1, 4, 6, 9, 37] {
            assert!(matches!(mub_prime(p), Err(Error::UnsupportedDimension { .. })), "p={p}");
        }
    }

    #[test]
    fn shipped_families_verify() {
        let f = builtin_family(4).unwrap();
        assert_eq!(f.len(), 5);
        assert!(f.verified);
        let f = builtin_family(9).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.verified);
        assert!(builtin_family(6).is_err());
    }

    #[test]
    fn tampered_family_located() {
        let mut f = builtin_family(4).unwrap();
        f.bases[2].vectors[1][0] += c(0.05, 0.0);
        let rec = family_verify(&f, MUB_TOL);
        assert!(!rec.verified);
        let w = rec.worst.unwrap();
        assert!(w.basis_a == 2 || w.basis_b == 2);
    }

    #[test]
    fn single_basis_trivially_verified() {
        let f = mub_prime(3).unwrap().subfamily(1).unwrap();
        let rec = family_verify(&f, MUB_TOL);
        assert!(rec.verified);
        assert_eq!(rec.pairs_checked, 0);
    }

    #[test]
    fn product_families() {
        let f2 = mub_prime(2).unwrap();
        let f3 = mub_prime(3).unwrap();
        let p = product_mub(&f2, &f2, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(p.d, 4);
        assert!(p.verified);
        let bad = product_mub(&f2, &f2, &[(0, 0), (0, 1)]).unwrap();
        assert!(!bad.verified);
        let p = product_mub(&f2, &f3, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(p.d, 6);
        assert!(p.verified);
    }

    #[test]
    fn functional_values() {
        let id = Operator::identity(Shape::four_site(2, 3)).unwrap();
        assert!((functional_f(&id).unwrap() - r(12.0)).norm() < 1e-12);
        let f = Operator { shape: Shape::four_site(2, 2), ..tensor::flip(4).unwrap() };
        assert!((functional_f(&f).unwrap() - r(4.0)).norm() < 1e-12);
        let psi = psi_unnormalized(2, 2).unwrap().projector();
        assert!((functional_f(&psi).unwrap() - r(8.0)).norm() < 1e-12);
        assert!(functional_f(&tensor::flip(2).unwrap()).is_err());
    }

    #[test]
    fn lemma24_small_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = lemma24_suite(2, 2, 10, &mut rng, 1e-9).unwrap();
        assert!(rep.all_passed);
        assert!((rep.checks[4].value - 6.0).abs() < 1e-12);
        let rep = lemma24_suite(2, 3, 5, &mut rng, 1e-9).unwrap();
        assert!(rep.all_passed);
        assert!((rep.checks[4].value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn purity_sums() {
        let f2 = mub_prime(2).unwrap();
        let p = product_mub(&f2, &f2, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        let s = BipartiteShape::new(2, 2).unwrap();
        assert!((purity_sum(&p, s).unwrap() - 12.0).abs() < 1e-12);
        // Bell basis: every marginal purity is 1/2
        let h = 0.5f64.sqrt();
        let bell = Basis {
            vectors: vec![
                CVector::from_vec(vec![r(h), ZERO, ZERO, r(h)]),
                CVector::from_vec(vec![r(h), ZERO, ZERO, r(-h)]),
                CVector::from_vec(vec![ZERO, r(h), r(h), ZERO]),
                CVector::from_vec(vec![ZERO, r(h), r(-h), ZERO]),
            ],
        };
        let fam = MubFamily::new(4, vec![bell]).unwrap();
        assert!((purity_sum(&fam, s).unwrap() - 2.0).abs() < 1e-12);
        let full = builtin_family(4).unwrap();
        assert!((purity_sum(&full, s).unwrap() - 16.0).abs() < 1e-10);
        assert!(purity_sum(&full, BipartiteShape::new(2, 3).unwrap()).is_err());
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(theorem_bound(2, 2, 3, Field::Complex).unwrap(), 12);
        assert_eq!(theorem_bound(2, 2, 3, Field::Real).unwrap(), 10);
        assert_eq!(theorem_bound(3, 3, 1, Field::Complex).unwrap(), 27);
        assert!(theorem_bound(2, 2, 0, Field::Complex).is_err());
    }

    #[test]
    fn corollary_values() {
        assert_eq!(corollary_max_bases(1, 3, Field::Complex).unwrap(), Ratio::from_integer(4));
        assert_eq!(corollary_max_bases(1, 2, Field::Real).unwrap(), Ratio::from_integer(2));
        assert_eq!(corollary_max_bases(2, 4, Field::Complex).unwrap(), Ratio::from_integer(15));
        assert!(corollary_max_bases(3, 3, Field::Complex).is_err());
        assert_eq!(multipartite_product_bound(&[2, 3, 5]).unwrap(), 3);
        assert_eq!(multipartite_product_bound(&[2, 2]).unwrap(), 3);
        assert_eq!(multipartite_product_bound(&[7]).unwrap(), 8);
        assert!(multipartite_product_bound(&[]).is_err());
    }

    #[test]
    fn shi_cases() {
        let r1 = shi_comparison(1, 2, 10).unwrap();
        assert_eq!(r1.bound, Ratio::from_integer(3));
        assert_eq!(r1.mn_plus_1, 21);
        assert!(r1.bound_below_mn_plus_1 && r1.k_below_ratio && r1.equivalence_holds);
        let r2 = shi_comparison(2, 4, 4).unwrap();
        assert_eq!(r2.bound, Ratio::from_integer(15));
        assert!(!r2.bound_below_mn_minus_1);
        assert!(!r2.sweep[0].strict);
        assert!(r2.sweep[1..].iter().all(|s| s.strict));
        let r3 = shi_comparison(2, 4, 5).unwrap();
        assert!(r3.bound_below_mn_minus_1);
        assert_eq!(r3.sweep.iter().find(|s| s.n == 5).unwrap().mn_minus_1, 19);
    }

    #[test]
    fn commutation_identity() {
        let f = builtin_family(4).unwrap();
        let rep = commutation_projector_check(&f.subfamily(2).unwrap(), 1e-9).unwrap();
        assert!(rep.identity_holds && rep.b_psd);
        let rep = commutation_projector_check(&f.subfamily(1).unwrap(), 1e-9).unwrap();
        assert!(rep.b_psd);
        let rep = commutation_projector_check(&f, 1e-9).unwrap();
        assert!(rep.identity_holds);
        assert!(rep.b_norm < 1e-12);
    }

    #[test]
    fn conservation_values() {
        let f = builtin_family(4).unwrap();
        let rep = conservation_check(&f, BipartiteShape::new(2, 2).unwrap(), 1e-8).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.expected, 16);
        let rep = conservation_check(&f, BipartiteShape::new(1, 4).unwrap(), 1e-8).unwrap();
        assert_eq!(rep.expected, 20);
        assert!(rep.passed);
        let f9 = builtin_family(9).unwrap();
        let rep = conservation_check(&f9, BipartiteShape::new(3, 3).unwrap(), 1e-8).unwrap();
        assert_eq!(rep.expected, 54);
        assert!(rep.passed);
        assert!(conservation_check(&f.subfamily(3).unwrap(), BipartiteShape::new(2, 2).unwrap(), 1e-8).is_err());
    }
}
