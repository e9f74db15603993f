//! Self-describing certificates for every top-level operation, and replay
//! verification. `verify` only re-checks residuals, spectra and bound
//! arithmetic stored in the certificate against the referenced input files.

use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::json::{self, SCHEMA_VERSION};
use crate::linalg::{self, CMatrix};
use crate::mub::{self, BoundReport, ConservationReport, Field, Lemma24Report, VerificationRecord};
use crate::osr3::{self, SeparabilityCertificate, SeparabilityStatus};
use crate::ppt::{self, PptCertificate, ProductEnsemble, SicPovm, Theorem36Result};
use crate::schmidt;
use crate::tensor::{self, Operator, PSD_TOL};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Agreement required between a stored float claim and its recomputation.
const CLAIM_TOL: f64 = 1e-9;
const SEP_RECON_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    MubBound,
    PptMixture,
    Separability,
    IdentitySuite,
}

impl std::fmt::Display for CertKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertKind::MubBound => "mub_bound",
            CertKind::PptMixture => "ppt_mixture",
            CertKind::Separability => "separability",
            CertKind::IdentitySuite => "identity_suite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub files: Vec<InputFile>,
    pub parameters: serde_json::Value,
}

impl Inputs {
    pub fn new(parameters: serde_json::Value) -> Self {
        Inputs { files: Vec::new(), parameters }
    }

    pub fn with_file(mut self, role: &str, path: &Path) -> Result<Self> {
        let bytes = read_bytes(path)?;
        self.files.push(InputFile { role: role.into(), path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(self)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }

    fn file(&self, role: &str) -> Result<&InputFile> {
        self.files
            .iter()
            .find(|f| f.role == role)
            .ok_or_else(|| Error::Precondition(format!("certificate references no '{role}' input")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub check: String,
    pub passed: bool,
    /// Measured quantity and its bound; absent for yes/no checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    MubVerify { d: usize, bases: usize, record: VerificationRecord },
    MubBound { m: usize, n: usize, t: usize, field: Field, bound: u64 },
    MubFamilyBound { report: BoundReport },
    MubCorollary { k: usize, m: usize, field: Field, bound: Ratio<i64>, integer_bound: i64 },
    MubConservation { report: ConservationReport },
    PptCheck { certificate: PptCertificate },
    PptMixture { result: Theorem36Result },
    Sic { sic: SicPovm },
    Separability { certificate: SeparabilityCertificate },
    IdentitySuite { seed: u64, report: Lemma24Report },
}

impl Payload {
    pub fn kind(&self) -> CertKind {
        match self {
            Payload::MubVerify { .. }
            | Payload::MubBound { .. }
            | Payload::MubFamilyBound { .. }
            | Payload::MubCorollary { .. }
            | Payload::MubConservation { .. } => CertKind::MubBound,
            Payload::PptCheck { .. } | Payload::PptMixture { .. } | Payload::Sic { .. } => CertKind::PptMixture,
            Payload::Separability { .. } => CertKind::Separability,
            Payload::IdentitySuite { .. } => CertKind::IdentitySuite,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub kind: CertKind,
    pub tool_version: String,
    pub inputs: Inputs,
    pub inputs_digest: String,
    pub tolerance: f64,
    pub passed: bool,
    pub payload: Payload,
    pub verification_log: Vec<LogEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<LogEntry>,
}

impl Certificate {
    /// Wraps a payload and fills the verification log by replaying its checks.
    pub fn issue(inputs: Inputs, payload: Payload, tolerance: f64) -> Result<Certificate> {
        let mut cert = Certificate {
            schema_version: SCHEMA_VERSION,
            kind: payload.kind(),
            tool_version: TOOL_VERSION.into(),
            inputs_digest: inputs.digest()?,
            inputs,
            tolerance,
            passed: false,
            payload,
            verification_log: Vec::new(),
        };
        let outcome = verify(&cert, None)?;
        cert.passed = outcome.passed;
        cert.verification_log = outcome.checks;
        Ok(cert)
    }

    pub fn load(path: &Path) -> Result<Certificate> {
        let cert: Certificate = json::load(path)?;
        json::check_version(cert.schema_version)?;
        Ok(cert)
    }

    pub fn from_str(text: &str, origin: &str) -> Result<Certificate> {
        let cert: Certificate = json::parse_str(text, origin)?;
        json::check_version(cert.schema_version)?;
        Ok(cert)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        json::save(self, path)
    }

    /// Short human-readable report.
    pub fn render(&self) -> String {
        let mut out = format!("certificate: {} (tool {})\n", self.kind, self.tool_version);
        out += &format!("inputs digest: {}\n", self.inputs_digest);
        for f in &self.inputs.files {
            out += &format!("  {}: {} [{}]\n", f.role, f.path, &f.sha256[..12.min(f.sha256.len())]);
        }
        out += &summary(&self.payload);
        for e in &self.verification_log {
            let mark = if e.passed { "ok  " } else { "FAIL" };
            match (e.value, e.threshold) {
                (Some(v), Some(t)) => out += &format!("  [{mark}] {} ({v:.3e} ≤ {t:.3e})\n", e.check),
                _ => out += &format!("  [{mark}] {}\n", e.check),
            }
        }
        out += &format!("result: {}\n", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

fn summary(p: &Payload) -> String {
    match p {
        Payload::MubVerify { d, bases, record } => format!(
            "MUB family: d = {d}, {bases} bases, verified = {}, max deviation {:.3e}\n",
            record.verified, record.max_deviation
        ),
        Payload::MubBound { m, n, t, field, bound } => format!("bound ({field}, m={m}, n={n}, t={t}): {bound}\n"),
        Payload::MubFamilyBound { report } => format!(
            "purity sum {:.12} ≤ bound {} (slack {:.3e})\n",
            report.purity_sum, report.bound, report.slack
        ),
        Payload::MubCorollary { k, m, field, bound, integer_bound } => {
            format!("max bases ({field}, k={k}, m={m}): {bound} → {integer_bound}\n")
        }
        Payload::MubConservation { report } => format!(
            "purity sum {:.12} vs mn(m+n) = {} (deviation {:.3e})\n",
            report.purity_sum, report.expected, report.deviation
        ),
        Payload::PptCheck { certificate } => format!(
            "min eig state {:.3e}, min eig partial transpose {:.3e}, PPT = {}\n",
            certificate.min_eig_state, certificate.min_eig_pt, certificate.ppt
        ),
        Payload::PptMixture { result } => format!(
            "ε = {}, regime {}: SN in [{}, {}] ({}), {} ensemble terms, PPT = {}\n",
            result.sn.epsilon,
            result.sn.regime,
            result.sn.lower,
            result.sn.upper,
            if result.sn.exact { "exact" } else { "interval" },
            result.ensemble.len(),
            result.ppt.ppt
        ),
        Payload::Sic { sic } => format!(
            "SIC-POVM d = {}: {} vectors, max overlap deviation {:.3e}\n",
            sic.k,
            sic.vectors.len(),
            sic.max_overlap_deviation
        ),
        Payload::Separability { certificate } => format!(
            "status {:?}, branch {}, OSR {}, {} product terms, reconstruction residual {:.3e}\n",
            certificate.status,
            certificate.branch,
            certificate.operator_schmidt_rank,
            certificate.constructive_part.len(),
            certificate.reconstruction_residual
        ),
        Payload::IdentitySuite { report, seed } => {
            let mut s = format!("identity suite m={}, n={}, trials={}, seed={seed}\n", report.m, report.n, report.trials);
            for c in &report.checks {
                s += &format!("  {}: {:.12} vs {:.12}\n", c.name, c.value, c.expected);
            }
            s
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn resolve(path: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(path);
    if p.exists() {
        return p;
    }
    let Some(b) = base else { return p };
    [b.join(&p), b.join(p.file_name().unwrap_or_default())]
        .into_iter()
        .find(|q| q.exists())
        .unwrap_or(p)
}

struct Log {
    checks: Vec<LogEntry>,
}

impl Log {
    fn le(&mut self, name: &str, value: f64, threshold: f64) {
        self.checks.push(LogEntry {
            check: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
        });
    }

    fn ok(&mut self, name: &str, cond: bool) {
        self.checks.push(LogEntry { check: name.into(), passed: cond, value: None, threshold: None });
    }

    /// Stored float claim agrees with its recomputation.
    fn claim(&mut self, name: &str, stored: f64, recomputed: f64, scale: f64) {
        let dev = if stored.is_nan() && recomputed.is_nan() { 0.0 } else { (stored - recomputed).abs() };
        self.le(name, dev / scale.max(1.0), CLAIM_TOL);
    }
}

/// Replays the certificate's checks. `base` resolves relative input paths
/// (normally the certificate's directory). I/O and parse problems are
/// errors; failed checks are reported in the outcome.
pub fn verify(cert: &Certificate, base: Option<&Path>) -> Result<VerifyOutcome> {
    json::check_version(cert.schema_version)?;
    let mut log = Log { checks: Vec::new() };
    log.ok("kind matches payload", cert.kind == cert.payload.kind());
    log.ok("inputs digest", cert.inputs.digest()? == cert.inputs_digest);
    for f in &cert.inputs.files {
        let bytes = read_bytes(&resolve(&f.path, base))?;
        log.ok(&format!("{} file sha256", f.role), sha256_hex(&bytes) == f.sha256);
    }
    let tol = cert.tolerance;
    let load_op = |role: &str| -> Result<Operator> { json::load_operator(&resolve(&cert.inputs.file(role)?.path, base)) };
    let load_family = |role: &str| -> Result<mub::MubFamily> {
        mub::family_load(&resolve(&cert.inputs.file(role)?.path, base))
    };
    match &cert.payload {
        Payload::MubVerify { d, bases, record } => {
            let fam = load_family("family")?;
            log.ok("family dimension", fam.d == *d && fam.len() == *bases);
            let rec = mub::family_verify(&fam, record.tolerance);
            log.claim("max deviation claim", record.max_deviation, rec.max_deviation, 1.0);
            log.ok("verified flag consistent", rec.verified == record.verified);
            log.le("family unbiasedness", rec.max_deviation, record.tolerance);
        }
        Payload::MubBound { m, n, t, field, bound } => {
            log.ok("bound arithmetic", mub::theorem_bound(*m, *n, *t, *field)? == *bound);
        }
        Payload::MubFamilyBound { report } => {
            let fam = load_family("family")?;
            let shape = tensor::BipartiteShape::new(report.m, report.n)?;
            let rec = mub::family_verify(&fam, mub::MUB_TOL);
            log.le("family unbiasedness", rec.max_deviation, mub::MUB_TOL);
            if report.field_kind == Field::Real {
                log.le("family is real", rec.max_imaginary, mub::MUB_TOL);
            }
            log.ok("basis count", fam.len() == report.t);
            log.ok(
                "bound arithmetic",
                mub::theorem_bound(report.m, report.n, report.t, report.field_kind)? == report.bound,
            );
            let ps = mub::purity_sum(&fam, shape)?;
            log.claim("purity sum claim", report.purity_sum, ps, ps);
            log.claim("slack arithmetic", report.slack, report.bound as f64 - report.purity_sum, ps);
            log.le("purity sum within bound", -(report.bound as f64 - ps), report.tolerance);
        }
        Payload::MubCorollary { k, m, field, bound, integer_bound } => {
            let r = mub::corollary_max_bases(*k, *m, *field)?;
            log.ok("corollary arithmetic", r == *bound);
            log.ok("integer part", r.floor().to_integer() == *integer_bound);
        }
        Payload::MubConservation { report } => {
            let fam = load_family("family")?;
            let shape = tensor::BipartiteShape::new(report.m, report.n)?;
            let rec = mub::family_verify(&fam, mub::MUB_TOL);
            log.le("family unbiasedness", rec.max_deviation, mub::MUB_TOL);
            log.ok("complete family", fam.len() == fam.d + 1);
            let (mu, nu) = (report.m as u64, report.n as u64);
            log.ok("mn(m+n) arithmetic", report.expected == mu * nu * (mu + nu));
            let ps = mub::purity_sum(&fam, shape)?;
            log.claim("purity sum claim", report.purity_sum, ps, ps);
            log.le("conservation law", (ps - report.expected as f64).abs(), tol);
        }
        Payload::PptCheck { certificate } => {
            let b = load_op("state")?;
            verify_ppt_claim(&mut log, &b, certificate)?;
            log.ok("state is PPT", certificate.ppt);
        }
        Payload::PptMixture { result } => {
            let gamma = load_op("gamma")?;
            verify_mixture(&mut log, &gamma, result, tol)?;
        }
        Payload::Sic { sic } => {
            let fresh = ppt::sic_verify(sic.clone());
            log.claim("overlap deviation claim", sic.max_overlap_deviation, fresh.max_overlap_deviation, 1.0);
            log.ok("vector count", sic.vectors.len() == sic.k * sic.k);
            log.le("equiangularity", fresh.max_overlap_deviation, ppt::SIC_TOL);
            log.le("2-design resolution", fresh.resolution_residual, ppt::SIC_TOL);
        }
        Payload::Separability { certificate } => {
            let a = load_op("state")?;
            verify_separability(&mut log, &a, certificate, tol)?;
        }
        Payload::IdentitySuite { report, .. } => {
            verify_identity_suite(&mut log, report);
        }
    }
    let first_failure = log.checks.iter().find(|c| !c.passed).map(|c| c.check.clone());
    Ok(VerifyOutcome { passed: first_failure.is_none(), first_failure, checks: log.checks })
}

fn min_eig(m: &CMatrix) -> f64 {
    linalg::eigvalsh(m).into_iter().fold(f64::INFINITY, f64::min)
}

fn verify_ppt_claim(log: &mut Log, b: &Operator, c: &PptCertificate) -> Result<()> {
    let h = linalg::hermitian_part(&b.matrix);
    let scale = linalg::op_norm(&h);
    let bt = tensor::partial_transpose_right(&h, b.bipartite_shape()?);
    let (ms, mp) = (min_eig(&h), min_eig(&bt));
    log.claim("min eigenvalue claim", c.min_eig_state, ms, scale);
    log.claim("partial transpose min eigenvalue claim", c.min_eig_pt, mp, scale);
    log.ok("PPT flag consistent", c.ppt == (ms >= -c.tolerance && mp >= -c.tolerance));
    Ok(())
}

fn verify_ensemble(log: &mut Log, e: &ProductEnsemble, target: &CMatrix, recon_tol: f64, label: &str) -> Result<usize> {
    log.ok(&format!("{label} weights nonnegative"), e.terms.iter().all(|t| t.weight >= 0.0));
    log.le(
        &format!("{label} kets normalized"),
        e.terms.iter().map(|t| (t.ket.norm() - 1.0).abs()).fold(0.0, f64::max),
        1e-9,
    );
    let tags_ok = e.verify_tags(tensor::RANK_TOL).is_ok();
    log.ok(&format!("{label} Schmidt-rank tags"), tags_ok);
    log.le(&format!("{label} reconstruction"), e.reconstruction_residual(target), recon_tol);
    Ok(e.terms.iter().map(|t| t.sr_tag).max().unwrap_or(0))
}

fn verify_mixture(log: &mut Log, gamma: &Operator, r: &Theorem36Result, tol: f64) -> Result<()> {
    let s = gamma.bipartite_shape()?;
    let target = &tensor::sym_projector(s.dim_a)?.matrix + gamma.matrix.scale(r.sn.epsilon);
    log.le("B = P_sym + εγ", (&target - &r.b.matrix).norm() / target.norm(), CLAIM_TOL);
    log.le(
        "ε within regime",
        r.sn.epsilon - r.sn.regime.max_eps(s.dim_a),
        ppt::BOUNDARY_SLACK,
    );
    let upper = verify_ensemble(log, &r.ensemble, &target, tol, "ensemble")?;
    log.ok("SN upper bound equals max tag", upper == r.sn.upper);
    log.ok("lower ≤ upper", r.sn.lower <= r.sn.upper);
    log.ok("lower bound arithmetic", r.sn.lower == r.sn.sn_gamma / 2);
    log.ok("exactness flag", r.sn.exact == (r.sn.lower == r.sn.upper));
    verify_ppt_claim(log, &r.b, &r.ppt)?;
    log.ok("mixture is PPT", r.ppt.ppt);
    Ok(())
}

fn verify_separability(log: &mut Log, a: &Operator, c: &SeparabilityCertificate, tol: f64) -> Result<()> {
    let s = a.bipartite_shape()?;
    log.ok("shape", s == c.shape);
    let lpt = osr3::left_pt_invariance_check(a, tol)?;
    log.le("left partial transpose invariance", lpt.residual, tol);
    let a_scale = linalg::op_norm(&a.matrix);
    log.le("input PSD", -min_eig(&a.matrix), PSD_TOL * a_scale);
    let osr = schmidt::operator_schmidt_rank(a, tol)?;
    log.ok("operator Schmidt rank claim", osr == c.operator_schmidt_rank && osr <= 3);

    let e = &c.constructive_part;
    log.ok("constructive terms are products", e.terms.iter().all(|t| t.sr_tag == 1));
    let tags_ok = e.verify_tags(tensor::RANK_TOL).is_ok();
    log.ok("product structure of terms", tags_ok);
    log.ok("weights nonnegative", e.terms.iter().all(|t| t.weight >= 0.0));
    log.ok("status consistent", (c.status == SeparabilityStatus::FullyConstructive) == c.cited_part.is_none());

    let total = c.reconstruct();
    let gap = (&total - &a.matrix).norm() / a.matrix.norm();
    log.claim("residual vs input claim", c.residual_vs_input, gap, 1.0);
    match &c.regularization {
        None => log.le("reconstruction of A", gap, SEP_RECON_TOL),
        Some(reg) => {
            let op_gap = linalg::op_norm(&(&total - &a.matrix));
            log.le("regularization gap", op_gap, reg.gap_norm * (1.0 + 1e-6) + SEP_RECON_TOL * a_scale);
        }
    }
    if let Some(cp) = &c.cited_part {
        let h = linalg::hermitian_part(&cp.block.matrix);
        let scale = linalg::op_norm(&h).max(f64::MIN_POSITIVE);
        log.le("cited block PSD", -min_eig(&h), PSD_TOL * scale);
        let osr_b = if linalg::max_abs_entry(&h) == 0.0 {
            0
        } else {
            schmidt::operator_schmidt_rank(&Operator::new(h.clone(), cp.block.shape.clone())?, tol)?
        };
        log.ok("cited block operator Schmidt rank ≤ 3", osr_b <= 3 && osr_b == cp.operator_schmidt_rank);
        verify_ppt_claim(log, &cp.block, &cp.ppt)?;
        log.ok("cited block PPT", cp.ppt.ppt && cp.ppt_verified);
        if c.chain.ops.is_empty() {
            log.le("cited block frame", (&cp.block_transformed.matrix - &cp.block.matrix).norm() / h.norm(), CLAIM_TOL);
        } else {
            let replay = c.chain.apply(&cp.block.matrix);
            let bt = &cp.block_transformed.matrix;
            log.le("chain replay on cited block", (&replay - bt).norm() / bt.norm(), 1e-8);
            if let Some(emb) = cp.embedding_defect {
                let kb = s.dim_b;
                let mut d = 0.0f64;
                for j in 0..s.dim_a {
                    d = d.max(linalg::max_abs_entry(&bt.view((0, j * kb), (kb, kb)).into_owned()));
                    d = d.max(linalg::max_abs_entry(&bt.view((j * kb, 0), (kb, kb)).into_owned()));
                }
                let d = d / linalg::max_abs_entry(bt).max(f64::MIN_POSITIVE);
                log.claim("embedding defect claim", emb, d, 1.0);
                log.le("2⊗k embedding", d, 1e-8);
            }
        }
    }
    Ok(())
}

fn verify_identity_suite(log: &mut Log, r: &Lemma24Report) {
    let (m, n) = (r.m as f64, r.n as f64);
    let closed = [m * n * n, m * m * n, m * n, (m * m * n + m * n) / 2.0];
    log.ok("five identities recorded", r.checks.len() == 5);
    for (c, want) in r.checks.iter().skip(1).zip(closed) {
        log.ok(&format!("closed form: {}", c.name), c.expected == want);
    }
    for c in &r.checks {
        let rel = (c.value - c.expected).abs() / c.expected.abs().max(1.0);
        log.claim(&format!("relative error: {}", c.name), c.relative_error, rel, 1.0);
        log.le(&c.name, rel, r.tolerance);
    }
    log.ok("summary flag", r.all_passed == r.checks.iter().all(|c| c.passed));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_certificate_and_tamper() {
        let p = Payload::MubBound { m: 2, n: 2, t: 3, field: Field::Complex, bound: 12 };
        let cert = Certificate::issue(Inputs::new(serde_json::json!({"m": 2})), p, 1e-8).unwrap();
        assert!(cert.passed);
        let text = json::to_string(&cert).unwrap();
        let back = Certificate::from_str(&text, "mem").unwrap();
        assert_eq!(json::to_string(&back).unwrap(), text);
        let tampered = text.replace("\"bound\": 12", "\"bound\": 13");
        let bad = Certificate::from_str(&tampered, "mem").unwrap();
        let out = verify(&bad, None).unwrap();
        assert_eq!(out.first_failure.as_deref(), Some("bound arithmetic"));
        let tampered = text.replace("\"m\": 2\n", "\"m\": 3\n");
        let out = verify(&Certificate::from_str(&tampered, "mem").unwrap(), None).unwrap();
        assert_eq!(out.first_failure.as_deref(), Some("inputs digest"));
    }

    #[test]
    fn separability_certificate_roundtrip() {
        let dir = tempdir();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Operator::bipartite(random::invariant_separable(&mut rng, 3, 3, 3), 3, 3).unwrap();
        let path = dir.join("state.json");
        json::save(&a, &path).unwrap();
        let (sep, _) = osr3::theorem42_separate(&a, 1e-6, 1e-8).unwrap();
        let inputs = Inputs::new(serde_json::json!({"eps_reg": 1e-6})).with_file("state", &path).unwrap();
        let cert = Certificate::issue(inputs, Payload::Separability { certificate: sep }, 1e-8).unwrap();
        assert!(cert.passed, "{}", cert.render());
        let mut bad = cert.clone();
        if let Payload::Separability { certificate } = &mut bad.payload {
            certificate.constructive_part.terms[0].weight *= 1.5;
        }
        let out = verify(&bad, None).unwrap();
        assert!(!out.passed);
        std::fs::remove_dir_all(dir).ok();
    }

    fn tempdir() -> PathBuf {
        let d = std::env::temp_dir().join(format!("srcert-cert-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }
}
