use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use srcert::cert::{self, Certificate, Inputs, Payload};
use srcert::mub::{self, Field};
use srcert::ppt::{self, MixtureRegime};
use srcert::tensor::{BipartiteShape, PSD_TOL};
use srcert::{json as sjson, osr3, Error};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "srcert", version, about = "Schmidt-rank certification toolkit")]
struct Cli {
    /// Override the tolerance used by the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutually unbiased bases: generation, verification and purity bounds.
    #[command(subcommand)]
    Mub(MubCmd),
    /// PPT mixtures, PPT checks and SIC-POVMs.
    #[command(subcommand)]
    Ppt(PptCmd),
    /// Separability of left-PT-invariant states.
    #[command(subcommand)]
    Sep(SepCmd),
    /// Randomized identity suites.
    #[command(subcommand)]
    Suite(SuiteCmd),
    /// Re-check a certificate against its referenced inputs.
    Verify { cert: PathBuf },
}

#[derive(Args)]
struct Out {
    /// Write the certificate (or generated data) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MubCmd {
    /// Complete family of p+1 MUBs in prime dimension p, or a bundled family.
    Gen {
        #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
        prime: Option<usize>,
        /// Bundled complete family: 4 or 9.
        #[arg(long)]
        builtin: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Check pairwise unbiasedness of a family file.
    Verify {
        family: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Purity-sum bound for t bases of C^m ⊗ C^n (checked against a family if given).
    Bound {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value = "complex")]
        field: Field,
        #[arg(long)]
        family: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Maximal number of MUBs made of Schmidt-rank ≤ k vectors in C^m ⊗ C^m.
    Corollary {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "complex")]
        field: Field,
        #[command(flatten)]
        out: Out,
    },
    /// Conservation law for a complete family viewed on C^m ⊗ C^n.
    Conserve {
        family: PathBuf,
        #[arg(long, value_parser = parse_shape)]
        shape: (usize, usize),
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum PptCmd {
    /// B = P_sym + ε·γ with a Schmidt-number certificate.
    Mix {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        regime: MixtureRegime,
        #[command(flatten)]
        out: Out,
    },
    /// Minimum eigenvalues of a state and its partial transpose.
    Check {
        state: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Weyl–Heisenberg SIC-POVM from the bundled (or given) fiducial.
    Sic {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        fiducial: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum SepCmd {
    /// Separability certificate for A ∈ M_3 ⊗ M_k with operator Schmidt rank ≤ 3.
    Osr3 {
        state: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps_reg: f64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    /// The five values of the purity functional.
    Lemma24 {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        out: Out,
    },
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected m,n")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn finish(cert: Certificate, out: &Out) -> srcert::Result<u8> {
    print!("{}", cert.render());
    if let Some(path) = &out.out {
        cert.save(path)?;
        println!("certificate written to {}", path.display());
    }
    Ok(if cert.passed { EXIT_OK } else { EXIT_FAILED })
}

fn run(cli: Cli) -> srcert::Result<u8> {
    let tol = cli.tol;
    match cli.command {
        Command::Mub(cmd) => match cmd {
            MubCmd::Gen { prime, builtin, out } => {
                let fam = match (prime, builtin) {
                    (Some(p), _) => mub::mub_prime(p)?,
                    (None, Some(d)) => mub::builtin_family(d)?,
                    (None, None) => return Err(Error::Domain("give --prime or --builtin".into())),
                };
                match &out.out {
                    Some(path) => {
                        mub::family_save(&fam, path)?;
                        println!("{} bases of C^{} written to {}", fam.len(), fam.d, path.display());
                    }
                    None => println!("{}", sjson::to_string(&mub::FamilyJson::from_family(&fam))?),
                }
                Ok(EXIT_OK)
            }
            MubCmd::Verify { family, out } => {
                let fam = mub::family_load(&family)?;
                let record = mub::family_verify(&fam, tol.unwrap_or(mub::MUB_TOL));
                let inputs = Inputs::new(json!({})).with_file("family", &family)?;
                let payload = Payload::MubVerify { d: fam.d, bases: fam.len(), record };
                finish(Certificate::issue(inputs, payload, tol.unwrap_or(mub::MUB_TOL))?, &out)
            }
            MubCmd::Bound { m, n, t, field, family, out } => {
                let tol = tol.unwrap_or(1e-8);
                let (inputs, payload) = match family {
                    Some(path) => {
                        let fam = mub::family_load(&path)?;
                        if let Some(t) = t {
                            if t != fam.len() {
                                return Err(Error::Domain(format!("--t {t} but the family has {} bases", fam.len())));
                            }
                        }
                        let report = mub::check_bound(&fam, BipartiteShape::new(m, n)?, field, tol)?;
                        let inputs = Inputs::new(json!({"m": m, "n": n, "field": field.to_string()}))
                            .with_file("family", &path)?;
                        (inputs, Payload::MubFamilyBound { report })
                    }
                    None => {
                        let t = t.ok_or_else(|| Error::Domain("--t is required without --family".into()))?;
                        let bound = mub::theorem_bound(m, n, t, field)?;
                        println!("{bound}");
                        let inputs = Inputs::new(json!({"m": m, "n": n, "t": t, "field": field.to_string()}));
                        (inputs, Payload::MubBound { m, n, t, field, bound })
                    }
                };
                finish(Certificate::issue(inputs, payload, tol)?, &out)
            }
            MubCmd::Corollary { k, m, field, out } => {
                let bound = mub::corollary_max_bases(k, m, field)?;
                let integer_bound = bound.floor().to_integer();
                println!("{bound}");
                let inputs = Inputs::new(json!({"k": k, "m": m, "field": field.to_string()}));
                let payload = Payload::MubCorollary { k, m, field, bound, integer_bound };
                finish(Certificate::issue(inputs, payload, tol.unwrap_or(0.0))?, &out)
            }
            MubCmd::Conserve { family, shape, out } => {
                let tol = tol.unwrap_or(1e-8);
                let fam = mub::family_load(&family)?;
                let report = mub::conservation_check(&fam, BipartiteShape::new(shape.0, shape.1)?, tol)?;
                let inputs =
                    Inputs::new(json!({"m": shape.0, "n": shape.1})).with_file("family", &family)?;
                finish(Certificate::issue(inputs, Payload::MubConservation { report }, tol)?, &out)
            }
        },
        Command::Ppt(cmd) => match cmd {
            PptCmd::Mix { gamma, eps, regime, out } => {
                let tol = tol.unwrap_or(1e-8);
                let g = sjson::load_operator(&gamma)?;
                let result = ppt::theorem36_mixture(&g, eps, regime)?;
                let inputs = Inputs::new(json!({"eps": eps, "regime": regime.to_string()})).with_file("gamma", &gamma)?;
                finish(Certificate::issue(inputs, Payload::PptMixture { result }, tol)?, &out)
            }
            PptCmd::Check { state, out } => {
                let tol = tol.unwrap_or(PSD_TOL);
                let b = sjson::load_operator(&state)?;
                let certificate = ppt::ppt_check(&b, tol)?;
                let inputs = Inputs::new(json!({})).with_file("state", &state)?;
                finish(Certificate::issue(inputs, Payload::PptCheck { certificate }, tol)?, &out)
            }
            PptCmd::Sic { dim, fiducial, out } => {
                let sic = match &fiducial {
                    Some(p) => ppt::sic_load_file(p)?,
                    None => ppt::sic_load(dim)?,
                };
                if sic.k != dim {
                    return Err(Error::Shape(format!("fiducial has dimension {}, expected {dim}", sic.k)));
                }
                let inputs = Inputs::new(json!({"dim": dim}));
                finish(Certificate::issue(inputs, Payload::Sic { sic }, tol.unwrap_or(ppt::SIC_TOL))?, &out)
            }
        },
        Command::Sep(SepCmd::Osr3 { state, eps_reg, out }) => {
            let tol = tol.unwrap_or(1e-8);
            let a = sjson::load_operator(&state)?;
            let (certificate, _) = osr3::theorem42_separate(&a, eps_reg, tol)?;
            let inputs = Inputs::new(json!({"eps_reg": eps_reg})).with_file("state", &state)?;
            finish(Certificate::issue(inputs, Payload::Separability { certificate }, tol)?, &out)
        }
        Command::Suite(SuiteCmd::Lemma24 { m, n, seed, trials, out }) => {
            let tol = tol.unwrap_or(1e-9);
            let report = mub::lemma24_seeded(m, n, trials, seed, tol)?;
            let inputs = Inputs::new(json!({"m": m, "n": n, "seed": seed, "trials": trials}));
            finish(Certificate::issue(inputs, Payload::IdentitySuite { seed, report }, tol)?, &out)
        }
        Command::Verify { cert: path } => {
            let c = Certificate::load(&path)?;
            let base = path.parent().map(Path::to_path_buf);
            let outcome = cert::verify(&c, base.as_deref())?;
            for e in &outcome.checks {
                let mark = if e.passed { "ok  " } else { "FAIL" };
                println!("[{mark}] {}", e.check);
            }
            if let Some(name) = &outcome.first_failure {
                println!("verification FAILED: first failing check: {name}");
                return Ok(EXIT_FAILED);
            }
            if !c.passed {
                println!("verification FAILED: certificate records a failed result");
                return Ok(EXIT_FAILED);
            }
            println!("verification passed ({} checks)", outcome.checks.len());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_FAILED })
        }
    }
}
