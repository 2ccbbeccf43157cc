//! Command-line front end: curve generation, matrix assembly, exact rank,
//! conjecture verdicts and a structural self-test.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use koszul::algebra::{AlgebraError, PrimeModulus};
use koszul::curve::{CurveError, CurveFile, CurveParams, Model};
use koszul::koszul::{assemble, KoszulError, Subspace};
use koszul::report::{write_atomic, ConfigEcho, ReportJson};
use koszul::sparse::{
    rank_elimination, rank_wiedemann, read_sms, sha256_hex, write_sms, SmsSidecar, SparseError,
    AUTO_WIEDEMANN_NNZ,
};
use koszul::verify::{
    diagram_check, green, induction_replay, kernel_support_check, level_test,
    multiplication_rank_check, np_test, prym_green, prym_green_index, MethodChoice, NpOptions,
    VerdictReport, VerifyError,
};
use koszul::DEFAULT_PRIME;

#[derive(Parser)]
#[command(name = "koszul", version, about = "Exact Koszul cohomology of binary curves")]
struct Cli {
    /// Worker threads (overrides the KOSZUL_THREADS environment variable)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Canonical,
    Prym,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Canonical => Model::Canonical,
            ModelArg::Prym => Model::Prym,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubspaceArg {
    Full,
    W,
    V,
    Wcan,
}

impl From<SubspaceArg> for Subspace {
    fn from(s: SubspaceArg) -> Subspace {
        match s {
            SubspaceArg::Full => Subspace::Full,
            SubspaceArg::W => Subspace::W,
            SubspaceArg::V => Subspace::V,
            SubspaceArg::Wcan => Subspace::Wcan,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Elim,
    Wiedemann,
    Auto,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> MethodChoice {
        match m {
            MethodArg::Elim => MethodChoice::Elimination,
            MethodArg::Wiedemann => MethodChoice::Wiedemann,
            MethodArg::Auto => MethodChoice::Auto,
        }
    }
}

#[derive(Args)]
struct CurveSource {
    /// Existing curve JSON file
    #[arg(long, conflicts_with_all = ["model", "genus", "prime", "seed"])]
    curve: Option<PathBuf>,
    #[arg(long, requires = "genus")]
    model: Option<ModelArg>,
    #[arg(long)]
    genus: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_PRIME)]
    prime: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a curve and write its JSON description
    Gen {
        #[arg(long)]
        model: ModelArg,
        #[arg(long)]
        genus: usize,
        #[arg(long, default_value_t = DEFAULT_PRIME)]
        prime: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a Koszul differential as an SMS matrix (plus JSON sidecar)
    Assemble {
        #[command(flatten)]
        source: CurveSource,
        /// Syzygy index; the wedge degree is derived from it
        #[arg(long, conflicts_with = "ell")]
        np: Option<usize>,
        /// Explicit wedge degree
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        subspace: Option<SubspaceArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact rank of an SMS matrix
    Rank {
        matrix: PathBuf,
        /// Modulus; defaults to the sidecar's prime
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Wiedemann trials
        #[arg(long, default_value_t = 3)]
        retries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// End-to-end verdict: sample curves, assemble, rank, aggregate
    Verify {
        #[arg(long)]
        model: ModelArg,
        #[arg(long)]
        genus: usize,
        /// Syzygy index; defaults to the conjecture-critical index
        #[arg(long, conflicts_with = "ell")]
        np: Option<usize>,
        /// Explicit wedge degree
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        subspace: Option<SubspaceArg>,
        /// Comma-separated moduli
        #[arg(long = "prime", value_delimiter = ',', default_values_t = [DEFAULT_PRIME, 65537])]
        primes: Vec<u64>,
        /// Comma-separated seeds
        #[arg(long = "seed", value_delimiter = ',', default_values_t = [1u64])]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 3)]
        retries: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Structural property battery at small genus
    Selftest {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

// Exit codes: 1 property failure, 2 config, 3 domain validation, 4 IO,
// 5 numerical.
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn property(msg: impl fmt::Display) -> CliError {
        CliError { code: 1, msg: msg.to_string() }
    }
    fn config(msg: impl fmt::Display) -> CliError {
        CliError { code: 2, msg: msg.to_string() }
    }
    fn domain(msg: impl fmt::Display) -> CliError {
        CliError { code: 3, msg: msg.to_string() }
    }
    fn io(msg: impl fmt::Display) -> CliError {
        CliError { code: 4, msg: msg.to_string() }
    }
    fn numerical(msg: impl fmt::Display) -> CliError {
        CliError { code: 5, msg: msg.to_string() }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> CliError {
        CliError::domain(e)
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> CliError {
        CliError::domain(e)
    }
}

impl From<KoszulError> for CliError {
    fn from(e: KoszulError) -> CliError {
        match e {
            KoszulError::BadDimensions { .. } | KoszulError::OutOfRange { .. } => {
                CliError::config(e)
            }
            _ => CliError::domain(e),
        }
    }
}

impl From<SparseError> for CliError {
    fn from(e: SparseError) -> CliError {
        match e {
            SparseError::NonConvergence { .. } => CliError::numerical(e),
            SparseError::TooLarge { .. } => CliError::config(e),
            _ => CliError::io(e),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> CliError {
        match e {
            VerifyError::BadQuery(_) => CliError::config(e),
            VerifyError::Curve(c) => c.into(),
            VerifyError::Koszul(k) => k.into(),
            VerifyError::Sparse(s) => s.into(),
            VerifyError::Algebra(a) => a.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("KOSZUL_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()).map_err(CliError::from),
        None => {
            print!("{}", contents);
            Ok(())
        }
    }
}

fn load_curve(source: &CurveSource) -> Result<CurveParams<koszul::FpScalar>, CliError> {
    if let Some(path) = &source.curve {
        let text = std::fs::read_to_string(path)?;
        let file = CurveFile::from_json(&text)?;
        Ok(file.to_params()?)
    } else {
        let model: Model = source
            .model
            .ok_or_else(|| CliError::config("either --curve or --model/--genus is required"))?
            .into();
        let genus = source
            .genus
            .ok_or_else(|| CliError::config("--genus is required"))?;
        let modulus = PrimeModulus::new(source.prime)?;
        Ok(CurveParams::sample(model, genus, modulus, source.seed)?)
    }
}

fn default_subspace(model: Model) -> Subspace {
    match model {
        Model::Prym => Subspace::W,
        Model::Canonical => Subspace::Wcan,
    }
}

fn resolve_level(
    model: Model,
    genus: usize,
    np: Option<usize>,
    ell: Option<usize>,
) -> Result<usize, CliError> {
    match (np, ell) {
        (Some(_), Some(_)) => Err(CliError::config("--np and --ell are mutually exclusive")),
        (Some(p), None) => Ok(koszul::verify::np_level(model, genus, p)?),
        (None, Some(l)) => Ok(l),
        (None, None) => match model {
            Model::Prym => Ok(koszul::verify::np_level(
                model,
                genus,
                prym_green_index(genus)?,
            )?),
            Model::Canonical => Ok(genus / 2),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen { model, genus, prime, seed, out } => {
            let modulus = PrimeModulus::new(prime)?;
            let params = CurveParams::sample(model.into(), genus, modulus, seed)?;
            let json = CurveFile::from_params(&params).to_json();
            let digest = sha256_hex(json.as_bytes());
            emit(out.as_deref(), &json)?;
            eprintln!("curve sha256 {}", digest);
            Ok(())
        }
        Cmd::Assemble { source, np, ell, subspace, out } => {
            let params = load_curve(&source)?;
            let level = resolve_level(params.model, params.genus, np, ell)?;
            let subspace: Subspace = subspace
                .map(Into::into)
                .unwrap_or_else(|| default_subspace(params.model));
            let k = assemble(&params, level, &subspace)?;
            let sms = write_sms(&k.matrix);
            eprintln!(
                "rows {} cols {} nnz {}",
                k.matrix.nrows(),
                k.matrix.ncols(),
                k.matrix.nnz()
            );
            emit(out.as_deref(), &sms)?;
            if let Some(out) = &out {
                let prime = params
                    .prime
                    .unwrap_or_else(|| params.a(1, 1).modulus());
                let sidecar =
                    SmsSidecar::new(&sms, prime, k.matrix.nrows(), k.matrix.ncols());
                let mut text =
                    serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
                text.push('\n');
                write_atomic(&sidecar_path(out), text.as_bytes())?;
            }
            Ok(())
        }
        Cmd::Rank { matrix, prime, method, retries, seed, report } => {
            let text = std::fs::read_to_string(&matrix)?;
            let prime = match prime {
                Some(p) => p,
                None => read_sidecar_prime(&matrix)?,
            };
            let modulus = PrimeModulus::new(prime)?;
            let m = read_sms(&text, modulus)?;
            let use_wiedemann = match method {
                MethodArg::Elim => false,
                MethodArg::Wiedemann => true,
                MethodArg::Auto => m.nnz() >= AUTO_WIEDEMANN_NNZ,
            };
            let r = if use_wiedemann {
                rank_wiedemann(&m, modulus, retries, seed)?
            } else {
                rank_elimination(&m)
            };
            println!(
                "rank {} kernel_dim {} method {:?} certified {} elapsed_ms {}",
                r.rank,
                r.kernel_dim,
                r.method,
                r.certified,
                r.elapsed.as_millis()
            );
            for w in &r.warnings {
                eprintln!("warning: {}", w);
            }
            if let Some(path) = report {
                let mut rep = ReportJson::new(ConfigEcho {
                    subcommand: "rank".into(),
                    primes: vec![prime],
                    seeds: vec![seed],
                    method: Some(format!("{:?}", r.method)),
                    retries: Some(retries),
                    ..ConfigEcho::default()
                });
                rep.curve_digest = Some(sha256_hex(text.as_bytes()));
                rep.nrows = Some(m.nrows());
                rep.ncols = Some(m.ncols());
                rep.nnz = Some(m.nnz());
                rep.rank = Some(r.rank);
                rep.kernel_dim = Some(r.kernel_dim);
                rep.warnings = r.warnings.clone();
                rep.elapsed_ms = r.elapsed.as_millis();
                write_atomic(&path, rep.to_json().as_bytes())?;
            }
            Ok(())
        }
        Cmd::Verify {
            model,
            genus,
            np,
            ell,
            subspace,
            primes,
            seeds,
            method,
            retries,
            report,
        } => {
            let model: Model = model.into();
            let opts = NpOptions {
                subspace: subspace.map(Into::into),
                primes: primes.clone(),
                seeds: seeds.clone(),
                method: method.into(),
                retries,
                wiedemann_trials: retries.max(1),
            };
            let verdict: VerdictReport = match (np, ell, model) {
                (Some(p), None, _) => np_test(model, genus, p, &opts)?,
                (None, Some(l), _) => level_test(model, genus, l, &opts)?,
                (Some(_), Some(_), _) => {
                    return Err(CliError::config("--np and --ell are mutually exclusive"))
                }
                (None, None, Model::Prym) => prym_green(genus, &opts)?,
                (None, None, Model::Canonical) => green(genus, &opts)?,
            };
            print_verdict(&verdict);
            if let Some(path) = report {
                let config = ConfigEcho {
                    subcommand: "verify".into(),
                    model: Some(model),
                    genus: Some(genus),
                    np: verdict.syzygy_index,
                    ell: Some(verdict.level),
                    subspace: Some(verdict.subspace.clone()),
                    primes,
                    seeds,
                    method: Some(format!("{:?}", MethodChoice::from(method))),
                    retries: Some(retries),
                    threads: cli.threads,
                };
                let rep = ReportJson::from_verdict(config, &verdict);
                write_atomic(&path, rep.to_json().as_bytes())?;
            }
            // completion is success regardless of the verdict
            Ok(())
        }
        Cmd::Selftest { report } => selftest(report.as_deref(), cli.threads),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.json", out.display()))
}

fn read_sidecar_prime(matrix: &Path) -> Result<u64, CliError> {
    let path = sidecar_path(matrix);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::config(format!(
            "no --prime given and sidecar {} unreadable: {}",
            path.display(),
            e
        ))
    })?;
    let sidecar: SmsSidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::io(format!("bad sidecar {}: {}", path.display(), e)))?;
    Ok(sidecar.prime)
}

fn print_verdict(v: &VerdictReport) {
    let name = match v.syzygy_index {
        Some(p) => format!("N_{}", p),
        None => format!("injectivity at wedge degree {}", v.level),
    };
    if v.holds {
        println!(
            "{} HOLDS (generic witness): {:?} genus {} on {}, {} x {}, kernel_dim 0",
            name, v.model, v.genus, v.subspace, v.nrows, v.ncols
        );
    } else {
        println!(
            "{} fails: kernel_dim = {} across seeds/primes ({:?} genus {} on {}, {} x {})",
            name, v.kernel_dim, v.model, v.genus, v.subspace, v.nrows, v.ncols
        );
    }
    for run in &v.runs {
        println!(
            "  prime {} seed {} rank {} kernel_dim {} {:?} {} ms",
            run.prime, run.seed, run.rank, run.kernel_dim, run.method, run.elapsed_ms
        );
    }
    for w in &v.warnings {
        eprintln!("warning: {}", w);
    }
}

fn selftest(report: Option<&Path>, threads: Option<usize>) -> Result<(), CliError> {
    use koszul::curve::check_node_incidence;
    use koszul::koszul::compose_check_dd_zero;

    let started = std::time::Instant::now();
    let modulus = PrimeModulus::new(DEFAULT_PRIME)?;
    let mut results: Vec<(String, bool)> = Vec::new();
    let mut check = |name: String, ok: bool| {
        println!("{} {}", if ok { "PASS" } else { "FAIL" }, name);
        results.push((name, ok));
    };

    for seed in [1u64, 2] {
        for g in 5..=8usize {
            let p = CurveParams::sample(Model::Prym, g, modulus, seed)?;
            let ok = check_node_incidence(&p.prym_t_basis()?, &p.node_table()).is_ok();
            check(format!("node incidence prym g={} seed={}", g, seed), ok);
        }
        for g in 3..=7usize {
            let c = CurveParams::sample(Model::Canonical, g, modulus, seed)?;
            let ok = check_node_incidence(&c.canonical_h_basis()?, &c.node_table()).is_ok();
            check(format!("node incidence canonical g={} seed={}", g, seed), ok);
        }
    }

    let p6 = CurveParams::sample(Model::Prym, 6, modulus, 1)?;
    let c5 = CurveParams::sample(Model::Canonical, 5, modulus, 1)?;
    for l in 1..=2usize {
        check(format!("d.d = 0 prym g=6 l={}", l), compose_check_dd_zero(&p6, l)?);
        check(format!("d.d = 0 canonical g=5 l={}", l), compose_check_dd_zero(&c5, l)?);
    }

    for l in 2..=3usize {
        check(
            format!("kernel support prym g=6 l={}", l),
            kernel_support_check(&p6, l)?,
        );
    }
    check(
        "kernel support canonical g=5 l=2".into(),
        kernel_support_check(&c5, 2)?,
    );

    let p7 = CurveParams::sample(Model::Prym, 7, modulus, 1)?;
    for r in 1..=3usize {
        check(format!("diagram prym g=6 r={}", r), diagram_check(&p6, 3, r)?);
    }
    for r in 4..=6usize {
        check(format!("diagram prym g=7 r={}", r), diagram_check(&p7, 3, r)?);
    }
    let c6 = CurveParams::sample(Model::Canonical, 6, modulus, 1)?;
    for r in 1..=6usize {
        check(
            format!("diagram canonical g=6 r={}", r),
            diagram_check(&c6, 3, r)?,
        );
    }

    for g in 5..=8usize {
        let p = CurveParams::sample(Model::Prym, g, modulus, 1)?;
        check(
            format!("multiplication span prym g={}", g),
            multiplication_rank_check(&p)?,
        );
    }
    for g in 3..=8usize {
        let c = CurveParams::sample(Model::Canonical, g, modulus, 1)?;
        check(
            format!("multiplication span canonical g={}", g),
            multiplication_rank_check(&c)?,
        );
    }

    check("induction replay prym g=7 p=0".into(), induction_replay(&p7, 0)?.ok);
    check(
        "induction replay canonical g=6 p=1".into(),
        induction_replay(&c6, 1)?.ok,
    );

    let failures: Vec<&str> = results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n.as_str())
        .collect();
    println!(
        "selftest: {}/{} checks passed in {} ms",
        results.len() - failures.len(),
        results.len(),
        started.elapsed().as_millis()
    );
    if let Some(path) = report {
        let mut rep = ReportJson::new(ConfigEcho {
            subcommand: "selftest".into(),
            threads,
            ..ConfigEcho::default()
        });
        rep.verdict = Some(if failures.is_empty() {
            "all checks passed".into()
        } else {
            format!("{} checks failed", failures.len())
        });
        rep.warnings = failures.iter().map(|s| s.to_string()).collect();
        rep.elapsed_ms = started.elapsed().as_millis();
        write_atomic(path, rep.to_json().as_bytes())?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::property(format!(
            "{} selftest checks failed",
            failures.len()
        )))
    }
}
