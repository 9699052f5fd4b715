//! Command-line surface for twisted Reidemeister torsion.
//!
//! Subcommands:
//!   torsion <complex.json> <rep.json> [--bases <file>] [--tol <x>] [--json]
//!   verify mv <wedge|disk-sum> [--seed <k>] [--tol <x>] [--json]
//!   verify connected-sum <M-recipe> <N-recipe> [--seed <k>] [--tol <x>] [--json]
//!   suite [--seed <k>] [--tol <x>]
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error,
//! 4 degenerate assembly, 5 verification failure.

use num_complex::Complex64;
use rtorsion::cellsys::{twist, validate_boundary};
use rtorsion::io;
use rtorsion::liealg::AdjointData;
use rtorsion::linalg::{eq_up_to_sign, Tolerance};
use rtorsion::samples;
use rtorsion::spaces::SpaceRecipe;
use rtorsion::suite::{
    self, connected_sum_scenario, solid_tori_scenario, wedge_scenario, SuiteConfig,
};
use rtorsion::torsion::{
    homology_dims, normalize_bases_via_mv, reidemeister_torsion, verify_multiplicativity,
    HomologyBasisSet, TorsionError,
};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_FAIL: u8 = 5;

fn fmt_c(z: Complex64) -> String {
    assert!(z.re.is_finite() && z.im.is_finite(), "refusing to print a non-finite value");
    format!("{:.11e}{:+.11e}i", z.re, z.im)
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        let code = match &e {
            io::IoError::Read(_) | io::IoError::Parse(_) => EXIT_PARSE,
            _ => EXIT_VALIDATION,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<TorsionError> for CliError {
    fn from(e: TorsionError) -> Self {
        let code = match &e {
            TorsionError::DegenerateAssembly { .. } => EXIT_DEGENERATE,
            _ => EXIT_VALIDATION,
        };
        CliError::new(code, e.to_string())
    }
}

#[derive(Default)]
struct Flags {
    tol: Option<f64>,
    seed: u64,
    bases: Option<PathBuf>,
    json: bool,
    positional: Vec<String>,
}

fn parse_flags(args: &[String]) -> Result<Flags, CliError> {
    let mut flags = Flags::default();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--tol" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::new(EXIT_PARSE, "--tol needs a value"))?;
                flags.tol = Some(v.parse().map_err(|_| {
                    CliError::new(EXIT_PARSE, format!("--tol: cannot parse '{v}'"))
                })?);
            }
            "--seed" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::new(EXIT_PARSE, "--seed needs a value"))?;
                flags.seed = v.parse().map_err(|_| {
                    CliError::new(EXIT_PARSE, format!("--seed: cannot parse '{v}'"))
                })?;
            }
            "--bases" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::new(EXIT_PARSE, "--bases needs a path"))?;
                flags.bases = Some(PathBuf::from(v));
            }
            "--json" => flags.json = true,
            other => flags.positional.push(other.to_string()),
        }
    }
    Ok(flags)
}

fn tolerance_of(flags: &Flags) -> Result<Tolerance, CliError> {
    match flags.tol {
        None => Ok(Tolerance::default()),
        Some(x) => Tolerance::new(x, Tolerance::default().compare_rel)
            .map_err(|e| CliError::new(EXIT_PARSE, e.to_string())),
    }
}

fn cmd_torsion(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args)?;
    let [complex_path, rep_path] = flags.positional.as_slice() else {
        return Err(CliError::new(
            EXIT_PARSE,
            "usage: rtorsion torsion <complex.json> <rep.json> [--bases <file>] [--tol <x>] [--json]",
        ));
    };
    let tol = tolerance_of(&flags)?;
    let cs = io::load_cell_system(&PathBuf::from(complex_path))?;
    let rep = io::load_representation(&PathBuf::from(rep_path), tol)?;
    let ad = AdjointData::new(&rep).map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
    let cc = twist(&cs, &rep, &ad).map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
    validate_boundary(&cc, tol).map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))?;
    let h = match &flags.bases {
        Some(path) => io::load_bases(path, &cc)?,
        None => HomologyBasisSet::empty_for(&cc),
    };
    let dims = homology_dims(&cc, tol);
    let t = reidemeister_torsion(&cc, &h, tol)?;
    if flags.json {
        println!(
            "{}",
            serde_json::json!({
                "torsion": [t.value().re, t.value().im],
                "homology_dims": dims,
                "pivot_eps": tol.pivot_eps,
                "compare_rel": tol.compare_rel,
            })
        );
    } else {
        println!("torsion = {}", fmt_c(t.value()));
        println!(
            "homology dimensions: [{}]",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        );
        println!(
            "tolerances: pivot_eps = {:e}, compare_rel = {:e}",
            tol.pivot_eps, tol.compare_rel
        );
    }
    Ok(())
}

fn cmd_verify_mv(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args)?;
    let [scenario_name] = flags.positional.as_slice() else {
        return Err(CliError::new(
            EXIT_PARSE,
            "usage: rtorsion verify mv <wedge|disk-sum> [--seed <k>] [--tol <x>] [--json]",
        ));
    };
    let tol = tolerance_of(&flags)?;
    let mut rng = samples::rng_from_seed(flags.seed);
    let scenario = match scenario_name.as_str() {
        "wedge" => wedge_scenario(tol, &mut rng),
        "disk-sum" => solid_tori_scenario(tol, &mut rng),
        other => {
            return Err(CliError::new(
                EXIT_PARSE,
                format!("unknown mv scenario '{other}' (expected wedge or disk-sum)"),
            ))
        }
    }
    .map_err(|e| CliError::new(EXIT_VALIDATION, e))?;
    let report = verify_multiplicativity(&scenario.spaces(), &scenario.bases, tol)?;
    let ratio = report.lhs / report.rhs;
    if flags.json {
        println!(
            "{}",
            serde_json::json!({
                "scenario": scenario_name,
                "seed": flags.seed,
                "lhs": [report.lhs.re, report.lhs.im],
                "rhs": [report.rhs.re, report.rhs.im],
                "ratio": [ratio.re, ratio.im],
                "corrective": [report.corrective.value().re, report.corrective.value().im],
                "pass": report.pass,
            })
        );
    } else {
        println!("scenario: mv {scenario_name} (seed {})", flags.seed);
        println!("T(X1) T(X2)          = {}", fmt_c(report.lhs));
        println!("T(X) T(Y) T(H*)      = {}", fmt_c(report.rhs));
        println!("ratio                = {}", fmt_c(ratio));
        println!("corrective term      = {}", fmt_c(report.corrective.value()));
        println!("{}", if report.pass { "PASS" } else { "FAIL" });
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::new(EXIT_FAIL, "multiplicativity identity failed"))
    }
}

/// Parses a recipe name plus as many integer parameters as follow it.
fn take_recipe(args: &[String], at: &mut usize) -> Result<SpaceRecipe, CliError> {
    let name = args
        .get(*at)
        .ok_or_else(|| CliError::new(EXIT_PARSE, "missing recipe name"))?
        .clone();
    *at += 1;
    let mut params = Vec::new();
    while let Some(next) = args.get(*at) {
        match next.parse::<i64>() {
            Ok(v) => {
                params.push(v);
                *at += 1;
            }
            Err(_) => break,
        }
    }
    SpaceRecipe::parse(&name, &params).map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))
}

fn cmd_verify_connected_sum(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args)?;
    let mut at = 0usize;
    let m_recipe = take_recipe(&flags.positional, &mut at)?;
    let n_recipe = take_recipe(&flags.positional, &mut at)?;
    if at != flags.positional.len() {
        return Err(CliError::new(EXIT_PARSE, "trailing arguments after recipes"));
    }
    if m_recipe != SpaceRecipe::SolidTorus {
        return Err(CliError::new(
            EXIT_VALIDATION,
            format!("M-recipe {m_recipe} does not carry a marked disk; use solid_torus"),
        ));
    }
    let SpaceRecipe::Lens { p, q } = n_recipe else {
        return Err(CliError::new(
            EXIT_VALIDATION,
            format!("N-recipe {n_recipe} is not supported; use lens <p> <q>"),
        ));
    };
    let tol = tolerance_of(&flags)?;
    let mut rng = samples::rng_from_seed(flags.seed);
    let scenario = connected_sum_scenario(p, q, tol, &mut rng)
        .map_err(|e| CliError::new(EXIT_VALIDATION, e))?;
    let (_, report) = normalize_bases_via_mv(&scenario.spaces(), scenario.bases.clone(), None, tol)?;
    let lhs = report.t_x.value();
    let rhs = report.t_x1.value() * report.t_x2.value() / report.t_y.value();
    let pass = report.product_identity
        && eq_up_to_sign(report.corrective_after.value(), Complex64::new(1.0, 0.0), tol);
    if flags.json {
        println!(
            "{}",
            serde_json::json!({
                "m": m_recipe.to_string(),
                "n": n_recipe.to_string(),
                "seed": flags.seed,
                "t_connected_sum": [lhs.re, lhs.im],
                "t_product": [rhs.re, rhs.im],
                "corrective_after": [report.corrective_after.value().re, report.corrective_after.value().im],
                "pass": pass,
            })
        );
    } else {
        println!(
            "scenario: connected-sum {m_recipe} # {n_recipe} (seed {})",
            flags.seed
        );
        println!("T(M # N)             = {}", fmt_c(lhs));
        println!("T(M) T(N*)           = {}", fmt_c(rhs));
        println!("ratio                = {}", fmt_c(lhs / rhs));
        println!(
            "corrective (after)   = {}",
            fmt_c(report.corrective_after.value())
        );
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::new(EXIT_FAIL, "connected-sum identity failed"))
    }
}

fn cmd_suite(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args)?;
    if !flags.positional.is_empty() {
        return Err(CliError::new(
            EXIT_PARSE,
            "usage: rtorsion suite [--seed <k>] [--tol <x>]",
        ));
    }
    let tol = tolerance_of(&flags)?;
    let report = suite::run(&SuiteConfig {
        seed: flags.seed,
        tol,
    });
    print!("{}", report.render());
    if report.all_passed() {
        Ok(())
    } else {
        let name = report.first_failing().map(|r| r.name).unwrap_or("unknown");
        Err(CliError::new(
            EXIT_FAIL,
            format!("first failing property: {name}"),
        ))
    }
}

fn dispatch(args: Vec<String>) -> Result<(), CliError> {
    let usage = "usage: rtorsion <torsion|verify|suite> ...";
    match args.first().map(String::as_str) {
        Some("torsion") => cmd_torsion(&args[1..]),
        Some("verify") => match args.get(1).map(String::as_str) {
            Some("mv") => cmd_verify_mv(&args[2..]),
            Some("connected-sum") => cmd_verify_connected_sum(&args[2..]),
            _ => Err(CliError::new(
                EXIT_PARSE,
                "usage: rtorsion verify <mv|connected-sum> ...",
            )),
        },
        Some("suite") => cmd_suite(&args[1..]),
        _ => Err(CliError::new(EXIT_PARSE, usage)),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
