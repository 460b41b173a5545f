//! Command-line harness: model construction, volume evaluation, chamber
//! reduction, growth-exponent fits, floor-bound checks, the quadratic-form
//! side, and the acceptance suite. All outputs are deterministic.

mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use movcone::dynamics;
use movcone::exact::{rational_from_str, Rational};
use movcone::hk::{self, HKDoc, HKModel};
use movcone::kappa::{self, Schedule};
use movcone::model::{build_custom, build_oguiso, ConeModel, DivisorClass, ModelDoc};
use movcone::volume;
use movcone::Error as CoreError;

use emit::{fmt_f64, quad_json, write_csv, write_json};

#[derive(Parser)]
#[command(name = "movcone", version, about = "movable-cone volume experiments")]
struct Cli {
    /// Output directory for JSON/CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Cap on data-parallel sweep threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModelSource {
    /// Product-family model of the given dimension (N >= 3).
    #[arg(long, conflicts_with = "custom")]
    oguiso: Option<u32>,
    /// Custom model JSON as emitted by `model build`.
    #[arg(long)]
    custom: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a cone model and write it as JSON.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Volume evaluation.
    Vol {
        #[command(subcommand)]
        cmd: VolCmd,
    },
    /// Reduce a class into the reference nef chamber.
    Reduce {
        #[command(flatten)]
        source: ModelSource,
        /// Class coordinates "u,v" (rationals).
        #[arg(long, allow_hyphen_values = true)]
        class: String,
    },
    /// Growth-exponent estimation.
    Kappa {
        #[command(subcommand)]
        cmd: KappaCmd,
    },
    /// Floor-decomposition bound check for a divisor expression.
    Lemma44 {
        #[command(flatten)]
        source: ModelSource,
        /// Components "p,q:coeff;p,q:coeff;..." with integer classes and
        /// nonnegative rational coefficients.
        #[arg(long)]
        expr: String,
        /// Ample class "u,v".
        #[arg(long)]
        ample: String,
    },
    /// Quadratic-form side.
    Hk {
        #[command(subcommand)]
        cmd: HkCmd,
    },
    /// Verification suites.
    Suite {
        #[command(subcommand)]
        cmd: SuiteCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    Build {
        #[command(flatten)]
        source: ModelSource,
    },
}

#[derive(Subcommand)]
enum VolCmd {
    Eval {
        #[command(flatten)]
        source: ModelSource,
        /// Class coordinates "u,v" (rationals).
        #[arg(long, allow_hyphen_values = true)]
        class: String,
    },
}

#[derive(Args, Clone)]
struct KappaCommon {
    #[command(flatten)]
    source: ModelSource,
    /// Boundary ray by name.
    #[arg(long, value_parser = ["R1", "R2"], conflicts_with = "class")]
    ray: Option<String>,
    /// Explicit rational class "u,v" for D.
    #[arg(long, allow_hyphen_values = true)]
    class: Option<String>,
    /// Ample offset "u,v"; defaults to the model's ample class.
    #[arg(long)]
    ample: Option<String>,
    /// Dyadic schedule lower exponent.
    #[arg(long, default_value_t = 5)]
    kmin: u32,
    /// Dyadic schedule upper exponent.
    #[arg(long, default_value_t = 18)]
    kmax: u32,
    /// Claimed exponent; defaults to n/2 when D is a boundary ray.
    #[arg(long)]
    claim: Option<f64>,
    /// Pass tolerance on |l_hat - claim|.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Subcommand)]
enum KappaCmd {
    /// Fit the growth exponent of vol(mD + A).
    Fit {
        #[command(flatten)]
        common: KappaCommon,
    },
    /// Compare fits across several ample offsets.
    Independence {
        #[command(flatten)]
        common: KappaCommon,
        /// Semicolon-separated ample classes, e.g. "1,1;2,3;5,1".
        #[arg(long, default_value = "1,1;2,3;5,1")]
        amples: String,
    },
    /// Compare fits across multiples of D.
    Multiples {
        #[command(flatten)]
        common: KappaCommon,
        /// Comma-separated positive multiples.
        #[arg(long, default_value = "2,3")]
        multiples: String,
    },
}

#[derive(Subcommand)]
enum HkCmd {
    /// Evaluate the quadratic form, optionally the pairing.
    Q {
        #[arg(long)]
        hk: PathBuf,
        /// Comma-separated rational coordinates.
        #[arg(long, allow_hyphen_values = true)]
        class: String,
        /// Second argument for the bilinear pairing.
        #[arg(long, allow_hyphen_values = true)]
        pair: Option<String>,
    },
    /// Fujiki-relation volume.
    Vol {
        #[arg(long)]
        hk: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        class: String,
    },
    /// Exact boundary growth polynomial of vol(mD + A).
    Kappa {
        #[arg(long)]
        hk: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        class: String,
        #[arg(long, allow_hyphen_values = true)]
        ample: String,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    /// Run all acceptance criteria and emit a manifest.
    Acceptance {
        /// Stream seed for the randomized criteria.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with the process exit code mandated for its class: 2 for
/// configuration/schema problems, 3 for mathematical precondition errors.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Parse(_) => 2,
            _ => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, msg: format!("io error: {e}") }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        // ignore failure: the global pool may already exist under tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load_model(source: &ModelSource) -> CliResult<ConeModel> {
    match (source.oguiso, &source.custom) {
        (Some(n), None) => Ok(build_oguiso(n)?),
        (None, Some(path)) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            let doc: ModelDoc = serde_json::from_str(&body)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            Ok(build_custom(&doc)?)
        }
        _ => Err(Failure::config("exactly one of --oguiso or --custom is required")),
    }
}

fn load_hk(path: &Path) -> CliResult<HKModel> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let doc: HKDoc = serde_json::from_str(&body)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Ok(HKModel::from_doc(&doc)?)
}

fn parse_class(model: &ConeModel, s: &str) -> CliResult<DivisorClass> {
    let (u, v) = parse_pair(s)?;
    Ok(DivisorClass::from_rational(u, v, model.disc))
}

fn parse_pair(s: &str) -> CliResult<(Rational, Rational)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::config(format!(
            "class {s:?} must be two comma-separated rationals"
        )));
    }
    Ok((rational_from_str(parts[0].trim())?, rational_from_str(parts[1].trim())?))
}

fn parse_vector(s: &str) -> CliResult<Vec<Rational>> {
    s.split(',')
        .map(|p| rational_from_str(p.trim()).map_err(Into::into))
        .collect()
}

fn class_strings(d: &DivisorClass) -> CliResult<[String; 2]> {
    match d {
        DivisorClass::Exact { u, v } => Ok([format!("{u}"), format!("{v}")]),
        DivisorClass::Float { u, v } => Ok([fmt_f64(*u), fmt_f64(*v)]),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Model { cmd: ModelCmd::Build { source } } => {
            let model = load_model(source)?;
            let path = emit::write_atomic(&cli.out, "model.json", model.to_json().as_bytes())?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Vol { cmd: VolCmd::Eval { source, class } } => {
            let model = load_model(source)?;
            let d = parse_class(&model, class)?;
            run_vol_eval(&cli.out, &model, &d)
        }
        Cmd::Reduce { source, class } => {
            let model = load_model(source)?;
            let d = parse_class(&model, class)?;
            let red = dynamics::reduce_to_core(&model, &d)?;
            let summary = json!({
                "model": model.id,
                "class": class_strings(&d)?,
                "word": dynamics::word_to_string(&red.word),
                "word_len": red.word.len(),
                "chamber": red.chamber,
                "reduced": class_strings(&red.reduced)?,
                "certified": red.certified,
            });
            let path = write_json(&cli.out, "reduce.json", &summary)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Kappa { cmd } => run_kappa(&cli.out, cmd),
        Cmd::Lemma44 { source, expr, ample } => {
            let model = load_model(source)?;
            run_lemma44(&cli.out, &model, expr, ample)
        }
        Cmd::Hk { cmd } => run_hk(&cli.out, cmd),
        Cmd::Suite { cmd: SuiteCmd::Acceptance { seed } } => run_suite(&cli.out, *seed),
    }
}

fn run_vol_eval(out: &Path, model: &ConeModel, d: &DivisorClass) -> CliResult<()> {
    let (vol, word_len) = volume::vol_movable_with_word(model, d)?;
    let (l1, l2) = match d {
        DivisorClass::Exact { .. } => {
            let (l1, l2) = dynamics::l_coords(model, d)?;
            (quad_json(&l1), quad_json(&l2))
        }
        DivisorClass::Float { .. } => {
            let (l1, l2) = dynamics::l_coords_f64(model, d)?;
            (json!(fmt_f64(l1)), json!(fmt_f64(l2)))
        }
    };
    let vol_json = match &vol {
        volume::Value::Exact(q) => quad_json(q),
        volume::Value::Float(x) => json!(fmt_f64(*x)),
    };
    let summary = json!({
        "model": model.id,
        "class": class_strings(d)?,
        "L1": l1,
        "L2": l2,
        "vol": vol_json,
        "word_len": word_len,
    });
    write_json(out, "vol.json", &summary)?;
    let (l1f, l2f) = dynamics::l_coords_f64(model, d)?;
    let cs = class_strings(d)?;
    let row = vec![
        model.id.clone(),
        cs[0].clone(),
        cs[1].clone(),
        fmt_f64(l1f),
        fmt_f64(l2f),
        fmt_f64(vol.to_f64()?),
        word_len.to_string(),
    ];
    let path = write_csv(
        out,
        "vol.csv",
        &["model", "u", "v", "L1", "L2", "vol", "word_len"],
        &[row],
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

struct KappaSetup {
    model: ConeModel,
    d: DivisorClass,
    d_label: String,
    a: DivisorClass,
    schedule: Schedule,
    claim: Option<f64>,
    tol: f64,
}

fn kappa_setup(common: &KappaCommon) -> CliResult<KappaSetup> {
    let model = load_model(&common.source)?;
    let (d, d_label, ray) = match (&common.ray, &common.class) {
        (Some(r), None) => {
            let d = if r == "R1" { model.r1_class() } else { model.r2_class() };
            (d, r.clone(), true)
        }
        (None, Some(c)) => (parse_class(&model, c)?, c.clone(), false),
        _ => return Err(Failure::config("exactly one of --ray or --class is required")),
    };
    let a = match &common.ample {
        Some(s) => parse_class(&model, s)?,
        None => model.ample_class(),
    };
    if common.kmin >= common.kmax || common.kmax > 40 {
        return Err(Failure::config("need kmin < kmax <= 40"));
    }
    let claim = common.claim.or_else(|| ray.then(|| model.n as f64 / 2.0));
    Ok(KappaSetup {
        model,
        d,
        d_label,
        a,
        schedule: Schedule::Dyadic { k_min: common.kmin, k_max: common.kmax },
        claim,
        tol: common.tol,
    })
}

/// L₂ folded into the fundamental period [1, λ²).
fn l2_reduced(l2: f64, lambda: f64) -> f64 {
    let p = 2.0 * lambda.ln();
    let t = l2.ln() / p;
    (p * (t - t.floor())).exp()
}

fn run_kappa(out: &Path, cmd: &KappaCmd) -> CliResult<()> {
    match cmd {
        KappaCmd::Fit { common } => {
            let s = kappa_setup(common)?;
            let series = kappa::growth_series(&s.model, &s.d, &s.a, s.schedule)?;
            let fit = kappa::fit_exponent(&series, s.claim)?;
            let lambda = s.model.lambda.to_f64()?;
            let rows: Vec<Vec<String>> = series
                .entries
                .iter()
                .map(|e| {
                    let ratio = s
                        .claim
                        .map(|c| fmt_f64(e.vol / (e.m as f64).powf(c)))
                        .unwrap_or_default();
                    vec![
                        e.m.to_string(),
                        fmt_f64(e.vol),
                        fmt_f64(e.l1),
                        fmt_f64(l2_reduced(e.l2, lambda)),
                        ratio,
                    ]
                })
                .collect();
            write_csv(
                out,
                "kappa_fit.csv",
                &["m", "vol", "L1", "L2_reduced", "ratio_to_claim"],
                &rows,
            )?;
            let band = fit.envelope.map(|(lo, hi)| hi / lo);
            let pass = match (s.claim, band) {
                (Some(c), Some(b)) => (fit.l_hat - c).abs() <= s.tol && b < 1e3,
                (Some(c), None) => (fit.l_hat - c).abs() <= s.tol,
                _ => true,
            };
            let summary = json!({
                "model": s.model.id,
                "D": s.d_label,
                "ample": class_strings(&s.a)?,
                "schedule": series.meta.descriptor,
                "l_hat": fmt_f64(fit.l_hat),
                "residual": fmt_f64(fit.residual),
                "band": band.map(fmt_f64),
                "drift": fit.drift.map(fmt_f64),
                "claim": s.claim.map(fmt_f64),
                "tol": fmt_f64(s.tol),
                "pass": pass,
                "kappa_sigma": s.claim.map(|c| json!({
                    "value": fmt_f64(c),
                    "note": kappa::KAPPA_SIGMA_NOTE,
                })),
            });
            let path = write_json(out, "kappa_fit.json", &summary)?;
            println!("wrote {}", path.display());
            if pass {
                Ok(())
            } else {
                Err(Failure { code: 3, msg: format!("fit failed: l_hat = {}", fit.l_hat) })
            }
        }
        KappaCmd::Independence { common, amples } => {
            let s = kappa_setup(common)?;
            let mut ample_classes = Vec::new();
            let mut labels = Vec::new();
            for part in amples.split(';') {
                ample_classes.push(parse_class(&s.model, part.trim())?);
                labels.push(part.trim().to_string());
            }
            let rep = kappa::independence_check(&s.model, &s.d, &ample_classes, s.schedule, s.claim)?;
            let pass = rep.max_pairwise_dev < 0.02;
            let summary = json!({
                "model": s.model.id,
                "D": s.d_label,
                "amples": labels,
                "l_hats": rep.l_hats.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>(),
                "max_pairwise_dev": fmt_f64(rep.max_pairwise_dev),
                "pass": pass,
            });
            let path = write_json(out, "kappa_independence.json", &summary)?;
            println!("wrote {}", path.display());
            if pass {
                Ok(())
            } else {
                Err(Failure { code: 3, msg: "ample-independence check failed".into() })
            }
        }
        KappaCmd::Multiples { common, multiples } => {
            let s = kappa_setup(common)?;
            let ks: Vec<u64> = multiples
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| Failure::config(format!("bad multiple {p:?}")))
                })
                .collect::<CliResult<_>>()?;
            let rep = kappa::multiple_check(&s.model, &s.d, &ks, &s.a, s.schedule, s.claim)?;
            let pass = rep.max_dev < 0.02;
            let summary = json!({
                "model": s.model.id,
                "D": s.d_label,
                "base_l_hat": fmt_f64(rep.base_l_hat),
                "per_k": rep.per_k.iter()
                    .map(|&(k, l)| json!({"k": k, "l_hat": fmt_f64(l)}))
                    .collect::<Vec<_>>(),
                "max_dev": fmt_f64(rep.max_dev),
                "pass": pass,
            });
            let path = write_json(out, "kappa_multiples.json", &summary)?;
            println!("wrote {}", path.display());
            if pass {
                Ok(())
            } else {
                Err(Failure { code: 3, msg: "multiple-invariance check failed".into() })
            }
        }
    }
}

fn run_lemma44(out: &Path, model: &ConeModel, expr: &str, ample: &str) -> CliResult<()> {
    let mut components = Vec::new();
    for part in expr.split(';') {
        let (cls, coeff) = part
            .split_once(':')
            .ok_or_else(|| Failure::config(format!("component {part:?} must be \"p,q:coeff\"")))?;
        let (p, q) = parse_pair(cls)?;
        if !p.is_integer() || !q.is_integer() {
            return Err(Failure::config(format!("component class {cls:?} must be integral")));
        }
        components.push(volume::ExprComponent {
            class: [p.to_integer(), q.to_integer()],
            coeff: rational_from_str(coeff.trim())?,
        });
    }
    let expression = volume::DivisorExpression::new(components)?;
    let (au, av) = parse_pair(ample)?;
    let report = volume::lemma44_check(model, &expression, &[au, av])?;
    let summary = json!({
        "model": model.id,
        "expr": expr,
        "ample": ample,
        "L1_sum": quad_json(&report.l1_sum),
        "L1_floor": quad_json(&report.l1_floor),
        "lower": quad_json(&report.lower),
        "upper": quad_json(&report.upper),
        "floor_in_movable": report.floor_in_movable,
        "pass": report.pass,
    });
    let path = write_json(out, "lemma44.json", &summary)?;
    println!("wrote {}", path.display());
    if report.pass {
        Ok(())
    } else {
        Err(Failure { code: 3, msg: "floor bounds violated".into() })
    }
}

fn rational_json(r: &BigRational) -> Value {
    json!({
        "exact": r.to_string(),
        "dec": fmt_f64(num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)),
    })
}

fn run_hk(out: &Path, cmd: &HkCmd) -> CliResult<()> {
    match cmd {
        HkCmd::Q { hk, class, pair } => {
            let model = load_hk(hk)?;
            let d = parse_vector(class)?;
            let q = model.q_eval(&d)?;
            let mut summary = json!({
                "q": rational_json(&q),
                "classify": model.classify(&d)?,
            });
            if let Some(p) = pair {
                let a = parse_vector(p)?;
                summary["q_pair"] = rational_json(&model.q_pair(&d, &a)?);
            }
            let path = write_json(out, "hk_q.json", &summary)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        HkCmd::Vol { hk, class } => {
            let model = load_hk(hk)?;
            let d = parse_vector(class)?;
            let vol = model.vol_hk(&d)?;
            let summary = json!({ "vol": rational_json(&vol) });
            let path = write_json(out, "hk_vol.json", &summary)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        HkCmd::Kappa { hk, class, ample } => {
            let model = load_hk(hk)?;
            let d = parse_vector(class)?;
            let a = parse_vector(ample)?;
            let growth = hk::kappa_boundary(&model, &d, &a)?;
            let summary = json!({
                "exponent": growth.exponent,
                "growth_poly": growth
                    .growth_poly
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>(),
                "note": growth.note,
            });
            let path = write_json(out, "hk_kappa.json", &summary)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

/// Acceptance payload: the criteria results plus a representative series,
/// rendered to bytes. Criterion 10 runs this twice and byte-compares.
fn acceptance_payload(seed: u64) -> CliResult<(Value, Vec<u8>, Vec<CriterionRow>)> {
    let results = movcone::acceptance::run_all(seed);
    let rows: Vec<CriterionRow> = results
        .iter()
        .map(|r| CriterionRow {
            id: r.id,
            name: r.name.to_string(),
            pass: r.pass,
            detail: r.detail.clone(),
        })
        .collect();
    let model = build_oguiso(3)?;
    let series = kappa::growth_series(
        &model,
        &model.r1_class(),
        &model.ample_class(),
        Schedule::Dyadic { k_min: 5, k_max: 14 },
    )?;
    let mut csv = String::from("m,vol,L1,L2\n");
    for e in &series.entries {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            e.m,
            fmt_f64(e.vol),
            fmt_f64(e.l1),
            fmt_f64(e.l2)
        ));
    }
    let manifest = json!({
        "seed": seed,
        "criteria": rows.iter().map(|r| json!({
            "id": r.id,
            "name": r.name,
            "pass": r.pass,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
    });
    Ok((manifest, csv.into_bytes(), rows))
}

struct CriterionRow {
    id: u32,
    name: String,
    pass: bool,
    detail: String,
}

fn run_suite(out: &Path, seed: u64) -> CliResult<()> {
    let (manifest1, csv1, rows) = acceptance_payload(seed)?;
    let (manifest2, csv2, _) = acceptance_payload(seed)?;
    let deterministic = manifest1 == manifest2 && csv1 == csv2;

    let mut all_pass = true;
    for r in &rows {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{status}] {} — {}", r.id, r.name, r.detail);
        all_pass &= r.pass;
    }
    let status = if deterministic { "PASS" } else { "FAIL" };
    println!("criterion 10 [{status}] artifact determinism — repeated runs byte-compared");
    all_pass &= deterministic;

    let mut manifest = manifest1;
    manifest["determinism"] = json!(deterministic);
    manifest["all_pass"] = json!(all_pass);
    emit::write_atomic(out, "acceptance_series.csv", &csv1)?;
    let path = write_json(out, "acceptance_manifest.json", &manifest)?;
    println!("wrote {}", path.display());
    if all_pass {
        Ok(())
    } else {
        Err(Failure { code: 3, msg: "acceptance suite failed".into() })
    }
}
