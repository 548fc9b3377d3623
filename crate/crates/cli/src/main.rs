//! `ordlim`: certified signs, ordering probes, convexity replays and the
//! amalgam construction from the command line. Every run prints one JSON
//! document; the exit code is 0 on pass or a decided answer, 2 on failure,
//! 3 when inconclusive or nothing was found, and 1 on usage or input errors.

mod certs;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use ordlim::chaingroup::{Element, HnnElement};
use ordlim::cone::{ConeCertificate, SignEngine, SignResult, SignValue, Verdict};
use ordlim::convexity::{
    conradian_soul_evidence, deduce_containment, gamma_ball, replay_conditions, Deduction, Limits,
};
use ordlim::ito::{claim_six_factors, order_preservation_probe, verify_ito_chain, OrderedGroupHandle};
use ordlim::orderprobes::{
    density_probe, hnn_sign, minimal_positive_probe, nonisolation_witness, recheck, verify_dehornoy_props,
    verify_witness, HnnVariant, ProbeReport, ProbeVerdict, SignOracle, WitnessOutcome,
};
use ordlim::presentations::{abelian_replay, cone_generator, euclid_normalize, ConeGenId};
use ordlim::{Error, Word};

use config::{Budgets, ConfigFile, Setting};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ordlim",
    version,
    about = "Certified left orderings on chains of amalgamated cyclic groups"
)]
struct Cli {
    /// JSON config naming the group: {"chain": {"type": "constant", "k": 2, "l": 3}}.
    #[arg(long, visible_alias = "config", global = true, value_name = "PATH")]
    spec: Option<PathBuf>,
    /// Named budget, repeatable: sign=N (per sign query), steps=N (deduction steps).
    #[arg(long = "budget", global = true, value_name = "NAME=N")]
    budgets: Vec<String>,
    /// Level window; for handle configs, the iteration depth.
    #[arg(long, global = true)]
    m: Option<u32>,
    #[arg(long, global = true)]
    radius: Option<u32>,
    #[arg(long, global = true)]
    horizon: Option<u32>,
    /// HNN ordering variant.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Write the JSON document here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    TPositive,
    TNegative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Structural,
    Enumerative,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normal form of a word.
    Nf { word: String },
    /// Certified sign of a word.
    Sign {
        word: String,
        #[arg(long, value_enum, default_value = "structural")]
        engine: EngineArg,
    },
    /// Certified comparison of two words.
    Cmp { a: String, b: String },
    /// The Dehornoy inequalities and identities at window m (default 1).
    Props,
    /// No positive element below a(m,m) within the radius (defaults m=1, radius 4).
    Minimal,
    /// a(j+1,j+1) < a(j,j) for j < m (default 2).
    Density,
    /// Conjugate ordering that agrees on a finite set but differs somewhere.
    Witness {
        /// Agreement element, repeatable; defaults to the cone generators at window m.
        #[arg(long = "agree")]
        agree: Vec<String>,
        #[arg(long, default_value_t = 2)]
        alphabet_window: i32,
        #[arg(long, default_value_t = 2)]
        conj_radius: u32,
        #[arg(long, default_value_t = 2)]
        disc_radius: u32,
    },
    /// Euclidean normalization of the commuting edge x^k = y^l.
    Euclid {
        #[arg(long)]
        k: i64,
        #[arg(long)]
        l: i64,
    },
    /// Evidence that the Conradian soul of the limit ordering is trivial.
    Soul,
    /// Under-approximation of the smallest convex subgroup containing the seeds.
    Gamma { seed: Vec<String> },
    /// Derive targets inside the convex hull of seeds, or replay the conditions at window m.
    Deduce {
        #[arg(long)]
        seed: Vec<String>,
        #[arg(long)]
        target: Vec<String>,
        #[arg(long)]
        conditions: bool,
    },
    /// Sign in the HNN extension by the shift of an element w t^p.
    HnnSign {
        word: String,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        t: i64,
    },
    /// Build G_(m) from a handle family.
    ItoBuild,
    /// Build G_(m) and check the generator chain, cofinality and invariance.
    ItoVerify,
    /// Re-validate every certificate in an emitted JSON document, or one claim.
    CheckCert {
        file: Option<PathBuf>,
        #[arg(long)]
        word: Option<String>,
        /// Certificate such as "a(0,1) a(1,1)^2".
        #[arg(long)]
        cert: Option<String>,
        /// The certificate factors the inverse of the word.
        #[arg(long)]
        negative: bool,
    },
}

/// How a run ended; decides the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Outcome {
    Pass,
    Decided,
    Fail,
    Inconclusive,
    NotFound,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Pass | Outcome::Decided => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive | Outcome::NotFound => 3,
        }
    }

    fn of_report(r: &ProbeReport) -> Self {
        match r.verdict() {
            ProbeVerdict::Pass => Outcome::Pass,
            ProbeVerdict::Fail => Outcome::Fail,
            ProbeVerdict::Inconclusive => Outcome::Inconclusive,
        }
    }

    fn of_sign(v: SignValue) -> Self {
        if v == SignValue::Unknown {
            Outcome::Inconclusive
        } else {
            Outcome::Decided
        }
    }

    fn worst(self, o: Outcome) -> Outcome {
        if self.code() == 2 || o.code() == 2 {
            Outcome::Fail
        } else if self.code() == 3 {
            self
        } else if o.code() == 3 {
            o
        } else {
            self
        }
    }
}

struct Ctx {
    cli_m: Option<u32>,
    radius: Option<u32>,
    horizon: Option<u32>,
    variant: Option<VariantArg>,
    budgets: Budgets,
    setting: Option<Setting>,
}

impl Ctx {
    fn setting(&self) -> Result<&Setting, CliError> {
        self.setting
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --spec".into()))
    }

    fn sign(&self) -> u64 {
        self.budgets.get("sign")
    }

    fn limits(&self) -> Limits {
        Limits {
            steps: self.budgets.get("steps"),
            sign: self.sign(),
            horizon: self.horizon,
            ball_radius: 0,
        }
    }

    fn parse(&self, s: &str) -> Result<Word, CliError> {
        self.setting()?.parse(s)
    }

    fn element(&self, s: &str) -> Result<Element, CliError> {
        Ok(Element::new(self.parse(s)?))
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn sign_fields(element: Value, r: &SignResult) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("element".into(), element);
    m.insert("value".into(), to_value(&r.value));
    m.insert("certificate".into(), to_value(&r.certificate));
    m.insert("budget_used".into(), json!(r.budget_used));
    m
}

fn run(cli: &Cli) -> Result<(Outcome, Map<String, Value>, Value), CliError> {
    let file: Option<ConfigFile> = cli.spec.as_deref().map(config::load).transpose()?;
    let budgets = Budgets::resolve(
        file.as_ref().map(|f| &f.chain),
        &file.as_ref().map(|f| f.budgets.clone()).unwrap_or_default(),
        &cli.budgets,
    )?;
    let cli_m = cli.m.or(file.as_ref().and_then(|f| f.m));
    let setting = match &file {
        Some(f) => Some(Setting::build(&f.chain, cli_m.unwrap_or(0), budgets.get("sign"))?),
        None => None,
    };
    let ctx = Ctx {
        cli_m,
        radius: cli.radius.or(file.as_ref().and_then(|f| f.radius)),
        horizon: cli.horizon.or(file.as_ref().and_then(|f| f.horizon)),
        variant: cli.variant,
        budgets,
        setting,
    };
    let (outcome, body) = dispatch(&cli.command, &ctx)?;
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "budget_scale": ctx.budgets.scale,
        "budgets": ctx.budgets.values,
        "config": file.as_ref().map(|f| to_value(&f.chain)),
    });
    Ok((outcome, body, meta))
}

fn report_body(key: &str, r: &ProbeReport) -> (Outcome, Map<String, Value>) {
    let mut m = Map::new();
    m.insert(key.into(), to_value(r));
    (Outcome::of_report(r), m)
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<(Outcome, Map<String, Value>), CliError> {
    let sign_budget = ctx.sign();
    match cmd {
        Command::Nf { word } => {
            let s = ctx.setting()?;
            let w = ctx.parse(word)?;
            let nf = s.oracle().words().normal_form(&w)?;
            let mut m = Map::new();
            m.insert("input".into(), json!(word));
            m.insert("word".into(), to_value(&w));
            m.insert("normal_form".into(), to_value(&nf));
            if let Setting::Handles(it) = s {
                m.insert("rendered".into(), json!(it.handle.render(&nf)));
            }
            Ok((Outcome::Decided, m))
        }
        Command::Sign { word, engine } => {
            let s = ctx.setting()?;
            let e = ctx.element(word)?;
            let r = match (s, engine) {
                (Setting::Chain(c), EngineArg::Enumerative) => c.sign_with(&e, SignEngine::Enumerative, sign_budget)?,
                (_, EngineArg::Enumerative) => {
                    return Err(CliError::Usage("--engine enumerative needs a chain spec".into()))
                }
                _ => s.oracle().sign(&e, sign_budget)?,
            };
            let mut m = sign_fields(to_value(&e.word), &r);
            m.insert("input".into(), json!(word));
            Ok((Outcome::of_sign(r.value), m))
        }
        Command::Cmp { a, b } => {
            let s = ctx.setting()?;
            let (ea, eb) = (ctx.element(a)?, ctx.element(b)?);
            let c = s.oracle().compare(&ea, &eb, sign_budget)?;
            let q = ea.inverse().mul(&eb).word;
            let mut m = Map::new();
            m.insert("a".into(), to_value(&ea.word));
            m.insert("b".into(), to_value(&eb.word));
            m.insert("verdict".into(), to_value(&c.verdict));
            m.insert("quotient".into(), Value::Object(sign_fields(to_value(&q), &c.sign)));
            let outcome = if c.verdict == Verdict::Unknown {
                Outcome::Inconclusive
            } else {
                Outcome::Decided
            };
            Ok((outcome, m))
        }
        Command::Props => {
            let r = verify_dehornoy_props(ctx.setting()?.spec()?, ctx.cli_m.unwrap_or(1), sign_budget)?;
            Ok(report_body("report", &r))
        }
        Command::Minimal => {
            let r = minimal_positive_probe(
                ctx.setting()?.spec()?,
                ctx.cli_m.unwrap_or(1),
                ctx.radius.unwrap_or(4),
                sign_budget,
            )?;
            Ok(report_body("report", &r))
        }
        Command::Density => {
            let r = density_probe(ctx.setting()?.spec()?, ctx.cli_m.unwrap_or(2), sign_budget)?;
            Ok(report_body("report", &r))
        }
        Command::Witness {
            agree,
            alphabet_window,
            conj_radius,
            disc_radius,
        } => {
            let s = ctx.setting()?;
            let agreement: Vec<Element> = if agree.is_empty() {
                default_agreement(s, ctx.cli_m.unwrap_or(1))?
            } else {
                agree.iter().map(|a| ctx.element(a)).collect::<Result<_, _>>()?
            };
            let alphabet: Vec<i32> = match s {
                Setting::Handles(it) => it.handle.vertices(),
                _ => (-alphabet_window..=*alphabet_window).collect(),
            };
            let r = nonisolation_witness(
                s.oracle(),
                &alphabet,
                &agreement,
                *conj_radius,
                *disc_radius,
                sign_budget,
            )?;
            let verified = verify_witness(s.oracle(), &r, sign_budget)?;
            let outcome = match (&r.outcome, verified) {
                (WitnessOutcome::Witness { .. }, true) => Outcome::Pass,
                (WitnessOutcome::Witness { .. }, false) => Outcome::Fail,
                (WitnessOutcome::NotFound, _) => Outcome::NotFound,
            };
            let mut m = Map::new();
            m.insert("alphabet".into(), to_value(&alphabet));
            m.insert("witness".into(), to_value(&r));
            m.insert("verified".into(), json!(verified));
            Ok((outcome, m))
        }
        Command::Euclid { k, l } => {
            let trace = euclid_normalize(*k, *l)?;
            let replay = abelian_replay(&trace);
            let mut m = Map::new();
            m.insert("resolutions".into(), json!(trace.steps.len()));
            m.insert("exponent_one".into(), json!(trace.has_exponent_one()));
            m.insert("trace".into(), to_value(&trace));
            m.insert("abelian_replay".into(), to_value(&replay));
            Ok((Outcome::Pass, m))
        }
        Command::Soul => {
            let r = conradian_soul_evidence(
                ctx.setting()?.spec()?,
                ctx.radius.unwrap_or(2),
                ctx.horizon.unwrap_or(3),
                Limits::steps(ctx.budgets.get("steps")),
            )?;
            Ok(report_body("report", &r))
        }
        Command::Gamma { seed } => {
            let spec = ctx.setting()?.spec()?;
            let seeds: Vec<Element> = seed.iter().map(|s| ctx.element(s)).collect::<Result<_, _>>()?;
            if seeds.is_empty() {
                return Err(CliError::Usage("gamma needs at least one seed word".into()));
            }
            let approx = gamma_ball(spec, &seeds, ctx.radius.unwrap_or(2), ctx.limits())?;
            let outcome = if approx.truncated {
                Outcome::Inconclusive
            } else {
                Outcome::Pass
            };
            let mut m = Map::new();
            m.insert("size".into(), json!(approx.members.len()));
            m.insert("approximation".into(), to_value(&approx));
            Ok((outcome, m))
        }
        Command::Deduce {
            seed,
            target,
            conditions,
        } => {
            let spec = ctx.setting()?.spec()?;
            let limits = Limits {
                ball_radius: ctx.radius.unwrap_or(0),
                ..ctx.limits()
            };
            if *conditions {
                let r = replay_conditions(spec, ctx.cli_m.unwrap_or(1), limits)?;
                return Ok(report_body("report", &r));
            }
            let seeds: Vec<Element> = seed.iter().map(|s| ctx.element(s)).collect::<Result<_, _>>()?;
            let targets: Vec<Element> = target.iter().map(|s| ctx.element(s)).collect::<Result<_, _>>()?;
            if seeds.is_empty() || targets.is_empty() {
                return Err(CliError::Usage(
                    "deduce needs --seed and --target words, or --conditions".into(),
                ));
            }
            let d = deduce_containment(spec, &seeds, &targets, limits)?;
            let outcome = if matches!(d, Deduction::Proved { .. }) {
                Outcome::Pass
            } else {
                Outcome::Inconclusive
            };
            let mut m = Map::new();
            m.insert("deduction".into(), to_value(&d));
            Ok((outcome, m))
        }
        Command::HnnSign { word, t } => {
            let cone = ctx.setting()?.cone()?;
            let x = HnnElement {
                part: ctx.element(word)?,
                t_exp: *t,
            };
            let variant = match ctx.variant.unwrap_or(VariantArg::TPositive) {
                VariantArg::TPositive => HnnVariant::TPositive,
                VariantArg::TNegative => HnnVariant::TNegative,
            };
            let r = hnn_sign(cone, &x, variant, sign_budget)?;
            let mut m = sign_fields(to_value(&x), &r);
            m.insert("variant".into(), to_value(&variant));
            Ok((Outcome::of_sign(r.value), m))
        }
        Command::ItoBuild => {
            let Setting::Handles(it) = ctx.setting()? else {
                return Err(CliError::Usage("ito-build needs a handles config".into()));
            };
            let mut m = Map::new();
            m.insert("handle".into(), to_value(&it.handle.summary()));
            m.insert("minimal".into(), to_value(&it.minimal));
            m.insert(
                "stages".into(),
                json!(it
                    .stages
                    .iter()
                    .map(|s| s.handle().name().to_string())
                    .collect::<Vec<_>>()),
            );
            m.insert("report".into(), to_value(&it.report));
            Ok((Outcome::of_report(&it.report), m))
        }
        Command::ItoVerify => {
            let Setting::Handles(it) = ctx.setting()? else {
                return Err(CliError::Usage("ito-verify needs a handles config".into()));
            };
            let mut m = Map::new();
            m.insert("handle".into(), json!(it.handle.name()));
            let Some(last) = it.stages.last() else {
                m.insert("validation".into(), to_value(it.handle.validation()));
                return Ok((Outcome::of_report(it.handle.validation()), m));
            };
            let chain = verify_ito_chain(last, sign_budget)?;
            let preserved = order_preservation_probe(last, ctx.radius.unwrap_or(1), sign_budget)?;
            let six = claim_six_factors(last, sign_budget)?;
            m.insert("generators".into(), json!(last.generator_names()));
            m.insert("chain".into(), to_value(&chain));
            m.insert("order_preservation".into(), to_value(&preserved));
            m.insert("claim_six_factors".into(), to_value(&six));
            Ok((Outcome::of_report(&chain).worst(Outcome::of_report(&preserved)), m))
        }
        Command::CheckCert {
            file,
            word,
            cert,
            negative,
        } => check_cert(ctx, file.as_deref(), word.as_deref(), cert.as_deref(), *negative),
    }
}

fn default_agreement(s: &Setting, m: u32) -> Result<Vec<Element>, CliError> {
    Ok(match s {
        Setting::Chain(c) => (-(m as i32)..=m as i32)
            .map(|i| Ok(Element::new(cone_generator(c.spec(), ConeGenId::new(i, m)?)?)))
            .collect::<Result<_, Error>>()?,
        Setting::Tower(_) => vec![Element::new(Word::gen(0))],
        Setting::Handles(it) => it.handle.generators().iter().cloned().map(Element::new).collect(),
    })
}

/// The final handle, every stage and every factor, deduplicated.
fn all_handles(s: &Setting) -> Vec<Arc<OrderedGroupHandle>> {
    let mut out: Vec<Arc<OrderedGroupHandle>> = Vec::new();
    let mut push = |h: &Arc<OrderedGroupHandle>| {
        if !out.iter().any(|x| Arc::ptr_eq(x, h)) {
            out.push(h.clone());
        }
    };
    if let Setting::Handles(it) = s {
        push(&it.handle);
        for st in &it.stages {
            push(st.handle());
            push(st.g());
            push(st.h());
        }
    }
    out
}

fn check_cert(
    ctx: &Ctx,
    file: Option<&Path>,
    word: Option<&str>,
    cert: Option<&str>,
    negative: bool,
) -> Result<(Outcome, Map<String, Value>), CliError> {
    let s = ctx.setting()?;
    let handles = all_handles(s);
    let oracles: Vec<&dyn SignOracle> = match s {
        Setting::Handles(_) => handles.iter().map(|h| h.as_ref() as &dyn SignOracle).collect(),
        _ => vec![s.oracle()],
    };
    let findings = match (file, word, cert) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let doc: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{} is not JSON: {e}", path.display())))?;
            certs::check_document(&doc, &oracles, s.spec().ok())
        }
        (None, Some(w), Some(c)) => {
            let w = ctx.parse(w)?;
            let items: Vec<String> = c.split_whitespace().map(str::to_string).collect();
            let certificate = ConeCertificate::parse(&items)?;
            let value = if negative {
                SignValue::Negative
            } else {
                SignValue::Positive
            };
            let r = SignResult {
                value,
                certificate: Some(certificate),
                budget_used: 0,
            };
            let ok = recheck(s.oracle(), &w, &r)?;
            vec![certs::Finding {
                at: "/".into(),
                kind: "sign".into(),
                ok,
                detail: String::new(),
            }]
        }
        _ => {
            return Err(CliError::Usage(
                "check-cert takes a JSON file, or --word with --cert".into(),
            ))
        }
    };
    let failed = findings.iter().filter(|f| !f.ok).count();
    let outcome = if failed > 0 {
        Outcome::Fail
    } else if findings.is_empty() {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    let mut m = Map::new();
    m.insert("checked".into(), json!(findings.len()));
    m.insert("failed".into(), json!(failed));
    m.insert("findings".into(), to_value(&findings));
    Ok((outcome, m))
}

fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            let tmp = p.with_extension("json.tmp");
            std::fs::write(&tmp, text)?;
            std::fs::rename(&tmp, p)
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok((outcome, mut body, meta)) => {
            let command = format!("{:?}", cli.command)
                .split([' ', '{'])
                .next()
                .unwrap_or("")
                .to_string();
            body.insert("command".into(), json!(kebab(&command)));
            body.insert("outcome".into(), to_value(&outcome));
            body.insert("meta".into(), meta);
            let text = serde_json::to_string_pretty(&Value::Object(body)).expect("JSON values serialize") + "\n";
            if let Err(e) = emit(cli.json_out.as_deref(), &text) {
                eprintln!("{}", json!({ "error": format!("cannot write output: {e}") }));
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code())
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

/// `HnnSign` as `hnn-sign`.
fn kebab(name: &str) -> String {
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}
