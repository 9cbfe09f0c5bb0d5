mod formats;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use graev_core::amalgam::{AmalgamSetup, Letter, ProductElem};
use graev_core::forest::{
    build_maximal_forest, check_forest, check_maximal, enumerate_maximal_forests, EvaluationForest,
};
use graev_core::fpair::{rho as pair_rho, to_reduced_pair, FPair};
use graev_core::free::{apply_match, graev_dist_free, graev_norm_free, inverse_word, reduce_word, rho, NormWitness};
use graev_core::group::{norm_table, validate_biinvariance};
use graev_core::hnn::build_hnn;
use graev_core::product::{product_norm, ProductNorm};
use graev_core::selftest::{run_criterion, CRITERIA};
use graev_core::space::{validate_space, Mode, SymmetricSpace};
use graev_core::{Error, Result};
use serde_json::{json, Value};

use formats::*;

#[derive(Parser)]
#[command(name = "graev", version, about = "Graev metrics on free groups and amalgamated products of finite groups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a pointed space, a group metric or an amalgam setup.
    Validate {
        #[arg(long, group = "input")]
        space: Option<PathBuf>,
        #[arg(long, group = "input")]
        metric: Option<PathBuf>,
        #[arg(long, group = "input")]
        setup: Option<PathBuf>,
    },
    /// Norm of a word in F(X) or in an amalgamated product.
    Norm {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        word: PathBuf,
        /// Write the minimizing match as Graphviz source.
        #[arg(long)]
        emit_dot: Option<PathBuf>,
    },
    /// Distance between two words.
    Dist {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        word: PathBuf,
        #[arg(long)]
        word2: PathBuf,
    },
    /// Maximal evaluation forest of a word that evaluates into A.
    Forest {
        #[arg(long)]
        setup: PathBuf,
        #[arg(long)]
        word: PathBuf,
        /// List every maximal forest instead of one.
        #[arg(long)]
        enumerate: bool,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
        #[arg(long)]
        emit_dot: Option<PathBuf>,
    },
    /// Run the reduction of an (α, ζ) pair, one JSON line per step.
    ReduceTrace {
        #[arg(long)]
        setup: PathBuf,
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        zeta: PathBuf,
    },
    /// Norm of a word in the HNN extension over a metric group.
    Hnn {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        k: String,
        #[arg(long, default_value = "ultrametric")]
        mode: String,
        #[arg(long)]
        word: PathBuf,
        /// Use the bounded evaluator over words of at most this length.
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 2)]
        cap: i64,
    },
    /// Run the built-in acceptance checks.
    Selftest {
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    setup: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    Rejected(Value),
    Selftest,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

static OUT: Mutex<String> = Mutex::new(String::new());

fn emit(line: &str) {
    let mut out = OUT.lock().expect("output buffer");
    out.push_str(line);
    out.push('\n');
}

fn print(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("json"));
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn validate(space: Option<PathBuf>, metric: Option<PathBuf>, setup: Option<PathBuf>) -> Outcome {
    let out = if let Some(p) = space {
        let f: SpaceFile = read_json(&p)?;
        let r = validate_space(&f.space()?);
        json!({ "kind": "space", "ok": r.is_ok(), "violations": r.violations })
    } else if let Some(p) = metric {
        let f: MetricFile = read_json(&p)?;
        let m = f.metric()?;
        let b = validate_biinvariance(&m);
        let n = norm_table(&m);
        let ok = b.is_ok() && n.report.is_ok();
        json!({ "kind": "metric", "ok": ok, "order": m.group().order(), "biinvariance": b.violations, "norm": n.report.violations })
    } else if let Some(p) = setup {
        let f: SetupFile = read_json(&p)?;
        let st = f.setup()?;
        let factors: Vec<Value> = (0..st.factor_count())
            .map(|i| {
                let b = validate_biinvariance(st.factor(i));
                json!({ "order": st.factor(i).group().order(), "biinvariance": b.violations })
            })
            .collect();
        let ok = (0..st.factor_count()).all(|i| validate_biinvariance(st.factor(i)).is_ok());
        json!({ "kind": "setup", "ok": ok, "a_order": st.a_order(), "factors": factors })
    } else {
        return Err(Error::Parse("one of --space, --metric, --setup is required".into()).into());
    };
    if out["ok"] == Value::Bool(true) {
        print(&out);
        Ok(())
    } else {
        Err(Failure::Rejected(out))
    }
}

fn free_witness_json(s: &SymmetricSpace, w: &NormWitness) -> Result<Value> {
    let names: Vec<&str> = w.word.iter().map(|&x| s.name(x)).collect();
    let arcs = w.matching.as_ref().map(|m| m.arcs()).unwrap_or_default();
    if let Some(m) = &w.matching {
        let image = apply_match(s, &w.word, m)?;
        if !reduce_word(s, &image).is_empty() || rho(s, &w.word, &image)? != w.value {
            return Err(Error::Invalid("witness match does not certify the value".into()));
        }
    }
    Ok(json!({ "value": w.value, "reduced": names, "match": arcs }))
}

fn pair_json(st: &AmalgamSetup, target: &ProductElem, n: &ProductNorm) -> Result<Value> {
    let p = &n.pair;
    if !p.is_valid(st) || st.evaluate(&p.alpha) != *target || pair_rho(st, p) != n.value {
        return Err(Error::Invalid("witness pair does not certify the value".into()));
    }
    Ok(json!({
        "value": n.value,
        "element": st.show(target),
        "alpha": st.word_label(&p.alpha),
        "zeta": st.word_label(&p.zeta),
    }))
}

fn load_free(space: &Path, word: &Path) -> Result<(SymmetricSpace, Vec<usize>)> {
    let f: SpaceFile = read_json(space)?;
    let s = f.symmetric()?;
    let names: Vec<String> = read_json(word)?;
    let w = free_word(&s, &names)?;
    Ok((s, w))
}

fn load_product(setup: &Path, word: &Path) -> Result<(AmalgamSetup, Vec<Letter>)> {
    let f: SetupFile = read_json(setup)?;
    let st = f.setup()?;
    let w: Vec<PLetter> = read_json(word)?;
    let w = product_word(&st, &w)?;
    Ok((st, w))
}

fn norm(src: Source, word: PathBuf, emit_dot: Option<PathBuf>) -> Outcome {
    if let Some(sp) = src.space {
        let (s, w) = load_free(&sp, &word)?;
        let wit = graev_norm_free(&s, &w);
        if let Some(path) = emit_dot {
            let labels: Vec<String> = wit.word.iter().map(|&x| s.name(x).to_string()).collect();
            let arcs = wit.matching.as_ref().map(|m| m.arcs()).unwrap_or_default();
            write_file(&path, &match_dot(&labels, &arcs))?;
        }
        print(&free_witness_json(&s, &wit)?);
    } else if let Some(sp) = src.setup {
        if emit_dot.is_some() {
            return Err(Error::Parse("--emit-dot applies to free words only".into()).into());
        }
        let (st, w) = load_product(&sp, &word)?;
        let f = st.evaluate(&w);
        print(&pair_json(&st, &f, &product_norm(&st, &f))?);
    }
    Ok(())
}

fn dist(src: Source, word: PathBuf, word2: PathBuf) -> Outcome {
    if let Some(sp) = src.space {
        let (s, w1) = load_free(&sp, &word)?;
        let names: Vec<String> = read_json(&word2)?;
        let w2 = free_word(&s, &names)?;
        let d = graev_dist_free(&s, &w1, &w2);
        let mut q = inverse_word(&s, &w1);
        q.extend(&w2);
        let wit = graev_norm_free(&s, &q);
        if wit.value != d {
            return Err(Error::Invalid("distance disagrees with the norm of the quotient".into()).into());
        }
        print(&json!({ "value": d, "quotient": free_witness_json(&s, &wit)? }));
    } else if let Some(sp) = src.setup {
        let (st, w1) = load_product(&sp, &word)?;
        let w2: Vec<PLetter> = read_json(&word2)?;
        let w2 = product_word(&st, &w2)?;
        let mut q: Vec<Letter> = w1.iter().rev().map(|&l| st.letter_inv(l)).collect();
        q.extend(&w2);
        let f = st.evaluate(&q);
        let n = product_norm(&st, &f);
        print(&json!({ "value": n.value, "quotient": pair_json(&st, &f, &n)? }));
    }
    Ok(())
}

fn forest_json(st: &AmalgamSetup, z: &[Letter], f: &EvaluationForest) -> Value {
    let valid = check_forest(st, z, f);
    let maximal = check_maximal(st, z, f);
    json!({
        "forest": f.to_string(),
        "intervals": f.intervals(),
        "valid": valid.is_ok(),
        "maximal": maximal.is_ok(),
        "violations": valid.violations.iter().chain(&maximal.violations).map(|v| v.to_string()).collect::<Vec<_>>(),
    })
}

fn forest(setup: PathBuf, word: PathBuf, enumerate: bool, limit: usize, emit_dot: Option<PathBuf>) -> Outcome {
    if limit == 0 {
        return Err(Error::Bound("--limit must be positive".into()).into());
    }
    let (st, z) = load_product(&setup, &word)?;
    let labels: Vec<String> = z.iter().map(|&l| st.letter_label(l)).collect();
    let forests =
        if enumerate { enumerate_maximal_forests(&st, &z, limit)? } else { vec![build_maximal_forest(&st, &z)?] };
    if let Some(path) = emit_dot {
        let dot: Vec<String> = forests.iter().map(|f| f.to_dot(Some(&labels))).collect();
        write_file(&path, &dot.concat())?;
    }
    let items: Vec<Value> = forests.iter().map(|f| forest_json(&st, &z, f)).collect();
    let out = if enumerate {
        json!({ "word": labels, "count": items.len(), "forests": items })
    } else {
        let mut v = items.into_iter().next().expect("one forest");
        v["word"] = json!(labels);
        v
    };
    print(&out);
    Ok(())
}

fn reduce_trace(setup: PathBuf, alpha: PathBuf, zeta: PathBuf) -> Outcome {
    let (st, a) = load_product(&setup, &alpha)?;
    let z: Vec<PLetter> = read_json(&zeta)?;
    let z = product_word(&st, &z)?;
    let p = FPair::new(&st, a, z)?;
    let (q, f, trace) = to_reduced_pair(&st, &p)?;
    for step in &trace {
        emit(&serde_json::to_string(step).expect("json"));
    }
    let done = json!({
        "op": "result",
        "rho": pair_rho(&st, &q),
        "alpha": st.word_label(&q.alpha),
        "zeta": st.word_label(&q.zeta),
        "forest": f.to_string(),
        "rho_before": pair_rho(&st, &p),
    });
    emit(&serde_json::to_string(&done).expect("json"));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn hnn(
    metric: PathBuf,
    phi: PathBuf,
    k: String,
    mode: String,
    word: PathBuf,
    max_len: Option<usize>,
    cap: i64,
) -> Outcome {
    if max_len == Some(0) || cap <= 0 {
        return Err(Error::Bound("--max-len and --cap must be positive".into()).into());
    }
    let m: MetricFile = read_json(&metric)?;
    let g = m.metric()?;
    let ph: PhiFile = read_json(&phi)?;
    let ph = ph.resolve(g.group())?;
    let k = parse_rational(&k)?;
    let mode = match mode.as_str() {
        "metric" => Mode::Metric,
        "ultrametric" => Mode::Ultrametric,
        other => return Err(Error::Parse(format!("unknown mode {other:?}")).into()),
    };
    let tokens: Vec<String> = read_json(&word)?;
    let w = hnn_word(g.group(), &tokens)?;
    let h = build_hnn(g, &ph.a, &ph.b, &ph.pairs, k, mode)?;
    let f = h.evaluate(&w);
    let mut out = json!({
        "normal_form": h.show(&f),
        "trivial": f.is_identity(),
        "t_length": f.t_length(),
        "v_exponent": f.v_exponent(),
    });
    match max_len {
        Some(l) => {
            out["value"] = json!(h.bounded_norm(&w, l, cap)?);
            out["exact"] = json!(false);
            out["cap_stable"] = json!(h.cap_is_stable(&w, l, cap)?);
        }
        None => {
            out["value"] = json!(h.norm(&w)?);
            out["exact"] = json!(true);
        }
    }
    print(&out);
    Ok(())
}

fn selftest(only: Vec<usize>) -> Outcome {
    let ids: Vec<usize> = if only.is_empty() { (1..=CRITERIA.len()).collect() } else { only };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
        return Err(Error::Parse(format!("no criterion {bad}")).into());
    }
    let mut ok = true;
    for id in ids {
        let r = run_criterion(id);
        emit(&r.line());
        ok &= r.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Selftest)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Validate { space, metric, setup } => validate(space, metric, setup),
        Cmd::Norm { src, word, emit_dot } => norm(src, word, emit_dot),
        Cmd::Dist { src, word, word2 } => dist(src, word, word2),
        Cmd::Forest { setup, word, enumerate, limit, emit_dot } => forest(setup, word, enumerate, limit, emit_dot),
        Cmd::ReduceTrace { setup, alpha, zeta } => reduce_trace(setup, alpha, zeta),
        Cmd::Hnn { metric, phi, k, mode, word, max_len, cap } => hnn(metric, phi, k, mode, word, max_len, cap),
        Cmd::Selftest { only } => selftest(only),
    };
    if let Err(Failure::Rejected(v)) = &res {
        print(v);
    }
    let text = std::mem::take(&mut *OUT.lock().expect("output buffer"));
    match &cli.output {
        Some(path) => {
            if let Err(e) = write_file(path, &text) {
                eprintln!("graev: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(_)) => ExitCode::from(3),
        Err(Failure::Selftest) => ExitCode::FAILURE,
        Err(Failure::Lib(e)) => {
            eprintln!("graev: {e}");
            ExitCode::from(match e {
                Error::Parse(_) => 2,
                Error::Invalid(_) => 3,
                Error::Bound(_) => 4,
            })
        }
    }
}
