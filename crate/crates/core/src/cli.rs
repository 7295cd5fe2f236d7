//! Command-line front end. Exit codes: 0 ok, 2 validation failure,
//! 3 oracle or verdict failure, 4 budget exceeded.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytic::height_tail;
use crate::harness::{plotdata_csv, run_experiment, ExperimentConfig, SamplerMode, TheoremId, VERSION};
use crate::looptree::analyze_tree;
use crate::offspring::{build_critical_tail_law, build_head_only_law, toy_law, OffspringLaw};
use crate::oracle::{run_oracle, OracleCheck};
use crate::refdist::{cauchy1_reference, laplace_estimate, sample_cauchy1};
use crate::rng::{par_replicates, replicate_seed, rng_from_seed, try_par_replicates};
use crate::scaling::compute_constants;
use crate::stats::ks_one_sample;
use crate::tree::{
    encode_lukasiewicz, luka_stats, sample_tree_approx_zn, sample_tree_exact_n, sample_tree_tail, PlaneTree,
    TailStrategy, TreeDraw,
};
use crate::walk::{build_z_n, sample_walk};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "bgwlab", version, about = "Critical Galton-Watson trees with Cauchy-type offspring tails")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or audit offspring laws.
    #[command(subcommand)]
    Law(LawCmd),
    /// Scaling constants a_n, b_n, ell*(a_n), Lambda(n) as JSON.
    Constants {
        #[arg(long)]
        law: PathBuf,
        #[arg(long, value_parser = parse_count)]
        n: u64,
    },
    /// Draw walks or trees.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Looptree analysis of sampled trees.
    #[command(subcommand)]
    Loop(LoopCmd),
    /// Deterministic generating-function computations.
    #[command(subcommand)]
    Analytic(AnalyticCmd),
    /// Run a theorem-level experiment and write its report.
    Verify(VerifyArgs),
    /// Exact identity checks on a finite-support law (toy law by default).
    Oracle {
        #[arg(long, value_parser = parse_check)]
        check: OracleCheck,
        #[arg(long, value_parser = parse_count)]
        nmax: u64,
        #[arg(long)]
        law: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Reference distribution checks.
    #[command(subcommand)]
    Refdist(RefdistCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    /// mu(k) = c / (k^2 ln^2 k) for k >= kmin, criticality solved on mu(0), mu(2).
    Log2,
    /// Finite support given by --head.
    Head,
    /// The four-point law (0.5, 0.1, 0.3, 0.1).
    Toy,
}

#[derive(Debug, Subcommand)]
pub enum LawCmd {
    Build {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        kmin: Option<u64>,
        /// Comma-separated probabilities mu(0), mu(1), ...
        #[arg(long, value_delimiter = ',')]
        head: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints mass and mean deviations.
    Audit {
        #[arg(long)]
        law: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Emit {
    Stats,
    Path,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WalkProcess {
    /// Unconditioned walk.
    Free,
    /// Vervaat transform of a bridge to -1.
    Zn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeMode {
    ExactN,
    ApproxZn,
    TailRejection,
    TailVecz,
}

impl From<TreeMode> for SamplerMode {
    fn from(m: TreeMode) -> Self {
        match m {
            TreeMode::ExactN => SamplerMode::ExactN,
            TreeMode::ApproxZn => SamplerMode::ApproxZn,
            TreeMode::TailRejection => SamplerMode::TailRejection,
            TreeMode::TailVecz => SamplerMode::TailVecz,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SampleCmd {
    Walk {
        #[arg(long)]
        law: PathBuf,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "stats")]
        emit: Emit,
        #[arg(long, value_enum, default_value = "free")]
        process: WalkProcess,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One NDJSON record per replicate.
    Tree {
        #[arg(long)]
        law: PathBuf,
        #[arg(long, value_enum)]
        mode: TreeMode,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long, value_parser = parse_count)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Step budget per replicate, in units of n.
        #[arg(long, default_value_t = 1000.0)]
        budget_factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LoopCmd {
    /// Regenerates each tree of a `sample tree` file from its seed and writes
    /// its circle-proximity row.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        law: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCmd {
    /// Q[n] = P(height >= n) for n = 0..=nmax as CSV (n, Q, nQ).
    HeightTail {
        #[arg(long)]
        law: PathBuf,
        #[arg(long, value_parser = parse_count)]
        nmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RefdistCmd {
    /// Laplace-transform check of the C1 sampler and KS against the frozen table.
    Selftest {
        #[arg(long, value_parser = parse_count, default_value = "1000000")]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_theorem)]
    pub theorem: Option<TheoremId>,
    #[arg(long)]
    pub law: Option<PathBuf>,
    /// Grid of sizes, comma-separated; scientific notation accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub n: Vec<u64>,
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<TreeMode>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_kv)]
    pub tolerances: Vec<(String, f64)>,
    /// Parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    /// Full experiment config as JSON; other flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes tidy plot data next to the report (`<out>.plot.csv`).
    #[arg(long)]
    pub emit_plotdata: bool,
    /// Plot data path, overriding the default next to the report.
    #[arg(long)]
    pub plotdata_out: Option<PathBuf>,
}

/// Integer count, accepting scientific notation such as `1e6`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)) {
        return Err(format!("not a nonnegative integer: {s:?}"));
    }
    Ok(v as u64)
}

fn parse_theorem(s: &str) -> std::result::Result<TheoremId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_check(s: &str) -> std::result::Result<OracleCheck, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad value in {s:?}"))?;
    Ok((k.to_string(), v))
}

fn log(msg: &str) {
    eprintln!("bgwlab {VERSION}: {msg}");
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_law(path: &Path) -> Result<OffspringLaw> {
    let law = OffspringLaw::load(path)?;
    log(&format!("law {} hash {}", path.display(), law.hash()));
    Ok(law)
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `argv` and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bgwlab: error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let threads = cli.threads;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            if t == 0 {
                return Err(Error::Domain("--threads must be >= 1".into()));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::Domain(e.to_string()))?
    };
    pool.install(|| dispatch(cli.command))
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Law(c) => law_cmd(c),
        Command::Constants { law, n } => {
            let law = load_law(&law)?;
            let k = compute_constants(&law.steps(), n)?;
            let mut v = serde_json::to_value(&k)?;
            v["tool_version"] = VERSION.into();
            v["law_hash"] = law.hash().into();
            write_out(None, &json_line(&v))?;
            Ok(0)
        }
        Command::Sample(c) => sample_cmd(c),
        Command::Loop(LoopCmd::Analyze { input, law, out }) => loop_analyze(&input, &law, out.as_deref()),
        Command::Analytic(AnalyticCmd::HeightTail { law, nmax, out }) => {
            let law = load_law(&law)?;
            let table = height_tail(&law, nmax as usize);
            write_out(out.as_deref(), &table.to_csv())?;
            Ok(0)
        }
        Command::Verify(a) => verify(a),
        Command::Oracle { check, nmax, law, seed } => {
            let law = match law {
                Some(p) => load_law(&p)?,
                None => toy_law(),
            };
            log(&format!("oracle {check} law hash {} seed {seed}", law.hash()));
            let o = run_oracle(check, &law, nmax as usize, seed)?;
            let mut v = serde_json::to_value(&o)?;
            v["tool_version"] = VERSION.into();
            v["law_hash"] = law.hash().into();
            write_out(None, &json_line(&v))?;
            Ok(if o.pass { 0 } else { 3 })
        }
        Command::Refdist(RefdistCmd::Selftest { n, seed }) => refdist_selftest(n, seed),
    }
}

fn law_cmd(c: LawCmd) -> Result<i32> {
    match c {
        LawCmd::Build { family, c, kmin, head, out } => {
            let law = match family {
                Family::Log2 => {
                    let c = c.ok_or_else(|| Error::Domain("--c is required for family log2".into()))?;
                    build_critical_tail_law(c, kmin.unwrap_or(3))?
                }
                Family::Head => {
                    if head.is_empty() {
                        return Err(Error::Domain("--head is required for family head".into()));
                    }
                    build_head_only_law(&head)?
                }
                Family::Toy => toy_law(),
            };
            log(&format!("built law hash {}", law.hash()));
            match out {
                Some(p) => law.save(&p)?,
                None => write_out(None, &law.to_json())?,
            }
            Ok(0)
        }
        LawCmd::Audit { law } => {
            let law = load_law(&law)?;
            let a = law.audit();
            let ok = a.mass_deviation <= law.mean_tol() && a.mean_deviation <= law.mean_tol();
            let v = serde_json::json!({
                "tool_version": VERSION,
                "law_hash": law.hash(),
                "mass_deviation": a.mass_deviation,
                "mean_deviation": a.mean_deviation,
                "mean_tol": law.mean_tol(),
                "ok": ok,
            });
            write_out(None, &json_line(&v))?;
            Ok(if ok { 0 } else { 2 })
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeRecord {
    pub n: u64,
    /// Seed of this replicate's random stream.
    pub seed: u64,
    pub replicate: u64,
    pub mode: TreeMode,
    pub law_hash: String,
    pub tool_version: String,
    pub size: u64,
    pub deg: Vec<u64>,
    pub u_star: u64,
    pub h_star: u64,
    pub height: u64,
}

fn draw_tree(law: &OffspringLaw, mode: TreeMode, n: u64, budget_factor: f64, seed: u64) -> Result<TreeDraw> {
    let steps = law.steps();
    let budget = (budget_factor * n as f64).max(1.0) as u64;
    let mut rng = rng_from_seed(seed);
    match mode {
        TreeMode::ExactN => sample_tree_exact_n(&steps, n as usize, budget.saturating_mul(n), &mut rng),
        TreeMode::ApproxZn => sample_tree_approx_zn(&steps, n as usize, budget, &mut rng),
        TreeMode::TailRejection | TreeMode::TailVecz => {
            let k = compute_constants(&steps, n)?;
            let s = if mode == TreeMode::TailVecz { TailStrategy::VecZ } else { TailStrategy::Rejection };
            sample_tree_tail(&steps, &k, s, budget, &mut rng)
        }
    }
}

fn tree_record(law: &OffspringLaw, mode: TreeMode, n: u64, seed: u64, replicate: u64, tree: &PlaneTree) -> TreeRecord {
    let s = luka_stats(&encode_lukasiewicz(tree));
    TreeRecord {
        n,
        seed,
        replicate,
        mode,
        law_hash: law.hash(),
        tool_version: VERSION.to_string(),
        size: s.size,
        deg: s.top_degrees,
        u_star: s.u_star,
        h_star: s.h_star,
        height: s.height,
    }
}

fn sample_cmd(c: SampleCmd) -> Result<i32> {
    match c {
        SampleCmd::Walk { law, n, seed, emit, process, out } => {
            let law = load_law(&law)?;
            log(&format!("seed {seed}"));
            let mut rng = rng_from_seed(seed);
            let steps = law.steps();
            let path = match process {
                WalkProcess::Free => sample_walk(&steps, n as usize, &mut rng),
                WalkProcess::Zn => {
                    if n == 0 {
                        return Err(Error::Domain("--n must be >= 1".into()));
                    }
                    build_z_n(&steps, n as usize, &mut rng).path
                }
            };
            let text = match emit {
                Emit::Path => {
                    let mut s = String::from("w\n");
                    for w in path.sums() {
                        s.push_str(&w.to_string());
                        s.push('\n');
                    }
                    s
                }
                Emit::Stats => {
                    let m = path.markers();
                    json_line(&serde_json::json!({
                        "tool_version": VERSION,
                        "law_hash": law.hash(),
                        "seed": seed,
                        "n": n,
                        "last": path.last(),
                        "min": path.sums().iter().min(),
                        "max": path.sums().iter().max(),
                        "zeta": m.zeta,
                        "i_n": m.i_n,
                        "h_n": m.h_n,
                        "excursion": path.is_excursion(),
                    }))
                }
            };
            write_out(out.as_deref(), &text)?;
            Ok(0)
        }
        SampleCmd::Tree { law, mode, n, reps, seed, budget_factor, out } => {
            let law = load_law(&law)?;
            if n == 0 {
                return Err(Error::Domain("--n must be >= 1".into()));
            }
            log(&format!("seed {seed}"));
            let lines = try_par_replicates(seed, reps, |i, _| {
                let s = replicate_seed(seed, i);
                let d = draw_tree(&law, mode, n, budget_factor, s)?;
                Ok(json_line(&tree_record(&law, mode, n, s, i, &d.tree)))
            })?;
            write_out(out.as_deref(), &lines.concat())?;
            Ok(0)
        }
    }
}

fn loop_analyze(input: &Path, law: &Path, out: Option<&Path>) -> Result<i32> {
    let law = load_law(law)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(input)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TreeRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("{}:{}: {e}", input.display(), i + 1)))?;
        if r.law_hash != law.hash() {
            return Err(Error::Domain(format!("record {} was sampled from law {}", r.replicate, r.law_hash)));
        }
        records.push(r);
    }
    let rows = try_par_replicates(0, records.len() as u64, |i, _| {
        let r = &records[i as usize];
        // Budget factor matches the `sample tree` default.
        let d = draw_tree(&law, r.mode, r.n, 1000.0, r.seed)?;
        let again = tree_record(&law, r.mode, r.n, r.seed, r.replicate, &d.tree);
        if again.size != r.size || again.deg != r.deg {
            return Err(Error::Inconsistent(format!("replicate {} does not regenerate from its seed", r.replicate)));
        }
        let k = compute_constants(&law.steps(), r.n)?;
        let p = analyze_tree(&d.tree, &k).proximity;
        Ok(format!(
            "{},{},{:e},{:e},{:e}\n",
            r.n, r.seed, p.cycle_len_ratio, p.max_graft_radius_ratio, p.gh_upper_bound
        ))
    })?;
    let mut text = String::from("n,seed,cycle_len_ratio,max_graft_radius_ratio,gh_upper_bound\n");
    text.push_str(&rows.concat());
    write_out(out, &text)?;
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&fs::read_to_string(p)?)?,
        None => {
            let (Some(theorem), Some(law)) = (a.theorem, &a.law) else {
                return Err(Error::Domain("verify needs --theorem and --law (or --config)".into()));
            };
            let (Some(reps), Some(seed)) = (a.reps, a.seed) else {
                return Err(Error::Domain("verify needs --reps and --seed".into()));
            };
            ExperimentConfig {
                theorem,
                law: load_law(law)?.to_file(),
                n_grid: a.n.clone(),
                reps,
                seed,
                mode: SamplerMode::Auto,
                tolerances: BTreeMap::new(),
                params: BTreeMap::new(),
            }
        }
    };
    if a.config.is_some() {
        if let Some(t) = a.theorem {
            cfg.theorem = t;
        }
        if let Some(l) = &a.law {
            cfg.law = load_law(l)?.to_file();
        }
        if !a.n.is_empty() {
            cfg.n_grid = a.n.clone();
        }
        if let Some(r) = a.reps {
            cfg.reps = r;
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    cfg.tolerances.extend(a.tolerances.iter().cloned());
    cfg.params.extend(a.params.iter().cloned());
    log(&format!("verify {} seed {} threads {}", cfg.theorem, cfg.seed, rayon::current_num_threads()));
    if a.emit_plotdata && a.plotdata_out.is_none() && a.out.is_none() {
        return Err(Error::Domain("--emit-plotdata needs --out or --plotdata-out".into()));
    }
    let started = std::time::Instant::now();
    let outcome = run_experiment(&cfg)?;
    let report = &outcome.report;
    log(&format!("law hash {} wall {:.2}s", report.law_hash, started.elapsed().as_secs_f64()));
    for c in &report.checks {
        let v = c.value.map_or("missing".to_string(), |v| format!("{v:.4}"));
        eprintln!(
            "  {} {}: {} <= {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            v,
            c.threshold,
            c.tolerance
        );
    }
    write_out(a.out.as_deref(), &report.to_json())?;
    if a.emit_plotdata || a.plotdata_out.is_some() {
        let path = match (&a.plotdata_out, &a.out) {
            (Some(p), _) => p.clone(),
            (None, Some(o)) => o.with_extension("plot.csv"),
            (None, None) => unreachable!(),
        };
        fs::write(path, plotdata_csv(&outcome.plot))?;
    }
    Ok(if report.passed { 0 } else { 3 })
}

fn refdist_selftest(n: u64, seed: u64) -> Result<i32> {
    log(&format!("refdist selftest n {n} seed {seed}"));
    let sample = par_replicates(seed, n, |_, rng| sample_cauchy1(rng));
    let mut laplace = Vec::new();
    let mut ok = true;
    for lambda in [0.5f64, 1.0, 2.0] {
        let (m, se) = laplace_estimate(&sample, lambda);
        let target = (lambda * lambda.ln()).exp();
        let z = (m - target) / se;
        ok &= z.abs() <= 3.0;
        laplace.push(serde_json::json!({"lambda": lambda, "estimate": m, "se": se, "target": target, "z": z}));
    }
    let ks = ks_one_sample(&sample, |x| cauchy1_reference().cdf(x))?;
    let v = serde_json::json!({
        "tool_version": VERSION,
        "seed": seed,
        "n": n,
        "laplace": laplace,
        "ks_vs_reference": ks.statistic,
        "ks_p_value": ks.p_value,
        "pass": ok,
    });
    write_out(None, &json_line(&v))?;
    Ok(if ok { 0 } else { 3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("abc").is_err());
    }

    #[test]
    fn unknown_flags_rejected() {
        assert_eq!(main_with_args(["bgwlab", "oracle", "--check", "duality", "--nmax", "4", "--bogus"]), 2);
        assert_eq!(main_with_args(["bgwlab", "oracle", "--check", "nope", "--nmax", "4"]), 2);
    }

    #[test]
    fn oracle_exit_codes() {
        assert_eq!(main_with_args(["bgwlab", "oracle", "--check", "kemperman", "--nmax", "10"]), 0);
        assert_eq!(main_with_args(["bgwlab", "oracle", "--check", "kemperman", "--nmax", "15"]), 2);
    }

    #[test]
    fn verify_requires_core_flags() {
        assert_eq!(main_with_args(["bgwlab", "verify", "--theorem", "T1"]), 2);
    }
}
