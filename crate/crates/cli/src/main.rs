use clap::{Args, Parser, Subcommand, ValueEnum};
use rmt_core::arithmetic::{
    excised_prediction_lfun, family_from_list, ingest_zero_data, parse_d_list, twist_family, zero_histogram, ApTable,
    CurveConfig, DEFAULT_P_MAX,
};
use rmt_core::contours::{ratios_contour_so, residue_decomposition_so, NestedContourSpec, PoleSite};
use rmt_core::excised::{bin_centres, excised_density_series, mc_excised_density, DensityCurve, ExcisedConfig};
use rmt_core::haar::{EnsembleKind, Method, SamplerConfig};
use rmt_core::identities::{
    all_zero_det_check, interesting_det_relation_check, j_gamma_det, m_barnes_form, m_closed_form, m_gamma_det,
    vandermondian_sweep,
};
use rmt_core::moments::{mc_mixed_moments, mc_ratio_moment, predict_mixed_so, predict_mixed_usp};
use rmt_core::parse::{format_complex, parse_complex};
use rmt_core::{Error, C64};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "rmt", version, about = "Mixed moments, ratios and one-level densities for SO(2N), USp(2N) and elliptic-curve twists")]
struct Cli {
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Predicted vs Monte Carlo mixed moments, one row per r
    Moments(MomentsArgs),
    /// Exact determinant identities for K = 2..=kmax
    Identities(IdentitiesArgs),
    /// Finite-N ratios average by contour quadrature, pole decomposition and MC
    RatiosCheck(RatiosArgs),
    /// Excised-ensemble one-level density: MC histogram and residue series
    Excised(ExcisedArgs),
    /// One-level density prediction for quadratic twists of E11.a3
    Lfun(LfunArgs),
    /// Re-run the command stored in a manifest
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Ensemble {
    So,
    Usp,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Sampler {
    Qr,
    Tridiagonal,
    Mcmc,
}

impl Sampler {
    fn config(self, seed: u64) -> SamplerConfig {
        let m = match self {
            Sampler::Qr => Method::MatrixQR,
            Sampler::Tridiagonal => Method::Tridiagonal,
            Sampler::Mcmc => Method::JpdfMcmc,
        };
        SamplerConfig::with_method(seed, m)
    }
}

fn complex_literal(s: &str) -> Result<String, String> {
    parse_complex(s).map(|_| s.to_string()).map_err(|e| e.to_string())
}

fn cx(s: &str) -> C64 {
    parse_complex(s).expect("validated by the argument parser")
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    #[arg(long, value_enum, default_value = "so")]
    ensemble: Ensemble,
    #[arg(long)]
    n: usize,
    /// Complex exponent, `a+bi`; repeat for several rows
    #[arg(long = "r", required = true, value_parser = complex_literal, allow_hyphen_values = true)]
    r: Vec<String>,
    #[arg(long, value_parser = complex_literal, allow_hyphen_values = true)]
    phi: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tridiagonal")]
    method: Sampler,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct IdentitiesArgs {
    #[arg(long)]
    kmax: usize,
    /// Random tuples for the Vandermondian identity
    #[arg(long, default_value_t = 100)]
    tuples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RatiosArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = complex_literal, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, value_parser = complex_literal, allow_hyphen_values = true)]
    gamma: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tridiagonal")]
    method: Sampler,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExcisedArgs {
    #[arg(long)]
    n: usize,
    /// Cut on log Λ(1); e.g. −9.210340371976184 for Λ(1) > 10⁻⁴
    #[arg(long, allow_hyphen_values = true)]
    chi: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tridiagonal")]
    method: Sampler,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Curve {
    E11,
}

#[derive(Args, Debug, Serialize)]
struct LfunArgs {
    #[arg(long, value_enum, default_value = "e11")]
    curve: Curve,
    /// Largest discriminant
    #[arg(long = "X", alias = "x")]
    x: f64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0)]
    kmax: usize,
    #[arg(long, default_value_t = DEFAULT_P_MAX)]
    pmax: u64,
    #[arg(long, default_value_t = 3.0)]
    phi_max: f64,
    /// Grid points (bin centres on (0, phi-max])
    #[arg(long, default_value_t = 60)]
    grid: usize,
    /// Zero ordinates, `d,gamma` per line
    #[arg(long)]
    zeros: Option<PathBuf>,
    /// Explicit discriminants, one per line
    #[arg(long)]
    dlist: Option<PathBuf>,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Compare the regenerated outputs byte for byte with the stored ones
    #[arg(long)]
    verify: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    command: String,
    argv: Vec<String>,
    cwd: PathBuf,
    params: serde_json::Value,
    seed: Option<u64>,
    version: String,
    wall_time_s: f64,
    outputs: Vec<PathBuf>,
    results: serde_json::Value,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 4, msg: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: 4, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type Outcome = Result<Run, Failure>;

/// What a command produced: files, headline numbers, and the exit code when
/// it ran to completion.
struct Run {
    outputs: Vec<PathBuf>,
    manifest_at: Option<PathBuf>,
    seed: Option<u64>,
    results: serde_json::Value,
    code: u8,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn write_curve(path: &Path, curve: &DensityCurve) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["phi", "density"])?;
    for (p, d) in curve.phi.iter().zip(&curve.density) {
        w.write_record([fmt(*p), fmt(*d)])?;
    }
    w.flush()?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_moments(a: &MomentsArgs) -> Outcome {
    let rs: Vec<C64> = a.r.iter().map(|s| cx(s)).collect();
    let phi = cx(&a.phi);
    let kind = match a.ensemble {
        Ensemble::So => EnsembleKind::SpecialOrthogonalEven,
        Ensemble::Usp => EnsembleKind::UnitarySymplectic,
    };
    let preds = rs
        .iter()
        .map(|&r| {
            Ok(match a.ensemble {
                Ensemble::So => predict_mixed_so(a.n, r, phi)?.total,
                Ensemble::Usp => predict_mixed_usp(a.n, r, phi)?.total,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mc = mc_mixed_moments(kind, a.n, &rs, phi, a.samples, &a.method.config(a.seed))?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["r", "predicted_re", "predicted_im", "mc_re", "mc_im", "stderr_re", "stderr_im", "zscore"])?;
    let mut zs = Vec::new();
    for ((s, p), e) in a.r.iter().zip(&preds).zip(&mc) {
        let z = e.zscore(*p);
        zs.push(z);
        w.write_record([
            format_complex(cx(s)),
            fmt(p.re),
            fmt(p.im),
            fmt(e.mean.re),
            fmt(e.mean.im),
            fmt(e.stderr_re),
            fmt(e.stderr_im),
            fmt(z),
        ])?;
        println!(
            "r={:<8} predicted {:<28} mc {:<28} z={z:.2}",
            s,
            format_complex(*p),
            format_complex(e.mean)
        );
    }
    w.flush()?;
    Ok(Run {
        outputs: vec![a.out.clone()],
        manifest_at: Some(with_suffix(&a.out, ".manifest.json")),
        seed: Some(a.seed),
        results: serde_json::json!({ "zscores": zs }),
        code: 0,
    })
}

fn cmd_identities(a: &IdentitiesArgs) -> Outcome {
    if a.kmax < 2 || a.kmax > 20 {
        return Err(usage("--kmax must be in 2..=20"));
    }
    let mut report = String::new();
    let mut failed = 0;
    let mut line = |report: &mut String, k: usize, name: &str, ok: bool| {
        if !ok {
            failed += 1;
        }
        let _ = writeln!(report, "K={k:<3} {name:<40} {}", if ok { "PASS" } else { "FAIL" });
    };
    for k in 2..=a.kmax {
        let m = m_gamma_det(k)?;
        line(&mut report, k, "m_gamma_det = m_closed_form", m == m_closed_form(k)?);
        let j = j_gamma_det(k)?;
        let scaled = m.coeff.clone() * num_rational::BigRational::from_integer(((k - 1) * (k - 2) / 2).into());
        line(&mut report, k, "j_gamma_det = (K-1)(K-2)/2 m_gamma_det", j.coeff == scaled && j.power == m.power);
        line(&mut report, k, "interesting determinant relation", interesting_det_relation_check(k)?);
        line(&mut report, k, "all-zero determinant vanishes", all_zero_det_check(k)?);
        let exact = m_closed_form(k)?.to_complex();
        let rel = (m_barnes_form(k)? - exact).norm() / exact.norm();
        line(&mut report, k, &format!("Barnes G form (rel {rel:.1e})"), rel < 1e-9);
    }
    let vf = vandermondian_sweep(a.seed, a.tuples)?;
    if vf > 0 {
        failed += 1;
    }
    let _ = writeln!(
        report,
        "Vandermondian identity on {} random tuples: {}",
        a.tuples,
        if vf == 0 { "PASS".to_string() } else { format!("FAIL ({vf})") }
    );
    print!("{report}");
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        std::fs::write(out, &report)?;
        outputs.push(out.clone());
    }
    Ok(Run {
        manifest_at: a.out.as_ref().map(|o| with_suffix(o, ".manifest.json")),
        outputs,
        seed: Some(a.seed),
        results: serde_json::json!({ "failures": failed }),
        code: if failed > 0 { 1 } else { 0 },
    })
}

fn site_name(s: &PoleSite) -> &'static str {
    match s {
        PoleSite::Zero => "0",
        PoleSite::PlusAlpha => "+a",
        PoleSite::MinusAlpha => "-a",
    }
}

fn cmd_ratios(a: &RatiosArgs) -> Outcome {
    let (alpha, gamma) = (cx(&a.alpha), cx(&a.gamma));
    if a.k == 0 || a.k > 3 {
        return Err(usage("--k must be 1, 2 or 3"));
    }
    let spec = NestedContourSpec::default_for(alpha, a.k)?;
    let contour = ratios_contour_so(a.n, a.k, alpha, gamma, &spec)?;
    let terms = residue_decomposition_so(a.n, a.k, alpha, gamma, alpha.norm() / 4.0)?;
    let decomposition: C64 = terms.iter().map(|t| t.1).sum();
    let mc = mc_ratio_moment(
        EnsembleKind::SpecialOrthogonalEven,
        a.n,
        a.k as u32,
        alpha,
        gamma,
        a.samples,
        &a.method.config(a.seed),
    )?;
    let rel = (contour - decomposition).norm() / contour.norm();
    let z = mc.zscore(contour);
    let pass = rel <= 1e-8 && z <= 3.0;
    let mut report = String::new();
    let _ = writeln!(report, "contour        {}", format_complex(contour));
    let _ = writeln!(report, "decomposition  {}  (relative difference {rel:.2e})", format_complex(decomposition));
    let _ = writeln!(report, "monte carlo    {}  ± {:.2e}  (z = {z:.2})", format_complex(mc.mean), mc.stderr());
    let _ = writeln!(report, "pole assignment terms:");
    for (p, v) in &terms {
        let eps: Vec<&str> = p.epsilon.iter().map(site_name).collect();
        let _ = writeln!(report, "  ({})  {}", eps.join(","), format_complex(*v));
    }
    let _ = writeln!(report, "verdict: {}", if pass { "PASS" } else { "FAIL" });
    print!("{report}");
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        std::fs::write(out, &report)?;
        outputs.push(out.clone());
    }
    Ok(Run {
        manifest_at: a.out.as_ref().map(|o| with_suffix(o, ".manifest.json")),
        outputs,
        seed: Some(a.seed),
        results: serde_json::json!({ "relative_difference": rel, "zscore": z, "pass": pass }),
        code: if pass { 0 } else { 1 },
    })
}

fn cmd_excised(a: &ExcisedArgs) -> Outcome {
    let cfg = ExcisedConfig::with_bins(a.n, a.chi, a.bins, a.samples);
    let (mc, stats) = mc_excised_density(&cfg, &a.method.config(a.seed))?;
    let series = excised_density_series(a.n, a.chi, &cfg.phi_grid, a.kmax)?.unit_area();
    let dist = mc.sup_distance(&series);
    let (p_mc, p_series) = (with_suffix(&a.out_prefix, "_mc.csv"), with_suffix(&a.out_prefix, "_series.csv"));
    write_curve(&p_mc, &mc)?;
    write_curve(&p_series, &series)?;
    println!(
        "accepted {}/{} (rate {:.4}, floored {}), sup-norm distance {dist:.4}",
        stats.accepted, stats.total, stats.acceptance_rate, stats.floored
    );
    Ok(Run {
        outputs: vec![p_mc, p_series],
        manifest_at: Some(with_suffix(&a.out_prefix, ".manifest.json")),
        seed: Some(a.seed),
        results: serde_json::json!({
            "sup_distance": dist,
            "acceptance_rate": stats.acceptance_rate,
            "accepted": stats.accepted,
            "floored": stats.floored,
        }),
        code: 0,
    })
}

fn lambda_table(curve: &CurveConfig, p_max: u64) -> Result<ApTable, Failure> {
    let Some(dir) = std::env::var_os("RMT_CACHE_DIR") else {
        return Ok(ApTable::build(curve, p_max)?);
    };
    let w: Vec<String> = curve.weierstrass.iter().map(|v| v.to_string()).collect();
    let path = Path::new(&dir).join(format!("lambda_{}_{}.csv", w.join("_"), p_max));
    if let Ok(t) = ApTable::read_csv(&path, curve, p_max) {
        return Ok(t);
    }
    let t = ApTable::build(curve, p_max)?;
    std::fs::create_dir_all(&dir)?;
    t.write_csv(&path)?;
    Ok(t)
}

fn cmd_lfun(a: &LfunArgs) -> Outcome {
    if a.kmax > 0 && a.kappa.is_none() {
        return Err(usage("--kappa is required when --kmax > 0"));
    }
    if a.grid < 2 || !(a.phi_max > 0.0) {
        return Err(usage("need --grid ≥ 2 and --phi-max > 0"));
    }
    let curve = CurveConfig {
        kappa_e: a.kappa,
        ..match a.curve {
            Curve::E11 => CurveConfig::e11(),
        }
    };
    curve.validate()?;
    let family = match &a.dlist {
        Some(p) => family_from_list(a.x, parse_d_list(&std::fs::read_to_string(p)?)?, &curve)?,
        None => twist_family(a.x, &curve)?,
    };
    if family.is_empty() {
        return Err(usage("the family is empty"));
    }
    let table = lambda_table(&curve, a.pmax)?;
    let grid: Vec<f64> = bin_centres(a.grid).iter().map(|t| t * a.phi_max / std::f64::consts::PI).collect();
    let raw = excised_prediction_lfun(&family, &grid, &table, a.pmax, a.kappa.unwrap_or(1.0), a.kmax)?;
    let unit = raw.clone().unit_area_on(a.phi_max);
    let p_pred = with_suffix(&a.out_prefix, "_prediction.csv");
    let mut w = csv::Writer::from_path(&p_pred)?;
    w.write_record(["phi", "density", "density_unit_area"])?;
    for i in 0..grid.len() {
        w.write_record([fmt(grid[i]), fmt(raw.density[i]), fmt(unit.density[i])])?;
    }
    w.flush()?;
    let mut outputs = vec![p_pred];
    let mut results = serde_json::json!({ "family_size": family.len() });
    if let Some(zp) = &a.zeros {
        let ds = ingest_zero_data(zp)?;
        let outside = ds.records.iter().filter(|(d, _)| !family.d_list.contains(&(*d as u64))).count();
        let hist = zero_histogram(&ds, a.grid, a.phi_max)?;
        let dist = hist.sup_distance(&unit);
        let p_hist = with_suffix(&a.out_prefix, "_zeros.csv");
        write_curve(&p_hist, &hist)?;
        outputs.push(p_hist);
        println!("{} zeros ({outside} from d outside the family), sup-norm distance {dist:.4}", ds.records.len());
        results["zero_records"] = ds.records.len().into();
        results["records_outside_family"] = outside.into();
        results["sup_distance"] = dist.into();
    }
    println!("family of {} twists, {} grid points", family.len(), grid.len());
    Ok(Run {
        outputs,
        manifest_at: Some(with_suffix(&a.out_prefix, ".manifest.json")),
        seed: None,
        results,
        code: 0,
    })
}

fn execute(cli: &Cli, argv: &[String]) -> Result<u8, Failure> {
    let start = Instant::now();
    let (name, run) = match &cli.cmd {
        Command::Moments(a) => ("moments", cmd_moments(a)?),
        Command::Identities(a) => ("identities", cmd_identities(a)?),
        Command::RatiosCheck(a) => ("ratios-check", cmd_ratios(a)?),
        Command::Excised(a) => ("excised", cmd_excised(a)?),
        Command::Lfun(a) => ("lfun", cmd_lfun(a)?),
        Command::Replay(a) => return replay(a),
    };
    if let Some(path) = &run.manifest_at {
        let params = serde_json::to_value(&cli.cmd).map_err(|e| Failure { code: 4, msg: e.to_string() })?;
        let m = Manifest {
            command: name.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            params,
            seed: run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs: run.outputs.clone(),
            results: run.results,
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Failure { code: 4, msg: e.to_string() })?;
        std::fs::write(path, text)?;
    }
    Ok(run.code)
}

fn replay(a: &ReplayArgs) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&a.manifest)?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Failure {
        code: 4,
        msg: format!("manifest: {e}"),
    })?;
    std::env::set_current_dir(&m.cwd)?;
    let before: Vec<Option<Vec<u8>>> = m.outputs.iter().map(|p| std::fs::read(p).ok()).collect();
    let cli = Cli::try_parse_from(std::iter::once("rmt".to_string()).chain(m.argv.iter().cloned()))
        .map_err(|e| Failure { code: 4, msg: format!("manifest argv: {e}") })?;
    if matches!(cli.cmd, Command::Replay(_)) {
        return Err(Failure { code: 4, msg: "manifest stores a replay".into() });
    }
    let code = execute(&cli, &m.argv)?;
    if a.verify {
        for (p, old) in m.outputs.iter().zip(before) {
            let new = std::fs::read(p)?;
            if old.as_deref() != Some(new.as_slice()) {
                eprintln!("{} differs from the stored output", p.display());
                return Ok(1);
            }
        }
        println!("replay identical ({} files)", m.outputs.len());
    }
    Ok(code)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match execute(&cli, &argv) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
