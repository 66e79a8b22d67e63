use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use dta_core::betabin::{exact_grid_posterior, run_gibbs_betabin, PriorHyper};
use dta_core::diagnostics::{acf, ess, mean_sd, quantile};
use dta_core::fixtures::{simulate_uni, UniSimulation};
use dta_core::multi::{run_em_multi, run_gibbs_multi, MultiParams};
use dta_core::uni::{run_em_uni, run_gibbs_uni, UniParams};
use dta_core::{ChainOutput, EmConfig, EmTrace, GibbsConfig, Scheme, StopRule};

use crate::args::{Algo, DiagnoseArgs, ExportArgs, FitArgs, SchemeArg, SimulateArgs, StopArg};
use crate::data::{fixture, load_dataset, write_dataset, DataKind, Dataset};
use crate::error::{CliError, CliResult};

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn kind_name(kind: DataKind) -> &'static str {
    match kind {
        DataKind::Uni => "uni",
        DataKind::Multi => "multi",
        DataKind::Bin => "bin",
    }
}

fn scheme(arg: SchemeArg) -> Scheme {
    match arg {
        SchemeArg::Dta => Scheme::Dta,
        SchemeArg::Da => Scheme::Da,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))
}

fn write_record<I, S>(w: &mut csv::Writer<fs::File>, path: &Path, rec: I) -> CliResult<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(rec).map_err(|e| CliError::csv(path, e))
}

#[derive(Debug, Serialize)]
struct ParamSummary {
    name: String,
    mean: f64,
    q05: f64,
    q50: f64,
    q95: f64,
    /// Absent when the chain is too short or constant.
    ess: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ChainSummary {
    chain: u64,
    draws_file: String,
    n_draws: usize,
    rejections: u64,
    seconds: f64,
    parameters: Vec<ParamSummary>,
}

#[derive(Debug, Serialize)]
struct BinSettings {
    m1: usize,
    m2: usize,
    c: f64,
    gamma: f64,
}

#[derive(Debug, Serialize)]
struct GibbsSummary {
    model: &'static str,
    algo: &'static str,
    scheme: &'static str,
    seed: u64,
    iters: usize,
    burn_in: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    betabin: Option<BinSettings>,
    chains: Vec<ChainSummary>,
    total_seconds: f64,
}

#[derive(Debug, Serialize)]
struct Estimate {
    name: String,
    value: f64,
}

#[derive(Debug, Serialize)]
struct EmSummary {
    model: &'static str,
    algo: &'static str,
    scheme: &'static str,
    stop: &'static str,
    tol: f64,
    n_iter: usize,
    converged: bool,
    loglik: f64,
    estimates: Vec<Estimate>,
    seconds: f64,
}

fn summarize(names: &[String], draws: &[Vec<f64>]) -> Vec<ParamSummary> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = draws.iter().map(|row| row[j]).collect();
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            ParamSummary {
                name: name.clone(),
                mean: mean_sd(&col).0,
                q05: quantile(&sorted, 0.05),
                q50: quantile(&sorted, 0.5),
                q95: quantile(&sorted, 0.95),
                ess: ess(&col).ok(),
            }
        })
        .collect()
}

fn write_draws(path: &Path, out: &ChainOutput) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("iter".to_string()).chain(out.names.iter().cloned());
    write_record(&mut w, path, header)?;
    for (t, row) in out.draws.iter().enumerate() {
        let iter = out.burn_in + t + 1;
        write_record(&mut w, path, std::iter::once(iter.to_string()).chain(row.iter().map(f64::to_string)))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn uni_flat(p: &UniParams) -> Vec<f64> {
    p.beta.iter().copied().chain(std::iter::once(p.a)).collect()
}

fn uni_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("beta{j}")).chain(std::iter::once("A".to_string())).collect()
}

fn multi_flat(p: &MultiParams) -> Vec<f64> {
    let a = p.a.matrix();
    let mut out: Vec<f64> = p.beta.iter().copied().collect();
    for r in 0..a.nrows() {
        for c in r..a.ncols() {
            out.push(a[(r, c)]);
        }
    }
    out
}

fn multi_names(mp: usize, p: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=mp).map(|j| format!("beta{j}")).collect();
    for r in 1..=p {
        for c in r..=p {
            names.push(format!("A{r}{c}"));
        }
    }
    names
}

fn write_trace<P>(path: &Path, names: &[String], trace: &EmTrace<P>, flat: impl Fn(&P) -> Vec<f64>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("iteration".to_string())
        .chain(names.iter().cloned())
        .chain(["loglik".to_string(), "converged".to_string()]);
    write_record(&mut w, path, header)?;
    let last = trace.iterates.len() - 1;
    for (t, (p, ll)) in trace.iterates.iter().zip(&trace.loglik).enumerate() {
        let converged = t == last && trace.converged;
        let row = std::iter::once(t.to_string())
            .chain(flat(p).into_iter().map(|x| x.to_string()))
            .chain([ll.to_string(), converged.to_string()]);
        write_record(&mut w, path, row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn validate_fit(args: &FitArgs, data: &Dataset) -> CliResult<()> {
    if args.algo == Algo::Gibbs {
        if args.seed.is_none() {
            return Err(validation("--seed is required for Gibbs runs"));
        }
        if args.iters <= args.burnin {
            return Err(validation(format!("--iters ({}) must exceed --burnin ({})", args.iters, args.burnin)));
        }
        if args.chains == 0 {
            return Err(validation("--chains must be at least 1"));
        }
    } else if !(args.tol > 0.0) {
        return Err(validation("--tol must be positive"));
    }
    if args.algo == Algo::Em && data.kind() == DataKind::Bin {
        return Err(validation("EM is not available for Beta-Binomial data"));
    }
    if args.scheme == SchemeArg::Da && data.kind() == DataKind::Bin {
        return Err(validation("the Beta-Binomial sampler is DTA only"));
    }
    if args.safe_mode && data.kind() != DataKind::Multi {
        return Err(validation("--safe-mode applies to multivariate data only"));
    }
    if args.grid.is_some() && data.kind() != DataKind::Bin {
        return Err(validation("--grid applies to Beta-Binomial data only"));
    }
    Ok(())
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let data = match (&args.data, args.fixture) {
        (Some(path), _) => load_dataset(path, args.kind.expect("clap enforces --kind with --data"))?,
        (None, Some(f)) => fixture(f)?,
        (None, None) => return Err(validation("one of --data or --fixture is required")),
    };
    validate_fit(args, &data)?;
    let data = match data {
        Dataset::Multi(d) if args.safe_mode => Dataset::Multi(d.with_safe_mode(true)?),
        other => other,
    };
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    match args.algo {
        Algo::Em => fit_em(args, &data),
        Algo::Gibbs => fit_gibbs(args, &data),
    }
}

fn fit_em(args: &FitArgs, data: &Dataset) -> CliResult<()> {
    let stop = match args.stop {
        StopArg::Loglik => StopRule::RelativeLoglik,
        StopArg::Param => StopRule::ParamChange,
    };
    let s = scheme(args.scheme);
    let trace_path = args.out.join("trace.csv");
    let start = Instant::now();
    let (names, flat, n_iter, converged, loglik) = match data {
        Dataset::Uni(d) => {
            let cfg = EmConfig::default().with_tol(args.tol).with_max_iter(args.max_iter).with_stop(stop);
            let trace = run_em_uni(d, s, &cfg)?;
            let names = uni_names(d.m());
            write_trace(&trace_path, &names, &trace, uni_flat)?;
            (names, uni_flat(trace.last()), trace.n_iter, trace.converged, *trace.loglik.last().unwrap())
        }
        Dataset::Multi(d) => {
            let cfg = EmConfig::default().with_tol(args.tol).with_max_iter(args.max_iter).with_stop(stop);
            let trace = run_em_multi(d, s, &cfg)?;
            let names = multi_names(d.m() * d.p(), d.p());
            write_trace(&trace_path, &names, &trace, multi_flat)?;
            (names, multi_flat(trace.last()), trace.n_iter, trace.converged, *trace.loglik.last().unwrap())
        }
        Dataset::Bin(_) => unreachable!("rejected by validate_fit"),
    };
    let summary = EmSummary {
        model: kind_name(data.kind()),
        algo: "em",
        scheme: s.as_str(),
        stop: match args.stop {
            StopArg::Loglik => "loglik",
            StopArg::Param => "param",
        },
        tol: args.tol,
        n_iter,
        converged,
        loglik,
        estimates: names.into_iter().zip(flat).map(|(name, value)| Estimate { name, value }).collect(),
        seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&args.out.join("summary.json"), &summary)
}

fn run_chain(args: &FitArgs, data: &Dataset, chain: u64) -> CliResult<ChainOutput> {
    let seed = args.seed.expect("checked by validate_fit");
    let s = scheme(args.scheme);
    Ok(match data {
        Dataset::Uni(d) => run_gibbs_uni(d, s, &GibbsConfig::new(args.iters, args.burnin, seed).with_chain(chain))?,
        Dataset::Multi(d) => run_gibbs_multi(d, s, &GibbsConfig::new(args.iters, args.burnin, seed).with_chain(chain))?,
        Dataset::Bin(d) => {
            let prior = PriorHyper::new(args.c, args.gamma)?;
            let cfg = GibbsConfig::new(args.iters, args.burnin, seed).with_chain(chain);
            run_gibbs_betabin(d, &prior, args.m1, args.m2, &cfg)?
        }
    })
}

fn draws_file(chains: usize, chain: usize) -> String {
    if chains == 1 {
        "draws.csv".to_string()
    } else {
        format!("draws_chain{}.csv", chain + 1)
    }
}

fn fit_gibbs(args: &FitArgs, data: &Dataset) -> CliResult<()> {
    if let Dataset::Bin(_) = data {
        // Fail on bad hyperparameters before spawning chains.
        PriorHyper::new(args.c, args.gamma)?;
    }
    let start = Instant::now();
    let results: Vec<CliResult<(ChainOutput, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..args.chains)
            .map(|c| {
                scope.spawn(move || {
                    let t0 = Instant::now();
                    run_chain(args, data, c as u64).map(|out| (out, t0.elapsed().as_secs_f64()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let mut chains = Vec::with_capacity(args.chains);
    for (c, res) in results.into_iter().enumerate() {
        let (out, seconds) = res?;
        let file = draws_file(args.chains, c);
        write_draws(&args.out.join(&file), &out)?;
        chains.push(ChainSummary {
            chain: out.chain,
            draws_file: file,
            n_draws: out.n_draws(),
            rejections: out.rejection_counts,
            seconds,
            parameters: summarize(&out.names, &out.draws),
        });
    }
    if let (Dataset::Bin(d), Some(n)) = (data, args.grid) {
        write_grid(args, d, n)?;
    }
    let summary = GibbsSummary {
        model: kind_name(data.kind()),
        algo: "gibbs",
        scheme: scheme(args.scheme).as_str(),
        seed: args.seed.expect("checked by validate_fit"),
        iters: args.iters,
        burn_in: args.burnin,
        betabin: matches!(data, Dataset::Bin(_)).then_some(BinSettings {
            m1: args.m1,
            m2: args.m2,
            c: args.c,
            gamma: args.gamma,
        }),
        chains,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&args.out.join("summary.json"), &summary)
}

fn write_grid(args: &FitArgs, data: &dta_core::betabin::BinData, n: usize) -> CliResult<()> {
    if n < 2 || !(args.grid_hi > args.grid_lo) {
        return Err(validation("--grid needs at least 2 points and --grid-hi > --grid-lo"));
    }
    let g: Vec<f64> = (0..n).map(|t| args.grid_lo + (args.grid_hi - args.grid_lo) * t as f64 / (n - 1) as f64).collect();
    let prior = PriorHyper::new(args.c, args.gamma)?;
    let dens = exact_grid_posterior(data, &prior, &g, &g)?;
    let path = args.out.join("grid.csv");
    let mut w = csv_writer(&path)?;
    write_record(&mut w, &path, ["log_alpha", "log_beta", "density"])?;
    for (i, la) in dens.log_alpha.iter().enumerate() {
        for (j, lb) in dens.log_beta.iter().enumerate() {
            write_record(&mut w, &path, [la.to_string(), lb.to_string(), dens.density[(i, j)].to_string()])?;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}

/// Parameter names and columns of a draws file.
pub fn read_draws(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let invalid = |msg: String| validation(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| CliError::csv(path, e))?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("iter") || header.len() < 2 {
        return Err(invalid("expected header iter,<parameter names>".into()));
    }
    let names = header[1..].to_vec();
    let mut cols = vec![Vec::new(); names.len()];
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|_| invalid(format!("row {}: malformed record", r + 1)))?;
        if rec.len() != header.len() {
            return Err(invalid(format!("row {}: wrong number of fields", r + 1)));
        }
        for (j, field) in rec.iter().skip(1).enumerate() {
            let x: f64 = field
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| invalid(format!("row {}, column {}: expected a finite number", r + 1, names[j])))?;
            cols[j].push(x);
        }
    }
    Ok((names, cols))
}

#[derive(Debug, Serialize)]
struct ParamEss {
    name: String,
    ess: f64,
}

#[derive(Debug, Serialize)]
struct DiagSummary {
    draws_file: String,
    n_draws: usize,
    max_lag: usize,
    ess: Vec<ParamEss>,
}

pub fn diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    let (names, cols) = read_draws(&args.draws)?;
    let n = cols[0].len();
    if args.max_lag == 0 || n <= args.max_lag {
        return Err(validation(format!("--max-lag must be in 1..{n} for {n} draws")));
    }
    let mut rhos = Vec::with_capacity(cols.len());
    let mut ess_rows = Vec::with_capacity(cols.len());
    for (name, col) in names.iter().zip(&cols) {
        rhos.push(acf(col, args.max_lag)?.rho);
        ess_rows.push(ParamEss { name: name.clone(), ess: ess(col)? });
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let path = args.out.join("acf.csv");
    let mut w = csv_writer(&path)?;
    write_record(&mut w, &path, std::iter::once("lag".to_string()).chain(names.iter().cloned()))?;
    for lag in 0..=args.max_lag {
        write_record(&mut w, &path, std::iter::once(lag.to_string()).chain(rhos.iter().map(|r| r[lag].to_string())))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    let summary = DiagSummary {
        draws_file: args.draws.display().to_string(),
        n_draws: n,
        max_lag: args.max_lag,
        ess: ess_rows,
    };
    write_json(&args.out.join("diag.json"), &summary)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if !(args.a >= 0.0) || !(args.v_mean > 0.0) || !(args.v_sd > 0.0) || args.k == 0 {
        return Err(validation("simulate needs k >= 1, A >= 0, v_mean > 0 and v_sd > 0"));
    }
    let sim = UniSimulation { k: args.k, beta: args.beta, a: args.a, v_mean: args.v_mean, v_sd: args.v_sd };
    create_parent(&args.out)?;
    write_dataset(&args.out, &Dataset::Uni(simulate_uni(&sim, args.seed)?))
}

pub fn export(args: &ExportArgs) -> CliResult<()> {
    create_parent(&args.out)?;
    write_dataset(&args.out, &fixture(args.fixture)?)
}

fn create_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(&PathBuf::from(dir), e))
        }
        _ => Ok(()),
    }
}
