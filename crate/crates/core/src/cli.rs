//! Command-line front end. Every command reads one JSON config, writes its
//! outputs into `--out`, and leaves a `.meta.json` sidecar next to each file.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad config or arguments,
//! 3 file or CSV I/O, 4 estimation did not converge. Failures print a JSON
//! report on stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bidding::{bid_curves, DEFAULT_GRID, DEFAULT_TOL};
use crate::config::*;
use crate::data::{fmt_sig, sample_dataset, summary_stats, BidDataset};
use crate::decision::{
    predictive_check, revenue_curve, summarize, write_check_csv, Band, CheckRow, DrawSource, PosteriorSummary,
};
use crate::error::{Error, Result};
use crate::harness::{revenue_loss, run_experiment, write_metrics_csv, Scale};
use crate::identification::{exact_bid_law, recover_structure, recovery_error, BidLaw, Recovered, RecoveryError};
use crate::inference::{make_bins, run_sampler, Chain, ParamLayout, PriorConfig};

#[derive(Debug, Parser)]
#[command(name = "ambiguity-auction", version, about = "First-price auctions with ambiguity-averse CRRA bidders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// JSON config document.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config sampler scale.
    #[arg(long, global = true, value_enum)]
    pub scale: Option<Scale>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a bid dataset.
    Simulate(Common),
    /// Sample the posterior for a bid dataset.
    Estimate(Common),
    /// Recover primitives from two exact bid laws.
    Identify(Common),
    /// Revenue curves and Bayes-action reserves from a chain.
    Decide(Common),
    /// Monte Carlo experiments.
    Mc(Common),
    /// Plot-ready tables from saved artifacts.
    Report(Common),
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) | Error::Config(_) | Error::Json(_) | Error::InvalidStructure(_) => 2,
        Error::Io(_) | Error::Csv(_) => 3,
        Error::NotConverged(_) => 4,
        _ => 1,
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn report_error(kind: &str, message: String, code: i32) {
    let r = ErrorReport { error: kind, message, exit_code: code };
    let _ = writeln!(std::io::stderr(), "{}", serde_json::to_string(&r).unwrap_or_default());
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            report_error("argument", e.to_string(), 2);
            return 2;
        }
    };
    match run(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            let code = exit_code(&e);
            report_error(e.kind(), e.to_string(), code);
            code
        }
    }
}

/// Runs one command and returns the files written.
pub fn run(cmd: &Command) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Simulate(c) => simulate(c),
        Command::Estimate(c) => estimate(c),
        Command::Identify(c) => identify(c),
        Command::Decide(c) => decide(c),
        Command::Mc(c) => mc(c),
        Command::Report(c) => report(c),
    }
}

struct Prepared<T> {
    cfg: T,
    /// Relative paths in the config resolve against the config's directory.
    base: PathBuf,
    out: OutputDir,
}

impl<T> Prepared<T> {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

fn prepare<T: RunConfig>(command: &str, c: &Common) -> Result<Prepared<T>> {
    let mut cfg: T = load_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.set_seed(s);
    }
    if let Some(s) = c.scale {
        cfg.set_scale(s);
    }
    cfg.validate().map_err(|e| match e {
        Error::Config(_) | Error::Io(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    let base = c
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = OutputDir::create(&c.out, OutputMeta::new(command, &cfg)?)?;
    Ok(Prepared { cfg, base, out })
}

fn open(p: &Path) -> Result<File> {
    File::open(p).map_err(|e| with_path(e, p))
}

fn read_dataset(p: &Path) -> Result<BidDataset> {
    BidDataset::read_csv(BufReader::new(open(p)?))
}

fn read_chain(p: &Path) -> Result<Chain> {
    Chain::read_csv(BufReader::new(open(p)?))
}

fn simulate(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<SimulateConfig> = prepare("simulate", c)?;
    let data = sample_dataset(&p.cfg.dgp)?;
    p.out.write("bids.csv", |b| data.write_csv(b))?;
    Ok(p.out.written().to_vec())
}

fn estimate(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<EstimateConfig> = prepare("estimate", c)?;
    let data = read_dataset(&p.path(&p.cfg.data))?;
    let sampler = p.cfg.sampler_config();
    let chain = run_sampler(&make_bins(&data, sampler.bins_per_n)?, &sampler)?;
    p.out.write("chain.csv", |b| chain.write_csv(b))?;
    let ns: Vec<usize> = data.design().keys().copied().collect();
    let summary = summarize(&chain, &ns, p.cfg.grid_step, p.cfg.band_points)?;
    p.out.write_json("summary.json", &summary)?;
    if !chain.converged {
        return Err(Error::NotConverged(format!(
            "iteration cap {} reached; outputs written but flagged",
            chain.iterations
        )));
    }
    Ok(p.out.written().to_vec())
}

#[derive(Debug, Clone, Serialize)]
struct IdentifyOutput {
    recovered: Recovered,
    check: Option<RecoveryError>,
}

fn identify(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<IdentifyConfig> = prepare("identify", c)?;
    let laws: Vec<BidLaw> = match (&p.cfg.structure, &p.cfg.laws) {
        (Some(s), _) => {
            let mut laws = Vec::new();
            for &n in &p.cfg.ns.clone() {
                let law = exact_bid_law(s, n, p.cfg.levels)?;
                p.out.write(&format!("bid_law_n{n}.csv"), |b| law.write_csv(b))?;
                laws.push(law);
            }
            laws
        }
        (None, Some(files)) => files
            .iter()
            .map(|f| BidLaw::read_csv(f.n, BufReader::new(open(&p.path(&f.path))?)))
            .collect::<Result<_>>()?,
        (None, None) => unreachable!("validated"),
    };
    let recovered = recover_structure(&laws[0], &laws[1])?;
    let check = p.cfg.structure.as_ref().map(|s| recovery_error(&recovered, s)).transpose()?;
    p.out.write_json("identified.json", &IdentifyOutput { recovered, check })?;
    Ok(p.out.written().to_vec())
}

#[derive(Debug, Clone, Serialize)]
struct TruthRow {
    n: usize,
    rho0: f64,
    revenue0: f64,
    rho_bayes: f64,
    revenue_at_bayes: f64,
    loss_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DecideOutput {
    summary: PosteriorSummary,
    truth: Option<Vec<TruthRow>>,
}

fn decide(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<DecideConfig> = prepare("decide", c)?;
    let chain = read_chain(&p.path(&p.cfg.chain))?;
    let summary = summarize(&chain, &p.cfg.ns, p.cfg.grid_step, p.cfg.band_points)?;
    for a in &summary.bayes_actions {
        p.out.write(&format!("revenue_n{}.csv", a.n), |b| a.write_csv(b))?;
    }
    let truth = match &p.cfg.truth {
        Some(s) => Some(
            summary
                .bayes_actions
                .iter()
                .map(|a| {
                    let curve = revenue_curve(s, a.n, p.cfg.grid_step)?;
                    let (rho0, revenue0) = curve.argmax();
                    let i = curve.grid.iter().position(|g| *g == a.rho).expect("shared grid");
                    Ok(TruthRow {
                        n: a.n,
                        rho0,
                        revenue0,
                        rho_bayes: a.rho,
                        revenue_at_bayes: curve.values[i],
                        loss_pct: revenue_loss(&curve, a.rho)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    p.out.write_json("decision.json", &DecideOutput { summary, truth })?;
    Ok(p.out.written().to_vec())
}

#[derive(Debug, Clone, Serialize)]
struct McManifest {
    seed: u64,
    config_hash: String,
    experiments: Vec<McEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct McEntry {
    variant: String,
    total_bids: usize,
    replications: usize,
    converged: usize,
    excluded: Vec<usize>,
    true_reserve_n2: f64,
    true_revenue_n2: f64,
    data_seeds: Vec<u64>,
    chain_seeds: Vec<u64>,
}

fn mc(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<McConfig> = prepare("mc", c)?;
    let reports = p.cfg.specs().iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = reports.iter().map(|r| r.metrics.clone()).collect();
    p.out.write("metrics.csv", |b| write_metrics_csv(&rows, b))?;
    p.out.write("replications.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record([
            "variant", "total_bids", "replication", "converged", "ise_f", "ise_d", "se_u", "reserve_n2", "loss_n2",
            "neutral_prob",
        ])?;
        for r in &reports {
            for x in &r.replications {
                w.write_record([
                    r.spec.variant.as_str().to_string(),
                    r.spec.total_bids.to_string(),
                    x.replication.to_string(),
                    x.converged.to_string(),
                    fmt_sig(x.ise_f),
                    fmt_sig(x.ise_d),
                    fmt_sig(x.se_u),
                    fmt_sig(x.reserve_n2),
                    fmt_sig(x.loss_n2),
                    fmt_sig(x.neutral_prob),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let manifest = McManifest {
        seed: p.cfg.seed,
        config_hash: p.out.meta().config_hash.clone(),
        experiments: reports
            .iter()
            .map(|r| McEntry {
                variant: r.spec.variant.as_str().into(),
                total_bids: r.spec.total_bids,
                replications: r.spec.replications,
                converged: r.converged,
                excluded: r.excluded.clone(),
                true_reserve_n2: r.true_reserve_n2,
                true_revenue_n2: r.true_revenue_n2,
                data_seeds: r.replications.iter().map(|x| x.data_seed).collect(),
                chain_seeds: r.replications.iter().map(|x| x.chain_seed).collect(),
            })
            .collect(),
    };
    p.out.write_json("manifest.json", &manifest)?;
    Ok(p.out.written().to_vec())
}

fn write_band(band: &Band, x: &str, b: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(b);
    w.write_record([x, "mean", "lo", "hi"])?;
    for i in 0..band.grid.len() {
        w.write_record([fmt_sig(band.grid[i]), fmt_sig(band.mean[i]), fmt_sig(band.lo[i]), fmt_sig(band.hi[i])])?;
    }
    w.flush()?;
    Ok(())
}

fn stats_rows(data: &BidDataset) -> Vec<CheckRow> {
    data.bids_by_n()
        .into_iter()
        .map(|(n, b)| {
            let s = summary_stats(&b);
            CheckRow { rep: 0, n, mean: s.mean, sd: s.sd, skew: s.skew }
        })
        .collect()
}

fn report(c: &Common) -> Result<Vec<PathBuf>> {
    let mut p: Prepared<ReportConfig> = prepare("report", c)?;
    let cfg = p.cfg.clone();
    let mut design: Option<BTreeMap<usize, usize>> = cfg.dgp.as_ref().map(|d| d.design.clone());

    if let Some(dgp) = &cfg.dgp {
        let s = dgp.structure()?;
        let curves = bid_curves(&s, &cfg.ns, 0.0, DEFAULT_GRID, DEFAULT_TOL)?;
        p.out.write("truth_functions.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let mut h = vec!["x".to_string(), "f0".into(), "cdf0".into(), "fstar".into(), "d".into()];
            h.extend(cfg.ns.iter().map(|n| format!("bid_n{n}")));
            w.write_record(&h)?;
            for i in 0..cfg.band_points {
                let x = i as f64 / (cfg.band_points - 1) as f64;
                let mut row = vec![x, s.valuation.pdf(x), s.valuation.cdf(x), s.fstar(x), s.distortion.eval(x)];
                row.extend(curves.iter().map(|c| c.bid_at(x)));
                w.write_record(row.iter().map(|v| fmt_sig(*v)))?;
            }
            w.flush()?;
            Ok(())
        })?;
        let revs = cfg.ns.iter().map(|&n| revenue_curve(&s, n, cfg.grid_step)).collect::<Result<Vec<_>>>()?;
        p.out.write("truth_revenue.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let mut h = vec!["rho".to_string()];
            h.extend(cfg.ns.iter().map(|n| format!("revenue_n{n}")));
            w.write_record(&h)?;
            for (i, rho) in revs[0].grid.iter().enumerate() {
                let mut row = vec![fmt_sig(*rho)];
                row.extend(revs.iter().map(|r| fmt_sig(r.values[i])));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        })?;
    }

    if let Some(path) = &cfg.data {
        let data = read_dataset(&p.path(path))?;
        design = Some(data.design().clone());
        let rows = stats_rows(&data);
        p.out.write("data_stats.csv", |b| write_check_csv(&rows, b))?;
    }

    if let Some(design) = &design {
        let layout = ParamLayout::new(cfg.prior_k, true)?;
        let source = DrawSource::Prior { layout, prior: PriorConfig::default() };
        let rows = predictive_check(&source, design, cfg.predictive_reps, cfg.seed)?;
        p.out.write("prior_predictive.csv", |b| write_check_csv(&rows, b))?;
    }

    if let Some(path) = &cfg.chain {
        let chain = read_chain(&p.path(path))?;
        let summary = summarize(&chain, &cfg.ns, cfg.grid_step, cfg.band_points)?;
        p.out.write("density_band.csv", |b| write_band(&summary.density, "v", b))?;
        p.out.write("d_band.csv", |b| write_band(&summary.distortion, "gamma", b))?;
        for a in &summary.bayes_actions {
            p.out.write(&format!("revenue_band_n{}.csv", a.n), |b| a.write_csv(b))?;
        }
        p.out.write("trace.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            let mut h = vec!["draw".to_string()];
            h.extend(chain.layout.names());
            h.push("log_posterior".into());
            w.write_record(&h)?;
            for (i, (x, lp)) in chain.retained().iter().zip(chain.retained_log_posterior()).enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(x.iter().map(|v| fmt_sig(*v)));
                row.push(fmt_sig(*lp));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        })?;
        if let Some(design) = &design {
            let all = chain.structures()?;
            let picks = (0..cfg.predictive_reps).map(|r| all[r * all.len() / cfg.predictive_reps].clone()).collect();
            let rows = predictive_check(&DrawSource::Structures(picks), design, cfg.predictive_reps, cfg.seed)?;
            p.out.write("posterior_predictive.csv", |b| write_check_csv(&rows, b))?;
        }
    }
    Ok(p.out.written().to_vec())
}
