//! Experiment harness for the sdg library.
//!
//! Every subcommand reads a JSON config, fans trials out over a worker pool
//! with one deterministic random stream per trial, and writes CSV summaries
//! plus JSONL transcripts under the output directory. Outputs are byte
//! reproducible from `(config, seed)`; the CSV header comment carries the
//! tool version and the config hash so runs stay attributable.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use config::*;
use sdg::concepts::{self, ConceptClass, DimensionReport};
use sdg::game::{generator_strategy, FoolingParams, HonestDiscriminator, TreeAdversary};
use sdg::measures::{self, Distribution, LabeledSample};
use sdg::online::{agnostic_soa_learner, mw_learner, LearnerState};
use sdg::pipeline::{
    dp_fool, private_uniform_convergence, sanitize, PipelineConfig, PucConfig, SizeOverrides,
};
use sdg::privacy::{dp_audit, exp_mech_learner, thresh_with_mean, LearnerSpec, ThreshOutcome};
use sdg::rng::{Prng, RngFactory};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const COLUMNS_VERSION: &str = "v1";

#[derive(Parser)]
#[command(
    name = "sdg",
    about = "Sequential and private synthetic-data-generation experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $SDG_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trial count; overrides the config's trials.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Proceed past proof-driven sample-size requirements.
    #[arg(long, global = true)]
    override_size_checks: bool,
}

#[derive(Subcommand)]
enum Command {
    /// VC, Littlestone, and dual Littlestone dimensions of a class.
    Dims,
    /// Sequential fooling games against the honest discriminator.
    Fool,
    /// Shattered-tree adversary games measuring forced rounds.
    Lowerbound,
    /// End-to-end differentially private fooling runs.
    Dpfool,
    /// Sanitizer runs: private frequency estimates for every distinguisher.
    Sanitize,
    /// Private uniform convergence runs on planted populations.
    Puc,
    /// Monte-Carlo privacy audit of a named mechanism.
    Audit,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("SDG_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn config_path(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .context("--config FILE is required for this subcommand")
}

fn run(cli: Cli) -> Result<()> {
    let out = out_dir(&cli);
    fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    match cli.command {
        Command::Dims => cmd_dims(&cli, &out),
        Command::Fool => cmd_fool(&cli, &out),
        Command::Lowerbound => cmd_lowerbound(&cli, &out),
        Command::Dpfool => cmd_dpfool(&cli, &out),
        Command::Sanitize => cmd_sanitize(&cli, &out),
        Command::Puc => cmd_puc(&cli, &out),
        Command::Audit => cmd_audit(&cli, &out),
    }
}

/// CSV writer with a `#` comment header carrying provenance.
fn csv_writer(path: &Path, config_hash: &str) -> Result<csv::Writer<fs::File>> {
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(
        file,
        "# sdg-cli {TOOL_VERSION} columns={COLUMNS_VERSION} config={config_hash}"
    )?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<T: Serialize>(path: &Path, config_hash: &str, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path, config_hash)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn random_distribution(n: usize, rng: &mut Prng) -> Distribution {
    use rand::Rng;
    Distribution::new((0..n).map(|_| rng.gen::<f64>() + 1e-6).collect()).expect("positive weights")
}

// ---------------------------------------------------------------------------
// dims
// ---------------------------------------------------------------------------

fn cmd_dims(cli: &Cli, out: &Path) -> Result<()> {
    let (cfg, hash) = load_config::<DimsConfig>(config_path(cli)?)?;
    let class = cfg.class.build()?;
    let report = DimensionReport::compute(&class)?;
    let bound = concepts::dual_ldim_bound(report.ldim);
    let doc = serde_json::json!({
        "class": cfg.class.describe(),
        "fingerprint": class.fingerprint(),
        "points": class.points(),
        "rows": class.len(),
        "vc": report.vc,
        "ldim": report.ldim,
        "dual_ldim": report.dual_ldim,
        "dual_ldim_bound": bound.map(|b| b.to_string()),
        "dual_bound_holds": report.dual_bound_holds(),
        "config": hash,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    write_json(&out.join("dims.json"), &doc)?;
    if !report.dual_bound_holds() {
        bail!("dual dimension bound violated");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fool
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FoolRow {
    trial: u64,
    seed: u64,
    eps: f64,
    bound_rounds: usize,
    rounds: usize,
    won: bool,
    final_ipm: Option<f64>,
    dishonest_win: bool,
}

fn cmd_fool(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<FoolConfig>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let class = cfg.class.build()?;
    if !class.is_symmetric() {
        bail!("the sequential game needs a symmetric class; set symmetrize=true");
    }
    let ell = concepts::dual_littlestone_dimension(&class)?;
    let params = FoolingParams::new(cfg.eps, ell)?;
    let factory = RngFactory::new(seed);

    let runs: Vec<Result<(FoolRow, String)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = factory.trial(trial);
            let target = random_distribution(class.points(), &mut rng);
            let learner: LearnerState = match cfg.learner.as_str() {
                "mw" => mw_learner(&class, params.horizon)?,
                "agnostic_soa" => agnostic_soa_learner(&class, params.horizon)?,
                other => bail!("unknown learner {other:?} (use mw or agnostic_soa)"),
            };
            let mut disc = HonestDiscriminator::new(&class, target.clone(), cfg.eps)?;
            let mut t = generator_strategy(&class, &params, learner, &mut disc, Some(&target))?;
            t.seed = Some(seed);
            let row = FoolRow {
                trial,
                seed,
                eps: cfg.eps,
                bound_rounds: params.horizon,
                rounds: t.rounds_played(),
                won: t.won(),
                final_ipm: t.final_ipm,
                dishonest_win: t.dishonest_win,
            };
            let jsonl = t
                .rounds
                .iter()
                .map(|r| {
                    serde_json::to_string(&serde_json::json!({
                        "trial": trial,
                        "round": r,
                    }))
                    .expect("round serializes")
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok((row, jsonl))
        })
        .collect();

    let mut rows = Vec::new();
    let mut transcripts = Vec::new();
    for r in runs {
        let (row, jsonl) = r?;
        rows.push(row);
        transcripts.push(jsonl);
    }
    write_rows(&out.join("fool_summary.csv"), &hash, &rows)?;
    fs::write(
        out.join("fool_transcripts.jsonl"),
        transcripts.join("\n") + "\n",
    )?;
    write_json(
        &out.join("fool_run.json"),
        &serde_json::json!({
            "class": cfg.class.describe(),
            "fingerprint": class.fingerprint(),
            "eps": cfg.eps,
            "dual_ldim": ell,
            "bound_rounds": params.horizon,
            "trials": cfg.trials,
            "seed": seed,
            "learner": cfg.learner,
            "config": hash,
        }),
    )?;

    let failures = rows
        .iter()
        .filter(|r| !r.won || r.rounds > r.bound_rounds)
        .count();
    println!(
        "fool: {} trials, {} within the {}-round bound",
        rows.len(),
        rows.len() - failures,
        params.horizon
    );
    if failures > 0 {
        bail!("{failures} trials missed the round bound");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lowerbound
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LowerBoundRow {
    trial: u64,
    seed: u64,
    eps: f64,
    dual_ldim: usize,
    served: usize,
    rounds: usize,
    won: bool,
}

fn cmd_lowerbound(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<LowerBoundConfig>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let class = cfg.class.build()?;
    let ell = concepts::dual_littlestone_dimension(&class)?;
    let params = FoolingParams::new(cfg.eps, ell)?;
    let factory = RngFactory::new(seed);

    let rows: Vec<LowerBoundRow> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = factory.trial(trial);
            let mut adv = TreeAdversary::new(&class, cfg.eps, &mut rng).expect("tree builds");
            let target = adv.target().clone();
            let learner = mw_learner(&class, params.horizon).expect("learner builds");
            let t = generator_strategy(&class, &params, learner, &mut adv, Some(&target))
                .expect("game runs");
            LowerBoundRow {
                trial,
                seed,
                eps: cfg.eps,
                dual_ldim: ell,
                served: adv.served(),
                rounds: t.rounds_played(),
                won: t.won(),
            }
        })
        .collect();
    write_rows(&out.join("lowerbound_summary.csv"), &hash, &rows)?;

    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.served as f64).sum::<f64>() / n;
    let var = rows
        .iter()
        .map(|r| (r.served as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let stderr = (var / n).sqrt();
    let threshold = ell as f64 / 2.0 - 3.0 * stderr;
    write_json(
        &out.join("lowerbound_run.json"),
        &serde_json::json!({
            "class": cfg.class.describe(),
            "fingerprint": class.fingerprint(),
            "eps": cfg.eps,
            "dual_ldim": ell,
            "trials": cfg.trials,
            "seed": seed,
            "mean_served": mean,
            "stderr": stderr,
            "threshold": threshold,
            "config": hash,
        }),
    )?;
    println!(
        "lowerbound: mean served {mean:.3} over {} trials (threshold {threshold:.3})",
        rows.len()
    );
    if cfg.eps < 0.5 && mean < threshold {
        bail!("mean served distinguishers {mean:.3} below l*/2 - 3 stderr = {threshold:.3}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dpfool
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DpFoolRow {
    trial: u64,
    seed: u64,
    t0: usize,
    rounds: usize,
    won: bool,
    ipm_to_sample: f64,
    ipm_to_target: f64,
    ledger_alpha: f64,
    ledger_beta: f64,
}

fn overrides_from(flag_cfg: bool, flag_cli: bool) -> SizeOverrides {
    if flag_cfg || flag_cli {
        SizeOverrides::all()
    } else {
        SizeOverrides::default()
    }
}

fn cmd_dpfool(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<DpFoolConfig>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let class = cfg.class.build()?;
    let pipeline = PipelineConfig::new(
        cfg.eps0,
        cfg.delta0,
        cfg.kappa,
        LearnerSpec::new(cfg.learner_alpha),
    )
    .with_overrides(overrides_from(
        cfg.override_size_checks,
        cli.override_size_checks,
    ));
    let factory = RngFactory::new(seed);

    let runs: Vec<Result<(DpFoolRow, String, String)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = factory.trial(trial);
            let target = random_distribution(class.points(), &mut rng);
            let sample = measures::draw_sample(&target, cfg.sample_size, &mut rng);
            let outcome = dp_fool(&class, &sample, &pipeline, &mut rng)?;
            let ipm_to_target = measures::ipm(&class, &target, &outcome.p_syn)?.value;
            let total = outcome.ledger.total()?;
            // One full pipeline report per trial: configuration, size-check
            // results, ledger, accuracy, and where the transcript lives.
            let report = serde_json::json!({
                "trial": trial,
                "seed": seed,
                "config": hash,
                "eps0": cfg.eps0,
                "delta0": cfg.delta0,
                "kappa": cfg.kappa,
                "sample_size": cfg.sample_size,
                "t0": outcome.t0,
                "tau0": outcome.tau0,
                "size_checks": outcome.size_report,
                "ledger": serde_json::from_str::<serde_json::Value>(
                    &outcome.ledger.to_json()
                ).expect("ledger json"),
                "ipm_to_sample": outcome.ipm_to_sample,
                "ipm_to_target": ipm_to_target,
                "transcript": {
                    "file": "dpfool_transcripts.jsonl",
                    "rounds_played": outcome.transcript.rounds_played(),
                    "outcome": outcome.transcript.outcome,
                },
            })
            .to_string();
            let transcript_lines = outcome
                .transcript
                .rounds
                .iter()
                .map(|r| {
                    serde_json::to_string(&serde_json::json!({ "trial": trial, "round": r }))
                        .expect("round serializes")
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok((
                DpFoolRow {
                    trial,
                    seed,
                    t0: outcome.t0,
                    rounds: outcome.transcript.rounds_played(),
                    won: outcome.transcript.won(),
                    ipm_to_sample: outcome.ipm_to_sample,
                    ipm_to_target,
                    ledger_alpha: total.alpha,
                    ledger_beta: total.beta,
                },
                report,
                transcript_lines,
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut transcripts = Vec::new();
    for r in runs {
        let (row, report, lines) = r?;
        rows.push(row);
        reports.push(report);
        transcripts.push(lines);
    }
    write_rows(&out.join("dpfool_summary.csv"), &hash, &rows)?;
    fs::write(out.join("dpfool_reports.jsonl"), reports.join("\n") + "\n")?;
    fs::write(
        out.join("dpfool_transcripts.jsonl"),
        transcripts.join("\n") + "\n",
    )?;

    let hits = rows
        .iter()
        .filter(|r| r.ipm_to_sample <= cfg.eps0 / 2.0)
        .count();
    write_json(
        &out.join("dpfool_run.json"),
        &serde_json::json!({
            "class": cfg.class.describe(),
            "fingerprint": class.fingerprint(),
            "eps0": cfg.eps0,
            "delta0": cfg.delta0,
            "kappa": cfg.kappa,
            "sample_size": cfg.sample_size,
            "trials": cfg.trials,
            "seed": seed,
            "accuracy_hits": hits,
            "config": hash,
        }),
    )?;
    println!(
        "dpfool: {hits}/{} runs within eps0/2 of the empirical sample",
        rows.len()
    );
    let needed = ((1.0 - cfg.delta0) * rows.len() as f64).floor() as usize;
    if hits < needed.saturating_sub((rows.len() as f64).sqrt() as usize) {
        bail!("accuracy hits {hits} far below the 1-delta0 target {needed}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sanitize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SanitizeRow {
    trial: u64,
    seed: u64,
    max_error: f64,
    ledger_alpha: f64,
    ledger_beta: f64,
}

fn cmd_sanitize(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<SanitizeConfig>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    if cfg.sample_size % 2 != 0 {
        bail!("sanitize sample_size must be even");
    }
    let class = cfg.class.build()?;
    let pipeline = PipelineConfig::new(
        cfg.eps,
        cfg.delta,
        cfg.kappa,
        LearnerSpec::new(cfg.learner_alpha),
    )
    .with_overrides(overrides_from(
        cfg.override_size_checks,
        cli.override_size_checks,
    ));
    let factory = RngFactory::new(seed);

    let runs: Vec<Result<SanitizeRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = factory.trial(trial);
            let target = random_distribution(class.points(), &mut rng);
            let sample = measures::draw_sample(&target, cfg.sample_size, &mut rng);
            let outcome = sanitize(&class, &sample, &pipeline, &mut rng)?;
            let total = outcome.ledger.total()?;
            Ok(SanitizeRow {
                trial,
                seed,
                max_error: outcome.max_error_on(&class, &sample)?,
                ledger_alpha: total.alpha,
                ledger_beta: total.beta,
            })
        })
        .collect();
    let rows = runs.into_iter().collect::<Result<Vec<_>>>()?;
    write_rows(&out.join("sanitize_summary.csv"), &hash, &rows)?;
    let hits = rows.iter().filter(|r| r.max_error <= cfg.eps).count();
    write_json(
        &out.join("sanitize_run.json"),
        &serde_json::json!({
            "class": cfg.class.describe(),
            "fingerprint": class.fingerprint(),
            "eps": cfg.eps,
            "delta": cfg.delta,
            "sample_size": cfg.sample_size,
            "trials": cfg.trials,
            "seed": seed,
            "accuracy_hits": hits,
            "config": hash,
        }),
    )?;
    println!("sanitize: {hits}/{} runs within eps", rows.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// puc
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PucRow {
    trial: u64,
    seed: u64,
    sigma: bool,
    p_sigma: f64,
    max_population_error: f64,
    ledger_alpha: f64,
    ledger_beta: f64,
}

fn cmd_puc(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<PucConfigFile>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let class = cfg.class.build()?;
    let puc = PucConfig {
        m_points: cfg.m_points,
        kappa: cfg.kappa,
        learner: LearnerSpec::new(cfg.learner_alpha),
        overrides: overrides_from(cfg.override_size_checks, cli.override_size_checks),
    };
    let factory = RngFactory::new(seed);

    let runs: Vec<Result<PucRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            use rand::Rng;
            let mut rng = factory.trial(trial);
            let marginal = random_distribution(class.points(), &mut rng);
            let truth = class.row(rng.gen_range(0..class.len())).clone();
            let pairs: Vec<(usize, bool)> = (0..cfg.sample_size)
                .map(|_| {
                    let x = measures::draw_sample(&marginal, 1, &mut rng).points()[0];
                    let y = truth.get(x) != (rng.gen::<f64>() < cfg.flip_noise);
                    (x, y)
                })
                .collect();
            let sample = LabeledSample::new(pairs, class.points())?;
            let report =
                private_uniform_convergence(&class, &sample, cfg.eps, cfg.delta, &puc, &mut rng)?;
            let max_err = class
                .rows()
                .iter()
                .enumerate()
                .map(|(d, row)| {
                    let true_loss: f64 = (0..class.points())
                        .map(|x| {
                            let disagree = row.get(x) != truth.get(x);
                            let err = if disagree {
                                1.0 - cfg.flip_noise
                            } else {
                                cfg.flip_noise
                            };
                            marginal.weight(x) * err
                        })
                        .sum();
                    (report.l_hat[d] - true_loss).abs()
                })
                .fold(0.0f64, f64::max);
            let total = report.ledger.total()?;
            Ok(PucRow {
                trial,
                seed,
                sigma: report.sigma,
                p_sigma: report.p_sigma,
                max_population_error: max_err,
                ledger_alpha: total.alpha,
                ledger_beta: total.beta,
            })
        })
        .collect();
    let rows = runs.into_iter().collect::<Result<Vec<_>>>()?;
    write_rows(&out.join("puc_summary.csv"), &hash, &rows)?;
    let hits = rows
        .iter()
        .filter(|r| r.max_population_error <= cfg.eps)
        .count();
    write_json(
        &out.join("puc_run.json"),
        &serde_json::json!({
            "class": cfg.class.describe(),
            "fingerprint": class.fingerprint(),
            "eps": cfg.eps,
            "delta": cfg.delta,
            "m_points": cfg.m_points,
            "sample_size": cfg.sample_size,
            "trials": cfg.trials,
            "seed": seed,
            "uniform_hits": hits,
            "config": hash,
        }),
    )?;
    println!("puc: {hits}/{} trials uniformly within eps", rows.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

fn cmd_audit(cli: &Cli, out: &Path) -> Result<()> {
    let (mut cfg, hash) = load_config::<AuditConfig>(config_path(cli)?)?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let mut rng = RngFactory::new(seed).trial(0);

    let report = match cfg.mechanism.as_str() {
        "exp_mech" => {
            let class = ConceptClass::from_bitstrings(&["00", "11"]).expect("tiny class");
            let left = LabeledSample::new(vec![(0, false), (1, false), (0, false), (1, false)], 2)?;
            let right = LabeledSample::new(vec![(0, false), (1, false), (0, false), (1, true)], 2)?;
            dp_audit(
                |s: &LabeledSample, r: &mut Prng| {
                    exp_mech_learner(&class, s, cfg.alpha, r).expect("selection runs")
                },
                &left,
                &right,
                class.len(),
                cfg.trials,
                cfg.alpha,
                cfg.slack,
                &mut rng,
            )?
        }
        "thresh" => {
            let n = 100usize;
            let n_margin = (cfg.alpha * n as f64).round() as usize;
            if n_margin == 0 {
                bail!("alpha too small for the threshold audit at 100 scalars");
            }
            dp_audit(
                |mean: &f64, r: &mut Prng| match thresh_with_mean(*mean, n, 0.505, n_margin, r)
                    .expect("thresh runs")
                {
                    ThreshOutcome::Top => 0usize,
                    ThreshOutcome::Bottom => 1usize,
                },
                &0.5,
                &(0.5 + 1.0 / n as f64),
                2,
                cfg.trials,
                cfg.alpha,
                cfg.slack,
                &mut rng,
            )?
        }
        "randomized_response" => {
            let keep = cfg.alpha.exp() / (1.0 + cfg.alpha.exp());
            dp_audit(
                move |input: &bool, r: &mut Prng| {
                    use rand::Rng;
                    let honest = r.gen::<f64>() < keep;
                    (*input == honest) as usize
                },
                &true,
                &false,
                2,
                cfg.trials,
                cfg.alpha,
                cfg.slack,
                &mut rng,
            )?
        }
        other => bail!("unknown mechanism {other:?}"),
    };

    let doc: serde_json::Value = serde_json::from_str(&report.to_json())?;
    let doc = serde_json::json!({
        "mechanism": cfg.mechanism,
        "seed": seed,
        "config": hash,
        "report": doc,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    write_json(&out.join("audit_report.json"), &doc)?;
    if report.violation {
        bail!(
            "privacy audit flagged a violation: lower CI {:.4} above alpha {}",
            report.max_lower_ci,
            cfg.alpha
        );
    }
    Ok(())
}
