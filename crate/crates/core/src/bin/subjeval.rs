use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use subjeval::analysis::{
    analyze_counts, analyze_outcome, read_count_table, AnalysisConfig, AnalysisReport, ChanceOutcome,
};
use subjeval::design::{design_study, make_derangement, validate_segments, Condition, Segment, StudyKind, StudyPlan};
use subjeval::ingest::{ingest, read_responses, write_responses_csv, write_responses_ndjson, IngestOutcome};
use subjeval::reporting::{emit_barplot, emit_boxplot, emit_matrix, render_summary_table, Ordering};
use subjeval::service::{http, ServiceConfig, StudyService};
use subjeval::sim::{simulate_responses, RaterModel};
use subjeval::stats::CorrectionMethod;

#[derive(Parser)]
#[command(name = "subjeval", version, about = "Subjective evaluation of generated gesture motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a counterbalanced study plan with attention checks.
    Design {
        #[arg(long)]
        kind: StudyKind,
        /// Comma-separated condition ids, e.g. NA,BM,BD,SA.
        #[arg(long, value_delimiter = ',', required = true)]
        conditions: Vec<String>,
        /// Segment table (CSV: id,duration_s,start_s,chunk_id,active_speaker).
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        participants: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw the mismatch derangement over a segment table.
    Mismatch {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic responses for a plan.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        /// Rater model as TOML or JSON.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output file; `.csv` writes CSV, anything else newline JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate responses against a plan and apply exclusions.
    Ingest {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute summaries and pairwise significance.
    Analyze {
        /// Per-condition count table of a preference study.
        #[arg(long, conflicts_with = "outcome")]
        counts: Option<PathBuf>,
        /// Output of `ingest`.
        #[arg(long)]
        outcome: Option<PathBuf>,
        /// Study kind used for defaults when analysing a count table.
        #[arg(long, default_value = "speech_approp")]
        kind: StudyKind,
        /// Analysis configuration (TOML); flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_parser = parse_correction)]
        correction: Option<CorrectionMethod>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render tables and figure data from an analysis.
    Report {
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long, default_value = "alphabetical")]
        ordering: Ordering,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the participant-facing study service.
    Serve {
        /// Service configuration (TOML); SUBJEVAL_* variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-run the analysis of the bundled published count tables.
    ReproducePaper,
}

fn parse_correction(s: &str) -> std::result::Result<CorrectionMethod, String> {
    match s {
        "holm" | "holm_bonferroni" => Ok(CorrectionMethod::HolmBonferroni),
        "bh" | "bh_fdr" => Ok(CorrectionMethod::BhFdr),
        "none" => Ok(CorrectionMethod::None),
        other => Err(format!("unknown correction {other:?} (holm, bh, none)")),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_plan(path: &Path) -> Result<StudyPlan> {
    StudyPlan::from_json(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_segments(path: &Path) -> Result<Vec<Segment>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}:{}", path.display(), i + 2)))
        .collect()
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Command::Design { kind, conditions, segments, participants, seed, out } => {
            let conditions = conditions
                .iter()
                .map(|c| Condition::from_id(c.trim()))
                .collect::<subjeval::Result<Vec<_>>>()?;
            let segments = read_segments(&segments)?;
            for f in validate_segments(&segments, kind) {
                eprintln!("{:?} {} [{}]: {}", f.kind, f.segment_id, f.rule, f.message);
            }
            let plan = design_study(kind, &conditions, &segments, participants, seed)?;
            write_text(&out, &plan.to_json()?)?;
            eprintln!(
                "wrote {} participants, {} stimuli to {}",
                plan.participants.len(),
                plan.stimuli.len(),
                out.display()
            );
        }
        Command::Mismatch { segments, seed, out } => {
            let ids: Vec<String> = read_segments(&segments)?.into_iter().map(|s| s.id).collect();
            let m = make_derangement(&ids, seed)?;
            let json = serde_json::to_string_pretty(&m)?;
            match out {
                Some(p) => write_text(&p, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Simulate { plan, model, seed, out } => {
            let plan = load_plan(&plan)?;
            let text = read_text(&model)?;
            let model: RaterModel = if model.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).with_context(|| format!("in {}", model.display()))?
            } else {
                toml::from_str(&text).with_context(|| format!("in {}", model.display()))?
            };
            let records = simulate_responses(&plan, &model, seed)?;
            let w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            if out.extension().is_some_and(|e| e == "csv") {
                write_responses_csv(&records, w)?;
            } else {
                write_responses_ndjson(&records, w)?;
            }
            eprintln!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Ingest { plan, responses, out } => {
            let plan = load_plan(&plan)?;
            let records = read_responses(&responses)?;
            let outcome = ingest(records, &plan);
            let t = outcome.tally;
            eprintln!(
                "total {} retained {} rejected {} excluded {} checks {} training {}",
                t.total, t.retained, t.rejected, t.excluded_participant_responses, t.attention_checks, t.training
            );
            write_text(&out, &outcome.to_json()?)?;
        }
        Command::Analyze { counts, outcome, kind, config, alpha, correction, out } => {
            let mut cfg = match (&config, &outcome) {
                (Some(p), _) => toml::from_str(&read_text(p)?).with_context(|| format!("in {}", p.display()))?,
                (None, Some(_)) => AnalysisConfig::default(),
                (None, None) => AnalysisConfig::for_study(kind),
            };
            let report = match (counts, outcome) {
                (Some(path), None) => {
                    apply_overrides(&mut cfg, alpha, correction);
                    let rows = read_count_table(File::open(&path)?, &path.display().to_string())?;
                    analyze_counts(&rows, &cfg)?
                }
                (None, Some(path)) => {
                    let outcome: IngestOutcome = serde_json::from_str(&read_text(&path)?)
                        .with_context(|| format!("in {}", path.display()))?;
                    if config.is_none() {
                        cfg = AnalysisConfig::for_study(outcome.study_kind);
                    }
                    apply_overrides(&mut cfg, alpha, correction);
                    analyze_outcome(&outcome, &cfg)?
                }
                _ => bail!("give exactly one of --counts or --outcome"),
            };
            if let Some(m) = &report.matrix {
                for w in &m.warnings {
                    eprintln!("warning: {w}");
                }
                eprintln!("{} of {} pairs significant", m.significant_pairs(), pair_count(m.conditions.len()));
            }
            write_text(&out, &report.to_json()?)?;
        }
        Command::Report { analysis, ordering, out_dir } => {
            let report = AnalysisReport::from_json(&read_text(&analysis)?)
                .with_context(|| format!("in {}", analysis.display()))?;
            std::fs::create_dir_all(&out_dir)?;
            let table = render_summary_table(&report.summaries, ordering);
            write_text(&out_dir.join("summary.csv"), &table.to_csv()?)?;
            write_text(&out_dir.join("summary.md"), &table.to_markdown())?;
            if report.summaries.iter().any(|s| s.mas.is_some()) {
                write_text(&out_dir.join("barplot.csv"), &emit_barplot(&report.summaries).to_csv()?)?;
            }
            if !report.boxplots.is_empty() {
                write_text(&out_dir.join("boxplot.csv"), &emit_boxplot(report.boxplots.iter()).to_csv()?)?;
            }
            if let Some(m) = &report.matrix {
                let order: Vec<String> = table.rows.iter().map(|r| r[0].clone()).collect();
                let raster = emit_matrix(&m.reordered(&order)?);
                write_text(&out_dir.join("matrix.svg"), &raster.to_svg())?;
                write_text(&out_dir.join("matrix.csv"), &raster.to_csv()?)?;
            }
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(table.to_markdown().as_bytes())?;
        }
        Command::Serve { config } => {
            let cfg = ServiceConfig::load(config.as_deref())?;
            let plan = load_plan(&cfg.plan)?;
            let service = Arc::new(StudyService::open(plan, cfg)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(service))?;
        }
        Command::ReproducePaper => {
            if !reproduce()? {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut AnalysisConfig, alpha: Option<f64>, correction: Option<CorrectionMethod>) {
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if let Some(c) = correction {
        cfg.correction = c;
    }
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Prints one line per check and a final pair-count summary; returns whether
/// every check held.
fn reproduce() -> Result<bool> {
    let mut ok = true;
    let mut totals = Vec::new();
    for study in subjeval::fixtures::ALL {
        let rows = study.counts()?;
        let report = analyze_counts(&rows, &AnalysisConfig::for_study(StudyKind::SpeechApprop))?;
        for e in study.expected()? {
            let s = report
                .summary(&e.condition)
                .with_context(|| format!("{}: condition {} missing", study.name, e.condition))?;
            let mas = s.mas.context("count summary without MAS")?;
            let pref = s.pref_matched.context("count summary without preference share")? * 100.0;
            let chance = s.chance().unwrap_or(ChanceOutcome::NotDistinguishable);
            let checks = [
                ("mas", (mas.value - e.mas).abs() <= 0.005),
                ("half_width", (mas.interval.half_width() - e.half_width).abs() <= 0.005),
                ("pref_matched", (pref - e.pref_matched_pct).abs() <= 0.05),
                ("chance", chance == e.chance),
            ];
            for (name, pass) in checks {
                ok &= pass;
                println!("{} {} {}: {}", study.name, e.condition, name, if pass { "ok" } else { "MISMATCH" });
            }
            println!(
                "  {} {} mas {:.4} ± {:.4} pref {:.2}% {:?}",
                study.name,
                e.condition,
                mas.value,
                mas.interval.half_width(),
                pref,
                chance
            );
        }
        let m = report.matrix.context("no significance matrix")?;
        let sig = m.significant_pairs();
        let pass = sig.abs_diff(study.significant_pairs) <= 2 && m.is_antisymmetric();
        ok &= pass;
        println!(
            "{} pairs: {sig}/{} (published {}): {}",
            study.name,
            pair_count(m.conditions.len()),
            study.significant_pairs,
            if pass { "ok" } else { "MISMATCH" }
        );
        totals.push(format!("{}: {sig}/{}", study.name, pair_count(m.conditions.len())));
    }
    println!("{}", totals.join(", "));
    Ok(ok)
}
