use levelup_core::audit::{build_report_with, AuditOptions, AuditReport, EvaluationSplit, DEFAULT_TOLERANCE};
use levelup_core::frontier::{equality_frontier, mrc_frontier, Frontier};
use levelup_core::ingest::{
    csv_header, load_csv, split, synth_generate, CsvSchema, LabeledDataset, Partition, SynthSpec,
};
use levelup_core::policy::{enforce, full_level_up, partial_level_up, Constraint, ThresholdPolicy};
use levelup_core::scorer::{fit, predict, read_scores, write_scores, ScoredDataset, Scorer, ScorerConfig};
use levelup_core::{FairnessMeasure, Statistic};

use crate::config::{ConstraintKind, FrontierMode, RunConfig, SplitChoice, SynthKind};
use crate::error::CliError;
use crate::output::Outputs;

const DEFAULT_EVAL_FRACTION: f64 = 0.3;
const DEFAULT_RESOLUTION: usize = 50;

fn schema(config: &RunConfig) -> Result<CsvSchema, CliError> {
    let path = config.data.as_ref().expect("csv source");
    let label = config.label_column.clone().unwrap_or_else(|| "label".into());
    let positive = config.positive_label.clone().unwrap_or_else(|| "1".into());
    let group = config.group_column.clone().unwrap_or_else(|| "group".into());
    let features: Vec<String> = match &config.features {
        Some(f) => f.clone(),
        None => csv_header(path)?.into_iter().filter(|c| *c != label).collect(),
    };
    let refs: Vec<&str> = features.iter().map(String::as_str).collect();
    Ok(CsvSchema::new(&label, &positive, &group, &refs))
}

fn synth_spec(config: &RunConfig, kind: SynthKind) -> SynthSpec {
    match kind {
        SynthKind::BaseRateGap => SynthSpec::base_rate_gap(config.seed()),
        SynthKind::RareEvent => SynthSpec::rare_event(
            config.prevalence.unwrap_or(0.01),
            config.rows.unwrap_or(10_000),
            config.seed(),
        ),
    }
}

fn labeled(config: &RunConfig) -> Result<LabeledDataset, CliError> {
    if let Some(kind) = config.synth {
        return Ok(synth_generate(&synth_spec(config, kind))?.dataset);
    }
    match &config.data {
        Some(path) => Ok(load_csv(path, &schema(config)?)?),
        None => Err(CliError::Usage("this command needs --data or --synth".into())),
    }
}

fn scorer_config(config: &RunConfig) -> ScorerConfig {
    let d = ScorerConfig::default();
    ScorerConfig {
        learning_rate: config.learning_rate.unwrap_or(d.learning_rate),
        max_iterations: config.max_iterations.unwrap_or(d.max_iterations),
        l2: config.l2.unwrap_or(d.l2),
        seed: config.seed(),
        tolerance: d.tolerance,
    }
}

fn fitted(config: &RunConfig) -> Result<(LabeledDataset, Partition, Scorer), CliError> {
    let data = labeled(config)?;
    let parts = split(
        &data,
        config.eval_fraction.unwrap_or(DEFAULT_EVAL_FRACTION),
        config.seed(),
    )?;
    for (g, label) in &parts.singleton_cells {
        log::warn!(
            "group {} label {} has one row; kept in train",
            data.group_names()[*g],
            u8::from(*label)
        );
    }
    let scorer = fit(&parts.train, &scorer_config(config))?;
    if !scorer.converged {
        log::warn!(
            "scorer stopped after {} iterations without converging",
            scorer.iterations
        );
    }
    Ok((data, parts, scorer))
}

/// Scores to enforce on, and which rows they came from.
fn scored(config: &RunConfig) -> Result<(ScoredDataset, EvaluationSplit), CliError> {
    if let Some(path) = &config.scores {
        return Ok((read_scores_file(path)?, EvaluationSplit::Full));
    }
    if let Some(kind) = config.synth {
        return Ok((
            synth_generate(&synth_spec(config, kind))?.scored(),
            EvaluationSplit::Full,
        ));
    }
    let (_, parts, scorer) = fitted(config)?;
    Ok(match config.evaluate_on.unwrap_or(SplitChoice::Train) {
        SplitChoice::Train => (predict(&scorer, &parts.train)?, EvaluationSplit::Train),
        SplitChoice::Eval => (predict(&scorer, &parts.eval)?, EvaluationSplit::Eval),
    })
}

fn read_scores_file(path: &std::path::Path) -> Result<ScoredDataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| {
        CliError::Data(levelup_core::Error::Io {
            path: path.to_owned(),
            source: e,
        })
    })?;
    Ok(read_scores(file)?)
}

fn scores_bytes(scored: &ScoredDataset) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_scores(scored, &mut buf)?;
    Ok(buf)
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    if config.scores.is_some() {
        return Err(CliError::Usage("train needs --data or --synth, not --scores".into()));
    }
    let (data, parts, scorer) = fitted(config)?;
    let mut out = Outputs::create(config.out_dir())?;
    out.write_json("scorer.json", &scorer)?;
    out.write("scores.csv", &scores_bytes(&predict(&scorer, &data)?)?)?;
    out.write("scores_train.csv", &scores_bytes(&predict(&scorer, &parts.train)?)?)?;
    out.write("scores_eval.csv", &scores_bytes(&predict(&scorer, &parts.eval)?)?)?;
    let dir = out.finish("train", config)?;
    println!(
        "trained on {} rows ({} held out), {} iterations, loss {:.6}; outputs in {}",
        parts.train.len(),
        parts.eval.len(),
        scorer.iterations,
        scorer.final_loss,
        dir.display()
    );
    Ok(())
}

fn measure_or_default(config: &RunConfig) -> FairnessMeasure {
    config.measure.unwrap_or(FairnessMeasure::DemographicParity)
}

fn required(value: Option<f64>, flag: &str, kind: ConstraintKind) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--constraint {} needs --{flag}", kind.as_flag())))
}

impl ConstraintKind {
    fn as_flag(self) -> String {
        clap::ValueEnum::to_possible_value(&self)
            .expect("no skipped variants")
            .get_name()
            .to_owned()
    }
}

/// The constrained policy and the constraint recorded in its report.
fn constrained_policy(config: &RunConfig, scored: &ScoredDataset) -> Result<(ThresholdPolicy, Constraint), CliError> {
    let kind = config
        .constraint
        .ok_or_else(|| CliError::Usage("enforce needs --constraint".into()))?;
    let stat = config.stat.unwrap_or(Statistic::SelectionRate);
    let equality = |measure| -> Result<Constraint, CliError> {
        Ok(Constraint::Equality {
            measure,
            epsilon: required(config.epsilon, "epsilon", kind)?,
        })
    };
    let constraint = match kind {
        ConstraintKind::None => Constraint::Unconstrained,
        ConstraintKind::Dp => equality(FairnessMeasure::DemographicParity)?,
        ConstraintKind::Eo => equality(FairnessMeasure::EqualOpportunity)?,
        ConstraintKind::Pp => equality(FairnessMeasure::PredictiveParity)?,
        ConstraintKind::Fpr => equality(FairnessMeasure::FalsePositiveErrorRateBalance)?,
        ConstraintKind::Eodds => equality(FairnessMeasure::EqualizedOdds)?,
        ConstraintKind::Cuae => equality(FairnessMeasure::ConditionalUseAccuracyEquality)?,
        ConstraintKind::Oae => equality(FairnessMeasure::OverallAccuracyEquality)?,
        ConstraintKind::MinRate => Constraint::MinimumRate {
            statistic: stat,
            tau: required(config.tau, "tau", kind)?,
        },
        ConstraintKind::MaxRate => Constraint::MaximumRate {
            statistic: stat,
            kappa: required(config.kappa, "kappa", kind)?,
        },
        ConstraintKind::LevelUp | ConstraintKind::PartialLevelUp => {
            let up = if kind == ConstraintKind::LevelUp {
                full_level_up(scored, stat)?
            } else {
                partial_level_up(scored, measure_or_default(config))?
            };
            for s in &up.shortfalls {
                log::warn!(
                    "group {} reaches only {:.4} of target {:.4}",
                    scored.group_names()[s.group],
                    s.achievable,
                    s.target
                );
            }
            let constraint = up.policy.provenance.constraint;
            return Ok((up.policy, constraint));
        }
    };
    Ok((enforce(scored, &constraint)?.policy, constraint))
}

fn audit_options(config: &RunConfig, split: EvaluationSplit) -> AuditOptions {
    AuditOptions {
        split,
        tolerance: config.tolerance.unwrap_or(DEFAULT_TOLERANCE),
        monitored: None,
    }
}

fn write_report(out: &mut Outputs, report: &AuditReport) -> Result<(), CliError> {
    out.write_json("report.json", report)?;
    out.write("report.txt", report.render_text().as_bytes())
}

fn summarize(report: &AuditReport) {
    println!("evaluated on {} split; constraint {}", report.split, report.constraint);
    println!("accuracy {:.4} -> {:.4}", report.accuracy_before, report.accuracy_after);
    for f in &report.levelled_down_groups {
        println!("levelled down: {} {} {:+.4}", f.name, f.statistic, f.delta);
    }
}

pub fn enforce_cmd(config: &RunConfig) -> Result<(), CliError> {
    let (scored, split) = scored(config)?;
    let baseline = enforce(&scored, &Constraint::Unconstrained)?;
    let (policy, constraint) = constrained_policy(config, &scored)?;
    let report = build_report_with(
        &scored,
        &baseline.policy,
        &policy,
        &constraint,
        &audit_options(config, split),
    )?;
    let mut out = Outputs::create(config.out_dir())?;
    out.write_json("policy.json", &policy.to_json(scored.group_names()))?;
    write_report(&mut out, &report)?;
    out.finish("enforce", config)?;
    summarize(&report);
    Ok(())
}

pub fn audit(config: &RunConfig) -> Result<(), CliError> {
    let path = config
        .policy
        .as_ref()
        .ok_or_else(|| CliError::Usage("audit needs --policy".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read policy {}: {e}", path.display())))?;
    let json: serde_json::Value = serde_json::from_str(&text).map_err(levelup_core::Error::from)?;
    let (scored, split) = scored(config)?;
    let policy = ThresholdPolicy::from_json(&json, scored.group_names())?;
    let baseline = enforce(&scored, &Constraint::Unconstrained)?;
    let constraint = policy.provenance.constraint;
    let report = build_report_with(
        &scored,
        &baseline.policy,
        &policy,
        &constraint,
        &audit_options(config, split),
    )?;
    let mut out = Outputs::create(config.out_dir())?;
    write_report(&mut out, &report)?;
    out.finish("audit", config)?;
    summarize(&report);
    Ok(())
}

pub fn frontier(config: &RunConfig) -> Result<(), CliError> {
    let (scored, split) = scored(config)?;
    let resolution = config.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let mode = config.mode.unwrap_or(FrontierMode::Equality);
    let f: Frontier = match mode {
        FrontierMode::Equality => equality_frontier(&scored, measure_or_default(config), resolution)?,
        FrontierMode::MinRate => mrc_frontier(&scored, config.stat.unwrap_or(Statistic::SelectionRate), resolution)?,
    };
    let mut out = Outputs::create(config.out_dir())?;
    for note in &f.notes {
        out.note(note.clone());
    }
    let mut jsonl = Vec::new();
    f.write_jsonl(&mut jsonl)?;
    out.write("frontier.jsonl", &jsonl)?;
    let mut sweep = Vec::new();
    f.write_sweep_jsonl(&mut sweep)?;
    out.write("frontier_sweep.jsonl", &sweep)?;
    let mut tsv = Vec::new();
    f.write_tsv(&mut tsv)?;
    out.write("frontier.tsv", &tsv)?;
    out.finish("frontier", config)?;
    println!(
        "{} frontier points from {} sweep points on the {split} split ({} skipped); perfect point: {}",
        f.points.len(),
        f.sweep.len(),
        f.notes.len(),
        f.has_perfect_point()
    );
    Ok(())
}

pub fn synth(config: &RunConfig) -> Result<(), CliError> {
    let kind = config
        .synth
        .ok_or_else(|| CliError::Usage("synth needs --synth base-rate-gap|rare-event".into()))?;
    let pop = synth_generate(&synth_spec(config, kind))?;
    let mut data = Vec::new();
    levelup_core::ingest::write_csv(&pop.dataset, &mut data)?;
    let mut out = Outputs::create(config.out_dir())?;
    out.write("synth.csv", &data)?;
    out.write("synth_scores.csv", &scores_bytes(&pop.scored())?)?;
    out.finish("synth", config)?;
    println!(
        "{} rows in {} groups, positive fraction {:.4}",
        pop.dataset.len(),
        pop.dataset.num_groups(),
        pop.dataset.positive_fraction()
    );
    Ok(())
}
