use std::path::{Path, PathBuf};

use serde_json::json;

use crate::distribution::OpinionDistribution;
use crate::human::GroupFilter;
use crate::metrics::{entropy, representativeness};

use super::pipeline::{ErrorRow, ModelProbes, ModelResults, Study};
use super::RunError;

/// The tables every run with at least one model writes.
pub const TABLES: [&str; 7] = [
    "representativeness.csv",
    "steerability.csv",
    "consistency.csv",
    "topic_best_group.csv",
    "refusal.csv",
    "entropy.csv",
    "diagnostics.csv",
];

/// Six decimals, with negative zero printed as zero.
pub fn format_float(value: f64) -> String {
    let s = format!("{value:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<PathBuf, RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes distributions as `qid, provenance, refusal_rate, p_1..p_N`,
/// padding short rows.
pub fn write_distributions<'a>(
    path: &Path,
    dists: impl IntoIterator<Item = &'a OpinionDistribution>,
) -> Result<PathBuf, RunError> {
    let dists: Vec<&OpinionDistribution> = dists.into_iter().collect();
    let width = dists.iter().map(|d| d.probs.len()).max().unwrap_or(0);
    let mut head = header(&["qid", "provenance", "refusal_rate"]);
    head.extend((1..=width).map(|i| format!("p_{i}")));
    let rows = dists
        .iter()
        .map(|d| {
            let mut row = vec![d.qid.clone(), d.provenance.to_string(), opt(d.refusal_rate)];
            row.extend(d.probs.iter().map(|p| format_float(*p)));
            row.resize(3 + width, String::new());
            row
        })
        .collect();
    write_csv(path, head, rows)
}

pub fn write_errors<'a>(path: &Path, errors: impl IntoIterator<Item = &'a ErrorRow>) -> Result<PathBuf, RunError> {
    let rows = errors
        .into_iter()
        .map(|e| vec![e.model_id.clone(), e.qid.clone(), e.context.clone(), e.message.clone()])
        .collect();
    write_csv(path, header(&["model", "qid", "context", "error"]), rows)
}

/// Human distributions, per-group alignment to the overall population and
/// aggregation failures.
pub fn write_human_tables(study: &Study, outdir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let humans = &study.humans;
    let mut files = Vec::new();
    let all = humans
        .overall
        .values()
        .chain(humans.groups.values().flat_map(|s| s.values()));
    files.push(write_distributions(&outdir.join("human_distributions.csv"), all)?);

    let questions = study.dataset.questions();
    let mut rows = Vec::new();
    for g in &study.report_groups {
        let (value, used) = match humans
            .groups
            .get(g)
            .map(|set| representativeness(set, &humans.overall, &questions))
        {
            Some(Ok(s)) => (Some(s.value), s.questions),
            _ => (None, 0),
        };
        rows.push(vec![g.attribute.clone(), g.group.clone(), opt(value), used.to_string()]);
    }
    files.push(write_csv(
        &outdir.join("human_baselines.csv"),
        header(&["attribute", "group", "alignment_to_overall", "questions"]),
        rows,
    )?);

    let rows = humans
        .failures
        .iter()
        .map(|(filter, qid, reason)| vec![filter.clone(), qid.clone(), reason.clone()])
        .collect();
    files.push(write_csv(
        &outdir.join("human_failures.csv"),
        header(&["filter", "qid", "reason"]),
        rows,
    )?);
    Ok(files)
}

fn write_manifest(
    study: &Study,
    results: &[ModelResults],
    tables: &[String],
    outdir: &Path,
) -> Result<PathBuf, RunError> {
    let config = &study.config;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config.hash(),
        "seed": config.robustness.seed,
        "weighting": config.weighting,
        "modal_temperature": config.modal_temperature,
        "templates_version": config.prompt.templates.version,
        "surveys": study.dataset.surveys.iter().map(|s| s.survey_id.as_str()).collect::<Vec<_>>(),
        "questions": study.dataset.questions().len(),
        "respondents": study.dataset.respondents(),
        "models": results.iter().map(|r| r.report.model_id.as_str()).collect::<Vec<_>>(),
        "steering_groups": study.steering_groups.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "steering_subset": study.subset,
        "tables": tables,
    });
    let path = outdir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    Ok(path)
}

/// Writes every table for a finished run, then the manifest. With no
/// models only the manifest is written.
pub fn emit_tables(
    study: &Study,
    probes: &[ModelProbes],
    results: &[ModelResults],
    outdir: &Path,
) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(outdir).map_err(|e| RunError::io(outdir, e))?;
    if results.is_empty() {
        log::warn!("no models configured; writing the manifest only");
        return Ok(vec![write_manifest(study, results, &[], outdir)?]);
    }
    let mut files = Vec::new();
    let groups = &study.report_groups;

    let score_table = |name: &str, modal: bool| {
        let mut head = if modal {
            header(&["model"])
        } else {
            header(&["model", "overall"])
        };
        head.extend(groups.iter().map(|g| g.to_string()));
        let rows = results
            .iter()
            .map(|r| {
                let rep = &r.report;
                let scores = if modal { &rep.modal_r } else { &rep.group_r };
                let mut row = vec![rep.model_id.clone()];
                if !modal {
                    row.push(opt(rep.overall_r));
                }
                row.extend(scores.iter().map(|s| opt(s.value)));
                row
            })
            .collect();
        write_csv(&outdir.join(name), head, rows)
    };
    files.push(score_table("representativeness.csv", false)?);
    files.push(score_table("modal_representativeness.csv", true)?);

    let contexts = &study.config.contexts;
    let mut head = header(&["model", "attribute", "group", "default_r", "steered"]);
    head.extend(contexts.iter().map(|c| format!("{c}_mean")));
    head.extend(contexts.iter().map(|c| format!("{c}_best")));
    let mut rows = Vec::new();
    for r in results {
        for s in &r.report.steering {
            let mut row = vec![
                r.report.model_id.clone(),
                s.attribute.clone(),
                s.group.clone(),
                opt(s.default_r),
                opt(s.steered),
            ];
            row.extend(contexts.iter().map(|c| opt(s.per_context.get(c).copied())));
            row.extend(
                contexts
                    .iter()
                    .map(|c| s.best_context.get(c).copied().unwrap_or(0).to_string()),
            );
            rows.push(row);
        }
    }
    files.push(write_csv(&outdir.join("steerability.csv"), head, rows)?);

    let rows = results
        .iter()
        .flat_map(|r| {
            r.report.consistency.iter().map(|c| {
                vec![
                    r.report.model_id.clone(),
                    c.attribute.clone(),
                    format_float(c.score),
                    c.best_group.clone(),
                    c.dropped_topics.to_string(),
                ]
            })
        })
        .collect();
    files.push(write_csv(
        &outdir.join("consistency.csv"),
        header(&["model", "attribute", "consistency", "best_group", "dropped_topics"]),
        rows,
    )?);

    let rows = results
        .iter()
        .flat_map(|r| {
            r.report.topics.iter().map(|t| {
                vec![
                    r.report.model_id.clone(),
                    t.attribute.clone(),
                    t.topic.clone(),
                    t.group.clone(),
                    opt(t.alpha),
                ]
            })
        })
        .collect();
    files.push(write_csv(
        &outdir.join("topic_best_group.csv"),
        header(&["model", "attribute", "topic", "best_group", "alpha"]),
        rows,
    )?);

    let humans = &study.humans;
    let human_filters: Vec<(String, GroupFilter)> = std::iter::once(("human-overall".to_string(), GroupFilter::All))
        .chain(
            groups
                .iter()
                .map(|g| (format!("human-group({g})"), GroupFilter::group(&g.attribute, &g.group))),
        )
        .collect();
    let mut rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.report.model_id.clone(), "model".into(), opt(r.report.refusal_rate)])
        .collect();
    for (name, filter) in &human_filters {
        let rate = study.dataset.refusal_rate(filter, &study.config);
        rows.push(vec![name.clone(), "human".into(), opt(rate)]);
    }
    files.push(write_csv(
        &outdir.join("refusal.csv"),
        header(&["source", "kind", "refusal_rate"]),
        rows,
    )?);

    let mean_entropy = |set: &crate::distribution::DistributionSet| {
        (!set.is_empty()).then(|| set.values().map(|d| entropy(&d.probs)).sum::<f64>() / set.len() as f64)
    };
    let mut rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.report.model_id.clone(), "model".into(), opt(r.report.mean_entropy)])
        .collect();
    rows.push(vec![
        "human-overall".into(),
        "human".into(),
        opt(mean_entropy(&humans.overall)),
    ]);
    for g in groups {
        let value = humans.groups.get(g).and_then(mean_entropy);
        rows.push(vec![format!("human-group({g})"), "human".into(), opt(value)]);
    }
    files.push(write_csv(
        &outdir.join("entropy.csv"),
        header(&["source", "kind", "mean_entropy"]),
        rows,
    )?);

    let rows = results
        .iter()
        .map(|r| {
            let d = &r.report.diagnostics;
            vec![
                r.report.model_id.clone(),
                d.questions.to_string(),
                d.probed.to_string(),
                d.failed.to_string(),
                opt(d.mean_mass),
                opt(d.min_mass),
                opt(d.max_mass),
                d.bounded_labels.to_string(),
                d.shared_bounds.to_string(),
            ]
        })
        .collect();
    files.push(write_csv(
        &outdir.join("diagnostics.csv"),
        header(&[
            "model",
            "questions",
            "probed",
            "failed",
            "mean_assigned_mass",
            "min_assigned_mass",
            "max_assigned_mass",
            "bounded_labels",
            "shared_bounds",
        ]),
        rows,
    )?);

    files.push(write_errors(
        &outdir.join("errors.csv"),
        probes.iter().flat_map(|p| &p.errors),
    )?);
    let model_dists = probes.iter().flat_map(|p| {
        p.default
            .values()
            .chain(
                p.steered
                    .values()
                    .flat_map(|by_ctx| by_ctx.values().flat_map(|s| s.values())),
            )
            .chain(p.permuted.values())
            .chain(p.instructions.values().flat_map(|s| s.values()))
    });
    files.push(write_distributions(
        &outdir.join("model_distributions.csv"),
        model_dists,
    )?);
    files.extend(write_human_tables(study, outdir)?);

    let robustness = &study.config.robustness;
    if robustness.permute {
        let rows = results
            .iter()
            .map(|r| {
                let rb = &r.robustness;
                let delta = rb.permuted_r.zip(rb.standard_r).map(|(p, s)| p - s);
                vec![
                    r.report.model_id.clone(),
                    opt(rb.standard_r),
                    opt(rb.permuted_r),
                    opt(delta),
                ]
            })
            .collect();
        files.push(write_csv(
            &outdir.join("robustness").join("permutation.csv"),
            header(&["model", "standard_r", "permuted_r", "delta"]),
            rows,
        )?);
    }
    if !robustness.instruction_variants.is_empty() {
        let mut rows = Vec::new();
        for r in results {
            let rb = &r.robustness;
            for (variant, value) in &rb.instructions {
                let delta = value.zip(rb.standard_r).map(|(v, s)| v - s);
                rows.push(vec![
                    r.report.model_id.clone(),
                    variant.name().to_string(),
                    opt(*value),
                    opt(delta),
                ]);
            }
        }
        files.push(write_csv(
            &outdir.join("robustness").join("instructions.csv"),
            header(&["model", "instruction", "r", "delta"]),
            rows,
        )?);
    }

    let mut names: Vec<String> = files
        .iter()
        .map(|f| f.strip_prefix(outdir).unwrap_or(f).to_string_lossy().replace('\\', "/"))
        .collect();
    names.sort();
    files.push(write_manifest(study, results, &names, outdir)?);
    Ok(files)
}
