use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{DistributionSet, OpinionDistribution, Provenance};
use crate::human::{aggregate_distribution, GroupFilter, HumanError};
use crate::metrics::{
    consistency, contentiousness, entropy, modal_representativeness, representativeness, steerability, ConsistencyRow,
    GroupScore, MetricReport, ProbeDiagnostics, ScoreMatrix, SteeringRow, TopicRow,
};
use crate::probe::mock::{FailingMock, FixedMapMock, GroupMimicMock, OptionTable, UniformMock};
use crate::probe::{
    bound_missing_options, build_prompt_with, extract_distribution, permutation_seed, query_logprobs,
    total_assigned_mass, CompletionsProvider, ContextKind, Counted, InstructionVariant, Presentation, ProbeCache,
    ProbeError, PromptSpec, Provider, ProviderError, QuerySettings, RateLimiter, SteeringContext,
};
use crate::survey::{load_responses, load_survey, DemographicAttribute, Question, ResponsePanel, Survey, Taxonomy};

use super::config::{default_steering_groups, GroupRef, MimicFallback, ModelConfig, ProviderConfig, RunConfig};
use super::emit::emit_tables;
use super::RunError;

/// Loaded surveys with their respondent panels.
pub struct Dataset {
    pub surveys: Vec<Survey>,
    pub panels: Vec<ResponsePanel>,
}

impl Dataset {
    pub fn load(config: &RunConfig) -> Result<Self, RunError> {
        let mut surveys = Vec::new();
        let mut panels = Vec::new();
        let mut qids = HashSet::new();
        for input in &config.surveys {
            let text = std::fs::read_to_string(&input.schema).map_err(|e| RunError::io(&input.schema, e))?;
            let survey = load_survey(&text).map_err(|source| RunError::Survey {
                path: input.schema.clone(),
                source,
            })?;
            for q in &survey.questions {
                if !qids.insert(q.qid.clone()) {
                    return Err(RunError::Config(format!(
                        "question {} appears in more than one survey",
                        q.qid
                    )));
                }
            }
            let file = File::open(&input.microdata).map_err(|e| RunError::io(&input.microdata, e))?;
            let panel = load_responses(file, &survey.questions).map_err(|source| RunError::Survey {
                path: input.microdata.clone(),
                source,
            })?;
            surveys.push(survey);
            panels.push(panel);
        }
        Ok(Self { surveys, panels })
    }

    pub fn from_parts(surveys: Vec<Survey>, panels: Vec<ResponsePanel>) -> Self {
        Self { surveys, panels }
    }

    /// Every question, survey by survey in document order.
    pub fn questions(&self) -> Vec<&Question> {
        self.surveys.iter().flat_map(|s| &s.questions).collect()
    }

    /// Declared attributes, first declaration winning across surveys.
    pub fn attributes(&self) -> Vec<&DemographicAttribute> {
        let mut seen = HashSet::new();
        self.surveys
            .iter()
            .flat_map(|s| &s.demographics)
            .filter(|a| seen.insert(a.name.as_str()))
            .collect()
    }

    pub fn attribute(&self, name: &str) -> Option<&DemographicAttribute> {
        self.surveys.iter().find_map(|s| s.attribute(name))
    }

    pub fn taxonomy(&self) -> Taxonomy {
        let mut topics = Vec::new();
        for s in &self.surveys {
            topics.extend(s.taxonomy().iter().map(str::to_string));
        }
        Taxonomy::new(topics)
    }

    pub fn respondents(&self) -> usize {
        self.panels.iter().map(ResponsePanel::len).sum()
    }

    /// Distributions of one respondent filter over every question, with the
    /// per-question failures.
    pub fn distributions(&self, filter: &GroupFilter, config: &RunConfig) -> (DistributionSet, Vec<HumanError>) {
        let mut set = DistributionSet::new();
        let mut failures = Vec::new();
        for (survey, panel) in self.surveys.iter().zip(&self.panels) {
            for q in &survey.questions {
                match aggregate_distribution(panel, q, filter, config.weighting) {
                    Ok(d) => {
                        set.insert(q.qid.clone(), d);
                    }
                    Err(e) => failures.push(e),
                }
            }
        }
        (set, failures)
    }

    /// Unweighted mean over questions offering refusal of the filter's
    /// refusal rate; a question everyone refused counts as one.
    pub fn refusal_rate(&self, filter: &GroupFilter, config: &RunConfig) -> Option<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for (survey, panel) in self.surveys.iter().zip(&self.panels) {
            for q in survey.questions.iter().filter(|q| q.has_refusal()) {
                let rate = match aggregate_distribution(panel, q, filter, config.weighting) {
                    Ok(d) => d.refusal_rate.unwrap_or(0.0),
                    Err(HumanError::AllRefused { .. }) => 1.0,
                    Err(_) => continue,
                };
                total += rate;
                count += 1;
            }
        }
        (count > 0).then(|| total / count as f64)
    }
}

/// Human opinion distributions for every filter the run needs.
pub struct HumanTables {
    pub overall: DistributionSet,
    pub groups: BTreeMap<GroupRef, DistributionSet>,
    /// (filter, qid, reason) for cells that could not be aggregated.
    pub failures: Vec<(String, String, String)>,
}

/// Everything derived from the surveys before any model is queried.
pub struct Study {
    pub config: RunConfig,
    pub dataset: Dataset,
    /// Groups reported in the representativeness and consistency tables.
    pub report_groups: Vec<GroupRef>,
    pub steering_groups: Vec<GroupRef>,
    pub humans: HumanTables,
    /// Most contentious questions, in question order.
    pub subset: Vec<String>,
    /// Rendered steering context per (steering group index, context).
    pub contexts: BTreeMap<(usize, ContextKind), SteeringContext>,
}

fn resolve(dataset: &Dataset, group: &GroupRef) -> bool {
    dataset
        .attribute(&group.attribute)
        .is_some_and(|a| a.has_group(&group.group))
}

fn resolve_explicit(dataset: &Dataset, groups: &[GroupRef], what: &str) -> Result<Vec<GroupRef>, RunError> {
    let mut out = Vec::new();
    for g in groups {
        if !resolve(dataset, g) {
            return Err(RunError::Config(format!(
                "{what} group {g} is not declared by any survey"
            )));
        }
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    Ok(out)
}

impl Study {
    /// Ingests the surveys, builds human distributions and selects the
    /// steering subset.
    pub fn prepare(config: RunConfig) -> Result<Self, RunError> {
        let dataset = Dataset::load(&config)?;
        Self::from_dataset(config, dataset)
    }

    pub fn from_dataset(config: RunConfig, dataset: Dataset) -> Result<Self, RunError> {
        let report_groups = match &config.groups {
            Some(groups) => resolve_explicit(&dataset, groups, "report")?,
            None => dataset
                .attributes()
                .iter()
                .flat_map(|a| a.groups.iter().map(|g| GroupRef::new(a.name.clone(), g.clone())))
                .collect(),
        };
        let steering_groups = match &config.steering_groups {
            Some(groups) => resolve_explicit(&dataset, groups, "steering")?,
            None => default_steering_groups()
                .into_iter()
                .filter(|g| {
                    let ok = resolve(&dataset, g);
                    if !ok {
                        log::warn!("default steering group {g} is not declared by the loaded surveys; skipped");
                    }
                    ok
                })
                .collect(),
        };

        let mut contexts = BTreeMap::new();
        for (i, g) in steering_groups.iter().enumerate() {
            let attribute = dataset.attribute(&g.attribute).expect("resolved above");
            for &kind in &config.contexts {
                let ctx = config
                    .prompt
                    .templates
                    .render(kind, attribute, &g.group)
                    .map_err(|e| RunError::Config(format!("steering context for {g}: {e}")))?;
                contexts.insert((i, kind), ctx);
            }
        }

        let (overall, mut failures) = dataset.distributions(&GroupFilter::All, &config);
        let mut failure_rows: Vec<(String, String, String)> = Vec::new();
        let record = |rows: &mut Vec<(String, String, String)>, filter: &str, errs: Vec<HumanError>| {
            for e in errs {
                let qid = match &e {
                    HumanError::EmptyCell { qid, .. } | HumanError::AllRefused { qid, .. } => qid.clone(),
                    _ => String::new(),
                };
                rows.push((filter.to_string(), qid, e.to_string()));
            }
        };
        record(&mut failure_rows, "overall", std::mem::take(&mut failures));
        let mut groups = BTreeMap::new();
        for g in report_groups.iter().chain(&steering_groups) {
            if groups.contains_key(g) {
                continue;
            }
            let (set, errs) = dataset.distributions(&GroupFilter::group(&g.attribute, &g.group), &config);
            record(&mut failure_rows, &g.to_string(), errs);
            groups.insert(g.clone(), set);
        }
        let humans = HumanTables {
            overall,
            groups,
            failures: failure_rows,
        };
        let subset = contentious_subset(&dataset, &humans, &steering_groups, config.steering_subset_size);
        Ok(Self {
            config,
            dataset,
            report_groups,
            steering_groups,
            humans,
            subset,
            contexts,
        })
    }

    pub fn group_distributions(&self, group: &GroupRef) -> DistributionSet {
        match self.humans.groups.get(group) {
            Some(set) => set.clone(),
            None => {
                self.dataset
                    .distributions(&GroupFilter::group(&group.attribute, &group.group), &self.config)
                    .0
            }
        }
    }

    pub fn subset_questions(&self) -> Vec<&Question> {
        let ids: HashSet<&str> = self.subset.iter().map(String::as_str).collect();
        self.dataset
            .questions()
            .into_iter()
            .filter(|q| ids.contains(q.qid.as_str()))
            .collect()
    }
}

/// The `size` questions on which the steering groups disagree most, ranked
/// by mean pairwise normalized distance with ties kept in question order.
fn contentious_subset(dataset: &Dataset, humans: &HumanTables, groups: &[GroupRef], size: usize) -> Vec<String> {
    let questions = dataset.questions();
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, q) in questions.iter().enumerate() {
        let dists: Vec<&[f64]> = groups
            .iter()
            .filter_map(|g| humans.groups.get(g)?.get(&q.qid))
            .map(|d| d.probs.as_slice())
            .collect();
        if let Ok(score) = contentiousness(q, &dists) {
            scored.push((i, score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(size);
    scored.sort_by_key(|(i, _)| *i);
    scored.into_iter().map(|(i, _)| questions[i].qid.clone()).collect()
}

/// Instantiates the provider named in a model config.
///
/// Offline, a missing API key is tolerated: the provider is only used to
/// derive cache keys and is never called.
pub fn build_provider(model: &ModelConfig, study: &Study, mode: RunMode) -> Result<Box<dyn Provider>, RunError> {
    let provider: Box<dyn Provider> = match &model.provider {
        ProviderConfig::Completions {
            base_url,
            api_key_env,
            timeout_secs,
        } => {
            let timeout = Duration::from_secs(*timeout_secs);
            Box::new(
                match (
                    CompletionsProvider::from_env(&model.id, base_url, api_key_env, timeout),
                    mode,
                ) {
                    (Ok(p), _) => p,
                    (Err(_), RunMode::Offline) => CompletionsProvider::new(&model.id, base_url, String::new(), timeout),
                    (Err(e), RunMode::Online) => return Err(RunError::Config(format!("{}: {e}", model.id))),
                },
            )
        }
        ProviderConfig::Uniform => Box::new(UniformMock::new(&model.id)),
        ProviderConfig::Fixed { logprobs } => Box::new(FixedMapMock::new(&model.id, logprobs.clone())),
        ProviderConfig::Failing { message } => {
            Box::new(FailingMock::new(&model.id, ProviderError::Api(message.clone())))
        }
        ProviderConfig::GroupMimic {
            attribute,
            group,
            steerable,
            fallback,
        } => {
            let target = GroupRef::new(attribute, group);
            let Some(attr) = study.dataset.attribute(attribute).filter(|a| a.has_group(group)) else {
                return Err(RunError::Config(format!(
                    "{}: group {target} is not declared",
                    model.id
                )));
            };
            let questions: Vec<Question> = study.dataset.questions().into_iter().cloned().collect();
            let table = OptionTable::from_distributions(&questions, &study.group_distributions(&target));
            let mut mock = GroupMimicMock::new(&model.id, table).with_score_token(&study.config.prompt.score_token);
            if *steerable {
                let mut triggers = Vec::new();
                for &kind in &ContextKind::STEERING {
                    let ctx = study
                        .config
                        .prompt
                        .templates
                        .render(kind, attr, group)
                        .map_err(|e| RunError::Config(format!("{}: {e}", model.id)))?;
                    triggers.push(ctx.rendered_text);
                }
                mock = mock.steered_by(triggers);
                if *fallback == MimicFallback::Overall {
                    mock = mock.with_fallback(OptionTable::from_distributions(&questions, &study.humans.overall));
                }
            }
            Box::new(mock)
        }
    };
    Ok(provider)
}

/// One provider per configured model; a model whose provider cannot be
/// built carries the reason instead.
pub fn build_providers(study: &Study, mode: RunMode) -> Vec<(String, Result<Box<dyn Provider>, String>)> {
    study
        .config
        .models
        .iter()
        .map(|m| (m.id.clone(), build_provider(m, study, mode).map_err(|e| e.to_string())))
        .collect()
}

/// Which family of prompts a probe belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Arm {
    Default,
    Steer { group: usize, kind: ContextKind },
    Permuted,
    Instruction(InstructionVariant),
}

/// One failed probe or unusable model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub model_id: String,
    pub qid: String,
    pub context: String,
    pub message: String,
}

/// Model distributions from every arm of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProbes {
    pub model_id: String,
    pub default: DistributionSet,
    pub steered: BTreeMap<usize, BTreeMap<ContextKind, DistributionSet>>,
    pub permuted: DistributionSet,
    pub instructions: BTreeMap<InstructionVariant, DistributionSet>,
    pub diagnostics: ProbeDiagnostics,
    pub errors: Vec<ErrorRow>,
}

impl ModelProbes {
    fn new(model_id: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            default: DistributionSet::new(),
            steered: BTreeMap::new(),
            permuted: DistributionSet::new(),
            instructions: BTreeMap::new(),
            diagnostics: ProbeDiagnostics::default(),
            errors: Vec::new(),
        }
    }
}

struct Job<'a> {
    model: usize,
    arm: Arm,
    question: &'a Question,
    prompt: PromptSpec,
}

struct Outcome {
    dist: OpinionDistribution,
    mass: f64,
    bounded: usize,
    shared: bool,
}

impl Study {
    fn arm_label(&self, arm: Arm) -> String {
        match arm {
            Arm::Default => "default".into(),
            Arm::Steer { group, kind } => self.contexts[&(group, kind)].tag(),
            Arm::Permuted => "permuted".into(),
            Arm::Instruction(v) => format!("instruction:{}", v.name()),
        }
    }

    fn jobs(&self, model: usize) -> Vec<Job<'_>> {
        let instruction = self.config.prompt.instruction;
        let none = SteeringContext::none();
        let all = self.dataset.questions();
        let mut jobs = Vec::new();
        for q in &all {
            jobs.push(job(
                model,
                Arm::Default,
                q,
                &none,
                instruction,
                Presentation::identity(q),
            ));
        }
        let subset = self.subset_questions();
        for (&(group, kind), ctx) in &self.contexts {
            for q in &subset {
                jobs.push(job(
                    model,
                    Arm::Steer { group, kind },
                    q,
                    ctx,
                    instruction,
                    Presentation::identity(q),
                ));
            }
        }
        if self.config.robustness.permute {
            for q in &all {
                let seed = permutation_seed(self.config.robustness.seed, &q.qid);
                jobs.push(job(
                    model,
                    Arm::Permuted,
                    q,
                    &none,
                    instruction,
                    Presentation::seeded(q, seed),
                ));
            }
        }
        for &variant in &self.config.robustness.instruction_variants {
            for q in &all {
                jobs.push(job(
                    model,
                    Arm::Instruction(variant),
                    q,
                    &none,
                    variant,
                    Presentation::identity(q),
                ));
            }
        }
        jobs
    }
}

fn job<'a>(
    model: usize,
    arm: Arm,
    question: &'a Question,
    context: &SteeringContext,
    instruction: InstructionVariant,
    presentation: Presentation,
) -> Job<'a> {
    Job {
        model,
        arm,
        question,
        prompt: build_prompt_with(question, context, instruction, presentation),
    }
}

fn probe_one(
    provider: &dyn Provider,
    job: &Job<'_>,
    label: String,
    cache: &ProbeCache,
    settings: &QuerySettings,
) -> Result<Outcome, ProbeError> {
    let result = query_logprobs(provider, &job.prompt, cache, settings)?;
    let presentation = &job.prompt.presentation;
    let bounded = bound_missing_options(&result, &presentation.expected_labels())?;
    let provenance = Provenance::Model {
        model_id: provider.model_id().to_string(),
        context: label,
    };
    let dist = extract_distribution(&bounded.logprobs, job.question, presentation, provenance)?;
    Ok(Outcome {
        dist,
        mass: total_assigned_mass(&result, presentation),
        bounded: bounded.bounded.len(),
        shared: bounded.shared,
    })
}

/// Whether probes may call providers or must be served from the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Online,
    Offline,
}

/// Runs every probe of every model, fanning out over a pool of
/// `max_in_flight` workers. Failures are recorded per (model, question,
/// context) and never abort the run. Returns the probes and the number of
/// provider calls made.
pub fn probe_models(
    study: &Study,
    providers: Vec<(String, Result<Box<dyn Provider>, String>)>,
    cache: &ProbeCache,
    mode: RunMode,
) -> (Vec<ModelProbes>, usize) {
    let config = &study.config;
    let mut probes: Vec<ModelProbes> = providers.iter().map(|(id, _)| ModelProbes::new(id)).collect();
    let mut counted: Vec<Option<Counted<Box<dyn Provider>>>> = Vec::new();
    let mut settings = Vec::new();
    for (i, (id, provider)) in providers.into_iter().enumerate() {
        let top_k = config.models.iter().find(|m| m.id == id).map_or(100, |m| m.top_k);
        settings.push(QuerySettings {
            top_k,
            score_token: config.prompt.score_token.clone(),
            retry: config.concurrency.retry,
            rate_limiter: config
                .concurrency
                .requests_per_second
                .map(|rps| Arc::new(RateLimiter::new(rps, config.concurrency.max_in_flight as u32))),
            offline: mode == RunMode::Offline,
        });
        match provider {
            Ok(p) => counted.push(Some(Counted::new(p))),
            Err(message) => {
                log::error!("{id}: {message}");
                probes[i].errors.push(ErrorRow {
                    model_id: id,
                    qid: String::new(),
                    context: String::new(),
                    message,
                });
                counted.push(None);
            }
        }
    }

    let jobs: Vec<Job<'_>> = (0..counted.len())
        .filter(|&m| counted[m].is_some())
        .flat_map(|m| study.jobs(m))
        .collect();
    let labels: Vec<String> = jobs.iter().map(|j| study.arm_label(j.arm)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.concurrency.max_in_flight)
        .build()
        .expect("thread pool");
    let outcomes: Vec<Result<Outcome, ProbeError>> = pool.install(|| {
        jobs.par_iter()
            .zip(labels.par_iter())
            .map(|(job, label)| {
                let provider = counted[job.model].as_ref().expect("only live models get jobs");
                probe_one(provider, job, label.clone(), cache, &settings[job.model])
            })
            .collect()
    });

    let mut masses: Vec<Vec<f64>> = vec![Vec::new(); probes.len()];
    for ((job, label), outcome) in jobs.iter().zip(labels).zip(outcomes) {
        let model = &mut probes[job.model];
        let qid = job.question.qid.clone();
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                if job.arm == Arm::Default {
                    model.diagnostics.failed += 1;
                }
                model.errors.push(ErrorRow {
                    model_id: model.model_id.clone(),
                    qid,
                    context: label,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match job.arm {
            Arm::Default => {
                let d = &mut model.diagnostics;
                d.probed += 1;
                d.bounded_labels += outcome.bounded;
                d.shared_bounds += usize::from(outcome.shared);
                masses[job.model].push(outcome.mass);
                model.default.insert(qid, outcome.dist);
            }
            Arm::Steer { group, kind } => {
                model
                    .steered
                    .entry(group)
                    .or_default()
                    .entry(kind)
                    .or_default()
                    .insert(qid, outcome.dist);
            }
            Arm::Permuted => {
                model.permuted.insert(qid, outcome.dist);
            }
            Arm::Instruction(v) => {
                model.instructions.entry(v).or_default().insert(qid, outcome.dist);
            }
        }
    }
    let questions = study.dataset.questions().len();
    for (model, masses) in probes.iter_mut().zip(masses) {
        let d = &mut model.diagnostics;
        d.questions = questions;
        if !masses.is_empty() {
            d.mean_mass = Some(masses.iter().sum::<f64>() / masses.len() as f64);
            d.min_mass = masses.iter().copied().reduce(f64::min);
            d.max_mass = masses.iter().copied().reduce(f64::max);
        }
    }
    let calls = counted.iter().flatten().map(Counted::calls).sum();
    (probes, calls)
}

/// Standard-prompt representativeness next to the robustness reruns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Robustness {
    pub standard_r: Option<f64>,
    pub permuted_r: Option<f64>,
    pub instructions: BTreeMap<InstructionVariant, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelResults {
    pub report: MetricReport,
    pub robustness: Robustness,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Computes every metric for one model's probes.
pub fn compute_results(study: &Study, probes: &ModelProbes) -> ModelResults {
    let questions = study.dataset.questions();
    let r = |model: &DistributionSet, reference: &DistributionSet, qs: &[&Question]| {
        representativeness(model, reference, qs).ok().map(|s| s.value)
    };
    let empty = DistributionSet::new();
    let group_set = |g: &GroupRef| study.humans.groups.get(g).unwrap_or(&empty);

    let mut report = MetricReport::empty(&probes.model_id);
    report.overall_r = r(&probes.default, &study.humans.overall, &questions);
    for g in &study.report_groups {
        report.group_r.push(GroupScore {
            attribute: g.attribute.clone(),
            group: g.group.clone(),
            value: r(&probes.default, group_set(g), &questions),
        });
        report.modal_r.push(GroupScore {
            attribute: g.attribute.clone(),
            group: g.group.clone(),
            value: modal_representativeness(
                &probes.default,
                group_set(g),
                &questions,
                study.config.modal_temperature,
            )
            .ok()
            .map(|s| s.value),
        });
    }

    let subset = study.subset_questions();
    let no_contexts = BTreeMap::new();
    for (i, g) in study.steering_groups.iter().enumerate() {
        let target = group_set(g);
        let steered = steerability(probes.steered.get(&i).unwrap_or(&no_contexts), target, &subset).ok();
        report.steering.push(SteeringRow {
            attribute: g.attribute.clone(),
            group: g.group.clone(),
            default_r: r(&probes.default, target, &subset),
            steered: steered.as_ref().map(|s| s.value),
            per_context: steered.as_ref().map(|s| s.per_context.clone()).unwrap_or_default(),
            best_context: steered.map(|s| s.best_context).unwrap_or_default(),
        });
    }

    let taxonomy = study.dataset.taxonomy();
    let mut attributes: Vec<&str> = Vec::new();
    for g in &study.report_groups {
        if !attributes.contains(&g.attribute.as_str()) {
            attributes.push(&g.attribute);
        }
    }
    for attribute in attributes {
        let groups: Vec<&GroupRef> = study
            .report_groups
            .iter()
            .filter(|g| g.attribute == attribute)
            .collect();
        if groups.len() < 2 {
            continue;
        }
        let mut topics = Vec::new();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        let mut dropped = 0usize;
        for topic in taxonomy.iter() {
            let qs: Vec<&Question> = questions.iter().copied().filter(|q| q.has_topic(topic)).collect();
            let column: Option<Vec<f64>> = groups.iter().map(|g| r(&probes.default, group_set(g), &qs)).collect();
            match column {
                Some(c) => {
                    topics.push(topic.to_string());
                    columns.push(c);
                }
                None => dropped += 1,
            }
        }
        if topics.is_empty() {
            log::warn!(
                "{}: no topic scored for every {attribute} group; consistency skipped",
                probes.model_id
            );
            continue;
        }
        let rows: Vec<Vec<f64>> = (0..groups.len())
            .map(|g| columns.iter().map(|c| c[g]).collect())
            .collect();
        let names: Vec<String> = groups.iter().map(|g| g.group.clone()).collect();
        let Ok(c) = consistency(&ScoreMatrix::from_rows(names, topics, rows)) else {
            continue;
        };
        report.consistency.push(ConsistencyRow {
            attribute: attribute.to_string(),
            score: c.score,
            best_group: c.best_group.clone(),
            dropped_topics: dropped,
        });
        for t in c.per_topic {
            report.topics.push(TopicRow {
                attribute: attribute.to_string(),
                topic: t.topic,
                group: t.group,
                alpha: t.alpha,
            });
        }
    }

    report.mean_entropy = mean(probes.default.values().map(|d| entropy(&d.probs)));
    report.refusal_rate = mean(probes.default.values().filter_map(|d| d.refusal_rate));
    report.diagnostics = probes.diagnostics.clone();
    if let Err(e) = report.check() {
        log::error!("{}: report invariant violated: {e}", probes.model_id);
    }

    let robustness = Robustness {
        standard_r: report.overall_r,
        permuted_r: study
            .config
            .robustness
            .permute
            .then(|| r(&probes.permuted, &study.humans.overall, &questions))
            .flatten(),
        instructions: study
            .config
            .robustness
            .instruction_variants
            .iter()
            .map(|v| {
                let set = probes.instructions.get(v).unwrap_or(&empty);
                (*v, r(set, &study.humans.overall, &questions))
            })
            .collect(),
    };
    ModelResults { report, robustness }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub provider_calls: usize,
    pub errors: usize,
    pub results: Vec<ModelResults>,
}

/// Full pipeline: ingest, human distributions, probes, metrics, tables.
pub fn run(config: &RunConfig, mode: RunMode) -> Result<RunSummary, RunError> {
    let study = Study::prepare(config.clone())?;
    let cache_path = config.cache_file();
    let cache = ProbeCache::open(&cache_path).map_err(|e| RunError::io(&cache_path, e))?;
    let providers = build_providers(&study, mode);
    let (probes, calls) = probe_models(&study, providers, &cache, mode);
    let results: Vec<ModelResults> = probes.iter().map(|p| compute_results(&study, p)).collect();
    let files = emit_tables(&study, &probes, &results, &config.output_dir)?;
    Ok(RunSummary {
        output_dir: config.output_dir.clone(),
        files,
        provider_calls: calls,
        errors: probes.iter().map(|p| p.errors.len()).sum(),
        results,
    })
}
