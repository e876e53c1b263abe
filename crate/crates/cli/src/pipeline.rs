//! The batch pipeline: restrict, matrices, extraction, sealing, diagnostics,
//! tightness. Produces one machine-readable verdict and optional artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use moment_core::algebra::varmap;
use moment_core::{
    asymptotics, check_support, extract_best, flatness, moment_matrix, psd_check, AtomicMeasure,
    ExactnessReport, ExtractionOptions, FlatnessReport, Marginal, MomentFunctional, Polynomial,
    ProductMarginal, ProjectiveFamily, PsdReport, SealedFamily, SplitReport,
    Source, TightnessCertificate, VariableSet,
};

use crate::job::{Command, PreparedJob};
use crate::report;

/// How far the pipeline runs; later stages include the earlier ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Check,
    Solve,
    Verify,
    Report,
}

impl From<Command> for Stage {
    fn from(command: Command) -> Self {
        match command {
            Command::Check => Stage::Check,
            Command::Solve => Stage::Solve,
            Command::Verify => Stage::Verify,
            Command::Report => Stage::Report,
        }
    }
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Check => "check",
            Stage::Solve => "solve",
            Stage::Verify => "verify",
            Stage::Report => "report",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub stage: Stage,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub dump_matrices: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    /// Sealed exact family of extracted measures plus a tightness certificate.
    RepresentingMeasureConstructed,
    /// Closed-form marginals with covering determinacy diagnostics and tightness.
    ConditionsCertified,
    /// Some PSD necessary condition failed: no representing measure exists for
    /// that subalgebra, hence none for the full functional.
    NecessaryConditionFailed,
    Inconclusive,
}

impl Overall {
    pub fn exit_code(self) -> i32 {
        match self {
            Overall::RepresentingMeasureConstructed | Overall::ConditionsCertified => 0,
            Overall::NecessaryConditionFailed => 2,
            Overall::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdEntry {
    /// Shift polynomial of the matrix; `"1"` for the plain moment matrix.
    pub shift: String,
    pub order: u32,
    #[serde(flatten)]
    pub report: PsdReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    Extracted,
    ClosedForm,
    Missing,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub variables: VariableSet,
    /// Truncation order the PSD checks ran at.
    pub truncation_order: u32,
    pub psd: Vec<PsdEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flatness: Option<FlatnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_order: Option<u32>,
    pub marginal_kind: MarginalKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Marginal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineVerdict {
    pub command: String,
    pub seed: u64,
    pub overall: Overall,
    pub per_index: Vec<IndexReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exactness: Option<ExactnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub well_definedness_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_trials: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tightness: Option<TightnessCertificate>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_optional_schedule"
    )]
    pub suggested_schedule: Option<BTreeMap<u32, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitReport>,
    pub notes: Vec<String>,
}

fn serialize_optional_schedule<S: serde::Serializer>(
    value: &Option<BTreeMap<u32, f64>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match value {
        Some(map) => varmap::serialize(map, s),
        None => s.serialize_none(),
    }
}

struct IndexOutcome {
    report: IndexReport,
    marginal: Option<Marginal>,
    csv_dumps: Vec<(String, String)>,
}

/// Runs the pipeline on a prepared job and writes artifacts when an output
/// directory is configured. The caller maps [`Overall`] to the exit code.
pub fn run(job: &PreparedJob, config: &RunConfig) -> anyhow::Result<PipelineVerdict> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .context("building the worker pool")?;

    let mut notes: Vec<String> = Vec::new();
    for added in &job.closure_added {
        notes.push(format!(
            "index list closed under union: added {added}"
        ));
    }

    let stage: Stage = config.stage;
    let solve = stage >= Stage::Solve;

    let outcomes: Vec<anyhow::Result<IndexOutcome>> = pool.install(|| {
        use rayon::prelude::*;
        job.indices
            .par_iter()
            .enumerate()
            .map(|(position, set)| run_index(job, config, position, set, solve))
            .collect()
    });

    let mut per_index = Vec::with_capacity(outcomes.len());
    let mut marginals: Vec<(VariableSet, Option<Marginal>)> = Vec::new();
    let mut csv_dumps: Vec<(String, String)> = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        marginals.push((outcome.report.variables.clone(), outcome.marginal));
        per_index.push(outcome.report);
        csv_dumps.extend(outcome.csv_dumps);
    }

    let psd_failed = per_index
        .iter()
        .any(|r| r.psd.iter().any(|p| !p.report.verdict.accepts()));
    if psd_failed {
        notes.push(
            "a moment or localizing matrix is not PSD: no representing measure exists for that subalgebra"
                .into(),
        );
    }

    // assemble and seal the family
    let mut sealed: Option<SealedFamily> = None;
    let mut exactness: Option<ExactnessReport> = None;
    if solve && !psd_failed {
        let missing: Vec<&VariableSet> = marginals
            .iter()
            .filter(|(_, m)| m.is_none())
            .map(|(set, _)| set)
            .collect();
        if missing.is_empty() {
            let comparison_degree = per_index
                .iter()
                .filter_map(|r| r.flat_order)
                .map(|n| 2 * n)
                .min()
                .unwrap_or(2 * job.descriptor.degree_budget)
                .max(2);
            let mut family = ProjectiveFamily::new(comparison_degree);
            for (_, marginal) in marginals {
                family.insert(marginal.expect("missing marginals handled above"));
            }
            match family.seal(job.descriptor.tolerances.exactness) {
                Ok(s) => {
                    exactness = Some(s.exactness().clone());
                    sealed = Some(s);
                }
                Err(moment_core::Error::ExactnessViolation {
                    small,
                    large,
                    discrepancy,
                    tolerance,
                }) => {
                    notes.push(format!(
                        "family is not an exact projective system: pair ({small}, {large}) disagrees by {discrepancy:.3e} (tolerance {tolerance:.3e})"
                    ));
                }
                Err(e) => return Err(e).context("stage seal"),
            }
        } else {
            let names: Vec<String> = missing.iter().map(|s| s.to_string()).collect();
            notes.push(format!(
                "no marginal measure available on {}: extraction found no flat order within the degree budget and the source is not closed-form",
                names.join(", ")
            ));
        }
    }

    // diagnostics and tightness
    let verify = stage >= Stage::Verify && !psd_failed;
    let mut well_definedness = None;
    let mut tightness = None;
    let mut suggested_schedule = None;
    let mut split = None;
    if verify {
        if let Some(sealed) = &sealed {
            match sealed.well_definedness_audit(job.descriptor.audit_trials, config.seed) {
                Ok(discrepancy) => well_definedness = Some(discrepancy),
                Err(moment_core::Error::UnsupportedMarginal(_)) => {
                    notes.push(
                        "well-definedness audit skipped: closed-form marginals do not support predicate evaluation"
                            .into(),
                    );
                }
                Err(e) => return Err(e).context("stage audit"),
            }
            let schedule = match &job.descriptor.schedule {
                Some(explicit) => explicit.clone(),
                None => {
                    let suggestion =
                        asymptotics::suggest_schedule(sealed, job.descriptor.epsilon)
                            .context("stage tightness (schedule suggestion)")?;
                    if !suggestion.unbounded.is_empty() {
                        let vars: Vec<String> =
                            suggestion.unbounded.iter().map(|v| format!("x{v}")).collect();
                        notes.push(format!(
                            "no tail bound available for {}",
                            vars.join(", ")
                        ));
                    }
                    suggested_schedule = Some(suggestion.radii.clone());
                    suggestion.radii
                }
            };
            match asymptotics::tightness(sealed, job.descriptor.epsilon, &schedule) {
                Ok(certificate) => tightness = Some(certificate),
                Err(moment_core::Error::ScheduleIncomplete { var }) => {
                    notes.push(format!(
                        "tightness skipped: the radius schedule is missing x{var}"
                    ));
                }
                Err(e) => return Err(e).context("stage tightness"),
            }
        }
        let all_vars: VariableSet = job
            .indices
            .iter()
            .fold(VariableSet::empty(), |acc, f| acc.union(f));
        split = Some(
            asymptotics::partial_split(
                &job.module,
                &job.functional,
                &all_vars,
                job.descriptor.max_n,
                job.descriptor.carleman_threshold,
            )
            .context("stage diagnostics")?,
        );
    }

    let overall = decide_overall(
        stage,
        psd_failed,
        &per_index,
        sealed.is_some(),
        tightness.as_ref(),
        split.as_ref(),
        &mut notes,
    );

    let verdict = PipelineVerdict {
        command: stage.name().to_string(),
        seed: config.seed,
        overall,
        per_index,
        exactness,
        well_definedness_discrepancy: well_definedness,
        audit_trials: well_definedness.map(|_| job.descriptor.audit_trials),
        tightness,
        suggested_schedule,
        split,
        notes,
    };

    if let Some(dir) = &config.out_dir {
        write_artifacts(&verdict, sealed.as_ref(), &csv_dumps, dir, config)?;
    }
    Ok(verdict)
}

fn run_index(
    job: &PreparedJob,
    config: &RunConfig,
    position: usize,
    set: &VariableSet,
    solve: bool,
) -> anyhow::Result<IndexOutcome> {
    let l = &job.functional;
    let tol = &job.descriptor.tolerances;
    let restricted_module = job.module.restrict(set);

    let n_cap = match l.available_degree() {
        Some(available) => (available / 2).min(job.descriptor.degree_budget),
        None => job.descriptor.degree_budget,
    };

    let mut psd = Vec::new();
    let mut csv_dumps = Vec::new();
    let one = Polynomial::one();
    let context = |what: &str| format!("stage matrices, index {set}: {what}");

    if n_cap >= 1 {
        let plain = moment_matrix(l, set, n_cap, &one)
            .with_context(|| context("plain moment matrix"))?;
        if config.dump_matrices {
            csv_dumps.push((csv_name(set, n_cap, None), plain.to_csv()));
        }
        psd.push(PsdEntry {
            shift: "1".into(),
            order: n_cap,
            report: psd_check(&plain, tol.psd),
        });
        for (j, g) in restricted_module.generators().iter().enumerate() {
            let half_degree = g.degree().div_ceil(2);
            if half_degree > n_cap {
                continue;
            }
            let order = n_cap - half_degree;
            let localizing = moment_matrix(l, set, order, g)
                .with_context(|| context("localizing matrix"))?;
            if config.dump_matrices {
                csv_dumps.push((csv_name(set, order, Some(j)), localizing.to_csv()));
            }
            psd.push(PsdEntry {
                shift: g.to_string(),
                order,
                report: psd_check(&localizing, tol.psd),
            });
        }
    }
    let index_psd_ok = psd.iter().all(|p| p.report.verdict.accepts());

    let mut flat_report = None;
    let mut flat_order = None;
    let mut marginal = None;
    let mut support_ok = None;
    let mut kind = MarginalKind::Missing;
    if solve && index_psd_ok && n_cap >= 1 {
        let extraction = ExtractionOptions {
            rank_tol: tol.rank,
            moment_tol: tol.moment_match,
            combination_seed: config
                .seed
                .wrapping_add((position as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        };
        match extract_best(l, set, n_cap, &extraction) {
            Ok((measure, order)) => {
                support_ok = Some(check_support(&measure, &restricted_module, tol.support));
                flat_report = Some(
                    flatness(l, set, order, tol.rank)
                        .with_context(|| format!("stage flatness, index {set}"))?,
                );
                flat_order = Some(order);
                marginal = Some(Marginal::Atomic(measure));
                kind = MarginalKind::Extracted;
            }
            // no usable flat truncation in the budget: fall back below
            Err(moment_core::Error::NotFlat { .. })
            | Err(moment_core::Error::IllConditioned { .. }) => {}
            Err(e) => {
                return Err(e).with_context(|| format!("stage extraction, index {set}"))
            }
        }
        if marginal.is_none() {
            marginal = closed_form_marginal(l, set)?;
            if marginal.is_some() {
                kind = MarginalKind::ClosedForm;
            }
        }
    }

    Ok(IndexOutcome {
        report: IndexReport {
            variables: set.clone(),
            truncation_order: n_cap,
            psd,
            flatness: flat_report,
            flat_order,
            marginal_kind: kind,
            measure: marginal.clone(),
            support_ok,
        },
        marginal,
        csv_dumps,
    })
}

/// When no flat order exists within the budget, closed-form sources supply
/// the marginal directly; tabulated sources cannot.
fn closed_form_marginal(
    l: &MomentFunctional,
    set: &VariableSet,
) -> anyhow::Result<Option<Marginal>> {
    match l.source() {
        Source::Product { .. } => {
            let components = set
                .iter()
                .map(|v| (v, l.component(v).expect("product source has components")))
                .collect();
            Ok(Some(Marginal::Product(ProductMarginal::new(components))))
        }
        Source::Atomic(measure) => {
            let projected: AtomicMeasure = measure
                .pushforward(set)
                .context("projecting the atomic source")?;
            Ok(Some(Marginal::Atomic(projected)))
        }
        Source::Table { .. } => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn decide_overall(
    stage: Stage,
    psd_failed: bool,
    per_index: &[IndexReport],
    sealed: bool,
    tightness: Option<&TightnessCertificate>,
    split: Option<&SplitReport>,
    notes: &mut Vec<String>,
) -> Overall {
    if psd_failed {
        return Overall::NecessaryConditionFailed;
    }
    if stage == Stage::Check {
        notes.push("necessary conditions hold; run solve/verify for a certificate".into());
        return Overall::Inconclusive;
    }
    if !sealed {
        return Overall::Inconclusive;
    }
    if stage == Stage::Solve {
        notes.push("family sealed; run verify for the tightness certificate".into());
        return Overall::Inconclusive;
    }
    let tightness_ok = tightness.map(|t| t.is_certified()).unwrap_or(false);
    if !tightness_ok {
        notes.push("tightness not certified: the family may not extend to a Radon measure".into());
        return Overall::Inconclusive;
    }
    let support_violated = per_index.iter().any(|r| r.support_ok == Some(false));
    if support_violated {
        notes.push("an extracted measure has atoms outside the prescribed support set".into());
        return Overall::Inconclusive;
    }
    let all_extracted = per_index
        .iter()
        .all(|r| r.marginal_kind == MarginalKind::Extracted);
    if all_extracted {
        return Overall::RepresentingMeasureConstructed;
    }
    match split {
        Some(split) if split.covers_all() => Overall::ConditionsCertified,
        _ => {
            notes.push(
                "closed-form marginals in use but the determinacy diagnostics do not cover every variable"
                    .into(),
            );
            Overall::Inconclusive
        }
    }
}

fn csv_name(set: &VariableSet, order: u32, generator: Option<usize>) -> String {
    let ids: Vec<String> = set.iter().map(|v| v.to_string()).collect();
    match generator {
        None => format!("{}_M{order}.csv", ids.join("_")),
        Some(j) => format!("{}_M{order}_g{j}.csv", ids.join("_")),
    }
}

fn write_artifacts(
    verdict: &PipelineVerdict,
    sealed: Option<&SealedFamily>,
    csv_dumps: &[(String, String)],
    dir: &Path,
    config: &RunConfig,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut body = serde_json::to_string_pretty(verdict).context("encoding verdict.json")?;
    body.push('\n');
    write_atomically(&dir.join("verdict.json"), &body)?;
    write_atomically(&dir.join("report.txt"), &report::render(verdict))?;
    if let Some(sealed) = sealed {
        sealed
            .save_bundle(&dir.join("family"))
            .context("writing the family bundle")?;
    }
    if config.dump_matrices && !csv_dumps.is_empty() {
        let matrix_dir = dir.join("matrices");
        std::fs::create_dir_all(&matrix_dir)?;
        for (name, csv) in csv_dumps {
            write_atomically(&matrix_dir.join(name), csv)?;
        }
    }
    Ok(())
}

fn write_atomically(path: &Path, body: &str) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body)
        .with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
