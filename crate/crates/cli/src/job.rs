//! Job descriptors: everything a batch run needs, in one JSON document.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use moment_core::algebra::varmap;
use moment_core::{
    FunctionalDescriptor, MomentFunctional, Polynomial, QuadraticModule, VarId, VariableSet,
    DEFAULT_CARLEMAN_THRESHOLD, DEFAULT_PSD_TOL, DEFAULT_RANK_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Stop after the moment/localizing matrix checks.
    Check,
    /// Additionally attempt extraction and sealing of the family.
    Solve,
    /// Additionally run the well-definedness audit and the tightness certificate.
    Verify,
    /// Verify plus full artifact rendering.
    Report,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModuleDescriptor {
    /// Generators in text syntax, e.g. `"1 - x1^2"`.
    #[serde(default)]
    pub generators: Vec<String>,
}

/// All numeric tolerances in one block; every field has a documented default.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative PSD eigenvalue tolerance (default 1e-8).
    pub psd: f64,
    /// Relative numerical-rank tolerance (default 1e-7).
    pub rank: f64,
    /// Relative moment mismatch accepted for extracted measures (default 1e-6).
    pub moment_match: f64,
    /// Absolute moment-vector discrepancy accepted when sealing (default 1e-8).
    pub exactness: f64,
    /// Slack when testing generator non-negativity on atoms (default 1e-8).
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: DEFAULT_PSD_TOL,
            rank: DEFAULT_RANK_TOL,
            moment_match: 1e-6,
            exactness: 1e-8,
            support: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDescriptor {
    pub functional: FunctionalDescriptor,
    #[serde(default)]
    pub module: ModuleDescriptor,
    /// Finite variable sets to materialize; closed under union if not already.
    pub index_list: Vec<Vec<VarId>>,
    /// Largest truncation order tried per index.
    pub degree_budget: u32,
    /// Tightness level (default 0.1).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Default stage for `momentctl run`; explicit subcommands override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Tightness radius per variable; derived from the marginal tails when absent.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "optional_varmap",
        serialize_with = "serialize_optional_varmap"
    )]
    pub schedule: Option<BTreeMap<VarId, f64>>,
    /// Depth of the Carleman sums and moment-growth checks (default 50).
    #[serde(default = "default_max_n")]
    pub max_n: u32,
    /// Partial-sum threshold for "divergence likely" (default 10).
    #[serde(default = "default_carleman_threshold")]
    pub carleman_threshold: f64,
    /// Dual-base predicate pairs drawn by the audit (default 1000).
    #[serde(default = "default_audit_trials")]
    pub audit_trials: u32,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_max_n() -> u32 {
    50
}

fn default_carleman_threshold() -> f64 {
    DEFAULT_CARLEMAN_THRESHOLD
}

fn default_audit_trials() -> u32 {
    1000
}

fn optional_varmap<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<Option<BTreeMap<VarId, f64>>, D::Error> {
    varmap::deserialize(d).map(Some)
}

fn serialize_optional_varmap<S: serde::Serializer>(
    value: &Option<BTreeMap<VarId, f64>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match value {
        Some(map) => varmap::serialize(map, s),
        None => s.serialize_none(),
    }
}

/// A validated job: parsed functional and module, union-closed index list.
pub struct PreparedJob {
    pub functional: MomentFunctional,
    pub module: QuadraticModule,
    pub indices: Vec<VariableSet>,
    /// Sets added to close the list under union.
    pub closure_added: Vec<VariableSet>,
    pub descriptor: JobDescriptor,
}

impl JobDescriptor {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("malformed job descriptor")
    }

    pub fn prepare(self) -> anyhow::Result<PreparedJob> {
        if self.index_list.is_empty() {
            bail!("index_list must not be empty");
        }
        if self.degree_budget < 1 {
            bail!("degree_budget must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            bail!("epsilon must lie in (0, 1), got {}", self.epsilon);
        }
        let functional = self
            .functional
            .build()
            .context("invalid functional descriptor")?;
        let mut generators = Vec::with_capacity(self.module.generators.len());
        for text in &self.module.generators {
            let g = Polynomial::parse(text)
                .with_context(|| format!("invalid generator {text:?}"))?;
            generators.push(g);
        }
        let module = QuadraticModule::new(generators);

        let mut indices: BTreeSet<VariableSet> = self
            .index_list
            .iter()
            .map(|ids| VariableSet::from_ids(ids.iter().copied()))
            .collect();
        if indices.iter().any(VariableSet::is_empty) {
            bail!("index_list entries must name at least one variable");
        }
        let before: BTreeSet<VariableSet> = indices.clone();
        loop {
            let mut added = Vec::new();
            let list: Vec<&VariableSet> = indices.iter().collect();
            for (k, a) in list.iter().enumerate() {
                for b in list.iter().skip(k + 1) {
                    let u = a.union(b);
                    if !indices.contains(&u) {
                        added.push(u);
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            indices.extend(added);
        }
        let closure_added: Vec<VariableSet> =
            indices.difference(&before).cloned().collect();
        Ok(PreparedJob {
            functional,
            module,
            indices: indices.into_iter().collect(),
            closure_added,
            descriptor: self,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_job(extra: &str) -> String {
        format!(
            r#"{{
                "functional": {{"type": "gaussian"}},
                "index_list": [[1], [2]],
                "degree_budget": 3{extra}
            }}"#
        )
    }

    #[test]
    fn defaults_are_applied() {
        let job = JobDescriptor::from_json(&minimal_job("")).unwrap();
        assert_eq!(job.epsilon, 0.1);
        assert_eq!(job.max_n, 50);
        assert_eq!(job.audit_trials, 1000);
        assert_eq!(job.tolerances.psd, DEFAULT_PSD_TOL);
        assert!(job.command.is_none());
    }

    #[test]
    fn union_closure_is_computed() {
        let job = JobDescriptor::from_json(&minimal_job("")).unwrap();
        let prepared = job.prepare().unwrap();
        assert_eq!(prepared.indices.len(), 3);
        assert_eq!(prepared.closure_added, vec![VariableSet::from_ids([1, 2])]);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_ranges() {
        assert!(JobDescriptor::from_json(&minimal_job(r#", "budge": 1"#)).is_err());
        let job = JobDescriptor::from_json(&minimal_job(r#", "epsilon": 1.5"#)).unwrap();
        assert!(job.prepare().is_err());
        let mut bad = JobDescriptor::from_json(&minimal_job("")).unwrap();
        bad.degree_budget = 0;
        assert!(bad.prepare().is_err());
        let mut empty = JobDescriptor::from_json(&minimal_job("")).unwrap();
        empty.index_list.clear();
        assert!(empty.prepare().is_err());
    }

    #[test]
    fn generators_are_parsed() {
        let job = JobDescriptor::from_json(&minimal_job(
            r#", "module": {"generators": ["1 - x1^2"]}"#,
        ))
        .unwrap();
        let prepared = job.prepare().unwrap();
        assert_eq!(prepared.module.generators().len(), 1);

        let bad = JobDescriptor::from_json(&minimal_job(
            r#", "module": {"generators": ["1 - y"]}"#,
        ))
        .unwrap();
        assert!(bad.prepare().is_err());
    }
}
