//! Configuration language: YAML documents plus the embedded condition and
//! effect expressions, assembled into a validated [`SystemModel`].

mod condition;
mod docs;
mod effects;

use std::fmt;

use thiserror::Error;

pub use condition::{parse_condition, print_condition};
pub use docs::{
    parse_action_set, parse_initial_state, parse_termination, parse_topology, parse_weights,
    serialize_action_set, serialize_topology, ActionEntry, ActionSetDoc, InitialStateDoc,
    PostCondition, TopologyDoc, TopologyEntry,
};
pub use effects::{parse_effect_entries, parse_effects, print_effects, ParsedEffect};

use crate::model::{
    validate, ActionSpec, ComponentType, Diagnostic, Partition, PartitionState, RewardWeights,
    SystemModel, SystemState, TerminationSpec,
};

#[derive(Debug, Error)]
pub enum DslError {
    #[error("{context}: syntax error at line {line}, column {column}: {message}")]
    Yaml {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("condition: {message} (column {column})")]
    Condition { column: usize, message: String },
    #[error("post-condition `{source_text}`: {message} (column {column})")]
    Effect {
        source_text: String,
        column: usize,
        message: String,
    },
    #[error("invalid model:\n{}", DiagnosticList(.0))]
    Model(Vec<Diagnostic>),
}

struct DiagnosticList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagnosticList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {d}")?;
        }
        Ok(())
    }
}

/// A validated model plus the non-fatal findings produced while building it.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub model: SystemModel,
    pub warnings: Vec<Diagnostic>,
}

/// Builds and validates a [`SystemModel`].
///
/// Each component type is bound to every catalog action whose `components`
/// list names it. A `components` entry naming an undeclared type is a warning
/// when the action still binds to at least one declared type (configuration
/// snippets often list types defined elsewhere) and an error otherwise.
pub fn assemble_model(
    topology: &TopologyDoc,
    actions: &ActionSetDoc,
    termination: &TerminationSpec,
    weights: &RewardWeights,
) -> Result<Assembled, DslError> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let declared = |name: &str| topology.types.iter().any(|t| t.name == name);

    let mut catalog = Vec::with_capacity(actions.actions.len());
    for entry in &actions.actions {
        let path = format!("actions.{}", entry.name);
        let precondition = match parse_condition(&entry.pre_condition) {
            Ok(c) => c,
            Err(e) => {
                errors.push(Diagnostic::error(format!("{path}.pre-condition"), e.to_string()));
                continue;
            }
        };
        let mut effects = Vec::new();
        let mut effect_failed = false;
        for src in entry.post_condition.entries() {
            match parse_effect_entries(src) {
                Ok(parsed) => {
                    for p in parsed {
                        if p.legacy_alias {
                            warnings.push(Diagnostic::warning(
                                format!("{path}.post-condition"),
                                format!(
                                    "legacy `rand(1)` alias read as `P=1 -> state[{}] = true`",
                                    p.effect.variable
                                ),
                            ));
                        }
                        effects.push(p.effect);
                    }
                }
                Err(e) => {
                    errors.push(Diagnostic::error(format!("{path}.post-condition"), e.to_string()));
                    effect_failed = true;
                }
            }
        }
        if effect_failed {
            continue;
        }
        let (known, unknown): (Vec<_>, Vec<_>) =
            entry.components.iter().cloned().partition(|c| declared(c));
        for ty in &unknown {
            let d = format!("unknown component type `{ty}`");
            if known.is_empty() {
                errors.push(Diagnostic::error(format!("{path}.components"), d));
            } else {
                warnings.push(Diagnostic::warning(
                    format!("{path}.components"),
                    format!("{d}; binding skipped"),
                ));
            }
        }
        catalog.push(ActionSpec {
            name: entry.name.clone(),
            execution_time: entry.execution_time,
            cost: entry.execution_cost,
            precondition,
            effects,
            applicable_types: known,
        });
    }

    let partitions = topology
        .types
        .iter()
        .map(|t| {
            Partition::new(ComponentType {
                name: t.name.clone(),
                replication: t.replication as usize,
                variables: t.state.clone(),
                actions: catalog
                    .iter()
                    .filter(|a| a.applicable_types.contains(&t.name))
                    .map(|a| a.name.clone())
                    .collect(),
            })
        })
        .collect();

    let model = SystemModel {
        partitions,
        actions: catalog,
        weights: *weights,
        termination: termination.clone(),
    };
    errors.extend(validate(&model));
    if !errors.is_empty() {
        return Err(DslError::Model(errors));
    }
    warnings.extend(lint(&model));
    Ok(Assembled { model, warnings })
}

/// Non-fatal findings on a valid model: termination variables no type
/// declares, and actions whose effects can push a variable away from the
/// value the termination condition requires.
pub fn lint(model: &SystemModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for var in model.termination.required.keys() {
        if !model
            .partitions
            .iter()
            .any(|p| p.component_type.has_variable(var))
        {
            out.push(Diagnostic::warning(
                format!("termination.{var}"),
                "no component type declares this variable; constraint has no effect",
            ));
        }
    }
    for a in &model.actions {
        let against: Vec<String> = a
            .effects
            .iter()
            .filter(|e| e.probability > 0.0)
            .filter(|e| model.termination.required.get(&e.variable) == Some(&!e.value))
            .map(|e| format!("{}={}", e.variable, e.value))
            .collect();
        if !against.is_empty() {
            out.push(Diagnostic::warning(
                format!("actions.{}.post-condition", a.name),
                format!(
                    "sets {} which the termination condition forbids; this action can never help reach a secure state",
                    against.join(", ")
                ),
            ));
        }
    }
    out
}

/// Resolves an initial-state document against a model.
pub fn initial_state(model: &SystemModel, doc: &InitialStateDoc) -> Result<SystemState, DslError> {
    for ty in doc.per_type.keys() {
        if model.partition(ty).is_none() {
            return Err(DslError::Invalid {
                path: format!("init-state.{ty}"),
                message: format!("unknown component type; known: {}", model.partition_names().join(", ")),
            });
        }
    }
    for var in doc.global.keys() {
        if !model.partitions.iter().any(|p| p.component_type.has_variable(var)) {
            return Err(DslError::Invalid {
                path: format!("init-state.{var}"),
                message: "no component type declares this variable".into(),
            });
        }
    }
    let mut partitions = Vec::with_capacity(model.partitions.len());
    for p in &model.partitions {
        let ty = &p.component_type;
        let overrides = doc.per_type.get(&ty.name);
        if let Some(o) = overrides {
            if let Some(bad) = o.keys().find(|v| !ty.has_variable(v)) {
                return Err(DslError::Invalid {
                    path: format!("init-state.{}.{bad}", ty.name),
                    message: "variable not declared on this component type".into(),
                });
            }
        }
        let mut state = PartitionState::all_false(p.state_bits());
        for j in 0..ty.replication {
            for (vi, v) in ty.variables.iter().enumerate() {
                let value = overrides
                    .and_then(|o| o.get(&v.name))
                    .or_else(|| doc.global.get(&v.name))
                    .copied()
                    .unwrap_or(false);
                state.set(p.bit_offset(j, vi), value);
            }
        }
        partitions.push(state);
    }
    Ok(SystemState { partitions })
}
