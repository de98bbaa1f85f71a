//! Domain types for a partitioned system: component types, their boolean
//! state variables, the action catalog, reward weights and the termination
//! constraints that define a secure state.
//!
//! Everything here is plain data. A [`SystemModel`] is built by
//! [`crate::dsl::assemble_model`] and is immutable afterwards, so it can be
//! shared read-only between any number of training workers.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A boolean state variable declared on a component type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    /// Free-form semantic tag such as `liveness` or `compromise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>) -> Self {
        VariableDecl {
            name: name.into(),
            role: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentType {
    pub name: String,
    /// Number of components of this type.
    pub replication: usize,
    /// Declaration order defines the state-vector layout.
    pub variables: Vec<VariableDecl>,
    /// Names of catalog actions executable on components of this type.
    pub actions: Vec<String>,
}

impl ComponentType {
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variable_index(name).is_some()
    }

    /// Number of state bits of the whole partition.
    pub fn state_bits(&self) -> usize {
        self.replication * self.variables.len()
    }
}

/// One concrete component: index `j` of a component type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Component {
    pub type_name: String,
    pub index: usize,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.type_name, self.index)
    }
}

/// All components of one component type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub component_type: ComponentType,
}

impl Partition {
    pub fn new(component_type: ComponentType) -> Self {
        Partition { component_type }
    }

    pub fn name(&self) -> &str {
        &self.component_type.name
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        (0..self.component_type.replication).map(move |index| Component {
            type_name: self.component_type.name.clone(),
            index,
        })
    }

    pub fn state_bits(&self) -> usize {
        self.component_type.state_bits()
    }

    /// Offset of `(component, variable)` inside the partition state vector.
    pub fn bit_offset(&self, component: usize, variable: usize) -> usize {
        component * self.component_type.variables.len() + variable
    }

    /// Labels for every state bit, e.g. `frontend-service[0].active`.
    pub fn bit_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.state_bits());
        for c in self.components() {
            for v in &self.component_type.variables {
                labels.push(format!("{c}.{}", v.name));
            }
        }
        labels
    }
}

/// Boolean condition over the variables of a single component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConditionExpr {
    VarEquals { variable: String, value: bool },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
}

impl ConditionExpr {
    pub fn var(variable: impl Into<String>, value: bool) -> Self {
        ConditionExpr::VarEquals {
            variable: variable.into(),
            value,
        }
    }

    pub fn and(self, rhs: ConditionExpr) -> Self {
        ConditionExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: ConditionExpr) -> Self {
        ConditionExpr::Or(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        ConditionExpr::Not(Box::new(self))
    }

    /// Evaluates against an assignment; `None` from `lookup` means unbound.
    pub fn eval<F>(&self, lookup: &F) -> Option<bool>
    where
        F: Fn(&str) -> Option<bool>,
    {
        Some(match self {
            ConditionExpr::VarEquals { variable, value } => lookup(variable)? == *value,
            ConditionExpr::And(l, r) => l.eval(lookup)? && r.eval(lookup)?,
            ConditionExpr::Or(l, r) => l.eval(lookup)? || r.eval(lookup)?,
            ConditionExpr::Not(c) => !c.eval(lookup)?,
        })
    }

    /// Every variable name mentioned, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a ConditionExpr, out: &mut Vec<&'a str>) {
            match e {
                ConditionExpr::VarEquals { variable, .. } => {
                    if !out.contains(&variable.as_str()) {
                        out.push(variable);
                    }
                }
                ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                ConditionExpr::Not(c) => walk(c, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            ConditionExpr::VarEquals { .. } => 1,
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => 1 + l.depth().max(r.depth()),
            ConditionExpr::Not(c) => 1 + c.depth(),
        }
    }
}

/// Probabilistic assignment `P=p -> state[variable] = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub probability: f64,
    pub variable: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub name: String,
    /// Abstract time units.
    pub execution_time: f64,
    /// Abstract cost units.
    pub cost: f64,
    pub precondition: ConditionExpr,
    /// Independent Bernoulli trials, applied in order.
    pub effects: Vec<Effect>,
    pub applicable_types: Vec<String>,
}

/// Weights and normalizers of the time/cost reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    #[serde(rename = "wE")]
    pub time_weight: f64,
    #[serde(rename = "wC")]
    pub cost_weight: f64,
    #[serde(rename = "eMax")]
    pub max_time: f64,
    #[serde(rename = "cMax")]
    pub max_cost: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            time_weight: 0.5,
            cost_weight: 0.5,
            max_time: 1000.0,
            max_cost: 1000.0,
        }
    }
}

/// Required values for the variables that define a secure state.
///
/// A partition is terminal when every one of its components satisfies all
/// constraints on the variables its type declares; variables a type does not
/// declare are ignored for that partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TerminationSpec {
    pub required: BTreeMap<String, bool>,
}

impl TerminationSpec {
    pub fn new<I, S>(required: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<String>,
    {
        TerminationSpec {
            required: required.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// `(bit offset, required value)` pairs for a partition's state vector.
    pub fn constraints_for(&self, partition: &Partition) -> Vec<(usize, bool)> {
        let ty = &partition.component_type;
        let mut out = Vec::new();
        for j in 0..ty.replication {
            for (vi, var) in ty.variables.iter().enumerate() {
                if let Some(&want) = self.required.get(&var.name) {
                    out.push((partition.bit_offset(j, vi), want));
                }
            }
        }
        out
    }

    pub fn is_terminal_partition(&self, partition: &Partition, state: &PartitionState) -> bool {
        self.constraints_for(partition)
            .into_iter()
            .all(|(bit, want)| state.get(bit) == want)
    }

    pub fn is_terminal_system(&self, model: &SystemModel, state: &SystemState) -> bool {
        model
            .partitions
            .iter()
            .zip(&state.partitions)
            .all(|(p, s)| self.is_terminal_partition(p, s))
    }
}

/// Bit vector of one partition, component-major then declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionState(pub Vec<bool>);

impl PartitionState {
    pub fn all_false(len: usize) -> Self {
        PartitionState(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, bit: usize) -> bool {
        self.0[bit]
    }

    pub fn set(&mut self, bit: usize, value: bool) {
        self.0[bit] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Per-component `variable -> value` maps.
    pub fn to_assignment(&self, partition: &Partition) -> Vec<BTreeMap<String, bool>> {
        let ty = &partition.component_type;
        (0..ty.replication)
            .map(|j| {
                ty.variables
                    .iter()
                    .enumerate()
                    .map(|(vi, v)| (v.name.clone(), self.get(partition.bit_offset(j, vi))))
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`to_assignment`](Self::to_assignment); missing variables default to false.
    pub fn from_assignment(partition: &Partition, assignment: &[BTreeMap<String, bool>]) -> Self {
        let ty = &partition.component_type;
        let mut state = PartitionState::all_false(partition.state_bits());
        for (j, comp) in assignment.iter().enumerate().take(ty.replication) {
            for (vi, v) in ty.variables.iter().enumerate() {
                if let Some(&b) = comp.get(&v.name) {
                    state.set(partition.bit_offset(j, vi), b);
                }
            }
        }
        state
    }
}

impl fmt::Display for PartitionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub partitions: Vec<PartitionState>,
}

impl SystemState {
    pub fn flatten(&self) -> Vec<bool> {
        self.partitions.iter().flat_map(|p| p.0.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub partitions: Vec<Partition>,
    /// Declaration order is preserved; it fixes per-type action order.
    pub actions: Vec<ActionSpec>,
    pub weights: RewardWeights,
    pub termination: TerminationSpec,
}

impl SystemModel {
    pub fn action(&self, name: &str) -> Option<&ActionSpec> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn partition(&self, name: &str) -> Option<(usize, &Partition)> {
        self.partitions
            .iter()
            .enumerate()
            .find(|(_, p)| p.name() == name)
    }

    pub fn partition_names(&self) -> Vec<&str> {
        self.partitions.iter().map(|p| p.name()).collect()
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        self.partitions.iter().flat_map(|p| p.components())
    }

    pub fn state_bits(&self) -> usize {
        self.partitions.iter().map(Partition::state_bits).sum()
    }

    pub fn all_false_state(&self) -> SystemState {
        SystemState {
            partitions: self
                .partitions
                .iter()
                .map(|p| PartitionState::all_false(p.state_bits()))
                .collect(),
        }
    }

    pub fn state_matches(&self, state: &SystemState) -> bool {
        state.partitions.len() == self.partitions.len()
            && self
                .partitions
                .iter()
                .zip(&state.partitions)
                .all(|(p, s)| p.state_bits() == s.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One finding with a path to the offending element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn warning(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

/// Checks every structural invariant of a model. Returns one error
/// diagnostic per violation; an empty list means the model is valid.
pub fn validate(model: &SystemModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen_types = HashSet::new();
    for p in &model.partitions {
        let ty = &p.component_type;
        let path = format!("topology.{}", ty.name);
        if !seen_types.insert(ty.name.as_str()) {
            out.push(Diagnostic::error(
                &path,
                "component type declared twice; partitions must be disjoint",
            ));
        }
        if ty.replication < 1 {
            out.push(Diagnostic::error(
                format!("{path}.replication"),
                format!("replication must be at least 1, got {}", ty.replication),
            ));
        }
        let mut seen_vars = HashSet::new();
        for v in &ty.variables {
            if !seen_vars.insert(v.name.as_str()) {
                out.push(Diagnostic::error(
                    format!("{path}.state"),
                    format!("variable `{}` declared twice", v.name),
                ));
            }
        }
        for a in &ty.actions {
            if model.action(a).is_none() {
                out.push(Diagnostic::error(
                    format!("{path}.actions"),
                    format!("action `{a}` is not in the action catalog"),
                ));
            }
        }
    }

    let mut seen_actions = HashSet::new();
    for a in &model.actions {
        let path = format!("actions.{}", a.name);
        if !seen_actions.insert(a.name.as_str()) {
            out.push(Diagnostic::error(&path, "action declared twice"));
        }
        if !(a.execution_time >= 0.0 && a.execution_time.is_finite()) {
            out.push(Diagnostic::error(
                format!("{path}.execution-time"),
                format!("must be a non-negative number, got {}", a.execution_time),
            ));
        }
        if !(a.cost >= 0.0 && a.cost.is_finite()) {
            out.push(Diagnostic::error(
                format!("{path}.execution-cost"),
                format!("must be a non-negative number, got {}", a.cost),
            ));
        }
        if a.effects.is_empty() {
            out.push(Diagnostic::error(
                format!("{path}.post-condition"),
                "at least one effect is required",
            ));
        }
        for (k, e) in a.effects.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.probability) {
                out.push(Diagnostic::error(
                    format!("{path}.post-condition[{k}]"),
                    format!("probability {} outside [0, 1]", e.probability),
                ));
            }
        }
        for type_name in &a.applicable_types {
            let Some((_, partition)) = model.partition(type_name) else {
                out.push(Diagnostic::error(
                    format!("{path}.components"),
                    format!("unknown component type `{type_name}`"),
                ));
                continue;
            };
            let ty = &partition.component_type;
            for var in a.precondition.variables() {
                if !ty.has_variable(var) {
                    out.push(Diagnostic::error(
                        format!("{path}.pre-condition"),
                        format!("unknown variable `{var}` on component type `{type_name}`"),
                    ));
                }
            }
            for e in &a.effects {
                if !ty.has_variable(&e.variable) {
                    out.push(Diagnostic::error(
                        format!("{path}.post-condition"),
                        format!(
                            "unknown variable `{}` on component type `{type_name}`",
                            e.variable
                        ),
                    ));
                }
            }
        }
    }

    let w = &model.weights;
    for (name, value) in [("wE", w.time_weight), ("wC", w.cost_weight)] {
        if !(0.0..=1.0).contains(&value) {
            out.push(Diagnostic::error(
                format!("weights.{name}"),
                format!("must lie in [0, 1], got {value}"),
            ));
        }
    }
    for (name, value) in [("eMax", w.max_time), ("cMax", w.max_cost)] {
        if !(value > 0.0 && value.is_finite()) {
            out.push(Diagnostic::error(
                format!("weights.{name}"),
                format!("must be positive, got {value}"),
            ));
        }
    }
    let max_time = model.actions.iter().map(|a| a.execution_time).fold(0.0, f64::max);
    let max_cost = model.actions.iter().map(|a| a.cost).fold(0.0, f64::max);
    if w.max_time < max_time {
        out.push(Diagnostic::error(
            "weights.eMax",
            format!("{} is below the largest execution time {max_time}", w.max_time),
        ));
    }
    if w.max_cost < max_cost {
        out.push(Diagnostic::error(
            "weights.cMax",
            format!("{} is below the largest cost {max_cost}", w.max_cost),
        ));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frontend() -> ComponentType {
        ComponentType {
            name: "frontend-service".into(),
            replication: 1,
            variables: ["start", "active", "restarted", "corrupted", "shellCorrupted"]
                .into_iter()
                .map(VariableDecl::new)
                .collect(),
            actions: vec!["start".into()],
        }
    }

    fn start_action(var: &str) -> ActionSpec {
        ActionSpec {
            name: "start".into(),
            execution_time: 300.0,
            cost: 100.0,
            precondition: ConditionExpr::var(var, false),
            effects: vec![Effect {
                probability: 1.0,
                variable: "active".into(),
                value: true,
            }],
            applicable_types: vec!["frontend-service".into()],
        }
    }

    fn model_with(ty: ComponentType, action: ActionSpec) -> SystemModel {
        SystemModel {
            partitions: vec![Partition::new(ty)],
            actions: vec![action],
            weights: RewardWeights::default(),
            termination: TerminationSpec::default(),
        }
    }

    #[test]
    fn well_formed_model_is_clean() {
        let m = model_with(frontend(), start_action("active"));
        assert_eq!(validate(&m), vec![]);
    }

    #[test]
    fn unknown_variable_is_reported_by_name() {
        let m = model_with(frontend(), start_action("activ"));
        let d = validate(&m);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("activ"), "{}", d[0]);
    }

    #[test]
    fn zero_replication_is_reported() {
        let mut ty = frontend();
        ty.replication = 0;
        let d = validate(&model_with(ty, start_action("active")));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "topology.frontend-service.replication");
    }

    #[test]
    fn bit_offsets_are_component_major() {
        let mut ty = frontend();
        ty.replication = 2;
        let p = Partition::new(ty);
        assert_eq!(p.bit_offset(1, 0), 5);
        assert_eq!(p.bit_labels()[6], "frontend-service[1].active");
    }

    #[test]
    fn empty_termination_accepts_everything() {
        let p = Partition::new(frontend());
        let spec = TerminationSpec::default();
        assert!(spec.is_terminal_partition(&p, &PartitionState(vec![true; 5])));
        assert!(spec.is_terminal_partition(&p, &PartitionState(vec![false; 5])));
    }
}
