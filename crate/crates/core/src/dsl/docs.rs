//! The YAML documents: topology, action set, termination, weights and
//! initial state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};

use crate::dsl::DslError;
use crate::model::{RewardWeights, TerminationSpec, VariableDecl};

fn yaml_error(context: &str, e: serde_yaml::Error) -> DslError {
    let (line, column) = e
        .location()
        .map(|l| (l.line(), l.column()))
        .unwrap_or((0, 0));
    DslError::Yaml {
        context: context.to_string(),
        line,
        column,
        message: e.to_string(),
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> DslError {
    DslError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses to an order-preserving mapping. An empty document yields `None`.
fn top_level_mapping(context: &str, text: &str) -> Result<Option<Mapping>, DslError> {
    let value: Value = serde_yaml::from_str(text).map_err(|e| yaml_error(context, e))?;
    match value {
        Value::Null => Ok(None),
        Value::Mapping(m) => Ok(Some(m)),
        _ => Err(invalid(context, "top level must be a mapping")),
    }
}

fn key_string(context: &str, key: &Value) -> Result<String, DslError> {
    key.as_str()
        .map(str::to_string)
        .ok_or_else(|| invalid(context, format!("keys must be strings, found {key:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyEntry {
    pub name: String,
    pub replication: u64,
    pub state: Vec<VariableDecl>,
}

/// `topology-containers.yml`: component types in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologyDoc {
    pub types: Vec<TopologyEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateItem {
    Name(String),
    Decl(VariableDecl),
}

pub fn parse_topology(text: &str) -> Result<TopologyDoc, DslError> {
    let ctx = "topology";
    let map = top_level_mapping(ctx, text)?
        .filter(|m| !m.is_empty())
        .ok_or_else(|| invalid(ctx, "no component types"))?;
    let mut types = Vec::with_capacity(map.len());
    for (key, body) in &map {
        let name = key_string(ctx, key)?;
        let path = format!("{ctx}.{name}");
        let body = body
            .as_mapping()
            .ok_or_else(|| invalid(&path, "expected a mapping with `replication` and `state`"))?;
        let replication = body
            .get("replication")
            .ok_or_else(|| invalid(&path, "missing `replication`"))?;
        let replication = match replication.as_i64() {
            Some(r) if r >= 1 => r as u64,
            Some(r) => {
                return Err(invalid(
                    format!("{path}.replication"),
                    format!("replication must be positive, got {r}"),
                ))
            }
            None => {
                return Err(invalid(
                    format!("{path}.replication"),
                    format!("expected an integer, got {replication:?}"),
                ))
            }
        };
        let state = body.get("state").ok_or_else(|| invalid(&path, "missing `state`"))?;
        let items: Vec<StateItem> = serde_yaml::from_value(state.clone())
            .map_err(|e| invalid(format!("{path}.state"), e.to_string()))?;
        let state = items
            .into_iter()
            .map(|i| match i {
                StateItem::Name(n) => VariableDecl::new(n),
                StateItem::Decl(d) => d,
            })
            .collect();
        types.push(TopologyEntry {
            name,
            replication,
            state,
        });
    }
    Ok(TopologyDoc { types })
}

pub fn serialize_topology(doc: &TopologyDoc) -> String {
    let mut map = Mapping::new();
    for t in &doc.types {
        let state: Vec<Value> = t
            .state
            .iter()
            .map(|v| match &v.role {
                None => Value::String(v.name.clone()),
                Some(_) => serde_yaml::to_value(v).expect("variable serializes"),
            })
            .collect();
        let mut body = Mapping::new();
        body.insert("replication".into(), Value::from(t.replication));
        body.insert("state".into(), Value::Sequence(state));
        map.insert(Value::String(t.name.clone()), Value::Mapping(body));
    }
    serde_yaml::to_string(&map).expect("mapping serializes")
}

/// A post-condition is either one `;`-separated string or a list of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PostCondition {
    Single(String),
    List(Vec<String>),
}

impl PostCondition {
    pub fn entries(&self) -> Vec<&str> {
        match self {
            PostCondition::Single(s) => vec![s.as_str()],
            PostCondition::List(l) => l.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ActionEntry {
    #[serde(skip)]
    pub name: String,
    pub execution_time: f64,
    pub execution_cost: f64,
    pub pre_condition: String,
    pub post_condition: PostCondition,
    pub components: Vec<String>,
}

/// `action-set-containers.yml`: actions in declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionSetDoc {
    pub actions: Vec<ActionEntry>,
}

pub fn parse_action_set(text: &str) -> Result<ActionSetDoc, DslError> {
    let ctx = "actions";
    let Some(map) = top_level_mapping(ctx, text)? else {
        return Ok(ActionSetDoc::default());
    };
    let mut actions = Vec::with_capacity(map.len());
    for (key, body) in &map {
        let name = key_string(ctx, key)?;
        let path = format!("{ctx}.{name}");
        let mut entry: ActionEntry =
            serde_yaml::from_value(body.clone()).map_err(|e| invalid(&path, e.to_string()))?;
        for (field, v) in [
            ("execution-time", entry.execution_time),
            ("execution-cost", entry.execution_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(
                    format!("{path}.{field}"),
                    format!("must be a non-negative number, got {v}"),
                ));
            }
        }
        entry.name = name;
        actions.push(entry);
    }
    Ok(ActionSetDoc { actions })
}

pub fn serialize_action_set(doc: &ActionSetDoc) -> String {
    let mut map = Mapping::new();
    for a in &doc.actions {
        map.insert(
            Value::String(a.name.clone()),
            serde_yaml::to_value(a).expect("action serializes"),
        );
    }
    serde_yaml::to_string(&map).expect("mapping serializes")
}

/// `termination.yml`: `variable: required-value`.
pub fn parse_termination(text: &str) -> Result<TerminationSpec, DslError> {
    let ctx = "termination";
    let Some(map) = top_level_mapping(ctx, text)? else {
        return Ok(TerminationSpec::default());
    };
    let mut required = BTreeMap::new();
    for (k, v) in &map {
        let name = key_string(ctx, k)?;
        let b = v
            .as_bool()
            .ok_or_else(|| invalid(format!("{ctx}.{name}"), "expected `true` or `false`"))?;
        required.insert(name, b);
    }
    Ok(TerminationSpec { required })
}

/// `weights.yml`: `wE`, `wC`, `eMax`, `cMax`.
pub fn parse_weights(text: &str) -> Result<RewardWeights, DslError> {
    serde_yaml::from_str(text).map_err(|e| yaml_error("weights", e))
}

/// `init-state.yml`: `variable: value` applies to every component declaring
/// the variable; `type-name: { variable: value }` overrides for one type.
/// Unlisted variables are false.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InitialStateDoc {
    pub global: BTreeMap<String, bool>,
    pub per_type: BTreeMap<String, BTreeMap<String, bool>>,
}

pub fn parse_initial_state(text: &str) -> Result<InitialStateDoc, DslError> {
    let ctx = "init-state";
    let Some(map) = top_level_mapping(ctx, text)? else {
        return Ok(InitialStateDoc::default());
    };
    let mut doc = InitialStateDoc::default();
    for (k, v) in &map {
        let name = key_string(ctx, k)?;
        match v {
            Value::Bool(b) => {
                doc.global.insert(name, *b);
            }
            Value::Mapping(inner) => {
                let mut vars = BTreeMap::new();
                for (ik, iv) in inner {
                    let var = key_string(ctx, ik)?;
                    let b = iv.as_bool().ok_or_else(|| {
                        invalid(format!("{ctx}.{name}.{var}"), "expected `true` or `false`")
                    })?;
                    vars.insert(var, b);
                }
                doc.per_type.insert(name, vars);
            }
            _ => {
                return Err(invalid(
                    format!("{ctx}.{name}"),
                    "expected a boolean or a mapping of variable values",
                ))
            }
        }
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_TOPOLOGY: &str = "\
frontend-service:
  replication: 1
  state:
    - start
    - active
    - restarted
    - corrupted
    - shellCorrupted
...
";

    #[test]
    fn topology_snippet_keeps_order() {
        let doc = parse_topology(SAMPLE_TOPOLOGY).unwrap();
        assert_eq!(doc.types.len(), 1);
        let names: Vec<_> = doc.types[0].state.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["start", "active", "restarted", "corrupted", "shellCorrupted"]);
    }

    #[test]
    fn empty_topology() {
        let e = parse_topology("").unwrap_err();
        assert!(e.to_string().contains("no component types"), "{e}");
        assert!(parse_topology("{}").is_err());
    }

    #[test]
    fn duplicate_type_is_rejected() {
        let text = "a:\n  replication: 1\n  state: [x]\na:\n  replication: 2\n  state: [y]\n";
        let e = parse_topology(text).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn topology_field_errors() {
        assert!(parse_topology("a:\n  state: [x]\n").unwrap_err().to_string().contains("replication"));
        assert!(parse_topology("a:\n  replication: 1\n").unwrap_err().to_string().contains("state"));
        let e = parse_topology("a:\n  replication: 0\n  state: [x]\n").unwrap_err();
        assert!(e.to_string().contains("positive"), "{e}");
    }

    #[test]
    fn syntax_error_has_location() {
        match parse_topology("a:\n  replication: [1\n") {
            Err(DslError::Yaml { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_cost_is_rejected() {
        let text = "x:\n  execution-time: 1\n  execution-cost: -1\n  pre-condition: state[a] == true\n  post-condition: P=1 -> state[a] = false\n  components: [t]\n";
        let e = parse_action_set(text).unwrap_err();
        assert!(e.to_string().contains("execution-cost"), "{e}");
    }

    #[test]
    fn missing_action_field() {
        let text = "x:\n  execution-time: 1\n  pre-condition: state[a] == true\n  post-condition: P=1 -> state[a] = false\n  components: [t]\n";
        let e = parse_action_set(text).unwrap_err();
        assert!(e.to_string().contains("execution-cost"), "{e}");
    }

    #[test]
    fn post_condition_list_passthrough() {
        let text = "x:\n  execution-time: 1\n  execution-cost: 2\n  pre-condition: state[a] == true\n  post-condition:\n    - P=1 -> state[a] = false\n    - P=0.5 -> state[b] = true\n  components: [t]\n";
        let doc = parse_action_set(text).unwrap();
        assert_eq!(
            doc.actions[0].post_condition.entries(),
            ["P=1 -> state[a] = false", "P=0.5 -> state[b] = true"]
        );
    }

    #[test]
    fn initial_state_forms() {
        let doc = parse_initial_state("active: false\nredis-service:\n  active: true\n").unwrap();
        assert_eq!(doc.global["active"], false);
        assert_eq!(doc.per_type["redis-service"]["active"], true);
        assert!(parse_initial_state("active: 3\n").is_err());
    }
}
