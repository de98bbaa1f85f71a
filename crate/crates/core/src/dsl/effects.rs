//! Post-condition entries: `P=<p> -> state[<var>] = <bool>`.

use crate::dsl::condition::{is_ident_char, is_ident_start};
use crate::dsl::DslError;
use crate::model::Effect;

/// A parsed post-condition entry and whether it used the `rand(1)` alias.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEffect {
    pub effect: Effect,
    pub legacy_alias: bool,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), DslError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{lit}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, DslError> {
        self.skip_ws();
        let rest = self.rest();
        if !rest.starts_with(is_ident_start) {
            return Err(self.error("expected a variable name"));
        }
        let len = rest.find(|c| !is_ident_char(c)).unwrap_or(rest.len());
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<f64, DslError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(rest.len());
        // `-` in `->` belongs to the arrow, not the number.
        let len = rest[..len].find("->").unwrap_or(len);
        let text = &rest[..len];
        let value = text
            .parse::<f64>()
            .map_err(|_| self.error(format!("invalid probability `{text}`")))?;
        self.pos += len;
        Ok(value)
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError::Effect {
            source_text: self.src.to_string(),
            column: self.src[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }
}

fn parse_bool(c: &mut Cursor<'_>) -> Result<bool, DslError> {
    match c.ident()? {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(c.error(format!("expected `true` or `false`, found `{other}`"))),
    }
}

fn parse_entry(c: &mut Cursor<'_>) -> Result<ParsedEffect, DslError> {
    if c.eat("state") {
        // Legacy form `state[var] = rand(1)`.
        c.expect("[")?;
        let variable = c.ident()?.to_string();
        c.expect("]")?;
        c.expect("=")?;
        c.expect("rand")?;
        c.expect("(")?;
        let p = c.number()?;
        c.expect(")")?;
        if p != 1.0 {
            return Err(c.error(format!(
                "only `rand(1)` is accepted as a legacy alias, found `rand({p})`"
            )));
        }
        return Ok(ParsedEffect {
            effect: Effect {
                probability: 1.0,
                variable,
                value: true,
            },
            legacy_alias: true,
        });
    }
    c.expect("P")?;
    c.expect("=")?;
    let start = c.pos;
    let probability = c.number()?;
    if !(0.0..=1.0).contains(&probability) {
        let mut at = Cursor { src: c.src, pos: start };
        at.skip_ws();
        return Err(at.error(format!("probability {probability} outside [0, 1]")));
    }
    c.expect("->")?;
    c.expect("state")?;
    c.expect("[")?;
    let variable = c.ident()?.to_string();
    c.expect("]")?;
    c.expect("=")?;
    let value = parse_bool(c)?;
    Ok(ParsedEffect {
        effect: Effect {
            probability,
            variable,
            value,
        },
        legacy_alias: false,
    })
}

/// Parses one post-condition string. Entries are separated by `;`; a missing
/// separator between two complete entries is tolerated.
pub fn parse_effect_entries(src: &str) -> Result<Vec<ParsedEffect>, DslError> {
    let mut c = Cursor { src, pos: 0 };
    let mut out = Vec::new();
    while !c.at_end() {
        out.push(parse_entry(&mut c)?);
        if c.at_end() {
            break;
        }
        c.eat(";");
    }
    if out.is_empty() {
        return Err(c.error("empty post-condition"));
    }
    Ok(out)
}

/// Parses a post-condition given as one string or as a list of strings,
/// preserving entry order.
pub fn parse_effects<S: AsRef<str>>(sources: &[S]) -> Result<Vec<Effect>, DslError> {
    let mut out = Vec::new();
    for s in sources {
        out.extend(parse_effect_entries(s.as_ref())?.into_iter().map(|p| p.effect));
    }
    Ok(out)
}

pub fn print_effects(effects: &[Effect]) -> String {
    effects
        .iter()
        .map(|e| format!("P={} -> state[{}] = {}", e.probability, e.variable, e.value))
        .collect::<Vec<_>>()
        .join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eff(p: f64, v: &str, b: bool) -> Effect {
        Effect {
            probability: p,
            variable: v.into(),
            value: b,
        }
    }

    #[test]
    fn restart_post_condition() {
        let e = parse_effects(&["P=0.75 -> state[corrupted] = false; P=1 -> state[restarted] = true"])
            .unwrap();
        assert_eq!(e, vec![eff(0.75, "corrupted", false), eff(1.0, "restarted", true)]);
    }

    #[test]
    fn zero_probability_is_allowed() {
        assert_eq!(
            parse_effects(&["P=0 -> state[active] = true"]).unwrap(),
            vec![eff(0.0, "active", true)]
        );
    }

    #[test]
    fn probability_above_one_is_rejected() {
        let e = parse_effects(&["P=1.5 -> state[x] = true"]).unwrap_err();
        assert!(e.to_string().contains("outside [0, 1]"), "{e}");
    }

    #[test]
    fn list_form_keeps_order() {
        let e = parse_effects(&["P=1 -> state[b] = true", "P=0.5 -> state[a] = false"]).unwrap();
        assert_eq!(e, vec![eff(1.0, "b", true), eff(0.5, "a", false)]);
    }

    #[test]
    fn missing_separator_is_tolerated() {
        let e = parse_effects(&[
            "P=1 -> state[passwordRequired] = true P=1 -> state[confVuln] = false; P=1 -> state[intVuln] = false",
        ])
        .unwrap();
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn legacy_rand_alias() {
        let p = parse_effect_entries("state[active] = rand(1)").unwrap();
        assert_eq!(p[0].effect, eff(1.0, "active", true));
        assert!(p[0].legacy_alias);
        assert!(parse_effect_entries("state[active] = rand(0.5)").is_err());
    }

    #[test]
    fn malformed_entries() {
        for bad in ["", "P=1 state[a] = true", "P=1 -> state[a] = maybe", "P=x -> state[a] = true"] {
            assert!(parse_effects(&[bad]).is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn printer_round_trips() {
        let e = vec![eff(0.7, "confVuln", true), eff(1.0, "accessRestricted", true)];
        assert_eq!(parse_effects(&[print_effects(&e)]).unwrap(), e);
    }
}
