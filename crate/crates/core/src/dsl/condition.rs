//! Recursive-descent parser and printer for pre-condition expressions.
//!
//! ```text
//! cond    := or
//! or      := and ("||" and)*
//! and     := unary ("&&" unary)*
//! unary   := "!" unary | primary
//! primary := "state[" IDENT "]" "==" BOOL | "(" cond ")"
//! BOOL    := "true" | "false"
//! ```

use std::fmt::Write as _;

use crate::dsl::DslError;
use crate::model::ConditionExpr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LBracket,
    RBracket,
    EqEq,
    AndAnd,
    OrOr,
    Bang,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Bang => "`!`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn err(column: usize, message: impl Into<String>) -> DslError {
    DslError::Condition {
        column,
        message: message.into(),
    }
}

/// Tokens paired with their 1-based column.
fn lex(src: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let tok = match c {
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '!' => Tok::Bang,
            '=' if two('=') => Tok::EqEq,
            '&' if two('&') => Tok::AndAnd,
            '|' if two('|') => Tok::OrOr,
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => {
                let mut op = other.to_string();
                if let Some(&n) = chars.get(i + 1) {
                    if "=&|<>".contains(n) {
                        op.push(n);
                    }
                }
                return Err(err(col, format!("unknown operator `{op}`")));
            }
        };
        i += match tok {
            Tok::EqEq | Tok::AndAnd | Tok::OrOr => 2,
            _ => 1,
        };
        out.push((tok, col));
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> DslError {
        err(
            self.column(),
            format!("unexpected token {}, expected {expected}", self.peek().describe()),
        )
    }

    fn or(&mut self) -> Result<ConditionExpr, DslError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<ConditionExpr, DslError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ConditionExpr, DslError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(self.unary()?.not());
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ConditionExpr, DslError> {
        match self.peek().clone() {
            Tok::LParen => {
                let open = self.column();
                self.bump();
                let inner = self.or()?;
                if *self.peek() != Tok::RParen {
                    return Err(err(
                        self.column(),
                        format!(
                            "unexpected token {}, expected `)` to close `(` opened at column {open}",
                            self.peek().describe()
                        ),
                    ));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(kw) if kw == "state" => {
                self.bump();
                let open = self.column();
                if *self.peek() != Tok::LBracket {
                    return Err(self.unexpected("`[` after `state`"));
                }
                self.bump();
                let variable = match self.bump() {
                    Tok::Ident(name) => name,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("a variable name"));
                    }
                };
                if *self.peek() != Tok::RBracket {
                    return Err(err(
                        open,
                        format!(
                            "unterminated bracket: `state[` is never closed (found {} at column {})",
                            self.peek().describe(),
                            self.column()
                        ),
                    ));
                }
                self.bump();
                if *self.peek() != Tok::EqEq {
                    return Err(self.unexpected("`==`"));
                }
                self.bump();
                let value = match self.peek() {
                    Tok::Ident(b) if b == "true" => true,
                    Tok::Ident(b) if b == "false" => false,
                    _ => return Err(self.unexpected("`true` or `false`")),
                };
                self.bump();
                Ok(ConditionExpr::VarEquals { variable, value })
            }
            _ => Err(self.unexpected("`state[...]`, `!` or `(`")),
        }
    }
}

/// Parses a pre-condition such as `state[active] == true && !(state[restarted] == true)`.
pub fn parse_condition(src: &str) -> Result<ConditionExpr, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let expr = p.or()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("`&&`, `||` or end of input"));
    }
    Ok(expr)
}

/// Canonical text form; [`parse_condition`] reads it back to the same tree.
pub fn print_condition(expr: &ConditionExpr) -> String {
    fn go(e: &ConditionExpr, out: &mut String) {
        match e {
            ConditionExpr::VarEquals { variable, value } => {
                let _ = write!(out, "state[{variable}] == {value}");
            }
            ConditionExpr::And(l, r) => {
                wrap(l, out, matches!(**l, ConditionExpr::Or(..)));
                out.push_str(" && ");
                wrap(r, out, matches!(**r, ConditionExpr::Or(..) | ConditionExpr::And(..)));
            }
            ConditionExpr::Or(l, r) => {
                go(l, out);
                out.push_str(" || ");
                wrap(r, out, matches!(**r, ConditionExpr::Or(..)));
            }
            ConditionExpr::Not(c) => {
                out.push('!');
                wrap(c, out, !matches!(**c, ConditionExpr::Not(..)));
            }
        }
    }
    fn wrap(e: &ConditionExpr, out: &mut String, parens: bool) {
        if parens {
            out.push('(');
            go(e, out);
            out.push(')');
        } else {
            go(e, out);
        }
    }
    let mut out = String::new();
    go(expr, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConditionExpr as C;

    #[test]
    fn single_comparison() {
        assert_eq!(
            parse_condition("state[active] == false").unwrap(),
            C::var("active", false)
        );
    }

    #[test]
    fn restart_precondition_shape() {
        let e = parse_condition(
            "state[active] == true && state[corrupted] == true && !(state[restarted] == true)",
        )
        .unwrap();
        let expected = C::var("active", true)
            .and(C::var("corrupted", true))
            .and(C::var("restarted", true).not());
        assert_eq!(e, expected);
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let e = parse_condition("state[a] == true && state[b] == true || state[c] == true").unwrap();
        assert_eq!(
            e,
            C::var("a", true).and(C::var("b", true)).or(C::var("c", true))
        );
    }

    #[test]
    fn unclosed_bracket_points_at_bracket() {
        match parse_condition("state[active == true") {
            Err(DslError::Condition { column, message }) => {
                assert_eq!(column, 6);
                assert!(message.contains("unterminated"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_operator() {
        let e = parse_condition("state[a] = true").unwrap_err();
        assert!(e.to_string().contains("unknown operator `=`"), "{e}");
        let e = parse_condition("state[a] == true & state[b] == false").unwrap_err();
        assert!(e.to_string().contains("`&`"), "{e}");
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let e = parse_condition("state[a] == true )").unwrap_err();
        assert!(matches!(e, DslError::Condition { column: 18, .. }), "{e}");
    }

    #[test]
    fn printer_keeps_right_nesting() {
        let e = C::var("a", true).and(C::var("b", false).and(C::var("c", true)));
        let s = print_condition(&e);
        assert_eq!(s, "state[a] == true && (state[b] == false && state[c] == true)");
        assert_eq!(parse_condition(&s).unwrap(), e);
    }
}
