use std::collections::HashSet;

use super::ast::*;
use super::eval::{self, Ty};
use super::lexer::Pos;
use super::parser::model_ident_type;
use super::{LangError, SourceMap, ValidationKind};

struct Ctx<'a> {
    ast: &'a ModelAst,
    map: Option<&'a SourceMap>,
}

impl Ctx<'_> {
    fn err(&self, pos: Option<Pos>, kind: ValidationKind, msg: impl Into<String>) -> LangError {
        LangError::validation(pos, kind, msg)
    }

    fn const_pos(&self, i: usize) -> Option<Pos> {
        self.map.and_then(|m| m.constants.get(i).copied()).filter(|p| p.line > 0)
    }

    fn module_pos(&self, i: usize) -> Option<Pos> {
        self.map.and_then(|m| m.modules.get(i).copied())
    }

    fn var_pos(&self, m: usize, v: usize) -> Option<Pos> {
        self.map.and_then(|s| s.variables.get(m)?.get(v).copied())
    }

    fn cmd_pos(&self, m: usize, c: usize) -> Option<Pos> {
        self.map.and_then(|s| s.commands.get(m)?.get(c).copied())
    }

    fn type_of(&self, e: &Expr) -> Result<Ty, eval::EvalError> {
        eval::type_of(e, &|n| model_ident_type(self.ast, n))
    }

    fn expect_type(&self, e: &Expr, want: &[Ty], what: &str, pos: Option<Pos>) -> Result<Ty, LangError> {
        let ty = self.type_of(e).map_err(|err| LangError::from_eval(pos, err))?;
        if want.contains(&ty) {
            Ok(ty)
        } else {
            Err(self.err(pos, ValidationKind::TypeMismatch, format!("{what} has type {ty:?}")))
        }
    }
}

/// Semantic checks on a parsed program. `map` supplies positions when the
/// tree came from source text.
pub fn validate(ast: &ModelAst, map: Option<&SourceMap>) -> Result<(), LangError> {
    let cx = Ctx { ast, map };
    check_names(&cx)?;
    for (mi, m) in ast.modules.iter().enumerate() {
        check_module(&cx, mi, m)?;
    }
    check_rewards(&cx)
}

fn check_names(cx: &Ctx) -> Result<(), LangError> {
    // constants and variables share the expression namespace; module names
    // are only compared among themselves since a module conventionally
    // owns a variable of the same name
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, c) in cx.ast.constants.iter().enumerate() {
        if !seen.insert(&c.name) {
            return Err(cx.err(
                cx.const_pos(i),
                ValidationKind::DuplicateName,
                format!("duplicate name `{}`", c.name),
            ));
        }
    }
    let mut modules: HashSet<&str> = HashSet::new();
    for (mi, m) in cx.ast.modules.iter().enumerate() {
        if !modules.insert(&m.name) {
            return Err(cx.err(
                cx.module_pos(mi),
                ValidationKind::DuplicateName,
                format!("duplicate module `{}`", m.name),
            ));
        }
        for (vi, v) in m.variables.iter().enumerate() {
            if !seen.insert(&v.name) {
                return Err(cx.err(
                    cx.var_pos(mi, vi),
                    ValidationKind::DuplicateName,
                    format!("duplicate name `{}`", v.name),
                ));
            }
        }
    }
    Ok(())
}

fn check_module(cx: &Ctx, mi: usize, m: &ModuleDef) -> Result<(), LangError> {
    if m.variables.is_empty() {
        return Err(cx.err(
            cx.module_pos(mi),
            ValidationKind::NoVariables,
            format!("module `{}` declares no variables", m.name),
        ));
    }
    for (vi, v) in m.variables.iter().enumerate() {
        let pos = cx.var_pos(mi, vi);
        if v.lo > v.hi {
            return Err(cx.err(
                pos,
                ValidationKind::EmptyRange,
                format!("range of `{}` is empty: [{}..{}]", v.name, v.lo, v.hi),
            ));
        }
        if !(v.lo..=v.hi).contains(&v.init) {
            return Err(cx.err(
                pos,
                ValidationKind::InitOutOfRange,
                format!("initial value {} of `{}` outside [{}..{}]", v.init, v.name, v.lo, v.hi),
            ));
        }
    }
    for (ci, c) in m.commands.iter().enumerate() {
        let pos = cx.cmd_pos(mi, ci);
        cx.expect_type(&c.guard, &[Ty::Bool], "guard", pos)?;
        match &c.rate {
            None if c.action.is_none() => {
                return Err(cx.err(pos, ValidationKind::MissingRate, "unlabelled command needs an explicit rate"))
            }
            None => {}
            Some(rate) => check_rate(cx, rate, pos)?,
        }
        let mut targets = HashSet::new();
        for u in &c.updates {
            if !m.variables.iter().any(|v| v.name == u.var) {
                let kind = if cx.ast.variables().any(|(_, v)| v.name == u.var) {
                    ValidationKind::ForeignUpdate
                } else {
                    ValidationKind::UnknownIdentifier
                };
                return Err(cx.err(
                    pos,
                    kind,
                    format!("module `{}` cannot update `{}`", m.name, u.var),
                ));
            }
            if !targets.insert(&u.var) {
                return Err(cx.err(
                    pos,
                    ValidationKind::DuplicateName,
                    format!("`{}` updated twice in one command", u.var),
                ));
            }
            cx.expect_type(&u.value, &[Ty::Int], "update value", pos)?;
        }
    }
    Ok(())
}

fn check_rate(cx: &Ctx, rate: &Expr, pos: Option<Pos>) -> Result<(), LangError> {
    cx.expect_type(rate, &[Ty::Int, Ty::Real], "rate", pos)?;
    if let Some(var) = rate.identifiers().into_iter().find(|n| cx.ast.constant(n).is_none()) {
        return Err(cx.err(
            pos,
            ValidationKind::NonConstantRate,
            format!("rate refers to variable `{var}`; rates must be constant"),
        ));
    }
    let value = eval::fold(rate, &|n| cx.ast.constant(n).map(|c| c.value))
        .map_err(|e| LangError::from_eval(pos, e))?;
    match value {
        Value::Num(r) if r > crate::Rational::ZERO => Ok(()),
        v => Err(cx.err(pos, ValidationKind::NonPositiveRate, format!("rate evaluates to {v}, must be > 0"))),
    }
}

fn check_rewards(cx: &Ctx) -> Result<(), LangError> {
    let mut names = HashSet::new();
    for (ri, r) in cx.ast.rewards.iter().enumerate() {
        let block_pos = cx.map.and_then(|m| m.rewards.get(ri).copied());
        if !names.insert(&r.name) {
            return Err(cx.err(
                block_pos,
                ValidationKind::DuplicateName,
                format!("duplicate reward structure \"{}\"", r.name),
            ));
        }
        let items = r
            .state_items
            .iter()
            .enumerate()
            .map(|(i, it)| (&it.guard, &it.value, cx.map.and_then(|m| m.state_items.get(ri)?.get(i).copied())))
            .chain(r.trans_items.iter().enumerate().map(|(i, it)| {
                (&it.guard, &it.value, cx.map.and_then(|m| m.trans_items.get(ri)?.get(i).copied()))
            }));
        for (guard, value, pos) in items {
            cx.expect_type(guard, &[Ty::Bool], "reward guard", pos)?;
            cx.expect_type(value, &[Ty::Int, Ty::Real], "reward value", pos)?;
            let constant = value.identifiers().iter().all(|n| cx.ast.constant(n).is_some());
            if constant {
                let v = eval::fold(value, &|n| cx.ast.constant(n).map(|c| c.value))
                    .map_err(|e| LangError::from_eval(pos, e))?;
                if matches!(v, Value::Num(r) if r < crate::Rational::ZERO) {
                    return Err(cx.err(pos, ValidationKind::NegativeReward, format!("reward value {v} is negative")));
                }
            }
        }
    }
    Ok(())
}
