//! Recursive-descent parser for models and properties.

use super::ast::*;
use super::eval::{self, EvalError, Ty};
use super::lexer::{tokenize, Pos, Tok, Token};
use super::property::*;
use super::{LangError, SourceMap, ValidationKind};
use crate::Rational;

const KEYWORDS: &[&str] = &[
    "const", "int", "double", "bool", "rate", "module", "endmodule", "rewards", "endrewards", "init",
    "true", "false",
];

pub(crate) struct Parser<'m> {
    toks: Vec<Token>,
    i: usize,
    /// Model used to resolve identifiers and reward names in properties.
    model: Option<&'m ModelAst>,
}

type PResult<T> = Result<T, LangError>;

impl<'m> Parser<'m> {
    pub(crate) fn new(src: &str, model: Option<&'m ModelAst>) -> PResult<Self> {
        Ok(Self {
            toks: tokenize(src)?,
            i: 0,
            model,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        Err(LangError::syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if self.peek() == &tok {
            Ok(self.bump().pos)
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Pos> {
        if self.at_keyword(kw) {
            Ok(self.bump().pos)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => self.unexpected(what),
        }
    }

    fn number(&mut self, what: &str) -> PResult<(Rational, Pos)> {
        match self.peek().clone() {
            Tok::Num(n) => {
                let pos = self.bump().pos;
                Ok((n, pos))
            }
            _ => self.unexpected(what),
        }
    }

    fn skip_annotations(&mut self) {
        while matches!(self.peek(), Tok::Annotation(..)) {
            self.bump();
        }
    }

    // ---------------------------------------------------------------- model

    pub(crate) fn parse_program(&mut self, base: &[Constant]) -> PResult<(ModelAst, SourceMap)> {
        let mut ast = ModelAst {
            constants: base.to_vec(),
            ..ModelAst::default()
        };
        let mut map = SourceMap {
            constants: vec![Pos::default(); base.len()],
            ..SourceMap::default()
        };
        loop {
            self.skip_annotations();
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "const" => {
                    let (c, pos) = self.const_decl(&ast.constants)?;
                    ast.constants.push(c);
                    map.constants.push(pos);
                }
                Tok::Ident(k) if k == "module" => {
                    let (m, pos, vars, cmds) = self.module(&ast.constants)?;
                    ast.modules.push(m);
                    map.modules.push(pos);
                    map.variables.push(vars);
                    map.commands.push(cmds);
                }
                Tok::Ident(k) if k == "rewards" => {
                    let (r, pos, st, tr) = self.rewards()?;
                    ast.rewards.push(r);
                    map.rewards.push(pos);
                    map.state_items.push(st);
                    map.trans_items.push(tr);
                }
                _ => return self.unexpected("`const`, `module` or `rewards`"),
            }
        }
        Ok((ast, map))
    }

    fn const_decl(&mut self, known: &[Constant]) -> PResult<(Constant, Pos)> {
        let pos = self.expect_keyword("const")?;
        let declared = match self.peek() {
            Tok::Ident(k) if k == "int" => Some(ConstType::Int),
            Tok::Ident(k) if k == "double" || k == "rate" => Some(ConstType::Double),
            Tok::Ident(k) if k == "bool" => Some(ConstType::Bool),
            _ => None,
        };
        if declared.is_some() {
            self.bump();
        }
        let (name, _) = self.ident("constant name")?;
        self.expect(Tok::Eq)?;
        let expr_pos = self.pos();
        let expr = self.expr()?;
        self.expect(Tok::Semi)?;
        let value = fold_with(&expr, known, expr_pos)?;
        let ty = match (declared, value) {
            (Some(ConstType::Bool), Value::Bool(_)) | (None, Value::Bool(_)) => ConstType::Bool,
            (Some(ConstType::Int), Value::Num(n)) if n.is_integer() => ConstType::Int,
            (Some(ConstType::Double), Value::Num(_)) => ConstType::Double,
            (None, Value::Num(n)) => {
                if n.is_integer() {
                    ConstType::Int
                } else {
                    ConstType::Double
                }
            }
            (Some(t), v) => {
                return Err(LangError::validation(
                    Some(expr_pos),
                    ValidationKind::TypeMismatch,
                    format!("constant `{name}` declared {} but has value {v}", t.keyword()),
                ))
            }
        };
        Ok((Constant { name, ty, value }, pos))
    }

    #[allow(clippy::type_complexity)]
    fn module(&mut self, consts: &[Constant]) -> PResult<(ModuleDef, Pos, Vec<Pos>, Vec<Pos>)> {
        let pos = self.expect_keyword("module")?;
        let (name, _) = self.ident("module name")?;
        let mut module = ModuleDef {
            name,
            variables: Vec::new(),
            commands: Vec::new(),
        };
        let (mut var_pos, mut cmd_pos) = (Vec::new(), Vec::new());
        let mut pending: Option<(String, Pos)> = None;
        loop {
            match self.peek().clone() {
                Tok::Ident(k) if k == "endmodule" => {
                    self.bump();
                    break;
                }
                Tok::Annotation(key, value) => {
                    let apos = self.bump().pos;
                    if key == "reaction" {
                        if pending.is_some() {
                            return Err(LangError::syntax(apos, "two reaction annotations for one command"));
                        }
                        pending = Some((reaction_id(&value, apos)?, apos));
                    }
                }
                Tok::LBracket => {
                    let (mut cmd, cpos, end_line) = self.command()?;
                    if let Tok::Annotation(key, value) = self.peek().clone() {
                        let apos = self.pos();
                        if key == "reaction" && apos.line == end_line {
                            self.bump();
                            if pending.is_some() {
                                return Err(LangError::syntax(apos, "two reaction annotations for one command"));
                            }
                            pending = Some((reaction_id(&value, apos)?, apos));
                        }
                    }
                    cmd.reaction = pending.take().map(|(id, _)| id);
                    module.commands.push(cmd);
                    cmd_pos.push(cpos);
                }
                Tok::Ident(_) if self.peek_at(1) == &Tok::Colon => {
                    if !module.commands.is_empty() {
                        return Err(LangError::syntax(
                            self.pos(),
                            "variable declarations must precede commands",
                        ));
                    }
                    let (v, vpos) = self.var_decl(consts)?;
                    module.variables.push(v);
                    var_pos.push(vpos);
                }
                _ => return self.unexpected("variable declaration, command or `endmodule`"),
            }
        }
        if let Some((_, apos)) = pending {
            return Err(LangError::syntax(apos, "reaction annotation is not attached to a command"));
        }
        Ok((module, pos, var_pos, cmd_pos))
    }

    fn var_decl(&mut self, consts: &[Constant]) -> PResult<(VarDecl, Pos)> {
        let (name, pos) = self.ident("variable name")?;
        self.expect(Tok::Colon)?;
        self.expect(Tok::LBracket)?;
        let lo = self.int_const(consts)?;
        self.expect(Tok::DotDot)?;
        let hi = self.int_const(consts)?;
        self.expect(Tok::RBracket)?;
        let init = if self.at_keyword("init") {
            self.bump();
            self.int_const(consts)?
        } else {
            lo
        };
        self.expect(Tok::Semi)?;
        Ok((VarDecl { name, lo, hi, init }, pos))
    }

    fn int_const(&mut self, consts: &[Constant]) -> PResult<i64> {
        let pos = self.pos();
        let e = self.additive()?;
        match fold_with(&e, consts, pos)? {
            Value::Num(n) if n.is_integer() => Ok(*n.numer()),
            v => Err(LangError::validation(
                Some(pos),
                ValidationKind::TypeMismatch,
                format!("expected an integer constant, found {v}"),
            )),
        }
    }

    /// Returns the command, its start position and the line of its `;`.
    fn command(&mut self) -> PResult<(Command, Pos, usize)> {
        let pos = self.expect(Tok::LBracket)?;
        let action = match self.peek() {
            Tok::RBracket => None,
            _ => Some(self.ident("action label")?.0),
        };
        self.expect(Tok::RBracket)?;
        let guard = self.expr()?;
        self.expect(Tok::Arrow)?;
        let rate = if self.at_update_start() {
            None
        } else {
            let r = self.expr()?;
            self.expect(Tok::Colon)?;
            Some(r)
        };
        let updates = self.updates()?;
        let end = self.expect(Tok::Semi)?;
        Ok((
            Command {
                action,
                guard,
                rate,
                updates,
                reaction: None,
            },
            pos,
            end.line,
        ))
    }

    fn at_update_start(&self) -> bool {
        let paren_update = self.peek() == &Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(_))
            && self.peek_at(2) == &Tok::Prime;
        let no_op = self.at_keyword("true") && self.peek_at(1) == &Tok::Semi;
        paren_update || no_op
    }

    fn updates(&mut self) -> PResult<Vec<Update>> {
        if self.at_keyword("true") {
            self.bump();
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let (var, _) = self.ident("variable name")?;
            self.expect(Tok::Prime)?;
            self.expect(Tok::Eq)?;
            let value = self.expr()?;
            self.expect(Tok::RParen)?;
            out.push(Update { var, value });
            if !self.eat(&Tok::Amp) {
                break;
            }
        }
        Ok(out)
    }

    #[allow(clippy::type_complexity)]
    fn rewards(&mut self) -> PResult<(RewardBlock, Pos, Vec<Pos>, Vec<Pos>)> {
        let pos = self.expect_keyword("rewards")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                s
            }
            _ => return self.unexpected("quoted reward structure name"),
        };
        let mut block = RewardBlock {
            name,
            state_items: Vec::new(),
            trans_items: Vec::new(),
        };
        let (mut st_pos, mut tr_pos) = (Vec::new(), Vec::new());
        loop {
            self.skip_annotations();
            if self.at_keyword("endrewards") {
                self.bump();
                break;
            }
            if self.peek() == &Tok::Eof {
                return self.unexpected("`endrewards`");
            }
            let ipos = self.pos();
            if self.eat(&Tok::LBracket) {
                let action = match self.peek() {
                    Tok::RBracket => None,
                    _ => Some(self.ident("action label")?.0),
                };
                self.expect(Tok::RBracket)?;
                let guard = self.expr()?;
                self.expect(Tok::Colon)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                block.trans_items.push(TransRewardItem { action, guard, value });
                tr_pos.push(ipos);
            } else {
                let guard = self.expr()?;
                self.expect(Tok::Colon)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                block.state_items.push(StateRewardItem { guard, value });
                st_pos.push(ipos);
            }
        }
        Ok((block, pos, st_pos, tr_pos))
    }

    // ----------------------------------------------------------- expressions

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Bar) {
            let rhs = self.conjunction()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let mut lhs = self.negation()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.negation()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            Ok(Expr::not(self.negation()?))
        } else {
            self.relational()
        }
    }

    fn relational(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Star) {
            let rhs = self.unary()?;
            lhs = Expr::binary(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Ident(k) if k == "true" => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(_) => Ok(Expr::Ident(self.ident("identifier")?.0)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.unexpected("expression"),
        }
    }

    // ------------------------------------------------------------ properties

    pub(crate) fn parse_formula_eof(&mut self) -> PResult<StateFormula> {
        let f = self.formula()?;
        if self.peek() != &Tok::Eof {
            return self.unexpected("end of property");
        }
        Ok(f)
    }

    fn formula(&mut self) -> PResult<StateFormula> {
        let mut lhs = self.formula_and()?;
        while self.eat(&Tok::Bar) {
            let rhs = self.formula_and()?;
            lhs = StateFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn formula_and(&mut self) -> PResult<StateFormula> {
        let mut lhs = self.formula_not()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.formula_not()?;
            lhs = StateFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn formula_not(&mut self) -> PResult<StateFormula> {
        if self.eat(&Tok::Bang) {
            Ok(StateFormula::negate(self.formula_not()?))
        } else {
            self.formula_primary()
        }
    }

    fn at_operator(&self, name: &str) -> bool {
        if !self.at_keyword(name) {
            return false;
        }
        let bound_follows = match self.peek_at(1) {
            Tok::Eq => self.peek_at(2) == &Tok::Question,
            Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge => {
                matches!(self.peek_at(2), Tok::Num(_)) && self.peek_at(3) == &Tok::LBracket
            }
            _ => false,
        };
        bound_follows || (name == "R" && self.peek_at(1) == &Tok::LBrace)
    }

    fn formula_primary(&mut self) -> PResult<StateFormula> {
        let relop_follows = |t: &Tok| {
            matches!(
                t,
                Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Plus | Tok::Minus | Tok::Star
            )
        };
        if self.at_operator("P") {
            return self.prob_operator();
        }
        if self.at_operator("S") {
            return self.steady_operator();
        }
        if self.at_operator("R") {
            return self.reward_operator();
        }
        if (self.at_keyword("true") || self.at_keyword("false")) && !relop_follows(self.peek_at(1)) {
            let t = self.bump();
            return Ok(if t.tok == Tok::Ident("true".into()) {
                StateFormula::True
            } else {
                StateFormula::False
            });
        }
        if self.peek() == &Tok::LParen {
            let save = self.i;
            self.bump();
            if let Ok(f) = self.formula() {
                if self.eat(&Tok::RParen) && !relop_follows(self.peek()) {
                    return Ok(f);
                }
            }
            self.i = save;
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<StateFormula> {
        let pos = self.pos();
        let e = self.relational()?;
        if let Some(model) = self.model {
            match eval::type_of(&e, &|n| model_ident_type(model, n)) {
                Ok(Ty::Bool) => {}
                Ok(_) => {
                    return Err(LangError::validation(
                        Some(pos),
                        ValidationKind::TypeMismatch,
                        "state formula must be boolean",
                    ))
                }
                Err(err) => return Err(LangError::from_eval(Some(pos), err)),
            }
        }
        Ok(StateFormula::Atom(e))
    }

    fn bound(&mut self, probability: bool) -> PResult<Bound> {
        let cmp = match self.peek() {
            Tok::Eq => {
                self.bump();
                self.expect(Tok::Question)?;
                return Ok(Bound::Query);
            }
            Tok::Lt => Comparison::Lt,
            Tok::Le => Comparison::Le,
            Tok::Ge => Comparison::Ge,
            Tok::Gt => Comparison::Gt,
            _ => return self.unexpected("`=?` or a comparison bound"),
        };
        self.bump();
        let (value, pos) = self.number("bound value")?;
        if probability && value > Rational::ONE {
            return Err(LangError::validation(
                Some(pos),
                ValidationKind::BoundOutOfRange,
                format!("probability bound {} is outside [0,1]", super::printer::format_rational(&value)),
            ));
        }
        Ok(Bound::Compare(cmp, value))
    }

    fn prob_operator(&mut self) -> PResult<StateFormula> {
        self.bump();
        let bound = self.bound(true)?;
        self.expect(Tok::LBracket)?;
        let path = if self.at_keyword("F") {
            self.bump();
            let interval = self.interval()?;
            PathFormula::eventually(interval, self.formula()?)
        } else {
            let left = self.formula()?;
            self.expect_keyword("U")?;
            let interval = self.interval()?;
            let right = self.formula()?;
            PathFormula {
                left: Box::new(left),
                right: Box::new(right),
                interval,
            }
        };
        self.expect(Tok::RBracket)?;
        Ok(StateFormula::Prob { bound, path })
    }

    fn interval(&mut self) -> PResult<Interval> {
        match self.peek() {
            Tok::LBracket => {
                self.bump();
                let (lo, _) = self.number("interval lower bound")?;
                self.expect(Tok::Comma)?;
                let (hi, hpos) = self.number("interval upper bound")?;
                self.expect(Tok::RBracket)?;
                if lo > hi {
                    return Err(LangError::validation(
                        Some(hpos),
                        ValidationKind::ReversedInterval,
                        "interval lower bound exceeds upper bound",
                    ));
                }
                Ok(Interval::between(lo, hi))
            }
            Tok::Le => {
                self.bump();
                Ok(Interval::upto(self.number("time bound")?.0))
            }
            Tok::Ge => {
                self.bump();
                Ok(Interval::from(self.number("time bound")?.0))
            }
            Tok::Lt | Tok::Gt => self.unexpected("`<=`, `>=` or `[`; strict time bounds are not supported"),
            _ => Ok(Interval::UNBOUNDED),
        }
    }

    fn steady_operator(&mut self) -> PResult<StateFormula> {
        self.bump();
        let bound = self.bound(true)?;
        self.expect(Tok::LBracket)?;
        let inner = self.formula()?;
        self.expect(Tok::RBracket)?;
        Ok(StateFormula::Steady {
            bound,
            inner: Box::new(inner),
        })
    }

    fn reward_operator(&mut self) -> PResult<StateFormula> {
        self.bump();
        self.expect(Tok::LBrace)?;
        let pos = self.pos();
        let structure = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                s
            }
            _ => return self.unexpected("quoted reward structure name"),
        };
        self.expect(Tok::RBrace)?;
        if let Some(model) = self.model {
            if model.reward_block(&structure).is_none() {
                return Err(LangError::validation(
                    Some(pos),
                    ValidationKind::UnknownReward,
                    format!("model has no reward structure \"{structure}\""),
                ));
            }
        }
        let bound = self.bound(false)?;
        self.expect(Tok::LBracket)?;
        let kind = if self.at_keyword("I") {
            self.bump();
            self.expect(Tok::Eq)?;
            RewardKind::Instantaneous(self.number("time")?.0)
        } else if self.at_keyword("C") {
            self.bump();
            self.expect(Tok::Le)?;
            RewardKind::Cumulative(self.number("time bound")?.0)
        } else if self.at_keyword("F") {
            self.bump();
            RewardKind::Reachability(Box::new(self.formula()?))
        } else if self.at_keyword("S") {
            self.bump();
            RewardKind::SteadyState
        } else {
            return self.unexpected("`I=`, `C<=`, `F` or `S`");
        };
        self.expect(Tok::RBracket)?;
        Ok(StateFormula::Reward { structure, bound, kind })
    }
}

fn reaction_id(value: &str, pos: Pos) -> PResult<String> {
    let id = value.trim();
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(LangError::syntax(pos, "reaction annotation needs a single id"));
    }
    Ok(id.to_string())
}

fn fold_with(expr: &Expr, consts: &[Constant], pos: Pos) -> PResult<Value> {
    let lookup = |n: &str| consts.iter().find(|c| c.name == n).map(|c| c.value);
    eval::fold(expr, &lookup).map_err(|e| LangError::from_eval(Some(pos), e))
}

/// Type of an identifier in a model's scope: variables are integers.
pub(crate) fn model_ident_type(model: &ModelAst, name: &str) -> Option<Ty> {
    if let Some(c) = model.constant(name) {
        return Some(match c.ty {
            ConstType::Bool => Ty::Bool,
            ConstType::Int => Ty::Int,
            ConstType::Double => Ty::Real,
        });
    }
    model.variables().any(|(_, v)| v.name == name).then_some(Ty::Int)
}

impl LangError {
    pub(crate) fn from_eval(pos: Option<Pos>, err: EvalError) -> Self {
        let kind = match err {
            EvalError::UnknownIdentifier(_) => ValidationKind::UnknownIdentifier,
            EvalError::Type(_) => ValidationKind::TypeMismatch,
            EvalError::Overflow => ValidationKind::Arithmetic,
        };
        LangError::validation(pos, kind, err.to_string())
    }
}
