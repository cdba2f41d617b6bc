//! Canonical rendering of models and formulas.
//!
//! Output re-parses to a structurally equal tree: parentheses are emitted
//! exactly where precedence or associativity requires them.

use std::fmt::Write;

use super::ast::*;
use super::property::*;
use crate::Rational;

/// Render a rational as a decimal literal when it has a finite expansion.
pub fn format_rational(r: &Rational) -> String {
    let (n, d) = (i128::from(*r.numer()), i128::from(*r.denom()));
    let (mut twos, mut fives, mut rest) = (0u32, 0u32, d);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return format!("{n}/{d}");
    }
    let scale = twos.max(fives);
    let Some(m) = 10i128
        .checked_pow(scale)
        .and_then(|p| (p / d).checked_mul(n))
    else {
        return format!("{n}/{d}");
    };
    if scale == 0 {
        return m.to_string();
    }
    let sign = if m < 0 { "-" } else { "" };
    let digits = format!("{:0>width$}", m.unsigned_abs(), width = scale as usize + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - scale as usize);
    format!("{sign}{int_part}.{frac_part}")
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(UnOp::Not, _) => 3,
        Expr::Unary(UnOp::Neg, _) => 7,
        _ => 8,
    }
}

fn write_expr_at(out: &mut String, e: &Expr, min_prec: u8) {
    let paren = expr_prec(e) < min_prec;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Num(n) => out.push_str(&format_rational(n)),
        Expr::Ident(name) => out.push_str(name),
        Expr::Unary(UnOp::Not, inner) => {
            out.push('!');
            write_expr_at(out, inner, 3);
        }
        Expr::Unary(UnOp::Neg, inner) => {
            out.push('-');
            write_expr_at(out, inner, 7);
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let left_min = if op.is_relational() { p + 1 } else { p };
            write_expr_at(out, a, left_min);
            match op {
                BinOp::Or | BinOp::And | BinOp::Add | BinOp::Sub => write!(out, " {} ", op.symbol()).unwrap(),
                _ => out.push_str(op.symbol()),
            }
            write_expr_at(out, b, p + 1);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr_at(&mut s, e, 0);
    s
}

fn write_command(out: &mut String, c: &Command) {
    write!(out, "  [{}] {} -> ", c.action.as_deref().unwrap_or(""), print_expr(&c.guard)).unwrap();
    if let Some(rate) = &c.rate {
        write!(out, "{} : ", print_expr(rate)).unwrap();
    }
    if c.updates.is_empty() {
        out.push_str("true");
    }
    for (i, u) in c.updates.iter().enumerate() {
        if i > 0 {
            out.push_str(" & ");
        }
        write!(out, "({}'={})", u.var, print_expr(&u.value)).unwrap();
    }
    out.push(';');
    if let Some(id) = &c.reaction {
        write!(out, " //@reaction {id}").unwrap();
    }
    out.push('\n');
}

pub fn print_model(ast: &ModelAst) -> String {
    let mut out = String::new();
    for c in &ast.constants {
        writeln!(out, "const {} {} = {};", c.ty.keyword(), c.name, c.value).unwrap();
    }
    for m in &ast.modules {
        if !out.is_empty() {
            out.push('\n');
        }
        writeln!(out, "module {}", m.name).unwrap();
        for v in &m.variables {
            writeln!(out, "  {} : [{}..{}] init {};", v.name, v.lo, v.hi, v.init).unwrap();
        }
        if !m.commands.is_empty() {
            out.push('\n');
        }
        for c in &m.commands {
            write_command(&mut out, c);
        }
        out.push_str("endmodule\n");
    }
    for r in &ast.rewards {
        if !out.is_empty() {
            out.push('\n');
        }
        writeln!(out, "rewards \"{}\"", r.name).unwrap();
        for item in &r.state_items {
            writeln!(out, "  {} : {};", print_expr(&item.guard), print_expr(&item.value)).unwrap();
        }
        for item in &r.trans_items {
            writeln!(
                out,
                "  [{}] {} : {};",
                item.action.as_deref().unwrap_or(""),
                print_expr(&item.guard),
                print_expr(&item.value)
            )
            .unwrap();
        }
        out.push_str("endrewards\n");
    }
    out
}

fn formula_prec(f: &StateFormula) -> u8 {
    match f {
        StateFormula::Or(..) => 1,
        StateFormula::And(..) => 2,
        StateFormula::Not(_) => 3,
        StateFormula::Atom(e) => expr_prec(e).max(4),
        _ => 8,
    }
}

fn write_bound(out: &mut String, b: &Bound) {
    match b {
        Bound::Query => out.push_str("=?"),
        Bound::Compare(c, v) => write!(out, "{}{}", c.symbol(), format_rational(v)).unwrap(),
    }
}

fn write_interval(out: &mut String, i: &Interval) {
    match i.hi {
        Some(hi) => write!(out, "[{},{}]", format_rational(&i.lo), format_rational(&hi)).unwrap(),
        None if i.lo == Rational::ZERO => {}
        None => write!(out, ">={}", format_rational(&i.lo)).unwrap(),
    }
}

fn write_formula_at(out: &mut String, f: &StateFormula, min_prec: u8) {
    let paren = formula_prec(f) < min_prec;
    if paren {
        out.push('(');
    }
    match f {
        StateFormula::True => out.push_str("true"),
        StateFormula::False => out.push_str("false"),
        StateFormula::Atom(e) => write_expr_at(out, e, 4),
        StateFormula::Not(a) => {
            out.push('!');
            write_formula_at(out, a, 3);
        }
        StateFormula::And(a, b) => {
            write_formula_at(out, a, 2);
            out.push_str(" & ");
            write_formula_at(out, b, 3);
        }
        StateFormula::Or(a, b) => {
            write_formula_at(out, a, 1);
            out.push_str(" | ");
            write_formula_at(out, b, 2);
        }
        StateFormula::Prob { bound, path } => {
            out.push('P');
            write_bound(out, bound);
            out.push_str(" [ ");
            if path.is_eventually() {
                out.push('F');
            } else {
                write_formula_at(out, &path.left, 0);
                out.push_str(" U");
            }
            write_interval(out, &path.interval);
            out.push(' ');
            write_formula_at(out, &path.right, 0);
            out.push_str(" ]");
        }
        StateFormula::Steady { bound, inner } => {
            out.push('S');
            write_bound(out, bound);
            out.push_str(" [ ");
            write_formula_at(out, inner, 0);
            out.push_str(" ]");
        }
        StateFormula::Reward { structure, bound, kind } => {
            write!(out, "R{{\"{structure}\"}}").unwrap();
            write_bound(out, bound);
            out.push_str(" [ ");
            match kind {
                RewardKind::Instantaneous(t) => write!(out, "I={}", format_rational(t)).unwrap(),
                RewardKind::Cumulative(t) => write!(out, "C<={}", format_rational(t)).unwrap(),
                RewardKind::Reachability(target) => {
                    out.push_str("F ");
                    write_formula_at(out, target, 0);
                }
                RewardKind::SteadyState => out.push('S'),
            }
            out.push_str(" ]");
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_formula(f: &StateFormula) -> String {
    let mut s = String::new();
    write_formula_at(&mut s, f, 0);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_rational(&Rational::new(1, 8)), "0.125");
        assert_eq!(format_rational(&Rational::new(-3, 2)), "-1.5");
        assert_eq!(format_rational(&Rational::new(7, 1)), "7");
        assert_eq!(format_rational(&Rational::new(1, 1000)), "0.001");
        assert_eq!(format_rational(&Rational::new(1, 3)), "1/3");
    }

    #[test]
    fn parentheses_follow_precedence() {
        let sum = Expr::binary(BinOp::Add, Expr::ident("a"), Expr::ident("b"));
        let prod = Expr::binary(BinOp::Mul, sum.clone(), Expr::int(2));
        assert_eq!(print_expr(&prod), "(a + b)*2");
        let nested = Expr::binary(BinOp::Sub, Expr::ident("a"), sum);
        assert_eq!(print_expr(&nested), "a - (a + b)");
        let guard = Expr::not(Expr::var_eq("x", 1));
        assert_eq!(print_expr(&guard), "!x=1");
    }
}
