//! Plain-text export of an explicit chain.
//!
//! * `.tra`: header `states transitions`, then one `src dst rate` line per
//!   stored entry, rows in state order and targets ascending.
//! * `.sta`: header `(v1,...,vn)`, then `index:(x1,...,xn)` per state.
//! * `.lab`: header `0="init" 1="deadlock"`, then `index: labels` for every
//!   state carrying at least one label.

use std::io::{self, Write};

use super::Ctmc;
use crate::Scalar;

pub fn write_tra<T: Scalar, W: Write>(ctmc: &Ctmc<T>, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {}", ctmc.num_states(), ctmc.num_transitions())?;
    for s in 0..ctmc.num_states() {
        for (t, r) in ctmc.successors(s) {
            writeln!(w, "{s} {t} {}", r.as_f64())?;
        }
    }
    Ok(())
}

pub fn write_sta<T: Scalar, W: Write>(ctmc: &Ctmc<T>, mut w: W) -> io::Result<()> {
    let names: Vec<&str> = ctmc.variables().iter().map(|v| v.name.as_str()).collect();
    writeln!(w, "({})", names.join(","))?;
    for s in 0..ctmc.num_states() {
        let vals: Vec<String> = ctmc.state(s).iter().map(i64::to_string).collect();
        writeln!(w, "{s}:({})", vals.join(","))?;
    }
    Ok(())
}

pub fn write_lab<T: Scalar, W: Write>(ctmc: &Ctmc<T>, mut w: W) -> io::Result<()> {
    writeln!(w, "0=\"init\" 1=\"deadlock\"")?;
    for s in 0..ctmc.num_states() {
        let mut labels = Vec::new();
        if s == ctmc.initial_state() {
            labels.push("0");
        }
        if ctmc.is_absorbing(s) {
            labels.push("1");
        }
        if !labels.is_empty() {
            writeln!(w, "{s}: {}", labels.join(" "))?;
        }
    }
    Ok(())
}
