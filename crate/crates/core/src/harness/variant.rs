//! Reaction bookkeeping and knockout variants.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::lang::ast::ModelAst;

/// A command position: `(module index, command index)`.
pub type CommandRef = (usize, usize);

/// Reaction id → commands implementing it.
///
/// Built from `//@reaction` annotations; a labelled command pulls in every
/// command sharing its label, so removing a reaction never leaves half a
/// synchronisation behind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionIndex {
    entries: Vec<(String, BTreeSet<CommandRef>)>,
}

impl ReactionIndex {
    pub fn build(ast: &ModelAst) -> Result<Self, Error> {
        let mut entries: Vec<(String, BTreeSet<CommandRef>)> = Vec::new();
        let mut owner: std::collections::HashMap<CommandRef, usize> = Default::default();
        let mut claim = |entries: &mut Vec<(String, BTreeSet<CommandRef>)>, r: usize, c: CommandRef| {
            match owner.get(&c) {
                Some(&o) if o != r => Err(Error::Spec(format!(
                    "command {} of module `{}` belongs to reactions {} and {}",
                    c.1 + 1,
                    ast.modules[c.0].name,
                    entries[o].0,
                    entries[r].0
                ))),
                _ => {
                    owner.insert(c, r);
                    entries[r].1.insert(c);
                    Ok(())
                }
            }
        };
        for (mi, m) in ast.modules.iter().enumerate() {
            for (ci, cmd) in m.commands.iter().enumerate() {
                let Some(id) = &cmd.reaction else { continue };
                let r = match entries.iter().position(|(e, _)| e == id) {
                    Some(r) => r,
                    None => {
                        entries.push((id.clone(), BTreeSet::new()));
                        entries.len() - 1
                    }
                };
                claim(&mut entries, r, (mi, ci))?;
                if let Some(label) = &cmd.action {
                    for (mj, other) in ast.modules.iter().enumerate() {
                        for (cj, oc) in other.commands.iter().enumerate() {
                            if oc.action.as_ref() == Some(label) {
                                claim(&mut entries, r, (mj, cj))?;
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    /// Reaction ids in order of first annotation.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn commands(&self, id: &str) -> Option<&BTreeSet<CommandRef>> {
        self.entries.iter().find(|(e, _)| e == id).map(|(_, c)| c)
    }
}

/// One edit applied to a base model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    RemoveReaction(String),
    RemoveLabel(String),
}

/// Short description of what a reaction does, e.g. `SHP2 [bk1]`, built
/// from the modules and labels it touches.
pub fn describe_reaction(ast: &ModelAst, cmds: &BTreeSet<CommandRef>) -> String {
    let mut modules: Vec<&str> = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for &(m, c) in cmds {
        let cmd = &ast.modules[m].commands[c];
        if cmd.updates.is_empty() {
            continue;
        }
        let name = ast.modules[m].name.as_str();
        if !modules.contains(&name) {
            modules.push(name);
        }
        if let Some(a) = cmd.action.as_deref() {
            if !labels.contains(&a) {
                labels.push(a);
            }
        }
    }
    let mut out = modules.join("+");
    if !labels.is_empty() {
        out.push_str(&format!(" [{}]", labels.join(",")));
    }
    out
}

/// Apply `edits` to `ast`. Returns the variant and warnings (modules left
/// without commands).
pub fn make_variant(ast: &ModelAst, edits: &[Edit]) -> Result<(ModelAst, Vec<String>), Error> {
    if edits.is_empty() {
        return Ok((ast.clone(), Vec::new()));
    }
    let index = ReactionIndex::build(ast)?;
    let mut remove: BTreeSet<CommandRef> = BTreeSet::new();
    for e in edits {
        match e {
            Edit::RemoveReaction(id) => {
                let cmds = index
                    .commands(id)
                    .ok_or_else(|| Error::Spec(format!("unknown reaction `{id}`")))?;
                remove.extend(cmds.iter().copied());
            }
            Edit::RemoveLabel(label) => {
                let before = remove.len();
                let mut found = false;
                for (mi, m) in ast.modules.iter().enumerate() {
                    for (ci, c) in m.commands.iter().enumerate() {
                        if c.action.as_deref() == Some(label.as_str()) {
                            found = true;
                            remove.insert((mi, ci));
                        }
                    }
                }
                if !found {
                    return Err(Error::Spec(format!("unknown action label `{label}`")));
                }
                let _ = before;
            }
        }
    }
    let mut out = ast.clone();
    let mut warnings = Vec::new();
    for (mi, m) in out.modules.iter_mut().enumerate() {
        let had = m.commands.len();
        let mut ci = 0;
        m.commands.retain(|_| {
            let keep = !remove.contains(&(mi, ci));
            ci += 1;
            keep
        });
        if had > 0 && m.commands.is_empty() {
            warnings.push(format!("module `{}` has no commands left", m.name));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_model;

    const SRC: &str = "
module A
  a : [0..1] init 0;
  [act] a=0 -> 0.5 : (a'=1); //@reaction 1
  [] a=1 -> 0.1 : (a'=0); //@reaction 2
endmodule
module B
  b : [0..1] init 0;
  [act] b=0 -> (b'=1);
  [] b=1 -> 0.2 : (b'=0); //@reaction 3
endmodule
";

    #[test]
    fn partners_join_the_reaction() {
        let ast = parse_model(SRC).unwrap();
        let idx = ReactionIndex::build(&ast).unwrap();
        assert_eq!(idx.ids().collect::<Vec<_>>(), vec!["1", "2", "3"]);
        assert_eq!(idx.commands("1").unwrap().iter().copied().collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);
        assert_eq!(describe_reaction(&ast, idx.commands("1").unwrap()), "A+B [act]");
    }

    #[test]
    fn removal_is_atomic() {
        let ast = parse_model(SRC).unwrap();
        let (v, warnings) = make_variant(&ast, &[Edit::RemoveReaction("1".into())]).unwrap();
        assert!(warnings.is_empty());
        assert!(v.action_labels().is_empty());
        assert_eq!(v.modules[0].commands.len(), 1);
        assert_eq!(v.modules[1].commands.len(), 1);
    }

    #[test]
    fn identity_and_errors() {
        let ast = parse_model(SRC).unwrap();
        assert_eq!(make_variant(&ast, &[]).unwrap().0, ast);
        assert!(make_variant(&ast, &[Edit::RemoveReaction("9".into())]).is_err());
        assert!(make_variant(&ast, &[Edit::RemoveLabel("zzz".into())]).is_err());
        let (v, warnings) = make_variant(&ast, &[Edit::RemoveLabel("act".into())]).unwrap();
        assert_eq!(v.modules[0].commands.len(), 1);
        assert!(warnings.is_empty());
    }

    #[test]
    fn removing_everything_freezes_the_model() {
        let ast = parse_model(SRC).unwrap();
        let idx = ReactionIndex::build(&ast).unwrap();
        let edits: Vec<Edit> = idx.ids().map(|id| Edit::RemoveReaction(id.into())).collect();
        let (v, warnings) = make_variant(&ast, &edits).unwrap();
        assert_eq!(warnings.len(), 2);
        let c: crate::Ctmc<f64> = crate::build_state_space(&v, &Default::default()).unwrap();
        assert_eq!(c.num_states(), 1);
    }

    #[test]
    fn conflicting_annotations_are_rejected() {
        let src = "module A a : [0..1] init 0; [x] a=0 -> 1 : (a'=1); //@reaction 1
                   endmodule
                   module B b : [0..1] init 0; [x] b=0 -> (b'=1); //@reaction 2
                   endmodule";
        assert!(ReactionIndex::build(&parse_model(src).unwrap()).is_err());
    }
}
