use crate::lang::ast::{ActorDecl, Alternative, Terminal, Trigger};
use crate::lts::{Iolts, Label, StateId};

/// Compiles a name-checked actor declaration.
///
/// Each alternative becomes a path of edges from its source state; the final
/// edge lands on the alternative's target and the states in between are
/// fresh. An `on` clause with several alternatives receives into a fresh
/// state from which the alternatives branch.
pub fn compile_actor(decl: &ActorDecl) -> Iolts {
    let names: Vec<&str> = decl.states.iter().map(|s| s.name.as_str()).collect();
    let initial = decl.states.iter().position(|s| s.initial).unwrap_or(0);
    let mut lts = Iolts::new(&names, initial);
    for (home, state) in decl.states.iter().enumerate() {
        for clause in &state.clauses {
            let mut steps: Vec<Label> = Vec::new();
            let source = match &clause.trigger {
                Trigger::Anytime => home,
                Trigger::On(m) if clause.alternatives.len() == 1 => {
                    steps.push(Label::Receive(m.clone()));
                    home
                }
                Trigger::On(m) => {
                    let u = lts.add_anonymous();
                    lts.add_edge(home, Label::Receive(m.clone()), u);
                    u
                }
            };
            for alt in &clause.alternatives {
                let mut path = steps.clone();
                emit(&mut lts, source, home, alt, &mut path);
            }
        }
    }
    lts
}

fn emit(lts: &mut Iolts, source: StateId, home: StateId, alt: &Alternative, path: &mut Vec<Label>) {
    path.extend(alt.sends.iter().map(|m| Label::Send(m.clone())));
    let target = match &alt.end {
        Terminal::Next(t) => lts.state_id(t).expect("resolved state name"),
        Terminal::Continue => home,
        Terminal::Quit => {
            path.push(Label::Quit);
            lts.quit_state()
        }
    };
    if path.is_empty() {
        if source != target {
            lts.add_edge(source, Label::Tau, target);
        }
        return;
    }
    let mut at = source;
    let last = path.len() - 1;
    for (i, label) in path.drain(..).enumerate() {
        let next = if i == last { target } else { lts.add_anonymous() };
        lts.add_edge(at, label, next);
        at = next;
    }
}
