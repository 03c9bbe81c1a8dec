use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use super::{
    transition, Action, ActionArg, ActionKind, ElementKind, EnvState, PageId, ParamValue,
    Requirement, Scratch, SettingKey, SynthWeb, TaskInstance, TokenId,
};

/// Projection of a search node onto what can still influence the task.
/// Relevant items and settings are few (one per requirement at most), so
/// they fit in bitmasks and a fixed array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    page: PageId,
    scrolled: bool,
    query: Option<TokenId>,
    cart: u8,
    cart_has_other: bool,
    orders: u8,
    settings: [Option<TokenId>; 4],
}

struct Relevance {
    items: Vec<PageId>,
    settings: Vec<SettingKey>,
}

impl Relevance {
    fn key(&self, page: PageId, s: &Scratch) -> Key {
        let mask = |set: &BTreeSet<PageId>| {
            self.items
                .iter()
                .enumerate()
                .filter(|(_, p)| set.contains(p))
                .fold(0u8, |m, (i, _)| m | (1 << i))
        };
        let mut settings = [None; 4];
        for (slot, k) in settings.iter_mut().zip(&self.settings) {
            *slot = s.settings.get(k).copied();
        }
        Key {
            page,
            scrolled: s.scrolled,
            query: s.query,
            cart: mask(&s.cart),
            cart_has_other: s.cart.iter().any(|p| !self.items.contains(p)),
            orders: mask(&s.orders),
            settings,
        }
    }

    /// Actions that can never shorten a solution: a second unrelated cart
    /// item (only cart non-emptiness matters for unrelated items) and
    /// writes to unrelated settings.
    fn prunes(&self, web: &SynthWeb, page: PageId, s: &Scratch, action: Action) -> bool {
        match (action.kind, action.arg) {
            (ActionKind::Click, ActionArg::Element(e)) => match web.graph.element_kind(page, e) {
                Some(ElementKind::AddToCart { item }) => {
                    !self.items.contains(&item) && s.cart.iter().any(|p| !self.items.contains(p))
                }
                _ => false,
            },
            (ActionKind::SelectOption | ActionKind::Type, _) => {
                match web.graph.find_element(page, |k| {
                    matches!(k, ElementKind::Dropdown { .. } | ElementKind::TextField { .. })
                }) {
                    Some((_, ElementKind::Dropdown { setting } | ElementKind::TextField { setting })) => {
                        !self.settings.contains(&setting)
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

/// Necessary condition checked before searching: every bound value has
/// some edge or element on the site that could produce it.
fn statically_possible(web: &SynthWeb, requirements: &[Requirement], params: &[ParamValue]) -> bool {
    let g = &web.graph;
    let field_setting = |page: PageId, kind: ActionKind| {
        g.find_element(page, |k| match kind {
            ActionKind::SelectOption => matches!(k, ElementKind::Dropdown { .. }),
            _ => matches!(k, ElementKind::TextField { .. }),
        })
        .and_then(|(_, k)| match k {
            ElementKind::Dropdown { setting } | ElementKind::TextField { setting } => Some(setting),
            _ => None,
        })
    };
    requirements.iter().zip(params).all(|(req, value)| match (*req, *value) {
        (Requirement::Setting(key), ParamValue::Token(t)) => g.edges.keys().any(|&(page, a)| {
            matches!(a.kind, ActionKind::SelectOption | ActionKind::Type)
                && a.arg == ActionArg::Token(t)
                && field_setting(page, a.kind) == Some(key)
        }),
        (Requirement::Searched, ParamValue::Token(t)) => g
            .edges
            .keys()
            .any(|&(_, a)| a.kind == ActionKind::Search && a.arg == ActionArg::Token(t)),
        (Requirement::InCart | Requirement::Ordered, ParamValue::Page(p)) => g
            .elements
            .values()
            .flatten()
            .any(|&(_, k)| k == ElementKind::AddToCart { item: p }),
        (Requirement::VisitItem | Requirement::VisitCategory, ParamValue::Page(p)) => {
            p == g.home || g.edges.values().any(|&to| to == p)
        }
        _ => false,
    })
}

/// Shortest action sequence (ending in `Exit`) that satisfies the task
/// within the horizon, or `None` when no such sequence exists.
///
/// Breadth-first over (page, relevant scratch); children are expanded in
/// canonical action order, so among shortest solutions the first in that
/// order wins.
pub fn oracle_solve(web: &SynthWeb, instance: &TaskInstance) -> Option<Vec<Action>> {
    let template = web.template(instance.template).ok()?;
    if instance.params.len() != template.slots.len()
        || !statically_possible(web, &template.requirements, &instance.params)
    {
        return None;
    }
    let mut relevance = Relevance {
        items: Vec::new(),
        settings: Vec::new(),
    };
    for (req, value) in template.requirements.iter().zip(&instance.params) {
        match (req, value) {
            (Requirement::InCart | Requirement::Ordered, ParamValue::Page(p)) => {
                if !relevance.items.contains(p) {
                    relevance.items.push(*p);
                }
            }
            (Requirement::Setting(k), _) => {
                if !relevance.settings.contains(k) {
                    relevance.settings.push(*k);
                }
            }
            _ => {}
        }
    }
    // Beyond what the key can encode; no template binds this many.
    if relevance.items.len() > 8 || relevance.settings.len() > 4 {
        return None;
    }

    let goal = |page: PageId, scratch: &Scratch| {
        let probe = EnvState {
            page,
            step_index: 0,
            history: Vec::new(),
            scratch: scratch.clone(),
        };
        template.satisfied(&probe, &instance.params)
    };

    // Nodes: (page, scratch, parent index, action from parent, depth).
    let mut nodes: Vec<(PageId, Scratch, usize, Action, usize)> = Vec::new();
    let mut seen = BTreeSet::new();
    let home = web.graph.home;
    let start = Scratch::default();
    seen.insert(relevance.key(home, &start));
    nodes.push((home, start, usize::MAX, Action::EXIT, 0));
    let mut queue = VecDeque::from([0usize]);

    while let Some(idx) = queue.pop_front() {
        let (page, ref scratch, _, _, depth) = nodes[idx];
        if goal(page, scratch) {
            let mut path = Vec::with_capacity(depth + 1);
            let mut cur = idx;
            while nodes[cur].2 != usize::MAX {
                path.push(nodes[cur].3);
                cur = nodes[cur].2;
            }
            path.reverse();
            path.push(Action::EXIT);
            return Some(path);
        }
        // Leave room for the final Exit.
        if depth + 2 > web.horizon {
            continue;
        }
        let scratch = scratch.clone();
        for (action, _) in web.graph.outgoing(page) {
            if relevance.prunes(web, page, &scratch, action) {
                continue;
            }
            if let Some((next_page, next_scratch)) = transition(web, page, &scratch, action) {
                if seen.insert(relevance.key(next_page, &next_scratch)) {
                    nodes.push((next_page, next_scratch, idx, action, depth + 1));
                    queue.push_back(nodes.len() - 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthweb::{roles, step, Origin, TemplateId};

    #[test]
    fn category_visit_is_one_click_plus_exit() {
        let web = SynthWeb::default_site(0);
        let t = web.template(TemplateId(1)).unwrap();
        let inst = t.instantiate(&web.graph, alloc::vec![ParamValue::Page(PageId(2))], Origin::Seed);
        let plan = oracle_solve(&web, &inst).unwrap();
        assert_eq!(plan, alloc::vec![Action::click(2), Action::EXIT]);
    }

    #[test]
    fn unavailable_theme_is_infeasible() {
        let web = SynthWeb::default_site(0);
        let t = web.templates.iter().find(|t| t.name == "set_theme").unwrap();
        let offered: Vec<Action> = web.graph.outgoing(PageId(roles::THEME)).map(|(a, _)| a).collect();
        let missing = t.slots[0]
            .allowed
            .iter()
            .copied()
            .find(|v| match v {
                ParamValue::Token(tok) => !offered.contains(&Action::select(*tok)),
                _ => false,
            })
            .unwrap();
        let inst = t.instantiate(&web.graph, alloc::vec![missing], Origin::Seed);
        assert_eq!(oracle_solve(&web, &inst), None);
    }

    #[test]
    fn nonexistent_item_is_infeasible() {
        let web = SynthWeb::default_site(0);
        let t = web.templates.iter().find(|t| t.name == "add_to_cart").unwrap();
        let inst = t.instantiate(&web.graph, alloc::vec![ParamValue::Page(PageId(400))], Origin::Seed);
        assert_eq!(oracle_solve(&web, &inst), None);
    }

    #[test]
    fn oracle_plans_replay_to_success() {
        let web = SynthWeb::default_site(4);
        let mut rng = crate::rng::stream(9, &[]);
        for t in web.templates.iter() {
            for _ in 0..5 {
                let inst = t.instantiate(&web.graph, t.sample_params(&mut rng), Origin::Seed);
                let Some(plan) = oracle_solve(&web, &inst) else { continue };
                assert!(plan.len() <= web.horizon);
                let mut s = crate::synthweb::reset(&web, &inst).unwrap();
                for (i, &a) in plan.iter().enumerate() {
                    let (n, terminal) = step(&web, &s, a).unwrap();
                    assert_eq!(terminal, i + 1 == plan.len());
                    if !a.is_exit() {
                        s = n;
                    }
                }
                assert!(t.satisfied(&s, &inst.params));
            }
        }
    }
}
