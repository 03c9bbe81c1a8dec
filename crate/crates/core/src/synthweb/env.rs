use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    Action, ActionArg, ActionKind, ElementKind, PageId, SettingKey, SynthWeb, TaskInstance,
    TokenId,
};
use crate::{Error, Result};

/// Mutable page-independent state: what has been scrolled, searched, bought
/// and configured.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Scratch {
    /// Whether the current page has been scrolled; cleared on navigation.
    pub scrolled: bool,
    pub query: Option<TokenId>,
    pub cart: BTreeSet<PageId>,
    pub orders: BTreeSet<PageId>,
    pub settings: BTreeMap<SettingKey, TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub page: PageId,
    /// Always equals `history.len()`.
    pub step_index: usize,
    pub history: Vec<Action>,
    pub scratch: Scratch,
}

impl EnvState {
    pub fn initial(home: PageId) -> Self {
        Self {
            page: home,
            step_index: 0,
            history: Vec::new(),
            scratch: Scratch::default(),
        }
    }

    pub fn last_action(&self) -> Option<Action> {
        self.history.last().copied()
    }

    pub fn exited(&self) -> bool {
        self.last_action().is_some_and(|a| a.is_exit())
    }
}

/// Fresh episode state for `instance`.
pub fn reset(web: &SynthWeb, instance: &TaskInstance) -> Result<EnvState> {
    instance.validate(&web.templates)?;
    Ok(EnvState::initial(web.graph.home))
}

/// Guard and effect of one non-exit action, ignoring history and horizon.
/// `None` when the action is not available on `page` under `scratch`.
pub fn transition(
    web: &SynthWeb,
    page: PageId,
    scratch: &Scratch,
    action: Action,
) -> Option<(PageId, Scratch)> {
    let graph = &web.graph;
    let target = *graph.edges.get(&(page, action))?;
    let mut next = scratch.clone();
    match (action.kind, action.arg) {
        (ActionKind::Click, ActionArg::Element(e)) => match graph.element_kind(page, e)? {
            ElementKind::Link => {}
            ElementKind::HiddenLink => {
                if !scratch.scrolled {
                    return None;
                }
            }
            ElementKind::ResultLink { query } => {
                if scratch.query != Some(query) {
                    return None;
                }
            }
            ElementKind::AddToCart { item } => {
                if !next.cart.insert(item) {
                    return None;
                }
            }
            ElementKind::Checkout => {
                if scratch.cart.is_empty() {
                    return None;
                }
            }
            ElementKind::PlaceOrder => {
                if scratch.cart.is_empty() {
                    return None;
                }
                let cart = core::mem::take(&mut next.cart);
                next.orders.extend(cart);
            }
            ElementKind::SearchBox | ElementKind::Dropdown { .. } | ElementKind::TextField { .. } => {
                return None
            }
        },
        (ActionKind::Scroll, _) => {
            if scratch.scrolled {
                return None;
            }
            next.scrolled = true;
        }
        (ActionKind::Search, ActionArg::Token(t)) => next.query = Some(t),
        (ActionKind::SelectOption, ActionArg::Token(t)) => {
            let (_, kind) = graph.find_element(page, |k| matches!(k, ElementKind::Dropdown { .. }))?;
            if let ElementKind::Dropdown { setting } = kind {
                next.settings.insert(setting, t);
            }
        }
        (ActionKind::Type, ActionArg::Token(t)) => {
            let (_, kind) = graph.find_element(page, |k| matches!(k, ElementKind::TextField { .. }))?;
            if let ElementKind::TextField { setting } = kind {
                next.settings.insert(setting, t);
            }
        }
        (ActionKind::Goto | ActionKind::GoBack, _) => {}
        _ => return None,
    }
    if target != page {
        next.scrolled = false;
    }
    Some((target, next))
}

/// Feasible actions in canonical order; always ends with `Exit`.
pub fn feasible_actions(web: &SynthWeb, state: &EnvState) -> Vec<Action> {
    let mut out: Vec<Action> = web
        .graph
        .outgoing(state.page)
        .filter(|&(a, _)| transition(web, state.page, &state.scratch, a).is_some())
        .map(|(a, _)| a)
        .collect();
    out.push(Action::EXIT);
    out
}

/// Applies `action`. The episode is terminal after `Exit` or once the
/// horizon is reached. Infeasible actions are rejected.
pub fn step(web: &SynthWeb, state: &EnvState, action: Action) -> Result<(EnvState, bool)> {
    if state.exited() || state.step_index >= web.horizon {
        return Err(Error::Terminated);
    }
    let (page, scratch) = if action.is_exit() {
        (state.page, state.scratch.clone())
    } else {
        transition(web, state.page, &state.scratch, action).ok_or(Error::InfeasibleAction(action))?
    };
    let mut history = state.history.clone();
    history.push(action);
    let next = EnvState {
        page,
        step_index: state.step_index + 1,
        history,
        scratch,
    };
    let terminal = action.is_exit() || next.step_index >= web.horizon;
    Ok((next, terminal))
}
