use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::mix64;
use crate::synthweb::{
    feasible_actions, Action, ActionKind, ElementKind, EnvState, PageId, ParamValue, Requirement,
    SynthWeb, TaskInstance,
};
use crate::{Error, Result};

pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_SLOTS: usize = 64;

/// Salt of the parameter-token hash. Changing it changes every checkpoint.
const PARAM_SALT: u64 = 0x7765_6272_6c5f_7031;
const PENDING_SALT: u64 = 0x7765_6272_6c5f_7032;

/// Dense features of one (state, instruction) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Block offsets inside a feature vector of length `dim`:
///
/// | block        | width           |
/// |--------------|-----------------|
/// | page one-hot | 32              |
/// | template     | 24              |
/// | params       | hashed, ~36 %   |
/// | pending      | hashed, rest    |
/// | last action  | 9 (8 kinds + none) |
/// | flags        | 14              |
/// | bias         | 1               |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub dim: usize,
    pub page: (usize, usize),
    pub template: (usize, usize),
    pub params: (usize, usize),
    pub pending: (usize, usize),
    pub last_action: (usize, usize),
    pub flags: (usize, usize),
    pub bias: usize,
}

const PAGE_W: usize = 32;
const TEMPLATE_W: usize = 24;
const LAST_W: usize = 9;
const FLAGS_W: usize = 14;
const FIXED_W: usize = PAGE_W + TEMPLATE_W + LAST_W + FLAGS_W + 1;

impl FeatureLayout {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= FIXED_W + 16, "feature dimension {dim} too small");
        let hashed = dim - FIXED_W;
        let params_w = hashed * 36 / 100;
        let mut at = 0;
        let mut block = |w: usize| {
            let b = (at, w);
            at += w;
            b
        };
        let page = block(PAGE_W);
        let template = block(TEMPLATE_W);
        let params = block(params_w);
        let pending = block(hashed - params_w);
        let last_action = block(LAST_W);
        let flags = block(FLAGS_W);
        let bias = block(1).0;
        Self {
            dim,
            page,
            template,
            params,
            pending,
            last_action,
            flags,
            bias,
        }
    }
}

/// Maps actions onto the `K` weight rows of the policy.
///
/// With `K >= 64` each kind owns a bucket range sized for the default shop
/// so that no two actions feasible in the same state share a row:
/// exit 0, go_back 1, scroll 2, click 3..37 (element % 34), goto 37..46
/// (page % 9), search 46..52 (token % 6), select 52..60 (token % 8),
/// type 60..64 (token % 4). Smaller `K` falls back to a hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSlots {
    pub k: usize,
}

impl ActionSlots {
    pub fn slot(&self, action: Action) -> u16 {
        let raw = action.arg.raw() as usize;
        if self.k >= 64 {
            let s = match action.kind {
                ActionKind::Exit => 0,
                ActionKind::GoBack => 1,
                ActionKind::Scroll => 2,
                ActionKind::Click => 3 + raw % 34,
                ActionKind::Goto => 37 + raw % 9,
                ActionKind::Search => 46 + raw % 6,
                ActionKind::SelectOption => 52 + raw % 8,
                ActionKind::Type => 60 + raw % 4,
            };
            s as u16
        } else {
            let h = mix64(((action.kind as u64) << 32) | raw as u64);
            (h % self.k as u64) as u16
        }
    }
}

/// One policy decision, resolved to sparse features and candidate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Non-zero feature entries, sorted by index.
    pub features: Vec<(u16, f64)>,
    /// Weight row of each candidate action, in canonical action order.
    pub slots: Vec<u16>,
    /// Index into `slots` of the chosen action.
    pub chosen: usize,
}

impl Decision {
    pub fn with_choice(&self, chosen: usize) -> Decision {
        Decision {
            chosen,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    pub layout: FeatureLayout,
    pub slots: ActionSlots,
}

impl Featurizer {
    pub fn new(dim: usize, k: usize) -> Self {
        Self {
            layout: FeatureLayout::new(dim),
            slots: ActionSlots { k },
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Dense feature vector of length `dim`. Deterministic.
    pub fn featurize(&self, web: &SynthWeb, state: &EnvState, instance: &TaskInstance) -> FeatureVector {
        let mut values = vec![0.0; self.layout.dim];
        for (i, x) in self.sparse(web, state, instance) {
            values[i as usize] += x;
        }
        FeatureVector { values }
    }

    /// Same features as [`Featurizer::featurize`], as sorted (index, value) pairs.
    pub fn sparse(&self, web: &SynthWeb, state: &EnvState, instance: &TaskInstance) -> Vec<(u16, f64)> {
        let l = &self.layout;
        let mut out: Vec<(u16, f64)> = Vec::with_capacity(24);
        let mut put = |i: usize, x: f64| out.push((i as u16, x));

        put(l.page.0 + state.page.0 as usize % l.page.1, 1.0);
        put(l.template.0 + instance.template.0 as usize % l.template.1, 1.0);

        let template = web.template(instance.template).ok();
        let mut satisfied = [false; 3];
        let mut all = true;
        let mut pending_pages: Vec<PageId> = Vec::new();
        let mut pending_orders_in_cart = false;
        for (i, &value) in instance.params.iter().enumerate() {
            put(l.params.0 + bucket(PARAM_SALT, value, l.params.1), 1.0);
            let Some(req) = template.and_then(|t| t.requirements.get(i).copied()) else {
                continue;
            };
            let ok = req.satisfied(state, value);
            if i < 3 {
                satisfied[i] = ok;
            }
            all &= ok;
            if !ok {
                put(l.pending.0 + bucket(PENDING_SALT, value, l.pending.1), 1.0);
                if let ParamValue::Page(p) = value {
                    pending_pages.push(p);
                    if req == Requirement::Ordered && state.scratch.cart.contains(&p) {
                        pending_orders_in_cart = true;
                    }
                }
            }
        }

        let last = match state.last_action() {
            Some(a) => a.kind.index(),
            None => LAST_W - 1,
        };
        put(l.last_action.0 + last, 1.0);

        let graph = &web.graph;
        let elements = graph.elements.get(&state.page);
        let links_to = |p: PageId, need_visible: bool| {
            elements.is_some_and(|els| {
                els.iter().any(|&(id, kind)| {
                    id.0 == p.0
                        && match kind {
                            ElementKind::Link => true,
                            ElementKind::HiddenLink => !need_visible || state.scratch.scrolled,
                            ElementKind::ResultLink { query } => {
                                !need_visible || state.scratch.query == Some(query)
                            }
                            _ => false,
                        }
                })
            })
        };
        let hidden_content = !state.scratch.scrolled
            && elements.is_some_and(|els| els.iter().any(|(_, k)| *k == ElementKind::HiddenLink));
        let s = &state.scratch;
        let flags = [
            s.scrolled,
            s.query.is_some(),
            !s.cart.is_empty(),
            !s.orders.is_empty(),
            satisfied[0],
            satisfied[1],
            satisfied[2],
            all,
            pending_pages.contains(&state.page),
            hidden_content,
            pending_orders_in_cart,
            pending_pages.iter().any(|&p| links_to(p, false)),
            pending_pages.iter().any(|&p| links_to(p, true)),
            state.page == graph.home,
        ];
        for (i, f) in flags.into_iter().enumerate() {
            if f {
                put(l.flags.0 + i, 1.0);
            }
        }
        put(l.bias, 1.0);

        out.sort_unstable_by_key(|&(i, _)| i);
        // Hash collisions inside a block add up.
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        out
    }

    /// Resolves `action` in `state` into a [`Decision`]; errors when the
    /// action is not feasible.
    pub fn decision(
        &self,
        web: &SynthWeb,
        state: &EnvState,
        instance: &TaskInstance,
        action: Action,
    ) -> Result<Decision> {
        let feasible = feasible_actions(web, state);
        let chosen = feasible
            .iter()
            .position(|&a| a == action)
            .ok_or(Error::InfeasibleAction(action))?;
        Ok(self.decision_over(web, state, instance, &feasible, chosen))
    }

    pub fn decision_over(
        &self,
        web: &SynthWeb,
        state: &EnvState,
        instance: &TaskInstance,
        feasible: &[Action],
        chosen: usize,
    ) -> Decision {
        Decision {
            features: self.sparse(web, state, instance),
            slots: feasible.iter().map(|&a| self.slots.slot(a)).collect(),
            chosen,
        }
    }
}

fn bucket(salt: u64, value: ParamValue, width: usize) -> usize {
    let tag = match value {
        ParamValue::Page(_) => 1u64,
        ParamValue::Token(_) => 2u64,
    };
    (mix64(salt ^ (tag << 32) ^ u64::from(value.raw())) % width as u64) as usize
}
