//! Deterministic synthetic web-navigation environment.
//!
//! A [`SiteGraph`] is a set of pages joined by action-labelled edges. Page
//! elements carry the side effects (cart buttons, dropdowns, search boxes) and
//! the guards (hidden links need a scroll, checkout needs a non-empty cart).
//! Tasks are conjunctions of [`Requirement`]s checked on the final state, and
//! [`oracle_solve`] finds a shortest solution by breadth-first search.

mod env;
mod oracle;
mod site;
mod task;
mod trajectory;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use env::{feasible_actions, reset, step, transition, EnvState, Scratch};
pub use oracle::oracle_solve;
pub use site::{build_default_site, roles, ElementKind, SiteGraph, DEFAULT_PAGES};
pub use task::{
    default_templates, Origin, ParamSlot, ParamValue, Requirement, TaskInstance, TaskKey,
    TaskTemplate, TemplateRegistry,
};
pub use trajectory::{
    ground_truth_reward, state_digest, Episode, RewardSource, Step, StepRecord, Trajectory,
    TrajectoryRecord,
};

/// Default episode horizon.
pub const DEFAULT_HORIZON: usize = 15;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u16);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(PageId);
id_type!(
    /// Unique within a page only.
    ElementId
);
id_type!(
    /// Index into [`SiteGraph::tokens`].
    TokenId
);
id_type!(
    /// Index into [`SiteGraph::settings`].
    SettingKey
);
id_type!(TemplateId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Type,
    Search,
    Scroll,
    Goto,
    GoBack,
    SelectOption,
    Exit,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::Click,
        ActionKind::Type,
        ActionKind::Search,
        ActionKind::Scroll,
        ActionKind::Goto,
        ActionKind::GoBack,
        ActionKind::SelectOption,
        ActionKind::Exit,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionArg {
    None,
    Element(ElementId),
    Page(PageId),
    Token(TokenId),
}

impl ActionArg {
    /// Raw argument value used for slot bucketing; 0 for `None`.
    pub fn raw(self) -> u16 {
        match self {
            ActionArg::None => 0,
            ActionArg::Element(e) => e.0,
            ActionArg::Page(p) => p.0,
            ActionArg::Token(t) => t.0,
        }
    }
}

/// Canonical order is (kind, argument); `feasible_actions` returns actions
/// sorted this way, with `Exit` last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub arg: ActionArg,
}

impl Action {
    pub const EXIT: Action = Action {
        kind: ActionKind::Exit,
        arg: ActionArg::None,
    };
    pub const SCROLL: Action = Action {
        kind: ActionKind::Scroll,
        arg: ActionArg::None,
    };
    pub const GO_BACK: Action = Action {
        kind: ActionKind::GoBack,
        arg: ActionArg::None,
    };

    pub fn click(e: u16) -> Self {
        Action {
            kind: ActionKind::Click,
            arg: ActionArg::Element(ElementId(e)),
        }
    }

    pub fn goto(p: u16) -> Self {
        Action {
            kind: ActionKind::Goto,
            arg: ActionArg::Page(PageId(p)),
        }
    }

    pub fn search(t: TokenId) -> Self {
        Action {
            kind: ActionKind::Search,
            arg: ActionArg::Token(t),
        }
    }

    pub fn type_text(t: TokenId) -> Self {
        Action {
            kind: ActionKind::Type,
            arg: ActionArg::Token(t),
        }
    }

    pub fn select(t: TokenId) -> Self {
        Action {
            kind: ActionKind::SelectOption,
            arg: ActionArg::Token(t),
        }
    }

    pub fn is_exit(&self) -> bool {
        self.kind == ActionKind::Exit
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ActionKind::Click => "click",
            ActionKind::Type => "type",
            ActionKind::Search => "search",
            ActionKind::Scroll => "scroll",
            ActionKind::Goto => "goto",
            ActionKind::GoBack => "go_back",
            ActionKind::SelectOption => "select_option",
            ActionKind::Exit => "exit",
        };
        match self.arg {
            ActionArg::None => write!(f, "{kind}()"),
            ActionArg::Element(e) => write!(f, "{kind}(element {e})"),
            ActionArg::Page(p) => write!(f, "{kind}(page {p})"),
            ActionArg::Token(t) => write!(f, "{kind}(token {t})"),
        }
    }
}

/// A site graph bundled with its task registry and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthWeb {
    pub graph: SiteGraph,
    pub templates: TemplateRegistry,
    pub horizon: usize,
}

impl SynthWeb {
    pub fn new(graph: SiteGraph, templates: TemplateRegistry, horizon: usize) -> Self {
        Self {
            graph,
            templates,
            horizon,
        }
    }

    /// The default 30-page shop with the default template library.
    pub fn default_site(seed: u64) -> Self {
        let graph = build_default_site(seed);
        let templates = default_templates(&graph);
        Self::new(graph, templates, DEFAULT_HORIZON)
    }

    pub fn template(&self, id: TemplateId) -> crate::Result<&TaskTemplate> {
        self.templates.get(id)
    }
}
