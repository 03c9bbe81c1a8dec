use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EnvState, PageId, SettingKey, SiteGraph, TemplateId, TokenId};
use crate::{Error, Result};

/// One conjunct of a task's success predicate. Each requirement reads
/// exactly one parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    /// Final page is the bound item page.
    VisitItem,
    /// Final page is the bound category page.
    VisitCategory,
    InCart,
    Ordered,
    Setting(SettingKey),
    /// Current search query equals the bound token.
    Searched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamValue {
    Page(PageId),
    Token(TokenId),
}

impl ParamValue {
    pub fn raw(self) -> u16 {
        match self {
            ParamValue::Page(p) => p.0,
            ParamValue::Token(t) => t.0,
        }
    }

    pub fn page(self) -> Option<PageId> {
        match self {
            ParamValue::Page(p) => Some(p),
            ParamValue::Token(_) => None,
        }
    }
}

impl Requirement {
    pub fn satisfied(self, state: &EnvState, value: ParamValue) -> bool {
        let s = &state.scratch;
        match (self, value) {
            (Requirement::VisitItem | Requirement::VisitCategory, ParamValue::Page(p)) => {
                state.page == p
            }
            (Requirement::InCart, ParamValue::Page(p)) => s.cart.contains(&p),
            (Requirement::Ordered, ParamValue::Page(p)) => s.orders.contains(&p),
            (Requirement::Setting(key), ParamValue::Token(t)) => s.settings.get(&key) == Some(&t),
            (Requirement::Searched, ParamValue::Token(t)) => s.query == Some(t),
            _ => false,
        }
    }

    fn phrase(self, graph: &SiteGraph, value: ParamValue, out: &mut String) {
        let name = match value {
            ParamValue::Page(p) => graph.page_name(p),
            ParamValue::Token(t) => graph.token_name(t).to_string(),
        };
        let _ = match self {
            Requirement::VisitItem => write!(out, "open the page of {name}"),
            Requirement::VisitCategory => write!(out, "browse the {name} category"),
            Requirement::InCart => write!(out, "add {name} to the cart"),
            Requirement::Ordered => write!(out, "order {name}"),
            Requirement::Setting(k) => write!(out, "set the {} to {name}", graph.setting_name(k)),
            Requirement::Searched => write!(out, "search for {name}"),
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: String,
    pub allowed: Vec<ParamValue>,
}

/// A parameterised task. `requirements[i]` reads `slots[i]`, so the
/// requirement count always equals the number of conjuncts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub id: TemplateId,
    pub name: String,
    pub requirements: Vec<Requirement>,
    pub slots: Vec<ParamSlot>,
    pub siblings: Vec<TemplateId>,
}

impl TaskTemplate {
    pub fn requirement_count(&self) -> usize {
        self.requirements.len()
    }

    /// All conjuncts hold in `state`.
    pub fn satisfied(&self, state: &EnvState, params: &[ParamValue]) -> bool {
        self.requirements
            .iter()
            .zip(params)
            .all(|(r, &v)| r.satisfied(state, v))
            && params.len() == self.requirements.len()
    }

    pub fn render(&self, graph: &SiteGraph, params: &[ParamValue]) -> String {
        let mut out = String::new();
        let n = self.requirements.len();
        for (i, (r, &v)) in self.requirements.iter().zip(params).enumerate() {
            if i > 0 {
                out.push_str(if i + 1 == n { " and " } else { ", " });
            }
            r.phrase(graph, v, &mut out);
        }
        if let Some(first) = out.get(..1) {
            let upper = first.to_uppercase();
            out.replace_range(..1, &upper);
        }
        out.push('.');
        out
    }

    /// Samples a binding; slots sharing a requirement kind get distinct values.
    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ParamValue> {
        let mut params: Vec<ParamValue> = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            let taken: Vec<ParamValue> = (0..i)
                .filter(|&j| self.requirements[j] == self.requirements[i])
                .map(|j| params[j])
                .collect();
            let free: Vec<ParamValue> = slot
                .allowed
                .iter()
                .copied()
                .filter(|v| !taken.contains(v))
                .collect();
            let pick = free
                .choose(rng)
                .or_else(|| slot.allowed.choose(rng))
                .copied()
                .expect("parameter slot with an empty domain");
            params.push(pick);
        }
        params
    }

    pub fn instantiate(&self, graph: &SiteGraph, params: Vec<ParamValue>, origin: Origin) -> TaskInstance {
        TaskInstance {
            template: self.id,
            instruction: self.render(graph, &params),
            params,
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemplateRegistry {
    pub templates: Vec<TaskTemplate>,
}

impl TemplateRegistry {
    pub fn get(&self, id: TemplateId) -> Result<&TaskTemplate> {
        self.templates
            .get(id.0 as usize)
            .filter(|t| t.id == id)
            .ok_or(Error::UnknownTemplate(id))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskTemplate> {
        self.templates.iter()
    }

    /// Template whose requirement list is exactly `reqs` (order-insensitive).
    pub fn find_by_requirements(&self, reqs: &[Requirement]) -> Option<&TaskTemplate> {
        let mut want = reqs.to_vec();
        want.sort_unstable();
        self.templates.iter().find(|t| {
            let mut have = t.requirements.clone();
            have.sort_unstable();
            have == want
        })
    }

    /// Recomputes sibling lists: two templates are siblings when their
    /// requirement multisets differ by one insertion, deletion or substitution.
    pub fn link_siblings(&mut self) {
        let sorted: Vec<Vec<Requirement>> = self
            .templates
            .iter()
            .map(|t| {
                let mut r = t.requirements.clone();
                r.sort_unstable();
                r
            })
            .collect();
        for i in 0..self.templates.len() {
            let siblings = (0..self.templates.len())
                .filter(|&j| j != i && one_edit_apart(&sorted[i], &sorted[j]))
                .map(|j| self.templates[j].id)
                .collect();
            self.templates[i].siblings = siblings;
        }
    }

    /// Checks the registry invariants against `graph`.
    pub fn validate(&self) -> core::result::Result<(), String> {
        for (i, t) in self.templates.iter().enumerate() {
            if t.id.0 as usize != i {
                return Err(alloc::format!("template {} stored at index {i}", t.id));
            }
            if t.requirements.is_empty() || t.requirements.len() != t.slots.len() {
                return Err(alloc::format!("template {} has inconsistent slots", t.name));
            }
            if t.slots.iter().any(|s| s.allowed.is_empty()) {
                return Err(alloc::format!("template {} has an empty slot domain", t.name));
            }
            if let Some(s) = t.siblings.iter().find(|s| self.get(**s).is_err()) {
                return Err(alloc::format!("template {} lists unknown sibling {s}", t.name));
            }
        }
        Ok(())
    }
}

fn one_edit_apart(a: &[Requirement], b: &[Requirement]) -> bool {
    // Multiset difference sizes.
    let mut only_a = 0usize;
    let mut rest_b = b.to_vec();
    for r in a {
        if let Some(pos) = rest_b.iter().position(|x| x == r) {
            rest_b.swap_remove(pos);
        } else {
            only_a += 1;
        }
    }
    let only_b = rest_b.len();
    matches!((only_a, only_b), (1, 0) | (0, 1) | (1, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Evolved { phase: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskInstance {
    pub template: TemplateId,
    /// `params[i]` binds slot `i` of the template.
    pub params: Vec<ParamValue>,
    pub instruction: String,
    pub origin: Origin,
}

/// Dedup key: template plus bound parameters; instruction text is ignored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskKey(pub TemplateId, pub Vec<ParamValue>);

impl TaskInstance {
    /// Canonical key. Parameters of interchangeable slots (same requirement
    /// kind) are sorted so `add a and b` equals `add b and a`.
    pub fn key(&self, template: &TaskTemplate) -> TaskKey {
        let mut pairs: Vec<(Requirement, ParamValue)> = template
            .requirements
            .iter()
            .copied()
            .zip(self.params.iter().copied())
            .collect();
        pairs.sort_unstable();
        TaskKey(self.template, pairs.into_iter().map(|(_, v)| v).collect())
    }

    pub fn validate(&self, registry: &TemplateRegistry) -> Result<()> {
        let t = registry.get(self.template)?;
        if t.slots.len() != self.params.len() {
            return Err(Error::ParameterArity {
                template: self.template,
                expected: t.slots.len(),
                got: self.params.len(),
            });
        }
        Ok(())
    }
}

/// The default library: every template has at least two siblings and the
/// requirement counts span 1 to 3.
pub fn default_templates(graph: &SiteGraph) -> TemplateRegistry {
    let items: Vec<ParamValue> = graph
        .pages_with_role("item")
        .into_iter()
        .map(ParamValue::Page)
        .collect();
    let categories: Vec<ParamValue> = graph
        .pages_with_role("category")
        .into_iter()
        .map(ParamValue::Page)
        .collect();
    let tokens_of = |names: &[&str]| -> Vec<ParamValue> {
        names
            .iter()
            .filter_map(|n| graph.token(n))
            .map(ParamValue::Token)
            .collect()
    };
    let search = tokens_of(&["books", "games", "music", "tools"]);
    let languages = tokens_of(&["en", "de", "fr"]);
    // The full theme vocabulary; each site offers only three of them.
    let themes = tokens_of(&["light", "dark", "contrast", "sepia"]);
    let nicknames = tokens_of(&["alice", "bob", "carol"]);
    let language = graph.setting("language").unwrap_or(SettingKey(0));
    let theme = graph.setting("theme").unwrap_or(SettingKey(1));
    let nickname = graph.setting("nickname").unwrap_or(SettingKey(2));

    use Requirement::*;
    let lang = Setting(language);
    let thm = Setting(theme);
    let nick = Setting(nickname);
    let specs: [(&str, &[Requirement]); 21] = [
        ("visit_item", &[VisitItem]),
        ("visit_category", &[VisitCategory]),
        ("add_to_cart", &[InCart]),
        ("set_language", &[lang]),
        ("set_theme", &[thm]),
        ("set_nickname", &[nick]),
        ("search", &[Searched]),
        ("order_item", &[Ordered]),
        ("add_two", &[InCart, InCart]),
        ("add_and_language", &[InCart, lang]),
        ("add_and_theme", &[InCart, thm]),
        ("language_and_theme", &[lang, thm]),
        ("search_and_add", &[Searched, InCart]),
        ("order_two", &[Ordered, Ordered]),
        ("order_and_language", &[Ordered, lang]),
        ("nickname_and_theme", &[nick, thm]),
        ("search_and_visit", &[Searched, VisitItem]),
        ("theme_and_visit", &[thm, VisitItem]),
        ("add_two_and_theme", &[InCart, InCart, thm]),
        ("add_language_theme", &[InCart, lang, thm]),
        ("order_language_theme", &[Ordered, lang, thm]),
    ];

    let mut templates = Vec::with_capacity(specs.len());
    for (i, (name, reqs)) in specs.iter().enumerate() {
        let slots = reqs
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let (slot, allowed) = match r {
                    VisitItem | InCart | Ordered => ("item", items.clone()),
                    VisitCategory => ("category", categories.clone()),
                    Searched => ("query", search.clone()),
                    Setting(k) if *k == language => ("language", languages.clone()),
                    Setting(k) if *k == theme => ("theme", themes.clone()),
                    Setting(_) => ("nickname", nicknames.clone()),
                };
                ParamSlot {
                    name: alloc::format!("{slot}_{j}"),
                    allowed,
                }
            })
            .collect();
        templates.push(TaskTemplate {
            id: TemplateId(i as u16),
            name: name.to_string(),
            requirements: reqs.to_vec(),
            slots,
            siblings: Vec::new(),
        });
    }
    let mut registry = TemplateRegistry { templates };
    registry.link_siblings();
    registry
}
