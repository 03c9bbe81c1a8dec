use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Action, ActionKind, ElementId, PageId, SettingKey, TokenId};
use crate::rng;

/// What an element does when clicked, and which guard applies to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Link,
    /// Only clickable once the page has been scrolled.
    HiddenLink,
    /// Only clickable while the search query equals `query`.
    ResultLink { query: TokenId },
    /// Adds `item` to the cart; disabled while it is already there.
    AddToCart { item: PageId },
    /// Needs a non-empty cart.
    Checkout,
    /// Moves the cart into the order list; needs a non-empty cart.
    PlaceOrder,
    SearchBox,
    Dropdown { setting: SettingKey },
    TextField { setting: SettingKey },
}

impl ElementKind {
    pub fn is_clickable(self) -> bool {
        !matches!(
            self,
            ElementKind::SearchBox | ElementKind::Dropdown { .. } | ElementKind::TextField { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteGraph {
    pub seed: u64,
    pub home: PageId,
    pub pages: Vec<PageId>,
    pub elements: BTreeMap<PageId, Vec<(ElementId, ElementKind)>>,
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<(PageId, Action), PageId>,
    pub metadata: BTreeMap<PageId, BTreeMap<String, String>>,
    /// Vocabulary for search queries, dropdown options and typed text.
    pub tokens: Vec<String>,
    /// Names of the setting keys.
    pub settings: Vec<String>,
}

mod edge_list {
    use alloc::collections::BTreeMap;
    use alloc::vec::Vec;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{Action, PageId};

    #[derive(Serialize, Deserialize)]
    struct Edge {
        from: PageId,
        action: Action,
        to: PageId,
    }

    pub fn serialize<S: Serializer>(
        edges: &BTreeMap<(PageId, Action), PageId>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<Edge> = edges
            .iter()
            .map(|(&(from, action), &to)| Edge { from, action, to })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(PageId, Action), PageId>, D::Error> {
        let list = Vec::<Edge>::deserialize(d)?;
        Ok(list.into_iter().map(|e| ((e.from, e.action), e.to)).collect())
    }
}

impl SiteGraph {
    pub fn element_kind(&self, page: PageId, element: ElementId) -> Option<ElementKind> {
        self.elements
            .get(&page)?
            .iter()
            .find(|(id, _)| *id == element)
            .map(|&(_, kind)| kind)
    }

    /// The first element of the page matching `pred`.
    pub fn find_element(
        &self,
        page: PageId,
        pred: impl Fn(ElementKind) -> bool,
    ) -> Option<(ElementId, ElementKind)> {
        self.elements
            .get(&page)?
            .iter()
            .copied()
            .find(|&(_, kind)| pred(kind))
    }

    /// Outgoing edges of `page` in canonical action order.
    pub fn outgoing(&self, page: PageId) -> impl Iterator<Item = (Action, PageId)> + '_ {
        let start = (
            page,
            Action {
                kind: ActionKind::Click,
                arg: super::ActionArg::None,
            },
        );
        self.edges
            .range(start..)
            .take_while(move |((p, _), _)| *p == page)
            .map(|(&(_, a), &to)| (a, to))
    }

    pub fn meta(&self, page: PageId, key: &str) -> Option<&str> {
        self.metadata.get(&page)?.get(key).map(String::as_str)
    }

    pub fn role(&self, page: PageId) -> Option<&str> {
        self.meta(page, "role")
    }

    pub fn page_name(&self, page: PageId) -> String {
        self.meta(page, "name")
            .map(ToString::to_string)
            .unwrap_or_else(|| format!("page_{}", page.0))
    }

    pub fn pages_with_role(&self, role: &str) -> Vec<PageId> {
        self.pages
            .iter()
            .copied()
            .filter(|&p| self.role(p) == Some(role))
            .collect()
    }

    pub fn token(&self, name: &str) -> Option<TokenId> {
        self.tokens
            .iter()
            .position(|t| t == name)
            .map(|i| TokenId(i as u16))
    }

    pub fn token_name(&self, token: TokenId) -> &str {
        self.tokens
            .get(token.0 as usize)
            .map(String::as_str)
            .unwrap_or("?")
    }

    pub fn setting(&self, name: &str) -> Option<SettingKey> {
        self.settings
            .iter()
            .position(|t| t == name)
            .map(|i| SettingKey(i as u16))
    }

    pub fn setting_name(&self, key: SettingKey) -> &str {
        self.settings
            .get(key.0 as usize)
            .map(String::as_str)
            .unwrap_or("?")
    }

    /// Pages reachable from home along edges, ignoring element guards.
    pub fn reachable_from_home(&self) -> BTreeSet<PageId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.home]);
        seen.insert(self.home);
        while let Some(p) = queue.pop_front() {
            for (_, to) in self.outgoing(p) {
                if seen.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        let pages: BTreeSet<PageId> = self.pages.iter().copied().collect();
        if !pages.contains(&self.home) {
            return Err("home page missing".into());
        }
        for (&(from, action), to) in &self.edges {
            if !pages.contains(&from) || !pages.contains(to) {
                return Err(format!("edge {from} --{action}--> {to} leaves the page set"));
            }
        }
        for (page, elements) in &self.elements {
            let ids: BTreeSet<ElementId> = elements.iter().map(|(id, _)| *id).collect();
            if ids.len() != elements.len() {
                return Err(format!("duplicate element id on page {page}"));
            }
        }
        let reachable = self.reachable_from_home();
        if let Some(p) = pages.iter().find(|p| !reachable.contains(p)) {
            return Err(format!("page {p} unreachable from home"));
        }
        Ok(())
    }
}

/// Page ids of the default shop; the role of each id is fixed, the seed only
/// shuffles which item sits in which category slot and which theme options
/// the site offers.
pub mod roles {
    pub const HOME: u16 = 0;
    pub const FIRST_CATEGORY: u16 = 1;
    pub const CATEGORIES: u16 = 4;
    pub const FIRST_ITEM: u16 = 5;
    pub const ITEMS: u16 = 16;
    pub const CART: u16 = 21;
    pub const CHECKOUT: u16 = 22;
    pub const CONFIRMATION: u16 = 23;
    pub const SEARCH: u16 = 24;
    pub const RESULTS: u16 = 25;
    pub const SETTINGS: u16 = 26;
    pub const LANGUAGE: u16 = 27;
    pub const THEME: u16 = 28;
    pub const PROFILE: u16 = 29;

    /// Element ids of the page buttons; link element ids equal the target page id.
    pub const ADD_TO_CART: u16 = 30;
    pub const CHECKOUT_BUTTON: u16 = 31;
    pub const PLACE_ORDER: u16 = 32;
    pub const SEARCH_BOX: u16 = 33;
    pub const DROPDOWN: u16 = 34;
    pub const TEXT_FIELD: u16 = 35;

    pub const NAV_BAR: [u16; 4] = [HOME, CART, SEARCH, SETTINGS];
}

pub const DEFAULT_PAGES: usize = 30;

const CATEGORY_NAMES: [&str; 4] = ["books", "games", "music", "tools"];
const LANGUAGES: [&str; 3] = ["en", "de", "fr"];
const THEMES: [&str; 4] = ["light", "dark", "contrast", "sepia"];
const NICKNAMES: [&str; 3] = ["alice", "bob", "carol"];

/// Builds the default 30-page shop. Identical seeds give identical graphs.
pub fn build_default_site(seed: u64) -> SiteGraph {
    use roles::*;

    let mut rng = rng::stream(seed, &[0x5173]);
    let tokens: Vec<String> = CATEGORY_NAMES
        .iter()
        .chain(LANGUAGES.iter())
        .chain(THEMES.iter())
        .chain(NICKNAMES.iter())
        .map(|s| s.to_string())
        .collect();
    let tok = |name: &str| TokenId(tokens.iter().position(|t| t == name).unwrap() as u16);
    let settings: Vec<String> = ["language", "theme", "nickname"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut items: Vec<u16> = (FIRST_ITEM..FIRST_ITEM + ITEMS).collect();
    items.shuffle(&mut rng);
    let mut offered_themes: Vec<&str> = THEMES.to_vec();
    offered_themes.shuffle(&mut rng);
    offered_themes.truncate(3);
    offered_themes.sort_unstable();

    let pages: Vec<PageId> = (0..DEFAULT_PAGES as u16).map(PageId).collect();
    let mut elements: BTreeMap<PageId, Vec<(ElementId, ElementKind)>> = BTreeMap::new();
    let mut edges = BTreeMap::new();
    let mut metadata: BTreeMap<PageId, BTreeMap<String, String>> = BTreeMap::new();
    let mut meta = |page: u16, pairs: &[(&str, String)]| {
        let m = metadata.entry(PageId(page)).or_default();
        for (k, v) in pairs {
            m.insert(k.to_string(), v.clone());
        }
    };
    let mut button = |from: u16, id: u16, to: u16, kind: ElementKind| {
        elements
            .entry(PageId(from))
            .or_default()
            .push((ElementId(id), kind));
        edges.insert((PageId(from), Action::click(id)), PageId(to));
    };
    // Plain links are identified by their target page.
    macro_rules! link {
        ($from:expr, $to:expr, $kind:expr $(,)?) => {{
            let to = $to;
            button($from, to, to, $kind)
        }};
    }

    meta(HOME, &[("role", "home".into()), ("name", "home".into())]);
    for c in 0..CATEGORIES {
        let page = FIRST_CATEGORY + c;
        let name = CATEGORY_NAMES[c as usize];
        meta(page, &[("role", "category".into()), ("name", name.into())]);
        link!(HOME, page, ElementKind::Link);
        for pos in 0..4u16 {
            let item = items[(c * 4 + pos) as usize];
            let kind = if pos < 2 {
                ElementKind::Link
            } else {
                ElementKind::HiddenLink
            };
            link!(page, item, kind);
            link!(
                RESULTS,
                item,
                ElementKind::ResultLink {
                    query: tok(name),
                },
            );
            meta(
                item,
                &[
                    ("role", "item".into()),
                    ("name", format!("item_{}", item - FIRST_ITEM)),
                    ("category", name.into()),
                    ("position", format!("{pos}")),
                ],
            );
        }
    }
    for (page, role) in [
        (CART, "cart"),
        (CHECKOUT, "checkout"),
        (CONFIRMATION, "confirmation"),
        (SEARCH, "search"),
        (RESULTS, "results"),
        (SETTINGS, "settings"),
        (LANGUAGE, "setting"),
        (THEME, "setting"),
        (PROFILE, "setting"),
    ] {
        let name = match page {
            LANGUAGE => "language",
            THEME => "theme",
            PROFILE => "profile",
            _ => role,
        };
        meta(page, &[("role", role.into()), ("name", name.into())]);
    }
    button(CART, CHECKOUT_BUTTON, CHECKOUT, ElementKind::Checkout);
    button(CHECKOUT, PLACE_ORDER, CONFIRMATION, ElementKind::PlaceOrder);
    for page in [LANGUAGE, THEME, PROFILE] {
        link!(SETTINGS, page, ElementKind::Link);
    }

    // Buttons and inputs whose effects stay on the page.
    for item in FIRST_ITEM..FIRST_ITEM + ITEMS {
        elements.entry(PageId(item)).or_default().push((
            ElementId(ADD_TO_CART),
            ElementKind::AddToCart {
                item: PageId(item),
            },
        ));
        edges.insert((PageId(item), Action::click(ADD_TO_CART)), PageId(item));
    }
    elements
        .entry(PageId(SEARCH))
        .or_default()
        .push((ElementId(SEARCH_BOX), ElementKind::SearchBox));
    for name in CATEGORY_NAMES {
        edges.insert((PageId(SEARCH), Action::search(tok(name))), PageId(RESULTS));
    }
    let language = SettingKey(0);
    let theme = SettingKey(1);
    let nickname = SettingKey(2);
    elements.entry(PageId(LANGUAGE)).or_default().push((
        ElementId(DROPDOWN),
        ElementKind::Dropdown { setting: language },
    ));
    for name in LANGUAGES {
        edges.insert((PageId(LANGUAGE), Action::select(tok(name))), PageId(LANGUAGE));
    }
    elements
        .entry(PageId(THEME))
        .or_default()
        .push((ElementId(DROPDOWN), ElementKind::Dropdown { setting: theme }));
    for name in &offered_themes {
        edges.insert((PageId(THEME), Action::select(tok(name))), PageId(THEME));
    }
    elements.entry(PageId(PROFILE)).or_default().push((
        ElementId(TEXT_FIELD),
        ElementKind::TextField { setting: nickname },
    ));
    for name in NICKNAMES {
        edges.insert((PageId(PROFILE), Action::type_text(tok(name))), PageId(PROFILE));
    }
    for c in 0..CATEGORIES {
        edges.insert((PageId(FIRST_CATEGORY + c), Action::SCROLL), PageId(FIRST_CATEGORY + c));
    }

    // Static back-links to each page's parent.
    let mut parent = |child: u16, p: u16| {
        edges.insert((PageId(child), Action::GO_BACK), PageId(p));
    };
    for c in 0..CATEGORIES {
        parent(FIRST_CATEGORY + c, HOME);
        for pos in 0..4u16 {
            parent(items[(c * 4 + pos) as usize], FIRST_CATEGORY + c);
        }
    }
    for (child, p) in [
        (CART, HOME),
        (CHECKOUT, CART),
        (CONFIRMATION, HOME),
        (SEARCH, HOME),
        (RESULTS, SEARCH),
        (SETTINGS, HOME),
        (LANGUAGE, SETTINGS),
        (THEME, SETTINGS),
        (PROFILE, SETTINGS),
    ] {
        parent(child, p);
    }

    // Navigation bar on every page.
    for &page in &pages {
        for target in NAV_BAR {
            if page.0 != target {
                edges.insert((page, Action::goto(target)), PageId(target));
            }
        }
    }

    SiteGraph {
        seed,
        home: PageId(HOME),
        pages,
        elements,
        edges,
        metadata,
        tokens,
        settings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_site_shape() {
        let g = build_default_site(0);
        assert_eq!(g.pages.len(), 30);
        assert!(g.edges.len() >= 60);
        assert_eq!(g.reachable_from_home().len(), 30);
        g.validate().unwrap();
        assert_eq!(g.pages_with_role("item").len(), 16);
        assert_eq!(g.pages_with_role("category").len(), 4);
    }

    #[test]
    fn seeds_change_the_graph() {
        let a = build_default_site(0);
        assert_eq!(a, build_default_site(0));
        let b = build_default_site(1);
        let differing = a
            .edges
            .iter()
            .filter(|(k, v)| b.edges.get(k) != Some(v))
            .count();
        assert!(differing >= 1);
    }

    #[test]
    fn outgoing_is_sorted_and_local() {
        let g = build_default_site(3);
        let out: Vec<_> = g.outgoing(PageId(roles::HOME)).collect();
        assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(
            out.iter().filter(|(a, _)| a.kind == ActionKind::Click).count(),
            4
        );
    }
}
