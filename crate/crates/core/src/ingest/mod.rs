//! Wikipedia dump ingestion: page streaming, sectioning and wikitext cleanup.
//!
//! The pieces here are deliberately small. [`stream_pages`] turns a MediaWiki
//! XML export into a lazy sequence of [`RawPage`]s, [`split_sections`] cuts a
//! page's wikitext at level-2 headings, and [`clean_wikitext`] reduces a body
//! to plain text that [`count_tokens`] can measure.

mod clean;
mod dump;
mod sections;

pub use clean::clean_wikitext;
pub use dump::{open_dump, stream_pages, DumpError, PageStream};
pub use sections::{is_content_heading, split_sections, BOILERPLATE_HEADINGS};

use serde::{Deserialize, Serialize};

/// A `<page>` element as read from the dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPage {
    pub title: String,
    pub namespace: i64,
    pub is_redirect: bool,
    pub wikitext: String,
    pub page_id: u64,
}

impl RawPage {
    /// Namespace 0, not a redirect and not a disambiguation page.
    pub fn is_article(&self) -> bool {
        self.namespace == 0 && !self.is_redirect && !self.title.trim_end().ends_with("(disambiguation)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    /// Always 2 for sections produced by [`split_sections`].
    pub level: u8,
    pub body_wikitext: String,
    pub body_clean: String,
    pub token_count: usize,
}

impl Section {
    /// Fill `body_clean` and `token_count` from `body_wikitext`.
    pub fn clean(mut self) -> Self {
        self.body_clean = clean_wikitext(&self.body_wikitext);
        self.token_count = count_tokens(&self.body_clean);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanArticle {
    pub title: String,
    pub page_id: u64,
    pub sections: Vec<Section>,
}

impl CleanArticle {
    /// Section and clean an article page. Returns `None` for pages that are
    /// not articles (other namespaces, redirects, disambiguation pages).
    pub fn from_page(page: &RawPage) -> Option<Self> {
        if !page.is_article() {
            return None;
        }
        let sections = split_sections(&page.wikitext)
            .into_iter()
            .map(|s| {
                let heading = clean_wikitext(&s.heading);
                Section { heading, ..s }.clean()
            })
            .collect();
        Some(CleanArticle {
            title: page.title.trim().to_string(),
            page_id: page.page_id,
            sections,
        })
    }
}

/// Number of maximal non-whitespace runs in `text`.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}
