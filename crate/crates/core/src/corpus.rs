//! A built-in corpus of small schemes with hand-derived answers.
//!
//! Items span orders 0 through 5, one- and two-letter alphabets, safe and
//! unsafe shapes, productive and idle cycles, divergent subtrees, and
//! letter-starved queries. Each `corpus/<name>.hors` file sits next to a
//! `corpus/<name>.expect` sidecar holding the expected first line of the
//! checker's output. The tests in this module hold every item to its
//! declared order, safety, and answer.

use crate::parser::{letters_for, parse_scheme};
use crate::scheme::Scheme;
use crate::types::Letters;
use crate::verdict::Outcome;

/// One corpus scheme with its metadata, embedded at compile time.
pub struct CorpusItem {
    pub name: &'static str,
    /// Scheme text, as stored in `corpus/<name>.hors`.
    pub text: &'static str,
    /// Sidecar text from `corpus/<name>.expect` (one verdict line).
    pub expect_text: &'static str,
    /// Scheme order the item is constructed to have.
    pub order: u32,
    /// Whether every rule is safe, by construction.
    pub safe: bool,
}

impl CorpusItem {
    /// The expected outcome, parsed from the sidecar.
    pub fn expect(&self) -> Outcome {
        parse_expect(self.expect_text)
            .unwrap_or_else(|| panic!("{}: bad sidecar {:?}", self.name, self.expect_text))
    }

    /// Parse the embedded text. Panics on a malformed item; the corpus is
    /// fixed at compile time, so that is a bug, not an input error.
    pub fn scheme(&self) -> Scheme {
        parse_scheme(self.text)
            .unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    /// The letters the item declares important.
    pub fn letters(&self, scheme: &Scheme) -> Letters {
        letters_for(scheme, None)
            .unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }
}

/// Parse one verdict line as written in `.expect` sidecars.
pub fn parse_expect(text: &str) -> Option<Outcome> {
    match text.trim() {
        "UNBOUNDED" => Some(Outcome::Unbounded),
        "BOUNDED" => Some(Outcome::Bounded),
        "UNKNOWN" => Some(Outcome::Unknown),
        _ => None,
    }
}

/// Look an item up by name.
pub fn find(name: &str) -> Option<&'static CorpusItem> {
    ITEMS.iter().find(|item| item.name == name)
}

macro_rules! item {
    ($name:literal, order $order:literal, safe $safe:literal) => {
        CorpusItem {
            name: $name,
            text: include_str!(concat!("../../../corpus/", $name, ".hors")),
            expect_text: include_str!(concat!("../../../corpus/", $name, ".expect")),
            order: $order,
            safe: $safe,
        }
    };
}

/// The whole corpus. C-series: single-letter. M-series: two letters.
/// X-series: unsafe schemes.
pub const ITEMS: &[CorpusItem] = &[
    item!("C01", order 0, safe true),
    item!("C02", order 0, safe true),
    item!("C03", order 0, safe true),
    item!("C04", order 0, safe true),
    item!("C05", order 0, safe true),
    item!("C06", order 0, safe true),
    item!("C07", order 0, safe true),
    item!("C08", order 0, safe true),
    item!("C09", order 1, safe true),
    item!("C10", order 1, safe true),
    item!("C11", order 1, safe true),
    item!("C12", order 1, safe true),
    item!("C13", order 2, safe true),
    item!("C14", order 1, safe true),
    item!("C15", order 2, safe true),
    item!("C16", order 2, safe true),
    item!("C17", order 2, safe true),
    item!("C18", order 3, safe true),
    item!("C19", order 3, safe true),
    item!("C20", order 4, safe true),
    item!("C21", order 5, safe true),
    item!("M01", order 0, safe true),
    item!("M02", order 0, safe true),
    item!("M03", order 0, safe true),
    item!("M04", order 0, safe true),
    item!("M05", order 1, safe true),
    item!("M06", order 0, safe true),
    item!("M07", order 0, safe true),
    item!("X01", order 2, safe false),
    item!("X02", order 2, safe false),
    item!("X03", order 2, safe false),
    item!("X04", order 2, safe false),
];
