//! Banknote tallies. Amounts are integer minor units (cents); different
//! currencies are never added together.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::feedback::{Priority, SpeechItem};
use crate::model::Detection;

pub const NO_CURRENCY_MESSAGE: &str = "no currency detected";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoteParseError {
    MissingSeparator,
    BadCurrency(String),
    BadAmount(String),
}

impl fmt::Display for NoteParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoteParseError::MissingSeparator => f.write_str("expected <CUR>_<value>"),
            NoteParseError::BadCurrency(c) => write!(f, "{c:?} is not a 3-letter currency code"),
            NoteParseError::BadAmount(a) => write!(f, "{a:?} is not a positive amount"),
        }
    }
}

impl core::error::Error for NoteParseError {}

/// A denomination parsed from a detector label such as `"USD_20"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoteClass {
    pub currency: String,
    /// Denomination in hundredths of the major unit.
    pub minor_units: u64,
}

impl NoteClass {
    pub fn parse(label: &str) -> Result<NoteClass, NoteParseError> {
        let (cur, amount) = label.split_once('_').ok_or(NoteParseError::MissingSeparator)?;
        if cur.len() != 3 || !cur.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(NoteParseError::BadCurrency(String::from(cur)));
        }
        let minor_units =
            parse_minor_units(amount).ok_or_else(|| NoteParseError::BadAmount(String::from(amount)))?;
        Ok(NoteClass {
            currency: String::from(cur),
            minor_units,
        })
    }
}

/// Parse a positive decimal with at most two fractional digits into cents.
fn parse_minor_units(s: &str) -> Option<u64> {
    let (whole, frac) = match s.split_once('.') {
        Some((w, f)) => (w, f),
        None => (s, ""),
    };
    if whole.is_empty() || frac.len() > 2 || (s.contains('.') && frac.is_empty()) {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: u64 = whole.parse().ok()?;
    let mut cents: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    if frac.len() == 1 {
        cents *= 10;
    }
    let total = whole.checked_mul(100)?.checked_add(cents)?;
    (total > 0).then_some(total)
}

/// Format cents as a spoken amount: `45`, `12.5` becomes `12.50`.
pub fn format_minor_units(units: u64) -> String {
    if units % 100 == 0 {
        format!("{}", units / 100)
    } else {
        format!("{}.{:02}", units / 100, units % 100)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CurrencyTotal {
    pub minor_units: u64,
    pub note_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub totals: BTreeMap<String, CurrencyTotal>,
    /// Detections whose label was not a note class.
    pub skipped: u64,
}

impl Tally {
    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn add(&mut self, note: &NoteClass) {
        let e = self.totals.entry(note.currency.clone()).or_default();
        e.minor_units += note.minor_units;
        e.note_count += 1;
    }
}

/// Aggregate parseable notes with `score >= min_score`, per currency.
pub fn tally(detections: &[Detection], min_score: f64) -> Tally {
    let mut t = Tally::default();
    for d in detections {
        if d.score < min_score {
            continue;
        }
        match NoteClass::parse(&d.label) {
            Ok(note) => t.add(&note),
            Err(_) => t.skipped += 1,
        }
    }
    t
}

/// Spoken currency names, keyed by ISO code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CurrencyNames(BTreeMap<String, String>);

impl CurrencyNames {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self(map)
    }

    /// Falls back to the code itself.
    pub fn spoken<'a>(&'a self, code: &'a str) -> &'a str {
        self.0.get(code).map(String::as_str).unwrap_or(code)
    }
}

impl FromIterator<(String, String)> for CurrencyNames {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// One sentence per currency in code order, e.g. "45 US dollars (3 notes)".
pub fn announce_tally(t: &Tally, names: &CurrencyNames) -> SpeechItem {
    let text = if t.is_empty() {
        String::from(NO_CURRENCY_MESSAGE)
    } else {
        let sentences: Vec<String> = t
            .totals
            .iter()
            .map(|(code, total)| {
                let notes = if total.note_count == 1 { "note" } else { "notes" };
                format!(
                    "{} {} ({} {notes})",
                    format_minor_units(total.minor_units),
                    names.spoken(code),
                    total.note_count
                )
            })
            .collect();
        sentences.join(". ")
    };
    SpeechItem {
        text,
        priority: Priority::CONTENT,
        dedupe_key: None,
        enqueued_ms: 0,
    }
}
