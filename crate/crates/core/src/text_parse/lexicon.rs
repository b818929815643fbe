use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use super::Pos;
use crate::error::{Error, Result};

const BUILTIN_TSV: &str = include_str!("../../data/lexicon.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub lemma: String,
    pub pos: Pos,
}

/// Suffix rule applied when no entry matches, e.g. `-ing` -> `VERB`.
/// `min_stem` guards short words (`king`, `bed`) from firing the rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    pub pos: Pos,
    pub min_stem: usize,
}

impl SuffixRule {
    pub fn new(suffix: &str, pos: Pos, min_stem: usize) -> Self {
        Self {
            suffix: suffix.to_owned(),
            pos,
            min_stem,
        }
    }

    fn matches(&self, word: &str) -> bool {
        word.ends_with(&self.suffix) && word.chars().count() >= self.suffix.chars().count() + self.min_stem
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, LexiconEntry>,
    rules: Vec<SuffixRule>,
}

impl Lexicon {
    pub fn default_rules() -> Vec<SuffixRule> {
        vec![
            SuffixRule::new("ing", Pos::Verb, 3),
            SuffixRule::new("ed", Pos::Verb, 3),
            SuffixRule::new("ly", Pos::Other, 3),
            SuffixRule::new("ous", Pos::Adj, 3),
            SuffixRule::new("ful", Pos::Adj, 3),
            SuffixRule::new("ish", Pos::Adj, 3),
            SuffixRule::new("less", Pos::Adj, 3),
            SuffixRule::new("able", Pos::Adj, 3),
        ]
    }

    /// The shipped caption lexicon, parsed once.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| Lexicon::parse(BUILTIN_TSV).expect("shipped lexicon is valid"))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parse `surface \t lemma \t POS` lines. Blank lines and `#` comments are
    /// skipped. Every lemma must either equal its surface form or be a
    /// surface form of some other entry.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::LexiconLoad {
                    line: line_no,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let surface = fields[0].trim().to_lowercase();
            let lemma = fields[1].trim();
            if surface.is_empty() || lemma.is_empty() {
                return Err(Error::LexiconLoad {
                    line: line_no,
                    reason: "empty surface or lemma".into(),
                });
            }
            if lemma != lemma.to_lowercase() {
                return Err(Error::LexiconLoad {
                    line: line_no,
                    reason: format!("lemma {lemma:?} is not lowercase"),
                });
            }
            let pos = fields[2]
                .trim()
                .parse::<Pos>()
                .map_err(|reason| Error::LexiconLoad { line: line_no, reason })?;
            if entries.contains_key(&surface) {
                return Err(Error::LexiconLoad {
                    line: line_no,
                    reason: format!("duplicate entry {surface:?}"),
                });
            }
            entries.insert(
                surface,
                LexiconEntry {
                    lemma: lemma.to_owned(),
                    pos,
                },
            );
        }
        let lexicon = Self {
            entries,
            rules: Self::default_rules(),
        };
        lexicon.check_lemmas()?;
        Ok(lexicon)
    }

    fn check_lemmas(&self) -> Result<()> {
        let mut dangling: Vec<_> = self
            .entries
            .iter()
            .filter(|(surface, e)| *surface != &e.lemma && !self.entries.contains_key(&e.lemma))
            .map(|(surface, e)| format!("{surface} -> {}", e.lemma))
            .collect();
        if dangling.is_empty() {
            return Ok(());
        }
        dangling.sort();
        Err(Error::LexiconLoad {
            line: 0,
            reason: format!("lemmas without an entry: {}", dangling.join(", ")),
        })
    }

    pub fn with_rules(mut self, rules: Vec<SuffixRule>) -> Self {
        self.rules = rules;
        self
    }

    /// Add or replace entries from another lexicon (user extensions).
    pub fn extend(&mut self, other: Lexicon) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains_key(&surface.to_lowercase())
    }

    pub fn get(&self, surface: &str) -> Option<&LexiconEntry> {
        self.entries.get(&surface.to_lowercase())
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    /// Lemma and part of speech for one surface form.
    pub fn classify(&self, surface: &str) -> (String, Pos) {
        let lower = surface.to_lowercase();
        if let Some(e) = self.entries.get(&lower) {
            return (e.lemma.clone(), e.pos);
        }
        for stem in plural_stems(&lower) {
            if let Some(e) = self.entries.get(&stem) {
                if e.pos == Pos::Noun {
                    return (e.lemma.clone(), Pos::Noun);
                }
            }
        }
        if !lower.is_empty() && lower.chars().all(|c| c.is_ascii_digit()) {
            return (lower, Pos::Num);
        }
        if let Some(rule) = self.rules.iter().find(|r| r.matches(&lower)) {
            return (lower, rule.pos);
        }
        let lemma = plural_stems(&lower).into_iter().next().unwrap_or(lower);
        (lemma, Pos::Noun)
    }
}

/// `-es` / `-s` stripping candidates, most specific first.
fn plural_stems(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(stem) = word.strip_suffix("es") {
        if ["s", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) && stem.len() >= 2 {
            out.push(stem.to_owned());
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.ends_with('s') && stem.chars().count() >= 2 {
            out.push(stem.to_owned());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_sizeable() {
        assert!(Lexicon::builtin().len() >= 500, "{}", Lexicon::builtin().len());
    }

    #[test]
    fn comments_and_blank_lines() {
        let lex = Lexicon::parse("# header\n\nred\tred\tADJ\ncars\tcar\tNOUN\ncar\tcar\tNOUN\n").unwrap();
        assert_eq!(lex.len(), 3);
        assert_eq!(lex.classify("cars"), ("car".into(), Pos::Noun));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for bad in [
            "red\tADJ\n",
            "red\tred\tCOLOUR\n",
            "red\tRed\tADJ\n",
            "cars\tcar\tNOUN\n",
            "red\tred\tADJ\nred\tred\tADJ\n",
        ] {
            assert!(matches!(Lexicon::parse(bad), Err(Error::LexiconLoad { .. })), "{bad:?}");
        }
    }

    #[test]
    fn entry_beats_rule() {
        let lex = Lexicon::parse("building\tbuilding\tNOUN\n").unwrap();
        assert_eq!(lex.classify("building").1, Pos::Noun);
        assert_eq!(lex.classify("walking").1, Pos::Verb);
    }

    #[test]
    fn rules_respect_min_stem() {
        let lex = Lexicon::parse("").unwrap();
        assert_eq!(lex.classify("sing").1, Pos::Noun);
        assert_eq!(lex.classify("bed").1, Pos::Noun);
        assert_eq!(lex.classify("parked").1, Pos::Verb);
        assert_eq!(lex.classify("42").1, Pos::Num);
    }

    #[test]
    fn plural_stripping() {
        assert_eq!(plural_stems("boxes"), ["box", "boxe"]);
        assert_eq!(plural_stems("dogs"), ["dog"]);
        assert!(plural_stems("grass").is_empty());
    }
}
