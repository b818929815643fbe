//! Caption and prompt parsing.
//!
//! The grammar is deliberately narrow: caption-style English noun phrases
//! (determiner, modifiers, head noun) optionally followed by prepositional
//! phrases and post-nominal participles. Anything outside that shape is
//! skipped rather than rejected.

mod chunk;
mod lexicon;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use chunk::{parse_chunks, Chunk, ChunkSet, Relation};
pub use lexicon::{Lexicon, LexiconEntry, SuffixRule};
pub use tokenize::tokenize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Det,
    Adj,
    Noun,
    Verb,
    Adp,
    Num,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Det => "DET",
            Pos::Adj => "ADJ",
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adp => "ADP",
            Pos::Num => "NUM",
            Pos::Other => "OTHER",
        }
    }
}

impl std::str::FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "DET" => Pos::Det,
            "ADJ" => Pos::Adj,
            "NOUN" => Pos::Noun,
            "VERB" => Pos::Verb,
            "ADP" => Pos::Adp,
            "NUM" => Pos::Num,
            "OTHER" => Pos::Other,
            _ => return Err(format!("unknown part of speech {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    pub index: usize,
}

impl Token {
    /// Present or past participles (`standing`, `parked`).
    pub fn is_participle(&self) -> bool {
        self.pos == Pos::Verb && (self.lemma.ends_with("ing") || self.lemma.ends_with("ed"))
    }
}

/// Part-of-speech tag every token. Entries win over suffix rules; anything
/// left unmatched defaults to `NOUN`.
pub fn tag_pos(tokens: &[Token], lexicon: &Lexicon) -> Vec<Token> {
    tokens
        .iter()
        .map(|tok| {
            let (lemma, pos) = lexicon.classify(&tok.surface);
            Token {
                surface: tok.surface.clone(),
                lemma,
                pos,
                index: tok.index,
            }
        })
        .collect()
}

/// Tokenize, tag and chunk in one pass.
pub fn parse_text(text: &str, lexicon: &Lexicon) -> Result<ChunkSet> {
    let tagged = tag_pos(&tokenize(text), lexicon);
    parse_chunks(&tagged, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(word: &str) -> Token {
        tag_pos(&tokenize(word), Lexicon::builtin()).remove(0)
    }

    #[test]
    fn direct_entries() {
        assert_eq!(tag("red").pos, Pos::Adj);
        assert_eq!(tag("car").pos, Pos::Noun);
        assert_eq!(tag("a").pos, Pos::Det);
    }

    #[test]
    fn ing_fallback_gives_verb() {
        let lex = Lexicon::builtin();
        assert!(!lex.contains("standing"));
        let t = tag("standing");
        assert_eq!(t.pos, Pos::Verb);
        assert!(t.is_participle());
    }

    #[test]
    fn unknown_word_defaults_to_noun() {
        let t = tag("zyxwv");
        assert_eq!(t.pos, Pos::Noun);
        assert_eq!(t.lemma, "zyxwv");
    }

    #[test]
    fn plural_lemmas() {
        assert_eq!(tag("Cars").lemma, "car");
        assert_eq!(tag("buses").lemma, "bus");
        assert_eq!(tag("boxes").lemma, "box");
        assert_eq!(tag("dresses").lemma, "dress");
        // eyewear, listed as its own lemma
        assert_eq!(tag("glasses").lemma, "glasses");
        assert_eq!(tag("bus").lemma, "bus");
    }

    #[test]
    fn lemmas_are_lowercase_and_nonempty() {
        for t in tag_pos(&tokenize("The BIG Red Barn near Three TALL Trees"), Lexicon::builtin()) {
            assert!(!t.lemma.is_empty());
            assert_eq!(t.lemma, t.lemma.to_lowercase());
        }
    }
}
