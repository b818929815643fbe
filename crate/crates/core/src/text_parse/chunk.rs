use serde::{Deserialize, Serialize};

use super::{Pos, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    Subject,
    ObjectOfPreposition,
    Other,
}

/// A head noun plus the modifiers that describe it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub root: Token,
    /// Modifiers in sentence order, unique by lemma. Never contains `DET`.
    pub children: Vec<Token>,
    pub relation: Relation,
}

impl Chunk {
    pub fn root_lemma(&self) -> &str {
        &self.root.lemma
    }

    pub fn child_lemmas(&self) -> impl Iterator<Item = &str> {
        self.children.iter().map(|t| t.lemma.as_str())
    }

    pub fn has_child(&self, lemma: &str) -> bool {
        self.children.iter().any(|c| c.lemma == lemma)
    }

    /// Lowercased surface text of the children followed by the root,
    /// ordered as in the sentence: `"red car"`, `"tennis ball"`.
    pub fn phrase(&self) -> String {
        let mut words: Vec<&Token> = self.children.iter().filter(|c| c.index < self.root.index).collect();
        words.push(&self.root);
        words.extend(self.children.iter().filter(|c| c.index > self.root.index));
        words
            .iter()
            .map(|t| t.surface.to_lowercase())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn add_child(&mut self, tok: Token) {
        if tok.pos == Pos::Det || tok.index == self.root.index || self.has_child(&tok.lemma) {
            return;
        }
        let at = self.children.partition_point(|c| c.index < tok.index);
        self.children.insert(at, tok);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSet {
    pub chunks: Vec<Chunk>,
    pub source_text: String,
}

impl ChunkSet {
    pub fn empty(source_text: impl Into<String>) -> Self {
        Self {
            chunks: Vec::new(),
            source_text: source_text.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn get(&self, root_lemma: &str) -> Option<&Chunk> {
        self.chunks.iter().find(|c| c.root.lemma == root_lemma)
    }

    pub fn root_lemmas(&self) -> impl Iterator<Item = &str> {
        self.chunks.iter().map(|c| c.root.lemma.as_str())
    }

    pub fn phrases(&self) -> Vec<String> {
        self.chunks.iter().map(Chunk::phrase).collect()
    }

    /// Insert a chunk, folding it into an existing chunk with the same root
    /// lemma if there is one.
    fn push_merged(&mut self, chunk: Chunk) -> usize {
        if let Some(pos) = self.chunks.iter().position(|c| c.root.lemma == chunk.root.lemma) {
            for child in chunk.children {
                self.chunks[pos].add_child(child);
            }
            pos
        } else {
            self.chunks.push(chunk);
            self.chunks.len() - 1
        }
    }
}

fn is_coordinator(tok: &Token) -> bool {
    matches!(tok.lemma.as_str(), "and" | "or")
}

#[derive(Default)]
struct Builder {
    set: Vec<Chunk>,
    /// Modifier run waiting for its head noun.
    pending: Vec<Token>,
    nouns: Vec<Token>,
    /// An ADP was seen and has not yet been consumed by a chunk.
    after_adp: bool,
    /// Whether the run in progress started under an ADP.
    run_governed: Option<bool>,
    /// Chunk whose root (or trailing participle) is the previous token.
    open_chunk: Option<usize>,
    subject_seen: bool,
}

impl Builder {
    fn start_run(&mut self) {
        if self.run_governed.is_none() {
            self.run_governed = Some(self.after_adp);
        }
    }

    fn close(&mut self) {
        let Some(root) = self.nouns.pop() else {
            return;
        };
        let governed = self.run_governed.take().unwrap_or(self.after_adp);
        let relation = if governed {
            Relation::ObjectOfPreposition
        } else if !self.subject_seen {
            self.subject_seen = true;
            Relation::Subject
        } else {
            Relation::Other
        };
        let mut chunk = Chunk {
            root,
            children: Vec::new(),
            relation,
        };
        for tok in self.pending.drain(..).chain(self.nouns.drain(..)) {
            chunk.add_child(tok);
        }
        self.set.push(chunk);
        self.after_adp = false;
        self.open_chunk = Some(self.set.len() - 1);
    }

    fn feed(&mut self, tok: &Token) {
        if tok.pos == Pos::Noun {
            self.start_run();
            self.nouns.push(tok.clone());
            return;
        }
        let just_closed = !self.nouns.is_empty();
        self.close();
        match tok.pos {
            Pos::Det | Pos::Adj | Pos::Num => {
                self.start_run();
                self.pending.push(tok.clone());
                self.open_chunk = None;
            }
            Pos::Verb if tok.is_participle() => match self.open_chunk {
                Some(i) if self.pending.is_empty() => self.set[i].add_child(tok.clone()),
                _ => {
                    self.start_run();
                    self.pending.push(tok.clone());
                    self.open_chunk = None;
                }
            },
            Pos::Adp => {
                self.pending.clear();
                self.run_governed = None;
                self.after_adp = true;
                self.open_chunk = None;
            }
            _ if is_coordinator(tok) => {
                // "a red and white bus": keep the modifier run alive.
                // "on a table and a chair": the conjunct inherits the ADP.
                if just_closed {
                    if let Some(i) = self.open_chunk {
                        self.after_adp = self.set[i].relation == Relation::ObjectOfPreposition;
                    }
                }
                self.open_chunk = None;
            }
            _ => {
                self.pending.clear();
                self.run_governed = None;
                self.after_adp = false;
                self.open_chunk = None;
            }
        }
    }
}

/// Greedy left-to-right noun chunking over tagged tokens.
///
/// A run of determiners, adjectives, numerals and participles followed by
/// one or more nouns becomes a chunk rooted at the last noun; the other
/// nouns of the run become children. The first chunk not preceded by a
/// preposition is the subject. A participle directly after a chunk root
/// (`a car parked ...`) attaches to that root. Chunks sharing a root lemma
/// are merged, children unioned.
pub fn parse_chunks(tokens: &[Token], source_text: &str) -> Result<ChunkSet> {
    let mut b = Builder::default();
    for tok in tokens {
        b.feed(tok);
    }
    b.close();

    if b.set.is_empty() {
        return Err(Error::NoChunkFound {
            text: source_text.to_owned(),
        });
    }
    let mut set = ChunkSet::empty(source_text);
    for chunk in b.set {
        set.push_merged(chunk);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_parse::{parse_text, Lexicon};

    fn parse(text: &str) -> ChunkSet {
        parse_text(text, Lexicon::builtin()).unwrap()
    }

    fn summary(set: &ChunkSet) -> Vec<(String, Vec<String>, Relation)> {
        set.chunks
            .iter()
            .map(|c| {
                (
                    c.root.lemma.clone(),
                    c.child_lemmas().map(str::to_owned).collect(),
                    c.relation,
                )
            })
            .collect()
    }

    #[test]
    fn red_car() {
        let s = parse("a red car");
        assert_eq!(summary(&s), [("car".into(), vec!["red".into()], Relation::Subject)]);
        assert_eq!(s.chunks[0].phrase(), "red car");
    }

    #[test]
    fn yellow_bus() {
        let s = parse("a yellow bus");
        assert_eq!(summary(&s), [("bus".into(), vec!["yellow".into()], Relation::Subject)]);
    }

    #[test]
    fn tennis_ball_on_court() {
        let s = parse("A tennis ball on a tennis court");
        assert_eq!(
            summary(&s),
            [
                ("ball".into(), vec!["tennis".into()], Relation::Subject),
                ("court".into(), vec!["tennis".into()], Relation::ObjectOfPreposition),
            ]
        );
    }

    #[test]
    fn post_nominal_participle() {
        let s = parse("people riding the back of an elephant");
        assert_eq!(
            summary(&s),
            [
                ("people".into(), vec!["riding".into()], Relation::Subject),
                ("back".into(), vec![], Relation::Other),
                ("elephant".into(), vec![], Relation::ObjectOfPreposition),
            ]
        );
        assert_eq!(s.chunks[0].phrase(), "people riding");
    }

    #[test]
    fn coordinated_modifiers() {
        let s = parse("a red and white bus");
        assert_eq!(summary(&s)[0].1, ["red", "white"]);
    }

    #[test]
    fn duplicate_roots_merge() {
        let s = parse("a black dog next to a brown dog");
        assert_eq!(s.len(), 1);
        assert_eq!(summary(&s)[0].1, ["black", "brown"]);
    }

    #[test]
    fn no_noun_is_an_error() {
        let toks = crate::text_parse::tag_pos(&crate::text_parse::tokenize("a very red"), Lexicon::builtin());
        assert!(matches!(
            parse_chunks(&toks, "a very red"),
            Err(Error::NoChunkFound { .. })
        ));
        assert!(matches!(parse_chunks(&[], ""), Err(Error::NoChunkFound { .. })));
    }
}
