//! Edit-intent localisation: compare the chunk sets of an image caption and
//! a target prompt and decide what to forget.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text_parse::{Chunk, ChunkSet, Token};

/// Direction of the modifier difference when caption and prompt share a root.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocateMode {
    /// `prompt.children - caption.children`, as the algorithm listing prints it.
    PaperLiteral,
    /// `caption.children - prompt.children`: forget the attributes the image
    /// has and the prompt no longer asks for.
    #[default]
    ImageResidual,
}

impl std::str::FromStr for LocateMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paper-literal" | "literal" => Ok(LocateMode::PaperLiteral),
            "image-residual" | "residual" => Ok(LocateMode::ImageResidual),
            _ => Err(format!(
                "unknown locate mode {s:?} (expected image-residual or paper-literal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocateRule {
    /// No shared subject: the whole caption chunk is forgotten.
    SubjectChange,
    /// Shared subject with differing modifiers.
    AttributeDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChunkSource {
    Caption,
    Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub element: String,
    pub source: ChunkSource,
    /// Root lemma of the chunk the element came from.
    pub chunk_root: String,
    pub rule: LocateRule,
}

/// Positive concepts (`c_p`) and forgetting elements (`c_n`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPlan {
    pub positive_concepts: Vec<String>,
    pub forgetting_elements: Vec<String>,
    pub mode: LocateMode,
    pub provenance: Vec<Provenance>,
}

impl EditPlan {
    /// A plan with no forgetting elements: plain classifier-free guidance.
    pub fn positive_only(positive_concepts: Vec<String>) -> Self {
        Self {
            positive_concepts,
            forgetting_elements: Vec::new(),
            mode: LocateMode::default(),
            provenance: Vec::new(),
        }
    }
}

/// Root lemmas present in both sets, by exact lemma equality.
pub fn get_common_chunk(caption: &ChunkSet, prompt: &ChunkSet) -> BTreeSet<String> {
    let prompt_roots: BTreeSet<&str> = prompt.root_lemmas().collect();
    caption
        .root_lemmas()
        .filter(|r| prompt_roots.contains(r))
        .map(str::to_owned)
        .collect()
}

/// Modifier set difference between two chunks sharing a root, by lemma.
/// Result keeps the sentence order of the chunk it was taken from.
pub fn diff_modifiers(caption_chunk: &Chunk, prompt_chunk: &Chunk, mode: LocateMode) -> Result<Vec<Token>> {
    if caption_chunk.root.lemma != prompt_chunk.root.lemma {
        return Err(Error::RootMismatch {
            left: caption_chunk.root.lemma.clone(),
            right: prompt_chunk.root.lemma.clone(),
        });
    }
    let (from, minus) = match mode {
        LocateMode::PaperLiteral => (prompt_chunk, caption_chunk),
        LocateMode::ImageResidual => (caption_chunk, prompt_chunk),
    };
    Ok(from
        .children
        .iter()
        .filter(|c| !minus.has_child(&c.lemma))
        .cloned()
        .collect())
}

fn modifier_phrase(modifier: &Token, root: &Token) -> String {
    let (m, r) = (modifier.surface.to_lowercase(), root.surface.to_lowercase());
    if modifier.index < root.index {
        format!("{m} {r}")
    } else {
        format!("{r} {m}")
    }
}

/// Derive the edit plan from caption and prompt chunk sets.
///
/// Without a shared root every caption chunk is forgotten. With shared roots
/// each differing modifier is forgotten as a `"<modifier> <root>"` phrase.
/// In image-residual mode a phrase equal to a positive concept is never
/// forgotten. Literal mode keeps the raw set difference, which for a
/// single swapped attribute is exactly the prompt phrase.
pub fn locate(caption: &ChunkSet, prompt: &ChunkSet, mode: LocateMode) -> Result<EditPlan> {
    if prompt.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let positive_concepts = dedup(prompt.phrases());
    let common = get_common_chunk(caption, prompt);

    let mut candidates: Vec<Provenance> = Vec::new();
    if common.is_empty() {
        for chunk in &caption.chunks {
            candidates.push(Provenance {
                element: chunk.phrase(),
                source: ChunkSource::Caption,
                chunk_root: chunk.root.lemma.clone(),
                rule: LocateRule::SubjectChange,
            });
        }
    } else {
        for chunk in caption.chunks.iter().filter(|c| common.contains(&c.root.lemma)) {
            let p = prompt.get(&chunk.root.lemma).expect("common root present in prompt");
            let (source, owner) = match mode {
                LocateMode::PaperLiteral => (ChunkSource::Prompt, p),
                LocateMode::ImageResidual => (ChunkSource::Caption, chunk),
            };
            for modifier in diff_modifiers(chunk, p, mode)? {
                candidates.push(Provenance {
                    element: modifier_phrase(&modifier, &owner.root),
                    source,
                    chunk_root: owner.root.lemma.clone(),
                    rule: LocateRule::AttributeDiff,
                });
            }
        }
    }

    let mut forgetting_elements = Vec::new();
    let mut provenance = Vec::new();
    for c in candidates {
        let clashes = mode == LocateMode::ImageResidual && positive_concepts.contains(&c.element);
        if clashes || forgetting_elements.contains(&c.element) {
            continue;
        }
        forgetting_elements.push(c.element.clone());
        provenance.push(c);
    }

    Ok(EditPlan {
        positive_concepts,
        forgetting_elements,
        mode,
        provenance,
    })
}

fn dedup(items: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_parse::{parse_text, Lexicon};

    fn cs(text: &str) -> ChunkSet {
        parse_text(text, Lexicon::builtin()).unwrap()
    }

    fn lemmas(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.lemma.as_str()).collect()
    }

    #[test]
    fn common_chunk_examples() {
        assert!(get_common_chunk(&cs("a red car"), &cs("a yellow bus")).is_empty());
        assert_eq!(
            get_common_chunk(&cs("a red car"), &cs("a car"))
                .into_iter()
                .collect::<Vec<_>>(),
            ["car"]
        );
        assert_eq!(
            get_common_chunk(
                &cs("A tennis ball on a tennis court"),
                &cs("a tomato on a tennis court")
            )
            .into_iter()
            .collect::<Vec<_>>(),
            ["court"]
        );
    }

    #[test]
    fn diff_modifiers_examples() {
        let (i, p) = (cs("a red car"), cs("a yellow car"));
        let (i, p) = (&i.chunks[0], &p.chunks[0]);
        assert_eq!(
            lemmas(&diff_modifiers(i, p, LocateMode::PaperLiteral).unwrap()),
            ["yellow"]
        );
        assert_eq!(
            lemmas(&diff_modifiers(i, p, LocateMode::ImageResidual).unwrap()),
            ["red"]
        );
        for mode in [LocateMode::PaperLiteral, LocateMode::ImageResidual] {
            assert!(diff_modifiers(i, i, mode).unwrap().is_empty());
        }
    }

    #[test]
    fn diff_modifiers_rejects_different_roots() {
        let (i, p) = (cs("a red car"), cs("a yellow bus"));
        assert!(matches!(
            diff_modifiers(&i.chunks[0], &p.chunks[0], LocateMode::ImageResidual),
            Err(Error::RootMismatch { .. })
        ));
    }

    #[test]
    fn subject_change_forgets_caption() {
        for mode in [LocateMode::PaperLiteral, LocateMode::ImageResidual] {
            let plan = locate(&cs("a red car"), &cs("a yellow bus"), mode).unwrap();
            assert_eq!(plan.forgetting_elements, ["red car"]);
            assert_eq!(plan.positive_concepts, ["yellow bus"]);
            assert_eq!(plan.provenance[0].rule, LocateRule::SubjectChange);
        }
    }

    #[test]
    fn attribute_change_by_mode() {
        let residual = locate(&cs("a red car"), &cs("a yellow car"), LocateMode::ImageResidual).unwrap();
        assert_eq!(residual.forgetting_elements, ["red car"]);
        assert_eq!(residual.positive_concepts, ["yellow car"]);
        assert_eq!(residual.provenance[0].source, ChunkSource::Caption);

        let literal = locate(&cs("a red car"), &cs("a yellow car"), LocateMode::PaperLiteral).unwrap();
        assert_eq!(literal.forgetting_elements, ["yellow car"]);
        assert_eq!(literal.provenance[0].source, ChunkSource::Prompt);
    }

    #[test]
    fn literal_mode_keeps_raw_difference() {
        let plan = locate(&cs("a car"), &cs("a yellow car"), LocateMode::PaperLiteral).unwrap();
        assert_eq!(plan.forgetting_elements, ["yellow car"]);
        let plan = locate(&cs("a car"), &cs("a yellow car"), LocateMode::ImageResidual).unwrap();
        assert!(plan.forgetting_elements.is_empty());
    }

    #[test]
    fn identical_inputs_forget_nothing() {
        for mode in [LocateMode::PaperLiteral, LocateMode::ImageResidual] {
            let plan = locate(&cs("a red car"), &cs("a red car"), mode).unwrap();
            assert!(plan.forgetting_elements.is_empty());
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            locate(&cs("a red car"), &ChunkSet::empty(""), LocateMode::ImageResidual),
            Err(Error::EmptyPrompt)
        ));
        let plan = locate(&ChunkSet::empty(""), &cs("a red car"), LocateMode::ImageResidual).unwrap();
        assert!(plan.forgetting_elements.is_empty());
    }

    #[test]
    fn non_subject_chunks_participate() {
        let plan = locate(
            &cs("people riding the back of a grey elephant"),
            &cs("the back of a pink elephant"),
            LocateMode::ImageResidual,
        )
        .unwrap();
        assert_eq!(plan.forgetting_elements, ["grey elephant"]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("paper-literal".parse::<LocateMode>().unwrap(), LocateMode::PaperLiteral);
        assert_eq!(
            "IMAGE_RESIDUAL".parse::<LocateMode>().unwrap(),
            LocateMode::ImageResidual
        );
        assert!("sideways".parse::<LocateMode>().is_err());
    }

    #[test]
    fn plan_json_shape() {
        let plan = locate(&cs("a red car"), &cs("a yellow bus"), LocateMode::ImageResidual).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["mode"], "IMAGE_RESIDUAL");
        assert_eq!(v["forgetting_elements"][0], "red car");
        assert_eq!(v["provenance"][0]["rule"], "SUBJECT_CHANGE");
    }
}
