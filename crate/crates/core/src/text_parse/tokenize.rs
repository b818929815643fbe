use super::{Pos, Token};

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// Split on whitespace and punctuation. Hyphens and apostrophes survive only
/// between two word characters (`t-shirt`, `man's`). Tokens come back
/// untagged: `pos` is `OTHER` and `lemma` is the lowercased surface.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        let joins = is_joiner(c) && !current.is_empty() && chars.get(i + 1).copied().is_some_and(is_word_char);
        if is_word_char(c) || joins {
            current.push(c);
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }

    words
        .into_iter()
        .enumerate()
        .map(|(index, surface)| Token {
            lemma: surface.to_lowercase(),
            surface,
            pos: Pos::Other,
            index,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn whitespace_split_with_indices() {
        let toks = tokenize("a red car");
        assert_eq!(surfaces("a red car"), ["a", "red", "car"]);
        assert_eq!(toks.iter().map(|t| t.index).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  .,; ").is_empty());
    }

    #[test]
    fn trailing_period_dropped() {
        let toks = surfaces("A tennis ball on a tennis court.");
        assert_eq!(toks.len(), 7);
        assert_eq!(toks[6], "court");
    }

    #[test]
    fn punctuation_and_joiners() {
        assert_eq!(
            surfaces("Skillet filled with salami, broccoli and other vegetables."),
            [
                "Skillet",
                "filled",
                "with",
                "salami",
                "broccoli",
                "and",
                "other",
                "vegetables"
            ]
        );
        assert_eq!(surfaces("a man's t-shirt -- odd"), ["a", "man's", "t-shirt", "odd"]);
    }
}
