//! Token repetition rate between a candidate text and existing texts.

use std::collections::HashSet;

use unicode_segmentation::UnicodeSegmentation;

/// Default threshold at or above which a candidate counts as redundant.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Lowercased words split on Unicode word boundaries.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Share of the candidate's tokens (counted with multiplicity) that occur
/// anywhere in `references`. Returns 0.0 when there are no references or the
/// candidate has no word tokens.
pub fn repetition_rate<S: AsRef<str>>(candidate: &str, references: &[S]) -> f64 {
    let tokens = tokenize(candidate);
    if tokens.is_empty() || references.is_empty() {
        return 0.0;
    }
    let vocabulary: HashSet<String> = references.iter().flat_map(|r| tokenize(r.as_ref())).collect();
    let shared = tokens.iter().filter(|t| vocabulary.contains(*t)).count();
    shared as f64 / tokens.len() as f64
}

pub fn is_redundant<S: AsRef<str>>(candidate: &str, siblings: &[S], threshold: f64) -> bool {
    repetition_rate(candidate, siblings) >= threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_identical_and_half() {
        assert_eq!(repetition_rate("alpha beta", &["gamma delta"]), 0.0);
        assert_eq!(repetition_rate("alpha beta", &["alpha beta"]), 1.0);
        assert_eq!(repetition_rate("alpha beta gamma delta", &["alpha beta"]), 0.5);
    }

    #[test]
    fn case_and_punctuation_are_ignored() {
        assert_eq!(repetition_rate("Alpha, BETA!", &["alpha beta."]), 1.0);
    }

    #[test]
    fn multiplicity_counts_in_the_candidate() {
        // 3 of 4 candidate tokens are "x".
        assert_eq!(repetition_rate("x x x y", &["x"]), 0.75);
    }

    #[test]
    fn empty_references_are_zero() {
        let none: [&str; 0] = [];
        assert_eq!(repetition_rate("alpha", &none), 0.0);
        assert!(!is_redundant("alpha", &none, DEFAULT_THRESHOLD));
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(is_redundant("a b c d", &["a b"], 0.5));
        // 2 of 5 shared = 40%
        assert!(!is_redundant("a b c d e", &["a b"], 0.5));
    }

    #[test]
    fn cjk_text_tokenizes() {
        assert!(repetition_rate("超现实主义", &["超现实主义"]) > 0.99);
    }
}
