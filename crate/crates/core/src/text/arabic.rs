//! Rule-based Arabic clitic segmentation.
//!
//! At most one conjunction/preposition/article prefix and one pronominal
//! suffix are split off, each only when at least two letters of stem remain.
//! Candidates are tried longest first.

/// Prefix clitics, longest first.
pub const ARABIC_PREFIXES: [&str; 10] = ["وال", "بال", "كال", "فال", "ال", "و", "ف", "ب", "ك", "ل"];

/// Pronominal suffixes, longest first.
pub const ARABIC_SUFFIXES: [&str; 10] = ["ها", "هم", "هن", "كم", "كن", "نا", "ني", "ه", "ي", "ك"];

const MIN_STEM: usize = 2;

pub fn is_arabic_letter(c: char) -> bool {
    c.is_alphabetic() && matches!(c, '\u{0600}'..='\u{06FF}' | '\u{0750}'..='\u{077F}')
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// `(prefix, stem, suffix)` for a word; non-Arabic words come back whole.
pub(crate) fn split_clitics(word: &str) -> (Option<&str>, &str, Option<&str>) {
    if word.is_empty() || !word.chars().all(is_arabic_letter) {
        return (None, word, None);
    }
    let total = char_len(word);
    let prefix = ARABIC_PREFIXES
        .iter()
        .copied()
        .find(|p| word.starts_with(p) && total - char_len(p) >= MIN_STEM);
    let rest = &word[prefix.map_or(0, str::len)..];
    let rest_len = char_len(rest);
    let suffix = ARABIC_SUFFIXES
        .iter()
        .copied()
        .find(|s| rest.ends_with(s) && rest_len - char_len(s) >= MIN_STEM);
    let stem = &rest[..rest.len() - suffix.map_or(0, str::len)];
    (prefix, stem, suffix)
}

/// Split `word` into `[prefix?, stem, suffix?]`.
pub fn segment_arabic(word: &str) -> Vec<String> {
    let (prefix, stem, suffix) = split_clitics(word);
    prefix
        .into_iter()
        .chain(std::iter::once(stem))
        .chain(suffix)
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn and_his_house() {
        assert_eq!(segment_arabic("وبيته"), ["و", "بيت", "ه"]);
    }

    #[test]
    fn short_word_is_not_split() {
        assert_eq!(segment_arabic("من"), ["من"]);
    }

    #[test]
    fn longest_prefix_wins() {
        assert_eq!(segment_arabic("بالبيت"), ["بال", "بيت"]);
        assert_eq!(segment_arabic("والكتاب"), ["وال", "كتاب"]);
    }

    #[test]
    fn suffix_guard_keeps_two_letter_stem() {
        // و + له: stripping ه would leave a one-letter stem
        assert_eq!(segment_arabic("وله"), ["و", "له"]);
        assert_eq!(segment_arabic("قلمهم"), ["قلم", "هم"]);
    }

    #[test]
    fn non_arabic_passes_through() {
        assert_eq!(segment_arabic("house"), ["house"]);
    }

    #[test]
    fn prefix_and_suffix_lists_are_longest_first() {
        for list in [&ARABIC_PREFIXES, &ARABIC_SUFFIXES] {
            for w in list.windows(2) {
                assert!(char_len(w[0]) >= char_len(w[1]));
            }
        }
    }

    proptest! {
        #[test]
        fn segments_rejoin_to_surface(word in "[\u{0621}-\u{064A}]{1,9}") {
            let segs = segment_arabic(&word);
            prop_assert!((1..=3).contains(&segs.len()));
            prop_assert_eq!(segs.concat(), word);
            prop_assert!(segs.iter().all(|s| !s.is_empty()));
        }
    }
}
