//! Case-insensitive, word-boundary marker counting used by the rule backends.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Counts non-overlapping occurrences of `marker` in `haystack`.
///
/// Both arguments must already be lowercase. A boundary is only required on
/// a side where the marker itself starts or ends with a word character, so
/// `"@"` matches inside `"@anna"` while `"agree"` does not match inside
/// `"disagree"`.
pub(crate) fn count_lowercase(haystack: &str, marker: &str) -> usize {
    let Some(first) = marker.chars().next() else {
        return 0;
    };
    let last = marker.chars().next_back().unwrap_or(first);
    let check_left = is_word_char(first);
    let check_right = is_word_char(last);

    let mut count = 0;
    let mut start = 0;
    while let Some(offset) = haystack[start..].find(marker) {
        let pos = start + offset;
        let end = pos + marker.len();
        let left_ok = !check_left || !haystack[..pos].chars().next_back().is_some_and(is_word_char);
        let right_ok = !check_right || !haystack[end..].chars().next().is_some_and(is_word_char);
        if left_ok && right_ok {
            count += 1;
            start = end;
        } else {
            start = pos + first.len_utf8();
        }
    }
    count
}

/// Total occurrences of every marker in `markers` within `text`.
pub(crate) fn count_all<'a>(text: &str, markers: impl IntoIterator<Item = &'a String>) -> usize {
    let lowered = text.to_lowercase();
    markers
        .into_iter()
        .map(|m| count_lowercase(&lowered, m))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn respects_word_boundaries() {
        assert_eq!(count_lowercase("i disagree", "agree"), 0);
        assert_eq!(count_lowercase("i agree, agree!", "agree"), 2);
        assert_eq!(count_lowercase("agreed", "agree"), 0);
        assert_eq!(count_lowercase("because_", "because"), 0);
    }

    #[test]
    fn symbol_markers_need_no_boundary() {
        assert_eq!(count_lowercase("@anna i see your point", "@"), 1);
        assert_eq!(count_lowercase("@a @b", "@"), 2);
    }

    #[test]
    fn multiword_and_unicode() {
        assert_eq!(count_lowercase("good idea, a good idea", "good idea"), 2);
        assert_eq!(count_lowercase("wir stimmen zu, zustimmung", "zu"), 1);
        assert_eq!(count_all("Weil ÄPFEL", [&"äpfel".to_string()]), 1);
    }

    #[test]
    fn retries_after_rejected_candidate() {
        // "aab" contains "ab" only at a non-boundary; "x ab" later is valid.
        assert_eq!(count_lowercase("aab x ab", "ab"), 1);
    }

    #[test]
    fn empty_marker_counts_nothing() {
        assert_eq!(count_lowercase("anything", ""), 0);
    }
}
