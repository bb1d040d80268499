//! Small text helpers shared by cleaning, scoring and adoption metrics.

/// Case-folds and collapses whitespace runs to single spaces.
pub fn normalize_for_match(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Punctuation that ordinary listings use freely.
fn is_common_punctuation(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | '!' | '?' | ';' | ':' | '\'' | '"' | '-' | '(' | ')' | '%' | '+' | '/' | '&'
            | '，' | '。' | '！' | '？' | '；' | '：' | '、' | '“' | '”' | '‘' | '’' | '（' | '）'
    )
}

/// Fraction of non-whitespace characters that are neither alphanumeric nor
/// common punctuation. Empty text has ratio 0.
pub fn special_char_ratio(text: &str) -> f64 {
    let (mut total, mut special) = (0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if !c.is_alphanumeric() && !is_common_punctuation(c) {
            special += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        special as f64 / total as f64
    }
}

/// Length of the longest common subsequence of two sequences.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character-level LCS divided by the character length of `generated`.
pub fn retained_ratio(generated: &str, published: &str) -> f64 {
    let g: Vec<char> = generated.chars().collect();
    if g.is_empty() {
        return 0.0;
    }
    let p: Vec<char> = published.chars().collect();
    lcs_len(&g, &p) as f64 / g.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_for_match("  iPhone\t 11  Pro "), "iphone 11 pro");
    }

    #[test]
    fn special_chars() {
        assert_eq!(special_char_ratio(""), 0.0);
        assert_eq!(special_char_ratio("abc, def."), 0.0);
        assert!((special_char_ratio("ab★★") - 0.5).abs() < 1e-12);
        assert_eq!(special_char_ratio("华为手机，九成新"), 0.0);
    }

    #[test]
    fn retained() {
        assert_eq!(retained_ratio("abcd", "abcd"), 1.0);
        assert_eq!(retained_ratio("abcd", "xyz"), 0.0);
        assert_eq!(retained_ratio("abcd", "axbycz d"), 1.0);
        assert_eq!(retained_ratio("abcd", "ab"), 0.5);
        assert_eq!(retained_ratio("", "x"), 0.0);
    }
}
