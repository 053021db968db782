//! Edit (Levenshtein) distance with unit costs.

/// Levenshtein distance between `a` and `b`.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// `levenshtein(a, b)` if it is at most `max`, stopping as soon as every
/// cell of a DP row exceeds `max`.
pub fn levenshtein_within(a: &[u8], b: &[u8], max: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        let mut best = row[0];
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
            best = best.min(row[j + 1]);
        }
        if best > max {
            return None;
        }
    }
    Some(row[b.len()]).filter(|&d| d <= max)
}

/// Distances between `pattern` and every prefix of `text` up to `max_len`.
///
/// Entry `l` of the result is `levenshtein(pattern, &text[..l])`, for
/// `l` in `0..=min(max_len, text.len())`. One DP pass covers all lengths.
pub fn prefix_distances(pattern: &[u8], text: &[u8], max_len: usize) -> Vec<usize> {
    let n = max_len.min(text.len());
    // Columns index prefix length of `text`, rows walk the pattern.
    let mut row: Vec<usize> = (0..=n).collect();
    for (i, &cp) in pattern.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for j in 0..n {
            let sub = diag + usize::from(cp != text[j]);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row
}

/// Same as [`prefix_distances`] but for suffixes: entry `l` compares
/// `pattern` with the last `l` symbols of `text`.
pub fn suffix_distances(pattern: &[u8], text: &[u8], max_len: usize) -> Vec<usize> {
    let rp: Vec<u8> = pattern.iter().rev().copied().collect();
    let rt: Vec<u8> = text.iter().rev().copied().collect();
    prefix_distances(&rp, &rt, max_len)
}
