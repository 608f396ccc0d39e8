use std::collections::BTreeSet;

use thiserror::Error;

use super::{Grammar, Sym};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("enumeration visited more than {0} sentential forms")]
    LimitExceeded(usize),
}

/// All terminal strings of at most `max_tokens` tokens derivable from
/// `form`, by leftmost expansion. Without epsilon productions a form never
/// shrinks, so longer forms are pruned immediately.
pub fn enumerate_sentences(
    grammar: &Grammar,
    form: &[Sym],
    max_tokens: usize,
    limit: usize,
) -> Result<BTreeSet<Vec<Sym>>, EnumerationError> {
    let mut out = BTreeSet::new();
    if form.len() > max_tokens {
        return Ok(out);
    }
    let mut stack = vec![form.to_vec()];
    let mut visited = 0usize;
    while let Some(current) = stack.pop() {
        visited += 1;
        if visited > limit {
            return Err(EnumerationError::LimitExceeded(limit));
        }
        let Some(at) = current.iter().position(|&s| !grammar.is_terminal(s)) else {
            out.insert(current);
            continue;
        };
        for p in grammar.productions_of(current[at]) {
            let len = current.len() - 1 + p.body.len();
            if len > max_tokens {
                continue;
            }
            let mut next = Vec::with_capacity(len);
            next.extend_from_slice(&current[..at]);
            next.extend_from_slice(&p.body);
            next.extend_from_slice(&current[at + 1..]);
            stack.push(next);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_language() {
        let g = Grammar::from_text("S -> a | a S").unwrap();
        let s = g.symbols_from_str("S").unwrap();
        let all = enumerate_sentences(&g, &s, 3, 1000).unwrap();
        assert_eq!(all.len(), 3);
        assert!(matches!(enumerate_sentences(&g, &s, 50, 10), Err(EnumerationError::LimitExceeded(10))));
    }
}
