//! Tokenization, sentence splitting and the text normalizations shared by
//! indexing, citation matching and answer containment.

/// Bumped whenever [`tokenize`] changes behaviour; recorded in snapshot manifests.
pub const TOKENIZER_VERSION: u32 = 1;

/// Ordered lowercase tokens produced by [`tokenize`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Lowercases and splits on every non-alphanumeric character. Unicode
/// alphanumerics are kept, so "α-helix" yields `[α, helix]`.
pub fn tokenize(text: &str) -> TokenStream {
    let tokens = token_spans(text)
        .map(|(start, end)| text[start..end].to_lowercase())
        .collect();
    TokenStream { tokens }
}

/// Number of tokens `text` would produce, without allocating them.
pub fn token_count(text: &str) -> usize {
    token_spans(text).count()
}

/// Byte ranges of the tokens in `text`.
fn token_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = chars.peek() {
            if c.is_alphanumeric() {
                break;
            }
            chars.next();
        }
        let (start, _) = *chars.peek()?;
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if !c.is_alphanumeric() {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        Some((start, end))
    })
}

/// Longest prefix of `text` that contains at most `max_tokens` tokens,
/// ending right after the last kept token.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    if max_tokens == 0 {
        return "";
    }
    match token_spans(text).take(max_tokens).last() {
        Some((_, end)) if token_spans(&text[end..]).next().is_some() => &text[..end],
        Some(_) => text,
        None => "",
    }
}

/// Splits on '.', '?' or '!' followed by whitespace. Terminal punctuation stays
/// with its sentence; trailing text without a terminator is a sentence too.
/// Fragments without any token are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '?' | '!') {
            if let Some(&(_, next)) = iter.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    push_sentence(&mut sentences, &text[start..end]);
                    start = end;
                }
            }
        }
    }
    push_sentence(&mut sentences, &text[start..]);
    sentences
}

fn push_sentence<'a>(out: &mut Vec<&'a str>, fragment: &'a str) {
    let trimmed = fragment.trim();
    if token_count(trimmed) > 0 {
        out.push(trimmed);
    }
}

/// Case-folds and collapses every whitespace run to a single space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Citation title key: lowercase, punctuation stripped, whitespace collapsed.
pub fn normalize_title(raw: &str) -> String {
    let stripped: String = raw
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    normalize_whitespace(&stripped)
}
