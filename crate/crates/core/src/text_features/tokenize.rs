//! Tweet tokenizer.
//!
//! Lowercases, collapses URLs to `<url>` and mentions to `<user>`, keeps
//! hashtags as a single `#word` token, and otherwise splits on whitespace and
//! punctuation (each punctuation character becomes its own token).

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    tokens
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut word = String::new();
    let mut rest = chunk;
    while let Some(c) = rest.chars().next() {
        if URL_PREFIXES.iter().any(|p| rest.starts_with(p)) {
            flush(&mut word, out);
            out.push(URL_TOKEN.to_string());
            return;
        }
        if is_word_char(c) {
            word.push(c);
            rest = &rest[c.len_utf8()..];
            continue;
        }
        flush(&mut word, out);
        let after = &rest[c.len_utf8()..];
        let run = after
            .char_indices()
            .find(|&(_, ch)| !is_word_char(ch))
            .map_or(after.len(), |(i, _)| i);
        match c {
            '@' if run > 0 => {
                out.push(USER_TOKEN.to_string());
                rest = &after[run..];
            }
            '#' if run > 0 => {
                out.push(format!("#{}", &after[..run]));
                rest = &after[run..];
            }
            _ => {
                out.push(c.to_string());
                rest = after;
            }
        }
    }
    flush(&mut word, out);
}

fn flush(word: &mut String, out: &mut Vec<String>) {
    if !word.is_empty() {
        out.push(std::mem::take(word));
    }
}
