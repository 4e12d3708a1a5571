use std::sync::LazyLock;

use regex::Regex;

static REF_SELF_CLOSING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<ref\b[^>]*/>").unwrap());
static REF_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<ref\b[^>]*>.*?</ref\s*>").unwrap());
static WIKI_LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]").unwrap());
static EXTERNAL_LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[(?:(?:https?|ftp):)?//[^\s\]]*(?:\s+([^\]]*))?\]").unwrap());
static QUOTE_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"'{2,}").unwrap());
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?[A-Za-z][^<>]*>").unwrap());

const MEDIA_PREFIXES: [&[u8]; 3] = [b"file:", b"image:", b"category:"];

// Passes run until the text stops changing, at most this many times.
const MAX_PASSES: usize = 32;

/// Reduce wikitext to plain text.
///
/// Removes comments, references, templates, tables and media/category
/// links; rewrites wiki and external links to their visible text; strips
/// bold/italic markup and leftover HTML tags; collapses whitespace.
/// Unbalanced markup is closed at end of input. The result is a fixed
/// point: cleaning it again returns it unchanged.
pub fn clean_wikitext(body: &str) -> String {
    let mut current = clean_pass(body);
    for _ in 0..MAX_PASSES {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn clean_pass(text: &str) -> String {
    let text = remove_comments(text);
    let text = REF_SELF_CLOSING.replace_all(&text, "");
    let text = REF_BLOCK.replace_all(&text, "");
    let text = remove_nested(&text, b"{{", b"}}");
    let text = remove_nested(&text, b"{|", b"|}");
    let text = remove_media_links(&text);
    let text = WIKI_LINK.replace_all(&text, |caps: &regex::Captures| match caps.get(2) {
        Some(surface) if !surface.as_str().trim().is_empty() => surface.as_str().to_string(),
        _ => caps[1].to_string(),
    });
    let text = EXTERNAL_LINK.replace_all(&text, |caps: &regex::Captures| {
        caps.get(1).map_or(String::new(), |m| m.as_str().to_string())
    });
    let text = QUOTE_RUN.replace_all(&text, "");
    let text = HTML_TAG.replace_all(&text, "");
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn remove_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start + 4..].find("-->") {
            Some(end) => rest = &rest[start + 4 + end + 3..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

/// Drop every `open ... close` span, honouring nesting. An unclosed span
/// runs to the end of the input. Markers must be ASCII.
fn remove_nested(text: &str, open: &[u8], close: &[u8]) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        let rest = &bytes[i..];
        if rest.starts_with(open) {
            depth += 1;
            i += open.len();
        } else if depth > 0 && rest.starts_with(close) {
            depth -= 1;
            i += close.len();
        } else {
            if depth == 0 {
                out.push(bytes[i]);
            }
            i += 1;
        }
    }
    // only ASCII markers were cut, so the kept bytes are still UTF-8
    String::from_utf8(out).expect("cut at ASCII boundaries")
}

fn is_media_target(after_brackets: &[u8]) -> bool {
    let start = after_brackets
        .iter()
        .position(|b| !b.is_ascii_whitespace() && *b != b':')
        .unwrap_or(after_brackets.len());
    let target = &after_brackets[start..];
    MEDIA_PREFIXES
        .iter()
        .any(|p| target.len() >= p.len() && target[..p.len()].eq_ignore_ascii_case(p))
}

fn remove_media_links(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"[[") && is_media_target(&bytes[i + 2..]) {
            let mut depth = 0usize;
            while i < bytes.len() {
                if bytes[i..].starts_with(b"[[") {
                    depth += 1;
                    i += 2;
                } else if bytes[i..].starts_with(b"]]") {
                    depth -= 1;
                    i += 2;
                    if depth == 0 {
                        break;
                    }
                } else {
                    i += 1;
                }
            }
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).expect("cut at ASCII boundaries")
}
