use super::Section;

/// Headings that never describe an aspect of the article's subject.
pub const BOILERPLATE_HEADINGS: [&str; 10] = [
    "references",
    "external links",
    "see also",
    "notes",
    "further reading",
    "bibliography",
    "sources",
    "footnotes",
    "citations",
    "gallery",
];

enum HeadingLine<'a> {
    Section(&'a str),
    Subsection,
}

/// Classify a line as a heading. Equal runs of '=' on both sides are
/// required; anything else is body text.
fn heading_line(line: &str) -> Option<HeadingLine<'_>> {
    let trimmed = line.trim();
    let open = trimmed.bytes().take_while(|&b| b == b'=').count();
    let close = trimmed.bytes().rev().take_while(|&b| b == b'=').count();
    if open < 2 || open != close || trimmed.len() <= open + close {
        return None;
    }
    let inner = trimmed[open..trimmed.len() - close].trim();
    if inner.is_empty() {
        return None;
    }
    Some(if open == 2 {
        HeadingLine::Section(inner)
    } else {
        HeadingLine::Subsection
    })
}

/// Split wikitext at level-2 headings.
///
/// Text before the first heading is dropped. Deeper headings stay inside
/// their parent section, minus the heading line itself. Returned sections
/// have raw `body_wikitext` only; call [`Section::clean`] to fill the rest.
pub fn split_sections(wikitext: &str) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for line in wikitext.split_inclusive('\n') {
        match heading_line(line) {
            Some(HeadingLine::Section(heading)) => sections.push(Section {
                heading: heading.to_string(),
                level: 2,
                body_wikitext: String::new(),
                body_clean: String::new(),
                token_count: 0,
            }),
            Some(HeadingLine::Subsection) => {}
            None => {
                if let Some(current) = sections.last_mut() {
                    current.body_wikitext.push_str(line);
                }
            }
        }
    }
    sections
}

/// False for boilerplate headings such as "References" or "See also".
pub fn is_content_heading(heading: &str) -> bool {
    let lowered = heading.trim().to_lowercase();
    !BOILERPLATE_HEADINGS.contains(&lowered.as_str())
}
