use crate::ingest::{is_content_heading, CleanArticle, Section};

use super::{ExplanationRecord, MAX_SECTION_TOKENS, MIN_QUALIFYING_SECTIONS, MIN_SECTION_TOKENS};

/// Sections with a content heading and an in-bounds body, paired with their
/// position in the article. `None` when fewer than three qualify.
pub fn qualify_article(article: &CleanArticle) -> Option<Vec<(usize, &Section)>> {
    let qualifying: Vec<_> = article
        .sections
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            is_content_heading(&s.heading)
                && !s.heading.is_empty()
                && (MIN_SECTION_TOKENS..=MAX_SECTION_TOKENS).contains(&s.token_count)
        })
        .collect();
    (qualifying.len() >= MIN_QUALIFYING_SECTIONS).then_some(qualifying)
}

/// One record per qualifying section. Ids are drawn from `next_id`, which
/// the caller threads through the whole corpus.
pub fn build_records(
    article: &CleanArticle,
    qualifying: &[(usize, &Section)],
    next_id: &mut u64,
) -> Vec<ExplanationRecord> {
    qualifying
        .iter()
        .map(|(index, section)| {
            let record = ExplanationRecord {
                record_id: *next_id,
                query: article.title.clone(),
                document: section.body_clean.clone(),
                explanation: section.heading.clone(),
                page_id: article.page_id,
                section_index: *index as u64,
            };
            *next_id += 1;
            record
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_support::words;

    fn article(sections: &[(&str, usize)]) -> CleanArticle {
        CleanArticle {
            title: "Badminton".into(),
            page_id: 3,
            sections: sections
                .iter()
                .map(|(h, n)| Section {
                    heading: h.to_string(),
                    level: 2,
                    body_wikitext: String::new(),
                    body_clean: words(*n),
                    token_count: *n,
                })
                .collect(),
        }
    }

    #[test]
    fn two_qualifying_is_rejected() {
        assert!(qualify_article(&article(&[("A", 200), ("B", 200), ("C", 20)])).is_none());
    }

    #[test]
    fn bounds_are_inclusive() {
        let art = article(&[("A", 127), ("B", 128), ("C", 512), ("D", 513)]);
        assert!(qualify_article(&art).is_none());
        let art = article(&[("A", 127), ("B", 128), ("C", 512), ("D", 513), ("E", 300)]);
        let q = qualify_article(&art).unwrap();
        assert_eq!(q.iter().map(|(i, _)| *i).collect::<Vec<_>>(), [1, 2, 4]);
    }

    #[test]
    fn boilerplate_is_excluded() {
        let art = article(&[("Rules", 200), ("Equipment", 200), ("Organization", 200), ("References", 300)]);
        let q = qualify_article(&art).unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.iter().all(|(_, s)| s.heading != "References"));
    }

    #[test]
    fn records_carry_title_heading_and_position() {
        let art = article(&[("History", 50), ("Rules", 200), ("Equipment", 250), ("Organization", 180)]);
        let q = qualify_article(&art).unwrap();
        let mut next = 10;
        let records = build_records(&art, &q, &mut next);
        assert_eq!(next, 13);
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.query == "Badminton" && r.page_id == 3));
        let heads: Vec<_> = records.iter().map(|r| r.explanation.as_str()).collect();
        assert_eq!(heads, ["Rules", "Equipment", "Organization"]);
        assert_eq!(records.iter().map(|r| r.record_id).collect::<Vec<_>>(), [10, 11, 12]);
        assert_eq!(records.iter().map(|r| r.section_index).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(records.iter().all(|r| r.validate().is_ok()));
    }

    #[test]
    fn empty_qualifying_gives_no_records() {
        let art = article(&[]);
        let mut next = 0;
        assert!(build_records(&art, &[], &mut next).is_empty());
        assert_eq!(next, 0);
    }
}
