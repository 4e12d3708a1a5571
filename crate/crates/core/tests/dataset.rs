use std::collections::BTreeSet;
use std::path::PathBuf;

use search_explain::dataset::{build_dataset, read_jsonl, BuildOptions, SplitConfig, SplitName};
use search_explain::ingest::{open_dump, split_sections, CleanArticle};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn expected() -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("expected.json")).unwrap()).unwrap()
}

#[test]
fn page_counts_match_independent_parser() {
    // counts from xml.etree in fixtures/gen_fixtures.py
    assert_eq!(open_dump(fixture("mini-enwiki.xml")).unwrap().count(), 25);
    assert_eq!(open_dump(fixture("three-pages.xml")).unwrap().count(), 3);
    assert_eq!(open_dump(fixture("siteinfo-only.xml")).unwrap().count(), 0);
}

#[test]
fn three_page_fixture_flags() {
    let pages: Vec<_> = open_dump(fixture("three-pages.xml")).unwrap().map(Result::unwrap).collect();
    let titles: Vec<_> = pages.iter().map(|p| p.title.as_str()).collect();
    assert_eq!(titles, ["Alpha", "Alpha redirect", "Talk:Alpha"]);
    assert_eq!(pages.iter().map(|p| p.is_redirect).collect::<Vec<_>>(), [false, true, false]);
    assert_eq!(pages.iter().map(|p| p.namespace).collect::<Vec<_>>(), [0, 0, 1]);
    let ids: BTreeSet<_> = pages.iter().map(|p| p.page_id).collect();
    assert_eq!(ids.len(), 3);
}

#[test]
fn section_token_counts_match_construction() {
    let exp = expected();
    let pages: Vec<_> = open_dump(fixture("mini-enwiki.xml")).unwrap().map(Result::unwrap).collect();
    for article in exp["accepted"].as_array().unwrap() {
        let title = article["title"].as_str().unwrap();
        let page = pages.iter().find(|p| p.title == title).unwrap();
        let clean = CleanArticle::from_page(page).unwrap();
        for sec in article["sections"].as_array().unwrap() {
            let idx = sec["index"].as_u64().unwrap() as usize;
            assert_eq!(clean.sections[idx].heading, sec["heading"].as_str().unwrap());
            assert_eq!(
                clean.sections[idx].token_count,
                sec["tokens"].as_u64().unwrap() as usize,
                "{title} / {}",
                sec["heading"]
            );
        }
    }
}

#[test]
fn sectioning_accounts_for_every_character() {
    for page in open_dump(fixture("mini-enwiki.xml")).unwrap().map(Result::unwrap) {
        let text = &page.wikitext;
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let is_heading = |l: &str, level: usize| {
            let t = l.trim();
            let marks = "=".repeat(level);
            t.starts_with(&marks)
                && t.ends_with(&marks)
                && !t.starts_with(&format!("{marks}="))
                && !t.ends_with(&format!("={marks}"))
                && t.len() > 2 * level
        };
        let first = lines.iter().position(|l| is_heading(l, 2)).unwrap_or(lines.len());
        let lead: usize = lines[..first].iter().map(|l| l.len()).sum();
        let headings: usize = lines[first..]
            .iter()
            .filter(|l| (2..=6).any(|lvl| is_heading(l, lvl)))
            .map(|l| l.len())
            .sum();
        let bodies: usize = split_sections(text).iter().map(|s| s.body_wikitext.len()).sum();
        assert_eq!(lead + headings + bodies, text.len(), "{}", page.title);
    }
}

#[test]
fn builder_selects_hand_verified_articles() {
    let dir = tempfile::tempdir().unwrap();
    let card = build_dataset(&BuildOptions {
        dump: fixture("mini-enwiki.xml"),
        out_dir: dir.path().to_path_buf(),
        split: SplitConfig::default(),
    })
    .unwrap();

    let exp = expected();
    let want: BTreeSet<String> = exp["accepted"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["title"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(card.counts.records, exp["record_count"].as_u64().unwrap());
    assert_eq!(card.counts.qualified_articles as usize, want.len());

    let mut got = BTreeSet::new();
    let mut total = 0;
    for name in SplitName::ALL {
        let split = read_jsonl(dir.path().join(name.file_name()), name).unwrap();
        total += split.records.len();
        got.extend(split.records.iter().map(|r| r.query.clone()));
    }
    assert_eq!(got, want);
    assert_eq!(total as u64, card.counts.records);
    for rejected in ["Comet", "Kite", "Harbor", "Shuttlecock game", "Mercury (disambiguation)", "Wikipedia:About"] {
        assert!(!got.contains(rejected), "{rejected}");
    }
}
