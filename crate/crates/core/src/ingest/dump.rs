use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use bzip2::read::MultiBzDecoder;
use flate2::read::MultiGzDecoder;
use quick_xml::errors::SyntaxError;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::RawPage;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("i/o error reading dump: {0}")]
    Io(#[from] io::Error),
    #[error("malformed dump XML near byte {offset}{}: {message}", in_page(.title))]
    Malformed {
        offset: u64,
        title: Option<String>,
        message: String,
    },
    #[error("dump truncated near byte {offset}{}", in_page(.title))]
    Truncated { offset: u64, title: Option<String> },
}

fn in_page(title: &Option<String>) -> String {
    match title {
        Some(t) => format!(" (page {t:?})"),
        None => String::new(),
    }
}

/// Open a dump file, detecting gzip/bzip2 compression from its magic bytes.
pub fn open_dump(path: impl AsRef<Path>) -> Result<PageStream<Box<dyn BufRead + Send>>, DumpError> {
    stream_pages(File::open(path)?)
}

/// Lazily read `<page>` elements out of a MediaWiki XML export.
///
/// Compression (none, gzip, bzip2) is detected from the first bytes of
/// `source`. Only the page currently being assembled is held in memory.
pub fn stream_pages<R>(source: R) -> Result<PageStream<Box<dyn BufRead + Send>>, DumpError>
where
    R: Read + Send + 'static,
{
    let mut buffered = BufReader::new(source);
    let magic = buffered.fill_buf()?;
    let inner: Box<dyn BufRead + Send> = if magic.starts_with(&[0x1f, 0x8b]) {
        Box::new(BufReader::new(MultiGzDecoder::new(buffered)))
    } else if magic.starts_with(b"BZh") {
        Box::new(BufReader::new(MultiBzDecoder::new(buffered)))
    } else {
        Box::new(buffered)
    };
    Ok(PageStream::new(inner))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    Namespace,
    Id,
    Text,
}

#[derive(Default)]
struct PageBuilder {
    title: String,
    namespace: String,
    id: String,
    text: String,
    is_redirect: bool,
}

impl PageBuilder {
    fn field(&mut self, field: Field) -> &mut String {
        match field {
            Field::Title => &mut self.title,
            Field::Namespace => &mut self.namespace,
            Field::Id => &mut self.id,
            Field::Text => &mut self.text,
        }
    }
}

/// Iterator over the pages of a dump. Stops after the first error.
pub struct PageStream<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    depth: usize,
    finished: bool,
}

impl<R: BufRead> PageStream<R> {
    pub fn new(source: R) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().trim_text(false);
        PageStream {
            reader,
            buf: Vec::new(),
            depth: 0,
            finished: false,
        }
    }

    fn offset(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn known_title(page: &Option<PageBuilder>) -> Option<String> {
        page.as_ref()
            .map(|p| p.title.trim().to_string())
            .filter(|t| !t.is_empty())
    }

    fn next_page(&mut self) -> Result<Option<RawPage>, DumpError> {
        let mut page: Option<PageBuilder> = None;
        let mut field: Option<Field> = None;
        let mut in_revision = false;
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(event) => event,
                Err(err) => {
                    let offset = self.reader.error_position();
                    let title = Self::known_title(&page);
                    return Err(match err {
                        quick_xml::Error::Syntax(SyntaxError::InvalidBangMarkup) => DumpError::Malformed {
                            offset,
                            title,
                            message: err.to_string(),
                        },
                        quick_xml::Error::Syntax(_) => DumpError::Truncated { offset, title },
                        quick_xml::Error::Io(ref io) if io.kind() == io::ErrorKind::UnexpectedEof => {
                            DumpError::Truncated { offset, title }
                        }
                        other => DumpError::Malformed {
                            offset,
                            title,
                            message: other.to_string(),
                        },
                    });
                }
            };
            match event {
                Event::Start(start) => {
                    self.depth += 1;
                    match (self.depth, start.local_name().as_ref()) {
                        (2, b"page") => {
                            page = Some(PageBuilder::default());
                            in_revision = false;
                        }
                        (3, name) if page.is_some() => match name {
                            b"title" => field = Some(Field::Title),
                            b"ns" => field = Some(Field::Namespace),
                            b"id" => field = Some(Field::Id),
                            b"redirect" => page.as_mut().unwrap().is_redirect = true,
                            b"revision" => in_revision = true,
                            _ => {}
                        },
                        (4, b"text") if in_revision => field = Some(Field::Text),
                        _ => {}
                    }
                }
                Event::Empty(empty) => {
                    if self.depth == 2 && empty.local_name().as_ref() == b"redirect" {
                        if let Some(p) = page.as_mut() {
                            p.is_redirect = true;
                        }
                    }
                }
                Event::End(end) => {
                    let depth = self.depth;
                    self.depth = self.depth.saturating_sub(1);
                    field = None;
                    match (depth, end.local_name().as_ref()) {
                        (2, b"page") => {
                            if let Some(built) = page.take() {
                                return self.finish(built).map(Some);
                            }
                        }
                        (3, b"revision") => in_revision = false,
                        _ => {}
                    }
                }
                Event::Text(text) => {
                    if let (Some(f), Some(p)) = (field, page.as_mut()) {
                        match text.unescape() {
                            Ok(unescaped) => p.field(f).push_str(&unescaped),
                            Err(e) => {
                                return Err(DumpError::Malformed {
                                    offset: self.reader.buffer_position(),
                                    title: Some(p.title.trim().to_string()).filter(|t| !t.is_empty()),
                                    message: e.to_string(),
                                })
                            }
                        }
                    }
                }
                Event::CData(data) => {
                    if let (Some(f), Some(p)) = (field, page.as_mut()) {
                        p.field(f).push_str(&String::from_utf8_lossy(&data));
                    }
                }
                Event::Eof => {
                    if self.depth > 0 {
                        return Err(DumpError::Truncated {
                            offset: self.offset(),
                            title: Self::known_title(&page),
                        });
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }

    fn finish(&self, built: PageBuilder) -> Result<RawPage, DumpError> {
        let offset = self.offset();
        let title = built.title.trim().to_string();
        let malformed = |message: String| DumpError::Malformed {
            offset,
            title: Some(title.clone()).filter(|t| !t.is_empty()),
            message,
        };
        if title.is_empty() {
            return Err(malformed("page without a title".into()));
        }
        let namespace = built
            .namespace
            .trim()
            .parse::<i64>()
            .map_err(|_| malformed(format!("invalid <ns> value {:?}", built.namespace)))?;
        let page_id = built
            .id
            .trim()
            .parse::<u64>()
            .map_err(|_| malformed(format!("invalid page <id> value {:?}", built.id)))?;
        Ok(RawPage {
            title,
            namespace,
            is_redirect: built.is_redirect,
            wikitext: built.text,
            page_id,
        })
    }
}

impl<R: BufRead> Iterator for PageStream<R> {
    type Item = Result<RawPage, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let item = self.next_page().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.finished = true;
        }
        item
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const HEAD: &str = "<mediawiki><siteinfo><sitename>W</sitename></siteinfo>";

    fn page(id: u64, title: &str, extra: &str, text: &str) -> String {
        format!(
            "<page><title>{title}</title><ns>0</ns><id>{id}</id>{extra}\
             <revision><id>{}</id><text xml:space=\"preserve\">{text}</text></revision></page>",
            id * 10
        )
    }

    fn collect(xml: String) -> Vec<Result<RawPage, DumpError>> {
        stream_pages(std::io::Cursor::new(xml.into_bytes())).unwrap().collect()
    }

    #[test]
    fn reads_pages_in_order() {
        let xml = format!(
            "{HEAD}{}{}</mediawiki>",
            page(1, "A", "", "x &amp; y"),
            page(2, "B", "<redirect title=\"A\" />", "#REDIRECT [[A]]")
        );
        let pages: Vec<_> = collect(xml).into_iter().map(Result::unwrap).collect();
        assert_eq!(pages.len(), 2);
        assert_eq!(pages[0].title, "A");
        assert_eq!(pages[0].wikitext, "x & y");
        assert_eq!(pages[0].page_id, 1);
        assert!(!pages[0].is_redirect);
        assert!(pages[1].is_redirect);
    }

    #[test]
    fn revision_id_does_not_override_page_id() {
        let pages = collect(format!("{HEAD}{}</mediawiki>", page(5, "A", "", "t")));
        assert_eq!(pages[0].as_ref().unwrap().page_id, 5);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(collect(format!("{HEAD}</mediawiki>")).is_empty());
    }

    #[test]
    fn truncation_after_complete_pages() {
        let xml = format!("{HEAD}{}<page><title>Half</title><ns>0</ns><revision><text>abc", page(1, "A", "", "t"));
        let out = collect(xml);
        assert_eq!(out.len(), 2);
        assert!(out[0].is_ok());
        match &out[1] {
            Err(DumpError::Truncated { title, .. }) => assert_eq!(title.as_deref(), Some("Half")),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn malformed_carries_offset_and_title() {
        let xml = format!(
            "{HEAD}{}<page><title>Bad</title><ns>0</ns><id>2</id></wrong></mediawiki>",
            page(1, "A", "", "t")
        );
        let out = collect(xml);
        assert!(out[0].is_ok());
        match &out[1] {
            Err(DumpError::Malformed { offset, title, .. }) => {
                assert!(*offset > 100);
                assert_eq!(title.as_deref(), Some("Bad"));
            }
            other => panic!("expected malformed, got {other:?}"),
        }
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn bad_namespace_is_malformed() {
        let xml = format!("{HEAD}<page><title>A</title><ns>zero</ns><id>1</id></page></mediawiki>");
        assert!(matches!(collect(xml)[0], Err(DumpError::Malformed { .. })));
    }

    #[test]
    fn gzip_and_bzip2_are_detected() {
        let xml = format!("{HEAD}{}</mediawiki>", page(1, "A", "", "body"));

        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        gz.write_all(xml.as_bytes()).unwrap();
        let gz = gz.finish().unwrap();
        let pages: Vec<_> = stream_pages(std::io::Cursor::new(gz)).unwrap().collect();
        assert_eq!(pages[0].as_ref().unwrap().wikitext, "body");

        let mut bz = bzip2::write::BzEncoder::new(Vec::new(), bzip2::Compression::default());
        bz.write_all(xml.as_bytes()).unwrap();
        let bz = bz.finish().unwrap();
        let pages: Vec<_> = stream_pages(std::io::Cursor::new(bz)).unwrap().collect();
        assert_eq!(pages[0].as_ref().unwrap().title, "A");
    }
}
