//! CoNLL-U reader.
//!
//! Only the columns needed for lexicalization are retained (FORM, LEMMA,
//! UPOS, FEATS). Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are
//! skipped, as are comment lines.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Number of tab-separated columns in a CoNLL-U word line.
pub const COLUMNS: usize = 10;

/// One syntactic word from a CoNLL-U file.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenRecord {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Feature pairs with unique keys, sorted by key.
    pub feats: Vec<(String, String)>,
}

pub type Sentence = Vec<TokenRecord>;

/// Parse a CoNLL-U stream into sentences.
pub fn parse_conllu<R: BufRead>(mut reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    let mut line_no = 0usize;

    loop {
        buf.clear();
        let read = reader.read_until(b'\n', &mut buf)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let line_offset = offset;
        offset += read as u64;

        let line = std::str::from_utf8(&buf).map_err(|_| Error::Decode {
            line: line_no,
            offset: line_offset,
        })?;
        let line = line.trim_end_matches(['\n', '\r']);

        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        if let Some(token) = parse_word_line(line, line_no, line_offset)? {
            current.push(token);
        }
    }

    if !current.is_empty() {
        sentences.push(current);
    }

    Ok(sentences)
}

/// Parse a CoNLL-U file from disk.
pub fn parse_conllu_file(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_conllu(BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
}

fn parse_word_line(line: &str, line_no: usize, offset: u64) -> Result<Option<TokenRecord>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != COLUMNS {
        return Err(Error::parse(
            line_no,
            offset,
            format!("expected {COLUMNS} columns, found {}", fields.len()),
        ));
    }

    let id = fields[0];
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    if id.parse::<usize>().is_err() {
        return Err(Error::parse(line_no, offset, format!("invalid token id `{id}`")));
    }

    let feats = parse_feats(fields[5]).map_err(|msg| Error::parse(line_no, offset, msg))?;

    Ok(Some(TokenRecord {
        form: fields[1].to_owned(),
        lemma: fields[2].to_owned(),
        upos: fields[3].to_owned(),
        feats,
    }))
}

fn parse_feats(field: &str) -> std::result::Result<Vec<(String, String)>, String> {
    if field == "_" || field.is_empty() {
        return Ok(Vec::new());
    }

    let mut feats = Vec::new();
    for pair in field.split('|') {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("feature `{pair}` is not a key=value pair"))?;
        if key.is_empty() {
            return Err(format!("feature `{pair}` has an empty key"));
        }
        feats.push((key.to_owned(), value.to_owned()));
    }

    feats.sort();
    if let Some(w) = feats.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(format!("duplicate feature key `{}`", w[0].0));
    }

    Ok(feats)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n";

    fn parse(s: &str) -> Result<Vec<Sentence>> {
        parse_conllu(s.as_bytes())
    }

    #[test]
    fn empty_input() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("\n\n# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn single_word() {
        let s = parse("1\twell\twell\tADV\tRBS\tDegree=Sup\t0\troot\t_\t_\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s[0],
            vec![TokenRecord {
                form: "well".into(),
                lemma: "well".into(),
                upos: "ADV".into(),
                feats: vec![("Degree".into(), "Sup".into())],
            }]
        );
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let text = "# sent_id = 1\n\
                    1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n\
                    1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n\
                    2\tel\tel\tDET\t_\tDefinite=Def|Number=Sing\t3\tdet\t_\t_\n\
                    2.1\tfoo\tfoo\tNOUN\t_\t_\t_\t_\t0:root\t_\n\
                    3\tmar\tmar\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_\n\
                    \n\
                    1\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        let s = parse(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].len(), 3);
        assert_eq!(s[1].len(), 1);
    }

    #[test]
    fn feats_are_sorted() {
        let s = parse("1\tx\tx\tNOUN\t_\tNumber=Sing|Case=Nom\t0\troot\t_\t_\n").unwrap();
        assert_eq!(
            s[0][0].feats,
            vec![("Case".into(), "Nom".into()), ("Number".into(), "Sing".into())]
        );
    }

    #[test]
    fn crlf_is_tolerated() {
        let s = parse("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\r\n\r\n").unwrap();
        assert_eq!(s[0][0].feats, vec![]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn wrong_column_count_reports_position() {
        let text = format!("# c\n{LINE}2\ty\ty\n");
        match parse(&text) {
            Err(Error::Parse { line, offset, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(offset, (4 + LINE.len()) as u64);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8() {
        let mut bytes = LINE.as_bytes().to_vec();
        bytes.extend_from_slice(b"2\t\xff\tx\tNOUN\t_\t_\t0\troot\t_\t_\n");
        match parse_conllu(&bytes[..]) {
            Err(Error::Decode { line, offset }) => {
                assert_eq!(line, 2);
                assert_eq!(offset, LINE.len() as u64);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_feats() {
        assert!(parse("1\tx\tx\tNOUN\t_\tCase\t0\troot\t_\t_\n").is_err());
        assert!(parse("1\tx\tx\tNOUN\t_\tCase=Nom|Case=Acc\t0\troot\t_\t_\n").is_err());
        assert!(parse("1a\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n").is_err());
    }
}
