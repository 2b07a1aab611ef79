//! CoNLL-U reader and writer.
//!
//! Only FORM, HEAD and DEPREL are consumed. Multiword-token ranges (`3-4`)
//! and empty nodes (`3.1`) are skipped. A `# newdoc id = X` comment starts a
//! new document; sentences before the first such comment (or in a file
//! without any) are grouped into a document named `doc<N>`, where `N` is
//! the 0-based document position.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::corpus::{Document, Sentence, Token};
use crate::error::{Error, Result};

const COLUMNS: usize = 10;

struct PendingToken {
    line: usize,
    id: usize,
    form: String,
    head: usize,
    deprel: String,
}

#[derive(Default)]
struct Reader {
    documents: Vec<Document>,
    seen_ids: HashSet<String>,
    current_id: Option<String>,
    current: Vec<Sentence>,
    pending: Vec<PendingToken>,
}

impl Reader {
    fn finish_sentence(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let len = self.pending.len();
        let mut tokens = Vec::with_capacity(len);
        for (i, p) in self.pending.drain(..).enumerate() {
            if p.id != i + 1 {
                return Err(Error::parse(
                    p.line,
                    format!("expected token id {}, found {}", i + 1, p.id),
                ));
            }
            if p.head > len {
                return Err(Error::parse(
                    p.line,
                    format!("HEAD {} out of range for a sentence of {len} tokens", p.head),
                ));
            }
            if p.head == p.id {
                return Err(Error::parse(p.line, "token is its own head"));
            }
            let head = if p.head == 0 { None } else { Some(p.head - 1) };
            tokens.push(Token::new(i, p.form, head, p.deprel));
        }
        self.current.push(Sentence::new(tokens)?);
        Ok(())
    }

    fn finish_document(&mut self) -> Result<()> {
        if self.current.is_empty() && self.current_id.is_none() {
            return Ok(());
        }
        let doc_id = self
            .current_id
            .take()
            .unwrap_or_else(|| format!("doc{}", self.documents.len()));
        if !self.seen_ids.insert(doc_id.clone()) {
            return Err(Error::DuplicateDocument(doc_id));
        }
        let sentences = std::mem::take(&mut self.current);
        self.documents.push(Document::new(doc_id, sentences));
        Ok(())
    }
}

fn newdoc_id(comment: &str) -> Option<&str> {
    let rest = comment.trim_start_matches('#').trim_start();
    let rest = rest.strip_prefix("newdoc")?;
    if rest.trim().is_empty() {
        return Some("");
    }
    let rest = rest.trim_start().strip_prefix("id")?;
    let rest = rest.trim_start().strip_prefix('=')?;
    Some(rest.trim())
}

pub fn read_conllu<R: BufRead>(input: R) -> Result<Vec<Document>> {
    let mut reader = Reader::default();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            reader.finish_sentence()?;
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = newdoc_id(line) {
                reader.finish_sentence()?;
                reader.finish_document()?;
                reader.current_id = if id.is_empty() { None } else { Some(id.to_string()) };
                if reader.current_id.is_none() {
                    reader.current_id = Some(format!("doc{}", reader.documents.len()));
                }
            }
            continue;
        }

        let mut fields: Vec<&str> = line.split('\t').collect();
        if fields.len() == 1 {
            // hand-written files sometimes use spaces
            fields = line.split_whitespace().collect();
        }
        if fields.len() != COLUMNS {
            return Err(Error::parse(
                line_no,
                format!("expected {COLUMNS} columns, found {}", fields.len()),
            ));
        }
        let id_field = fields[0];
        if id_field.contains('-') || id_field.contains('.') {
            continue;
        }
        let id: usize = id_field
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid token id `{id_field}`")))?;
        let head: usize = fields[6]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-integer HEAD `{}`", fields[6])))?;
        let form = fields[1];
        if form.is_empty() {
            return Err(Error::parse(line_no, "empty FORM"));
        }
        reader.pending.push(PendingToken {
            line: line_no,
            id,
            form: form.to_string(),
            head,
            deprel: fields[7].to_string(),
        });
    }
    reader.finish_sentence()?;
    reader.finish_document()?;
    Ok(reader.documents)
}

pub fn write_conllu<W: Write>(mut out: W, documents: &[Document]) -> std::io::Result<()> {
    for doc in documents {
        writeln!(out, "# newdoc id = {}", doc.doc_id)?;
        for sentence in &doc.sentences {
            for token in sentence.tokens() {
                let head = token.head.map_or(0, |h| h + 1);
                let deprel = if token.deprel.is_empty() { "_" } else { &token.deprel };
                writeln!(
                    out,
                    "{}\t{}\t_\t_\t_\t_\t{}\t{}\t_\t_",
                    token.index + 1,
                    token.surface,
                    head,
                    deprel
                )?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
