use std::ops::Range;

use serde::{Deserialize, Serialize};

/// A contiguous slice of a full-text body.
///
/// Chunks tile the body: dropping each chunk's first `overlap` bytes and
/// concatenating gives back the original text exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChunk {
    pub span: Range<usize>,
    /// Bytes at the start of `text` repeated from the previous chunk.
    pub overlap: usize,
    pub text: String,
}

impl TextChunk {
    /// The chunk without surrounding whitespace; what gets sent to extractors.
    pub fn passage(&self) -> &str {
        self.text.trim()
    }
}

/// Joins chunks back into the text they were cut from.
pub fn reassemble(chunks: &[TextChunk]) -> String {
    chunks.iter().map(|c| &c.text[c.overlap..]).collect()
}

/// Byte offsets of whitespace-delimited tokens.
fn token_starts(text: &str) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_token = false;
        } else if !in_token {
            starts.push(i);
            in_token = true;
        }
    }
    starts
}

/// Paragraph spans: each covers its paragraph plus the blank-line separator
/// that follows it, so consecutive spans meet exactly.
fn paragraph_spans(body: &str) -> Vec<Range<usize>> {
    let mut starts = vec![0];
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            // A separator is a newline followed by optional spaces and another newline.
            let mut j = i + 1;
            let mut blank = false;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                if bytes[j] == b'\n' {
                    blank = true;
                }
                j += 1;
            }
            if blank && j < bytes.len() {
                starts.push(j);
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    let mut spans: Vec<Range<usize>> = starts
        .windows(2)
        .map(|w| w[0]..w[1])
        .collect();
    spans.push(*starts.last().unwrap()..body.len());
    spans
}

/// Splits full text on paragraph boundaries, windowing long paragraphs.
///
/// Tokens are whitespace-delimited words. A paragraph with more than
/// `max_chunk` tokens is cut into windows of `max_chunk` tokens advancing by
/// `max_chunk - overlap`. Whitespace-only bodies yield no chunks.
///
/// Panics if `max_chunk <= overlap`.
pub fn chunk_fulltext(body: &str, max_chunk: usize, overlap: usize) -> Vec<TextChunk> {
    assert!(
        max_chunk > overlap,
        "max_chunk ({max_chunk}) must exceed overlap ({overlap})"
    );
    if body.trim().is_empty() {
        return Vec::new();
    }
    let stride = max_chunk - overlap;
    let mut chunks = Vec::new();
    for para in paragraph_spans(body) {
        let slice = &body[para.clone()];
        let tokens: Vec<usize> = token_starts(slice)
            .into_iter()
            .map(|t| t + para.start)
            .collect();
        if tokens.len() <= max_chunk {
            chunks.push(TextChunk {
                span: para.clone(),
                overlap: 0,
                text: slice.to_string(),
            });
            continue;
        }
        let mut first = 0;
        loop {
            let end_token = first + max_chunk;
            let start = if first == 0 { para.start } else { tokens[first] };
            let end = if end_token >= tokens.len() {
                para.end
            } else {
                tokens[end_token]
            };
            let overlap_bytes = if first == 0 {
                0
            } else {
                tokens[first + overlap] - tokens[first]
            };
            chunks.push(TextChunk {
                span: start..end,
                overlap: overlap_bytes,
                text: body[start..end].to_string(),
            });
            if end_token >= tokens.len() {
                break;
            }
            first += stride;
        }
    }
    // Leading whitespace-only spans carry no tokens; fold them into the next chunk.
    merge_blank_chunks(body, chunks)
}

fn merge_blank_chunks(body: &str, chunks: Vec<TextChunk>) -> Vec<TextChunk> {
    let mut out: Vec<TextChunk> = Vec::with_capacity(chunks.len());
    let mut pending_start: Option<usize> = None;
    for mut chunk in chunks {
        if chunk.text.trim().is_empty() {
            pending_start.get_or_insert(chunk.span.start);
            continue;
        }
        if let Some(start) = pending_start.take() {
            if chunk.overlap == 0 {
                chunk.span.start = start;
                chunk.text = body[chunk.span.clone()].to_string();
            }
        }
        out.push(chunk);
    }
    if let Some(start) = pending_start {
        if let Some(last) = out.last_mut() {
            last.span.end = body.len().max(start);
            last.text = body[last.span.clone()].to_string();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn short_paragraphs_stay_whole() {
        let body = "First paragraph here.\n\nSecond one.";
        let chunks = chunk_fulltext(body, 400, 50);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].passage(), "First paragraph here.");
        assert_eq!(chunks[1].passage(), "Second one.");
        assert_eq!(reassemble(&chunks), body);
    }

    #[test]
    fn long_paragraph_is_windowed() {
        let body = words(1000);
        let chunks = chunk_fulltext(&body, 400, 50);
        assert_eq!(chunks.len(), 3);
        let counts: Vec<usize> = chunks
            .iter()
            .map(|c| c.passage().split_whitespace().count())
            .collect();
        assert_eq!(counts, [400, 400, 300]);
        assert!(chunks[1].passage().starts_with("w350 "));
        assert!(chunks[2].passage().starts_with("w700 "));
        let overlap_tokens = chunks[1].text[..chunks[1].overlap].split_whitespace().count();
        assert_eq!(overlap_tokens, 50);
        assert_eq!(reassemble(&chunks), body);
    }

    #[test]
    fn empty_body_gives_no_chunks() {
        assert!(chunk_fulltext("", 10, 2).is_empty());
        assert!(chunk_fulltext("  \n\n ", 10, 2).is_empty());
    }

    #[test]
    fn leading_blank_lines_are_kept() {
        let body = "\n\n  \nalpha beta\n\ngamma\n";
        let chunks = chunk_fulltext(body, 5, 1);
        assert_eq!(reassemble(&chunks), body);
        assert_eq!(chunks.len(), 2);
    }

    #[test]
    #[should_panic]
    fn overlap_must_be_below_window() {
        chunk_fulltext("a b c", 2, 2);
    }
}
