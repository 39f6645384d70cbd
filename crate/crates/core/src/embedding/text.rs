//! word2vec / fastText text format: optional `<count> <dim>` header, then one
//! `token v1 .. vdim` row per line.

use std::io::{BufRead, Write};

use super::{EmbeddingError, EmbeddingSpace, Format, LoadOptions, SpaceBuilder};

fn parse_header(fields: &[&str]) -> Option<(usize, usize)> {
    match fields {
        [count, dim] => Some((count.parse().ok()?, dim.parse().ok()?)),
        _ => None,
    }
}

pub(crate) fn read_text<R: BufRead>(mut reader: R, opts: &LoadOptions) -> Result<SpaceBuilder, EmbeddingError> {
    let mut builder: Option<SpaceBuilder> = None;
    let mut declared_count = None;
    let mut skipped = 0usize;
    let mut rows_seen = 0usize;
    let mut first = true;
    let mut buf = Vec::new();
    let mut values = Vec::new();
    let mut line_no = 0usize;

    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if first {
            first = false;
            if let Some((count, dim)) = parse_header(&fields) {
                if dim == 0 {
                    return Err(EmbeddingError::BadHeader(line.trim().to_owned()));
                }
                declared_count = Some(count);
                builder = Some(SpaceBuilder::new(dim));
                continue;
            }
        }
        if opts.limit.is_some_and(|limit| rows_seen >= limit) {
            break;
        }
        rows_seen += 1;

        let (token, rest) = (fields[0], &fields[1..]);
        let b = builder.get_or_insert_with(|| SpaceBuilder::new(rest.len()));
        if rest.len() != b.dim() || rest.is_empty() {
            if opts.strict {
                return Err(EmbeddingError::InconsistentDim {
                    row: line_no,
                    expected: b.dim(),
                    found: rest.len(),
                });
            }
            log::debug!("row {line_no}: expected {} values, found {}", b.dim(), rest.len());
            skipped += 1;
            continue;
        }
        values.clear();
        let parsed = rest.iter().try_for_each(|f| match f.parse::<f32>() {
            Ok(v) if v.is_finite() => {
                values.push(v);
                Ok(())
            }
            _ => Err(()),
        });
        if parsed.is_err() {
            if opts.strict {
                return Err(EmbeddingError::NonFinite { row: line_no });
            }
            skipped += 1;
            continue;
        }
        b.push(token, &values);
    }

    let mut builder = builder.ok_or(EmbeddingError::Empty)?;
    let meta = builder.meta_mut();
    meta.skipped += skipped;
    meta.declared_count = declared_count;
    meta.limit = opts.limit;
    meta.format = Some(Format::Text);
    Ok(builder)
}

/// Write `space` in text format. Floats use the shortest representation that
/// parses back to the same `f32`.
pub fn write_text<W: Write>(space: &EmbeddingSpace, mut w: W, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(w, "{} {}", space.len(), space.dim())?;
    }
    for (token, row) in space.iter() {
        w.write_all(token.as_bytes())?;
        for v in row {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::NormalizationPolicy;

    fn load(src: &str, strict: bool) -> Result<EmbeddingSpace, EmbeddingError> {
        let opts = LoadOptions {
            strict,
            ..LoadOptions::default()
        };
        read_text(src.as_bytes(), &opts)?.finish("t", NormalizationPolicy::default())
    }

    #[test]
    fn headered_file() {
        let s = load("2 3\na 1 0 0\nb 0 1 0\n", false).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.meta().declared_count, Some(2));
    }

    #[test]
    fn headerless_file() {
        let s = load("a 1 0 0\nb 0 1 0\n", false).unwrap();
        assert_eq!((s.dim(), s.len()), (3, 2));
        assert_eq!(s.meta().declared_count, None);
    }

    #[test]
    fn duplicate_keeps_first() {
        let s = load("2 3\na 1 0 0\nb 0 1 0\na 9 9 9\n", false).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get("a").unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.meta().duplicates, 1);
    }

    #[test]
    fn malformed_row_skipped_when_lenient() {
        let s = load("3 3\na 1 0 0\nc 1 2\nb 0 1 0\n", false).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.meta().skipped, 1);
        assert!(s.get("c").is_none());
    }

    #[test]
    fn malformed_row_is_error_when_strict() {
        let err = load("3 3\na 1 0 0\nc 1 2\n", true).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::InconsistentDim {
                expected: 3,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let s = load("a 1 0\nb nan 1\nc inf 0\nd 1 x\n", false).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.meta().skipped, 3);
    }

    #[test]
    fn crlf_and_trailing_space() {
        let s = load("1 2\r\nw 0.5 0.25 \r\n", false).unwrap();
        assert_eq!(s.get("w").unwrap(), &[0.5, 0.25]);
    }

    #[test]
    fn limit_caps_rows() {
        let opts = LoadOptions {
            limit: Some(1),
            ..LoadOptions::default()
        };
        let s = read_text("2 1\na 1\nb 2\n".as_bytes(), &opts)
            .unwrap()
            .finish("t", NormalizationPolicy::default())
            .unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn empty_file_is_error() {
        assert!(matches!(load("", false), Err(EmbeddingError::Empty)));
        assert!(matches!(load("3 4\n", false), Err(EmbeddingError::Empty)));
        assert!(matches!(
            load("a 1 2\nb 1\n", true),
            Err(EmbeddingError::InconsistentDim { .. })
        ));
    }

    #[test]
    fn arabic_tokens() {
        let s = load("1 2\nرجل 0.5 -1\n", false).unwrap();
        assert_eq!(s.get("رجل").unwrap(), &[0.5, -1.0]);
    }
}
