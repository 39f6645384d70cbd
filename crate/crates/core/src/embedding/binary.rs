//! word2vec binary format: `<count> <dim>\n` header, then per entry a
//! space-terminated token followed by `dim` little-endian `f32`s. Writers
//! conventionally append `\n` after each vector; the reader tolerates it.

use std::io::{BufRead, ErrorKind, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbeddingError, EmbeddingSpace, Format, LoadOptions, SpaceBuilder};

fn read_header<R: BufRead>(reader: &mut R) -> Result<(usize, usize), EmbeddingError> {
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    let text = String::from_utf8_lossy(&line);
    let fields: Vec<&str> = text.split_ascii_whitespace().collect();
    match fields[..] {
        [count, dim] => match (count.parse::<usize>(), dim.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => Ok((c, d)),
            _ => Err(EmbeddingError::BadHeader(text.trim().to_owned())),
        },
        _ => Err(EmbeddingError::BadHeader(text.trim().to_owned())),
    }
}

/// Skip record separators. Returns false at end of input.
fn skip_newlines<R: BufRead>(reader: &mut R) -> std::io::Result<bool> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(false);
        }
        let n = buf.iter().take_while(|&&b| b == b'\n' || b == b'\r').count();
        let more = n < buf.len();
        reader.consume(n);
        if more {
            return Ok(true);
        }
    }
}

pub(crate) fn read_binary<R: BufRead>(mut reader: R, opts: &LoadOptions) -> Result<SpaceBuilder, EmbeddingError> {
    let (count, dim) = read_header(&mut reader)?;
    let mut builder = SpaceBuilder::new(dim);
    let mut skipped = 0usize;
    let mut token = Vec::new();
    let mut values = vec![0f32; dim];
    let wanted = opts.limit.map_or(count, |l| l.min(count));

    for entry in 0..wanted {
        if !skip_newlines(&mut reader)? {
            return Err(EmbeddingError::HeaderMismatch(format!(
                "header declares {count} entries, payload ends after {entry}"
            )));
        }
        token.clear();
        reader.read_until(b' ', &mut token)?;
        if token.pop() != Some(b' ') {
            return Err(EmbeddingError::Truncated { entry });
        }
        match reader.read_f32_into::<LittleEndian>(&mut values) {
            Ok(()) => {}
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Err(EmbeddingError::Truncated { entry }),
            Err(e) => return Err(e.into()),
        }
        if values.iter().any(|v| !v.is_finite()) {
            if opts.strict {
                return Err(EmbeddingError::NonFinite { row: entry });
            }
            skipped += 1;
            continue;
        }
        let word = String::from_utf8_lossy(&token);
        builder.push(&word, &values);
    }

    if wanted == count && skip_newlines(&mut reader)? {
        let mut rest = Vec::new();
        reader.read_to_end(&mut rest)?;
        if rest.iter().any(|b| !b.is_ascii_whitespace()) {
            return Err(EmbeddingError::HeaderMismatch(format!(
                "{} bytes of payload beyond the declared {count} entries",
                rest.len()
            )));
        }
    }

    let meta = builder.meta_mut();
    meta.skipped += skipped;
    meta.declared_count = Some(count);
    meta.limit = opts.limit;
    meta.format = Some(Format::Binary);
    Ok(builder)
}

pub fn write_binary<W: Write>(space: &EmbeddingSpace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {}", space.len(), space.dim())?;
    for (token, row) in space.iter() {
        w.write_all(token.as_bytes())?;
        w.write_all(b" ")?;
        for &v in row {
            w.write_f32::<LittleEndian>(v)?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}
