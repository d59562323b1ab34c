//! Text dataset format.
//!
//! ```text
//! DRNNSEQ 1
//! classes <k> dim <D> sequences <S>
//! seq <id> subject <subject> frames <T> label <c>        (or: labels <c_1> ... <c_T>)
//! <D space-separated floats>                              (T lines)
//! ...
//! ```
//!
//! Labels are one-based in the file. Floats are written with 17 significant
//! digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Dataset, Label, LabeledSequence};
use crate::error::{Error, Result};
use crate::write_atomic;

const MAGIC: &str = "DRNNSEQ";
const VERSION: &str = "1";

pub(crate) fn push_floats(out: &mut String, values: &[f64]) {
    for (j, v) in values.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").expect("writing to a String cannot fail");
    }
    out.push('\n');
}

/// Serializes a dataset to the text format.
pub fn write_dataset(dataset: &Dataset) -> Result<String> {
    dataset.validate()?;
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(
        out,
        "classes {} dim {} sequences {}",
        dataset.num_classes,
        dataset.feature_dim,
        dataset.sequences.len()
    )
    .unwrap();
    for seq in &dataset.sequences {
        if seq.sequence_id.is_empty() || seq.sequence_id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!(
                "sequence id {:?} must be non-empty and contain no whitespace",
                seq.sequence_id
            )));
        }
        write!(
            out,
            "seq {} subject {} frames {}",
            seq.sequence_id,
            seq.subject_id,
            seq.frames.len()
        )
        .unwrap();
        match &seq.label {
            Label::Sequence(c) => writeln!(out, " label {}", c + 1).unwrap(),
            Label::Frames(cs) => {
                out.push_str(" labels");
                for c in cs {
                    write!(out, " {}", c + 1).unwrap();
                }
                out.push('\n');
            }
        }
        for frame in &seq.frames {
            push_floats(&mut out, frame);
        }
    }
    Ok(out)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let text = write_dataset(dataset)?;
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, path)
}

pub(crate) struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str, path: &Path) -> Self {
        Lines {
            path: path.to_path_buf(),
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    pub(crate) fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Next line and its one-based number; `what` names the section for the
    /// end-of-file error.
    pub(crate) fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line))
            }
            None => Err(self.error(self.last + 1, format!("unexpected end of file: missing {what}"))),
        }
    }

    pub(crate) fn rest_is_blank(&mut self) -> Option<usize> {
        self.inner.find(|(_, l)| !l.trim().is_empty()).map(|(i, _)| i + 1)
    }

    pub(crate) fn floats(&self, line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| self.error(line_no, format!("invalid number {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != expected {
            return Err(self.error(
                line_no,
                format!("expected {expected} values, found {}", values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(self.error(line_no, format!("non-finite value {bad}")));
        }
        Ok(values)
    }
}

/// Parses `key value key value ...` tokens, checking the keys in order.
pub(crate) fn keyed<'a>(
    lines: &Lines<'_>,
    line_no: usize,
    tokens: &[&'a str],
    keys: &[&str],
) -> Result<Vec<&'a str>> {
    if tokens.len() < 2 * keys.len() {
        return Err(lines.error(line_no, format!("expected fields {keys:?}")));
    }
    keys.iter()
        .enumerate()
        .map(|(i, key)| {
            if tokens[2 * i] == *key {
                Ok(tokens[2 * i + 1])
            } else {
                Err(lines.error(
                    line_no,
                    format!("expected {key:?}, found {:?}", tokens[2 * i]),
                ))
            }
        })
        .collect()
}

fn parse_usize(lines: &Lines<'_>, line_no: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| lines.error(line_no, format!("invalid {what} {tok:?}")))
}

fn parse_class(lines: &Lines<'_>, line_no: usize, tok: &str, classes: usize) -> Result<usize> {
    let c = parse_usize(lines, line_no, tok, "label")?;
    if c == 0 || c > classes {
        return Err(lines.error(
            line_no,
            format!("label {c} out of range 1..={classes}"),
        ));
    }
    Ok(c - 1)
}

/// Parses the text format; `path` is only used in error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Dataset> {
    let mut lines = Lines::new(text, path);
    let (n, magic) = lines.next("header")?;
    if magic.trim() != format!("{MAGIC} {VERSION}") {
        return Err(lines.error(n, format!("expected header \"{MAGIC} {VERSION}\", found {magic:?}")));
    }
    let (n, dims) = lines.next("dataset dimensions")?;
    let tokens: Vec<&str> = dims.split_whitespace().collect();
    let vals = keyed(&lines, n, &tokens, &["classes", "dim", "sequences"])?;
    if tokens.len() != 6 {
        return Err(lines.error(n, "trailing fields after sequence count"));
    }
    let classes = parse_usize(&lines, n, vals[0], "class count")?;
    let dim = parse_usize(&lines, n, vals[1], "dimension")?;
    let count = parse_usize(&lines, n, vals[2], "sequence count")?;
    if classes < 2 {
        return Err(lines.error(n, "at least 2 classes required"));
    }
    if dim == 0 {
        return Err(lines.error(n, "dimension must be positive"));
    }

    let mut sequences = Vec::with_capacity(count);
    for s in 0..count {
        let (n, header) = lines.next(&format!("header of sequence {} of {count}", s + 1))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        let vals = keyed(&lines, n, &tokens, &["seq", "subject", "frames"])?;
        let sequence_id = vals[0].to_string();
        let subject_id: i64 = vals[1]
            .parse()
            .map_err(|_| lines.error(n, format!("invalid subject {:?}", vals[1])))?;
        let frames_len = parse_usize(&lines, n, vals[2], "frame count")?;
        if frames_len == 0 {
            return Err(lines.error(n, "sequence has no frames"));
        }
        let label = match tokens.get(6).copied() {
            Some("label") if tokens.len() == 8 => Label::Sequence(parse_class(&lines, n, tokens[7], classes)?),
            Some("labels") => {
                let cs = tokens[7..]
                    .iter()
                    .map(|t| parse_class(&lines, n, t, classes))
                    .collect::<Result<Vec<_>>>()?;
                if cs.len() != frames_len {
                    return Err(lines.error(
                        n,
                        format!("{} frame labels for {frames_len} frames", cs.len()),
                    ));
                }
                Label::Frames(cs)
            }
            _ => return Err(lines.error(n, "expected \"label <c>\" or \"labels <c_1> ... <c_T>\"")),
        };
        let mut frames = Vec::with_capacity(frames_len);
        for t in 0..frames_len {
            let (n, line) = lines.next(&format!("frame {} of sequence {sequence_id}", t + 1))?;
            frames.push(lines.floats(n, line, dim)?);
        }
        sequences.push(LabeledSequence {
            sequence_id,
            subject_id,
            frames,
            label,
        });
    }
    if let Some(n) = lines.rest_is_blank() {
        return Err(lines.error(n, "unexpected content after the last sequence"));
    }
    Dataset::new(classes, dim, sequences)
}
