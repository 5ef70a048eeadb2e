//! Reading-order assembly for OCR text blocks.
//!
//! Blocks whose vertical centers lie within `0.6 * median height` of each
//! other are linked; the connected components are lines. Lines are read by
//! mean top edge, blocks within a line by left edge. For single-column text
//! with line pitch of at least `1.2 * h` the threshold separates lines
//! exactly.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::feedback::{Priority, SpeechItem};
use crate::model::{BoundingBox, Detection, Space, TEXT_LABEL};

pub const LINE_THRESHOLD: f64 = 0.6;
pub const NO_TEXT_MESSAGE: &str = "no text found";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub text: String,
    pub score: f64,
}

impl TextBlock {
    pub fn new(bbox: BoundingBox, text: impl Into<String>, score: f64) -> Self {
        Self {
            bbox,
            text: text.into(),
            score,
        }
    }

    /// Text detections become blocks; everything else is skipped.
    pub fn from_detection(d: &Detection) -> Option<TextBlock> {
        if d.label != TEXT_LABEL {
            return None;
        }
        let text = d.text.clone()?;
        if text.trim().is_empty() {
            return None;
        }
        Some(TextBlock {
            bbox: d.bbox,
            text,
            score: d.score,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReadingError {
    MixedSpace { expected: Space, found: Space },
}

impl fmt::Display for ReadingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadingError::MixedSpace { expected, found } => {
                write!(f, "text blocks mix coordinate spaces ({expected} and {found})")
            }
        }
    }
}

impl core::error::Error for ReadingError {}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Total order on blocks used for every tie-break, so the result never
/// depends on input order.
fn block_order(a: &TextBlock, b: &TextBlock) -> Ordering {
    let ab = (a.bbox.x(), a.bbox.y(), a.bbox.w(), a.bbox.h());
    let bb = (b.bbox.x(), b.bbox.y(), b.bbox.w(), b.bbox.h());
    ab.0.total_cmp(&bb.0)
        .then(ab.1.total_cmp(&bb.1))
        .then(ab.2.total_cmp(&bb.2))
        .then(ab.3.total_cmp(&bb.3))
        .then_with(|| a.text.cmp(&b.text))
        .then(a.score.total_cmp(&b.score))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Group blocks into lines, each line sorted left to right, lines top to
/// bottom.
pub fn group_lines(blocks: &[TextBlock]) -> Result<Vec<Vec<TextBlock>>, ReadingError> {
    let Some(first) = blocks.first() else {
        return Ok(Vec::new());
    };
    let space = first.bbox.space();
    if let Some(b) = blocks.iter().find(|b| b.bbox.space() != space) {
        return Err(ReadingError::MixedSpace {
            expected: space,
            found: b.bbox.space(),
        });
    }

    let mut sorted: Vec<TextBlock> = blocks.to_vec();
    sorted.sort_by(block_order);

    let h = median(sorted.iter().map(|b| b.bbox.h()).collect());
    let gate = LINE_THRESHOLD * h;
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (sorted[i].bbox.center_y() - sorted[j].bbox.center_y()).abs() <= gate {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut lines: Vec<Vec<TextBlock>> = Vec::new();
    let mut root_of_line: Vec<usize> = Vec::new();
    for (i, block) in sorted.into_iter().enumerate() {
        let r = find(&mut parent, i);
        match root_of_line.iter().position(|&x| x == r) {
            Some(k) => lines[k].push(block),
            None => {
                root_of_line.push(r);
                lines.push(alloc::vec![block]);
            }
        }
    }
    // blocks arrived in block_order, so every line is already left to right
    let mean_top = |l: &Vec<TextBlock>| l.iter().map(|b| b.bbox.y()).sum::<f64>() / l.len() as f64;
    lines.sort_by(|a, b| {
        mean_top(a)
            .total_cmp(&mean_top(b))
            .then_with(|| block_order(&a[0], &b[0]))
    });
    Ok(lines)
}

/// Blocks joined with spaces within a line and line breaks between lines.
pub fn assemble(blocks: &[TextBlock]) -> Result<String, ReadingError> {
    let lines = group_lines(blocks)?;
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (j, b) in line.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(b.text.trim());
        }
    }
    Ok(out)
}

/// 64-bit FNV-1a, used as a stable content key.
pub fn content_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Turn assembled text into one utterance; line breaks become sentence
/// pauses.
pub fn speak_text(text: &str) -> SpeechItem {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let spoken = if lines.is_empty() {
        String::from(NO_TEXT_MESSAGE)
    } else {
        let mut s = String::new();
        for (i, line) in lines.iter().enumerate() {
            if i > 0 {
                let ends_sentence = s.ends_with(['.', '!', '?']);
                s.push_str(if ends_sentence { " " } else { ". " });
            }
            s.push_str(line);
        }
        s
    };
    let key = alloc::format!("ocr:{:016x}", content_hash(&spoken));
    SpeechItem {
        text: spoken,
        priority: Priority::CONTENT,
        dedupe_key: Some(key),
        enqueued_ms: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blk(x: f64, y: f64, w: f64, h: f64, t: &str) -> TextBlock {
        TextBlock::new(BoundingBox::new(x, y, w, h, Space::Original).unwrap(), t, 0.9)
    }

    #[test]
    fn examples() {
        assert_eq!(assemble(&[blk(0.0, 0.0, 40.0, 12.0, "EXIT")]).unwrap(), "EXIT");
        let two = [blk(120.0, 10.0, 50.0, 12.0, "world"), blk(10.0, 10.0, 50.0, 12.0, "hello")];
        assert_eq!(assemble(&two).unwrap(), "hello world");
        assert_eq!(assemble(&[]).unwrap(), "");
    }

    #[test]
    fn two_lines() {
        let blocks = [
            blk(10.0, 40.0, 30.0, 12.0, "line"),
            blk(50.0, 41.0, 30.0, 12.0, "two"),
            blk(50.0, 20.0, 30.0, 12.0, "one"),
            blk(10.0, 19.0, 30.0, 12.0, "line"),
        ];
        assert_eq!(assemble(&blocks).unwrap(), "line one\nline two");
    }

    #[test]
    fn mixed_space_rejected() {
        let a = blk(0.0, 0.0, 1.0, 1.0, "a");
        let b = TextBlock::new(BoundingBox::new(0.0, 0.0, 1.0, 1.0, Space::Downscaled).unwrap(), "b", 0.9);
        assert!(matches!(assemble(&[a, b]), Err(ReadingError::MixedSpace { .. })));
    }

    #[test]
    fn speak_examples() {
        let s = speak_text("EXIT");
        assert_eq!(s.text, "EXIT");
        assert_eq!(s.priority, Priority::CONTENT);
        assert_eq!(speak_text("").text, NO_TEXT_MESSAGE);
        assert_eq!(speak_text("a\nb").text, "a. b");
        assert_eq!(speak_text("Stop.\nGo").text, "Stop. Go");
        assert_eq!(speak_text("a\nb").dedupe_key, speak_text("a\nb").dedupe_key);
        assert_ne!(speak_text("a").dedupe_key, speak_text("b").dedupe_key);
    }

    #[test]
    fn detections_convert() {
        let b = BoundingBox::new(0.0, 0.0, 1.0, 1.0, Space::Original).unwrap();
        let d = Detection::text_block(b, "EXIT", 0.9).unwrap();
        assert_eq!(TextBlock::from_detection(&d).unwrap().text, "EXIT");
        assert!(TextBlock::from_detection(&Detection::new(b, "chair", 0.9).unwrap()).is_none());
    }
}
