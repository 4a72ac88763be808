//! Line-oriented group spec format.
//!
//! ```text
//! groups <G>
//! <id> <n_video> <n_audio> <frame_index>
//! ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Ids may appear in any
//! order but must cover `0..G` exactly once.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupEntry {
    pub group_id: usize,
    pub video_tokens: usize,
    pub audio_tokens: usize,
    pub frame_index: usize,
}

/// Per-group token counts, ordered by group id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    groups: Vec<GroupEntry>,
}

impl GroupSpec {
    /// Validates and sorts `entries` by id.
    pub fn new(mut entries: Vec<GroupEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::GroupSpec("at least one group is required".into()));
        }
        entries.sort_by_key(|e| e.group_id);
        for (expected, e) in entries.iter().enumerate() {
            if e.group_id < expected {
                return Err(Error::GroupSpec(format!(
                    "duplicate group id {}",
                    e.group_id
                )));
            }
            if e.group_id > expected {
                return Err(Error::GroupSpec(format!(
                    "group ids are not consecutive: missing id {expected}"
                )));
            }
            if e.video_tokens == 0 && e.audio_tokens == 0 {
                return Err(Error::GroupSpec(format!(
                    "group {} has no video or audio tokens",
                    e.group_id
                )));
            }
        }
        Ok(Self { groups: entries })
    }

    /// One group per frame with fixed token counts.
    pub fn uniform(groups: usize, video_tokens: usize, audio_tokens: usize) -> Result<Self> {
        Self::new(
            (0..groups)
                .map(|i| GroupEntry {
                    group_id: i,
                    video_tokens,
                    audio_tokens,
                    frame_index: i,
                })
                .collect(),
        )
    }

    pub fn groups(&self) -> &[GroupEntry] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn video_counts(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.video_tokens).collect()
    }

    pub fn audio_counts(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.audio_tokens).collect()
    }
}

pub fn read_group_spec(path: impl AsRef<Path>) -> Result<GroupSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_group_spec(&text)
}

pub fn write_group_spec(spec: &GroupSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_group_spec(spec)).map_err(|e| Error::io(path, e))
}

pub fn format_group_spec(spec: &GroupSpec) -> String {
    let mut out = format!("groups {}\n", spec.len());
    for g in spec.groups() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            g.group_id, g.video_tokens, g.audio_tokens, g.frame_index
        );
    }
    out
}

pub fn parse_group_spec(text: &str) -> Result<GroupSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(0, "empty group spec"))?;
    let declared = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["groups", g] => parse_count(g, line_no, "group count")?,
        _ => return Err(Error::parse(line_no, "expected header `groups <G>`")),
    };

    let mut entries = Vec::with_capacity(declared);
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, nv, na, frame] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        entries.push(GroupEntry {
            group_id: parse_count(id, line_no, "group id")?,
            video_tokens: parse_count(nv, line_no, "video token count")?,
            audio_tokens: parse_count(na, line_no, "audio token count")?,
            frame_index: parse_count(frame, line_no, "frame index")?,
        });
    }
    if entries.len() != declared {
        return Err(Error::GroupSpec(format!(
            "header declares {declared} groups, found {}",
            entries.len()
        )));
    }
    GroupSpec::new(entries)
}

fn parse_count(field: &str, line: usize, what: &str) -> Result<usize> {
    let value: i64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} `{field}` is not an integer")))?;
    if value < 0 {
        return Err(Error::GroupSpec(format!(
            "{what} must be non-negative, got {value} at line {line}"
        )));
    }
    usize::try_from(value).map_err(|_| Error::parse(line, format!("{what} out of range")))
}
