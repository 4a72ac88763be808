//! Line-oriented prune result format.
//!
//! ```text
//! strategy <uniform|video-centric|audio-centric>
//! pool_factor <f>
//! groups <G>
//! group <id> tokens <n_video> <n_audio>
//! group <id> ratio <rho_video> <rho_audio>
//! group <id> video <k_v> <idx...>
//! group <id> audio <k_a> <idx...>
//! ...
//! video_tokens <before> <after>
//! audio_positions <before> <after>
//! audio_tokens <before> <after>
//! tokens <before> <after>
//! retained_ratio_video <float>
//! retained_ratio_audio <float>
//! retained_ratio <float>
//! ```
//!
//! Audio indices are pooled positions. Position `p` of a group stands for the
//! raw audio tokens `p*f .. min((p+1)*f, n_audio)` with `f = pool_factor`.
//! Summary lines are derived from the group lines and checked on read.
//! Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scoring::Strategy;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRetention {
    pub group_id: usize,
    pub video_tokens: usize,
    pub audio_tokens: usize,
    pub rho_video: f64,
    pub rho_audio: f64,
    /// Retained local video token indices, strictly increasing.
    pub video: Vec<usize>,
    /// Retained local pooled audio positions, strictly increasing.
    pub audio: Vec<usize>,
}

impl GroupRetention {
    pub fn audio_positions(&self, pool_factor: usize) -> usize {
        self.audio_tokens.div_ceil(pool_factor)
    }

    /// Raw audio token indices covered by the retained pooled positions.
    pub fn audio_raw_indices(&self, pool_factor: usize) -> Vec<usize> {
        self.audio
            .iter()
            .flat_map(|&p| p * pool_factor..((p + 1) * pool_factor).min(self.audio_tokens))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResultFile {
    pub strategy: Strategy,
    pub pool_factor: usize,
    pub groups: Vec<GroupRetention>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultSummary {
    pub video_tokens_before: usize,
    pub video_tokens_after: usize,
    pub audio_positions_before: usize,
    pub audio_positions_after: usize,
    pub audio_tokens_before: usize,
    pub audio_tokens_after: usize,
    pub tokens_before: usize,
    pub tokens_after: usize,
    /// Retained fraction of video tokens.
    pub retained_ratio_video: f64,
    /// Retained fraction of pooled audio positions.
    pub retained_ratio_audio: f64,
    /// Retained fraction of raw video + audio tokens.
    pub retained_ratio: f64,
}

fn ratio(after: usize, before: usize) -> f64 {
    if before == 0 {
        1.0
    } else {
        after as f64 / before as f64
    }
}

impl PruneResultFile {
    pub fn validate(&self) -> Result<()> {
        if self.pool_factor == 0 {
            return Err(Error::InvalidResult("pool_factor must be >= 1".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::InvalidResult("no groups".into()));
        }
        for (expected, g) in self.groups.iter().enumerate() {
            if g.group_id != expected {
                return Err(Error::InvalidResult(format!(
                    "group {} found at position {expected}",
                    g.group_id
                )));
            }
            for (name, rho) in [("video", g.rho_video), ("audio", g.rho_audio)] {
                if !(0.0..=1.0).contains(&rho) {
                    return Err(Error::InvalidResult(format!(
                        "group {expected} {name} ratio {rho} outside [0, 1]"
                    )));
                }
            }
            check_indices(expected, "video", &g.video, g.video_tokens)?;
            check_indices(
                expected,
                "audio",
                &g.audio,
                g.audio_positions(self.pool_factor),
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> ResultSummary {
        let mut s = ResultSummary {
            video_tokens_before: 0,
            video_tokens_after: 0,
            audio_positions_before: 0,
            audio_positions_after: 0,
            audio_tokens_before: 0,
            audio_tokens_after: 0,
            tokens_before: 0,
            tokens_after: 0,
            retained_ratio_video: 0.0,
            retained_ratio_audio: 0.0,
            retained_ratio: 0.0,
        };
        for g in &self.groups {
            s.video_tokens_before += g.video_tokens;
            s.video_tokens_after += g.video.len();
            s.audio_positions_before += g.audio_positions(self.pool_factor);
            s.audio_positions_after += g.audio.len();
            s.audio_tokens_before += g.audio_tokens;
            s.audio_tokens_after += g.audio_raw_indices(self.pool_factor).len();
        }
        s.tokens_before = s.video_tokens_before + s.audio_tokens_before;
        s.tokens_after = s.video_tokens_after + s.audio_tokens_after;
        s.retained_ratio_video = ratio(s.video_tokens_after, s.video_tokens_before);
        s.retained_ratio_audio = ratio(s.audio_positions_after, s.audio_positions_before);
        s.retained_ratio = ratio(s.tokens_after, s.tokens_before);
        s
    }
}

fn check_indices(group: usize, modality: &str, indices: &[usize], bound: usize) -> Result<()> {
    if bound > 0 && indices.is_empty() {
        return Err(Error::InvalidResult(format!(
            "group {group} retains no {modality} tokens out of {bound}"
        )));
    }
    if let Some(&last) = indices.last() {
        if last >= bound {
            return Err(Error::InvalidResult(format!(
                "group {group} {modality} index {last} out of range 0..{bound}"
            )));
        }
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidResult(format!(
            "group {group} {modality} indices are not strictly increasing"
        )));
    }
    Ok(())
}

pub fn write_prune_result(r: &PruneResultFile, path: impl AsRef<Path>) -> Result<()> {
    let text = format_prune_result(r)?;
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_prune_result(path: impl AsRef<Path>) -> Result<PruneResultFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_prune_result(&text)
}

pub fn format_prune_result(r: &PruneResultFile) -> Result<String> {
    r.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "strategy {}", r.strategy);
    let _ = writeln!(out, "pool_factor {}", r.pool_factor);
    let _ = writeln!(out, "groups {}", r.groups.len());
    for g in &r.groups {
        let id = g.group_id;
        let _ = writeln!(
            out,
            "group {id} tokens {} {}",
            g.video_tokens, g.audio_tokens
        );
        let _ = writeln!(out, "group {id} ratio {} {}", g.rho_video, g.rho_audio);
        write_index_line(&mut out, id, "video", &g.video);
        write_index_line(&mut out, id, "audio", &g.audio);
    }
    out.push_str(&format_summary(&r.summary()));
    Ok(out)
}

fn write_index_line(out: &mut String, id: usize, modality: &str, indices: &[usize]) {
    let _ = write!(out, "group {id} {modality} {}", indices.len());
    for i in indices {
        let _ = write!(out, " {i}");
    }
    out.push('\n');
}

fn format_summary(s: &ResultSummary) -> String {
    format!(
        "video_tokens {} {}\naudio_positions {} {}\naudio_tokens {} {}\ntokens {} {}\n\
         retained_ratio_video {}\nretained_ratio_audio {}\nretained_ratio {}\n",
        s.video_tokens_before,
        s.video_tokens_after,
        s.audio_positions_before,
        s.audio_positions_after,
        s.audio_tokens_before,
        s.audio_tokens_after,
        s.tokens_before,
        s.tokens_after,
        s.retained_ratio_video,
        s.retained_ratio_audio,
        s.retained_ratio,
    )
}

pub fn parse_prune_result(text: &str) -> Result<PruneResultFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next_fields = |what: &str| -> Result<(usize, Vec<&str>)> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")))?;
        Ok((n, l.split_whitespace().collect()))
    };

    let (n, f) = next_fields("strategy")?;
    let strategy = match f[..] {
        ["strategy", name] => name
            .parse()
            .map_err(|e: Error| Error::parse(n, e.to_string()))?,
        _ => return Err(Error::parse(n, "expected `strategy <name>`")),
    };
    let (n, f) = next_fields("pool_factor")?;
    let pool_factor = match f[..] {
        ["pool_factor", v] => parse_num(v, n)?,
        _ => return Err(Error::parse(n, "expected `pool_factor <f>`")),
    };
    let (n, f) = next_fields("groups")?;
    let group_count: usize = match f[..] {
        ["groups", v] => parse_num(v, n)?,
        _ => return Err(Error::parse(n, "expected `groups <G>`")),
    };

    let mut groups = Vec::with_capacity(group_count);
    for id in 0..group_count {
        let (n, f) = next_fields("group tokens")?;
        let (video_tokens, audio_tokens) = match f[..] {
            ["group", gid, "tokens", nv, na] => {
                expect_id(gid, id, n)?;
                (parse_num(nv, n)?, parse_num(na, n)?)
            }
            _ => return Err(Error::parse(n, format!("expected `group {id} tokens ..`"))),
        };
        let (n, f) = next_fields("group ratio")?;
        let (rho_video, rho_audio) = match f[..] {
            ["group", gid, "ratio", rv, ra] => {
                expect_id(gid, id, n)?;
                (parse_num(rv, n)?, parse_num(ra, n)?)
            }
            _ => return Err(Error::parse(n, format!("expected `group {id} ratio ..`"))),
        };
        let (n, f) = next_fields("video indices")?;
        let video = parse_index_line(&f, id, "video", n)?;
        let (n, f) = next_fields("audio indices")?;
        let audio = parse_index_line(&f, id, "audio", n)?;
        groups.push(GroupRetention {
            group_id: id,
            video_tokens,
            audio_tokens,
            rho_video,
            rho_audio,
            video,
            audio,
        });
    }

    let result = PruneResultFile {
        strategy,
        pool_factor,
        groups,
    };
    result.validate()?;

    let expected = format_summary(&result.summary());
    for want in expected.lines() {
        let (n, f) = next_fields("summary line")?;
        if f.join(" ") != want {
            return Err(Error::InvalidResult(format!(
                "line {n}: summary `{}` disagrees with group lines (expected `{want}`)",
                f.join(" ")
            )));
        }
    }
    if let Ok((n, _)) = next_fields("end of file") {
        return Err(Error::parse(n, "unexpected content after `retained_ratio`"));
    }
    Ok(result)
}

fn parse_index_line(f: &[&str], id: usize, modality: &str, line: usize) -> Result<Vec<usize>> {
    match f {
        ["group", gid, m, k, rest @ ..] if *m == modality => {
            expect_id(gid, id, line)?;
            let k: usize = parse_num(k, line)?;
            if k != rest.len() {
                return Err(Error::parse(
                    line,
                    format!("declared {k} {modality} indices, found {}", rest.len()),
                ));
            }
            rest.iter().map(|s| parse_num(s, line)).collect()
        }
        _ => Err(Error::parse(
            line,
            format!("expected `group {id} {modality} <k> <idx...>`"),
        )),
    }
}

fn expect_id(field: &str, id: usize, line: usize) -> Result<()> {
    let got: usize = parse_num(field, line)?;
    if got != id {
        return Err(Error::parse(
            line,
            format!("expected group {id}, found {got}"),
        ));
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{s}`")))
}
