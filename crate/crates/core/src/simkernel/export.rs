//! Line-oriented trace export.
//!
//! One record per line, `key=value` pairs separated by single spaces, in a
//! fixed field order:
//!
//! ```text
//! kind=interval proc=0 start=3 end=5 vc=1,0 vc_end=2,0 hlc=3.0 hlc_end=4.0
//! kind=message sender=0 receiver=1 send_pt=4 receive_pt=14 vc=2,0 hlc=4.0
//! ```
//!
//! Intervals come first (grouped by process, in start order), then messages
//! in delivery order. Message clocks are the sender's stamps.

use std::fmt::Write as _;
use std::io;

use super::{SimError, Trace};
use crate::clocks::HlcTimestamp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    Interval {
        proc: usize,
        start: u64,
        end: u64,
        vc: Vec<u32>,
        vc_end: Vec<u32>,
        hlc: HlcTimestamp,
        hlc_end: HlcTimestamp,
    },
    Message {
        sender: usize,
        receiver: usize,
        send_pt: u64,
        receive_pt: u64,
        vc: Vec<u32>,
        hlc: HlcTimestamp,
    },
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        match self {
            TraceRecord::Interval { proc, start, end, vc, vc_end, hlc, hlc_end } => {
                write!(
                    s,
                    "kind=interval proc={proc} start={start} end={end} vc={} vc_end={} hlc={hlc} hlc_end={hlc_end}",
                    join(vc),
                    join(vc_end)
                )
            }
            TraceRecord::Message { sender, receiver, send_pt, receive_pt, vc, hlc } => write!(
                s,
                "kind=message sender={sender} receiver={receiver} send_pt={send_pt} receive_pt={receive_pt} vc={} hlc={hlc}",
                join(vc)
            ),
        }
        .expect("writing to a String");
        s
    }
}

fn join(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

pub fn trace_records(trace: &Trace) -> impl Iterator<Item = TraceRecord> + '_ {
    let intervals = trace.intervals.iter().flatten().map(|iv| TraceRecord::Interval {
        proc: iv.proc,
        start: iv.start.0,
        end: iv.end.0,
        vc: iv.vc_start.entries().to_vec(),
        vc_end: iv.vc_end.entries().to_vec(),
        hlc: iv.hlc_start,
        hlc_end: iv.hlc_end,
    });
    let messages = trace.messages.iter().map(|m| TraceRecord::Message {
        sender: m.sender,
        receiver: m.receiver,
        send_pt: m.send_pt.0,
        receive_pt: m.receive_pt.0,
        vc: m.vc_send.entries().to_vec(),
        hlc: m.hlc_send,
    });
    intervals.chain(messages)
}

pub fn write_trace<W: io::Write>(trace: &Trace, out: &mut W) -> io::Result<()> {
    for rec in trace_records(trace) {
        writeln!(out, "{}", rec.to_line())?;
    }
    Ok(())
}

struct Fields<'a> {
    line: usize,
    parts: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Fields<'a> {
    fn err(&self, reason: impl Into<String>) -> SimError {
        SimError::Malformed { line: self.line, reason: reason.into() }
    }

    fn next(&mut self, key: &str) -> Result<&'a str, SimError> {
        let part = self.parts.next().ok_or_else(|| self.err(format!("missing field {key}")))?;
        match part.split_once('=') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected {key}=..., found {part:?}"))),
        }
    }

    fn int<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, SimError> {
        let v = self.next(key)?;
        v.parse().map_err(|_| self.err(format!("{key}: not an integer: {v:?}")))
    }

    fn vc(&mut self, key: &str) -> Result<Vec<u32>, SimError> {
        let v = self.next(key)?;
        v.split(',').map(|x| x.parse().map_err(|_| self.err(format!("{key}: bad entry {x:?}")))).collect()
    }

    fn hlc(&mut self, key: &str) -> Result<HlcTimestamp, SimError> {
        let v = self.next(key)?;
        let (l, c) = v.split_once('.').ok_or_else(|| self.err(format!("{key}: expected l.c")))?;
        match (l.parse(), c.parse()) {
            (Ok(l), Ok(c)) => Ok(HlcTimestamp::new(l, c)),
            _ => Err(self.err(format!("{key}: bad stamp {v:?}"))),
        }
    }

    fn finish(mut self) -> Result<(), SimError> {
        match self.parts.next() {
            None => Ok(()),
            Some(extra) => Err(self.err(format!("unexpected trailing field {extra:?}"))),
        }
    }
}

/// Parse the output of [`write_trace`]. Blank lines are skipped.
pub fn parse_trace_records(text: &str) -> Result<Vec<TraceRecord>, SimError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let mut f = Fields { line: idx + 1, parts: raw.split_ascii_whitespace() };
        let rec = match f.next("kind")? {
            "interval" => TraceRecord::Interval {
                proc: f.int("proc")?,
                start: f.int("start")?,
                end: f.int("end")?,
                vc: f.vc("vc")?,
                vc_end: f.vc("vc_end")?,
                hlc: f.hlc("hlc")?,
                hlc_end: f.hlc("hlc_end")?,
            },
            "message" => TraceRecord::Message {
                sender: f.int("sender")?,
                receiver: f.int("receiver")?,
                send_pt: f.int("send_pt")?,
                receive_pt: f.int("receive_pt")?,
                vc: f.vc("vc")?,
                hlc: f.hlc("hlc")?,
            },
            other => return Err(f.err(format!("unknown kind {other:?}"))),
        };
        f.finish()?;
        out.push(rec);
    }
    Ok(out)
}
