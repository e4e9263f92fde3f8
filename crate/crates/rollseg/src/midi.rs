//! Standard MIDI File ingestion: format 0/1 parsing with running status and
//! tempo-aware tick-to-seconds conversion, plus a minimal format-0 writer
//! for round-trip fixtures. PPQ time division only; SMPTE is rejected.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{NoteEvent, NoteEventList};

pub const DEFAULT_TEMPO_US_PER_QUARTER: u32 = 500_000;

/// Tempo map entry: microseconds per quarter note from `tick` onward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempoChange {
    pub tick: u64,
    pub us_per_quarter: u32,
}

/// A retained track event (note messages only; everything else is validated
/// and skipped during parsing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackEvent {
    pub tick: u64,
    pub channel: u8,
    pub pitch: u8,
    pub velocity: u8,
    pub on: bool,
}

/// Parsed SMF with tracks kept separate and the tempo map extracted.
#[derive(Debug, Clone)]
pub struct SmfDocument {
    pub format: u16,
    pub ppq: u16,
    pub tracks: Vec<Vec<TrackEvent>>,
    /// Sorted by tick; always starts with an entry at tick 0.
    pub tempo_map: Vec<TempoChange>,
    /// End-of-track tick per track (used to close dangling notes).
    pub end_ticks: Vec<u64>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Midi { offset: self.pos, message: message.into() }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes([self.u8()?, self.u8()?]))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes([self.u8()?, self.u8()?, self.u8()?, self.u8()?]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.err(format!("need {n} bytes, {} remain", self.remaining())));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Variable-length quantity, at most 4 bytes.
    fn vlq(&mut self) -> Result<u32> {
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(self.err("variable-length quantity longer than 4 bytes"))
    }
}

/// Parse an SMF byte stream. Unknown meta and sysex events are skipped after
/// length validation; the parser never reads past a declared chunk length.
pub fn parse_smf(bytes: &[u8]) -> Result<SmfDocument> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != b"MThd" {
        return Err(Error::Midi { offset: 0, message: "missing MThd header chunk".into() });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(r.err(format!("MThd length {header_len} < 6")));
    }
    let header = {
        let slice = r.take(header_len)?;
        let mut hr = Reader::new(slice);
        let format = hr.u16()?;
        let ntrks = hr.u16()?;
        let division = hr.u16()?;
        (format, ntrks, division)
    };
    let (format, ntrks, division) = header;
    if format > 1 {
        return Err(Error::Midi { offset: 8, message: format!("unsupported SMF format {format}") });
    }
    if division & 0x8000 != 0 {
        return Err(Error::Midi { offset: 12, message: "SMPTE time division is unsupported".into() });
    }
    if division == 0 {
        return Err(Error::Midi { offset: 12, message: "ticks per quarter note must be > 0".into() });
    }

    let mut tracks = Vec::new();
    let mut end_ticks = Vec::new();
    let mut tempo_events: Vec<TempoChange> = Vec::new();
    for track_index in 0..ntrks {
        let chunk_start = r.pos;
        if r.take(4)? != b"MTrk" {
            return Err(Error::Midi {
                offset: chunk_start,
                message: format!("missing MTrk magic for track {track_index}"),
            });
        }
        let len = r.u32()? as usize;
        let data = r.take(len)?;
        let (events, tempos, end_tick) = parse_track(data, chunk_start + 8)?;
        // format 1: only track 0 carries the governing tempo map
        if format == 0 || track_index == 0 {
            tempo_events.extend(tempos);
        }
        tracks.push(events);
        end_ticks.push(end_tick);
    }

    tempo_events.sort_by_key(|t| t.tick);
    if tempo_events.first().map_or(true, |t| t.tick != 0) {
        tempo_events.insert(0, TempoChange { tick: 0, us_per_quarter: DEFAULT_TEMPO_US_PER_QUARTER });
    }

    Ok(SmfDocument { format, ppq: division, tracks, tempo_map: tempo_events, end_ticks })
}

fn parse_track(data: &[u8], base_offset: usize) -> Result<(Vec<TrackEvent>, Vec<TempoChange>, u64)> {
    let mut r = Reader::new(data);
    let mut events = Vec::new();
    let mut tempos = Vec::new();
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;
    let at = |r: &Reader, msg: String| Error::Midi { offset: base_offset + r.pos, message: msg };

    while r.remaining() > 0 {
        tick += r.vlq()? as u64;
        let first = r.u8()?;
        let status = if first & 0x80 != 0 {
            first
        } else {
            // running status: reuse previous channel status, re-consume byte
            r.pos -= 1;
            running_status.ok_or_else(|| at(&r, "data byte without running status".into()))?
        };

        match status {
            0x80..=0xEF => {
                running_status = Some(status);
                let kind = status & 0xF0;
                let channel = status & 0x0F;
                let d1 = data_byte(&mut r, base_offset)?;
                match kind {
                    0xC0 | 0xD0 => {} // program change / channel pressure: one data byte
                    _ => {
                        let d2 = data_byte(&mut r, base_offset)?;
                        match kind {
                            0x90 => events.push(TrackEvent {
                                tick,
                                channel,
                                pitch: d1,
                                velocity: d2,
                                on: d2 > 0, // velocity 0 means note-off
                            }),
                            0x80 => events.push(TrackEvent {
                                tick,
                                channel,
                                pitch: d1,
                                velocity: d2,
                                on: false,
                            }),
                            _ => {}
                        }
                    }
                }
            }
            0xFF => {
                // running status survives meta events
                let meta_type = r.u8()?;
                let len = r.vlq()? as usize;
                let payload = r.take(len)?;
                match meta_type {
                    0x51 => {
                        if len != 3 {
                            return Err(at(&r, format!("tempo meta event with length {len}")));
                        }
                        let us = u32::from_be_bytes([0, payload[0], payload[1], payload[2]]);
                        if us == 0 {
                            return Err(at(&r, "tempo of 0 microseconds per quarter".into()));
                        }
                        tempos.push(TempoChange { tick, us_per_quarter: us });
                    }
                    0x2F => return Ok((events, tempos, tick)),
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running_status = None;
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            _ => return Err(at(&r, format!("unexpected status byte 0x{status:02X}"))),
        }
    }
    // no explicit end-of-track meta; tolerate and use the last tick
    Ok((events, tempos, tick))
}

fn data_byte(r: &mut Reader, base_offset: usize) -> Result<u8> {
    let b = r.u8()?;
    if b & 0x80 != 0 {
        return Err(Error::Midi {
            offset: base_offset + r.pos - 1,
            message: format!("expected data byte, got 0x{b:02X}"),
        });
    }
    Ok(b)
}

/// Piecewise-linear tick-to-seconds conversion table.
#[derive(Debug, Clone)]
pub struct TickClock {
    ppq: f64,
    // (start_tick, start_time_s, us_per_quarter)
    segments: Vec<(u64, f64, u32)>,
}

impl TickClock {
    pub fn new(ppq: u16, tempo_map: &[TempoChange]) -> Self {
        let mut segments = Vec::with_capacity(tempo_map.len().max(1));
        let mut time = 0.0;
        let mut prev: Option<(u64, u32)> = None;
        for change in tempo_map {
            if let Some((ptick, pus)) = prev {
                time += (change.tick - ptick) as f64 * pus as f64 / (ppq as f64 * 1e6);
            }
            segments.push((change.tick, time, change.us_per_quarter));
            prev = Some((change.tick, change.us_per_quarter));
        }
        if segments.is_empty() {
            segments.push((0, 0.0, DEFAULT_TEMPO_US_PER_QUARTER));
        }
        TickClock { ppq: ppq as f64, segments }
    }

    pub fn seconds_at(&self, tick: u64) -> f64 {
        let idx = match self.segments.binary_search_by_key(&tick, |s| s.0) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let (start_tick, start_time, us) = self.segments[idx];
        start_time + tick.saturating_sub(start_tick) as f64 * us as f64 / (self.ppq * 1e6)
    }
}

/// Conversion outcome: the notes plus a count of dangling events (unmatched
/// note-offs, or note-ons closed at end of track).
#[derive(Debug, Clone)]
pub struct ConvertedNotes {
    pub notes: NoteEventList,
    pub dangling_events: usize,
}

/// Pair note-on/note-off events (FIFO per channel and pitch), merge format-1
/// tracks by absolute tick, and convert ticks to seconds through the tempo
/// map. Unmatched note-ons are closed at end of track.
pub fn smf_to_notes(doc: &SmfDocument) -> Result<ConvertedNotes> {
    let clock = TickClock::new(doc.ppq, &doc.tempo_map);
    let mut merged: Vec<TrackEvent> = doc.tracks.iter().flatten().copied().collect();
    merged.sort_by_key(|e| e.tick);

    let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();
    let mut dangling = 0usize;
    let mut notes = Vec::new();
    for event in &merged {
        let key = (event.channel, event.pitch);
        if event.on {
            open.entry(key).or_default().push_back((event.tick, event.velocity));
        } else {
            match open.get_mut(&key).and_then(|q| q.pop_front()) {
                Some((onset_tick, velocity)) => {
                    if event.tick > onset_tick {
                        notes.push(NoteEvent {
                            pitch: event.pitch,
                            onset_s: clock.seconds_at(onset_tick),
                            offset_s: clock.seconds_at(event.tick),
                            velocity: velocity.max(1),
                        });
                    } else {
                        dangling += 1; // zero-length note
                    }
                }
                None => dangling += 1, // note-off without a matching on
            }
        }
    }

    let end_tick = doc.end_ticks.iter().copied().max().unwrap_or(0);
    for ((_, pitch), queue) in open.iter() {
        for &(onset_tick, velocity) in queue {
            dangling += 1;
            if end_tick > onset_tick {
                notes.push(NoteEvent {
                    pitch: *pitch,
                    onset_s: clock.seconds_at(onset_tick),
                    offset_s: clock.seconds_at(end_tick),
                    velocity: velocity.max(1),
                });
            }
        }
    }

    Ok(ConvertedNotes { notes: NoteEventList::new(notes)?, dangling_events: dangling })
}

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut stack = [0u8; 4];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        value >>= 7;
        n += 1;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let mut b = stack[i];
        if i > 0 {
            b |= 0x80;
        }
        out.push(b);
    }
}

/// Write a single-tempo format-0 file on channel 0. Times are quantized to
/// the nearest tick (offsets forced at least one tick after onsets), so a
/// parse round trip recovers pitches exactly and times within half a tick.
pub fn write_smf(notes: &NoteEventList, ppq: u16, tempo_us_per_quarter: u32) -> Result<Vec<u8>> {
    if ppq == 0 || ppq & 0x8000 != 0 {
        return Err(Error::Invalid(format!("ppq must be in 1..=32767, got {ppq}")));
    }
    if tempo_us_per_quarter == 0 {
        return Err(Error::Invalid("tempo must be positive".into()));
    }
    let ticks_per_second = ppq as f64 * 1e6 / tempo_us_per_quarter as f64;

    // (tick, order: off before on at equal ticks, pitch, velocity, on)
    let mut events: Vec<(u64, u8, u8, u8, bool)> = Vec::with_capacity(notes.len() * 2);
    for note in notes.notes() {
        let onset_tick = (note.onset_s * ticks_per_second).round() as u64;
        let offset_tick = ((note.offset_s * ticks_per_second).round() as u64).max(onset_tick + 1);
        events.push((onset_tick, 1, note.pitch, note.velocity.clamp(1, 127), true));
        events.push((offset_tick, 0, note.pitch, 64, false));
    }
    events.sort_by_key(|&(tick, order, pitch, _, _)| (tick, order, pitch));

    let mut track = Vec::new();
    // tempo meta at tick 0
    track.push(0);
    track.extend_from_slice(&[0xFF, 0x51, 0x03]);
    track.extend_from_slice(&tempo_us_per_quarter.to_be_bytes()[1..]);

    let mut last_tick = 0u64;
    for &(tick, _, pitch, velocity, on) in &events {
        push_vlq(&mut track, (tick - last_tick) as u32);
        last_tick = tick;
        if on {
            track.extend_from_slice(&[0x90, pitch, velocity]);
        } else {
            track.extend_from_slice(&[0x80, pitch, 64]);
        }
    }
    // end of track
    track.push(0);
    track.extend_from_slice(&[0xFF, 0x2F, 0x00]);

    let mut out = Vec::with_capacity(14 + 8 + track.len());
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes()); // format 0
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&ppq.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    Ok(out)
}
