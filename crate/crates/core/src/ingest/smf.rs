//! A hand-rolled parser for the Standard MIDI File subset this crate
//! ingests: format 0 or 1, metrical division, at most two note-bearing
//! tracks. The parser is total — any byte sequence yields either a Score
//! or a typed error — and every loop consumes input, so fuzzed files
//! cannot hang it.
//!
//! Only what the feature extractors need survives: note on/off pairs
//! (velocity-0 on = off), the key signature meta event, and the time
//! signature for `beats_per_bar`. Everything else (tempo, controllers,
//! sysex, unknown chunks) is skipped chunk-accurately.

use crate::ingest::{ParseDiagnostics, SourceFormat};
use crate::score::{
    Beat, KeySignature, Mode, NoteEvent, Pitch, PitchClass, Score, Voice,
};

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum SmfError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format {0}")]
    UnsupportedFormat(u16),
    #[error("division is zero")]
    ZeroDivision,
    #[error("SMPTE division is not supported")]
    SmpteDivision,
    #[error("track {track}: truncated at byte {offset}")]
    TruncatedTrack { track: usize, offset: usize },
    #[error("track {track} at byte {offset}: {message}")]
    MalformedTrack { track: usize, offset: usize, message: String },
    #[error("track {track}: note-on pitch {pitch} at tick {tick} never ends")]
    DanglingNoteOn { track: usize, pitch: u8, tick: u64 },
    #[error("more than {max} note-bearing tracks", max = MAX_NOTE_TRACKS)]
    TooManyNoteTracks,
}

const MAX_NOTE_TRACKS: usize = 2;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Reader<'a> {
        Reader { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn u16(&mut self) -> Option<u16> {
        let hi = self.u8()? as u16;
        Some(hi << 8 | self.u8()? as u16)
    }

    fn u32(&mut self) -> Option<u32> {
        let hi = self.u16()? as u32;
        Some(hi << 16 | self.u16()? as u32)
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(slice)
    }

    /// Variable-length quantity: up to 4 bytes, 7 data bits each.
    fn varint(&mut self) -> Option<u32> {
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = value << 7 | (b & 0x7F) as u32;
            if b & 0x80 == 0 {
                return Some(value);
            }
        }
        None
    }
}

/// Notes gathered from one track, with the meta state they carried.
#[derive(Default)]
struct TrackNotes {
    notes: Vec<(u64, u64, u8)>,
}

struct MetaState {
    key: Option<KeySignature>,
    beats_per_bar: Option<u32>,
}

fn parse_track(
    track_index: usize,
    data: &[u8],
    chunk_offset: usize,
    meta: &mut MetaState,
    diags: &mut ParseDiagnostics,
) -> Result<TrackNotes, SmfError> {
    let mut r = Reader::new(data);
    let at = |r: &Reader| chunk_offset + r.pos;
    let truncated =
        |r: &Reader| SmfError::TruncatedTrack { track: track_index, offset: chunk_offset + r.pos };
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;
    // Currently sounding note per pitch: start tick.
    let mut open: [Option<u64>; 128] = [None; 128];
    let mut out = TrackNotes::default();

    let close = |open: &mut [Option<u64>; 128],
                     out: &mut TrackNotes,
                     diags: &mut ParseDiagnostics,
                     pitch: u8,
                     end_tick: u64,
                     location: usize| {
        match open[pitch as usize].take() {
            Some(start) if start == end_tick => diags.warn(
                format!("byte {location}"),
                format!("zero-duration note (pitch {pitch}) dropped"),
            ),
            Some(start) => out.notes.push((start, end_tick, pitch)),
            None => diags.warn(
                format!("byte {location}"),
                format!("note-off for silent pitch {pitch} ignored"),
            ),
        }
    };

    while r.remaining() > 0 {
        let delta = r.varint().ok_or_else(|| truncated(&r))?;
        tick += delta as u64;
        let first = r.u8().ok_or_else(|| truncated(&r))?;
        let status = if first & 0x80 != 0 {
            if first < 0xF0 {
                running_status = Some(first);
            }
            first
        } else {
            // Data byte in status position: running status must be active.
            r.pos -= 1;
            running_status.ok_or_else(|| SmfError::MalformedTrack {
                track: track_index,
                offset: at(&r),
                message: format!("data byte {first:#04x} with no running status"),
            })?
        };

        match status & 0xF0 {
            0x80 | 0x90 | 0xA0 | 0xB0 | 0xE0 => {
                let location = at(&r);
                let a = r.u8().ok_or_else(|| truncated(&r))?;
                let b = r.u8().ok_or_else(|| truncated(&r))?;
                if a & 0x80 != 0 || b & 0x80 != 0 {
                    return Err(SmfError::MalformedTrack {
                        track: track_index,
                        offset: location,
                        message: "data byte has the high bit set".into(),
                    });
                }
                let kind = status & 0xF0;
                if kind == 0x90 && b > 0 {
                    if open[a as usize].is_some() {
                        diags.warn(
                            format!("byte {location}"),
                            format!("pitch {a} restarted while sounding; previous note closed"),
                        );
                        close(&mut open, &mut out, diags, a, tick, location);
                    }
                    open[a as usize] = Some(tick);
                } else if kind == 0x80 || kind == 0x90 {
                    close(&mut open, &mut out, diags, a, tick, location);
                }
            }
            0xC0 | 0xD0 => {
                let byte = r.u8().ok_or_else(|| truncated(&r))?;
                if byte & 0x80 != 0 {
                    return Err(SmfError::MalformedTrack {
                        track: track_index,
                        offset: at(&r) - 1,
                        message: "data byte has the high bit set".into(),
                    });
                }
            }
            0xF0 => match status {
                0xF0 | 0xF7 => {
                    running_status = None;
                    let len = r.varint().ok_or_else(|| truncated(&r))? as usize;
                    r.take(len).ok_or_else(|| truncated(&r))?;
                }
                0xFF => {
                    let meta_type = r.u8().ok_or_else(|| truncated(&r))?;
                    let len = r.varint().ok_or_else(|| truncated(&r))? as usize;
                    let location = at(&r);
                    let data = r.take(len).ok_or_else(|| truncated(&r))?;
                    match meta_type {
                        0x2F => {
                            // End of track: everything still sounding dangles.
                            if let Some(pitch) = open.iter().position(Option::is_some) {
                                return Err(SmfError::DanglingNoteOn {
                                    track: track_index,
                                    pitch: pitch as u8,
                                    tick: open[pitch].unwrap(),
                                });
                            }
                            return Ok(out);
                        }
                        0x59 if data.len() == 2 => {
                            let sharps = data[0] as i8 as i32;
                            let minor = data[1] == 1;
                            let major_tonic = (sharps * 7).rem_euclid(12) as u8;
                            let tonic = if minor { (major_tonic + 9) % 12 } else { major_tonic };
                            meta.key = Some(KeySignature::new(
                                PitchClass::new(tonic).expect("mod 12"),
                                if minor { Mode::Minor } else { Mode::Major },
                            ));
                        }
                        0x59 => diags.warn(
                            format!("byte {location}"),
                            format!("key signature meta of length {len} ignored"),
                        ),
                        0x58 if data.len() == 4 => {
                            // nn beats of size 4/2^dd quarters per bar.
                            let nn = data[0] as u32;
                            let quarters = nn * 4 >> data[1].min(31);
                            meta.beats_per_bar = Some(quarters.max(1));
                        }
                        _ => {}
                    }
                }
                other => {
                    return Err(SmfError::MalformedTrack {
                        track: track_index,
                        offset: at(&r) - 1,
                        message: format!("unexpected status byte {other:#04x}"),
                    });
                }
            },
            _ => unreachable!("status bytes always have the high bit set"),
        }
    }
    // Ran off the end without an end-of-track meta.
    if let Some(pitch) = open.iter().position(Option::is_some) {
        return Err(SmfError::DanglingNoteOn {
            track: track_index,
            pitch: pitch as u8,
            tick: open[pitch].unwrap(),
        });
    }
    diags.warn(
        format!("byte {}", chunk_offset + data.len()),
        format!("track {track_index} has no end-of-track meta"),
    );
    Ok(out)
}

/// Parse a Standard MIDI File into a Score.
///
/// The first note-bearing track becomes the melody voice, the second the
/// accompaniment. Chord annotations cannot be represented in SMF, so the
/// chord list is empty and a warning points at the sidecar mechanism.
pub fn parse_smf(bytes: &[u8]) -> Result<(Score, ParseDiagnostics), SmfError> {
    let mut diags = ParseDiagnostics::new(SourceFormat::Smf);
    let mut r = Reader::new(bytes);
    let magic = r.take(4).ok_or_else(|| SmfError::MalformedHeader("too short".into()))?;
    if magic != b"MThd" {
        return Err(SmfError::MalformedHeader("missing MThd chunk".into()));
    }
    let header_len = r.u32().ok_or_else(|| SmfError::MalformedHeader("too short".into()))?;
    if header_len < 6 {
        return Err(SmfError::MalformedHeader(format!("header length {header_len} < 6")));
    }
    let format = r.u16().ok_or_else(|| SmfError::MalformedHeader("too short".into()))?;
    if format > 1 {
        return Err(SmfError::UnsupportedFormat(format));
    }
    let declared_tracks =
        r.u16().ok_or_else(|| SmfError::MalformedHeader("too short".into()))?;
    let division = r.u16().ok_or_else(|| SmfError::MalformedHeader("too short".into()))?;
    if division == 0 {
        return Err(SmfError::ZeroDivision);
    }
    if division & 0x8000 != 0 {
        return Err(SmfError::SmpteDivision);
    }
    r.take(header_len as usize - 6)
        .ok_or_else(|| SmfError::MalformedHeader("header shorter than declared".into()))?;

    let mut meta = MetaState { key: None, beats_per_bar: None };
    let mut tracks: Vec<TrackNotes> = Vec::new();
    while r.remaining() > 0 {
        if r.remaining() < 8 {
            return Err(SmfError::TruncatedTrack { track: tracks.len(), offset: r.pos });
        }
        let chunk_type: [u8; 4] = r.take(4).unwrap().try_into().unwrap();
        let chunk_len = r.u32().unwrap() as usize;
        let chunk_offset = r.pos;
        let data = r
            .take(chunk_len)
            .ok_or(SmfError::TruncatedTrack { track: tracks.len(), offset: r.pos })?;
        if &chunk_type == b"MTrk" {
            tracks.push(parse_track(tracks.len(), data, chunk_offset, &mut meta, &mut diags)?);
        } else {
            diags.warn(
                format!("byte {chunk_offset}"),
                format!(
                    "skipping unknown chunk '{}'",
                    chunk_type.iter().map(|&b| b as char).collect::<String>()
                ),
            );
        }
    }
    if tracks.len() != declared_tracks as usize {
        diags.warn(
            "header".to_string(),
            format!("header declares {declared_tracks} tracks, found {}", tracks.len()),
        );
    }

    let note_tracks: Vec<&TrackNotes> = tracks.iter().filter(|t| !t.notes.is_empty()).collect();
    if note_tracks.len() > MAX_NOTE_TRACKS {
        return Err(SmfError::TooManyNoteTracks);
    }
    let key = meta.key.unwrap_or_else(|| {
        diags.warn("file".to_string(), "no key signature; assuming C major");
        KeySignature::c_major()
    });
    let beats_per_bar = meta.beats_per_bar.unwrap_or(4);

    let mut notes = Vec::new();
    for (i, track) in note_tracks.iter().enumerate() {
        let voice = if i == 0 { Voice::Melody } else { Voice::Accompaniment };
        for &(start, end, pitch) in &track.notes {
            notes.push(NoteEvent {
                onset: Beat::new(start as i64, division as i64),
                duration: Beat::new((end - start) as i64, division as i64),
                pitch: Pitch::new(pitch).expect("7-bit data byte"),
                voice,
            });
        }
    }
    diags.warn(
        "file".to_string(),
        "SMF carries no chord annotations; provide a .chords.json sidecar",
    );
    Ok((Score::new("", key, beats_per_bar, notes, Vec::new(), None), diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::beat;
    use proptest::prelude::*;

    /// Build a file from raw track byte bodies.
    fn file(format: u16, division: u16, tracks: &[Vec<u8>]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"MThd");
        bytes.extend_from_slice(&6u32.to_be_bytes());
        bytes.extend_from_slice(&format.to_be_bytes());
        bytes.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
        bytes.extend_from_slice(&division.to_be_bytes());
        for track in tracks {
            bytes.extend_from_slice(b"MTrk");
            bytes.extend_from_slice(&(track.len() as u32).to_be_bytes());
            bytes.extend_from_slice(track);
        }
        bytes
    }

    const END: &[u8] = &[0x00, 0xFF, 0x2F, 0x00];

    #[test]
    fn minimal_note_parses() {
        let mut track = vec![0x00, 0x90, 60, 100, 0x83, 0x60, 0x80, 60, 64];
        track.extend_from_slice(END);
        let (score, diags) = parse_smf(&file(0, 480, &[track])).unwrap();
        assert_eq!(score.notes.len(), 1);
        assert_eq!(score.notes[0].onset, beat(0, 1));
        assert_eq!(score.notes[0].duration, beat(1, 1));
        assert_eq!(score.notes[0].pitch.midi(), 60);
        assert_eq!(score.notes[0].voice, Voice::Melody);
        assert!(score.chords.is_empty());
        assert!(diags
            .warnings
            .iter()
            .any(|(_, m)| m.contains("no key signature")));
        assert!(diags.warnings.iter().any(|(_, m)| m.contains("sidecar")));
    }

    #[test]
    fn velocity_zero_acts_as_note_off() {
        let mut explicit = vec![0x00, 0x90, 60, 100, 0x83, 0x60, 0x80, 60, 64];
        explicit.extend_from_slice(END);
        let mut implicit = vec![0x00, 0x90, 60, 100, 0x83, 0x60, 0x90, 60, 0];
        implicit.extend_from_slice(END);
        let (a, _) = parse_smf(&file(0, 480, &[explicit])).unwrap();
        let (b, _) = parse_smf(&file(0, 480, &[implicit])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn running_status_is_honored() {
        // One status byte, three notes back to back.
        let mut track = vec![0x00, 0x90, 60, 100];
        track.extend_from_slice(&[0x60, 60, 0]); // delta 96, off via vel 0
        track.extend_from_slice(&[0x00, 64, 100, 0x60, 64, 0]);
        track.extend_from_slice(&[0x00, 67, 100, 0x60, 67, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.notes.len(), 3);
        let pitches: Vec<u8> = score.notes.iter().map(|n| n.pitch.midi()).collect();
        assert_eq!(pitches, vec![60, 64, 67]);
        assert!(score.notes.iter().all(|n| n.duration == beat(1, 1)));
    }

    #[test]
    fn ticks_convert_to_exact_rationals() {
        let mut track = vec![0x00, 0x90, 72, 100];
        // 720 ticks at division 480 = 3/2 beats.
        track.extend_from_slice(&[0x85, 0x50, 0x80, 72, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 480, &[track])).unwrap();
        assert_eq!(score.notes[0].duration, beat(3, 2));
    }

    #[test]
    fn header_errors_are_typed() {
        assert!(matches!(parse_smf(b"MThx"), Err(SmfError::MalformedHeader(_))));
        assert!(matches!(parse_smf(b"MT"), Err(SmfError::MalformedHeader(_))));
        assert!(matches!(
            parse_smf(&file(2, 480, &[END.to_vec()])),
            Err(SmfError::UnsupportedFormat(2))
        ));
        assert!(matches!(parse_smf(&file(0, 0, &[END.to_vec()])), Err(SmfError::ZeroDivision)));
        assert!(matches!(
            parse_smf(&file(0, 0x8000 | 25, &[END.to_vec()])),
            Err(SmfError::SmpteDivision)
        ));
    }

    #[test]
    fn dangling_note_on_is_an_error() {
        let mut track = vec![0x00, 0x90, 60, 100];
        track.extend_from_slice(END);
        assert!(matches!(
            parse_smf(&file(0, 480, &[track])),
            Err(SmfError::DanglingNoteOn { pitch: 60, .. })
        ));
    }

    #[test]
    fn restarted_pitch_closes_the_previous_note() {
        let mut track = vec![0x00, 0x90, 60, 100];
        track.extend_from_slice(&[0x60, 0x90, 60, 100]); // restart at tick 96
        track.extend_from_slice(&[0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, diags) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.notes.len(), 2);
        assert!(diags.warnings.iter().any(|(_, m)| m.contains("restarted")));
    }

    #[test]
    fn zero_duration_notes_are_dropped_with_a_warning() {
        let mut track = vec![0x00, 0x90, 60, 100, 0x00, 0x80, 60, 0];
        track.extend_from_slice(END);
        let (score, diags) = parse_smf(&file(0, 480, &[track])).unwrap();
        assert!(score.notes.is_empty());
        assert!(diags.warnings.iter().any(|(_, m)| m.contains("zero-duration")));
    }

    #[test]
    fn second_note_track_is_the_accompaniment_and_a_third_errors() {
        let note = |pitch: u8| {
            let mut t = vec![0x00, 0x90, pitch, 100, 0x60, 0x80, pitch, 0];
            t.extend_from_slice(END);
            t
        };
        let (score, _) = parse_smf(&file(1, 96, &[note(72), note(48)])).unwrap();
        let voices: Vec<Voice> = score.notes.iter().map(|n| n.voice).collect();
        assert_eq!(voices, vec![Voice::Accompaniment, Voice::Melody]);

        assert!(matches!(
            parse_smf(&file(1, 96, &[note(72), note(48), note(36)])),
            Err(SmfError::TooManyNoteTracks)
        ));
    }

    #[test]
    fn key_signature_meta_sets_the_key() {
        let mut track = vec![0x00, 0xFF, 0x59, 0x02, 0x01, 0x00]; // 1 sharp, major
        track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, diags) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.key.tonic.value(), 7, "G major");
        assert_eq!(score.key.mode, Mode::Major);
        assert!(!diags.warnings.iter().any(|(_, m)| m.contains("no key signature")));

        let mut track = vec![0x00, 0xFF, 0x59, 0x02, 0x00, 0x01]; // no accidentals, minor
        track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.key.tonic.value(), 9, "A minor");
        assert_eq!(score.key.mode, Mode::Minor);

        let mut track = vec![0x00, 0xFF, 0x59, 0x02, 0xFD, 0x00]; // 3 flats -> E flat
        track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.key.tonic.value(), 3, "E-flat major");
    }

    #[test]
    fn time_signature_meta_sets_beats_per_bar() {
        let mut track = vec![0x00, 0xFF, 0x58, 0x04, 0x03, 0x02, 24, 8]; // 3/4
        track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.beats_per_bar, 3);

        let mut track = vec![0x00, 0xFF, 0x58, 0x04, 0x06, 0x03, 24, 8]; // 6/8
        track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
        track.extend_from_slice(END);
        let (score, _) = parse_smf(&file(0, 96, &[track])).unwrap();
        assert_eq!(score.beats_per_bar, 3, "6 eighths = 3 quarters");
    }

    #[test]
    fn truncation_and_junk_are_typed_errors() {
        let mut track = vec![0x00, 0x90, 60];
        track.extend_from_slice(END);
        let full = file(0, 480, &[track]);
        // Mid-header, mid-chunk-header, and mid-track cuts all fail typed.
        for cut in [3, 10, 18, full.len() - 2] {
            match parse_smf(&full[..cut]) {
                Err(_) => {}
                Ok(_) => panic!("truncated file at {cut} parsed"),
            }
        }
        // A clean cut right after the header is a zero-track file: empty
        // score, with the declared-track mismatch surfaced as a warning.
        let (score, diags) = parse_smf(&full[..14]).unwrap();
        assert!(score.notes.is_empty());
        assert!(diags.warnings.iter().any(|(_, m)| m.contains("declares 1 tracks")));
        // Status byte never seen and no running status.
        let track = vec![0x00, 0x3C, 0x40];
        assert!(matches!(
            parse_smf(&file(0, 480, &[track])),
            Err(SmfError::MalformedTrack { .. })
        ));
        // Varint longer than 4 bytes.
        let track = vec![0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0x00];
        assert!(parse_smf(&file(0, 480, &[track])).is_err());
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let mut track = vec![0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0];
        track.extend_from_slice(END);
        let mut bytes = file(0, 96, &[track]);
        // Splice an alien chunk between header and track.
        let mut alien = b"XFIH".to_vec();
        alien.extend_from_slice(&2u32.to_be_bytes());
        alien.extend_from_slice(&[1, 2]);
        bytes.splice(14..14, alien);
        let (score, diags) = parse_smf(&bytes).unwrap();
        assert_eq!(score.notes.len(), 1);
        assert!(diags.warnings.iter().any(|(_, m)| m.contains("unknown chunk")));
    }

    proptest! {
        #[test]
        fn parser_is_total_on_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..600)) {
            let _ = parse_smf(&bytes);
        }

        #[test]
        fn parser_is_total_on_mutated_valid_files(
            flips in prop::collection::vec((0usize..60, any::<u8>()), 1..8)
        ) {
            let mut track = vec![0x00, 0xFF, 0x59, 0x02, 0x01, 0x00];
            track.extend_from_slice(&[0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0]);
            track.extend_from_slice(&[0x00, 0x90, 64, 100, 0x60, 0x80, 64, 0]);
            track.extend_from_slice(END);
            let mut bytes = file(0, 96, &[track]);
            for (pos, value) in flips {
                let len = bytes.len();
                bytes[pos % len] = value;
            }
            let _ = parse_smf(&bytes);
        }
    }
}
