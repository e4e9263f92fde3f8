//! Ground truth via Standard MIDI Files: write a short phrase, parse it
//! back, and sample it onto the 10 ms analysis grid.

use rollseg::midi::{parse_smf, smf_to_notes, write_smf};
use rollseg::model::{sample_pianoroll, FrameGrid, NoteEvent, NoteEventList};

fn main() {
    let phrase = NoteEventList::new(vec![
        NoteEvent { pitch: 60, onset_s: 0.00, offset_s: 0.45, velocity: 96 },
        NoteEvent { pitch: 64, onset_s: 0.25, offset_s: 0.70, velocity: 80 },
        NoteEvent { pitch: 67, onset_s: 0.50, offset_s: 1.00, velocity: 80 },
        NoteEvent { pitch: 60, onset_s: 0.75, offset_s: 1.20, velocity: 96 },
    ])
    .unwrap();

    let bytes = write_smf(&phrase, 480, 500_000).unwrap();
    println!("wrote {} bytes of SMF", bytes.len());

    let doc = parse_smf(&bytes).unwrap();
    println!(
        "parsed format {} file, {} ppq, {} tempo change(s)",
        doc.format,
        doc.ppq,
        doc.tempo_map.len()
    );

    let converted = smf_to_notes(&doc).unwrap();
    for note in converted.notes.notes() {
        println!(
            "  pitch {:>3}  {:.3}s .. {:.3}s  vel {}",
            note.pitch, note.onset_s, note.offset_s, note.velocity
        );
    }

    // 88-key roll starting at A0 (MIDI 21), 10 ms frames
    let grid = FrameGrid::new(0.01, 130).unwrap();
    let sampled = sample_pianoroll(&converted.notes, grid, 21, 88);
    println!();
    for &pitch in &[60u8, 64, 67] {
        let row = sampled.roll.row((pitch - 21) as usize);
        let line: String = row.iter().map(|&q| if q == 1 { '#' } else { '.' }).collect();
        println!("{pitch:>3} {line}");
    }
}
