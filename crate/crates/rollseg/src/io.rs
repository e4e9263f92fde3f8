//! File formats: activity and pianoroll CSV (one pitch row per line, frames
//! as columns), per-pitch parameter and transition CSV, dataset manifests,
//! and evaluation report emission. Lines starting with `#` are comments and
//! are skipped on load; writers can prepend a provenance header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::EvaluationReport;
use crate::hmm::{HmmParamSet, PitchHmmParams};
use crate::model::{
    ActivityMatrix, FrameGrid, PianoRoll, DEFAULT_FLOOR_DB, DEFAULT_FRAME_PERIOD_S,
    DEFAULT_PITCH_OFFSET,
};
use crate::optim::RocPoint;

/// Provenance header written as `#` comment lines at the top of every output
/// file.
#[derive(Debug, Clone, Default)]
pub struct FileHeader {
    pub tool_version: String,
    pub command_line: String,
    pub seed: Option<u64>,
}

impl FileHeader {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.tool_version.is_empty() && self.command_line.is_empty() && self.seed.is_none() {
            return s;
        }
        let _ = writeln!(s, "# rollseg {}", self.tool_version);
        if !self.command_line.is_empty() {
            let _ = writeln!(s, "# command: {}", self.command_line);
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        s
    }
}

/// Options for loading activity CSV files.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Replacement for `-inf` tokens.
    pub floor_db: f64,
    pub pitch_offset: u8,
    pub frame_period_s: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            floor_db: DEFAULT_FLOOR_DB,
            pitch_offset: DEFAULT_PITCH_OFFSET,
            frame_period_s: DEFAULT_FRAME_PERIOD_S,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Load a log-activity CSV: one pitch row per line (ascending pitch),
/// comma-separated decimal values; the literal token `-inf` maps to
/// `floor_db`. No normalization is applied.
pub fn load_activity_csv(path: &Path, options: &LoadOptions) -> Result<ActivityMatrix> {
    let content = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<(usize, usize)> = None; // (frames, first line no)
    for (row_index, (line_no, line)) in data_lines(&content).enumerate() {
        let mut row = Vec::new();
        for (col, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let value = if cell == "-inf" {
                options.floor_db
            } else {
                cell.parse::<f64>().map_err(|_| {
                    Error::format(
                        path,
                        Some(line_no),
                        format!("non-numeric token {cell:?} at row {}, column {}", row_index + 1, col + 1),
                    )
                })?
            };
            if !value.is_finite() {
                return Err(Error::format(
                    path,
                    Some(line_no),
                    format!("non-finite value at row {}, column {}", row_index + 1, col + 1),
                ));
            }
            row.push(value);
        }
        if let Some((w, _)) = width {
            if row.len() != w {
                return Err(Error::format(
                    path,
                    Some(line_no),
                    format!("ragged row {}: {} values, expected {w}", row_index + 1, row.len()),
                ));
            }
        } else {
            width = Some((row.len(), line_no));
        }
        rows.push(row);
    }
    let (num_frames, _) = width.ok_or_else(|| Error::format(path, None, "empty activity file"))?;
    let grid = FrameGrid::new(options.frame_period_s, num_frames)?;
    ActivityMatrix::from_rows(rows, options.pitch_offset, grid)
}

/// Write an activity matrix; values use Rust's shortest exact decimal form,
/// so a reload reproduces them bit-exactly.
pub fn save_activity_csv(path: &Path, matrix: &ActivityMatrix, header: Option<&FileHeader>) -> Result<()> {
    let mut out = header.map(FileHeader::render).unwrap_or_default();
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load a binary pianoroll CSV (same layout as activity, cells 0/1).
pub fn load_pianoroll_csv(path: &Path, options: &LoadOptions) -> Result<PianoRoll> {
    let content = read_to_string(path)?;
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut width: Option<usize> = None;
    for (row_index, (line_no, line)) in data_lines(&content).enumerate() {
        let mut row = Vec::new();
        for (col, cell) in line.split(',').enumerate() {
            match cell.trim() {
                "0" => row.push(0u8),
                "1" => row.push(1u8),
                other => {
                    return Err(Error::format(
                        path,
                        Some(line_no),
                        format!("pianoroll cell must be 0 or 1, got {other:?} at row {}, column {}", row_index + 1, col + 1),
                    ))
                }
            }
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::format(
                    path,
                    Some(line_no),
                    format!("ragged row {}: {} values, expected {w}", row_index + 1, row.len()),
                ));
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    let num_frames = width.ok_or_else(|| Error::format(path, None, "empty pianoroll file"))?;
    let grid = FrameGrid::new(options.frame_period_s, num_frames)?;
    PianoRoll::from_rows(rows, options.pitch_offset, grid)
}

pub fn save_pianoroll_csv(path: &Path, roll: &PianoRoll, header: Option<&FileHeader>) -> Result<()> {
    let mut out = header.map(FileHeader::render).unwrap_or_default();
    for row in roll.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Trained parameter CSV: `pitch,tau0,tau1,alpha,beta`, one row per pitch.
pub fn save_params_csv(
    path: &Path,
    params: &HmmParamSet,
    pitch_offset: u8,
    header: Option<&FileHeader>,
) -> Result<()> {
    let mut out = header.map(FileHeader::render).unwrap_or_default();
    out.push_str("pitch,tau0,tau1,alpha,beta\n");
    for (i, p) in params.per_pitch.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            pitch_offset as usize + i,
            p.tau0,
            p.tau1,
            p.alpha,
            p.beta
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_params_csv(path: &Path) -> Result<HmmParamSet> {
    let content = read_to_string(path)?;
    let mut per_pitch = Vec::new();
    for (line_no, line) in data_lines(&content) {
        if line.starts_with("pitch,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::format(path, Some(line_no), format!("expected 5 fields, got {}", fields.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::format(path, Some(line_no), format!("non-numeric field {s:?}")))
        };
        per_pitch.push(PitchHmmParams::new(
            parse(fields[1])?,
            parse(fields[2])?,
            parse(fields[3])?,
            parse(fields[4])?,
        )?);
    }
    if per_pitch.is_empty() {
        return Err(Error::format(path, None, "parameter file has no rows"));
    }
    Ok(HmmParamSet { per_pitch })
}

/// Transition CSV: `pitch,tau0,tau1`, one row per pitch.
pub fn save_transitions_csv(
    path: &Path,
    transitions: &[(f64, f64)],
    pitch_offset: u8,
    header: Option<&FileHeader>,
) -> Result<()> {
    let mut out = header.map(FileHeader::render).unwrap_or_default();
    out.push_str("pitch,tau0,tau1\n");
    for (i, (t0, t1)) in transitions.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", pitch_offset as usize + i, t0, t1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_transitions_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let content = read_to_string(path)?;
    let mut out = Vec::new();
    for (line_no, line) in data_lines(&content) {
        if line.starts_with("pitch,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::format(path, Some(line_no), format!("expected 3 fields, got {}", fields.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::format(path, Some(line_no), format!("non-numeric field {s:?}")))
        };
        out.push((parse(fields[1])?, parse(fields[2])?));
    }
    if out.is_empty() {
        return Err(Error::format(path, None, "transition file has no rows"));
    }
    Ok(out)
}

/// Ground-truth encoding named by a manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthKind {
    Smf,
    PianorollCsv,
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub id: String,
    pub activity_path: PathBuf,
    pub groundtruth_path: PathBuf,
    pub kind: GroundTruthKind,
}

/// Dataset manifest: CSV lines `id,activity_path,groundtruth_path,kind` with
/// kind `smf` or `pianoroll-csv`; an optional `# dataset: <label>` comment
/// names the dataset. Relative paths resolve against the manifest location.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub label: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let content = read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut label = None;
    for line in content.lines() {
        if let Some(rest) = line.trim().strip_prefix("# dataset:") {
            label = Some(rest.trim().to_string());
        }
    }
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (line_no, line) in data_lines(&content) {
        if line.starts_with("id,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::format(
                path,
                Some(line_no),
                format!("expected `id,activity,groundtruth,kind`, got {} fields", fields.len()),
            ));
        }
        let kind = match fields[3] {
            "smf" => GroundTruthKind::Smf,
            "pianoroll-csv" => GroundTruthKind::PianorollCsv,
            other => {
                return Err(Error::format(
                    path,
                    Some(line_no),
                    format!("unknown ground-truth kind {other:?} (expected smf or pianoroll-csv)"),
                ))
            }
        };
        let id = fields[0].to_string();
        if entries.iter().any(|e| e.id == id) {
            return Err(Error::format(path, Some(line_no), format!("duplicate piece id {id:?}")));
        }
        let resolve = |p: &str| {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                base.join(pb)
            }
        };
        let entry = ManifestEntry {
            id,
            activity_path: resolve(fields[1]),
            groundtruth_path: resolve(fields[2]),
            kind,
        };
        for p in [&entry.activity_path, &entry.groundtruth_path] {
            if !p.exists() {
                return Err(Error::format(
                    path,
                    Some(line_no),
                    format!("referenced file {} does not exist", p.display()),
                ));
            }
        }
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(Error::format(path, None, "manifest has no entries"));
    }
    Ok(DatasetManifest { label, entries })
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest, header: Option<&FileHeader>) -> Result<()> {
    let mut out = header.map(FileHeader::render).unwrap_or_default();
    if let Some(label) = &manifest.label {
        let _ = writeln!(out, "# dataset: {label}");
    }
    out.push_str("id,activity,groundtruth,kind\n");
    for e in &manifest.entries {
        let kind = match e.kind {
            GroundTruthKind::Smf => "smf",
            GroundTruthKind::PianorollCsv => "pianoroll-csv",
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.id,
            e.activity_path.display(),
            e.groundtruth_path.display(),
            kind
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Flat per-fold CSV: `piece,fold,strategy,tp,fp,fn,tn,tpr,ppv,fmeas,acc`.
pub fn render_report_csv(reports: &[&EvaluationReport]) -> String {
    let mut out = String::from("piece,fold,strategy,tp,fp,fn,tn,tpr,ppv,fmeas,acc\n");
    for report in reports {
        for f in &report.folds {
            let c = f.counts;
            let m = f.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                f.piece_id,
                f.fold,
                report.strategy,
                c.true_pos,
                c.false_pos,
                c.false_neg,
                c.true_neg,
                m.tpr,
                m.ppv,
                m.fmeas,
                m.acc
            );
        }
    }
    out
}

/// Human-readable report: one block per fold plus the aggregate summary.
pub fn render_report_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "strategy: {}  mode: {}", report.strategy, report.mode);
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    let mut current_fold = usize::MAX;
    for f in &report.folds {
        if f.fold != current_fold {
            current_fold = f.fold;
            let _ = writeln!(out, "fold {current_fold}:");
        }
        let _ = writeln!(
            out,
            "  {}: tp={} fp={} fn={} tn={} tpr={:.4} ppv={:.4} fmeas={:.4} acc={:.4}",
            f.piece_id,
            f.counts.true_pos,
            f.counts.false_pos,
            f.counts.false_neg,
            f.counts.true_neg,
            f.metrics.tpr,
            f.metrics.ppv,
            f.metrics.fmeas,
            f.metrics.acc
        );
    }
    let _ = writeln!(
        out,
        "macro: tpr={:.4} ppv={:.4} fmeas={:.4} acc={:.4}",
        report.macro_avg.tpr, report.macro_avg.ppv, report.macro_avg.fmeas, report.macro_avg.acc
    );
    let _ = writeln!(
        out,
        "micro: tpr={:.4} ppv={:.4} fmeas={:.4} acc={:.4}",
        report.micro.tpr, report.micro.ppv, report.micro.fmeas, report.micro.acc
    );
    out
}

/// ROC table CSV: `threshold,tp,fp,tn,fn,tpr,fpr`.
pub fn render_roc_csv(table: &[RocPoint]) -> String {
    let mut out = String::from("threshold,tp,fp,tn,fn,tpr,fpr\n");
    for p in table {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.threshold,
            p.counts.true_pos,
            p.counts.false_pos,
            p.counts.true_neg,
            p.counts.false_neg,
            p.tpr(),
            p.fpr()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn activity_csv_parses_values_and_inf() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "0,-1,-2\n-3,-4,-inf\n").unwrap();
        let opts = LoadOptions { floor_db: -5.0, ..Default::default() };
        let m = load_activity_csv(&path, &opts).unwrap();
        assert_eq!(m.row(0), &[0.0, -1.0, -2.0]);
        assert_eq!(m.row(1), &[-3.0, -4.0, -5.0]);
    }

    #[test]
    fn activity_csv_single_cell() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "0\n").unwrap();
        let m = load_activity_csv(&path, &LoadOptions::default()).unwrap();
        assert_eq!(m.num_pitches(), 1);
        assert_eq!(m.row(0), &[0.0]);
    }

    #[test]
    fn activity_csv_ragged_rows_name_the_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "0,-1,-2\n-3,-4\n").unwrap();
        let err = load_activity_csv(&path, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn activity_csv_bad_token_names_coordinates() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "0,-1\n-3,oops\n").unwrap();
        let err = load_activity_csv(&path, &LoadOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn activity_csv_empty_file_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "").unwrap();
        assert!(load_activity_csv(&path, &LoadOptions::default()).is_err());
    }

    #[test]
    fn activity_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let grid = FrameGrid::new(0.01, 3).unwrap();
        let m = ActivityMatrix::from_rows(
            vec![vec![-0.123456789012345, -7.999999999, -1.0 / 3.0]],
            21,
            grid,
        )
        .unwrap();
        save_activity_csv(&path, &m, None).unwrap();
        let loaded = load_activity_csv(&path, &LoadOptions::default()).unwrap();
        assert_eq!(loaded.row(0), m.row(0));
    }

    #[test]
    fn pianoroll_round_trip_with_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let grid = FrameGrid::new(0.01, 4).unwrap();
        let roll = PianoRoll::from_rows(vec![vec![0, 1, 1, 0], vec![1, 0, 0, 1]], 21, grid).unwrap();
        let header = FileHeader {
            tool_version: "0.1.0".into(),
            command_line: "test".into(),
            seed: Some(7),
        };
        save_pianoroll_csv(&path, &roll, Some(&header)).unwrap();
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.starts_with("# rollseg 0.1.0"));
        assert!(content.contains("# seed: 7"));
        let loaded = load_pianoroll_csv(&path, &LoadOptions::default()).unwrap();
        assert_eq!(loaded.row(0), roll.row(0));
        assert_eq!(loaded.row(1), roll.row(1));
    }

    #[test]
    fn params_csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let set = HmmParamSet {
            per_pitch: vec![
                PitchHmmParams::new(0.0123456789012, 0.05, 1.25, -2.75).unwrap(),
                PitchHmmParams::new(0.2, 0.3, -0.5, -1.5).unwrap(),
            ],
        };
        save_params_csv(&path, &set, 21, None).unwrap();
        let loaded = load_params_csv(&path).unwrap();
        assert_eq!(loaded, set);
    }

    #[test]
    fn manifest_load_and_validation() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "0,-1\n").unwrap();
        fs::write(dir.path().join("t.csv"), "1,0\n").unwrap();
        let path = dir.path().join("manifest.csv");
        fs::write(
            &path,
            "# dataset: baseline\nid,activity,groundtruth,kind\npiece1,a.csv,t.csv,pianoroll-csv\n",
        )
        .unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.label.as_deref(), Some("baseline"));
        assert_eq!(m.entries.len(), 1);
        assert!(m.entries[0].activity_path.ends_with("a.csv"));

        // duplicate ids rejected
        fs::write(
            &path,
            "piece1,a.csv,t.csv,pianoroll-csv\npiece1,a.csv,t.csv,pianoroll-csv\n",
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());

        // missing file rejected
        fs::write(&path, "piece1,missing.csv,t.csv,pianoroll-csv\n").unwrap();
        assert!(load_manifest(&path).is_err());
    }
}
