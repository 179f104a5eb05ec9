//! Datasets, human judgments and externally computed metric scores.
//!
//! On-disk layout of a dataset directory:
//!
//! ```text
//! <dir>/sources.txt
//! <dir>/references.txt
//! <dir>/systems/<name>.txt
//! ```
//!
//! Every file is UTF-8 with one segment per line. Judgment and score files
//! are tab-separated; lines starting with `#` are comments. Segment indices
//! are 0-based throughout the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const DA_HEADER: &str = "system\tsegment_index\tscore";
pub const RR_HEADER: &str = "segment_index\twinner\tloser";
pub const SCORES_HEADER: &str = "system\tsegment_index\tscore";

/// One test set: sources, a single reference and the outputs of every system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    sources: Vec<String>,
    references: Vec<String>,
    systems: BTreeMap<String, Vec<String>>,
}

fn check_segments(what: &str, lines: &[String]) -> Result<()> {
    match lines.iter().position(|l| l.contains(['\n', '\r'])) {
        Some(segment) => Err(Error::MultilineSegment {
            what: what.to_string(),
            segment,
        }),
        None => Ok(()),
    }
}

pub(crate) fn valid_system_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && !name.contains(['/', '\\', '\t', '\n', '\r', '\0'])
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        sources: Vec<String>,
        references: Vec<String>,
        systems: BTreeMap<String, Vec<String>>,
    ) -> Result<Self> {
        let segments = sources.len();
        if segments == 0 {
            return Err(Error::EmptyDataset);
        }
        if references.len() != segments {
            return Err(Error::LineCountMismatch {
                system: "references".into(),
                found: references.len(),
                expected: segments,
            });
        }
        check_segments("sources", &sources)?;
        check_segments("references", &references)?;
        for (name, lines) in &systems {
            if !valid_system_name(name) {
                return Err(Error::InvalidSystemName(name.clone()));
            }
            if lines.len() != segments {
                return Err(Error::LineCountMismatch {
                    system: name.clone(),
                    found: lines.len(),
                    expected: segments,
                });
            }
            check_segments(name, lines)?;
        }
        Ok(Self {
            name: name.into(),
            sources,
            references,
            systems,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn segments(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn references(&self) -> &[String] {
        &self.references
    }

    pub fn systems(&self) -> &BTreeMap<String, Vec<String>> {
        &self.systems
    }

    /// System names in canonical (lexicographic) order.
    pub fn system_names(&self) -> Vec<String> {
        self.systems.keys().cloned().collect()
    }

    pub fn has_system(&self, name: &str) -> bool {
        self.systems.contains_key(name)
    }

    pub fn system(&self, name: &str) -> Result<&[String]> {
        self.systems
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    /// A dataset with the same sources/references and a different system set.
    pub fn with_systems(&self, name: impl Into<String>, systems: BTreeMap<String, Vec<String>>) -> Result<Self> {
        Dataset::new(name, self.sources.clone(), self.references.clone(), systems)
    }

    /// Restriction to the given segment indices, in the given order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self> {
        let n = self.segments();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::SegmentOutOfRange { index, segments: n });
        }
        let pick = |lines: &[String]| indices.iter().map(|&i| lines[i].clone()).collect::<Vec<_>>();
        let systems = self
            .systems
            .iter()
            .map(|(k, v)| (k.clone(), pick(v)))
            .collect();
        Dataset::new(name, pick(&self.sources), pick(&self.references), systems)
    }

    /// Writes the canonical directory layout. Existing files are overwritten.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        let systems_dir = dir.join("systems");
        fs::create_dir_all(&systems_dir).map_err(|e| Error::io(&systems_dir, e))?;
        write_lines(&dir.join("sources.txt"), &self.sources)?;
        write_lines(&dir.join("references.txt"), &self.references)?;
        for (name, lines) in &self.systems {
            write_lines(&systems_dir.join(format!("{name}.txt")), lines)?;
        }
        Ok(())
    }
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Loads a dataset from its canonical directory layout. The dataset is named
/// after the directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let sources = read_lines(&dir.join("sources.txt"))?;
    let references = read_lines(&dir.join("references.txt"))?;
    let systems_dir = dir.join("systems");
    let entries = fs::read_dir(&systems_dir).map_err(|e| Error::io(&systems_dir, e))?;
    let mut systems = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&systems_dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") || !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        systems.insert(stem.to_string(), read_lines(&path)?);
    }
    let name = dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string());
    Dataset::new(name, sources, references, systems)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgmentKind {
    Da,
    Rr,
}

impl fmt::Display for JudgmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JudgmentKind::Da => "DA",
            JudgmentKind::Rr => "RR",
        })
    }
}

/// One relative-ranking observation: on `segment`, `winner` was preferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preference {
    pub segment: usize,
    pub winner: String,
    pub loser: String,
}

/// Human judgments attached to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum HumanJudgments {
    /// Direct assessment: per-system segment scores, higher is better.
    /// Missing segments are `None`.
    Da(BTreeMap<String, Vec<Option<f64>>>),
    /// Relative ranking: pairwise preferences.
    Rr(Vec<Preference>),
}

impl HumanJudgments {
    pub fn kind(&self) -> JudgmentKind {
        match self {
            HumanJudgments::Da(_) => JudgmentKind::Da,
            HumanJudgments::Rr(_) => JudgmentKind::Rr,
        }
    }

    /// Validated DA judgments. Systems without any scored segment are dropped,
    /// matching what the TSV form can express.
    pub fn da(mut scores: BTreeMap<String, Vec<Option<f64>>>, dataset: &Dataset) -> Result<Self> {
        for (system, v) in &scores {
            if !dataset.has_system(system) {
                return Err(Error::UnknownSystem(system.clone()));
            }
            if v.len() != dataset.segments() {
                return Err(Error::LineCountMismatch {
                    system: system.clone(),
                    found: v.len(),
                    expected: dataset.segments(),
                });
            }
            if v.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("non-finite DA score for `{system}`")));
            }
        }
        scores.retain(|_, v| v.iter().any(Option::is_some));
        Ok(HumanJudgments::Da(scores))
    }

    /// Validated RR judgments.
    pub fn rr(preferences: Vec<Preference>, dataset: &Dataset) -> Result<Self> {
        for p in &preferences {
            validate_preference(p, dataset)?;
        }
        Ok(HumanJudgments::Rr(preferences))
    }

    /// DA score vector for a system, if this is DA data and the system is judged.
    pub fn da_scores(&self, system: &str) -> Option<&[Option<f64>]> {
        match self {
            HumanJudgments::Da(m) => m.get(system).map(Vec::as_slice),
            HumanJudgments::Rr(_) => None,
        }
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        match self {
            HumanJudgments::Da(m) => {
                out.push_str(DA_HEADER);
                out.push('\n');
                for (system, v) in m {
                    for (i, s) in v.iter().enumerate() {
                        if let Some(s) = s {
                            out.push_str(&format!("{system}\t{i}\t{s}\n"));
                        }
                    }
                }
            }
            HumanJudgments::Rr(prefs) => {
                out.push_str(RR_HEADER);
                out.push('\n');
                for p in prefs {
                    out.push_str(&format!("{}\t{}\t{}\n", p.segment, p.winner, p.loser));
                }
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn validate_preference(p: &Preference, dataset: &Dataset) -> Result<()> {
    if p.segment >= dataset.segments() {
        return Err(Error::SegmentOutOfRange {
            index: p.segment,
            segments: dataset.segments(),
        });
    }
    if p.winner == p.loser {
        return Err(Error::WinnerEqualsLoser {
            segment: p.segment,
            system: p.winner.clone(),
        });
    }
    for s in [&p.winner, &p.loser] {
        if !dataset.has_system(s) {
            return Err(Error::UnknownSystem(s.clone()));
        }
    }
    Ok(())
}

/// Non-comment, non-blank rows with their 1-based line numbers.
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
}

struct RowParser<'a> {
    file: &'a str,
    row: usize,
}

impl RowParser<'_> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedRow {
            file: self.file.to_string(),
            row: self.row,
            reason: reason.into(),
        }
    }

    fn fields<'l>(&self, line: &'l str) -> Result<[&'l str; 3]> {
        let parts: Vec<&str> = line.split('\t').collect();
        match parts.as_slice() {
            [a, b, c] => Ok([a, b, c]),
            _ => Err(self.malformed(format!("expected 3 tab-separated fields, found {}", parts.len()))),
        }
    }

    fn index(&self, s: &str) -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| self.malformed(format!("bad segment index `{s}`")))
    }

    fn score(&self, s: &str) -> Result<f64> {
        match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.malformed(format!("bad score `{s}`"))),
        }
    }
}

/// Loads a judgments TSV. The first non-comment row is a header naming the
/// columns, which also declares the kind: `system, segment_index, score` for
/// DA or `segment_index, winner, loser` for RR.
pub fn load_human_judgments(path: &Path, dataset: &Dataset) -> Result<HumanJudgments> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut rows = tsv_rows(&text);
    let Some((header_row, header)) = rows.next() else {
        return Err(Error::MalformedRow {
            file,
            row: 0,
            reason: "missing header".into(),
        });
    };
    let kind = match header.trim_end() {
        DA_HEADER => JudgmentKind::Da,
        RR_HEADER => JudgmentKind::Rr,
        other => {
            return Err(Error::MalformedRow {
                file,
                row: header_row,
                reason: format!("unrecognized header `{other}`"),
            })
        }
    };
    let n = dataset.segments();
    match kind {
        JudgmentKind::Da => {
            let mut scores: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
            for (row, line) in rows {
                let p = RowParser { file: &file, row };
                let [system, index, score] = p.fields(line)?;
                let (index, score) = (p.index(index)?, p.score(score)?);
                if !dataset.has_system(system) {
                    return Err(Error::UnknownSystem(system.to_string()));
                }
                if index >= n {
                    return Err(Error::SegmentOutOfRange { index, segments: n });
                }
                let slot = &mut scores.entry(system.to_string()).or_insert_with(|| vec![None; n])[index];
                if slot.is_some() {
                    return Err(Error::DuplicateEntry {
                        system: system.to_string(),
                        segment: index,
                    });
                }
                *slot = Some(score);
            }
            Ok(HumanJudgments::Da(scores))
        }
        JudgmentKind::Rr => {
            let mut prefs = Vec::new();
            for (row, line) in rows {
                let p = RowParser { file: &file, row };
                let [index, winner, loser] = p.fields(line)?;
                let pref = Preference {
                    segment: p.index(index)?,
                    winner: winner.to_string(),
                    loser: loser.to_string(),
                };
                validate_preference(&pref, dataset)?;
                prefs.push(pref);
            }
            Ok(HumanJudgments::Rr(prefs))
        }
    }
}

/// Segment-level scores of a metric computed outside this crate, already
/// oriented so that higher is better.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScores {
    metric: String,
    scores: BTreeMap<String, Vec<f64>>,
}

impl ExternalScores {
    /// Validates that every system of `dataset` has a complete, finite vector.
    pub fn new(metric: impl Into<String>, scores: BTreeMap<String, Vec<f64>>, dataset: &Dataset) -> Result<Self> {
        let metric = metric.into();
        if let Some(system) = scores.keys().find(|s| !dataset.has_system(s)) {
            return Err(Error::UnknownSystem(system.clone()));
        }
        for system in dataset.systems().keys() {
            let Some(v) = scores.get(system) else {
                return Err(Error::IncompleteScores {
                    system: system.clone(),
                    segment: 0,
                });
            };
            if v.len() < dataset.segments() {
                return Err(Error::IncompleteScores {
                    system: system.clone(),
                    segment: v.len(),
                });
            }
            if v.len() > dataset.segments() {
                return Err(Error::SegmentOutOfRange {
                    index: v.len() - 1,
                    segments: dataset.segments(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("non-finite score in `{metric}` for `{system}`")));
            }
        }
        Ok(Self { metric, scores })
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn scores(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.scores
    }

    pub fn system(&self, name: &str) -> Option<&[f64]> {
        self.scores.get(name).map(Vec::as_slice)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = String::new();
        buf.push_str(SCORES_HEADER);
        buf.push('\n');
        for (system, v) in &self.scores {
            for (i, s) in v.iter().enumerate() {
                buf.push_str(&format!("{system}\t{i}\t{s}\n"));
            }
        }
        out.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Loads an external score TSV. The metric is named after the file stem.
/// A leading `system, segment_index, score` header row is optional.
pub fn load_external_scores(path: &Path, dataset: &Dataset) -> Result<ExternalScores> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let metric = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.clone());
    let n = dataset.segments();
    let mut partial: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (k, (row, line)) in tsv_rows(&text).enumerate() {
        if k == 0 && line.trim_end() == SCORES_HEADER {
            continue;
        }
        let p = RowParser { file: &file, row };
        let [system, index, score] = p.fields(line)?;
        let (index, score) = (p.index(index)?, p.score(score)?);
        if !dataset.has_system(system) {
            return Err(Error::UnknownSystem(system.to_string()));
        }
        if index >= n {
            return Err(Error::SegmentOutOfRange { index, segments: n });
        }
        let slot = &mut partial.entry(system.to_string()).or_insert_with(|| vec![None; n])[index];
        if slot.is_some() {
            return Err(Error::DuplicateEntry {
                system: system.to_string(),
                segment: index,
            });
        }
        *slot = Some(score);
    }
    let mut scores = BTreeMap::new();
    for system in dataset.systems().keys() {
        let Some(v) = partial.remove(system) else {
            return Err(Error::IncompleteScores {
                system: system.clone(),
                segment: 0,
            });
        };
        if let Some(segment) = v.iter().position(Option::is_none) {
            return Err(Error::IncompleteScores {
                system: system.clone(),
                segment,
            });
        }
        scores.insert(system.clone(), v.into_iter().flatten().collect());
    }
    Ok(ExternalScores { metric, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn lines(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn fixture() -> (TempDir, Dataset) {
        let dir = TempDir::new().unwrap();
        let mut systems = BTreeMap::new();
        systems.insert("sysA".to_string(), lines(&["a one", "a two", "a three"]));
        systems.insert("sysB".to_string(), lines(&["b one", "b two", "b three"]));
        let ds = Dataset::new(
            "fixture",
            lines(&["s1", "s2", "s3"]),
            lines(&["r1", "r2", "r3"]),
            systems,
        )
        .unwrap();
        ds.write_to_dir(dir.path()).unwrap();
        (dir, ds)
    }

    #[test]
    fn load_fixture_dataset() {
        let (dir, ds) = fixture();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.segments(), 3);
        assert_eq!(loaded.systems().len(), 2);
        assert_eq!(loaded.sources(), ds.sources());
        assert_eq!(loaded.system("sysB").unwrap(), ds.system("sysB").unwrap());
    }

    #[test]
    fn line_count_mismatch_names_system() {
        let (dir, _) = fixture();
        fs::write(dir.path().join("systems/A.txt"), "x\ny\n").unwrap();
        match load_dataset(dir.path()) {
            Err(Error::LineCountMismatch { system, found, expected }) => {
                assert_eq!((system.as_str(), found, expected), ("A", 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_empty_files() {
        let dir = TempDir::new().unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::MissingFile(_))));
        fs::write(dir.path().join("sources.txt"), "").unwrap();
        fs::write(dir.path().join("references.txt"), "").unwrap();
        fs::create_dir(dir.path().join("systems")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn multiline_segments_rejected() {
        let r = Dataset::new("x", lines(&["a\nb"]), lines(&["r"]), BTreeMap::new());
        assert!(matches!(r, Err(Error::MultilineSegment { .. })));
    }

    #[test]
    fn da_row_readback() {
        let (dir, ds) = fixture();
        let p = dir.path().join("da.tsv");
        fs::write(&p, format!("# comment\n{DA_HEADER}\nsysA\t0\t87.5\n")).unwrap();
        let j = load_human_judgments(&p, &ds).unwrap();
        assert_eq!(j.kind(), JudgmentKind::Da);
        assert_eq!(j.da_scores("sysA").unwrap(), &[Some(87.5), None, None]);
    }

    #[test]
    fn rr_winner_equals_loser() {
        let (dir, ds) = fixture();
        let p = dir.path().join("rr.tsv");
        fs::write(&p, format!("{RR_HEADER}\n1\tsysA\tsysA\n")).unwrap();
        assert!(matches!(
            load_human_judgments(&p, &ds),
            Err(Error::WinnerEqualsLoser { segment: 1, .. })
        ));
    }

    #[test]
    fn judgment_errors() {
        let (dir, ds) = fixture();
        let p = dir.path().join("j.tsv");
        fs::write(&p, format!("{DA_HEADER}\nZ\t0\t1.0\n")).unwrap();
        assert!(matches!(load_human_judgments(&p, &ds), Err(Error::UnknownSystem(s)) if s == "Z"));
        fs::write(&p, format!("{RR_HEADER}\n3\tsysA\tsysB\n")).unwrap();
        assert!(matches!(
            load_human_judgments(&p, &ds),
            Err(Error::SegmentOutOfRange { index: 3, segments: 3 })
        ));
        fs::write(&p, format!("{DA_HEADER}\nsysA\t0\t1.0\nsysA\tzero\t1.0\n")).unwrap();
        assert!(matches!(load_human_judgments(&p, &ds), Err(Error::MalformedRow { row: 3, .. })));
        fs::write(&p, "sysA\t0\t1.0\n").unwrap();
        assert!(matches!(load_human_judgments(&p, &ds), Err(Error::MalformedRow { row: 1, .. })));
    }

    #[test]
    fn external_scores_complete_and_incomplete() {
        let (dir, ds) = fixture();
        let p = dir.path().join("BERTScore.tsv");
        let mut body = String::new();
        for s in ["sysA", "sysB"] {
            for i in 0..3 {
                body.push_str(&format!("{s}\t{i}\t0.{i}\n"));
            }
        }
        fs::write(&p, &body).unwrap();
        let ext = load_external_scores(&p, &ds).unwrap();
        assert_eq!(ext.metric(), "BERTScore");
        assert_eq!(ext.system("sysB").unwrap(), &[0.0, 0.1, 0.2]);

        let truncated: String = body.lines().filter(|l| *l != "sysB\t2\t0.2").map(|l| format!("{l}\n")).collect();
        fs::write(&p, truncated).unwrap();
        match load_external_scores(&p, &ds) {
            Err(Error::IncompleteScores { system, segment }) => assert_eq!((system.as_str(), segment), ("sysB", 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn judgments_tsv_round_trip() {
        let (dir, ds) = fixture();
        let mut m = BTreeMap::new();
        m.insert("sysA".to_string(), vec![Some(1.5), None, Some(-2.0)]);
        let j = HumanJudgments::da(m, &ds).unwrap();
        let p = dir.path().join("da.tsv");
        j.write_tsv(&p).unwrap();
        assert_eq!(load_human_judgments(&p, &ds).unwrap(), j);

        let rr = HumanJudgments::rr(
            vec![Preference {
                segment: 2,
                winner: "sysB".into(),
                loser: "sysA".into(),
            }],
            &ds,
        )
        .unwrap();
        rr.write_tsv(&p).unwrap();
        assert_eq!(load_human_judgments(&p, &ds).unwrap(), rr);
    }
}
