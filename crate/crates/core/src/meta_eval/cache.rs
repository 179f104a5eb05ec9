//! Versioned TSV serialization of a verdict grid.
//!
//! ```text
//! #mtvar-grid	1
//! #dataset	<name>
//! #metric	<name>	<macro|micro>	<higher|lower>	<builtin|external>
//! #system	<name>
//! system_a	system_b	human	<metric>...
//! <a>	<b>	<outcome>,<statistic>,<p_or_winrate>	...
//! ```
//!
//! Unpopulated cells are written as `-`. Numbers use the shortest
//! representation that parses back to the same value.

use std::collections::BTreeMap;

use super::PairGrid;
use crate::error::{Error, Result};
use crate::metrics::{Averaging, BuiltinMetric, MetricDescriptor, MetricSource, Polarity};
use crate::significance::Verdict;

pub const GRID_CACHE_VERSION: u32 = 1;
const MAGIC: &str = "#mtvar-grid";

fn cell(v: Option<Verdict>) -> String {
    match v {
        Some(v) => format!("{},{},{}", v.outcome, v.statistic, v.p_or_winrate),
        None => "-".into(),
    }
}

pub(super) fn encode(grid: &PairGrid) -> String {
    let mut out = format!("{MAGIC}\t{GRID_CACHE_VERSION}\n#dataset\t{}\n", grid.dataset);
    for m in &grid.metrics {
        let source = match m.source {
            MetricSource::Builtin(_) => "builtin",
            MetricSource::External => "external",
        };
        out.push_str(&format!(
            "#metric\t{}\t{}\t{}\t{source}\n",
            m.name,
            m.averaging.as_str(),
            m.polarity.as_str()
        ));
    }
    for s in &grid.systems {
        out.push_str(&format!("#system\t{s}\n"));
    }
    out.push_str("system_a\tsystem_b\thuman");
    for m in &grid.metrics {
        out.push('\t');
        out.push_str(&m.name);
    }
    out.push('\n');
    for (p, &(i, j)) in grid.pairs.iter().enumerate() {
        out.push_str(&format!("{}\t{}\t{}", grid.systems[i], grid.systems[j], cell(grid.human[p])));
        for row in &grid.metric_verdicts {
            out.push('\t');
            out.push_str(&cell(row[p]));
        }
        out.push('\n');
    }
    out
}

struct Reader<'a> {
    file: &'a str,
    row: usize,
}

impl Reader<'_> {
    fn bad(&self, reason: impl Into<String>) -> Error {
        Error::BadCache {
            file: self.file.to_string(),
            reason: format!("line {}: {}", self.row, reason.into()),
        }
    }

    fn verdict(&self, text: &str) -> Result<Option<Verdict>> {
        if text == "-" {
            return Ok(None);
        }
        let parts: Vec<&str> = text.split(',').collect();
        let [outcome, statistic, p] = parts[..] else {
            return Err(self.bad(format!("bad verdict cell `{text}`")));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| self.bad(format!("bad number `{s}`")));
        Ok(Some(Verdict {
            outcome: outcome.parse().map_err(|_| self.bad(format!("bad outcome `{outcome}`")))?,
            statistic: num(statistic)?,
            p_or_winrate: num(p)?,
        }))
    }

    fn metric(&self, fields: &[&str]) -> Result<MetricDescriptor> {
        let [name, averaging, polarity, source] = fields[..] else {
            return Err(self.bad("metric line needs name, averaging, polarity, source"));
        };
        let averaging = Averaging::parse(averaging).ok_or_else(|| self.bad(format!("bad averaging `{averaging}`")))?;
        let polarity = Polarity::parse(polarity).ok_or_else(|| self.bad(format!("bad polarity `{polarity}`")))?;
        let source = match source {
            "builtin" => MetricSource::Builtin(
                BuiltinMetric::from_name(name).ok_or_else(|| self.bad(format!("unknown builtin metric `{name}`")))?,
            ),
            "external" => MetricSource::External,
            other => return Err(self.bad(format!("bad metric source `{other}`"))),
        };
        Ok(MetricDescriptor {
            name: name.to_string(),
            averaging,
            polarity,
            source,
        })
    }
}

pub(super) fn decode(text: &str, file: &str) -> Result<PairGrid> {
    let mut r = Reader { file, row: 0 };
    let mut lines = text.lines();
    let mut next = |r: &mut Reader| {
        r.row += 1;
        lines.next()
    };

    let first = next(&mut r).ok_or_else(|| r.bad("empty file"))?;
    match first.split('\t').collect::<Vec<_>>()[..] {
        [MAGIC, v] if v == GRID_CACHE_VERSION.to_string() => {}
        [MAGIC, v] => return Err(r.bad(format!("unsupported version {v}"))),
        _ => return Err(r.bad("not a grid cache")),
    }

    let mut dataset = None;
    let mut metrics = Vec::new();
    let mut systems = Vec::new();
    let header = loop {
        let line = next(&mut r).ok_or_else(|| r.bad("missing column header"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "#dataset" if fields.len() == 2 => dataset = Some(fields[1].to_string()),
            "#metric" => metrics.push(r.metric(&fields[1..])?),
            "#system" if fields.len() == 2 => systems.push(fields[1].to_string()),
            _ if line.starts_with('#') => return Err(r.bad(format!("unknown directive `{}`", fields[0]))),
            _ => break fields,
        }
    };
    let dataset = dataset.ok_or_else(|| r.bad("missing #dataset"))?;
    let expected: Vec<&str> = ["system_a", "system_b", "human"]
        .into_iter()
        .chain(metrics.iter().map(|m| m.name.as_str()))
        .collect();
    if header != expected {
        return Err(r.bad("column header does not match #metric lines"));
    }
    if systems.windows(2).any(|w| w[0] >= w[1]) {
        return Err(r.bad("#system lines must be strictly sorted"));
    }
    let index: BTreeMap<&str, usize> = systems.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

    let mut pairs = Vec::new();
    let mut human = Vec::new();
    let mut cells: Vec<Vec<Option<Verdict>>> = vec![Vec::new(); metrics.len()];
    while let Some(line) = next(&mut r) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected.len() {
            return Err(r.bad(format!("expected {} fields, found {}", expected.len(), fields.len())));
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| r.bad(format!("unknown system `{s}`")));
        let (i, j) = (lookup(fields[0])?, lookup(fields[1])?);
        if i >= j || pairs.last().is_some_and(|&last| last >= (i, j)) {
            return Err(r.bad("pairs must be ordered and unique"));
        }
        pairs.push((i, j));
        human.push(r.verdict(fields[2])?);
        for (m, f) in fields[3..].iter().enumerate() {
            cells[m].push(r.verdict(f)?);
        }
    }

    let mut grid = PairGrid::with_pairs(dataset, systems, pairs, metrics)?;
    grid.human = human;
    grid.metric_verdicts = cells;
    Ok(grid)
}
