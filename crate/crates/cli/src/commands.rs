//! Subcommand implementations.

use std::path::{Path, PathBuf};

use mtvar_core::advval::{
    accuracy_matrix, adversarial_validation, build_classification_dataset, load_predictions, score_predictions, Hyperparams,
    Mode,
};
use mtvar_core::corpus::{load_dataset, load_external_scores, load_human_judgments, Dataset, ExternalScores, HumanJudgments, JudgmentKind};
use mtvar_core::meta_eval::{
    error_report, human_seed, hybrid_dataset, hybrid_human_scores, metric_seed, percent, populate_grid, score_hybrids,
    score_systems, synthesize_hybrids, ErrorPolicy, ErrorReport, PairGrid,
};
use mtvar_core::metrics::{BuiltinMetric, MetricDescriptor};
use mtvar_core::rng::derive_seed;
use mtvar_core::significance::{human_verdict, metric_verdict, TestConfig, Verdict};
use mtvar_core::variance::{compare_all, disagreement_matrix, pair_set_from_report, significant_ranking, MetricComparison, RankingTable};
use mtvar_core::Error;
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::failure::{CliResult, Failure};
use crate::outputs::{hash_input, Outputs};

/// Dataset inputs shared by several commands.
#[derive(Debug, Clone)]
pub struct DataArgs {
    pub dataset: PathBuf,
    pub judgments: Option<PathBuf>,
    pub scores: Vec<PathBuf>,
}

impl DataArgs {
    /// Explicit judgments file, else `<dataset>/judgments.tsv` when present.
    fn judgments_path(&self) -> Option<PathBuf> {
        self.judgments.clone().or_else(|| {
            let p = self.dataset.join("judgments.tsv");
            p.is_file().then_some(p)
        })
    }

    /// Explicit score files, else `<dataset>/scores/*.tsv` in name order.
    fn score_paths(&self) -> CliResult<Vec<PathBuf>> {
        if !self.scores.is_empty() {
            return Ok(self.scores.clone());
        }
        let dir = self.dataset.join("scores");
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| Failure::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        paths.sort();
        Ok(paths)
    }

    fn input_paths(&self) -> Vec<PathBuf> {
        let mut paths = vec![self.dataset.clone()];
        paths.extend(self.judgments.clone());
        paths.extend(self.scores.iter().cloned());
        paths
    }
}

struct Loaded {
    dataset: Dataset,
    judgments: Option<HumanJudgments>,
    externals: Vec<ExternalScores>,
}

fn load_plain(data: &DataArgs) -> CliResult<Loaded> {
    let judgments_path = data.judgments_path();
    let score_paths = data.score_paths()?;
    let dataset = load_dataset(&data.dataset).map_err(|e| Failure::staged("load dataset", e))?;
    let judgments = judgments_path
        .map(|p| load_human_judgments(&p, &dataset))
        .transpose()
        .map_err(|e| Failure::staged("load judgments", e))?;
    let externals = score_paths
        .iter()
        .map(|p| load_external_scores(p, &dataset))
        .collect::<mtvar_core::Result<Vec<_>>>()
        .map_err(|e| Failure::staged("load scores", e))?;
    Ok(Loaded {
        dataset,
        judgments,
        externals,
    })
}

fn load(data: &DataArgs, out: &mut Outputs) -> CliResult<Loaded> {
    out.timed("load inputs", || load_plain(data))
}

/// Metric roster: the requested names, or every builtin plus every external.
pub fn roster(requested: Option<&[String]>, externals: &[ExternalScores]) -> mtvar_core::Result<Vec<MetricDescriptor>> {
    let external = |name: &str| externals.iter().any(|e| e.metric() == name);
    let metrics: Vec<MetricDescriptor> = match requested {
        Some(names) => names
            .iter()
            .map(|n| match BuiltinMetric::from_name(n) {
                Some(b) => Ok(MetricDescriptor::builtin(b)),
                None if external(n) => Ok(MetricDescriptor::external(n.as_str())),
                None => Err(Error::UnknownMetric(n.clone())),
            })
            .collect::<mtvar_core::Result<_>>()?,
        None => MetricDescriptor::roster()
            .into_iter()
            .chain(externals.iter().map(|e| MetricDescriptor::external(e.metric())))
            .collect(),
    };
    let mut seen = std::collections::BTreeSet::new();
    for m in &metrics {
        if !seen.insert(m.name.as_str()) {
            return Err(Error::InvalidConfig(format!("metric `{}` listed twice", m.name)));
        }
    }
    Ok(metrics)
}

/// Runs `body` against a fresh output directory; writes the manifest on
/// success and removes partial outputs on failure.
fn with_outputs(cfg: &RunConfig, command: &str, inputs: &[PathBuf], body: impl FnOnce(&mut Outputs) -> CliResult<()>) -> CliResult<()> {
    let mut hashes = Map::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), Value::String(hash_input(p)?));
    }
    let mut out = Outputs::create(&cfg.out)?;
    match body(&mut out) {
        Ok(()) => out.finish(command, cfg.to_json(), Value::Object(hashes)),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn verdict_cells(v: &Verdict) -> String {
    format!("{}\t{}\t{}", v.outcome.as_str(), v.statistic, v.p_or_winrate)
}

pub fn validate(data: &DataArgs) -> CliResult<()> {
    let loaded = load_plain(data)?;
    let ds = &loaded.dataset;
    println!("dataset\t{}", ds.name());
    println!("segments\t{}", ds.segments());
    println!("systems\t{}", ds.system_names().join(","));
    match &loaded.judgments {
        Some(j) => println!("judgments\t{}", j.kind()),
        None => println!("judgments\tnone"),
    }
    let names: Vec<&str> = loaded.externals.iter().map(|e| e.metric()).collect();
    println!("scores\t{}", names.join(","));
    Ok(())
}

pub fn metrics_list() {
    println!("metric\taveraging\tpolarity\tsource");
    for m in MetricDescriptor::roster() {
        println!("{}\t{}\t{}\tbuiltin", m.name, m.averaging.as_str(), m.polarity.as_str());
    }
}

pub fn score(cfg: &RunConfig, data: &DataArgs) -> CliResult<()> {
    with_outputs(cfg, "score", &data.input_paths(), |out| {
        let loaded = load(data, out)?;
        let metrics = out.stage("roster", || roster(cfg.metrics.as_deref(), &loaded.externals))?;
        let names = loaded.dataset.system_names();
        let scores = out.stage("score", || score_systems(&loaded.dataset, &names, &metrics, &loaded.externals))?;
        let mut tsv = String::from("metric\tsystem\tscore\n");
        for ms in &scores {
            for s in &ms.systems {
                tsv.push_str(&format!("{}\t{}\t{}\n", ms.metric.name, s.system, s.corpus_score));
            }
        }
        out.write("scores.tsv", &tsv)
    })
}

pub fn compare(cfg: &RunConfig, data: &DataArgs, sys_a: &str, sys_b: &str) -> CliResult<()> {
    let test = cfg.test_config()?;
    with_outputs(cfg, "compare", &data.input_paths(), |out| {
        let loaded = load(data, out)?;
        let metrics = out.stage("roster", || roster(cfg.metrics.as_deref(), &loaded.externals))?;
        let mut tsv = String::from("judge\tfirst\tsecond\toutcome\tstatistic\tp\n");
        if let Some(j) = &loaded.judgments {
            let v = out.stage("human verdict", || human_verdict(j, sys_a, sys_b, &test.with_seed(human_seed(test.seed, sys_a, sys_b))))?;
            tsv.push_str(&format!("human\t{sys_a}\t{sys_b}\t{}\n", verdict_cells(&v)));
        }
        for m in &metrics {
            let ext = loaded.externals.iter().find(|e| e.metric() == m.name);
            let v = out.stage(&format!("verdict {}", m.name), || {
                metric_verdict(m, &loaded.dataset, sys_a, sys_b, ext, &test.with_seed(metric_seed(test.seed, &m.name)))
            })?;
            tsv.push_str(&format!("{}\t{sys_a}\t{sys_b}\t{}\n", m.name, verdict_cells(&v)));
        }
        out.write("compare.tsv", &tsv)
    })
}

pub fn hybrid(cfg: &RunConfig, data: &DataArgs) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    with_outputs(cfg, "hybrid", &data.input_paths(), |out| {
        let loaded = load(data, out)?;
        let hybrids = out.stage("synthesize hybrids", || synthesize_hybrids(&loaded.dataset, cfg.hybrids, seed))?;
        let mut tsv = String::from("hybrid\tsegment_index\tsystem\n");
        for h in &hybrids {
            for (i, s) in h.provenance.iter().enumerate() {
                tsv.push_str(&format!("{}\t{i}\t{s}\n", h.name));
            }
        }
        out.write("hybrids.tsv", &tsv)?;
        let ds = out.stage("materialize hybrids", || hybrid_dataset(&loaded.dataset, &hybrids))?;
        out.adopt("hybrid_dataset", |p| ds.write_to_dir(p))?;
        if let Some(j) = loaded.judgments.as_ref().filter(|j| j.kind() == JudgmentKind::Da) {
            let hj = out.stage("hybrid judgments", || hybrid_human_scores(&hybrids, j))?;
            out.adopt("hybrid_judgments.tsv", |p| hj.write_tsv(p))?;
        }
        Ok(())
    })
}

fn comparisons_tsv(comps: &[MetricComparison]) -> String {
    let mut tsv = String::from("metric_a\tmetric_b\toutcome\tstatistic\tp\n");
    for c in comps {
        tsv.push_str(&format!("{}\t{}\t{}\n", c.metric_a, c.metric_b, verdict_cells(&c.verdict)));
    }
    tsv
}

struct Analysis {
    report: ErrorReport,
    ranking: RankingTable,
}

/// Error numbers, pairwise metric comparisons and the significant ranking.
fn analyze(out: &mut Outputs, grid: &PairGrid, policy: ErrorPolicy, test: &TestConfig) -> CliResult<(Analysis, Vec<MetricComparison>)> {
    let report = out.stage("error numbers", || error_report(grid, policy))?;
    let comps = out.stage("compare metrics", || compare_all(&report, test))?;
    let names: Vec<String> = grid.metrics().iter().map(|m| m.name.clone()).collect();
    let ranking = out.stage("rank metrics", || significant_ranking(&names, &comps))?;
    Ok((Analysis { report, ranking }, comps))
}

fn write_analysis(out: &mut Outputs, analysis: &Analysis, comps: &[MetricComparison]) -> CliResult<()> {
    out.write("errors.tsv", &analysis.report.to_tsv())?;
    out.write("comparisons.tsv", &comparisons_tsv(comps))?;
    let ranking = analysis
        .ranking
        .to_tsv(&analysis.report)
        .map_err(|e| Failure::staged("rank metrics", e))?;
    out.write("ranking.tsv", &ranking)
}

pub fn errors(cfg: &RunConfig, data: &DataArgs, real_systems: bool) -> CliResult<()> {
    let test = cfg.test_config()?;
    with_outputs(cfg, "errors", &data.input_paths(), |out| {
        let loaded = load(data, out)?;
        let judgments = loaded
            .judgments
            .as_ref()
            .ok_or_else(|| Failure::Input("errors: no human judgments (pass --judgments or add judgments.tsv)".into()))?;
        let metrics = out.stage("roster", || roster(cfg.metrics.as_deref(), &loaded.externals))?;
        let ds = &loaded.dataset;
        let grid = if judgments.kind() == JudgmentKind::Da && !real_systems {
            let hybrids = out.stage("synthesize hybrids", || synthesize_hybrids(ds, cfg.hybrids, test.seed))?;
            let hj = out.stage("hybrid judgments", || hybrid_human_scores(&hybrids, judgments))?;
            let scores = out.stage("score", || score_hybrids(ds, &hybrids, &metrics, &loaded.externals))?;
            let names: Vec<String> = hybrids.iter().map(|h| h.name.clone()).collect();
            out.stage("populate grid", || populate_grid(ds.name(), &names, &hj, &scores, &test))?
        } else {
            let names = ds.system_names();
            let scores = out.stage("score", || score_systems(ds, &names, &metrics, &loaded.externals))?;
            out.stage("populate grid", || populate_grid(ds.name(), &names, judgments, &scores, &test))?
        };
        if !grid.is_populated() {
            return Err(Failure::Internal("populate grid: grid has empty cells".into()));
        }
        out.write("grid.tsv", &grid.to_tsv())?;
        let (analysis, comps) = analyze(out, &grid, cfg.policy, &test)?;
        write_analysis(out, &analysis, &comps)
    })
}

fn read_grids(out: &mut Outputs, paths: &[PathBuf]) -> CliResult<Vec<PairGrid>> {
    paths
        .iter()
        .map(|p| out.stage(&format!("read grid {}", p.display()), || PairGrid::read(p)))
        .collect()
}

pub fn rank(cfg: &RunConfig, grid: &Path) -> CliResult<()> {
    let test = cfg.test_config()?;
    with_outputs(cfg, "rank", &[grid.to_path_buf()], |out| {
        let grid = read_grids(out, &[grid.to_path_buf()])?.remove(0);
        let (analysis, comps) = analyze(out, &grid, cfg.policy, &test)?;
        write_analysis(out, &analysis, &comps)
    })
}

/// Unfiltered (under the configured policy) and human-significant-only
/// disagreement matrices, with optional heatmaps on a common scale.
fn write_disagreement(out: &mut Outputs, grids: &[PairGrid], cfg: &RunConfig, test: &TestConfig, weak: bool, svg: bool) -> CliResult<()> {
    let mut unfiltered = Vec::new();
    let mut filtered = Vec::new();
    for g in grids {
        let name = g.dataset().to_string();
        unfiltered.push(out.stage(&format!("pair set {name}"), || pair_set_from_report(&error_report(g, cfg.policy)?, test))?);
        filtered.push(out.stage(&format!("filtered pair set {name}"), || {
            pair_set_from_report(&error_report(&g.filter_significant()?, ErrorPolicy::Full)?, test)
        })?);
    }
    let m = out.stage("disagreement", || disagreement_matrix(&unfiltered, weak))?;
    let f = out.stage("filtered disagreement", || disagreement_matrix(&filtered, weak))?;
    out.write("disagreement.csv", &m.to_csv())?;
    out.write("disagreement_filtered.csv", &f.to_csv())?;
    if svg {
        let n = grids[0].metrics().len();
        let scale = n * n.saturating_sub(1) / 2;
        out.write("disagreement.svg", &m.to_svg(scale))?;
        out.write("disagreement_filtered.svg", &f.to_svg(scale))?;
    }
    Ok(())
}

pub fn disagree(cfg: &RunConfig, grids: &[PathBuf], weak: bool, svg: bool) -> CliResult<()> {
    let test = cfg.test_config()?;
    with_outputs(cfg, "disagree", grids, |out| {
        let loaded = read_grids(out, grids)?;
        write_disagreement(out, &loaded, cfg, &test, weak, svg)
    })
}

pub fn report(cfg: &RunConfig, grids: &[PathBuf]) -> CliResult<()> {
    let test = cfg.test_config()?;
    with_outputs(cfg, "report", grids, |out| {
        let loaded = read_grids(out, grids)?;
        let names: Vec<String> = loaded[0].metrics().iter().map(|m| m.name.clone()).collect();
        let mut columns = Vec::new();
        for g in &loaded {
            let these: Vec<String> = g.metrics().iter().map(|m| m.name.clone()).collect();
            if these != names {
                return Err(Failure::staged(
                    "report",
                    Error::RosterMismatch(format!("`{}` has metrics {these:?}, expected {names:?}", g.dataset())),
                ));
            }
            let (analysis, _) = analyze(out, g, cfg.policy, &test)?;
            columns.push((g.dataset().to_string(), analysis));
        }
        let mut tsv = String::from("metric");
        for (d, _) in &columns {
            tsv.push_str(&format!("\t{d}"));
        }
        tsv.push('\n');
        for m in &names {
            tsv.push_str(m);
            for (_, a) in &columns {
                let e = a.report.entry(m).map_err(|e| Failure::staged("report", e))?;
                let r = a.ranking.rank(m).ok_or_else(|| Failure::Internal(format!("report: `{m}` unranked")))?;
                tsv.push_str(&format!("\t{} ({r})", percent(e.rate())));
            }
            tsv.push('\n');
        }
        out.write("error_table.tsv", &tsv)?;
        if loaded.len() >= 2 {
            write_disagreement(out, &loaded, cfg, &test, false, true)?;
        }
        Ok(())
    })
}

pub struct AdvvalArgs {
    pub d1: Option<PathBuf>,
    pub d2: Option<PathBuf>,
    pub datasets: Vec<PathBuf>,
    pub mode: String,
    pub seeds: usize,
    pub predictions: Option<PathBuf>,
}

pub fn advval(cfg: &RunConfig, args: &AdvvalArgs) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    let mode = Mode::parse(&args.mode)
        .ok_or_else(|| Failure::Input(format!("unknown mode `{}` (source or source-output)", args.mode)))?;
    let hp = Hyperparams::default();
    let mut inputs: Vec<PathBuf> = args.d1.iter().chain(&args.d2).chain(&args.datasets).cloned().collect();
    inputs.extend(args.predictions.clone());
    with_outputs(cfg, "advval", &inputs, |out| {
        match (&args.d1, &args.d2) {
            (Some(p1), Some(p2)) => {
                let d1 = out.stage("load d1", || load_dataset(p1))?;
                let d2 = out.stage("load d2", || load_dataset(p2))?;
                let report = out.stage("adversarial validation", || adversarial_validation(&d1, &d2, mode, args.seeds, &hp, seed))?;
                out.write("advval.tsv", &report.to_tsv())?;
                // the first run's split, for classifiers trained outside this tool
                let data = out.stage("classification data", || build_classification_dataset(&d1, &d2, mode, derive_seed(seed, &[0])))?;
                out.write("classification.tsv", &data.to_tsv())?;
                if let Some(p) = &args.predictions {
                    let acc = out.stage("score predictions", || score_predictions(&data, &load_predictions(p)?))?;
                    out.write("predictions.tsv", &format!("accuracy\n{}\n", percent(acc)))?;
                }
                Ok(())
            }
            _ if args.datasets.len() >= 2 => {
                let sets = out.stage("load datasets", || args.datasets.iter().map(|p| load_dataset(p)).collect::<mtvar_core::Result<Vec<_>>>())?;
                let matrix = out.stage("accuracy matrix", || accuracy_matrix(&sets, mode, args.seeds, &hp, seed))?;
                out.write("advval_matrix.csv", &matrix.to_csv())
            }
            _ => Err(Failure::Input("advval: pass --d1 and --d2, or at least two --datasets".into())),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtvar_core::metrics::MetricSource;

    #[test]
    fn roster_resolution() {
        assert_eq!(roster(None, &[]).unwrap().len(), 7);
        let names = vec!["chrF".to_string(), "BLEU".to_string()];
        let r = roster(Some(&names), &[]).unwrap();
        assert_eq!(r[0].source, MetricSource::Builtin(BuiltinMetric::Chrf));
        assert!(matches!(roster(Some(&["nope".to_string()]), &[]), Err(Error::UnknownMetric(_))));
        assert!(roster(Some(&["BLEU".to_string(), "BLEU".to_string()]), &[]).is_err());
    }

    #[test]
    fn default_judgments_and_scores_are_discovered() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("d");
        std::fs::create_dir_all(dir.join("scores")).unwrap();
        std::fs::write(dir.join("judgments.tsv"), "").unwrap();
        std::fs::write(dir.join("scores/b.tsv"), "").unwrap();
        std::fs::write(dir.join("scores/a.tsv"), "").unwrap();
        std::fs::write(dir.join("scores/notes.txt"), "").unwrap();
        let args = DataArgs {
            dataset: dir.clone(),
            judgments: None,
            scores: vec![],
        };
        assert_eq!(args.judgments_path(), Some(dir.join("judgments.tsv")));
        assert_eq!(args.score_paths().unwrap(), vec![dir.join("scores/a.tsv"), dir.join("scores/b.tsv")]);
    }
}
