//! Python bindings: datasets, metrics, significance tests, verdict grids,
//! error numbers, rankings, disagreement and adversarial validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mtvar_core::advval::{self, Hyperparams, Mode};
use mtvar_core::corpus::{self, Dataset, ExternalScores, HumanJudgments};
use mtvar_core::meta_eval::{self, ErrorPolicy, PairGrid};
use mtvar_core::metrics::{builtin_segment_stats, BuiltinMetric, MetricDescriptor, Polarity, SegmentStats};
use mtvar_core::significance::{self, TestConfig, Verdict};
use mtvar_core::variance::{self, SignificantPairSet};
use mtvar_core::Error;
use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::MissingFile(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        e if e.is_input_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ok<T>(r: mtvar_core::Result<T>) -> PyResult<T> {
    r.map_err(py_err)
}

fn builtin(name: &str) -> PyResult<BuiltinMetric> {
    BuiltinMetric::from_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown builtin metric `{name}`")))
}

fn policy(name: &str) -> PyResult<ErrorPolicy> {
    ErrorPolicy::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown policy `{name}`")))
}

fn test_config(seed: u64, iterations: usize, alpha: f64) -> PyResult<TestConfig> {
    let cfg = TestConfig { iterations, alpha, seed };
    ok(cfg.validate())?;
    Ok(cfg)
}

/// `(outcome, statistic, p_or_winrate)` with outcome "first", "second" or "nosig".
fn verdict_tuple(v: Verdict) -> (String, f64, f64) {
    (v.outcome.as_str().to_string(), v.statistic, v.p_or_winrate)
}

#[pyclass(name = "Dataset", module = "mtvar", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(name: String, sources: Vec<String>, references: Vec<String>, systems: BTreeMap<String, Vec<String>>) -> PyResult<Self> {
        Ok(Self {
            inner: ok(Dataset::new(name, sources, references, systems))?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ok(corpus::load_dataset(&path))?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        ok(self.inner.write_to_dir(&path))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn segments(&self) -> usize {
        self.inner.segments()
    }

    fn system_names(&self) -> Vec<String> {
        self.inner.system_names()
    }

    fn system(&self, name: &str) -> PyResult<Vec<String>> {
        Ok(ok(self.inner.system(name))?.to_vec())
    }

    fn sources(&self) -> Vec<String> {
        self.inner.sources().to_vec()
    }

    fn references(&self) -> Vec<String> {
        self.inner.references().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({:?}, segments={}, systems={})", self.inner.name(), self.inner.segments(), self.inner.systems().len())
    }
}

#[pyclass(name = "HumanJudgments", module = "mtvar", frozen)]
struct PyJudgments {
    inner: HumanJudgments,
}

#[pymethods]
impl PyJudgments {
    #[staticmethod]
    fn load(path: PathBuf, dataset: &PyDataset) -> PyResult<Self> {
        Ok(Self {
            inner: ok(corpus::load_human_judgments(&path, &dataset.inner))?,
        })
    }

    /// DA judgments from `{system: [score or None per segment]}`.
    #[staticmethod]
    fn from_da(scores: BTreeMap<String, Vec<Option<f64>>>, dataset: &PyDataset) -> PyResult<Self> {
        Ok(Self {
            inner: ok(HumanJudgments::da(scores, &dataset.inner))?,
        })
    }

    /// RR judgments from `(segment, winner, loser)` triples.
    #[staticmethod]
    fn from_rr(preferences: Vec<(usize, String, String)>, dataset: &PyDataset) -> PyResult<Self> {
        let prefs = preferences
            .into_iter()
            .map(|(segment, winner, loser)| corpus::Preference { segment, winner, loser })
            .collect();
        Ok(Self {
            inner: ok(HumanJudgments::rr(prefs, &dataset.inner))?,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        ok(self.inner.write_tsv(&path))
    }
}

#[pyclass(name = "ExternalScores", module = "mtvar", frozen)]
struct PyExternalScores {
    inner: ExternalScores,
}

#[pymethods]
impl PyExternalScores {
    #[new]
    fn new(metric: String, scores: BTreeMap<String, Vec<f64>>, dataset: &PyDataset) -> PyResult<Self> {
        Ok(Self {
            inner: ok(ExternalScores::new(metric, scores, &dataset.inner))?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf, dataset: &PyDataset) -> PyResult<Self> {
        Ok(Self {
            inner: ok(corpus::load_external_scores(&path, &dataset.inner))?,
        })
    }

    #[getter]
    fn metric(&self) -> String {
        self.inner.metric().to_string()
    }
}

#[pyclass(name = "PairGrid", module = "mtvar", frozen)]
struct PyPairGrid {
    inner: PairGrid,
}

#[pymethods]
impl PyPairGrid {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ok(PairGrid::read(&path))?,
        })
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ok(PairGrid::from_tsv(text, "<string>"))?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        ok(self.inner.write(&path))
    }

    fn to_tsv(&self) -> String {
        self.inner.to_tsv()
    }

    #[getter]
    fn dataset(&self) -> String {
        self.inner.dataset().to_string()
    }

    fn systems(&self) -> Vec<String> {
        self.inner.systems().to_vec()
    }

    fn metrics(&self) -> Vec<String> {
        self.inner.metrics().iter().map(|m| m.name.clone()).collect()
    }

    fn num_pairs(&self) -> usize {
        self.inner.num_pairs()
    }

    fn pair(&self, p: usize) -> PyResult<(String, String)> {
        self.check(p)?;
        let (a, b) = self.inner.pair(p);
        Ok((a.to_string(), b.to_string()))
    }

    fn human(&self, p: usize) -> PyResult<Option<(String, f64, f64)>> {
        self.check(p)?;
        Ok(self.inner.human(p).map(verdict_tuple))
    }

    fn metric_verdict(&self, metric: &str, p: usize) -> PyResult<Option<(String, f64, f64)>> {
        self.check(p)?;
        let m = ok(self.inner.metric_index(metric))?;
        Ok(self.inner.metric_verdict(m, p).map(verdict_tuple))
    }

    /// Grid restricted to human-significant pairs.
    fn filter_significant(&self) -> PyResult<Self> {
        Ok(Self {
            inner: ok(self.inner.filter_significant())?,
        })
    }

    /// `[(metric, errors, total, rate)]` under "full" or "significant-only".
    #[pyo3(signature = (policy = "full"))]
    fn error_numbers(&self, policy: &str) -> PyResult<Vec<(String, usize, usize, f64)>> {
        let report = ok(meta_eval::error_report(&self.inner, self::policy(policy)?))?;
        Ok(report
            .entries
            .iter()
            .map(|e| (e.metric.clone(), e.errors(), e.total(), e.rate()))
            .collect())
    }

    /// `[(metric, rank)]`: one plus the number of metrics with significantly
    /// fewer errors.
    #[pyo3(signature = (seed, policy = "full", iterations = 1000, alpha = 0.05))]
    fn ranking(&self, py: Python<'_>, seed: u64, policy: &str, iterations: usize, alpha: f64) -> PyResult<Vec<(String, usize)>> {
        let (cfg, policy) = (test_config(seed, iterations, alpha)?, self::policy(policy)?);
        let grid = &self.inner;
        let table = py.detach(|| {
            let report = meta_eval::error_report(grid, policy)?;
            let comps = variance::compare_all(&report, &cfg)?;
            let names: Vec<String> = grid.metrics().iter().map(|m| m.name.clone()).collect();
            variance::significant_ranking(&names, &comps)
        });
        Ok(ok(table)?.ranks)
    }

    /// Significant better/worse metric pairs of this grid.
    #[pyo3(signature = (seed, policy = "full", iterations = 1000, alpha = 0.05))]
    fn pair_set(&self, py: Python<'_>, seed: u64, policy: &str, iterations: usize, alpha: f64) -> PyResult<PyPairSet> {
        let (cfg, policy) = (test_config(seed, iterations, alpha)?, self::policy(policy)?);
        let grid = &self.inner;
        let set = py.detach(|| variance::pair_set_from_report(&meta_eval::error_report(grid, policy)?, &cfg));
        Ok(PyPairSet { inner: ok(set)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "PairGrid({:?}, systems={}, pairs={}, metrics={:?})",
            self.inner.dataset(),
            self.inner.systems().len(),
            self.inner.num_pairs(),
            self.metrics()
        )
    }
}

impl PyPairGrid {
    fn check(&self, p: usize) -> PyResult<()> {
        if p < self.inner.num_pairs() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("pair {p} out of range ({} pairs)", self.inner.num_pairs())))
        }
    }
}

#[pyclass(name = "PairSet", module = "mtvar", frozen)]
struct PyPairSet {
    inner: SignificantPairSet,
}

#[pymethods]
impl PyPairSet {
    #[new]
    fn new(dataset: String, roster: Vec<String>, pairs: Vec<(String, String)>) -> PyResult<Self> {
        Ok(Self {
            inner: ok(SignificantPairSet::new(dataset, roster, pairs))?,
        })
    }

    /// `(winner, loser)` pairs in sorted order.
    fn pairs(&self) -> Vec<(String, String)> {
        self.inner.pairs().iter().cloned().collect()
    }

    fn roster(&self) -> Vec<String> {
        self.inner.roster().iter().cloned().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Metric pairs whose relation strictly reverses between the two sets.
    fn disagreement(&self, other: &PyPairSet) -> PyResult<usize> {
        ok(variance::disagreement_number(&self.inner, &other.inner))
    }
}

/// Names, averaging and polarity of the builtin metrics.
#[pyfunction]
fn metrics() -> Vec<(String, String, String)> {
    MetricDescriptor::roster()
        .into_iter()
        .map(|m| (m.name, m.averaging.as_str().to_string(), m.polarity.as_str().to_string()))
        .collect()
}

/// Corpus-level score of a builtin metric.
#[pyfunction]
fn corpus_score(metric: &str, hypotheses: Vec<String>, references: Vec<String>) -> PyResult<f64> {
    Ok(ok(builtin_segment_stats(builtin(metric)?, &hypotheses, &references))?.corpus_score())
}

/// Sentence-level score of a builtin metric.
#[pyfunction]
fn sentence_score(metric: &str, hypothesis: String, reference: String) -> PyResult<f64> {
    corpus_score(metric, vec![hypothesis], vec![reference])
}

/// Paired bootstrap over per-segment scores; `higher_is_better` orients the difference.
#[pyfunction]
#[pyo3(signature = (a, b, seed, iterations = 1000, alpha = 0.05, higher_is_better = true))]
fn bootstrap_compare(a: Vec<f64>, b: Vec<f64>, seed: u64, iterations: usize, alpha: f64, higher_is_better: bool) -> PyResult<(String, f64, f64)> {
    let cfg = test_config(seed, iterations, alpha)?;
    let polarity = if higher_is_better { Polarity::HigherBetter } else { Polarity::LowerBetter };
    let v = significance::bootstrap_compare(&SegmentStats::from_scores(&a), &SegmentStats::from_scores(&b), polarity, &cfg);
    Ok(verdict_tuple(ok(v)?))
}

#[pyfunction]
#[pyo3(signature = (a, b, alpha = 0.05))]
fn wilcoxon_rank_sum(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<(String, f64, f64)> {
    Ok(verdict_tuple(ok(significance::wilcoxon_rank_sum(&a, &b, alpha))?))
}

#[pyfunction]
#[pyo3(signature = (a, b, alpha = 0.05))]
fn paired_t_test(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<(String, f64, f64)> {
    Ok(verdict_tuple(ok(significance::paired_t_test(&a, &b, alpha))?))
}

/// Scores systems, computes every human and metric verdict, and returns the
/// grid. With `hybrids = k` the grid is over `k` hybrid systems (DA only);
/// otherwise over the real systems.
#[pyfunction]
#[pyo3(signature = (dataset, judgments, metrics, seed, externals = Vec::new(), hybrids = None, iterations = 1000, alpha = 0.05))]
#[allow(clippy::too_many_arguments)]
fn run_grid(
    py: Python<'_>,
    dataset: &PyDataset,
    judgments: &PyJudgments,
    metrics: Vec<String>,
    seed: u64,
    externals: Vec<PyRef<'_, PyExternalScores>>,
    hybrids: Option<usize>,
    iterations: usize,
    alpha: f64,
) -> PyResult<PyPairGrid> {
    let cfg = test_config(seed, iterations, alpha)?;
    let externals: Vec<ExternalScores> = externals.iter().map(|e| e.inner.clone()).collect();
    let descriptors: Vec<MetricDescriptor> = metrics.iter().map(|m| MetricDescriptor::by_name(m)).collect();
    let (ds, hj) = (&dataset.inner, &judgments.inner);
    let grid = py.detach(|| match hybrids {
        Some(k) => {
            let hyb = meta_eval::synthesize_hybrids(ds, k, seed)?;
            let human = meta_eval::hybrid_human_scores(&hyb, hj)?;
            let scores = meta_eval::score_hybrids(ds, &hyb, &descriptors, &externals)?;
            let names: Vec<String> = hyb.iter().map(|h| h.name.clone()).collect();
            meta_eval::populate_grid(ds.name(), &names, &human, &scores, &cfg)
        }
        None => {
            let names = ds.system_names();
            let scores = meta_eval::score_systems(ds, &names, &descriptors, &externals)?;
            meta_eval::populate_grid(ds.name(), &names, hj, &scores, &cfg)
        }
    });
    Ok(PyPairGrid { inner: ok(grid)? })
}

fn mode(name: &str) -> PyResult<Mode> {
    Mode::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown mode `{name}` (source or source-output)")))
}

/// Test accuracies `[(run, accuracy)]` of classifiers telling `d1` from `d2`.
#[pyfunction]
#[pyo3(signature = (d1, d2, seed, mode = "source", seeds = advval::DEFAULT_SEEDS))]
fn adversarial_validation(py: Python<'_>, d1: &PyDataset, d2: &PyDataset, seed: u64, mode: &str, seeds: usize) -> PyResult<Vec<(u64, f64)>> {
    let mode = self::mode(mode)?;
    let r = py.detach(|| advval::adversarial_validation(&d1.inner, &d2.inner, mode, seeds, &Hyperparams::default(), seed));
    Ok(ok(r)?.per_seed)
}

/// Accuracies between random halves of one dataset.
#[pyfunction]
#[pyo3(signature = (d, seed, mode = "source", seeds = advval::DEFAULT_SEEDS))]
fn self_adversarial_validation(py: Python<'_>, d: &PyDataset, seed: u64, mode: &str, seeds: usize) -> PyResult<Vec<(u64, f64)>> {
    let mode = self::mode(mode)?;
    let r = py.detach(|| advval::self_adversarial_validation(&d.inner, mode, seeds, &Hyperparams::default(), seed));
    Ok(ok(r)?.per_seed)
}

#[pymodule]
fn mtvar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyJudgments>()?;
    m.add_class::<PyExternalScores>()?;
    m.add_class::<PyPairGrid>()?;
    m.add_class::<PyPairSet>()?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_score, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_score, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_compare, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_rank_sum, m)?)?;
    m.add_function(wrap_pyfunction!(paired_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    m.add_function(wrap_pyfunction!(adversarial_validation, m)?)?;
    m.add_function(wrap_pyfunction!(self_adversarial_validation, m)?)?;
    m.add("DEFAULT_HYBRIDS", meta_eval::DEFAULT_HYBRIDS)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_exceptions() {
        Python::initialize();
        Python::attach(|py| {
            assert!(py_err(Error::MissingFile("x".into())).is_instance_of::<PyFileNotFoundError>(py));
            assert!(builtin("NOPE").unwrap_err().is_instance_of::<PyValueError>(py));
            assert!(test_config(1, 0, 0.05).unwrap_err().is_instance_of::<PyValueError>(py));
            assert!(mode("neither").is_err());
        });
    }
}
