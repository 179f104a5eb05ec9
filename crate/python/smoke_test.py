"""Smoke test for the mtvar extension: build a small dataset, score it, run a
verdict grid, rank metrics and run adversarial validation."""

import random
import tempfile
from pathlib import Path

import mtvar

WORDS = "the a cat dog sat on mat house river tree green small quick brown fox".split()


def sentence(rng, n=8):
    return " ".join(rng.choice(WORDS) for _ in range(n))


def corrupt(rng, text, p):
    return " ".join(rng.choice(WORDS) if rng.random() < p else w for w in text.split())


def build(name, seed, segments=60, systems=5):
    rng = random.Random(seed)
    sources = [sentence(rng) for _ in range(segments)]
    references = [sentence(rng) for _ in range(segments)]
    outputs, human = {}, {}
    for s in range(systems):
        p = 0.1 + 0.15 * s
        outputs[f"sys{s}"] = [corrupt(rng, r, p) for r in references]
        human[f"sys{s}"] = [100.0 * (1 - p) + rng.gauss(0, 5) for _ in references]
    ds = mtvar.Dataset(name, sources, references, outputs)
    return ds, mtvar.HumanJudgments.from_da(human, ds)


def main():
    roster = [m[0] for m in mtvar.metrics()]
    assert "BLEU" in roster and "chrF" in roster

    assert abs(mtvar.sentence_score("BLEU", "a b c d", "a b c d") - 1.0) < 1e-9
    assert mtvar.sentence_score("WER", "a b c", "a b c") == 0.0

    a = [1.0 + 0.01 * i for i in range(50)]
    b = [0.0 + 0.01 * i for i in range(50)]
    assert mtvar.bootstrap_compare(a, b, seed=1)[0] == "first"
    assert mtvar.paired_t_test(a, b)[0] == "first"
    assert mtvar.wilcoxon_rank_sum(a, b)[0] == "first"

    ds, hj = build("toy", 1)
    with tempfile.TemporaryDirectory() as tmp:
        ds.write(Path(tmp) / "toy")
        again = mtvar.Dataset.load(Path(tmp) / "toy")
        assert again.system_names() == ds.system_names()
        assert again.segments == ds.segments

        grid = mtvar.run_grid(ds, hj, ["BLEU", "chrF", "WER"], seed=7, iterations=200)
        assert grid.num_pairs() == 10
        grid.write(Path(tmp) / "grid.tsv")
        assert mtvar.PairGrid.read(Path(tmp) / "grid.tsv").to_tsv() == grid.to_tsv()

    errors = grid.error_numbers("full")
    assert len(errors) == 3 and all(0.0 <= e[3] <= 1.0 for e in errors)
    ranks = grid.ranking(seed=7, iterations=200)
    assert sorted(m for m, _ in ranks) == ["BLEU", "WER", "chrF"]
    ps = grid.pair_set(seed=7, iterations=200)
    assert ps.disagreement(ps) == 0

    hyb = mtvar.run_grid(ds, hj, ["BLEU"], seed=7, hybrids=8, iterations=200)
    assert hyb.num_pairs() == 28

    other, _ = build("other", 2)
    acc = mtvar.adversarial_validation(ds, other, seed=3, seeds=2)
    assert len(acc) == 2 and all(0.0 <= x <= 1.0 for _, x in acc)
    self_acc = mtvar.self_adversarial_validation(ds, seed=3, seeds=2)
    assert len(self_acc) == 2

    try:
        mtvar.Dataset.load("/nonexistent/mtvar")
    except FileNotFoundError:
        pass
    else:
        raise AssertionError("missing dataset accepted")
    try:
        mtvar.corpus_score("NOPE", ["a"], ["a"])
    except ValueError:
        pass
    else:
        raise AssertionError("unknown metric accepted")

    print("errors", errors)
    print("ranking", ranks)
    print("advval", acc)
    print("smoke test ok")


if __name__ == "__main__":
    main()
