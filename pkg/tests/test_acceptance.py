"""Release gate: one test per numbered acceptance criterion.

Each criterion prints exactly one ``ACCEPTANCE n: PASS|FAIL|SKIP`` line
on the real stdout (past pytest's capture) so a release run can be
audited by grepping the log.  Tolerances, worked values, and runtime
budgets are stated inline and must not be loosened; where a required
constant disagrees with the arithmetic it pins, the check documents
the gap by failing rather than by adjusting either side.

Criterion 9 needs the full 36-dataset defect corpus, which is not
bundled; point METRIC_THRESHOLDS_EXTENDED_CORPUS at a directory
holding it (corpus.csv or corpus.json) to enable the check.
"""

import contextlib
import os
import time
from pathlib import Path

import numpy as np
import pytest

from metric_thresholds.config import RunConfig, ThresholdConfig
from metric_thresholds.dataset import MetricId, corpus_to_obj
from metric_thresholds.errors import FixtureLookupError
from metric_thresholds.estimation import spearman
from metric_thresholds.evaluation import (
    _skillings_mack,
    friedman_test,
    nemenyi_cd,
)
from metric_thresholds.fixtures import data_path, estimate_from_fixture
from metric_thresholds.logit import (
    CorrectionContext,
    background_risk,
    correct_intercept,
    fit_univariate_logistic,
    risk_at,
    varl_threshold,
)
from metric_thresholds.pipeline import run_pipeline, write_json
from metric_thresholds.ranking import average_ranks
from metric_thresholds.synth import generate_synthetic, load_spec

CBO = MetricId("CBO")
DCC = MetricId("DCC")
WMC = MetricId("WMC")

EXTENDED_CORPUS_ENV = "METRIC_THRESHOLDS_EXTENDED_CORPUS"


def _report(capsys, criterion: int, status: str) -> None:
    # suspend capture so the line lands in the terminal log either way
    with capsys.disabled():
        print(f"ACCEPTANCE {criterion}: {status}", flush=True)


@contextlib.contextmanager
def _criterion(capsys, n: int):
    try:
        yield
    except BaseException:
        _report(capsys, n, "FAIL")
        raise
    _report(capsys, n, "PASS")


def test_criterion_1_varl_round_trip(capsys):
    # 1000 random models: alpha in [-5,5], beta in (0,2], p_arl drawn
    # inside (p0, 0.99); the threshold must map back onto p_arl within
    # 1e-9, and the whole sweep must finish inside one second.  Draws
    # where sigmoid(alpha) already exceeds 0.99 leave no room for an
    # acceptable risk level and are redrawn.
    with _criterion(capsys, 1):
        rng = np.random.default_rng(20260816)
        start = time.perf_counter()
        checked = 0
        while checked < 1000:
            alpha = float(rng.uniform(-5.0, 5.0))
            beta = 2.0 - float(rng.uniform(0.0, 2.0))
            p0 = background_risk(alpha)
            if p0 >= 0.99:
                continue
            p_arl = p0 + float(rng.uniform(0.0, 1.0)) * (0.99 - p0)
            if not p0 < p_arl < 0.99:
                continue
            threshold = varl_threshold(alpha, beta, p_arl)
            assert abs(risk_at(alpha, beta, threshold) - p_arl) < 1e-9
            checked += 1
        assert time.perf_counter() - start < 1.0


def test_criterion_2_correction_identity_direction_and_worked_value(capsys):
    # identity: equal ratios shift nothing, exactly; direction: a rarer
    # population than the sample must lower the intercept.  The worked
    # value pins alpha=2.0, y=0.358, ybar=0.5 -> 1.41597 +- 1e-5; the
    # correction formula itself gives 2 - ln(0.642/0.358) = 1.4159447,
    # 2.5e-5 away, so that constant cannot be met without changing the
    # formula.  The check keeps the stated constant and fails honestly.
    with _criterion(capsys, 2):
        for ratio in (0.05, 0.2, 0.358, 0.5, 0.9):
            ctx = CorrectionContext(y_pop=ratio, y_bar=ratio)
            for alpha in (-3.0, 0.0, 2.0):
                assert correct_intercept(alpha, ctx) == alpha

        rng = np.random.default_rng(7)
        for _ in range(200):
            y_bar = float(rng.uniform(0.05, 0.95))
            y_pop = float(rng.uniform(0.01, y_bar - 0.005))
            ctx = CorrectionContext(y_pop=y_pop, y_bar=y_bar)
            alpha = float(rng.uniform(-4.0, 4.0))
            assert correct_intercept(alpha, ctx) < alpha

        corrected = correct_intercept(
            2.0, CorrectionContext(y_pop=0.358, y_bar=0.5)
        )
        assert corrected == pytest.approx(1.41597, abs=1e-5)


def test_criterion_3_logistic_recovery_on_planted_data(capsys):
    # one synthetic system of 2000 classes with alpha=-1, beta=0.1
    # planted (seed fixed in the bundled spec); the fit must land
    # within +-0.15 / +-0.02 with a vanished score, inside one second
    with _criterion(capsys, 3):
        start = time.perf_counter()
        spec = load_spec(data_path("synthetic_specs/single_system.json"))
        assert spec.size_range == (2000, 2000)
        assert spec.driver.alpha == -1.0 and spec.driver.beta == 0.1
        d = generate_synthetic(spec).datasets[0]
        xs = [r.value(CBO) for r in d.classes]
        ys = [r.faulty for r in d.classes]
        fit = fit_univariate_logistic(xs, ys, metric=CBO)
        assert fit.converged
        assert fit.alpha == pytest.approx(-1.0, abs=0.15)
        assert fit.beta == pytest.approx(0.1, abs=0.02)
        assert fit.score_norm < 1e-8
        assert time.perf_counter() - start < 1.0


def test_criterion_4_shipped_model_estimates(capsys):
    with _criterion(capsys, 4):
        r = estimate_from_fixture(CBO, 994)
        assert r.threshold == 13
        low = estimate_from_fixture(DCC, 10)
        assert low.threshold == 2
        assert low.clamped
        with pytest.raises(FixtureLookupError):
            estimate_from_fixture(WMC, 994)


def test_criterion_5_rank_test_closed_forms(capsys):
    # k=3, N=4 with the same strict order in every block gives rank
    # sums 4/8/12 and chi-square exactly 8; identical scores give 0;
    # and the weighted-rank statistic for incomplete tables must
    # collapse to the Friedman value on complete ones within 1e-9
    with _criterion(capsys, 5):
        strict = [[3.0, 2.0, 1.0], [5.0, 4.0, 3.0], [9.0, 7.0, 1.0], [10.0, 6.0, 2.0]]
        with pytest.warns(UserWarning, match="rough"):
            rt = friedman_test(strict)
        assert rt.statistic == 8.0
        assert rt.p_value == pytest.approx(0.01832, abs=1e-4)

        flat = friedman_test([[1.0, 1.0, 1.0]] * 6)
        assert flat.statistic == 0.0

        rng = np.random.default_rng(55)
        for trial in range(40):
            n = int(rng.integers(5, 13))
            k = int(rng.integers(3, 7))
            scores = rng.uniform(0.0, 1.0, size=(n, k))
            if trial % 4 == 0:
                # force ties; the identity must survive average ranks
                scores = np.round(scores, 1)
                scores[0, :2] = scores[0, 0]
            rt = friedman_test(scores)
            assert rt.method == "friedman"
            ranks = np.vstack([average_ranks(-row) for row in scores])
            sm = _skillings_mack(ranks, np.ones((n, k), dtype=bool), k)
            assert abs(sm - rt.statistic) <= 1e-9


def test_criterion_6_nemenyi_critical_distance(capsys):
    with _criterion(capsys, 6):
        assert nemenyi_cd(3, 36) == pytest.approx(0.5523, abs=1e-3)


def _oracle_ranks(v: np.ndarray) -> np.ndarray:
    # deliberately naive average ranking, kept separate from the
    # package's own helper so the comparison stays two independent
    # routes to the same number
    order = np.argsort(v, kind="mergesort")
    sorted_v = v[order]
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def test_criterion_7_spearman_oracle_and_invariance(capsys):
    # 100 random size/threshold tables of 12 pairs with heavy ties;
    # rho must match rank-then-Pearson within 1e-12 and be bit-equal
    # under a strictly increasing transform of either coordinate
    with _criterion(capsys, 7):
        rng = np.random.default_rng(1203)
        done = 0
        while done < 100:
            xs = rng.integers(0, 6, size=12).astype(np.float64)
            ys = rng.integers(0, 6, size=12).astype(np.float64)
            if np.all(xs == xs[0]) or np.all(ys == ys[0]):
                continue
            pairs = list(zip(xs, ys))
            rho = spearman(pairs).rho
            oracle = np.corrcoef(_oracle_ranks(xs), _oracle_ranks(ys))[0, 1]
            assert abs(rho - float(oracle)) < 1e-12

            stretched = list(zip(np.exp(xs / 2.0) + 3.0, ys * 7.0 + 1.0))
            assert spearman(stretched).rho == rho
            done += 1


def test_criterion_8_planted_pipeline_end_to_end(tmp_path, capsys):
    # full run over the bundled 12-system corpus whose thresholds sit
    # on 0.01*size + 3: the screen must keep the planted driver, the
    # held-out estimates must track the line, thresholded NB must beat
    # raw NB on average, all inside 30 seconds.  The corpus plants the
    # uncorrected line, so the correction stays off here.
    with _criterion(capsys, 8):
        start = time.perf_counter()
        spec = load_spec(data_path("synthetic_specs/planted_line.json"))
        assert spec.n_systems == 12 and spec.size_law == (0.01, 3.0)
        corpus = generate_synthetic(spec)
        corpus_file = tmp_path / "planted.json"
        write_json(corpus_to_obj(corpus), corpus_file)

        cfg = RunConfig(
            thresholds=ThresholdConfig(apply_correction=False),
            output_dir=str(tmp_path / "out"),
        )
        result = run_pipeline(cfg, corpus_file)

        assert CBO in result.screened
        screen_row = next(
            r
            for r in result.correlations
            if r["metric"] == "CBO" and r["risk_increase"] == 0.10
            and not r["corrected"]
        )
        assert screen_row["p_value"] < 0.05

        sizes = {ds.key: len(ds.classes) for ds in corpus.datasets}
        held_out = result.loocv[CBO]
        assert len(held_out) == len(corpus.datasets)
        on_line = sum(
            1
            for key, est in held_out.items()
            if abs(est.threshold - (0.01 * sizes[key] + 3.0)) <= 1.0
        )
        assert on_line >= 0.9 * len(held_out)

        def mean_score(column: str) -> float:
            vals = [row[column] for row in result.nb_report.rows if row[column] is not None]
            assert vals
            return sum(vals) / len(vals)

        raw = mean_score("nb-raw")
        assert mean_score("nb-lr-thresholds") > raw
        assert mean_score("nb-estimated-thresholds") > raw
        assert time.perf_counter() - start < 30.0


def _extended_corpus_file() -> Path | None:
    root = os.environ.get(EXTENDED_CORPUS_ENV)
    if not root:
        return None
    path = Path(root)
    if path.is_file():
        return path
    for name in ("corpus.csv", "corpus.json"):
        if (path / name).is_file():
            return path / name
    hits = sorted(path.glob("*.csv")) if path.is_dir() else []
    return hits[0] if len(hits) == 1 else None


def test_criterion_9_extended_corpus_replication(tmp_path, capsys):
    # optional: reproduces the shipped CBO model (+-10%), the WMC
    # screening exclusion, and the three-way NB ordering on the real
    # corpus; the pooled defect ratio drives the correction as it did
    # when the shipped models were fitted
    corpus_file = _extended_corpus_file()
    if corpus_file is None:
        _report(capsys, 9, f"SKIP (set {EXTENDED_CORPUS_ENV} to the corpus directory)")
        pytest.skip(f"extended corpus not present ({EXTENDED_CORPUS_ENV} unset)")
    with _criterion(capsys, 9):
        cfg = RunConfig(
            thresholds=ThresholdConfig(pooled_population=True),
            output_dir=str(tmp_path / "out"),
        )
        result = run_pipeline(cfg, corpus_file)

        model = result.models[CBO]
        assert model.slope == pytest.approx(0.00958, rel=0.10)
        assert model.intercept == pytest.approx(3.69029, rel=0.10)
        assert WMC not in result.screened

        rt = result.nb_report.rank_test
        sig = rt.pairwise_significant
        assert not sig[("nb-lr-thresholds", "nb-estimated-thresholds")]
        assert sig[("nb-raw", "nb-lr-thresholds")]
        assert sig[("nb-raw", "nb-estimated-thresholds")]
        assert rt.avg_ranks["nb-raw"] > rt.avg_ranks["nb-lr-thresholds"]
        assert rt.avg_ranks["nb-raw"] > rt.avg_ranks["nb-estimated-thresholds"]
