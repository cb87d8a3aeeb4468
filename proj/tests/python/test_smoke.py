import json

import numpy as np
import pytest
from scipy import stats

import epsinas

CONV = "|nor_conv_3x3~0|+|none~0|none~1|+|nor_conv_3x3~0|none~1|none~2|"


def test_genotype_round_trip():
    assert epsinas.SPACE_SIZE == 15625
    for i in (0, 1, 777, 15624):
        g = epsinas.genotype_from_index(i)
        assert epsinas.genotype_index(g) == i
        assert epsinas.parse_genotype(g) == g
    with pytest.raises(ValueError):
        epsinas.parse_genotype("|conv~0|")


def test_score_is_symmetric_and_equal_weights_vanish():
    batch = epsinas.make_batch("random_normal", batch_size=4, seed=1)
    assert batch.shape == (4, 3, 32, 32) and batch.dtype == np.float32
    r = epsinas.score(CONV, batch, 1e-7, 1.0, stem_channels=4)
    assert r["status"] == "valid" and r["epsilon"] > 0
    assert epsinas.score(CONV, batch, 1.0, 1e-7, stem_channels=4)["epsilon"] == r["epsilon"]
    same = epsinas.score(CONV, batch, 0.5, 0.5, stem_channels=4)
    assert same["status"] != "valid" or same["epsilon"] == 0.0


def test_epsilon_from_raw_matches_definition():
    a = np.array([0.0, 1.0, 3.0], dtype=np.float32)
    b = np.array([2.0, 0.0, 4.0], dtype=np.float32)
    na = (a - a.min()) / (a.max() - a.min())
    nb = (b - b.min()) / (b.max() - b.min())
    expected = np.abs(na - nb).mean() / np.concatenate([na, nb]).mean()
    assert epsinas.epsilon_from_raw(a, b)["epsilon"] == pytest.approx(expected, rel=1e-6)


def test_rank_statistics_match_scipy():
    rng = np.random.default_rng(3)
    x = rng.integers(0, 6, 80).astype(float)
    y = x + rng.integers(0, 4, 80)
    assert epsinas.spearman(x, y) == pytest.approx(stats.spearmanr(x, y)[0], abs=1e-12)
    assert epsinas.kendall(x, y) == pytest.approx(stats.kendalltau(x, y)[0], abs=1e-12)
    assert epsinas.kendall(np.ones(5), np.arange(5.0)) is None


def test_cli_round_trip(tmp_path):
    code, out, _ = epsinas.run_cli(["--help"])
    assert code == 0 and "score" in out
    scores = tmp_path / "scores.csv"
    code, out, err = epsinas.run_cli(
        ["score", "--archs", "sample:5", "--stem-channels", "4", "--batch-size", "4", "--out", str(scores)]
    )
    assert code == 0, err
    rows = scores.read_text().splitlines()
    assert rows[0] == "arch_id,genotype,epsilon,status" and len(rows) == 6
    bench = tmp_path / "bench.csv"
    lines = ["arch_id,genotype,val_acc,test_acc,params"]
    for k, row in enumerate(rows[1:]):
        arch_id, genotype = row.split(",")[:2]
        lines.append(f"{arch_id},{genotype},{50 + k},{49 + k},1")
    bench.write_text("\n".join(lines) + "\n")
    report = json.loads(epsinas.correlate(str(scores), str(bench)))
    assert report["n_total"] == 5
    assert report["n_valid"] + report["n_dropped"] == 5
    assert epsinas.run_cli(["score", "--bogus"])[0] == 2
