import csv
import math
import pickle
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import oracles
from halfplane_fpp.errors import ParameterError
from halfplane_fpp.lattice import Axis, Domain, Edge, Site
from halfplane_fpp.weights import (
    WeightOracle, box_edges, edge_weight, materialize, read_golden_csv, scaled_weight,
    write_golden_csv,
)

GOLDEN = Path(__file__).parent / "data" / "golden_weights.csv"


def golden_rows():
    with open(GOLDEN, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGolden:
    @pytest.mark.parametrize("row", golden_rows(), ids=lambda r: f"{r['seed']}-{r['x']}-{r['axis']}")
    def test_matches_frozen_value(self, row):
        o = WeightOracle(int(row["seed"]), int(row["replica"]), int(row["stream"]))
        e = Edge(Site(int(row["x"]), int(row["y"])), Axis(row["axis"]))
        assert edge_weight(o, e) == float(row["weight"])

    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**20), st.integers(0, 3),
           st.integers(-2**31 + 1, 2**31 - 1), st.integers(-2**31 + 1, 2**31 - 1),
           st.sampled_from(["h", "v"]))
    def test_matches_reference_hash(self, seed, replica, stream, x, y, axis):
        o = WeightOracle(seed, replica, stream)
        want = oracles.exp_weight(seed, stream, replica, x, y, axis)
        assert edge_weight(o, Edge(Site(x, y), Axis(axis))) == want


class TestEdgeWeight:
    def test_deterministic(self):
        o, e = WeightOracle(3, 1), Edge(Site(4, 2), Axis.V)
        assert edge_weight(o, e) == edge_weight(WeightOracle(3, 1), e)

    def test_override_first(self):
        e = Edge(Site(0, 0), Axis.H)
        assert edge_weight(WeightOracle(1).with_overrides({e: 0.5}), e) == 0.5

    def test_nonpositive_override_rejected(self):
        with pytest.raises(ParameterError):
            WeightOracle(1).with_overrides({Edge(Site(0, 0), Axis.H): 0.0})

    def test_coordinate_range(self):
        with pytest.raises(ParameterError):
            edge_weight(WeightOracle(1), Edge(Site(2**31, 0), Axis.H))

    def test_streams_and_replicas_differ(self):
        e = Edge(Site(0, 0), Axis.H)
        vals = {edge_weight(WeightOracle(1, r, s), e) for r in range(3) for s in range(3)}
        assert len(vals) == 9

    def test_oracle_pickles_with_overrides(self):
        o = WeightOracle(5).with_overrides({Edge(Site(1, 1), Axis.V): 2.5})
        back = pickle.loads(pickle.dumps(o))
        assert back == o and hash(back) == hash(o)


class TestScaled:
    def test_halves(self):
        e = Edge(Site(0, 0), Axis.H)
        o = WeightOracle(0).with_overrides({e: 3.0})
        assert scaled_weight(o, e, 2) == 1.5

    def test_identity(self):
        e = Edge(Site(7, 1), Axis.V)
        o = WeightOracle(9)
        assert scaled_weight(o, e, 1) == edge_weight(o, e)

    def test_quarter(self):
        e = Edge(Site(0, 0), Axis.H)
        assert scaled_weight(WeightOracle(0).with_overrides({e: 1.0}), e, 4) == 0.25

    def test_bad_lambda(self):
        with pytest.raises(ParameterError):
            scaled_weight(WeightOracle(0), Edge(Site(0, 0), Axis.H), 0)

    def test_weak_lambda_warns(self):
        with pytest.warns(UserWarning):
            scaled_weight(WeightOracle(0), Edge(Site(0, 0), Axis.H), 0.5)


class TestMaterialize:
    def test_domain_independence(self):
        o = WeightOracle(11, 4)
        big = materialize(o, Domain.full_plane(-6, 6, -3, 5))
        for dom in (Domain.half_plane(-4, 4, 4), Domain.strip(2, -5, 3), Domain.half_strip(3, 5)):
            g = materialize(o, dom)
            for e in box_edges(dom):
                assert g.edge(e) == big.edge(e) == edge_weight(o, e)

    def test_sub_grid(self):
        o = WeightOracle(2)
        big = materialize(o, Domain.half_plane(-8, 8, 8))
        dom = Domain.strip(3, -2, 6)
        sub = big.sub(dom)
        ref = materialize(o, dom)
        np.testing.assert_array_equal(sub.wh, ref.wh)
        np.testing.assert_array_equal(sub.wv, ref.wv)

    def test_overrides_applied(self):
        e = Edge(Site(1, 2), Axis.H)
        g = materialize(WeightOracle(2).with_overrides({e: 9.0}), Domain.half_plane(0, 3, 3))
        assert g.edge(e) == 9.0

    def test_golden_csv_roundtrip(self, tmp_path):
        o = WeightOracle(8, 2)
        edges = box_edges(Domain.half_plane(-1, 1, 1))
        write_golden_csv(tmp_path / "w.csv", o, edges)
        back = read_golden_csv(tmp_path / "w.csv")
        assert back == {e: edge_weight(o, e) for e in edges}


@pytest.fixture(scope="module")
def draws():
    dom = Domain.half_plane(-500, 499, 500)  # just over 10**6 edges
    g = materialize(WeightOracle(20240101), dom)
    h = g.wh.reshape(dom.shape)[:, :-1].ravel()
    v = g.wv.reshape(dom.shape)[:-1, :].ravel()
    return np.concatenate([h, v])[:1_000_000]


class TestDistribution:
    def test_mean(self, draws):
        assert len(draws) == 1_000_000
        assert abs(draws.mean() - 1.0) < 0.005

    def test_tail(self, draws):
        p = math.exp(-1)
        se = math.sqrt(p * (1 - p) / len(draws))
        assert abs(np.mean(draws > 1.0) - p) < 3 * se

    def test_ks(self, draws):
        res = stats.kstest(draws[:100_000], "expon")
        # 1% critical value of the one-sample KS statistic
        assert res.statistic < 1.63 / math.sqrt(100_000)

    def test_positive(self, draws):
        assert draws.min() > 0
