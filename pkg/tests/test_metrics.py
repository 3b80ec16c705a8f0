import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topocluster.density import NOISE, dbscan
from topocluster.metrics import ari, ari_score, contingency, nmi_score
from topocluster.toy import toy_distance_matrix

from oracles import pair_count_ari, plain_entropy, plain_mutual_info


labelings = st.integers(2, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-1, 4), min_size=n, max_size=n),
        st.lists(st.integers(-1, 4), min_size=n, max_size=n),
    )
)


class TestContingency:
    def test_direct_count(self):
        assert contingency([0, 0, 1], [1, 1, 0]).counts.tolist() == [[0, 2], [1, 0]]

    def test_noise_as_cluster(self):
        t = contingency([NOISE, NOISE, 0, 1], [0, 0, 0, 1])
        assert t.counts.shape == (3, 2)
        assert t.row_sums.tolist() == [2, 1, 1]

    def test_exclude(self):
        t = contingency([NOISE, NOISE, 0, 1], [0, 0, 0, 1], noise_policy="exclude")
        assert t.n == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            contingency([0, 1], [0])

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            contingency([0, 1], [0, 1], noise_policy="drop")

    def test_accepts_labeling(self):
        lab = dbscan(toy_distance_matrix(), 0.74, 2)
        assert contingency(lab, [0, 0, 0, 1, 1, 1]).counts.tolist() == [[0, 3], [3, 0]]


class TestAri:
    def test_identical(self):
        assert ari_score([0, 0, 1, 2], [5, 5, 7, 9]) == 1.0

    def test_hand_value(self):
        assert ari_score([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-15)

    def test_single_vs_single(self):
        assert ari_score([0, 0, 0], [3, 3, 3]) == 1.0

    def test_all_singletons_vs_single(self):
        assert ari_score([0, 1, 2], [0, 0, 0]) == 0.0

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            ari(contingency([0], [0]))

    def test_pair_counting_oracle(self):
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 31))
            a = rng.integers(0, rng.integers(1, 6), n)
            b = rng.integers(0, rng.integers(1, 6), n)
            ref = pair_count_ari(a, b)
            got = ari_score(a, b)
            if ref is None:
                assert got in (0.0, 1.0)
            else:
                worst = max(worst, abs(got - ref))
        assert worst <= 1e-12

    def test_large_n_no_overflow(self):
        n = 1_000_000
        a = np.arange(n) % 3
        assert ari_score(a, a) == 1.0

    def test_refinement_lowers_ari(self):
        truth = np.repeat([0, 1, 2], 20)
        split = truth.copy()
        split[:10] = 3
        assert ari_score(truth, split) < 1.0

    @settings(max_examples=100, deadline=None)
    @given(labelings)
    def test_symmetric_and_bounded(self, ab):
        a, b = map(np.asarray, ab)
        x = ari_score(a, b)
        assert x == pytest.approx(ari_score(b, a), abs=1e-15)
        assert -1.0 <= x <= 1.0

    @settings(max_examples=60, deadline=None)
    @given(labelings, st.randoms(use_true_random=False))
    def test_relabel_invariant(self, ab, rnd):
        a, b = map(np.asarray, ab)
        ids = list(range(-1, 5))
        perm = ids[:]
        rnd.shuffle(perm)
        relabel = dict(zip(ids, perm))
        a2 = np.array([relabel[v] for v in a])
        assert ari_score(a2, b) == pytest.approx(ari_score(a, b), abs=1e-15)


class TestNmi:
    def test_identical_multi(self):
        assert nmi_score([0, 0, 1, 1, 2], [4, 4, 3, 3, 1]) == pytest.approx(1.0, abs=1e-15)

    def test_independent(self):
        assert nmi_score([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_single_vs_single_undefined(self):
        assert math.isnan(nmi_score([0, 0, 0], [1, 1, 1]))

    def test_single_vs_multi_zero(self):
        assert nmi_score([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0

    def test_max_normalisation(self):
        a = np.array([0, 0, 1, 1, 2, 2])
        b = np.array([0, 0, 0, 1, 1, 1])
        ref = plain_mutual_info(a, b) / max(plain_entropy(a), plain_entropy(b))
        assert nmi_score(a, b) == pytest.approx(ref, abs=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(labelings)
    def test_properties(self, ab):
        a, b = map(np.asarray, ab)
        x = nmi_score(a, b)
        y = nmi_score(b, a)
        ha, hb = plain_entropy(a), plain_entropy(b)
        if max(ha, hb) == 0:
            assert math.isnan(x) and math.isnan(y)
            return
        assert 0.0 <= x <= 1.0
        assert x == pytest.approx(y, abs=1e-14)
        mi = plain_mutual_info(a, b)
        assert mi <= min(ha, hb) + 1e-12
        assert x == pytest.approx(mi / max(ha, hb), abs=1e-12)

    def test_exclude_policy(self):
        truth = [0, 0, 1, 1, 1]
        pred = [0, NOISE, 1, 1, NOISE]
        assert nmi_score(truth, pred, "exclude") == pytest.approx(1.0)
        assert nmi_score(truth, pred) < 1.0
