import math

import numpy as np
import pytest

from ndde.errors import ValidationError
from ndde.regions import (
    ConstantsBundle,
    RegionQuery,
    classify_region,
    nua_holds,
    sweep_regions,
    ue_augmented_holds,
    ue_nonaugmented_holds,
)

CONSTS = ConstantsBundle(C2=0.5, M=1.0, A=0.0, r0=1.0, r1=0.25, eps=0.1)


class TestClassify:
    def test_nonaugmented_boundary(self):
        lab = classify_region(RegionQuery(K=4.0, tau=1.0))
        assert lab.label == "UE_nonaugmented"
        assert classify_region(RegionQuery(K=3.99, tau=1.0)).label == "unknown"

    def test_ode_case(self):
        assert classify_region(RegionQuery(K=1.0, tau=0.0)).label == "nUA"

    def test_augmented(self):
        lab = classify_region(RegionQuery(K=1.0, tau=0.3, m=2, K_psi=0.5))
        assert lab.label == "UE_augmented"

    def test_small_delay_needs_constants(self):
        q = RegionQuery(K=1.0, tau=1e-4)
        assert classify_region(q).label == "unknown"
        lab = classify_region(RegionQuery(K=1.0, tau=1e-4, constants=CONSTS))
        assert lab.label == "nUA" and "C2 = 0.5" in lab.justification

    def test_augmented_width_never_nua(self):
        q = RegionQuery(K=0.1, tau=0.0, m=2, K_psi=1.0)
        assert not nua_holds(q)[0]
        assert classify_region(q).label == "unknown"

    @pytest.mark.parametrize("kw", [dict(m=0), dict(K=-1.0), dict(tau=2.0), dict(w=0.0),
                                    dict(T=0.0)])
    def test_validation(self, kw):
        base = dict(K=1.0, tau=0.5)
        base.update(kw)
        with pytest.raises(ValidationError):
            classify_region(RegionQuery(**base))


class TestProperties:
    def test_disjoint_on_random_points(self):
        rng = np.random.default_rng(0)
        for _ in range(3000):
            m, n, q = (int(v) for v in rng.integers(1, 4, 3))
            T = float(rng.uniform(0.5, 2.0))
            query = RegionQuery(K=float(rng.uniform(0, 20)), tau=float(rng.uniform(0, T)), T=T,
                                m=m, n=n, q=q, K_psi=float(rng.uniform(0, 3)),
                                constants=CONSTS)
            ue = ue_nonaugmented_holds(query) or ue_augmented_holds(query)
            assert not (ue and nua_holds(query)[0])

    def test_nonaugmented_region_inside_augmented(self):
        rng = np.random.default_rng(1)
        for _ in range(3000):
            n, q = (int(v) for v in rng.integers(1, 3, 2))
            m = n + q + int(rng.integers(0, 2))
            query = RegionQuery(K=float(rng.uniform(0, 20)), tau=float(rng.uniform(0, 1)), m=m,
                                n=n, q=q, K_psi=float(rng.uniform(0, 3)))
            if ue_nonaugmented_holds(query):
                assert ue_augmented_holds(query)


class TestSweep:
    def test_shape_and_labels(self):
        fixed = RegionQuery(K=0.0, tau=0.0, constants=CONSTS)
        sw = sweep_regions((0.0, 10.0), (0.0, 1.0), 41, fixed)
        assert sw.labels.shape == (41, 41)
        j = int(np.argmin(np.abs(sw.K_values - 4.0)))
        assert sw.labels[-1, j] == "UE_nonaugmented"
        assert all(v == "nUA" for v in sw.labels[0])
        assert not sw.overlap.any()
        assert sw.upward_closed_in_K()
        assert sw.count("nUA") > 41

    def test_csv_and_svg(self):
        sw = sweep_regions((0.0, 10.0), (0.0, 1.0), 5, RegionQuery(K=0.0, tau=0.0))
        lines = sw.to_csv().split("\r\n")
        assert lines[0] == "K,tau,label,justification"
        assert len(lines) == 5 * 5 + 2
        assert lines[1].startswith("0,0,nUA,")
        svg = sw.to_svg()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        for color in ("#2b8cbe", "#e34a33"):
            assert color in svg

    def test_workers_give_same_result(self):
        fixed = RegionQuery(K=0.0, tau=0.0, constants=CONSTS)
        a = sweep_regions((0.0, 10.0), (0.0, 1.0), 12, fixed)
        b = sweep_regions((0.0, 10.0), (0.0, 1.0), 12, fixed, workers=2)
        assert np.array_equal(a.labels, b.labels) and a.to_csv() == b.to_csv()

    def test_augmented_sweep(self):
        fixed = RegionQuery(K=0.0, tau=0.0, m=2, K_psi=0.5)
        sw = sweep_regions((0.0, 2.0), (0.0, 1.0), 21, fixed)
        assert set(np.unique(sw.labels)) <= {"UE_augmented", "UE_nonaugmented", "unknown"}
        assert sw.upward_closed_in_K()

    def test_resolution(self):
        with pytest.raises(ValidationError):
            sweep_regions((0.0, 1.0), (0.0, 1.0), 1, RegionQuery(K=0.0, tau=0.0))

    def test_nua_below_tau0(self):
        fixed = RegionQuery(K=0.0, tau=0.0, constants=CONSTS)
        sw = sweep_regions((0.5, 10.0), (0.0, 0.002), 30, fixed)
        for i, tau in enumerate(sw.tau_values[1:], start=1):
            for j, K in enumerate(sw.K_values):
                if sw.labels[i, j] == "nUA":
                    assert K * tau * math.e < 1.0
