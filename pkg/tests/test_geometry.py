import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enhcircle.fiducial import FiducialSpec, build_fiducial
from enhcircle.geometry import (
    analytic_form,
    cross_term_bound,
    fs_form,
    fubini_study_fd_check,
    metric_coefficients,
)

REF = build_fiducial(FiducialSpec(0.25, 16, 0.5), p_max=4.0)


class TestCoefficients:
    def test_flat_limit(self):
        rec = metric_coefficients(build_fiducial(FiducialSpec(0.25, 4, 1e-12)))
        assert rec.D == pytest.approx(math.pi**2 / 3, abs=1e-6)
        assert rec.D_prime - 0.0625 == pytest.approx(0.0, abs=1e-6)
        assert abs(rec.A_alpha) < 1e-4

    @pytest.mark.parametrize("k,b", [(2, 0.1), (16, 0.5), (64, 0.9)])
    def test_positive_and_c_alpha(self, k, b):
        rec = metric_coefficients(build_fiducial(FiducialSpec(0.5, k, b)))
        assert rec.D > 0
        assert rec.c_alpha == rec.D

    def test_single_source(self):
        rec = metric_coefficients(REF)
        m = REF.moments
        assert rec.D == pytest.approx(m.var_Q, abs=1e-12)
        assert rec.D_prime == pytest.approx(m.mean_P2, abs=1e-12)

    def test_alpha_invariance(self):
        recs = [metric_coefficients(build_fiducial(FiducialSpec(a, 16, 0.5))) for a in (0.0, 0.25, 0.9)]
        for r in recs[1:]:
            assert r.D == pytest.approx(recs[0].D, abs=1e-10)
            assert r.A_alpha == pytest.approx(recs[0].A_alpha, abs=1e-10)

    def test_to_dict_keys(self):
        d = metric_coefficients(REF).to_dict()
        assert set(d) == {"D", "D_prime", "c_alpha", "A_alpha", "cross_bound", "q_scale"}


class TestFubiniStudy:
    def test_pure_dp(self):
        assert fubini_study_fd_check(REF, 0.0, 0.0, 1e-3, 0.0).rel_error < 1e-3

    def test_pure_dq(self):
        assert fubini_study_fd_check(REF, 0.0, 0.0, 0.0, 1e-3).rel_error < 1e-3

    def test_mixed_and_cross(self):
        chk = fubini_study_fd_check(REF, 0.0, 0.0, 1e-3, 1e-3)
        assert chk.rel_error < 1e-3
        assert chk.cross_ok
        assert abs(chk.cross_coefficient) <= max(1e-8, chk.cross_bound)

    def test_cross_bound_tracks_seam(self):
        # at small k the seam value is visible and the measured cross term stays under its bound
        fid = build_fiducial(FiducialSpec(0.25, 3, 0.3), p_max=2.0)
        chk = fubini_study_fd_check(fid, 0.4, 0.2, 1e-3, 1e-3)
        assert cross_term_bound(fid) > 1e-8
        assert chk.cross_ok

    def test_fourth_order_remainder(self):
        errs = []
        for d in (4e-3, 2e-3, 1e-3):
            chk = fubini_study_fd_check(REF, 0.0, 0.0, d, d)
            errs.append(abs(chk.fd_value - chk.analytic_value))
        for a, b in zip(errs, errs[1:]):
            assert 10 <= a / b <= 22

    @settings(max_examples=15, deadline=None)
    @given(p=st.floats(-2, 2), q=st.floats(-6, 6))
    def test_flatness(self, p, q):
        base = fs_form(REF, 0.0, 0.0, [(1e-3, 1e-3)])[0]
        moved = fs_form(REF, p, q, [(1e-3, 1e-3)])[0]
        assert moved == pytest.approx(base, rel=1e-6)

    def test_reference_flatness_point(self):
        base = fs_form(REF, 0.0, 0.0, [(1e-3, 1e-3)])[0]
        assert fs_form(REF, 1.3, 0.7, [(1e-3, 1e-3)])[0] == pytest.approx(base, rel=1e-6)

    def test_analytic_form(self):
        rec = metric_coefficients(REF)
        val = analytic_form(REF, 2e-3, 1e-3)
        expected = (rec.D * 4e-6 + (rec.D_prime - 0.0625) * 1e-6) / REF.spec.hbar**2
        assert val == pytest.approx(expected, rel=1e-14)

    def test_hbar_scaling(self):
        fid = build_fiducial(FiducialSpec(0.25, 16, 0.5, hbar=0.5), p_max=2.0)
        chk = fubini_study_fd_check(fid, 0.0, 0.0, 1e-3, 1e-3)
        assert chk.rel_error < 1e-3

    def test_overlap_form_nonnegative(self):
        vals = fs_form(REF, 0.3, -0.2, [(d, e) for d in (0.0, 1e-2) for e in (-1e-2, 0.0, 1e-2)])
        assert np.all(vals >= -1e-13)  # zero displacement leaves only roundoff
