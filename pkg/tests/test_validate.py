import numpy as np

from reflectfield import raymarch
from reflectfield.validate import ALL_CHECKS, check_telescoping, run_validation


class TestChecks:
    def test_all_pass_with_default_seed(self):
        lines = []
        assert run_validation(seed=0, out=lines.append)
        assert len(lines) == len(ALL_CHECKS)
        assert all(line.startswith("PASS") for line in lines)

    def test_broken_weights_trip_the_canary(self):
        # mutation canary: a deliberately wrong weights function must FAIL
        def inclusive_weights(sig, dt):
            return raymarch.contribution_weights(sig, dt, inclusive=True)

        ok, detail = check_telescoping(np.random.default_rng(0),
                                       weights_fn=inclusive_weights)
        assert not ok

    def test_crashing_check_reports_failure(self):
        def boom(rng):
            raise RuntimeError("synthetic crash")

        lines = []
        ok = run_validation(checks=[("boom", boom)], out=lines.append)
        assert not ok
        assert "FAIL" in lines[0] and "synthetic crash" in lines[0]

    def test_seed_dependence_is_explicit(self):
        a, b = [], []
        run_validation(seed=1, out=a.append)
        run_validation(seed=1, out=b.append)
        assert a == b
