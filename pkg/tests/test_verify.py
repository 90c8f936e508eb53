import pytest

from reverse_sobolev import verify
from reverse_sobolev.specialfn import SpectralParams


def test_admissible_sample_is_valid_and_reproducible():
    a = verify.admissible_sample(30, seed=4)
    assert a == verify.admissible_sample(30, seed=4)
    assert all(0 < P.sigma < 2 and abs(P.sigma - 1) >= 0.02 for P in a)
    assert {P.window for P in a} == {0, 1}


@pytest.mark.parametrize("suite", ["constants", "sphere", "asymptotics"])
def test_fast_suites_pass(params, suite):
    checks = verify.run_suite(suite, params)
    failed = [c.name for c in checks if not c.passed]
    assert not failed
    assert all(c.anchor for c in checks)


def test_tamper_is_detected():
    checks = verify.suite_constants(SpectralParams(2, 1.5), tamper=1e-6, sweep=3)
    failed = {c.name for c in checks if not c.passed}
    assert "sobolev_constant_identity" in failed


def test_sphere_suite_custom_resolution():
    checks = verify.suite_sphere(SpectralParams(2, 1.5), resolution=40)
    assert all(c.passed for c in checks)


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify.run_suite("bogus", SpectralParams(2, 1.5))


def test_run_report_shape():
    out = verify.run(["constants"], [(1, 0.75)], tamper=0.0)
    assert out["passed"] and out["failed"] == []
    c = out["checks"][0]
    assert set(c) >= {"suite", "name", "passed", "value", "tolerance", "anchor", "params"}
