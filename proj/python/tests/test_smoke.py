import math

import pytest

import balloc


def test_two_choice_vector():
    assert balloc.allocation_vector("two-choice", 4) == pytest.approx([1 / 16, 3 / 16, 5 / 16, 7 / 16], abs=0)


def test_run_conserves_balls():
    loads = balloc.final_loads("two-choice", 64, 640, seed=3)
    assert sum(loads) == 640
    assert balloc.gap(loads) >= 0


def test_runs_are_deterministic():
    a = balloc.final_loads("one-plus-beta:beta=0.5", 32, 500, seed=9, weights="exp1")
    b = balloc.final_loads("one-plus-beta:beta=0.5", 32, 500, seed=9, weights="exp1")
    assert a == b


def test_potential_of_pair():
    r = balloc.potential([1.0, -1.0], 1.0)
    assert r["gamma_total"] == pytest.approx(6.1723225392609751, rel=1e-14)


def test_key_lemma_constant_half():
    assert balloc.key_lemma_constant(0.5) == pytest.approx(6.5319726474218083, rel=1e-14)


def test_certify_rejects_non_c1_vector():
    with pytest.raises(ValueError):
        balloc.certify_key_lemma([1.0, 0.0, 0.0, -1.0], [0.25] * 4, 0.25, 0.5, 0.1)


def test_certify_passes_two_choice():
    r = balloc.certify_key_lemma([3.0, 1.0, -1.0, -3.0], balloc.allocation_vector("two-choice", 4), 0.25, 0.5, 0.5)
    assert r["pass"]


def test_conductance_complete():
    assert balloc.conductance_exact("complete", 4) == pytest.approx(2 / 3)


def test_batched_weighted_rejected():
    cfg = "process=two-choice\nn=16\nb=n\nweights=exp1\n"
    with pytest.raises(ValueError, match="unit-weight"):
        balloc.simulate_csv(cfg)


def test_simulate_csv_shape():
    cfg = "process=one-plus-beta\nn=32\nbeta=0.5,1\nm=4n\nrepetitions=2\nprobes=final\n"
    lines = balloc.simulate_csv(cfg).strip().split("\n")
    assert lines[0].startswith("process,n,beta")
    assert len(lines) == 1 + 2 * 2


def test_cli_vector():
    code, out, _ = balloc.cli(["vector", "two-choice", "4"])
    assert code == 0
    assert out.splitlines() == ["0.0625,0.1875,0.3125,0.4375", "C1: pass (δ=1/4, ε=1/2), C2: pass (C=2)"]


def test_cli_unknown_subcommand():
    code, _, _ = balloc.cli(["frobnicate"])
    assert code == 1


def test_selftest_subset():
    results = balloc.selftest("weights.")
    assert results and all(ok for _, ok, _ in results)
    assert math.isfinite(balloc.s_constant("exp1"))
