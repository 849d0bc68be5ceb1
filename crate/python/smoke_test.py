#!/usr/bin/env python3
"""Smoke test for the sembase extension module.

Build the module first, then run this script:

    cargo build -p sembase-py --release
    ln -sf ../target/release/libsembase.so python/sembase.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import sembase


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # Types and the coder.
    b1 = sembase.SemanticBase([3.0, 4.0])
    assert approx(b1.vector[0], 0.6) and approx(b1.vector[1], 0.8)
    b2 = sembase.SemanticBase([4.0, -3.0], name="contrast")
    bases = sembase.BaseSet([b1, b2])
    assert len(bases) == 2 and bases.dim == 2

    x = sembase.Signal([1.2, 1.6], modality="sound")
    code = sembase.encode(x, bases, sparsity=2)
    assert code.nnz == 1, f"expected a one-atom code, got {code.entries()}"
    assert approx(code.residual_norm, 0.0, 1e-12)
    rebuilt = sembase.reconstruct(code, bases)
    assert all(approx(a, b, 1e-12) for a, b in zip(rebuilt.values, x.values))
    assert approx(sembase.cognitive_error(x, bases, sparsity=2), 0.0, 1e-18)

    # Decomposition on a planted corpus.
    samples, planted = sembase.synthesize("atoms", d=16, n=64, seed=7, atoms=3)
    assert len(samples) == 64 and samples.dim == 16
    result = sembase.decompose(
        samples,
        epsilon=1e-9,
        n_range=(2, 5),
        restarts=24,
        delta_d=0.8,
        seed=7,
        sparsity=3,
    )
    assert result["feasible"], "planted corpus must be representable"
    found = result["bases"]
    assert len(found) == 3, f"expected 3 bases, selected {len(found)}"
    for atom in planted:
        best = min(
            math.acos(min(1.0, abs(sum(a * b for a, b in zip(atom, base.vector)))))
            for base in found.bases()
        )
        assert best <= 1e-4, f"planted atom missed by {best} rad"

    # The oracle agrees on a tiny instance.
    tiny = sembase.SampleSet(
        [
            sembase.Signal([1.0, 0.0]),
            sembase.Signal([0.0, 2.0]),
            sembase.Signal([0.5, 0.0]),
            sembase.Signal([0.0, 0.7]),
        ],
        seed=1,
    )
    solved = sembase.decompose(tiny, epsilon=1e-6, n_range=(2, 2), sparsity=1, seed=1)
    oracle = sembase.oracle_decompose(
        tiny, epsilon=1e-6, n_range=(2, 2), levels=[-1.0, 0.0, 1.0], sparsity=1
    )
    assert approx(solved["objective"], oracle["objective"], 1e-6)

    # Hierarchy on the two-level fixture.
    hcorpus, _ = sembase.synthesize("hierarchy", d=32, n=128, seed=3, parents=2)
    build = sembase.build_hierarchy(
        hcorpus,
        epsilon=1e-9,
        n_range=(3, 4),
        restarts=64,
        delta_d=0.02,
        seed=3,
        tau=0.45,
        sparsity=2,
        lam=800.0,
    )
    assert build["depth"] >= 2, f"expected a two-level hierarchy, got {build['depth']}"
    log = build["objective_log"]
    assert all(a > b for a, b in zip(log, log[1:])), "objective log must strictly decrease"

    # Composition and verification.
    spec = sembase.Coefficients({0: 1.0, 1: 0.25}, length=len(found))
    composed, verified, novel = sembase.compose_and_verify(
        spec, found, samples, theta=0.05, sparsity=3
    )
    assert len(composed) == 16
    assert isinstance(verified, bool) and isinstance(novel, bool)

    # Message algebra.
    info, known, dark = sembase.partition(
        ["1", "2", "3", "4", "5", "6"],
        ["1", "2", "3", "4"],
        ["1"],
        ["1", "2", "3"],
    )
    assert info == ["2", "3"] and known == ["1"] and dark == ["4"]

    a = sembase.Signal([1.0, 2.0])
    assert sembase.understanding(a, a, tol=0.0)
    b = sembase.Signal([1.0, 2.5])
    assert not sembase.understanding(b, a, tol=0.1)

    print("smoke test passed")


if __name__ == "__main__":
    main()
