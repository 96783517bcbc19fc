#!/usr/bin/env python3
"""Smoke test for the htem_py extension module.

Builds nothing itself: it looks for the compiled cdylib under target/
(`cargo build -p htem-py` first), stages it under an importable name,
and exercises the bound API end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def find_cdylib():
    candidates = []
    for profile in ("release", "debug"):
        for name in ("libhtem_py.so", "libhtem_py.dylib", "htem_py.dll"):
            path = REPO / "target" / profile / name
            if path.exists():
                candidates.append(path)
    if not candidates:
        sys.exit("no built extension found; run `cargo build -p htem-py` first")
    return candidates[0]


def main():
    staging = Path(tempfile.mkdtemp(prefix="htem_py_"))
    shutil.copy(find_cdylib(), staging / "htem_py.so")
    sys.path.insert(0, str(staging))
    import htem_py

    # threshold arithmetic has a closed form: 3.2/10 odds -> 0.32/1.32
    assert abs(htem_py.bf_threshold(3.2, 1.0, 10.0) - 0.32 / 1.32) < 1e-12
    assert htem_py.bf_threshold(1.0, 1.0, 1.0) == 0.5

    # Bessel: K_v = K_{-v}
    assert abs(htem_py.log_bessel_k(2.5, 1.3) - htem_py.log_bessel_k(-2.5, 1.3)) < 1e-12

    # GIG(p=-0.5, a, b) is inverse-Gaussian-like with known mean sqrt(b/a)
    draws = htem_py.gig_draws(-0.5, 4.0, 1.0, size=20000, seed=1)
    mean = sum(draws) / len(draws)
    assert abs(mean - 0.5) < 0.02, mean
    assert min(draws) > 0.0

    # scenario I: strong signals on indices 1,2,5,7,10 (1-based)
    x, y, beta_true = htem_py.simulate_scenario("I", n=80, p=15, seed=42)
    assert len(x) == 80 and len(x[0]) == 15 and len(y) == 80
    assert len(beta_true) == 16 and beta_true[0] == 2.0 and beta_true[1] == 3.0

    model = htem_py.fit(x, y, mode="htem", iters=3000, burnin=500, seed=7)
    assert model.n_draws() == 2500
    assert 0.0 < model.accept_rate() < 1.0
    assert 0.0 <= model.p_hyperbolic() <= 1.0

    incl = model.inclusion_prob()
    signal = [0, 1, 4, 6, 9]  # 0-based covariate indices of the true signals
    for j in signal:
        assert incl[j] > 0.9, (j, incl[j])

    selected = model.select()
    assert all(selected[j] for j in signal)

    intercept, coefs = model.coefficients()
    assert abs(intercept - 2.0) < 1.0
    for j in signal:
        assert abs(coefs[j] - 3.0) < 1.0, (j, coefs[j])

    bands = model.predict(x[:10], level=0.9, predict_thin=10, seed=3)
    assert len(bands) == 10
    for (med, lo, hi), yi in zip(bands, y[:10]):
        assert lo < med < hi
        assert hi - lo < 30.0
        assert math.isfinite(med)

    # errors surface as Python exceptions
    try:
        htem_py.fit(x, y, mode="bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("bad mode should raise")

    shutil.rmtree(staging, ignore_errors=True)
    print("htem_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
