"""Smoke test for the wnchaos_py extension module.

Build and run from the workspace root:

    cargo build --release -p wnchaos-py --features extension-module
    cp target/release/libwnchaos_py.so crates/python/python/wnchaos_py.so
    python3 crates/python/python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import wnchaos_py as w  # noqa: E402


def close(a, b, tol=1e-10):
    assert abs(a - b) <= tol, (a, b)


def main():
    # eta_0 is the square root of the standard normal density
    close(w.hermite_fn(0, 0.0), (2.0 * math.pi) ** -0.25)

    one = w.ChaosVector.constant(1.0)
    h0 = w.ChaosVector.from_terms([([(0, 1)], 1.0)])
    h1 = w.ChaosVector.from_terms([([(1, 1)], 1.0)])

    # H_e1 * H_e1 = H_2e1 + 1 (pointwise), H_e1 <> H_e1 = H_2e1 (Wick)
    sq = h0 * h0
    close(sq.get([(0, 2)]), 1.0)
    close(sq.expectation(), 1.0)
    close(h0.wick(h0).expectation(), 0.0)
    assert len(one) == 1

    # S-transform turns the Wick product into a product
    f = one + h0
    g = h1 - h0.scale(2.0)
    phi = [0.5, 0.4]
    close(f.wick(g).s_transform(phi), f.s_transform(phi) * g.s_transform(phi))

    # Wick exponential: E = 1 and ||exp<>(f)||_0^2 = exp(|f|^2)
    e = w.ChaosVector.wick_exp([0.3, 0.4], order=20)
    close(e.expectation(), 1.0)
    close(e.norm(0) ** 2, math.exp(0.25), 1e-8)

    # the expression language agrees with the object API
    close(w.eval("let f = 0.3 * H[0] + 0.4 * H[1]; E(wexp(f))"), 1.0)
    v = w.eval("H[0] * H[0]")
    assert v == sq, (v, sq)
    assert w.ChaosVector.from_text(sq.to_text()) == sq

    # white noise and Brownian motion
    wn = w.white_noise([0.7], 8)
    assert len(wn) > 0
    # E B(t)^2 = t is approached from below as modes are added
    n8, n32 = (w.brownian(1.0, k).norm(0) ** 2 for k in (8, 32))
    assert n8 < n32 < 1.0, (n8, n32)
    d = w.donsker_delta(0.0, 1.0)
    close(d.expectation(), 1.0 / math.sqrt(2.0 * math.pi), 1e-10)

    rows = w.classify([w.white_noise([0.0], m) for m in range(1, 17)], [0, 1])
    assert rows and all(len(r) == 4 for r in rows)

    u, se = w.fk_solve("heat-gaussian", 0.1, 0.0, n_paths=4000, dt=0.01, seed=1)
    assert math.isfinite(u.expectation()) and se.expectation() > 0

    with tempfile.TemporaryDirectory() as out:
        passed, summary, manifest = w.run_experiment("algebra-suite", out)
        assert passed, summary
        assert os.path.exists(os.path.join(out, "manifest.json"))
        assert json.loads(manifest)["pass"] is True

    try:
        w.eval("1 +")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("smoke test ok")


if __name__ == "__main__":
    main()
