"""Smoke test for the facetflow extension module.

Build with `maturin develop -m crates/py/Cargo.toml` or `cargo build --release -p facetflow-py`;
in the second case the shared library under target/release is loaded directly.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import facetflow

        return facetflow
    except ImportError:
        pass
    for name in ("libfacetflow.so", "libfacetflow.dylib", "facetflow.dll"):
        lib = ROOT / "target" / "release" / name
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("facetflow", str(lib))
            spec = importlib.util.spec_from_loader("facetflow", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("facetflow extension not found; build it first")


def main():
    ff = load()

    ball = ff.Domain.ball(2.0, 64)
    rep = ff.classify(ball, 1.0, 2.0, -1, tau=1.0)
    assert rep.case == "ball_coherent", rep
    assert abs(rep.lam - 2.0 / 7.0) <= 1e-14 and rep.coherent
    assert json.loads(rep.to_json())["case"] == "ball_coherent"

    ann = ff.Domain.annulus(0.5, 4.0, 64)
    assert ff.classify(ann, 0.5, 1.0, 1).detached
    assert ff.classify(ann, 0.5, 1.5, 1).case == "annulus_borderline"
    assert ff.onset(ann, 1).case == "onset_detach"

    lam, mu = ff.quad_min(1.0, 2.0, 0.5, 1.5)
    assert abs(1.5 * lam + mu) <= 1e-14

    line = ff.Domain.interval(1.0, 101)
    ramp = json.dumps({"type": "ramp", "slope": 1.0, "intercept": 0.0})
    exact = ff.evolve_exact(line, ramp, 1e-3, 0.05)
    pde = ff.run_pde(line, line.nodes, 1e-3, 0.05)
    assert len(exact) == len(pde) == 51
    assert all(b <= a + 1e-12 for a, b in zip(pde.energy, pde.energy[1:]))
    err = max(abs(x - y) for x, y in zip(exact.u[-1], pde.u[-1]))
    assert err < 1e-3, err

    try:
        ff.Domain.annulus(2.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid annulus accepted")

    with tempfile.TemporaryDirectory() as out:
        scenario = {
            "mode": "classify",
            "domain": {"kind": "ball", "R": 2, "n": 64},
            "facet": {"inner": 1, "outer": 2, "chi": -1},
        }
        assert ff.run_scenario(json.dumps(scenario), out)
        report = json.loads((pathlib.Path(out) / "report.json").read_text())
        assert math.isclose(report["facets"][0]["lambda"], 2.0 / 7.0, rel_tol=1e-14)

    print("python smoke test passed; final L-inf gap between PDE and exact:", err)


if __name__ == "__main__":
    main()
