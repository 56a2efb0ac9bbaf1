"""Load the built extension straight from target/ and exercise the bindings.

    cargo build --release -p vortexlab-py
    python3 python/smoke_test.py
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    for profile in ("release", "debug"):
        path = os.path.join(ROOT, "target", profile, "libvortexlab_py.so")
        if os.path.exists(path):
            loader = importlib.machinery.ExtensionFileLoader("vortexlab_py", path)
            spec = importlib.util.spec_from_file_location("vortexlab_py", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("libvortexlab_py.so not found; run cargo build --release -p vortexlab-py")


def main():
    vl = load()
    p = vl.Profile.reference()
    print(repr(p), vl.__version__)

    assert abs(p.xi(-30.0) - p.xi_minus_inf) < 1e-12
    assert abs(p.xi(30.0)) < 1e-6
    assert p.alpha_bar == 0.5
    report = p.validate()
    assert all(c["passed"] for c in report["checks"]), report

    clone = vl.Profile.from_json(p.to_json())
    assert clone.xi(0.37) == p.xi(0.37)
    assert json.loads(clone.to_json()) == json.loads(p.to_json())

    lam_a, lam_b, m_a, m_b = vl.neutral_wavenumbers(p)
    print(f"lambda_a={lam_a:.10f} lambda_b={lam_b:.10f} m_a={m_a:.10f} m_b={m_b:.10f}")
    assert abs(lam_a / 313.8269454840964 - 1.0) < 1e-7
    assert abs(m_a * m_a - lam_a) < 1e-9 * lam_a
    assert m_b < 2.0 < m_a

    mode = vl.smallest_eigenvalue(p, "b")
    assert mode["nodes"] == 0

    zs = vl.find_eigenvalues(p, 2.0)
    assert zs and all(z.imag > 0 for z in zs), zs
    z = zs[0]
    print(f"z(m=2)={z}")
    assert abs(vl.evans(p, 2.0, z)) < 1e-6

    _, unstable = vl.spectrum(p, 2.0, n=512)
    assert unstable and max(l.imag for l in unstable) > 0
    print(f"leading lambda(m=2)={max(unstable, key=lambda l: l.imag)}")

    tau, norms = vl.evolve_norms(p, 2.0, 5.0, 1e-3, seed=3, record_every=1000)
    assert len(tau) == len(norms) == 6 and all(math.isfinite(n) for n in norms)

    rows = vl.norm_scan(p, [0.01, 0.1])
    assert len(rows["rows"] if isinstance(rows, dict) else rows) == 2

    passed, text = vl.reproduce("class-C")
    print(text.splitlines()[-1])
    assert passed

    try:
        vl.Profile(1.5, 1000.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha_bar outside (0, 1) must raise ValueError")

    try:
        vl.reproduce("p9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown recipe must raise ValueError")

    print("smoke test OK")


if __name__ == "__main__":
    main()
