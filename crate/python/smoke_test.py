"""Smoke test for the Python extension.

Builds nothing itself: run `cargo build -p netprice-py` first, or install
with `maturin develop -m crates/netprice-py/Cargo.toml`. Without an
installed module the freshly built library is loaded from target/.
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    try:
        import netprice

        return netprice
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libnetprice_py.so"
        if lib.exists():
            break
    else:
        sys.exit("netprice extension not found; run `cargo build -p netprice-py`")
    path = pathlib.Path(tempfile.mkdtemp()) / "netprice.so"
    shutil.copy(lib, path)
    spec = importlib.util.spec_from_file_location("netprice", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    np = load()

    eco = np.Economy(n=300, seed=1)
    assert eco.n == 300 and len(eco.degrees) == 300
    assert abs(sum(eco.stationary) - 1.0) < 1e-10
    spec = eco.spectral()
    assert 0.0 < spec["lambda2"] < 1.0

    again = np.Economy.from_json(eco.to_json())
    assert again.degrees == eco.degrees

    run = eco.simulate(pi=0.02, hazard=True, horizon=60)
    assert len(run.phi) == 60 and run.sticky_omega is not None
    assert abs(run.phi[-1] - math.log1p(0.02)) < 1e-3
    assert abs(run.mass[-1] - 1.02**60) < 1e-8 * 1.02**60
    summary = run.summary()
    assert summary["lambda2"] == run.lambda2
    theory = run.theory(calvo_eta=0.5)
    assert theory["calvo"]["phi"] == 0.04

    calvo = np.calvo_baselines(0.02, 0.5)
    assert abs(calvo["phi"] - 0.04) < 1e-15
    assert np.wronskian_band(0.6, 0.02, 0.1, 1.0, 10)["t"] == 10

    report = np.ensemble(replications=3, horizons=[1, 10], network={"n": 300}, horizon=20, window=[10, 20])
    assert report["included"] == 3

    for bad in (lambda: np.Economy(alpah=2.0), lambda: np.calvo_baselines(0.02, 0.0)):
        try:
            bad()
        except (ValueError, np.NumericalError):
            pass
        else:
            raise AssertionError("expected an error")

    print(f"ok: {eco!r}, lambda2={run.lambda2:.4f}, omega_bar={summary['omega_bar']:.3e}")


if __name__ == "__main__":
    main()
