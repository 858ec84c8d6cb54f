"""Golden-value corpus: regeneration and comparison.

Each physics area has one CSV under ``goldens/``. Rows are golden records
(case id, inputs, expected outputs, tolerance, provenance); provenance is
``oracle`` (independent solver), ``closed-form`` or ``limit``. Nothing is
hand-entered.

Usage::

    python -m qbranch.corpus --check           # compare against the files
    python -m qbranch.corpus --write           # regenerate (explicit flag)
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from qbranch import phases
from qbranch.oracle import PiecewisePotential, radial_coulomb_integrate, transfer_matrix_transmission
from qbranch.serialize import Table, atomic_write

GENERATOR = "python -m qbranch.corpus --write"
CORPUS_SEED = 20240611


def barrier_corpus() -> Table:
    """Transfer-matrix transmission for ``E/V0`` in 0.1..0.9 and ``a`` in {0.5, 1, 2, 5}."""
    ids, ev, widths, T, R = [], [], [], [], []
    for i in range(1, 10):
        e = i / 10.0
        for a in (0.5, 1.0, 2.0, 5.0):
            res = transfer_matrix_transmission(PiecewisePotential.barrier(1.0, a), e)
            ids.append(f"barrier-e{i}-a{a:g}")
            ev.append(e)
            widths.append(a)
            T.append(res.T)
            R.append(res.R)
    n = len(ids)
    return Table({"case_id": ids, "E": np.array(ev), "V0": np.ones(n), "a": np.array(widths),
                  "m": np.ones(n), "hbar": np.ones(n), "T": np.array(T), "R": np.array(R),
                  "tolerance": np.full(n, 1e-10), "provenance": ["oracle"] * n},
                 {"generator": GENERATOR, "tolerance_kind": "relative"})


def coulomb_sample() -> list[tuple[float, int, np.ndarray]]:
    """Ten ``(eta, L)`` pairs with five ``rho`` each, from a fixed seed."""
    rng = np.random.default_rng(CORPUS_SEED)
    pairs = [(0.0, 0), (30.0, 20)]
    while len(pairs) < 10:
        pairs.append((round(float(rng.uniform(0.0, 30.0)), 3), int(rng.integers(0, 21))))
    out = []
    for eta, L in pairs:
        rho = np.sort(np.round(np.exp(rng.uniform(math.log(0.1), math.log(200.0), 5)), 4))
        out.append((eta, L, rho))
    return out


def coulomb_corpus() -> Table:
    """``F, G, F', G'`` from direct ODE integration at 50 ``(eta, rho, L)`` triples."""
    cols: dict[str, list] = {k: [] for k in ("case_id", "eta", "L", "rho", "F", "G", "Fp", "Gp", "wronskian")}
    for eta, L, rho in coulomb_sample():
        o = radial_coulomb_integrate(eta, L, rho)
        for j, r in enumerate(rho):
            cols["case_id"].append(f"coulomb-eta{eta:g}-L{L}-rho{r:g}")
            cols["eta"].append(eta)
            cols["L"].append(L)
            cols["rho"].append(float(r))
            cols["F"].append(float(o.F[j]))
            cols["G"].append(float(o.G[j]))
            cols["Fp"].append(float(o.Fp[j]))
            cols["Gp"].append(float(o.Gp[j]))
            cols["wronskian"].append(float(o.wronskian[j]))
    n = len(cols["case_id"])
    table = {k: (v if k == "case_id" else np.array(v)) for k, v in cols.items()}
    table["tolerance"] = np.full(n, 1e-8)
    table["provenance"] = ["oracle"] * n
    return Table(table, {"generator": GENERATOR, "tolerance_kind": "relative"})


def berry_corpus() -> Table:
    """Latitude-loop Berry phases ``-pi(1 - cos theta)`` (band +)."""
    thetas = np.array([math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2, 2 * math.pi / 3])
    n = len(thetas)
    gamma = np.array([math.remainder(-math.pi * (1 - math.cos(t)), 2 * math.pi) for t in thetas])
    return Table({"case_id": [f"berry-theta{i}" for i in range(n)], "theta": thetas,
                  "n_points": np.full(n, 2000), "gamma": gamma,
                  "tolerance": np.full(n, 1e-3), "provenance": ["closed-form"] * n},
                 {"generator": GENERATOR, "tolerance_kind": "absolute mod 2 pi"})


def squid_corpus() -> Table:
    """SQUID critical current from brute-force maximization over the common phase."""
    frac = np.linspace(0.0, 2.0, 21)
    ic = np.array([phases.squid_critical_current_brute(1.0, f * math.pi, math.pi) for f in frac])
    n = len(frac)
    return Table({"case_id": [f"squid-{i}" for i in range(n)], "flux_over_phi0": frac,
                  "Ic_single": np.ones(n), "Ic_squid": ic,
                  "tolerance": np.full(n, 1e-12), "provenance": ["oracle"] * n},
                 {"generator": GENERATOR, "tolerance_kind": "absolute"})


CORPORA: Mapping[str, Callable[[], Table]] = {
    "barrier.csv": barrier_corpus,
    "coulomb.csv": coulomb_corpus,
    "berry.csv": berry_corpus,
    "squid.csv": squid_corpus,
}


def default_directory() -> Path:
    return Path(__file__).resolve().parents[2] / "goldens"


def regenerate(directory: Optional[Path] = None, write: bool = True) -> dict[str, str]:
    """Build every corpus file; write them only after all succeeded.

    Returns the generated text per file name.
    """
    directory = default_directory() if directory is None else Path(directory)
    texts = {name: func().to_csv() for name, func in CORPORA.items()}
    if write:
        for name, text in texts.items():
            atomic_write(directory / name, text)
    return texts


def diff(directory: Optional[Path] = None) -> list[str]:
    """Names of corpus files that are missing or differ from a fresh regeneration."""
    directory = default_directory() if directory is None else Path(directory)
    texts = regenerate(directory, write=False)
    bad = []
    for name, text in texts.items():
        path = directory / name
        if not path.exists() or path.read_text(encoding="utf-8") != text:
            bad.append(name)
    return bad


def read_corpus(path: Path) -> dict[str, np.ndarray]:
    """Parse a corpus CSV into columns (strings kept for ``case_id`` and ``provenance``)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        out[name] = np.array(vals) if name in ("case_id", "provenance") else np.array(vals, dtype=float)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m qbranch.corpus", description="golden corpus tools")
    mode = ap.add_mutually_exclusive_group(required=True)
    mode.add_argument("--write", action="store_true", help="regenerate the corpus files")
    mode.add_argument("--check", action="store_true", help="report files that differ from a regeneration")
    ap.add_argument("--dir", type=Path, default=None)
    args = ap.parse_args(argv)
    if args.write:
        regenerate(args.dir)
        return 0
    bad = diff(args.dir)
    for name in bad:
        print(f"differs: {name}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
