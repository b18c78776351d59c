"""Real components of the cubic curve for p0 = C0 and their count as C0 crosses h^{3/2}.

Writes ``ellcurve.csv`` and ``ellcurve.svg`` for the chosen level and prints the
component kinds for a sweep of levels around the switch.
"""
from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from semiphoton import cli


@dataclass
class EllcurveConfig:
    h: float = 0.1
    c0: float = 0.025
    samples: int = 400
    out_dir: str = "figures"


def component_sweep(h: float, factors=(0.2, 0.5, 0.8, 0.99, 1.01, 1.5, 3.0)) -> list[tuple[float, list[str]]]:
    """Component kinds of the curve at ``C0 = f * h^{3/2}`` for each factor ``f``."""
    out = []
    for f in factors:
        rows = cli.ellcurve_rows(h, f * h ** 1.5, samples=60)
        kinds = {r[0]: r[1] for r in rows}
        out.append((f, sorted(kinds.values())))
    return out


def run(cfg: EllcurveConfig) -> int:
    out = Path(cfg.out_dir) / "ellcurve.svg"
    code = cli.main(["ellcurve", "--h", repr(cfg.h), "--c0", repr(cfg.c0), "--samples", str(cfg.samples),
                     "--format", "svg", "--out", str(out)])
    print("C0 / h^1.5   components")
    for f, kinds in component_sweep(cfg.h):
        print(f"{f:10.2f}   {', '.join(kinds)}")
    return code


def _parse() -> EllcurveConfig:
    p = argparse.ArgumentParser(description=__doc__)
    for f in fields(EllcurveConfig):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default), default=f.default)
    return EllcurveConfig(**vars(p.parse_args()))


if __name__ == "__main__":
    cfg = _parse()
    print(asdict(cfg))
    raise SystemExit(run(cfg))
