"""Convergence table for the first-order p0 propagator on the ground state.

Two sweeps over h: fixed time ``t`` and fixed rescaled time ``tau = t sqrt(h)``.
For each run it prints the L2 error against the truncated-basis reference, the
covered fraction of the grid and the discrete PDE residual over covered samples.
"""
from __future__ import annotations

import argparse
import math
from dataclasses import asdict, dataclass, field

from semiphoton import propagators as pr
from semiphoton.fields import Grid
from semiphoton.modes import mode_eval


@dataclass
class StudyConfig:
    hs: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    t_fixed: float = 1.0
    tau: float = 0.06
    points: int = 256
    extent: float = 6.0
    residual: bool = True


def measure(h: float, t: float, cfg: StudyConfig) -> dict:
    g = Grid((cfg.points,), (cfg.extent,), h)
    v = mode_eval((0, 0), h, g)
    r = pr.t0_fio(v, t, h)
    err = (r.u - pr.t0_reference(v, t, h)).norm()
    res = pr.t0_residual(v, t, h)[0] if cfg.residual else math.nan
    return {"h": h, "t": t, "error": err, "covered": float(r.covered.mean()), "residual": res}


def _table(title: str, rows: list[dict]) -> None:
    print(title)
    print(f"{'h':>8} {'t':>8} {'error':>11} {'ratio':>7} {'covered':>8} {'residual':>11} {'ratio':>7}")
    prev = None
    for r in rows:
        er = rr = float("nan")
        if prev is not None:
            er = prev["error"] / r["error"] if r["error"] else math.inf
            rr = prev["residual"] / r["residual"] if r["residual"] else math.inf
        print(f"{r['h']:8.4f} {r['t']:8.4f} {r['error']:11.3e} {er:7.2f} {r['covered']:8.3f} "
              f"{r['residual']:11.3e} {rr:7.2f}")
        prev = r
    print()


def run(cfg: StudyConfig) -> None:
    _table(f"fixed t = {cfg.t_fixed}", [measure(h, cfg.t_fixed, cfg) for h in cfg.hs])
    _table(f"fixed tau = t sqrt(h) = {cfg.tau}", [measure(h, cfg.tau / math.sqrt(h), cfg) for h in cfg.hs])


def _parse() -> StudyConfig:
    p = argparse.ArgumentParser(description=__doc__)
    d = StudyConfig()
    p.add_argument("--hs", type=lambda s: [float(v) for v in s.split(",")], default=d.hs)
    p.add_argument("--t-fixed", dest="t_fixed", type=float, default=d.t_fixed)
    p.add_argument("--tau", type=float, default=d.tau)
    p.add_argument("--points", type=int, default=d.points)
    p.add_argument("--extent", type=float, default=d.extent)
    p.add_argument("--no-residual", dest="residual", action="store_false")
    return StudyConfig(**vars(p.parse_args()))


if __name__ == "__main__":
    cfg = _parse()
    print(asdict(cfg))
    run(cfg)
