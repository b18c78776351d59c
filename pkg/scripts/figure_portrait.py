"""Phase portrait of p0 at h = 0.1 with loops, unbounded branches and the separatrix.

Writes ``portrait.csv`` and ``portrait.svg`` into the output directory.
"""
from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from semiphoton import cli


@dataclass
class PortraitConfig:
    h: float = 0.1
    samples: int = 400
    mirror: bool = True
    out_dir: str = "figures"


def run(cfg: PortraitConfig) -> int:
    out = Path(cfg.out_dir) / "portrait.svg"
    argv = ["portrait", "--h", repr(cfg.h), "--samples", str(cfg.samples), "--format", "svg", "--out", str(out)]
    if cfg.mirror:
        argv.append("--mirror")
    return cli.main(argv)


def _parse() -> PortraitConfig:
    p = argparse.ArgumentParser(description=__doc__)
    for f in fields(PortraitConfig):
        if f.type in ("bool", bool):
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, action=argparse.BooleanOptionalAction,
                           default=f.default)
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default), default=f.default)
    return PortraitConfig(**vars(p.parse_args()))


if __name__ == "__main__":
    cfg = _parse()
    print(asdict(cfg))
    raise SystemExit(run(cfg))
