"""Command-line front end.

Every output file is written atomically.  CSV files start with a
``#`` comment block holding the run configuration as JSON, and SVG figures are
rendered from that CSV text alone.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure, 4 I/O error.
Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import elliptic as ell
from . import fields, flows, modes, propagators, spectral

__all__ = [
    "RunConfig",
    "ValidationError",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_NUMERICAL",
    "EXIT_IO",
    "OUT_DIR_ENV",
    "portrait_rows",
    "ellcurve_rows",
    "csv_text",
    "parse_csv",
    "svg_from_csv",
    "cmd_portrait",
    "cmd_ellcurve",
    "cmd_modes",
    "cmd_propagate",
    "cmd_deficiency",
    "cmd_egorov",
    "build_parser",
    "main",
]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
OUT_DIR_ENV = "SEMIPHOTON_OUT_DIR"

FORMATS = {
    "portrait": ("csv", "svg"),
    "ellcurve": ("csv", "svg"),
    "modes": ("json", "csv"),
    "propagate": ("json", "csv"),
    "deficiency": ("csv", "json"),
    "egorov": ("csv", "json"),
}

DEFAULTS: dict[str, Any] = {
    "h": 0.1,
    "c0": None,
    "n": None,
    "t": None,
    "grid_points": None,
    "extent": None,
    "format": None,
    "out": None,
}


class ValidationError(ValueError):
    """Arguments that cannot describe a valid run."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    h: float
    parameters: dict[str, Any] = field(default_factory=dict)
    output_path: str = ""
    format: str = "csv"

    def __post_init__(self):
        if self.command not in FORMATS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not (isinstance(self.h, (int, float)) and math.isfinite(self.h) and self.h > 0):
            raise ValidationError("h must be a positive finite number")
        if self.format not in FORMATS[self.command]:
            raise ValidationError(f"{self.command} supports formats {FORMATS[self.command]}, "
                                  f"not {self.format!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- CSV and SVG --------------------------------------------------------------------

def csv_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# semiphoton {cfg.command}\n")
    buf.write(f"# config: {cfg.to_json()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def parse_csv(text: str) -> tuple[dict, list[str], list[list[str]]]:
    """Split a CSV produced by :func:`csv_text` into config, header and rows."""
    cfg: dict = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# config: "):
            cfg = json.loads(line[len("# config: "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = list(csv.reader(body))
    if not reader:
        raise ValidationError("CSV has no header row")
    return cfg, reader[0], reader[1:]


_PALETTE = {"loop": "#1f77b4", "unbounded": "#d62728", "separatrix": "#2ca02c",
            "axis": "#7f7f7f", "stationary": "#000000", "point": "#000000"}


def svg_from_csv(text: str, xcol: str, ycol: str, width: int = 640, height: int = 480) -> str:
    """Polyline drawing of ``(xcol, ycol)`` grouped by the ``segment`` column.

    Uses nothing but the CSV text, so the figure is reproducible from the data file.
    """
    cfg, header, rows = parse_csv(text)
    ix, iy, iseg = header.index(xcol), header.index(ycol), header.index("segment")
    ikind = header.index("component")
    segs: dict[str, tuple[str, list[tuple[float, float]]]] = {}
    for r in rows:
        segs.setdefault(r[iseg], (r[ikind], []))[1].append((float(r[ix]), float(r[iy])))
    pts = [p for _, ps in segs.values() for p in ps]
    if not pts:
        raise ValidationError("nothing to draw")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    sx = (x1 - x0) or 1.0
    sy = (y1 - y0) or 1.0
    pad = 20

    def px(x, y):
        return (pad + (x - x0) / sx * (width - 2 * pad), height - pad - (y - y0) / sy * (height - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f"<title>{cfg.get('command', '')} {ycol} vs {xcol}</title>",
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if x0 < 0 < x1:
        a, b = px(0, y0), px(0, y1)
        out.append(f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" y2="{b[1]:.2f}" stroke="#cccccc"/>')
    if y0 < 0 < y1:
        a, b = px(x0, 0), px(x1, 0)
        out.append(f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" y2="{b[1]:.2f}" stroke="#cccccc"/>')
    for key in sorted(segs, key=lambda k: int(k)):
        kind, ps = segs[key]
        color = _PALETTE.get(kind, "#333333")
        if len(ps) == 1:
            c = px(*ps[0])
            out.append(f'<circle cx="{c[0]:.2f}" cy="{c[1]:.2f}" r="3" fill="{color}"/>')
            continue
        d = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(*p) for p in ps))
        out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_table(cfg: RunConfig, header: list[str], rows: list[list], xcol: str | None = None,
                ycol: str | None = None) -> list[Path]:
    path = Path(cfg.output_path)
    text = csv_text(cfg, header, rows)
    if cfg.format == "svg":
        csv_path = path.with_suffix(".csv")
        _atomic_write(csv_path, text)
        _atomic_write(path, svg_from_csv(text, xcol, ycol))
        return [csv_path, path]
    if cfg.format == "json":
        payload = {"config": json.loads(cfg.to_json()), "columns": header,
                   "rows": [[_jsonable(v) if isinstance(v, (np.generic, complex)) else v for v in r]
                            for r in rows]}
        _atomic_write(path, json.dumps(payload, sort_keys=True, default=_jsonable) + "\n")
        return [path]
    _atomic_write(path, text)
    return [path]


# -- phase portrait -------------------------------------------------------------------

def _default_c0(h: float) -> list[float]:
    s = h ** 1.5
    return [k * s for k in (-2.0, -1.3, -0.9, -0.6, -0.3, 0.3, 0.6, 0.9, 1.3, 2.0)]


def _cubic_real_roots(h: float, c0: float) -> list[float]:
    """Real roots of ``x^3/2 - 3hx/2 - c0 = 0`` (the orbit's crossings of ``xi = 0``)."""
    r = np.roots([0.5, 0.0, -1.5 * h, -c0])
    real = sorted(float(v.real) for v in r if abs(v.imag) <= 1e-9 * max(1.0, abs(v)))
    out: list[float] = []
    for v in real:
        if not out or abs(v - out[-1]) > 1e-9:
            out.append(v)
    return out


def _orbit_samples(orb: flows.CubicOrbit, box: float, samples: int) -> list[tuple[float, float, float]]:
    if orb.kind == "loop":
        ts = np.linspace(0.0, orb.data.omega2, samples)
    else:
        lo = orb.back_pole if math.isfinite(orb.back_pole) else -50.0 / math.sqrt(orb.lam)
        hi = orb.fwd_pole if math.isfinite(orb.fwd_pole) else 50.0 / math.sqrt(orb.lam)
        # cluster samples toward the poles where the orbit sweeps out to infinity
        s = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, samples))
        ts = lo + (hi - lo) * (1e-4 + (1 - 2e-4) * s)
    out = []
    for t in ts:
        try:
            x, xi = orb.state(float(t))
        except (flows.BlowUpError, ell.PoleError):
            continue
        if abs(x) <= box and abs(xi) <= box:
            out.append((float(t), x, xi))
    return out


def portrait_rows(h: float, c0_list: list[float] | None = None, box: float | None = None,
                  samples: int = 400, mirror: bool = False) -> list[list]:
    """Rows ``(segment, component, c0, t, x, xi)`` of the ``p0`` phase portrait.

    Always includes the stationary points ``(+-sqrt h, 0)``, ``(0, +-sqrt 3h)`` and
    the ``C0 = 0`` family (the circle of radius ``sqrt 3h`` and the axis ``x = 0``).
    Only the upper half plane is kept unless ``mirror`` is set.
    """
    if h <= 0:
        raise ValidationError("h must be positive")
    lam = 3.0 * h
    box = box if box is not None else 2.0 * math.sqrt(lam)
    c0_list = _default_c0(h) if c0_list is None else list(c0_list)
    rows: list[list] = []
    seg = 0

    def keep(xi):
        return mirror or xi >= -1e-12

    def add(kind: str, c0: float, pts: list[tuple[float, float, float]]):
        nonlocal seg
        run: list[tuple[float, float, float]] = []
        for p in pts + [None]:
            if p is not None and keep(p[2]):
                run.append(p)
                continue
            if run:
                for t, x, xi in run:
                    rows.append([seg, kind, c0, t, x, xi])
                seg += 1
                run = []

    for x, xi in ((math.sqrt(h), 0.0), (-math.sqrt(h), 0.0), (0.0, math.sqrt(lam)), (0.0, -math.sqrt(lam))):
        add("stationary", float(flows.p0(x, xi, h)), [(0.0, x, xi)])
    th = np.linspace(0.0, 2 * math.pi, samples)
    r = math.sqrt(lam)
    # the circle is traversed with nan time: it is a union of separatrix orbits and fixed points
    upper = [(float("nan"), r * math.cos(a), r * math.sin(a)) for a in th if math.sin(a) >= 0]
    lower = [(float("nan"), r * math.cos(a), r * math.sin(a)) for a in th if math.sin(a) < 0]
    add("separatrix", 0.0, upper)
    if mirror:
        add("separatrix", 0.0, lower)
    axis = np.linspace(-box, box, samples)
    add("axis", 0.0, [(float("nan"), 0.0, float(v)) for v in axis])
    for c0 in c0_list:
        if c0 == 0:
            continue
        seen_loop = False
        for x0 in _cubic_real_roots(h, c0):
            orb = flows.cubic_orbit(x0, 0.0, lam)
            if orb.kind == "loop":
                if seen_loop:
                    continue
                seen_loop = True
            if orb.kind not in ("loop", "unbounded"):
                continue
            add(orb.kind, c0, _orbit_samples(orb, box, samples))
    return rows


PORTRAIT_HEADER = ["segment", "component", "c0", "t", "x", "xi"]


def cmd_portrait(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    rows = portrait_rows(cfg.h, p.get("c0"), p.get("box"), int(p.get("samples", 400)),
                         bool(p.get("mirror", False)))
    return _emit_table(cfg, PORTRAIT_HEADER, rows, "x", "xi")


# -- elliptic curve ---------------------------------------------------------------------

def ellcurve_rows(h: float, c0: float, samples: int = 400, pmax: float | None = None) -> list[list]:
    """Rows ``(segment, component, t, P, dP, x, xi)`` for the curve of ``p0 = c0``.

    The bounded loop comes from the line shifted by half the imaginary period
    (one real period), the unbounded branch from the real line truncated where
    ``|P| > pmax``.  At ``c0^2 = h^3`` the loop is reported as a single point.
    """
    if h <= 0:
        raise ValidationError("h must be positive")
    lam = 3.0 * h
    g2, g3 = ell.invariants_cubic(lam, c0)
    data = ell.elliptic_data(g2, g3)
    rows: list[list] = []
    seg = 0
    if c0 == 0:
        raise ValidationError("c0 = 0 is the separatrix; its curve is singular")
    crossings = _cubic_real_roots(h, c0)
    if data.case is ell.Case.DEGENERATE:
        # the loop has shrunk to the stationary point where P equals the double root
        xs = math.copysign(math.sqrt(h), -c0)
        P = lam / 12.0 + c0 / (2.0 * xs)
        rows.append([seg, "point", 0.0, P, 0.0, xs, 0.0])
        seg += 1
        crossings = [x for x in crossings if abs(x - xs) > 1e-6 * math.sqrt(h)]
    pmax = pmax if pmax is not None else 20.0 * max(abs(g2) ** 0.5, abs(g3) ** (1 / 3), 1e-12)
    loop_done = False
    for x0 in crossings:
        try:
            orb = flows.cubic_orbit(x0, 0.0, lam)
        except flows.AmbiguityError:
            continue
        if orb.kind == "loop" and not loop_done:
            loop_done = True
            for t in np.linspace(0.0, orb.data.omega2, samples):
                P, dP = ell.wp_real_line(float(t) + orb.t0, ell.Branch.SHIFTED, orb.data)
                x, xi = orb.state(float(t))
                rows.append([seg, "loop", float(t), P, dP, x, xi])
            seg += 1
        elif orb.kind == "unbounded":
            w = orb.data.omega2
            delta = 1.0 / math.sqrt(pmax)
            for u in np.linspace(delta, w - delta, samples):
                t = float(u) - orb.t0
                P, dP = ell.wp_real_line(float(u), ell.Branch.REAL, orb.data)
                x, xi = orb.state(t)
                rows.append([seg, "unbounded", t, P, dP, x, xi])
            seg += 1
    return rows


ELLCURVE_HEADER = ["segment", "component", "t", "P", "dP", "x", "xi"]


def cmd_ellcurve(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    c0 = p.get("c0")
    c0 = 0.025 if c0 is None else (c0[0] if isinstance(c0, list) else c0)
    rows = ellcurve_rows(cfg.h, float(c0), int(p.get("samples", 400)))
    return _emit_table(cfg, ELLCURVE_HEADER, rows, "P", "dP")


# -- modes / propagate ----------------------------------------------------------------

def _grid(cfg: RunConfig, dims: int) -> fields.Grid:
    p = cfg.parameters
    pts = int(p.get("grid_points") or (128 if dims == 2 else 512))
    ext = p.get("extent")
    ext = float(ext) if ext is not None else max(8.0 * math.sqrt(cfg.h), 8.0)
    try:
        return fields.Grid((pts,) * dims, (ext,) * dims, cfg.h)
    except ValueError as e:
        raise ValidationError(str(e)) from e


def _parse_mode(text: str) -> modes.ModeIndex:
    parts = [s for s in str(text).replace("(", "").replace(")", "").split(",") if s.strip()]
    try:
        return modes.ModeIndex(*(int(s) for s in parts))
    except (TypeError, ValueError) as e:
        raise ValidationError(f"bad mode index {text!r}") from e


def _wavefunction_out(cfg: RunConfig, f: fields.GridWavefunction) -> list[Path]:
    path = Path(cfg.output_path)
    if cfg.format == "json":
        payload = json.loads(fields.to_json(f))
        payload["config"] = json.loads(cfg.to_json())
        _atomic_write(path, json.dumps(payload, sort_keys=True) + "\n")
        return [path]
    axes = f.grid.axes
    names = ["x", "y"][: f.grid.dims]
    rows = []
    for idx in np.ndindex(*f.grid.points):
        v = f.values[idx]
        rows.append([*(axes[k][i] for k, i in enumerate(idx)), v.real, v.imag])
    _atomic_write(path, csv_text(cfg, names + ["re", "im"], rows))
    return [path]


def cmd_modes(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    idx = _parse_mode(p.get("mode", "0,0"))
    dims = 1 if p.get("dims") == 1 else 2
    if dims == 1 and idx.n:
        raise ValidationError("a 1D mode has no y-order")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", fields.GridWarning)
        f = modes.mode_eval(idx, cfg.h, _grid(cfg, dims))
    return _wavefunction_out(cfg, f)


TRUNCATED = {"T4-truncated": "T4", "T5-truncated": "T5", "T38-truncated": "T38", "T0-truncated": "T0"}
GRID_GENERATORS = ("warmup", "gyrator", "t0-fio", "q2")


def cmd_propagate(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    gen = p.get("gen")
    t = p.get("t")
    if t is None:
        raise ValidationError("--t is required")
    t = float(t)
    if gen in TRUNCATED:
        if p.get("input"):
            raise ValidationError("truncated generators take --mode, not a grid state")
        idx = _parse_mode(p.get("mode", "0,0"))
        out = spectral.truncated_propagator(TRUNCATED[gen], t, cfg.h, modes.ModeVector.basis(idx.m, idx.n))
        rows = [[k.m, k.n, c.real, c.imag] for k, c in out.items() if abs(c) > float(p.get("cutoff", 1e-14))]
        header = ["m", "n", "re", "im"]
        if cfg.format == "json":
            path = Path(cfg.output_path)
            payload = {"config": json.loads(cfg.to_json()), "columns": header, "rows": rows}
            _atomic_write(path, json.dumps(payload, sort_keys=True) + "\n")
            return [path]
        path = Path(cfg.output_path)
        _atomic_write(path, csv_text(cfg, header, rows))
        return [path]
    if gen not in GRID_GENERATORS:
        raise ValidationError(f"unknown generator {gen!r}; choose from {sorted(TRUNCATED) + list(GRID_GENERATORS)}")
    src = p.get("input")
    if not src:
        raise ValidationError(f"{gen} needs --input with a serialized grid state")
    try:
        v = fields.load(src)
    except OSError:
        raise
    except (ValueError, KeyError) as e:
        raise ValidationError(f"cannot read grid state: {e}") from e
    if gen == "warmup":
        u = propagators.warmup_propagator(v, t, cfg.h)
    elif gen == "gyrator":
        chart = p.get("chart")
        ct = (propagators.ChartedTime.auto(t) if chart is None
              else propagators.ChartedTime(t, propagators.Chart(chart)))
        u = propagators.gyrator(v, ct)
    elif gen == "t0-fio":
        u = propagators.t0_fio_propagator(v, t, cfg.h)
    else:
        u = propagators.q2_propagator(v, t, cfg.h).u
    return _wavefunction_out(cfg, u)


# -- deficiency / egorov ------------------------------------------------------------------

def cmd_deficiency(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    ns = p.get("n") or [2]
    M = int(p.get("M", 500))
    rows = []
    for n in ns:
        for z in (1j, -1j):
            r = spectral.deficiency_tail(int(n), z, M)
            rows.append([n, "deficiency", _num(z.imag), M, r.partial_sums[-1], r.relative_increment,
                         r.plateau, r.extrapolated.real, r.extrapolation_error])
        b = spectral.berezanskii_check(int(n), M)
        rows.append([n, "berezanskii", "", M, b.inv_sum_partial, b.bound, b.bound_holds,
                     b.partial_bound_ok, b.log_concave_from])
    header = ["n", "report", "im_z", "M", "value", "reference", "flag", "extra", "extra2"]
    return _emit_table(cfg, header, rows)


def _egorov_states(gen: str, h: float, grid: fields.Grid):
    if gen == "GYRATOR":
        f = fields.GridWavefunction.from_function(
            grid, lambda x, y: np.exp(-((x - 1) ** 2 + (y + 0.5) ** 2) / 2 + 0.7j * x - 0.3j * y) / math.sqrt(math.pi))
        g = modes.mode_eval(modes.ModeIndex(1, 0), 1.0, grid)
        return f, g
    c = 0.5 * math.sqrt(h)
    f = fields.GridWavefunction.from_function(
        grid, lambda x: np.exp(-(x - c) ** 2 / (2 * h) + 1j * c * x / h) / (math.pi * h) ** 0.25)
    return f, f


def cmd_egorov(cfg: RunConfig) -> list[Path]:
    p = cfg.parameters
    gen = str(p.get("gen") or "T0").upper()
    if gen not in ("T0", "GYRATOR"):
        raise ValidationError("egorov supports --gen T0 or GYRATOR")
    h = 1.0 if gen == "GYRATOR" else cfg.h
    if gen == "GYRATOR" and cfg.h != 1.0:
        raise ValidationError("the gyrator check uses --h 1")
    t = float(p.get("t") if p.get("t") is not None else 1.0)
    sigmas = p.get("sigma") or (["x", "xi", "x2", "xxi"] if gen == "T0" else ["x", "y", "xi", "eta", "xy", "xieta"])
    if gen == "GYRATOR":
        cfg_grid = RunConfig(cfg.command, 1.0, {"grid_points": p.get("grid_points") or 128,
                                                "extent": p.get("extent") or math.sqrt(128 * math.pi / 2)},
                             cfg.output_path, cfg.format)
        grid = _grid(cfg_grid, 2)
    else:
        cfg_grid = RunConfig(cfg.command, h, {"grid_points": p.get("grid_points") or 256,
                                              "extent": p.get("extent") or 6.0}, cfg.output_path, cfg.format)
        grid = _grid(cfg_grid, 1)
    f, g = _egorov_states(gen, h, grid)
    rows = []
    for s in sigmas:
        try:
            r = propagators.egorov_check(s, t, h, f, g, gen)
        except ValueError as e:
            raise ValidationError(str(e)) from e
        rows.append([s, t, h, r.lhs.real, r.lhs.imag, r.rhs.real, r.rhs.imag, r.deviation])
    header = ["sigma", "t", "h", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "deviation"]
    return _emit_table(cfg, header, rows)


COMMANDS: dict[str, Callable[[RunConfig], list[Path]]] = {
    "portrait": cmd_portrait,
    "ellcurve": cmd_ellcurve,
    "modes": cmd_modes,
    "propagate": cmd_propagate,
    "deficiency": cmd_deficiency,
    "egorov": cmd_egorov,
}


# -- argument handling --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h", type=float, default=None, help="semiclassical parameter")
    common.add_argument("--format", default=None, help="output format (command dependent)")
    common.add_argument("--out", default=None, help=f"output file (default: ${OUT_DIR_ENV}/<command>.<format>)")
    common.add_argument("--config", default=None, help="JSON file with defaults for any flag")
    common.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    common.add_argument("--extent", type=float, default=None, help="grid half-width")

    parser = _Parser(prog="semiphoton", description="Semiclassical photon-mode toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("portrait", parents=[common], help="phase portrait of p0 (csv/svg)")
    sp.add_argument("--c0", type=_float_list, default=None, help="comma-separated level values")
    sp.add_argument("--box", type=float, default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--mirror", action="store_true", default=None, help="include the lower half plane")

    sp = sub.add_parser("ellcurve", parents=[common], help="elliptic curve components (csv/svg)")
    sp.add_argument("--c0", type=float, default=None)
    sp.add_argument("--samples", type=int, default=None)

    sp = sub.add_parser("modes", parents=[common], help="evaluate a Hermite-Gaussian mode (json/csv)")
    sp.add_argument("--mode", default=None, help="m,n")
    sp.add_argument("--dims", type=int, choices=(1, 2), default=None)

    sp = sub.add_parser("propagate", parents=[common], help="run a propagator (json/csv)")
    sp.add_argument("--gen", default=None, help=", ".join(sorted(TRUNCATED) + list(GRID_GENERATORS)))
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--mode", default=None, help="input basis mode m,n for truncated generators")
    sp.add_argument("--input", default=None, help="serialized grid state for grid propagators")
    sp.add_argument("--chart", choices=("frequency", "position"), default=None)

    sp = sub.add_parser("deficiency", parents=[common], help="deficiency and Berezanskii reports (csv/json)")
    sp.add_argument("--n", type=_int_list, default=None, help="comma-separated band indices")
    sp.add_argument("--M", type=int, default=None)

    sp = sub.add_parser("egorov", parents=[common], help="Egorov pairing table (csv/json)")
    sp.add_argument("--gen", default=None, help="T0 or GYRATOR")
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--sigma", type=lambda s: [v for v in s.split(",") if v], default=None)
    return parser


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    args = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    merged: dict[str, Any] = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"config file is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in loaded.items()})
    merged.update({k: v for k, v in args.items() if v is not None})
    unknown = set(merged) - set(args)
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    command = ns.command
    h = merged.pop("h", None)
    h = 1.0 if (h is None and command == "egorov" and str(merged.get("gen", "")).upper() == "GYRATOR") else h
    h = DEFAULTS["h"] if h is None else h
    fmt = merged.pop("format", None) or FORMATS[command][0]
    out = merged.pop("out", None)
    if out is None:
        base = Path(os.environ.get(OUT_DIR_ENV, "."))
        out = str(base / f"{command}.{fmt}")
    if isinstance(h, bool) or not isinstance(h, (int, float)):
        raise ValidationError("h must be a number")
    return RunConfig(command, float(h), dict(sorted(merged.items())), out, fmt)


def _fail(code: int, exc: BaseException) -> int:
    msg = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(msg, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config_from_args(ns)
        paths = COMMANDS[cfg.command](cfg)
    except ValidationError as e:
        return _fail(EXIT_VALIDATION, e)
    except (propagators.LocalizationError, propagators.ChartError, ell.DomainError) as e:
        return _fail(EXIT_VALIDATION, e)
    except OSError as e:
        return _fail(EXIT_IO, e)
    except (ArithmeticError, FloatingPointError) as e:
        return _fail(EXIT_NUMERICAL, e)
    except ValueError as e:
        return _fail(EXIT_VALIDATION, e)
    for p in paths:
        sys.stdout.write(f"{p}\n")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
