"""Sweep execution, report emission and the exact-vs-Monte-Carlo harness.

Every grid point is an independent job seeded from ``(seed, index)``, so the
result of a sweep depends only on the config and seed, never on how many
worker processes evaluated it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace

import numpy as np

from .config import SweepConfig
from .core_sim import ProbabilityTable, sample_shots
from .errors import CalibrationError, ConfigError
from .estimator import (
    CLASSICAL_BOUND,
    CalibrationCurve,
    CorrelatorEstimate,
    apply_blgi_calibration,
    blgi_correlator,
    blgi_terms,
    blgi_terms_from_shots,
    calibrated_trace,
    estimate_from_shots,
    shots_to_pm,
)
from .noise import NoiseModel
from .protocol.blgi import BlgiConfig, calibration_factors, calibration_traces, run_blgi
from .protocol.chsh import CHSH_LABELS, run_chsh
from .protocol.lgi import (
    LGI_UPPER_BOUND,
    LgiResult,
    lgi_initial_state,
    run_lgi,
    two_time_distribution,
    weak_lgi_distribution,
    weak_lgi_terms,
)

COLUMNS = (
    "sweep_value",
    "E_aa_raw", "E_ab_raw", "E_ba_raw", "E_bb_raw",
    "E_aa_cal", "E_ab_cal", "E_ba_cal", "E_bb_cal",
    "C", "sem", "sigmas", "n_shots", "mode",
)
_FLOAT_COLUMNS = COLUMNS[:12]

_NUMBER = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["columns", "rows"],
    "additionalProperties": False,
    "properties": {
        "columns": {"const": list(COLUMNS)},
        "rows": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": list(COLUMNS),
                "additionalProperties": False,
                "properties": {
                    **{c: _NUMBER for c in _FLOAT_COLUMNS},
                    "sweep_value": {"type": "number"},
                    "n_shots": {"type": "integer", "minimum": 0},
                    "mode": {"enum": ["exact", "monte-carlo"]},
                },
            },
        },
    },
}


def round12(x):
    """Round to 12 significant digits; ``None`` and non-finite values pass through."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return x
    return float(format(x, ".12g"))


@dataclass(frozen=True)
class SweepRow:
    """One grid point.  Missing quantities are ``None``.

    For ``chsh-theta-sweep`` the four E columns hold ``ab, a'b, ab', a'b'``
    and ``C`` is the CHSH sum.  For ``lgi`` they hold ``E12, E23, E13`` (the
    fourth is empty) and ``C`` is the Leggett-Garg combination.  For
    ``calibration-curves`` the raw columns are the ancilla traces
    ``alpha1|0>, alpha1|1>, alpha2|0>, alpha2|1>``, the calibrated columns the
    same traces after calibration, and ``C`` is empty.
    """

    sweep_value: float
    E_aa_raw: float | None
    E_ab_raw: float | None
    E_ba_raw: float | None
    E_bb_raw: float | None
    E_aa_cal: float | None
    E_ab_cal: float | None
    E_ba_cal: float | None
    E_bb_cal: float | None
    C: float | None
    sem: float | None
    sigmas: float | None
    n_shots: int
    mode: str

    def __post_init__(self):
        for name in _FLOAT_COLUMNS:
            object.__setattr__(self, name, round12(getattr(self, name)))
        object.__setattr__(self, "n_shots", int(self.n_shots))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _row(value, raw, cal, C, sem: float | None, mode: str, n_shots: int, bound: float):
    raw = tuple(raw) + (None,) * (4 - len(raw))
    cal = tuple(cal) + (None,) * (4 - len(cal)) if cal is not None else (None,) * 4
    if mode == "exact":
        sem, sigmas, n_shots = 0.0, None, 0
    else:
        sigmas = (C - bound) / sem if C is not None and sem else None
    return SweepRow(value, *raw, *cal, C, sem, sigmas, n_shots, mode)


def point_seed(seed: int, index: int) -> int:
    """Independent 64-bit stream for grid point ``index``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- experiments

def _blgi_point(value, blgi: BlgiConfig, noise: NoiseModel, cfg: SweepConfig, index: int,
                calibration_scale: float) -> SweepRow:
    if cfg.mode == "exact":
        dist = run_blgi(blgi, noise)
        raw = blgi_terms(dist)
        try:
            c1, c2 = calibration_factors(blgi, noise)
        except CalibrationError:
            return _row(value, raw, None, None, 0.0, "exact", 0, CLASSICAL_BOUND)
        c1, c2 = c1 * calibration_scale, c2 * calibration_scale
        cal = apply_blgi_calibration(*raw, c1, c2)
        return _row(value, raw, cal, blgi_correlator(*cal), 0.0, "exact", 0, CLASSICAL_BOUND)

    dist = run_blgi(blgi, noise)
    shots = sample_shots(dist, blgi.n_shots, point_seed(cfg.seed, index), cfg.shot_workers)
    raw = blgi_terms_from_shots(shots)
    try:
        c1, c2 = calibration_factors(blgi, noise)
    except CalibrationError:
        return _row(value, raw, None, None, None, "monte-carlo", blgi.n_shots, CLASSICAL_BOUND)
    c1, c2 = c1 * calibration_scale, c2 * calibration_scale
    cal = apply_blgi_calibration(*raw, c1, c2)
    est = estimate_from_shots(shots, c1, c2)
    return _row(value, raw, cal, est.mean, est.sem, "monte-carlo", blgi.n_shots, CLASSICAL_BOUND)


def _chsh_point(value, cfg: SweepConfig, index: int) -> SweepRow:
    chsh_cfg = replace(cfg.chsh, theta=value)
    mc = cfg.mode == "monte-carlo"
    res = run_chsh(chsh_cfg, cfg.noise, shots=mc, seed=point_seed(cfg.seed, index))
    E = [res.E[label] for label in CHSH_LABELS]
    # two-sided bound: report distance of |CHSH| above 2
    row = _row(value, E, E, res.chsh, res.sem, cfg.mode, chsh_cfg.n_shots, CLASSICAL_BOUND)
    if mc and row.sem:
        row = replace(row, sigmas=(abs(res.chsh) - CLASSICAL_BOUND) / res.sem)
    return row


def _lgi_point(value, cfg: SweepConfig, index: int) -> SweepRow:
    angles = (0.0, value, 2.0 * value)
    settings = cfg.lgi
    if cfg.mode == "exact":
        res = run_lgi(settings.state_prep, angles, settings.weak_phi)
        terms = (res.E12, res.E23, res.E13)
        raw = terms
        if settings.weak_phi is not None:
            s = math.sin(settings.weak_phi)
            raw = (res.E12 * s, res.E23 * s, res.E13)
        return _row(value, raw, terms, res.value, 0.0, "exact", 0, LGI_UPPER_BOUND)

    n = settings.n_shots
    seed = point_seed(cfg.seed, index)
    state = lgi_initial_state(settings.state_prep)
    if settings.weak_phi is None:
        # three separate two-time experiments
        pairs = ((angles[0], angles[1]), (angles[1], angles[2]), (angles[0], angles[2]))
        prods = []
        for k, (t1, t2) in enumerate(pairs):
            dist = ProbabilityTable(("q_first", "q_second"), two_time_distribution(state, t1, t2))
            pm = shots_to_pm(sample_shots(dist, n, (seed + k) % 2**64, cfg.shot_workers).rows)
            prods.append(pm[:, 0] * pm[:, 1])
        raw = cal = tuple(math.fsum(p) / n for p in prods)
        var = sum(float(np.var(p, ddof=1)) for p in prods) / n
        K = raw[0] + raw[1] - raw[2]
        return _row(value, raw, cal, K, math.sqrt(var), "monte-carlo", n, LGI_UPPER_BOUND)

    dist = ProbabilityTable(("t1", "t3", "ancilla"), weak_lgi_distribution(state, angles, settings.weak_phi))
    pm = shots_to_pm(sample_shots(dist, n, seed, cfg.shot_workers).rows)
    raw_terms = weak_lgi_terms(pm, 1.0)
    cal_terms = weak_lgi_terms(pm, 1.0 / math.sin(settings.weak_phi))
    raw = tuple(math.fsum(t) / n for t in raw_terms)
    cal = tuple(math.fsum(t) / n for t in cal_terms)
    est = CorrelatorEstimate.from_samples(cal_terms[0] + cal_terms[1] - cal_terms[2], LGI_UPPER_BOUND)
    return _row(value, raw, cal, LgiResult(*cal).value, est.sem, "monte-carlo", n, LGI_UPPER_BOUND)


def _calibration_point(value, cfg: SweepConfig, index: int) -> SweepRow:
    mc = cfg.mode == "monte-carlo"
    n = cfg.blgi.n_shots
    traces = calibration_traces(value, value, cfg.noise, n if mc else None, point_seed(cfg.seed, index))
    raw = (*traces["alpha1"], *traces["alpha2"])
    mode = cfg.blgi.calibration_mode
    cal = []
    try:
        for role in ("alpha1", "alpha2"):
            curve = CalibrationCurve([value], *([t] for t in traces[role]))
            cal.extend(calibrated_trace(traces[role], [value, value], mode, curve))
    except CalibrationError:
        cal = None
    sem = None
    if mc:
        # spread of the alpha1 |0> shot mean, in calibrated units
        z = traces["alpha1"][0]
        k = cal[0] / z if cal is not None and z != 0 else 1.0
        sem = abs(k) * math.sqrt(max(1.0 - z * z, 0.0) / n)
    return _row(value, raw, cal, None, sem, cfg.mode, n, CLASSICAL_BOUND)


def evaluate_point(cfg: SweepConfig, index: int, calibration_scale: float = 1.0) -> SweepRow:
    """Evaluate grid point ``index`` of ``cfg``.

    ``calibration_scale`` multiplies both BLGI calibration factors; it exists
    to check that the exact-vs-Monte-Carlo harness detects a bad calibration.
    """
    value = cfg.grid[index]
    exp = cfg.experiment
    if exp == "blgi-phi-sweep":
        return _blgi_point(value, cfg.blgi.with_phi(value), cfg.noise, cfg, index, calibration_scale)
    if exp == "dephasing-sweep":
        return _blgi_point(value, cfg.blgi, cfg.noise.with_dephasing(value), cfg, index, calibration_scale)
    if exp == "visibility-sweep":
        return _blgi_point(value, cfg.blgi, cfg.noise.with_visibility(value), cfg, index, calibration_scale)
    if exp == "chsh-theta-sweep":
        return _chsh_point(value, cfg, index)
    if exp == "lgi":
        return _lgi_point(value, cfg, index)
    return _calibration_point(value, cfg, index)


def _job(args):
    cfg, index, scale = args
    return evaluate_point(cfg, index, scale)


def _resolve_workers(workers: int) -> int:
    return os.cpu_count() or 1 if workers == 0 else workers


def evaluate_grid(cfg: SweepConfig, calibration_scale: float = 1.0) -> list[SweepRow]:
    """All grid points, merged in grid order."""
    jobs = [(cfg, i, calibration_scale) for i in range(len(cfg.grid))]
    workers = min(_resolve_workers(cfg.workers), len(jobs))
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Run every grid point and, if ``cfg.output`` is set, write the report."""
    if cfg.output:
        _check_writable(cfg.output)
    rows = evaluate_grid(cfg)
    if cfg.output:
        emit_report(rows, cfg.output, cfg.output_format)
    return rows


# --------------------------------------------------------------------- output

def _check_writable(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent):
        raise FileNotFoundError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PermissionError(f"output directory is not writable: {parent}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def render_report(rows, fmt: str = "csv") -> str:
    rows = list(rows)
    if not rows:
        raise ConfigError("cannot emit an empty report")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in astuple(row)])
        return buf.getvalue()
    if fmt == "json":
        doc = {"columns": list(COLUMNS), "rows": [r.as_dict() for r in rows]}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def emit_report(rows, path: str | os.PathLike, fmt: str = "csv") -> str:
    """Write ``rows`` to ``path`` atomically (temp file in the same directory, then rename)."""
    text = render_report(rows, fmt)
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sweep-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _parse_float(text: str):
    return None if text == "" else float(text)


def parse_report(path: str | os.PathLike, fmt: str | None = None) -> list[SweepRow]:
    path = os.fspath(path)
    if fmt is None:
        fmt = "json" if path.lower().endswith(".json") else "csv"
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("columns") != list(COLUMNS):
            raise ConfigError("report columns do not match the sweep schema")
        return [SweepRow(**r) for r in doc["rows"]]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != list(COLUMNS):
        raise ConfigError("report header does not match the sweep schema")
    out = []
    for rec in reader:
        values = [_parse_float(x) for x in rec[:12]]
        out.append(SweepRow(*values, int(rec[12]), rec[13]))
    return out


# ------------------------------------------------------------- MC validation

Z_FLAG = 5.0


@dataclass(frozen=True)
class ComparePoint:
    sweep_value: float
    exact: float
    mc: float
    sem: float
    z: float
    flagged: bool


def compare_exact_mc(cfg: SweepConfig, calibration_scale: float = 1.0) -> list[ComparePoint]:
    """``(MC mean - exact) / sem`` at every grid point; ``|z| > 5`` is flagged.

    The exact reference always uses the true calibration; ``calibration_scale``
    only corrupts the Monte Carlo side.
    """
    if cfg.mode != "monte-carlo":
        raise ConfigError("compare_exact_mc needs a monte-carlo config")
    if cfg.n_shots < 10_000:
        raise ConfigError("compare_exact_mc needs n_shots >= 1e4")
    if cfg.experiment == "calibration-curves":
        raise ConfigError("calibration-curves rows carry no correlator to compare")
    exact_rows = evaluate_grid(replace(cfg, mode="exact"))
    mc_rows = evaluate_grid(cfg, calibration_scale)
    out = []
    for ex, mc in zip(exact_rows, mc_rows):
        if ex.C is None or mc.C is None or not mc.sem:
            z = math.nan
        else:
            z = (mc.C - ex.C) / mc.sem
        out.append(ComparePoint(ex.sweep_value, ex.C, mc.C, mc.sem, z, bool(abs(z) > Z_FLAG)))
    return out
