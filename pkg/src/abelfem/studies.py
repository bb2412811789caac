"""Convergence, fixed-order and alpha studies, with CSV and SVG output."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import assemble
from .mesh import build_space, build_uniform_mesh
from .norms import SpectralNormEvaluator
from .operator import experiment2, get_problem
from .quadrature import QuadPolicy
from .solve import solve

log = logging.getLogger(__name__)

CSV_HEADER = ["N", "h", "M", "error", "rel_error", "rate"]
SWEEP_HEADER = ["alpha", "N", "M", "error", "rel_error"]
LARGE_N = 2**10


class StudyError(RuntimeError):
    """A run finished without a finite error."""


@dataclass
class StudyConfig:
    problem: str = "exp1"
    m: int = 1
    alpha: float | None = None
    n_list: list = field(default_factory=lambda: [2**k for k in range(5, 10)])
    order_mode: str = "s2"
    beta: float | None = None
    n_modes: int | None = None
    threads: int = 1
    out_csv: str | None = None
    out_svg: str | None = None
    allow_large: bool = False
    n_max: int = 25
    fixed_orders: list = field(default_factory=lambda: [2, 3, 4, 5, 6, 10])
    alphas: list = field(default_factory=lambda: [k / 10 for k in range(1, 10)])
    pollution_factor: float = 3.0
    reference_slope: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError(f"n_list entries must be positive integers, got {self.n_list}")
        if list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError(f"n_list must be strictly ascending, got {self.n_list}")
        if self.m < 0:
            raise ValueError(f"degree must be >= 0, got {self.m}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValueError(f"alpha values must lie in (0, 1), got {self.alphas}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        parse_order_mode(self.order_mode)
        if not self.allow_large and self.m >= 1 and max(self.n_list) > LARGE_N:
            raise ValueError(f"N > {LARGE_N} with m >= 1 needs allow_large (dense matrix memory)")


def parse_order_mode(mode: str) -> dict:
    """``s1``..``s5`` -> prefactor index, ``fixed:<k>`` -> fixed order."""
    mode = mode.strip()
    if len(mode) == 2 and mode[0] == "s" and mode[1] in "12345":
        return {"prefactor_index": int(mode[1])}
    if mode.startswith("fixed:"):
        try:
            k = int(mode[6:])
        except ValueError:
            raise ValueError(f"bad fixed order in {mode!r}") from None
        if k < 1:
            raise ValueError("fixed order must be >= 1")
        return {"fixed_order": k}
    raise ValueError(f"order mode must be s1..s5 or fixed:<k>, got {mode!r}")


@dataclass
class Row:
    N: int
    h: float
    M: int
    error: float
    rel_error: float
    rate: float = math.nan


@dataclass
class ConvergenceReport:
    rows: list
    label: str = ""
    slope: float = math.nan
    slope_residual: float = math.nan

    def __post_init__(self):
        self._fill_rates()

    def _fill_rates(self):
        for prev, row in zip(self.rows, self.rows[1:]):
            row.rate = math.log2(prev.error / row.error) / math.log2(row.N / prev.N)
        if len(self.rows) >= 2:
            x = np.log2([r.N for r in self.rows])
            y = np.log2([r.error for r in self.rows])
            coef, res, *_ = np.polyfit(x, y, 1, full=True)
            self.slope = float(-coef[0])
            self.slope_residual = float(math.sqrt(res[0] / len(x))) if res.size else 0.0

    @property
    def rates(self) -> list:
        return [r.rate for r in self.rows[1:]]

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow([r.N, _g17(r.h), r.M, _g17(r.error), _g17(r.rel_error), "" if math.isnan(r.rate) else _g17(r.rate)])

    @classmethod
    def from_csv(cls, path, label=""):
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header {header}")
            rows = [Row(int(N), float(h), int(M), float(e), float(re)) for N, h, M, e, re, _ in rd]
        return cls(rows, label)


def _g17(x) -> str:
    return f"{x:.17g}"


def solve_once(problem, m: int, N: int, policy_kw: dict, evaluator: SpectralNormEvaluator, beta=None, threads: int = 1) -> Row:
    space = build_space(build_uniform_mesh(N), m)
    policy = QuadPolicy(m, problem.alpha, 1.0 / N, lambda_K=problem.kernel.lambda_K, **policy_kw)
    system = assemble(space, problem, policy, threads=threads)
    rep = solve(system, space)
    err, rel = evaluator.error(problem, rep.solution, beta)
    if not (math.isfinite(err) and math.isfinite(rel)):
        raise StudyError(f"non-finite error for {problem.name} at N={N}")
    log.info("%s m=%d N=%d err=%.6e rel=%.6e residual=%.1e", problem.name, m, N, err, rel, rep.residual_inf)
    return Row(N, 1.0 / N, space.dim, err, rel)


def _policy_kw(config: StudyConfig, mode: str | None = None) -> dict:
    kw = parse_order_mode(mode or config.order_mode)
    kw["n_max"] = config.n_max
    return kw


def _evaluator(config):
    return SpectralNormEvaluator(config.n_modes)


def run_convergence(config: StudyConfig, evaluator=None, label: str | None = None, mode: str | None = None) -> ConvergenceReport:
    problem = get_problem(config.problem, config.alpha)
    evaluator = evaluator or _evaluator(config)
    kw = _policy_kw(config, mode)
    rows = [solve_once(problem, config.m, N, kw, evaluator, config.beta, config.threads) for N in config.n_list]
    report = ConvergenceReport(rows, label or mode or config.order_mode)
    if config.out_csv:
        report.to_csv(config.out_csv)
    if config.out_svg:
        write_convergence_svg(config.out_svg, [report], _title(config), ref_slope=_ref_slope(config))
    return report


def _ref_slope(config):
    if config.reference_slope is not None:
        return config.reference_slope
    return 2.0 if config.m >= 1 else 1.0


def _title(config):
    return f"{config.problem}, m={config.m}"


@dataclass
class FixedOrderStudy:
    reports: dict
    polluted: bool
    pollution_ratio: float


def run_fixed_order_study(config: StudyConfig, evaluator=None) -> FixedOrderStudy:
    evaluator = evaluator or _evaluator(config)
    reports = {}
    for k in config.fixed_orders:
        sub = replace(config, out_csv=None, out_svg=None)
        reports[k] = run_convergence(sub, evaluator, label=f"n1={k}", mode=f"fixed:{k}")
    lo, hi = min(config.fixed_orders), max(config.fixed_orders)
    ratio = reports[lo].rows[-1].error / reports[hi].rows[-1].error
    if config.out_csv:
        for k, rep in reports.items():
            rep.to_csv(_suffixed(config.out_csv, f"n{k}"))
    if config.out_svg:
        write_convergence_svg(config.out_svg, list(reports.values()), _title(config) + ", fixed orders", ref_slope=_ref_slope(config))
    return FixedOrderStudy(reports, ratio >= config.pollution_factor, ratio)


def _suffixed(path: str, tag: str) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}_{tag}.{ext}" if dot else f"{path}_{tag}"


@dataclass
class SweepRow:
    alpha: float
    N: int
    M: int
    error: float
    rel_error: float


def run_alpha_sweep(config: StudyConfig, N: int | None = None, evaluator=None) -> list:
    """Relative errors of the alpha-family problem at one mesh size (last entry of ``n_list`` by default)."""
    N = N or config.n_list[-1]
    evaluator = evaluator or _evaluator(config)
    kw = _policy_kw(config)
    out = []
    for a in config.alphas:
        problem = experiment2(a)
        row = solve_once(problem, config.m, N, kw, evaluator, config.beta, config.threads)
        out.append(SweepRow(a, N, row.M, row.error, row.rel_error))
    if config.out_csv:
        write_sweep_csv(config.out_csv, out)
    if config.out_svg:
        write_sweep_svg(config.out_svg, out, f"relative error, m={config.m}, N={N}")
    return out


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([_g17(r.alpha), r.N, r.M, _g17(r.error), _g17(r.rel_error)])


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        if next(rd) != SWEEP_HEADER:
            raise ValueError("unexpected CSV header")
        return [SweepRow(float(a), int(N), int(M), float(e), float(r)) for a, N, M, e, r in rd]


# ---------------------------------------------------------------- SVG

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
_W, _H, _PAD = 640, 440, 70


def _svg_frame(title, xlabel, ylabel):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD / 2}" width="{_W - 1.5 * _PAD}" height="{_H - 1.5 * _PAD}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="15" y="{_H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {_H / 2})">{_esc(ylabel)}</text>',
    ]


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Axes:
    def __init__(self, xs, ys, logx=True):
        self.logx = logx
        lx = np.log2(xs) if logx else np.asarray(xs, dtype=float)
        ly = np.log10(ys)
        self.x0, self.x1 = float(lx.min()), float(lx.max())
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        self.y0, self.y1 = math.floor(float(ly.min())), math.ceil(float(ly.max()))
        if self.y1 == self.y0:
            self.y1 += 1

    def px(self, x):
        v = math.log2(x) if self.logx else x
        return _PAD + (v - self.x0) / (self.x1 - self.x0) * (_W - 1.5 * _PAD)

    def py(self, y):
        v = math.log10(y)
        return _PAD / 2 + (self.y1 - v) / (self.y1 - self.y0) * (_H - 1.5 * _PAD)

    def ticks(self, xs):
        out = []
        for x in sorted(set(xs)):
            label = f"2^{round(math.log2(x))}" if self.logx and abs(math.log2(x) - round(math.log2(x))) < 1e-9 else f"{x:g}"
            out.append(f'<text x="{self.px(x):.1f}" y="{_H - 0.8 * _PAD + 18}" text-anchor="middle" font-size="10">{label}</text>')
        for e in range(self.y0, self.y1 + 1):
            y = self.py(10.0**e)
            out.append(f'<line x1="{_PAD}" y1="{y:.1f}" x2="{_W - _PAD / 2}" y2="{y:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{_PAD - 5}" y="{y + 4:.1f}" text-anchor="end" font-size="10">1e{e}</text>')
        return out


def _polyline(ax, xs, ys, color, dashed=False):
    pts = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys))
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    body = [f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>']
    if not dashed:
        body += [f'<circle cx="{ax.px(x):.2f}" cy="{ax.py(y):.2f}" r="2.5" fill="{color}"/>' for x, y in zip(xs, ys)]
    return body


def write_convergence_svg(path, reports, title="", ref_slope: float | None = 1.0):
    """Log-log error plot, one polyline per report and a dashed ``N^-ref_slope`` guide."""
    xs = [r.N for rep in reports for r in rep.rows]
    ys = [r.error for rep in reports for r in rep.rows]
    ax = _Axes(xs, ys)
    out = _svg_frame(title, "N", "error")
    out += ax.ticks(xs)
    for k, rep in enumerate(reports):
        color = _COLORS[k % len(_COLORS)]
        out += _polyline(ax, [r.N for r in rep.rows], [r.error for r in rep.rows], color)
        out.append(f'<text x="{_W - _PAD / 2 - 5}" y="{_PAD / 2 + 15 + 14 * k}" text-anchor="end" font-size="11" fill="{color}">{_esc(rep.label)}</text>')
    if ref_slope and len(set(xs)) > 1:
        first = reports[0].rows
        n0, n1 = first[0].N, first[-1].N
        e0 = first[0].error * 2.0
        out += _polyline(ax, [n0, n1], [e0, e0 * (n0 / n1) ** ref_slope], "black", dashed=True)
        out.append(f'<text x="{_PAD + 5}" y="{_H - 1.0 * _PAD - 5}" font-size="10">dashed: slope {ref_slope:g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out))


def write_sweep_svg(path, rows, title=""):
    xs = [r.alpha for r in rows]
    ys = [r.rel_error for r in rows]
    ax = _Axes(xs, ys, logx=False)
    out = _svg_frame(title, "alpha", "relative error")
    out += ax.ticks(xs)
    out += _polyline(ax, xs, ys, _COLORS[0])
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out))
