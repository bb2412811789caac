"""Study configuration: ``key = value`` files with ``[section]`` headers, overridden by flags.

Sections are ``[study]`` (fields of :class:`StudyConfig`) and ``[admissibility]``
(``alpha``, ``C_c``, ``d``, ``c``, ``C``). Tables are written as
``d = 1,1:1.1; 2,2:-0.1`` and ``C = 2:2.8284271247461903``.
"""
from __future__ import annotations

import configparser
import dataclasses
import math

from .admissibility import AdmissibilityInput
from .studies import StudyConfig, parse_order_mode


class ConfigError(ValueError):
    """Bad configuration; the CLI maps it to exit code 2."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t == "true":
        return True
    if t == "false":
        return False
    raise ConfigError(f"expected true or false, got {text!r}")


def _opt_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(t)


def _opt_int(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else int(t)


def _opt_str(text: str):
    t = text.strip()
    return t or None


def _int_list(text: str) -> list:
    return [int(_pow2(tok)) for tok in _split(text)]


def _pow2(tok: str):
    tok = tok.strip()
    if tok.startswith("2^"):
        return 2 ** int(tok[2:])
    return int(tok)


def _float_list(text: str) -> list:
    return [float(tok) for tok in _split(text)]


def _split(text: str):
    return [t for t in text.replace(",", " ").split() if t]


STUDY_KEYS = {
    "problem": str.strip,
    "m": int,
    "alpha": _opt_float,
    "n_list": _int_list,
    "order_mode": str.strip,
    "beta": _opt_float,
    "n_modes": _opt_int,
    "threads": int,
    "out_csv": _opt_str,
    "out_svg": _opt_str,
    "allow_large": _bool,
    "n_max": int,
    "fixed_orders": _int_list,
    "alphas": _float_list,
    "pollution_factor": float,
    "reference_slope": _opt_float,
}
ADMISSIBILITY_KEYS = ("alpha", "C_c", "d", "c", "C")

assert set(STUDY_KEYS) == {f.name for f in dataclasses.fields(StudyConfig)}


def read_config(path) -> dict:
    """``{section: {key: raw string}}``; unknown sections and keys are rejected by name."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep C and c apart
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    out = {}
    for sec in cp.sections():
        allowed = STUDY_KEYS if sec == "study" else ADMISSIBILITY_KEYS if sec == "admissibility" else None
        if allowed is None:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
        out[sec] = dict(cp[sec])
    return out


def _convert_study(raw: dict) -> dict:
    out = {}
    for key, text in raw.items():
        try:
            out[key] = STUDY_KEYS[key](text)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from None
    return out


def parse_config(path=None, overrides: dict | None = None) -> StudyConfig:
    """File values first, then non-``None`` ``overrides`` (command-line flags)."""
    values = {}
    if path is not None:
        values.update(_convert_study(read_config(path).get("study", {})))
    for key, val in (overrides or {}).items():
        if key not in STUDY_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if val is not None:
            values[key] = val
    _check_conflicts(values)
    try:
        return StudyConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _check_conflicts(values: dict):
    problem = values.get("problem", "exp1")
    a = values.get("alpha")
    if a is not None and not 0.0 < a < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {a}")
    if a is not None and problem == "exp1" and not math.isclose(a, 0.5):
        raise ConfigError("problem exp1 is defined for alpha = 0.5 only")
    if "order_mode" in values:
        try:
            parse_order_mode(values["order_mode"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _parse_table(text: str, pair: bool) -> dict:
    out = {}
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            key, val = item.split(":")
            idx = tuple(int(k) for k in key.split(","))
            if len(idx) != (2 if pair else 1):
                raise ValueError
            out[idx if pair else idx[0]] = float(val)
        except ValueError:
            raise ConfigError(f"bad table entry {item!r}") from None
    return out


def parse_admissibility(path=None, alpha: float | None = None, C_c: float | None = None) -> AdmissibilityInput:
    """Admissibility input from the ``[admissibility]`` section.

    Without a file, or a file without a ``d`` table, the pure Abel kernel
    ``d = {(1, 1): 1}`` is used.
    """
    raw = read_config(path).get("admissibility", {}) if path is not None else {}
    try:
        a = alpha if alpha is not None else float(raw.get("alpha", 0.5))
        cc = C_c if C_c is not None else float(raw.get("C_c", 1.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    d = _parse_table(raw["d"], True) if "d" in raw else {(1, 1): 1.0}
    c = _parse_table(raw.get("c", ""), False)
    C = _parse_table(raw.get("C", ""), False)
    try:
        return AdmissibilityInput(a, d, c, C, cc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
