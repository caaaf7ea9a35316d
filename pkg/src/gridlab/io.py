"""JSON file formats and report emission."""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .entropy import TauFunction
from .errors import ContractError
from .measures import AtomicMeasure, BinnedMeasure, RationalPmf
from .strategies import MixtureStrategy, ScoredStrategy, StrategyTable

SIG_DIGITS = 12


class FileError(ContractError):
    """A file could not be read, parsed or written; the message names the path."""


def _load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ContractError(f"{where}: missing field {key!r}")
    return doc[key]


# -- measures ----------------------------------------------------------------


def measure_from_dict(doc: dict):
    kind = _require(doc, "type", "measure")
    if kind == "binned":
        w = _require(doc, "weights", "binned measure")
        if "m" in doc and int(doc["m"]) != len(w):
            raise ContractError(f"binned measure: m={doc['m']} but {len(w)} weights")
        return BinnedMeasure(w)
    if kind == "atoms":
        atoms = _require(doc, "atoms", "atomic measure")
        if not atoms:
            return AtomicMeasure([], [])
        values, masses = zip(*atoms)
        return AtomicMeasure(values, masses)
    if kind == "pmf":
        num = [int(x) for x in _require(doc, "num", "pmf")]
        den = int(_require(doc, "den", "pmf"))
        if "K" in doc and int(doc["K"]) != len(num):
            raise ContractError(f"pmf: K={doc['K']} but {len(num)} numerators")
        return RationalPmf(tuple(num), den)
    raise ContractError(f"unknown measure type {kind!r}")


def measure_to_dict(mu) -> dict:
    if isinstance(mu, BinnedMeasure):
        return {"type": "binned", "m": mu.m, "weights": mu.weights.tolist()}
    if isinstance(mu, AtomicMeasure):
        return {"type": "atoms", "atoms": [[float(v), float(w)] for v, w in mu.pairs()]}
    if isinstance(mu, RationalPmf):
        return {"type": "pmf", "K": mu.K, "num": list(mu.numerators), "den": mu.denominator}
    raise ContractError(f"cannot serialize {type(mu).__name__}")


def load_measure(path: str | Path):
    try:
        return measure_from_dict(_load_json(path))
    except FileError:
        raise
    except (ContractError, TypeError, ValueError) as exc:
        raise FileError(f"{path}: {exc}") from exc


# -- strategies --------------------------------------------------------------


def strategy_from_dict(doc: dict):
    kind = _require(doc, "type", "strategy")
    if kind == "table":
        K = int(_require(doc, "K", "table"))
        D = int(_require(doc, "D", "table"))
        entries = _require(doc, "entries", "table")
        flat = []
        for e in entries:
            # rows of D pairs, or a flat list of K^D * D pairs
            if e and isinstance(e[0], (list, tuple)):
                flat.extend(e)
            else:
                flat.append(e)
        if len(flat) != K**D * D:
            raise ContractError(f"table: expected {K**D * D} entries, got {len(flat)}")
        fr = np.array([Fraction(int(n), int(d)) for n, d in flat], dtype=object).reshape(K**D, D)
        return StrategyTable.from_fractions(K, D, fr)
    if kind == "scored":
        score = _require(doc, "score", "scored strategy")
        if isinstance(score, dict):
            score = np.asarray(_require(score, "bins", "score"), dtype=float)
        D = doc.get("D")
        return ScoredStrategy(score, None if D is None else int(D))
    if kind == "mixture":
        comps = [strategy_from_dict(c) for c in _require(doc, "components", "mixture")]
        weights = [_parse_weight(w) for w in _require(doc, "weights", "mixture")]
        return MixtureStrategy(comps, weights)
    raise ContractError(f"unknown strategy type {kind!r}")


def _parse_weight(w):
    if isinstance(w, str):
        return Fraction(w)
    if isinstance(w, (list, tuple)):
        return Fraction(int(w[0]), int(w[1]))
    if isinstance(w, int):
        return Fraction(w)
    return float(w)


def strategy_to_dict(s) -> dict:
    if isinstance(s, StrategyTable):
        rows = [[[int(x), s.den] for x in row] for row in s.num.tolist()]
        return {"type": "table", "K": s.K, "D": s.D, "entries": rows}
    if isinstance(s, ScoredStrategy):
        score = s.name if s.name in ("identity", "vee", "constant") else {"bins": list(map(float, s.score))}
        return {"type": "scored", "score": score, "D": s.D}
    if isinstance(s, MixtureStrategy):
        return {"type": "mixture",
                "weights": [str(w) if isinstance(w, Fraction) else float(w) for w in s.weights],
                "components": [strategy_to_dict(c) for c in s.components]}
    raise ContractError(f"cannot serialize {type(s).__name__}")


def load_strategy(path: str | Path):
    try:
        return strategy_from_dict(_load_json(path))
    except FileError:
        raise
    except (ContractError, TypeError, ValueError) as exc:
        raise FileError(f"{path}: {exc}") from exc


# -- potentials --------------------------------------------------------------


def tau_from_dict(doc: dict) -> TauFunction:
    values = _require(doc, "values", "tau")
    return TauFunction(np.asarray(values, dtype=float), float(doc.get("beta", 1.0)))


def tau_to_dict(tau: TauFunction) -> dict:
    return {"type": "tau", "beta": tau.beta, "values": tau.values.tolist()}


def load_tau(path: str | Path) -> TauFunction:
    try:
        return tau_from_dict(_load_json(path))
    except FileError:
        raise
    except (ContractError, TypeError, ValueError) as exc:
        raise FileError(f"{path}: {exc}") from exc


# -- emission ----------------------------------------------------------------


def to_plain(obj: Any) -> Any:
    """Convert reports to JSON-ready values; floats keep 12 significant digits."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (BinnedMeasure, AtomicMeasure, RationalPmf)):
        return measure_to_dict(obj)
    if isinstance(obj, TauFunction):
        return tau_to_dict(obj)
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): to_plain(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def dumps_json(report: Any) -> str:
    return json.dumps(to_plain(report), indent=2, sort_keys=True) + "\n"


def dumps_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    plain = [to_plain(r) for r in rows]
    columns = columns or (list(plain[0].keys()) if plain else [])
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for r in plain:
        writer.writerow(r)
    return buf.getvalue()


def emit(report: Any, fmt: str = "json", path: str | Path | None = None,
         rows: list[dict] | None = None, columns: list[str] | None = None,
         preamble: str = "") -> str:
    """Serialize a report as JSON, or its curve ``rows`` as CSV, to ``path`` or stdout."""
    if fmt == "json":
        text = dumps_json(report)
    elif fmt == "csv":
        if rows is None:
            raise ContractError("this report has no tabular rows for CSV output")
        text = preamble + dumps_csv(rows, columns)
    else:
        raise ContractError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise FileError(f"{path}: {exc.strerror or exc}") from exc
    return text
