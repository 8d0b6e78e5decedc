"""File formats: point lists, tabulated densities, reports and CSV exports.

CSV files written here start with a ``# seed=<n>`` comment line followed by
the header; numbers use 17 significant digits so identical runs give
byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import ConfigError

NUMBER_FORMAT = "{:.17g}"


def fmt(x) -> str:
    return NUMBER_FORMAT.format(float(x))


def _read_csv(path, columns):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    numbered = [(k, ln) for k, ln in enumerate(text.splitlines(), start=1)
                if ln.strip() and not ln.lstrip().startswith("#")]
    if not numbered:
        raise ConfigError(f"{path}: empty file")
    linenos, lines = zip(*numbered)
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header != list(columns):
        raise ConfigError(f"{path}:{linenos[0]}: expected header {','.join(columns)}, got {','.join(header)}")
    rows = []
    for lineno, row in zip(linenos[1:], reader):
        if len(row) != len(columns):
            raise ConfigError(f"{path}:{lineno}: {len(row)} fields, expected {len(columns)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return np.array(rows, dtype=float).reshape(-1, len(columns))


def read_points(path) -> tuple[np.ndarray, bool | None]:
    """Curve points from CSV ``re,im`` or JSON ``{"points": [[re, im], ...], "closed": bool}``.

    Returns ``(points, closed)``; ``closed`` is ``None`` for CSV input.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        pts = np.asarray(data.get("points", []), dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError(f"{path}: 'points' must be a list of [re, im] pairs")
        closed = data.get("closed")
        if closed is not None and not isinstance(closed, bool):
            raise ConfigError(f"{path}: 'closed' must be true or false")
        return pts[:, 0] + 1j * pts[:, 1], closed
    arr = _read_csv(path, ("re", "im"))
    return arr[:, 0] + 1j * arr[:, 1], None


def read_tabulated(path) -> tuple[np.ndarray, np.ndarray]:
    """Density samples from CSV ``tau,re,im``."""
    arr = _read_csv(path, ("tau", "re", "im"))
    return arr[:, 0], arr[:, 1] + 1j * arr[:, 2]


def write_csv(path, header, rows, seed) -> Path:
    path = Path(path)
    lines = [f"# seed={seed}", ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trace(path, trace, seed) -> Path:
    """Excision trace ``[(eps, value), ...]`` as ``epsilon,re,im``."""
    return write_csv(path, ("epsilon", "re", "im"), [(e, v.real, v.imag) for e, v in trace], seed)


def write_convergence(path, records, seed) -> Path:
    rows = [(r.n, r.z.real, r.z.imag, r.phi.real, r.phi.imag, r.abs_error) for r in records]
    return write_csv(path, ("n", "re_z", "im_z", "re_phi", "im_phi", "abs_error"), rows, seed)


def cnum(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return cnum(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=False) + "\n")
    return path


def write_classification(path, report: dict, seed) -> Path:
    """Classification report ``{"class", "alpha", "dini_tail", "residual"}`` (+ seed)."""
    return write_json(path, {**report, "seed": seed})


def read_classification(path) -> dict:
    data = json.loads(Path(path).read_text())
    missing = {"class", "alpha", "dini_tail", "residual"} - set(data)
    if missing:
        raise ConfigError(f"{path}: classification report lacks {sorted(missing)}")
    return data


def locate(text: str, path) -> int:
    """1-based line of the JSON value at ``path`` (keys/indices) in ``text``.

    Falls back to the deepest prefix that exists, so a missing key points at
    the object that should contain it.
    """
    dec = json.JSONDecoder()

    def skip_ws(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    pos = skip_ws(0)
    for key in path:
        if pos >= len(text):
            break
        if text[pos] == "{" and isinstance(key, str):
            i = skip_ws(pos + 1)
            found = None
            while i < len(text) and text[i] != "}":
                name, i = json.decoder.scanstring(text, i + 1)
                i = skip_ws(skip_ws(i) + 1)  # past ':'
                if name == key:
                    found = i
                    break
                _, i = dec.raw_decode(text, i)
                i = skip_ws(i)
                if text[i] == ",":
                    i = skip_ws(i + 1)
            if found is None:
                break
            pos = found
        elif text[pos] == "[" and isinstance(key, int):
            i = skip_ws(pos + 1)
            for _ in range(key):
                if text[i] == "]":
                    break
                _, i = dec.raw_decode(text, i)
                i = skip_ws(i)
                if text[i] == ",":
                    i = skip_ws(i + 1)
            if text[i] == "]":
                break
            pos = i
        else:
            break
    return text.count("\n", 0, pos) + 1
