"""Grid file format: a ``key=value`` manifest plus one payload file per field.

Payload order is first coordinate fastest (Fortran order).  Encodings:
``text`` (one ``repr(float)`` per line, or ``0``/``1`` for sets), ``f64le``
(raw little-endian doubles) and ``bits`` (sets only, packed little-endian).

Example manifest::

    format=onesided-grid
    version=1
    dim=2
    depth=3
    extent=0,0;1,1
    kind=pair
    fields=w,v
    field_count=2
    encoding=f64le
    p=2.0
    payload.w=pair.w.f64
    payload.v=pair.v.f64
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np

from .dyadic import Box, DyadicCube
from .grid import CellSet, GridDomain, WeightField, WeightPair

__all__ = ["GridFileError", "write_grid", "read_grid", "write_pair", "read_pair", "write_set", "read_set",
           "write_field", "read_field", "ENCODINGS"]

FORMAT = "onesided-grid"
VERSION = 1
ENCODINGS = ("text", "f64le", "bits")
_SUFFIX = {"text": "txt", "f64le": "f64", "bits": "bits"}


class GridFileError(ValueError):
    """Malformed or inconsistent grid file."""


def _extent_str(dom: GridDomain) -> str:
    B = dom.extent.box
    return ";".join(",".join(str(c) for c in corner) for corner in (B.lower, B.upper))


def _parse_extent(text: str, dim: int) -> DyadicCube:
    try:
        lo, hi = text.split(";")
        lo = [Fraction(c.strip()) for c in lo.split(",")]
        hi = [Fraction(c.strip()) for c in hi.split(",")]
        if len(lo) != dim or len(hi) != dim:
            raise GridFileError(f"extent {text!r} does not have {dim} coordinates per corner")
        return DyadicCube.from_box(Box.from_coords(lo, hi))
    except GridFileError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise GridFileError(f"bad extent {text!r}: {exc}") from None


def _encode(arr: np.ndarray, encoding: str) -> bytes:
    flat = arr.ravel(order="F")
    if encoding == "text":
        if arr.dtype == bool:
            return ("\n".join("1" if b else "0" for b in flat) + "\n").encode()
        return ("\n".join(repr(float(x)) for x in flat) + "\n").encode()
    if encoding == "f64le":
        return np.ascontiguousarray(flat, dtype="<f8").tobytes()
    if encoding == "bits":
        if arr.dtype != bool:
            raise GridFileError("bits encoding holds sets only")
        return np.packbits(flat, bitorder="little").tobytes()
    raise GridFileError(f"unknown encoding {encoding!r}; use one of {ENCODINGS}")


def _decode(data: bytes, encoding: str, shape: tuple, is_set: bool) -> np.ndarray:
    n = int(np.prod(shape))
    if encoding == "text":
        lines = [s.strip() for s in data.decode().splitlines() if s.strip()]
        if len(lines) != n:
            raise GridFileError(f"payload has {len(lines)} values, expected {n}")
        if is_set:
            if any(s not in ("0", "1") for s in lines):
                raise GridFileError("set payload must be 0/1 per line")
            flat = np.array([s == "1" for s in lines], dtype=bool)
        else:
            try:
                flat = np.array([float(s) for s in lines], dtype=np.float64)
            except ValueError as exc:
                raise GridFileError(f"bad value in payload: {exc}") from None
    elif encoding == "f64le":
        if len(data) != 8 * n:
            raise GridFileError(f"payload has {len(data)} bytes, expected {8 * n}")
        flat = np.frombuffer(data, dtype="<f8").astype(np.float64)
        if is_set:
            if not np.isin(flat, (0.0, 1.0)).all():
                raise GridFileError("set payload must hold 0/1 values")
            flat = flat.astype(bool)
    elif encoding == "bits":
        if not is_set:
            raise GridFileError("bits encoding holds sets only")
        if len(data) != (n + 7) // 8:
            raise GridFileError(f"payload has {len(data)} bytes, expected {(n + 7) // 8}")
        flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=n, bitorder="little").astype(bool)
    else:
        raise GridFileError(f"unknown encoding {encoding!r}; use one of {ENCODINGS}")
    return flat.reshape(shape, order="F")


def write_grid(path, domain: GridDomain, fields: dict[str, np.ndarray], kind: str,
               encoding: str = "text", extra: dict | None = None) -> Path:
    """Write manifest ``path`` and payloads ``<stem>.<field>.<suffix>`` next to it."""
    if encoding not in ENCODINGS:
        raise GridFileError(f"unknown encoding {encoding!r}; use one of {ENCODINGS}")
    path = Path(path)
    lines = [f"format={FORMAT}", f"version={VERSION}", f"dim={domain.dim}", f"depth={domain.depth}",
             f"extent={_extent_str(domain)}", f"kind={kind}", f"fields={','.join(fields)}",
             f"field_count={len(fields)}", f"encoding={encoding}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    for name, arr in fields.items():
        arr = np.asarray(arr)
        if arr.shape != domain.shape:
            raise GridFileError(f"field {name} has shape {arr.shape}, expected {domain.shape}")
        pname = f"{path.stem}.{name}.{_SUFFIX[encoding]}"
        (path.parent / pname).write_bytes(_encode(arr, encoding))
        lines.append(f"payload.{name}={pname}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_manifest(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GridFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    meta = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GridFileError(f"{path}:{i}: expected key=value")
        k, v = line.split("=", 1)
        meta[k.strip()] = v.strip()
    return meta


def read_grid(path) -> tuple[GridDomain, dict[str, np.ndarray], dict[str, str]]:
    """Read a manifest and its payloads; sets come back as boolean arrays."""
    path = Path(path)
    meta = read_manifest(path)
    for key in ("format", "version", "dim", "depth", "extent", "kind", "fields", "field_count", "encoding"):
        if key not in meta:
            raise GridFileError(f"{path}: missing key {key!r}")
    if meta["format"] != FORMAT:
        raise GridFileError(f"{path}: format {meta['format']!r} is not {FORMAT!r}")
    try:
        version, dim, depth, count = (int(meta[k]) for k in ("version", "dim", "depth", "field_count"))
    except ValueError as exc:
        raise GridFileError(f"{path}: {exc}") from None
    if version != VERSION:
        raise GridFileError(f"{path}: unsupported version {version}")
    try:
        domain = GridDomain(dim, depth, _parse_extent(meta["extent"], dim))
    except GridFileError:
        raise
    except ValueError as exc:
        raise GridFileError(f"{path}: {exc}") from None
    names = [s.strip() for s in meta["fields"].split(",") if s.strip()]
    if len(names) != count:
        raise GridFileError(f"{path}: field_count={count} but fields lists {len(names)}")
    is_set = meta["kind"] == "set"
    fields = {}
    for name in names:
        key = f"payload.{name}"
        if key not in meta:
            raise GridFileError(f"{path}: no payload for field {name!r}")
        ppath = path.parent / meta[key]
        try:
            data = ppath.read_bytes()
        except OSError as exc:
            raise GridFileError(f"cannot read payload {ppath}: {exc.strerror or exc}") from None
        fields[name] = _decode(data, meta["encoding"], domain.shape, is_set)
    return domain, fields, meta


def write_pair(path, pair: WeightPair, encoding: str = "text") -> Path:
    return write_grid(path, pair.domain, {"w": pair.w.density, "v": pair.v.density}, "pair", encoding,
                      {"p": repr(float(pair.p))})


def read_pair(path, p: float | None = None) -> WeightPair:
    """Pair file; ``p`` overrides the manifest's exponent."""
    domain, fields, meta = read_grid(path)
    if meta["kind"] != "pair" or set(fields) != {"w", "v"}:
        raise GridFileError(f"{path}: expected a pair file with fields w,v")
    if p is None:
        if "p" not in meta:
            raise GridFileError(f"{path}: no exponent p in manifest and none given")
        try:
            p = float(meta["p"])
        except ValueError:
            raise GridFileError(f"{path}: bad exponent {meta['p']!r}") from None
    try:
        return WeightPair(WeightField(domain, fields["w"]), WeightField(domain, fields["v"]), p)
    except ValueError as exc:
        raise GridFileError(f"{path}: {exc}") from None


def write_set(path, E: CellSet, encoding: str = "text") -> Path:
    return write_grid(path, E.domain, {"E": E.mask}, "set", encoding)


def read_set(path) -> CellSet:
    domain, fields, meta = read_grid(path)
    if meta["kind"] != "set" or len(fields) != 1:
        raise GridFileError(f"{path}: expected a set file with one field")
    return CellSet(domain, next(iter(fields.values())))


def write_field(path, domain: GridDomain, values: np.ndarray, name: str = "values",
                encoding: str = "f64le", extra: dict | None = None) -> Path:
    return write_grid(path, domain, {name: np.asarray(values, dtype=np.float64)}, "field", encoding, extra)


def read_field(path) -> tuple[GridDomain, np.ndarray]:
    domain, fields, meta = read_grid(path)
    if meta["kind"] != "field" or len(fields) != 1:
        raise GridFileError(f"{path}: expected a field file with one field")
    return domain, next(iter(fields.values()))
