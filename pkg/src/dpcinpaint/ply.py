"""PLY 1.0 reader/writer for point clouds (ascii and binary_little_endian).

Only the vertex element's x/y/z (and optional nx/ny/nz) properties are
honored; everything else is parsed structurally and skipped. Colors and
other attributes are out of scope. Saving always writes float64 properties
so that a binary round trip is bit-exact.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .cloud import FrameSequence, PointCloud
from .errors import PlyDataError, PlyParseError

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _parse_header(fh):
    """Parse the header, returning (format, [(elem_name, count, props)]).

    props is a list of (prop_name, numpy_dtype_str) with dtype None for list
    properties (skippable only in ascii mode and only for non-vertex elements).
    """
    line = fh.readline()
    if line.strip() not in (b"ply",):
        raise PlyParseError(f"not a PLY file, first line: {line!r}")
    fmt = None
    elements = []
    while True:
        raw = fh.readline()
        if not raw:
            raise PlyParseError("header ended before end_header")
        line = raw.decode("ascii", errors="replace").strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        if line == "end_header":
            break
        tokens = line.split()
        if tokens[0] == "format":
            if len(tokens) != 3:
                raise PlyParseError(f"malformed format line: {line!r}")
            if tokens[1] == "ascii":
                fmt = "ascii"
            elif tokens[1] == "binary_little_endian":
                fmt = "binary_le"
            else:
                raise PlyParseError(f"unsupported format line: {line!r}")
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"malformed element line: {line!r}")
            try:
                count = int(tokens[2])
            except ValueError:
                raise PlyParseError(f"bad element count in line: {line!r}") from None
            if count < 0:
                raise PlyParseError(f"negative element count in line: {line!r}")
            elements.append((tokens[1], count, []))
        elif tokens[0] == "property":
            if not elements:
                raise PlyParseError(f"property before any element: {line!r}")
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise PlyParseError(f"malformed list property line: {line!r}")
                elements[-1][2].append((tokens[4], None))
            else:
                if len(tokens) != 3:
                    raise PlyParseError(f"malformed property line: {line!r}")
                dt = _SCALAR_TYPES.get(tokens[1])
                if dt is None:
                    raise PlyParseError(f"unknown property type in line: {line!r}")
                elements[-1][2].append((tokens[2], dt))
        else:
            raise PlyParseError(f"unrecognized header line: {line!r}")
    if fmt is None:
        raise PlyParseError("header has no format line")
    return fmt, elements


def _extract(columns, props, count):
    names = [p[0] for p in props]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise PlyParseError(f"vertex element lacks property {coord}")
    pts = np.column_stack([columns["x"], columns["y"], columns["z"]]).astype(np.float64)
    bad = ~np.isfinite(pts).all(axis=1)
    if bad.any():
        raise PlyDataError(f"non-finite coordinate at vertex {int(np.flatnonzero(bad)[0])}")
    normals = None
    if all(c in names for c in ("nx", "ny", "nz")):
        normals = np.column_stack(
            [columns["nx"], columns["ny"], columns["nz"]]
        ).astype(np.float64)
    return PointCloud(pts, normals)


def load_ply(path) -> PointCloud:
    """Load one PLY file into a PointCloud (normals iff nx/ny/nz present)."""
    with open(path, "rb") as fh:
        fmt, elements = _parse_header(fh)
        for elem_i, (name, count, props) in enumerate(elements):
            if name == "vertex":
                if any(dt is None for _, dt in props):
                    raise PlyParseError("list property inside vertex element is unsupported")
                if fmt == "binary_le":
                    dtype = np.dtype([(p, "<" + dt) for p, dt in props])
                    buf = fh.read(dtype.itemsize * count)
                    if len(buf) != dtype.itemsize * count:
                        raise PlyDataError(
                            f"vertex payload truncated at element {len(buf) // max(dtype.itemsize, 1)}"
                        )
                    rec = np.frombuffer(buf, dtype=dtype)
                    columns = {p: rec[p] for p, _ in props}
                else:
                    rows = []
                    for i in range(count):
                        line = fh.readline()
                        if not line:
                            raise PlyDataError(f"vertex payload truncated at element {i}")
                        tokens = line.split()
                        if len(tokens) < len(props):
                            raise PlyDataError(f"short vertex line at element {i}")
                        rows.append(tokens[: len(props)])
                    arr = np.array(rows, dtype=np.float64) if rows else np.zeros((0, len(props)))
                    columns = {p: arr[:, j] for j, (p, _) in enumerate(props)}
                return _extract(columns, props, count)
            # Skip a non-vertex element that precedes the vertex element.
            if fmt == "ascii":
                for _ in range(count):
                    fh.readline()
            else:
                if any(dt is None for _, dt in props):
                    raise PlyParseError(
                        f"cannot skip binary element '{name}' with list properties"
                    )
                size = sum(np.dtype(dt).itemsize for _, dt in props)
                fh.seek(size * count, os.SEEK_CUR)
        raise PlyParseError("no vertex element in header")


def save_ply(cloud: PointCloud, path, format: str = "binary-le") -> None:
    """Write a PointCloud as PLY; binary mode round-trips bit-exactly.

    format: "ascii" or "binary-le".
    """
    if format not in ("ascii", "binary-le"):
        raise ValueError(f"format must be 'ascii' or 'binary-le', got {format!r}")
    n = len(cloud)
    has_normals = cloud.normals is not None
    header = ["ply"]
    header.append("format ascii 1.0" if format == "ascii" else "format binary_little_endian 1.0")
    header.append(f"element vertex {n}")
    props = ["x", "y", "z"] + (["nx", "ny", "nz"] if has_normals else [])
    header.extend(f"property double {p}" for p in props)
    header.append("end_header")

    data = cloud.points if not has_normals else np.hstack([cloud.points, cloud.normals])
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if format == "binary-le":
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
        else:
            # repr() is the shortest round-trip decimal form, so ascii mode
            # also reloads exactly.
            lines = [" ".join(repr(float(v)) for v in row) for row in data]
            if lines:
                fh.write(("\n".join(lines) + "\n").encode("ascii"))


def _pattern_regex(pattern: str):
    m = re.search(r"%0?(\d*)d", pattern)
    if m is None:
        raise ValueError(f"frame pattern {pattern!r} has no %d placeholder")
    width = m.group(1)
    digits = rf"(\d{{{width}}})" if width else r"(\d+)"
    return re.compile("^" + re.escape(pattern[: m.start()]) + digits + re.escape(pattern[m.end():]) + "$")


def sequence_paths(directory, pattern: str):
    """Files in `directory` matching a zero-padded pattern such as name_%04d.ply,
    sorted by frame index. Returns [(index, path)]."""
    rx = _pattern_regex(pattern)
    found = []
    for name in os.listdir(directory):
        m = rx.match(name)
        if m:
            found.append((int(m.group(1)), os.path.join(directory, name)))
    found.sort()
    return found


def load_sequence(directory, pattern: str) -> FrameSequence:
    paths = sequence_paths(directory, pattern)
    if not paths:
        raise FileNotFoundError(f"no files matching {pattern!r} in {directory}")
    return FrameSequence([load_ply(p) for _, p in paths])


def save_sequence(seq: FrameSequence, directory, pattern: str,
                  format: str = "binary-le", start_index: int = 1) -> list:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(seq.frames):
        path = os.path.join(directory, pattern % (start_index + i))
        save_ply(frame, path, format=format)
        paths.append(path)
    return paths
