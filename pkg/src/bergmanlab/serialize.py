"""CSV and JSON interchange for fields, metrics, Gram matrices and traces.

Formats are deliberately plain: CSV files carry node coordinates as re/im
column pairs in node order, complex matrix entries as re/im pairs in
row-major entry order, and every matrix-valued export gets a JSON sidecar
descriptor.  Floats are written with repr-round-trip precision so reruns at
identical settings are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .field import GridDomain, Weight, make_polydisc_grid, weight_from_descriptor

__all__ = [
    "export_scalar_field",
    "import_scalar_field",
    "export_weight",
    "import_weight",
    "export_matrix_field",
    "export_gram",
    "export_trace",
    "export_base_field",
    "dump_json",
]

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % float(x)


def _coord_header(dims: int):
    if dims == 1:
        return ["re(z)", "im(z)"]
    return ["re(z)", "im(z)", "re(w)", "im(w)"]


def _coord_row(node, dims: int):
    if dims == 1:
        return [_fmt(node.real), _fmt(node.imag)]
    return [_fmt(node[0].real), _fmt(node[0].imag), _fmt(node[1].real), _fmt(node[1].imag)]


def export_scalar_field(path, dom: GridDomain, values) -> None:
    """Write a scalar field as re(z),im(z)[,re(w),im(w)],value rows."""
    values = np.asarray(values, dtype=float)
    if values.shape != (dom.size,):
        raise InvalidArgument("values must be sampled on the grid nodes")
    lines = [",".join(_coord_header(dom.dims) + ["value"])]
    for i in range(dom.size):
        node = dom.nodes[i]
        lines.append(",".join(_coord_row(node, dom.dims) + [_fmt(values[i])]))
    Path(path).write_text("\n".join(lines) + "\n")


def import_scalar_field(path):
    """Read a scalar-field CSV back as (coords ndarray, values ndarray)."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    dims = 1 if len(header) == 3 else 2
    coords, vals = [], []
    for line in lines[1:]:
        parts = [float(x) for x in line.split(",")]
        if dims == 1:
            coords.append(complex(parts[0], parts[1]))
        else:
            coords.append((complex(parts[0], parts[1]), complex(parts[2], parts[3])))
        vals.append(parts[-1])
    return np.asarray(coords), np.asarray(vals)


def export_weight(path, w: Weight) -> None:
    """Weights serialize as their structured descriptor (kind, parameters,
    log-tags); sampled weights cannot round-trip and are rejected."""
    if w.descriptor is None:
        raise InvalidArgument("weight has no descriptor; build it via make_weight")
    doc = {"domain": w.dom.descriptor(), "weight": w.descriptor}
    dump_json(path, doc)


def import_weight(path) -> Weight:
    doc = json.loads(Path(path).read_text())
    dom = make_polydisc_grid(doc["domain"]["radii"], doc["domain"]["resolution"])
    return weight_from_descriptor(dom, doc["weight"])


def export_matrix_field(path, dom: GridDomain, entries, sidecar: dict) -> None:
    """Matrix field CSV: coordinates then re/im of h_ij in row-major order,
    plus a JSON sidecar (``path`` + '.json') with rank/grid/singular data."""
    entries = np.asarray(entries)
    n, r, _ = entries.shape
    header = _coord_header(dom.dims)
    for i in range(r):
        for j in range(r):
            header += [f"re(h_{i + 1}{j + 1})", f"im(h_{i + 1}{j + 1})"]
    lines = [",".join(header)]
    for k in range(n):
        row = _coord_row(dom.nodes[k], dom.dims)
        for i in range(r):
            for j in range(r):
                row += [_fmt(entries[k, i, j].real), _fmt(entries[k, i, j].imag)]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    dump_json(str(path) + ".json", sidecar)


def export_gram(path, G, sidecar: dict) -> None:
    """Gram matrix CSV (complex entries as re,im pairs) with descriptor."""
    G = np.asarray(G)
    d = G.shape[0]
    header = []
    for j in range(d):
        header += [f"re(g_{j + 1})", f"im(g_{j + 1})"]
    lines = [",".join(header)]
    for i in range(d):
        row = []
        for j in range(d):
            row += [_fmt(G[i, j].real), _fmt(G[i, j].imag)]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    dump_json(str(path) + ".json", sidecar)


def export_trace(path, trace, sidecar: dict) -> None:
    """Iteration trace CSV: k, A_k, measured ratio, floored-node count."""
    lines = ["k,a_k,ratio,floored_nodes"]
    for s in trace.steps:
        ratio = "" if s.step_ratio is None else _fmt(s.step_ratio)
        lines.append(f"{s.k},{_fmt(s.a_k)},{ratio},{s.floored_nodes}")
    Path(path).write_text("\n".join(lines) + "\n")
    dump_json(str(path) + ".json", sidecar)


def export_base_field(path, base: GridDomain, columns: dict) -> None:
    """Field over the base grid: t_re,t_im then named value columns."""
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    lines = [",".join(["t_re", "t_im"] + names)]
    for i in range(base.size):
        t = base.nodes[i]
        row = [_fmt(t.real), _fmt(t.imag)] + [_fmt(a[i]) for a in arrays]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def dump_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
