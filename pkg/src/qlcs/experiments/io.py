"""CSV and SVG output.

CSV is the canonical output. Floats are written with 17 significant digits so
identical runs give identical bytes and values round-trip exactly. Every file
starts with a ``schema_version`` column.
"""
import csv
import io
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version"] + list(columns))
    for r in rows:
        w.writerow([str(SCHEMA_VERSION)] + [fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows))
    return path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# --------------------------------------------------------------------------
# SVG heatmap
# --------------------------------------------------------------------------

# a few stops of a perceptually ordered dark-to-light ramp
_RAMP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], float)


def _colour(v):
    if not np.isfinite(v):
        return "#cccccc"
    t = float(np.clip(v, 0.0, 1.0)) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    c = _RAMP[i] + (t - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(x)) for x in c)


def heatmap_svg(values, row_labels, col_labels, title="", row_name="", col_name="", cell=28):
    """SVG heatmap of ``values`` (rows x cols) with values in [0, 1].

    Row 0 is drawn at the bottom, like a y axis.
    """
    V = np.asarray(values, dtype=float)
    nr, nc = V.shape
    left, top, bottom = 90, 40, 60
    w = left + nc * cell + 20
    h = top + nr * cell + bottom
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'font-family="sans-serif" font-size="10">']
    if title:
        out.append(f'<text x="{left}" y="20" font-size="13">{title}</text>')
    for i in range(nr):
        y = top + (nr - 1 - i) * cell
        out.append(f'<text x="{left - 4}" y="{y + cell / 2 + 3}" text-anchor="end">{row_labels[i]}</text>')
        for j in range(nc):
            x = left + j * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_colour(V[i, j])}">'
                       f'<title>{fmt(V[i, j])}</title></rect>')
    for j in range(nc):
        x = left + j * cell + cell / 2
        out.append(f'<text x="{x}" y="{top + nr * cell + 12}" text-anchor="middle">{col_labels[j]}</text>')
    if col_name:
        out.append(f'<text x="{left + nc * cell / 2}" y="{h - 18}" text-anchor="middle">{col_name}</text>')
    if row_name:
        out.append(f'<text x="12" y="{top + nr * cell / 2}" transform="rotate(-90 12 {top + nr * cell / 2})" '
                   f'text-anchor="middle">{row_name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_heatmap(path, values, row_labels, col_labels, **kw):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(heatmap_svg(values, row_labels, col_labels, **kw))
    return path
