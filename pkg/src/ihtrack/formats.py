"""Delimited-text file formats.

All files are comma-delimited UTF-8 with a header row and LF line endings.
Floats are written with ``repr`` so that reading a file back reproduces
every value exactly.

Detections
    ``frame,x[,y],f1..fN,c1..cN``. The header declares the layout: the
    position columns are ``x`` or ``x,y`` and there are as many ``f*``
    columns as ``c*`` columns. ``c_i = 0`` marks feature ``i`` as missing.
Ground truth
    ``frame,target_id,x[,y]``.
Trajectories
    ``track_id,frame,x[,y]``.
Report
    one row: ``gt_count,misses,false_positives,switches,reinitializations,mota,motp``.
Event log
    ``frame,event,gt_id,hyp_id`` with ``event`` one of miss, fp, switch, reinit.
Graph dump
    nodes ``id,t_start,t_end,size,mean_f1..,mass_c1..,inner_cost`` and
    edges ``src,dst,weight``, in two files.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from typing import Dict, Hashable, List, Sequence, TextIO, Tuple

from .detections import Detection, Tracks
from .evaluation import MotReport
from .graph import TrackletGraph


class FormatError(ValueError):
    """Malformed input file."""


def _num(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _writer(fh: TextIO):
    return csv.writer(fh, lineterminator="\n")


def _open_w(path: str) -> TextIO:
    return open(path, "w", encoding="utf-8", newline="")


def _rows(path: str) -> Tuple[List[str], List[List[str]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if header is None:
        raise FormatError(f"{path}: missing header row")
    return [h.strip() for h in header], rows


def _positions(header: Sequence[str], start: int, path: str) -> int:
    dims = 0
    for name in ("x", "y"):
        if start + dims < len(header) and header[start + dims] == name:
            dims += 1
        else:
            break
    if dims == 0:
        raise FormatError(f"{path}: expected an x column at position {start + 1}")
    return dims


def _float(raw: str, path: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise FormatError(f"{path}:{line}: not a number: {raw!r}") from None


def _int(raw: str, path: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise FormatError(f"{path}:{line}: not an integer: {raw!r}") from None


def detection_header(dims: int, n_features: int) -> List[str]:
    return (
        ["frame"]
        + ["x", "y"][:dims]
        + [f"f{i + 1}" for i in range(n_features)]
        + [f"c{i + 1}" for i in range(n_features)]
    )


def dump_detections(frames: Sequence[Sequence[Detection]], fh: TextIO) -> None:
    dets = [d for frame in frames for d in frame]
    dims = len(dets[0].y) if dets else 1
    n = dets[0].n_features if dets else 0
    w = _writer(fh)
    w.writerow(detection_header(dims, n))
    for d in dets:
        if len(d.y) != dims or d.n_features != n:
            raise FormatError("all detections must share dimensionality and feature count")
        w.writerow([d.t] + [_num(float(v)) for v in d.y + d.features + d.confidences])


def write_detections(path: str, frames: Sequence[Sequence[Detection]]) -> None:
    with _open_w(path) as fh:
        dump_detections(frames, fh)


def read_detections(path: str) -> List[List[Detection]]:
    """Per-frame detection lists indexed by frame number (gaps become empty frames)."""
    header, rows = _rows(path)
    if not header or header[0] != "frame":
        raise FormatError(f"{path}: first column must be 'frame'")
    dims = _positions(header, 1, path)
    rest = header[1 + dims:]
    n = len(rest) // 2
    if len(rest) != 2 * n or rest != detection_header(dims, n)[1 + dims:]:
        raise FormatError(f"{path}: header must be frame,x[,y],f1..fN,c1..cN")
    by_frame: Dict[int, List[Detection]] = defaultdict(list)
    for line, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        t = _int(row[0], path, line)
        vals = [_float(v, path, line) for v in row[1:]]
        try:
            det = Detection(t, tuple(vals[:dims]), tuple(vals[dims:dims + n]), tuple(vals[dims + n:]))
        except ValueError as exc:
            raise FormatError(f"{path}:{line}: {exc}") from None
        by_frame[t].append(det)
    if not by_frame:
        return []
    return [by_frame.get(t, []) for t in range(max(by_frame) + 1)]


def _dims_of(tracks: Tracks) -> int:
    for points in tracks.values():
        for _, y in points:
            return len(y)
    return 1


def write_ground_truth(path: str, truth: Tracks) -> None:
    dims = _dims_of(truth)
    rows = sorted((t, tid, y) for tid, pts in truth.items() for t, y in pts)
    with _open_w(path) as fh:
        w = _writer(fh)
        w.writerow(["frame", "target_id"] + ["x", "y"][:dims])
        for t, tid, y in rows:
            w.writerow([t, tid] + [_num(float(v)) for v in y])


def _read_tracks(path: str, id_col: int, frame_col: int, names: Tuple[str, str]) -> Tracks:
    header, rows = _rows(path)
    if header[:2] != list(names):
        raise FormatError(f"{path}: header must start with {','.join(names)}")
    dims = _positions(header, 2, path)
    if len(header) != 2 + dims:
        raise FormatError(f"{path}: unexpected trailing columns")
    tracks: Tracks = defaultdict(list)
    for line, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        tid = _int(row[id_col], path, line)
        t = _int(row[frame_col], path, line)
        tracks[tid].append((t, tuple(_float(v, path, line) for v in row[2:])))
    for tid, pts in tracks.items():
        pts.sort()
        if any(a[0] == b[0] for a, b in zip(pts, pts[1:])):
            raise FormatError(f"{path}: id {tid} has two rows for one frame")
    return dict(tracks)


def read_ground_truth(path: str) -> Tracks:
    return _read_tracks(path, 1, 0, ("frame", "target_id"))


def dump_trajectories(tracks: Tracks, fh: TextIO) -> None:
    dims = _dims_of(tracks)
    w = _writer(fh)
    w.writerow(["track_id", "frame"] + ["x", "y"][:dims])
    for tid in sorted(tracks):
        for t, y in tracks[tid]:
            w.writerow([tid, t] + [_num(float(v)) for v in y])


def write_trajectories(path: str, tracks: Tracks) -> None:
    with _open_w(path) as fh:
        dump_trajectories(tracks, fh)


def read_trajectories(path: str) -> Tracks:
    return _read_tracks(path, 0, 1, ("track_id", "frame"))


REPORT_FIELDS = ("gt_count", "misses", "false_positives", "switches", "reinitializations", "mota", "motp")


def write_report(path: str, report: MotReport) -> None:
    summary = report.summary()
    with _open_w(path) as fh:
        w = _writer(fh)
        w.writerow(REPORT_FIELDS)
        w.writerow([_num(summary[k]) for k in REPORT_FIELDS])


def write_events(path: str, events: Sequence[Tuple[int, str, Hashable, Hashable]]) -> None:
    with _open_w(path) as fh:
        w = _writer(fh)
        w.writerow(["frame", "event", "gt_id", "hyp_id"])
        for t, kind, g, h in events:
            w.writerow([t, kind, "" if g is None else g, "" if h is None else h])


def dump_graph(g: TrackletGraph) -> Tuple[str, str]:
    """Node and edge tables of ``g`` as CSV text."""
    nodes, edges = io.StringIO(), io.StringIO()
    n = 0
    for tr in g.nodes.values():
        n = len(tr.mean_features)
        break
    w = _writer(nodes)
    w.writerow(
        ["id", "t_start", "t_end", "size"]
        + [f"mean_f{i + 1}" for i in range(n)]
        + [f"mass_c{i + 1}" for i in range(n)]
        + ["inner_cost"]
    )
    for nid in sorted(g.nodes):
        tr = g.nodes[nid]
        w.writerow(
            [nid, tr.t_start, tr.t_end, len(tr)]
            + [_num(float(v)) for v in tr.mean_features + tr.conf_mass]
            + [_num(tr.inner_cost)]
        )
    w = _writer(edges)
    w.writerow(["src", "dst", "weight"])
    for u, v, weight in sorted(g.edges()):
        w.writerow([u, v, _num(float(weight))])
    return nodes.getvalue(), edges.getvalue()


def write_graph(prefix: str, g: TrackletGraph) -> Tuple[str, str]:
    """Write ``<prefix>.nodes.csv`` and ``<prefix>.edges.csv``; returns both paths."""
    node_text, edge_text = dump_graph(g)
    paths = (f"{prefix}.nodes.csv", f"{prefix}.edges.csv")
    for path, text in zip(paths, (node_text, edge_text)):
        with _open_w(path) as fh:
            fh.write(text)
    return paths


def write_table(path: str, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with _open_w(path) as fh:
        w = _writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])
