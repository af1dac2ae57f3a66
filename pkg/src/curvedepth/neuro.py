"""Pipelines for 4D spatio-temporal fields sampled voxel by voxel.

A field is an (X, Y, Z, T) array of values over a time grid.  The pipeline
thresholds the time-summed volume into a brain mask, treats every flagged
voxel's time course as one curve, replaces curves by their depth values
(suppressing voxels whose time integral falls below the deepest curve's), and
offers reproducibility scoring between repeated scans plus representative-
subject selection across fields living on different grids.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .depths import DepthParams, random_depth
from .errors import EmptySetError, FormatError, ParseError, UndefinedCorrelationError
from .fdata import CurveSet, Grid, SubsampleSpec, substream
from .metrics import MetricDescriptor, intensity
from .symmetry import random_center

_FIELD_MAGIC = b"FD4D"
_MASK_MAGIC = b"FDMK"
_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Field4D:
    """(X, Y, Z, T) values over a time grid, with an optional input-function
    integral used as a per-scan normalizer."""

    dims: tuple[int, int, int, int]
    time_grid: Grid
    values: np.ndarray
    subject_id: str = ""
    input_integral: float | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 4 or any(d < 1 for d in dims):
            raise ValueError("dims must be four positive integers")
        if dims[3] != len(self.time_grid):
            raise ValueError("time grid length must equal T")
        vals = np.asarray(self.values, dtype=np.float64).reshape(dims)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if self.input_integral is not None and not self.input_integral > 0:
            raise ValueError("input_integral must be positive when present")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class Mask:
    """Per-voxel flags over an (X, Y, Z) volume."""

    dims: tuple[int, int, int]
    flags: np.ndarray
    threshold_used: float | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError("dims must be three positive integers")
        flags = np.asarray(self.flags, dtype=bool).reshape(dims).copy()
        flags.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "flags", flags)


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Per-voxel depth values; 0 outside the mask and at suppressed voxels."""

    dims: tuple[int, int, int]
    values: np.ndarray
    deepest_voxel: tuple[int, int, int]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        vals = np.asarray(self.values, dtype=np.float64).reshape(dims).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "deepest_voxel", tuple(int(i) for i in self.deepest_voxel))


@dataclass(frozen=True, eq=False)
class VtMap:
    """Externally supplied per-voxel values (e.g. a kinetic-model summary);
    never computed here."""

    coords: np.ndarray  # (K, 3) ints
    values: np.ndarray  # (K,)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 3).copy()
        values = np.asarray(self.values, dtype=np.float64).reshape(-1).copy()
        if coords.shape[0] != values.shape[0]:
            raise ValueError("coords and values disagree in length")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        coords.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "values", values)


def _read_exact(fh, count: int, what: str) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated payload: expected {count} bytes for {what}, got {len(buf)}")
    return buf


def write_field4d(f: Field4D, path) -> None:
    """Binary layout: magic, u16 version, u32 dims, f64 time grid, f32 values
    in x-fastest order, optional 0x01 + f64 input-integral trailer."""
    x, y, z, t = f.dims
    with open(path, "wb") as fh:
        fh.write(_FIELD_MAGIC)
        fh.write(struct.pack("<H", _FORMAT_VERSION))
        fh.write(struct.pack("<4I", x, y, z, t))
        fh.write(f.time_grid.points.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(f.values.transpose(3, 2, 1, 0), dtype="<f4").tobytes())
        if f.input_integral is not None:
            fh.write(b"\x01")
            fh.write(struct.pack("<d", f.input_integral))


def read_field4d(path, subject_id: str = "") -> Field4D:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FIELD_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {_FIELD_MAGIC!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != _FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}")
        x, y, z, t = struct.unpack("<4I", _read_exact(fh, 16, "dims"))
        if min(x, y, z, t) < 1:
            raise FormatError(f"bad dims ({x}, {y}, {z}, {t})")
        n_values = x * y * z * t
        grid = np.frombuffer(_read_exact(fh, 8 * t, "time grid"), dtype="<f8")
        raw = np.frombuffer(_read_exact(fh, 4 * n_values, "values"), dtype="<f4")
        values = raw.astype(np.float64).reshape(t, z, y, x).transpose(3, 2, 1, 0)
        trailer = fh.read(1)
        input_integral = None
        if trailer == b"\x01":
            (input_integral,) = struct.unpack("<d", _read_exact(fh, 8, "input integral"))
        elif trailer not in (b"",):
            raise FormatError(f"unknown trailer byte {trailer!r}")
        if fh.read(1) != b"":
            raise FormatError("trailing bytes after payload")
    return Field4D(
        dims=(x, y, z, t), time_grid=Grid(grid), values=values,
        subject_id=subject_id, input_integral=input_integral,
    )


def write_mask(mask: Mask, path) -> None:
    x, y, z = mask.dims
    with open(path, "wb") as fh:
        fh.write(_MASK_MAGIC)
        fh.write(struct.pack("<3I", x, y, z))
        fh.write(np.ascontiguousarray(mask.flags.transpose(2, 1, 0), dtype=np.uint8).tobytes())


def read_mask(path) -> Mask:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MASK_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {_MASK_MAGIC!r}")
        x, y, z = struct.unpack("<3I", _read_exact(fh, 12, "dims"))
        if min(x, y, z) < 1:
            raise FormatError(f"bad dims ({x}, {y}, {z})")
        raw = np.frombuffer(_read_exact(fh, x * y * z, "flags"), dtype=np.uint8)
        if np.any(raw > 1):
            raise FormatError("mask bytes must be 0 or 1")
        if fh.read(1) != b"":
            raise FormatError("trailing bytes after payload")
    flags = raw.reshape(z, y, x).transpose(2, 1, 0).astype(bool)
    return Mask(dims=(x, y, z), flags=flags)


def mask_threshold(f: Field4D, threshold: float) -> Mask:
    """Flag voxels whose plain sum over frames exceeds the threshold."""
    sums = f.values.sum(axis=3)
    return Mask(dims=f.dims[:3], flags=sums > threshold, threshold_used=float(threshold))


def _flagged_coords(mask: Mask) -> np.ndarray:
    """Flagged voxel coordinates in x-fastest order, as (K, 3) columns x,y,z."""
    zyx = np.argwhere(mask.flags.transpose(2, 1, 0))
    return zyx[:, ::-1]


def extract_voxel_curves(f: Field4D, mask: Mask) -> tuple[CurveSet, np.ndarray]:
    """One curve per flagged voxel over the field's time grid, rows ordered
    x-fastest; also returns the row -> (x, y, z) map."""
    if mask.dims != f.dims[:3]:
        raise ValueError(f"mask dims {mask.dims} do not match field dims {f.dims[:3]}")
    coords = _flagged_coords(mask)
    if coords.shape[0] == 0:
        raise EmptySetError("mask flags no voxels")
    curves = f.values[coords[:, 0], coords[:, 1], coords[:, 2], :]
    return CurveSet(f.time_grid, curves), coords


def depth_image(
    f: Field4D,
    mask: Mask,
    metric: MetricDescriptor,
    spec: SubsampleSpec,
    *,
    full_candidates: bool = False,
) -> DepthImage:
    """Depth value per in-mask voxel curve, after suppressing voxels whose
    time integral is strictly below the deepest curve's."""
    curve_set, coords = extract_voxel_curves(f, mask)
    if curve_set.n_curves < 2:
        raise ValueError("depth image needs at least two flagged voxels")
    sol = random_center(curve_set, metric, spec, full_candidates=full_candidates)
    result = random_depth(curve_set, metric, DepthParams(center=sol))
    vals = result.values.copy()
    widths = f.time_grid.cell_widths()
    integrals = curve_set.curves @ widths
    vals[integrals < integrals[result.deepest_index]] = 0.0
    out = np.zeros(f.dims[:3])
    out[coords[:, 0], coords[:, 1], coords[:, 2]] = vals
    return DepthImage(
        dims=f.dims[:3], values=out,
        deepest_voxel=tuple(coords[result.deepest_index]),
    )


def _top_positive(values: np.ndarray, p: float) -> np.ndarray:
    """Flat indices of the top p% positive entries (ties broken by index)."""
    if not 0.0 < p < 100.0:
        raise ValueError("p must lie strictly between 0 and 100")
    flat = values.reshape(-1)
    positive = np.flatnonzero(flat > 0)
    if positive.size == 0:
        raise EmptySetError("no positive values to select from")
    k = max(1, int(np.ceil(positive.size * p / 100.0)))
    order = np.lexsort((positive, -flat[positive]))
    return positive[order[:k]]


def _correlation(a: np.ndarray, b: np.ndarray, method: str) -> float:
    if a.size < 2:
        raise UndefinedCorrelationError("need at least two voxels to correlate")
    if method == "spearman":
        a, b = rankdata(a), rankdata(b)
    elif method != "pearson":
        raise ValueError(f"unknown correlation method {method!r}")
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("zero variance in one of the inputs")
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def topp_correlation(img: DepthImage, vt: VtMap, p: float, method: str = "pearson") -> float:
    """Absolute correlation between depth values and the external map over the
    voxels with the p% highest positive external values."""
    x, y, z = img.dims
    c = vt.coords
    if c.size and (c.min() < 0 or np.any(c >= np.array([x, y, z]))):
        raise ValueError("external map coordinates outside the image")
    dense = np.full(img.dims, -np.inf)
    dense[c[:, 0], c[:, 1], c[:, 2]] = vt.values
    chosen = _top_positive(np.where(np.isfinite(dense), dense, 0.0), p)
    xs, ys, zs = np.unravel_index(chosen, img.dims)
    return abs(_correlation(img.values[xs, ys, zs], dense[xs, ys, zs], method))


@dataclass(frozen=True)
class TestRetestReport:
    """Per (subject, p): symmetrized same-subject correlation c, mean
    cross-subject correlation m, and the relative excess f = (c - m)/c.
    f is None where c is 0."""

    rows: tuple

    COLUMNS = ("subject", "scan", "p", "c_same", "m_other", "f")

    def to_records(self) -> list[dict]:
        return [dict(r) for r in self.rows]


def _sym_corr(img_a: DepthImage, img_b: DepthImage, p: float, method: str) -> float:
    """Mean of the two directed top-p correlations between two images."""
    out = []
    for anchor, other in ((img_a, img_b), (img_b, img_a)):
        chosen = _top_positive(anchor.values, p)
        xs, ys, zs = np.unravel_index(chosen, anchor.dims)
        out.append(_correlation(anchor.values[xs, ys, zs], other.values[xs, ys, zs], method))
    return float(np.mean(out))


def test_retest(images, p_grid, method: str = "pearson") -> TestRetestReport:
    """Reproducibility scoring over repeated scans.

    images: iterable of (subject_id, scan_id, DepthImage); every subject needs
    exactly two scans and there must be at least two subjects.  For each
    subject, c is the symmetrized correlation between its two scans and m the
    mean of the symmetrized correlations between its first scan and every scan
    of the other subjects.
    """
    by_subject: dict[str, list[tuple[str, DepthImage]]] = {}
    order: list[str] = []
    for subject, scan, img in images:
        by_subject.setdefault(str(subject), []).append((str(scan), img))
        if str(subject) not in order:
            order.append(str(subject))
    if len(order) < 2:
        raise ValueError("need at least two subjects")
    for subject in order:
        if len(by_subject[subject]) != 2:
            raise ValueError(f"subject {subject!r} must have exactly two scans")
    rows = []
    for subject in order:
        (scan1, img1), (_, img2) = by_subject[subject]
        others = [img for s in order if s != subject for (_, img) in by_subject[s]]
        for p in p_grid:
            c_same = _sym_corr(img1, img2, p, method)
            m_other = float(np.mean([_sym_corr(img1, o, p, method) for o in others]))
            f = (c_same - m_other) / c_same if c_same != 0.0 else None
            rows.append({
                "subject": subject, "scan": scan1, "p": float(p),
                "c_same": c_same, "m_other": m_other, "f": f,
            })
    return TestRetestReport(rows=tuple(rows))


@dataclass(frozen=True, eq=False)
class RepresentativeResult:
    """Intensity per field, ascending order, the median pick, and depth values
    anchored at the median."""

    i_values: np.ndarray
    order: np.ndarray
    selected_index: int
    depth_values: np.ndarray

    def __post_init__(self):
        for name in ("i_values", "order", "depth_values"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def select_by_intensity(i_values) -> RepresentativeResult:
    """Order fields by intensity and pick the median one as representative.

    For an even count the lower of the two middle elements is used.  Depths
    are 1/(1 + |i - i_med| / |i_far - i_med|); when every intensity coincides
    with the median the fields all get depth 1.
    """
    i_vals = np.asarray(i_values, dtype=np.float64).reshape(-1)
    if i_vals.size == 0:
        raise ValueError("need at least one field")
    order = np.argsort(i_vals, kind="stable")
    selected = int(order[(i_vals.size - 1) // 2])
    gaps = np.abs(i_vals - i_vals[selected])
    denom = gaps.max()
    if denom == 0.0:
        depths_ = np.ones_like(i_vals)
    else:
        depths_ = 1.0 / (1.0 + gaps / denom)
    return RepresentativeResult(
        i_values=i_vals, order=order.astype(np.int64),
        selected_index=selected, depth_values=depths_,
    )


def representative_subject(fields, masks) -> RepresentativeResult:
    """Representative of a set of fields on possibly different grids.

    Each field is masked, normalized by its input-function integral, and
    summarized by its intensity; the field at the median intensity is the
    representative.  All four dimensions enter the intensity on equal footing.
    """
    fields = list(fields)
    masks = list(masks)
    if len(fields) != len(masks):
        raise ValueError("fields and masks disagree in length")
    i_vals = []
    for f, mask in zip(fields, masks):
        if f.input_integral is None:
            raise ValueError(f"field {f.subject_id!r} is missing input_integral")
        if mask.dims != f.dims[:3]:
            raise ValueError("mask dims do not match field dims")
        vals = np.where(mask.flags[..., None], f.values, 0.0) / f.input_integral
        masked = Field4D(dims=f.dims, time_grid=f.time_grid, values=vals,
                         subject_id=f.subject_id)
        i_vals.append(intensity(masked).i_value)
    return select_by_intensity(np.array(i_vals))


def _parse_voxel_rows(path) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")
    if [c.strip() for c in lines[0].split(",")] != ["x", "y", "z", "value"]:
        raise ParseError(f"{path}: expected header 'x,y,z,value'")
    coords, values = [], []
    for rno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise ParseError(f"row {rno} has {len(cells)} cells, expected 4")
        try:
            coords.append([int(c) for c in cells[:3]])
            values.append(float(cells[3]))
        except ValueError:
            raise ParseError(f"row {rno}: malformed voxel row {line!r}") from None
    return np.array(coords, dtype=np.int64).reshape(-1, 3), np.array(values)


def read_vtmap_csv(path) -> VtMap:
    coords, values = _parse_voxel_rows(path)
    return VtMap(coords=coords, values=values)


def write_vtmap_csv(vt: VtMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,z,value\n")
        for (x, y, z), v in zip(vt.coords, vt.values):
            fh.write(f"{x},{y},{z},{repr(float(v))}\n")


def write_depth_image_csv(img: DepthImage, path) -> None:
    """Nonzero voxels as x,y,z,value rows; dims and the deepest voxel go to a
    JSON sidecar with the same stem."""
    path = Path(path)
    coords = np.argwhere(img.values != 0.0)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,z,value\n")
        for x, y, z in coords:
            fh.write(f"{x},{y},{z},{repr(float(img.values[x, y, z]))}\n")
    sidecar = {"dims": list(img.dims), "deepest_voxel": list(img.deepest_voxel),
               "encoding": "nonzero"}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")


def read_depth_image_csv(path) -> DepthImage:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    dims = tuple(int(d) for d in sidecar["dims"])
    coords, values = _parse_voxel_rows(path)
    dense = np.zeros(dims)
    if coords.size:
        if coords.min() < 0 or np.any(coords >= np.array(dims)):
            raise ParseError(f"{path}: voxel coordinates outside dims {dims}")
        dense[coords[:, 0], coords[:, 1], coords[:, 2]] = values
    return DepthImage(dims=dims, values=dense,
                      deepest_voxel=tuple(sidecar["deepest_voxel"]))


def synth_field4d(shape, scenario: str, seed: int, subject: int = 0, scan: int = 0) -> Field4D:
    """Deterministic 4D phantom.

    phantom_brain: an ellipsoid of decaying time curves whose frame sums land
    in [25000, 35000] over a background with frame sums below 500, so a 20000
    threshold separates the two exactly.  planted_retest: the ellipsoid curves
    follow a subject-specific pattern with small scan-specific noise, so scans
    of one subject stay more alike than scans of different subjects.
    Values are rounded to float32 so file round-trips are exact.
    """
    if scenario not in ("phantom_brain", "planted_retest"):
        raise ValueError(f"unknown scenario {scenario!r}")
    x, y, z, t = (int(d) for d in shape)
    durations = np.linspace(0.5, 2.0, t)
    ends = np.cumsum(durations)
    time_grid = Grid(ends - durations / 2.0)
    centers = np.array([(x - 1) / 2.0, (y - 1) / 2.0, (z - 1) / 2.0])
    semis = np.maximum(np.array([x, y, z]) * 0.38, 0.6)
    gx, gy, gz = np.meshgrid(np.arange(x), np.arange(y), np.arange(z), indexing="ij")
    inside = (((gx - centers[0]) / semis[0]) ** 2
              + ((gy - centers[1]) / semis[1]) ** 2
              + ((gz - centers[2]) / semis[2]) ** 2) <= 1.0
    n_in = int(inside.sum())
    if n_in == 0:
        raise ValueError("shape too small for an interior region")

    if scenario == "phantom_brain":
        rng = substream(seed, subject, scan)
        tau = rng.uniform(1.0, 4.0, size=n_in)
        target = rng.uniform(25000.0, 35000.0, size=n_in)
    else:
        pattern = substream(seed, subject)
        tau = pattern.uniform(1.0, 4.0, size=n_in)
        target = pattern.uniform(25000.0, 35000.0, size=n_in)
        wobble = substream(seed, subject, scan, 1)
        tau = tau * (1.0 + 0.02 * wobble.standard_normal(n_in))
        target = target * (1.0 + 0.02 * wobble.standard_normal(n_in))
    curves = np.exp(-time_grid.points[None, :] / tau[:, None])
    curves *= (target / curves.sum(axis=1))[:, None]

    bg_rng = substream(seed, subject, scan, 2)
    values = bg_rng.uniform(0.0, 400.0 / t, size=(x, y, z, t))
    values[inside] = curves
    values = values.astype("<f4").astype(np.float64)

    input_rng = substream(seed, subject, 3)
    return Field4D(
        dims=(x, y, z, t), time_grid=time_grid, values=values,
        subject_id=f"s{subject}r{scan}",
        input_integral=float(input_rng.uniform(0.8, 1.2)),
    )
