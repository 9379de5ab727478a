"""PFM / image / preview file handling and dataset lists."""

from dataclasses import dataclass
from pathlib import Path
import re

import numpy as np
from PIL import Image

from .errors import ParameterError
from .image import to_grayscale

PREVIEW_COLORMAP = "viridis"


def write_pfm(path, data):
    """Single-channel little-endian PFM (scale -1.0), rows stored bottom-up.

    Values are stored as float32, so float32 input round-trips bit-exactly.
    """
    data = np.asarray(data)
    if data.ndim != 2:
        raise ParameterError(f"PFM writer expects a 2-D array, got shape {data.shape}")
    h, w = data.shape
    body = np.flipud(data).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(body.tobytes())


def read_pfm(path):
    """Read a PFM (``Pf`` gray or ``PF`` colour); returns float32, top row first."""
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header not in (b"Pf", b"PF"):
            raise ParameterError(f"{path}: not a PFM file (header {header!r})")
        dims = fh.readline()
        while dims.startswith(b"#"):
            dims = fh.readline()
        m = re.match(rb"^\s*(\d+)\s+(\d+)\s*$", dims)
        if not m:
            raise ParameterError(f"{path}: malformed PFM dimensions {dims!r}")
        w, h = int(m.group(1)), int(m.group(2))
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        channels = 3 if header == b"PF" else 1
        raw = fh.read()
    expected = w * h * channels * 4
    if len(raw) < expected:
        raise ParameterError(f"{path}: truncated PFM ({len(raw)} of {expected} bytes)")
    arr = np.frombuffer(raw[:expected], dtype=endian + "f4").reshape(h, w, channels)
    arr = np.flipud(arr).astype(np.float32)
    return arr[:, :, 0].copy() if channels == 1 else arr.copy()


def load_image(path):
    """Gray float64 raster from PNG/JPEG/TIFF (scaled to [0, 1]), PFM or NPY."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        arr = read_pfm(path).astype(np.float64)
    elif suffix == ".npy":
        arr = np.load(path).astype(np.float64)
    else:
        with Image.open(path) as im:
            raw = np.asarray(im)
        if raw.dtype == np.uint8:
            arr = raw / 255.0
        elif raw.dtype == np.uint16:
            arr = raw / 65535.0
        else:
            arr = raw.astype(np.float64)
        if arr.ndim == 3 and arr.shape[2] == 4:
            arr = arr[:, :, :3]
    if arr.ndim == 3:
        arr = to_grayscale(arr)
    return np.asarray(arr, dtype=np.float64)


def save_preview(path, values):
    """8-bit colour-mapped PNG; min/max go to a ``.txt`` sidecar next to it.

    Disparity is mapped linearly onto the perceptual ``viridis`` colormap;
    NaN pixels are black.
    """
    from matplotlib import colormaps

    path = Path(path)
    values = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(values)
    lo = float(values[finite].min()) if finite.any() else 0.0
    hi = float(values[finite].max()) if finite.any() else 0.0
    span = hi - lo if hi > lo else 1.0
    t = np.clip(np.where(finite, (values - lo) / span, 0.0), 0.0, 1.0)
    rgb = (colormaps[PREVIEW_COLORMAP](t)[:, :, :3] * 255.0 + 0.5).astype(np.uint8)
    rgb[~finite] = 0
    Image.fromarray(rgb).save(path)
    sidecar = path.with_suffix(".txt")
    sidecar.write_text(f"colormap = {PREVIEW_COLORMAP}\nmin = {lo!r}\nmax = {hi!r}\n")
    return sidecar


@dataclass
class DatasetEntry:
    identifier: str
    left: Path
    right: Path
    gt: Path = None
    gt_conf: Path = None

    def check(self):
        for p in (self.left, self.right, self.gt, self.gt_conf):
            if p is not None and not Path(p).is_file():
                raise FileNotFoundError(f"entry {self.identifier}: missing file {p}")
        return self


def read_dataset(path):
    """Whitespace-separated ``id left right [gt [gt_conf]]`` lines.

    Relative paths resolve against the list file's folder; ``-`` skips a
    column; ``#`` starts a comment.
    """
    path = Path(path)
    base = path.parent
    entries = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if not 3 <= len(parts) <= 5:
            raise ParameterError(f"{path}:{n}: expected 3-5 columns, got {len(parts)}")
        cols = [None if p == "-" else base / p for p in parts[1:]]
        cols += [None] * (4 - len(cols))
        entries.append(DatasetEntry(parts[0], *cols).check())
    if not entries:
        raise ParameterError(f"{path}: dataset list is empty")
    return entries
