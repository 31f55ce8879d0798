"""Dataset assembly: augmentation, leak-free splits, K-folds, file formats.

Augmentations expand each source circuit by scaling, mirroring and
reversing the direction of travel; every variant keeps its source track's
family id, and splits are made at family level so no augmentation of a test
circuit can leak into training.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import BadK, LengthMismatch, MalformedRow, TooFewFamilies
from .trackio import Track

WINDOW_FILE_HEADER = "# center_index,f,s,features...,targets..."
MANIFEST_HEADER = "# family_id,transform_tag,split,track_path,targets_path"


@dataclass(frozen=True)
class AugmentSpec:
    """Which transforms to apply; the identity is always among them."""

    scales: tuple = (0.8, 0.9, 1.0, 1.1, 1.2)
    flip: bool = True
    reverse: bool = True

    def __post_init__(self) -> None:
        scales = tuple(float(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if not scales or any(s <= 0 for s in scales):
            raise ValueError("scales must be non-empty and positive")
        if 1.0 not in scales:
            raise ValueError("identity scale 1.0 must be included")

    @property
    def variants_per_track(self) -> int:
        return len(self.scales) * (2 if self.flip else 1) * (2 if self.reverse else 1)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.864
    val_frac: float = 0.088
    test_frac: float = 0.048
    seed: int = 0

    def __post_init__(self) -> None:
        total = self.train_frac + self.val_frac + self.test_frac
        if min(self.train_frac, self.val_frac, self.test_frac) < 0 or abs(total - 1.0) > 1e-9:
            raise ValueError("split fractions must be non-negative and sum to 1")


def scale_track(track: Track, factor: float) -> Track:
    return Track(name=track.name, points=track.points * factor,
                 halfwidth_left=track.halfwidth_left * factor,
                 halfwidth_right=track.halfwidth_right * factor,
                 closed=track.closed)


def flip_track(track: Track) -> Track:
    """Mirror about the x axis; handedness reverses, so left and right swap."""
    pts = track.points.copy()
    pts[:, 1] = -pts[:, 1]
    return Track(name=track.name, points=pts,
                 halfwidth_left=track.halfwidth_right.copy(),
                 halfwidth_right=track.halfwidth_left.copy(),
                 closed=track.closed)


def reverse_track(track: Track) -> Track:
    """Reverse the direction of travel; left and right swap."""
    return Track(name=track.name, points=track.points[::-1].copy(),
                 halfwidth_left=track.halfwidth_right[::-1].copy(),
                 halfwidth_right=track.halfwidth_left[::-1].copy(),
                 closed=track.closed)


def augment_track(track: Track, spec: AugmentSpec = AugmentSpec()) -> list[tuple[Track, str]]:
    """Cartesian expansion of scales x flip x reverse, tagged per variant.

    Tags look like ``scale1``, ``scale0.8_flip``, ``scale1.2_flip_rev``;
    each variant is renamed ``<family>__<tag>`` while the family id stays
    the source track's name.
    """
    out = []
    for scale in spec.scales:
        for flipped in ((False, True) if spec.flip else (False,)):
            for reversed_ in ((False, True) if spec.reverse else (False,)):
                variant = scale_track(track, scale) if scale != 1.0 else track
                if flipped:
                    variant = flip_track(variant)
                if reversed_:
                    variant = reverse_track(variant)
                tag = f"scale{scale:g}" + ("_flip" if flipped else "") + ("_rev" if reversed_ else "")
                out.append((variant.renamed(f"{track.name}__{tag}"), tag))
    return out


def split_dataset(families: list[str], spec: SplitSpec = SplitSpec()) -> tuple[list, list, list]:
    """Deterministic family-level train/validation/test split.

    Families are shuffled by ``spec.seed`` and cut at the rounded fraction
    boundaries, so realized sizes match the requested fractions to within
    one family.  All augmentations of a source track inherit its split.
    """
    if len(families) < 3:
        raise TooFewFamilies(f"need at least 3 families, got {len(families)}")
    if len(set(families)) != len(families):
        raise TooFewFamilies("family ids must be unique")
    pool = sorted(families)
    random.Random(spec.seed).shuffle(pool)
    n = len(pool)
    cut1 = int(round(spec.train_frac * n))
    cut2 = int(round((spec.train_frac + spec.val_frac) * n))
    cut1 = min(max(cut1, 0), n)
    cut2 = min(max(cut2, cut1), n)
    return pool[:cut1], pool[cut1:cut2], pool[cut2:]


def kfold_split(items: list, k: int, seed: int = 0) -> list[tuple[list, list]]:
    """K disjoint validation folds covering all items, deterministic in seed."""
    if k < 2:
        raise BadK(f"k must be at least 2, got {k}")
    if len(items) < k:
        raise BadK(f"cannot make {k} folds from {len(items)} items")
    pool = list(items)
    random.Random(seed).shuffle(pool)
    folds = [pool[i::k] for i in range(k)]
    out = []
    for i in range(k):
        train = [item for j, fold in enumerate(folds) if j != i for item in fold]
        out.append((train, folds[i]))
    return out


@dataclass(frozen=True)
class ManifestEntry:
    family_id: str
    transform_tag: str
    split: str
    track_path: str
    targets_path: str


def write_manifest(entries: list[ManifestEntry]) -> str:
    lines = [MANIFEST_HEADER]
    for e in entries:
        lines.append(",".join([e.family_id, e.transform_tag, e.split,
                               e.track_path, e.targets_path]))
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> list[ManifestEntry]:
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(f"manifest line {line_no}: expected 5 fields, got {len(fields)}")
        entries.append(ManifestEntry(*fields))
    return entries


def write_windows_csv(x: np.ndarray, y: np.ndarray, centers: np.ndarray,
                      f: int, s: int, l_ref: float) -> str:
    """One window per row: ``center_index, f, s, features..., targets...``."""
    if x.shape[0] != y.shape[0] or x.shape[0] != centers.shape[0]:
        raise LengthMismatch("features, targets and centers must align")
    lines = [f"# f={f} s={s} l_ref={l_ref!r}", WINDOW_FILE_HEADER]
    for c, feat, targ in zip(centers, x, y):
        row = [str(int(c)), str(f), str(s)]
        row.extend(repr(float(v)) for v in feat)
        row.extend(repr(float(v)) for v in targ)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_windows_csv(text: str):
    """Inverse of :func:`write_windows_csv`.

    Returns ``(x, y, centers, f, s, l_ref)``.
    """
    f = s = None
    l_ref = None
    feats, targs, centers = [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, value = token.partition("=")
                if key == "f":
                    f = int(value)
                elif key == "s":
                    s = int(value)
                elif key == "l_ref":
                    l_ref = float(value)
            continue
        fields = line.split(",")
        if f is None or s is None:
            raise MalformedRow("window file data before its f=/s= header")
        n_feat = 3 * (2 * f + 1)
        n_targ = 2 * s + 1
        if len(fields) != 3 + n_feat + n_targ:
            raise MalformedRow(
                f"window line {line_no}: expected {3 + n_feat + n_targ} fields, got {len(fields)}"
            )
        centers.append(int(fields[0]))
        feats.append([float(v) for v in fields[3:3 + n_feat]])
        targs.append([float(v) for v in fields[3 + n_feat:]])
    if f is None or s is None or l_ref is None:
        raise MalformedRow("window file missing f=/s=/l_ref= header")
    return (np.array(feats), np.array(targs), np.array(centers, dtype=int), f, s, l_ref)
