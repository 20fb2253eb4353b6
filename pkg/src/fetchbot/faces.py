"""Identity matching on face-embedding vectors.

Embeddings are unit-norm 128-vectors supplied by scenario files (the
neural pipeline that would produce them is out of scope). Matching is
nearest neighbor under Euclidean distance with an accept threshold tuned
for a low false-positive rate.
"""

from __future__ import annotations

import numpy as np
import yaml

EMBEDDING_DIM = 128
DEFAULT_THRESHOLD = 0.6
UNIT_NORM_TOL = 1e-6


class GalleryError(Exception):
    pass


class FaceGallery:
    """Known identities, each with one or more stored embeddings."""

    def __init__(self, entries: dict, threshold: float = DEFAULT_THRESHOLD):
        if threshold <= 0:
            raise GalleryError("threshold must be positive")
        self.threshold = float(threshold)
        self.entries: dict[str, np.ndarray] = {}
        for name, vectors in entries.items():
            arr = np.asarray(vectors, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(1, -1)
            if arr.shape[1] != EMBEDDING_DIM:
                raise GalleryError(f"{name}: embeddings must have {EMBEDDING_DIM} dimensions")
            norms = np.linalg.norm(arr, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                raise GalleryError(f"{name}: embeddings must be unit-norm within {UNIT_NORM_TOL}")
            self.entries[str(name)] = arr

    @staticmethod
    def from_file(path, threshold: float = DEFAULT_THRESHOLD) -> "FaceGallery":
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise GalleryError(f"{path}: expected a mapping of identity -> embedding(s)")
        return FaceGallery(data, threshold)

    def identities(self) -> list[str]:
        return sorted(self.entries)


def _check_probe(probe) -> np.ndarray:
    probe = np.asarray(probe, dtype=float)
    if probe.shape != (EMBEDDING_DIM,):
        raise ValueError(f"probe must be a {EMBEDDING_DIM}-vector")
    if abs(float(np.linalg.norm(probe)) - 1.0) > 1e-3:
        raise ValueError("probe must be unit-norm")
    return probe


def distances(gallery: FaceGallery, probe) -> dict[str, float]:
    """Per-identity minimum Euclidean distance to the probe."""
    probe = _check_probe(probe)
    return {
        name: float(np.min(np.linalg.norm(vectors - probe, axis=1)))
        for name, vectors in gallery.entries.items()
    }


def match_face(gallery: FaceGallery, probe) -> str | None:
    """Best identity when its distance is within the threshold, else None.

    Exact distance ties resolve to the lexicographically smaller name;
    an empty gallery never matches.
    """
    if not gallery.entries:
        return None
    per_identity = distances(gallery, probe)
    best_name = None
    best_d = np.inf
    for name in sorted(per_identity):
        d = per_identity[name]
        if d < best_d:
            best_d = d
            best_name = name
    return best_name if best_d <= gallery.threshold else None


def calibrate_threshold(pos_distances, neg_distances, target_fpr: float) -> float:
    """Largest observed distance usable as a threshold while keeping the
    empirical false-positive rate at or below target_fpr.

    When even the smallest observed distance admits too many negatives,
    returns half of it (accepting nothing that was observed).
    """
    pos = sorted(float(d) for d in pos_distances)
    neg = sorted(float(d) for d in neg_distances)
    if not pos or not neg:
        raise ValueError("need at least one positive and one negative distance")
    candidates = sorted(set(pos) | set(neg))
    best = None
    for t in candidates:
        fpr = sum(1 for d in neg if d <= t) / len(neg)
        if fpr <= target_fpr:
            best = t
    return best if best is not None else candidates[0] / 2.0


def noisy_probe(gallery: FaceGallery, identity: str, rng: np.random.Generator,
                sigma: float) -> np.ndarray:
    """Stored embedding perturbed by Gaussian noise, renormalized to unit
    length; stands in for running the embedding network on a live frame."""
    if identity not in gallery.entries:
        raise KeyError(f"unknown identity: {identity}")
    base = gallery.entries[identity][0]
    noisy = base + rng.normal(0.0, sigma, EMBEDDING_DIM) if sigma > 0 else base.copy()
    return noisy / float(np.linalg.norm(noisy))
