"""Correspondences between finite metric measure spaces.

A correspondence is a relation pairing points of two spaces that covers both
point sets; its distortion (sup over pairs of pairs of the distance mismatch)
is the standard 2 x Gromov-Hausdorff upper bound certificate, and a
correspondence of distortion delta induces maps that are eps-isometries for
every eps > delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import Space, ValidationError, distance_rows


@dataclass
class DistortionReport:
    distortion: float
    anchor_count: int
    pair_count: int
    connectivity_mismatches: int
    """Pairs of pairs where exactly one space sees a finite distance; these
    are excluded from the sup (the other space's metric does not relate the
    points) and reported instead."""


class Correspondence:
    def __init__(self, x: Space, y: Space, pairs):
        self.x = x
        self.y = y
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size == 0:
            raise ValidationError("correspondence needs at least one pair")
        if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= x.n_points \
                or pairs[:, 1].min() < 0 or pairs[:, 1].max() >= y.n_points:
            raise ValidationError("correspondence pair out of range")
        keys = pairs[:, 0] * y.n_points + pairs[:, 1]
        order = np.argsort(keys, kind="stable")
        pairs = pairs[order]
        keep = np.ones(pairs.shape[0], bool)
        keep[1:] = keys[order][1:] != keys[order][:-1]
        self.pairs = pairs[keep]
        self.pairs.setflags(write=False)
        covered_x = np.zeros(x.n_points, bool)
        covered_x[self.pairs[:, 0]] = True
        covered_y = np.zeros(y.n_points, bool)
        covered_y[self.pairs[:, 1]] = True
        if not covered_x.all():
            raise ValidationError("correspondence does not cover the first space")
        if not covered_y.all():
            raise ValidationError("correspondence does not cover the second space")

    def __len__(self):
        return self.pairs.shape[0]

    def transpose(self) -> "Correspondence":
        return Correspondence(self.y, self.x, self.pairs[:, ::-1])

    def selection_map(self) -> np.ndarray:
        """For each x the lowest-id corresponded y (a total map X -> Y)."""
        f = np.full(self.x.n_points, -1, dtype=np.int64)
        # pairs are sorted by (x, y); the first hit per x is the lowest y
        xs, first = np.unique(self.pairs[:, 0], return_index=True)
        f[xs] = self.pairs[first, 1]
        return f

    def _anchor_indices(self, anchors, pair_mask=None):
        idx = np.flatnonzero(pair_mask) if pair_mask is not None \
            else np.arange(self.pairs.shape[0])
        if idx.size == 0:
            return idx
        if anchors is None or idx.size <= anchors:
            return idx
        sel = np.unique(np.linspace(0, idx.size - 1, anchors).astype(np.int64))
        return idx[sel]

    def distortion_report(self, anchors=128, pair_mask=None,
                          anchor_by="pairs") -> DistortionReport:
        """Sup (over anchor pairs x all pairs) of |d_X - d_Y|.

        pair_mask restricts both the anchors and the opposing pairs to a
        subset of the relation (used for checks on volume-exhausted domains).
        anchor_by="y" spreads the anchors over distinct second-space points,
        which keeps the sampled quantity comparable across members of a
        family sharing one limit.
        """
        use = np.flatnonzero(pair_mask) if pair_mask is not None \
            else np.arange(self.pairs.shape[0])
        if use.size == 0:
            return DistortionReport(0.0, 0, 0, 0)
        if anchor_by == "y":
            order = use[np.argsort(self.pairs[use, 1], kind="stable")]
            ys = self.pairs[order, 1]
            first = order[np.concatenate([[True], ys[1:] != ys[:-1]])]
            if anchors is not None and first.size > anchors:
                sel = np.unique(np.linspace(0, first.size - 1,
                                            anchors).astype(np.int64))
                first = first[sel]
            aidx = first
        else:
            aidx = self._anchor_indices(anchors, pair_mask)
        ax = self.pairs[aidx, 0]
        ay = self.pairs[aidx, 1]
        dx = distance_rows(self.x, ax)[:, self.pairs[use, 0]]
        dy = distance_rows(self.y, ay)[:, self.pairs[use, 1]]
        fin_x = np.isfinite(dx)
        fin_y = np.isfinite(dy)
        both = fin_x & fin_y
        mism = int(np.count_nonzero(fin_x != fin_y))
        dist = float(np.abs(dx[both] - dy[both]).max()) if both.any() else 0.0
        return DistortionReport(distortion=dist, anchor_count=int(aidx.size),
                                pair_count=int(use.size),
                                connectivity_mismatches=mism)

    def image_mask(self, x_mask) -> np.ndarray:
        """Points of Y related to some X point inside x_mask."""
        sel = x_mask[self.pairs[:, 0]]
        out = np.zeros(self.y.n_points, bool)
        out[self.pairs[sel, 1]] = True
        return out

    def preimage_mask(self, y_mask) -> np.ndarray:
        sel = y_mask[self.pairs[:, 1]]
        out = np.zeros(self.x.n_points, bool)
        out[self.pairs[sel, 0]] = True
        return out


def identity_correspondence(space: Space) -> Correspondence:
    ids = np.arange(space.n_points, dtype=np.int64)
    return Correspondence(space, space, np.stack([ids, ids], axis=1))


def correspondence_from_map(x: Space, y: Space, mapping) -> Correspondence:
    """Complete a total map X -> Y into a correspondence by covering the
    missed y's with their nearest preimage under the map (profile of ids)."""
    mapping = np.asarray(mapping, dtype=np.int64)
    if mapping.shape != (x.n_points,):
        raise ValidationError("map must assign every point of X")
    pairs = [np.stack([np.arange(x.n_points, dtype=np.int64), mapping], axis=1)]
    covered = np.zeros(y.n_points, bool)
    covered[mapping] = True
    missing = np.flatnonzero(~covered)
    if missing.size:
        # pair each uncovered y with the x whose image is nearest in id space;
        # crude but only used to patch up heuristic certificates
        order = np.argsort(mapping, kind="stable")
        pos = np.searchsorted(mapping[order], missing)
        pos = np.clip(pos, 0, x.n_points - 1)
        pairs.append(np.stack([order[pos], missing], axis=1))
    return Correspondence(x, y, np.vstack(pairs))
