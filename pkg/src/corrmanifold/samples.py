"""Ordered collections of correlation matrices with optional metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySample, ValidationError
from .geometry import validate_correlation


@dataclass(frozen=True)
class SampleSet:
    """Stack of ``m`` correlation matrices of common size ``n``.

    ``ids`` must be unique when given. ``labels`` are real scalars (regression
    targets); ``groups`` are free-form strings (two-sample groups, mixture
    ground truth, sessions).
    """

    items: np.ndarray
    ids: tuple | None = None
    labels: np.ndarray | None = None
    groups: tuple | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        items = np.asarray(self.items, dtype=float)
        if items.ndim == 2:
            items = items[None]
        if items.ndim != 3 or items.shape[1] != items.shape[2]:
            raise DimensionMismatch(f"expected (m, n, n) items, got {items.shape}")
        if items.shape[0] == 0:
            raise EmptySample("sample set is empty")
        items.setflags(write=False)
        object.__setattr__(self, "items", items)
        m = items.shape[0]
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != m:
                raise ValidationError("ids length does not match sample count")
            if len(set(ids)) != m:
                raise ValidationError("ids are not unique")
            object.__setattr__(self, "ids", ids)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=float).reshape(-1)
            if labels.shape[0] != m:
                raise ValidationError("labels length does not match sample count")
            object.__setattr__(self, "labels", labels)
        if self.groups is not None:
            groups = tuple(self.groups)
            if len(groups) != m:
                raise ValidationError("groups length does not match sample count")
            object.__setattr__(self, "groups", groups)

    @classmethod
    def from_matrices(cls, matrices, ids=None, labels=None, groups=None,
                      metadata=None, validate=True):
        mats = list(matrices)
        if not mats:
            raise EmptySample("sample set is empty")
        if validate:
            checked = []
            for k, c in enumerate(mats):
                try:
                    checked.append(validate_correlation(c))
                except Exception as exc:
                    name = ids[k] if ids is not None else k
                    raise ValidationError(f"entry {name}: {exc}", entry_id=name) from exc
            mats = checked
        shapes = {np.shape(c) for c in mats}
        if len(shapes) != 1:
            raise ValidationError(f"mixed matrix dimensions {sorted(shapes)}")
        return cls(np.stack(mats), ids=ids, labels=labels, groups=groups,
                   metadata=dict(metadata or {}))

    def __len__(self):
        return self.items.shape[0]

    def __getitem__(self, k):
        return self.items[k]

    def __iter__(self):
        return iter(self.items)

    @property
    def m(self) -> int:
        return self.items.shape[0]

    @property
    def n(self) -> int:
        return self.items.shape[1]

    def subset(self, index) -> "SampleSet":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        pick = lambda seq: None if seq is None else tuple(seq[i] for i in index)  # noqa: E731
        return SampleSet(
            self.items[index],
            ids=pick(self.ids),
            labels=None if self.labels is None else self.labels[index],
            groups=pick(self.groups),
            metadata=self.metadata,
        )

    def split_by_group(self):
        """Return ``{group: SampleSet}`` in first-appearance order."""
        if self.groups is None:
            raise ValidationError("sample set has no groups")
        order = list(dict.fromkeys(self.groups))
        g = np.asarray(self.groups, dtype=object)
        return {key: self.subset(g == key) for key in order}


def concat(a: SampleSet, b: SampleSet) -> SampleSet:
    if a.n != b.n:
        raise DimensionMismatch("sample sets have different matrix dimensions")
    ids = a.ids + b.ids if a.ids is not None and b.ids is not None else None
    labels = (np.concatenate([a.labels, b.labels])
              if a.labels is not None and b.labels is not None else None)
    groups = a.groups + b.groups if a.groups is not None and b.groups is not None else None
    return SampleSet(np.concatenate([a.items, b.items]), ids=ids, labels=labels, groups=groups)


def as_stack(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.items
    X = np.asarray(samples, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise DimensionMismatch(f"expected (m, n, n) samples, got {X.shape}")
    if X.shape[0] == 0:
        raise EmptySample("sample set is empty")
    return X
