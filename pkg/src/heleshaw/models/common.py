"""Base models for the solver's value objects and the user-facing configuration."""

from __future__ import annotations

from functools import cached_property
from typing import Any, FrozenSet

import numpy as np
from pydantic import BaseModel, Extra


def _same(left: Any, right: Any) -> bool:
    if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
        return bool(np.array_equal(left, right))
    return bool(left == right)


class HeleShawBaseModel(BaseModel):
    """
    A model whose fields may hold numpy arrays.

    Derived quantities are declared as :func:`functools.cached_property` and
    land in the instance ``__dict__`` next to the fields. They never leave the
    instance: exports, copies and comparisons only see declared fields, so a
    ``copy(update=...)`` recomputes them instead of carrying stale values.
    """

    @classmethod
    def cached_names(cls) -> FrozenSet[str]:
        return frozenset(
            name
            for klass in cls.__mro__
            for name, attribute in vars(klass).items()
            if isinstance(attribute, cached_property)
        )

    def _iter(self, *args, **kwargs):
        cached = self.cached_names()
        for name, value in super()._iter(*args, **kwargs):
            if name not in cached:
                yield name, value

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        mine, theirs = dict(self._iter()), dict(other._iter())
        if mine.keys() != theirs.keys():
            return False
        return all(_same(value, theirs[name]) for name, value in mine.items())

    class Config:
        validate_assignment = True
        arbitrary_types_allowed = True
        keep_untouched = (cached_property,)


class ConfigModel(HeleShawBaseModel):
    """Base for user-facing configuration: unknown keys are rejected."""

    class Config:
        extra = Extra.forbid
