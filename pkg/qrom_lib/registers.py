"""
Labeled quantum registers.

A RegisterLayout fixes the order of the tensor factors of the adversary's
state space, which of them hold advice, and which one is read out as the
answer.
"""

from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .errors import CapExceeded, DimensionMismatch


@dataclass(frozen=True)
class Subsystem:
    label: str
    dimension: int


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered subsystems with advice/work roles and an answer register."""

    subsystems: Tuple[Subsystem, ...]
    advice_labels: Tuple[str, ...]
    answer_label: str

    def __post_init__(self) -> None:
        labels = [s.label for s in self.subsystems]
        if len(set(labels)) != len(labels):
            raise DimensionMismatch(f"Duplicate register labels in {labels}")
        if any(s.dimension < 1 for s in self.subsystems):
            raise DimensionMismatch("Register dimensions must be positive")
        unknown = set(self.advice_labels) - set(labels)
        if unknown:
            raise DimensionMismatch(f"Unknown advice labels: {sorted(unknown)}")
        if len(set(self.advice_labels)) != len(self.advice_labels):
            raise DimensionMismatch("Advice labels must be unique")
        if self.answer_label not in labels:
            raise DimensionMismatch(f"Unknown answer label {self.answer_label!r}")

    @classmethod
    def build(cls, subsystems: Iterable[Tuple[str, int]], advice: Sequence[str],
              answer: str) -> "RegisterLayout":
        return cls(
            subsystems=tuple(Subsystem(label, int(dim)) for label, dim in subsystems),
            advice_labels=tuple(advice),
            answer_label=answer,
        )

    @cached_property
    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @cached_property
    def dims(self) -> Tuple[int, ...]:
        return tuple(s.dimension for s in self.subsystems)

    @cached_property
    def _axes(self) -> Dict[str, int]:
        return {label: i for i, label in enumerate(self.labels)}

    @cached_property
    def work_labels(self) -> Tuple[str, ...]:
        return tuple(l for l in self.labels if l not in self.advice_labels)

    @property
    def total_dimension(self) -> int:
        return prod(self.dims)

    @property
    def advice_dimension(self) -> int:
        # advice vectors are laid out in subsystem order, not advice_labels order
        return prod(self.dimension(l) for l in self.labels if l in self.advice_labels)

    @property
    def work_dimension(self) -> int:
        return prod(self.dimension(l) for l in self.work_labels)

    def axis(self, label: str) -> int:
        try:
            return self._axes[label]
        except KeyError:
            raise DimensionMismatch(f"Unknown register label {label!r}") from None

    def dimension(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def check_capacity(self, max_dimension: int) -> None:
        if self.total_dimension > max_dimension:
            raise CapExceeded(
                f"State dimension {self.total_dimension} exceeds cap {max_dimension}"
            )

    def embed_advice(self, advice: np.ndarray) -> np.ndarray:
        """
        Tensor an advice vector with the all-zero work state.

        Args:
            advice: Vector of length ``advice_dimension`` (or a matrix whose
                columns are such vectors).

        Returns:
            Vector(s) of length ``total_dimension``.
        """
        advice = np.asarray(advice, dtype=complex)
        if advice.shape[0] != self.advice_dimension:
            raise DimensionMismatch(
                f"Advice has dimension {advice.shape[0]}, "
                f"layout expects {self.advice_dimension}"
            )
        batch = advice.shape[1:]
        out = np.zeros(self.dims + batch, dtype=complex)
        index = tuple(
            slice(None) if label in self.advice_labels else 0 for label in self.labels
        )
        advice_dims = tuple(
            self.dimension(l) for l in self.labels if l in self.advice_labels
        )
        out[index] = advice.reshape(advice_dims + batch)
        return out.reshape((self.total_dimension,) + batch)

    def answer_marginal(self, state: np.ndarray) -> np.ndarray:
        """Born probabilities of the answer register in the computational basis."""
        probs = np.abs(np.asarray(state).reshape(self.dims)) ** 2
        axis = self.axis(self.answer_label)
        others = tuple(i for i in range(len(self.dims)) if i != axis)
        return probs.sum(axis=others)

    def answer_values(self) -> np.ndarray:
        """Answer-register value of every flat basis index."""
        grid = np.indices(self.dims).reshape(len(self.dims), -1)
        return grid[self.axis(self.answer_label)]
