"""Mortality tables and survival probabilities.

Mortality is deterministic and constant over calendar time, so a table is
just a vector of one-year death probabilities ``q[a]`` for integer ages
``min_age <= a < terminal_age``. Death is certain before ``terminal_age``
(``q[terminal_age - 1] == 1``), which truncates every annuity sum.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, TextIO

import numpy as np

DEFAULT_TERMINAL_AGE = 121

# Parameters of the bundled synthetic table: force of mortality
# mu(a) = GOMPERTZ_MU65 * exp(GOMPERTZ_GROWTH * (a - 65)).
GOMPERTZ_MU65 = 0.008
GOMPERTZ_GROWTH = 0.13
BUNDLED_TABLE = "synthetic_gompertz.csv"


@dataclass(frozen=True)
class LifeTable:
    """One-year death probabilities for a contiguous range of ages.

    Attributes:
        min_age: Youngest age covered by the table.
        q: Death probabilities for ages ``min_age .. terminal_age - 1``.
            The last entry is always 1.
    """

    min_age: int
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("q must be a non-empty 1-d array")
        if np.any(~np.isfinite(q)) or np.any(q < 0.0) or np.any(q > 1.0):
            bad = int(np.flatnonzero(~((q >= 0.0) & (q <= 1.0)))[0])
            raise ValueError(f"death probability at age {self.min_age + bad} is outside [0, 1]")
        if q[-1] != 1.0:
            raise ValueError("death must be certain at the terminal age")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    @property
    def terminal_age(self) -> int:
        """Age omega by which every member has died."""
        return self.min_age + self.q.size

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.min_age, self.terminal_age)

    def qx(self, age: int) -> float:
        self._check_age(age)
        if age >= self.terminal_age:
            return 1.0
        return float(self.q[age - self.min_age])

    def survival_probability(self, age: int, horizon: int) -> float:
        """Probability that a life aged ``age`` survives ``horizon`` more years."""
        self._check_age(age)
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        if horizon == 0 and age < self.terminal_age:
            return 1.0
        if age + horizon >= self.terminal_age:
            return 0.0
        j = age - self.min_age
        return float(np.prod(1.0 - self.q[j:j + horizon]))

    def survival_curve(self, age: int, length: int | None = None) -> np.ndarray:
        """Vector ``p(age, l)`` for ``l = 0 .. length - 1``.

        ``length`` defaults to ``terminal_age - age + 1`` so the curve ends
        with the first certain-death entry. Entries past omega are zero.
        """
        self._check_age(age)
        if length is None:
            length = max(self.terminal_age - age + 1, 1)
        out = np.zeros(length)
        if age >= self.terminal_age:
            return out
        j = age - self.min_age
        p = np.cumprod(1.0 - self.q[j:])
        n = min(length - 1, p.size)
        out[0] = 1.0
        out[1:n + 1] = p[:n]
        return out

    def with_certain_survival_below(self, age: int) -> "LifeTable":
        """Copy of the table with ``q = 0`` for every age below ``age``.

        Used for the convention that all members reach retirement.
        """
        q = np.array(self.q)
        k = min(max(age - self.min_age, 0), q.size - 1)
        q[:k] = 0.0
        return LifeTable(self.min_age, q)

    def truncated(self, min_age: int) -> "LifeTable":
        """Drop ages below ``min_age``."""
        self._check_age(min_age)
        return LifeTable(min_age, self.q[min_age - self.min_age:])

    def life_expectancy(self, age: int) -> float:
        """Curtate expectation of life plus one half."""
        return float(self.survival_curve(age)[1:].sum() + 0.5)

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["age", "qx"])
            for a, q in zip(self.ages, self.q):
                w.writerow([int(a), repr(float(q))])

    def _check_age(self, age: int) -> None:
        if age < self.min_age:
            raise ValueError(f"age {age} is below the table's minimum age {self.min_age}")


def survival_probability(table: LifeTable, age: int, horizon: int) -> float:
    """Module-level alias for :meth:`LifeTable.survival_probability`."""
    return table.survival_probability(age, horizon)


def _parse_rows(rows: Iterable[list[str]]) -> list[tuple[int, float]]:
    out = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise ValueError(f"line {lineno}: expected 'age,qx'")
        try:
            age = int(row[0].strip())
            q = float(row[1].strip())
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse {row!r}") from exc
        out.append((age, q))
    return out


def load_life_table(
    source: str | os.PathLike | TextIO | Iterable[tuple[int, float]],
    terminal_age: int | None = None,
) -> LifeTable:
    """Load a life table from CSV text or ``(age, qx)`` rows.

    Args:
        source: A path to a CSV file with header ``age,qx``, an open text
            stream with the same layout, or an iterable of ``(age, qx)``
            pairs.
        terminal_age: Age omega at which death is certain. Defaults to one
            more than the last age in the table. Rows at or above it are
            dropped; ages between the last row and omega get ``q = 1``.

    Returns:
        The table, with ``q[omega - 1]`` forced to 1.

    Raises:
        ValueError: If the ages are not contiguous or a probability lies
            outside [0, 1].
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_life_table(fh, terminal_age)
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        reader = csv.reader(source)
        header = [c.strip().lower() for c in next(reader, [])]
        if header[:2] != ["age", "qx"]:
            raise ValueError(f"expected header 'age,qx', got {','.join(header)!r}")
        rows = _parse_rows(reader)
    else:
        rows = [(int(a), float(q)) for a, q in source]

    if not rows:
        raise ValueError("life table has no rows")
    ages = [a for a, _ in rows]
    for prev, cur in zip(ages, ages[1:]):
        if cur != prev + 1:
            gap = prev + 1 if cur > prev else cur
            raise ValueError(f"ages are not contiguous: age {gap} is missing or out of order")
    for a, q in rows:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"death probability {q} at age {a} is outside [0, 1]")

    min_age = ages[0]
    omega = ages[-1] + 1 if terminal_age is None else int(terminal_age)
    if omega <= min_age:
        raise ValueError("terminal age must exceed the minimum age")
    q = np.ones(omega - min_age)
    n = min(len(rows), q.size)
    q[:n] = [r[1] for r in rows[:n]]
    q[-1] = 1.0
    return LifeTable(min_age, q)


def make_exponential_table(force_of_mortality: float, min_age: int = 0,
                           terminal_age: int = DEFAULT_TERMINAL_AGE) -> LifeTable:
    """Table with constant one-year survival ``exp(-lambda)`` below omega - 1."""
    if not force_of_mortality > 0.0:
        raise ValueError("force of mortality must be positive")
    if terminal_age <= min_age:
        raise ValueError("terminal age must exceed the minimum age")
    q = np.full(terminal_age - min_age, -np.expm1(-force_of_mortality))
    q[-1] = 1.0
    return LifeTable(min_age, q)


def gompertz_table(mu65: float = GOMPERTZ_MU65, growth: float = GOMPERTZ_GROWTH,
                   min_age: int = 18, terminal_age: int = DEFAULT_TERMINAL_AGE) -> LifeTable:
    """Gompertz table with force ``mu65 * exp(growth * (a - 65))``."""
    ages = np.arange(min_age, terminal_age)
    q = -np.expm1(-mu65 * np.exp(growth * (ages - 65.0)))
    q[-1] = 1.0
    return LifeTable(min_age, q)


def bundled_table() -> LifeTable:
    """Synthetic Gompertz table shipped with the package (ages 18..120)."""
    with resources.files("cdcsim.data").joinpath(BUNDLED_TABLE).open("r", encoding="utf-8") as fh:
        return load_life_table(fh)
