"""
multiset.py
----------------
Object symbols and finite multisets, the currency of every P system state
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

import re
import sys
from typing import Iterable, Iterator, Mapping

from .errors import CountOverflowError, UnderflowError

# object symbols are plain interned strings: equal symbols share identity
ObjectSymbol = str

SYMBOL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def make_symbol(name: str) -> ObjectSymbol:
    """
    Returns the interned form of the given symbol name.
    Raises ValueError if the name is not a valid symbol token.
    """
    if not isinstance(name, str) or not SYMBOL_RE.match(name):
        raise ValueError(f"Invalid object symbol '{name}'")
    return sys.intern(name)


class Multiset:
    """
    Immutable finite bag of object symbols.

    Absent symbols have count zero; no stored entry ever has a count <= 0.
    Counts are bounded by MAX_COUNT and every arithmetic operation is checked
    against that bound.
    """

    MAX_COUNT = 2**63 - 1

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[str, int] | None = None):
        clean: dict[str, int] = {}
        if counts:
            for sym, n in counts.items():
                if not isinstance(n, int) or isinstance(n, bool):
                    raise TypeError(f"Multiset count for '{sym}' must be an int")
                if n < 0:
                    raise UnderflowError(f"Negative count {n} for symbol '{sym}'")
                if n > Multiset.MAX_COUNT:
                    raise CountOverflowError(f"Count {n} for symbol '{sym}' exceeds {Multiset.MAX_COUNT}")
                if n > 0:
                    clean[make_symbol(sym)] = n
        self._counts = clean
        self._hash = None

    @staticmethod
    def from_symbols(symbols: Iterable[str]) -> "Multiset":
        counts: dict[str, int] = {}
        for s in symbols:
            counts[s] = counts.get(s, 0) + 1
        return Multiset(counts)

    @staticmethod
    def from_mapping(counts: Mapping[str, int]) -> "Multiset":
        return Multiset(counts)

    #
    # queries
    #

    def count(self, symbol: str) -> int:
        return self._counts.get(symbol, 0)

    def size(self) -> int:
        return sum(self._counts.values())

    def symbols(self) -> list[str]:
        return sorted(self._counts)

    def items(self) -> list[tuple[str, int]]:
        """
        Returns the (symbol, count) pairs sorted by symbol name.
        """
        return sorted(self._counts.items())

    def expand(self) -> list[str]:
        """
        Returns every copy of every symbol, sorted by symbol name.
        """
        out: list[str] = []
        for sym, n in self.items():
            out.extend([sym] * n)
        return out

    def is_empty(self) -> bool:
        return not self._counts

    def contains(self, needle: "Multiset") -> bool:
        """
        True iff for every symbol, the count in needle is <= the count in self.
        """
        for sym, n in needle._counts.items():
            if self._counts.get(sym, 0) < n:
                return False
        return True

    #
    # arithmetic
    #

    def add(self, other: "Multiset") -> "Multiset":
        counts = dict(self._counts)
        for sym, n in other._counts.items():
            total = counts.get(sym, 0) + n
            if total > Multiset.MAX_COUNT:
                raise CountOverflowError(f"Count of '{sym}' would exceed {Multiset.MAX_COUNT}")
            counts[sym] = total
        return Multiset._trusted(counts)

    def subtract(self, other: "Multiset") -> "Multiset":
        counts = dict(self._counts)
        for sym, n in other._counts.items():
            have = counts.get(sym, 0)
            if have < n:
                raise UnderflowError(f"Cannot remove {n} '{sym}' from a multiset holding {have}")
            if have == n:
                del counts[sym]
            else:
                counts[sym] = have - n
        return Multiset._trusted(counts)

    def scale(self, factor: int) -> "Multiset":
        if factor < 0:
            raise UnderflowError(f"Cannot scale a multiset by {factor}")
        return Multiset({sym: n * factor for sym, n in self._counts.items()})

    def __add__(self, other: "Multiset") -> "Multiset":
        return self.add(other)

    def __sub__(self, other: "Multiset") -> "Multiset":
        return self.subtract(other)

    def __le__(self, other: "Multiset") -> bool:
        return other.contains(self)

    @staticmethod
    def _trusted(counts: dict[str, int]) -> "Multiset":
        ms = Multiset.__new__(Multiset)
        ms._counts = counts
        ms._hash = None
        return ms

    #
    # value semantics
    #

    def to_dict(self) -> dict[str, int]:
        return dict(self.items())

    def __iter__(self) -> Iterator[str]:
        return iter(self.symbols())

    def __len__(self) -> int:
        return self.size()

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __str__(self) -> str:
        return "{" + ", ".join(f"{sym}:{n}" for sym, n in self.items()) + "}"

    def __repr__(self) -> str:
        return f"Multiset({self})"


EMPTY = Multiset()
