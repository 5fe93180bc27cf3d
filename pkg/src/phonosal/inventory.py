"""Phoneme inventory: context-dependent symbols with class tags.

The bundled inventory covers the 31 context-dependent phonemes of the
spoken digits 0-9 (repeated base phones get _2/_3 variants in digit
order).  A custom inventory can be loaded from a JSON file of the same
shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class PhonemeInfo:
    symbol: str
    base: str
    digit: int
    kind: str  # vowel | fricative | nasal | stop | approximant | glottal
    cls: str  # vowel | consonant


class Inventory:
    def __init__(self, name: str, symbols: list[PhonemeInfo]):
        self.name = name
        self.symbols = symbols
        self._index = {p.symbol: i for i, p in enumerate(symbols)}
        if len(self._index) != len(symbols):
            raise ValueError("duplicate symbols in inventory")

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def order(self, symbol: str) -> int:
        """Canonical position, used as the deterministic tie-breaker."""
        return self._index[symbol]

    def info(self, symbol: str) -> PhonemeInfo:
        return self.symbols[self._index[symbol]]

    @property
    def symbol_list(self) -> list[str]:
        return [p.symbol for p in self.symbols]

    def by_kind(self, kind: str) -> list[str]:
        return [p.symbol for p in self.symbols if p.kind == kind]

    def by_class(self, cls: str) -> list[str]:
        return [p.symbol for p in self.symbols if p.cls == cls]

    def digit_symbols(self, digit: int) -> list[str]:
        return [p.symbol for p in self.symbols if p.digit == digit]

    def variants_of(self, base: str) -> list[str]:
        """Symbols sharing a base phone, in canonical (occurrence) order."""
        return [p.symbol for p in self.symbols if p.base == base]


def _from_dict(d) -> Inventory:
    symbols = [
        PhonemeInfo(s["symbol"], s["base"], int(s["digit"]), s["kind"], s["class"])
        for s in d["symbols"]
    ]
    return Inventory(d.get("name", "custom"), symbols)


def load_inventory(path=None) -> Inventory:
    """Load an inventory JSON; the bundled digit inventory by default."""
    if path is None:
        text = resources.files("phonosal.data").joinpath("inventory.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    return _from_dict(json.loads(text))
