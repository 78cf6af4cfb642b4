"""Regenerate docs/symbols.md from the in-code symbol table."""
import sys
from pathlib import Path

from nvsim.params import symbol_table

TARGET = Path(__file__).resolve().parent.parent / "docs" / "symbols.md"


def render():
    lines = ["# Symbols", "",
             "Mapping between the physics notation and the code. Frequencies are ordinary",
             "frequencies in Hz throughout; factors of 2 pi are applied where energies enter.",
             "Generated by `scripts/write_symbol_table.py`.", "",
             "| symbol | code | unit | note |", "|---|---|---|---|"]
    for symbol, where, unit, note in symbol_table():
        lines.append(f"| `{symbol}` | `{where}` | {unit} | {note} |")
    return "\n".join(lines) + "\n"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    text = render()
    if "--check" in argv:
        current = TARGET.read_text() if TARGET.exists() else ""
        return 0 if current == text else 1
    TARGET.write_text(text)
    print(f"wrote {TARGET}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
