"""Build KnotInfo-style CSV exports from the ``database_knotinfo`` package.

The ingest step only consumes integer summary columns. KnotInfo publishes
the polynomial spans and degrees as polynomials, so this adapter reduces
them to integers (Alexander span, Jones span, HOMFLYPT a-spread and
z-degree, Kauffman a-spread) and writes the columns named in the default
mapping. Requires the optional ``database_knotinfo`` package.
"""

from __future__ import annotations

import csv
import io
import re
from typing import Iterable, Iterator

HEADER = [
    "Name", "Crossing Number", "Unknotting Number", "Genus-3D", "Bridge Index",
    "Braid Index", "Signature", "Arc Index", "Alexander Span", "Jones Span",
    "Kauffman a-Spread", "Genus-4D", "Rasmussen s", "Ozsvath-Szabo tau",
    "Clasp Number-4D", "Clasp Number", "Double Slice Genus", "Mosaic Number",
    "HOMFLYPT a-Spread", "HOMFLYPT z-Degree",
]

_PASSTHROUGH = {
    "Crossing Number": "crossing_number",
    "Unknotting Number": "unknotting_number",
    "Genus-3D": "three_genus",
    "Bridge Index": "bridge_index",
    "Braid Index": "braid_index",
    "Signature": "signature",
    "Arc Index": "arc_index",
    "Genus-4D": "smooth_four_genus",
    "Rasmussen s": "rasmussen_invariant",
    "Ozsvath-Szabo tau": "ozsvath_szabo_tau_invariant",
    "Clasp Number-4D": "fd_clasp_number",
    "Clasp Number": "td_clasp_number",
    "Double Slice Genus": "double_slice_genus",
}


def split_top(expr: str) -> list[str]:
    """Split a sum into signed terms, ignoring signs inside parentheses."""
    terms, depth, start = [], 0, 0
    s = expr.replace(" ", "")
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and i > start:
            terms.append(s[start:i])
            start = i
    if s[start:]:
        terms.append(s[start:])
    return [t for t in terms if t.lstrip("+-") not in ("", "0")]


def _power(term: str, var: str) -> int:
    """Exponent of ``var`` in a single expanded monomial (0 if absent)."""
    m = re.search(rf"/{var}(?:\^\(?(-?\d+)\)?)?(?![a-z])", term)
    if m:
        return -int(m.group(1) or 1)
    m = re.search(rf"(?<![a-z]){var}(?:\^\(?(-?\d+)\)?)?(?![a-z])", term)
    if m:
        return int(m.group(1) or 1)
    return 0


def exponents(expr: str, var: str) -> list[int]:
    """Exponents of ``var`` over the terms of an expanded Laurent polynomial."""
    return [_power(t, var) for t in split_top(expr)]


def exponents2(expr: str, inner: str, outer: str) -> list[tuple[int, int]]:
    """``(inner, outer)`` exponent pairs of a polynomial grouped by powers of ``outer``."""
    out = []
    for term in split_top(expr):
        body = term.lstrip("+-")
        if body.startswith("("):
            depth = 0
            for i, ch in enumerate(body):
                depth += ch == "("
                depth -= ch == ")"
                if depth == 0:
                    break
            group, rest = body[1:i], body[i + 1:]
            z = _power(rest, outer)
            if group.strip("+-") == "0":
                continue
            out.extend((_power(t, inner), z) for t in split_top(group))
        else:
            out.append((_power(body, inner), _power(body, outer)))
    return out


def span(values: Iterable[int]) -> int:
    values = list(values)
    return max(values) - min(values)


def alexander_span(expr: str) -> int:
    return span(exponents(expr, "t"))


def jones_span(expr: str) -> int:
    return span(exponents(expr, "t"))


def homfly_a_spread(expr: str) -> int:
    return span(a for a, _ in exponents2(expr, "v", "z"))


def homfly_z_degree(expr: str) -> int:
    return max(z for _, z in exponents2(expr, "v", "z"))


def kauffman_a_spread(expr: str) -> int:
    return span(a for a, _ in exponents2(expr, "a", "z"))


def mosaic_number(cell: str) -> str:
    """First component of KnotInfo's ``[ mosaic , tile ]`` pair, in cell syntax."""
    body = cell.strip()
    if not body:
        return ""
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    depth = 0
    for i, ch in enumerate(body):
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        elif ch == "," and depth == 0:
            body = body[:i]
            break
    first = body.strip().replace(" ", "")
    m = re.fullmatch(r"\[(\d+),(\d+|infty)[\])]", first)
    if m:
        hi = "inf" if m.group(2) == "infty" else m.group(2)
        return f"[{m.group(1)},{hi}]"
    if not re.fullmatch(r"\d+", first):
        raise ValueError(f"unreadable mosaic cell {cell!r}")
    return first


def _optional(fn, text: str) -> str:
    return str(fn(text)) if text.strip() else ""


def convert_row(row: dict[str, str]) -> dict[str, str]:
    out = {"Name": row["name"]}
    for header, key in _PASSTHROUGH.items():
        out[header] = row.get(key, "").strip()
    out["Alexander Span"] = _optional(alexander_span, row.get("alexander_polynomial", ""))
    out["Jones Span"] = _optional(jones_span, row.get("jones_polynomial", ""))
    out["Kauffman a-Spread"] = _optional(kauffman_a_spread, row.get("kauffman_polynomial", ""))
    out["HOMFLYPT a-Spread"] = _optional(homfly_a_spread, row.get("homfly_polynomial", ""))
    out["HOMFLYPT z-Degree"] = _optional(homfly_z_degree, row.get("homfly_polynomial", ""))
    out["Mosaic Number"] = mosaic_number(row.get("mosaic_tile_number", ""))
    return out


def package_rows(max_crossings: int = 13, include_unknot: bool = False) -> Iterator[dict[str, str]]:
    """Rows of the installed ``database_knotinfo`` knot table, keyed by internal column name."""
    from database_knotinfo import link_list

    for row in link_list()[1:]:
        try:
            c = int(row["crossing_number"])
        except (KeyError, ValueError):
            continue
        if c > max_crossings or (c == 0 and not include_unknot):
            continue
        yield row


def export_csv(rows: Iterable[dict[str, str]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(convert_row(row))
    return buf.getvalue()


def knotinfo_csv(max_crossings: int = 13, include_unknot: bool = False) -> str:
    return export_csv(package_rows(max_crossings, include_unknot))
