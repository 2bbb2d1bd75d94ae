"""Frequency tables and cross-tabulations with totals, percentages and an
explicit missing row.

Counting is an exact integer fold over Counters, so partial counts from any
partitioning of the stream merge into the same table. Percentages are
computed over the grand total including missing, rounded half-up to one
decimal; the Total row always prints 100.0 (individual rows may not sum to
exactly 100.0).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from .errors import ConfigurationError
from .schema import CohortRecord, DERIVED_FIELDS, FIELD_BY_NAME, SurveillanceRecord

MISSING_LABEL = "<NA>"
TOTAL_LABEL = "Total"

#: Variables with a fixed, non-lexicographic category order.
CATEGORY_ORDERS: dict[str, tuple[str, ...]] = {
    "faixa_et": ("<20", "20-34", ">=35"),
    "suport_ven": ("invasivo", "não invasivo", "não"),
}


def get_value(record: SurveillanceRecord | CohortRecord, variable: str):
    """Fetch a raw or derived variable from either record shape."""
    if isinstance(record, CohortRecord):
        if variable in DERIVED_FIELDS:
            return getattr(record, variable)
        record = record.record
    if variable in FIELD_BY_NAME:
        return getattr(record, variable)
    raise ConfigurationError(f"unknown variable name: {variable!r}")


def _sort_key(value):
    # ints numerically, everything else lexicographically after them
    if isinstance(value, int):
        return (0, value, "")
    return (1, 0, str(value))


def order_categories(
    values: Iterable, variable: str | None = None, order: Iterable | None = None
) -> list:
    """Non-missing categories in output order: an explicit order if given,
    the variable's declared order if it has one, ascending codes otherwise.
    Observed categories outside a declared order are appended sorted."""
    observed = {v for v in values if v is not None}
    declared = tuple(order) if order is not None else CATEGORY_ORDERS.get(variable or "")
    if declared:
        ordered = [c for c in declared if c in observed]
        ordered += sorted(observed.difference(declared), key=_sort_key)
        return ordered
    return sorted(observed, key=_sort_key)


def _pct(count: int, total: int) -> str:
    if total == 0:
        return "0.0"
    value = Decimal(count) * 100 / Decimal(total)
    return str(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass
class RenderedTable:
    """A rendered frequency or cross table.

    For frequency tables ``col_labels`` is None and each row of ``cells`` has
    a single count plus a percentage in ``percentages``. For cross tables
    cells are count vectors per row and ``col_totals``/``row_totals`` carry
    the margins. The missing category renders as ``<NA>``, placed last before
    the Total row/column.
    """

    title: str
    kind: str  # "frequency" | "cross"
    row_var: str
    col_var: str | None = None
    row_labels: list[str] = field(default_factory=list)
    col_labels: list[str] | None = None
    cells: list[list[int]] = field(default_factory=list)
    percentages: list[str] | None = None
    row_totals: list[int] = field(default_factory=list)
    col_totals: list[int] = field(default_factory=list)
    total: int = 0

    def check_consistency(self) -> None:
        if sum(sum(row) for row in self.cells) != self.total:
            raise AssertionError("cells do not sum to the table total")
        if self.kind == "cross":
            for cells, row_total in zip(self.cells, self.row_totals):
                if sum(cells) != row_total:
                    raise AssertionError("row total mismatch")
            for j, col_total in enumerate(self.col_totals):
                if sum(row[j] for row in self.cells) != col_total:
                    raise AssertionError("column total mismatch")

    # -- renderers ---------------------------------------------------------

    def to_text(self) -> str:
        if self.kind == "frequency":
            label_w = max(
                [len(TOTAL_LABEL)] + [len(label) for label in self.row_labels]
            )
            lines = [self.title, f"{'':<{label_w}}  {'n':>9}  {'%':>6}"]
            for label, cells, pct in zip(
                self.row_labels, self.cells, self.percentages
            ):
                lines.append(f"{label:<{label_w}}  {cells[0]:>9}  {pct:>6}")
            lines.append(f"{TOTAL_LABEL:<{label_w}}  {self.total:>9}  {'100.0':>6}")
            return "\n".join(lines) + "\n"
        headers = [*self.col_labels, TOTAL_LABEL]
        label_w = max([len(TOTAL_LABEL)] + [len(label) for label in self.row_labels])
        col_w = max(9, *(len(h) for h in headers))
        lines = [self.title]
        lines.append(
            f"{'':<{label_w}}" + "".join(f"  {h:>{col_w}}" for h in headers)
        )
        for label, cells, row_total in zip(
            self.row_labels, self.cells, self.row_totals
        ):
            body = "".join(f"  {c:>{col_w}}" for c in [*cells, row_total])
            lines.append(f"{label:<{label_w}}{body}")
        body = "".join(f"  {c:>{col_w}}" for c in [*self.col_totals, self.total])
        lines.append(f"{TOTAL_LABEL:<{label_w}}{body}")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        if self.kind == "frequency":
            rows = [[self.row_var, "n", "pct"]]
            for label, cells, pct in zip(
                self.row_labels, self.cells, self.percentages
            ):
                rows.append([label, str(cells[0]), pct])
            rows.append([TOTAL_LABEL, str(self.total), "100.0"])
            return rows
        rows = [[f"{self.row_var}/{self.col_var}", *self.col_labels, TOTAL_LABEL]]
        for label, cells, row_total in zip(
            self.row_labels, self.cells, self.row_totals
        ):
            rows.append([label, *map(str, cells), str(row_total)])
        rows.append([TOTAL_LABEL, *map(str, self.col_totals), str(self.total)])
        return rows

    def to_json_obj(self) -> dict:
        obj: dict = {
            "title": self.title,
            "kind": self.kind,
            "row_var": self.row_var,
            "total": self.total,
        }
        if self.kind == "frequency":
            obj["rows"] = [
                {"label": label, "n": cells[0], "pct": pct}
                for label, cells, pct in zip(
                    self.row_labels, self.cells, self.percentages
                )
            ]
        else:
            obj["col_var"] = self.col_var
            obj["col_labels"] = list(self.col_labels)
            obj["rows"] = [
                {"label": label, "cells": list(cells), "total": row_total}
                for label, cells, row_total in zip(
                    self.row_labels, self.cells, self.row_totals
                )
            ]
            obj["col_totals"] = list(self.col_totals)
        return obj


def _label(value) -> str:
    return MISSING_LABEL if value is None else str(value)


def frequency_table_from_counts(
    counts: Counter,
    variable: str,
    title: str | None = None,
    order: Iterable | None = None,
) -> RenderedTable:
    """Build a frequency table from a value -> count mapping (None allowed)."""
    categories = order_categories(counts, variable, order)
    total = sum(counts.values())
    missing = counts.get(None, 0)
    table = RenderedTable(
        title=title or f"Frequency: {variable}",
        kind="frequency",
        row_var=variable,
        percentages=[],
    )
    for category in categories:
        n = counts[category]
        table.row_labels.append(_label(category))
        table.cells.append([n])
        table.percentages.append(_pct(n, total))
    if missing:
        table.row_labels.append(MISSING_LABEL)
        table.cells.append([missing])
        table.percentages.append(_pct(missing, total))
    table.total = total
    table.check_consistency()
    return table


def cross_table_from_counts(
    counts: Counter,
    row_var: str,
    col_var: str,
    title: str | None = None,
    row_order: Iterable | None = None,
    col_order: Iterable | None = None,
) -> RenderedTable:
    """Build a cross table from a (row_value, col_value) -> count mapping."""
    row_values = order_categories((k[0] for k in counts), row_var, row_order)
    col_values = order_categories((k[1] for k in counts), col_var, col_order)
    if any(k[0] is None for k in counts):
        row_values.append(None)
    if any(k[1] is None for k in counts):
        col_values.append(None)
    table = RenderedTable(
        title=title or f"Cross: {row_var} x {col_var}",
        kind="cross",
        row_var=row_var,
        col_var=col_var,
        col_labels=[_label(v) for v in col_values],
    )
    col_totals = [0] * len(col_values)
    grand = 0
    for rv in row_values:
        cells = []
        for j, cv in enumerate(col_values):
            n = counts.get((rv, cv), 0)
            cells.append(n)
            col_totals[j] += n
            grand += n
        table.row_labels.append(_label(rv))
        table.cells.append(cells)
        table.row_totals.append(sum(cells))
    table.col_totals = col_totals
    table.total = grand
    table.check_consistency()
    return table


def frequency_table(
    records: Iterable[SurveillanceRecord | CohortRecord],
    variable: str,
    title: str | None = None,
    order: Iterable | None = None,
) -> RenderedTable:
    """Count a variable over a record stream and render its frequency table."""
    counts = Counter(get_value(r, variable) for r in records)
    return frequency_table_from_counts(counts, variable, title, order)


def cross_table(
    records: Iterable[SurveillanceRecord | CohortRecord],
    row_var: str,
    col_var: str,
    title: str | None = None,
) -> RenderedTable:
    """Count two variables jointly over a record stream and render the
    cross-tabulation (counts with margins, no percentages)."""
    counts = Counter(
        (get_value(r, row_var), get_value(r, col_var)) for r in records
    )
    return cross_table_from_counts(counts, row_var, col_var, title)
