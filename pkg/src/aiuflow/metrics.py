"""Device capability profiles, AIU content measurement, and degradation counts.

Table-oriented units (tables, forms, choice lists) are measured in rows
and columns; text-oriented units in characters.  Degradation expresses
how many scrolling commands a device needs to expose the full content,
with ``None`` standing for "that scrolling capability is unavailable".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .model import (
    IMAGE_KINDS,
    LIST_KINDS,
    TABLE_KINDS,
    TEXT_KINDS,
    AiuInstance,
    AiuKind,
    TableContent,
)


class ImageKindUnsupported(ValueError):
    """Image units carry no text/table metrics."""


@dataclass(frozen=True)
class DeviceProfile:
    """The 13 capability values of one device."""

    id: str
    rn: int  # rows displayable
    cn: int  # columns displayable
    cvs: bool  # continuous vertical scroll
    rvs: bool  # row-based vertical scroll
    pvs: bool  # page-based vertical scroll
    cnhs: bool  # continuous horizontal scroll
    cohs: bool  # column-based horizontal scroll
    phs: bool  # page-based horizontal scroll
    we: bool  # WAP enabled
    je: bool  # Java enabled
    aa: bool  # audio available
    cd: int  # color depth, bits
    tsa: bool  # touch screen
    comment: Optional[str] = None

    def __post_init__(self) -> None:
        if self.rn < 1 or self.cn < 1 or self.cd < 1:
            raise ValueError("rn, cn and cd must all be >= 1")


@dataclass(frozen=True)
class AiuMetrics:
    """Size of one AIU: rows/columns for table-oriented, characters for text."""

    rn: int = 0
    cn: int = 0
    chn: int = 0

    def __post_init__(self) -> None:
        if self.rn < 0 or self.cn < 0 or self.chn < 0:
            raise ValueError("metrics must be non-negative")
        if self.chn and (self.rn or self.cn):
            raise ValueError("an AIU is either table-oriented or text-oriented")

    @property
    def is_text(self) -> bool:
        return self.chn > 0 and self.rn == 0 and self.cn == 0


@dataclass(frozen=True)
class DegradationReport:
    """Scroll-command counts needed to expose the content on a device.

    A count of ``None`` means the corresponding scrolling capability is
    unavailable on the device.
    """

    vertical_row_scrolls: Optional[int]
    vertical_page_scrolls: Optional[int]
    horizontal_col_scrolls: Optional[int]
    horizontal_page_scrolls: Optional[int]
    fits_width: bool
    fits_height: bool


@dataclass(frozen=True)
class Thresholds:
    """Acceptability bounds on degradation counts (config-overridable)."""

    max_row_scrolls: int = 50
    max_page_scrolls: int = 10
    max_col_scrolls: int = 10
    max_hpage_scrolls: int = 3
    max_chars_direct: int = 2000

    def __post_init__(self) -> None:
        if min(asdict(self).values()) < 1:
            raise ValueError("all thresholds must be positive")


def default_thresholds() -> Thresholds:
    return Thresholds()


def column_width(col_index: int, table: TableContent) -> int:
    """Character width of one column: the hint, else the widest of label/cells."""
    col = table.columns[col_index]
    if col.width_hint is not None:
        return col.width_hint
    width = len(col.label)
    for row in table.rows:
        width = max(width, len(row[col_index]))
    return max(width, 1)


def table_metrics(table: TableContent) -> AiuMetrics:
    rn = len(table.rows) + 1  # header row
    cn = sum(column_width(i, table) for i in range(len(table.columns)))
    cn += max(len(table.columns) - 1, 0)  # 1-char separators
    return AiuMetrics(rn=rn, cn=cn)


def list_metrics(aiu: AiuInstance) -> AiuMetrics:
    # forms and choice lists measure as one-column tables: one row per
    # item plus a header, column width = widest label
    if aiu.kind is AiuKind.FILL_LIST:
        labels = [f.label for f in aiu.fields]
    else:
        labels = [c.label for c in aiu.choices]
    rn = len(labels) + 1
    cn = max((len(label) for label in labels), default=1)
    return AiuMetrics(rn=rn, cn=max(cn, 1))


def measure_aiu(aiu: AiuInstance) -> AiuMetrics:
    """Measure one AIU. Image kinds are unsupported (text/table metrics only)."""
    if aiu.kind in IMAGE_KINDS:
        raise ImageKindUnsupported(
            f"{aiu.kind.value} ({aiu.id}) has no text/table metrics"
        )
    if aiu.kind in TEXT_KINDS:
        return AiuMetrics(chn=len(aiu.text_body))
    if aiu.kind in TABLE_KINDS:
        assert aiu.table is not None
        return table_metrics(aiu.table)
    assert aiu.kind in LIST_KINDS
    return list_metrics(aiu)


def degradation(m: AiuMetrics, d: DeviceProfile) -> DegradationReport:
    """Scroll counts for showing content of size ``m`` on device ``d``.

    Page counts follow the ceil(rows/page) convention, so content that
    fits on one page reports one page-scroll, and empty content zero.
    """
    return DegradationReport(
        vertical_row_scrolls=m.rn if d.rvs else None,
        vertical_page_scrolls=math.ceil(m.rn / d.rn) if d.pvs else None,
        horizontal_col_scrolls=m.cn if d.cohs else None,
        horizontal_page_scrolls=math.ceil(m.cn / d.cn) if d.phs else None,
        fits_width=m.cn <= d.cn,
        fits_height=m.rn <= d.rn,
    )


def text_rows(chn: int, d: DeviceProfile) -> int:
    """Rows a text body occupies once hard-wrapped to the device width."""
    return math.ceil(chn / d.cn)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

_DEVICE_KEYS = (
    "id", "rn", "cn", "cvs", "rvs", "pvs", "cnhs",
    "cohs", "phs", "we", "je", "aa", "cd", "tsa",
)
_BOOL_KEYS = frozenset(
    {"cvs", "rvs", "pvs", "cnhs", "cohs", "phs", "we", "je", "aa", "tsa"}
)


def parse_device_profile(source: Union[str, bytes]) -> DeviceProfile:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ValueError(f"device profile is not valid JSON: {exc}") from None
    return device_from_doc(doc)


def device_from_doc(doc: Any) -> DeviceProfile:
    if not isinstance(doc, Mapping):
        raise ValueError("device profile must be an object")
    missing = set(_DEVICE_KEYS) - set(doc)
    if missing:
        raise ValueError(f"device profile missing keys {sorted(missing)}")
    unknown = set(doc) - set(_DEVICE_KEYS) - {"comment"}
    if unknown:
        raise ValueError(f"device profile has unknown keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key in _DEVICE_KEYS:
        value = doc[key]
        if key == "id":
            if not isinstance(value, str) or not value:
                raise ValueError("device id must be a non-empty string")
        elif key in _BOOL_KEYS:
            if not isinstance(value, bool):
                raise ValueError(f"device key {key!r} must be a boolean")
        else:
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"device key {key!r} must be a positive integer")
        kwargs[key] = value
    comment = doc.get("comment")
    if comment is not None and not isinstance(comment, str):
        raise ValueError("device comment must be a string")
    return DeviceProfile(comment=comment, **kwargs)


def device_to_doc(d: DeviceProfile) -> dict[str, Any]:
    doc = {key: getattr(d, key) for key in _DEVICE_KEYS}
    if d.comment is not None:
        doc["comment"] = d.comment
    return doc


def load_device_profile(path: Union[str, Path]) -> DeviceProfile:
    return parse_device_profile(Path(path).read_text(encoding="utf-8"))


_THRESHOLD_KEYS = {
    "maxRowScrolls": "max_row_scrolls",
    "maxPageScrolls": "max_page_scrolls",
    "maxColScrolls": "max_col_scrolls",
    "maxHPageScrolls": "max_hpage_scrolls",
    "maxCharsDirect": "max_chars_direct",
}


def thresholds_from_doc(doc: Any) -> Thresholds:
    if not isinstance(doc, Mapping):
        raise ValueError("thresholds config must be an object")
    unknown = set(doc) - set(_THRESHOLD_KEYS)
    if unknown:
        raise ValueError(f"thresholds config has unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, attr in _THRESHOLD_KEYS.items():
        if key in doc:
            value = doc[key]
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"threshold {key!r} must be a positive integer")
            kwargs[attr] = value
    return Thresholds(**kwargs)


def thresholds_to_doc(t: Thresholds) -> dict[str, int]:
    return {key: getattr(t, attr) for key, attr in _THRESHOLD_KEYS.items()}


def load_thresholds(path: Union[str, Path]) -> Thresholds:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"thresholds config is not valid JSON: {exc}") from None
    return thresholds_from_doc(doc)
