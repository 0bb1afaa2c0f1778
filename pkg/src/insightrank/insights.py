"""Candidate insight generation: point/shape detection and descriptions.

Point insights flag a single outstanding value in a subspace; shape insights
flag a significant rising or falling trend.  Both significance scores are
p-value based and live in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from . import stats
from .errors import DataError, ParseError
from .tables import Cell, Subspace, Table, enumerate_subspaces

__all__ = [
    "InsightType",
    "Insight",
    "ExtractConfig",
    "extract_point_insight",
    "extract_shape_insight",
    "extract_all",
    "render_description",
    "save_insights",
    "load_insights",
]

P_CLAMP = 1e-12


class InsightType(Enum):
    POINT_OUTSTANDING = "point_outstanding"
    SHAPE_INCREASING = "shape_increasing"
    SHAPE_DECREASING = "shape_decreasing"


@dataclass(frozen=True)
class Insight:
    id: str
    table_id: str
    subspace: Subspace
    itype: InsightType
    significance: float
    description: str
    point_index: int | None = None
    # Raw statistic behind the significance score: the candidate value
    # (or change ratio) for point insights, the OLS slope for shape insights.
    statistic: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.significance <= 1.0:
            raise DataError(f"insight {self.id}: significance out of [0,1]")
        if not self.description:
            raise DataError(f"insight {self.id}: empty description")
        is_point = self.itype is InsightType.POINT_OUTSTANDING
        if is_point != (self.point_index is not None):
            raise DataError(f"insight {self.id}: point_index presence mismatch")
        if self.point_index is not None and not (
            0 <= self.point_index < len(self.subspace.cells)
        ):
            raise DataError(f"insight {self.id}: point_index out of range")


@dataclass(frozen=True)
class ExtractConfig:
    threshold: float = 0.5
    min_len: int = 3
    # Financial mode scores the year-over-year change ratio instead of the
    # raw value for point insights.
    use_change_ratio: bool = False


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def point_significance(values: list[float], candidate_index: int) -> float:
    """Two-sided normal extremity of the candidate against the other points.

    Fits Normal(mu, sigma) by moments to the non-candidate values; returns
    1 - P(|Z| >= |z|).  Degenerate zero-variance rest: 1.0 when the candidate
    differs from the shared value, 0.0 otherwise.
    """
    rest = [v for i, v in enumerate(values) if i != candidate_index]
    candidate = values[candidate_index]
    mu = sum(rest) / len(rest)
    sigma = math.sqrt(sum((v - mu) ** 2 for v in rest) / len(rest))
    if sigma == 0.0:
        return 1.0 if candidate != mu else 0.0
    return _clamp01(1.0 - stats.two_sided_normal_extremity(candidate, mu, sigma))


def ols_slope_test(values: list[float]) -> tuple[float, float]:
    """OLS fit y = a*t + b over t = 0..n-1; returns (slope, two-sided p).

    The p-value of the slope != 0 t-test (n-2 dof) is clamped to
    [P_CLAMP, 1], so an exact linear fit yields p = P_CLAMP.
    """
    n = len(values)
    if n < 3:
        raise DataError("slope test needs at least 3 points")
    t_mean = (n - 1) / 2.0
    y_mean = sum(values) / n
    sxx = sum((t - t_mean) ** 2 for t in range(n))
    sxy = sum((t - t_mean) * (y - y_mean) for t, y in zip(range(n), values))
    slope = sxy / sxx
    intercept = y_mean - slope * t_mean
    sse = sum((y - (slope * t + intercept)) ** 2 for t, y in zip(range(n), values))
    if slope == 0.0:
        return 0.0, 1.0
    if sse <= 0.0:
        return slope, P_CLAMP
    se = math.sqrt(sse / (n - 2) / sxx)
    t_stat = slope / se
    p = 2.0 * stats.t_sf(abs(t_stat), n - 2)
    return slope, min(1.0, max(P_CLAMP, p))


def render_description(
    subspace: Subspace,
    itype: InsightType,
    point_index: int | None = None,
    measure: str = "Value",
) -> str:
    """Deterministic template fill from the subspace headers."""
    subject = subspace.fixed_label_text
    if itype is InsightType.POINT_OUTSTANDING:
        if point_index is None:
            raise DataError("point insight needs a point_index")
        label = subspace.cells[point_index].dims[subspace.varying_dim_index]
        return f"{measure} of {subject} in {label} is outstanding."
    word = "increasing" if itype is InsightType.SHAPE_INCREASING else "decreasing"
    return f"{measure} of {subject} is {word} year over year."


def _change_ratios(values) -> list[tuple[int, float]]:
    """(cell index, ratio) pairs; points with a zero previous value dropped."""
    out = []
    for t in range(1, len(values)):
        prev = values[t - 1]
        if prev == 0:
            continue
        out.append((t, (values[t] - prev) / abs(prev)))
    return out


def extract_point_insight(
    subspace: Subspace,
    config: ExtractConfig = ExtractConfig(),
    insight_id: str = "",
    table_id: str = "",
    measure: str = "Value",
) -> Insight | None:
    """Score the maximum-magnitude point of the subspace; None below threshold."""
    if len(subspace.cells) < 3:
        return None
    values = list(subspace.values)
    if config.use_change_ratio:
        series = _change_ratios(values)
        if len(series) < 3:
            return None
        cell_index = [i for i, _ in series]
        points = [r for _, r in series]
    else:
        cell_index = list(range(len(values)))
        points = values
    candidate = max(range(len(points)), key=lambda i: (abs(points[i]), -i))
    if len(points) < 3:
        return None
    rest = [p for i, p in enumerate(points) if i != candidate]
    if len(set(rest)) == 1 and points[candidate] == rest[0]:
        return None
    sig = point_significance(points, candidate)
    if sig < config.threshold:
        return None
    point_index = cell_index[candidate]
    return Insight(
        id=insight_id,
        table_id=table_id,
        subspace=subspace,
        itype=InsightType.POINT_OUTSTANDING,
        significance=sig,
        description=render_description(
            subspace, InsightType.POINT_OUTSTANDING, point_index, measure
        ),
        point_index=point_index,
        statistic=points[candidate],
    )


def extract_shape_insight(
    subspace: Subspace,
    config: ExtractConfig = ExtractConfig(),
    insight_id: str = "",
    table_id: str = "",
    measure: str = "Value",
) -> Insight | None:
    """Trend test over the ordered subspace; None for flat or weak trends."""
    if len(subspace.cells) < 3:
        return None
    slope, p = ols_slope_test(list(subspace.values))
    if slope == 0.0:
        return None
    sig = _clamp01(1.0 - p)
    if sig < config.threshold:
        return None
    itype = InsightType.SHAPE_INCREASING if slope > 0 else InsightType.SHAPE_DECREASING
    return Insight(
        id=insight_id,
        table_id=table_id,
        subspace=subspace,
        itype=itype,
        significance=sig,
        description=render_description(subspace, itype, None, measure),
        statistic=slope,
    )


def extract_all(table: Table, config: ExtractConfig = ExtractConfig()) -> list[Insight]:
    """All point and shape insights of a table, deterministically ordered."""
    out = []
    counter = 0
    for subspace in enumerate_subspaces(table, config.min_len):
        for extractor in (extract_shape_insight, extract_point_insight):
            ins = extractor(
                subspace,
                config,
                insight_id=f"{table.id}#{counter}",
                table_id=table.id,
                measure=table.measure,
            )
            if ins is not None:
                out.append(ins)
                counter += 1
    return out


def insight_to_dict(ins: Insight) -> dict:
    sub = ins.subspace
    obj = {
        "id": ins.id,
        "table_id": ins.table_id,
        "subspace": {
            "fixed_dim": sub.fixed_dim_index,
            "fixed_value": sub.fixed_dim_value,
            "fixed_labels": list(sub.fixed_labels),
            "varying_dim": sub.varying_dim_index,
            "labels": list(sub.varying_labels),
            "values": list(sub.values),
        },
        "type": ins.itype.value,
        "significance": ins.significance,
        "description": ins.description,
        "statistic": ins.statistic,
    }
    if ins.point_index is not None:
        obj["point_index"] = ins.point_index
    return obj


def _subspace_from_dict(obj: dict) -> Subspace:
    fixed_dim = int(obj["fixed_dim"])
    varying_dim = int(obj["varying_dim"])
    fixed_value = str(obj["fixed_value"])
    fixed_labels = tuple(str(x) for x in obj.get("fixed_labels", [fixed_value]))
    ndim = len(fixed_labels) + 1
    cells = []
    fixed_idx = [i for i in range(ndim) if i != varying_dim]
    for label, value in zip(obj["labels"], obj["values"]):
        dims = [""] * ndim
        for i, lab in zip(fixed_idx, fixed_labels):
            dims[i] = lab
        dims[varying_dim] = str(label)
        cells.append(Cell(tuple(dims), float(value)))
    return Subspace(
        cells=tuple(cells),
        fixed_dim_index=fixed_dim,
        fixed_dim_value=fixed_value,
        varying_dim_index=varying_dim,
        fixed_labels=fixed_labels,
    )


def insight_from_dict(obj: dict) -> Insight:
    return Insight(
        id=str(obj["id"]),
        table_id=str(obj["table_id"]),
        subspace=_subspace_from_dict(obj["subspace"]),
        itype=InsightType(obj["type"]),
        significance=float(obj["significance"]),
        description=str(obj["description"]),
        point_index=obj.get("point_index"),
        statistic=float(obj.get("statistic", 0.0)),
    )


def save_insights(insights: list[Insight], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ins in insights:
            fh.write(json.dumps(insight_to_dict(ins), sort_keys=True) + "\n")


def load_insights(path) -> list[Insight]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(insight_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from exc
    return out
