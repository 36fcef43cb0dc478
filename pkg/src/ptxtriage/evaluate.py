"""ROC AUC and the chest-tube-stratified evaluation table.

AUC is the Mann-Whitney statistic (ties count half), computed via average
ranks in O(n log n); it equals exhaustive pair counting. The stratified
table reports each method on all studies, on studies without chest tubes,
and on studies with tubes only, plus the percent change between the no-tube
stratum and the full set: tube-driven shortcut learning shows up as a large
negative change. Strata come from ground-truth tube labels, not from the
tube classifier's predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .pipeline import StudyResult


class DegenerateLabels(ValueError):
    """AUC needs at least one positive and one negative label."""


class MisalignedInputs(ValueError):
    """Results and labels do not line up."""


METHODS: dict[str, Callable[[StudyResult], float]] = {
    "a_full": lambda r: r.scores.a_full,
    "b_patch": lambda r: r.scores.b_patch,
    "c_seg": lambda r: r.scores.c_seg,
    "ens_ac": lambda r: r.scores.ens_ac,
    "ens_abc": lambda r: r.scores.ens_abc,
}


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability a random positive outscores a random negative (ties half)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise MisalignedInputs(f"scores {s.shape} vs labels {y.shape}")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"need both classes, got {n_pos} positive / {n_neg} negative")
    ranks = rankdata(s, method="average")
    rank_sum = float(ranks[y].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pct_change(auc_all: float, auc_stratum: float) -> float:
    """Percent change of a stratum AUC relative to the all-data AUC."""
    if auc_all <= 0:
        raise ValueError(f"baseline AUC must be positive, got {auc_all}")
    return 100.0 * (auc_stratum - auc_all) / auc_all


def round_half_away(x: float, ndigits: int = 1) -> float:
    """Round half away from zero (display convention for the % column)."""
    factor = 10.0**ndigits
    return math.copysign(math.floor(abs(x) * factor + 0.5), x) / factor


@dataclass(frozen=True)
class MethodRow:
    method: str
    auc_all: float | None
    auc_no_tubes: float | None
    auc_only_tubes: float | None
    pct_change_no_tubes: float | None  # full precision; round for display

    def to_json(self) -> dict:
        d = {
            "method": self.method,
            "auc_all": self.auc_all,
            "auc_no_tubes": self.auc_no_tubes,
            "auc_only_tubes": self.auc_only_tubes,
            "pct_change_no_tubes": self.pct_change_no_tubes,
        }
        if self.pct_change_no_tubes is not None:
            d["pct_change_no_tubes_display"] = f"{round_half_away(self.pct_change_no_tubes):.1f}%"
        return d


@dataclass(frozen=True)
class StrataCounts:
    n_all: int
    n_pos_all: int
    n_no_tubes: int
    n_pos_no_tubes: int
    n_only_tubes: int
    n_pos_only_tubes: int

    def to_json(self) -> dict:
        return self.__dict__.copy()


@dataclass(frozen=True)
class EvalTable:
    rows: tuple[MethodRow, ...]
    strata: StrataCounts

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows], "strata": self.strata.to_json()}

    def to_json_str(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json(), indent=indent)

    def to_text(self) -> str:
        """Aligned table: method, AUC all / no tubes / only tubes, % change."""
        headers = ("Method", "AUC (all)", "AUC (no tubes)", "AUC (only tubes)", "% change no tubes")

        def fmt(v: float | None, pct: bool = False) -> str:
            if v is None:
                return "-"
            return f"{round_half_away(v):.1f}%" if pct else f"{v:.3f}"

        body = [
            (
                r.method,
                fmt(r.auc_all),
                fmt(r.auc_no_tubes),
                fmt(r.auc_only_tubes),
                fmt(r.pct_change_no_tubes, pct=True),
            )
            for r in self.rows
        ]
        s = self.strata
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(headers)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
            "  ".join("-" * w for w in widths),
        ]
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
        lines.append("")
        lines.append(
            f"n={s.n_all} ({s.n_pos_all} positive); "
            f"no tubes n={s.n_no_tubes} ({s.n_pos_no_tubes} positive); "
            f"only tubes n={s.n_only_tubes} ({s.n_pos_only_tubes} positive)"
        )
        return "\n".join(lines)


def _safe_auc(scores: list[float], labels: list[bool]) -> float | None:
    try:
        return auc(scores, labels)
    except DegenerateLabels:
        return None  # a degenerate stratum is absent, not an error


def stratified_eval(
    results: Sequence[StudyResult],
    labels: Sequence[Mapping],
    methods: Iterable[str] = tuple(METHODS),
) -> EvalTable:
    """Build the stratified AUC table from scored results and truth labels.

    `labels[i]` holds {"ptx": bool, "tube": bool} for `results[i]`. Studies
    without scores (non-frontal or errored) are not scoreable and are
    excluded from every stratum.
    """
    if len(results) != len(labels):
        raise MisalignedInputs(f"{len(results)} results vs {len(labels)} labels")
    method_names = list(methods)
    for name in method_names:
        if name not in METHODS:
            raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}")

    scored = [(r, bool(l["ptx"]), bool(l["tube"])) for r, l in zip(results, labels) if r.scores]
    strata = {
        "all": [(r, p) for r, p, _ in scored],
        "no_tubes": [(r, p) for r, p, t in scored if not t],
        "only_tubes": [(r, p) for r, p, t in scored if t],
    }
    counts = StrataCounts(
        n_all=len(strata["all"]),
        n_pos_all=sum(p for _, p in strata["all"]),
        n_no_tubes=len(strata["no_tubes"]),
        n_pos_no_tubes=sum(p for _, p in strata["no_tubes"]),
        n_only_tubes=len(strata["only_tubes"]),
        n_pos_only_tubes=sum(p for _, p in strata["only_tubes"]),
    )

    rows = []
    for name in method_names:
        select = METHODS[name]
        by_stratum = {
            key: _safe_auc([select(r) for r, _ in pairs], [p for _, p in pairs]) if pairs else None
            for key, pairs in strata.items()
        }
        a_all, a_nt = by_stratum["all"], by_stratum["no_tubes"]
        rows.append(
            MethodRow(
                method=name,
                auc_all=a_all,
                auc_no_tubes=a_nt,
                auc_only_tubes=by_stratum["only_tubes"],
                pct_change_no_tubes=pct_change(a_all, a_nt) if a_all and a_nt is not None else None,
            )
        )
    return EvalTable(rows=tuple(rows), strata=counts)


def tube_auc(results: Sequence[StudyResult], labels: Sequence[Mapping]) -> dict[str, float | None]:
    """AUC of the chest-tube classifier per tube type.

    `labels[i]` holds {"tube": bool, "tube_type": str|None}; the standard
    score is evaluated against standard-tube presence, pigtail likewise.
    """
    if len(results) != len(labels):
        raise MisalignedInputs(f"{len(results)} results vs {len(labels)} labels")
    rows = [(r, l) for r, l in zip(results, labels) if r.tube is not None]
    out: dict[str, float | None] = {}
    for kind, select in (("standard", lambda r: r.tube.standard), ("pigtail", lambda r: r.tube.pigtail)):
        y = [bool(l["tube"]) and l.get("tube_type") == kind for _, l in rows]
        s = [select(r) for r, _ in rows]
        out[kind] = _safe_auc(s, y) if rows else None
    return out
