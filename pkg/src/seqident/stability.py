"""Identifiability checks for sequential decision strategies.

All graphical criteria reduce to separation queries on derived graphs:
simple and extended stability are read off the regime-augmented diagram,
the general criterion off the per-stage hybrid-regime graphs, and the
Pearl-Robins criterion off the per-stage edge-deleted graphs.  Each check
returns a report whose failed entries carry a witness path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .diagram import (
    REGIME,
    StagedDiagram,
    StrategyParentSpec,
    augment_with_regime,
    build_check_graph,
    build_pearl_robins_graph,
    is_full_history,
)
from .errors import InternalTheorem2Violation
from .graph import SeparationVerdict, ancestors, d_separated
from .prob import DiscreteModel, marginal, mixed_joint_pi
from .strategy import Strategy


@dataclass(frozen=True)
class CheckEntry:
    index: int
    query: str
    passed: bool
    verdict: SeparationVerdict | None = None
    note: str = ""


@dataclass(frozen=True)
class IdentificationReport:
    check: str
    entries: tuple[CheckEntry, ...]
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


def _render(d: StagedDiagram, x: Iterable[str], y: Iterable[str], z: Iterable[str]) -> str:
    pos = d.position

    def order(labels: Iterable[str]) -> list[str]:
        return sorted(labels, key=lambda v: pos.get(v, len(pos)))

    left = ", ".join(order(x)) + " _||_ " + ", ".join(order(y))
    zs = order(z)
    return left + (" | " + ", ".join(zs) if zs else "")


def check_simple_stability(d: StagedDiagram) -> IdentificationReport:
    """Per stage, the covariate block given the observed past is regime-invariant."""
    g = augment_with_regime(d)
    entries = []
    for i in range(1, d.n_stages + 2):
        block = d.covariate_block(i)
        past = d.actions_before(i) + d.covariates_before(i)
        if not block:
            entries.append(
                CheckEntry(i, f"stage {i} has no covariates", True, None, "vacuous")
            )
            continue
        v = d_separated(g, block, (REGIME,), past)
        entries.append(CheckEntry(i, _render(d, block, (REGIME,), past), v.separated, v))
    return IdentificationReport(check="simple-stability", entries=tuple(entries))


def check_extended_stability(d: StagedDiagram) -> IdentificationReport:
    """Simple stability once the hidden blocks are added to the conditioning chain."""
    g = augment_with_regime(d)
    entries = []
    for i in range(1, d.n_stages + 2):
        block = d.covariate_block(i)
        if i <= d.n_stages:
            block = d.hidden_labels(i) + block
        past = (
            d.actions_before(i)
            + d.covariates_before(i)
            + tuple(h for j in range(1, i) for h in d.hidden_labels(j))
        )
        if not block:
            entries.append(
                CheckEntry(i, f"stage {i} has no covariates or hidden variables", True, None, "vacuous")
            )
            continue
        v = d_separated(g, block, (REGIME,), past)
        entries.append(CheckEntry(i, _render(d, block, (REGIME,), past), v.separated, v))
    return IdentificationReport(check="extended-stability", entries=tuple(entries))


def check_general(d: StagedDiagram, spec: StrategyParentSpec) -> IdentificationReport:
    """Outcome vs regime in every hybrid-regime graph, given the history so far.

    A pass identifies every strategy whose parent sets match the spec, given
    positivity.  The same separation test is applied whether the strategy
    kernels are deterministic or stochastic.
    """
    y = d.outcome_label
    entries = []
    for i in range(1, d.n_stages + 1):
        g = build_check_graph(d, spec, i)
        cond = d.actions_before(i + 1) + d.covariates_through(i)
        v = d_separated(g, (y,), (REGIME,), cond)
        entries.append(CheckEntry(i, _render(d, (y,), (REGIME,), cond), v.separated, v))
    return IdentificationReport(
        check="general-criterion",
        entries=tuple(entries),
        notes=("applies to stochastic strategy kernels as well as deterministic ones",),
    )


def check_pearl_robins(d: StagedDiagram, spec: StrategyParentSpec) -> IdentificationReport:
    """Outcome vs each action in the edge-deleted graphs, given the action's history."""
    y = d.outcome_label
    entries = []
    for i in range(1, d.n_stages + 1):
        g = build_pearl_robins_graph(d.dag, d, spec, i)
        a = d.action_label(i)
        cond = d.actions_before(i) + d.covariates_through(i)
        v = d_separated(g, (y,), (a,), cond)
        entries.append(CheckEntry(i, _render(d, (y,), (a,), cond), v.separated, v))
    return IdentificationReport(check="pearl-robins", entries=tuple(entries))


def check_assumptions(d: StagedDiagram, spec: StrategyParentSpec) -> IdentificationReport:
    """Regularity assumptions for the optimal-strategy reduction.

    Checked: every action's strategy parents are a subset of its
    observational parents, and every covariate is an ancestor of the outcome
    in the all-strategy-parents graph.  The two implied ancestry facts are
    reported informationally.
    """
    d0 = build_check_graph(d, spec, 0)
    y = d.outcome_label
    entries = []
    for i, a in enumerate(d.actions, start=1):
        ok = spec.of(a) <= set(d.pa_o(a))
        entries.append(
            CheckEntry(i, f"strategy parents of {a} within observational parents", ok)
        )
    anc_y = ancestors(d0, (y,))
    for v in d.vars:
        if v.kind.value != "covariate":
            continue
        ok = v.label in anc_y and v.label != y
        entries.append(
            CheckEntry(v.stage, f"{v.label} is an ancestor of {y} in the all-strategy graph", ok)
        )
    notes = []
    for a in d.actions:
        notes.append(
            f"informational: {a} ancestor of {y} in the all-strategy graph: "
            f"{a in anc_y}"
        )
    anc_actions = set()
    for a in d.actions:
        anc_actions |= ancestors(d0, (a,))
    for v in d.vars:
        if v.kind.value == "covariate":
            notes.append(
                f"informational: {v.label} ancestor of some action in the all-strategy graph: "
                f"{v.label in anc_actions}"
            )
    return IdentificationReport(check="assumptions", entries=tuple(entries), notes=tuple(notes))


def check_theorem1_numeric(
    m: DiscreteModel,
    d: StagedDiagram,
    s: Strategy,
    tol: float = 1e-9,
) -> IdentificationReport:
    """Numeric counterpart of the general criterion on a concrete model.

    For each stage the outcome's conditional given the observed history must
    agree between the two spliced joints that differ only in how that stage's
    action arose.  Histories with zero probability under either splice are
    skipped and counted in the entry note.
    """
    y = d.outcome_label
    entries = []
    for i in range(1, d.n_stages + 1):
        hist = d.actions_before(i + 1) + d.covariates_through(i)
        left = marginal(mixed_joint_pi(m, d, s, i - 1), hist + (y,)).table
        right = marginal(mixed_joint_pi(m, d, s, i), hist + (y,)).table
        lden = left.sum(axis=-1)
        rden = right.sum(axis=-1)
        both = (lden > 0.0) & (rden > 0.0)
        if both.any():
            lc = left[both] / lden[both][:, None]
            rc = right[both] / rden[both][:, None]
            dev = float(np.abs(lc - rc).max())
        else:
            dev = 0.0
        skipped = int((~both).sum())
        note = f"max deviation {dev:.3e}"
        if skipped:
            note += f"; skipped {skipped} zero-probability histories"
        entries.append(
            CheckEntry(
                i,
                f"outcome law given {', '.join(hist) or 'nothing'} invariant to stage-{i} splice",
                dev <= tol,
                None,
                note,
            )
        )
    return IdentificationReport(check="splice-agreement", entries=tuple(entries))


class IdentifiabilityVerdict(str, enum.Enum):
    IDENTIFIED_SIMPLE = "IdentifiedSimple"
    IDENTIFIED_GENERAL = "IdentifiedGeneral"
    NOT_GUARANTEED = "NotGuaranteed"


@dataclass(frozen=True)
class IdentifiabilityDecision:
    verdict: IdentifiabilityVerdict
    simple: IdentificationReport
    general: IdentificationReport | None
    assumptions: IdentificationReport

    @property
    def reports(self) -> tuple[IdentificationReport, ...]:
        out: tuple[IdentificationReport, ...] = (self.simple,)
        if self.general is not None:
            out += (self.general,)
        return out + (self.assumptions,)


def decide_identifiability(
    d: StagedDiagram, spec: StrategyParentSpec
) -> IdentifiabilityDecision:
    """Sufficiency-only identifiability verdict for the strategy class.

    Simple stability alone settles the question when it holds; otherwise the
    general criterion is consulted.  NotGuaranteed means neither sufficient
    condition applies, not that identification is impossible.  On
    full-history specs satisfying both regularity assumptions the general
    criterion can never out-do simple stability; observing that would be an
    implementation bug and raises instead of returning.
    """
    simple = check_simple_stability(d)
    assumptions = check_assumptions(d, spec)
    if simple.passed:
        return IdentifiabilityDecision(
            IdentifiabilityVerdict.IDENTIFIED_SIMPLE, simple, None, assumptions
        )
    general = check_general(d, spec)
    if general.passed:
        if is_full_history(d, spec) and assumptions.passed:
            raise InternalTheorem2Violation(
                "general criterion passed without simple stability on a "
                f"full-history problem with assumptions satisfied: vars "
                f"{[v.label for v in d.vars]}, edges {list(d.edges)}"
            )
        return IdentifiabilityDecision(
            IdentifiabilityVerdict.IDENTIFIED_GENERAL, simple, general, assumptions
        )
    return IdentifiabilityDecision(
        IdentifiabilityVerdict.NOT_GUARANTEED, simple, general, assumptions
    )
