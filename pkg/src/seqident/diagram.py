"""Staged influence diagrams and the derived check graphs.

Variables are grouped into decision stages.  The canonical total order is
hidden block, covariate block, action within each stage, then the outcome;
all edges must point forward in that order, which makes acyclicity hold by
construction.  Regime augmentation adds the decision node ``sigma`` with an
arrow into every action.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import (
    DuplicateEdge,
    InvalidParentSpec,
    NoRegimeNode,
    RegimeAlreadyPresent,
    StageOutOfRange,
    UnknownLabel,
)
from .graph import Dag, build_dag

REGIME = "sigma"


class VarKind(str, enum.Enum):
    ACTION = "action"
    COVARIATE = "covariate"
    HIDDEN = "hidden"
    OUTCOME = "outcome"


_BLOCK_RANK = {
    VarKind.HIDDEN: 0,
    VarKind.COVARIATE: 1,
    VarKind.ACTION: 2,
    VarKind.OUTCOME: 3,
}


@dataclass(frozen=True)
class Variable:
    label: str
    kind: VarKind
    stage: int


@dataclass(frozen=True)
class Violation:
    code: str  # BadStageOrder | MultipleOutcomes | HiddenAfterOutcome | EdgeAgainstOrder
    message: str


@dataclass(frozen=True)
class StagedDiagram:
    """Variables with stage indices plus directed edges, in canonical order.

    ``inert`` records (action, parent) pairs added by parent normalisation;
    the observational kernel of the action must not vary with those parents.
    """

    n_stages: int
    vars: tuple[Variable, ...]
    edges: tuple[tuple[str, str], ...]
    inert: frozenset[tuple[str, str]] = field(default=frozenset())

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.vars)

    @cached_property
    def position(self) -> dict[str, int]:
        return {v.label: i for i, v in enumerate(self.vars)}

    @cached_property
    def by_label(self) -> dict[str, Variable]:
        return {v.label: v for v in self.vars}

    @cached_property
    def dag(self) -> Dag:
        return build_dag(self.labels, self.edges)

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        # parent lists in canonical order
        out: dict[str, list[str]] = {v.label: [] for v in self.vars}
        for a, b in self.edges:
            out[b].append(a)
        pos = self.position
        return {lab: tuple(sorted(ps, key=pos.__getitem__)) for lab, ps in out.items()}

    @cached_property
    def actions(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.vars if v.kind is VarKind.ACTION)

    def action_label(self, i: int) -> str:
        if not 1 <= i <= self.n_stages:
            raise StageOutOfRange(f"stage {i} not in 1..{self.n_stages}")
        for v in self.vars:
            if v.kind is VarKind.ACTION and v.stage == i:
                return v.label
        raise UnknownLabel(f"no action at stage {i}")

    @cached_property
    def outcome_label(self) -> str:
        for v in self.vars:
            if v.kind is VarKind.OUTCOME:
                return v.label
        raise UnknownLabel("no outcome variable")

    def covariate_labels(self, i: int) -> tuple[str, ...]:
        return tuple(
            v.label for v in self.vars if v.kind is VarKind.COVARIATE and v.stage == i
        )

    def hidden_labels(self, i: int) -> tuple[str, ...]:
        return tuple(
            v.label for v in self.vars if v.kind is VarKind.HIDDEN and v.stage == i
        )

    def covariate_block(self, i: int) -> tuple[str, ...]:
        """Covariate block at stage i; the block at stage N+1 is the outcome."""
        if i == self.n_stages + 1:
            return (self.outcome_label,)
        return self.covariate_labels(i)

    @cached_property
    def hiddens(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.vars if v.kind is VarKind.HIDDEN)

    @cached_property
    def observed_labels(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.vars if v.kind is not VarKind.HIDDEN)

    def pa_o(self, action: str) -> tuple[str, ...]:
        if self.by_label[action].kind is not VarKind.ACTION:
            raise UnknownLabel(f"{action!r} is not an action variable")
        return self.parents[action]

    def inert_parents(self, action: str) -> frozenset[str]:
        return frozenset(p for a, p in self.inert if a == action)

    def actions_before(self, i: int) -> tuple[str, ...]:
        return tuple(
            v.label for v in self.vars if v.kind is VarKind.ACTION and v.stage < i
        )

    def covariates_before(self, i: int) -> tuple[str, ...]:
        return tuple(
            v.label for v in self.vars if v.kind is VarKind.COVARIATE and v.stage < i
        )

    def covariates_through(self, i: int) -> tuple[str, ...]:
        return tuple(
            v.label for v in self.vars if v.kind is VarKind.COVARIATE and v.stage <= i
        )


def staged_diagram(
    n_stages: int,
    variables: Iterable[tuple[str, VarKind | str, int]],
    edges: Iterable[tuple[str, str]],
    inert: Iterable[tuple[str, str]] = (),
) -> StagedDiagram:
    """Canonicalise declarations into a StagedDiagram.

    Structural problems (stage layout, edge direction) are reported by
    :func:`validate_diagram`; only unusable declarations raise here.
    """
    decls = [Variable(lab, VarKind(kind), stage) for lab, kind, stage in variables]
    seen: set[str] = set()
    for v in decls:
        if v.label in seen:
            raise UnknownLabel(f"duplicate variable {v.label!r}")
        if v.label == REGIME:
            raise UnknownLabel(f"{REGIME!r} is reserved for the regime node")
        seen.add(v.label)
    order = sorted(
        range(len(decls)),
        key=lambda i: (decls[i].stage, _BLOCK_RANK[decls[i].kind], i),
    )
    canon = tuple(decls[i] for i in order)
    pos = {v.label: i for i, v in enumerate(canon)}
    edge_list: list[tuple[str, str]] = []
    seen_edges: set[tuple[str, str]] = set()
    for a, b in edges:
        if a not in pos or b not in pos:
            missing = a if a not in pos else b
            raise UnknownLabel(f"edge endpoint {missing!r} is not a declared variable")
        if (a, b) in seen_edges:
            raise DuplicateEdge(f"duplicate edge {a} -> {b}")
        seen_edges.add((a, b))
        edge_list.append((a, b))
    edge_list.sort(key=lambda e: (pos[e[0]], pos[e[1]]))
    return StagedDiagram(
        n_stages=n_stages,
        vars=canon,
        edges=tuple(edge_list),
        inert=frozenset(inert),
    )


def validate_diagram(d: StagedDiagram) -> tuple[Violation, ...]:
    """Check all stage-structure invariants; returns the full violation list."""
    found: list[Violation] = []
    n = d.n_stages
    if n < 1:
        found.append(Violation("BadStageOrder", f"need at least one stage, got {n}"))

    outcomes = [v for v in d.vars if v.kind is VarKind.OUTCOME]
    if len(outcomes) != 1:
        found.append(
            Violation("MultipleOutcomes", f"expected exactly one outcome, found {len(outcomes)}")
        )
    for v in outcomes:
        if v.stage != n + 1:
            found.append(
                Violation(
                    "BadStageOrder",
                    f"outcome {v.label} must sit at stage {n + 1}, found stage {v.stage}",
                )
            )
    for i in range(1, n + 1):
        acts = [v for v in d.vars if v.kind is VarKind.ACTION and v.stage == i]
        if len(acts) != 1:
            found.append(
                Violation("BadStageOrder", f"stage {i} must hold exactly one action, found {len(acts)}")
            )
    for v in d.vars:
        if v.kind is VarKind.ACTION and not 1 <= v.stage <= n:
            found.append(
                Violation("BadStageOrder", f"action {v.label} at stage {v.stage} outside 1..{n}")
            )
        if v.kind is VarKind.HIDDEN and v.stage > n:
            found.append(
                Violation("HiddenAfterOutcome", f"hidden {v.label} at stage {v.stage} is past the last decision")
            )
        if v.kind in (VarKind.HIDDEN, VarKind.COVARIATE) and v.stage < 1:
            found.append(
                Violation("BadStageOrder", f"{v.label} at stage {v.stage} precedes stage 1")
            )
        if v.kind is VarKind.COVARIATE and v.stage > n:
            found.append(
                Violation("BadStageOrder", f"covariate {v.label} at stage {v.stage} is past the last decision")
            )
    pos = d.position
    for a, b in d.edges:
        if pos[a] >= pos[b]:
            found.append(
                Violation("EdgeAgainstOrder", f"edge {a} -> {b} goes against the stage order")
            )
    return tuple(found)


def augment_with_regime(d: StagedDiagram | Dag) -> Dag:
    """Append the regime node with one arrow into every action."""
    if isinstance(d, Dag):
        if REGIME in d.labels:
            raise RegimeAlreadyPresent("graph already carries a regime node")
        raise UnknownLabel("regime augmentation needs stage information; pass a StagedDiagram")
    labels = d.labels + (REGIME,)
    edges = list(d.edges) + [(REGIME, a) for a in d.actions]
    return build_dag(labels, edges)


def strip_regime(g: Dag) -> Dag:
    """Drop the regime node and its incident edges."""
    if REGIME not in g.labels:
        raise NoRegimeNode("graph has no regime node")
    keep = tuple(lab for lab in g.labels if lab != REGIME)
    edges = [
        (g.labels[a], g.labels[b])
        for a, b in g.edges
        if g.labels[a] != REGIME and g.labels[b] != REGIME
    ]
    return build_dag(keep, edges)


@dataclass(frozen=True)
class StrategyParentSpec:
    """Per-action sets of observed predecessors the strategy may consult."""

    parents: tuple[tuple[str, frozenset[str]], ...]  # (action, pa_s) in stage order

    def of(self, action: str) -> frozenset[str]:
        for a, ps in self.parents:
            if a == action:
                return ps
        raise UnknownLabel(f"no parent set for action {action!r}")

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.parents)


def parent_spec(d: StagedDiagram, mapping: Mapping[str, Iterable[str]]) -> StrategyParentSpec:
    """Validate and canonicalise a per-action parent mapping."""
    pos = d.position
    entries: list[tuple[str, frozenset[str]]] = []
    for action in d.actions:
        ps = frozenset(mapping.get(action, ()))
        for p in ps:
            if p not in pos:
                raise InvalidParentSpec(f"{p!r} is not a variable of the diagram")
            kind = d.by_label[p].kind
            if kind is VarKind.HIDDEN:
                raise InvalidParentSpec(f"strategy for {action} may not consult hidden {p}")
            if kind is VarKind.OUTCOME:
                raise InvalidParentSpec(f"strategy for {action} may not consult the outcome {p}")
            if pos[p] >= pos[action]:
                raise InvalidParentSpec(f"{p} is not realised before {action}")
        entries.append((action, ps))
    unknown = set(mapping) - set(d.actions)
    if unknown:
        raise InvalidParentSpec(f"not actions of the diagram: {sorted(unknown)}")
    return StrategyParentSpec(parents=tuple(entries))


def full_history_spec(d: StagedDiagram) -> StrategyParentSpec:
    """Every action may consult all earlier actions and all covariates realised so far."""
    mapping = {
        a: set(d.actions_before(i + 1)) | set(d.covariates_through(i + 1))
        for i, a in enumerate(d.actions)
    }
    return parent_spec(d, mapping)


def unconditional_spec(d: StagedDiagram) -> StrategyParentSpec:
    return parent_spec(d, {})


def is_full_history(d: StagedDiagram, spec: StrategyParentSpec) -> bool:
    return spec == full_history_spec(d)


def normalize_parents(d: StagedDiagram, spec: StrategyParentSpec) -> StagedDiagram:
    """Fold strategy parents into the observational parent sets.

    Added parents are recorded as inert: they join the action's conditioning
    set without being allowed any influence on its observational kernel.
    """
    extra_edges: list[tuple[str, str]] = []
    extra_inert: set[tuple[str, str]] = set(d.inert)
    for action in d.actions:
        have = set(d.pa_o(action))
        for p in sorted(spec.of(action), key=d.position.__getitem__):
            if p not in have:
                extra_edges.append((p, action))
                extra_inert.add((action, p))
    if not extra_edges:
        return d
    return staged_diagram(
        d.n_stages,
        [(v.label, v.kind, v.stage) for v in d.vars],
        list(d.edges) + extra_edges,
        inert=extra_inert,
    )


def build_check_graph(d: StagedDiagram, spec: StrategyParentSpec, i: int) -> Dag:
    """Hybrid-regime graph for stage i.

    Actions before stage i keep their observational parents, actions after it
    get the strategy parents, and the stage-i action takes the union of both
    plus the regime node, whose only arrow points into it.  With i = 0 the
    regime node is absent and every action uses its strategy parents.
    """
    if not 0 <= i <= d.n_stages:
        raise StageOutOfRange(f"stage {i} not in 0..{d.n_stages}")
    edges: list[tuple[str, str]] = []
    for v in d.vars:
        if v.kind is not VarKind.ACTION:
            edges.extend((p, v.label) for p in d.parents[v.label])
            continue
        if v.stage < i:
            parents: Iterable[str] = d.pa_o(v.label)
        elif v.stage > i or i == 0:
            parents = sorted(spec.of(v.label), key=d.position.__getitem__)
        else:
            union = set(d.pa_o(v.label)) | spec.of(v.label)
            parents = sorted(union, key=d.position.__getitem__)
            edges.append((REGIME, v.label))
        edges.extend((p, v.label) for p in parents)
    labels = d.labels if i == 0 else d.labels + (REGIME,)
    return build_dag(labels, edges)


def build_pearl_robins_graph(
    dprime: Dag, d: StagedDiagram, spec: StrategyParentSpec, i: int
) -> Dag:
    """Edge-deleted graph for the Pearl-Robins style check at stage i.

    Edges out of the stage-i action are removed; for every later action only
    the incoming edges the strategy actually consults survive (hidden parents
    never do).
    """
    if not 1 <= i <= d.n_stages:
        raise StageOutOfRange(f"stage {i} not in 1..{d.n_stages}")
    a_i = d.action_label(i)
    later = {d.action_label(j): spec.of(d.action_label(j)) for j in range(i + 1, d.n_stages + 1)}
    kept: list[tuple[str, str]] = []
    for src, dst in dprime.edge_labels():
        if src == a_i:
            continue
        if dst in later and src not in later[dst]:
            continue
        kept.append((src, dst))
    return build_dag(dprime.labels, kept)
