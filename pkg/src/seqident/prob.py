"""Exact discrete probability on dense tables.

Joint distributions are built as products of conditional probability tables
over the diagram's total variable order.  Regimes only ever swap the action
factors: the observational regime uses the recorded action kernels, a
strategy regime replaces them with the strategy's decision kernels, and the
spliced distributions switch from one to the other at a given stage.  All
other factors are regime-invariant by construction, which is exactly what
makes the strategy joint the ground truth the identification checks talk
about.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diagram import REGIME, StagedDiagram, VarKind
from .errors import (
    OverlappingSets,
    StageOutOfRange,
    StateSpaceTooLarge,
    UnknownNode,
    ZeroProbabilityEvidence,
)
from .graph import Dag
from .strategy import Strategy

MAX_CELLS = 2**22
ROW_SUM_TOL = 1e-12


@dataclass(eq=False)
class DiscreteModel:
    """State counts plus one observational CPT per variable.

    CPT axes follow the diagram's canonical order: one axis per parent (in
    diagram order) and the variable's own states last.
    """

    states: dict[str, int]
    cpts: dict[str, np.ndarray]


@dataclass(eq=False)
class JointTable:
    """Dense joint distribution; axes follow ``labels``."""

    labels: tuple[str, ...]
    table: np.ndarray

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownNode(f"variable {label!r} not in table") from None

    def total(self) -> float:
        return float(self.table.sum())


@dataclass(eq=False)
class LossFunction:
    """Real-valued table over the outcome's states."""

    values: np.ndarray
    outcome: str


def loss_function(values: Sequence[float], outcome: str) -> LossFunction:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValueError("loss values must be a finite 1-d table")
    return LossFunction(values=arr, outcome=outcome)


@dataclass(frozen=True)
class ModelIssue:
    code: str  # ShapeMismatch | RowNotNormalized | InertParentInfluence | MissingCpt | BadStateCount
    var: str
    message: str


def validate_model(m: DiscreteModel, d: StagedDiagram) -> tuple[ModelIssue, ...]:
    """Shape, normalisation, and inert-parent checks for every CPT."""
    issues: list[ModelIssue] = []
    for v in d.vars:
        lab = v.label
        n = m.states.get(lab)
        if n is None or n < 1:
            issues.append(ModelIssue("BadStateCount", lab, f"state count {n!r} invalid"))
            continue
        cpt = m.cpts.get(lab)
        if cpt is None:
            issues.append(ModelIssue("MissingCpt", lab, "no conditional probability table"))
            continue
        want = tuple(m.states.get(p, 0) for p in d.parents[lab]) + (n,)
        if cpt.shape != want:
            issues.append(
                ModelIssue(
                    "ShapeMismatch",
                    lab,
                    f"cpt shape {cpt.shape} does not match parent layout {want}",
                )
            )
            continue
        sums = cpt.sum(axis=-1)
        off = np.abs(sums - 1.0)
        if off.size and off.max() > ROW_SUM_TOL:
            row = np.unravel_index(int(off.argmax()), off.shape) if off.ndim else ()
            issues.append(
                ModelIssue(
                    "RowNotNormalized",
                    lab,
                    f"row {tuple(int(r) for r in row)} sums to {float(sums[row] if off.ndim else sums):.17g}",
                )
            )
        inert = d.inert_parents(lab) if v.kind is VarKind.ACTION else frozenset()
        for p in inert:
            ax = d.parents[lab].index(p)
            spread = np.abs(cpt - cpt.take([0], axis=ax)).max()
            if spread > ROW_SUM_TOL:
                issues.append(
                    ModelIssue(
                        "InertParentInfluence",
                        lab,
                        f"inert parent {p} changes the kernel by up to {float(spread):.3e}",
                    )
                )
    return tuple(issues)


def _expand(arr: np.ndarray, axes: Sequence[int], rank: int, shape: Sequence[int]) -> np.ndarray:
    """Place arr's axes at the given positions of a rank-`rank` broadcast shape."""
    order = np.argsort(axes)
    arr_t = np.transpose(arr, order)
    new_shape = [1] * rank
    for pos, ax in enumerate(sorted(axes)):
        new_shape[ax] = shape[ax]
    return arr_t.reshape(new_shape)


def _product_joint(
    labels: Sequence[str],
    states: Mapping[str, int],
    factors: Iterable[tuple[tuple[int, ...], np.ndarray]],
) -> JointTable:
    labels = tuple(labels)
    shape = tuple(states[lab] for lab in labels)
    cells = 1
    for s in shape:
        cells *= s
    if cells > MAX_CELLS:
        raise StateSpaceTooLarge(f"{cells} cells exceed the cap of {MAX_CELLS}")
    out = np.ones(shape, dtype=float)
    for axes, arr in factors:
        out = out * _expand(arr, axes, len(shape), shape)
    return JointTable(labels=labels, table=out)


def _spliced_factors(
    m: DiscreteModel, d: StagedDiagram, strategy: Strategy | None, split: int
) -> list[tuple[tuple[int, ...], np.ndarray]]:
    pos = d.position
    factors: list[tuple[tuple[int, ...], np.ndarray]] = []
    for v in d.vars:
        if v.kind is VarKind.ACTION and v.stage > split:
            assert strategy is not None
            parents = strategy.parents_of(v.label)
            arr = strategy.kernel_table(v.label)
        else:
            parents = d.parents[v.label]
            arr = m.cpts[v.label]
        axes = tuple(pos[p] for p in parents) + (pos[v.label],)
        factors.append((axes, arr))
    return factors


def joint(m: DiscreteModel, d: StagedDiagram, strategy: Strategy | None = None) -> JointTable:
    """Full joint under the observational regime, or under a strategy regime.

    Under a strategy every action factor is replaced by the strategy kernel;
    covariate, hidden, and outcome factors are kept unchanged.
    """
    split = d.n_stages if strategy is None else 0
    return _product_joint(d.labels, m.states, _spliced_factors(m, d, strategy, split))


def mixed_joint_pi(m: DiscreteModel, d: StagedDiagram, s: Strategy, i: int) -> JointTable:
    """Spliced joint: observational factors through stage i, strategy after."""
    if not 0 <= i <= d.n_stages:
        raise StageOutOfRange(f"stage {i} not in 0..{d.n_stages}")
    return _product_joint(d.labels, m.states, _spliced_factors(m, d, s, i))


def regime_mixture_joint(
    m: DiscreteModel, d: StagedDiagram, s: Strategy, weight: float = 0.5
) -> JointTable:
    """Joint over the diagram variables plus the regime indicator.

    State 0 of the regime node carries the observational joint with mass
    ``weight``, state 1 the strategy joint with the rest.
    """
    obs = joint(m, d).table
    strat = joint(m, d, s).table
    table = np.stack([weight * obs, (1.0 - weight) * strat], axis=-1)
    return JointTable(labels=d.labels + (REGIME,), table=table)


def marginal(j: JointTable, keep: Iterable[str]) -> JointTable:
    """Sum out everything not in ``keep``; axis order follows the source table."""
    keep_set = set(keep)
    unknown = keep_set - set(j.labels)
    if unknown:
        raise UnknownNode(f"not in table: {sorted(unknown)}")
    drop = tuple(ax for ax, lab in enumerate(j.labels) if lab not in keep_set)
    labels = tuple(lab for lab in j.labels if lab in keep_set)
    return JointTable(labels=labels, table=j.table.sum(axis=drop))


def condition(
    j: JointTable, targets: Iterable[str], evidence: Mapping[str, int]
) -> JointTable:
    """Renormalised slice over the targets given a partial configuration."""
    targets = tuple(targets)
    overlap = set(targets) & set(evidence)
    if overlap:
        raise OverlappingSets(f"targets overlap evidence: {sorted(overlap)}")
    idx: list[object] = [slice(None)] * j.table.ndim
    for var, state in evidence.items():
        ax = j.axis(var)
        if not 0 <= state < j.table.shape[ax]:
            raise ZeroProbabilityEvidence(dict(evidence))
        idx[ax] = state
    sliced = j.table[tuple(idx)]
    kept = tuple(lab for lab in j.labels if lab not in evidence)
    sub = JointTable(labels=kept, table=sliced)
    out = marginal(sub, targets)
    total = out.table.sum()
    if total <= 0.0:
        raise ZeroProbabilityEvidence(dict(evidence))
    return JointTable(labels=out.labels, table=out.table / total)


def expectation(j: JointTable, k: LossFunction) -> float:
    p = marginal(j, [k.outcome]).table
    if p.shape != k.values.shape:
        raise ValueError(
            f"loss table over {k.values.shape} states, outcome has {p.shape}"
        )
    return float(np.dot(p, k.values))


def ci_deviation(
    j: JointTable,
    x: Iterable[str],
    y: Iterable[str],
    z: Iterable[str] = (),
) -> float:
    """Worst factorisation gap max |p(x,y|z) - p(x|z) p(y|z)| over the
    conditioning configurations of positive probability."""
    xs, ys, zs = tuple(x), tuple(y), tuple(z)
    if set(xs) & set(ys) or set(xs) & set(zs) or set(ys) & set(zs):
        raise OverlappingSets("query sets must be pairwise disjoint")
    sub = marginal(j, xs + ys + zs)
    x_axes = [sub.axis(v) for v in xs]
    y_axes = [sub.axis(v) for v in ys]
    z_axes = [sub.axis(v) for v in zs]
    t = np.transpose(sub.table, x_axes + y_axes + z_axes)
    nx = int(np.prod([t.shape[i] for i in range(len(x_axes))], initial=1))
    ny = int(np.prod([t.shape[i] for i in range(len(x_axes), len(x_axes) + len(y_axes))], initial=1))
    t = t.reshape(nx, ny, -1)
    pz = t.sum(axis=(0, 1))
    worst = 0.0
    for kz in range(t.shape[2]):
        if pz[kz] <= 0.0:
            continue
        pxy = t[:, :, kz] / pz[kz]
        px = pxy.sum(axis=1)
        py = pxy.sum(axis=0)
        worst = max(worst, float(np.abs(pxy - np.outer(px, py)).max()))
    return worst


def ci_holds(
    j: JointTable,
    x: Iterable[str],
    y: Iterable[str],
    z: Iterable[str] = (),
    tol: float = 1e-9,
) -> bool:
    """Numeric conditional independence: the factorisation gap stays within
    ``tol`` for every conditioning configuration of positive probability."""
    return ci_deviation(j, x, y, z) <= tol


@dataclass(frozen=True)
class PositivityIssue:
    stage: int
    history: tuple[tuple[str, int], ...]
    action_state: int
    reason: str


@dataclass(frozen=True)
class PositivityReport:
    passed: bool
    issues: tuple[PositivityIssue, ...]


def check_positivity(m: DiscreteModel, d: StagedDiagram, s: Strategy) -> PositivityReport:
    """Support-inclusion check on observed histories.

    Every action the strategy can take at a history reachable under the
    strategy must have positive probability under the observational regime
    given that history.
    """
    observed = d.observed_labels
    po = marginal(joint(m, d), observed).table
    ps = marginal(joint(m, d, s), observed).table
    issues: list[PositivityIssue] = []
    for i in range(1, d.n_stages + 1):
        a_lab = d.action_label(i)
        cut = observed.index(a_lab)
        hist_vars = observed[:cut]
        ndim = po.ndim
        ps_hist = ps.sum(axis=tuple(range(cut, ndim)))
        po_hist_a = po.sum(axis=tuple(range(cut + 1, ndim)))
        pa_vars = s.parents_of(a_lab)
        pa_idx = [hist_vars.index(p) for p in pa_vars]
        for cfg in np.ndindex(*ps_hist.shape):
            if ps_hist[cfg] <= 0.0:
                continue
            row = s.kernel_table(a_lab)[tuple(cfg[ix] for ix in pa_idx)]
            history = tuple(zip(hist_vars, (int(c) for c in cfg)))
            for a_state in range(row.shape[0]):
                if row[a_state] <= 0.0:
                    continue
                if po_hist_a[cfg + (a_state,)] <= 0.0:
                    reason = (
                        "history never observed"
                        if po_hist_a[cfg].sum() <= 0.0
                        else "action never observed at this history"
                    )
                    issues.append(PositivityIssue(i, history, a_state, reason))
    return PositivityReport(passed=not issues, issues=tuple(issues))


def dag_joint(
    dag: Dag, states: Mapping[str, int], cpts: Mapping[str, np.ndarray]
) -> JointTable:
    """Joint for a plain DAG parameterisation.

    CPT axes: the node's parents in ascending node-id order, own states last.
    """
    factors = []
    for nid, lab in enumerate(dag.labels):
        axes = tuple(dag.parents[nid]) + (nid,)
        factors.append((axes, cpts[lab]))
    return _product_joint(dag.labels, states, factors)
