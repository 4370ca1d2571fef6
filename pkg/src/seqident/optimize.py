"""Optimal strategy search: backward induction and exhaustive enumeration.

Both optimisers consume only the observational conditionals, so their
results are meaningful exactly when the identification checks pass.  The
dynamic program requires a full-history parent spec; the brute-force path
also handles restricted specs and doubles as the correctness oracle for the
dynamic program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagram import StagedDiagram, StrategyParentSpec, is_full_history
from .errors import InvalidParentSpec, PositivityViolation
from .evaluate import (
    ObservationalConditionals,
    _first_true,
    _history_dict,
    _sum_block,
    evaluate_g_recursion,
)
from .prob import LossFunction
from .strategy import Strategy, enumerate_deterministic, make_stochastic


@dataclass(eq=False)
class OptimizationResult:
    """Optimal value plus one optimal strategy.

    ``choices``/``choice_values`` hold, per action, the selected state and
    its continuation value for every history; ``unreached`` flags histories
    no strategy can realise (they carry the tie-break action).  ``argmax``
    is the full argmax set when the search enumerated it.
    """

    value: float
    strategy: Strategy
    argmax: tuple[Strategy, ...] | None = None
    choices: dict[str, np.ndarray] | None = None
    choice_values: dict[str, np.ndarray] | None = None
    unreached: dict[str, np.ndarray] | None = None


def _require_full_positivity(oc: ObservationalConditionals) -> None:
    # every action state must stay inside the observational support at every
    # supported history, otherwise some candidate's value is undefined
    for i in range(1, oc.n_stages + 1):
        m_next = oc.masks[i]  # over (past actions, covariates through i, action i)
        prefix = m_next.any(axis=-1)
        bad = prefix[..., None] & ~m_next
        if bad.any():
            cfg = _first_true(bad)
            hist = oc.hist_vars[i - 1] + oc.block_vars[i - 1]
            raise PositivityViolation(i, _history_dict(hist, cfg[:-1]), cfg[-1])


def optimize_backward(
    oc: ObservationalConditionals,
    d: StagedDiagram,
    k: LossFunction,
    spec: StrategyParentSpec,
) -> OptimizationResult:
    """Backward induction over the observational conditionals.

    Works the stages from the last to the first, at each history picking the
    action that maximises the continuation value; ties break toward the
    smallest action state.  The returned deterministic strategy conditions on
    the full observed history, which is what makes per-history argmax
    selection optimal.
    """
    if not is_full_history(d, spec):
        raise InvalidParentSpec("backward induction requires the full-history parent spec")
    _require_full_positivity(oc)
    order = oc.observed_order
    shape = tuple(oc.states[v] for v in order)
    f = np.broadcast_to(k.values, shape).astype(float)
    choices: dict[str, np.ndarray] = {}
    choice_values: dict[str, np.ndarray] = {}
    unreached: dict[str, np.ndarray] = {}
    for i in range(oc.n_stages + 1, 0, -1):
        nb = len(oc.block_vars[i - 1])
        f = _sum_block(oc.tables[i - 1], f, nb)
        if i > 1:
            a = oc.action_labels[i - 2]
            # ties: np.argmax returns the first maximiser, i.e. the smallest state
            choice = np.argmax(f, axis=-1)
            f = np.max(f, axis=-1)
            choices[a] = choice
            choice_values[a] = f.copy()
            unreached[a] = ~oc.masks[i - 1].any(axis=-1)
    value = float(f)
    kernels = {}
    for a in d.actions:
        table = np.zeros(choices[a].shape + (oc.states[a],))
        np.put_along_axis(table, choices[a][..., None], 1.0, axis=-1)
        kernels[a] = table
    strategy = make_stochastic(d, oc.states, spec, kernels, name="backward-opt")
    return OptimizationResult(
        value=value,
        strategy=strategy,
        choices=choices,
        choice_values=choice_values,
        unreached=unreached,
    )


def optimize_bruteforce(
    oc: ObservationalConditionals,
    d: StagedDiagram,
    k: LossFunction,
    spec: StrategyParentSpec,
    cap: int = 10**6,
) -> OptimizationResult:
    """Evaluate every deterministic strategy for the spec and keep the argmax set."""
    stream = enumerate_deterministic(d, oc.states, spec, cap=cap)
    best_value: float | None = None
    argmax: list[Strategy] = []
    for s in stream:
        value = evaluate_g_recursion(oc, s, k).value
        if best_value is None or value > best_value:
            best_value = value
            argmax = [s]
        elif value == best_value:
            argmax.append(s)
    assert best_value is not None and argmax
    return OptimizationResult(value=best_value, strategy=argmax[0], argmax=tuple(argmax))
