"""SLOCC distillation maps and their closed-form outputs.

Two protocols act on a pair of identically prepared states:

- the parity-check protocol, where each party overlaps its two photons on a
  polarizing beam splitter, keeps same-polarization events, measures the
  second output in the X basis, and applies a phase flip when the recorded
  number of minus outcomes is odd;
- the CNOT protocol, where each party applies a CNOT between its two qubits
  and post-selects the ancilla on zero, which multiplies density-matrix
  entries elementwise.

Both are deterministic maps here: every post-selection branch is computed
exactly and summed, no sampling is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .states import (
    PAULI_Z,
    DegenerateProjectionError,
    DensityMatrix,
    PureState,
    _entries,
    apply_local,
    bloch_state,
    project_subsystem,
)

SUCCESS_FLOOR = 1e-14


class DistillationImpossibleError(ValueError):
    """Total post-selection weight vanished; no output state exists."""


@dataclass(frozen=True)
class DistillationOutcome:
    """Normalized output state with its post-selection bookkeeping.

    ``parity_branch_weights`` lists every kept measurement branch and its
    probability; the weights sum to ``success_probability``.
    """

    state: DensityMatrix
    success_probability: float
    parity_branch_weights: tuple[tuple[str, float], ...]


def pbs_projector() -> np.ndarray:
    """Two-photon parity projector |00><00| + |11><11|."""
    p = np.zeros((4, 4), dtype=np.complex128)
    p[0, 0] = 1.0
    p[3, 3] = 1.0
    return p


def parity_operators() -> tuple[np.ndarray, np.ndarray]:
    """Reduction operators (|0><00| +/- |1><11|)/sqrt(2).

    They are the parity projector composed with an X-basis measurement of
    the second photon: P_+ for outcome plus, P_- for outcome minus.
    Completeness: P_+^dag P_+ + P_-^dag P_- equals the parity projector.
    """
    plus = np.zeros((2, 4), dtype=np.complex128)
    minus = np.zeros((2, 4), dtype=np.complex128)
    plus[0, 0] = plus[1, 3] = 1.0 / np.sqrt(2.0)
    minus[0, 0] = 1.0 / np.sqrt(2.0)
    minus[1, 3] = -1.0 / np.sqrt(2.0)
    return plus, minus


def _interleaved_copy_pair(rho1, rho2) -> tuple[np.ndarray, int]:
    """Tensor two copies and reorder qubits so each party's pair is adjacent.

    Input order is (copy-1 qubits, copy-2 qubits); output order is
    (party-0 pair, party-1 pair, ...), with the copy-1 qubit first in each
    pair (that is the photon each party keeps).
    """
    m1, n1 = _entries(rho1)
    m2, n2 = _entries(rho2)
    if n1 != n2:
        raise ValueError(f"qubit counts differ: {n1} vs {n2}")
    joint = np.kron(m1, m2)
    n = 2 * n1
    perm = [i // 2 if i % 2 == 0 else n1 + i // 2 for i in range(n)]
    t = joint.reshape((2,) * (2 * n))
    t = t.transpose(perm + [n + i for i in perm])
    return t.reshape(joint.shape), n1


def distill_tripartite(rho1, rho2) -> DistillationOutcome:
    """Parity-check distillation of two three-qubit states.

    All eight X-measurement branches are evaluated; odd-minus branches get a
    phase flip on the first party's kept qubit before the branches are
    summed and normalized.
    """
    joint, n_parties = _interleaved_copy_pair(rho1, rho2)
    if n_parties != 3:
        raise ValueError(f"expected three-qubit inputs, got {n_parties} qubits")
    plus, minus = parity_operators()
    correction = np.kron(PAULI_Z, np.eye(4, dtype=np.complex128))

    branches = []
    total = np.zeros((8, 8), dtype=np.complex128)
    for signs in product((+1, -1), repeat=3):
        k = np.array([[1.0]], dtype=np.complex128)
        for s in signs:
            k = np.kron(k, plus if s > 0 else minus)
        out = k @ joint @ k.conj().T
        if signs.count(-1) % 2 == 1:
            out = correction @ out @ correction.conj().T
        weight = float(np.trace(out).real)
        label = "".join("+" if s > 0 else "-" for s in signs)
        branches.append((label, weight))
        total += out

    success = float(np.trace(total).real)
    if success < SUCCESS_FLOOR:
        raise DistillationImpossibleError(
            f"post-selection weight {success:.3e} below {SUCCESS_FLOOR:.1e}")
    return DistillationOutcome(
        state=DensityMatrix(3, total / success),
        success_probability=success,
        parity_branch_weights=tuple(branches),
    )


def distill_cnot(rho1, rho2) -> DistillationOutcome:
    """CNOT-based distillation keeping only all-zero ancilla outcomes.

    Each party applies |0><00| + |1><11| to its ordered (kept, measured)
    pair, so the unnormalized output entries are the elementwise products of
    the two input matrices.
    """
    joint, n_parties = _interleaved_copy_pair(rho1, rho2)
    p0 = np.zeros((2, 4), dtype=np.complex128)
    p0[0, 0] = p0[1, 3] = 1.0
    k = np.array([[1.0]], dtype=np.complex128)
    for _ in range(n_parties):
        k = np.kron(k, p0)
    out = k @ joint @ k.conj().T
    success = float(np.trace(out).real)
    if success < SUCCESS_FLOOR:
        raise DistillationImpossibleError(
            f"post-selection weight {success:.3e} below {SUCCESS_FLOOR:.1e}")
    label = "0" * n_parties
    return DistillationOutcome(
        state=DensityMatrix(n_parties, out / success),
        success_probability=success,
        parity_branch_weights=((label, success),),
    )


def localize(rho, measured_qubit: int, basis: str,
             outcome: int) -> tuple[DensityMatrix, float]:
    """Project one qubit onto a basis state and return the two-qubit remainder.

    ``basis`` is ``"x"`` or ``"computational"``; ``outcome`` 0/1 selects
    plus/minus respectively zero/one.  The minus branch of an X measurement
    gets a phase-flip correction on the first remaining qubit, so both
    branches localize toward the same target state.
    """
    key = basis.lower()
    if key == "x":
        psi = bloch_state(np.pi / 4.0, 0.0 if outcome == 0 else np.pi)
    elif key in ("computational", "z"):
        psi = PureState(1, np.array([1.0, 0.0]) if outcome == 0
                        else np.array([0.0, 1.0]))
    else:
        raise ValueError(f"unknown basis {basis!r}; use 'x' or 'computational'")
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    try:
        state, weight = project_subsystem(rho, psi, (measured_qubit,),
                                          normalize=True)
    except DegenerateProjectionError as exc:
        raise DegenerateProjectionError(f"zero-weight branch: {exc}") from exc
    if key == "x" and outcome == 1:
        state = apply_local(state, PAULI_Z, 0)
    return state, weight


def analytic_distilled_noisy_ghz(p: float) -> DensityMatrix:
    """Closed-form parity-check output for two copies of the noisy GHZ state.

    Serves as the independent oracle for :func:`distill_tripartite`.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    norm = 3.0 * p * p + 1.0
    m = np.zeros((8, 8), dtype=np.complex128)
    corner = (3.0 * p + 1.0) ** 2 / 8.0
    middle = (1.0 - p) ** 2 / 8.0
    for i in range(8):
        m[i, i] = corner if i in (0, 7) else middle
    m[0, 7] = m[7, 0] = 2.0 * p * p
    return DensityMatrix(3, m / norm)


def analytic_fidelity_after(p: float) -> float:
    """GHZ fidelity of the distilled noisy GHZ state: (25p^2+6p+1)/(24p^2+8)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    return (25.0 * p * p + 6.0 * p + 1.0) / (24.0 * p * p + 8.0)


def component_fidelity_update(component_fidelities) -> np.ndarray:
    """One distillation round on the eight GHZ-component proportions.

    Input order is (plus, minus) for each bit pattern 0..3.  Only pairs with
    matching bit patterns survive the parity check; matching phases produce
    the plus component and opposite phases the minus component.  The result
    is renormalized by the total survival probability.
    """
    f = np.asarray(component_fidelities, dtype=float).reshape(-1)
    if f.shape != (8,):
        raise ValueError(f"expected 8 component fidelities, got {f.shape}")
    if abs(f.sum() - 1.0) > 1e-9:
        raise ValueError(f"component fidelities sum to {f.sum()!r}, not 1")
    plus, minus = f[0::2], f[1::2]
    new_plus = plus ** 2 + minus ** 2
    new_minus = 2.0 * plus * minus
    survival = float((plus + minus).dot(plus + minus))
    if survival < SUCCESS_FLOOR:
        raise DistillationImpossibleError("all components have zero survival")
    out = np.empty(8)
    out[0::2] = new_plus / survival
    out[1::2] = new_minus / survival
    return out
