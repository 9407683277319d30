"""Phonon exchange between the two wells.

Two layers: the exact two-mode quantum evolution under the excitation-
conserving exchange Hamiltonian -hbar*(Omega_c/2)*(a1*a2^dag + a1^dag*a2),
and the phenomenological damped/heated mean-phonon trace observed when the
exchange runs against background heating.

The unitary exp(+i*(Omega_c*t/2)*(a1*a2^dag + a1^dag*a2)) is a two-mode
beam splitter: it mixes amplitudes only within manifolds of constant total
phonon number n1+n2, with binomial transfer amplitudes that are evaluated
here in closed form (no numerical integration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class CutoffError(ValueError):
    """The Fock-space cutoff cannot hold the state."""


def default_cutoff(n1: int, n2: int) -> int:
    """Cutoff rule for a basis state: twice the largest occupied level plus 4.

    The exchange conserves n1+n2, so a state in manifold M never needs
    indices above M; this rule always satisfies that with headroom.
    """
    return 2 * max(n1, n2) + 4


@dataclass(frozen=True)
class FockState:
    """Two-mode state as a complex amplitude tensor indexed (n1, n2)."""

    amplitudes: np.ndarray
    cutoff: int

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.cutoff + 1, self.cutoff + 1):
            raise ValueError("amplitude tensor must be (cutoff+1, cutoff+1)")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, n1: int, n2: int, cutoff: int | None = None) -> "FockState":
        """The number state |n1, n2>."""
        if n1 < 0 or n2 < 0:
            raise ValueError("occupations must be non-negative")
        if cutoff is None:
            cutoff = default_cutoff(n1, n2)
        if max(n1, n2) > cutoff:
            raise CutoffError("cutoff too small to hold the initial state")
        amp = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        amp[n1, n2] = 1.0
        return cls(amplitudes=amp, cutoff=cutoff)

    def fidelity(self, other: "FockState") -> float:
        """|<other|self>|^2 (cutoffs may differ; overlap on the common block)."""
        n = min(self.cutoff, other.cutoff) + 1
        overlap = np.vdot(other.amplitudes[:n, :n], self.amplitudes[:n, :n])
        return float(abs(overlap) ** 2)


@dataclass(frozen=True)
class ExchangeModel:
    """Parameters of the damped, heated mean-phonon oscillation.

    n1_0 and n2_0 are the initial mean phonon numbers of the two wells,
    omega_c the exchange rate in rad/s, tau_damp the contrast decay time and
    gamma_h a constant background heating rate in quanta/s.
    """

    n1_0: float
    n2_0: float
    omega_c: float
    tau_damp: float
    gamma_h: float

    def __post_init__(self):
        if self.n1_0 < 0 or self.n2_0 < 0:
            raise ValueError("initial phonon numbers must be non-negative")
        if self.tau_damp <= 0:
            raise ValueError("tau_damp must be positive")
        if self.gamma_h < 0:
            raise ValueError("gamma_h must be non-negative")


def _beam_splitter_block(manifold: int, theta: float) -> np.ndarray:
    """Unitary on the (manifold+1)-dimensional subspace n1+n2 = manifold.

    Closed-form matrix elements of exp(i*theta*(a1*a2^dag + a1^dag*a2)):
    B[k, n] = sqrt(k!(M-k)!/(n!(M-n)!)) * sum_j C(n,j) C(M-n, k-j)
              * cos(theta)^(2j+M-n-k) * (i sin(theta))^(n+k-2j).
    """
    m = manifold
    c = math.cos(theta)
    s = math.sin(theta)
    fact = [math.factorial(k) for k in range(m + 1)]
    block = np.zeros((m + 1, m + 1), dtype=complex)
    for n in range(m + 1):
        for k in range(m + 1):
            pref = math.sqrt(fact[k] * fact[m - k] / (fact[n] * fact[m - n]))
            acc = 0.0 + 0.0j
            for j in range(max(0, n + k - m), min(n, k) + 1):
                acc += (math.comb(n, j) * math.comb(m - n, k - j)
                        * c ** (2 * j + m - n - k)
                        * (1j * s) ** (n + k - 2 * j))
            block[k, n] = pref * acc
    return block


def evolve_fock(state: FockState, omega_c: float, t: float) -> FockState:
    """Evolve a two-mode state for time t under the exchange coupling.

    Exact per-manifold rotation by theta = omega_c*t/2; total phonon number
    is conserved identically. Raises CutoffError if the state occupies a
    manifold the tensor cannot rotate within.
    """
    amp = state.amplitudes
    cutoff = state.cutoff
    tol = 1e-12
    for n1 in range(cutoff + 1):
        for n2 in range(cutoff + 1 - n1, cutoff + 1):
            if abs(amp[n1, n2]) > tol:
                raise CutoffError(
                    f"state occupies |{n1},{n2}> beyond manifold {cutoff}; "
                    "increase the cutoff")
    theta = omega_c * t / 2.0
    out = np.array(amp, dtype=complex, copy=True)
    for manifold in range(1, cutoff + 1):
        idx_n1 = np.arange(manifold + 1)
        idx_n2 = manifold - idx_n1
        vec = amp[idx_n1, idx_n2]
        if not np.any(vec):
            continue
        out[idx_n1, idx_n2] = _beam_splitter_block(manifold, theta) @ vec
    return FockState(amplitudes=out, cutoff=cutoff)


def mean_phonons(state: FockState):
    """Expectation values (<n1>, <n2>)."""
    prob = np.abs(state.amplitudes) ** 2
    levels = np.arange(state.cutoff + 1)
    return (float(np.sum(prob * levels[:, None])),
            float(np.sum(prob * levels[None, :])))


def bell_fidelity(state: FockState) -> float:
    """Overlap with (|0,1> + i|1,0>)/sqrt(2), the state the exchange creates
    from |0,1> after half a swap. The +i phase is this package's convention,
    fixed by the sign of the evolution exp(+i*(Omega_c*t/2)*(...))."""
    amp = state.amplitudes
    overlap = (amp[0, 1] - 1j * amp[1, 0]) / math.sqrt(2.0)
    return float(abs(overlap) ** 2)


def exchange_trace(model: ExchangeModel, taus) -> np.ndarray:
    """Mean phonon number in well 1 after waiting time tau.

    <n1>(tau) = nbar + (dn/2)*cos(Omega_c*tau)*exp(-tau/tau_damp)
                + gamma_h*tau
    with nbar = (n1_0+n2_0)/2 and dn = n1_0-n2_0. The damping multiplies
    only the oscillatory contrast; heating adds linearly.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise ValueError("waiting times must be non-negative")
    # evaluated as n1_0*(1+c)/2 + n2_0*(1-c)/2 so tau=0 returns n1_0 exactly
    contrast = np.cos(model.omega_c * taus) * np.exp(-taus / model.tau_damp)
    out = (model.n1_0 * (1.0 + contrast) / 2.0
           + model.n2_0 * (1.0 - contrast) / 2.0
           + model.gamma_h * taus)
    return float(out) if out.ndim == 0 else out
