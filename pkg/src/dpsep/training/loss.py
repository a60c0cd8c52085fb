"""Scale-invariant SNR and utterance-level permutation-invariant objectives.

SI-SNR of an estimate against a reference: remove both means, project the
estimate onto the reference, and compare target vs residual energy in dB.
The estimate is rescaled to unit norm first (a mathematical no-op for a
scale-invariant ratio) so the numeric result is identical for any positive
rescaling of the input; 1e-8 is added to both energies to keep identical and
orthogonal pairs finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .. import numerics as nt
from ..numerics import NumericsError, ShapeError, Tensor

SI_SNR_EPS = 1e-8
_LOG10 = float(np.log(10.0))


def si_snr(est, ref, eps=SI_SNR_EPS):
    """SI-SNR in dB of est (T,) against ref (T,), as a differentiable scalar."""
    if est.shape != ref.shape or est.data.ndim != 1:
        raise ShapeError(f"si_snr: need matching 1-D signals, got {est.shape} vs {ref.shape}")
    ref_zm = nt.sub(ref, nt.tmean(ref))
    ref_energy = nt.tsum(nt.mul(ref_zm, ref_zm))
    if float(ref_energy.data) == 0.0:
        raise NumericsError("si_snr: reference has zero energy after mean removal")
    est_zm = nt.sub(est, nt.tmean(est))
    est_energy = nt.tsum(nt.mul(est_zm, est_zm))
    if float(est_energy.data) > 0.0:
        est_zm = nt.div(est_zm, nt.sqrt(est_energy))
    proj = nt.div(nt.tsum(nt.mul(est_zm, ref_zm)), ref_energy)
    target = nt.mul(ref_zm, proj)
    residual = nt.sub(est_zm, target)
    target_energy = nt.add(nt.tsum(nt.mul(target, target)), eps)
    residual_energy = nt.add(nt.tsum(nt.mul(residual, residual)), eps)
    ratio_log = nt.sub(nt.log(target_energy), nt.log(residual_energy))
    return nt.mul(ratio_log, 10.0 / _LOG10)


@dataclass
class PermutationResult:
    """Best source-to-reference assignment and its per-source SI-SNR values."""

    best_perm: tuple  # ref index assigned to each estimate index
    per_source_db: list
    mean_db: float


def upit_loss(est, ref):
    """Utterance-level PIT: maximize mean SI-SNR over all C! assignments.

    est, ref: (C, T). Returns (loss, PermutationResult) where loss is the
    differentiable scalar -max_perm mean_c si_snr(est[c], ref[perm[c]]).
    Ties break toward the lexicographically smallest permutation.
    """
    if est.shape != ref.shape or est.data.ndim != 2:
        raise ShapeError(f"upit_loss: need matching (C, T), got {est.shape} vs {ref.shape}")
    num_sources = est.shape[0]
    if num_sources > 6:
        raise ShapeError(
            f"upit_loss: exhaustive search supports at most 6 sources, got {num_sources}"
        )
    pair = [
        [
            si_snr(nt.index_axis0(est, a), nt.index_axis0(ref, b))
            for b in range(num_sources)
        ]
        for a in range(num_sources)
    ]
    best_perm = None
    best_value = -np.inf
    for perm in permutations(range(num_sources)):
        value = sum(float(pair[a][b].data) for a, b in enumerate(perm)) / num_sources
        if value > best_value:
            best_value = value
            best_perm = perm
    chosen = [pair[a][b] for a, b in enumerate(best_perm)]
    total = chosen[0]
    for term in chosen[1:]:
        total = nt.add(total, term)
    loss = nt.neg(nt.mul(total, 1.0 / num_sources))
    result = PermutationResult(
        best_perm=best_perm,
        per_source_db=[float(t.data) for t in chosen],
        mean_db=best_value,
    )
    return loss, result


def si_snr_value(est, ref):
    """Non-tape convenience: SI-SNR in dB of two 1-D numpy arrays."""
    return float(si_snr(Tensor(est, dtype=np.float64), Tensor(ref, dtype=np.float64)).data)


def mixture_si_snr(mixture, refs):
    """Mean SI-SNR of the unprocessed mixture against each reference (floats)."""
    mix = np.asarray(mixture, dtype=np.float64).reshape(-1)
    refs = np.asarray(refs, dtype=np.float64)
    return float(np.mean([si_snr_value(mix, refs[c]) for c in range(refs.shape[0])]))


def upit_si_snri(est, refs, mixture):
    """uPIT-aligned SI-SNR improvement over the mixture, in dB (floats)."""
    est_t = Tensor(np.asarray(est, dtype=np.float64))
    ref_t = Tensor(np.asarray(refs, dtype=np.float64))
    _, result = upit_loss(est_t, ref_t)
    return result.mean_db - mixture_si_snr(mixture, refs), result


def plain_snr(est, ref, eps=SI_SNR_EPS):
    """Plain (scale-sensitive) SNR in dB: ref energy over residual energy."""
    est = np.asarray(est, dtype=np.float64).reshape(-1)
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    num = float(ref @ ref) + eps
    den = float((ref - est) @ (ref - est)) + eps
    return 10.0 * np.log10(num / den)
