"""Vectorized trial synthesis and detector-bank evaluation.

The Monte Carlo engine processes trials in fixed-size chunks. Within a
chunk every trial is synthesized from its own counter-based random
substream keyed by (master seed, phase, trial index), so results are
independent of chunk scheduling and worker count; the detector math is
then evaluated for the whole chunk with stacked array operations.

The per-candidate log-determinants of the joint rule come from determinant
updates of one pooled Gram matrix per trial instead of re-factoring every
candidate covariance; the update path is validated against the direct
factorization in :mod:`mosdet.detectors` by the test suite (agreement well
inside 1e-9 over the experimental SINR range).
"""

from functools import lru_cache

import numpy as np

from . import scenario
from .detectors import (
    _candidate_arrays,
    cell_sum_penalty,
    clairvoyant_normalized,
    joint_penalty,
)
from .errors import NotPositiveDefinite

CHUNK_TRIALS = 128

# Quantities an evaluation can ask for, beyond the always-returned truth.
_AMF_USERS = {
    "two_stage_amf_gic",
    "two_stage_joint_gic",
    "one_stage_amf_gic",
    "gamf",
    "amf_gic",
}
_AMF_SELECT_USERS = {"two_stage_amf_gic", "one_stage_amf_gic", "amf_gic"}
_JOINT_USERS = {"two_stage_joint_gic", "one_stage_joint_gic", "joint_gic"}


def trial_rng(master_seed, phase, index):
    """Counter-based generator for one trial of one phase."""
    key = np.array(
        [master_seed & 0xFFFFFFFFFFFFFFFF, (phase << 56) | index], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


@lru_cache(maxsize=8)
def _scenario_state(config):
    v = scenario.steering_vector(config.n_antennas, config.spatial_frequency)
    m = scenario.interference_covariance(config)
    u = np.linalg.solve(m.matrix, v)
    return {
        "v": v,
        "m": m,
        "clair_u": u,
        "clair_denom": float(np.vdot(v, u).real),
    }


def synthesize_chunk(config, phase, start, count, master_seed, sinr_db):
    """Synthesize ``count`` trials with indices start..start+count-1.

    Every trial draws its support first and its noise second from its own
    substream; ``sinr_db=None`` produces target-free data (the drawn
    support is still recorded for truth-aware detectors).
    """
    state = _scenario_state(config)
    n_a, n_p, n_k = config.n_antennas, config.n_pulses, config.n_training
    if sinr_db is None:
        alpha = 0.0 + 0.0j
    else:
        alpha = scenario.alpha_from_sinr(sinr_db, state["m"], state["v"])
    Z = np.empty((count, n_a, n_p), dtype=np.complex128)
    R = np.empty((count, n_a, n_k), dtype=np.complex128)
    l_true = np.empty(count, dtype=np.int64)
    h_true = np.empty(count, dtype=np.int64)
    for i in range(count):
        rng = trial_rng(master_seed, phase, start + i)
        support = scenario.draw_support(rng, n_p)
        trial = scenario.synthesize_trial(config, support, alpha, rng, m=state["m"])
        Z[i] = trial.Z
        R[i] = trial.R
        l_true[i] = support.l
        h_true[i] = support.h
    return Z, R, l_true, h_true


def evaluate_chunk(config, phase, start, count, master_seed, sinr_db, wanted):
    """Synthesize and score one chunk; returns per-trial arrays.

    ``wanted`` is an iterable of detector ids and/or selector ids. The
    result maps ``"stat:<detector>"`` to statistic arrays, ``"sel_l:<sel>"``
    and ``"sel_h:<sel>"`` to selected supports, and always carries the true
    supports under ``"l_true"`` / ``"h_true"``.
    """
    wanted = set(wanted)
    state = _scenario_state(config)
    v = state["v"]
    n_a, n_p, n_k = config.n_antennas, config.n_pulses, config.n_training
    total = n_p + n_k
    Z, R, l_true, h_true = synthesize_chunk(
        config, phase, start, count, master_seed, sinr_db
    )
    out = {"l_true": l_true, "h_true": h_true}
    _, firsts, lasts, hs = _candidate_arrays(n_p)

    need_amf = bool(wanted & _AMF_USERS)
    need_joint = bool(wanted & _JOINT_USERS)

    if (need_amf or need_joint) and n_k < n_a:
        raise NotPositiveDefinite(
            f"training Gram matrix is singular: {n_k} snapshots for {n_a} channels"
        )

    S = None
    if need_amf or need_joint:
        S = np.matmul(R, R.conj().transpose(0, 2, 1))

    if need_amf:
        try:
            u = np.linalg.solve(S, v)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"training Gram matrix: {exc}") from exc
        denom = np.einsum("a,ba->b", v.conj(), u).real
        t = np.abs(np.einsum("ba,bai->bi", u.conj(), Z)) ** 2 / denom[:, None]
        pref = np.concatenate([np.zeros((count, 1)), np.cumsum(t, axis=1)], axis=1)
        sums = pref[:, lasts + 1] - pref[:, firsts]
        if "gamf" in wanted:
            out["stat:gamf"] = pref[:, n_p].copy()
        if wanted & _AMF_SELECT_USERS:
            obj = -float(n_k) * sums + cell_sum_penalty(hs, config.gic_rho_two_step)
            idx = np.argmin(obj, axis=1)
            if "amf_gic" in wanted:
                out["sel_l:amf_gic"] = firsts[idx] + 1
                out["sel_h:amf_gic"] = hs[idx]
            if "two_stage_amf_gic" in wanted:
                out["stat:two_stage_amf_gic"] = sums[np.arange(count), idx]
            if "one_stage_amf_gic" in wanted:
                out["stat:one_stage_amf_gic"] = -obj[np.arange(count), idx]

    if need_joint:
        ld_mhat = _joint_logdet_table(Z, S, v, n_k)
        obj = 2.0 * total * ld_mhat + joint_penalty(hs, config.gic_rho_joint, n_a)
        idx = np.argmin(obj, axis=1)
        rows = np.arange(count)
        if "joint_gic" in wanted:
            out["sel_l:joint_gic"] = firsts[idx] + 1
            out["sel_h:joint_gic"] = hs[idx]
        if "two_stage_joint_gic" in wanted:
            out["stat:two_stage_joint_gic"] = sums[rows, idx]
        if "one_stage_joint_gic" in wanted:
            T = S + np.matmul(Z, Z.conj().transpose(0, 2, 1))
            ld_t = _stack_logdet(T)
            base = ld_t - n_a * np.log(total)
            out["stat:one_stage_joint_gic"] = base - obj[rows, idx] / (2.0 * total)

    if "clairvoyant" in wanted:
        u = state["clair_u"]
        t = (
            np.abs(np.einsum("a,bai->bi", u.conj(), Z)) ** 2
            / state["clair_denom"]
        )
        pref = np.concatenate([np.zeros((count, 1)), np.cumsum(t, axis=1)], axis=1)
        rows = np.arange(count)
        raw = pref[rows, l_true + h_true] - pref[rows, l_true - 1]
        out["stat:clairvoyant"] = clairvoyant_normalized(raw, h_true + 1)
    return out


def _stack_logdet(A):
    """log det of a stack of Hermitian positive-definite matrices."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"stacked factorization failed: {exc}") from exc
    d = np.einsum("...ii->...i", L).real
    return 2.0 * np.sum(np.log(d), axis=-1)


def _joint_logdet_table(Z, S, v, n_training):
    """log det of the pooled covariance estimate for every candidate.

    Let T = S + Z Z† be the pooled Gram matrix. For a candidate with
    occupied columns Ω, pooling the complement into the Gram matrix and
    replacing the occupied cells by their fitted residuals satisfies

        det((Np + K) M_c) = det(T) · q / (q + r_c)

    with q = v† T⁻¹ v and r_c = g_Ω† (I - H_ΩΩ)⁻¹ g_Ω, where g = Z† T⁻¹ v
    and H = Z† T⁻¹ Z (a push-through of the Woodbury identity; the
    candidate's fit can only shrink the determinant, so r_c >= 0).

    Since the supports are contiguous windows, one Cholesky factor of
    I - H[l:, l:] per start column delivers r_c for every extension at
    once: the prefix sums of |L⁻¹ g[l:]|² run over nested leading blocks.
    The test suite validates this update path against the direct
    per-candidate factorization in :mod:`mosdet.detectors`.
    """
    count, n_a, n_p = Z.shape
    T = S + np.matmul(Z, Z.conj().transpose(0, 2, 1))
    v_col = np.broadcast_to(v[None, :, None], (count, n_a, 1))
    rhs = np.concatenate([v_col, Z], axis=2)
    try:
        Yt = np.linalg.solve(T, rhs)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"pooled Gram matrix singular: {exc}") from exc
    y_v = Yt[:, :, 0]
    Y = Yt[:, :, 1:]
    q = np.einsum("a,ba->b", v.conj(), y_v).real
    g = np.einsum("bai,ba->bi", Z.conj(), y_v)
    H = np.einsum("bai,baj->bij", Z.conj(), Y)
    D = np.eye(n_p)[None] - H

    ld_t = _stack_logdet(T)
    base = ld_t + np.log(q) - n_a * np.log(n_p + n_training)
    table = np.empty((count, n_p * (n_p + 1) // 2))
    col = 0
    for li in range(n_p):
        w = n_p - li
        try:
            L = np.linalg.cholesky(D[:, li:, li:])
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(
                f"candidate Gram matrix singular: {exc}"
            ) from exc
        c = np.empty((count, w), dtype=np.complex128)
        c[:, 0] = g[:, li] / L[:, 0, 0].real
        for j in range(1, w):
            dot = np.einsum("bk,bk->b", L[:, j, :j], c[:, :j])
            c[:, j] = (g[:, li + j] - dot) / L[:, j, j].real
        r = np.cumsum(c.real**2 + c.imag**2, axis=1)
        table[:, col : col + w] = base[:, None] - np.log(q[:, None] + r)
        col += w
    return table
