"""Compiled trajectory loop used by sweeps.

Mirrors :func:`shared_naming.model.negotiate_step` draw for draw; see the
module docstring there for the stream layout. Each agent can be empty at
most once (a collapse always keeps one word), so at most ``N`` words are
ever minted and every id fits below ``C + N``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _collapse(mem, lens, counts, agent, word):
    removed = 0
    for k in range(lens[agent]):
        w = mem[agent, k]
        if w != word:
            counts[w] -= 1
            if counts[w] == 0:
                removed += 1
    dropped = lens[agent] - 1
    mem[agent, 0] = word
    lens[agent] = 1
    return dropped, removed


@njit(cache=True)
def run_trajectory(rng, n, lam, c, max_steps, stride, want_series, collapse_on_miss):
    cap = c + n
    mem = np.empty((n, cap), dtype=np.int64)
    lens = np.zeros(n, dtype=np.int64)
    counts = np.zeros(cap, dtype=np.int64)
    next_id = c
    n_w = 0
    n_d = 0
    max_nw = 0
    t_max_nw = 0
    max_nd = 0
    t_max_nd = 0

    n_slots = max_steps // stride + 2 if want_series else 0
    series = np.zeros((n_slots, 4), dtype=np.int64)
    n_rows = 0

    t = 0
    converged = False
    s = 0
    while t < max_steps:
        speaker = int(rng.random() * n)
        hearer = int(rng.random() * (n - 1))
        if hearer >= speaker:
            hearer += 1

        ls = lens[speaker]
        if ls > 0:
            word = mem[speaker, int(rng.random() * ls)]
        else:
            if rng.random() < lam:
                word = int(rng.random() * c)
            else:
                word = next_id
                next_id += 1
            mem[speaker, 0] = word
            lens[speaker] = 1
            if counts[word] == 0:
                n_d += 1
            counts[word] += 1
            n_w += 1
        t += 1

        found = False
        lh = lens[hearer]
        for k in range(lh):
            if mem[hearer, k] == word:
                found = True
                break

        if not found:
            s = 0
            mem[hearer, lh] = word
            lens[hearer] = lh + 1
            if counts[word] == 0:
                n_d += 1
            counts[word] += 1
            n_w += 1
        else:
            s = 1
            if rng.random() < lam:
                collapse = word < c or collapse_on_miss
            else:
                collapse = True
            if collapse:
                d1, r1 = _collapse(mem, lens, counts, speaker, word)
                d2, r2 = _collapse(mem, lens, counts, hearer, word)
                n_w -= d1 + d2
                n_d -= r1 + r2

        if n_w > max_nw:
            max_nw = n_w
            t_max_nw = t
        if n_d > max_nd:
            max_nd = n_d
            t_max_nd = t

        converged = n_w == n and n_d == 1
        if want_series and (t % stride == 0 or converged or t == max_steps):
            series[n_rows, 0] = t
            series[n_rows, 1] = n_w
            series[n_rows, 2] = n_d
            series[n_rows, 3] = s
            n_rows += 1
        if converged:
            break

    consensus = mem[0, 0] if converged else -1
    return (t, converged, consensus, max_nd, t_max_nd, max_nw, t_max_nw,
            next_id - c, series[:n_rows].copy())
