"""Independent reference computations used by the tests.

Nothing here calls into the package's operator, decomposition or solver
code; each oracle is written from the defining formulas with plain loops.
"""

import itertools

import numpy as np

FOUR = [(1, 0), (0, 1), (1, 1), (1, -1)]


def four_point_split(a):
    """Max-min split of a 2x2 matrix on {e1, e2, e1+e2, e1-e2}, closed form.

    With ``s = a3 + a4`` the coefficients are ``a11 - s``, ``a22 - s``,
    ``(s + a12) / 2`` and ``(s - a12) / 2``; the smallest of them is
    maximal where ``min(a11, a22) - s = (s - |a12|) / 2``.
    """
    a11, a22, a12 = a[0][0], a[1][1], a[0][1]
    s = (2 * min(a11, a22) + abs(a12)) / 3
    return [a11 - s, a22 - s, (s + a12) / 2, (s - a12) / 2]


def qp_enum(E, r, t):
    """``argmin |a|^2 / 2`` subject to ``E a = r``, ``a >= t``, by active-set enumeration.

    For every candidate active set the coefficients outside it take the
    minimum-norm solution of the remaining equations; the best feasible
    candidate is the optimum, since the optimum's own active set is among them.
    """
    m, n = E.shape
    best = None
    for k in range(n + 1):
        for S in itertools.combinations(range(n), k):
            free = [j for j in range(n) if j not in S]
            a = np.full(n, float(t))
            rhs = r - E[:, list(S)].sum(axis=1) * t if S else np.array(r, dtype=float)
            if free:
                Ef = E[:, free]
                a[free] = Ef.T @ np.linalg.pinv(Ef @ Ef.T) @ rhs
            if np.abs(E @ a - r).max() > 1e-9 or a.min() < t - 1e-12:
                continue
            if best is None or a @ a < best @ best - 1e-15:
                best = a
    return best


def lp_maxmin_enum(E, r):
    """Max over ``a`` with ``E a = r`` of ``min_k a_k``, by brute-force vertex enumeration.

    Independent of the package: every choice of ``m - 1`` coefficients free
    (the rest tied at ``t``) is solved with ``numpy.linalg.solve``.
    """
    m, n = E.shape
    best = -np.inf
    for S in itertools.combinations(range(n), m - 1):
        B = np.column_stack([E.sum(axis=1)] + [E[:, j] for j in S])
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        z = np.linalg.solve(B, r)
        if np.all(z[1:] >= -1e-12):
            best = max(best, z[0])
    return best


def direction_matrix(stencil):
    return np.array([[l[i] * l[j] for l in stencil] for i, j in ((0, 0), (0, 1), (1, 1))], dtype=float)


def pair_value(u, pt, h, a, b, c, f):
    """``L_h u + f`` at lattice point ``pt`` for the 4-vector stencil, from the definitions.

    ``u`` maps integer coordinates to values.
    """
    ak = four_point_split(a)
    x0 = u[pt]
    total = 0.0
    for k, l in enumerate(FOUR):
        up = u[(pt[0] + l[0], pt[1] + l[1])]
        um = u[(pt[0] - l[0], pt[1] - l[1])]
        total += ak[k] * (up - 2 * x0 + um) / h ** 2
    for i, e in enumerate(((1, 0), (0, 1))):
        if b[i] > 0:
            total += b[i] * (u[(pt[0] + e[0], pt[1] + e[1])] - x0) / h
        elif b[i] < 0:
            total += -b[i] * (u[(pt[0] - e[0], pt[1] - e[1])] - x0) / h
    return total - c * x0 + f


def brute_Fh(u, pt, h, table):
    """``max_alpha min_beta`` of ``pair_value`` with ``table[i][j] = (a, b, c, f)``."""
    return max(min(pair_value(u, pt, h, *entry) for entry in row) for row in table)


def dense_linear_solve(points, interior, h, a, b, c, f, g):
    """Assemble and solve the linear scheme densely; returns a dict coordinate -> value."""
    idx = {p: n for n, p in enumerate(interior)}
    N = len(interior)
    M = np.zeros((N, N))
    rhs = np.zeros(N)
    for n, p in enumerate(interior):
        # probe the affine map u -> L_h u + f one column at a time
        base = {q: 0.0 for q in points}
        for q in points:
            if q not in idx:
                base[q] = g[q]
        v0 = pair_value(base, p, h, a(p), b(p), c(p), f(p))
        rhs[n] = -v0
        for q in interior:
            e = dict(base)
            e[q] = 1.0
            M[n, idx[q]] = pair_value(e, p, h, a(p), b(p), c(p), f(p)) - v0
    sol = np.linalg.solve(M, rhs)
    out = dict(g)
    for p, n in idx.items():
        out[p] = sol[n]
    return out


def value_iteration(points, interior, h, table_at, g, tau, tol=1e-15, max_steps=10_000_000):
    """Explicit iteration ``u <- u + tau F_h[u]`` until the update stagnates."""
    u = {q: (g[q] if q not in interior else 0.0) for q in points}
    for step in range(max_steps):
        upd = {p: tau * brute_Fh(u, p, h, table_at(p)) for p in interior}
        change = max(abs(v) for v in upd.values())
        for p, v in upd.items():
            u[p] += v
        if change <= tol:
            break
    return u, step


def pucci_box_corners(d2, lo, hi):
    """``max`` over corners ``q_k in {lo_k, hi_k}`` of ``sum_k q_k d2_k``."""
    best = -np.inf
    for choice in itertools.product((0, 1), repeat=len(d2)):
        q = [hi[k] if choice[k] else lo[k] for k in range(len(d2))]
        best = max(best, sum(qk * dk for qk, dk in zip(q, d2)))
    return best
