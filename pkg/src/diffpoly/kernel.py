"""Reproducing kernel e(x, y, n) of P_n, the Christoffel function and the
comparison with the Euclidean ball profile.

The kernel is taken with respect to the normalized measure, so that
e(x, x, n) = sum_k phi_k(x)^2 integrates to N.  The Euclidean comparison term
therefore carries the Riemannian volume: vol(M) * Phi_d(n d(x, y)) * n^d.
"""

from __future__ import annotations

import math

import numpy as np

from .bessel import phi_d, phi_d_vec
from .errors import InvalidArgument
from .manifold import Sphere2, Torus
from .spectrum import SpectralSpace, check_points, evaluate_basis, sphere_max_degree


def _pair(s: SpectralSpace, x, y):
    x = check_points(s, x)
    y = check_points(s, y)
    if len(x) != len(y) and len(x) != 1 and len(y) != 1:
        raise InvalidArgument("x and y must have matching lengths or be single points")
    return x, y


def kernel_eval(s: SpectralSpace, x, y):
    """e(x, y, n) by direct summation over the basis."""
    single = np.ndim(x) == 1 and np.ndim(y) == 1
    x, y = _pair(s, x, y)
    bx = evaluate_basis(s, x)
    by = evaluate_basis(s, y)
    out = np.sum(bx * by, axis=1)
    return float(out[0]) if single else out


def kernel_diagonal(s: SpectralSpace, x):
    single = np.ndim(x) == 1
    b = evaluate_basis(s, x)
    out = np.sum(b * b, axis=1)
    return float(out[0]) if single else out


def christoffel(s: SpectralSpace, x):
    """Lambda(x) = 1 / e(x, x, n)."""
    diag = kernel_diagonal(s, x)
    return 1.0 / diag


def christoffel_variational(s: SpectralSpace, x, grid_points, grid_weights) -> float:
    """min ||p||_2^2 over p in P_n with p(x) = 1, by a dense constrained solve.

    ``grid_points``/``grid_weights`` must integrate products of P_n exactly;
    the Gram matrix G then defines ||p||_2^2 = c^T G c, and the minimizer of
    c^T G c subject to b^T c = 1 has value 1 / (b^T G^{-1} b).
    """
    b = evaluate_basis(s, np.atleast_2d(x))[0]
    basis = evaluate_basis(s, grid_points)
    gram = basis.T @ (grid_weights[:, None] * basis)
    kkt = np.zeros((s.N + 1, s.N + 1))
    kkt[: s.N, : s.N] = 2.0 * gram
    kkt[: s.N, s.N] = b
    kkt[s.N, : s.N] = b
    rhs = np.zeros(s.N + 1)
    rhs[s.N] = 1.0
    sol = np.linalg.solve(kkt, rhs)
    c = sol[: s.N]
    return float(c @ gram @ c)


def kernel_closed_form(s: SpectralSpace, x, y):
    """Closed forms used as oracles: Dirichlet kernel on T^1, addition theorem on S^2."""
    x, y = _pair(s, x, y)
    m = s.manifold
    if isinstance(m, Torus) and m.d == 1:
        r = s.degree_bound
        u = (x - y)[:, 0]
        half = np.sin(u / 2.0)
        out = np.empty_like(u)
        small = np.abs(half) < 1e-12
        out[~small] = np.sin((r + 0.5) * u[~small]) / half[~small]
        out[small] = 2 * r + 1
        return out
    if isinstance(m, Sphere2):
        lmax = sphere_max_degree(s.n)
        t = np.clip(np.sum(x * y, axis=1), -1.0, 1.0)
        # sum (2l+1) P_l(t) with the three-term recurrence
        p_prev, p_cur = np.ones_like(t), t
        total = np.ones_like(t)
        if lmax >= 1:
            total = total + 3.0 * t
        for ell in range(1, lmax):
            p_next = ((2 * ell + 1) * t * p_cur - ell * p_prev) / (ell + 1)
            total = total + (2 * ell + 3) * p_next
            p_prev, p_cur = p_cur, p_next
        return total
    raise InvalidArgument(f"no closed form kernel for {m.name}")


def euclidean_profile_term(s: SpectralSpace, dist) -> np.ndarray:
    """vol(M) * Phi_d(n * dist) * n^d, the leading term of the kernel."""
    dist = np.asarray(dist, float)
    return s.manifold.volume * phi_d_vec(s.d, s.n * dist) * s.n**s.d


def asymptotic_residual(s: SpectralSpace, x, y):
    """n^{-(d-1)} |e(x, y, n) - vol(M) Phi_d(n d(x, y)) n^d|."""
    single = np.ndim(x) == 1 and np.ndim(y) == 1
    if s.n < 1:
        raise InvalidArgument("asymptotic residual needs n >= 1")
    e = np.atleast_1d(kernel_eval(s, x, y))
    dist = np.atleast_1d(s.manifold.distance(x, y))
    out = np.abs(e - euclidean_profile_term(s, dist)) / s.n ** (s.d - 1)
    return float(out[0]) if single else out


def kernel_decay_constant(d: int, t0: float, t_max: float, samples: int = 4000) -> float:
    """sup_{t0 <= t <= t_max} |Phi_d(t)| t^{(d+1)/2}; the tail constant of Phi_d."""
    t = np.linspace(t0, t_max, samples)
    vals = np.abs(np.array([phi_d(d, v) for v in t])) * t ** ((d + 1) / 2.0)
    return float(vals.max())
