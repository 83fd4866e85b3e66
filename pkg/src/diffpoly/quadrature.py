"""Product quadrature grids and fast synthesis of polynomials on them.

A ``ProductGrid`` of degree D integrates exactly:
  torus  every trigonometric polynomial whose frequency components are <= D
         (D + 1 equispaced nodes per axis);
  sphere every spherical polynomial of degree <= D (ceil((D+1)/2)
         Gauss-Legendre nodes in cos(theta), D + 1 equispaced azimuths).

``GridTransform`` maps coefficient batches to grid values (FFT on the torus,
Legendre table plus FFT along the azimuth on the sphere) and back through the
weighted adjoint, which for an exact grid is the L2 projection onto P_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, InvalidArgument
from .manifold import TWO_PI, Manifold, Sphere2, Torus, sphere_points
from .spectrum import COS, CONST, SIN, SQRT2, SpectralSpace, evaluate_basis, legendre_table


@dataclass(frozen=True, eq=False)
class ProductGrid:
    manifold: Manifold
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise DomainError("grid degree must be >= 0")

    @property
    def shape(self) -> tuple[int, ...]:
        if isinstance(self.manifold, Torus):
            return (self.degree + 1,) * self.manifold.d
        return (self.degree // 2 + 1, self.degree + 1)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @cached_property
    def _gauss(self):
        return leggauss(self.shape[0])

    @cached_property
    def nodes(self) -> np.ndarray:
        if isinstance(self.manifold, Torus):
            k = self.shape[0]
            axis = TWO_PI * np.arange(k) / k
            mesh = np.meshgrid(*([axis] * self.manifold.d), indexing="ij")
            return np.stack([g.ravel() for g in mesh], axis=-1)
        x, _ = self._gauss
        phi = TWO_PI * np.arange(self.shape[1]) / self.shape[1]
        return sphere_points(x[:, None], phi[None, :]).reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        if isinstance(self.manifold, Torus):
            return np.full(self.size, 1.0 / self.size)
        _, w = self._gauss
        return np.repeat(w / 2.0, self.shape[1]) / self.shape[1]

    @property
    def spacing(self) -> float:
        """Largest node spacing along a coordinate direction."""
        if isinstance(self.manifold, Torus):
            return TWO_PI / self.shape[0]
        return max(math.pi / self.shape[0], TWO_PI / self.shape[1])

    def exact_for_power(self, s: SpectralSpace, p: float) -> bool:
        """Whether |P|^p is integrated exactly for every P in s."""
        if p != int(p) or int(p) % 2:
            return False
        return self.degree >= int(p) * s.degree_bound

    def refined(self) -> "ProductGrid":
        """Next grid of a convergence study: 2K + 1 nodes per axis for K.

        Doubling to 2K would reuse every old node, and for integrands with
        only even harmonics (|cos|, say) both grids alias identically.
        """
        return ProductGrid(self.manifold, 2 * self.degree + 2)


def grid_for(space: SpectralSpace, degree: int) -> ProductGrid:
    """Grid of at least ``degree``, large enough to resolve the space."""
    degree = max(int(degree), 2 * space.degree_bound + 1, 1)
    return ProductGrid(space.manifold, degree)


class GridTransform:
    """Synthesis and weighted adjoint between coefficients of ``space`` and ``grid``."""

    def __init__(self, space: SpectralSpace, grid: ProductGrid):
        if type(space.manifold) is not type(grid.manifold) or space.d != grid.manifold.dim:
            raise InvalidArgument("grid and space live on different manifolds")
        self.space = space
        self.grid = grid
        if isinstance(space.manifold, Torus):
            self._setup_torus()
        else:
            if grid.shape[1] <= 2 * space.degree_bound:
                raise InvalidArgument("azimuthal resolution too small for the space")
            self._setup_sphere()

    # -- torus ------------------------------------------------------------
    def _setup_torus(self):
        s = self.space
        k = self.grid.shape[0]
        d = s.d
        tags = s.labels[:, -1]
        freqs = s.labels[:, :-1]
        idx = np.mod(freqs, k)
        self._flat = np.ravel_multi_index(tuple(idx.T), (k,) * d)
        self._flat_neg = np.ravel_multi_index(tuple(np.mod(-freqs, k).T), (k,) * d)
        self._const = np.flatnonzero(tags == CONST)
        self._cos = np.flatnonzero(tags == COS)
        self._sin = np.flatnonzero(tags == SIN)
        # cos and sin columns come in pairs sharing one frequency
        assert np.array_equal(freqs[self._cos], freqs[self._sin])
        used = np.concatenate([self._flat[self._cos], self._flat_neg[self._cos], self._flat[self._const]])
        self._unique = len(np.unique(used)) == len(used)

    def _torus_synth(self, a: np.ndarray) -> np.ndarray:
        k = self.grid.shape[0]
        d = self.space.d
        t = a.shape[0]
        spec = np.zeros((t, k**d), dtype=complex)
        half = (a[:, self._cos] - 1j * a[:, self._sin]) / SQRT2
        cos_flat = self._flat[self._cos]
        neg_flat = self._flat_neg[self._cos]
        if self._unique:
            spec[:, cos_flat] = half
            spec[:, neg_flat] = np.conj(half)
        else:
            # aliasing grid: several frequencies share a node of the spectrum
            for row in range(t):
                np.add.at(spec[row], cos_flat, half[row])
                np.add.at(spec[row], neg_flat, np.conj(half[row]))
        spec[:, self._flat[self._const]] += a[:, self._const]
        spec = spec.reshape((t,) + (k,) * d)
        vals = np.fft.ifftn(spec, axes=tuple(range(1, d + 1))).real * k**d
        return vals.reshape(t, -1)

    def _torus_adjoint(self, g: np.ndarray) -> np.ndarray:
        k = self.grid.shape[0]
        d = self.space.d
        t = g.shape[0]
        spec = np.fft.fftn(g.reshape((t,) + (k,) * d), axes=tuple(range(1, d + 1)))
        spec = spec.reshape(t, -1) / k**d
        out = np.empty((t, self.space.N))
        out[:, self._const] = spec[:, self._flat[self._const]].real
        out[:, self._cos] = SQRT2 * spec[:, self._flat[self._cos]].real
        out[:, self._sin] = -SQRT2 * spec[:, self._flat[self._sin]].imag
        return out

    # -- sphere -----------------------------------------------------------
    def _setup_sphere(self):
        s = self.space
        lmax = s.degree_bound
        x, w = self.grid._gauss
        table = legendre_table(lmax, x)
        ell = s.labels[:, 0]
        mm = s.labels[:, 1]
        self._lmax = lmax
        self._qw = w / 2.0
        self._blocks = []
        for m in range(lmax + 1):
            cos_idx = np.flatnonzero(mm == m)
            sin_idx = np.flatnonzero(mm == -m) if m > 0 else None
            # sorted by l in both index sets, by construction of the ordering
            ls = ell[cos_idx]
            q = table[m, ls]  # (#l, n_theta)
            self._blocks.append((m, cos_idx, sin_idx, q))

    def _sphere_synth(self, a: np.ndarray) -> np.ndarray:
        t = a.shape[0]
        n_theta, n_phi = self.grid.shape
        spec = np.zeros((t, n_theta, n_phi // 2 + 1), dtype=complex)
        for m, cos_idx, sin_idx, q in self._blocks:
            c = a[:, cos_idx] @ q
            if m == 0:
                spec[:, :, 0] = n_phi * c
            else:
                sn = a[:, sin_idx] @ q
                spec[:, :, m] = n_phi * (c - 1j * sn) / SQRT2
        vals = np.fft.irfft(spec, n=n_phi, axis=-1)
        return vals.reshape(t, -1)

    def _sphere_adjoint(self, g: np.ndarray) -> np.ndarray:
        t = g.shape[0]
        n_theta, n_phi = self.grid.shape
        h = np.fft.rfft(g.reshape(t, n_theta, n_phi), axis=-1) / n_phi
        h = h * self._qw[None, :, None]
        out = np.empty((t, self.space.N))
        for m, cos_idx, sin_idx, q in self._blocks:
            if m == 0:
                out[:, cos_idx] = h[:, :, 0].real @ q.T
            else:
                out[:, cos_idx] = SQRT2 * (h[:, :, m].real @ q.T)
                out[:, sin_idx] = -SQRT2 * (h[:, :, m].imag @ q.T)
        return out

    # -- public -----------------------------------------------------------
    def synth(self, a) -> np.ndarray:
        """Grid values, shape (batch, grid.size), node order of ``grid.nodes``."""
        a = np.atleast_2d(np.asarray(a, float))
        if a.shape[1] != self.space.N:
            raise InvalidArgument(f"expected {self.space.N} coefficients, got {a.shape[1]}")
        if isinstance(self.space.manifold, Torus):
            return self._torus_synth(a)
        return self._sphere_synth(a)

    def adjoint(self, g) -> np.ndarray:
        """sum_i w_i g_i phi_k(x_i) for each row of ``g``."""
        g = np.atleast_2d(np.asarray(g, float))
        if g.shape[1] != self.grid.size:
            raise InvalidArgument("grid values have the wrong length")
        if isinstance(self.space.manifold, Torus):
            return self._torus_adjoint(g)
        return self._sphere_adjoint(g)

    def dense_basis(self) -> np.ndarray:
        """Basis matrix at the grid nodes; slow reference path."""
        return evaluate_basis(self.space, self.grid.nodes)
