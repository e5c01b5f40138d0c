"""Central spin dynamics inside symmetry blocks of the reduced Hamiltonian.

A block fixes the collective spins ``(I_1, ..., I_M)`` of the M sets of
equivalent nuclei. Its basis is ``|m_s> (x) |I_1 m_1> ... |I_M m_M>`` with
``m_s = +1/2, -1/2`` (electron index 0, 1) and ``m_j = I_j, I_j - 1, ..., -I_j``
(nuclear index ``k = I_j - m_j``). States are stored with trailing shape
``(2, 2I_1 + 1, ..., 2I_M + 1)`` and any number of leading batch axes.

Within a block

    H = B S_z + sum_j A_j (S_z I_jz + (S_+ I_j- + S_- I_j+) / 2)

is applied matrix-free. The infinite-temperature correlation tensor is

    R_ab(t) = (1/Z) sum_blocks weight * tr_block[S_a U(t)^dagger S_b U(t)],

with ``U(t) = exp(-iHt)`` and ``Z = 2**(N+1)``. Small blocks are traced
exactly; large ones with a random-phase trace estimator.
"""

from __future__ import annotations

import concurrent.futures
import copy
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.special

from .combinatorics import SymmetryBlock, enumerate_blocks
from .moments import ReducedModel

AXES = "xyz"
ALL_COMPONENTS = tuple(a + b for a in AXES for b in AXES)

# complex elements held at once by the propagation work arrays
_WORK_ELEMENTS = 1 << 23


class BlockBasis:
    """Product basis of one symmetry block, with its conserved J_z sectors."""

    def __init__(self, block: SymmetryBlock):
        self.block = block
        self.twice_spins = tuple(block.twice_spins)
        self.nuclear_dims = tuple(s + 1 for s in self.twice_spins)
        self.shape = (2,) + self.nuclear_dims
        self.dim = math.prod(self.shape)
        self.m = len(self.twice_spins)

        grids = np.indices(self.shape).reshape(len(self.shape), -1)
        twice_ms = 1 - 2 * grids[0]
        twice_mnuc = np.zeros(self.dim, dtype=np.int64)
        for j, s in enumerate(self.twice_spins):
            twice_mnuc += s - 2 * grids[j + 1]
        self.electron = grids[0]
        self.twice_mnuc = twice_mnuc
        self.twice_jz = twice_ms + twice_mnuc

    def sectors(self) -> list[np.ndarray]:
        """Flat indices of each J_z sector, in ascending J_z."""
        order = np.argsort(self.twice_jz, kind="stable")
        values = self.twice_jz[order]
        cuts = np.flatnonzero(np.diff(values)) + 1
        return np.split(order, cuts)

    def sector_values(self) -> list[int]:
        """2 J_z for each entry of :meth:`sectors`."""
        return sorted(set(self.twice_jz.tolist()))

    def index_of(self, electron: int, nuclear: Sequence[int]) -> int:
        """Flat index of ``|electron, k_1, ..., k_M>`` (k_j = I_j - m_j)."""
        return int(np.ravel_multi_index((electron, *nuclear), self.shape))


class BlockHamiltonian:
    """Matrix-free action of H_M restricted to one block."""

    def __init__(self, basis: BlockBasis, couplings: Sequence[float], b_field: float):
        if len(couplings) != basis.m:
            raise ValueError(f"block has {basis.m} sets but {len(couplings)} couplings given")
        self.basis = basis
        self.couplings = tuple(float(a) for a in couplings)
        self.b_field = float(b_field)

        half_ms = np.array([0.5, -0.5])
        diag = self.b_field * half_ms.reshape((2,) + (1,) * basis.m)
        self._ladders = []
        for j, (a, s) in enumerate(zip(self.couplings, self.twice_spins)):
            mj = 0.5 * s - np.arange(s + 1)
            bshape = [1] * basis.m
            bshape[j] = s + 1
            diag = diag + a * half_ms.reshape((2,) + (1,) * basis.m) * mj.reshape(bshape)
            if s == 0 or a == 0.0:
                continue
            i = 0.5 * s
            # <m-1| I_- |m> for m = I .. -I+1, equal to <m| I_+ |m-1>
            lower = np.sqrt(i * (i + 1) - mj[:-1] * (mj[:-1] - 1))
            cshape = [1] * basis.m
            cshape[j] = s
            self._ladders.append((j, 0.5 * a * lower.reshape(cshape)))
        self.diag = np.broadcast_to(diag, basis.shape).copy()

    @property
    def twice_spins(self):
        return self.basis.twice_spins

    def _slices(self, ndim, j, lo, hi, electron):
        m = self.basis.m
        idx = [slice(None)] * ndim
        idx[ndim - m - 1] = electron
        idx[ndim - m + j] = slice(lo, hi)
        return tuple(idx)

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        """H psi for psi with trailing block shape (leading axes are a batch)."""
        out = self.diag * psi
        nd = psi.ndim
        for j, coef in self._ladders:
            # S+ I_j-: electron down -> up, k_j -> k_j + 1
            out[self._slices(nd, j, 1, None, 0)] += coef * psi[self._slices(nd, j, 0, -1, 1)]
            # S- I_j+: electron up -> down, k_j -> k_j - 1
            out[self._slices(nd, j, 0, -1, 1)] += coef * psi[self._slices(nd, j, 1, None, 0)]
        return out

    def scaled(self, shift: float, scale: float) -> "BlockHamiltonian":
        """Copy acting as (H - shift) / scale."""
        out = copy.copy(self)
        out.diag = (self.diag - shift) / scale
        out._ladders = [(j, coef / scale) for j, coef in self._ladders]
        return out

    def spectral_bounds(self) -> tuple[float, float]:
        """Guaranteed interval containing the spectrum.

        ``S.I`` has eigenvalues ``I/2`` and ``-(I+1)/2``, so each term's extremes
        are known and the bounds follow from Weyl's inequality.
        """
        lo = hi = 0.5 * abs(self.b_field)
        lo = -lo
        for a, s in zip(self.couplings, self.twice_spins):
            if s == 0:
                continue
            e1, e2 = 0.25 * a * s, -0.5 * a * (0.5 * s + 1)
            lo += min(e1, e2)
            hi += max(e1, e2)
        return lo, hi

    def sparse(self) -> scipy.sparse.csr_matrix:
        """Explicit sparse matrix, used to assemble small dense sector blocks."""
        basis = self.basis
        flat = np.arange(basis.dim).reshape(basis.shape)
        rows = [flat.ravel()]
        cols = [flat.ravel()]
        vals = [self.diag.ravel()]
        for j, coef in self._ladders:
            src = flat[self._slices(flat.ndim, j, 0, -1, 1)]
            dst = flat[self._slices(flat.ndim, j, 1, None, 0)]
            c = np.broadcast_to(coef, src.shape)
            rows += [dst.ravel(), src.ravel()]
            cols += [src.ravel(), dst.ravel()]
            vals += [c.ravel(), c.ravel()]
        return scipy.sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis.dim, basis.dim),
        )

    def dense(self, indices=None) -> np.ndarray:
        mat = self.sparse()
        if indices is not None:
            mat = mat[indices][:, indices]
        return mat.toarray()


def _as_block_array(basis: BlockBasis, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[-1:] == (basis.dim,):
        return state.reshape(state.shape[:-1] + basis.shape)
    if state.shape[-len(basis.shape):] == basis.shape:
        return state
    raise ValueError(f"state shape {state.shape} does not match block dimension {basis.dim}")


def apply_hamiltonian(basis: BlockBasis, model: ReducedModel, b_field: float, state) -> np.ndarray:
    """H_M applied to ``state`` (flat length-dim vector, or trailing block shape)."""
    flat = np.asarray(state).shape[-1:] == (basis.dim,)
    psi = _as_block_array(basis, state)
    out = BlockHamiltonian(basis, model.couplings, b_field).matvec(psi)
    return out.reshape(np.shape(state)) if flat else out


def apply_spin(axis: str, psi: np.ndarray, nuclear_ndim: int) -> np.ndarray:
    """Electron spin component ``S_axis`` acting on the electron axis of ``psi``."""
    e = psi.ndim - nuclear_ndim - 1
    up = np.take(psi, 0, axis=e)
    dn = np.take(psi, 1, axis=e)
    if axis == "z":
        parts = (0.5 * up, -0.5 * dn)
    elif axis == "x":
        parts = (0.5 * dn, 0.5 * up)
    elif axis == "y":
        parts = (-0.5j * dn, 0.5j * up)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return np.stack(parts, axis=e)


# ---------------------------------------------------------------------------
# Chebyshev propagation


def _chebyshev_order(x: float, tol: float) -> int:
    """Number of terms after which |J_k(x)| stays below tol."""
    kmax = int(x + 10.0 * max(x, 1.0) ** (1.0 / 3.0) + 40)
    jk = np.abs(scipy.special.jv(np.arange(kmax + 1), x))
    above = np.flatnonzero(jk > 0.1 * tol)
    return int(above[-1]) + 2 if above.size else 2


def _evolve_window(ham: BlockHamiltonian, psi, dts, tol):
    """exp(-iH dt) psi for every dt in ``dts`` from one Chebyshev expansion."""
    lo, hi = ham.spectral_bounds()
    centre, radius = 0.5 * (hi + lo), 0.5 * (hi - lo)
    dts = np.asarray(dts, dtype=float)
    if radius == 0.0 or np.all(dts == 0.0):
        return np.exp(-1j * centre * dts).reshape((-1,) + (1,) * psi.ndim) * psi
    kterms = _chebyshev_order(radius * float(dts.max()), tol)
    ks = np.arange(kterms)
    bessel = scipy.special.jv(ks[None, :], radius * dts[:, None])
    coef = np.where(ks == 0, 1.0, 2.0)[None, :] * (-1j) ** ks[None, :] * bessel
    coef = coef * np.exp(-1j * centre * dts)[:, None]

    unit = ham.scaled(centre, radius)
    terms = np.empty((kterms,) + psi.shape, dtype=complex)
    terms[0] = psi
    if kterms > 1:
        terms[1] = unit.matvec(terms[0])
    for k in range(2, kterms):
        nxt = terms[k]
        nxt[...] = unit.matvec(terms[k - 1])
        nxt *= 2.0
        nxt -= terms[k - 2]
    out = (coef @ terms.reshape(kterms, -1)).reshape((len(dts),) + psi.shape)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite amplitudes during propagation")
    return out


# limits on one Chebyshev expansion: outputs per window and radius * window length
_WINDOW_TIMES = 32
_WINDOW_PHASE = 20.0


def _window_terms(tol: float) -> int:
    """Upper estimate of stored Chebyshev terms plus outputs for one window."""
    return _chebyshev_order(_WINDOW_PHASE, tol) + _WINDOW_TIMES


def _windows(ham: BlockHamiltonian, times, max_times: int, max_phase: float = _WINDOW_PHASE):
    """Split ascending ``times`` into (start, [times]) windows for _evolve_window."""
    lo, hi = ham.spectral_bounds()
    radius = max(0.5 * (hi - lo), 1e-12)
    start = 0.0
    current: list[float] = []
    for t in times:
        if current and (len(current) >= max_times or radius * (t - start) > max_phase):
            yield start, current
            start = current[-1]
            current = []
        current.append(float(t))
    if current:
        yield start, current


def propagate(
    basis: BlockBasis,
    model: ReducedModel,
    b_field: float,
    state,
    t_step: float,
    tol: float = 1e-12,
) -> np.ndarray:
    """``exp(-i H_M t_step) state`` by Chebyshev expansion of the propagator."""
    if t_step < 0:
        raise ValueError(f"t_step must be nonnegative, got {t_step}")
    flat = np.asarray(state).shape[-1:] == (basis.dim,)
    psi = _as_block_array(basis, state)
    ham = BlockHamiltonian(basis, model.couplings, b_field)
    if t_step == 0:
        out = psi.astype(complex, copy=True)
    else:
        out = psi
        for start, ts in _windows(ham, [t_step], 1):
            out = _evolve_window(ham, out, [ts[0] - start], tol)[0]
    return out.reshape(np.shape(state)) if flat else out


def evolve(ham: BlockHamiltonian, psi: np.ndarray, times, tol: float = 1e-12):
    """Yield ``(index, psi(t))`` for ascending ``times`` starting from psi at t = 0."""
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be ascending and nonnegative")
    i = 0
    state = psi
    for start, ts in _windows(ham, times, _WINDOW_TIMES):
        block = _evolve_window(ham, state, np.asarray(ts) - start, tol)
        for k in range(len(ts)):
            yield i, block[k]
            i += 1
        state = block[-1]


# ---------------------------------------------------------------------------
# block traces


@dataclass
class BlockTrace:
    """Per-time traces ``tr[S_a U^dagger S_b U]`` over one block.

    ``values`` has shape (T, n_components); ``stderr`` is set for stochastic
    estimates only.
    """

    components: tuple[str, ...]
    values: np.ndarray
    stderr: np.ndarray | None = None

    def __getitem__(self, component: str) -> np.ndarray:
        return self.values[:, self.components.index(component)]


def _check_components(components) -> tuple[str, ...]:
    components = tuple(components)
    for c in components:
        if len(c) != 2 or c[0] not in AXES or c[1] not in AXES:
            raise ValueError(f"bad correlation component {c!r}")
    return components


def _vector_traces(ham: BlockHamiltonian, vectors: np.ndarray, components, times, tol):
    """<U S_a v | S_b | U v> for each vector v (rows of ``vectors``).

    Returns complex array (n_vectors, T, n_components).
    """
    basis = ham.basis
    m = basis.m
    nvec = vectors.shape[0]
    alphas = sorted({c[0] for c in components})
    nfam = 1 + len(alphas)
    out = np.empty((nvec, len(times), len(components)), dtype=complex)
    per_vec = basis.dim * nfam * _window_terms(tol)
    chunk = max(1, min(nvec, _WORK_ELEMENTS // per_vec))
    for c0 in range(0, nvec, chunk):
        v = vectors[c0:c0 + chunk].reshape((-1,) + basis.shape).astype(complex)
        families = [v] + [apply_spin(a, v, m) for a in alphas]
        stacked = np.stack(families)  # (nfam, chunk, *shape)
        for i, psi in evolve(ham, stacked, times, tol):
            psi_v = psi[0]
            for ci, comp in enumerate(components):
                left = psi[1 + alphas.index(comp[0])]
                right = apply_spin(comp[1], psi_v, m)
                out[c0:c0 + chunk, i, ci] = np.einsum(
                    "ij,ij->i", left.conj().reshape(len(v), -1), right.reshape(len(v), -1)
                )
    return out


def _sector_hamiltonians(ham: BlockHamiltonian, groups):
    """Builder of the dense H restricted to each group (groups must be H-invariant).

    Returns ``(dense, group_of, local)`` where ``dense(g)`` assembles group g on
    demand, so only the sectors actually diagonalised are ever stored.
    """
    coo = ham.sparse().tocoo()
    group_of = np.empty(ham.basis.dim, dtype=np.int64)
    local = np.empty(ham.basis.dim, dtype=np.int64)
    for g, idx in enumerate(groups):
        group_of[idx] = g
        local[idx] = np.arange(len(idx))
    owner = group_of[coo.row]
    if np.any(owner != group_of[coo.col]):
        raise AssertionError("Hamiltonian couples different J_z sectors")
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(len(groups) + 1))

    def dense(g):
        sel = order[bounds[g]:bounds[g + 1]]
        n = len(groups[g])
        h = np.zeros((n, n))
        h[local[coo.row[sel]], local[coo.col[sel]]] = coo.data[sel]
        return h

    return dense, group_of, local


def _mirror_sector(basis: BlockBasis, idx_plus, vecs_plus, idx_minus):
    """Eigenvectors of sector -J_z from those of +J_z when B = 0.

    A rotation by pi about y leaves sum_j A_j S.I_j invariant and maps
    |j m> to (-1)**(j - m) |j, -m>, i.e. index k -> 2j - k with sign (-1)**k.
    """
    coords = np.array(np.unravel_index(idx_plus, basis.shape))
    sign = (-1.0) ** coords.sum(axis=0)
    flipped = coords.copy()
    flipped[0] = 1 - coords[0]
    for j, s in enumerate(basis.twice_spins):
        flipped[j + 1] = s - coords[j + 1]
    target = np.ravel_multi_index(tuple(flipped), basis.shape)
    pos = np.searchsorted(idx_minus, target)
    out = np.empty_like(vecs_plus)
    out[pos] = sign[:, None] * vecs_plus
    return out


def _spectral_traces(ham: BlockHamiltonian, components, times, use_sectors: bool):
    """Exact traces from eigendecompositions of the J_z sectors (or the whole block).

    In the eigenbasis, tr[A U^dag B U] = sum_nm A_nm B_mn exp(i (E_m - E_n) t).
    S_z is sector-diagonal; S_+ moves a state one sector up, so the x/y family
    only needs overlaps between adjacent sectors.
    """
    basis = ham.basis
    times = np.asarray(times, dtype=float)
    if not use_sectors:
        h = ham.dense()
        return _generic_traces(basis, scipy.linalg.eigh(h, driver="evd"), components, times)

    groups = basis.sectors()
    values = basis.sector_values()
    position = {v: g for g, v in enumerate(values)}
    sector_matrix, group_of, local = _sector_hamiltonians(ham, groups)
    mirror = ham.b_field == 0.0
    cache = {}

    def eig(g):
        if g not in cache:
            partner = position.get(-values[g])
            if mirror and values[g] < 0 and partner is not None:
                energies, vecs = eig(partner)[:2]
                vecs = _mirror_sector(basis, groups[partner], vecs, groups[g])
            else:
                energies, vecs = scipy.linalg.eigh(
                    sector_matrix(g), driver="evd", overwrite_a=True, check_finite=False
                )
            ct, st = np.cos(np.outer(energies, times)), np.sin(np.outer(energies, times))
            cache[g] = (energies, vecs, ct, st)
        return cache[g]

    want_z = "zz" in components
    want_pm = any(c in components for c in ("xx", "yy", "xy", "yx"))
    nuc = math.prod(basis.nuclear_dims)
    zz = np.zeros(len(times))
    re_g = np.zeros(len(times))
    im_g = np.zeros(len(times))

    for g, idx in enumerate(groups):
        # only sectors g and g + 1 are needed from here on
        for old in [k for k in cache if k < g]:
            del cache[old]
        v = values[g]
        if want_z and not (mirror and v < 0):
            _, vecs, ct, st = eig(g)
            up = basis.electron[idx] == 0
            # V^T S_z V = V_up^T V_up - 1/2 = 1/2 - V_dn^T V_dn
            if up.sum() <= len(idx) // 2:
                half = vecs[up]
                sz = half.T @ half
                sz[np.diag_indices_from(sz)] -= 0.5
            else:
                half = vecs[~up]
                sz = -(half.T @ half)
                sz[np.diag_indices_from(sz)] += 0.5
            x = sz * sz
            mult = 2.0 if (mirror and v > 0) else 1.0
            zz += mult * np.sum(ct * (x @ ct) + st * (x @ st), axis=0)
        if want_pm and (v + 2) in position and not (mirror and v < -1):
            h = position[v + 2]
            src = idx[basis.electron[idx] == 1]
            dst = src - nuc
            _, vecs, ct, st = eig(g)
            _, vecs_h, ct_h, st_h = eig(h)
            p = vecs_h[local[dst]].T @ vecs[local[src]]
            q = p * p
            qc = q @ ct
            qs = q @ st
            re = np.sum(ct_h * qc + st_h * qs, axis=0)
            if mirror and v >= 0:
                # the mirrored pair contributes the complex conjugate
                re_g += 2.0 * re
            else:
                re_g += re
                im_g += np.sum(ct_h * qs - st_h * qc, axis=0)

    table = {
        "zz": zz,
        "xx": 0.5 * re_g,
        "yy": 0.5 * re_g,
        "xy": -0.5 * im_g,
        "yx": 0.5 * im_g,
    }
    result = np.zeros((len(times), len(components)), dtype=complex)
    for ci, comp in enumerate(components):
        if comp in table:
            result[:, ci] = table[comp]
        # xz, zx, yz, zy vanish identically: S_z conserves J_z, S_x and S_y change it
    return result


def _electron_operator(basis: BlockBasis, axis: str) -> np.ndarray:
    eye = np.eye(basis.dim).reshape((basis.dim,) + basis.shape)
    return apply_spin(axis, eye, basis.m).reshape(basis.dim, basis.dim).T


def _generic_traces(basis, eigsys, components, times):
    energies, vecs = eigsys
    ops = {a: vecs.conj().T @ _electron_operator(basis, a) @ vecs for a in AXES}
    plus = np.exp(1j * np.outer(energies, times))
    result = np.empty((len(times), len(components)), dtype=complex)
    for ci, comp in enumerate(components):
        # sum_nm A_nm B_mn exp(i (E_m - E_n) t)
        kern = ops[comp[0]] * ops[comp[1]].T
        result[:, ci] = np.sum(plus.conj() * (kern @ plus), axis=0)
    return result


def random_phase_vectors(dim: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus vectors with uniformly random phases, E[z z^dagger] = I."""
    return np.exp(2j * np.pi * rng.random((n_samples, dim)))


def block_trace(
    basis: BlockBasis,
    model: ReducedModel,
    b_field: float,
    alpha: str,
    beta: str,
    times,
    method: str = "deterministic",
    n_samples: int = 1000,
    seed=0,
    **kwargs,
) -> BlockTrace:
    """``tr[S_alpha U(t)^dagger S_beta U(t)]`` over one block; see :func:`block_traces`."""
    return block_traces(
        basis, model, b_field, [alpha + beta], times, method=method,
        n_samples=n_samples, seed=seed, **kwargs,
    )


def block_traces(
    basis: BlockBasis,
    model: ReducedModel,
    b_field: float,
    components,
    times,
    method: str = "deterministic",
    n_samples: int = 1000,
    seed=0,
    backend: str = "spectral",
    use_sectors: bool = True,
    tol: float = 1e-12,
) -> BlockTrace:
    """Traces of several correlation components over one block.

    ``method="deterministic"`` sums over every basis state, either exactly from
    sector eigendecompositions (``backend="spectral"``) or by propagating every
    basis state and its image under S_alpha (``backend="propagate"``).
    ``method="stochastic"`` averages the same contraction over ``n_samples``
    random-phase vectors; with unit-modulus entries each sample is already an
    unbiased estimate of the trace.
    """
    components = _check_components(components)
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be ascending and nonnegative")
    ham = BlockHamiltonian(basis, model.couplings, b_field)

    if method == "deterministic":
        if backend == "spectral":
            return BlockTrace(components, _spectral_traces(ham, components, times, use_sectors))
        if backend == "propagate":
            vecs = np.eye(basis.dim, dtype=complex)
            vals = _vector_traces(ham, vecs, components, times, tol)
            return BlockTrace(components, vals.sum(axis=0))
        raise ValueError(f"unknown backend {backend!r}")

    if method == "stochastic":
        if n_samples < 1:
            raise ValueError("n_samples must be positive")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        vecs = random_phase_vectors(basis.dim, n_samples, rng)
        vals = _vector_traces(ham, vecs, components, times, tol)
        mean = vals.mean(axis=0)
        if n_samples > 1:
            se = np.sqrt(
                vals.real.var(axis=0, ddof=1) + vals.imag.var(axis=0, ddof=1)
            ) / np.sqrt(n_samples)
        else:
            se = np.full(mean.shape, np.inf)
        return BlockTrace(components, mean, se)

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# correlation tensor


@dataclass
class DynamicsConfig:
    """Options for :func:`correlation_tensor`.

    ``block_filter`` is a budget on the discarded fraction of the Hilbert space:
    the blocks with the smallest ``weight * dim`` are skipped while their total
    share stays below it. Since ``|tr_block| <= dim / 4`` this bounds the error
    of every R_ab by ``block_filter / 4``.
    """

    deterministic_threshold: int = 1000
    n_samples: int = 1000
    master_seed: int = 0
    block_filter: float = 0.0
    components: tuple[str, ...] = ALL_COMPONENTS
    use_sectors: bool = True
    backend: str = "spectral"
    tol: float = 1e-12
    threads: int = 1


@dataclass
class CorrelationTensor:
    times: np.ndarray
    values: np.ndarray  # (T, 3, 3)
    stderr: np.ndarray | None = None
    dropped_fraction: float = 0.0
    n_blocks: int = 0
    n_stochastic: int = 0

    def component(self, name: str) -> np.ndarray:
        return self.values[:, AXES.index(name[0]), AXES.index(name[1])]

    def component_stderr(self, name: str) -> np.ndarray:
        if self.stderr is None:
            return np.zeros(len(self.times))
        return self.stderr[:, AXES.index(name[0]), AXES.index(name[1])]


def block_seed(master_seed: int, block_index: int) -> np.random.SeedSequence:
    """Seed for one block, fixed by (master_seed, lexicographic block index)."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(block_index),))


def select_blocks(blocks: list[SymmetryBlock], n: int, budget: float):
    """Indices of the blocks kept under a discarded-fraction budget, and the fraction dropped."""
    z = 2 ** (n + 1)
    shares = [Fraction(b.weight * b.dim, z) for b in blocks]
    order = sorted(range(len(blocks)), key=lambda i: (shares[i], i))
    dropped = Fraction(0)
    skip = set()
    budget = Fraction(budget)
    for i in order:
        if dropped + shares[i] > budget:
            break
        dropped += shares[i]
        skip.add(i)
    return [i for i in range(len(blocks)) if i not in skip], float(dropped)


def correlation_tensor(
    model: ReducedModel,
    b_field: float,
    times,
    config: DynamicsConfig | None = None,
) -> CorrelationTensor:
    """R_ab(t) summed over the symmetry blocks of ``model``."""
    config = config or DynamicsConfig()
    components = _check_components(config.components)
    times = np.asarray(times, dtype=float)
    blocks = enumerate_blocks(model)
    keep, dropped = select_blocks(blocks, model.n, config.block_filter)
    z = 2 ** (model.n + 1)

    def work(i):
        block = blocks[i]
        basis = BlockBasis(block)
        if block.dim < config.deterministic_threshold:
            tr = block_traces(
                basis, model, b_field, components, times, method="deterministic",
                backend=config.backend, use_sectors=config.use_sectors, tol=config.tol,
            )
            diag = [ci for ci, c in enumerate(components) if c[0] == c[1]]
            imag = np.max(np.abs(tr.values[:, diag].imag), initial=0.0)
            if imag > 1e-8 * block.dim:
                raise FloatingPointError(f"diagonal trace has imaginary part {imag:g}")
            return tr
        rng = np.random.default_rng(block_seed(config.master_seed, i))
        return block_traces(
            basis, model, b_field, components, times, method="stochastic",
            n_samples=config.n_samples, seed=rng, tol=config.tol,
        )

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            traces = list(pool.map(work, keep))
    else:
        traces = [work(i) for i in keep]

    values = np.zeros((len(times), len(components)))
    variance = np.zeros((len(times), len(components)))
    n_stochastic = 0
    for i, tr in zip(keep, traces):
        scale = float(Fraction(blocks[i].weight, z))
        values += scale * tr.values.real
        if tr.stderr is not None:
            n_stochastic += 1
            variance += (scale * tr.stderr) ** 2

    tensor = np.zeros((len(times), 3, 3))
    err = np.zeros((len(times), 3, 3))
    for ci, comp in enumerate(components):
        a, b = AXES.index(comp[0]), AXES.index(comp[1])
        tensor[:, a, b] = values[:, ci]
        err[:, a, b] = np.sqrt(variance[:, ci])
    return CorrelationTensor(
        times=times,
        values=tensor,
        stderr=err if n_stochastic else None,
        dropped_fraction=dropped,
        n_blocks=len(keep),
        n_stochastic=n_stochastic,
    )
