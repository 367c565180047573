"""Chern number of the family of spectral projectors of the Bloch fibers,
computed two independent ways.

The fiber Hamiltonian at (t, k) acts on quasi-periodic functions
u(x+1) = e^{2 pi i k} u(x) and is assembled in the plane-wave basis
e^{2 pi i (m + k) x}, |m| <= M: kinetic part (2 pi (m+k))^2 on the diagonal,
potential part the Fourier data of the translated potential. The plaquette
(link-variable) route sums lattice field strengths over the (t, k) torus; the
frame route transports a frame of the projector from t=0 to t=1 and reads the
winding of det of the mismatch unitary.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from dislotop.potentials import TrigPotential
from dislotop.winding import PhasePath, winding_number

DEFAULT_CUTOFF = 32


class GridTooCoarseError(RuntimeError):
    """A plaquette link determinant came too close to zero."""


class FrameDiscontinuityError(RuntimeError):
    """Parallel transport hit a near-singular overlap."""


class CutoffTooSmallError(RuntimeError):
    """Plane-wave basis too small for the requested band count."""


def fiber_matrix(V: TrigPotential, t: float, k: float, cutoff: int = DEFAULT_CUTOFF
                 ) -> np.ndarray:
    """Hermitian (2M+1) x (2M+1) Bloch fiber matrix at (t, k)."""
    m = np.arange(-cutoff, cutoff + 1)
    H = np.diag(((2.0 * math.pi) * (m + k)) ** 2).astype(complex)
    size = 2 * cutoff + 1
    for j in range(1, V.n_harmonics + 1):
        vj = V.fourier_coefficient(j) * cmath.exp(-2j * math.pi * j * t)
        H += np.diag(np.full(size - j, vj), k=-j)
        H += np.diag(np.full(size - j, vj.conjugate()), k=j)
    if V.constant:
        H += V.constant * np.eye(size)
    return H


def bloch_eigenvalues(V: TrigPotential, t: float, k: float, n: int,
                      cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Lowest n eigenvalues of the fiber at (t, k)."""
    vals = np.linalg.eigvalsh(fiber_matrix(V, t, k, cutoff))
    return vals[:n]


def bloch_eigs(V: TrigPotential, t: float, k: float, n: int,
               cutoff: int = DEFAULT_CUTOFF) -> tuple[np.ndarray, np.ndarray]:
    """Lowest n eigenpairs of the fiber; the eigenvector matrix (columns)
    is an orthonormal frame of the rank-n spectral projector.

    Raises if the n-th and (n+1)-th eigenvalues nearly touch (closed gap).
    """
    if n >= 2 * cutoff + 1:
        raise CutoffTooSmallError(f"cutoff {cutoff} cannot resolve {n} bands")
    vals, vecs = np.linalg.eigh(fiber_matrix(V, t, k, cutoff))
    if vals[n] - vals[n - 1] < 1e-9 * max(1.0, abs(vals[n - 1])):
        raise RuntimeError(
            f"bands {n} and {n + 1} touch at (t={t!r}, k={k!r}): gap closed?")
    return vals[:n], vecs[:, :n]


def check_cutoff(V: TrigPotential, n: int, cutoff: int = DEFAULT_CUTOFF,
                 t: float = 0.0, ks=(0.0, 0.25, 0.5), tol: float = 1e-8) -> None:
    """Doubling the cutoff must not move the lowest n eigenvalues by more
    than tol; raises CutoffTooSmallError otherwise."""
    for k in ks:
        a = bloch_eigenvalues(V, t, k, n, cutoff)
        b = bloch_eigenvalues(V, t, k, n, 2 * cutoff)
        worst = float(np.max(np.abs(a - b)))
        if worst > tol:
            raise CutoffTooSmallError(
                f"eigenvalues move by {worst:g} under cutoff doubling at k={k}")


def _shift_down(frame: np.ndarray) -> np.ndarray:
    """Re-express a frame at k in the basis at k+1 (index shift, top row lost).

    The truncation error is the weight of the discarded extreme coefficient,
    which decays super-algebraically for trigonometric potentials.
    """
    out = np.zeros_like(frame)
    out[:-1, :] = frame[1:, :]
    return out


def _polar_unitary(A: np.ndarray) -> np.ndarray:
    u, s, vh = np.linalg.svd(A)
    if s[-1] < 1e-3:
        raise FrameDiscontinuityError(
            f"transport overlap nearly singular (smallest s.v. {s[-1]:.2g})")
    return u @ vh


def projector_grid(V: TrigPotential, n: int, n_t: int, n_k: int,
                   cutoff: int = DEFAULT_CUTOFF) -> list[list[np.ndarray]]:
    """Frames of the rank-n projector on the (t, k) grid i/n_t, j/n_k."""
    return [[bloch_eigs(V, i / n_t, j / n_k, n, cutoff)[1] for j in range(n_k)]
            for i in range(n_t)]


def plaquette_phases(V: TrigPotential, n: int, n_t: int = 40, n_k: int = 40,
                     cutoff: int = DEFAULT_CUTOFF,
                     min_link: float = 0.1) -> np.ndarray:
    """Lattice field strength on each plaquette of the (t, k) torus.

    The k-wrap link re-expresses the k=0 frame in the k=1 basis by an index
    shift; the t-wrap is exactly periodic.
    """
    frames = projector_grid(V, n, n_t, n_k, cutoff)

    def frame_at(i: int, j: int) -> np.ndarray:
        f = frames[i % n_t][j % n_k] if j < n_k else _shift_down(frames[i % n_t][j % n_k])
        return f

    def link(a: np.ndarray, b: np.ndarray) -> complex:
        d = complex(np.linalg.det(a.conj().T @ b))
        if abs(d) < min_link:
            raise GridTooCoarseError(
                f"link determinant modulus {abs(d):.3g} < {min_link}; refine the grid")
        return d / abs(d)

    F = np.empty((n_t, n_k))
    for i in range(n_t):
        for j in range(n_k):
            a = frame_at(i, j)
            b = frame_at(i + 1, j)
            c = frame_at(i + 1, j + 1)
            d = frame_at(i, j + 1)
            prod = link(a, d) * link(d, c) * link(c, b) * link(b, a)
            F[i, j] = cmath.phase(prod)
    return F


def chern_plaquette(V: TrigPotential, n: int, n_t: int = 40, n_k: int = 40,
                    cutoff: int = DEFAULT_CUTOFF,
                    residual_tol: float = 1e-3) -> int:
    """Chern number as the plaquette field-strength sum over the torus grid."""
    F = plaquette_phases(V, n, n_t, n_k, cutoff)
    total = float(F.sum()) / (2.0 * math.pi)
    c = round(total)
    if abs(total - c) > residual_tol:
        raise GridTooCoarseError(
            f"field-strength sum {total!r} is not close to an integer")
    return int(c)


def obstruction_unitaries(V: TrigPotential, n: int, n_k: int = 40,
                          n_t_transport: int = 40,
                          cutoff: int = DEFAULT_CUTOFF,
                          covariant: bool = False,
                          unitary_tol: float = 1e-8) -> list[np.ndarray]:
    """Mismatch unitaries U(k) = frame(t=1, k)^dagger frame(t=0, k).

    The frame at each k is transported from t=0 to t=1, either by projecting
    onto the computed eigenspaces (polar alignment) or, with covariant=True,
    by the exact translation phases e^{-2 pi i (m+k) t} (in which case the
    subspace property is verified against the diagonalised projector instead).
    """
    ms = np.arange(-cutoff, cutoff + 1)
    out = []
    prev_frame = None
    for j in range(n_k):
        k = j / n_k
        _, psi0 = bloch_eigs(V, 0.0, k, n, cutoff)
        if prev_frame is not None:
            psi0 = psi0 @ _polar_unitary(psi0.conj().T @ prev_frame)
        prev_frame = psi0
        if covariant:
            for t in (0.25, 0.75):
                phases = np.exp(-2j * math.pi * (ms + k) * t)
                phi = phases[:, None] * psi0
                _, xi = bloch_eigs(V, t, k, n, cutoff)
                resid = phi - xi @ (xi.conj().T @ phi)
                if np.linalg.norm(resid) > 1e-6:
                    raise FrameDiscontinuityError(
                        f"covariant frame leaves the projector range at (t={t}, k={k})")
            phi_end = np.exp(-2j * math.pi * (ms + k))[:, None] * psi0
        else:
            phi = psi0
            for i in range(1, n_t_transport + 1):
                _, xi = bloch_eigs(V, i / n_t_transport, k, n, cutoff)
                phi = xi @ _polar_unitary(xi.conj().T @ phi)
            phi_end = phi
        U = phi_end.conj().T @ psi0
        defect = float(np.linalg.norm(U @ U.conj().T - np.eye(n)))
        if defect > unitary_tol:
            raise FrameDiscontinuityError(
                f"mismatch matrix not unitary at k={k} (defect {defect:.2g})")
        out.append(U)
    return out


def _obstruction_unitary_at(V: TrigPotential, n: int, k: float,
                            n_t_transport: int, cutoff: int,
                            covariant: bool) -> np.ndarray:
    """Single-k mismatch unitary; its determinant is gauge invariant (an
    eigensolver gauge G maps U to G* U G), so det U(k) is a well-defined
    smooth circle-valued function of k."""
    ms = np.arange(-cutoff, cutoff + 1)
    _, psi0 = bloch_eigs(V, 0.0, k, n, cutoff)
    if covariant:
        phi_end = np.exp(-2j * math.pi * (ms + k))[:, None] * psi0
    else:
        phi = psi0
        for i in range(1, n_t_transport + 1):
            _, xi = bloch_eigs(V, i / n_t_transport, k, n, cutoff)
            phi = xi @ _polar_unitary(xi.conj().T @ phi)
        phi_end = phi
    return phi_end.conj().T @ psi0


def chern_frame(V: TrigPotential, n: int, n_k: int = 16,
                n_t_transport: int = 40, cutoff: int = DEFAULT_CUTOFF,
                covariant: bool = False) -> int:
    """Chern number as the winding of k -> det U(k) of the mismatch unitary.

    The determinant path is sampled adaptively: for weak potentials the whole
    winding concentrates in a narrow window around the band-crossing k.
    """
    from dislotop.winding import build_path

    def det_u(k: float) -> complex:
        u = _obstruction_unitary_at(V, n, float(k), n_t_transport, cutoff, covariant)
        d = complex(np.linalg.det(u))
        return d / abs(d)

    path = build_path(det_u, init_samples=n_k, closed=True)
    return winding_number(path)


def reality_symmetry_defect(V: TrigPotential, t: float, k: float, n: int,
                            cutoff: int = DEFAULT_CUTOFF) -> float:
    """|| P(t,-k) - R conj(P(t,k)) R || with R the basis index reversal
    (complex conjugation symmetry of a real potential)."""
    _, psi_m = bloch_eigs(V, t, -k, n, cutoff)
    _, psi_p = bloch_eigs(V, t, k, n, cutoff)
    p_m = psi_m @ psi_m.conj().T
    p_p = psi_p @ psi_p.conj().T
    return float(np.linalg.norm(p_m - np.conj(p_p)[::-1, ::-1]))
