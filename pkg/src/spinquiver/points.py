"""Concrete representation points of the multiplicative preprojective algebra.

A point is the block data (X_s, Y_s, V_a, W_a): m square matrices each way
around the cycle, and d row/column vectors for the framing arrows at vertex 0.
Points are built either directly from matrices or from the local spin
Ruijsenaars-Schneider coordinates (x, a, c) through the diagonal normal form,
in which case the multiplicative moment conditions hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (Degenerate, RegularityViolation, SamplingExhausted,
                     SingularFactor, SingularGauge, SingularX)
from .params import ModelSpec, ParameterSet

_DET_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


def _det_ok(mat: np.ndarray) -> bool:
    n = mat.shape[0]
    scale = max(1.0, np.linalg.norm(mat)) ** n
    return abs(np.linalg.det(mat)) > _DET_TOL * scale


@dataclass(frozen=True)
class RepPoint:
    """Immutable block data of one quiver representation.

    X[s] is n x n for the arrow s -> s+1, Y[s] for the reversed arrow,
    V[a] is a 1 x n row (framing vertex to 0), W[a] an n x 1 column.
    Z[s] = Y[s] + X[s]^(-1) is cached at construction when X is invertible,
    otherwise Z is None.
    """

    spec: ModelSpec
    X: tuple
    Y: tuple
    V: tuple
    W: tuple
    Z: tuple | None = None

    @staticmethod
    def make(spec: ModelSpec, X, Y, V, W) -> "RepPoint":
        X = tuple(_readonly(x) for x in X)
        Y = tuple(_readonly(y) for y in Y)
        V = tuple(_readonly(np.atleast_2d(v)) for v in V)
        W = tuple(_readonly(np.asarray(w).reshape(spec.n, 1)) for w in W)
        if len(X) != spec.m or len(Y) != spec.m:
            raise ValueError("need m cycle matrices each way")
        if len(V) != spec.d or len(W) != spec.d:
            raise ValueError("need d framing vectors each way")
        for mat in X + Y:
            if mat.shape != (spec.n, spec.n):
                raise ValueError("cycle blocks must be n x n")
        for v in V:
            if v.shape != (1, spec.n):
                raise ValueError("V blocks must be 1 x n rows")
        Z = None
        try:
            Z = tuple(_readonly(Y[s] + np.linalg.inv(X[s])) for s in range(spec.m))
        except np.linalg.LinAlgError:
            Z = None
        return RepPoint(spec=spec, X=X, Y=Y, V=V, W=W, Z=Z)

    def validate(self) -> None:
        """Check the invertibility invariants; raise Degenerate on failure."""
        n = self.spec.n
        eye = np.eye(n)
        for s in range(self.spec.m):
            if not _det_ok(eye + self.X[s] @ self.Y[s]):
                raise Degenerate(f"Id + X_{s} Y_{s} is singular")
            if not _det_ok(eye + self.Y[s] @ self.X[s]):
                raise Degenerate(f"Id + Y_{s} X_{s} is singular")
        for a in range(self.spec.d):
            if not _det_ok(eye + self.W[a] @ self.V[a]):
                raise Degenerate(f"Id + W_{a + 1} V_{a + 1} is singular")
            if abs(1.0 + complex((self.V[a] @ self.W[a])[0, 0])) <= _DET_TOL:
                raise Degenerate(f"1 + V_{a + 1} W_{a + 1} vanishes")

    def require_Z(self) -> tuple:
        if self.Z is None:
            raise SingularX("some X_s is not invertible; Z is undefined")
        return self.Z

    def norm_scale(self) -> float:
        """Magnitude scale of the point, used to normalize residual tolerances."""
        vals = [np.linalg.norm(b) for b in self.X + self.Y + self.V + self.W]
        return max(1.0, max(vals))


@dataclass(frozen=True)
class LocalCoordinates:
    """Spin RS coordinates: positions x_i, spins a_i^alpha and c_i^alpha.

    Rows of `a` are normalized to unit sum at construction.  `c` is stored
    with shape (d, n), row alpha holding (c_j^alpha)_j.
    """

    x: np.ndarray
    a: np.ndarray
    c: np.ndarray

    @staticmethod
    def make(x, a, c) -> "LocalCoordinates":
        x = np.asarray(x, dtype=complex).reshape(-1)
        a = np.array(a, dtype=complex)
        c = np.array(c, dtype=complex)
        n = x.size
        if a.shape[0] != n or c.shape[1] != n or a.shape[1] != c.shape[0]:
            raise ValueError("shape mismatch between x, a, c")
        if np.any(x == 0):
            raise RegularityViolation("positions must be nonzero")
        if n > 1:
            diff = x[:, None] - x[None, :]
            np.fill_diagonal(diff, 1.0)
            if np.any(diff == 0):
                raise RegularityViolation("positions must be pairwise distinct")
        sums = a.sum(axis=1)
        if np.any(np.abs(sums) < 1e-10):
            raise Degenerate("a-row sum too close to zero to normalize")
        a = a / sums[:, None]
        return LocalCoordinates(x=_readonly(x), a=_readonly(a), c=_readonly(c))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def d(self) -> int:
        return self.a.shape[1]

    def f_matrix(self) -> np.ndarray:
        """Collective spins f_ij = sum_alpha a_i^alpha c_j^alpha."""
        return self.a @ self.c


@dataclass(frozen=True)
class SpinData:
    """Spin matrices of a point: Am (n x d), Cm (d x n) and the product S."""

    Am: np.ndarray
    Cm: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class ReducedQuadruple:
    """Data (A, B, bigA, bigC) of the equivalent rank-n spin RS point."""

    A: np.ndarray
    B: np.ndarray
    bigA: np.ndarray
    bigC: np.ndarray


def check_creg(x: np.ndarray, t: complex, margin: float = 0.0) -> bool:
    """Membership of x in the regular locus: x_i != 0, x_i != x_j, x_i != t x_j."""
    n = x.size
    if np.any(np.abs(x) <= margin):
        return False
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if abs(x[i] - x[j]) <= margin or abs(x[i] - t * x[j]) <= margin:
                return False
    return True


def lax_matrix(coords: LocalCoordinates, t: complex) -> np.ndarray:
    """The spin RS Lax matrix B_ij = t f_ij / (x_i / x_j - t)."""
    x = coords.x
    f = coords.f_matrix()
    denom = x[:, None] / x[None, :] - t
    if np.any(np.abs(denom) < 1e-13):
        raise RegularityViolation("x_i = t x_j resonance in the Lax denominator")
    return t * f / denom


def point_from_coordinates(coords: LocalCoordinates, params: ParameterSet,
                           spec: ModelSpec) -> RepPoint:
    """Build the on-shell representation point of the coordinates.

    The construction goes through the diagonal normal form: A = diag(x), the
    Lax matrix B, then X_s = Id for s <= m-2, X_{m-1} = A, Z_s = t_s B,
    Z_{m-1} = t A^(-1) B, and framing vectors recovered from the spin data.
    """
    if coords.n != spec.n or coords.d != spec.d or params.m != spec.m:
        raise ValueError("coordinate/parameter shapes disagree with the model")
    t = params.t
    if not check_creg(coords.x, t):
        raise RegularityViolation("coordinates leave the regular locus")
    n, m, d = spec.n, spec.m, spec.d
    A = np.diag(coords.x)
    B = lax_matrix(coords, t)
    Ainv = np.diag(1.0 / coords.x)

    X = [np.eye(n, dtype=complex) for _ in range(m)]
    X[m - 1] = A
    Z = [params.t_at(s) * B for s in range(m - 1)]
    Z.append(t * Ainv @ B)

    Am = Ainv @ coords.a
    Cm = np.array(coords.c)

    try:
        Zm1_inv = np.linalg.inv(Z[m - 1])
    except np.linalg.LinAlgError as exc:
        raise SingularFactor("Z_{m-1} is singular; cannot recover framing") from exc

    W = [Am[:, a].reshape(n, 1) for a in range(d)]
    V = []
    Minv = np.eye(n, dtype=complex)
    for a in range(d):
        v = t * Cm[a].reshape(1, n) @ Zm1_inv @ Minv
        V.append(v)
        omega = np.eye(n) + W[a] @ v
        if not _det_ok(omega):
            raise Degenerate(f"Id + W_{a + 1} V_{a + 1} singular during recovery")
        Minv = Minv @ np.linalg.inv(omega)

    Y = [Z[s] - np.linalg.inv(X[s]) for s in range(m)]
    point = RepPoint.make(spec, X, Y, V, W)
    point.validate()
    return point


def random_point(spec: ModelSpec, params: ParameterSet, seed: int,
                 max_tries: int = 1000) -> RepPoint:
    """Sample an on-shell point; deterministic per seed.

    Positions are drawn on the annulus 0.5 <= |x| <= 2 with a 1e-3 margin
    against regular-locus violations; spins are complex standard normal with
    a-rows renormalized to unit sum.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n, d = spec.n, spec.d
    t = params.t
    for _ in range(max_tries):
        radius = rng.uniform(0.5, 2.0, size=n)
        angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
        x = radius * np.exp(1j * angle)
        if not check_creg(x, t, margin=1e-3):
            continue
        a = (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) / np.sqrt(2)
        if np.any(np.abs(a.sum(axis=1)) < 0.1):
            continue
        c = (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / np.sqrt(2)
        try:
            coords = LocalCoordinates.make(x, a, c)
            return point_from_coordinates(coords, params, spec)
        except (Degenerate, RegularityViolation, SingularFactor):
            continue
    raise SamplingExhausted(f"no admissible point after {max_tries} draws")


def random_coordinates(spec: ModelSpec, params: ParameterSet, seed: int,
                       max_tries: int = 1000) -> LocalCoordinates:
    """Sample admissible local coordinates with the same scheme as random_point."""
    rng = np.random.Generator(np.random.Philox(seed))
    n, d = spec.n, spec.d
    for _ in range(max_tries):
        radius = rng.uniform(0.5, 2.0, size=n)
        angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
        x = radius * np.exp(1j * angle)
        if not check_creg(x, params.t, margin=1e-3):
            continue
        a = (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) / np.sqrt(2)
        if np.any(np.abs(a.sum(axis=1)) < 0.1):
            continue
        c = (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / np.sqrt(2)
        return LocalCoordinates.make(x, a, c)
    raise SamplingExhausted(f"no admissible coordinates after {max_tries} draws")


def framing_product(point: RepPoint, reverse: bool = True) -> np.ndarray:
    """Product of the factors Id + W_a V_a; reversed order (a = d..1) by default."""
    n = point.spec.n
    out = np.eye(n, dtype=complex)
    indices = range(point.spec.d - 1, -1, -1) if reverse else range(point.spec.d)
    for a in indices:
        out = out @ (np.eye(n) + point.W[a] @ point.V[a])
    return out


def moment_residual(point: RepPoint, params: ParameterSet):
    """Frobenius norms of the m+1 moment-condition residuals.

    Index s < m holds the cycle-vertex residual, the last entry the scalar
    framing-vertex residual.
    """
    spec = point.spec
    n, m = spec.n, spec.m
    eye = np.eye(n)
    residuals = []
    for s in range(m):
        lhs_num = eye + point.X[s] @ point.Y[s]
        prev = (s - 1) % m
        lhs_den = eye + point.Y[prev] @ point.X[prev]
        try:
            lhs = lhs_num @ np.linalg.inv(lhs_den)
        except np.linalg.LinAlgError as exc:
            raise SingularFactor(f"Id + Y_{prev} X_{prev} is singular") from exc
        if s == 0:
            rhs = params.q[0] * framing_product(point, reverse=True)
        else:
            rhs = params.q[s] * eye
        residuals.append(float(np.linalg.norm(lhs - rhs)))
    prod = 1.0 + 0.0j
    for a in range(spec.d):
        prod *= 1.0 + complex((point.V[a] @ point.W[a])[0, 0])
    residuals.append(abs(prod - params.q_inf))
    return residuals


def gauge_act(g, point: RepPoint) -> RepPoint:
    """Act by (g_s) in the gauge group: X_s -> g_s X_s g_{s+1}^(-1), etc."""
    spec = point.spec
    m = spec.m
    g = [np.asarray(gs, dtype=complex) for gs in g]
    if len(g) != m:
        raise ValueError("need one gauge matrix per cycle vertex")
    ginv = []
    for s, gs in enumerate(g):
        try:
            ginv.append(np.linalg.inv(gs))
        except np.linalg.LinAlgError as exc:
            raise SingularGauge(f"gauge matrix g_{s} is singular") from exc
    X = [g[s] @ point.X[s] @ ginv[(s + 1) % m] for s in range(m)]
    Y = [g[(s + 1) % m] @ point.Y[s] @ ginv[s] for s in range(m)]
    V = [point.V[a] @ ginv[0] for a in range(spec.d)]
    W = [g[0] @ point.W[a] for a in range(spec.d)]
    return RepPoint.make(spec, X, Y, V, W)


def spin_data(point: RepPoint, params: ParameterSet) -> SpinData:
    """Spin matrices Am, Cm of the point (requires X_{m-1} invertible)."""
    spec = point.spec
    n, d = spec.n, spec.d
    Z = point.require_Z()
    Am = np.hstack([point.W[a] for a in range(d)])
    Cm = np.zeros((d, n), dtype=complex)
    acc = np.eye(n, dtype=complex)
    for a in range(d):
        Cm[a] = (point.V[a] @ acc @ Z[spec.m - 1]).reshape(n) / params.t
        acc = (np.eye(n) + point.W[a] @ point.V[a]) @ acc
    return SpinData(Am=_readonly(Am), Cm=_readonly(Cm), S=_readonly(Am @ Cm))


def reduced_quadruple(point: RepPoint, params: ParameterSet,
                      check_tol: float = 1e-9) -> ReducedQuadruple:
    """Normalize X_0 = ... = X_{m-2} = Id and return the quadruple (A, B, bigA, bigC)."""
    spec = point.spec
    m, n = spec.m, spec.n
    if point.Z is None:
        raise SingularX("point has a singular X_s")
    g = [np.eye(n, dtype=complex)]
    for s in range(m - 1):
        g.append(g[s] @ point.X[s])
    normalized = gauge_act(g, point)
    A = normalized.X[m - 1]
    # X_0 Z_0 = t_0 B on-shell; the normalized frame has X_0 = Id when m >= 2,
    # while the Jordan case keeps X_0 = A
    B = normalized.X[0] @ normalized.require_Z()[0] / params.q[0]
    spins = spin_data(normalized, params)
    bigA = A @ spins.Am
    bigC = np.array(spins.Cm)

    Ainv = np.linalg.inv(A)
    lhs = params.q[0] * B @ Ainv
    rhs = params.q[0] * params.t * (Ainv @ B + Ainv @ bigA @ bigC)
    scale = max(1.0, np.linalg.norm(lhs))
    if np.linalg.norm(lhs - rhs) > check_tol * scale:
        raise Degenerate("reduced quadruple fails the commutation identity")
    return ReducedQuadruple(A=_readonly(A), B=_readonly(B),
                            bigA=_readonly(bigA), bigC=_readonly(bigC))


def quadruple_from_coordinates(coords: LocalCoordinates, params: ParameterSet
                               ) -> ReducedQuadruple:
    """The quadruple (diag x, B, a, c) of local coordinates, without gauging."""
    A = np.diag(coords.x)
    B = lax_matrix(coords, params.t)
    return ReducedQuadruple(A=_readonly(A), B=_readonly(B),
                            bigA=_readonly(coords.a), bigC=_readonly(coords.c))


def diagonalize_quadruple(quad: ReducedQuadruple) -> ReducedQuadruple:
    """Conjugate so A is diagonal with eigenvalues sorted lexicographically by (Re, Im)."""
    vals, vecs = np.linalg.eig(quad.A)
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    vinv = np.linalg.inv(vecs)
    return ReducedQuadruple(
        A=_readonly(np.diag(vals)),
        B=_readonly(vinv @ quad.B @ vecs),
        bigA=_readonly(vinv @ quad.bigA),
        bigC=_readonly(quad.bigC @ vecs),
    )
