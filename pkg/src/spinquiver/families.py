"""Commuting Hamiltonian families, their reduced closed forms, and rank counts.

The four spectral-parameter families are symmetric functions of

    1: (1 + eta Theta^(-1)) X        2: (1 + eta Theta^(-1)) (1 + XY)
    3: (1 + eta Theta) Y             4: (1 + eta Theta) (Y + X^(-1))

on the total cycle matrices, with Theta = (1 + XY)(1 + YX)^(-1) the cycle
moment map.  On the X-invertible locus they reduce to the spin RS families
G, H, F in the quadruple (A, B, bigA, bigC), which is what the independence
counts and the spectral-curve constraints are computed from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brackets import phi_localized_word, phi_word_terms
from .engine import PointEngine
from .errors import IllConditioned, SingularFactor
from .params import ParameterSet
from .points import LocalCoordinates, RepPoint, ReducedQuadruple, quadruple_from_coordinates
from .words import WordSum

FAMILIES = (1, 2, 3, 4)


@dataclass(frozen=True)
class TotalMatrices:
    """Assembled cycle-space (m n x m n) matrices of a point."""

    Xt: np.ndarray
    Yt: np.ndarray
    Zt: np.ndarray | None
    Theta: np.ndarray


@dataclass(frozen=True)
class EtaPolynomial:
    """Coefficients of a polynomial in the spectral parameter, coeffs[l] ~ eta^l."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, eta: complex) -> complex:
        out = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            out = out * eta + c
        return out


def total_matrices(point: RepPoint) -> TotalMatrices:
    """Assemble Xt, Yt, Zt and the block-diagonal Theta from the point blocks."""
    m, n = point.spec.m, point.spec.n
    N = m * n
    Xt = np.zeros((N, N), dtype=complex)
    Yt = np.zeros((N, N), dtype=complex)
    for s in range(m):
        sp = (s + 1) % m
        Xt[s * n:(s + 1) * n, sp * n:(sp + 1) * n] = point.X[s]
        Yt[sp * n:(sp + 1) * n, s * n:(s + 1) * n] = point.Y[s]
    Zt = None
    if point.Z is not None:
        Zt = np.zeros((N, N), dtype=complex)
        for s in range(m):
            sp = (s + 1) % m
            Zt[sp * n:(sp + 1) * n, s * n:(s + 1) * n] = point.Z[s]
    eye = np.eye(n)
    Theta = np.zeros((N, N), dtype=complex)
    for s in range(m):
        prev = (s - 1) % m
        den = eye + point.Y[prev] @ point.X[prev]
        try:
            block = (eye + point.X[s] @ point.Y[s]) @ np.linalg.inv(den)
        except np.linalg.LinAlgError as exc:
            raise SingularFactor(f"Id + Y_{prev} X_{prev} is singular") from exc
        Theta[s * n:(s + 1) * n, s * n:(s + 1) * n] = block
    return TotalMatrices(Xt=Xt, Yt=Yt, Zt=Zt, Theta=Theta)


def _family_matrix(tm: TotalMatrices, family: int, eta: complex) -> np.ndarray:
    N = tm.Xt.shape[0]
    eye = np.eye(N)
    if family == 1:
        return (eye + eta * np.linalg.inv(tm.Theta)) @ tm.Xt
    if family == 2:
        return (eye + eta * np.linalg.inv(tm.Theta)) @ (eye + tm.Xt @ tm.Yt)
    if family == 3:
        return (eye + eta * tm.Theta) @ tm.Yt
    if family == 4:
        if tm.Zt is None:
            raise SingularFactor("family 4 needs invertible X")
        return (eye + eta * tm.Theta) @ tm.Zt
    raise ValueError(f"family must be 1..4, got {family}")


def family_value(point: RepPoint, family: int, j: int, eta: complex) -> complex:
    """tr M(eta)^j of the chosen family; families 1, 3, 4 vanish unless m | j."""
    tm = total_matrices(point)
    M = _family_matrix(tm, family, eta)
    return complex(np.trace(np.linalg.matrix_power(M, j)))


def family_gradients(eng: PointEngine, family: int, j: int, eta: complex) -> dict:
    """Matrix gradients of the family value over the base generators x_s, y_s.

    Returned as the D-dictionary consumed by PointEngine.bracket_gradients.
    """
    point = eng.point
    tm = total_matrices(point)
    N = tm.Xt.shape[0]
    eye = np.eye(N)
    X, Y = tm.Xt, tm.Yt
    T1 = eye + X @ Y
    Winv = np.linalg.inv(eye + Y @ X)
    Theta = tm.Theta
    M = _family_matrix(tm, family, eta)
    P = j * np.linalg.matrix_power(M, j - 1)

    Q_X = np.zeros((N, N), dtype=complex)
    Q_Y = np.zeros((N, N), dtype=complex)
    S_Theta = np.zeros((N, N), dtype=complex)

    if family in (1, 2):
        Thinv = np.linalg.inv(Theta)
        damp = eye + eta * Thinv
        if family == 1:
            Q_X += P @ damp
            S_inv = eta * (X @ P)
        else:
            S2 = P @ damp
            Q_X += Y @ S2
            Q_Y += S2 @ X
            S_inv = eta * (T1 @ P)
        S_Theta += -(Thinv @ S_inv @ Thinv)
    else:
        damp = eye + eta * Theta
        if family == 3:
            Q_Y += P @ damp
            S_Theta += eta * (Y @ P)
        else:
            Zt = tm.Zt
            if Zt is None:
                raise SingularFactor("family 4 needs invertible X")
            Q_Z = P @ damp
            Xinv = np.linalg.inv(X)
            Q_Y += Q_Z
            Q_X += -(Xinv @ Q_Z @ Xinv)
            S_Theta += eta * (Zt @ P)

    # chain through Theta = (1 + XY)(1 + YX)^(-1)
    S = S_Theta
    Q_X += Y @ Winv @ S - Winv @ S @ Theta @ Y
    Q_Y += Winv @ S @ X - X @ Winv @ S @ Theta

    return _cycle_grads_to_letters(eng, Q_X, Q_Y)


def _cycle_grads_to_letters(eng: PointEngine, Q_X: np.ndarray, Q_Y: np.ndarray) -> dict:
    m, n = eng.m, eng.n
    grads = {}
    for s in range(m):
        sp = (s + 1) % m
        dx = Q_X[sp * n:(sp + 1) * n, s * n:(s + 1) * n].T
        dy = Q_Y[s * n:(s + 1) * n, sp * n:(sp + 1) * n].T
        if np.any(dx):
            grads[("x", s)] = eng.embed(dx, s, sp)
        if np.any(dy):
            grads[("y", s)] = eng.embed(dy, sp, s)
    return grads


def family_poly(point: RepPoint, family: int, j: int,
                solve_tol: float = 1e-8) -> EtaPolynomial:
    """Expand the family value in the spectral parameter by interpolation.

    Samples at the (j+1)-st roots of unity and solves the Vandermonde system;
    raises IllConditioned when the solve does not reproduce the samples.
    """
    tm = total_matrices(point)
    return _interp_poly(lambda eta: complex(np.trace(np.linalg.matrix_power(
        _family_matrix(tm, family, eta), j))), j, solve_tol)


def _interp_poly(fn, degree: int, solve_tol: float = 1e-8) -> EtaPolynomial:
    nodes = np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
    vals = np.array([fn(z) for z in nodes])
    vander = np.vander(nodes, degree + 1, increasing=True)
    coeffs = np.linalg.solve(vander, vals)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(vander @ coeffs - vals)) > solve_tol * scale:
        raise IllConditioned("spectral-parameter interpolation did not converge")
    return EtaPolynomial(coeffs=tuple(coeffs))


# -- reduced closed forms ----------------------------------------------------

def reduced_G(quad: ReducedQuadruple, params: ParameterSet, j: int,
              eta_prime: complex) -> complex:
    """tr [ A^(-1)((t^(-1) + eta') B + eta' S) B^(m-1) ]^j."""
    t = params.t
    m = params.m
    S = quad.bigA @ quad.bigC
    Ainv = np.linalg.inv(quad.A)
    core = Ainv @ ((1.0 / t + eta_prime) * quad.B + eta_prime * S)
    M = core @ np.linalg.matrix_power(quad.B, m - 1)
    return complex(np.trace(np.linalg.matrix_power(M, j)))


def reduced_H(quad: ReducedQuadruple, params: ParameterSet, j: int,
              eta: complex) -> complex:
    """tr [ ((1 + eta q_0) + eta q_0 S B^(-1)) P(B) A^(-1) ]^j with P the t_s-root polynomial."""
    m = params.m
    n = quad.A.shape[0]
    S = quad.bigA @ quad.bigC
    try:
        Binv = np.linalg.inv(quad.B)
        Ainv = np.linalg.inv(quad.A)
    except np.linalg.LinAlgError as exc:
        raise SingularFactor("reduced H needs invertible A and B") from exc
    PB = np.eye(n, dtype=complex)
    for s in range(m - 1, -1, -1):
        PB = PB @ (quad.B - np.eye(n) / params.t_at(s))
    q0 = params.q[0]
    M = ((1.0 + eta * q0) * np.eye(n) + eta * q0 * (S @ Binv)) @ PB @ Ainv
    return complex(np.trace(np.linalg.matrix_power(M, j)))


def reduced_F(point: RepPoint, j: int, eta: complex) -> complex:
    """Blockwise sum_s tr (X_s Z_s + eta Z_s X_s)^j."""
    Z = point.require_Z()
    total = 0.0 + 0.0j
    for s in range(point.spec.m):
        M = point.X[s] @ Z[s] + eta * (Z[s] @ point.X[s])
        total += np.trace(np.linalg.matrix_power(M, j))
    return complex(total)


def reduced_poly(kind: str, quad_or_point, params: ParameterSet, j: int) -> EtaPolynomial:
    """Eta-expansion of a reduced family member (kind in G, H, F)."""
    if kind == "G":
        return _interp_poly(lambda e: reduced_G(quad_or_point, params, j, e), j)
    if kind == "H":
        return _interp_poly(lambda e: reduced_H(quad_or_point, params, j, e), j)
    if kind == "F":
        return _interp_poly(lambda e: reduced_F(quad_or_point, j, e), j)
    raise ValueError(f"unknown reduced family {kind!r}")


def big_K_constant(params: ParameterSet, eta: complex) -> complex:
    """t^2 prod_{s != 0} t_{s-1}(1 + eta q_s), the family-4 block prefactor."""
    out = params.t ** 2
    for s in range(1, params.m):
        out *= params.t_at(s - 1) * (1.0 + eta * params.q[s])
    return out


def big_C_constant(params: ParameterSet, eta: complex) -> complex:
    """t prod_{s != 0} t_{s-1}(1 + eta q_s), the family-3 normalization."""
    out = params.t
    for s in range(1, params.m):
        out *= params.t_at(s - 1) * (1.0 + eta * params.q[s])
    return out


# -- spectral curve -----------------------------------------------------------

@dataclass(frozen=True)
class SpectralCoefficients:
    """Coefficients of det(C + eta T - mu Id) = sum Gamma[i, p] eta^i mu^p."""

    Gamma: np.ndarray

    @property
    def n(self) -> int:
        return self.Gamma.shape[1] - 1

    def eta_block_max(self, i_from: int) -> float:
        """Largest coefficient magnitude among eta-orders >= i_from."""
        return float(np.max(np.abs(self.Gamma[i_from:, :]))) if i_from <= self.n else 0.0

    def scale(self) -> float:
        return float(np.max(np.abs(self.Gamma)))


def spectral_coeffs(quad: ReducedQuadruple, params: ParameterSet,
                    solve_tol: float = 1e-8) -> SpectralCoefficients:
    """Expand the spectral curve det(C + eta T - mu) in both variables.

    C = A^(-1) B^m and T = S B^(m-1) A^(-1).  Interpolates the mu-monomial
    coefficients over eta at roots of unity.
    """
    m = params.m
    Ainv = np.linalg.inv(quad.A)
    S = quad.bigA @ quad.bigC
    C = Ainv @ np.linalg.matrix_power(quad.B, m)
    T = S @ np.linalg.matrix_power(quad.B, m - 1) @ Ainv
    n = C.shape[0]

    nodes = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
    # row r: coefficients of mu^p in det(C + eta_r T - mu Id), p = 0..n
    samples = np.zeros((n + 1, n + 1), dtype=complex)
    det_sign = (-1.0) ** n
    for r, eta in enumerate(nodes):
        charpoly = np.poly(C + eta * T)      # mu^n + a_1 mu^(n-1) + ... + a_n
        for p in range(n + 1):
            samples[r, p] = det_sign * charpoly[n - p]
    vander = np.vander(nodes, n + 1, increasing=True)
    Gamma = np.linalg.solve(vander, samples)
    scale = max(1.0, float(np.max(np.abs(samples))))
    if np.max(np.abs(vander @ Gamma - samples)) > solve_tol * scale:
        raise IllConditioned("spectral-curve interpolation did not converge")
    return SpectralCoefficients(Gamma=Gamma)


# -- functional independence --------------------------------------------------

def index_set(n: int, d: int):
    """The coefficient index set: j = 1..n, l = 0..min(j-1, d)."""
    return tuple((j, l) for j in range(1, n + 1) for l in range(0, min(j - 1, d) + 1))


def _pack_coords(coords: LocalCoordinates) -> np.ndarray:
    n, d = coords.n, coords.d
    parts = [coords.x]
    if d > 1:
        parts.append(coords.a[:, :d - 1].reshape(-1))
    parts.append(coords.c.reshape(-1))
    return np.concatenate(parts)


def _unpack_coords(vec: np.ndarray, n: int, d: int) -> LocalCoordinates:
    x = vec[:n]
    pos = n
    a = np.zeros((n, d), dtype=complex)
    if d > 1:
        a[:, :d - 1] = vec[pos:pos + n * (d - 1)].reshape(n, d - 1)
        pos += n * (d - 1)
    a[:, d - 1] = 1.0 - a[:, :d - 1].sum(axis=1)
    c = vec[pos:pos + d * n].reshape(d, n)
    # bypass normalization: rows already sum to one by construction
    obj = LocalCoordinates(x=x, a=a, c=c)
    return obj


def _coefficient_functions(coords: LocalCoordinates, family: str,
                           params: ParameterSet) -> np.ndarray:
    quad = quadruple_from_coordinates(coords, params)
    out = []
    n, d = coords.n, coords.d
    for j in range(1, n + 1):
        poly = reduced_poly(family, quad, params, j)
        for l in range(0, min(j - 1, d) + 1):
            out.append(poly.coeffs[l])
    return np.array(out)


# analytic gradients of the reduced families on the coordinate chart; these
# avoid the finite-difference noise floor that otherwise masks the smallest
# genuine singular values of the coefficient Jacobian

def _reduced_adjoints(kind: str, coords: LocalCoordinates, params: ParameterSet,
                      j: int, eta: complex):
    """Value and adjoints (AdjB, AdjS, AdjAinvDiag) of one reduced family member.

    Conventions: dF = sum_ij AdjB[i,j] dB[i,j] + sum_ij AdjS[i,j] dS[i,j]
    + sum_i AdjAinvDiag[i] d(1/x_i).
    """
    t = params.t
    m = params.m
    n = coords.n
    x = coords.x
    f = coords.f_matrix()
    denom = x[:, None] - t * x[None, :]
    B = t * f * (x[None, :] / denom)
    S = f
    Ainv = np.diag(1.0 / x)
    eye = np.eye(n)
    if kind == "G":
        core = (1.0 / t + eta) * B + eta * S
        Bm1 = np.linalg.matrix_power(B, m - 1)
        M = Ainv @ core @ Bm1
        P = j * np.linalg.matrix_power(M, j - 1)
        value = complex(np.trace(np.linalg.matrix_power(M, j)))
        QB = (1.0 / t + eta) * (Bm1 @ P @ Ainv)
        for p in range(m - 1):
            QB += (np.linalg.matrix_power(B, m - 2 - p) @ P @ Ainv @ core
                   @ np.linalg.matrix_power(B, p))
        QS = eta * (Bm1 @ P @ Ainv)
        QAi = core @ Bm1 @ P
        return value, QB.T, QS.T, np.diag(QAi.T)
    if kind == "H":
        q0 = params.q[0]
        Binv = np.linalg.inv(B)
        factors = [B - eye / params.t_at(s) for s in range(m)]
        PB = eye.copy()
        for s in range(m - 1, -1, -1):
            PB = PB @ factors[s]
        Lfac = (1.0 + eta * q0) * eye + eta * q0 * (S @ Binv)
        M = Lfac @ PB @ Ainv
        P = j * np.linalg.matrix_power(M, j - 1)
        value = complex(np.trace(np.linalg.matrix_power(M, j)))
        QS = eta * q0 * (Binv @ PB @ Ainv @ P)
        QB = -eta * q0 * (Binv @ PB @ Ainv @ P @ S @ Binv)
        # product-rule over the commuting factors (B - t_s^(-1))
        for s in range(m - 1, -1, -1):
            left = eye.copy()
            for sp in range(m - 1, s, -1):
                left = left @ factors[sp]
            right = eye.copy()
            for sp in range(s - 1, -1, -1):
                right = right @ factors[sp]
            QB += right @ Ainv @ P @ Lfac @ left
        QAi = P @ Lfac @ PB
        return value, QB.T, QS.T, np.diag(QAi.T)
    raise ValueError(f"analytic gradients only for G and H, not {kind!r}")


def _grad_packed(coords: LocalCoordinates, params: ParameterSet,
                 AdjB: np.ndarray, AdjS: np.ndarray,
                 AdjAinvDiag: np.ndarray) -> np.ndarray:
    """Pull the adjoints back to the packed free coordinates (x, a-free, c)."""
    t = params.t
    n, d = coords.n, coords.d
    x = coords.x
    a, c = coords.a, coords.c
    f = coords.f_matrix()
    denom = x[:, None] - t * x[None, :]
    K = x[None, :] / denom
    tK = t * K

    # dF/df via both B = t f K and S = f
    Adjf = AdjB * tK + AdjS

    grad_x = np.zeros(n, dtype=complex)
    D2 = t * f / denom ** 2
    grad_x += np.array([np.sum(AdjB[:, k] * D2[:, k] * x) for k in range(n)])
    grad_x -= np.array([np.sum(AdjB[k, :] * D2[k, :] * x) for k in range(n)])
    grad_x += AdjAinvDiag * (-1.0 / x ** 2)

    grad_a = Adjf @ c.T          # shape (n, d): dF/da[k, alpha]
    grad_c = a.T @ Adjf          # shape (d, n): dF/dc[alpha, k]

    parts = [grad_x]
    if d > 1:
        # row-sum constraint: a[:, d-1] = 1 - sum of the free columns
        free = grad_a[:, :d - 1] - grad_a[:, d - 1][:, None]
        parts.append(free.reshape(-1))
    parts.append(grad_c.reshape(-1))
    return np.concatenate(parts)


def coefficient_jacobian(coords: LocalCoordinates, family: str,
                         params: ParameterSet):
    """Values and the analytic complex Jacobian of the coefficient family."""
    n, d = coords.n, coords.d
    n_complex = n + n * (d - 1) + n * d
    pairs = index_set(n, d)
    values = np.zeros(len(pairs), dtype=complex)
    jac = np.zeros((len(pairs), n_complex), dtype=complex)
    row = 0
    for j in range(1, n + 1):
        nodes = np.exp(2j * np.pi * np.arange(j + 1) / (j + 1))
        vander = np.vander(nodes, j + 1, increasing=True)
        vals = np.zeros(j + 1, dtype=complex)
        grads = np.zeros((j + 1, n_complex), dtype=complex)
        for r, eta in enumerate(nodes):
            value, AdjB, AdjS, AdjAi = _reduced_adjoints(family, coords, params, j, eta)
            vals[r] = value
            grads[r] = _grad_packed(coords, params, AdjB, AdjS, AdjAi)
        coeff_vals = np.linalg.solve(vander, vals)
        coeff_grads = np.linalg.solve(vander, grads)
        for l in range(0, min(j - 1, d) + 1):
            values[row] = coeff_vals[l]
            jac[row] = coeff_grads[l]
            row += 1
    return values, jac


def independence_rank(coords: LocalCoordinates, family: str, params: ParameterSet,
                      step: float = 1e-6, sv_tol: float = 1e-7,
                      gap_factor: float = 10.0, method: str = "analytic"):
    """Numerical rank of the coefficient family on the 2nd free coordinates.

    With method="analytic" (default) the complex Jacobian comes from exact
    adjoint differentiation; method="fd" uses central differences on the real
    and imaginary parts separately.  Either way the functions are holomorphic,
    so the real rank is even and the complex rank is half of it; the returned
    singular values are those of the real Jacobian (each complex value twice).

    Rows are equilibrated before the SVD because coefficient magnitudes span
    many orders.  Raises IllConditioned when the gap at the threshold cut is
    below the required factor or sub-threshold values sit above the noise
    floor of the differentiation scheme.

    Returns (rank, singular_values).
    """
    n, d = coords.n, coords.d
    if method == "analytic":
        _, jac_c = coefficient_jacobian(coords, family, params)
        norms = np.linalg.norm(jac_c, axis=1)
        norms[norms == 0] = 1.0
        jac_c = jac_c / norms[:, None]
        sv_c = np.linalg.svd(jac_c, compute_uv=False)
        svals = np.sort(np.concatenate([sv_c, sv_c]))[::-1]
        noise_floor = 1e-11
    elif method == "fd":
        base = _pack_coords(coords)
        n_complex = base.size

        def evaluate(vec):
            return _coefficient_functions(_unpack_coords(vec, n, d), family, params)

        n_funcs = len(index_set(n, d))
        jac = np.zeros((2 * n_funcs, 2 * n_complex))
        for k in range(n_complex):
            for part, delta in ((0, step), (1, 1j * step)):
                plus = np.array(base)
                minus = np.array(base)
                plus[k] += delta
                minus[k] -= delta
                deriv = (evaluate(plus) - evaluate(minus)) / (2 * step)
                col = 2 * k + part
                jac[0::2, col] = deriv.real
                jac[1::2, col] = deriv.imag
        for f in range(n_funcs):
            block = jac[2 * f:2 * f + 2, :]
            norm = np.linalg.norm(block)
            if norm > 0:
                jac[2 * f:2 * f + 2, :] = block / norm
        svals = np.linalg.svd(jac, compute_uv=False)
        noise_floor = 1e-8
    else:
        raise ValueError("method must be 'analytic' or 'fd'")

    cut = sv_tol * svals[0]
    rank_real = int(np.sum(svals > cut))
    if rank_real < len(svals) and svals[rank_real] > 0:
        if svals[rank_real - 1] / svals[rank_real] < gap_factor:
            raise IllConditioned("singular-value gap at the rank cut below 10x")
        if svals[rank_real] > noise_floor * svals[0]:
            raise IllConditioned("sub-threshold singular values above the noise floor")
    if rank_real % 2:
        raise IllConditioned("real Jacobian rank is odd; holomorphy violated")
    return rank_real // 2, svals


# -- degenerate integrability ---------------------------------------------------

def _u_total(eng: PointEngine, kind: str) -> np.ndarray:
    out = np.zeros((eng.N, eng.N), dtype=complex)
    if kind in ("x", "y", "z"):
        for s in range(eng.m):
            out += eng.eval_letter((kind, s))
        return out
    if kind == "t":
        for s in range(eng.m):
            out += eng.eval_letter(("x", s)) @ eng.eval_letter(("y", s))
            out += eng.eval_letter(("e", s))
        return out
    raise ValueError(f"unknown total kind {kind!r}")


def qu_generator(point: RepPoint, alpha: int, beta: int, ell: int, U: str,
                 engine: PointEngine | None = None) -> complex:
    """tr(W_alpha V_beta U^(l m)) with the vertex-0 vectors embedded in the total space."""
    eng = engine or PointEngine(point)
    W = eng.eval_letter(("w", alpha))
    V = eng.eval_letter(("v", beta))
    power = ell * eng.m if U in ("x", "y", "z") else ell
    Um = np.linalg.matrix_power(_u_total(eng, U), power)
    return complex(np.trace(W @ V @ Um))


def qu_gradients(point: RepPoint, alpha: int, beta: int, ell: int, U: str,
                 engine: PointEngine | None = None) -> dict:
    """Gradient dictionary of tr(W_alpha V_beta U^(l m)) over the base generators."""
    eng = engine or PointEngine(point)
    W = eng.eval_letter(("w", alpha))
    V = eng.eval_letter(("v", beta))
    Ut = _u_total(eng, U)
    K = ell * eng.m if U in ("x", "y", "z") else ell
    WV = W @ V
    Q_W = V @ np.linalg.matrix_power(Ut, K)
    Q_V = np.linalg.matrix_power(Ut, K) @ W
    Q_U = np.zeros((eng.N, eng.N), dtype=complex)
    for p in range(K):
        Q_U += np.linalg.matrix_power(Ut, K - 1 - p) @ WV @ np.linalg.matrix_power(Ut, p)
    return _distribute_u_grad(eng, U, Q_U, extra={("w", alpha): Q_W, ("v", beta): Q_V})


def power_trace_gradients(point: RepPoint, U: str, K: int,
                          engine: PointEngine | None = None) -> dict:
    """Gradient dictionary of tr U^K for U in {x, y, z, t=1+xy} total matrices."""
    eng = engine or PointEngine(point)
    Ut = _u_total(eng, U)
    Q_U = K * np.linalg.matrix_power(Ut, K - 1)
    return _distribute_u_grad(eng, U, Q_U)


def _distribute_u_grad(eng: PointEngine, U: str, Q_U: np.ndarray,
                       extra: dict | None = None) -> dict:
    accQ: dict = {}

    def add(key, mat):
        accQ[key] = accQ.get(key, 0.0) + mat

    if U == "x":
        for s in range(eng.m):
            add(("x", s), Q_U)
    elif U == "y":
        for s in range(eng.m):
            add(("y", s), Q_U)
    elif U == "z":
        Xinv = np.zeros((eng.N, eng.N), dtype=complex)
        for s in range(eng.m):
            Xinv += eng.eval_letter(("xi", s))
        sandwich = -(Xinv @ Q_U @ Xinv)
        for s in range(eng.m):
            add(("y", s), Q_U)
            add(("x", s), sandwich)
    elif U == "t":
        Xt = _u_total(eng, "x")
        Yt = _u_total(eng, "y")
        for s in range(eng.m):
            add(("x", s), Yt @ Q_U)
            add(("y", s), Q_U @ Xt)
    else:
        raise ValueError(f"unknown total kind {U!r}")
    if extra:
        for key, mat in extra.items():
            add(key, mat)
    return {g: eng._mask_to_block(np.transpose(Q), g) for g, Q in accQ.items()}


def _flatten_grads(eng: PointEngine, grads: dict) -> np.ndarray:
    out = []
    for kind in ("x", "y"):
        for s in range(eng.m):
            key = (kind, s)
            mat = grads.get(key)
            if mat is None:
                out.append(np.zeros(eng.n * eng.n, dtype=complex))
            else:
                t, h = (s, (s + 1) % eng.m) if kind == "x" else ((s + 1) % eng.m, s)
                out.append(mat[eng.block(t), eng.block(h)].reshape(-1))
    for kind, shape in (("v", eng.n), ("w", eng.n)):
        for a in range(1, eng.d + 1):
            key = (kind, a)
            mat = grads.get(key)
            if mat is None:
                out.append(np.zeros(shape, dtype=complex))
            elif kind == "v":
                out.append(mat[eng.block(eng.m), eng.block(0)].reshape(-1))
            else:
                out.append(mat[eng.block(0), eng.block(eng.m)].reshape(-1))
    return np.concatenate(out)


def cy2_rank(point: RepPoint, U: str, sv_tol: float = 1e-7,
             gap_factor: float = 10.0, engine: PointEngine | None = None):
    """Rank of the 2n functions tr U^(jm), tr(W_1 V_1 U^(jm)) on matrix entries.

    Uses the exact gradient dictionaries as Jacobian rows.  Returns
    (rank, singular_values); complains via IllConditioned on a weak gap.
    """
    eng = engine or PointEngine(point)
    n = eng.n
    rows = []
    for j in range(1, n + 1):
        K = j * eng.m if U in ("x", "y", "z") else j
        rows.append(_flatten_grads(eng, power_trace_gradients(point, U, K, engine=eng)))
        rows.append(_flatten_grads(eng, qu_gradients(point, 1, 1, j, U, engine=eng)))
    jac = np.array(rows)
    norms = np.linalg.norm(jac, axis=1)
    norms[norms == 0] = 1.0
    jac = jac / norms[:, None]
    svals = np.linalg.svd(jac, compute_uv=False)
    cut = sv_tol * svals[0]
    rank = int(np.sum(svals > cut))
    if rank < len(svals) and svals[rank] > 0:
        if svals[rank - 1] / svals[rank] < gap_factor:
            raise IllConditioned("singular-value gap at the rank cut below 10x")
    return rank, svals


def spect_residual(point: RepPoint, params: ParameterSet, U: str) -> float:
    """Residual of the conjugation identity tying U^m to the framing factors.

    With M = X_0 (U = z) or M = X_0 + Y_0^(-1) (U = y), the vertex-1 block of
    U^m conjugates to t * prod(Id + W_a V_a) times the vertex-0 block:
    M (U^m)_{11} M^(-1) = t Omega (U^m)_{00}.
    """
    from .points import framing_product
    eng = PointEngine(point, params)
    n, m = eng.n, eng.m
    if U == "z":
        Mmat = point.X[0]
        Ut = _u_total(eng, "z")
    elif U == "y":
        try:
            Mmat = point.X[0] + np.linalg.inv(point.Y[0])
        except np.linalg.LinAlgError as exc:
            raise SingularFactor("Y_0 not invertible") from exc
        Ut = _u_total(eng, "y")
    else:
        raise ValueError("U must be 'y' or 'z'")
    Um = np.linalg.matrix_power(Ut, m)
    blk0 = Um[eng.block(0), eng.block(0)]
    blk1 = Um[eng.block(1 % m), eng.block(1 % m)]
    try:
        lhs = Mmat @ blk1 @ np.linalg.inv(Mmat)
    except np.linalg.LinAlgError as exc:
        raise SingularFactor("conjugating block not invertible") from exc
    rhs = params.t * framing_product(point, reverse=True) @ blk0
    return float(np.linalg.norm(lhs - rhs))


# -- family words (for word-route cross checks) ---------------------------------

def family_word_sum(family: int, K: int, eta: complex, m: int) -> WordSum:
    """The element underlying a family member as an explicit word sum.

    Uses the x-localized moment word, so the letters stay in the {x, z}
    alphabet; family 3 uses the y-alphabet form with unit-plus-word inverses.
    Costs grow like 2^K: meant for small cross checks, not production sizes.
    """
    terms = []
    for start in range(m):
        if family == 4:
            terms.extend(_u_eta_words(K, eta, m, start, "z", inverse_phi=False))
        elif family == 1:
            terms.extend(_u_eta_words(K, eta, m, start, "x", inverse_phi=True))
        elif family == 2:
            terms.extend(_xz_eta_words(K, eta, m, start))
        elif family == 3:
            terms.extend(_y_eta_words(K, eta, m, start))
        else:
            raise ValueError("family must be 1..4")
    return WordSum(tuple(terms))


def _phi_inv_word(m: int, s: int):
    prev = (s - 1) % m
    return (("z", prev), ("x", prev), ("zi", s), ("xi", s))


def _u_eta_words(K, eta, m, start, kind, inverse_phi):
    out = [(1.0, ())]
    v = start
    for _ in range(K):
        if kind == "x":
            letter = ("x", v)
            v = (v + 1) % m
        else:
            letter = (kind, (v - 1) % m)
            v = (v - 1) % m
        phi_w = _phi_inv_word(m, v) if inverse_phi else phi_localized_word(m, v)
        new = []
        for c, w in out:
            w2 = w + (letter,)
            new.append((c, w2))
            new.append((c * eta, w2 + phi_w))
        out = new
    return out


def _xz_eta_words(K, eta, m, start):
    out = [(1.0, ())]
    v = start
    for _ in range(K):
        pair = (("x", v), ("z", v))
        new = []
        for c, w in out:
            w2 = w + pair
            new.append((c, w2))
            new.append((c * eta, w2 + _phi_inv_word(m, v)))
        out = new
    return out


def _y_eta_words(K, eta, m, start):
    # y-alphabet form; the cycle-only moment words come from d = 0
    out = [(1.0, ())]
    v = start
    for _ in range(K):
        letter = ("y", (v - 1) % m)
        v = (v - 1) % m
        new = []
        for c, w in out:
            w2 = w + (letter,)
            new.append((c, w2))
            for cp, wp in phi_word_terms(m, 0, v):
                new.append((c * eta * cp, w2 + wp))
        out = new
    return out
