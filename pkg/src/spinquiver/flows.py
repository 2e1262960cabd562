"""Explicit Hamiltonian flows and a fixed-step RK4 oracle.

The three integrable flows admit closed forms on the total matrices:

    tr Z^k:        X(t) = X(0) exp(-t Z^k),          Z, V, W constant
    tr Y^k:        X(t) = X(0) exp(-t Y^k) + Y^(-1)(exp(-t Y^k) - 1),   Y const
    tr (1+XY)^k:   X(t) = exp(-t T^k) X(0),          T = 1 + XY constant

all with d/dt normalized as (1/k) {tr U^k, -}.  The analytic factor in the
second flow is evaluated through an augmented-block exponential, so Y need
not be invertible.  The oracle integrates the same vector fields (at general
spectral parameter) with classical RK4; it exists to cross-check the closed
forms and to drive conservation checks, not as a production integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularFactor
from .params import ParameterSet
from .points import RepPoint, _readonly
from .families import total_matrices

_COND_LIMIT = 1e8


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential: eigendecomposition when well-conditioned, else Pade."""
    try:
        vals, vecs = np.linalg.eig(A)
        cond = np.linalg.cond(vecs)
        if np.isfinite(cond) and cond < _COND_LIMIT:
            return (vecs * np.exp(vals)) @ np.linalg.inv(vecs)
    except np.linalg.LinAlgError:
        pass
    return scipy.linalg.expm(A)


def phi1(A: np.ndarray) -> np.ndarray:
    """The entire function (e^A - 1) A^(-1) = sum A^j / (j+1)!, inversion-free."""
    n = A.shape[0]
    aug = np.zeros((2 * n, 2 * n), dtype=complex)
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    return expm(aug)[:n, n:]


@dataclass(frozen=True)
class FlowSpec:
    """Which flow to run: hamiltonian in {trZ, trY, trT}, power k, spectral eta."""

    hamiltonian: str
    k: int
    time: complex
    eta: complex = 0.0
    steps: int = 100

    def __post_init__(self):
        if self.hamiltonian not in ("trZ", "trY", "trT"):
            raise ValueError("hamiltonian must be one of trZ, trY, trT")
        if self.k < 1:
            raise ValueError("power k must be >= 1")


def _blocks_from_total(total: np.ndarray, m: int, n: int, forward: bool):
    """Extract cycle blocks; forward = (s, s+1) pattern, else (s+1, s)."""
    out = []
    for s in range(m):
        sp = (s + 1) % m
        if forward:
            out.append(total[s * n:(s + 1) * n, sp * n:(sp + 1) * n])
        else:
            out.append(total[sp * n:(sp + 1) * n, s * n:(s + 1) * n])
    return out


def _point_with_XZ(point: RepPoint, Xb, Zb) -> RepPoint:
    spec = point.spec
    Y = [Zb[s] - np.linalg.inv(Xb[s]) for s in range(spec.m)]
    made = RepPoint.make(spec, Xb, Y, point.V, point.W)
    # keep the conserved matrix bit-identical rather than re-derived
    return RepPoint(spec=spec, X=made.X, Y=made.Y, V=made.V, W=made.W,
                    Z=tuple(_readonly(z) for z in Zb))


def flow_Z(point: RepPoint, k: int, time: complex) -> RepPoint:
    """Closed-form flow of tr Z^k (k a multiple of m); Z, V, W exactly constant."""
    spec = point.spec
    m, n = spec.m, spec.n
    if k % m:
        raise ValueError("tr Z^k flows need m | k")
    tm = total_matrices(point)
    if tm.Zt is None:
        raise SingularFactor("flow of tr Z^k needs invertible X")
    Xt = tm.Xt @ expm(-time * np.linalg.matrix_power(tm.Zt, k))
    Xb = _blocks_from_total(Xt, m, n, forward=True)
    return _point_with_XZ(point, Xb, list(point.Z))


def flow_Y(point: RepPoint, k: int, time: complex) -> RepPoint:
    """Closed-form flow of tr Y^k (k a multiple of m); Y, V, W exactly constant."""
    spec = point.spec
    m, n = spec.m, spec.n
    if k % m:
        raise ValueError("tr Y^k flows need m | k")
    tm = total_matrices(point)
    A = -time * np.linalg.matrix_power(tm.Yt, k)
    E = expm(A)
    # Y^(-1)(E - 1) = -time * Y^(k-1) phi1(A), no inversion needed
    second = -time * np.linalg.matrix_power(tm.Yt, k - 1) @ phi1(A)
    Xt = tm.Xt @ E + second
    Xb = _blocks_from_total(Xt, m, n, forward=True)
    return RepPoint.make(spec, Xb, point.Y, point.V, point.W)


def flow_T(point: RepPoint, k: int, time: complex) -> RepPoint:
    """Closed-form flow of tr (1+XY)^k; T, V, W exactly constant."""
    spec = point.spec
    m, n = spec.m, spec.n
    tm = total_matrices(point)
    N = m * n
    T = np.eye(N) + tm.Xt @ tm.Yt
    Xt = expm(-time * np.linalg.matrix_power(T, k)) @ tm.Xt
    Xb = _blocks_from_total(Xt, m, n, forward=True)
    eye = np.eye(n)
    Yb = []
    for s in range(m):
        Ts = T[s * n:(s + 1) * n, s * n:(s + 1) * n]
        try:
            Yb.append(np.linalg.inv(Xb[s]) @ (Ts - eye))
        except np.linalg.LinAlgError as exc:
            raise SingularFactor(f"X_{s} singular at flow endpoint") from exc
    return RepPoint.make(spec, Xb, Yb, point.V, point.W)


# -- RK4 oracle ---------------------------------------------------------------

def _cycle_identity(m: int, n: int) -> np.ndarray:
    return np.eye(m * n, dtype=complex)


def _theta_from_XZ(Xt, Zt):
    XZ = Xt @ Zt
    ZX = Zt @ Xt
    return XZ @ np.linalg.inv(ZX)


def _vf_Z(Xt, Zt, k, eta):
    Theta = _theta_from_XZ(Xt, Zt)
    eye = np.eye(Xt.shape[0])
    U = Zt @ (eye + eta * Theta)
    Ukm1 = np.linalg.matrix_power(U, k - 1)
    dX = -eta * (Theta @ Ukm1 @ Zt @ Xt) - Xt @ Ukm1 @ Zt
    dZ = -(Zt @ Ukm1 @ Zt) + Ukm1 @ Zt @ Zt
    return dX, dZ


def _vf_Y(Xt, Yt, k, eta):
    eye = np.eye(Xt.shape[0])
    T1 = eye + Xt @ Yt
    W = eye + Yt @ Xt
    Theta = T1 @ np.linalg.inv(W)
    U = Yt @ (eye + eta * Theta)
    Ukm1 = np.linalg.matrix_power(U, k - 1)
    dX = -Ukm1 - Xt @ Ukm1 @ Yt - eta * (Theta @ Ukm1 @ W)
    dY = -(Yt @ Ukm1 @ Yt) + Ukm1 @ Yt @ Yt
    return dX, dY


def _vf_T(Xt, Ut, k, eta):
    eye = np.eye(Xt.shape[0])
    Xinv = np.linalg.inv(Xt)
    W = Xinv @ Ut @ Xt                      # 1 + YX
    Theta_inv = W @ np.linalg.inv(Ut)
    U_eta = Ut @ (eye + eta * Theta_inv)
    Ukm1 = np.linalg.matrix_power(U_eta, k - 1)
    dX = -(Ukm1 @ Ut @ Xt) - eta * (Xt @ Theta_inv @ Ukm1 @ Ut)
    dU = -(Ukm1 @ Ut @ Ut) + Ut @ Ukm1 @ Ut
    return dX, dU


@dataclass
class Trajectory:
    """Sampled oracle trajectory; points indexed in step order."""

    times: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def append(self, t, point):
        self.times.append(t)
        self.points.append(point)

    @property
    def endpoint(self) -> RepPoint:
        return self.points[-1]


def ode_oracle(point: RepPoint, flow: FlowSpec, params: ParameterSet | None = None,
               samples: int = 10) -> Trajectory:
    """Integrate the flow vector field with classical RK4; V, W stay constant.

    Returns the sampled trajectory; raises SingularFactor with the partial
    trajectory attached (args[1]) if an inverse fails mid-run.
    """
    spec = point.spec
    m, n = spec.m, spec.n
    if flow.hamiltonian in ("trZ", "trY") and flow.k % m:
        raise ValueError("trZ/trY flows need m | k")
    tm = total_matrices(point)
    if flow.hamiltonian == "trZ":
        if tm.Zt is None:
            raise SingularFactor("oracle for tr Z^k needs invertible X")
        state = (tm.Xt.copy(), tm.Zt.copy())
        vf = lambda X, M: _vf_Z(X, M, flow.k, flow.eta)
        rebuild = lambda X, M: _point_with_XZ(
            point, _blocks_from_total(X, m, n, True), _blocks_from_total(M, m, n, False))
    elif flow.hamiltonian == "trY":
        state = (tm.Xt.copy(), tm.Yt.copy())
        vf = lambda X, M: _vf_Y(X, M, flow.k, flow.eta)
        rebuild = lambda X, M: RepPoint.make(
            spec, _blocks_from_total(X, m, n, True), _blocks_from_total(M, m, n, False),
            point.V, point.W)
    else:
        U0 = _cycle_identity(m, n) + tm.Xt @ tm.Yt
        state = (tm.Xt.copy(), U0)

        def rebuild_T(X, U):
            Xb = _blocks_from_total(X, m, n, True)
            eye = np.eye(n)
            Yb = [np.linalg.inv(Xb[s]) @ (U[s * n:(s + 1) * n, s * n:(s + 1) * n] - eye)
                  for s in range(m)]
            return RepPoint.make(spec, Xb, Yb, point.V, point.W)

        vf = lambda X, M: _vf_T(X, M, flow.k, flow.eta)
        rebuild = rebuild_T

    h = flow.time / flow.steps
    stride = max(1, flow.steps // samples)
    traj = Trajectory()
    traj.append(0.0, point)
    X, M = state
    for step in range(1, flow.steps + 1):
        try:
            k1 = vf(X, M)
            k2 = vf(X + 0.5 * h * k1[0], M + 0.5 * h * k1[1])
            k3 = vf(X + 0.5 * h * k2[0], M + 0.5 * h * k2[1])
            k4 = vf(X + h * k3[0], M + h * k3[1])
        except np.linalg.LinAlgError as exc:
            err = SingularFactor(f"oracle singular at step {step}", traj)
            raise err from exc
        X = X + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        M = M + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if step % stride == 0 or step == flow.steps:
            traj.append(step * h, rebuild(X, M))
    return traj


def closed_form_flow(point: RepPoint, flow: FlowSpec) -> RepPoint:
    """Dispatch the closed-form flow matching the oracle's Hamiltonian at eta = 0."""
    if flow.eta != 0:
        raise ValueError("closed forms exist only at eta = 0")
    if flow.hamiltonian == "trZ":
        return flow_Z(point, flow.k, flow.time)
    if flow.hamiltonian == "trY":
        return flow_Y(point, flow.k, flow.time)
    return flow_T(point, flow.k, flow.time)


def conservation_report(point: RepPoint, flow: FlowSpec, observables: dict,
                        params: ParameterSet | None = None,
                        samples: int = 10) -> dict:
    """Evaluate named observables along the oracle trajectory; report max drift.

    observables maps name -> callable(RepPoint) -> complex/float.  The report
    holds per-name initial value, max absolute drift, and relative drift.
    """
    traj = ode_oracle(point, flow, params, samples=samples)
    report = {}
    for name, fn in observables.items():
        series = [complex(fn(p)) for p in traj.points]
        base = series[0]
        drift = max(abs(v - base) for v in series)
        report[name] = {
            "initial": base,
            "max_drift": drift,
            "rel_drift": drift / max(1.0, abs(base)),
        }
    return report
