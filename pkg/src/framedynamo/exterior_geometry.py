"""Connection forms and Riemann curvature of diagonal z-dependent coframes.

A coframe here is a triple of 1-forms

    omega^p = a_p(z) dp,   omega^q = a_q(z) dq,   omega^z = a_z(z) dz,

with strictly positive coefficients. Two independent curvature pipelines
are provided:

  * the structure-equation path: exterior derivatives of the coframe, the
    torsion-free antisymmetric connection solved as a determined linear
    system, then the curvature 2-forms
    R^i_j = d omega^i_j + omega^i_l ^ omega^l_j;

  * a coordinate Christoffel-symbol oracle: Gamma^a_{bc} from the metric
    components, the coordinate Riemann tensor, converted to the
    orthonormal frame.

2-forms are stored on the ordered wedge basis
(omega^p^omega^q, omega^p^omega^z, omega^q^omega^z); R^i_j expands as
(1/2) R^i_{jkl} omega^k ^ omega^l, so the stored pair coefficient equals
R^i_{jkl} for k < l. Coordinate Riemann convention:
R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce}Gamma^e_{db}
- Gamma^a_{de}Gamma^e_{cb}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .frame_calculus import FrameMetric

__all__ = [
    "CoframeBasis",
    "TwoForms",
    "ConnectionForms",
    "CurvatureReport",
    "exterior_derivative",
    "exterior_derivative_2form",
    "solve_connection",
    "curvature",
    "christoffel_oracle",
    "flat_coframe",
    "arnold_coframe",
    "conformal_coframe",
    "stretched_coframe",
    "stretched_coframe_half",
]

AXES = ("p", "q", "z")
WEDGE_PAIRS = ((0, 1), (0, 2), (1, 2))
_PAIR_INDEX = {(0, 1): 0, (0, 2): 1, (1, 2): 2}


def _pair_coeff(i: int, j: int) -> tuple[int, float]:
    """Index and sign of omega^i ^ omega^j on the ordered wedge basis."""
    if i == j:
        return 0, 0.0
    if i < j:
        return _PAIR_INDEX[(i, j)], 1.0
    return _PAIR_INDEX[(j, i)], -1.0


@dataclass(frozen=True)
class CoframeBasis:
    """Diagonal coframe with analytic coefficient derivatives."""

    coeff: tuple[Callable, Callable, Callable]
    d1: tuple[Callable, Callable, Callable]
    d2: tuple[Callable, Callable, Callable]
    label: str = "coframe"

    @classmethod
    def exponential(cls, scales: Sequence[float], rates: Sequence[float],
                    label: str = "coframe") -> "CoframeBasis":
        """Coefficients a_i(z) = scale_i * exp(rate_i * z)."""

        def make(c, r):
            return (lambda z: c * np.exp(r * np.asarray(z, dtype=float)),
                    lambda z: c * r * np.exp(r * np.asarray(z, dtype=float)),
                    lambda z: c * r * r * np.exp(r * np.asarray(z, dtype=float)))

        fs = [make(float(c), float(r)) for c, r in zip(scales, rates)]
        return cls(tuple(f[0] for f in fs), tuple(f[1] for f in fs),
                   tuple(f[2] for f in fs), label)

    @classmethod
    def from_samples(cls, z_samples: np.ndarray, coeff_samples: Sequence[np.ndarray],
                     label: str = "tabulated") -> "CoframeBasis":
        from scipy.interpolate import CubicSpline

        splines = [CubicSpline(z_samples, np.asarray(c, dtype=float))
                   for c in coeff_samples]
        return cls(tuple(splines),
                   tuple(s.derivative(1) for s in splines),
                   tuple(s.derivative(2) for s in splines), label)

    def coefficients(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        a = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                      for f in self.coeff])
        if np.any(a <= 0):
            raise ValueError(f"{self.label}: coframe coefficients must be "
                             "strictly positive on the sample points")
        return a

    def structure_rates(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """c_i = a_i'/(a_z a_i) and their z-derivatives."""
        z = np.asarray(z, dtype=float)
        a = self.coefficients(z)
        da = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                       for f in self.d1])
        d2a = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                        for f in self.d2])
        c = da / (a[2] * a)
        dc = d2a / (a[2] * a) - c * (da[2] / a[2] + da / a)
        return c, dc


def flat_coframe() -> CoframeBasis:
    return CoframeBasis.exponential((1, 1, 1), (0, 0, 0), "flat")


def arnold_coframe(lam: float) -> CoframeBasis:
    """Scale factors (e^{-lam z}, e^{lam z}, 1)."""
    return CoframeBasis.exponential((1, 1, 1), (-lam, lam, 0), "arnold")


def conformal_coframe(metric: FrameMetric, label: str = "conformal") -> CoframeBasis:
    """Coframe of a FrameMetric, Omega^{1/2}(e^{-lam z}, e^{lam z}, 1)."""
    lam = metric.lam
    rates = (-lam, lam, 0.0)

    def make(rate):
        def a(z):
            w, _, _ = metric.omega.sqrt_profile(z)
            return w * np.exp(rate * np.asarray(z, dtype=float))

        def da(z):
            w, dw, _ = metric.omega.sqrt_profile(z)
            e = np.exp(rate * np.asarray(z, dtype=float))
            return (dw + rate * w) * e

        def d2a(z):
            w, dw, d2w = metric.omega.sqrt_profile(z)
            e = np.exp(rate * np.asarray(z, dtype=float))
            return (d2w + 2 * rate * dw + rate * rate * w) * e

        return a, da, d2a

    fs = [make(r) for r in rates]
    return CoframeBasis(tuple(f[0] for f in fs), tuple(f[1] for f in fs),
                        tuple(f[2] for f in fs), label)


def stretched_coframe(lam: float) -> CoframeBasis:
    """Line element dp^2 + e^{4 lam z} dq^2 + e^{lam z} dz^2."""
    return CoframeBasis.exponential((1, 1, 1), (0, 2 * lam, lam / 2), "stretched")


def stretched_coframe_half(lam: float) -> CoframeBasis:
    """Variant with the q stretching halved: (1, e^{lam z}, e^{lam z/2}).

    This is the coefficient set whose torsion-free connection has the
    closed form omega^q_z = lam e^{-lam z/2} omega^q.
    """
    return CoframeBasis.exponential((1, 1, 1), (0, lam, lam / 2), "stretched-half")


@dataclass(frozen=True)
class TwoForms:
    """One 2-form per frame leg, on the ordered wedge basis."""

    z: np.ndarray
    coeff: np.ndarray  # (nz, 3 legs, 3 wedge pairs)

    def on_wedge(self, leg: int, i: int, j: int) -> np.ndarray:
        pair, sign = _pair_coeff(i, j)
        return sign * self.coeff[:, leg, pair]


def exterior_derivative(basis: CoframeBasis, z: np.ndarray) -> TwoForms:
    """d omega^i = (a_i'/(a_z a_i)) omega^z ^ omega^i on the wedge basis."""
    z = np.asarray(z, dtype=float)
    c, _ = basis.structure_rates(z)
    coeff = np.zeros((len(z), 3, 3))
    for i in range(2):  # d omega^z = 0 for diagonal z-dependent coframes
        pair, sign = _pair_coeff(2, i)
        coeff[:, i, pair] = sign * c[i]
    return TwoForms(z, coeff)


def exterior_derivative_2form(basis: CoframeBasis, forms: TwoForms,
                              d_coeff: np.ndarray | None = None) -> np.ndarray:
    """d of a 2-form family; returns the omega^p^omega^q^omega^z coefficient.

    d(rho omega^a ^ omega^b) = rho' dz ^ omega^a ^ omega^b
    + rho (d omega^a ^ omega^b - omega^a ^ d omega^b). Coefficient
    z-derivatives are finite-differenced unless supplied.
    """
    z = forms.z
    a = basis.coefficients(z)
    c, _ = basis.structure_rates(z)
    if d_coeff is None:
        d_coeff = np.gradient(forms.coeff, z, axis=0, edge_order=2)
    out = np.zeros((len(z), forms.coeff.shape[1]))
    for leg in range(forms.coeff.shape[1]):
        for pair, (i, j) in enumerate(WEDGE_PAIRS):
            rho = forms.coeff[:, leg, pair]
            drho = d_coeff[:, leg, pair]
            # dz ^ omega^i ^ omega^j: nonzero only for the (p, q) pair
            if (i, j) == (0, 1):
                out[:, leg] += drho / a[2]
                # d omega^p = c_p omega^z^omega^p and d omega^q likewise:
                # omega^z^omega^p^omega^q = +vol, omega^p^omega^z^omega^q = -vol
                out[:, leg] += rho * (c[0] + c[1])
            # pairs containing omega^z: both extra wedges vanish
    return out


@dataclass(frozen=True)
class ConnectionForms:
    """Levi-Civita connection omega^i_j = Gamma^i_{jk} omega^k on z samples."""

    z: np.ndarray
    gamma: np.ndarray     # (nz, 3, 3, 3), antisymmetric in the first two slots
    gamma_dz: np.ndarray  # analytic z-derivative of gamma
    basis: CoframeBasis

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.gamma + np.swapaxes(self.gamma, 1, 2))))

    def structure_residual(self) -> float:
        """max |d omega^i + omega^i_j ^ omega^j| over the wedge basis."""
        d = exterior_derivative(self.basis, self.z)
        res = d.coeff.copy()
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    pair, sign = _pair_coeff(k, j)
                    if sign:
                        res[:, i, pair] += sign * self.gamma[:, i, j, k]
        return float(np.max(np.abs(res)))

    def closed_form_constants(self) -> dict:
        """Coefficients matching omega^p_q = -alpha omega^p and
        omega^z_p = beta omega^p; zero for the metrics handled here."""
        alpha = -self.gamma[:, 0, 1, 0]
        beta = self.gamma[:, 2, 0, 0]
        return {
            "alpha": alpha,
            "beta": beta,
            "omega_q_z_on_q": self.gamma[:, 1, 2, 1],
        }


def _connection_system() -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Constant 9x9 system: unknowns Gamma^i_{jk} for pairs i<j."""
    pairs = [(0, 1), (0, 2), (1, 2)]
    pidx = {pr: n for n, pr in enumerate(pairs)}

    def col(i, j, k):
        if i == j:
            return None, 0.0
        if i < j:
            return 3 * pidx[(i, j)] + k, 1.0
        return 3 * pidx[(j, i)] + k, -1.0

    M = np.zeros((9, 9))
    rows = []
    r = 0
    for i in range(3):
        for (a, b) in WEDGE_PAIRS:
            # Gamma^i_{ba} - Gamma^i_{ab} = -D^i_{ab}
            for (j, k), s in (((b, a), 1.0), ((a, b), -1.0)):
                cidx, sign = col(i, j, k)
                if cidx is not None:
                    M[r, cidx] += s * sign
            rows.append((i, _PAIR_INDEX[(a, b)]))
            r += 1
    return M, rows


_M_CONN, _ROWS_CONN = _connection_system()
_M_CONN_INV = np.linalg.inv(_M_CONN)


def _gamma_from_rhs(rhs: np.ndarray) -> np.ndarray:
    """Solve the structure system for (nz, 9) right-hand sides."""
    u = rhs @ _M_CONN_INV.T
    nz = rhs.shape[0]
    gamma = np.zeros((nz, 3, 3, 3))
    for n, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
        for k in range(3):
            gamma[:, i, j, k] = u[:, 3 * n + k]
            gamma[:, j, i, k] = -u[:, 3 * n + k]
    return gamma


def solve_connection(basis: CoframeBasis, z: np.ndarray) -> ConnectionForms:
    """Unique antisymmetric solution of d omega^i = -omega^i_j ^ omega^j."""
    z = np.asarray(z, dtype=float)
    d = exterior_derivative(basis, z)
    c, dc = basis.structure_rates(z)
    # rhs rows follow _ROWS_CONN ordering: -D^i_{ab}
    rhs = np.stack([-d.coeff[:, i, pair] for (i, pair) in _ROWS_CONN], axis=1)
    # derivative of the rhs: D depends linearly on c
    dcoeff = np.zeros_like(d.coeff)
    for i in range(2):
        pair, sign = _pair_coeff(2, i)
        dcoeff[:, i, pair] = sign * dc[i]
    drhs = np.stack([-dcoeff[:, i, pair] for (i, pair) in _ROWS_CONN], axis=1)
    gamma = _gamma_from_rhs(rhs)
    gamma_dz = _gamma_from_rhs(drhs)
    if not np.all(np.isfinite(gamma)):
        raise ValueError("structure-equation solve produced non-finite values")
    return ConnectionForms(z, gamma, gamma_dz, basis)


@dataclass(frozen=True)
class CurvatureReport:
    """Frame Riemann components R^i_{jkl} over z, with symmetry residuals."""

    z: np.ndarray
    riemann: np.ndarray  # (nz, 3, 3, 3, 3)
    source: str

    def component(self, i: int, j: int, k: int, l: int) -> np.ndarray:
        return self.riemann[:, i, j, k, l]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.riemann)))

    def antisymmetry_residual(self) -> float:
        """Lowered first-pair antisymmetry R_{ijkl} = -R_{jikl}.

        In an orthonormal frame lowering is the identity, so this checks
        R^i_{jkl} + R^j_{ikl} directly.
        """
        return float(np.max(np.abs(self.riemann + np.swapaxes(self.riemann, 1, 2))))

    def bianchi_residual(self) -> float:
        r = self.riemann
        cyc = r + np.moveaxis(r, (2, 3, 4), (4, 2, 3)) + np.moveaxis(r, (2, 3, 4), (3, 4, 2))
        return float(np.max(np.abs(cyc)))

    def pair_symmetry_residual(self) -> float:
        r = self.riemann
        return float(np.max(np.abs(r - np.transpose(r, (0, 3, 4, 1, 2)))))

    def last_pair_antisymmetry_residual(self) -> float:
        r = self.riemann
        return float(np.max(np.abs(r + np.swapaxes(r, 3, 4))))

    def max_difference(self, other: "CurvatureReport") -> float:
        return float(np.max(np.abs(self.riemann - other.riemann)))


def curvature(conn: ConnectionForms) -> CurvatureReport:
    """Second structure equation R^i_j = d omega^i_j + omega^i_l ^ omega^l_j."""
    z = conn.z
    nz = len(z)
    a = conn.basis.coefficients(z)
    c, _ = conn.basis.structure_rates(z)
    gamma, dgamma = conn.gamma, conn.gamma_dz
    pair_coeff = np.zeros((nz, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            # d(Gamma^i_{jk} omega^k) = (Gamma'/a_z + Gamma c_k) omega^z^omega^k
            for k in range(2):
                pair, sign = _pair_coeff(2, k)
                pair_coeff[:, i, j, pair] += sign * (
                    dgamma[:, i, j, k] / a[2] + gamma[:, i, j, k] * c[k])
            # omega^i_l ^ omega^l_j = Gamma^i_{lm} Gamma^l_{jn} omega^m^omega^n
            for pidx, (m, n) in enumerate(WEDGE_PAIRS):
                term = np.einsum("zl,zl->z", gamma[:, i, :, m], gamma[:, :, j, n]) \
                    - np.einsum("zl,zl->z", gamma[:, i, :, n], gamma[:, :, j, m])
                pair_coeff[:, i, j, pidx] += term
    riemann = np.zeros((nz, 3, 3, 3, 3))
    for pidx, (k, l) in enumerate(WEDGE_PAIRS):
        riemann[:, :, :, k, l] = pair_coeff[:, :, :, pidx]
        riemann[:, :, :, l, k] = -pair_coeff[:, :, :, pidx]
    return CurvatureReport(z, riemann, source="cartan")


def christoffel_oracle(basis: CoframeBasis | FrameMetric,
                       z: np.ndarray) -> CurvatureReport:
    """Coordinate Christoffel/Riemann pipeline converted to the frame.

    Independent of the structure-equation path: works on the metric
    components g_ii = a_i(z)^2 with the textbook formulas, brute-forced
    over all index combinations.
    """
    if isinstance(basis, FrameMetric):
        basis = conformal_coframe(basis)
    z = np.asarray(z, dtype=float)
    nz = len(z)
    a = basis.coefficients(z)
    da = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                   for f in basis.d1])
    d2a = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                    for f in basis.d2])
    g = a ** 2
    gp = 2 * a * da                    # d_z g_ii
    gpp = 2 * (da ** 2 + a * d2a)      # d_z^2 g_ii
    if np.any(g <= 0):
        raise ValueError("metric is not invertible on the sample points")
    ginv = 1.0 / g
    ginv_p = -gp / g ** 2
    zaxis = 2

    def dg(d, c, b):
        # d_b g_{dc} for the diagonal z-only metric
        if d != c or b != zaxis:
            return 0.0
        return gp[d]

    def d2g(d, c, b):
        if d != c or b != zaxis:
            return 0.0
        return gpp[d]

    Gam = np.zeros((nz, 3, 3, 3))
    dGam = np.zeros((nz, 3, 3, 3))
    for A in range(3):
        for B in range(3):
            for C in range(3):
                s = dg(A, C, B) + dg(A, B, C) - dg(B, C, A)
                ds = d2g(A, C, B) + d2g(A, B, C) - d2g(B, C, A)
                Gam[:, A, B, C] = 0.5 * ginv[A] * s
                dGam[:, A, B, C] = 0.5 * (ginv_p[A] * s + ginv[A] * ds)
    R = np.zeros((nz, 3, 3, 3, 3))
    for A in range(3):
        for B in range(3):
            for C in range(3):
                for D in range(3):
                    acc = np.zeros(nz)
                    if C == zaxis:
                        acc += dGam[:, A, D, B]
                    if D == zaxis:
                        acc -= dGam[:, A, C, B]
                    for E in range(3):
                        acc += Gam[:, A, C, E] * Gam[:, E, D, B]
                        acc -= Gam[:, A, D, E] * Gam[:, E, C, B]
                    R[:, A, B, C, D] = acc
    # orthonormal-frame conversion for the diagonal coframe
    frame = np.zeros_like(R)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    frame[:, i, j, k, l] = R[:, i, j, k, l] * a[i] / (a[j] * a[k] * a[l])
    return CurvatureReport(z, frame, source="christoffel")


def frame_connection_oracle(basis: CoframeBasis, z: np.ndarray) -> np.ndarray:
    """Frame connection coefficients from coordinate Christoffel symbols.

    Gamma_frame^i_{jk} = a_i [ Gamma_coord^i_{kj}/(a_k a_j)
    - delta_{ij} d_k(a_j) / (a_k a_j^2) ]; used to cross-check
    solve_connection.
    """
    z = np.asarray(z, dtype=float)
    nz = len(z)
    a = basis.coefficients(z)
    da = np.stack([np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
                   for f in basis.d1])
    g = a ** 2
    gp = 2 * a * da
    ginv = 1.0 / g
    zaxis = 2

    def dg(d, c, b):
        if d != c or b != zaxis:
            return 0.0
        return gp[d]

    Gam = np.zeros((nz, 3, 3, 3))
    for A in range(3):
        for B in range(3):
            for C in range(3):
                Gam[:, A, B, C] = 0.5 * ginv[A] * (dg(A, C, B) + dg(A, B, C) - dg(B, C, A))
    out = np.zeros((nz, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                val = Gam[:, i, k, j] / (a[k] * a[j]) * a[i]
                if i == j and k == zaxis:
                    val = val - a[i] * da[j] / (a[k] * a[j] ** 2)
                out[:, i, j, k] = val
    return out


# -- report serialization -----------------------------------------------------

REPORTED_COMPONENTS = (
    ("R^p_qpq", (0, 1, 0, 1)),
    ("R^q_zqz", (1, 2, 1, 2)),
    ("R^p_zpq", (0, 2, 0, 1)),
)


def comparison_table(cartan: CurvatureReport, oracle: CurvatureReport,
                     paper_forms: dict[str, Callable] | None = None,
                     components: Sequence[tuple[str, tuple[int, int, int, int]]] = REPORTED_COMPONENTS,
                     stride: int = 1) -> str:
    """Plain-text table: z, component, cartan, oracle, paper, |delta|.

    |delta| is the gap between the structure-equation value and the quoted
    closed form; the cartan-vs-oracle agreement is asserted elsewhere, the
    closed-form column is report-only.
    """
    paper_forms = paper_forms or {}
    lines = [f"{'z':>12} {'component':>10} {'cartan':>18} {'oracle':>18} "
             f"{'paper':>18} {'|delta|':>12}"]
    for name, idx in components:
        form = paper_forms.get(name)
        for n in range(0, len(cartan.z), stride):
            zv = cartan.z[n]
            cv = cartan.riemann[(n, *idx)]
            ov = oracle.riemann[(n, *idx)]
            pv = form(zv) if form is not None else float("nan")
            delta = abs(cv - pv) if form is not None else float("nan")
            lines.append(f"{zv:12.6f} {name:>10} {cv:18.10e} {ov:18.10e} "
                         f"{pv:18.10e} {delta:12.4e}")
    return "\n".join(lines) + "\n"
