"""Numerical backbone: polynomials, eigenvalues, rational fitting and RK4.

Matrices are plain 2-D ``numpy`` float arrays throughout the package; the
helpers here only validate shapes.  Tolerances used across modules:

* ``ALG_RTOL`` (1e-8) for algebraic identities (fits, round trips),
* ``EIG_RTOL`` (1e-6) for eigenvalue cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSamplingError, DimensionError, NoRootsError, ParameterError

ALG_RTOL = 1e-8
EIG_RTOL = 1e-6
RK4_STABILITY_LIMIT = 2.5


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


class Poly:
    """Real polynomial with coefficients in descending powers of ``s``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[float]):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
        if c.size == 0:
            c = np.zeros(1)
        nz = np.flatnonzero(c)
        c = c[nz[0]:] if nz.size else np.zeros(1)
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coeffs[0])

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def __eq__(self, other):
        return isinstance(other, Poly) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __add__(self, other: "Poly") -> "Poly":
        return Poly(np.polyadd(self.coeffs, other.coeffs))

    def scale(self, k: float) -> "Poly":
        return Poly(self.coeffs * k)

    def __repr__(self):
        return f"Poly({self.coeffs.tolist()})"

    @classmethod
    def from_roots(cls, roots, leading: float = 1.0) -> "Poly":
        c = np.poly(np.asarray(roots, dtype=complex)) if len(roots) else np.ones(1)
        return cls(leading * np.real_if_close(c, tol=1e6).real)


@dataclass(frozen=True)
class RationalTf:
    """``num(s)/den(s)`` with a monic denominator.

    ``cancelled`` lists the pole/zero pairs removed during reduction, as the
    (common) root locations.  They are kept so that closed-loop pole counts
    can be reconciled with the state dimension.
    """

    num: Poly
    den: Poly
    cancelled: tuple = field(default=())

    def __post_init__(self):
        if self.den.is_zero:
            raise ParameterError("denominator is the zero polynomial")
        if not self.num.is_zero and self.num.degree > self.den.degree:
            raise ParameterError("transfer function is improper")
        lead = self.den.leading
        if lead != 1.0:
            object.__setattr__(self, "num", self.num.scale(1.0 / lead))
            object.__setattr__(self, "den", self.den.scale(1.0 / lead))

    def __call__(self, s):
        return self.num(s) / self.den(s)

    @property
    def relative_degree(self) -> int:
        if self.num.is_zero:
            return self.den.degree
        return self.den.degree - self.num.degree

    def poles(self) -> np.ndarray:
        if self.den.degree == 0:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        if self.num.is_zero or self.num.degree == 0:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.num)

    def closed_loop_poly(self, gain: float) -> Poly:
        """Characteristic polynomial ``den + gain*num`` of ``1 + gain*L = 0``."""
        return self.den + self.num.scale(gain)


def poly_roots(p: Poly | Sequence[float]) -> np.ndarray:
    """Roots of ``p`` as eigenvalues of its companion matrix."""
    if not isinstance(p, Poly):
        p = Poly(p)
    if p.is_zero or p.degree < 1:
        raise NoRootsError(f"{p!r} has no roots")
    c = p.coeffs / p.coeffs[0]
    n = p.degree
    comp = np.zeros((n, n))
    comp[0, :] = -c[1:]
    comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    return eigenvalues(comp)


def eigenvalues(m) -> np.ndarray:
    """Eigenvalues with multiplicity (complex array).

    Triangular inputs return their diagonal exactly; everything else goes
    through LAPACK's Hessenberg/shifted-QR driver.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"eigenvalues need a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix has non-finite entries")
    if not np.any(np.tril(a, -1)) or not np.any(np.triu(a, 1)):
        return np.diag(a).astype(complex)
    return np.linalg.eigvals(a).astype(complex)


def spectral_scale(a) -> float:
    return max(1.0, float(np.max(np.abs(eigenvalues(a)))))


def is_hurwitz(a, margin: float = 0.0) -> bool:
    return bool(np.all(eigenvalues(a).real < -margin))


# -- rational reconstruction -------------------------------------------------

def _sample_points(count: int, scale: float) -> np.ndarray:
    k = np.arange(count)
    radii = scale * np.logspace(-2, 2, count) if count > 1 else np.array([scale])
    # golden-ratio interleave keeps neighbouring radii at different angles
    frac = (k * 0.6180339887498949) % 1.0
    theta = np.pi * (0.08 + 0.84 * frac)
    return radii * np.exp(1j * theta)


def _holdout_points(count: int, scale: float, seed: int = 20240) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radii = scale * 10.0 ** rng.uniform(-2, 2, count)
    theta = rng.uniform(0.05 * np.pi, 0.95 * np.pi, count)
    return radii * np.exp(1j * theta)


def _solve_interpolation(evaluate, num_deg, den_deg, scale):
    """Least-squares solve in the scaled variable ``z = s/scale``.

    Returns ``(a_z, a_s, b_s, deficiency)``: numerator coefficients in ``z``
    (for trimming), numerator and monic-in-``z`` denominator in powers of
    ``s``, and the rank deficiency of the system (common-factor degree).
    """
    n_unknown = num_deg + 1 + den_deg
    pts = _sample_points(n_unknown, scale)
    h = np.array([complex(evaluate(s)) for s in pts])
    if not np.all(np.isfinite(h)):
        raise DegenerateSamplingError("evaluator returned non-finite values at sample points")
    z = pts / scale
    # unknowns: num coeffs (num_deg..0), den coeffs (den_deg-1..0); den monic in z
    num_cols = z[:, None] ** np.arange(num_deg, -1, -1)[None, :]
    den_cols = -h[:, None] * z[:, None] ** np.arange(den_deg - 1, -1, -1)[None, :]
    m = np.hstack([num_cols, den_cols])
    rhs = h * z ** den_deg
    row = np.maximum(np.abs(m).max(axis=1), np.abs(rhs))
    m = m / row[:, None]
    rhs = rhs / row
    mr = np.vstack([m.real, m.imag])
    br = np.concatenate([rhs.real, rhs.imag])
    col = np.linalg.norm(mr, axis=0)
    col[col == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(mr / col, br, rcond=1e-10)
    sol = sol / col
    a = sol[: num_deg + 1]
    b = np.concatenate([[1.0], sol[num_deg + 1:]])
    # back to powers of s: coefficient of s^i picks up scale**-i
    a_s = a * scale ** -np.arange(num_deg, -1, -1, dtype=float)
    b_s = b * scale ** -np.arange(den_deg, -1, -1, dtype=float)
    return a, a_s, b_s, n_unknown - int(rank)


def _common_roots(zeros, poles, tol):
    """Greedy nearest pairing of zeros with poles closer than ``tol``."""
    zeros = list(zeros)
    poles = list(poles)
    common = []
    while zeros and poles:
        d = np.abs(np.subtract.outer(np.array(zeros), np.array(poles)))
        i, j = np.unravel_index(np.argmin(d), d.shape)
        if d[i, j] > tol:
            break
        common.append(0.5 * (zeros[i] + poles[j]))
        zeros.pop(i)
        poles.pop(j)
    return common


def _conjugate_closed(roots, tol):
    """Keep real roots and one complete conjugate pair per complex root."""
    out = []
    remaining = list(roots)
    while remaining:
        r = remaining.pop(0)
        if abs(r.imag) <= tol:
            out.append(complex(r.real, 0.0))
            continue
        if remaining:
            d = [abs(x - np.conj(r)) for x in remaining]
            k = int(np.argmin(d))
            if d[k] <= 10 * tol:
                remaining.pop(k)
                out.extend([r, np.conj(r)])
    return out


def cancel_common_factors(tf: RationalTf, rtol: float = EIG_RTOL) -> RationalTf:
    """Remove pole/zero pairs closer than ``rtol * max|root|``."""
    if tf.num.is_zero or tf.num.degree == 0:
        return tf
    zeros, poles = tf.zeros(), tf.poles()
    tol = rtol * max(1.0, float(np.max(np.abs(np.concatenate([zeros, poles])))))
    common = _conjugate_closed(_common_roots(zeros, poles, tol), tol)
    if not common:
        return tf
    factor = Poly.from_roots(common).coeffs
    num_q, _ = np.polydiv(tf.num.coeffs, factor)
    den_q, _ = np.polydiv(tf.den.coeffs, factor)
    return RationalTf(Poly(num_q), Poly(den_q), cancelled=tf.cancelled + tuple(common))


def rational_fit(
    evaluate: Callable[[complex], complex],
    num_deg: int,
    den_deg: int,
    *,
    scale: float = 1.0,
    rtol: float = ALG_RTOL,
    trim_rtol: float = 1e-9,
    n_holdout: int = 20,
    retries: int = 3,
) -> RationalTf:
    """Reconstruct a proper rational function from point evaluations.

    The evaluator is sampled at ``num_deg + den_deg + 1`` complex points
    ``r*exp(j*theta)`` with ``r`` log-spaced over ``[scale/100, 100*scale]``
    and ``theta`` strictly inside ``(0, pi)``, the linearised interpolation
    system ``num(s) - H(s) den(s) = 0`` (monic ``den``) is solved, negligible
    leading numerator coefficients are dropped and common factors are
    cancelled.  The result is checked against ``n_holdout`` further random
    points; on failure the sampling radius is re-scaled and the fit retried.

    Raises
    ------
    DegenerateSamplingError
        If no re-scaled attempt reproduces the evaluator to ``rtol``.
    """
    if num_deg < 0 or den_deg < 0 or num_deg > den_deg:
        raise ParameterError(f"invalid degrees ({num_deg}, {den_deg})")
    if scale <= 0:
        raise ParameterError("scale must be positive")
    factors = [1.0, 10 ** 0.5, 10 ** -0.5, 10.0, 0.1][: retries + 1]
    worst = np.inf
    for f in factors:
        sc = scale * f
        hold = _holdout_points(n_holdout, sc)
        ref = np.array([complex(evaluate(s)) for s in hold])
        if not np.any(ref):
            return RationalTf(Poly([0.0]), Poly([1.0]))
        nd, dd = num_deg, den_deg
        try:
            a_z, a_s, b_s, deficiency = _solve_interpolation(evaluate, nd, dd, sc)
            if deficiency and dd - deficiency >= 0 and nd - deficiency >= 0:
                # exact common factor: the minimal-degree problem is unique
                nd, dd = nd - deficiency, dd - deficiency
                a_z, a_s, b_s, _ = _solve_interpolation(evaluate, nd, dd, sc)
        except np.linalg.LinAlgError:
            continue
        keep = np.abs(a_z) >= trim_rtol * np.max(np.abs(a_z))
        num = Poly(a_s[int(np.argmax(keep)):])
        tf = cancel_common_factors(RationalTf(num, Poly(b_s)))
        err = np.abs(tf(hold) - ref) / np.maximum(np.abs(ref), 1e-300)
        worst = float(np.max(err))
        if worst < rtol:
            return tf
    raise DegenerateSamplingError(
        f"rational fit of degrees ({num_deg}, {den_deg}) failed; best held-out error {worst:.3g}"
    )


# -- time integration --------------------------------------------------------

@dataclass(frozen=True)
class LtiTrace:
    t: np.ndarray
    x: np.ndarray
    warnings: tuple = ()


def rk4_propagators(a: np.ndarray, b: np.ndarray, dt: float):
    """One classical RK4 step for ``x' = A x + B u`` in closed form.

    Returns ``(P, G0, Gh, G1)`` with
    ``x[k+1] = P x[k] + G0 u(t) + Gh u(t + dt/2) + G1 u(t + dt)``.
    Expanding the four stages k1..k4 for a linear right-hand side gives
    exactly these matrices; no approximation beyond RK4 itself.
    """
    n = a.shape[0]
    h = dt
    eye = np.eye(n)
    a2 = a @ a
    a3 = a2 @ a
    p = eye + h * a + h**2 / 2 * a2 + h**3 / 6 * a3 + h**4 / 24 * (a3 @ a)
    ab, a2b, a3b = a @ b, a2 @ b, a3 @ b
    g0 = h / 6 * (b + h * ab + h**2 / 2 * a2b + h**3 / 4 * a3b)
    gh = h / 6 * (4 * b + 2 * h * ab + h**2 / 2 * a2b)
    g1 = h / 6 * b
    return p, g0, gh, g1


def integrate_lti(
    a,
    input_map,
    u: Callable[[float], Sequence[float]] | None,
    x0,
    dt: float,
    t_end: float,
    *,
    zoh: np.ndarray | None = None,
) -> LtiTrace:
    """Fixed-step classical RK4 for ``x' = A x + input_map @ u(t)``.

    ``zoh`` optionally supplies inputs held constant over each step (shape
    ``(n_steps, m)``), added to ``u``; this is how sampled noise enters.
    A step size with ``dt * max|Re eig(A)| > 2.5`` is not rejected but
    flagged with the ``RK4_STABILITY`` warning code.
    """
    a = as_matrix(a, "A")
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"A must be square, got {a.shape}")
    bmat = np.array(input_map, dtype=float).reshape(n, -1) if input_map is not None else np.zeros((n, 0))
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != n:
        raise DimensionError(f"x0 has {x0.size} entries, expected {n}")
    if not dt > 0 or not t_end >= dt:
        raise ParameterError(f"need dt > 0 and t_end >= dt (dt={dt}, t_end={t_end})")
    steps = int(round(t_end / dt))
    t = np.arange(steps + 1) * dt
    m = bmat.shape[1]

    warnings = []
    max_re = float(np.max(np.abs(eigenvalues(a).real)))
    if dt * max_re > RK4_STABILITY_LIMIT:
        warnings.append("RK4_STABILITY")

    p, g0, gh, g1 = rk4_propagators(a, bmat, dt)
    forcing = np.zeros((steps, n))
    if m and u is not None:
        u0 = np.array([np.asarray(u(tk), dtype=float).reshape(m) for tk in t])
        uh = np.array([np.asarray(u(tk + 0.5 * dt), dtype=float).reshape(m) for tk in t[:-1]])
        forcing += u0[:-1] @ g0.T + uh @ gh.T + u0[1:] @ g1.T
    if zoh is not None:
        zoh = np.asarray(zoh, dtype=float).reshape(steps, m)
        forcing += zoh @ (g0 + gh + g1).T

    x = np.empty((steps + 1, n))
    x[0] = x0
    xk = x0
    for k in range(steps):
        xk = p @ xk + forcing[k]
        x[k + 1] = xk
    return LtiTrace(t=t, x=x, warnings=tuple(warnings))
