"""Minimal deterministic second-order-cone programming layer.

Standard form:

    minimize    c'x
    subject to  A x = b
                G x + s = h,   s in K

where K is a product of a nonnegative orthant and second-order cones that
partitions the slack vector.  The bundled solver is a Mehrotra-style
primal-dual predictor-corrector with Nesterov-Todd scaling and dense normal
equations; it is fully deterministic (fixed iteration schedule, LAPACK
partial pivoting only).  A first-order ADMM solver doubles as an independent
cross-check for tests, and ``solve`` is the seam where a third-party conic
solver could be swapped in behind the same contract.

Complex decision variables are lifted at this boundary to interleaved real
pairs ``(Re z_0, Im z_0, Re z_1, ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-7
MAX_ITERS = 100
STEP_FRACTION = 0.99
STATIC_REG = 1e-11


@dataclass(frozen=True)
class Cone:
    kind: str   # "nonneg" | "soc"
    dim: int

    def __post_init__(self):
        if self.kind not in ("nonneg", "soc"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("cone dimension must be >= 1")


@dataclass
class ConicProgram:
    c: np.ndarray                 # (n,)
    a_eq: np.ndarray              # (p, n)
    b_eq: np.ndarray              # (p,)
    g: np.ndarray                 # (m, n)
    h: np.ndarray                 # (m,)
    cones: list[Cone]
    blocks: dict[str, slice] = field(default_factory=dict)

    def __post_init__(self):
        if sum(cone.dim for cone in self.cones) != self.g.shape[0]:
            raise ValueError("cone dimensions must partition the slack vector")
        if self.a_eq.shape[1] != self.c.shape[0] or self.g.shape[1] != self.c.shape[0]:
            raise ValueError("constraint matrices inconsistent with objective")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    def dump(self, path) -> None:
        """Plain-text standard-form dump for cross-checking external solvers."""
        with open(path, "w") as fh:
            fh.write(f"# conic program: n={self.num_vars} "
                     f"p={self.a_eq.shape[0]} m={self.g.shape[0]}\n")
            fh.write("minimize c'x\n")
            fh.write("c " + " ".join(repr(v) for v in self.c) + "\n")
            for row, rhs in zip(self.a_eq, self.b_eq):
                fh.write("eq " + " ".join(repr(v) for v in row)
                         + " = " + repr(rhs) + "\n")
            offset = 0
            for cone in self.cones:
                fh.write(f"cone {cone.kind} {cone.dim}\n")
                for i in range(offset, offset + cone.dim):
                    fh.write("  row " + " ".join(repr(v) for v in self.g[i])
                             + " | " + repr(self.h[i]) + "\n")
                offset += cone.dim
            for name, sl in self.blocks.items():
                fh.write(f"block {name} {sl.start} {sl.stop}\n")


@dataclass(frozen=True)
class ConicSolution:
    status: str                  # "optimal" | "infeasible" | "unbounded" | "max_iter"
    x: np.ndarray
    objective: float
    s: np.ndarray
    z: np.ndarray
    y: np.ndarray
    iterations: int
    residuals: dict

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class SolverError(RuntimeError):
    """Raised by callers that require an optimal solve."""


# ---------------------------------------------------------------------------
# cone algebra

def _cone_slices(cones: list[Cone]) -> list[tuple[Cone, slice]]:
    out = []
    offset = 0
    for cone in cones:
        out.append((cone, slice(offset, offset + cone.dim)))
        offset += cone.dim
    return out


def cone_identity(cones: list[Cone]) -> np.ndarray:
    e = np.zeros(sum(c.dim for c in cones))
    for cone, sl in _cone_slices(cones):
        if cone.kind == "nonneg":
            e[sl] = 1.0
        else:
            e[sl.start] = 1.0
    return e


def cone_degree(cones: list[Cone]) -> int:
    return sum(c.dim if c.kind == "nonneg" else 1 for c in cones)


def in_cone(v: np.ndarray, cones: list[Cone], margin: float = 0.0) -> bool:
    for cone, sl in _cone_slices(cones):
        blk = v[sl]
        if cone.kind == "nonneg":
            if np.any(blk < margin):
                return False
        else:
            if blk[0] - np.linalg.norm(blk[1:]) < margin:
                return False
    return True


def cone_project(v: np.ndarray, cones: list[Cone]) -> np.ndarray:
    """Euclidean projection onto K (used by the first-order reference)."""
    out = v.copy()
    for cone, sl in _cone_slices(cones):
        blk = v[sl]
        if cone.kind == "nonneg":
            out[sl] = np.maximum(blk, 0.0)
        else:
            t, w = blk[0], blk[1:]
            nw = np.linalg.norm(w)
            if nw <= t:
                continue
            if nw <= -t:
                out[sl] = 0.0
            else:
                coef = 0.5 * (1.0 + t / nw)
                out[sl.start] = coef * nw
                out[sl.start + 1:sl.stop] = coef * w
    return out


def jordan_product(u: np.ndarray, v: np.ndarray, cones: list[Cone]) -> np.ndarray:
    out = np.empty_like(u)
    for cone, sl in _cone_slices(cones):
        a, b = u[sl], v[sl]
        if cone.kind == "nonneg":
            out[sl] = a * b
        else:
            out[sl.start] = a @ b
            out[sl.start + 1:sl.stop] = a[0] * b[1:] + b[0] * a[1:]
    return out


def jordan_solve(lam: np.ndarray, d: np.ndarray, cones: list[Cone]) -> np.ndarray:
    """Solve lam o u = d blockwise (arrow-matrix inverse on each SOC)."""
    out = np.empty_like(d)
    for cone, sl in _cone_slices(cones):
        l_blk, d_blk = lam[sl], d[sl]
        if cone.kind == "nonneg":
            out[sl] = d_blk / l_blk
        else:
            l0, l1 = l_blk[0], l_blk[1:]
            det = l0 * l0 - l1 @ l1
            u0 = (l0 * d_blk[0] - l1 @ d_blk[1:]) / det
            out[sl.start] = u0
            out[sl.start + 1:sl.stop] = (d_blk[1:] - u0 * l1) / l0
    return out


def interior_margin(v: np.ndarray, cones: list[Cone]) -> float:
    """Distance-like margin to the cone boundary (positive iff interior)."""
    margin = math.inf
    for cone, sl in _cone_slices(cones):
        blk = v[sl]
        if cone.kind == "nonneg":
            margin = min(margin, float(blk.min()))
        else:
            margin = min(margin, float(blk[0] - np.linalg.norm(blk[1:])))
    return margin


def max_step(v: np.ndarray, dv: np.ndarray, cones: list[Cone]) -> float:
    """Largest alpha >= 0 with v + alpha*dv in K, for v interior to K."""
    alpha = math.inf
    for cone, sl in _cone_slices(cones):
        blk, dblk = v[sl], dv[sl]
        if cone.kind == "nonneg":
            neg = dblk < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-blk[neg] / dblk[neg])))
        else:
            s0, s1 = blk[0], blk[1:]
            d0, d1 = dblk[0], dblk[1:]
            a = d0 * d0 - d1 @ d1
            b = 2.0 * (s0 * d0 - s1 @ d1)
            norm_s1 = float(np.linalg.norm(s1))
            c = (s0 - norm_s1) * (s0 + norm_s1)
            roots = []
            if abs(a) < 1e-300:
                if b < 0:
                    roots.append(-c / b)
            else:
                disc = b * b - 4 * a * c
                if disc >= 0:
                    sq = math.sqrt(disc)
                    roots.extend(r for r in ((-b - sq) / (2 * a),
                                             (-b + sq) / (2 * a)) if r > 0)
            if d0 < 0:
                roots.append(-s0 / d0)
            if roots:
                alpha = min(alpha, min(roots))
    return alpha


class _Scaling:
    """Nesterov-Todd scaling of an interior pair (s, z)."""

    def __init__(self, s: np.ndarray, z: np.ndarray, cones: list[Cone]):
        self.cones = cones
        self.slices = _cone_slices(cones)
        self.params = []
        for cone, sl in self.slices:
            sb, zb = s[sl], z[sl]
            if cone.kind == "nonneg":
                self.params.append(np.sqrt(sb / zb))
            else:
                ns, nz = np.linalg.norm(sb[1:]), np.linalg.norm(zb[1:])
                s_res = math.sqrt((sb[0] - ns) * (sb[0] + ns))
                z_res = math.sqrt((zb[0] - nz) * (zb[0] + nz))
                s_bar, z_bar = sb / s_res, zb / z_res
                gamma = math.sqrt((1.0 + s_bar @ z_bar) / 2.0)
                w_bar = np.empty_like(sb)
                w_bar[0] = (s_bar[0] + z_bar[0]) / (2.0 * gamma)
                w_bar[1:] = (s_bar[1:] - z_bar[1:]) / (2.0 * gamma)
                eta = (s_res / z_res) ** 0.5
                self.params.append((eta, w_bar))

    def _apply_h(self, w_bar: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Hyperbolic Householder H(w_bar) @ v (matrix or vector block)."""
        v0, v1 = v[0], v[1:]
        top = w_bar[0] * v0 + w_bar[1:] @ v1
        rest = (np.multiply.outer(w_bar[1:], v0) + v1
                + np.multiply.outer(w_bar[1:], (w_bar[1:] @ v1)) / (1.0 + w_bar[0]))
        out = np.empty_like(v)
        out[0] = top
        out[1:] = rest
        return out

    def apply_w(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        for (cone, sl), prm in zip(self.slices, self.params):
            if cone.kind == "nonneg":
                out[sl] = prm * v[sl]
            else:
                eta, w_bar = prm
                out[sl] = eta * self._apply_h(w_bar, v[sl])
        return out

    def apply_w_inv(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        for (cone, sl), prm in zip(self.slices, self.params):
            if cone.kind == "nonneg":
                out[sl] = v[sl] / prm
            else:
                eta, w_bar = prm
                j_w = np.concatenate(([w_bar[0]], -w_bar[1:]))
                out[sl] = self._apply_h(j_w, v[sl]) / eta
        return out

    def scaled_matrix(self, g: np.ndarray) -> np.ndarray:
        """W^{-1} G, so that G' W^{-2} G = (W^{-1}G)'(W^{-1}G)."""
        out = np.empty_like(g)
        for (cone, sl), prm in zip(self.slices, self.params):
            if cone.kind == "nonneg":
                out[sl] = g[sl] / prm[:, None]
            else:
                eta, w_bar = prm
                j_w = np.concatenate(([w_bar[0]], -w_bar[1:]))
                out[sl] = self._apply_h(j_w, g[sl]) / eta
        return out


# ---------------------------------------------------------------------------
# interior-point solver

def _kkt_factor(h_mat: np.ndarray, a_eq: np.ndarray, reg: float):
    n = h_mat.shape[0]
    p = a_eq.shape[0]
    kkt = np.zeros((n + p, n + p))
    kkt[:n, :n] = h_mat + reg * np.eye(n)
    if p:
        kkt[:n, n:] = a_eq.T
        kkt[n:, :n] = a_eq
        kkt[n:, n:] = -reg * np.eye(p)
    return scipy.linalg.lu_factor(kkt, check_finite=False)


def _kkt_solve(factor, rhs1: np.ndarray, rhs2: np.ndarray,
               n: int) -> tuple[np.ndarray, np.ndarray]:
    sol = scipy.linalg.lu_solve(factor, np.concatenate([rhs1, rhs2]),
                                check_finite=False)
    return sol[:n], sol[n:]


def solve(prog: ConicProgram, tol: float = DEFAULT_TOL,
          max_iters: int = MAX_ITERS) -> ConicSolution:
    """Primal-dual predictor-corrector solve of a conic program.

    Status is one of ``optimal`` (gap and residuals below ``tol``),
    ``infeasible`` / ``unbounded`` (certificate found), or ``max_iter``
    (best iterate returned, residuals reported).
    """
    c = np.asarray(prog.c, dtype=float)
    a_eq = np.asarray(prog.a_eq, dtype=float).reshape(-1, c.size)
    b_eq = np.asarray(prog.b_eq, dtype=float)
    g = np.asarray(prog.g, dtype=float)
    h = np.asarray(prog.h, dtype=float)
    cones = prog.cones
    n_done = 0
    n, p, m = c.size, b_eq.size, h.size
    if m == 0:
        raise ValueError("program needs at least one cone row")
    e = cone_identity(cones)
    rho = cone_degree(cones)
    reg = STATIC_REG * max(1.0, np.abs(g).max() if g.size else 1.0)

    # initial point from two least-squares KKT solves with identity scaling
    factor0 = _kkt_factor(g.T @ g, a_eq, reg)
    x, y = _kkt_solve(factor0, g.T @ h, b_eq, n)
    s_hat = h - g @ x
    margin_s = interior_margin(s_hat, cones)
    s = s_hat if margin_s > 1e-8 else s_hat + (1.0 - min(margin_s, 0.0)) * e
    xd, _ = _kkt_solve(factor0, -c, np.zeros(p), n)
    z_hat = g @ xd
    margin_z = interior_margin(z_hat, cones)
    z = z_hat if margin_z > 1e-8 else z_hat + (1.0 - min(margin_z, 0.0)) * e

    best = None
    best_score = math.inf
    stall = 0
    norm_b = 1.0 + np.linalg.norm(b_eq)
    norm_h = 1.0 + np.linalg.norm(h)
    norm_c = 1.0 + np.linalg.norm(c)

    # guards below catch non-finite intermediates explicitly; keep the
    # numerical-floor breakdowns out of the warning stream
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for iteration in range(max_iters):
            n_done = iteration
            rx = c + (a_eq.T @ y if p else 0.0) + g.T @ z
            ry = (a_eq @ x - b_eq) if p else np.zeros(0)
            rz = g @ x + s - h
            gap = float(s @ z)
            pobj = float(c @ x)
            dobj = float(-(b_eq @ y if p else 0.0) - h @ z)
            pres = max(np.linalg.norm(ry) / norm_b, np.linalg.norm(rz) / norm_h)
            dres = np.linalg.norm(rx) / norm_c
            relgap = gap / max(1.0, abs(pobj))
            if not (math.isfinite(pres) and math.isfinite(dres)
                    and math.isfinite(relgap)):
                break  # numerical breakdown; fall back to the best iterate
            residuals = {"pres": pres, "dres": dres, "gap": gap,
                         "relgap": relgap, "pobj": pobj, "dobj": dobj}
            score = max(pres, dres, relgap)
            if score < 0.9 * best_score:
                best_score = score
                best = (x.copy(), s.copy(), z.copy(), y.copy(), residuals, iteration)
                stall = 0
            else:
                stall += 1

            if pres <= tol and dres <= tol and relgap <= tol:
                return ConicSolution("optimal", x, pobj, s, z, y, iteration, residuals)

            # infeasibility / unboundedness certificates
            cert_p = float((b_eq @ y if p else 0.0) + h @ z)
            if cert_p < 0:
                res_cert = np.linalg.norm(a_eq.T @ y + g.T @ z if p else g.T @ z)
                if res_cert <= -tol * cert_p and in_cone(z, cones, margin=-1e-9 * max(
                        1.0, np.linalg.norm(z))):
                    return ConicSolution("infeasible", x, math.inf, s, z, y,
                                         iteration, residuals)
            if pobj < 0:
                res_x = max(np.linalg.norm(a_eq @ x) if p else 0.0,
                            np.linalg.norm(g @ x + s))
                if res_x <= -tol * pobj:
                    return ConicSolution("unbounded", x, -math.inf, s, z, y,
                                         iteration, residuals)

            # stop when progress stalls at the numerical floor
            if stall >= 8 or min(interior_margin(s, cones),
                                 interior_margin(z, cones)) <= 0.0:
                break

            scaling = _Scaling(s, z, cones)
            lam = scaling.apply_w(z)
            g_scaled = scaling.scaled_matrix(g)
            factor = _kkt_factor(g_scaled.T @ g_scaled, a_eq, reg)
            mu = gap / rho

            def direction(bs_target):
                d_tilde = jordan_solve(lam, bs_target, cones)
                bz_tilde = -rz - scaling.apply_w(d_tilde)
                rhs1 = -rx + g_scaled.T @ scaling.apply_w_inv(bz_tilde)
                dx, dy = _kkt_solve(factor, rhs1, -ry, n)
                dz = scaling.apply_w_inv(scaling.apply_w_inv(g @ dx - bz_tilde))
                ds = -rz - g @ dx
                return dx, dy, dz, ds

            lam_sq = jordan_product(lam, lam, cones)
            dx_a, dy_a, dz_a, ds_a = direction(-lam_sq)
            if not (np.all(np.isfinite(ds_a)) and np.all(np.isfinite(dz_a))):
                break
            alpha_a = min(max_step(s, ds_a, cones), max_step(z, dz_a, cones))
            alpha_a = min(1.0, alpha_a)
            gap_a = float((s + alpha_a * ds_a) @ (z + alpha_a * dz_a))
            sigma = min(1.0, max(0.0, gap_a / gap)) ** 3

            corr = jordan_product(scaling.apply_w_inv(ds_a),
                                  scaling.apply_w(dz_a), cones)
            dx, dy, dz, ds = direction(-lam_sq - corr + sigma * mu * e)
            if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(ds))
                    and np.all(np.isfinite(dz))):
                break
            alpha = min(max_step(s, ds, cones), max_step(z, dz, cones))
            alpha = min(1.0, STEP_FRACTION * alpha)
            # the quadratic step-to-boundary can overshoot in floating point;
            # back off until both iterates are strictly interior
            for _ in range(64):
                if (interior_margin(s + alpha * ds, cones) > 0
                        and interior_margin(z + alpha * dz, cones) > 0):
                    break
                alpha *= 0.5
            else:
                break  # no interior step available; return best iterate

            x = x + alpha * dx
            y = y + alpha * dy
            s = s + alpha * ds
            z = z + alpha * dz

    if best is None:
        raise FloatingPointError("solver broke down before the first iterate")
    bx, bss, bz, by, bres, bit = best
    return ConicSolution("max_iter", bx, float(c @ bx), bss, bz, by,
                         n_done, bres)


# ---------------------------------------------------------------------------
# first-order reference (independent cross-check for tests)

def solve_reference(prog: ConicProgram, max_iters: int = 200_000,
                    rho: float = 1.0, over_relax: float = 1.7,
                    tol: float = 1e-9) -> np.ndarray:
    """ADMM solve; slow but algorithmically independent of the IPM path."""
    c = np.asarray(prog.c, dtype=float)
    a_eq = np.asarray(prog.a_eq, dtype=float).reshape(-1, c.size)
    b_eq = np.asarray(prog.b_eq, dtype=float)
    g = np.asarray(prog.g, dtype=float)
    h = np.asarray(prog.h, dtype=float)
    n = c.size
    lhs = g.T @ g + a_eq.T @ a_eq + 1e-12 * np.eye(n)
    chol = scipy.linalg.cho_factor(lhs, check_finite=False)
    x = np.zeros(n)
    s = cone_project(h.copy(), prog.cones)
    u = np.zeros(h.size)
    w = np.zeros(b_eq.size)
    for _ in range(max_iters):
        rhs = g.T @ (h - s - u) + a_eq.T @ (b_eq - w) - c / rho
        x = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
        gx = g @ x
        gx_relaxed = over_relax * gx + (1 - over_relax) * (h - s)
        s_new = cone_project(h - gx_relaxed - u, prog.cones)
        prim = gx_relaxed + s_new - h
        u = u + prim
        eq_res = a_eq @ x - b_eq
        if w.size:
            w = w + eq_res
        dual = rho * np.linalg.norm(g.T @ (s_new - s))
        s = s_new
        if max(np.linalg.norm(prim), np.linalg.norm(eq_res), dual) < tol:
            break
    return x


# ---------------------------------------------------------------------------
# modeling helpers

def interleave_complex(z: np.ndarray) -> np.ndarray:
    """Complex vector -> interleaved (Re, Im) real vector."""
    out = np.empty(2 * z.size)
    out[0::2] = np.real(z)
    out[1::2] = np.imag(z)
    return out


def deinterleave_complex(x: np.ndarray) -> np.ndarray:
    return x[0::2] + 1j * x[1::2]


def complex_rows_to_real(coeffs: np.ndarray) -> np.ndarray:
    """Real coefficient rows computing (Re, Im) of ``coeffs @ z`` per row.

    ``coeffs`` is (r, t) complex; returns (2r, 2t) real acting on the
    interleaved lifting of z, rows ordered (Re_0, Im_0, Re_1, ...).
    """
    r, t = coeffs.shape
    out = np.zeros((2 * r, 2 * t))
    re, im = np.real(coeffs), np.imag(coeffs)
    out[0::2, 0::2] = re
    out[0::2, 1::2] = -im
    out[1::2, 0::2] = im
    out[1::2, 1::2] = re
    return out


class ProgramBuilder:
    """Accumulates variable blocks, then rows, into a ConicProgram."""

    def __init__(self):
        self._blocks: dict[str, slice] = {}
        self._n = 0
        self._eq_rows: list[np.ndarray] = []
        self._eq_rhs: list[float] = []
        self._g_rows: list[np.ndarray] = []
        self._h_vals: list[float] = []
        self._cones: list[Cone] = []
        self._objective: np.ndarray | None = None

    def add_block(self, name: str, size: int) -> slice:
        if name in self._blocks:
            raise ValueError(f"duplicate block {name!r}")
        sl = slice(self._n, self._n + size)
        self._blocks[name] = sl
        self._n += size
        return sl

    def add_complex_block(self, name: str, size: int) -> slice:
        return self.add_block(name, 2 * size)

    @property
    def num_vars(self) -> int:
        return self._n

    def row(self, entries: dict[str, np.ndarray]) -> np.ndarray:
        """Dense coefficient row from per-block coefficient arrays."""
        out = np.zeros(self._n)
        for name, coef in entries.items():
            out[self._blocks[name]] = coef
        return out

    def add_eq(self, row: np.ndarray, rhs: float) -> None:
        self._eq_rows.append(row)
        self._eq_rhs.append(rhs)

    def add_nonneg(self, rows: list[np.ndarray], rhs: list[float]) -> None:
        """Rows with slack h - Gx constrained nonnegative: each row says Gx <= h."""
        self._g_rows.extend(rows)
        self._h_vals.extend(rhs)
        self._cones.append(Cone("nonneg", len(rows)))

    def add_soc(self, rows: list[np.ndarray], rhs: list[float]) -> None:
        """One second-order cone on the slack block h - Gx."""
        self._g_rows.extend(rows)
        self._h_vals.extend(rhs)
        self._cones.append(Cone("soc", len(rows)))

    def add_quadratic_leq(self, affine_rows: np.ndarray, affine_const: np.ndarray,
                          bound_row: np.ndarray, bound_const: float) -> None:
        """Emit ||affine||^2 <= bound as one rotated-style second-order cone."""
        rows, rhs = quadratic_leq_as_cone(affine_rows, affine_const,
                                          bound_row, bound_const)
        self.add_soc(rows, rhs)

    def set_objective(self, row: np.ndarray) -> None:
        self._objective = row

    def build(self) -> ConicProgram:
        if self._objective is None:
            raise ValueError("objective not set")
        n = self._n
        a_eq = (np.vstack(self._eq_rows) if self._eq_rows
                else np.zeros((0, n)))
        g = np.vstack(self._g_rows) if self._g_rows else np.zeros((0, n))
        return ConicProgram(
            c=self._objective,
            a_eq=a_eq,
            b_eq=np.asarray(self._eq_rhs, dtype=float),
            g=g,
            h=np.asarray(self._h_vals, dtype=float),
            cones=list(self._cones),
            blocks=dict(self._blocks),
        )


def quadratic_leq_as_cone(affine_rows: np.ndarray, affine_const: np.ndarray,
                          bound_row: np.ndarray, bound_const: float
                          ) -> tuple[list[np.ndarray], list[float]]:
    """Cone rows equivalent to ``||A v + b||^2 <= q'v + q0``.

    Uses the identity ``||(2(Av+b), L-1)|| <= L+1  <=>  ||Av+b||^2 <= L`` for
    the affine bound ``L = q'v + q0``.  Returned rows follow the
    ``G v + s = h`` convention with the slack in one second-order cone.
    """
    affine_rows = np.atleast_2d(affine_rows)
    rows = [-bound_row]
    rhs = [1.0 + bound_const]
    for ar, ac in zip(affine_rows, np.atleast_1d(affine_const)):
        rows.append(-2.0 * ar)
        rhs.append(2.0 * ac)
    rows.append(-bound_row)
    rhs.append(bound_const - 1.0)
    return rows, rhs
