"""Small dense semidefinite programs over Hermitian PSD blocks.

A problem is a set of labelled Hermitian PSD variables ``X_b`` with

* a linear objective ``sum_b <C_b, X_b>`` (maximized or minimized),
* scalar equalities ``sum_b <A_b, X_b> = c``,
* operator inequalities ``sum_b w_b X_b <= B`` with real weights ``w_b``
  (all blocks in one inequality share the dimension of ``B``).

Dual multipliers follow one sign convention.  For a maximization the dual
slack is ``Z_b = sum_c w_cb F_c + sum_e mu_e A_eb - C_b`` and the dual
objective ``sum_c <B_c, F_c> + sum_e c_e mu_e`` bounds the primal from above.
For a minimization ``Z_b = C_b + sum_c w_cb F_c - sum_e mu_e A_eb`` and the
dual objective is ``-sum_c <B_c, F_c> + sum_e c_e mu_e``.  Operator-inequality
multipliers ``F_c`` are PSD in both cases.

The solver is a Mehrotra predictor-corrector primal-dual interior-point
method with Nesterov-Todd scaling, working directly in complex arithmetic.
Operator constraints enter the Schur complement as whole blocks, so a
variable that appears in ``k`` of them costs one ``d^2 x d^2`` Kronecker
product rather than ``(k d^2)^2`` scalar pairings.  Each problem is mapped to
whichever of its primal or dual form has the smaller Schur complement.

``check_certificates`` re-derives feasibility and the duality gap from the
problem data alone and is the ground truth for every reported value.
"""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from steerkit.errors import DimensionError
from steerkit.linop import SOLVER_TOL, hermitian_part, matrix_to_json

MAX_ITER = 200
INFEASIBILITY_TOL = 1e-8


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass
class ScalarEquality:
    coeffs: dict
    rhs: float
    label: object = None


@dataclass
class OperatorInequality:
    weights: dict
    bound: np.ndarray
    label: object = None


class SdpProblem:
    """Builder for an SDP; see the module docstring for the conventions."""

    def __init__(self, sense: str = "max"):
        if sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', not {sense!r}")
        self.sense = sense
        self.blocks: list = []
        self.dims: dict = {}
        self.objective: dict = {}
        self.equalities: list[ScalarEquality] = []
        self.inequalities: list[OperatorInequality] = []

    def add_block(self, label, dim: int, cost=None):
        if label in self.dims:
            raise ValueError(f"duplicate block label {label!r}")
        self.blocks.append(label)
        self.dims[label] = int(dim)
        if cost is not None:
            self.set_cost(label, cost)
        return label

    def set_cost(self, label, cost):
        c = _herm(cost, self.dims[label], f"cost of {label!r}")
        self.objective[label] = c

    def add_equality(self, coeffs: dict, rhs: float, label=None):
        checked = {b: _herm(a, self.dims[b], f"equality {label!r}") for b, a in coeffs.items()}
        self.equalities.append(ScalarEquality(checked, float(rhs), label))

    def add_inequality(self, weights: dict, bound, label=None):
        bound = np.asarray(bound, dtype=complex)
        if bound.ndim == 0:
            bound = bound.reshape(1, 1)
        n = bound.shape[0]
        for b in weights:
            if self.dims[b] != n:
                raise DimensionError(
                    f"block {b!r} has dim {self.dims[b]}, inequality {label!r} has dim {n}"
                )
        self.inequalities.append(
            OperatorInequality({b: float(w) for b, w in weights.items()}, _herm(bound, n, label), label)
        )

    def scaled(self, k: float) -> "SdpProblem":
        """Copy with the objective multiplied by ``k``."""
        q = SdpProblem(self.sense)
        q.blocks = list(self.blocks)
        q.dims = dict(self.dims)
        q.objective = {b: k * c for b, c in self.objective.items()}
        q.equalities = list(self.equalities)
        q.inequalities = list(self.inequalities)
        return q

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "sense": self.sense,
            "blocks": [{"label": str(b), "dim": self.dims[b]} for b in self.blocks],
            "objective": {str(b): matrix_to_json(c) for b, c in self.objective.items()},
            "equalities": [
                {
                    "label": str(e.label),
                    "rhs": e.rhs,
                    "coeffs": {str(b): matrix_to_json(a) for b, a in e.coeffs.items()},
                }
                for e in self.equalities
            ],
            "inequalities": [
                {
                    "label": str(c.label),
                    "bound": matrix_to_json(c.bound),
                    "weights": {str(b): w for b, w in c.weights.items()},
                }
                for c in self.inequalities
            ],
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def _herm(m, n, what):
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(n)
    if a.shape != (n, n):
        raise DimensionError(f"{what}: expected shape {(n, n)}, got {a.shape}")
    return hermitian_part(a)


@dataclass
class SdpSolution:
    status: Status
    primal: dict
    dual_slack: dict
    eq_duals: list
    ineq_duals: list
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int
    route: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


# --------------------------------------------------------------------------
# core standard form:
#   min sum_j <C_j, X_j>  s.t.  sum_j w_kj X_j = B_k (operator rows),
#                              sum_j <A_ej, X_j> = c_e (scalar rows),  X_j >= 0
# --------------------------------------------------------------------------


class _Core:
    def __init__(self):
        self.block_dims: list[int] = []
        self.costs: list = []
        self.op_dims: list[int] = []
        self.op_rhs: list = []
        self.op_entries: list[tuple[int, int, float]] = []  # (op, block, weight)
        self.eq_rhs: list[float] = []
        self.eq_entries: list[tuple[int, int, np.ndarray]] = []  # (eq, block, A)

    def add_block(self, dim, cost=None):
        self.block_dims.append(dim)
        self.costs.append(cost)
        return len(self.block_dims) - 1

    def add_op(self, dim, rhs):
        self.op_dims.append(dim)
        self.op_rhs.append(rhs)
        return len(self.op_dims) - 1

    def add_eq(self, rhs):
        self.eq_rhs.append(rhs)
        return len(self.eq_rhs) - 1

    # ---- layout ---------------------------------------------------------

    def compile(self):
        dims = sorted(set(self.block_dims))
        bd = np.asarray(self.block_dims)
        self.classes = []
        self.block_loc = np.empty((len(bd), 2), dtype=np.int64)
        for ci, n in enumerate(dims):
            ids = np.flatnonzero(bd == n)
            self.block_loc[ids, 0] = ci
            self.block_loc[ids, 1] = np.arange(len(ids))
            C = np.zeros((len(ids), n, n), dtype=complex)
            for i, j in enumerate(ids):
                if self.costs[j] is not None:
                    C[i] = self.costs[j]
            self.classes.append({"n": n, "ids": ids, "C": C})

        # operator rows, laid out class by class
        od = np.asarray(self.op_dims, dtype=np.int64)
        offset = 0
        self.op_loc = np.empty((len(od), 2), dtype=np.int64)
        for cl in self.classes:
            n = cl["n"]
            ops = np.flatnonzero(od == n) if len(od) else np.zeros(0, dtype=np.int64)
            self.op_loc[ops, 0] = len(self.classes)  # placeholder, fixed below
            cl["ops"] = ops
            cl["row0"] = offset
            offset += len(ops) * n * n
            cl["B"] = (
                np.array([self.op_rhs[k] for k in ops], dtype=complex).reshape(len(ops), n, n)
            )
        for ci, cl in enumerate(self.classes):
            self.op_loc[cl["ops"], 0] = ci
            self.op_loc[cl["ops"], 1] = np.arange(len(cl["ops"]))
        if len(od) and np.any(~np.isin(od, [cl["n"] for cl in self.classes])):
            raise DimensionError("operator constraint dimension matches no block")
        self.m_op = offset
        self.m_eq = len(self.eq_rhs)
        self.m = self.m_op + self.m_eq

        by_class = defaultdict(list)
        for k, j, w in self.op_entries:
            ci, i = self.block_loc[j]
            cj, kk = self.op_loc[k]
            if ci != cj:
                raise DimensionError("operator constraint touches a block of another dimension")
            by_class[ci].append((kk, i, w))
        for ci, cl in enumerate(self.classes):
            ent = by_class.get(ci, [])
            nb, nk = len(cl["ids"]), len(cl["ops"])
            if ent:
                kk, ii, ww = (np.array(t) for t in zip(*ent))
            else:
                kk = ii = np.zeros(0, dtype=np.int64)
                ww = np.zeros(0)
            cl["P"] = sp.csr_matrix((ww, (kk, ii)), shape=(nk, nb))
            cl["PT"] = cl["P"].T.tocsr()
            cl["pairs"] = _pair_matrix(kk, ii, ww, nk, nb)

        eq_class = defaultdict(list)
        for e, j, A in self.eq_entries:
            ci, i = self.block_loc[j]
            eq_class[ci].append((e, i, A))
        for ci, cl in enumerate(self.classes):
            ent = eq_class.get(ci, [])
            n, nb = cl["n"], len(cl["ids"])
            if ent:
                ee = np.array([t[0] for t in ent], dtype=np.int64)
                ii = np.array([t[1] for t in ent], dtype=np.int64)
                A = np.array([t[2] for t in ent], dtype=complex).reshape(len(ent), n, n)
            else:
                ee = ii = np.zeros(0, dtype=np.int64)
                A = np.zeros((0, n, n), dtype=complex)
            cl["eq_e"], cl["eq_i"], cl["eq_A"] = ee, ii, A
            cl["eq_scatter"] = sp.csr_matrix(
                (np.ones(len(ii)), (ii, np.arange(len(ii)))), shape=(nb, len(ii))
            )
            # entry pairs sharing a block, for the scalar-scalar Schur terms
            order = np.argsort(ii, kind="stable")
            ta, tb = _same_key_pairs(ii[order])
            cl["eq_pairs"] = (order[ta], order[tb])
            # (operator incidence, scalar entry) pairs sharing a block
            P = cl["P"].tocoo()
            inc_k, inc_i, inc_w = P.row, P.col, P.data
            if len(inc_i) and len(ii):
                ua, ub = _cross_pairs(inc_i, ii)
            else:
                ua = ub = np.zeros(0, dtype=np.int64)
            cl["cross"] = (inc_k[ua], inc_w[ua], ub)

        self.b = np.zeros(self.m, dtype=complex)
        for cl in self.classes:
            n = cl["n"]
            self.b[cl["row0"] : cl["row0"] + len(cl["ops"]) * n * n] = cl["B"].reshape(-1)
        self.b[self.m_op :] = self.eq_rhs
        self.N = sum(cl["n"] * len(cl["ids"]) for cl in self.classes)

    # ---- linear maps ------------------------------------------------------

    def A(self, X):
        out = np.zeros(self.m, dtype=complex)
        eq = np.zeros(self.m_eq)
        for cl, Xc in zip(self.classes, X):
            n, nk = cl["n"], len(cl["ops"])
            if nk:
                out[cl["row0"] : cl["row0"] + nk * n * n] = (
                    cl["P"] @ Xc.reshape(len(Xc), -1)
                ).reshape(-1)
            if len(cl["eq_e"]):
                vals = np.einsum("tij,tij->t", cl["eq_A"].conj(), Xc[cl["eq_i"]]).real
                eq += np.bincount(cl["eq_e"], weights=vals, minlength=self.m_eq)
        out[self.m_op :] = eq
        return out

    def At(self, v):
        res = []
        y = v[self.m_op :].real
        for cl in self.classes:
            n, nb, nk = cl["n"], len(cl["ids"]), len(cl["ops"])
            acc = np.zeros((nb, n * n), dtype=complex)
            if nk:
                Y = v[cl["row0"] : cl["row0"] + nk * n * n].reshape(nk, n * n)
                acc += cl["PT"] @ Y
            if len(cl["eq_e"]):
                acc += cl["eq_scatter"] @ (y[cl["eq_e"]][:, None] * cl["eq_A"].reshape(-1, n * n))
            res.append(acc.reshape(nb, n, n))
        return res

    def schur(self, W):
        M = np.zeros((self.m, self.m), dtype=complex)
        for cl, Wc in zip(self.classes, W):
            n, nb, nk = cl["n"], len(cl["ids"]), len(cl["ops"])
            n2 = n * n
            K = None
            if nk or len(cl["eq_e"]):
                # K[b] acts on row-major vec:  vec(W Y W) = kron(W, W^T) vec(Y)
                K = np.einsum("bij,bkl->biljk", Wc, Wc).reshape(nb, n2, n2)
            if nk:
                blk = (cl["pairs"] @ K.reshape(nb, -1)).reshape(nk, nk, n2, n2)
                r0 = cl["row0"]
                M[r0 : r0 + nk * n2, r0 : r0 + nk * n2] += blk.transpose(0, 2, 1, 3).reshape(
                    nk * n2, nk * n2
                )
            if len(cl["eq_e"]):
                ee, ii, A = cl["eq_e"], cl["eq_i"], cl["eq_A"]
                U = np.einsum("tpq,tq->tp", K[ii], A.reshape(-1, n2))  # vec(W A W)
                ta, tb = cl["eq_pairs"]
                vals = np.einsum("tp,tp->t", A.reshape(-1, n2)[ta].conj(), U[tb]).real
                me = self.m_eq
                sub = np.bincount(ee[ta] * me + ee[tb], weights=vals, minlength=me * me)
                M[self.m_op :, self.m_op :] += sub.reshape(me, me)
                inc_k, inc_w, ent = cl["cross"]
                if len(ent):
                    rows = cl["row0"] + inc_k[:, None] * n2 + np.arange(n2)
                    cols = ee[ent]
                    contrib = inc_w[:, None] * U[ent]
                    col_block = np.zeros((self.m_op, me), dtype=complex)
                    np.add.at(col_block, (rows, np.broadcast_to(cols[:, None], rows.shape)), contrib)
                    M[: self.m_op, self.m_op :] += col_block
                    M[self.m_op :, : self.m_op] += col_block.conj().T
        return M

    # ---- interior point -----------------------------------------------------

    def inner(self, X, Z):
        return float(sum(np.einsum("bij,bij->", a.conj(), b).real for a, b in zip(X, Z)))

    def solve(self, tol=SOLVER_TOL, max_iter=MAX_ITER, init_scale=1.0):
        C = [cl["C"] for cl in self.classes]
        normC = math.sqrt(self.inner(C, C))
        normb = float(np.linalg.norm(self.b))
        row_scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
        nmax = max(cl["n"] for cl in self.classes)
        xi = max(10.0, math.sqrt(nmax), nmax * row_scale)
        zeta = max(10.0, math.sqrt(nmax), 1 + max((np.abs(c).max(initial=0.0) for c in C), default=0))
        xi, zeta = xi * init_scale, zeta * init_scale
        X = [xi * np.broadcast_to(np.eye(cl["n"]), cl["C"].shape).astype(complex) for cl in self.classes]
        Z = [zeta * np.broadcast_to(np.eye(cl["n"]), cl["C"].shape).astype(complex) for cl in self.classes]
        v = np.zeros(self.m, dtype=complex)
        history = []
        status = Status.NUMERICAL_TROUBLE
        stall = 0
        it = 0
        for it in range(max_iter + 1):
            rp = self.b - self.A(X)
            Atv = self.At(v)
            Rd = [c - a - z for c, a, z in zip(C, Atv, Z)]
            pobj = self.inner(C, X)
            dobj = float(np.vdot(self.b, v).real)
            xz = self.inner(X, Z)
            pinf = float(np.linalg.norm(rp)) / (1 + normb)
            dinf = math.sqrt(self.inner(Rd, Rd)) / (1 + normC)
            gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
            history.append((pobj, dobj, pinf, dinf, gap))
            if max(pinf, dinf, gap) <= tol:
                status = Status.OPTIMAL
                break
            if dobj > 0:
                ray = math.sqrt(self.inner([c - r for c, r in zip(C, Rd)], [c - r for c, r in zip(C, Rd)]))
                if ray / dobj < INFEASIBILITY_TOL and pinf > tol:
                    status = Status.INFEASIBLE
                    break
            if pobj < 0:
                ray = float(np.linalg.norm(self.b - rp)) / (-pobj)
                if ray < INFEASIBILITY_TOL and dinf > tol:
                    status = Status.UNBOUNDED
                    break
            if it == max_iter or stall >= 5:
                break

            mu = xz / self.N
            scal = [_nt_scaling(x, z) for x, z in zip(X, Z)]
            W = [s[0] for s in scal]
            M = self.schur(W)
            solve_M = _factor(M)
            WRdW = [w @ r @ w for w, r in zip(W, Rd)]

            def direction(D):
                Rc = [s[1] @ d @ s[1].conj().transpose(0, 2, 1) for s, d in zip(scal, D)]
                rhs = rp - self.A([rc - wr for rc, wr in zip(Rc, WRdW)])
                dv = solve_M(rhs)
                dv = self._clean(dv)
                dZ = [hermitian_part(r - a) for r, a in zip(Rd, self.At(dv))]
                dX = [hermitian_part(rc - w @ dz @ w) for rc, w, dz in zip(Rc, W, dZ)]
                return dX, dv, dZ

            lam = [s[3] for s in scal]
            # predictor
            Dp = [-_diag_embed(l) for l in lam]
            dX, dv, dZ = direction(Dp)
            dx_t = [s[2] @ dx @ s[2].conj().transpose(0, 2, 1) for s, dx in zip(scal, dX)]
            dz_t = [s[1].conj().transpose(0, 2, 1) @ dz @ s[1] for s, dz in zip(scal, dZ)]
            ap = min(1.0, _max_step(lam, dx_t))
            ad = min(1.0, _max_step(lam, dz_t))
            new_xz = sum(
                np.einsum(
                    "bij,bij->",
                    (_diag_embed(l) + ap * a).conj(),
                    _diag_embed(l) + ad * b,
                ).real
                for l, a, b in zip(lam, dx_t, dz_t)
            )
            sigma = min(1.0, max(0.0, new_xz / xz)) ** 3
            # corrector
            Dc = []
            for l, a, b in zip(lam, dx_t, dz_t):
                R = sigma * mu * np.eye(l.shape[1]) - _diag_embed(l * l) - 0.5 * (a @ b + b @ a)
                Dc.append(2 * R / (l[:, :, None] + l[:, None, :]))
            dX, dv, dZ = direction(Dc)
            dx_t = [s[2] @ dx @ s[2].conj().transpose(0, 2, 1) for s, dx in zip(scal, dX)]
            dz_t = [s[1].conj().transpose(0, 2, 1) @ dz @ s[1] for s, dz in zip(scal, dZ)]
            gamma = 0.9 + 0.09 * min(ap, ad)
            ap = min(1.0, gamma * _max_step(lam, dx_t))
            ad = min(1.0, gamma * _max_step(lam, dz_t))
            stall = stall + 1 if max(ap, ad) < 1e-8 else 0
            X = [hermitian_part(x + ap * dx) for x, dx in zip(X, dX)]
            v = v + ad * dv
            Z = [hermitian_part(z + ad * dz) for z, dz in zip(Z, dZ)]
        self.history = history
        return status, X, v, Z, it

    def _clean(self, v):
        out = v.copy()
        out[self.m_op :] = out[self.m_op :].real
        for cl in self.classes:
            n, nk = cl["n"], len(cl["ops"])
            if nk:
                sl = slice(cl["row0"], cl["row0"] + nk * n * n)
                out[sl] = hermitian_part(out[sl].reshape(nk, n, n)).reshape(-1)
        return out

    def op_value(self, v, k):
        ci, kk = self.op_loc[k]
        cl = self.classes[ci]
        n = cl["n"]
        r0 = cl["row0"] + kk * n * n
        return v[r0 : r0 + n * n].reshape(n, n)

    def block_value(self, X, j):
        ci, i = self.block_loc[j]
        return X[ci][i]


def _pair_matrix(kk, ii, ww, nk, nb):
    """Sparse map from per-block matrices to sum_b w_kb w_k'b (.)_b, rows k*nk+k'."""
    if len(ii) == 0:
        return sp.csr_matrix((nk * nk, nb))
    order = np.argsort(ii, kind="stable")
    ta, tb = _same_key_pairs(ii[order])
    a, b = order[ta], order[tb]
    rows = kk[a] * nk + kk[b]
    return sp.csr_matrix((ww[a] * ww[b], (rows, ii[a])), shape=(nk * nk, nb))


def _same_key_pairs(keys_sorted):
    """All ordered index pairs (p, q) with keys_sorted[p] == keys_sorted[q]."""
    n = len(keys_sorted)
    if n == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    starts = np.flatnonzero(np.r_[True, keys_sorted[1:] != keys_sorted[:-1]])
    counts = np.diff(np.r_[starts, n])
    pa, pb = [], []
    for c in np.unique(counts):
        s = starts[counts == c]
        grid_a, grid_b = np.meshgrid(np.arange(c), np.arange(c), indexing="ij")
        pa.append((s[:, None] + grid_a.reshape(-1)).reshape(-1))
        pb.append((s[:, None] + grid_b.reshape(-1)).reshape(-1))
    return np.concatenate(pa), np.concatenate(pb)


def _cross_pairs(keys_a, keys_b):
    """Index pairs (p, q) with keys_a[p] == keys_b[q]."""
    oa = np.argsort(keys_a, kind="stable")
    ob = np.argsort(keys_b, kind="stable")
    ka, kb = keys_a[oa], keys_b[ob]
    out_a, out_b = [], []
    common = np.intersect1d(ka, kb)
    la, ra = np.searchsorted(ka, common, "left"), np.searchsorted(ka, common, "right")
    lb, rb = np.searchsorted(kb, common, "left"), np.searchsorted(kb, common, "right")
    for s_a, e_a, s_b, e_b in zip(la, ra, lb, rb):
        ga, gb = np.meshgrid(np.arange(s_a, e_a), np.arange(s_b, e_b), indexing="ij")
        out_a.append(oa[ga.reshape(-1)])
        out_b.append(ob[gb.reshape(-1)])
    if not out_a:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    return np.concatenate(out_a), np.concatenate(out_b)


def _diag_embed(l):
    return l[:, :, None] * np.eye(l.shape[1])


def _psd_sqrt(X):
    w, V = np.linalg.eigh(hermitian_part(X))
    w = np.maximum(w, 1e-300)
    return (V * np.sqrt(w)[:, None, :]) @ V.conj().transpose(0, 2, 1)


def _nt_scaling(X, Z):
    """Return (W, G, G^-1, lambda) with W = G G^H, G^H Z G = G^-1 X G^-H = diag(lambda)."""
    L = _psd_sqrt(X)
    R = _psd_sqrt(Z)
    U, s, Vh = np.linalg.svd(R.conj().transpose(0, 2, 1) @ L)
    V = Vh.conj().transpose(0, 2, 1)
    s = np.maximum(s, 1e-300)
    G = (L @ V) / np.sqrt(s)[:, None, :]
    W = hermitian_part(G @ G.conj().transpose(0, 2, 1))
    Ginv = np.linalg.inv(G)
    return W, G, Ginv, s


def _max_step(lam, dt):
    """Largest alpha with diag(lam) + alpha * dt PSD in every block."""
    worst = 0.0
    for l, d in zip(lam, dt):
        r = 1 / np.sqrt(l)
        T = hermitian_part(r[:, :, None] * d * r[:, None, :])
        worst = max(worst, float(-np.linalg.eigvalsh(T)[:, 0].min()))
    return math.inf if worst <= 0 else 1.0 / worst


def _factor(M):
    M = 0.5 * (M + M.conj().T)
    scale = max(1.0, float(np.abs(np.diag(M)).max(initial=0.0)))
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            cf = scipy.linalg.cho_factor(M + reg * scale * np.eye(len(M)), lower=True, check_finite=False)
            return lambda r, cf=cf: scipy.linalg.cho_solve(cf, r, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    pinv = np.linalg.pinv(M, hermitian=True)
    return lambda r: pinv @ r


# --------------------------------------------------------------------------
# mapping user problems onto the core
# --------------------------------------------------------------------------


def _route_cost(p: SdpProblem):
    cost_a = sum(c.bound.shape[0] ** 2 for c in p.inequalities) + len(p.equalities)
    cost_b = sum(n * n for n in p.dims.values())
    return cost_a, cost_b


def choose_route(p: SdpProblem) -> str:
    cost_a, cost_b = _route_cost(p)
    if p.equalities or cost_a <= cost_b:
        return "primal"
    return "dual"


def solve(
    p: SdpProblem,
    tol: float = SOLVER_TOL,
    max_iter: int = MAX_ITER,
    route: str = "auto",
    init_scale: float = 1.0,
) -> SdpSolution:
    """Solve ``p`` to relative accuracy ``tol``; see ``check_certificates`` for validation.

    ``route`` forces the primal or dual core form. ``init_scale`` rescales the
    interior starting point and exists for start-independence checks.
    """
    if not p.blocks:
        raise ValueError("problem has no variable blocks")
    if route == "auto":
        route = choose_route(p)
    if route == "dual" and p.equalities:
        raise ValueError("the dual route does not support scalar equalities")
    sign = -1.0 if p.sense == "max" else 1.0
    core = _Core()
    idx = {}
    if route == "primal":
        for b in p.blocks:
            c = p.objective.get(b)
            idx[b] = core.add_block(p.dims[b], None if c is None else sign * c)
        slack = []
        for c in p.inequalities:
            k = core.add_op(c.bound.shape[0], c.bound)
            for b, w in c.weights.items():
                core.op_entries.append((k, idx[b], w))
            s = core.add_block(c.bound.shape[0])
            core.op_entries.append((k, s, 1.0))
            slack.append((k, s))
        for e in p.equalities:
            k = core.add_eq(e.rhs)
            for b, a in e.coeffs.items():
                core.eq_entries.append((k, idx[b], a))
    else:
        # blocks of the Lagrangian dual: one per inequality, plus one dual slack per block
        mult = []
        for c in p.inequalities:
            mult.append(core.add_block(c.bound.shape[0], c.bound))
        ops = {}
        for b in p.blocks:
            n = p.dims[b]
            c = p.objective.get(b)
            rhs = np.zeros((n, n), dtype=complex) if c is None else -sign * c
            ops[b] = core.add_op(n, rhs)
            z = core.add_block(n)
            core.op_entries.append((ops[b], z, -1.0))
            idx[b] = z
        for ci, c in enumerate(p.inequalities):
            for b, w in c.weights.items():
                core.op_entries.append((ops[b], mult[ci], w))
    core.compile()
    status, X, v, Z, iters = core.solve(tol=tol, max_iter=max_iter, init_scale=init_scale)

    if route == "primal":
        primal = {b: core.block_value(X, idx[b]) for b in p.blocks}
        dual_slack = {b: core.block_value(Z, idx[b]) for b in p.blocks}
        ineq_duals = [-core.op_value(v, k) for k, _ in slack]
        y = v[core.m_op :].real
        eq_duals = list(-y if p.sense == "max" else y)
        pobj_core = core.history[-1][0]
        dobj_core = core.history[-1][1]
        objective, dual_objective = sign * pobj_core, sign * dobj_core
    else:
        primal = {b: hermitian_part(core.op_value(v, ops[b])) for b in p.blocks}
        dual_slack = {b: core.block_value(X, idx[b]) for b in p.blocks}
        ineq_duals = [core.block_value(X, j) for j in mult]
        eq_duals = []
        pobj_core, dobj_core = core.history[-1][0], core.history[-1][1]
        # core dual objective is max <-sign C, Y> = -sign * (user objective)
        objective = -sign * dobj_core
        dual_objective = -sign * pobj_core
        if status == Status.INFEASIBLE:
            status = Status.UNBOUNDED
        elif status == Status.UNBOUNDED:
            status = Status.INFEASIBLE
    h = core.history[-1]
    return SdpSolution(
        status=status,
        primal=primal,
        dual_slack=dual_slack,
        eq_duals=eq_duals,
        ineq_duals=ineq_duals,
        objective=float(objective),
        dual_objective=float(dual_objective),
        primal_residual=h[2] if route == "primal" else h[3],
        dual_residual=h[3] if route == "primal" else h[2],
        duality_gap=h[4],
        iterations=iters,
        route=route,
        history=core.history,
    )


# --------------------------------------------------------------------------
# independent certificate checking
# --------------------------------------------------------------------------


def realify(m: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``A + iB -> [[A, -B], [B, A]]``."""
    m = np.asarray(m, dtype=complex)
    a, b = m.real, m.imag
    top = np.concatenate([a, -b], axis=-1)
    bottom = np.concatenate([b, a], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def derealify(r: np.ndarray) -> np.ndarray:
    n = r.shape[-1] // 2
    a = 0.5 * (r[..., :n, :n] + r[..., n:, n:])
    b = 0.5 * (r[..., n:, :n] - r[..., :n, n:])
    return a + 1j * b


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """``<A, B> = Re Tr(A^H B)`` computed as half the realified Frobenius product."""
    return 0.5 * float(np.sum(realify(a) * realify(b)))


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh(realify(m))[..., 0].min())


@dataclass
class CertificateReport:
    passed: bool
    primal_objective: float
    dual_objective: float
    gap: float
    max_primal_violation: float
    max_dual_violation: float
    failures: list = field(default_factory=list)


def check_certificates(p: SdpProblem, s: SdpSolution, tol: float = 1e-6) -> CertificateReport:
    """Recompute feasibility and the duality gap of ``s`` from ``p`` alone.

    Violations are measured as negative eigenvalues (PSD conditions) and
    residuals relative to ``1 + |rhs|`` (equalities); the gap is
    ``|primal - dual| / (1 + |primal| + |dual|)``.  Dual slacks are rebuilt
    from the multipliers rather than read from the solution.
    """
    failures = []
    worst_p = worst_d = 0.0

    def note(kind, name, value):
        nonlocal worst_p, worst_d
        if kind == "primal":
            worst_p = max(worst_p, value)
        else:
            worst_d = max(worst_d, value)
        if value > tol:
            failures.append(f"{kind} {name}: violation {value:.3e}")

    by_dim = defaultdict(list)
    for b in p.blocks:
        by_dim[p.dims[b]].append(b)
    for n, labels in by_dim.items():
        stack = np.array([s.primal[b] for b in labels])
        mins = np.linalg.eigvalsh(realify(stack))[:, 0]
        k = int(np.argmin(mins))
        note("primal", f"block {labels[k]!r} PSD", max(0.0, -mins[k]))

    for e in p.equalities:
        val = sum(real_inner(a, s.primal[b]) for b, a in e.coeffs.items())
        note("primal", f"equality {e.label!r}", abs(val - e.rhs) / (1 + abs(e.rhs)))

    for c in p.inequalities:
        lhs = sum(w * s.primal[b] for b, w in c.weights.items())
        note("primal", f"inequality {c.label!r}", max(0.0, -_min_eig(c.bound - lhs)))

    # rebuild dual slacks from multipliers
    sgn = 1.0 if p.sense == "max" else -1.0
    slack = {b: np.zeros((p.dims[b], p.dims[b]), dtype=complex) for b in p.blocks}
    for b, c in p.objective.items():
        slack[b] -= sgn * c
    for c, F in zip(p.inequalities, s.ineq_duals):
        mins = _min_eig(F)
        note("dual", f"multiplier {c.label!r} PSD", max(0.0, -mins))
        for b, w in c.weights.items():
            slack[b] += w * F
    for e, mu in zip(p.equalities, s.eq_duals):
        for b, a in e.coeffs.items():
            slack[b] += sgn * mu * a
    for n, labels in by_dim.items():
        stack = np.array([slack[b] for b in labels])
        mins = np.linalg.eigvalsh(realify(stack))[:, 0]
        k = int(np.argmin(mins))
        note("dual", f"slack {labels[k]!r} PSD", max(0.0, -mins[k]))

    pobj = sum(real_inner(c, s.primal[b]) for b, c in p.objective.items())
    dobj = sum(real_inner(c.bound, F) for c, F in zip(p.inequalities, s.ineq_duals))
    dobj = sgn * dobj + sum(e.rhs * mu for e, mu in zip(p.equalities, s.eq_duals))
    scale = 1 + abs(pobj) + abs(dobj)
    gap = abs(pobj - dobj) / scale
    if gap > tol:
        failures.append(f"duality gap {gap:.3e}")
    # the gap splits into per-block terms <X_b, Z_b>; naming the worst ones
    # localizes a defective multiplier
    for n, labels in by_dim.items():
        X = np.array([s.primal[b] for b in labels])
        Zs = np.array([slack[b] for b in labels])
        comp = np.abs(np.einsum("bij,bji->b", X, Zs).real) / scale
        for k in np.flatnonzero(comp > tol)[:5]:
            failures.append(f"complementarity block {labels[k]!r}: {comp[k]:.3e}")
    if len(s.ineq_duals) != len(p.inequalities) or len(s.eq_duals) != len(p.equalities):
        failures.append("multiplier count does not match the constraint count")
    return CertificateReport(not failures, float(pobj), float(dobj), float(gap), worst_p, worst_d, failures)
