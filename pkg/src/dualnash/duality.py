"""
Canonical duality: complementary functions, the dual feasible set and the
global equilibrium certificate.

For a dual vector ``sigma`` of player ``i`` the complementary function
``Gamma_i = sigma' Lambda_i(x) - psi_i*(sigma)`` is convex in ``x_i`` as
soon as ``P_i(sigma) = sum_k sigma_k Hess_{x_i} Lambda_{i,k}`` dominates
``kappa_x I``.  The set of such ``sigma`` inside the dual domain is the
dual feasible set.
"""

import json

import numpy as np
from scipy.optimize import brentq, linprog, minimize

from .errors import ConfigError, DomainError, UnsupportedRepresentation
from .game import _jsonable, hessian_lambda, natural_duals, payoff_gradients

DEFAULT_KAPPA_X = 1e-2
EIG_SLACK = 1e-9
# number of random directions in the linear relaxation used for emptiness checks
RELAX_DIRECTIONS = 64


class DualFeasibleSet:
    """``{sigma in Theta* : P_i(sigma) >= kappa_x I for every owner i}``.

    Parameters
    ----------
    hessians : list of ndarray, shape (q, n_i, n_i)
        Component Hessians for every owning player.
    lo, hi : ndarray
        Working box of the dual domain.
    kappa : float
        Required lower bound on the eigenvalues of ``P_i``.
    representation : {"interval", "polyhedron", "sampled"}
        How the set is stored for projection.
    G, h : ndarray, optional
        Half-spaces ``G sigma >= h`` of a polyhedral representation.
    exact : bool
        Whether the representation equals the set (otherwise it is an
        inner approximation, or membership only for ``"sampled"``).
    """

    def __init__(self, hessians, lo, hi, kappa, representation, G=None, h=None,
                 exact=True, owners=None, rep_lo=None, rep_hi=None):
        self.hessians = [np.asarray(H, dtype=float) for H in hessians]
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.dim = self.lo.size
        self.kappa = float(kappa)
        self.representation = representation
        self.G = np.zeros((0, self.dim)) if G is None else np.asarray(G, dtype=float).reshape(-1, self.dim)
        self.h = np.zeros(0) if h is None else np.asarray(h, dtype=float).reshape(-1)
        self.exact = bool(exact)
        self.owners = list(owners) if owners is not None else list(range(len(self.hessians)))
        # box of the stored representation (tighter than the dual domain for intervals)
        self.rep_lo = self.lo.copy() if rep_lo is None else np.asarray(rep_lo, dtype=float)
        self.rep_hi = self.hi.copy() if rep_hi is None else np.asarray(rep_hi, dtype=float)
        self._empty = None

    # ---------------------------------------------------------------- membership
    def p_matrices(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return [np.tensordot(sigma, H, axes=1) for H in self.hessians]

    def min_eig(self, sigma):
        return min(float(np.linalg.eigvalsh(P)[0]) for P in self.p_matrices(sigma))

    def contains(self, sigma, tol=1e-9):
        """Exact test: inside the dual domain and ``P_i(sigma) >= kappa_x I``."""
        sigma = np.asarray(sigma, dtype=float).reshape(-1)
        if sigma.size != self.dim or not np.all(np.isfinite(sigma)):
            return False
        if np.any(sigma < self.lo - tol) or np.any(sigma > self.hi + tol):
            return False
        return self.min_eig(sigma) >= self.kappa - EIG_SLACK - tol

    def in_representation(self, sigma, tol=1e-9):
        sigma = np.asarray(sigma, dtype=float).reshape(-1)
        if self.representation == "sampled":
            return self.contains(sigma, tol)
        if np.any(sigma < self.rep_lo - tol) or np.any(sigma > self.rep_hi + tol):
            return False
        return bool(np.all(self.G @ sigma >= self.h - tol))

    # ---------------------------------------------------------------- projection
    @property
    def projectable(self):
        return self.representation in ("interval", "polyhedron")

    def project(self, sigma):
        """Euclidean projection onto the stored representation."""
        sigma = np.asarray(sigma, dtype=float).reshape(-1)
        if sigma.size != self.dim:
            raise ConfigError(f"dual set: expected dimension {self.dim}, got {sigma.size}")
        if not self.projectable:
            raise UnsupportedRepresentation("dual set has a membership-only representation")
        lo, hi = self.rep_lo, self.rep_hi
        s = np.clip(sigma, lo, hi)
        if self.G.shape[0] == 0 or np.all(self.G @ s >= self.h):
            return s
        if self.G.shape[0] == 1:
            return self._project_halfspace(sigma, self.G[0], self.h[0])
        return self._project_polyhedron(sigma)

    def _project_halfspace(self, sigma, g, h):
        # KKT: sigma(t) = clip(sigma + t g) with t >= 0 and g'sigma(t) = h;
        # g'sigma(t) is nondecreasing in t
        lo, hi = self.rep_lo, self.rep_hi

        def resid(t):
            return g @ np.clip(sigma + t * g, lo, hi) - h

        t_hi = 1.0
        while resid(t_hi) < 0:
            t_hi *= 2.0
            if t_hi > 1e300:
                raise ConfigError("dual set: half-space projection failed (set empty?)")
        t = brentq(resid, 0.0, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return np.clip(sigma + t * g, lo, hi)

    def _project_polyhedron(self, sigma):
        # maximise the concave dual over lambda >= 0; the primal minimiser is
        # clip(sigma + G' lambda)
        lo, hi, G, h = self.rep_lo, self.rep_hi, self.G, self.h

        def neg_dual(lam):
            s = np.clip(sigma + G.T @ lam, lo, hi)
            val = 0.5 * np.sum((s - sigma) ** 2) - lam @ (G @ s - h)
            grad = -(G @ s - h)
            return -val, -grad

        res = minimize(neg_dual, np.zeros(G.shape[0]), jac=True, method="L-BFGS-B",
                       bounds=[(0.0, None)] * G.shape[0],
                       options={"ftol": 1e-15, "gtol": 1e-13, "maxiter": 2000})
        lam = res.x
        s = np.clip(sigma + G.T @ lam, lo, hi)
        # active-set refinement: solve the equality-constrained problem on the
        # detected active half-spaces and free coordinates
        act = lam > 1e-12
        free = (s > lo) & (s < hi)
        if act.any() and free.any():
            Ga = G[act][:, free]
            rhs = h[act] - G[act][:, ~free] @ s[~free] - Ga @ sigma[free]
            try:
                mu = np.linalg.lstsq(Ga @ Ga.T, rhs, rcond=None)[0]
                cand = s.copy()
                cand[free] = sigma[free] + Ga.T @ mu
                if (np.all(mu >= -1e-12) and np.all(cand >= lo - 1e-12) and np.all(cand <= hi + 1e-12)
                        and np.all(G @ cand >= h - 1e-12)):
                    s = np.clip(cand, lo, hi)
            except np.linalg.LinAlgError:
                pass
        return s

    # ---------------------------------------------------------------- geometry
    def is_empty(self):
        """Emptiness check by a linear program.

        For interval and polyhedral representations this is exact for the
        stored set.  For the sampled representation the LP constrains the
        diagonals and random quadratic forms of ``P_i``, which are necessary
        conditions, so infeasibility proves emptiness.
        """
        if self._empty is not None:
            return self._empty
        if self.representation == "sampled":
            A, b = self._relaxation()
            lo, hi = self.lo, self.hi
        else:
            A, b = self.G, self.h
            lo, hi = self.rep_lo, self.rep_hi
        if np.any(lo > hi):
            self._empty = True
            return True
        bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u) for l, u in zip(lo, hi)]
        if A.shape[0] == 0:
            self._empty = False
            return False
        res = linprog(np.zeros(self.dim), A_ub=-A, b_ub=-b, bounds=bounds, method="highs")
        self._empty = res.status == 2
        return self._empty

    def _relaxation(self):
        rows, rhs = [], []
        rng = np.random.default_rng(0)
        for H in self.hessians:
            n = H.shape[1]
            for r in range(n):
                rows.append(H[:, r, r])
                rhs.append(self.kappa)
            for _ in range(RELAX_DIRECTIONS):
                v = rng.standard_normal(n)
                v /= np.linalg.norm(v)
                rows.append(np.einsum("kab,a,b->k", H, v, v))
                rhs.append(self.kappa)
        return np.array(rows), np.array(rhs)

    def midpoint(self):
        """An interior-ish reference point of the stored set."""
        lo, hi = self.rep_lo, self.rep_hi
        mid = 0.5 * (lo + hi)
        mid = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo + 1.0, mid)
        mid = np.where(~np.isfinite(lo) & np.isfinite(hi), hi - 1.0, mid)
        mid = np.where(~np.isfinite(lo) & ~np.isfinite(hi), 0.0, mid)
        if self.projectable:
            return self.project(mid)
        return mid

    def interval(self):
        """``(lo, hi)`` of an interval representation."""
        if self.representation != "interval":
            raise UnsupportedRepresentation("dual set is not an interval")
        return self.rep_lo.copy(), self.rep_hi.copy()

    def to_dict(self):
        def fl(v):
            return [float(w) if np.isfinite(w) else ("inf" if w > 0 else "-inf") for w in v]

        d = {"representation": self.representation, "kappa_x": self.kappa, "exact": self.exact,
             "owners": self.owners, "lower": fl(self.rep_lo), "upper": fl(self.rep_hi),
             "empty": bool(self.is_empty())}
        if self.G.shape[0]:
            d["halfspaces"] = {"G": self.G.tolist(), "h": self.h.tolist()}
        return d


def _scalar_coeffs(H):
    """``c_k`` with ``H_k = c_k I`` for every component, or None."""
    n = H.shape[1]
    c = H[:, 0, 0].copy()
    if np.allclose(H, c[:, None, None] * np.eye(n)[None], rtol=0, atol=1e-14):
        return c
    return None


def build_block_eplus(hessians, lo, hi, kappa, owners=None):
    """Dual feasible set of one dual block from its component Hessians."""
    kappa = float(kappa)
    if not kappa > 0:
        raise ConfigError("kappa_x must be positive")
    q = lo.size
    coeffs = [_scalar_coeffs(H) for H in hessians]
    if all(c is not None for c in coeffs):
        rows = np.array(coeffs)
        rep_lo, rep_hi = lo.copy(), hi.copy()
        G, h = [], []
        inner_lo = lo.copy()
        any_inner = False
        for c in rows:
            nz = np.flatnonzero(c)
            if nz.size == 0:
                # P_i = 0 can never dominate kappa I
                return DualFeasibleSet(hessians, lo, hi, kappa, "interval", exact=True, owners=owners,
                                       rep_lo=np.full(q, np.inf), rep_hi=np.full(q, -np.inf))
            if nz.size == 1:
                k = nz[0]
                if c[k] > 0:
                    rep_lo[k] = max(rep_lo[k], kappa / c[k])
                else:
                    rep_hi[k] = min(rep_hi[k], kappa / c[k])
            elif np.all(c[nz] > 0):
                # inner box: each positive term carries an equal share of kappa
                any_inner = True
                for k in nz:
                    inner_lo[k] = max(inner_lo[k], kappa / (nz.size * c[k]))
                G.append(c)
                h.append(kappa)
            else:
                G.append(c)
                h.append(kappa)
        G, h = np.array(G).reshape(-1, q), np.array(h)
        mixed = [not np.all(g[g != 0] > 0) for g in G]
        if G.shape[0] == 0:
            return DualFeasibleSet(hessians, lo, hi, kappa, "interval", exact=True, owners=owners,
                                   rep_lo=rep_lo, rep_hi=rep_hi)
        if any_inner and not any(mixed):
            box_lo = np.maximum(rep_lo, inner_lo)
            if np.all(box_lo <= rep_hi):
                return DualFeasibleSet(hessians, lo, hi, kappa, "interval", exact=False, owners=owners,
                                       rep_lo=box_lo, rep_hi=rep_hi)
        return DualFeasibleSet(hessians, lo, hi, kappa, "polyhedron", G=G, h=h, exact=True, owners=owners,
                               rep_lo=rep_lo, rep_hi=rep_hi)

    # diagonal dominance with signs fixed by the dual domain:
    # sum_k sigma_k H_k[r,r] - sum_k |sigma_k| sum_{s != r} |H_k[r,s]| >= kappa
    sign = np.where(lo >= 0, 1.0, np.where(hi <= 0, -1.0, 0.0))
    if np.all(sign != 0):
        G, h = [], []
        for H in hessians:
            n = H.shape[1]
            for r in range(n):
                off = np.sum(np.abs(H[:, r, :]), axis=1) - np.abs(H[:, r, r])
                G.append(H[:, r, r] - sign * off)
                h.append(kappa)
        return DualFeasibleSet(hessians, lo, hi, kappa, "polyhedron", G=np.array(G), h=np.array(h),
                               exact=False, owners=owners)
    return DualFeasibleSet(hessians, lo, hi, kappa, "sampled", exact=False, owners=owners)


def eplus_build(game, i, kappa_x=DEFAULT_KAPPA_X):
    """Dual feasible set of player ``i``'s dual block.

    In potential mode every player shares the same block and the set
    requires the bound for every player.
    """
    game.check_player(i)
    b = game.block_of[i]
    blk = game.blocks[b]
    hessians = [np.array([hessian_lambda(game, j, k) for k in range(blk.q)]) for j in blk.owners]
    return build_block_eplus(hessians, blk.sigma_lo, blk.sigma_hi, kappa_x, owners=blk.owners)


def eplus_all(game, kappa_x=DEFAULT_KAPPA_X):
    """One dual feasible set per dual block."""
    return [eplus_build(game, blk.owners[0], kappa_x) for blk in game.blocks]


def split_sigma(game, sigma):
    sigma = np.asarray(sigma, dtype=float).ravel()
    if sigma.size != game.q_total:
        raise ConfigError(f"dual profile has length {sigma.size}, expected {game.q_total}")
    return [sigma[game.dual_slice(b)] for b in range(len(game.blocks))]


def complementary_value(game, i, x, sigma_i):
    """``Gamma_i(x, sigma_i) = sigma_i' Lambda_i(x) - psi_i*(sigma_i)``."""
    game.check_player(i)
    blk = game.blocks[game.block_of[i]]
    sigma_i = np.asarray(sigma_i, dtype=float).reshape(-1)
    if sigma_i.size != blk.q:
        raise ConfigError(f"player {i}: dual vector has length {sigma_i.size}, expected {blk.q}")
    blk.psi.check_dual(sigma_i, label=f"player {i} ")
    lam = blk.op.value(game.check_profile(x))
    return float(sigma_i @ lam - blk.psi.conj_value(sigma_i))


def p_matrix(game, i, sigma_i):
    """``P_i(sigma_i) = sum_k sigma_k Hess_{x_i} Lambda_{i,k}``."""
    game.check_player(i)
    blk = game.blocks[game.block_of[i]]
    sigma_i = np.asarray(sigma_i, dtype=float).reshape(-1)
    if sigma_i.size != blk.q:
        raise ConfigError(f"player {i}: dual vector has length {sigma_i.size}, expected {blk.q}")
    H = np.array([hessian_lambda(game, i, k) for k in range(blk.q)])
    return np.tensordot(sigma_i, H, axes=1)


VERDICTS = ("GlobalNE", "StationaryOnly", "Unverified")


class Certificate:
    """Outcome of the global equilibrium check."""

    def __init__(self, x, sigma, vi_residual, dual_residuals, membership, tol_vi, tol_dual,
                 primal_feasible=True, min_eigs=None, primal_residual=None):
        self.x = np.asarray(x, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.vi_residual = float(vi_residual)
        self.dual_residuals = [float(r) for r in dual_residuals]
        self.membership = [bool(m) for m in membership]
        self.tol_vi = float(tol_vi)
        self.tol_dual = [float(t) for t in np.broadcast_to(tol_dual, len(self.dual_residuals))]
        self.primal_feasible = bool(primal_feasible)
        self.min_eigs = None if min_eigs is None else [float(e) for e in min_eigs]
        # ||x - Proj_Omega(x - grad J(x))||, reported for information only
        self.primal_residual = None if primal_residual is None else float(primal_residual)
        vi_ok = self.vi_residual <= self.tol_vi and self.primal_feasible
        dual_ok = all(r <= t for r, t in zip(self.dual_residuals, self.tol_dual))
        if vi_ok and dual_ok and all(self.membership):
            self.verdict = "GlobalNE"
        elif vi_ok and not dual_ok:
            self.verdict = "StationaryOnly"
        else:
            self.verdict = "Unverified"

    @property
    def is_global(self):
        return self.verdict == "GlobalNE"

    @property
    def max_dual_residual(self):
        return max(self.dual_residuals) if self.dual_residuals else 0.0

    def to_dict(self):
        return _jsonable({
            "verdict": self.verdict,
            "x": self.x.tolist(),
            "sigma": self.sigma.tolist(),
            "vi_residual": self.vi_residual,
            "tol_vi": self.tol_vi,
            "dual_residuals": self.dual_residuals,
            "tol_dual": self.tol_dual,
            "membership": self.membership,
            "min_eigs": self.min_eigs,
            "primal_feasible": self.primal_feasible,
            "primal_residual": self.primal_residual,
        })

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def certify(game, x, sigma, tol_vi=None, tol_dual=None, kappa_x=DEFAULT_KAPPA_X, eplus=None, f_scale=None):
    """Check the global equilibrium conditions at ``(x, sigma)``.

    The verdict is ``GlobalNE`` when the VI residual, every duality residual
    ``||sigma_b - grad psi(Lambda_b(x))||`` and every dual-set membership
    pass.  ``StationaryOnly`` means the VI residual passes but a duality
    residual does not; every other failure is ``Unverified``.

    Parameters
    ----------
    tol_vi : float, optional
        Defaults to ``1e-6 (1 + f_scale)`` where ``f_scale`` defaults to
        ``||F(x, sigma)||``.
    tol_dual : float, optional
        Defaults to ``1e-5 (1 + ||grad psi(Lambda(x))||)`` per block.
    """
    from .vi import pseudo_gradient, vi_residual

    x = game.check_profile(x)
    sigmas = split_sigma(game, sigma)
    if eplus is None:
        eplus = eplus_all(game, kappa_x)
    feasible = game.is_feasible(x)
    nat = split_sigma(game, _safe_natural_duals(game, x))
    dual_res = [float(np.linalg.norm(s - n)) for s, n in zip(sigmas, nat)]
    if tol_dual is None:
        tol_dual = [1e-5 * (1.0 + float(np.linalg.norm(n))) for n in nat]
    membership = [E.contains(s) for E, s in zip(eplus, sigmas)]
    min_eigs = [E.min_eig(s) for E, s in zip(eplus, sigmas)]
    z = np.concatenate([x, np.concatenate(sigmas)])
    try:
        res = vi_residual(game, eplus, z)
        if tol_vi is None:
            scale = float(np.linalg.norm(pseudo_gradient(game, z))) if f_scale is None else float(f_scale)
            tol_vi = 1e-6 * (1.0 + scale)
    except DomainError:
        res = np.inf
        tol_vi = 0.0 if tol_vi is None else tol_vi
    try:
        with np.errstate(all="ignore"):
            pres = float(np.linalg.norm(x - game.project(x - payoff_gradients(game, x))))
    except DomainError:
        pres = np.inf
    return Certificate(x, np.concatenate(sigmas), res, dual_res, membership, tol_vi, tol_dual,
                       primal_feasible=feasible, min_eigs=min_eigs, primal_residual=pres)


def _safe_natural_duals(game, x):
    with np.errstate(all="ignore"):
        return natural_duals(game, x)
