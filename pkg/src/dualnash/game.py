"""
Non-convex games with payoffs ``J_i = psi_i(Lambda_i(x))``.

The quadratic operators are stored in joint form over the whole profile,
``Lambda_k(x) = x' Q_k x + r_k' x + c_k``, so components may depend on
any player's variables.  The per-player block form
``x_i' A x_i + sum_j x_i' B_j x_j + b' x_i + c`` is available through
:meth:`QuadraticOperator.from_blocks`.
"""

import itertools
import json

import numpy as np

from .canonical import CanonicalFunction, psi_from_dict
from .errors import ConfigError, DomainError
from .sets import ConstraintSet, set_from_dict

# exact face enumeration is used for components with at most this many variables
MAX_FACE_VARS = 8


class QuadraticOperator:
    """Vector of quadratic components over the joint profile.

    Parameters
    ----------
    Q : array_like, shape (q, n, n)
        Quadratic parts; symmetrised on construction.
    r : array_like, shape (q, n)
        Linear parts.
    c : array_like, shape (q,)
        Constants.
    """

    def __init__(self, Q, r, c):
        Q = np.asarray(Q, dtype=float)
        r = np.asarray(r, dtype=float)
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise ConfigError(f"lambda: Q must have shape (q, n, n), got {Q.shape}")
        q, n, _ = Q.shape
        if r.shape != (q, n) or c.shape != (q,):
            raise ConfigError(f"lambda: r must be ({q}, {n}) and c ({q},), got {r.shape} and {c.shape}")
        self.Q = 0.5 * (Q + Q.transpose(0, 2, 1))
        self.r = r
        self.c = c
        self.q = q
        self.n = n

    @classmethod
    def from_blocks(cls, sizes, owner, A, b=None, c=None, B=None):
        """Build from the per-player form.

        ``Lambda_k = x_i' A_k x_i + sum_j x_i' B_jk x_j + b_k' x_i + c_k`` with
        ``i = owner``.  ``B`` maps player index ``j`` to an array of shape
        ``(q, n_i, n_j)``.
        """
        sizes = [int(s) for s in sizes]
        offs = np.concatenate([[0], np.cumsum(sizes)])
        A = np.asarray(A, dtype=float)
        if A.ndim == 2:
            A = A[None]
        q, ni = A.shape[0], sizes[owner]
        if A.shape != (q, ni, ni):
            raise ConfigError(f"lambda blocks: A must have shape ({q}, {ni}, {ni}), got {A.shape}")
        n = int(offs[-1])
        Q = np.zeros((q, n, n))
        r = np.zeros((q, n))
        si = slice(offs[owner], offs[owner + 1])
        Q[:, si, si] = A
        for j, Bj in (B or {}).items():
            j = int(j)
            if j == owner:
                raise ConfigError("lambda blocks: B must not contain the owner index")
            Bj = np.asarray(Bj, dtype=float)
            if Bj.ndim == 2:
                Bj = Bj[None]
            sj = slice(offs[j], offs[j + 1])
            if Bj.shape != (q, ni, sizes[j]):
                raise ConfigError(f"lambda blocks: B[{j}] must have shape ({q}, {ni}, {sizes[j]}), got {Bj.shape}")
            # x_i' B x_j split symmetrically over the two off-diagonal blocks
            Q[:, si, sj] += 0.5 * Bj
            Q[:, sj, si] += 0.5 * Bj.transpose(0, 2, 1)
        if b is not None:
            b = np.asarray(b, dtype=float).reshape(q, ni)
            r[:, si] = b
        c = np.zeros(q) if c is None else np.asarray(c, dtype=float).reshape(q)
        return cls(Q, r, c)

    def value(self, x):
        Qx = self.Q @ x
        return Qx @ x + self.r @ x + self.c

    def jacobian(self, x):
        """Rows are the gradients of each component w.r.t. the full profile."""
        return 2.0 * (self.Q @ x) + self.r

    def hessian(self, k, sl):
        return 2.0 * self.Q[k, sl, sl]

    def support(self, k):
        """Indices of variables that component ``k`` depends on."""
        used = np.any(self.Q[k] != 0, axis=0) | (self.r[k] != 0)
        return np.flatnonzero(used)

    def to_dict(self):
        return {
            "components": [
                {"Q": self.Q[k].tolist(), "r": self.r[k].tolist(), "c": float(self.c[k])}
                for k in range(self.q)
            ]
        }


def quadratic_range(Q, r, c, lo, hi):
    """Exact range of ``x'Qx + r'x + c`` over the box ``[lo, hi]``.

    Enumerates every face of the box and solves for the stationary point
    of the restriction.  Faces with singular restricted Hessians attain
    their extreme values on lower dimensional faces, so they are skipped.
    """
    m = lo.size
    if m == 0:
        return float(c), float(c)
    best_lo, best_hi = np.inf, -np.inf
    H = 2.0 * Q
    for pattern in itertools.product((0, 1, 2), repeat=m):
        pattern = np.array(pattern)
        fixed = pattern < 2
        free = ~fixed
        x = np.where(pattern == 0, lo, hi)
        if free.any():
            Hff = H[np.ix_(free, free)]
            rhs = -(r[free] + H[np.ix_(free, fixed)] @ x[fixed])
            try:
                xf = np.linalg.solve(Hff, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(xf)):
                continue
            if np.any(xf < lo[free] - 1e-12) or np.any(xf > hi[free] + 1e-12):
                continue
            x = x.copy()
            x[free] = xf
        v = x @ Q @ x + r @ x + c
        best_lo = min(best_lo, v)
        best_hi = max(best_hi, v)
    return float(best_lo), float(best_hi)


def interval_range(Q, r, c, lo, hi):
    """Conservative range of a quadratic over a box by interval arithmetic."""
    def prod(alo, ahi, blo, bhi):
        cand = np.array([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
        return cand.min(axis=0), cand.max(axis=0)

    vlo, vhi = float(c), float(c)
    plo, phi = prod(r, r, lo, hi)
    vlo += plo.sum()
    vhi += phi.sum()
    m = lo.size
    for a in range(m):
        for b in range(m):
            if Q[a, b] == 0:
                continue
            if a == b:
                sq = np.array([lo[a] ** 2, hi[a] ** 2])
                slo = 0.0 if lo[a] <= 0 <= hi[a] else sq.min()
                shi = sq.max()
                tlo, thi = prod(Q[a, a], Q[a, a], slo, shi)
            else:
                xlo, xhi = prod(lo[a], hi[a], lo[b], hi[b])
                tlo, thi = prod(Q[a, b], Q[a, b], xlo, xhi)
            vlo += float(tlo)
            vhi += float(thi)
    return vlo, vhi


class DualBlock:
    """One canonical transformation: the operator, psi, and ``Theta``.

    In a general game each player owns one block; in potential mode a
    single block is shared by all players.
    """

    def __init__(self, op, psi, owners, theta_lo, theta_hi):
        self.op = op
        self.psi = psi
        self.owners = list(owners)
        self.theta_lo = np.asarray(theta_lo, dtype=float)
        self.theta_hi = np.asarray(theta_hi, dtype=float)
        self.sigma_lo, self.sigma_hi = psi.dual_bounds(self.theta_lo, self.theta_hi)

    @property
    def q(self):
        return self.op.q


class GameSpec:
    """An N-player game ``min_{x_i in Omega_i} psi_i(Lambda_i(x_i, x_-i))``.

    Parameters
    ----------
    sets : list of ConstraintSet
        Feasible set of each player.
    operators : list of QuadraticOperator or QuadraticOperator
        One operator per player, or a single shared operator in potential mode.
    psis : list of CanonicalFunction or CanonicalFunction
        Matching canonical functions.
    potential : bool
        Whether all players share one ``Lambda`` and one ``psi``.
    theta : "auto", None, or list of (lo, hi)
        Primal domains.  ``"auto"`` derives the range of each component over
        the bounding box of the feasible sets; ``None`` uses the natural
        domain of ``psi``.
    meta : dict, optional
        Free-form metadata (for instance a known ground truth).
    """

    def __init__(self, sets, operators, psis, potential=False, theta="auto", meta=None, name=None):
        self.sets = list(sets)
        for s in self.sets:
            if not isinstance(s, ConstraintSet):
                raise ConfigError("game: every player needs a ConstraintSet")
        self.N = len(self.sets)
        if self.N < 1:
            raise ConfigError("game: at least one player is required")
        self.sizes = [s.dim for s in self.sets]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        self.n_total = int(self.offsets[-1])
        self.potential = bool(potential)
        self.meta = dict(meta or {})
        self.name = name

        if self.potential:
            if isinstance(operators, (list, tuple)):
                if len(operators) != 1:
                    raise ConfigError("potential game: exactly one shared operator is required")
                operators = operators[0]
            if isinstance(psis, (list, tuple)):
                if len(psis) != 1:
                    raise ConfigError("potential game: exactly one shared psi is required")
                psis = psis[0]
            ops, pss, owners = [operators], [psis], [list(range(self.N))]
        else:
            ops, pss = list(operators), list(psis)
            if len(ops) != self.N or len(pss) != self.N:
                raise ConfigError(f"game: expected {self.N} operators and psis, got {len(ops)} and {len(pss)}")
            owners = [[i] for i in range(self.N)]

        if theta is not None and theta != "auto" and len(theta) != len(ops):
            raise ConfigError("game: theta must give one (lo, hi) pair per block")
        self.blocks = []
        for b, (op, psi, own) in enumerate(zip(ops, pss, owners)):
            if not isinstance(op, QuadraticOperator):
                raise ConfigError(f"block {b}: lambda must be a QuadraticOperator")
            if not isinstance(psi, CanonicalFunction):
                raise ConfigError(f"block {b}: psi must be a CanonicalFunction")
            if op.n != self.n_total:
                raise ConfigError(f"block {b}: operator acts on dimension {op.n}, profile has {self.n_total}")
            if theta == "auto":
                tlo, thi = self._derive_theta(op, psi)
            elif theta is None:
                tlo = np.full(op.q, psi.domain[0])
                thi = np.full(op.q, psi.domain[1])
            else:
                tlo, thi = (np.asarray(v, dtype=float).reshape(op.q) for v in theta[b])
            self.blocks.append(DualBlock(op, psi, own, tlo, thi))

        # player -> block and, in potential mode, the components that involve each player
        self.block_of = [0] * self.N if self.potential else list(range(self.N))
        self._involved = []
        for i in range(self.N):
            blk = self.blocks[self.block_of[i]]
            sl = self.slice(i)
            inv = np.array([np.any(blk.op.Q[k][sl] != 0) or np.any(blk.op.r[k][sl] != 0)
                            for k in range(blk.q)], dtype=bool)
            self._involved.append(inv if self.potential else np.ones(blk.q, dtype=bool))
        self.q_sizes = [blk.q for blk in self.blocks]
        self.dual_offsets = np.concatenate([[0], np.cumsum(self.q_sizes)]).astype(int)
        self.q_total = int(self.dual_offsets[-1])

    # ------------------------------------------------------------------ helpers
    def slice(self, i):
        return slice(self.offsets[i], self.offsets[i + 1])

    def dual_slice(self, b):
        return slice(self.dual_offsets[b], self.dual_offsets[b + 1])

    def split(self, x):
        x = self.check_profile(x)
        return [x[self.slice(i)] for i in range(self.N)]

    def check_profile(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_total:
            raise ConfigError(f"profile has length {x.size}, expected {self.n_total}")
        return x

    def check_player(self, i):
        if not 0 <= i < self.N:
            raise ConfigError(f"player index {i} out of range 0..{self.N - 1}")

    def is_feasible(self, x, tol=1e-9):
        return all(s.contains(xi, tol) for s, xi in zip(self.sets, self.split(x)))

    def project(self, x):
        return np.concatenate([s.project(xi) for s, xi in zip(self.sets, self.split(x))])

    def midpoint(self):
        return np.concatenate([s.midpoint() for s in self.sets])

    def involved(self, i):
        """Mask of the components of player ``i``'s block that depend on ``x_i``."""
        return self._involved[i]

    def _derive_theta(self, op, psi):
        lo_all = np.concatenate([s.bounds()[0] for s in self.sets])
        hi_all = np.concatenate([s.bounds()[1] for s in self.sets])
        tlo = np.full(op.q, psi.domain[0])
        thi = np.full(op.q, psi.domain[1])
        for k in range(op.q):
            sup = op.support(k)
            lo, hi = lo_all[sup], hi_all[sup]
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                continue
            Qs = op.Q[k][np.ix_(sup, sup)]
            rs = op.r[k][sup]
            if sup.size <= MAX_FACE_VARS:
                vlo, vhi = quadratic_range(Qs, rs, op.c[k], lo, hi)
            else:
                vlo, vhi = interval_range(Qs, rs, op.c[k], lo, hi)
            tlo[k] = max(tlo[k], vlo)
            thi[k] = min(thi[k], vhi)
        return tlo, thi

    # ------------------------------------------------------------- serialisation
    def to_dict(self):
        d = {"players": [{"omega": s.to_dict()} for s in self.sets]}
        if self.potential:
            blk = self.blocks[0]
            d["potential"] = True
            d["lambda"] = blk.op.to_dict()
            d["psi"] = blk.psi.to_dict()
            d["theta"] = {"lower": _jsonable(blk.theta_lo), "upper": _jsonable(blk.theta_hi)}
        else:
            for p, blk in zip(d["players"], self.blocks):
                p["lambda"] = blk.op.to_dict()
                p["psi"] = blk.psi.to_dict()
                p["theta"] = {"lower": _jsonable(blk.theta_lo), "upper": _jsonable(blk.theta_hi)}
        if self.name:
            d["name"] = self.name
        if self.meta:
            d["meta"] = _jsonable(self.meta)
        return d

    def to_json(self, path=None, indent=None):
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d):
        try:
            players = d["players"]
        except (KeyError, TypeError):
            raise ConfigError("game: missing 'players'") from None
        sets = [set_from_dict(p["omega"]) for p in players]
        sizes = [s.dim for s in sets]
        potential = bool(d.get("potential", False))

        def theta_of(obj, q):
            t = obj.get("theta")
            if t is None or t == "auto":
                return None
            return (_unjson(t["lower"], q), _unjson(t["upper"], q))

        if potential:
            if "lambda" not in d or "psi" not in d:
                raise ConfigError("potential game: top-level 'lambda' and 'psi' are required")
            op = _op_from_dict(d["lambda"], sizes, owner=None)
            psi = psi_from_dict(d["psi"])
            t = theta_of(d, op.q)
            theta = "auto" if t is None else [t]
            return cls(sets, op, psi, potential=True, theta=theta, meta=d.get("meta"), name=d.get("name"))
        ops, psis, thetas = [], [], []
        for i, p in enumerate(players):
            if "lambda" not in p or "psi" not in p:
                raise ConfigError(f"player {i}: 'lambda' and 'psi' are required")
            op = _op_from_dict(p["lambda"], sizes, owner=i)
            ops.append(op)
            psis.append(psi_from_dict(p["psi"]))
            thetas.append(theta_of(p, op.q))
        game = cls(sets, ops, psis, potential=False, theta="auto", meta=d.get("meta"), name=d.get("name"))
        if any(t is not None for t in thetas):
            theta = [t if t is not None else (b.theta_lo, b.theta_hi) for t, b in zip(thetas, game.blocks)]
            game = cls(sets, ops, psis, potential=False, theta=theta, meta=d.get("meta"), name=d.get("name"))
        return game

    @classmethod
    def from_json(cls, source):
        """Load from a path or a JSON string."""
        if isinstance(source, str) and source.lstrip().startswith("{"):
            data = json.loads(source)
        else:
            with open(source) as fh:
                data = json.load(fh)
        return cls.from_dict(data)


def _op_from_dict(d, sizes, owner):
    if "components" in d:
        comps = d["components"]
        n = int(sum(sizes))
        if len(comps) == 0:
            raise ConfigError("lambda: at least one component is required")
        Q = np.array([np.asarray(cm.get("Q", np.zeros((n, n))), dtype=float) for cm in comps])
        r = np.array([np.asarray(cm.get("r", np.zeros(n)), dtype=float) for cm in comps])
        c = np.array([float(cm.get("c", 0.0)) for cm in comps])
        if Q.shape != (len(comps), n, n) or r.shape != (len(comps), n):
            raise ConfigError(f"lambda: component matrices must be {n}x{n} with length-{n} r")
        return QuadraticOperator(Q, r, c)
    if "A" in d:
        if owner is None:
            raise ConfigError("lambda: block form needs an owning player; use 'components' in potential mode")
        B = {int(j): v for j, v in d.get("B", {}).items()}
        return QuadraticOperator.from_blocks(sizes, owner, d["A"], d.get("b"), d.get("c"), B)
    raise ConfigError("lambda: expected 'components' or block form with 'A'")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(w) for k, w in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(w) for w in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        if np.isnan(v):
            return "nan"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _unjson(v, q):
    arr = np.array([float(w) for w in np.atleast_1d(v)], dtype=float)
    return arr.reshape(q)


# ---------------------------------------------------------------- evaluations
def eval_lambda(game, i, x):
    """Operator values of player ``i``'s block at profile ``x``."""
    game.check_player(i)
    x = game.check_profile(x)
    return game.blocks[game.block_of[i]].op.value(x)


def grad_lambda_xi(game, i, x):
    """Matrix whose row ``k`` is the gradient of component ``k`` w.r.t. ``x_i``."""
    game.check_player(i)
    x = game.check_profile(x)
    return game.blocks[game.block_of[i]].op.jacobian(x)[:, game.slice(i)]


def hessian_lambda(game, i, k):
    """Constant Hessian of component ``k`` w.r.t. ``x_i``."""
    game.check_player(i)
    blk = game.blocks[game.block_of[i]]
    if not 0 <= k < blk.q:
        raise ConfigError(f"component index {k} out of range for player {i} (q={blk.q})")
    return blk.op.hessian(k, game.slice(i))


def _player_lambda(game, i, x):
    blk = game.blocks[game.block_of[i]]
    lam = blk.op.value(x)
    inv = game.involved(i)
    return blk, lam, inv


def eval_payoff(game, i, x):
    """Payoff ``J_i(x)``.

    In potential mode this sums ``psi`` over the components that depend on
    ``x_i``; it differs from the potential only by terms free of ``x_i``.
    """
    game.check_player(i)
    x = game.check_profile(x)
    blk, lam, inv = _player_lambda(game, i, x)
    blk.psi.check_primal(lam[inv], label=f"player {i} ")
    return blk.psi.value(lam[inv])


def grad_payoff(game, i, x):
    """Chain-rule gradient ``grad psi(Lambda)' grad_{x_i} Lambda``."""
    game.check_player(i)
    x = game.check_profile(x)
    blk, lam, inv = _player_lambda(game, i, x)
    blk.psi.check_primal(lam[inv], label=f"player {i} ")
    jac = blk.op.jacobian(x)[inv][:, game.slice(i)]
    return blk.psi.grad(lam[inv]) @ jac


def potential_value(game, x):
    """Value of the shared potential ``psi(Lambda(x))`` in potential mode."""
    if not game.potential:
        raise ConfigError("potential_value needs a potential game")
    blk = game.blocks[0]
    lam = blk.op.value(game.check_profile(x))
    return blk.psi.value(blk.psi.check_primal(lam))


def payoff_gradients(game, x):
    """Stacked ``grad_{x_i} J_i`` for all players."""
    return np.concatenate([grad_payoff(game, i, x) for i in range(game.N)])


def natural_duals(game, x):
    """Dual vector ``sigma = grad psi(Lambda(x))`` for every block."""
    x = game.check_profile(x)
    out = []
    for blk in game.blocks:
        lam = blk.op.value(x)
        out.append(blk.psi.grad(lam))
    return np.concatenate(out)


def _check_domain_all(game, x):
    for b, blk in enumerate(game.blocks):
        blk.psi.check_primal(blk.op.value(x), label=f"block {b} ")


__all__ = [
    "QuadraticOperator", "DualBlock", "GameSpec", "DomainError",
    "eval_lambda", "grad_lambda_xi", "hessian_lambda", "eval_payoff", "grad_payoff",
    "potential_value", "payoff_gradients", "natural_duals", "quadratic_range", "interval_range",
]
