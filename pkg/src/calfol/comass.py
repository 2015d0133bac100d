"""Comass machinery: evaluate invariant forms on decomposable tangent planes
and maximize over the orthonormal-frame manifold.

A degree-p form with support on the tangent generators evaluates on a plane
X (rows = basis vectors) as sum_w c_w det(X[:, w]); the maximizer runs
projected gradient ascent on the Stiefel manifold of p-frames with QR
retraction and backtracking line search, restarted from seeded random
frames.  An independent derivative-free random-search oracle and analytic
bounds guard the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
import math

import numpy as np

from .charforms import Split, calibration_phi, euler_form, Normalization
from .exalg import FormExpr, ScalarPi, evaluate
from .grassmann import (
    TangentPlane,
    flag_generators,
    plane_from_rows,
    plucker_coords,
    random_tangent_planes,
    tangent_generators,
)


# ---------------------------------------------------------------------------
# compiled evaluation
# ---------------------------------------------------------------------------

class CompiledForm:
    """Index-array compilation of a form over an ordered generator basis."""

    def __init__(self, form: FormExpr, gens):
        self.gens = tuple(gens)
        pos = {g: i for i, g in enumerate(self.gens)}
        degree = form.degree()
        if degree is None:
            raise ValueError("form must be homogeneous and nonzero")
        self.degree = degree
        idx_rows = []
        coefs = []
        for mono, coef in form.terms.items():
            if any(g not in pos for g in mono):
                # monomial involves generators outside the evaluation space;
                # it pairs to zero with every plane here
                continue
            idx_rows.append([pos[g] for g in mono])
            coefs.append(float(coef))
        if not idx_rows:
            raise ValueError("form has no support on the generator basis")
        self.indices = np.array(idx_rows)  # (T, p)
        self.coefs = np.array(coefs)  # (T,)

    def value(self, x: np.ndarray) -> float:
        """Evaluate on one plane matrix x of shape (p, D)."""
        mats = np.transpose(x[:, self.indices], (1, 0, 2))  # (T, p, p)
        return float(self.coefs @ np.linalg.det(mats))

    def values(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate on a batch of plane matrices, shape (N, p, D)."""
        mats = xs[:, :, self.indices]  # (N, p, T, p)
        mats = np.transpose(mats, (0, 2, 1, 3))  # (N, T, p, p)
        return np.linalg.det(mats) @ self.coefs

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Euclidean gradient dF/dx via exact cofactor expansion."""
        p = self.degree
        mats = np.transpose(x[:, self.indices], (1, 0, 2))  # (T, p, p)
        cof = _cofactor_matrices(mats)  # (T, p, p)
        grad = np.zeros_like(x)
        weighted = cof * self.coefs[:, None, None]
        for b in range(p):
            np.add.at(grad.T, self.indices[:, b], weighted[:, :, b])
        return grad


def _cofactor_matrices(mats: np.ndarray) -> np.ndarray:
    """Cofactor matrices of a batch of p x p matrices via minors (stable)."""
    t, p, _ = mats.shape
    if p == 1:
        return np.ones_like(mats)
    cof = np.empty_like(mats)
    rows = np.arange(p)
    for a in range(p):
        sub_rows = rows[rows != a]
        for b in range(p):
            sub_cols = rows[rows != b]
            minors = mats[:, sub_rows[:, None], sub_cols[None, :]]
            sign = -1.0 if (a + b) % 2 else 1.0
            cof[:, a, b] = sign * np.linalg.det(minors)
    return cof


def form_for(split: Split, name: str, norm: Normalization = Normalization.LITERAL):
    """Named evaluation targets for the CLI: the V-block Euler form on the
    Grassmannian tangent space, or the calibration on the flag tangent space."""
    if name == "euler-v":
        return euler_form(split, "v", norm), tangent_generators(split)
    if name == "phi":
        return calibration_phi(split), flag_generators(split)
    raise ValueError(f"unknown form {name!r}")


def evaluate_on_plane(form: FormExpr, plane: TangentPlane, exact: bool = False):
    """Pair a form with a tangent plane; exact=True uses the symbolic path."""
    deg = form.degree()
    if deg != plane.degree:
        raise ValueError(f"degree mismatch: form {deg}, plane {plane.degree}")
    if exact:
        return evaluate(form, plane.dual_vectors())
    return CompiledForm(form, plane.gens).value(plane.matrix)


# ---------------------------------------------------------------------------
# maximization
# ---------------------------------------------------------------------------

@dataclass
class ComassReport:
    form: str
    split: str
    degree: int
    best_value: float
    argmax: list
    argmax_plucker_norm: float
    achiever_diagnostic: float | None
    restarts: int
    iterations: int
    seed: int
    tol: float
    gradient_norm: float
    converged: bool
    bound: float | None = None
    oracle_value: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "split": self.split,
            "degree": self.degree,
            "best_value": self.best_value,
            "abs_best_value": abs(self.best_value),
            "argmax": self.argmax,
            "argmax_plucker_norm": self.argmax_plucker_norm,
            "achiever_diagnostic": self.achiever_diagnostic,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "seed": self.seed,
            "tol": self.tol,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "bound": self.bound,
            "oracle_value": self.oracle_value,
            "notes": self.notes,
        }


def _project_stiefel(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    s = g @ x.T
    return g - ((s + s.T) / 2.0) @ x

def _retract(x: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(x.T)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return (q * d).T


def _ascent(compiled: CompiledForm, x0: np.ndarray, max_iter: int, gtol: float):
    """Monotone projected gradient ascent; returns (x, value, iters, gnorm)."""
    x = x0
    val = compiled.value(x)
    it = 0
    gnorm = math.inf
    while it < max_iter:
        it += 1
        grad = _project_stiefel(x, compiled.gradient(x))
        gnorm = float(np.linalg.norm(grad))
        if gnorm < gtol:
            break
        alpha = 1.0
        improved = False
        g2 = gnorm * gnorm
        while alpha > 1e-14:
            cand = _retract(x + alpha * grad)
            cval = compiled.value(cand)
            if cval > val + 1e-4 * alpha * g2:
                x, val = cand, cval
                improved = True
                break
            alpha /= 2.0
        if not improved:
            break
    return x, val, it, gnorm


def _diagnostic_compiled(split: Split, gens) -> CompiledForm | None:
    """Compiled sum of the diagonal monomials E[i,k+1]^...^E[i,n]."""
    cols = list(split.v_indices)
    if not all((i, m) in gens for i in split.u_indices for m in cols):
        return None
    raw = [(ScalarPi.of(1), [(i, m) for m in cols]) for i in split.u_indices]
    return CompiledForm(FormExpr.from_raw(split.n, raw), gens)


def _canonicalize_achiever(compiled: CompiledForm, diag: CompiledForm,
                           x: np.ndarray, best: float, keep_tol: float = 1e-11,
                           max_steps: int = 3000) -> np.ndarray:
    """Ascend the diagonal diagnostic inside the achiever set.

    The maximum of the objective is attained on a manifold of planes whose
    diagnostic varies (rotating the swing axis changes it without changing
    the value), so the reported representative is pinned by maximizing the
    diagnostic subject to the objective staying within keep_tol of the best.
    """
    step = 0.5
    dval = diag.value(x)
    for _ in range(max_steps):
        g = _project_stiefel(x, diag.gradient(x))
        gn = float(np.linalg.norm(g))
        if gn < 1e-10 or step < 1e-12:
            break
        cand = _retract(x + step * g)
        if compiled.value(cand) >= best - keep_tol and diag.value(cand) > dval:
            x = cand
            dval = diag.value(x)
        else:
            step /= 2.0
    return x


def maximize(form: FormExpr, split: Split, degree: int, restarts: int = 64,
             seed: int = 0, tol: float = 1e-9, max_iter: int = 10000,
             gens=None, bound: float | None = None, workers: int | None = None,
             form_name: str = "form") -> ComassReport:
    """Multi-start Stiefel ascent; deterministic per seed, any worker count."""
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    dim = len(gens)
    if degree > dim:
        raise ValueError(f"degree {degree} exceeds tangent dimension {dim}")
    compiled = CompiledForm(form, gens)
    if compiled.degree != degree:
        raise ValueError(f"form degree {compiled.degree} != requested {degree}")

    seeds = np.random.SeedSequence(seed).spawn(restarts)
    warm_iter = min(max_iter, 400)

    def run_restart(i):
        rng = np.random.default_rng(seeds[i])
        raw = rng.normal(size=(dim, degree))
        q, r = np.linalg.qr(raw)
        x0 = (q * np.sign(np.diag(r))).T
        return _ascent(compiled, x0, warm_iter, tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_restart, range(restarts)))
    else:
        results = [run_restart(i) for i in range(restarts)]

    # deterministic winner: value first, then lowest restart index
    best_i = max(range(restarts), key=lambda i: (results[i][1], -i))
    x, val, it0, _ = results[best_i]
    x, val, it1, gnorm = _ascent(compiled, x, max_iter, tol)
    total_iters = it0 + it1
    converged = gnorm < tol

    diagnostic = None
    diag = _diagnostic_compiled(split, gens) if degree == split.n - split.k else None
    if diag is not None:
        x = _canonicalize_achiever(compiled, diag, x, val)
        val = max(val, compiled.value(x))

    plane = plane_from_rows(split, x, gens=gens, reorthonormalize=True)
    pc = plucker_coords(plane)
    if diag is not None:
        cols = sorted(split.v_indices)
        diagnostic = sum(
            pc.coefficient([(i, m) for m in cols]) for i in split.u_indices
        )

    notes = []
    if not converged:
        notes.append("iteration cap reached; best-so-far reported")
    if bound is not None and val > bound + 1e-9:
        notes.append("value exceeds registered bound")
    return ComassReport(
        form=form_name,
        split=str(split),
        degree=degree,
        best_value=val,
        argmax=np.round(plane.matrix, 12).tolist(),
        argmax_plucker_norm=pc.norm(),
        achiever_diagnostic=diagnostic,
        restarts=restarts,
        iterations=total_iters,
        seed=seed,
        tol=tol,
        gradient_norm=gnorm,
        converged=converged,
        bound=bound,
        notes=notes,
    )


def verify_bound(form: FormExpr, split: Split, degree: int, bound: float,
                 samples: int, seed: int = 0, gens=None, chunk: int = 4096) -> dict:
    """Sample random decomposable unit planes; fail iff any evaluation
    exceeds bound + 1e-9."""
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    compiled = CompiledForm(form, gens)
    seeds = np.random.SeedSequence(seed).spawn(max(1, (samples + chunk - 1) // chunk))
    worst = -math.inf
    done = 0
    for s in seeds:
        take = min(chunk, samples - done)
        if take <= 0:
            break
        xs = random_tangent_planes(split, degree, take, np.random.default_rng(s), gens=gens)
        vals = compiled.values(xs)
        worst = max(worst, float(np.max(vals)))
        done += take
    return {
        "bound": bound,
        "samples": done,
        "max_sampled": worst,
        "passed": worst <= bound + 1e-9,
    }


def random_search_oracle(form: FormExpr, split: Split, degree: int,
                         samples: int = 200000, seed: int = 1,
                         polish_steps: int = 4000, gens=None) -> float:
    """Derivative-free maximum estimate: dense random search plus
    random-perturbation hill climbing.  Shares no code with the gradient
    ascent path."""
    gens = tuple(gens) if gens is not None else tangent_generators(split)
    compiled = CompiledForm(form, gens)
    rng = np.random.default_rng(seed)
    best_x, best_v = None, -math.inf
    chunk = 4096
    left = samples
    while left > 0:
        take = min(chunk, left)
        xs = random_tangent_planes(split, degree, take, rng, gens=gens)
        vals = compiled.values(xs)
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_v, best_x = float(vals[i]), xs[i]
        left -= take
    step = 0.5
    x = best_x
    since_improve = 0
    for _ in range(polish_steps):
        cand = x + step * rng.normal(size=x.shape)
        q, r = np.linalg.qr(cand.T)
        cand = (q * np.sign(np.diag(r))).T
        v = compiled.value(cand)
        if v > best_v:
            best_v, x = v, cand
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= 40:
                step = max(step / 2.0, 1e-9)
                since_improve = 0
    return best_v


# ---------------------------------------------------------------------------
# mixed vertical-horizontal scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedPlaneSpec:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for t in (self.theta1, self.theta2, self.theta3):
            if not 0.0 <= t <= math.pi / 2 + 1e-12:
                raise ValueError("mixed-plane angles must lie in [0, pi/2]")


def _gram_vectors(q1: float, q2: float, q3: float) -> np.ndarray:
    """Rows alpha, beta, gamma in R^3 with beta.gamma=q1, alpha.gamma=q2,
    alpha.beta=q3 (the Gram matrix must be PSD)."""
    g = np.array([[1.0, q3, q2], [q3, 1.0, q1], [q2, q1, 1.0]])
    w, v = np.linalg.eigh(g)
    w = np.clip(w, 0.0, None)
    vecs = v * np.sqrt(w)
    # renormalize rows against clipping noise
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs


def _mixed_plane(split: Split, spec: MixedPlaneSpec, alpha, beta, gamma, gens):
    """7-plane (a_i v_i + b_i h_i) + axis 4-plane with row-pure horizontals
    h1 = sum alpha_c E[2,c], h2 = sum beta_c E[3,c], h3 = sum gamma_c E[4,c]."""
    pos = {g: i for i, g in enumerate(gens)}
    cols = list(split.v_indices)
    thetas = (spec.theta1, spec.theta2, spec.theta3)
    weights = (alpha, beta, gamma)
    rows = []
    for slot, (theta, w) in enumerate(zip(thetas, weights)):
        a, b = math.cos(theta), math.sin(theta)
        row = np.zeros(len(gens))
        row[pos[(1, slot + 2)]] = a
        for c, wc in zip(cols[: len(w)], w):
            row[pos[(slot + 2, c)]] = b * wc
        rows.append(row)
    for m in cols:
        row = np.zeros(len(gens))
        row[pos[(1, m)]] = 1.0
        rows.append(row)
    return np.array(rows)


def mixed_vertical_scan(split: Split, n_theta: int = 9, c_constant: float | None = None,
                        h_mode: str = "adaptive", tol: float = 1e-9) -> dict:
    """Evaluate the calibration on mixed vertical-horizontal 7-planes over a
    theta grid and test |Phi| <= C |cos(theta1 + theta2 - theta3)| * (3/2 pi^2).

    The horizontal unit vectors h_i are not pinned by the plane decomposition;
    h_mode="adaptive" picks, per grid point, the realizable cross-coupling
    (a point of the elliptope of pairwise inner products) minimizing |Phi|.
    h_mode="aligned" uses the fixed frame (E[2,5], E[3,5], E[4,5]), for which
    the single-cosine bound fails on part of the grid -- the scan reports
    those violations rather than hiding them.
    """
    if (split.k, split.n) != (4, 8):
        raise ValueError("mixed scan supports split (4,8)")
    gens = flag_generators(split)
    phi = calibration_phi(split)
    compiled = CompiledForm(phi, gens)

    e_max = 3.0 / (2.0 * math.pi**2)
    spec0 = MixedPlaneSpec(0.0, 0.0, 0.0)
    x0 = _mixed_plane(split, spec0, np.zeros(4), np.zeros(4), np.zeros(4), gens)
    t_zero = compiled.value(x0)
    c = c_constant if c_constant is not None else t_zero / e_max

    corners = [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
    thetas = np.linspace(0.0, math.pi / 2, n_theta)
    rows = []
    violations = 0
    for t1 in thetas:
        for t2 in thetas:
            for t3 in thetas:
                spec = MixedPlaneSpec(float(t1), float(t2), float(t3))
                bound = abs(c) * abs(math.cos(t1 + (t2 - t3))) * e_max

                def plane_value(q):
                    vecs = _gram_vectors(*q)
                    emb = np.zeros((3, 4))
                    emb[:, :3] = vecs
                    x = _mixed_plane(split, spec, emb[0], emb[1], emb[2], gens)
                    return compiled.value(x)

                if h_mode == "aligned":
                    e1 = np.array([1.0, 0, 0, 0])
                    x = _mixed_plane(split, spec, e1, e1, e1, gens)
                    value = compiled.value(x)
                elif h_mode == "adaptive":
                    vals = [plane_value(q) for q in corners]
                    i_min = int(np.argmin(np.abs(vals)))
                    value = vals[i_min]
                    if min(vals) < 0.0 < max(vals):
                        i_pos = int(np.argmax(vals))
                        i_neg = int(np.argmin(vals))
                        lam = vals[i_pos] / (vals[i_pos] - vals[i_neg])
                        q = tuple((1 - lam) * np.array(corners[i_pos])
                                  + lam * np.array(corners[i_neg]))
                        cand = plane_value(q)
                        if abs(cand) < abs(value):
                            value = cand
                else:
                    raise ValueError(f"unknown h_mode {h_mode!r}")

                ok = abs(value) <= bound + tol
                if not ok:
                    violations += 1
                if bound > tol:
                    ratio = value / bound
                else:
                    ratio = 1.0 if abs(value) <= tol else math.copysign(math.inf, value)
                rows.append({
                    "theta": [float(t1), float(t2), float(t3)],
                    "value": value,
                    "bound": bound,
                    "ratio": ratio,
                    "within_bound": ok,
                })
    equality_zero = abs(abs(rows[0]["value"]) - abs(c) * e_max) <= tol
    return {
        "split": str(split),
        "h_mode": h_mode,
        "grid": n_theta,
        "c_constant": c,
        "value_at_zero": t_zero,
        "equality_at_zero": equality_zero,
        "violations": violations,
        "all_within_bound": violations == 0,
        "rows": rows,
    }
