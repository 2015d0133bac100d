"""Foliation models on round spheres and the mass of their Gauss sections.

Models: Hopf fibrations (complex, quaternionic, octonionic scalar lines) and
the singular north-south families NS(k, m) of all great k-spheres through a
fixed great (k-1)-sphere.  The volume of a foliation is the mass of the
image of its Gauss section in the Grassmann bundle with the Sasaki metric:

    vol = integral over the sphere of sqrt det(I + A^T A)

where A is the covariant derivative of the leaf-plane field, valued in
Hom(leaf, leaf-perp) with the trace inner product.  The plane field enters
only through orthogonal projectors, and A is computed by central finite
differences along geodesics with first-order parallel-transport correction,
so every model shares one code path; closed-form spot values are used in
tests only.

NS leaves are traversed pole to pole; the singular sphere carries no mass
and integration happens over the regular set with an eps-cutoff in latitude
(the integrand J * sin^{m-k}(t) cos^{k-1}(t) stays bounded, so the cutoff
tail vanishes with eps and is folded into the error estimate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .hypercomplex import (
    OCTONION_TENSOR,
    QUATERNION_TENSOR,
    multiply,
    octonion_inverse,
    octonion_mult,
)


def sphere_volume(m: int) -> float:
    """Riemannian volume of the unit m-sphere."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def pairwise_sum(values) -> float:
    """Fixed-shape pairwise summation tree; deterministic for a given order."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hopf:
    fiber_dim: int
    sphere_dim: int

    def __post_init__(self):
        f, m = self.fiber_dim, self.sphere_dim
        ok = (f == 1 and m % 2 == 1) or (f == 3 and m % 4 == 3) or (f == 7 and m == 15)
        if not ok:
            raise ValueError(f"no Hopf model with fiber dim {f} on S^{m}")

    @property
    def leaf_dim(self) -> int:
        return self.fiber_dim

    @property
    def singular(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"hopf-s{self.sphere_dim}"


@dataclass(frozen=True)
class NS:
    """Great k-spheres through the common great (k-1)-sphere spanned by the
    first k coordinate axes."""

    leaf_dim: int
    sphere_dim: int

    def __post_init__(self):
        if self.leaf_dim not in (1, 3, 7):
            raise ValueError("NS leaf dimension must be 1, 3, or 7")
        if self.leaf_dim > self.sphere_dim - 1:
            raise ValueError("NS needs leaf_dim <= sphere_dim - 1")

    @property
    def singular(self) -> bool:
        return True

    @property
    def axis_dim(self) -> int:
        return self.leaf_dim  # span of the common great (k-1)-sphere

    def __str__(self) -> str:
        return f"ns-{self.leaf_dim}-{self.sphere_dim}"


FoliationModel = Hopf | NS

_NAMED = {
    "hopf-s3": Hopf(1, 3), "hopf-s7": Hopf(3, 7), "hopf-s15": Hopf(7, 15),
    "ns-s3": NS(1, 3), "ns-s5": NS(1, 5), "ns-s7": NS(3, 7), "ns-s15": NS(7, 15),
}


def parse_model(name: str) -> FoliationModel:
    if name in _NAMED:
        return _NAMED[name]
    parts = name.split("-")
    if len(parts) == 3 and parts[0] == "ns":
        return NS(int(parts[1]), int(parts[2]))
    raise ValueError(f"unknown foliation model {name!r}")


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "profile"  # "profile" | "mc"
    samples: int = 40000
    nodes: int = 96
    eps: float = 1e-4
    seed: int = 0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.method not in ("profile", "mc"):
            raise ValueError("method must be 'profile' or 'mc'")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class VolumeReport:
    model: str
    method: str
    value: float
    error_estimate: float
    sphere_volume: float
    samples: int
    eps: float | None
    seed: int
    jacobian_profile: list = field(default_factory=list)
    convergence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return self.__dict__.copy()


# ---------------------------------------------------------------------------
# leaf-plane fields (as orthogonal projectors)
# ---------------------------------------------------------------------------

def _complex_structure(d: int) -> np.ndarray:
    j = np.zeros((d, d))
    for a in range(0, d, 2):
        j[a + 1, a] = 1.0
        j[a, a + 1] = -1.0
    return j


def _line_projector_hopf(model: Hopf, points: np.ndarray) -> np.ndarray:
    """Projector onto the scalar line through each point (dim leaf_dim + 1)."""
    d = model.sphere_dim + 1
    p = points
    if model.fiber_dim == 1:
        jmat = _complex_structure(d)
        v = p @ jmat.T
        return p[..., :, None] * p[..., None, :] + v[..., :, None] * v[..., None, :]
    if model.fiber_dim == 3:
        blocks = p.reshape(*p.shape[:-1], d // 4, 4)
        proj = p[..., :, None] * p[..., None, :]
        for unit in (1, 2, 3):
            e = np.zeros(4)
            e[unit] = 1.0
            img = multiply(QUATERNION_TENSOR, blocks, e)  # right multiply by unit
            v = img.reshape(*p.shape)
            proj = proj + v[..., :, None] * v[..., None, :]
        return proj
    # octonionic line {(c, m c)} through p = (a, b); chart by larger half
    a, b = p[..., :8], p[..., 8:]
    na = np.sum(a * a, axis=-1)
    use_a = na >= 0.5
    proj = np.zeros((*p.shape, p.shape[-1]))
    eye8 = np.eye(8)
    for chart in (True, False):
        mask = use_a if chart else ~use_a
        if not np.any(mask):
            continue
        aa = a[mask] if chart else b[mask]
        bb = b[mask] if chart else a[mask]
        mm = octonion_mult(bb[..., None, :], octonion_inverse(aa)[..., None, :])[..., 0, :]
        # basis rows (e_t, m e_t) / sqrt(1 + |m|^2), as (..., 8, 16)
        me = octonion_mult(mm[..., None, :], eye8[None, :, :])  # (N, 8, 8)
        basis = np.concatenate([np.broadcast_to(eye8, me.shape), me], axis=-1)
        if not chart:
            basis = np.concatenate([me, np.broadcast_to(eye8, me.shape)], axis=-1)
        norm2 = 1.0 + np.sum(mm * mm, axis=-1)
        pr = np.einsum("nti,ntj->nij", basis, basis) / norm2[:, None, None]
        proj[mask] = pr
    return proj


def leaf_projector(model: FoliationModel, points: np.ndarray) -> np.ndarray:
    """Orthogonal projector of R^{m+1} onto the leaf tangent space at p."""
    p = np.asarray(points, dtype=float)
    squeeze = p.ndim == 1
    if squeeze:
        p = p[None, :]
    ppt = p[..., :, None] * p[..., None, :]
    if isinstance(model, Hopf):
        proj = _line_projector_hopf(model, p) - ppt
    else:
        d = model.sphere_dim + 1
        k = model.axis_dim
        axis_part = p[..., :k]
        perp = p.copy()
        perp[..., :k] = 0.0
        nrm = np.linalg.norm(perp, axis=-1, keepdims=True)
        if np.any(nrm < 1e-9):
            raise ValueError("point too close to the NS singular sphere")
        x = perp / nrm
        proj = np.zeros((p.shape[0], d, d))
        proj[:, range(k), range(k)] = 1.0
        proj = proj + x[..., :, None] * x[..., None, :] - ppt
    return proj[0] if squeeze else proj


def leaf_tangent(model: FoliationModel, point: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the leaf tangent space at a point."""
    point = np.asarray(point, dtype=float)
    proj = leaf_projector(model, point)
    k = model.leaf_dim
    w, v = np.linalg.eigh(proj)
    basis = v[:, -k:].T
    # eigh returns an orthonormal eigenbasis; verify the spectrum is clean
    if not (np.all(w[-k:] > 0.5) and np.all(w[:-k] < 0.5)):
        raise ValueError("leaf projector is degenerate at this point")
    return basis


def singular_distance(model: FoliationModel, points: np.ndarray) -> np.ndarray:
    """Geodesic distance to the singular locus (pi/2 for regular models)."""
    p = np.asarray(points, dtype=float)
    if isinstance(model, Hopf):
        return np.full(p.shape[:-1], math.pi / 2)
    axis_norm = np.linalg.norm(p[..., :model.axis_dim], axis=-1)
    return np.arccos(np.clip(axis_norm, -1.0, 1.0))


# ---------------------------------------------------------------------------
# Gauss-section Jacobian
# ---------------------------------------------------------------------------

def _tangent_bases(points: np.ndarray) -> np.ndarray:
    """Orthonormal bases of p-perp, shape (N, m, d); deterministic."""
    n, d = points.shape
    mats = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    mats = np.concatenate([points[:, :, None], mats], axis=2)
    q, _ = np.linalg.qr(mats)
    # first column of q is +-p; the rest span p-perp
    return np.transpose(q[:, :, 1:d], (0, 2, 1))


def _transported_projector(model, p, x, theta):
    """Leaf projector at cos(theta) p + sin(theta) x, transported back to p."""
    pt = np.cos(theta)[:, None] * p + np.sin(theta)[:, None] * x
    proj = leaf_projector(model, pt)
    # rotate by -theta in the (p, x) plane: maps pt back to p
    s, c = np.sin(-theta)[:, None, None], np.cos(-theta)[:, None, None]
    outer_px = x[:, :, None] * p[:, None, :]
    rot = (np.broadcast_to(np.eye(p.shape[1]), proj.shape)
           + s * (outer_px - np.transpose(outer_px, (0, 2, 1)))
           + (c - 1.0) * (p[:, :, None] * p[:, None, :] + x[:, :, None] * x[:, None, :]))
    return rot @ proj @ np.transpose(rot, (0, 2, 1))


def _jacobian_once(model, points, h):
    """sqrt det(I + A^T A) by central differences at step h (per point)."""
    p = np.asarray(points, dtype=float)
    n, d = p.shape
    m = d - 1
    basis = _tangent_bases(p)
    proj = leaf_projector(model, p)
    comp = np.broadcast_to(np.eye(d), proj.shape) - proj
    a_ops = np.empty((n, m, d, d))
    for a in range(m):
        x = basis[:, a, :]
        pp = _transported_projector(model, p, x, h)
        pm = _transported_projector(model, p, x, -h)
        dproj = (pp - pm) / (2.0 * h[:, None, None])
        a_ops[:, a] = comp @ dproj @ proj
    gram = np.einsum("naij,nbij->nab", a_ops, a_ops)
    gram = gram + np.eye(m)
    sign, logdet = np.linalg.slogdet(gram)
    return np.sqrt(sign * np.exp(logdet))


def gauss_jacobian(model: FoliationModel, points, step: float = 1e-5,
                   richardson: bool = True) -> np.ndarray:
    """Pointwise Jacobian of the Gauss section; J >= 1.

    Central differences are second order; with `richardson` the h and h/2
    evaluations are extrapolated.  Near the NS singular sphere the step
    shrinks with the distance so the stencil stays on the regular set.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    dist = singular_distance(model, p)
    h = np.minimum(step, dist / 100.0)
    if np.any(h <= 0):
        raise ValueError("point on the singular locus")
    j1 = _jacobian_once(model, p, h)
    if not richardson:
        return j1 if j1.size > 1 else float(j1[0])
    j2 = _jacobian_once(model, p, h / 2.0)
    j = (4.0 * j2 - j1) / 3.0
    return j if j.size > 1 else float(j[0])


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _uniform_sphere(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    raw = rng.normal(size=(count, d))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _ns_point_at(model: NS, t: float) -> np.ndarray:
    """Representative point at latitude t from the singular sphere."""
    d = model.sphere_dim + 1
    p = np.zeros(d)
    p[0] = math.cos(t)
    p[model.axis_dim] = math.sin(t)
    return p


def ns_profile(model: NS, nodes: int = 64, eps: float = 1e-3,
               fd_step: float = 1e-5) -> dict:
    """Sampled (latitude, J) table for an NS model on (eps, pi/2]."""
    ts = np.linspace(eps, math.pi / 2, nodes)
    pts = np.stack([_ns_point_at(model, float(t)) for t in ts])
    js = gauss_jacobian(model, pts, step=fd_step)
    monotone = bool(np.all(np.diff(js) <= 1e-9))
    return {
        "model": str(model),
        "latitude": ts.tolist(),
        "jacobian": np.asarray(js).tolist(),
        "monotone_decreasing": monotone,
        "endpoint_equator": float(np.asarray(js)[-1]),
    }


def _profile_volume(model: FoliationModel, quad: QuadratureSpec) -> VolumeReport:
    m = model.sphere_dim
    if isinstance(model, Hopf):
        # J is constant by homogeneity; average a few points and use the spread
        rng = np.random.default_rng(np.random.SeedSequence(quad.seed))
        pts = _uniform_sphere(rng, 32, m + 1)
        js = np.asarray(gauss_jacobian(model, pts, step=quad.fd_step))
        value = float(np.mean(js)) * sphere_volume(m)
        err = float(np.max(js) - np.min(js)) * sphere_volume(m)
        return VolumeReport(
            model=str(model), method="profile", value=value, error_estimate=err,
            sphere_volume=sphere_volume(m), samples=len(pts), eps=None,
            seed=quad.seed,
            jacobian_profile=[[math.pi / 2, float(np.mean(js))]],
            convergence={"jacobian_spread": float(np.max(js) - np.min(js))},
        )

    k = model.leaf_dim
    factor = sphere_volume(k - 1) * sphere_volume(m - k)

    def integral(nodes: int, eps: float) -> tuple[float, np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(nodes)
        ts = (x + 1.0) * 0.5 * (math.pi / 2 - eps) + eps
        ws = w * 0.5 * (math.pi / 2 - eps)
        pts = np.stack([_ns_point_at(model, float(t)) for t in ts])
        js = np.asarray(gauss_jacobian(model, pts, step=quad.fd_step))
        f = js * np.sin(ts) ** (m - k) * np.cos(ts) ** (k - 1)
        return float(pairwise_sum(ws * f)), ts, js

    val_full, ts, js = integral(quad.nodes, quad.eps)
    val_half, _, _ = integral(max(8, quad.nodes // 2), quad.eps)
    # cutoff tail: the integrand extends continuously to t=0; estimate with
    # its limit value from the smallest nodes
    f_small = js[0] * math.sin(ts[0]) ** (m - k)
    tail = abs(f_small) * quad.eps
    value = factor * val_full
    err = factor * (abs(val_full - val_half) + tail)
    eps_seq = [10.0 ** (-e) for e in range(2, 6)]
    eps_vals = [factor * integral(quad.nodes, e)[0] for e in eps_seq]
    deltas = [abs(eps_vals[i + 1] - eps_vals[i]) for i in range(len(eps_vals) - 1)]
    converged = all(deltas[i + 1] <= deltas[i] + 1e-12 for i in range(len(deltas) - 1))
    return VolumeReport(
        model=str(model), method="profile", value=value, error_estimate=err,
        sphere_volume=sphere_volume(m), samples=quad.nodes, eps=quad.eps,
        seed=quad.seed,
        jacobian_profile=np.stack([ts, js], axis=1).tolist(),
        convergence={
            "node_delta": abs(val_full - val_half) * factor,
            "eps_sequence": eps_seq,
            "eps_values": eps_vals,
            "eps_converged": bool(converged),
        },
        notes=[] if converged else ["eps sequence not monotone; inspect profile"],
    )


def _latitude_sampler(model: NS, rng: np.random.Generator, count: int,
                      eps: float) -> tuple[np.ndarray, float]:
    """Latitude draws with density proportional to cos^{k-1}(t) on (eps, pi/2].

    Importance sampling in latitude keeps the estimator J * sin^{m-k}(t)
    bounded; plain uniform sampling has unbounded variance near the singular
    sphere for m - k >= 2.
    """
    k = model.leaf_dim
    grid = np.linspace(eps, math.pi / 2, 4096)
    dens = np.cos(grid) ** (k - 1)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * np.diff(grid) / 2.0)])
    z = cdf[-1]
    u = rng.uniform(0.0, z, size=count)
    ts = np.interp(u, cdf, grid)
    return ts, z


def _mc_volume(model: FoliationModel, quad: QuadratureSpec) -> VolumeReport:
    m = model.sphere_dim
    chunk = 4096
    n_chunks = max(1, (quad.samples + chunk - 1) // chunk)
    seeds = np.random.SeedSequence(quad.seed).spawn(n_chunks)
    total = 0
    sums, sqsums = [], []
    if isinstance(model, Hopf):
        for s in seeds:
            take = min(chunk, quad.samples - total)
            if take <= 0:
                break
            rng = np.random.default_rng(s)
            pts = _uniform_sphere(rng, take, m + 1)
            js = np.asarray(gauss_jacobian(model, pts, step=quad.fd_step))
            sums.append(pairwise_sum(js))
            sqsums.append(pairwise_sum(js * js))
            total += take
        mean = pairwise_sum(sums) / total
        var = max(pairwise_sum(sqsums) / total - mean * mean, 0.0)
        value = mean * sphere_volume(m)
        err = math.sqrt(var / total) * sphere_volume(m)
        return VolumeReport(
            model=str(model), method="mc", value=value, error_estimate=err,
            sphere_volume=sphere_volume(m), samples=total, eps=None, seed=quad.seed,
        )

    k = model.leaf_dim
    factor = sphere_volume(k - 1) * sphere_volume(m - k)
    z = None
    for s in seeds:
        take = min(chunk, quad.samples - total)
        if take <= 0:
            break
        rng = np.random.default_rng(s)
        ts, z = _latitude_sampler(model, rng, take, quad.eps)
        u = _uniform_sphere(rng, take, k)
        x = _uniform_sphere(rng, take, m + 1 - k)
        pts = np.concatenate([np.cos(ts)[:, None] * u, np.sin(ts)[:, None] * x], axis=1)
        js = np.asarray(gauss_jacobian(model, pts, step=quad.fd_step))
        est = js * np.sin(ts) ** (m - k)
        sums.append(pairwise_sum(est))
        sqsums.append(pairwise_sum(est * est))
        total += take
    mean = pairwise_sum(sums) / total
    var = max(pairwise_sum(sqsums) / total - mean * mean, 0.0)
    # estimator: mean(J sin^{m-k}) * Z * vol(S^{k-1}) * vol(S^{m-k})
    value = mean * z * factor
    # the eps-cutoff bias (integrand stays ~mean near t=0) goes in the error
    tail = abs(mean) * quad.eps * factor
    err = math.sqrt(var / total) * z * factor + tail
    return VolumeReport(
        model=str(model), method="mc", value=value, error_estimate=err,
        sphere_volume=sphere_volume(m), samples=total, eps=quad.eps, seed=quad.seed,
    )


def foliation_volume(model: FoliationModel, quad: QuadratureSpec) -> VolumeReport:
    """Mass of the Gauss section by the requested quadrature method."""
    report = _profile_volume(model, quad) if quad.method == "profile" else _mc_volume(model, quad)
    if report.value < report.sphere_volume - 3.0 * max(report.error_estimate, 1e-9):
        report.notes.append("volume below the base sphere volume: J >= 1 violated")
    return report


def volume_ratio(model_a: FoliationModel, model_b: FoliationModel,
                 quad: QuadratureSpec) -> dict:
    """Ratio of foliation volumes with combined relative error."""
    ra = foliation_volume(model_a, quad)
    rb = foliation_volume(model_b, quad)
    ratio = ra.value / rb.value
    rel = (ra.error_estimate / ra.value) + (rb.error_estimate / rb.value)
    return {
        "model_a": str(model_a),
        "model_b": str(model_b),
        "method": quad.method,
        "ratio": ratio,
        "error_estimate": abs(ratio) * rel,
        "volume_a": ra.to_dict(),
        "volume_b": rb.to_dict(),
    }
