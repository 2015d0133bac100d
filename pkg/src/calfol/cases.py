"""Named verification cases: each runs one exact symbolic check and emits a
JSON-serializable verdict {case, split, exact, term_count_before,
term_count_after, ...}."""

from __future__ import annotations

from dataclasses import dataclass
import time
from typing import Callable

from .charforms import (
    Normalization,
    Split,
    calibration_phi,
    euler_closedness,
    euler_form,
    euler_orthogonality,
    pontryagin1,
    transgression,
)
from .exalg import ScalarPi, ce_differential, evaluate, rotation_derivative, wedge


@dataclass(frozen=True)
class VerificationCase:
    id: str
    description: str
    claim: str
    split: Split
    runner: Callable[[Split], dict]
    expected: str = "zero"  # "zero" -> exact must be True; "report" -> informational
    slow: bool = False


def _orthogonality_runner(split: Split) -> dict:
    return euler_orthogonality(split)


def _closedness_runner(split: Split) -> dict:
    ru = euler_closedness(split, "u")
    rv = euler_closedness(split, "v")
    return {
        "exact": ru["exact"] and rv["exact"],
        "term_count_before": ru["term_count_before"] + rv["term_count_before"],
        "term_count_after": ru["term_count_after"] + rv["term_count_after"],
    }


def _dte_runner(split: Split) -> dict:
    te = transgression(split)
    eu = euler_form(split, "u", Normalization.LITERAL)
    diff = ce_differential(te) - eu
    return {
        "exact": diff.is_zero(),
        "term_count_before": te.term_count(),
        "term_count_after": diff.term_count(),
    }


def _dphi_runner(split: Split) -> dict:
    phi = calibration_phi(split)
    dphi = ce_differential(phi)
    return {
        "exact": dphi.is_zero(),
        "term_count_before": phi.term_count(),
        "term_count_after": dphi.term_count(),
    }


def _isotropy_runner(split: Split) -> dict:
    te = transgression(split)
    planes = [(u, v) for u in range(2, split.k + 1) for v in range(u + 1, split.k + 1)]
    residues = [rotation_derivative(te, u, v) for u, v in planes]
    return {
        "exact": all(r.is_zero() for r in residues),
        "term_count_before": te.term_count(),
        "term_count_after": sum(r.term_count() for r in residues),
    }


def _pontryagin_runner(split: Split) -> dict:
    p1u = pontryagin1(split, "u")
    p1v = pontryagin1(split, "v")
    prod = wedge(p1u, p1v)
    return {
        "exact": prod.is_zero(),
        "term_count_before": p1u.term_count() * p1v.term_count(),
        "term_count_after": prod.term_count(),
        "notes": ["verdict recorded, not asserted: the vanishing is only known "
                  "at the cohomology level"],
    }


def _evaluation_table_runner(split: Split) -> dict:
    """Classify all basis 4-tuples of the (4,8) tangent space against the
    three-case analysis: rows iiii -> 3/2 pi^-2, rows iijj -> signed
    1/2 pi^-2, anything else -> 0."""
    import itertools

    from .exalg import evaluate_basis

    ev = euler_form(split, "v", Normalization.LITERAL)
    gens = [(i, m) for i in split.u_indices for m in split.v_indices]
    mismatches = 0
    total = 0
    for combo in itertools.combinations(gens, 4):
        total += 1
        value = evaluate_basis(ev, combo)
        rows = sorted(i for i, _ in combo)
        cols = [m for _, m in combo]
        if sorted(cols) != list(split.v_indices):
            expected = ScalarPi.of(0)
        elif rows[0] == rows[3]:
            expected = ScalarPi.of(3, 2, -2)
        elif rows[0] == rows[1] and rows[2] == rows[3] and rows[1] != rows[2]:
            perm = [c - split.k for c in cols]
            inv = sum(1 for a in range(4) for b in range(a + 1, 4) if perm[a] > perm[b])
            expected = ScalarPi.of(-1 if inv % 2 else 1, 2, -2)
        else:
            expected = ScalarPi.of(0)
        if value != expected:
            mismatches += 1
    return {
        "exact": mismatches == 0,
        "term_count_before": total,
        "term_count_after": mismatches,
    }


def _flow_normalization_runner(split: Split) -> dict:
    """The flow Euler coefficient is 1/(2 pi), pinned by d(Te) = e(U); the
    once-conjectured 1/(2 pi^2) fails the same identity."""
    te = transgression(split)
    eu = euler_form(split, "u", Normalization.LITERAL)
    good = ce_differential(te) == eu
    bad = ce_differential(te) == eu * ScalarPi.of(1, 1, -1)
    return {
        "exact": good and not bad,
        "term_count_before": eu.term_count(),
        "term_count_after": 0 if good else 1,
        "notes": ["adopted coefficient 1/(2 pi); the alternative 1/(2 pi^2) "
                  "is inconsistent with d(Te) = e(U)"],
    }


def _quaternionic_half_runner(split: Split) -> dict:
    from .grassmann import quaternionic_tangent_plane

    ev = euler_form(split, "v", Normalization.LITERAL)
    plane = quaternionic_tangent_plane(split)
    value = evaluate(ev, plane.dual_vectors())
    ok = value == ScalarPi.of(3, 4, -2)
    return {
        "exact": ok,
        "term_count_before": ev.term_count(),
        "term_count_after": 0 if ok else 1,
        "notes": [f"value {value}"],
    }


def _case(id, desc, claim, split, runner, expected="zero", slow=False):
    return VerificationCase(id, desc, claim, Split(*split), runner, expected, slow)


CASES: dict[str, VerificationCase] = {c.id: c for c in [
    _case("g2-4-euler-orthogonality", "flow Euler orthogonality on (2,4)",
          "euler(U) ^ euler(V) = 0 exactly on split (2,4)",
          (2, 4), _orthogonality_runner),
    _case("g2-6-euler-orthogonality", "flow Euler orthogonality on (2,6)",
          "euler(U) ^ euler(V) = 0 exactly on split (2,6)",
          (2, 6), _orthogonality_runner),
    _case("g2-8-euler-orthogonality", "flow Euler orthogonality on (2,8)",
          "euler(U) ^ euler(V) = 0 exactly on split (2,8)",
          (2, 8), _orthogonality_runner),
    _case("so8-euler-orthogonality", "rank-4 Euler orthogonality on (4,8)",
          "euler(U) ^ euler(V) = 0 exactly on split (4,8)",
          (4, 8), _orthogonality_runner),
    _case("g4-12-euler-orthogonality", "rank-4 Euler orthogonality on (4,12)",
          "euler(U) ^ euler(V) = 0 exactly on split (4,12)",
          (4, 12), _orthogonality_runner),
    _case("so16-euler-orthogonality-slow", "rank-8 Euler orthogonality on (8,16)",
          "euler(U) ^ euler(V) = 0 exactly on split (8,16)",
          (8, 16), _orthogonality_runner, slow=True),
    _case("g2-4-euler-closed", "closedness of both Euler forms on (2,4)",
          "d euler(U) = d euler(V) = 0 exactly", (2, 4), _closedness_runner),
    _case("g2-6-euler-closed", "closedness of both Euler forms on (2,6)",
          "d euler(U) = d euler(V) = 0 exactly", (2, 6), _closedness_runner),
    _case("g2-8-euler-closed", "closedness of both Euler forms on (2,8)",
          "d euler(U) = d euler(V) = 0 exactly", (2, 8), _closedness_runner),
    _case("so8-euler-closed", "closedness of both Euler forms on (4,8)",
          "d euler(U) = d euler(V) = 0 exactly", (4, 8), _closedness_runner),
    _case("g4-12-euler-closed", "closedness of both Euler forms on (4,12)",
          "d euler(U) = d euler(V) = 0 exactly", (4, 12), _closedness_runner),
    _case("so16-euler-closed-slow", "closedness of both Euler forms on (8,16)",
          "d euler(U) = d euler(V) = 0 exactly", (8, 16), _closedness_runner, slow=True),
    _case("g2-4-dte-euler", "transgression identity on (2,4)",
          "d(Te) = euler(U) exactly", (2, 4), _dte_runner),
    _case("g2-6-dte-euler", "transgression identity on (2,6)",
          "d(Te) = euler(U) exactly", (2, 6), _dte_runner),
    _case("g2-8-dte-euler", "transgression identity on (2,8)",
          "d(Te) = euler(U) exactly", (2, 8), _dte_runner),
    _case("so8-dte-euler", "transgression identity on (4,8)",
          "d(Te) = euler(U) exactly", (4, 8), _dte_runner),
    _case("g4-12-dte-euler", "transgression identity on (4,12)",
          "d(Te) = euler(U) exactly", (4, 12), _dte_runner),
    _case("g2-4-dphi-zero", "closedness of the calibration on (2,4)",
          "d(Te ^ euler(V)) = 0 exactly", (2, 4), _dphi_runner),
    _case("g2-6-dphi-zero", "closedness of the calibration on (2,6)",
          "d(Te ^ euler(V)) = 0 exactly", (2, 6), _dphi_runner),
    _case("so8-dphi-zero", "closedness of the calibration on (4,8)",
          "d(Te ^ euler(V)) = 0 exactly", (4, 8), _dphi_runner),
    _case("so8-te-isotropy", "isotropy invariance of the transgression",
          "Te is annihilated by the rotations of indices {2,3,4}",
          (4, 8), _isotropy_runner),
    _case("so8-evaluation-table", "basis evaluation table on (4,8)",
          "euler(V) on all 1820 basis 4-tuples matches the three-case analysis",
          (4, 8), _evaluation_table_runner),
    _case("so8-quaternionic-half", "quaternionic half-maximum on (4,8)",
          "euler(V) evaluates to exactly 3/(4 pi^2) on the quaternionic plane",
          (4, 8), _quaternionic_half_runner),
    _case("so8-pontryagin-orthogonality", "first Pontryagin product on (4,8)",
          "p1(U) ^ p1(V): form-level verdict recorded, not asserted",
          (4, 8), _pontryagin_runner, expected="report"),
    _case("flow-euler-normalization", "flow Euler coefficient consistency",
          "the 1/(2 pi) coefficient is the unique one with d(Te) = euler(U)",
          (2, 6), _flow_normalization_runner),
]}


def run_case(case_id: str, slow_ok: bool = False) -> dict:
    case = CASES[case_id]
    if case.slow and not slow_ok:
        return {
            "case": case.id,
            "split": str(case.split),
            "skipped": True,
            "passed": True,
            "notes": ["slow case skipped; re-run with --slow"],
        }
    t0 = time.perf_counter()
    out = case.runner(case.split)
    passed = bool(out.get("exact", False)) if case.expected == "zero" else True
    verdict = {
        "case": case.id,
        "description": case.description,
        "claim": case.claim,
        "split": str(case.split),
        "expected": case.expected,
        "exact": bool(out.get("exact", False)),
        "term_count_before": out.get("term_count_before"),
        "term_count_after": out.get("term_count_after"),
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "passed": passed,
    }
    if out.get("notes"):
        verdict["notes"] = out["notes"]
    return verdict


def run_all(slow_ok: bool = False) -> list[dict]:
    return [run_case(cid, slow_ok) for cid in CASES]
