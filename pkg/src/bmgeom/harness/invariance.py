"""Lattice translation and shear checks of the recovery pipeline."""

from __future__ import annotations

import json
from fractions import Fraction

from ..errors import BMError
from ..grid import shear, translate
from ..recover import recover_convex_pair
from .generate import FAMILIES, ScenarioConfig, generate, rng_for
from .report import SuiteReport

#: relative tolerance for eps under a lattice shear
SHEAR_RTOL = 1e-6
#: stream offset so transform draws never collide with generator streams
_STREAM = 7 * 10**6


def _shift_strings(xs, s, h):
    return [str(Fraction(x) - k * h) for x, k in zip(xs, s)]


def canonical_translation(report: dict, s, h) -> dict:
    """Undo a lattice translation ``s`` (cells of size ``h``) in a report dict.

    The positional fields (``u``, ``v``, the base-case intervals and the
    centre-fit intercept) are shifted back; everything else must already
    agree.
    """
    out = json.loads(json.dumps(report))
    out["u"] = _shift_strings(out["u"], s, h)
    out["v"] = _shift_strings(out["v"], s, h)
    tr = out.get("trace", {})
    reg = tr.get("regions", {})
    if reg.get("kind") == "interval":
        reg["I"] = _shift_strings(reg["I"], [s[0]] * 2, h)
        reg["J"] = _shift_strings(reg["J"], [s[0]] * 2, h)
    ivl = tr.get("interval", {})
    if "I" in ivl:
        ivl["I"] = _shift_strings(ivl["I"], [s[0]] * 2, h)
        ivl["J"] = _shift_strings(ivl["J"], [s[0]] * 2, h)
    fit = tr.get("fit")
    if fit:
        slope = [Fraction(a) for a in fit["slope"]]
        dz = s[-1] * h - sum(a * k * h for a, k in zip(slope, s[:-1]))
        fit["intercept"] = str(Fraction(fit["intercept"]) - dz)
    return out


def _transform(rng, dim):
    s = [int(x) for x in rng.integers(-40, 41, dim)]
    w = [int(x) for x in rng.integers(-3, 4, dim - 1)]
    if dim > 1 and not any(w):
        w[0] = 1
    return s, w


def run_invariance_suite(config: ScenarioConfig, pairs: int = 50) -> SuiteReport:
    """Recover each pair, a translated copy and a sheared copy.

    Pairs cycle through the families and through d = 2, 3 (unless
    ``config.dim`` is 1) with the configured perturbation.  Translation
    must give bit-identical reports after undoing the shift; a shear by
    ``w`` must move the frame shear by exactly ``w`` and keep eps within
    ``SHEAR_RTOL``.
    """
    report = SuiteReport("invariance", dict(config.to_dict(), pairs=pairs))
    for k in range(pairs):
        dim = 1 if config.dim == 1 else 2 + k % 2
        cfg = config.with_(dim=dim, family=FAMILIES[k % len(FAMILIES)])
        ctx = f"pair={k} dim={dim} family={cfg.family}"
        rng = rng_for(config.seed, _STREAM + k)
        s, w = _transform(rng, dim)
        try:
            A, B = generate(cfg, k)
            base = recover_convex_pair(A, B, cfg.params)
            moved = recover_convex_pair(translate(A, s), translate(B, s), cfg.params)
        except BMError as exc:
            report.check("translation", True).record(False, float("nan"), 0.0, f"{ctx} {exc}")
            continue
        ref = base.to_dict()
        same = canonical_translation(moved.to_dict(), s, A.h) == ref
        report.check("translation", True).record(same, 0.0, 0.0, ctx)
        if dim < 2:
            continue
        try:
            sh = recover_convex_pair(shear(A, w), shear(B, w), cfg.params)
        except BMError as exc:
            report.check("shear", True).record(False, float("nan"), 0.0, f"{ctx} {exc}")
            continue
        frame = list(sh.frame_shear) == [a + b for a, b in zip(base.frame_shear, w)]
        rel = max(
            abs(float(x - y)) / max(abs(float(y)), 1e-300) if y else abs(float(x))
            for x, y in ((sh.eps_a, base.eps_a), (sh.eps_b, base.eps_b))
        )
        ok = frame and rel <= SHEAR_RTOL
        report.check("shear", True).record(ok, SHEAR_RTOL - rel, 0.0, f"{ctx} w={w} rel={rel:.3g} frame={frame}")
        report.rows.append({"pair": k, "dim": dim, "family": cfg.family, "translation": same,
                            "shear_rel": rel, "frame_shear": list(base.frame_shear)})
    return report
