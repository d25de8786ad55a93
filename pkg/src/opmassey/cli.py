"""Command-line entry point: ``opmassey <subcommand>``; every command prints JSON."""
from __future__ import annotations

import json
import random
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import click

from .algebra import (
    BUILTIN_ALGEBRAS,
    DgAlgebra,
    algebra_from_json,
    builtin_algebra,
    homology_data,
    resolve_operad,
    validate,
)
from .emss import PartialPageWarning, check_massey_differential, operadic_complex, page
from .htt import check_identities, transfer, transfer_recovering
from .kdual import _cell_possible, cooperation, kdual_cell, ref_degree
from .linalg import Vec
from .massey import (
    ConsistencyError,
    PreconditionError,
    build_defining_system,
    indexing_set,
    key_name,
    massey_product,
    massey_set_sample,
    pullback_massey,
    system_from_json,
    verify_defining_system,
)
from .operad import ParseError, UnsupportedFeature, morphism_from_json, builtin_morphism

EXIT_VIOLATION = 1
EXIT_ERROR = 2


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _fail(msg: str) -> None:
    click.echo(json.dumps({"error": msg}, sort_keys=True), err=True)
    sys.exit(EXIT_ERROR)


def _vec(a_names: Sequence[str], v: Vec) -> list:
    return [[a_names[i], x.numerator, x.denominator] for i, x in sorted(v.items())]


def _load_algebra(spec: str, operad: Optional[str], max_arity: int, max_weight: int) -> DgAlgebra:
    if spec in BUILTIN_ALGEBRAS and not Path(spec).exists():
        return builtin_algebra(spec, max_arity, max_weight)
    path = Path(spec)
    if not path.exists():
        raise ParseError(f"algebra {spec!r} is neither built in nor a file")
    obj = json.loads(path.read_text())
    pres = resolve_operad(operad, path.parent, max_arity, max_weight) if operad else None
    return algebra_from_json(obj, pres, path.parent, max_arity, max_weight)


def _classes(a: DgAlgebra, text: str) -> List[Vec]:
    """Comma-separated basis names, each optionally written as ``c*name`` or ``-name``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        v: Vec = {}
        for term in item.replace("-", "+-").split("+"):
            term = term.strip()
            if not term:
                continue
            coef = Fraction(1)
            if "*" in term:
                c, term = term.split("*", 1)
                coef = Fraction(c.strip() or "1")
            elif term.startswith("-"):
                coef, term = Fraction(-1), term[1:]
            v[a.index(term.strip())] = v.get(a.index(term.strip()), Fraction(0)) + coef
        out.append({i: c for i, c in v.items() if c})
    return out


def _window(text: str) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    try:
        ps, qs = text.split(",")
        p0, p1 = (int(x) for x in ps.split(":"))
        q0, q1 = (int(x) for x in qs.split(":"))
    except ValueError:
        raise click.BadParameter("window must look like 'pmin:pmax,qmin:qmax'")
    return (p0, p1), (q0, q1)


class _Group(click.Group):
    """Turn library errors into a JSON error and exit status 2."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ParseError, UnsupportedFeature, PreconditionError, ConsistencyError, KeyError, ValueError) as e:
            _fail(f"{type(e).__name__}: {e}")


@click.group(cls=_Group)
@click.option("--max-arity", default=5, show_default=True, type=click.IntRange(1))
@click.option("--max-weight", default=4, show_default=True, type=click.IntRange(1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default=None, help="Write the JSON report here instead of stdout.")
@click.pass_context
def main(ctx, max_arity, max_weight, seed, out):
    """Operadic Massey products, Eilenberg-Moore pages and homotopy transfer."""
    ctx.obj = {"max_arity": max_arity, "max_weight": max_weight, "seed": seed, "out": out}


@main.command("koszul-dual")
@click.option("--operad", required=True, help="Built-in name or presentation file.")
@click.pass_obj
def koszul_dual(cfg, operad):
    """Cell dimensions and named basis elements of P^¡."""
    pres = resolve_operad(operad, None, cfg["max_arity"], cfg["max_weight"])
    cells = []
    for w in range(0, pres.max_weight + 1):
        for n in range(1, pres.max_arity + 1):
            if w == 0 and n != 1 or w > 0 and not _cell_possible(pres, n, w):
                continue
            cell = kdual_cell(pres, n, w)
            cells.append({"arity": n, "weight": w, "dim": cell.dim,
                          "degrees": sorted({ref_degree(pres, r) for r in cell.refs()}),
                          "basis": list(cell.names)})
    _emit({"operad": pres.name, "max_arity": pres.max_arity, "max_weight": pres.max_weight,
           "cells": cells}, cfg["out"])


@main.command("indexing-set")
@click.option("--operad", required=True)
@click.option("--cooperation", "coop", required=True)
@click.pass_obj
def _indexing(cfg, operad, coop):
    """Keys of a defining system for the cooperation."""
    pres = resolve_operad(operad, None, cfg["max_arity"], cfg["max_weight"])
    g = cooperation(pres, coop)
    idx = indexing_set(g)
    _emit({"cooperation": coop, "arity": g.arity, "weight": g.weight, "keys": idx.to_json()}, cfg["out"])


def _massey_common(cfg, algebra, operad, coop, classes):
    a = _load_algebra(algebra, operad, cfg["max_arity"], cfg["max_weight"])
    g = cooperation(a.operad, coop)
    reps = _classes(a, classes)
    return a, g, reps


def _outcome_json(a: DgAlgebra, out) -> dict:
    hd = homology_data(a)
    return {"cycle": _vec(a.names, out.cycle),
            "class": [[hd.names[i], x.numerator, x.denominator] for i, x in sorted(out.hclass.items())]}


@main.command("massey")
@click.option("--algebra", required=True, help="Built-in fixture name or algebra file.")
@click.option("--operad", default=None, help="Override the algebra file's operad.")
@click.option("--cooperation", "coop", required=True)
@click.option("--classes", required=True, help="Comma-separated cycle representatives.")
@click.option("--system", default=None, help="Verify this defining system instead of building one.")
@click.pass_obj
def massey(cfg, algebra, operad, coop, classes, system):
    """Build (or verify) a defining system and report the Massey class."""
    a, g, reps = _massey_common(cfg, algebra, operad, coop, classes)
    if system:
        ds = system_from_json(a, g, json.loads(Path(system).read_text()))
        rep = verify_defining_system(ds)
        if not rep.ok:
            _emit({"verified": False, "violations": rep.violations}, cfg["out"])
            sys.exit(EXIT_VIOLATION)
        _emit({"verified": True, "outcome": _outcome_json(a, massey_product(ds)), "system": ds.to_json()},
              cfg["out"])
        return
    res = build_defining_system(a, g, reps)
    if not res.ok:
        hd = homology_data(a)
        ob = res.obstruction
        _emit({"obstruction": {"key": key_name(ob.key), "class": _vec(hd.names, ob.hclass),
                               "required_boundary": _vec(a.names, ob.rhs)}}, cfg["out"])
        return
    _emit({"outcome": _outcome_json(a, massey_product(res.system)), "system": res.system.to_json()}, cfg["out"])


@main.command("massey-sample")
@click.option("--algebra", required=True)
@click.option("--operad", default=None)
@click.option("--cooperation", "coop", required=True)
@click.option("--classes", required=True)
@click.pass_obj
def massey_sample(cfg, algebra, operad, coop, classes):
    """Sampled Massey classes over varying defining systems."""
    a, g, reps = _massey_common(cfg, algebra, operad, coop, classes)
    s = massey_set_sample(a, g, reps)
    hd = homology_data(a)
    body = {"classes": [_vec(hd.names, c) for c in s.classes], "systems": len(s.outcomes)}
    if s.indeterminacy is not None:
        body["indeterminacy"] = [_vec(hd.names, v) for v in s.indeterminacy.basis]
    if s.obstruction is not None:
        body["obstruction"] = {"key": key_name(s.obstruction.key), "class": _vec(hd.names, s.obstruction.hclass)}
    _emit(body, cfg["out"])


@main.command("pullback")
@click.option("--morphism", required=True, help="Built-in morphism (lie_ass, ass_com) or file.")
@click.option("--algebra", required=True, help="Algebra over the target operad.")
@click.option("--cooperation", "coop", required=True, help="Cooperation of the source operad.")
@click.option("--classes", required=True)
@click.pass_obj
def pullback(cfg, morphism, algebra, coop, classes):
    """Check ⟨x⟩_Γ ⊆ ⟨x⟩_{f^¡Γ} on sampled systems."""
    b = _load_algebra(algebra, None, cfg["max_arity"], cfg["max_weight"])
    path = Path(morphism)
    if path.exists():
        obj = json.loads(path.read_text())
        src = resolve_operad(obj["source"], path.parent, cfg["max_arity"], cfg["max_weight"])
        m = morphism_from_json(obj, src, b.operad)
    else:
        m = builtin_morphism(morphism, cfg["max_arity"], cfg["max_weight"])
        if m.target.content_hash != b.operad.content_hash:
            raise PreconditionError("the algebra does not live over the morphism's target")
        m.target = b.operad
    g = cooperation(m.source, coop)
    rep = pullback_massey(m, b, g, _classes(b, classes))
    _emit(rep.to_json(), cfg["out"])
    if not rep.ok:
        sys.exit(EXIT_VIOLATION)


@main.command("emss")
@click.option("--algebra", required=True)
@click.option("--operad", default=None)
@click.option("--page", "r", default=1, show_default=True, type=click.IntRange(0))
@click.option("--window", default="0:3,-3:8", show_default=True, help="pmin:pmax,qmin:qmax")
@click.option("--cooperation", "coop", default=None, help="Also check d^{w} on this Massey product.")
@click.option("--classes", default=None)
@click.pass_obj
def emss(cfg, algebra, operad, r, window, coop, classes):
    """A page of the Eilenberg-Moore spectral sequence."""
    a = _load_algebra(algebra, operad, cfg["max_arity"], cfg["max_weight"])
    fc = operadic_complex(a, cfg["max_weight"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PartialPageWarning)
        body = page(fc, r, _window(window)).to_json()
        if coop:
            if not classes:
                raise click.UsageError("--cooperation needs --classes")
            g = cooperation(a.operad, coop)
            res = build_defining_system(a, g, _classes(a, classes))
            if not res.ok:
                raise PreconditionError(f"no defining system: obstruction at {key_name(res.obstruction.key)}")
            body["massey_differential"] = check_massey_differential(fc, res.system).to_json()
    _emit(body, cfg["out"])
    if coop and not body["massey_differential"]["ok"]:
        sys.exit(EXIT_VIOLATION)


@main.command("transfer")
@click.option("--algebra", required=True)
@click.option("--operad", default=None)
@click.option("--cooperation", "coop", default=None, help="Seed the transfer from this Massey product.")
@click.option("--classes", default=None)
@click.option("--random/--default", "randomize", default=False, help="Random homotopy choices from --seed.")
@click.pass_obj
def transfer_cmd(cfg, algebra, operad, coop, classes, randomize):
    """Transferred P_∞ structure on homology, with the identity checks."""
    a = _load_algebra(algebra, operad, cfg["max_arity"], cfg["max_weight"])
    W = cfg["max_weight"]
    body = {}
    if coop:
        if not classes:
            raise click.UsageError("--cooperation needs --classes")
        g = cooperation(a.operad, coop)
        res = build_defining_system(a, g, _classes(a, classes))
        if not res.ok:
            raise PreconditionError(f"no defining system: obstruction at {key_name(res.obstruction.key)}")
        s, F, val = transfer_recovering(a, g, res.system, max_weight=min(W, g.weight))
        hd = s.carrier
        body["recovered"] = _vec(hd.names, val)
        body["massey_class"] = _vec(hd.names, massey_product(res.system).hclass)
    else:
        rng = random.Random(cfg["seed"]) if randomize else None
        s, F = transfer(a, rng=rng, max_weight=W)
    rep = check_identities(a, s, F)
    body["structure"] = s.to_json()
    body["identities"] = rep.to_json()
    _emit(body, cfg["out"])
    if not rep.ok:
        sys.exit(EXIT_VIOLATION)


@main.command("check")
@click.option("--algebra", required=True)
@click.option("--operad", default=None)
@click.option("--cooperation", "coop", default=None)
@click.option("--system", default=None)
@click.pass_obj
def check(cfg, algebra, operad, coop, system):
    """Validate an algebra and optionally a defining system; exit 1 on violations."""
    a = _load_algebra(algebra, operad, cfg["max_arity"], cfg["max_weight"])
    rep = validate(a)
    body = {"algebra": rep.to_json()}
    ok = rep.ok
    if system:
        if not coop:
            raise click.UsageError("--system needs --cooperation")
        ds = system_from_json(a, cooperation(a.operad, coop), json.loads(Path(system).read_text()))
        srep = verify_defining_system(ds)
        body["system"] = srep.to_json()
        ok = ok and srep.ok
    _emit(body, cfg["out"])
    if not ok:
        sys.exit(EXIT_VIOLATION)


if __name__ == "__main__":
    main()
