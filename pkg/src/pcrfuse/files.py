"""JSON problem and result documents."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from . import __version__
from .algebra import Frame, Model, ParseError, Proposition, format_proposition, parse_proposition, upward_closure
from .mass import FUNCTIONALS, MassError, MassFunction, decide, validate


class InputError(ValueError):
    """Problem or result document that cannot be used; message says where."""


def _load_json(path: Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _parse(text: Any, frame: Frame, where: str):
    if not isinstance(text, str):
        raise InputError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse_proposition(text, frame)
    except ParseError as exc:
        raise InputError(f"{where}: {exc}") from exc


def model_from_doc(doc: dict, where: str = "") -> Model:
    try:
        frame = Frame(doc["frame"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}frame: {exc}") from exc
    spec = doc.get("model", {"kind": "shafer"})
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "shafer")
    if kind == "hybrid":
        empties = [_parse(t, frame, f"{where}model.constrained[{i}]") for i, t in enumerate(spec.get("constrained", []))]
        model = Model.hybrid(frame, empties)
        extra = 0
        for k in spec.get("constrained_atoms", []):
            if not isinstance(k, int) or not 1 <= k <= frame.num_atoms:
                raise InputError(f"{where}model.constrained_atoms: invalid atom {k!r}")
            extra |= 1 << k
        return Model(frame, "hybrid", model.constrained | extra) if extra else model
    try:
        return Model(frame, kind)
    except ValueError as exc:
        raise InputError(f"{where}model.kind: {exc}") from exc


def model_to_doc(model: Model) -> dict:
    doc: dict[str, Any] = {"kind": model.kind}
    if model.kind == "hybrid":
        frame = model.frame
        if upward_closure(frame, model.constrained) == model.constrained:
            text = format_proposition(Proposition(frame, model.constrained))
            doc["constrained"] = [] if text == "EMPTY" else [t.strip("()") for t in text.split("|")]
        else:
            # not expressible as declared-empty propositions; keep raw atoms
            doc["constrained_atoms"] = sorted(Proposition(frame, model.constrained).atoms)
    return doc


def read_problem(path: str | Path) -> list[MassFunction]:
    """Experts from a problem document, validated as closed-world inputs."""
    doc = _load_json(Path(path))
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    model = model_from_doc(doc)
    experts_doc = doc.get("experts")
    if not isinstance(experts_doc, list) or len(experts_doc) < 2:
        raise InputError(f"{path}: 'experts' must be a list of at least two experts")
    experts = []
    for i, e in enumerate(experts_doc):
        focal = e.get("focal") if isinstance(e, dict) else None
        if not isinstance(focal, list):
            raise InputError(f"experts[{i}]: missing 'focal' list")
        pairs = []
        for j, item in enumerate(focal):
            where = f"experts[{i}].focal[{j}]"
            if not isinstance(item, dict) or "set" not in item or "mass" not in item:
                raise InputError(f"{where}: expected {{'set': ..., 'mass': ...}}")
            mass = item["mass"]
            if isinstance(mass, bool) or not isinstance(mass, (int, float)):
                raise InputError(f"{where}.mass: expected a number, got {mass!r}")
            pairs.append((_parse(item["set"], model.frame, f"{where}.set"), mass))
        try:
            m = MassFunction(model, pairs)
            validate(m)
        except MassError as exc:
            raise InputError(f"experts[{i}]: {type(exc).__name__}: {exc}") from exc
        experts.append(m)
    return experts


def problem_doc(experts: list[MassFunction]) -> dict:
    model = experts[0].model
    return {
        "frame": list(model.frame.names),
        "model": model_to_doc(model),
        "experts": [
            {"focal": [{"set": format_proposition(p), "mass": v} for p, v in e.items()]} for e in experts
        ],
    }


def _decisions(m: MassFunction) -> dict:
    out = {}
    for name in FUNCTIONALS:
        try:
            out[name] = decide(m, name).to_dict()
        except MassError as exc:
            out[name] = {"error": f"{type(exc).__name__}: {exc}"}
    return out


def result_doc(m: MassFunction, rule: str, alpha: float | None = None, seed: int | None = None) -> dict:
    model = m.model
    masses: dict[str, float] = {}
    for p, v in m.items():
        key = format_proposition(p, model)
        masses[key] = masses.get(key, 0.0) + v
    metadata: dict[str, Any] = {"tool": "pcrfuse", "tool_version": __version__}
    if seed is not None:
        metadata["seed"] = seed
    return {
        "rule": rule,
        "alpha": alpha,
        "frame": list(model.frame.names),
        "model": model_to_doc(model),
        "masses": masses,
        "decisions": _decisions(m),
        "metadata": metadata,
    }


def dump(doc: dict) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(doc, indent=2) + "\n"


def read_result(path: str | Path) -> tuple[dict, MassFunction]:
    doc = _load_json(Path(path))
    if not isinstance(doc, dict) or not isinstance(doc.get("masses"), dict):
        raise InputError(f"{path}: not a result document (missing 'masses')")
    model = model_from_doc(doc)
    pairs = [(_parse(k, model.frame, f"masses[{k!r}]"), v) for k, v in doc["masses"].items()]
    try:
        m = MassFunction(model, pairs)
        validate(m, allow_empty_mass=True)
    except MassError as exc:
        raise InputError(f"{path}: {type(exc).__name__}: {exc}") from exc
    return doc, m
