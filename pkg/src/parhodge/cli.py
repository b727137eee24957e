"""JSON-driven command line over the library: one subcommand per operation.

Every run reads one JSON input document, computes, and emits a single report
document: command echo, input digest, the convention header, outputs with the
method that produced each numeric value, and warnings.  Reports are
byte-deterministic for identical inputs and seeds.

Exit codes: 0 success; 2 negative verdict (the computation succeeded but the
answer is "no": unstable, non-generic, Milnor-Wood violated); 3 precondition
or malformed-input error (the report carries a location for schema errors);
4 convergence or search-bound failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .cartan import (
    SearchExhausted,
    alcove_membership,
    alcove_normalize,
    build_root_datum,
)
from .degree import NonConvergence, relative_degree
from .jsonio import (
    SchemaError,
    frac_from_json,
    fracvec_from_json,
    matrix_from_json,
    matrix_to_json,
)
from .liealg import (
    NumericallyDefective,
    TripleCompletionFailure,
    build_realization,
    kostant_sekiguchi_orbit_map,
)
from .modelmetric import (
    GridTooCoarse,
    IntegratorFailure,
    hitchin_residual,
    holonomy_check,
    radial_grid,
)
from .nahodge import (
    complete_ks_triple,
    entry_to_json,
    higgs_to_localsystem,
    hitchin_section,
    localsystem_to_higgs,
    milnor_wood_check,
    toledo_invariant,
)
from .parabolic import parabolic_from
from .parhiggs import (
    ReductionCertificate,
    from_json as higgs_from_json,
    genericity_check,
    gr_res,
    hecke_apply,
    pardeg_reduction,
    stability_check,
    to_json as higgs_to_json,
)

REPORT_SCHEMA = "parhodge-report-v1"

_ALCOVE_CONVENTION = (
    "weights live in the closed fundamental alcove (simple roots >= 0, highest"
    " root <= 1); normalization returns the canonical affine-Weyl representative"
)
_TOLEDO_CONVENTION = (
    "block character (2q/(p+q), -2p/(p+q)) on a signature-(p,q) realization,"
    " paired against parabolic degrees"
)

EXIT_OK = 0
EXIT_NEGATIVE_VERDICT = 2
EXIT_PRECONDITION = 3
EXIT_NO_CONVERGENCE = 4


class _UsageError(Exception):
    """Command line itself is malformed (unknown command, bad option)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep exit code 2 reserved for verdicts
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="parhodge", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, help_text in _COMMAND_HELP.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", metavar="FILE", help="JSON input document")
        p.add_argument("--output", metavar="FILE", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="RNG seed for sampled instances")
        p.add_argument(
            "--tolerance", type=float, default=None, help="override the default numeric tolerance"
        )
        if name == "verify-model":
            p.add_argument("--csv", metavar="FILE", help="also write the residual table as CSV")
    return parser


# ---------------------------------------------------------------------------
# input plumbing
# ---------------------------------------------------------------------------


def _load_input(args) -> tuple[bytes, Any]:
    if args.input is None:
        raise SchemaError("$", "this command requires --input FILE")
    raw = Path(args.input).read_bytes()
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        if isinstance(exc, json.JSONDecodeError):
            where = f"line {exc.lineno}, column {exc.colno}"
        else:
            where = "byte stream"
        raise SchemaError(f"$ ({where})", "input is not valid JSON") from exc
    return raw, payload


def _obj(payload: Any, location: str = "$") -> dict:
    if not isinstance(payload, dict):
        raise SchemaError(location, "expected a JSON object")
    return payload


def _req(payload: dict, key: str, location: str = "$") -> Any:
    if key not in payload:
        raise SchemaError(f"{location}.{key}", "missing required field")
    return payload[key]


def _str_field(payload: dict, key: str, location: str = "$") -> str:
    v = _req(payload, key, location)
    if not isinstance(v, str):
        raise SchemaError(f"{location}.{key}", "expected a string")
    return v


def _int_field(payload: dict, key: str, location: str = "$", default: int | None = None) -> int:
    if key not in payload:
        if default is not None:
            return default
        raise SchemaError(f"{location}.{key}", "missing required field")
    v = payload[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaError(f"{location}.{key}", "expected an integer")
    return v


def _numvec(obj: Any, location: str) -> list[float]:
    # weights may arrive as floats or exact "p/q" strings
    if not isinstance(obj, list) or not obj:
        raise SchemaError(location, "expected a non-empty list of numbers")
    out = []
    for i, x in enumerate(obj):
        if isinstance(x, str):
            out.append(float(Fraction(x)))
        elif isinstance(x, (int, float)) and not isinstance(x, bool):
            out.append(float(x))
        else:
            raise SchemaError(f"{location}[{i}]", f"expected a number or 'p/q', got {x!r}")
    return out


def _complex_from_json(obj: Any, location: str) -> complex:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    if isinstance(obj, list) and len(obj) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in obj
    ):
        return complex(obj[0], obj[1])
    raise SchemaError(location, f"expected a number or [re, im], got {obj!r}")


def _higgs_data(payload: dict, location: str = "$"):
    obj = _req(payload, "data", location)
    return higgs_from_json(_obj(obj, f"{location}.data"))


def _reduction_from_json(obj: Any, location: str) -> ReductionCertificate:
    obj = _obj(obj, location)
    chi = fracvec_from_json(_req(obj, "chi", location), f"{location}.chi")
    degree = None
    if obj.get("degree") is not None:
        degree = frac_from_json(obj["degree"], f"{location}.degree")
    phi = obj.get("phi_compatible", True)
    if not isinstance(phi, bool):
        raise SchemaError(f"{location}.phi_compatible", "expected a boolean")
    label = obj.get("label", "reduction")
    if not isinstance(label, str):
        raise SchemaError(f"{location}.label", "expected a string")
    levi = obj.get("levi_reduction")
    if levi is not None and not isinstance(levi, bool):
        raise SchemaError(f"{location}.levi_reduction", "expected a boolean or null")
    return ReductionCertificate(
        label=label, chi=chi, phi_compatible=phi, degree=degree, levi_reduction=levi
    )


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _plain(obj: Any) -> Any:
    """Recursively convert results to deterministic JSON-serializable values."""
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        if obj.denominator == 1:
            return int(obj)
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return matrix_to_json(obj)
        return [_plain(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def _tagged(value: Any, method: str) -> dict:
    return {"value": _plain(value), "method": method}


def _echo_argv(argv: Sequence[str]) -> list[str]:
    # output sinks are not inputs: drop them so identical computations render
    # identical report bytes no matter where the report lands
    echoed, skip = [], False
    for token in argv:
        if skip:
            skip = False
            continue
        if token in ("--output", "--csv"):
            skip = True
            continue
        if token.startswith("--output=") or token.startswith("--csv="):
            continue
        echoed.append(token)
    return echoed


def _new_report(command: str, argv: Sequence[str], args) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "argv": _echo_argv(argv),
        "seed": args.seed,
        "tolerance": args.tolerance,
        "input_digest": None,
        "conventions": {
            "alcove": _ALCOVE_CONVENTION,
            "monodromy_scale": "2pi_i",
            "toledo_normalization": _TOLEDO_CONVENTION,
        },
        "outputs": {},
        "warnings": [],
    }


def _render(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _emit(report: dict, args) -> None:
    text = _render(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_rootsys(payload: dict, args, report: dict) -> int:
    rd = build_root_datum(
        _str_field(payload, "cartan_type"),
        _int_field(payload, "rank"),
        lattice=payload.get("lattice", "simply_connected"),
    )
    method = "exact root-system arithmetic"
    report["outputs"] = {
        "cartan_type": rd.cartan_type,
        "rank": rd.rank,
        "lattice": rd.lattice,
        "simple_roots": _tagged(rd.simple_roots, method),
        "positive_roots": _tagged(rd.positive_roots, method),
        "coroots": _tagged(rd.coroots, method),
        "cochar_lattice_basis": _tagged(rd.cochar_lattice_basis, method),
        "inner_product": _tagged(rd.inner_product, method),
    }
    return EXIT_OK


def _cmd_alcove_normalize(payload: dict, args, report: dict) -> int:
    rd = build_root_datum(
        _str_field(payload, "cartan_type"),
        _int_field(payload, "rank"),
        lattice=payload.get("lattice", "simply_connected"),
    )
    point = fracvec_from_json(_req(payload, "point"), "$.point")
    bound = _int_field(payload, "search_bound", default=64)
    result = alcove_normalize(rd, point, search_bound=bound)
    method = "exact affine-Weyl reduction"
    membership = alcove_membership(rd, result.normalized)
    report["outputs"] = {
        "k": _tagged(result.k, method),
        "lattice_vector": _tagged(result.lattice_vector, method),
        "normalized": _tagged(result.normalized, method),
        "dominant": _tagged(result.dominant, method),
        "membership": membership.kind,
        "walls": _plain(membership.walls),
    }
    return EXIT_OK


def _cmd_parabolic(payload: dict, args, report: dict) -> int:
    real = build_realization(_str_field(payload, "realization"))
    s = matrix_from_json(_req(payload, "s"), "$.s")
    space = payload.get("space", "g^C")
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    datum = parabolic_from(real, s, space=space, **kwargs)
    method = "ad-eigenvalue grading"
    report["outputs"] = {
        "space": datum.space,
        "eigenvalues": _tagged(datum.eigenvalues, method),
        "dim_p": _tagged(len(datum.p_basis), method),
        "dim_l": _tagged(len(datum.l_basis), method),
        "dim_n": _tagged(len(datum.n_basis), method),
    }
    return EXIT_OK


def _sample_hermitian_pair(model: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    real = build_realization(model)
    out = []
    for _ in range(2):
        if real.family == "U_pq":
            b = complex(rng.standard_normal(), rng.standard_normal())
            m = np.array([[0.0, b], [np.conj(b), 0.0]], dtype=complex)
        else:
            a = rng.standard_normal((real.n, real.n)) + 1j * rng.standard_normal((real.n, real.n))
            m = (a + a.conj().T) / 2.0
        norm = np.linalg.norm(m)
        if norm < 1e-8:
            return _sample_hermitian_pair(model, rng)
        out.append(m / norm)
    return out[0], out[1]


def _cmd_degree_relative(payload: dict, args, report: dict) -> int:
    tol = 1e-9 if args.tolerance is None else args.tolerance
    if "sample" in payload:
        spec = _obj(payload["sample"], "$.sample")
        model = _str_field(spec, "model", "$.sample")
        count = _int_field(spec, "count", "$.sample", default=100)
        rng = np.random.default_rng(0 if args.seed is None else args.seed)
        worst = 0.0
        for _ in range(count):
            s, sigma = _sample_hermitian_pair(model, rng)
            forward = relative_degree(s, sigma, tol=tol)
            backward = relative_degree(sigma, s, tol=tol)
            worst = max(worst, abs(forward.value - backward.value))
        report["outputs"] = {
            "model": model,
            "count": count,
            "max_reciprocity_gap": _tagged(worst, "qr_flow, both orders"),
        }
        return EXIT_OK
    s = matrix_from_json(_req(payload, "s"), "$.s")
    sigma = matrix_from_json(_req(payload, "sigma"), "$.sigma")
    result = relative_degree(s, sigma, tol=tol)
    report["outputs"] = {
        "value": _tagged(result.value, result.method),
        "converged": result.converged,
        "t_final": _tagged(result.t_trace[-1][0], result.method),
        "trace_length": len(result.t_trace),
    }
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def _cmd_degree_parabolic(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    red = _reduction_from_json(
        {"label": payload.get("label", "reduction"), **payload}, "$"
    )
    pardeg = pardeg_reduction(data, red)
    central = sum((Fraction(a) * Fraction(b) for a, b in zip(data.c, red.chi)), Fraction(0))
    method = "exact double-filtration pairing"
    report["outputs"] = {
        "label": red.label,
        "pardeg": _tagged(pardeg, method),
        "central_pairing": _tagged(central, method),
        "slope": _tagged(pardeg - central, method),
    }
    return EXIT_OK


def _cmd_stability(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    mode = payload.get("mode", "certificate")
    raw_reductions = payload.get("reductions", [])
    if not isinstance(raw_reductions, list):
        raise SchemaError("$.reductions", "expected a list")
    reductions = [
        _reduction_from_json(r, f"$.reductions[{i}]") for i, r in enumerate(raw_reductions)
    ]
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    verdict = stability_check(
        data,
        mode=mode,
        reductions=reductions,
        degree_bound=_int_field(payload, "degree_bound", default=3),
        **kwargs,
    )
    method = "exact double-filtration pairing"
    report["outputs"] = {
        "verdict": verdict.verdict,
        "witness": verdict.witness,
        "note": verdict.note,
        "slope_table": [
            {"label": label, "pairing": kind, "slope": _tagged(value, method)}
            for label, kind, value in verdict.slope_table
        ],
    }
    return EXIT_OK if verdict.verdict != "unstable" else EXIT_NEGATIVE_VERDICT


def _cmd_genericity(payload: dict, args, report: dict) -> int:
    raw = _req(payload, "weights")
    if not isinstance(raw, list):
        raise SchemaError("$.weights", "expected a list of weight vectors")
    weights = [fracvec_from_json(w, f"$.weights[{i}]") for i, w in enumerate(raw)]
    result = genericity_check(
        weights, max_combinations=_int_field(payload, "max_combinations", default=200000)
    )
    method = "exhaustive integer-character enumeration"
    report["outputs"] = {
        "generic": result.generic,
        "character": _plain(result.character),
        "value": None if result.value is None else _tagged(result.value, method),
    }
    return EXIT_OK if result.generic else EXIT_NEGATIVE_VERDICT


def _cmd_hecke(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    raw = _req(payload, "lambdas")
    if not isinstance(raw, list):
        raise SchemaError("$.lambdas", "expected one lattice vector per puncture")
    lambdas = [fracvec_from_json(v, f"$.lambdas[{i}]") for i, v in enumerate(raw)]
    lattice = payload.get("lattice", "GL")
    result = hecke_apply(data, lambdas, lattice=lattice)
    method = "exact cocharacter shift"
    report["outputs"] = {
        "data": higgs_to_json(result),
        "weights": _tagged([p.weight for p in result.punctures], method),
        "degrees": _tagged(result.summand_degrees, method),
    }
    return EXIT_OK


def _cmd_gr_res(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    i = _int_field(payload, "puncture", default=0)
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    graded = gr_res(data, i, **kwargs)
    method = "residue projection onto ker(Ad(exp 2 pi i alpha) - 1)"
    report["outputs"] = {
        "puncture": i,
        "value": _tagged(graded.value, method),
        "semisimple": _tagged(graded.semisimple, method),
        "nilpotent": _tagged(graded.nilpotent, method),
        "torus_generator": _tagged(graded.torus_generator, method),
    }
    return EXIT_OK


def _convention(payload: dict) -> str:
    convention = payload.get("convention", "2pi_i")
    if convention not in ("2pi_i", "2pi"):
        raise SchemaError("$.convention", f"expected '2pi_i' or '2pi', got {convention!r}")
    return convention


def _cmd_translate_h2l(payload: dict, args, report: dict) -> int:
    real = build_realization(_str_field(payload, "realization"))
    alpha = _numvec(_req(payload, "alpha"), "$.alpha")
    s = matrix_from_json(_req(payload, "s"), "$.s")
    y = matrix_from_json(_req(payload, "y"), "$.y")
    convention = _convention(payload)
    report["conventions"]["monodromy_scale"] = convention
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    entry = higgs_to_localsystem(alpha, s, y, real, convention=convention, **kwargs)
    report["outputs"] = {"entry": entry_to_json(entry)}
    report["warnings"].extend(entry.branch_warnings)
    return EXIT_OK


def _cmd_translate_l2h(payload: dict, args, report: dict) -> int:
    real = build_realization(_str_field(payload, "realization"))
    monodromy = matrix_from_json(_req(payload, "monodromy"), "$.monodromy")
    beta = None
    if payload.get("beta") is not None:
        beta = matrix_from_json(payload["beta"], "$.beta")
    convention = _convention(payload)
    report["conventions"]["monodromy_scale"] = convention
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    entry = localsystem_to_higgs(monodromy, real, beta=beta, convention=convention, **kwargs)
    report["outputs"] = {"entry": entry_to_json(entry)}
    report["warnings"].extend(entry.branch_warnings)
    return EXIT_OK


def _cmd_hitchin_section(payload: dict, args, report: dict) -> int:
    q_terms = None
    if payload.get("q_terms") is not None:
        raw = payload["q_terms"]
        if not isinstance(raw, list):
            raise SchemaError("$.q_terms", "expected one list of terms per puncture")
        q_terms = []
        for i, terms in enumerate(raw):
            if not isinstance(terms, list):
                raise SchemaError(f"$.q_terms[{i}]", "expected a list of [j, k, a] terms")
            parsed = []
            for j_term, term in enumerate(terms):
                loc = f"$.q_terms[{i}][{j_term}]"
                if not isinstance(term, list) or len(term) != 3:
                    raise SchemaError(loc, "expected [degree, order, coefficient]")
                parsed.append(
                    (
                        _int_field({"j": term[0]}, "j", loc),
                        _int_field({"k": term[1]}, "k", loc),
                        _complex_from_json(term[2], loc + "[2]"),
                    )
                )
            q_terms.append(parsed)
    data = hitchin_section(
        _str_field(payload, "mode"),
        _int_field(payload, "genus"),
        _int_field(payload, "n_punctures"),
        q_terms=q_terms,
        rank=_int_field(payload, "rank", default=2),
    )
    method = "section construction from differentials"
    report["outputs"] = {
        "data": higgs_to_json(data),
        "weights": _tagged([p.weight for p in data.punctures], method),
        "degrees": _tagged(data.summand_degrees, method),
    }
    return EXIT_OK


def _cmd_toledo(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    signature = None
    if payload.get("signature") is not None:
        raw = payload["signature"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise SchemaError("$.signature", "expected [p, q]")
        signature = (
            _int_field({"p": raw[0]}, "p", "$.signature"),
            _int_field({"q": raw[1]}, "q", "$.signature"),
        )
    tau = toledo_invariant(data, signature=signature)
    report["outputs"] = {
        "tau": _tagged(tau, "exact character pairing"),
        "realization": data.realization,
    }
    return EXIT_OK


def _cmd_mw_check(payload: dict, args, report: dict) -> int:
    data = _higgs_data(payload)
    signature = None
    if payload.get("signature") is not None:
        raw = payload["signature"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise SchemaError("$.signature", "expected [p, q]")
        signature = (
            _int_field({"p": raw[0]}, "p", "$.signature"),
            _int_field({"q": raw[1]}, "q", "$.signature"),
        )
    result = milnor_wood_check(
        data,
        signature=signature,
        rank_plus=payload.get("rank_plus"),
        rank_minus=payload.get("rank_minus"),
    )
    method = "exact character pairing"
    report["outputs"] = {
        "ok": result.ok,
        "tau": _tagged(result.tau, method),
        "rank_plus": result.rank_plus,
        "rank_minus": result.rank_minus,
        "margins": _tagged(result.margins, method),
        "side": result.side,
    }
    return EXIT_OK if result.ok else EXIT_NEGATIVE_VERDICT


def _cmd_ks_orbit(payload: dict, args, report: dict) -> int:
    real = build_realization(_str_field(payload, "realization"))
    e = matrix_from_json(_req(payload, "e"), "$.e")
    kwargs = {} if args.tolerance is None else {"tol": args.tolerance}
    cert = kostant_sekiguchi_orbit_map(real, e, **kwargs)
    method = "Jacobson-Morozov plus Cayley transform"
    report["outputs"] = {
        "rank_sequence": _tagged(cert.rank_sequence, method),
        "component_signs": _tagged(cert.component_signs, method),
    }
    return EXIT_OK


def _cmd_verify_model(payload: dict, args, report: dict) -> int:
    real = build_realization(_str_field(payload, "realization"))
    alpha = _numvec(_req(payload, "alpha"), "$.alpha")
    n = len(alpha)
    if payload.get("s") is not None:
        s = matrix_from_json(payload["s"], "$.s")
    else:
        s = np.zeros((n, n), dtype=complex)
    triple = None
    if payload.get("y") is not None:
        y = matrix_from_json(payload["y"], "$.y")
        triple = complete_ks_triple(real, y)
    grid_spec = _obj(_req(payload, "grid"), "$.grid")
    r_max = float(_req(grid_spec, "r_max", "$.grid"))
    r_min = float(_req(grid_spec, "r_min", "$.grid"))
    count = _int_field(grid_spec, "count", "$.grid")
    n_theta = _int_field(grid_spec, "n_theta", "$.grid", default=64)
    grid = radial_grid(r_max, r_min, count, n_theta=n_theta)
    extra_terms = []
    if payload.get("extra_terms") is not None:
        raw = payload["extra_terms"]
        if not isinstance(raw, list):
            raise SchemaError("$.extra_terms", "expected a list of [order, matrix] pairs")
        for i, pair in enumerate(raw):
            loc = f"$.extra_terms[{i}]"
            if not isinstance(pair, list) or len(pair) != 2:
                raise SchemaError(loc, "expected [order, matrix]")
            extra_terms.append(
                (_int_field({"k": pair[0]}, "k", loc), matrix_from_json(pair[1], loc + "[1]"))
            )
    convention = _convention(payload)
    report["conventions"]["monodromy_scale"] = convention

    residual_kwargs = {}
    holonomy_kwargs = {}
    if args.tolerance is not None:
        residual_kwargs["tol"] = args.tolerance
        holonomy_kwargs["tol"] = args.tolerance
    if payload.get("fd_step") is not None:
        residual_kwargs["fd_step"] = float(payload["fd_step"])
    profile = hitchin_residual(
        alpha, s, triple, grid, real, extra_terms=tuple(extra_terms), **residual_kwargs
    )
    rows = []
    for r, rho in zip(profile.radii, profile.rho):
        holonomy = holonomy_check(
            alpha, s, triple, r, real, convention=convention, **holonomy_kwargs
        )
        rows.append(
            {
                "r": r,
                "rho": rho,
                "holonomy_deviation": holonomy.deviation_levi,
                "holonomy_deviation_full": holonomy.deviation_full,
                "ode_steps": holonomy.steps,
            }
        )
    if any(rows[i]["rho"] < rows[i + 1]["rho"] for i in range(len(rows) - 1)):
        report["warnings"].append("residual rho(r) is not monotone over the sampled radii")
    report["outputs"] = {
        "table": _plain(rows),
        "table_methods": {
            "rho": "sup over the theta grid of the weighted curvature residual",
            "holonomy_deviation": "RK4 circle holonomy vs elliptic*hyperbolic prediction",
            "holonomy_deviation_full": "RK4 circle holonomy vs full three-factor prediction",
        },
        "fd_mismatch": _tagged(
            profile.fd_mismatch, "central finite difference of the connection in r"
        ),
        "fd_step": _plain(profile.fd_step),
    }
    if args.csv:
        lines = ["r,rho,holonomy_deviation"]
        for row in rows:
            lines.append(f"{row['r']!r},{row['rho']!r},{row['holonomy_deviation']!r}")
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


_COMMAND_HELP = {
    "rootsys": "print the exact root datum of a Cartan type",
    "alcove-normalize": "canonical affine-Weyl representative of a rational weight",
    "parabolic": "parabolic subalgebra attached to a boundary element",
    "degree-relative": "relative degree of a pair, or a sampled reciprocity sweep",
    "degree-parabolic": "parabolic degree of one reduction certificate",
    "stability": "slope trichotomy over certificates or a bounded search",
    "genericity": "no integer character vanishes on the weight tuple",
    "hecke": "shift parabolic weights by cocharacter lattice vectors",
    "gr-res": "graded residue of the Higgs field at one puncture",
    "ks-orbit": "Kostant-Sekiguchi orbit certificate of a real nilpotent",
    "translate-h2l": "Higgs puncture data to local-system monodromy entry",
    "translate-l2h": "local-system monodromy to Higgs puncture entry",
    "hitchin-section": "Higgs data of a section defined by differentials",
    "toledo": "Toledo invariant of Hermitian-type Higgs data",
    "mw-check": "Milnor-Wood window check for the Toledo invariant",
    "verify-model": "residual and holonomy table for the model metric",
}

_HANDLERS: dict[str, Callable[[dict, Any, dict], int]] = {
    "rootsys": _cmd_rootsys,
    "alcove-normalize": _cmd_alcove_normalize,
    "parabolic": _cmd_parabolic,
    "degree-relative": _cmd_degree_relative,
    "degree-parabolic": _cmd_degree_parabolic,
    "stability": _cmd_stability,
    "genericity": _cmd_genericity,
    "hecke": _cmd_hecke,
    "gr-res": _cmd_gr_res,
    "ks-orbit": _cmd_ks_orbit,
    "translate-h2l": _cmd_translate_h2l,
    "translate-l2h": _cmd_translate_l2h,
    "hitchin-section": _cmd_hitchin_section,
    "toledo": _cmd_toledo,
    "mw-check": _cmd_mw_check,
    "verify-model": _cmd_verify_model,
}


def cli_dispatch(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    """Run one subcommand; return (exit code, report). Also emits the report."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        report = {
            "schema": REPORT_SCHEMA,
            "command": None,
            "argv": argv,
            "error": {"type": "UsageError", "message": str(exc)},
            "exit_code": EXIT_PRECONDITION,
        }
        sys.stderr.write(_render(report))
        return EXIT_PRECONDITION, report
    if args.command is None:
        parser.print_help()
        return EXIT_OK, {}

    report = _new_report(args.command, argv, args)
    try:
        raw, payload = _load_input(args)
        report["input_digest"] = "sha256:" + hashlib.sha256(raw).hexdigest()
        code = _HANDLERS[args.command](_obj(payload), args, report)
    except (
        GridTooCoarse,
        IntegratorFailure,
        SearchExhausted,
        NonConvergence,
        NumericallyDefective,
    ) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_NO_CONVERGENCE
    except SchemaError as exc:
        report["error"] = {
            "type": "SchemaError",
            "location": exc.location,
            "message": str(exc),
        }
        code = EXIT_PRECONDITION
    except (ValueError, TripleCompletionFailure, OSError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_PRECONDITION
    report["exit_code"] = code
    _emit(report, args)
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = cli_dispatch(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
