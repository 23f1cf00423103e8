"""Builtin catalogs: map families, space families, potential kinds, and
bundled example configurations runnable by name."""

from __future__ import annotations

import math

MAP_CATALOG = {
    "identity": "x -> x on any space",
    "affine_mod1": "x -> (a*x + b) mod 1 on the circle; params (a, b)",
    "affine_clamped": "x -> a*x + b with [0,1] mapped into [0,1]; params (a, b)",
    "doubling": "x -> 2x mod 1 on the circle",
    "rotation": "x -> x + alpha mod 1 on the circle; params (alpha,)",
    "tent": "x -> 1 - |2x - 1| on the interval",
    "permutation_table": "index permutation of a finite_explicit cloud; params = table",
    "shift": "drop the leading symbol of a word",
    "symbol_substitution_table": "relabel symbols positionwise; params = table",
}

SPACE_CATALOG = {
    "interval_grid": "N equispaced points of [0,1], distance |x-y|",
    "circle_grid": "N equispaced points of R/Z, arc distance",
    "symbolic_depth": "all depth-D words over an m-letter alphabet, cylinder metric 2^-k",
    "finite_explicit": "finite metric space given by its distance matrix",
}

POTENTIAL_CATALOG = {
    "constant": "psi(x) = c; params (c,)",
    "coordinate_affine": "psi(x) = a*x + b; params (a, b)",
    "piecewise_linear": "linear interpolation of values at equispaced knots of [0,1]",
    "first_symbol_table": "psi(word) = params[first symbol]",
    "explicit_table": "per-point values (by point id on finite_explicit clouds)",
}

_LOG2 = math.log(2.0)

EXAMPLE_CONFIGS: dict[str, dict] = {
    "two_point_swap": {
        "mode": "verify",
        "space": {"family": "finite_explicit", "distance_matrix": [[0.0, 1.0], [1.0, 0.0]]},
        "schedule": {
            "prefix": [],
            "cycle": [[{"kind": "identity"}, {"kind": "permutation_table", "params": [1, 0]}]],
        },
        "potential": {"kind": "explicit_table", "params": [0.0, 1.0]},
        "potential_phi": {"kind": "constant", "params": [0.0]},
        "n_range": [1, 6],
        "eps_list": [0.5],
        "word_budget": 4096,
        "seed": 7,
        "checks": [
            {"type": "basic", "n": 2, "eps": 0.5, "p": 0.5, "c": 2.0},
            {"type": "power", "n": 2, "m_range": [1, 3]},
            {"type": "truncation", "i": 1, "j": 2},
            {"type": "equicontinuity"},
        ],
    },
    "two_point_swap_sampled": {
        "mode": "estimate",
        "space": {"family": "finite_explicit", "distance_matrix": [[0.0, 1.0], [1.0, 0.0]]},
        "schedule": {
            "prefix": [],
            "cycle": [[{"kind": "identity"}, {"kind": "permutation_table", "params": [1, 0]}]],
        },
        "potential": {"kind": "constant", "params": [0.0]},
        "n_range": [1, 12],
        "eps_list": [0.5],
        "word_budget": 256,
        "seed": 11,
    },
    "doubling_circle": {
        "mode": "estimate",
        "space": {"family": "circle_grid", "resolution": 4096},
        "schedule": {"prefix": [], "cycle": [[{"kind": "doubling"}]]},
        "potential": {"kind": "constant", "params": [0.0]},
        "n_range": [1, 10],
        "eps_list": [0.03125],
        "word_budget": 64,
        "seed": 3,
    },
    "shift_pressure": {
        "mode": "estimate",
        "space": {"family": "symbolic_depth", "resolution": 14, "alphabet_size": 2},
        "schedule": {"prefix": [], "cycle": [[{"kind": "shift"}]]},
        "potential": {"kind": "first_symbol_table", "params": [0.0, _LOG2]},
        "n_range": [1, 8],
        "eps_list": [0.125],
        "word_budget": 64,
        "seed": 5,
    },
    "shift_to_doubling_factor": {
        "mode": "verify",
        "space": {"family": "symbolic_depth", "resolution": 14, "alphabet_size": 2},
        "schedule": {"prefix": [], "cycle": [[{"kind": "shift"}]]},
        "potential": {"kind": "constant", "params": [0.0]},
        "potential_target": {"kind": "constant", "params": [0.0]},
        "factor": {
            "kind": "binary_expansion",
            "space": {"family": "circle_grid", "resolution": 2048},
            "schedule": {"prefix": [], "cycle": [[{"kind": "doubling"}]]},
        },
        "n_range": [1, 8],
        "eps_list": [0.25, 0.125],
        "word_budget": 64,
        "seed": 9,
        "checks": [
            {"type": "semiconjugacy"},
            {"type": "factor_lower"},
            {"type": "factor_upper", "fiber_sample": 6},
        ],
    },
    "four_point_quotient": {
        "mode": "verify",
        "space": {
            "family": "finite_explicit",
            "distance_matrix": [
                [0.0, 1.0, 0.4, 1.0],
                [1.0, 0.0, 1.0, 0.4],
                [0.4, 1.0, 0.0, 1.0],
                [1.0, 0.4, 1.0, 0.0],
            ],
        },
        "schedule": {
            "prefix": [],
            "cycle": [[{"kind": "identity"}, {"kind": "permutation_table", "params": [1, 2, 3, 0]}]],
        },
        "potential": {"kind": "constant", "params": [0.0]},
        "potential_target": {"kind": "constant", "params": [0.0]},
        "factor": {
            "kind": "index_table",
            "table": [0, 1, 0, 1],
            "space": {"family": "finite_explicit", "distance_matrix": [[0.0, 1.0], [1.0, 0.0]]},
            "schedule": {
                "prefix": [],
                "cycle": [[{"kind": "identity"}, {"kind": "permutation_table", "params": [1, 0]}]],
            },
        },
        "n_range": [1, 6],
        "eps_list": [0.5],
        "word_budget": 4096,
        "seed": 13,
        "checks": [
            {"type": "semiconjugacy"},
            {"type": "factor_lower"},
            {"type": "factor_upper", "fiber_sample": 2},
        ],
    },
}

CATALOG_KINDS = ("maps", "spaces", "potentials", "examples")


def list_builtin(kind: str) -> str:
    """Catalog text for one builtin kind; unknown kinds raise ValueError."""
    tables = {
        "maps": MAP_CATALOG,
        "spaces": SPACE_CATALOG,
        "potentials": POTENTIAL_CATALOG,
    }
    if kind in tables:
        return "\n".join(f"{name:28s} {desc}" for name, desc in tables[kind].items())
    if kind == "examples":
        return "\n".join(f"{name:28s} mode={cfg['mode']}" for name, cfg in EXAMPLE_CONFIGS.items())
    raise ValueError(f"unknown catalog kind {kind!r}; expected one of {CATALOG_KINDS}")
