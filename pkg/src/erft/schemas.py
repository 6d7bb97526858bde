"""JSON schemas for the reports written by the ``erft`` command."""

FRACTION = {"type": "string", "pattern": r"^[0-9]+/[0-9]+$"}

META = {
    "type": "object",
    "required": ["seed", "trials", "version"],
    "properties": {
        "seed": {"type": ["integer", "null"]},
        "trials": {"type": ["integer", "null"]},
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
    },
}

RUN = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "erft run report",
    "type": "object",
    "required": ["circuit", "engine", "kind", "outcomes", "meta"],
    "properties": {
        "circuit": {"type": "string"},
        "engine": {"enum": ["toy", "quantum"]},
        "kind": {"enum": ["exact", "estimated"]},
        "outcomes": {"type": "object", "additionalProperties": {"oneOf": [FRACTION, {"type": "number"}]}},
        "meta": META,
    },
    "allOf": [
        {
            "if": {"properties": {"engine": {"const": "toy"}, "kind": {"const": "exact"}}},
            "then": {"properties": {"outcomes": {"additionalProperties": FRACTION}}},
        }
    ],
}

COMPARE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "erft toy-vs-quantum comparison",
    "type": "object",
    "required": ["circuit", "tolerance", "verdict", "rows", "meta"],
    "properties": {
        "circuit": {"type": "string"},
        "tolerance": {"type": "number"},
        "verdict": {"enum": ["pass", "fail"]},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["outcome", "toy", "quantum", "diff"],
                "properties": {
                    "outcome": {"type": "string"},
                    "toy": FRACTION,
                    "quantum": {"type": "number"},
                    "diff": {"type": "number", "minimum": 0},
                },
            },
        },
        "meta": META,
    },
}

AUDIT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "erft locality audit",
    "type": "object",
    "required": ["circuit", "trials", "seed", "findings", "accesses", "no_signalling", "meta"],
    "properties": {
        "circuit": {"type": "string"},
        "trials": {"type": "integer"},
        "seed": {"type": "integer"},
        "findings": {"type": "array", "items": {"type": "string"}},
        "accesses": {"type": "object"},
        "no_signalling": {
            "type": "object",
            "required": ["probes", "max_deviation"],
            "properties": {"probes": {"type": "integer"}, "max_deviation": FRACTION},
        },
        "meta": META,
    },
}

CONVERGE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "erft convergence report",
    "type": "object",
    "required": ["circuit", "seed", "support_size", "rows", "meta"],
    "properties": {
        "circuit": {"type": "string"},
        "seed": {"type": "integer"},
        "support_size": {"type": "integer"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["trials", "tv", "bound"],
                "properties": {
                    "trials": {"type": "integer", "minimum": 1},
                    "tv": {"type": "number", "minimum": 0},
                    "bound": {"type": "number"},
                },
            },
        },
        "meta": META,
    },
}

CHECK = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "erft validation report",
    "type": "object",
    "required": ["circuit", "findings", "meta"],
    "properties": {
        "circuit": {"type": "string"},
        "findings": {"type": "array", "items": {"type": "string"}},
        "meta": META,
    },
}

BY_COMMAND = {"run": RUN, "compare": COMPARE, "audit": AUDIT, "converge": CONVERGE, "check": CHECK}
