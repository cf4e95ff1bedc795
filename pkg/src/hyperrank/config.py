"""Experiment configuration files.

A config is plain text: ``key = value`` settings, ``#`` comments, and
metric definitions in the expression language between
``begin metric <name>`` and ``end``.  The ``space`` setting is a
constructor expression such as::

    space = pullback(hyperbolic(2), hyperbolic(2, a=1))
    space = stretch(dsl("warped"), 3.0)

Expressions are parsed with :mod:`ast` and only the constructors below
(and numeric/string literals) are accepted.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

from .dsl import DSLError, parse_metric
from .spaces import DiagonalEmbedding, flat, horospherical_model, perturbed_model, product, pullback_diagonal, stretch
from .tensor import MetricField

DEFAULTS = {
    "space": "pullback(hyperbolic(2), hyperbolic(2))",
    "seed": "0",
    "lambda": "auto",
    "n_pairs": "500",
    "n_curves": "100",
    "solver_tol": "1e-6",
    "distance_method": "auto",
    "constant_samples": "200",
}


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"{message} (config line {line})" if line else message)


@dataclass
class ExperimentConfig:
    settings: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)  # name -> MetricSpec
    lines: dict = field(default_factory=dict)  # key -> line number

    def get(self, key, default=None):
        return self.settings.get(key, DEFAULTS.get(key, default))

    def number(self, key, kind=float):
        raw = self.get(key)
        try:
            return kind(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"setting {key!r} must be a {kind.__name__}, got {raw!r}",
                              self.lines.get(key)) from None

    def build(self, key="space") -> "Built":
        return build_space(self.get(key), self.metrics, self.lines.get(key))


@dataclass
class Built:
    metric: MetricField
    embedding: DiagonalEmbedding | None = None


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        line = raw.split("#", 1)[0].strip()
        lineno = i + 1
        i += 1
        if not line:
            continue
        words = line.split()
        if words[0] == "begin":
            if len(words) != 3 or words[1] != "metric":
                raise ConfigError("expected 'begin metric <name>'", lineno)
            name = words[2]
            body = []
            while i < len(lines) and lines[i].strip() != "end":
                body.append(lines[i])
                i += 1
            if i == len(lines):
                raise ConfigError(f"metric block {name!r} has no 'end'", lineno)
            i += 1
            try:
                cfg.metrics[name] = parse_metric("\n".join(body))
            except DSLError as exc:
                exc.args = (f"{exc.args[0]}\n(in metric block {name!r}, which starts at config line "
                            f"{lineno + 1})",)
                raise
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in cfg.settings:
            raise ConfigError(f"duplicate setting {key!r}", lineno)
        cfg.settings[key] = value
        cfg.lines[key] = lineno
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- space expressions


def build_space(source: str, metrics: dict, line=None) -> Built:
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse space expression {source!r}: {exc.msg}", line) from None
    return _eval(tree.body, metrics, line)


def _literal(node, line):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str, bool)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_literal(node.operand, line)
    raise ConfigError(f"expected a literal, got {ast.unparse(node)!r}", line)


def _eval(node, metrics, line) -> Built:
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ConfigError(f"expected a space constructor, got {ast.unparse(node)!r}", line)
    name = node.func.id
    kwargs = {kw.arg: _literal(kw.value, line) for kw in node.keywords}

    if name in ("product", "pullback"):
        if kwargs:
            raise ConfigError(f"{name} takes no keyword arguments", line)
        factors = [_eval(a, metrics, line).metric for a in node.args]
        if name == "product":
            return Built(product(factors))
        emb = DiagonalEmbedding(factors)
        return Built(pullback_diagonal(emb), emb)

    if name == "stretch":
        if len(node.args) != 2:
            raise ConfigError("stretch takes a space and a factor", line)
        inner = _eval(node.args[0], metrics, line)
        return Built(stretch(inner.metric, float(_literal(node.args[1], line))))

    args = [_literal(a, line) for a in node.args]
    try:
        if name == "hyperbolic":
            return Built(horospherical_model(*args, **kwargs))
        if name == "perturbed":
            return Built(perturbed_model(*args, **kwargs))
        if name == "flat":
            return Built(flat(*args, **kwargs))
    except TypeError as exc:
        raise ConfigError(f"bad arguments to {name}: {exc}", line) from None
    if name == "dsl":
        if len(args) != 1 or kwargs:
            raise ConfigError('dsl takes one metric block name, e.g. dsl("warped")', line)
        if args[0] not in metrics:
            raise ConfigError(f"no metric block named {args[0]!r}", line)
        return Built(metrics[args[0]].to_metric_field(args[0]))
    raise ConfigError(f"unknown space constructor {name!r}", line)
