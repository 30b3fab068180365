"""Builders that turn trained network weights into QUBO models.

Every builder follows one sign convention: learned weights and feature
values are negated on insertion, so configurations the classical network
scores highly sit at low energy and classification becomes energy
minimization.  The classifier block is the penalty P * [(sum h - 1)^2 - 1]
whose ground states are exactly the one-hot class vectors.

A model is a :class:`qubonet.qubo.Qubo` plus a :class:`ModelLayout`
sidecar naming which index ranges play which role (visible features,
pooling nodes, hidden layers, class nodes) and, for pooled models, which
visible nodes each pooling node aggregates.  The sidecar has its own
text format:

    layout n=30
    role visible 0 20
    role pooling 20 25
    role classes 25 30
    pool 20 0 1 2 3
    ...
    norm <scale> <shift>

``clamp_mode`` picks between the two readings of input clamping: "free"
keeps visible nodes as binary variables with biases set to the negated
features, "folded" eliminates them by pushing each coupling, weighted by
the clamped feature value, into the bias of the node it connects to
(discarding the constant part of the energy).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .errors import DimensionError, FormatError
from .nn import LayerGeometry, NetworkWeights
from .qubo import Qubo, _read_lines, _write_lines

CLAMP_MODES = ("free", "folded")


@dataclass(frozen=True)
class ModelLayout:
    """Role map of a model's variable indices.

    ``roles`` assigns each named role a contiguous index range; the
    ranges are disjoint and tile 0..n, and a "classes" role is always
    present.  ``pool_membership`` maps each pooling node to the visible
    indices it aggregates.  ``norm`` records the affine map (scale,
    shift) that produced the normalized features, when one was applied.
    """

    n: int
    roles: dict[str, range]
    pool_membership: dict[int, tuple[int, ...]] = field(default_factory=dict)
    norm: tuple[float, float] | None = None

    def __post_init__(self):
        spans = sorted(self.roles.values(), key=lambda r: r.start)
        cursor = 0
        for span in spans:
            if span.start != cursor or span.stop <= span.start:
                raise DimensionError(
                    f"role ranges must tile 0..{self.n}, got {sorted(self.roles.items())}"
                )
            cursor = span.stop
        if cursor != self.n:
            raise DimensionError(f"role ranges cover 0..{cursor}, expected 0..{self.n}")
        if "classes" not in self.roles:
            raise DimensionError("layout needs a 'classes' role")
        pooling = self.roles.get("pooling", range(0))
        if self.pool_membership:
            if set(self.pool_membership) != set(pooling):
                raise DimensionError("pool membership must cover exactly the pooling nodes")
            sizes = {len(m) for m in self.pool_membership.values()}
            if len(sizes) != 1:
                raise DimensionError(f"pools must share one size, got {sorted(sizes)}")
            visible = self.leading_role
            for node, members in self.pool_membership.items():
                if any(m not in visible for m in members):
                    raise DimensionError(f"pool {node} references non-visible indices")

    @property
    def leading_role(self) -> range:
        """The index range starting at 0 (the input layer)."""
        for span in self.roles.values():
            if span.start == 0:
                return span
        raise DimensionError("no role starts at index 0")

    @property
    def classes(self) -> range:
        return self.roles["classes"]

    @property
    def n_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class BuildParams:
    """Knobs of the transfer: normalization bound, penalty scale, clamping.

    ``penalty=None`` selects the default P = 1 + max over classes of the
    column sum of |W| for the dense matrix feeding the class nodes,
    which makes a second active class node cost more than any attainable
    classification gain.
    """

    alpha: float = 1.0
    penalty: float | None = None
    clamp_mode: str = "free"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.penalty is not None and not self.penalty > 0:
            raise ValueError(f"penalty must be positive, got {self.penalty}")
        if self.clamp_mode not in CLAMP_MODES:
            raise ValueError(f"clamp_mode must be one of {CLAMP_MODES}, got {self.clamp_mode!r}")


def default_penalty(class_weights: np.ndarray) -> float:
    """1 + the largest sum over |weights| into any single class node."""
    return 1.0 + float(np.abs(class_weights).sum(axis=0).max())


def normalize_features(raw, alpha: float = 1.0) -> tuple[np.ndarray, tuple[float, float]]:
    """Affinely map a feature vector onto [-alpha, alpha] by min/max.

    Returns the normalized vector and the applied (scale, shift) so the
    map can be recorded in the layout sidecar.  A constant vector maps
    to all zeros.
    """
    raw = np.asarray(raw, dtype=float)
    lo, hi = raw.min(), raw.max()
    if hi - lo < 1e-12:
        return np.zeros_like(raw), (0.0, 0.0)
    scale = 2.0 * alpha / (hi - lo)
    shift = -alpha - scale * lo
    return scale * raw + shift, (scale, shift)


def build_classifier_block(n_classes: int, penalty: float) -> Qubo:
    """One-hot constraint P * [(sum h - 1)^2 - 1] over n_classes nodes.

    Diagonal -P, every pair +2P; the ground states are exactly the
    one-hot vectors, each at energy -P.
    """
    if n_classes < 2:
        raise DimensionError(f"need at least 2 classes, got {n_classes}")
    if not penalty > 0:
        raise ValueError(f"penalty must be positive, got {penalty}")
    terms = {(k, k): -penalty for k in range(n_classes)}
    for j in range(n_classes):
        for k in range(j + 1, n_classes):
            terms[(j, k)] = 2.0 * penalty
    return Qubo(n_classes, terms)


def build_pooling_block(features, layout: ModelLayout, params: BuildParams) -> Qubo:
    """Feature biases plus visible-to-pooling couplings.

    Visible node i gets bias -features[i]; each pooling node couples to
    its members with -alpha and keeps a zero bias, so with the visible
    values clamped to x the minimizing pooling state is 1 exactly when
    alpha * sum(x over members) > 0 (ties fall to 0).
    """
    features = np.asarray(features, dtype=float)
    visible = layout.leading_role
    if features.shape != (len(visible),):
        raise DimensionError(
            f"expected {len(visible)} features for the visible range, got {features.shape}"
        )
    if np.abs(features).max(initial=0.0) > params.alpha + 1e-12:
        raise ValueError(f"features must lie in [-{params.alpha}, {params.alpha}]")
    terms = {}
    for i, value in zip(visible, features):
        if value != 0.0:
            terms[(i, i)] = -value
    for node, members in layout.pool_membership.items():
        for m in members:
            terms[(min(m, node), max(m, node))] = -params.alpha
    return Qubo(layout.n, terms)


def build_dense_block(weights: np.ndarray, source: range, targets: range) -> Qubo:
    """Couple source node i to target node k with -weights[i, k]."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(source), len(targets)):
        raise DimensionError(
            f"weight matrix {weights.shape} does not map {len(source)} sources "
            f"to {len(targets)} targets"
        )
    n = max(source.stop, targets.stop)
    terms = {}
    for a, i in enumerate(source):
        for b, k in enumerate(targets):
            if weights[a, b] != 0.0:
                terms[(min(i, k), max(i, k))] = -weights[a, b]
    return Qubo(n, terms)


def build_conv_block(
    filters: np.ndarray,
    stride: int,
    geometry: LayerGeometry,
    source: range,
    targets: range,
) -> Qubo:
    """Shared-filter couplings from an input grid to conv output nodes.

    Output node (filter f, position r, c), indexed filter-major into
    ``targets``, couples to the 9 (or filter-sized) input-window nodes
    with the negated filter weights; the same column of weights repeats
    at window-shifted rows for every output of a filter.  Filter biases
    are zero, so no diagonal terms are emitted.
    """
    filters = np.asarray(filters, dtype=float)
    d, f_h, f_w = filters.shape
    out_h, out_w = geometry.conv_output(f_h, f_w, stride)
    if len(source) != geometry.input_height * geometry.input_width:
        raise DimensionError(
            f"source range holds {len(source)} nodes but the input grid has "
            f"{geometry.input_height * geometry.input_width}"
        )
    if len(targets) != d * out_h * out_w:
        raise DimensionError(
            f"target range holds {len(targets)} nodes but the filters produce "
            f"{d * out_h * out_w} outputs"
        )
    terms = {}
    for f in range(d):
        for r in range(out_h):
            for c in range(out_w):
                node = targets.start + f * out_h * out_w + r * out_w + c
                for a in range(f_h):
                    for b in range(f_w):
                        if filters[f, a, b] == 0.0:
                            continue
                        pixel = source.start + (r * stride + a) * geometry.input_width + (c * stride + b)
                        terms[(min(pixel, node), max(pixel, node))] = -filters[f, a, b]
    return Qubo(max(source.stop, targets.stop), terms)


def _pool_membership(weights: NetworkWeights, pooling_start: int) -> dict[int, tuple[int, ...]]:
    """Visible members of each pooling node, filter-major like forward()."""
    d, out_h, out_w = weights.conv_shape()
    _, p_h, p_w = weights.pooled_shape()
    g = weights.geometry
    membership = {}
    for f in range(d):
        for pr in range(p_h):
            for pc in range(p_w):
                node = pooling_start + f * p_h * p_w + pr * p_w + pc
                members = tuple(
                    f * out_h * out_w + (pr * g.pool_stride + a) * out_w + (pc * g.pool_stride + b)
                    for a in range(g.pool_height)
                    for b in range(g.pool_width)
                )
                membership[node] = members
    return membership


def assemble(
    features,
    weights: NetworkWeights,
    params: BuildParams = BuildParams(),
    norm: tuple[float, float] | None = None,
) -> tuple[Qubo, ModelLayout]:
    """Full classification model from normalized features and weights.

    With convolutional weights the model has visible, pooling and class
    nodes (the 30-node shape: 20 + 5 + 5 for the digit fixture); with a
    dense-only matrix it has feature and class nodes (the 50-node shape:
    40 + 10 for the handwritten-digit export).  ``norm`` is carried into
    the layout sidecar unchanged.

    In folded clamp mode the feature nodes are removed and their
    clamped contributions pushed into the remaining biases; the energies
    differ from the free model at fixed features only by a constant.
    """
    features = np.asarray(features, dtype=float)
    penalty = params.penalty if params.penalty is not None else default_penalty(weights.dense)
    if weights.conv_filters is not None:
        n_vis = int(np.prod(weights.conv_shape()))
        n_pool = int(np.prod(weights.pooled_shape()))
        if weights.dense.shape[0] != n_pool:
            raise DimensionError("dense layer does not match the pooled feature count")
        n = int(n_vis + n_pool + weights.n_classes)
        roles = {
            "visible": range(0, n_vis),
            "pooling": range(n_vis, n_vis + n_pool),
            "classes": range(n_vis + n_pool, n),
        }
        layout = ModelLayout(n, roles, _pool_membership(weights, n_vis), norm)
        qubo = (
            build_pooling_block(features, layout, params)
            + build_dense_block(weights.dense, roles["pooling"], roles["classes"]).embedded(n, 0)
            + build_classifier_block(weights.n_classes, penalty).embedded(n, n_vis + n_pool)
        )
    else:
        n_feat = weights.dense.shape[0]
        if features.shape != (n_feat,):
            raise DimensionError(f"expected {n_feat} features, got {features.shape}")
        if np.abs(features).max(initial=0.0) > params.alpha + 1e-12:
            raise ValueError(f"features must lie in [-{params.alpha}, {params.alpha}]")
        n = n_feat + weights.n_classes
        roles = {"features": range(0, n_feat), "classes": range(n_feat, n)}
        layout = ModelLayout(n, roles, {}, norm)
        bias_terms = {(i, i): -v for i, v in enumerate(features) if v != 0.0}
        qubo = (
            Qubo(n, bias_terms)
            + build_dense_block(weights.dense, roles["features"], roles["classes"]).embedded(n, 0)
            + build_classifier_block(weights.n_classes, penalty).embedded(n, n_feat)
        )
    if params.clamp_mode == "folded":
        return fold_visible(qubo, layout, features)
    return qubo, layout


def fold_visible(qubo: Qubo, layout: ModelLayout, values) -> tuple[Qubo, ModelLayout]:
    """Clamp the first role's nodes to real values and eliminate them.

    Each coupling (visible i, other t) becomes a bias contribution
    value_i * coupling on t; terms entirely inside the clamped range
    are constants and are dropped.
    """
    values = np.asarray(values, dtype=float)
    visible = layout.leading_role
    if values.shape != (len(visible),):
        raise DimensionError(f"expected {len(visible)} clamp values, got {values.shape}")
    offset = visible.stop
    terms: dict[tuple[int, int], float] = {}
    for (i, j), value in qubo.terms.items():
        inside = (i < offset) + (j < offset)
        if inside == 2:
            continue
        if inside == 0:
            key = (i - offset, j - offset)
            terms[key] = terms.get(key, 0.0) + value
        else:
            target = (j if i < offset else i) - offset
            clamped = values[i if i < offset else j]
            key = (target, target)
            terms[key] = terms.get(key, 0.0) + value * clamped
    roles = {
        name: range(span.start - offset, span.stop - offset)
        for name, span in layout.roles.items()
        if span is not visible
    }
    folded_layout = ModelLayout(layout.n - offset, roles, {}, layout.norm)
    return Qubo(layout.n - offset, terms), folded_layout


def assemble_scaled(
    conv_filters: np.ndarray,
    conv_stride: int,
    geometry: LayerGeometry,
    hidden_weights: np.ndarray,
    class_weights: np.ndarray,
    params: BuildParams = BuildParams(),
    features=None,
) -> tuple[Qubo, ModelLayout]:
    """Four-layer model: image grid, conv nodes, hidden layer, classes.

    The reference shape is 196 visible pixels (14x14), 128 conv nodes
    (8 filters over 16 positions), 24 hidden nodes and 10 classes, 358
    nodes in all.  ``features`` optionally sets visible biases from a
    clamped input image; without it the model is purely structural.
    """
    conv_filters = np.asarray(conv_filters, dtype=float)
    d, f_h, f_w = conv_filters.shape
    out_h, out_w = geometry.conv_output(f_h, f_w, conv_stride)
    n_vis = geometry.input_height * geometry.input_width
    n_conv = d * out_h * out_w
    n_hidden = hidden_weights.shape[1]
    n_classes = class_weights.shape[1]
    if hidden_weights.shape[0] != n_conv:
        raise DimensionError(
            f"hidden weights expect {hidden_weights.shape[0]} conv nodes, geometry yields {n_conv}"
        )
    if class_weights.shape[0] != n_hidden:
        raise DimensionError("class weights do not match the hidden layer width")
    n = n_vis + n_conv + n_hidden + n_classes
    roles = {
        "visible": range(0, n_vis),
        "conv": range(n_vis, n_vis + n_conv),
        "hidden": range(n_vis + n_conv, n_vis + n_conv + n_hidden),
        "classes": range(n_vis + n_conv + n_hidden, n),
    }
    layout = ModelLayout(n, roles)
    penalty = params.penalty if params.penalty is not None else default_penalty(class_weights)
    qubo = (
        build_conv_block(conv_filters, conv_stride, geometry, roles["visible"], roles["conv"]).embedded(n, 0)
        + build_dense_block(hidden_weights, roles["conv"], roles["hidden"]).embedded(n, 0)
        + build_dense_block(class_weights, roles["hidden"], roles["classes"]).embedded(n, 0)
        + build_classifier_block(n_classes, penalty).embedded(n, roles["classes"].start)
    )
    if features is not None:
        features = np.asarray(features, dtype=float)
        if features.shape != (n_vis,):
            raise DimensionError(f"expected {n_vis} visible features, got {features.shape}")
        bias_terms = {(i, i): -v for i, v in enumerate(features) if v != 0.0}
        qubo = qubo + Qubo(n, bias_terms)
    return qubo, layout


def scaled_reference_geometry() -> tuple[LayerGeometry, int]:
    """Geometry realizing the 358-node shape: 14x14 input, 5x5 window,
    stride 3, so each of 8 filters yields a 4x4 output map."""
    return LayerGeometry(input_height=14, input_width=14), 3


# -- layout sidecar IO ---------------------------------------------------------


def write_layout(layout: ModelLayout, destination: str | IO[str]) -> None:
    lines = [f"layout n={layout.n}\n"]
    for name, span in layout.roles.items():
        lines.append(f"role {name} {span.start} {span.stop}\n")
    for node in sorted(layout.pool_membership):
        members = " ".join(str(m) for m in layout.pool_membership[node])
        lines.append(f"pool {node} {members}\n")
    if layout.norm is not None:
        lines.append(f"norm {layout.norm[0]:.17g} {layout.norm[1]:.17g}\n")
    _write_lines(destination, lines)


def read_layout(source: str | IO[str]) -> ModelLayout:
    lines = _read_lines(source)
    if not lines:
        raise FormatError("empty layout file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "layout" or not head[1].startswith("n="):
        raise FormatError(f"expected 'layout n=<N>' header, got {lines[0]!r}", line=1)
    try:
        n = int(head[1][2:])
    except ValueError:
        raise FormatError(f"bad node count {head[1]!r}", line=1) from None
    roles: dict[str, range] = {}
    membership: dict[int, tuple[int, ...]] = {}
    norm = None
    for number, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        keyword = parts[0]
        if keyword == "role":
            if len(parts) != 4:
                raise FormatError("expected 'role <name> <start> <stop>'", line=number)
            name = parts[1]
            if name in roles:
                raise FormatError(f"duplicate role {name!r}", line=number)
            try:
                roles[name] = range(int(parts[2]), int(parts[3]))
            except ValueError:
                raise FormatError(f"bad role bounds {parts[2]!r} {parts[3]!r}", line=number) from None
        elif keyword == "pool":
            try:
                node, members = int(parts[1]), tuple(int(p) for p in parts[2:])
            except (IndexError, ValueError):
                raise FormatError("expected 'pool <node> <members...>'", line=number) from None
            if node in membership:
                raise FormatError(f"duplicate pool node {node}", line=number)
            membership[node] = members
        elif keyword == "norm":
            if len(parts) != 3:
                raise FormatError("expected 'norm <scale> <shift>'", line=number)
            try:
                norm = (float(parts[1]), float(parts[2]))
            except ValueError:
                raise FormatError(f"bad norm values {parts[1:]!r}", line=number) from None
        else:
            raise FormatError(f"unknown line keyword {keyword!r}", line=number)
    try:
        return ModelLayout(n, roles, membership, norm)
    except DimensionError as exc:
        raise FormatError(str(exc)) from exc
