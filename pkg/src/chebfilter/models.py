"""Filter-learning node classifiers.

Decoupled models (chebbase, chebbase_k, gprgnn, bernnet, chebnet2) run a
2-layer MLP ``f_theta`` first and then propagate its logits with a learned
polynomial filter. gcn and chebnet interleave propagation with the
linear layers. Every forward pass is built from `autodiff` operations so
one backward call yields all parameter gradients.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .graph import Dataset
from .operators import (
    NORMALIZED_LAPLACIAN,
    RENORMALIZED_ADJACENCY,
    SCALED_LAPLACIAN,
    AffineOperator,
    build_operator,
)
from .poly import FilterCoefficients, cheb_interp_matrix

MODELS = ("mlp", "gcn", "chebnet", "chebbase", "chebbase_k", "gprgnn", "bernnet", "chebnet2")
PROPAGATION_MODELS = ("chebnet", "chebbase", "chebbase_k", "gprgnn", "bernnet", "chebnet2")


@dataclass(frozen=True)
class ModelConfig:
    model: str = "chebnet2"
    K: int = 10
    hidden: int = 64
    lr_linear: float = 0.01
    lr_prop: float = 0.01
    wd_linear: float = 0.0005
    wd_prop: float = 0.0005
    dropout_linear: float = 0.5
    dropout_prop: float = 0.5
    epochs: int = 1000
    patience: int = 200
    seed: int = 0
    extra_linear_after_prop: bool = False
    alpha: float = 0.1
    halve_first: bool = True
    lambda_max: float = 2.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model in PROPAGATION_MODELS and self.K < 1:
            raise ValueError(f"{self.model} needs K >= 1, got {self.K}")
        for name in ("lr_linear", "lr_prop", "wd_linear", "wd_prop"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("dropout_linear", "dropout_prop"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if self.hidden < 1 or self.epochs < 1:
            raise ValueError("hidden and epochs must be positive")
        if not 0 <= self.patience <= self.epochs:
            raise ValueError("patience must lie in [0, epochs]")

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ModelConfig":
        with Path(path).open() as fh:
            return cls.from_dict(json.load(fh))


def citation_defaults(model: str, **overrides) -> ModelConfig:
    """Hyperparameters used for the semi-supervised citation experiments."""
    base = {
        "mlp": dict(K=1, hidden=64),
        "gcn": dict(K=1, hidden=64),
        "chebnet": dict(K=2, hidden=32),
        "chebbase": dict(K=10, hidden=64),
        "chebbase_k": dict(K=10, hidden=64),
        "gprgnn": dict(K=10, hidden=64, alpha=0.1, wd_prop=0.0),
        "bernnet": dict(K=10, hidden=64),
        "chebnet2": dict(K=5, hidden=64, lr_prop=0.005),
    }[model]
    base.update(overrides)
    return ModelConfig(model=model, **base)


class Model:
    """Parameters plus a forward pass for one `ModelConfig` on one dataset."""

    def __init__(self, config: ModelConfig, dataset: Dataset, rng: np.random.Generator | None = None):
        self.config = config
        self.dataset = dataset
        self.features = ad.Tensor(dataset.features)
        self.num_classes = dataset.num_classes
        g = dataset.graph
        self.lap = build_operator(g, NORMALIZED_LAPLACIAN)
        self.scaled = build_operator(g, SCALED_LAPLACIAN, config.lambda_max)
        self.adj = build_operator(g, RENORMALIZED_ADJACENCY)
        rng = np.random.default_rng(config.seed) if rng is None else rng
        self.params: dict[str, ad.Tensor] = {}
        self.prop_names: list[str] = []
        self._init_params(rng)
        if config.model == "chebnet2":
            self._interp = cheb_interp_matrix(config.K, config.halve_first)

    # -- parameters ---------------------------------------------------------

    def _linear(self, name, fan_in, fan_out, rng):
        self.params[f"{name}.weight"] = ad.glorot(rng, fan_in, fan_out, f"{name}.weight")
        self.params[f"{name}.bias"] = ad.Tensor(np.zeros(fan_out), True, f"{name}.bias")

    def _prop(self, name, values):
        self.params[name] = ad.Tensor(values, True, name)
        self.prop_names.append(name)

    def _init_params(self, rng):
        cfg = self.config
        f, h, c, K = self.features.shape[1], cfg.hidden, self.num_classes, cfg.K
        if cfg.model == "chebnet":
            for k in range(K + 1):
                self.params[f"conv1.weight{k}"] = ad.glorot(rng, f, h, f"conv1.weight{k}")
            self.params["conv1.bias"] = ad.Tensor(np.zeros(h), True, "conv1.bias")
            for k in range(K + 1):
                self.params[f"conv2.weight{k}"] = ad.glorot(rng, h, c, f"conv2.weight{k}")
            self.params["conv2.bias"] = ad.Tensor(np.zeros(c), True, "conv2.bias")
            return
        self._linear("lin1", f, h, rng)
        self._linear("lin2", h, c, rng)
        if cfg.model in ("chebbase", "chebbase_k"):
            w = np.zeros(K + 1)
            w[0] = 1.0
            self._prop("coeffs", w)
        elif cfg.model == "gprgnn":
            w = cfg.alpha * (1.0 - cfg.alpha) ** np.arange(K + 1)
            w[-1] = (1.0 - cfg.alpha) ** K
            self._prop("coeffs", w)
        elif cfg.model == "bernnet":
            self._prop("coeffs", np.ones(K + 1))
        elif cfg.model == "chebnet2":
            self._prop("gamma", np.ones(K + 1))
        if cfg.extra_linear_after_prop and cfg.model in PROPAGATION_MODELS:
            self._linear("lin_out", c, c, rng)

    def linear_params(self) -> list:
        return [p for name, p in self.params.items() if name not in self.prop_names]

    def prop_params(self) -> list:
        return [self.params[name] for name in self.prop_names]

    def state(self) -> dict:
        return {name: p.values.copy() for name, p in self.params.items()}

    def load_state(self, state: dict):
        for name, values in state.items():
            self.params[name].values = np.array(values, dtype=np.float64).reshape(self.params[name].shape)

    # -- forward ------------------------------------------------------------

    def forward(self, training: bool = False, rng: np.random.Generator | None = None) -> ad.Tensor:
        cfg = self.config
        if cfg.model == "gcn":
            return forward_gcn(self, training, rng)
        if cfg.model == "chebnet":
            return forward_chebnet(self, training, rng)
        h = forward_mlp(self.features, self.params, cfg.dropout_linear, training, rng)
        if cfg.model == "mlp":
            return h
        h = ad.dropout(h, cfg.dropout_prop, rng, training)
        if cfg.model == "chebbase":
            out = forward_chebbase(self, h, decay="none")
        elif cfg.model == "chebbase_k":
            out = forward_chebbase(self, h, decay="inv_k")
        elif cfg.model == "gprgnn":
            out = forward_gprgnn(self, h)
        elif cfg.model == "bernnet":
            out = forward_bernnet(self, h)
        else:
            out = forward_chebnet2(self, h)
        if cfg.extra_linear_after_prop:
            out = ad.add_bias(ad.matmul(out, self.params["lin_out.weight"]), self.params["lin_out.bias"])
        return out

    def filter(self) -> FilterCoefficients | None:
        """The learned spectral filter, or None when it is implicit in weight matrices.

        Chebyshev filters are in the scaled-Laplacian variable, Bernstein in
        ``lambda - 1``, monomial in the renormalized-adjacency eigenvalue.
        """
        cfg = self.config
        if cfg.model == "mlp":
            return FilterCoefficients("chebyshev", [1.0])
        if cfg.model in ("gcn", "chebnet"):
            return None
        if cfg.model == "chebnet2":
            return FilterCoefficients("chebyshev", self.chebnet2_weights())
        w = self.params["coeffs"].values
        if cfg.model == "chebbase":
            return FilterCoefficients("chebyshev", w)
        if cfg.model == "chebbase_k":
            return FilterCoefficients("chebyshev", w * inv_k_scale(cfg.K))
        if cfg.model == "gprgnn":
            return FilterCoefficients("monomial", w)
        return FilterCoefficients("bernstein", np.maximum(w, 0.0))

    def chebnet2_weights(self) -> np.ndarray:
        return self._interp @ np.maximum(self.params["gamma"].values, 0.0)


def inv_k_scale(K: int) -> np.ndarray:
    s = np.ones(K + 1)
    s[1:] = 1.0 / np.arange(1, K + 1)
    return s


def _dense(x, params, name):
    return ad.add_bias(ad.matmul(x, params[f"{name}.weight"]), params[f"{name}.bias"])


def forward_mlp(x, params, dropout, training=False, rng=None) -> ad.Tensor:
    """Two linear layers with ReLU between and dropout on each layer's input."""
    h = ad.dropout(x, dropout, rng, training)
    h = ad.relu(_dense(h, params, "lin1"))
    h = ad.dropout(h, dropout, rng, training)
    return _dense(h, params, "lin2")


def forward_gcn(model: Model, training=False, rng=None) -> ad.Tensor:
    p, d = model.params, model.config.dropout_linear
    h = ad.dropout(model.features, d, rng, training)
    h = ad.add_bias(ad.graph_matvec(model.adj, ad.matmul(h, p["lin1.weight"])), p["lin1.bias"])
    h = ad.dropout(ad.relu(h), d, rng, training)
    return ad.add_bias(ad.graph_matvec(model.adj, ad.matmul(h, p["lin2.weight"])), p["lin2.bias"])


def cheb_series_matrix(op, terms) -> ad.Tensor:
    """``sum_k T_k(op) Z_k`` by Clenshaw's recurrence (K sparse products)."""
    K = len(terms) - 1
    if K == 0:
        return terms[0]
    b1 = terms[K]
    b2 = None
    for k in range(K - 1, 0, -1):
        nxt = ad.elementwise_add(terms[k], ad.scale(ad.graph_matvec(op, b1), 2.0))
        if b2 is not None:
            nxt = ad.elementwise_add(nxt, ad.scale(b2, -1.0))
        b1, b2 = nxt, b1
    out = ad.elementwise_add(terms[0], ad.graph_matvec(op, b1))
    if b2 is not None:
        out = ad.elementwise_add(out, ad.scale(b2, -1.0))
    return out


def forward_chebnet(model: Model, training=False, rng=None) -> ad.Tensor:
    """Two Chebyshev convolutions ``sum_k T_k(L^) X W_k + b``."""
    p, cfg = model.params, model.config
    h = ad.dropout(model.features, cfg.dropout_linear, rng, training)
    h = cheb_series_matrix(model.scaled, [ad.matmul(h, p[f"conv1.weight{k}"]) for k in range(cfg.K + 1)])
    h = ad.relu(ad.add_bias(h, p["conv1.bias"]))
    h = ad.dropout(h, cfg.dropout_linear, rng, training)
    h = cheb_series_matrix(model.scaled, [ad.matmul(h, p[f"conv2.weight{k}"]) for k in range(cfg.K + 1)])
    return ad.add_bias(h, p["conv2.bias"])


def cheb_terms(op, h, K) -> list:
    """``[T_0(op) h, ..., T_K(op) h]``."""
    terms = [h, ad.graph_matvec(op, h)]
    for _ in range(2, K + 1):
        nxt = ad.elementwise_add(ad.scale(ad.graph_matvec(op, terms[-1]), 2.0), ad.scale(terms[-2], -1.0))
        terms.append(nxt)
    return terms[: K + 1]


def forward_chebbase(model: Model, h, decay: str = "none") -> ad.Tensor:
    """``sum_k s_k w_k T_k(L^) h`` with ``s_k = 1`` or ``1/k`` (``s_0 = 1``)."""
    K = model.config.K
    w = model.params["coeffs"]
    if decay == "inv_k":
        w = ad.elementwise_mul(w, ad.Tensor(inv_k_scale(K)))
    elif decay != "none":
        raise ValueError(f"unknown decay {decay!r}")
    return ad.weighted_sum(w, cheb_terms(model.scaled, h, K))


def forward_gprgnn(model: Model, h) -> ad.Tensor:
    """``sum_k w_k P~^k h``."""
    terms = [h]
    for _ in range(model.config.K):
        terms.append(ad.graph_matvec(model.adj, terms[-1]))
    return ad.weighted_sum(model.params["coeffs"], terms)


def forward_bernnet(model: Model, h) -> ad.Tensor:
    """``sum_k relu(w_k) 2^-K C(K,k) (2I - L)^(K-k) L^k h``, O(K^2) sparse products."""
    K = model.config.K
    two_minus_l = AffineOperator(model.lap, 2.0, -1.0)
    powers = [h]  # (2I - L)^i h
    for _ in range(K):
        powers.append(ad.graph_matvec(two_minus_l, powers[-1]))
    terms = []
    for k in range(K + 1):
        t = powers[K - k]
        for _ in range(k):
            t = ad.graph_matvec(model.lap, t)
        terms.append(ad.scale(t, math.comb(K, k) / 2.0 ** K))
    return ad.weighted_sum(ad.relu(model.params["coeffs"]), terms)


def forward_chebnet2(model: Model, h) -> ad.Tensor:
    """Chebyshev-interpolation filter: node values ``relu(gamma_j)`` -> series weights."""
    w = ad.matmul(ad.Tensor(model._interp), ad.relu(model.params["gamma"]))
    return ad.weighted_sum(w, cheb_terms(model.scaled, h, model.config.K))
