"""Classical baseline, dressed quantum circuit and SEQUENT model compositions.

Every model exposes its trainable scalars through :meth:`parameters`, an
ordered mapping of name to array.  Names are split into two disjoint
groups: classical weights (``theta``) and circuit angles (``phi``).
``trainable_names`` lists what the optimizer may touch in the model's
current mode; frozen names are never written.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .ansatz import CircuitConfig, QuantumParams, vqc_evaluate
from .exceptions import ConfigurationError
from .neural import LOSSES, Activation, DenseLayer, dense_backward, dense_forward
from .rng import make_rng

PHI = "phi"


def _check_batch(x, n_features: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != n_features:
        raise ConfigurationError(f"expected {n_features} features, got shape {x.shape}")
    return x


def _layer_params(prefix: str, layer: DenseLayer) -> dict:
    return {f"{prefix}.weights": layer.weights, f"{prefix}.bias": layer.bias}


class _Model:
    kind: str

    def parameters(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def trainable_names(self) -> list[str]:
        raise NotImplementedError

    def theta_names(self) -> list[str]:
        return [name for name in self.parameters() if name != PHI]

    def phi_names(self) -> list[str]:
        return [name for name in self.parameters() if name == PHI]

    def get_vector(self, names) -> np.ndarray:
        params = self.parameters()
        if not names:
            return np.zeros(0)
        return np.concatenate([params[name].ravel() for name in names])

    def set_vector(self, names, vector) -> None:
        params = self.parameters()
        offset = 0
        for name in names:
            target = params[name]
            target[...] = np.reshape(vector[offset:offset + target.size], target.shape)
            offset += target.size
        if offset != len(vector):
            raise ConfigurationError(f"vector has {len(vector)} entries, expected {offset}")

    def theta(self) -> np.ndarray:
        return self.get_vector(self.theta_names())

    def phi(self) -> np.ndarray:
        return self.get_vector(self.phi_names())

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.forward(x), axis=-1)

    def loss_and_grads(self, x, y, loss: str = "cross_entropy"):
        """Per-sample losses, logits and batch-mean gradients of trainable parameters."""
        x = _check_batch(x, self.n_features)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        yb = np.atleast_1d(np.asarray(y))
        logits, cache = self._forward_cache(xb)
        losses, upstream = LOSSES[loss](logits, yb)
        grads = self._backward(xb, cache, upstream / xb.shape[0])
        if single:
            return losses[0], logits[0], grads
        return losses, logits, grads


@dataclass
class ClassicalBaseline(_Model):
    hidden: DenseLayer
    output: DenseLayer
    kind: str = field(default="classical", init=False)

    @classmethod
    def build(cls, n_features: int, n_classes: int, hidden: int, rng: np.random.Generator):
        return cls(
            DenseLayer.initialize(n_features, hidden, Activation.TANH, rng),
            DenseLayer.initialize(hidden, n_classes, Activation.IDENTITY, rng),
        )

    @property
    def n_features(self) -> int:
        return self.hidden.in_dim

    @property
    def n_classes(self) -> int:
        return self.output.out_dim

    def parameters(self):
        return {**_layer_params("hidden", self.hidden), **_layer_params("output", self.output)}

    def trainable_names(self):
        return list(self.parameters())

    def forward(self, x):
        x = _check_batch(x, self.n_features)
        return dense_forward(self.output, dense_forward(self.hidden, x))

    def _forward_cache(self, x):
        h = dense_forward(self.hidden, x)
        return dense_forward(self.output, h), h

    def _backward(self, x, h, upstream):
        gw2, gb2, gh = dense_backward(self.output, h, upstream)
        gw1, gb1, _ = dense_backward(self.hidden, x, gh)
        return {"hidden.weights": gw1, "hidden.bias": gb1, "output.weights": gw2, "output.bias": gb2}


@dataclass
class QuantumBlock:
    """The variational circuit as a differentiable block."""

    circuit: CircuitConfig
    params: QuantumParams

    def __post_init__(self):
        self.params.check(self.circuit)

    @property
    def trainable(self) -> bool:
        return True

    def evaluate(self, z, *, wrt_params: bool, wrt_inputs: bool):
        return vqc_evaluate(z, self.params, self.circuit, wrt_params=wrt_params, wrt_inputs=wrt_inputs)


@dataclass
class IdentityBlock:
    """Test-only stand-in for the circuit: returns its input unchanged."""

    width: int

    @property
    def trainable(self) -> bool:
        return False

    def evaluate(self, z, *, wrt_params: bool, wrt_inputs: bool):
        z = np.asarray(z, dtype=np.float64)
        jac = np.broadcast_to(np.eye(self.width), z.shape[:-1] + (self.width, self.width)) if wrt_inputs else None
        return z, None, jac


def _chain_phi(upstream: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # upstream (batch, sigma), grad (batch, sigma, depth, eta)
    return np.einsum("bk,bkln->ln", upstream, grad)


def _chain_inputs(upstream: np.ndarray, jac: np.ndarray) -> np.ndarray:
    return np.einsum("bk,bkq->bq", upstream, jac)


@dataclass
class DQCModel(_Model):
    """Classical pre-layer, circuit measuring every qubit, classical post-layer."""

    pre: DenseLayer
    block: QuantumBlock | IdentityBlock
    post: DenseLayer
    kind: str = field(default="dqc", init=False)

    def __post_init__(self):
        width = self.pre.out_dim
        if self.post.in_dim != width:
            raise ConfigurationError("pre.out_dim must equal post.in_dim")
        if isinstance(self.block, QuantumBlock):
            c = self.block.circuit
            if c.num_outputs != c.num_qubits:
                raise ConfigurationError("a dressed circuit measures every qubit (num_outputs == num_qubits)")
            if c.num_qubits != width:
                raise ConfigurationError("num_qubits must equal the pre-layer width")
            if c.num_qubits < self.post.out_dim:
                raise ConfigurationError(
                    f"{self.post.out_dim} classes need at least as many qubits, got {c.num_qubits}"
                )

    @classmethod
    def build(cls, n_features: int, n_classes: int, circuit: CircuitConfig, rng: np.random.Generator):
        eta = circuit.num_qubits
        pre = DenseLayer.initialize(n_features, eta, Activation.SCALED_TANH, rng)
        post = DenseLayer.initialize(eta, n_classes, Activation.IDENTITY, rng)
        return cls(pre, QuantumBlock(circuit, QuantumParams.initialize(circuit, rng)), post)

    @property
    def circuit(self) -> CircuitConfig:
        return self.block.circuit

    @property
    def quantum(self) -> QuantumParams:
        return self.block.params

    @property
    def n_features(self) -> int:
        return self.pre.in_dim

    @property
    def n_classes(self) -> int:
        return self.post.out_dim

    def parameters(self):
        params = _layer_params("pre", self.pre)
        if self.block.trainable:
            params[PHI] = self.block.params.angles
        params.update(_layer_params("post", self.post))
        return params

    def trainable_names(self):
        return list(self.parameters())

    def forward(self, x):
        x = _check_batch(x, self.n_features)
        z = dense_forward(self.pre, x)
        q = self.block.evaluate(z, wrt_params=False, wrt_inputs=False)[0]
        return dense_forward(self.post, q)

    def _forward_cache(self, x):
        z = dense_forward(self.pre, x)
        q, grad, jac = self.block.evaluate(z, wrt_params=self.block.trainable, wrt_inputs=True)
        return dense_forward(self.post, q), (z, q, grad, jac)

    def _backward(self, x, cache, upstream):
        z, q, grad, jac = cache
        gw_post, gb_post, gq = dense_backward(self.post, q, upstream)
        gw_pre, gb_pre, _ = dense_backward(self.pre, x, _chain_inputs(gq, jac))
        grads = {"pre.weights": gw_pre, "pre.bias": gb_pre}
        if self.block.trainable:
            grads[PHI] = _chain_phi(gq, grad)
        grads.update({"post.weights": gw_post, "post.bias": gb_post})
        return grads


@dataclass
class SurrogateHead:
    layer: DenseLayer


@dataclass
class QuantumHead:
    block: QuantumBlock


@dataclass
class SequentModel(_Model):
    """Compression layer followed by a surrogate layer, later by a circuit."""

    compression: DenseLayer
    head: SurrogateHead | QuantumHead
    frozen_classical: bool = False
    n_classes: int = None
    kind: str = field(default="sequent", init=False)

    def __post_init__(self):
        eta = self.compression.out_dim
        if isinstance(self.head, SurrogateHead):
            if self.head.layer.in_dim != eta:
                raise ConfigurationError("surrogate input width must equal the compression width")
            if self.n_classes is None:
                self.n_classes = self.head.layer.out_dim
        else:
            c = self.head.block.circuit
            if c.num_qubits != eta:
                raise ConfigurationError("num_qubits must equal the compression width")
            if self.n_classes is None:
                self.n_classes = c.num_outputs
        if self.n_classes > eta:
            raise ConfigurationError(f"{self.n_classes} classes need at least as many qubits, got {eta}")

    @classmethod
    def build(cls, n_features: int, n_classes: int, num_qubits: int, rng: np.random.Generator):
        compression = DenseLayer.initialize(n_features, num_qubits, Activation.SCALED_TANH, rng)
        surrogate = DenseLayer.initialize(num_qubits, n_classes, Activation.IDENTITY, rng)
        return cls(compression, SurrogateHead(surrogate), n_classes=n_classes)

    @property
    def mode(self) -> str:
        return "surrogate" if isinstance(self.head, SurrogateHead) else "quantum"

    @property
    def n_features(self) -> int:
        return self.compression.in_dim

    def parameters(self):
        params = _layer_params("compression", self.compression)
        if isinstance(self.head, SurrogateHead):
            params.update(_layer_params("surrogate", self.head.layer))
        else:
            params[PHI] = self.head.block.params.angles
        return params

    def trainable_names(self):
        names = list(self.parameters())
        if self.frozen_classical:
            names = [n for n in names if n == PHI]
        return names

    def forward(self, x):
        x = _check_batch(x, self.n_features)
        z = dense_forward(self.compression, x)
        if isinstance(self.head, SurrogateHead):
            return dense_forward(self.head.layer, z)
        return self.head.block.evaluate(z, wrt_params=False, wrt_inputs=False)[0]

    def _forward_cache(self, x):
        z = dense_forward(self.compression, x)
        if isinstance(self.head, SurrogateHead):
            return dense_forward(self.head.layer, z), (z, None, None)
        out, grad, jac = self.head.block.evaluate(z, wrt_params=True, wrt_inputs=not self.frozen_classical)
        return out, (z, grad, jac)

    def _backward(self, x, cache, upstream):
        z, grad, jac = cache
        grads = {}
        if isinstance(self.head, SurrogateHead):
            gw, gb, gz = dense_backward(self.head.layer, z, upstream)
            grads = {"surrogate.weights": gw, "surrogate.bias": gb}
        else:
            grads[PHI] = _chain_phi(upstream, grad)
            gz = None if self.frozen_classical else _chain_inputs(upstream, jac)
        if not self.frozen_classical:
            gw, gb, _ = dense_backward(self.compression, x, gz)
            grads = {"compression.weights": gw, "compression.bias": gb, **grads}
        return grads


def forward(model, x) -> np.ndarray:
    return model.forward(x)


def backward(model, x, target, loss: str = "cross_entropy") -> dict[str, np.ndarray]:
    """Gradients of the (batch-mean) loss for every trainable parameter."""
    return model.loss_and_grads(x, target, loss)[2]


def identity_collapse_check(pre: DenseLayer, post: DenseLayer, samples) -> float:
    """Max |difference| between a DQC with an identity circuit and ``post(pre(x))``."""
    if pre.out_dim != post.in_dim:
        raise ConfigurationError(f"pre.out_dim={pre.out_dim} does not match post.in_dim={post.in_dim}")
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    stub = DQCModel(pre, IdentityBlock(pre.out_dim), post)
    two_layer = ClassicalBaseline(pre, post)
    return float(np.max(np.abs(stub.forward(samples) - two_layer.forward(samples))))


def swap_surrogate_for_vqc(model: SequentModel, circuit: CircuitConfig, seed) -> SequentModel:
    """Replace the surrogate layer by a freshly initialized circuit and freeze theta."""
    if not isinstance(model.head, SurrogateHead):
        raise ConfigurationError("model already has a quantum head")
    surrogate = model.head.layer
    if circuit.num_outputs != surrogate.out_dim:
        raise ConfigurationError(
            f"circuit measures {circuit.num_outputs} qubits, surrogate has {surrogate.out_dim} outputs"
        )
    if circuit.num_qubits != model.compression.out_dim:
        raise ConfigurationError(
            f"circuit has {circuit.num_qubits} qubits, compression has {model.compression.out_dim} outputs"
        )
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, "quantum-init")
    head = QuantumHead(QuantumBlock(circuit, QuantumParams.initialize(circuit, rng)))
    return SequentModel(model.compression.copy(), head, frozen_classical=True, n_classes=model.n_classes)


def digest(vector: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(vector, dtype="<f8").tobytes()).hexdigest()


def theta_digest(model) -> str:
    return digest(model.theta())


# -- snapshots --------------------------------------------------------------

SNAPSHOT_FORMAT = "sequent-snapshot/1"


def model_to_dict(model, *, seed=None, extra: dict | None = None) -> dict:
    """JSON-ready snapshot; floats are emitted with ``repr`` so they round-trip exactly."""
    arch = {"n_features": model.n_features, "n_classes": model.n_classes}
    mode = {}
    if isinstance(model, ClassicalBaseline):
        arch["hidden"] = model.hidden.out_dim
    elif isinstance(model, DQCModel):
        arch["circuit"] = model.circuit.to_dict()
    else:
        arch["num_qubits"] = model.compression.out_dim
        mode = {"head": model.mode, "frozen_classical": model.frozen_classical}
        if model.mode == "quantum":
            arch["circuit"] = model.head.block.circuit.to_dict()
    snap = {
        "format": SNAPSHOT_FORMAT,
        "kind": model.kind,
        "architecture": arch,
        "mode": mode,
        "theta_names": model.theta_names(),
        "theta": [float(v) for v in model.theta()],
        "phi": [float(v) for v in model.phi()],
        "seed": seed,
    }
    if extra:
        snap.update(extra)
    return snap


def model_from_dict(snap: dict):
    try:
        if snap.get("format") != SNAPSHOT_FORMAT:
            raise ConfigurationError(f"unsupported snapshot format {snap.get('format')!r}")
        arch = snap["architecture"]
        n, k = int(arch["n_features"]), int(arch["n_classes"])
        rng = make_rng(0, "snapshot")  # placeholder values, overwritten below
        kind = snap["kind"]
        if kind == "classical":
            model = ClassicalBaseline.build(n, k, int(arch["hidden"]), rng)
        elif kind == "dqc":
            model = DQCModel.build(n, k, CircuitConfig(**arch["circuit"]), rng)
        elif kind == "sequent":
            model = SequentModel.build(n, k, int(arch["num_qubits"]), rng)
            if snap["mode"]["head"] == "quantum":
                model = swap_surrogate_for_vqc(model, CircuitConfig(**arch["circuit"]), rng)
            model.frozen_classical = bool(snap["mode"]["frozen_classical"])
        else:
            raise ConfigurationError(f"unknown model kind {kind!r}")
        theta = np.asarray(snap["theta"], dtype=np.float64)
        phi = np.asarray(snap["phi"], dtype=np.float64)
        if list(snap.get("theta_names", model.theta_names())) != model.theta_names():
            raise ConfigurationError("snapshot parameter layout does not match its architecture")
        model.set_vector(model.theta_names(), theta)
        model.set_vector(model.phi_names(), phi)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"corrupt snapshot: {exc}") from exc
    return model
