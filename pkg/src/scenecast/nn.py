"""Small dense networks with explicit backprop and Adam.

Everything is float64 numpy.  Gradients are represented as a list of
(dW, db) pairs, one per layer, summed over the batch: the caller folds any
1/B factor into the output gradient it passes to backward(), which keeps
finite-difference checks exact.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import InvalidParameterError, InvalidStateError, NumericError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class MLP:
    """Fully connected net: ReLU hidden layers, linear output.

    relu_output=True also rectifies the last layer, which is how the dueling
    trunk feeds its heads.  Weights start uniform in +-1/sqrt(fan_in),
    biases at zero.  Each instance carries its own Adam moments.
    """

    def __init__(self, layer_sizes, seed=0, relu_output=False):
        layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise InvalidParameterError(f"bad layer sizes {layer_sizes}")
        self.layer_sizes = layer_sizes
        self.relu_output = bool(relu_output)
        rng = np.random.default_rng(seed)
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._m = [np.zeros_like(w) for w in self.weights] + \
                  [np.zeros_like(b) for b in self.biases]
        self._v = [np.zeros_like(w) for w in self.weights] + \
                  [np.zeros_like(b) for b in self.biases]
        self.step_count = 0
        self._version = 0  # bumped on every parameter change; guards caches

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    def num_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def forward(self, x):
        """Returns (output, cache).  x is (features,) or (batch, features)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise InvalidParameterError(
                f"input width {x.shape} incompatible with {self.input_dim}"
            )
        activations = [x]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last or self.relu_output:
                h = np.maximum(h, 0.0)
            activations.append(h)
        out = h[0] if single else h
        cache = {"activations": activations, "single": single,
                 "version": self._version}
        return out, cache

    def backward(self, cache, grad_out):
        """Chain rule back through a cached forward pass.

        Returns (grads, grad_input) with grads a list of (dW, db) per layer.
        """
        if cache["version"] != self._version:
            raise InvalidStateError("cache is stale: parameters changed "
                                    "since the forward pass")
        acts = cache["activations"]
        grad = np.asarray(grad_out, dtype=np.float64)
        if cache["single"]:
            grad = grad[None, :]
        if grad.shape != acts[-1].shape:
            raise InvalidParameterError(
                f"grad_out shape {grad.shape} != output shape {acts[-1].shape}"
            )
        if self.relu_output:
            grad = grad * (acts[-1] > 0.0)
        grads = [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[k]
            grads[k] = (a_prev.T @ grad, grad.sum(axis=0))
            if k > 0:
                grad = grad @ self.weights[k].T
                grad = grad * (acts[k] > 0.0)  # hidden layers are ReLU
            else:
                grad = grad @ self.weights[k].T
        grad_input = grad[0] if cache["single"] else grad
        return grads, grad_input

    def adam_step(self, grads, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2,
                  eps=ADAM_EPS):
        """One bias-corrected Adam update from a (dW, db) list."""
        if len(grads) != len(self.weights):
            raise InvalidParameterError("gradient list length mismatch")
        flat = []
        for (dw, db), w, b in zip(grads, self.weights, self.biases):
            if dw.shape != w.shape or db.shape != b.shape:
                raise InvalidParameterError(
                    f"gradient shapes {dw.shape}/{db.shape} do not match "
                    f"parameters {w.shape}/{b.shape}"
                )
            flat.append(dw)
            flat.append(db)
        for g in flat:
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        params = self.weights + self.biases
        # moments are stored weights-first then biases; rebuild flat order
        ordered = []
        for k in range(len(self.weights)):
            ordered.append((self.weights[k], grads[k][0], k))
            ordered.append((self.biases[k], grads[k][1], len(self.weights) + k))
        for param, g, slot in ordered:
            m = self._m[slot]
            v = self._v[slot]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * (g * g)
            param -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        self._version += 1

    def sync_from(self, other: "MLP"):
        """Copy parameters (not Adam state) from another net of equal shape."""
        if other.layer_sizes != self.layer_sizes:
            raise InvalidParameterError(
                f"shape mismatch: {other.layer_sizes} vs {self.layer_sizes}"
            )
        for w, b, ow, ob in zip(self.weights, self.biases,
                                other.weights, other.biases):
            w[:] = ow
            b[:] = ob
        self._version += 1

    def copy(self) -> "MLP":
        clone = MLP(self.layer_sizes, seed=0, relu_output=self.relu_output)
        clone.sync_from(self)
        return clone

    def state_dict(self):
        d = {"layer_sizes": np.asarray(self.layer_sizes, dtype=np.int64),
             "relu_output": np.asarray(int(self.relu_output)),
             "step_count": np.asarray(self.step_count, dtype=np.int64)}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            d[f"w{k}"] = w
            d[f"b{k}"] = b
        for slot, (m, v) in enumerate(zip(self._m, self._v)):
            d[f"adam_m{slot}"] = m
            d[f"adam_v{slot}"] = v
        return d

    def load_state_dict(self, d):
        sizes = tuple(int(s) for s in np.asarray(d["layer_sizes"]).ravel())
        if sizes != self.layer_sizes:
            raise InvalidParameterError(
                f"checkpoint layer sizes {sizes} do not match "
                f"network {self.layer_sizes}"
            )
        for k in range(len(self.weights)):
            self.weights[k][:] = d[f"w{k}"]
            self.biases[k][:] = d[f"b{k}"]
        for slot in range(len(self._m)):
            self._m[slot][:] = d[f"adam_m{slot}"]
            self._v[slot][:] = d[f"adam_v{slot}"]
        self.step_count = int(d["step_count"])
        self.relu_output = bool(int(np.asarray(d["relu_output"])))
        self._version += 1

    @classmethod
    def from_state_dict(cls, d) -> "MLP":
        sizes = tuple(int(s) for s in np.asarray(d["layer_sizes"]).ravel())
        net = cls(sizes, seed=0, relu_output=bool(int(np.asarray(d["relu_output"]))))
        net.load_state_dict(d)
        return net


def dueling_combine(value, advantages):
    """Q = V + (A - mean(A)) along the last axis."""
    value = np.asarray(value, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    return value + advantages - advantages.mean(axis=-1, keepdims=True)


class DuelingMLP:
    """Shared ReLU trunk feeding separate value and advantage heads.

    Presents the same forward/backward/adam_step surface as MLP so the
    value-based agents can swap architectures freely.
    """

    def __init__(self, input_dim, trunk_hidden, head_hidden, num_actions,
                 seed=0):
        trunk_hidden = tuple(int(h) for h in trunk_hidden)
        head_hidden = tuple(int(h) for h in head_hidden)
        if not trunk_hidden:
            raise InvalidParameterError("dueling trunk needs at least one layer")
        self.trunk = MLP((input_dim,) + trunk_hidden, seed=seed,
                         relu_output=True)
        feat = trunk_hidden[-1]
        self.value_head = MLP((feat,) + head_hidden + (1,), seed=seed + 1)
        self.adv_head = MLP((feat,) + head_hidden + (num_actions,),
                            seed=seed + 2)
        self.layer_sizes = (input_dim,) + trunk_hidden + head_hidden + (num_actions,)

    @property
    def input_dim(self):
        return self.trunk.input_dim

    @property
    def output_dim(self):
        return self.adv_head.output_dim

    def num_params(self):
        return (self.trunk.num_params() + self.value_head.num_params()
                + self.adv_head.num_params())

    def forward(self, x):
        feat, tc = self.trunk.forward(x)
        value, vc = self.value_head.forward(feat)
        adv, ac = self.adv_head.forward(feat)
        q = dueling_combine(value, adv)
        cache = {"trunk": tc, "value": vc, "adv": ac, "single": tc["single"]}
        return q, cache

    def backward(self, cache, grad_out):
        grad = np.asarray(grad_out, dtype=np.float64)
        if cache["single"]:
            grad = grad[None, :]
        # Q_a = V + A_a - mean(A): dV = sum_a g_a, dA_a = g_a - mean_a(g)
        grad_v = grad.sum(axis=-1, keepdims=True)
        grad_a = grad - grad.mean(axis=-1, keepdims=True)
        if cache["single"]:
            grad_v, grad_a = grad_v[0], grad_a[0]
        v_grads, v_gin = self.value_head.backward(cache["value"], grad_v)
        a_grads, a_gin = self.adv_head.backward(cache["adv"], grad_a)
        t_grads, t_gin = self.trunk.backward(cache["trunk"], v_gin + a_gin)
        grads = {"trunk": t_grads, "value": v_grads, "adv": a_grads}
        return grads, t_gin

    def adam_step(self, grads, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2,
                  eps=ADAM_EPS):
        self.trunk.adam_step(grads["trunk"], lr, beta1, beta2, eps)
        self.value_head.adam_step(grads["value"], lr, beta1, beta2, eps)
        self.adv_head.adam_step(grads["adv"], lr, beta1, beta2, eps)

    def sync_from(self, other: "DuelingMLP"):
        self.trunk.sync_from(other.trunk)
        self.value_head.sync_from(other.value_head)
        self.adv_head.sync_from(other.adv_head)

    def copy(self) -> "DuelingMLP":
        clone = DuelingMLP(
            self.trunk.layer_sizes[0], self.trunk.layer_sizes[1:],
            self.value_head.layer_sizes[1:-1], self.adv_head.layer_sizes[-1],
        )
        clone.sync_from(self)
        return clone

    def state_dict(self):
        out = {}
        for prefix, net in (("trunk.", self.trunk), ("value.", self.value_head),
                            ("adv.", self.adv_head)):
            for key, arr in net.state_dict().items():
                out[prefix + key] = arr
        return out

    def load_state_dict(self, d):
        for prefix, net in (("trunk.", self.trunk), ("value.", self.value_head),
                            ("adv.", self.adv_head)):
            sub = {k[len(prefix):]: v for k, v in d.items()
                   if k.startswith(prefix)}
            net.load_state_dict(sub)


# ---------------------------------------------------------------------------
# categorical helpers


def softmax_and_entropy(logits):
    """Stable softmax with natural-log entropy.

    Works on (A,) or (batch, A); entropy is a scalar or (batch,).
    """
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=-1, keepdims=True)
    # 0 * log(0) counts as 0
    logp = np.where(probs > 0.0, np.log(np.maximum(probs, 1e-300)), 0.0)
    entropy = -(probs * logp).sum(axis=-1)
    return probs, entropy


def log_softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def categorical_kl(p_probs, q_probs):
    """KL(p || q) for categorical distributions along the last axis."""
    p = np.asarray(p_probs, dtype=np.float64)
    q = np.asarray(q_probs, dtype=np.float64)
    mask = p > 0.0
    ratio = np.where(mask, p / np.maximum(q, 1e-300), 1.0)
    return np.where(mask, p * np.log(ratio), 0.0).sum(axis=-1)


def global_norm(arrays):
    total = 0.0
    for a in arrays:
        total += float(np.sum(a * a))
    return math.sqrt(total)


def flatten_grads(grads):
    """Flatten nested gradient containers (lists/dicts of (dW, db))."""
    if isinstance(grads, dict):
        out = []
        for sub in grads.values():
            out.extend(flatten_grads(sub))
        return out
    out = []
    for dw, db in grads:
        out.append(dw)
        out.append(db)
    return out


def clip_gradients(grads, max_norm):
    """Scale a gradient container in place so its global norm <= max_norm.

    Returns the pre-clip norm.
    """
    arrays = flatten_grads(grads)
    norm = global_norm(arrays)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for a in arrays:
            a *= scale
    return norm


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = 1


def save_checkpoint(path, parts, meta=None):
    """Write named networks plus JSON metadata to one npz file.

    parts maps name -> object with state_dict() (MLP or DuelingMLP).
    """
    arrays = {}
    kinds = {}
    for name, net in parts.items():
        kinds[name] = type(net).__name__
        for key, arr in net.state_dict().items():
            arrays[f"{name}:{key}"] = arr
    header = {"format": CHECKPOINT_FORMAT, "kinds": kinds, "meta": meta or {}}
    arrays["__header__"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Read back (part_state_dicts, kinds, meta) from save_checkpoint."""
    with np.load(path) as data:
        if "__header__" not in data:
            raise InvalidParameterError(f"{path} is not a checkpoint file")
        header = json.loads(bytes(data["__header__"]).decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise InvalidParameterError(
                f"unsupported checkpoint format {header.get('format')!r}"
            )
        parts = {}
        for full_key in data.files:
            if full_key == "__header__":
                continue
            name, key = full_key.split(":", 1)
            parts.setdefault(name, {})[key] = data[full_key]
    return parts, header["kinds"], header["meta"]
