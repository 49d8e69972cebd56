import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from coauthor import DrlParams

from .base import Decision

logger = logging.getLogger(__name__)

ENCODERS = ("paper", "agent", "network")
NUM_ACTIONS = 2


@dataclass(frozen=True)
class NetworkDims:
    paper_dim: int = 14
    agent_dim: int = 8
    network_dim: int = 5
    encoder_dim: int = 64
    hidden_dim: int = 128

    @classmethod
    def from_params(cls, drl: DrlParams) -> "NetworkDims":
        return cls(drl.paper_dim, drl.agent_dim, drl.network_dim, drl.encoder_dim, drl.hidden_dim)

    @property
    def inputs(self) -> Dict[str, int]:
        return {"paper": self.paper_dim, "agent": self.agent_dim, "network": self.network_dim}

    @property
    def state_dim(self) -> int:
        return self.paper_dim + self.agent_dim + self.network_dim

    def shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """
        Parameter names and shapes, in checkpoint order.
        """
        e, h = self.encoder_dim, self.hidden_dim
        shapes: List[Tuple[str, Tuple[int, ...]]] = []
        for name in ENCODERS:
            shapes += [
                (f"{name}.w1", (self.inputs[name], e)),
                (f"{name}.b1", (e,)),
                (f"{name}.w2", (e, e)),
                (f"{name}.b2", (e,)),
            ]
        shapes += [("trunk.w", (len(ENCODERS) * e, h)), ("trunk.b", (h,))]
        for d in Decision:
            shapes += [(f"head{int(d)}.w", (h, NUM_ACTIONS)), (f"head{int(d)}.b", (NUM_ACTIONS,))]
        return shapes


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class QNetwork:
    """
    Three feature encoders, a fused trunk and one two-action head per
    decision type. Without ``rng`` every parameter starts at zero.
    """

    def __init__(self, dims: NetworkDims, rng: Optional[np.random.Generator] = None) -> None:
        self.dims = dims
        self.params: Dict[str, np.ndarray] = {}
        for name, shape in dims.shapes():
            if rng is None or len(shape) == 1:
                self.params[name] = np.zeros(shape)
            else:
                # He init for hidden layers, plain 1/fan_in for the heads
                gain = 1.0 if name.startswith("head") else 2.0
                self.params[name] = rng.normal(0.0, np.sqrt(gain / shape[0]), size=shape)

    @classmethod
    def from_params(cls, drl: DrlParams, rng: Optional[np.random.Generator] = None) -> "QNetwork":
        return cls(NetworkDims.from_params(drl), rng)

    def copy(self) -> "QNetwork":
        other = QNetwork(self.dims)
        other.load_state(self)
        return other

    def load_state(self, other: "QNetwork") -> None:
        if other.dims != self.dims:
            raise ValueError(f"cannot copy {other.dims} into {self.dims}")
        for name, value in other.params.items():
            self.params[name] = value.copy()

    def _split(self, states: np.ndarray) -> Dict[str, np.ndarray]:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.dims.state_dim:
            raise ValueError(f"expected states of width {self.dims.state_dim}, got {states.shape[1]}")
        p, a = self.dims.paper_dim, self.dims.paper_dim + self.dims.agent_dim
        return {"paper": states[:, :p], "agent": states[:, p:a], "network": states[:, a:]}

    def forward(self, states: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """
        Action values of every head, shape (batch, decisions, actions), plus
        the activations needed by :meth:`backward`.
        """
        P = self.params
        cache: Dict[str, np.ndarray] = {}
        encoded = []
        for name, x in self._split(states).items():
            z1 = x @ P[f"{name}.w1"] + P[f"{name}.b1"]
            h1 = _relu(z1)
            z2 = h1 @ P[f"{name}.w2"] + P[f"{name}.b2"]
            cache[f"{name}.x"], cache[f"{name}.z1"], cache[f"{name}.h1"], cache[f"{name}.z2"] = x, z1, h1, z2
            encoded.append(_relu(z2))
        fused = np.concatenate(encoded, axis=1)
        zt = fused @ P["trunk.w"] + P["trunk.b"]
        ht = _relu(zt)
        cache["fused"], cache["trunk.z"], cache["trunk.h"] = fused, zt, ht
        q = np.stack([ht @ P[f"head{int(d)}.w"] + P[f"head{int(d)}.b"] for d in Decision], axis=1)
        return q, cache

    def q_values(self, state: np.ndarray, decision: Decision) -> np.ndarray:
        q, _ = self.forward(state)
        return q[0, int(decision)]

    def backward(self, dq: np.ndarray, cache: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """
        Gradients of a scalar loss given its gradient ``dq`` with respect to
        the output of :meth:`forward`.
        """
        P = self.params
        grads: Dict[str, np.ndarray] = {}
        ht = cache["trunk.h"]
        dht = np.zeros_like(ht)
        for d in Decision:
            g = dq[:, int(d), :]
            grads[f"head{int(d)}.w"] = ht.T @ g
            grads[f"head{int(d)}.b"] = g.sum(axis=0)
            dht += g @ P[f"head{int(d)}.w"].T
        dzt = dht * (cache["trunk.z"] > 0)
        grads["trunk.w"] = cache["fused"].T @ dzt
        grads["trunk.b"] = dzt.sum(axis=0)
        dfused = dzt @ P["trunk.w"].T

        e = self.dims.encoder_dim
        for k, name in enumerate(ENCODERS):
            dz2 = dfused[:, k * e:(k + 1) * e] * (cache[f"{name}.z2"] > 0)
            grads[f"{name}.w2"] = cache[f"{name}.h1"].T @ dz2
            grads[f"{name}.b2"] = dz2.sum(axis=0)
            dz1 = (dz2 @ P[f"{name}.w2"].T) * (cache[f"{name}.z1"] > 0)
            grads[f"{name}.w1"] = cache[f"{name}.x"].T @ dz1
            grads[f"{name}.b1"] = dz1.sum(axis=0)
        return grads

    def loss_and_grads(self, states: np.ndarray, decisions: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        Mean squared Bellman error on the selected head and action of each
        sample; other heads receive no gradient.
        """
        q, cache = self.forward(states)
        rows = np.arange(q.shape[0])
        decisions = np.asarray(decisions, dtype=int)
        actions = np.asarray(actions, dtype=int)
        error = q[rows, decisions, actions] - np.asarray(targets, dtype=float)
        dq = np.zeros_like(q)
        dq[rows, decisions, actions] = 2.0 * error / q.shape[0]
        return float(np.mean(error ** 2)), self.backward(dq, cache)


class Adam:
    def __init__(self, params: Dict[str, np.ndarray], learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.__m = {k: np.zeros_like(v) for k, v in params.items()}
        self.__v = {k: np.zeros_like(v) for k, v in params.items()}

    @classmethod
    def from_params(cls, params: Dict[str, np.ndarray], drl: DrlParams) -> "Adam":
        return cls(params, drl.learning_rate, drl.adam_beta1, drl.adam_beta2, drl.adam_eps)

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m, v = self.__m[name], self.__v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


def act(qnet: QNetwork, state: np.ndarray, decision: Decision, epsilon: float,
        rng: np.random.Generator) -> int:
    """
    Epsilon-greedy action; ties go to action 0.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(NUM_ACTIONS))
    q = qnet.q_values(state, decision)
    return 1 if q[1] > q[0] else 0


def double_dqn_targets(rewards: np.ndarray, terminals: np.ndarray, decisions: np.ndarray,
                       online_next: np.ndarray, target_next: np.ndarray, gamma: float) -> np.ndarray:
    """
    y = r + gamma * Q_target(s', argmax_a Q_online(s', a)) on each sample's
    head; terminal samples keep y = r.
    """
    rows = np.arange(len(rewards))
    decisions = np.asarray(decisions, dtype=int)
    best = np.argmax(online_next[rows, decisions], axis=1)
    bootstrap = target_next[rows, decisions, best]
    alive = 1.0 - np.asarray(terminals, dtype=float)
    return np.asarray(rewards, dtype=float) + gamma * alive * bootstrap
