"""Group-relative policy optimization on a finite-vocabulary softmax policy.

The policy holds one row of logits per question; each column is a complete
candidate response.  Because the support is finite, the KL term and all
gradients are exact.  One optimization step is taken per sampled group, so
the "old" policy is always the policy that drew the samples.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, GroupTooSmallError, SupportMismatchError
from .qa_gen import LETTERS, QAPair
from .response import render_response
from .rewards import RewardConfig, reward_total

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupScores:
    group_size: int
    rewards: np.ndarray
    advantages: np.ndarray


@dataclass
class GrpoConfig:
    epsilon: float = 0.2
    beta: float = 0.04
    learning_rate: float = 0.05
    iterations: int = 500
    seed: int = 0
    group_size: int = 8
    temperature: float = 1.0
    max_questions: int = 64

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon: must be > 0")
        if self.beta < 0:
            raise ConfigError("beta: must be >= 0")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate: must be >= 0")
        if self.iterations < 0:
            raise ConfigError("iterations: must be >= 0")
        if self.group_size < 2:
            raise ConfigError("group_size: must be >= 2")
        if not self.temperature > 0:
            raise ConfigError("temperature: must be > 0")
        if self.max_questions < 1:
            raise ConfigError("max_questions: must be >= 1")


def compute_advantages(rewards: Sequence[float]) -> GroupScores:
    """Standardize rewards within a group (population std); constant groups get zeros."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise GroupTooSmallError("a group needs at least two rewards")
    # offsetting by the minimum first makes a representable shift r + c give
    # bit-identical advantages
    base = r - r.min()
    centered = base - base.mean()
    std = np.sqrt(np.mean(centered ** 2))
    # the std can underflow to 0 for a spread of a few subnormals
    adv = np.zeros_like(r) if np.ptp(r) == 0 or std == 0 else centered / std
    return GroupScores(group_size=r.size, rewards=r, advantages=adv)


def _group_advantages(rewards: np.ndarray) -> np.ndarray:
    """Row-wise compute_advantages for a (Q, G) reward matrix."""
    base = rewards - rewards.min(axis=1, keepdims=True)
    centered = base - base.mean(axis=1, keepdims=True)
    std = np.sqrt(np.mean(centered ** 2, axis=1, keepdims=True))
    constant = (np.ptp(rewards, axis=1, keepdims=True) == 0) | (std == 0)
    return np.where(constant, 0.0, centered / np.where(constant, 1.0, std))


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(logits, dtype=float) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ToyPolicy:
    logits: np.ndarray  # (contexts, vocabulary)
    temperature: float = 1.0

    @classmethod
    def uniform(cls, n_contexts: int, vocab_size: int, temperature: float = 1.0) -> "ToyPolicy":
        return cls(np.zeros((n_contexts, vocab_size)), temperature)

    def probs(self) -> np.ndarray:
        return softmax(self.logits, self.temperature)

    def sample(self, group_size: int, rng: np.random.Generator) -> np.ndarray:
        """(contexts, group_size) indices drawn independently per context."""
        cdf = np.cumsum(self.probs(), axis=1)
        u = rng.random((cdf.shape[0], group_size))
        idx = (u[:, :, None] > cdf[:, None, :]).sum(axis=2)
        return np.minimum(idx, cdf.shape[1] - 1)


PolicyLike = Union[ToyPolicy, np.ndarray]


def _as_probs(p: PolicyLike) -> np.ndarray:
    arr = p.probs() if isinstance(p, ToyPolicy) else np.asarray(p, dtype=float)
    return arr[None, :] if arr.ndim == 1 else arr


def kl_divergence(p, q) -> float:
    """Exact KL(p || q) over a finite support; 0 * log 0 counts as 0."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise SupportMismatchError(f"support sizes differ: {p.shape} vs {q.shape}")
    if np.any(q <= 0):
        raise SupportMismatchError("reference distribution must be strictly positive")
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return terms.sum(axis=1)


def _check_support(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise SupportMismatchError(f"policies defined on different supports: {sorted(shapes)}")


def surrogate_objective(policy_new: PolicyLike, policy_old: PolicyLike, policy_ref: PolicyLike,
                        samples, advantages, cfg: GrpoConfig) -> float:
    """Clipped group surrogate minus the KL penalty, averaged over contexts."""
    new, old, ref = _as_probs(policy_new), _as_probs(policy_old), _as_probs(policy_ref)
    _check_support(new, old, ref)
    samples = np.atleast_2d(np.asarray(samples, dtype=int))
    adv = np.atleast_2d(np.asarray(advantages, dtype=float))
    rows = np.arange(new.shape[0])[:, None]
    ratio = new[rows, samples] / old[rows, samples]
    clipped = np.clip(ratio, 1 - cfg.epsilon, 1 + cfg.epsilon)
    surrogate = np.minimum(ratio * adv, clipped * adv).mean(axis=1)
    if np.any(ref <= 0):
        raise SupportMismatchError("reference policy must be strictly positive")
    kl = _kl_rows(new, ref)
    return float(np.mean(surrogate - cfg.beta * kl))


def surrogate_gradient(logits: np.ndarray, temperature: float, old_probs: np.ndarray,
                       ref_probs: np.ndarray, samples, advantages, cfg: GrpoConfig) -> np.ndarray:
    """Analytic gradient of surrogate_objective with respect to the new policy's logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    old, ref = _as_probs(old_probs), _as_probs(ref_probs)
    p = softmax(logits, temperature)
    _check_support(p, old, ref)
    samples = np.atleast_2d(np.asarray(samples, dtype=int))
    adv = np.atleast_2d(np.asarray(advantages, dtype=float))
    n_ctx, vocab = p.shape
    group = samples.shape[1]
    rows = np.arange(n_ctx)[:, None]

    ratio = p[rows, samples] / old[rows, samples]
    # the clipped branch is constant in theta, so it contributes no gradient
    active = np.where(adv > 0, ratio <= 1 + cfg.epsilon, np.where(adv < 0, ratio >= 1 - cfg.epsilon, False))
    weight = np.where(active, adv * ratio, 0.0) / group  # (Q, G)

    onehot_sum = np.zeros_like(p)
    np.add.at(onehot_sum, (np.repeat(np.arange(n_ctx), group), samples.ravel()), weight.ravel())
    grad_sur = (onehot_sum - weight.sum(axis=1, keepdims=True) * p) / temperature

    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(p > 0, np.log(p / ref), 0.0)
    kl = (p * log_ratio).sum(axis=1, keepdims=True)
    grad_kl = p * (log_ratio - kl) / temperature

    return (grad_sur - cfg.beta * grad_kl) / n_ctx


# -- toy training --------------------------------------------------------------

_THINK = "Consider the objects and their layout before answering."


def _candidate_answers(qa: QAPair) -> list[str]:
    """Four answer strings; the first is the ground truth."""
    if qa.answer_type == "multi_choice":
        correct = qa.gt_letter
        return [correct] + [c for c in LETTERS if c != correct]
    if qa.answer_type == "numerical":
        return [repr(qa.gt_number * f) for f in (1.0, 0.7, 1.6, 0.2)]
    if qa.answer_type == "point":
        gt = np.asarray(qa.gt_point)
        offsets = (0.0, 0.1, 0.5, 2.0)
        return ["(" + ", ".join(repr(float(v)) for v in gt + o) + ")" for o in offsets]
    if qa.answer_type == "iou_track":
        out = []
        for shift in (0.0, 0.25, 0.75, 2.0):
            entries = []
            for frame, (lo, hi) in qa.gt_track:
                lo_a, hi_a = np.asarray(lo, float), np.asarray(hi, float)
                delta = shift * np.maximum(hi_a - lo_a, 1e-9)
                entries.append({"frame": frame, "box": [(lo_a + delta).tolist(), (hi_a + delta).tolist()]})
            out.append(json.dumps(entries))
        return out
    raise ValueError(qa.answer_type)


def response_vocabulary(qa: QAPair, rng: np.random.Generator) -> list[str]:
    """Four full responses for one question, in random order.

    The correct answer carries the ground-truth graphs (when the QA has any),
    so at least one entry attains the maximum reward.
    """
    answers = _candidate_answers(qa)
    graphs = list(qa.gt_graphs) if qa.gt_graphs else None
    responses = [render_response(a, _THINK, graphs if k == 0 else None) for k, a in enumerate(answers)]
    order = rng.permutation(len(responses))
    return [responses[i] for i in order]


@dataclass
class TrainingTrace:
    iteration: list[int] = field(default_factory=list)
    mean_reward: list[float] = field(default_factory=list)
    mean_answer_reward: list[float] = field(default_factory=list)
    group_reward: list[float] = field(default_factory=list)
    kl: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    final_probs: Optional[np.ndarray] = None

    COLUMNS = ("iteration", "mean_reward", "mean_answer_reward", "kl", "objective")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
            writer.writerow([row[0]] + [f"{v:.12g}" for v in row[1:]])
        return buf.getvalue()


class _Adam:
    def __init__(self, shape, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps

    def ascend(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad ** 2
        m_hat = self.m / (1 - self.b1 ** self.t)
        v_hat = self.v / (1 - self.b2 ** self.t)
        return params + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_toy(dataset: Sequence[QAPair], cfg: Optional[GrpoConfig] = None,
              reward_cfg: Optional[RewardConfig] = None) -> TrainingTrace:
    """Run GRPO on a per-question softmax policy over scored response vocabularies.

    Trace metrics are exact expectations under the pre-update policy, except
    ``group_reward`` (the sampled group mean) and ``objective`` (the surrogate
    after the update, on that iteration's samples).
    """
    cfg = cfg or GrpoConfig()
    reward_cfg = reward_cfg or RewardConfig()
    if not dataset:
        raise ConfigError("dataset: need at least one QA pair")
    rng = np.random.default_rng(cfg.seed)
    questions = list(dataset)
    if len(questions) > cfg.max_questions:
        keep = sorted(rng.choice(len(questions), size=cfg.max_questions, replace=False).tolist())
        questions = [questions[i] for i in keep]

    vocab = [response_vocabulary(qa, rng) for qa in questions]
    scored = [[reward_total(r, qa, qa.gt_graphs, reward_cfg) for r in responses]
              for qa, responses in zip(questions, vocab)]
    total = np.array([[b.r_total for b in row] for row in scored])
    answer = np.array([[b.r_ans for b in row] for row in scored])
    if np.any(total.max(axis=1) <= total.min(axis=1)):
        log.warning("some questions have a constant reward over their vocabulary")

    policy = ToyPolicy.uniform(len(questions), total.shape[1], cfg.temperature)
    ref = policy.probs()
    opt = _Adam(policy.logits.shape, cfg.learning_rate)
    rows = np.arange(len(questions))[:, None]
    trace = TrainingTrace()
    for it in range(cfg.iterations):
        old = policy.probs()
        samples = policy.sample(cfg.group_size, rng)
        rewards = total[rows, samples]
        adv = _group_advantages(rewards)
        grad = surrogate_gradient(policy.logits, cfg.temperature, old, ref, samples, adv, cfg)
        if cfg.learning_rate > 0:
            policy.logits = opt.ascend(policy.logits, grad)

        trace.iteration.append(it)
        trace.mean_reward.append(float(np.mean((old * total).sum(axis=1))))
        trace.mean_answer_reward.append(float(np.mean((old * answer).sum(axis=1))))
        trace.group_reward.append(float(rewards.mean()))
        trace.kl.append(float(np.mean(_kl_rows(old, ref))))
        trace.objective.append(surrogate_objective(policy.probs(), old, ref, samples, adv, cfg))
    trace.final_probs = policy.probs()
    return trace
