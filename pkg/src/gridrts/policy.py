"""Pixel-to-pixel actor-critic: SE-residual trunk, per-cell action heads.

The trunk is resolution preserving (stride 1 throughout), so robot and
factory logits align cell-for-cell with the observation planes.  Sampling
and evaluation share one code path: per source cell, each action component
is a masked categorical; the joint log-probability sums the component
log-probabilities that are relevant to the sampled action type (move
parameters for moves, transfer parameters for transfers, nothing extra for
the rest).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .actions import (FACTORY_ACTIONS, MASKED_LOGIT, ROBOT_COMPONENT_SIZES,
                      ROBOT_LOGIT_CHANNELS, MaskSet)
from .engine import RobotAction

CHECKPOINT_MAGIC = b"GRTS"
CHECKPOINT_VERSION = 1

# which components count toward log-prob/entropy, per sampled action type:
# columns are (type, move_dir, transfer_dir, transfer_amount, transfer_resource)
_RELEVANCE = torch.zeros(6, 5)
_RELEVANCE[:, 0] = 1.0
_RELEVANCE[RobotAction.MOVE, 1] = 1.0
_RELEVANCE[RobotAction.TRANSFER, 2:5] = 1.0


@dataclass(frozen=True)
class PolicyConfig:
    in_planes: int = 17
    width: int = 64
    blocks: int = 4
    se_reduction: int = 8
    critic_hidden: int = 64

    def __post_init__(self) -> None:
        if self.width % self.se_reduction != 0:
            raise ValueError(
                f"width {self.width} not divisible by se_reduction {self.se_reduction}")

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown PolicyConfig keys: {sorted(unknown)}")
        return cls(**data)


class SqueezeExcite(nn.Module):
    """Channel gating: spatial mean -> bottleneck MLP -> logistic scale."""

    def __init__(self, channels: int, reduction: int):
        super().__init__()
        self.fc1 = nn.Linear(channels, channels // reduction)
        self.fc2 = nn.Linear(channels // reduction, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeezed = x.mean(dim=(-2, -1))
        gates = torch.sigmoid(self.fc2(F.relu(self.fc1(squeezed))))
        return x * gates[..., None, None]


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, reduction: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.se = SqueezeExcite(channels, reduction)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = F.relu(self.conv1(x))
        h = self.se(self.conv2(h))
        return F.relu(x + h)


class GridPolicy(nn.Module):
    def __init__(self, config: PolicyConfig = PolicyConfig()):
        super().__init__()
        self.config = config
        w = config.width
        self.stem = nn.Conv2d(config.in_planes, w, 3, padding=1)
        self.blocks = nn.ModuleList(
            ResidualBlock(w, config.se_reduction) for _ in range(config.blocks))
        self.robot_head = nn.Conv2d(w, ROBOT_LOGIT_CHANNELS, 1)
        self.factory_head = nn.Conv2d(w, FACTORY_ACTIONS, 1)
        self.critic_fc1 = nn.Linear(w, config.critic_hidden)
        self.critic_fc2 = nn.Linear(config.critic_hidden, 1)
        self._init_weights()

    def _init_weights(self) -> None:
        for module in self.modules():
            if isinstance(module, (nn.Conv2d, nn.Linear)):
                nn.init.orthogonal_(module.weight, gain=np.sqrt(2))
                nn.init.zeros_(module.bias)
        for head in (self.robot_head, self.factory_head, self.critic_fc2):
            with torch.no_grad():
                head.weight.mul_(0.01 / np.sqrt(2))

    def forward(self, obs: torch.Tensor
                ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(B, 17, H, W) -> robot logits (B, 22, H, W), factory logits
        (B, 4, H, W), value (B,)."""
        if obs.dim() != 4 or obs.shape[1] != self.config.in_planes:
            raise ValueError(f"expected (B, {self.config.in_planes}, H, W) "
                             f"observations, got {tuple(obs.shape)}")
        h = F.relu(self.stem(obs))
        for block in self.blocks:
            h = block(h)
        robot_logits = self.robot_head(h)
        factory_logits = self.factory_head(h)
        value = self.critic_fc2(F.relu(self.critic_fc1(h.mean(dim=(-2, -1)))))
        value = value.squeeze(-1)
        for name, out in (("robot logits", robot_logits),
                          ("factory logits", factory_logits),
                          ("value", value)):
            if not torch.isfinite(out).all():
                raise FloatingPointError(f"non-finite {name} (diverged?)")
        return robot_logits, factory_logits, value

    @torch.no_grad()
    def forward_single(self, obs: np.ndarray
                       ) -> tuple[torch.Tensor, torch.Tensor, float]:
        p = next(self.parameters())
        t = torch.as_tensor(obs, dtype=p.dtype, device=p.device).unsqueeze(0)
        robot_logits, factory_logits, value = self.forward(t)
        return robot_logits[0], factory_logits[0], float(value[0])


@dataclass
class ActionSample:
    robot_maps: np.ndarray    # (5, H, W) int64 component values
    factory_maps: np.ndarray  # (H, W) int64
    joint_log_prob: float
    entropy: float


class TorchMasks:
    """A batch of MaskSets as torch bool tensors (B leading dimension)."""

    def __init__(self, robot_source, factory_source, robot_stack, factory_action):
        self.robot_source = robot_source    # (B, H, W)
        self.factory_source = factory_source
        self.robot_stack = robot_stack      # (B, 22, H, W)
        self.factory_action = factory_action  # (B, 4, H, W)

    @classmethod
    def from_masksets(cls, masks: Sequence[MaskSet]) -> "TorchMasks":
        return cls(
            robot_source=torch.from_numpy(np.stack([m.robot_source for m in masks])),
            factory_source=torch.from_numpy(np.stack([m.factory_source for m in masks])),
            robot_stack=torch.from_numpy(np.stack([m.robot_stack() for m in masks])),
            factory_action=torch.from_numpy(np.stack([m.factory_action for m in masks])),
        )


def _component_slices() -> list[slice]:
    out, lo = [], 0
    for size in ROBOT_COMPONENT_SIZES:
        out.append(slice(lo, lo + size))
        lo += size
    return out


_SLICES = _component_slices()


def _masked_log_probs(logits: torch.Tensor, mask: torch.Tensor
                      ) -> tuple[torch.Tensor, torch.Tensor]:
    """(M, K) logits + mask -> (log-probs, probs); masked entries get
    probability exactly 0 so they carry no gradient."""
    masked = torch.where(mask, logits, torch.full_like(logits, MASKED_LOGIT))
    logp = F.log_softmax(masked, dim=-1)
    return logp, torch.exp(logp)


def _pick(probs: torch.Tensor, logits: torch.Tensor, greedy: bool,
          generator: Optional[torch.Generator]) -> torch.Tensor:
    if greedy:
        return logits.argmax(dim=-1)
    return torch.multinomial(probs, 1, generator=generator).squeeze(-1)


def sample_actions_batch(robot_logits: torch.Tensor,
                         factory_logits: torch.Tensor,
                         masks: TorchMasks,
                         generator: Optional[torch.Generator] = None,
                         greedy: bool = False
                         ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Sample all per-cell actions for a batch of observations.

    Returns (robot_maps (B,5,H,W), factory_maps (B,H,W), joint_log_prob (B,),
    entropy (B,)), everything detached from the graph.
    """
    B, _, H, W = robot_logits.shape
    device = robot_logits.device
    robot_maps = torch.zeros(B, 5, H, W, dtype=torch.int64, device=device)
    factory_maps = torch.zeros(B, H, W, dtype=torch.int64, device=device)
    logp_total = torch.zeros(B, dtype=robot_logits.dtype, device=device)
    entropy_total = torch.zeros(B, dtype=robot_logits.dtype, device=device)

    idx = masks.robot_source.nonzero(as_tuple=True)  # (b, y, x), M cells
    if idx[0].numel():
        b, y, x = idx
        samples, logps, entropies = [], [], []
        for c, sl in enumerate(_SLICES):
            lg = robot_logits[b, sl, y, x]
            mk = masks.robot_stack[b, sl, y, x]
            logp, probs = _masked_log_probs(lg, mk)
            chosen = _pick(probs, torch.where(mk, lg, torch.full_like(lg, MASKED_LOGIT)),
                           greedy, generator)
            samples.append(chosen)
            logps.append(logp.gather(1, chosen[:, None]).squeeze(1))
            entropies.append(-(probs * logp).sum(dim=-1))
            robot_maps[:, c][b, y, x] = chosen
        relevance = _RELEVANCE.to(device=device, dtype=logp_total.dtype)[samples[0]]
        cell_logp = (torch.stack(logps, dim=1) * relevance).sum(dim=1)
        cell_entropy = (torch.stack(entropies, dim=1) * relevance).sum(dim=1)
        logp_total.index_add_(0, b, cell_logp)
        entropy_total.index_add_(0, b, cell_entropy)

    idx = masks.factory_source.nonzero(as_tuple=True)
    if idx[0].numel():
        b, y, x = idx
        lg = factory_logits[b, :, y, x]
        mk = masks.factory_action[b, :, y, x]
        logp, probs = _masked_log_probs(lg, mk)
        chosen = _pick(probs, torch.where(mk, lg, torch.full_like(lg, MASKED_LOGIT)),
                       greedy, generator)
        factory_maps[b, y, x] = chosen
        logp_total.index_add_(0, b, logp.gather(1, chosen[:, None]).squeeze(1))
        entropy_total.index_add_(0, b, -(probs * logp).sum(dim=-1))

    return robot_maps, factory_maps, logp_total.detach(), entropy_total.detach()


def sample_actions(robot_logits: torch.Tensor, factory_logits: torch.Tensor,
                   masks: MaskSet, generator: Optional[torch.Generator] = None,
                   greedy: bool = False) -> ActionSample:
    """Single-state convenience wrapper around sample_actions_batch."""
    tmasks = TorchMasks.from_masksets([masks])
    robot_maps, factory_maps, logp, entropy = sample_actions_batch(
        robot_logits.unsqueeze(0), factory_logits.unsqueeze(0), tmasks,
        generator=generator, greedy=greedy)
    return ActionSample(robot_maps=robot_maps[0].cpu().numpy(),
                        factory_maps=factory_maps[0].cpu().numpy(),
                        joint_log_prob=float(logp[0]),
                        entropy=float(entropy[0]))


def evaluate_actions(policy: GridPolicy, obs: torch.Tensor, masks: TorchMasks,
                     robot_maps: torch.Tensor, factory_maps: torch.Tensor
                     ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Differentiable re-evaluation of stored actions under current params.

    Returns (joint_log_prob (B,), entropy (B,), value (B,)); raises
    ValueError when a stored action violates its stored mask.
    """
    robot_logits, factory_logits, value = policy(obs)
    B = obs.shape[0]
    logp_total = torch.zeros(B, dtype=robot_logits.dtype, device=obs.device)
    entropy_total = torch.zeros(B, dtype=robot_logits.dtype, device=obs.device)

    idx = masks.robot_source.nonzero(as_tuple=True)
    if idx[0].numel():
        b, y, x = idx
        logps, entropies, actions = [], [], []
        for c, sl in enumerate(_SLICES):
            lg = robot_logits[b, sl, y, x]
            mk = masks.robot_stack[b, sl, y, x]
            action = robot_maps[:, c][b, y, x]
            if not mk.gather(1, action[:, None]).all():
                raise ValueError(f"robot action component {c} violates its mask")
            logp, probs = _masked_log_probs(lg, mk)
            actions.append(action)
            logps.append(logp.gather(1, action[:, None]).squeeze(1))
            entropies.append(-(probs * logp).sum(dim=-1))
        relevance = _RELEVANCE.to(device=obs.device, dtype=logp_total.dtype)[actions[0]]
        logp_total.index_add_(0, b, (torch.stack(logps, dim=1) * relevance).sum(dim=1))
        entropy_total.index_add_(0, b, (torch.stack(entropies, dim=1) * relevance).sum(dim=1))

    idx = masks.factory_source.nonzero(as_tuple=True)
    if idx[0].numel():
        b, y, x = idx
        lg = factory_logits[b, :, y, x]
        mk = masks.factory_action[b, :, y, x]
        action = factory_maps[b, y, x]
        if not mk.gather(1, action[:, None]).all():
            raise ValueError("factory action violates its mask")
        logp, probs = _masked_log_probs(lg, mk)
        logp_total.index_add_(0, b, logp.gather(1, action[:, None]).squeeze(1))
        entropy_total.index_add_(0, b, -(probs * logp).sum(dim=-1))

    return logp_total, entropy_total, value


def save_checkpoint(policy: GridPolicy, path: str | Path,
                    update_counter: int = 0) -> None:
    """Versioned binary: magic, header JSON, flat float32 parameter payload."""
    manifest = []
    chunks = []
    for name, tensor in policy.state_dict().items():
        manifest.append([name, list(tensor.shape)])
        chunks.append(tensor.detach().to(torch.float32).reshape(-1).numpy().tobytes())
    header = json.dumps({
        "format_version": CHECKPOINT_VERSION,
        "arch": asdict(policy.config),
        "update_counter": update_counter,
        "manifest": manifest,
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path: str | Path) -> tuple[GridPolicy, int]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a policy checkpoint")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode())
        payload = fh.read()
    policy = GridPolicy(PolicyConfig.from_dict(header["arch"]))
    state = {}
    offset = 0
    data = np.frombuffer(payload, dtype=np.float32)
    for name, shape in header["manifest"]:
        count = int(np.prod(shape)) if shape else 1
        values = data[offset:offset + count].reshape(shape)
        state[name] = torch.from_numpy(values.copy())
        offset += count
    if offset != data.size:
        raise ValueError(f"{path}: payload size mismatch")
    policy.load_state_dict(state)
    policy.eval()
    return policy, header["update_counter"]
