"""Multi-discrete action spaces, legality masks, and command decoding.

Robot actions are five per-cell components (type, move dir, transfer dir,
transfer amount, transfer resource); factories have a single 4-way
component.  Source selection is realized as per-cell output plus source
masks: only cells holding an own robot or an own factory center are ever
decoded, sampled from, or allowed to contribute gradient.

Mask convention: the action-type masks are exact (an unmasked type is
executable this turn, NoOp is always legal).  Parameter components whose
action type is illegal carry an all-true fallback mask so every component
at a source cell remains a valid categorical; decoding ignores parameters
irrelevant to the chosen type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import (GameState, CommandError, FactoryAction, FactoryCommand,
                     RobotAction, RobotCommand)
from .engine.state import MOVE_DELTAS, NO_OWNER, TRANSFER_DELTAS

ROBOT_COMPONENT_SIZES = (6, 4, 5, 4, 3)
ROBOT_LOGIT_CHANNELS = sum(ROBOT_COMPONENT_SIZES)  # 22
FACTORY_ACTIONS = 4

#: Value written over masked logits: large enough that float32 softmax
#: assigns exact zero probability, small enough to stay finite.
MASKED_LOGIT = -1e8

# component indices into RobotActionMaps rows
COMP_TYPE = 0
COMP_MOVE_DIR = 1
COMP_TRANSFER_DIR = 2
COMP_TRANSFER_AMOUNT = 3
COMP_TRANSFER_RESOURCE = 4

# row order of the per-action power-cost matrix used by compute_masks
_COST_ORDER = ("move", "transfer", "pickup", "dig", "self_destruct")
_MOVE_I, _TRANSFER_I, _PICKUP_I, _DIG_I, _DESTRUCT_I = range(5)


@dataclass
class MaskSet:
    """Boolean legality planes for one player; shapes are (K, H, W)."""

    robot_source: np.ndarray      # (H, W)
    factory_source: np.ndarray    # (H, W)
    action_type: np.ndarray       # (6, H, W)
    move_dir: np.ndarray          # (4, H, W)
    transfer_dir: np.ndarray      # (5, H, W)
    transfer_amount: np.ndarray   # (4, H, W)
    transfer_resource: np.ndarray # (3, H, W)
    factory_action: np.ndarray    # (4, H, W)

    def robot_components(self) -> tuple[np.ndarray, ...]:
        return (self.action_type, self.move_dir, self.transfer_dir,
                self.transfer_amount, self.transfer_resource)

    def robot_stack(self) -> np.ndarray:
        """All robot component masks stacked to (22, H, W)."""
        return np.concatenate(self.robot_components(), axis=0)


def compute_masks(state: GameState, player: int) -> MaskSet:
    cfg = state.config
    board = state.board
    size = board.size
    masks = MaskSet(
        robot_source=np.zeros((size, size), dtype=bool),
        factory_source=np.zeros((size, size), dtype=bool),
        action_type=np.zeros((6, size, size), dtype=bool),
        move_dir=np.zeros((4, size, size), dtype=bool),
        transfer_dir=np.zeros((5, size, size), dtype=bool),
        transfer_amount=np.zeros((4, size, size), dtype=bool),
        transfer_resource=np.zeros((3, size, size), dtype=bool),
        factory_action=np.zeros((4, size, size), dtype=bool),
    )

    robots = [r for r in state.robots.values() if r.owner == player]
    if robots:
        attrs = np.array([(r.pos[0], r.pos[1], r.kind, r.power, r.cargo_ice,
                           r.cargo_ore) for r in robots], dtype=np.int64)
        ys, xs, kinds = attrs[:, 0], attrs[:, 1], attrs[:, 2]
        power, c_ice, c_ore = attrs[:, 3], attrs[:, 4], attrs[:, 5]

        # (action, robot) affordability in one shot: queue cost + action cost
        cost_matrix = np.array([cfg.power_costs[a] for a in _COST_ORDER])
        afford = power >= cfg.queue_update_cost + cost_matrix[:, kinds]

        # all 9 direction targets at once; % wraps out-of-board indices into
        # valid cells, the `inb` row then discards those entries
        deltas = np.array(TRANSFER_DELTAS)  # center + the four moves
        ty = ys[None, :] + deltas[:, 0:1]
        tx = xs[None, :] + deltas[:, 1:2]
        inb = (ty >= 0) & (ty < size) & (tx >= 0) & (tx < size)
        tyc, txc = ty % size, tx % size
        owner_at = board.factory_owner[tyc, txc]
        occ_at = board.factory_occ[tyc, txc] != -1
        robot_at = state.robot_grid[tyc, txc] != -1

        # moves: on the board and not into an enemy factory footprint
        dir_ok = (inb & ((owner_at == NO_OWNER) | (owner_at == player)))[1:]
        move_ok = dir_ok.any(axis=0) & afford[_MOVE_I]

        # transfers: a receiver per direction, a non-empty stock per resource
        tdir_ok = inb & (robot_at | occ_at)
        tdir_ok[0] = occ_at[0]  # center: the factory underneath, never self
        power_left = power - cfg.queue_update_cost - cost_matrix[_TRANSFER_I, kinds]
        res_ok = np.stack([c_ice > 0, c_ore > 0, power_left > 0], axis=0)
        transfer_ok = tdir_ok.any(axis=0) & res_ok.any(axis=0) \
            & afford[_TRANSFER_I]

        dig_ok = (~occ_at[0]
                  & ((board.rubble[ys, xs] > 0) | board.ice[ys, xs]
                     | board.ore[ys, xs]
                     | ((board.lichen[ys, xs] > 0)
                        & (board.lichen_owner[ys, xs] == 1 - player)))
                  & afford[_DIG_I])
        pickup_ok = (owner_at[0] == player) & afford[_PICKUP_I]

        masks.robot_source[ys, xs] = True
        action_type = np.empty((6, len(robots)), dtype=bool)
        action_type[RobotAction.NOOP] = True
        action_type[RobotAction.MOVE] = move_ok
        action_type[RobotAction.TRANSFER] = transfer_ok
        action_type[RobotAction.PICKUP] = pickup_ok
        action_type[RobotAction.DIG] = dig_ok
        action_type[RobotAction.SELF_DESTRUCT] = afford[_DESTRUCT_I]
        masks.action_type[:, ys, xs] = action_type

        # all-true fallback keeps parameter categoricals well-formed when the
        # owning action type is itself illegal
        dir_ok[:, ~dir_ok.any(axis=0)] = True
        tdir_ok[:, ~tdir_ok.any(axis=0)] = True
        res_ok[:, ~res_ok.any(axis=0)] = True
        masks.move_dir[:, ys, xs] = dir_ok
        masks.transfer_dir[:, ys, xs] = tdir_ok
        masks.transfer_resource[:, ys, xs] = res_ok
        masks.transfer_amount[:, ys, xs] = True

    for factory in state.factories.values():
        if factory.owner != player:
            continue
        cy, cx = factory.center
        masks.factory_source[cy, cx] = True
        masks.factory_action[FactoryAction.NOOP, cy, cx] = True
        center_free = state.robot_grid[cy, cx] == -1
        for action, kind in ((FactoryAction.BUILD_LIGHT, 0),
                             (FactoryAction.BUILD_HEAVY, 1)):
            masks.factory_action[action, cy, cx] = (
                center_free
                and factory.metal >= cfg.robot_metal_cost[kind]
                and factory.power >= cfg.robot_power_cost[kind])
        masks.factory_action[FactoryAction.GROW_LICHEN, cy, cx] = \
            factory.water > cfg.lichen_water_cost

    return masks


def apply_masks(logits: np.ndarray, mask: np.ndarray,
                source: np.ndarray | None = None) -> np.ndarray:
    """Replace masked logits with MASKED_LOGIT (component axis first).

    Raises ValueError when a position that matters (all positions, or the
    true cells of `source`) has an all-false mask vector: the mask
    generator must keep at least NoOp legal everywhere it matters.
    """
    if logits.shape != mask.shape:
        raise ValueError(f"shape mismatch {logits.shape} vs {mask.shape}")
    any_legal = mask.any(axis=0)
    relevant = any_legal if source is None else (any_legal | ~source)
    if not np.all(relevant):
        raise ValueError("mask vector is all-false at a source cell")
    return np.where(mask, logits, MASKED_LOGIT)


def decode_robot_action(cell: tuple[int, int], components, state: GameState
                        ) -> RobotCommand:
    """Decode one cell's five component values into a robot command.

    Components irrelevant to the sampled action type are ignored.
    """
    rid = int(state.robot_grid[cell])
    if rid == -1:
        raise CommandError(f"no robot at {cell}")
    action = RobotAction(int(components[COMP_TYPE]))
    if action == RobotAction.MOVE:
        return RobotCommand(rid, action, direction=int(components[COMP_MOVE_DIR]))
    if action == RobotAction.TRANSFER:
        return RobotCommand(rid, action,
                            direction=int(components[COMP_TRANSFER_DIR]),
                            amount=int(components[COMP_TRANSFER_AMOUNT]),
                            resource=int(components[COMP_TRANSFER_RESOURCE]))
    return RobotCommand(rid, action)


def decode_factory_action(cell: tuple[int, int], value: int, state: GameState
                          ) -> FactoryCommand:
    fid = int(state.board.factory_occ[cell])
    if fid == -1 or state.factories[fid].center != tuple(cell):
        raise CommandError(f"no factory center at {cell}")
    return FactoryCommand(fid, FactoryAction(int(value)))


def actions_to_commands(robot_maps: np.ndarray, factory_maps: np.ndarray,
                        masks: MaskSet, state: GameState) -> tuple[list, int]:
    """Decode per-cell action maps into engine commands.

    Emits one command per source cell and drops (counting them) any whose
    sampled components violate the masks; with mask-aware sampling the
    dropped count is zero.
    """
    commands: list = []
    dropped = 0
    ys, xs = np.nonzero(masks.robot_source)
    if len(ys):
        comps = robot_maps[:, ys, xs].T.tolist()     # (N, 5) python ints
        type_ok = masks.action_type[:, ys, xs]
        move_ok = masks.move_dir[:, ys, xs]
        tdir_ok = masks.transfer_dir[:, ys, xs]
        tamt_ok = masks.transfer_amount[:, ys, xs]
        tres_ok = masks.transfer_resource[:, ys, xs]
        grid = state.robot_grid
        for i, (y, x) in enumerate(zip(ys.tolist(), xs.tolist())):
            t, move_dir, tdir, tamt, tres = comps[i]
            ok = type_ok[t, i]
            if ok and t == RobotAction.MOVE:
                ok = move_ok[move_dir, i]
            elif ok and t == RobotAction.TRANSFER:
                ok = tdir_ok[tdir, i] and tamt_ok[tamt, i] and tres_ok[tres, i]
            if not ok:
                dropped += 1
                continue
            rid = int(grid[y, x])
            if t == RobotAction.MOVE:
                commands.append(RobotCommand(rid, RobotAction.MOVE,
                                             direction=move_dir))
            elif t == RobotAction.TRANSFER:
                commands.append(RobotCommand(rid, RobotAction.TRANSFER,
                                             direction=tdir, amount=tamt,
                                             resource=tres))
            else:
                commands.append(RobotCommand(rid, RobotAction(t)))
    ys, xs = np.nonzero(masks.factory_source)
    if len(ys):
        values = factory_maps[ys, xs].tolist()
        legal = masks.factory_action[values, ys, xs].tolist()
        occ = state.board.factory_occ
        for (y, x), value, ok in zip(zip(ys.tolist(), xs.tolist()), values, legal):
            if not ok:
                dropped += 1
                continue
            commands.append(FactoryCommand(int(occ[y, x]), FactoryAction(value)))
    return commands, dropped
