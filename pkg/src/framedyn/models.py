"""Dynamics models built around a regressor on canonical coordinates.

:class:`SymmetryReducedModel` wraps any regressor defined on the reduced
input space (canonical state coordinates plus frame-transformed controls)
into a full-state one-step model that is invariant under the group action by
construction: whatever the regressor computes, transforming state and control
by a group element transforms the prediction the same way.

:class:`BaselineModel` is the control condition: the same regressor surface
applied directly to raw ``(state, control)`` inputs.

Both models support two regression targets: ``absolute`` (predict the next
state directly) and ``delta`` (predict next state minus current state, the
usual choice).

Predictions are returned exactly as the regressor produces them; unit-norm
pairs (headings, joint directions) are not renormalized, so repeated rollout
of a learned model can drift off the state manifold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import TransformationGroup

MODES = ("delta", "absolute")


@dataclass
class ReducedSample:
    """Regression pair in canonical coordinates.

    ``inputs`` is the concatenation of the reduced state and the
    frame-transformed control; ``targets`` is the framed next state
    (absolute mode) or the framed state difference (delta mode).  Leading
    batch axes are allowed.
    """

    inputs: np.ndarray
    targets: np.ndarray


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


class SymmetryReducedModel:
    """Group-invariant one-step dynamics model.

    ``regressor`` must map vectors of length ``group.b_dim + group.n_u`` to
    vectors of length ``group.n`` (batches allowed).  Predictions are
    assembled by framing the state, evaluating the regressor in canonical
    coordinates, and carrying the result back with the inverse frame.
    """

    def __init__(self, group: TransformationGroup, regressor, mode: str = "delta"):
        self.group = group
        self.regressor = regressor
        self.mode = _check_mode(mode)
        self.input_dim = group.b_dim + group.n_u
        self.output_dim = group.n
        in_dim = getattr(regressor, "input_dim", None)
        out_dim = getattr(regressor, "output_dim", None)
        if in_dim is not None and in_dim != self.input_dim:
            raise ValueError(
                f"regressor input arity {in_dim} does not match reduced input "
                f"size {self.input_dim} (= b_dim {group.b_dim} + n_u {group.n_u})"
            )
        if out_dim is not None and out_dim != self.output_dim:
            raise ValueError(
                f"regressor output arity {out_dim} does not match state size {group.n}"
            )

    def reduced_inputs(self, x, u) -> np.ndarray:
        """Canonical regression inputs: concat(reduce(x), framed control)."""
        frame = self.group.moving_frame(x)
        xb = self.group.act_state(frame, x)[..., self.group.b_indices]
        ub = self.group.act_control(frame, u)
        return np.concatenate([xb, ub], axis=-1)

    def predict(self, x, u) -> np.ndarray:
        """One-step prediction; invariant under the group action for any
        regressor.
        """
        group = self.group
        frame = group.moving_frame(x)
        xv = np.asarray(x, dtype=np.float64)
        xb = group.act_state(frame, xv)[..., group.b_indices]
        ub = group.act_control(frame, u)
        out = self.regressor(np.concatenate([xb, ub], axis=-1))
        out = np.asarray(out, dtype=np.float64)
        if out.shape[-1] != group.n:
            raise ValueError(
                f"regressor returned arity {out.shape[-1]}, expected {group.n}"
            )
        inv = group.inverse(frame)
        if self.mode == "absolute":
            return group.act_state(inv, out)
        framed_next = out + group.act_state(frame, xv)
        return group.act_state(inv, framed_next)

    def predict_via_homomorphism(self, x, u) -> np.ndarray:
        """Delta-mode shortcut valid only when the group action is additive:
        carry the raw regressor output back with the inverse frame and add it
        to the state.  Equals :meth:`predict` exactly for such groups.
        """
        if self.mode != "delta":
            raise ValueError("the homomorphism shortcut applies to delta mode only")
        if not self.group.additive_homomorphic:
            raise ValueError(
                f"group '{self.group.group_id}' is not flagged additive; "
                "the shortcut would change the prediction"
            )
        group = self.group
        frame = group.moving_frame(x)
        xv = np.asarray(x, dtype=np.float64)
        xb = group.act_state(frame, xv)[..., group.b_indices]
        ub = group.act_control(frame, u)
        out = np.asarray(self.regressor(np.concatenate([xb, ub], axis=-1)), dtype=np.float64)
        return xv + group.act_state(group.inverse(frame), out)

    def training_target(self, x, u, x_next) -> ReducedSample:
        """Map transitions to canonical regression pairs.

        The pair is frame-independent: transitions that differ only by a
        group element map to the same (inputs, targets).
        """
        group = self.group
        frame = group.moving_frame(x)
        xv = np.asarray(x, dtype=np.float64)
        xn = group._require_vector(x_next, group.n, "next state")
        xb = group.act_state(frame, xv)[..., group.b_indices]
        ub = group.act_control(frame, u)
        inputs = np.concatenate([xb, ub], axis=-1)
        framed_next = group.act_state(frame, xn)
        if self.mode == "absolute":
            targets = framed_next
        else:
            targets = framed_next - group.act_state(frame, xv)
        return ReducedSample(inputs=inputs, targets=targets)


class BaselineModel:
    """Unreduced one-step model: the regressor sees raw (state, control)."""

    def __init__(self, n: int, n_u: int, regressor, mode: str = "delta"):
        self.n = int(n)
        self.n_u = int(n_u)
        self.regressor = regressor
        self.mode = _check_mode(mode)
        self.input_dim = self.n + self.n_u
        self.output_dim = self.n
        in_dim = getattr(regressor, "input_dim", None)
        out_dim = getattr(regressor, "output_dim", None)
        if in_dim is not None and in_dim != self.input_dim:
            raise ValueError(
                f"regressor input arity {in_dim} does not match n + n_u = {self.input_dim}"
            )
        if out_dim is not None and out_dim != self.n:
            raise ValueError(
                f"regressor output arity {out_dim} does not match state size {self.n}"
            )

    def _check(self, x, u):
        xv = np.asarray(x, dtype=np.float64)
        uv = np.asarray(u, dtype=np.float64)
        if xv.shape[-1] != self.n:
            raise ValueError(f"state must have last axis {self.n}, got {xv.shape}")
        if uv.shape[-1] != self.n_u:
            raise ValueError(f"control must have last axis {self.n_u}, got {uv.shape}")
        return xv, uv

    def predict(self, x, u) -> np.ndarray:
        xv, uv = self._check(x, u)
        out = np.asarray(self.regressor(np.concatenate([xv, uv], axis=-1)), dtype=np.float64)
        if out.shape[-1] != self.n:
            raise ValueError(f"regressor returned arity {out.shape[-1]}, expected {self.n}")
        if self.mode == "absolute":
            return out
        return xv + out

    def training_target(self, x, u, x_next) -> ReducedSample:
        xv, uv = self._check(x, u)
        xn = np.asarray(x_next, dtype=np.float64)
        inputs = np.concatenate([xv, uv], axis=-1)
        targets = xn if self.mode == "absolute" else xn - xv
        return ReducedSample(inputs=inputs, targets=targets)
