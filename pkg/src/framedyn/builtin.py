"""Built-in transformation groups.

* :class:`SE2CarGroup`: planar rigid-body motions (translation + rotation)
  acting on a car state ``(y, z, v_y, v_z, h_y, h_z)`` where ``(h_y, h_z)``
  is the unit heading direction.
* :class:`ConstantTranslationGroup`: pure translations of a constant block
  (used for goal coordinates, which the dynamics never change).
* :class:`ReacherGroup`: base-joint rotation plus target/height translation
  for the 11-dimensional two-link reacher observation.
* :class:`ProductGroup`: blockwise product of factor groups over disjoint
  state and control slices.

Groups are selected by string id: ``se2car``, ``parking2``, ``reacher``,
``const:<d>``.
"""

from __future__ import annotations

import numpy as np

from .groups import FrameSingularityError, GroupElement, TransformationGroup, wrap_angle
from .rng import Rng

HEADING_NORM_FLOOR = 1e-8


def _rotate(c, s, a, b):
    """Apply the rotation [[c, -s], [s, c]] to the pair (a, b)."""
    return c * a - s * b, s * a + c * b


class SE2CarGroup(TransformationGroup):
    """Planar translations and rotations acting on a single car state.

    Element coordinates are ``(t_y, t_z, theta)`` with ``theta`` kept in
    (-pi, pi].  The action rotates the position, velocity and heading pairs
    and then translates the position pair only; controls are untouched.  The
    cross-section pins ``(y, z, h_y, h_z) = (0, 0, 1, 0)``: the frame moves
    the car to the origin facing along +y, and the reduced coordinates are
    the body-frame velocity pair.

    The frame is singular where the heading direction norm falls below
    ``HEADING_NORM_FLOOR``; heading pairs are renormalized before use.
    """

    def __init__(self, group_id: str = "se2car"):
        super().__init__(
            group_id=group_id,
            r=3,
            n=6,
            n_u=2,
            a_indices=(0, 1, 4, 5),
            cross_section=(0.0, 0.0, 1.0, 0.0),
            angular_coords=(2,),
        )

    def _compose(self, c1, c2):
        cos1, sin1 = np.cos(c1[..., 2]), np.sin(c1[..., 2])
        ty, tz = _rotate(cos1, sin1, c2[..., 0], c2[..., 1])
        shape = np.broadcast_shapes(c1.shape[:-1], c2.shape[:-1])
        out = np.empty(shape + (3,))
        out[..., 0] = ty + c1[..., 0]
        out[..., 1] = tz + c1[..., 1]
        out[..., 2] = wrap_angle(c1[..., 2] + c2[..., 2])
        return out

    def _inverse(self, c):
        cos, sin = np.cos(c[..., 2]), np.sin(c[..., 2])
        # -R(-theta) t
        ty, tz = _rotate(cos, -sin, c[..., 0], c[..., 1])
        out = np.empty(c.shape)
        out[..., 0] = -ty
        out[..., 1] = -tz
        out[..., 2] = wrap_angle(-c[..., 2])
        return out

    def _act_state(self, c, x):
        cos, sin = np.cos(c[..., 2]), np.sin(c[..., 2])
        shape = np.broadcast_shapes(c.shape[:-1], x.shape[:-1])
        out = np.empty(shape + (6,))
        py, pz = _rotate(cos, sin, x[..., 0], x[..., 1])
        out[..., 0] = py + c[..., 0]
        out[..., 1] = pz + c[..., 1]
        out[..., 2], out[..., 3] = _rotate(cos, sin, x[..., 2], x[..., 3])
        out[..., 4], out[..., 5] = _rotate(cos, sin, x[..., 4], x[..., 5])
        return out

    def _moving_frame(self, x):
        norm = np.hypot(x[..., 4], x[..., 5])
        if np.any(norm < HEADING_NORM_FLOOR):
            bad = np.argwhere(norm < HEADING_NORM_FLOOR)
            raise FrameSingularityError(
                f"heading direction norm below {HEADING_NORM_FLOOR:g} at index "
                f"{bad[0].tolist()}; the frame is undefined there"
            )
        hy = x[..., 4] / norm
        hz = x[..., 5] / norm
        y, z = x[..., 0], x[..., 1]
        out = np.empty(x.shape[:-1] + (3,))
        out[..., 0] = -y * hy - z * hz
        out[..., 1] = y * hz - z * hy
        out[..., 2] = np.arctan2(-hz, hy)
        return out

    def random_element(self, rng: Rng, size=None) -> GroupElement:
        shape = () if size is None else (size,)
        coords = np.empty(shape + (3,))
        coords[..., 0] = rng.uniform(-5.0, 5.0, size=shape or None)
        coords[..., 1] = rng.uniform(-5.0, 5.0, size=shape or None)
        coords[..., 2] = rng.angles(size=shape or None)
        return GroupElement(coords, self.group_id)

    def random_state(self, rng: Rng, size=None) -> np.ndarray:
        shape = () if size is None else (size,)
        x = np.empty(shape + (6,))
        x[..., 0] = rng.uniform(-5.0, 5.0, size=shape or None)
        x[..., 1] = rng.uniform(-5.0, 5.0, size=shape or None)
        x[..., 2] = rng.uniform(-2.0, 2.0, size=shape or None)
        x[..., 3] = rng.uniform(-2.0, 2.0, size=shape or None)
        ang = np.asarray(rng.angles(size=shape or None))
        x[..., 4] = np.cos(ang)
        x[..., 5] = np.sin(ang)
        return x


class ConstantTranslationGroup(TransformationGroup):
    """Additive group of translations of a d-dimensional constant block.

    Acts by ``x + delta``.  Every state coordinate belongs to the ``a`` part,
    so the reduced state is empty: constants carry no dynamical information
    once the symmetry is removed.  There are no controls.
    """

    def __init__(self, dim: int):
        super().__init__(
            group_id=f"const:{dim}",
            r=dim,
            n=dim,
            n_u=0,
            a_indices=tuple(range(dim)),
            cross_section=np.zeros(dim),
        )

    def _compose(self, c1, c2):
        return c1 + c2

    def _inverse(self, c):
        return -c

    def _act_state(self, c, x):
        return x + c

    def _moving_frame(self, x):
        return -x

    def random_element(self, rng: Rng, size=None) -> GroupElement:
        shape = (self.r,) if size is None else (size, self.r)
        return GroupElement(rng.uniform(-5.0, 5.0, size=shape), self.group_id)

    def random_state(self, rng: Rng, size=None) -> np.ndarray:
        shape = (self.n,) if size is None else (size, self.n)
        return rng.uniform(-5.0, 5.0, size=shape)


class ReacherGroup(TransformationGroup):
    """Base-joint rotation with target/height translation for the reacher.

    Observation layout (zero-based indices in brackets):
    cos/sin of the two joint angles ``x1, x2, x3, x4`` [0..3], target
    position ``x5, x6`` [4, 5], joint velocities ``x7, x8`` [6, 7],
    fingertip-minus-target offset ``x9, x10`` [8, 9], and fingertip height
    ``x11`` [10].

    An element ``(theta, d1, d2, d3)`` rotates the first joint pair, maps the
    target through ``R(theta) ((x5, x6) + (d1, d2))``, the offset through
    ``R(theta) ((x9, x10) - (d1, d2))``, adds ``d3`` to the height, and fixes
    everything else.  The cross-section pins ``x1 = 1, x3 = 0`` (base joint
    at angle zero) and ``x5 = x6 = x11 = 0``; the frame is singular where
    ``hypot(x1, x3)`` falls below ``HEADING_NORM_FLOOR``.
    """

    def __init__(self, group_id: str = "reacher"):
        super().__init__(
            group_id=group_id,
            r=4,
            n=11,
            n_u=2,
            a_indices=(0, 2, 4, 5, 10),
            cross_section=(1.0, 0.0, 0.0, 0.0, 0.0),
            angular_coords=(0,),
        )

    def _compose(self, c1, c2):
        cos2, sin2 = np.cos(c2[..., 0]), np.sin(c2[..., 0])
        # Translations apply before the rotation, so g1's translation is
        # carried back through g2's rotation.
        d1, d2 = _rotate(cos2, -sin2, c1[..., 1], c1[..., 2])
        shape = np.broadcast_shapes(c1.shape[:-1], c2.shape[:-1])
        out = np.empty(shape + (4,))
        out[..., 0] = wrap_angle(c1[..., 0] + c2[..., 0])
        out[..., 1] = c2[..., 1] + d1
        out[..., 2] = c2[..., 2] + d2
        out[..., 3] = c1[..., 3] + c2[..., 3]
        return out

    def _inverse(self, c):
        cos, sin = np.cos(c[..., 0]), np.sin(c[..., 0])
        d1, d2 = _rotate(cos, sin, c[..., 1], c[..., 2])
        out = np.empty(c.shape)
        out[..., 0] = wrap_angle(-c[..., 0])
        out[..., 1] = -d1
        out[..., 2] = -d2
        out[..., 3] = -c[..., 3]
        return out

    def _act_state(self, c, x):
        cos, sin = np.cos(c[..., 0]), np.sin(c[..., 0])
        d1, d2, d3 = c[..., 1], c[..., 2], c[..., 3]
        shape = np.broadcast_shapes(c.shape[:-1], x.shape[:-1])
        out = np.empty(shape + (11,))
        out[..., 0], out[..., 2] = _rotate(cos, sin, x[..., 0], x[..., 2])
        out[..., 1] = x[..., 1]
        out[..., 3] = x[..., 3]
        out[..., 4], out[..., 5] = _rotate(cos, sin, x[..., 4] + d1, x[..., 5] + d2)
        out[..., 6] = x[..., 6]
        out[..., 7] = x[..., 7]
        out[..., 8], out[..., 9] = _rotate(cos, sin, x[..., 8] - d1, x[..., 9] - d2)
        out[..., 10] = x[..., 10] + d3
        return out

    def _moving_frame(self, x):
        norm = np.hypot(x[..., 0], x[..., 2])
        if np.any(norm < HEADING_NORM_FLOOR):
            bad = np.argwhere(norm < HEADING_NORM_FLOOR)
            raise FrameSingularityError(
                f"base joint direction norm below {HEADING_NORM_FLOOR:g} at index "
                f"{bad[0].tolist()}; the frame is undefined there"
            )
        out = np.empty(x.shape[:-1] + (4,))
        out[..., 0] = np.arctan2(-x[..., 2], x[..., 0])
        out[..., 1] = -x[..., 4]
        out[..., 2] = -x[..., 5]
        out[..., 3] = -x[..., 10]
        return out

    def random_element(self, rng: Rng, size=None) -> GroupElement:
        shape = () if size is None else (size,)
        coords = np.empty(shape + (4,))
        coords[..., 0] = rng.angles(size=shape or None)
        coords[..., 1] = rng.uniform(-1.0, 1.0, size=shape or None)
        coords[..., 2] = rng.uniform(-1.0, 1.0, size=shape or None)
        coords[..., 3] = rng.uniform(-1.0, 1.0, size=shape or None)
        return GroupElement(coords, self.group_id)

    def random_state(self, rng: Rng, size=None) -> np.ndarray:
        shape = () if size is None else (size,)
        x = np.empty(shape + (11,))
        a1 = np.asarray(rng.angles(size=shape or None))
        a2 = np.asarray(rng.angles(size=shape or None))
        x[..., 0], x[..., 2] = np.cos(a1), np.sin(a1)
        x[..., 1], x[..., 3] = np.cos(a2), np.sin(a2)
        x[..., 4] = rng.uniform(-1.0, 1.0, size=shape or None)
        x[..., 5] = rng.uniform(-1.0, 1.0, size=shape or None)
        x[..., 6] = rng.uniform(-2.0, 2.0, size=shape or None)
        x[..., 7] = rng.uniform(-2.0, 2.0, size=shape or None)
        x[..., 8] = rng.uniform(-1.0, 1.0, size=shape or None)
        x[..., 9] = rng.uniform(-1.0, 1.0, size=shape or None)
        x[..., 10] = 0.0
        return x


class ProductGroup(TransformationGroup):
    """Blockwise product of factor groups.

    Each factor owns a contiguous state slice and a contiguous (possibly
    empty) control slice; element coordinates are the concatenation of the
    factor coordinates in declaration order.  State slices must partition the
    joint state and control slices the joint control space.
    """

    def __init__(self, group_id: str, factors):
        self.factors = []
        coord_start = 0
        for group, state_slice, control_slice in factors:
            s = slice(*state_slice) if isinstance(state_slice, tuple) else state_slice
            c = slice(*control_slice) if isinstance(control_slice, tuple) else control_slice
            cs = slice(coord_start, coord_start + group.r)
            self.factors.append((group, s, c, cs))
            coord_start += group.r

        n = sum(f[1].stop - f[1].start for f in self.factors)
        n_u = sum(f[2].stop - f[2].start for f in self.factors)
        self._check_partition([f[1] for f in self.factors], n, "state")
        self._check_partition([f[2] for f in self.factors], n_u, "control")
        for group, s, c, _ in self.factors:
            if s.stop - s.start != group.n:
                raise ValueError(
                    f"state slice {s.start}:{s.stop} does not match factor "
                    f"'{group.group_id}' dimension {group.n}"
                )
            if c.stop - c.start != group.n_u:
                raise ValueError(
                    f"control slice {c.start}:{c.stop} does not match factor "
                    f"'{group.group_id}' control dimension {group.n_u}"
                )

        a_indices = np.concatenate(
            [np.asarray(g.a_indices) + s.start for g, s, _, _ in self.factors]
        )
        cross = np.concatenate([g.cross_section for g, _, _, _ in self.factors])
        angular = tuple(
            cs.start + a for g, _, _, cs in self.factors for a in g.angular_coords
        )
        super().__init__(
            group_id=group_id,
            r=coord_start,
            n=n,
            n_u=n_u,
            a_indices=a_indices,
            cross_section=cross,
            angular_coords=angular,
            additive_homomorphic=all(g.additive_homomorphic for g, _, _, _ in self.factors),
        )

    @staticmethod
    def _check_partition(slices, total, what):
        covered = sorted((s.start, s.stop) for s in slices if s.stop > s.start)
        position = 0
        for start, stop in covered:
            if start != position:
                raise ValueError(f"{what} slices do not partition [0, {total})")
            position = stop
        if position != total:
            raise ValueError(f"{what} slices do not partition [0, {total})")

    def _per_factor(self, c, x, fn):
        shape = np.broadcast_shapes(c.shape[:-1], x.shape[:-1])
        out = np.empty(shape + (self.n,))
        for group, s, _, cs in self.factors:
            out[..., s] = fn(group, c[..., cs], x[..., s])
        return out

    def _compose(self, c1, c2):
        shape = np.broadcast_shapes(c1.shape[:-1], c2.shape[:-1])
        out = np.empty(shape + (self.r,))
        for group, _, _, cs in self.factors:
            out[..., cs] = group._compose(c1[..., cs], c2[..., cs])
        return out

    def _inverse(self, c):
        out = np.empty(c.shape)
        for group, _, _, cs in self.factors:
            out[..., cs] = group._inverse(c[..., cs])
        return out

    def _act_state(self, c, x):
        return self._per_factor(c, x, lambda g, cc, xx: g._act_state(cc, xx))

    def _act_control(self, c, u):
        shape = np.broadcast_shapes(c.shape[:-1], u.shape[:-1])
        out = np.empty(shape + (self.n_u,))
        for group, _, ctrl, cs in self.factors:
            if ctrl.stop > ctrl.start:
                out[..., ctrl] = group._act_control(c[..., cs], u[..., ctrl])
        return out

    def _moving_frame(self, x):
        out = np.empty(x.shape[:-1] + (self.r,))
        for group, s, _, cs in self.factors:
            out[..., cs] = group._moving_frame(x[..., s])
        return out

    def random_element(self, rng: Rng, size=None) -> GroupElement:
        shape = () if size is None else (size,)
        coords = np.empty(shape + (self.r,))
        for group, _, _, cs in self.factors:
            coords[..., cs] = group.random_element(rng, size=size).coords
        return GroupElement(coords, self.group_id)

    def random_state(self, rng: Rng, size=None) -> np.ndarray:
        shape = () if size is None else (size,)
        x = np.empty(shape + (self.n,))
        for group, s, _, _ in self.factors:
            x[..., s] = group.random_state(rng, size=size)
        return x


def make_parking_group() -> ProductGroup:
    """Joint group for the two-car parking state: one planar rigid-body group
    per car plus one constant-translation group per goal block.

    The 24-dimensional state reduces to 4 coordinates (each car's body-frame
    velocity pair); the 4 control inputs (2 per car) are untouched.
    """
    return ProductGroup(
        "parking2",
        [
            (SE2CarGroup(), (0, 6), (0, 2)),
            (SE2CarGroup(), (6, 12), (2, 4)),
            (ConstantTranslationGroup(6), (12, 18), (4, 4)),
            (ConstantTranslationGroup(6), (18, 24), (4, 4)),
        ],
    )


def make_reacher_group() -> ReacherGroup:
    """Group for the 11-dimensional reacher observation (see ReacherGroup)."""
    return ReacherGroup()


def get_group(group_id: str) -> TransformationGroup:
    """Look up a built-in group by id: se2car, parking2, reacher, const:<d>."""
    if group_id == "se2car":
        return SE2CarGroup()
    if group_id == "parking2":
        return make_parking_group()
    if group_id == "reacher":
        return make_reacher_group()
    if group_id.startswith("const:"):
        try:
            dim = int(group_id.split(":", 1)[1])
        except ValueError:
            dim = 0
        if dim <= 0:
            raise ValueError(f"invalid constant-translation group id '{group_id}'")
        return ConstantTranslationGroup(dim)
    raise ValueError(
        f"unknown group id '{group_id}' (expected se2car, parking2, reacher, const:<d>)"
    )
