import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import random_tree, to_graph
from smores_assembly.geometry import MODULE_WIDTH as W, Pose2, wrap_angle
from smores_assembly.layout import (
    RELATIVE_POSES,
    OverlapError,
    UnfoldedLayout,
    check_unfoldable,
    relative_pose,
    unfold,
)
from smores_assembly.scenario import bundled, load_scenario
from smores_assembly.topology import FACES, ConfigGraph, Connection, Face, InvalidTopology

T, B, L, R = Face.TOP, Face.BOTTOM, Face.LEFT, Face.RIGHT

# outward normals in the body frame, written out independently of the package
NORMAL = {T: (1.0, 0.0), L: (0.0, 1.0), B: (-1.0, 0.0), R: (0.0, -1.0)}


def mating_oracle(pface, cface):
    """Child pose that puts its connector on the parent's, facing it."""
    n = np.array(NORMAL[pface])
    m = np.array(NORMAL[cface])
    # rotate m onto -n
    theta = math.atan2(-n[1], -n[0]) - math.atan2(m[1], m[0])
    c, s = math.cos(theta), math.sin(theta)
    rot_m = np.array([c * m[0] - s * m[1], s * m[0] + c * m[1]])
    centre = n * W / 2 - rot_m * W / 2
    return centre, wrap_angle(theta)


class TestRelativePose:
    def test_top_top(self):
        assert np.allclose(relative_pose(Connection(T, T)), (W, 0, math.pi))

    def test_top_bottom(self):
        assert np.allclose(relative_pose(Connection(T, B)), (W, 0, 0))

    def test_left_left(self):
        assert np.allclose(relative_pose(Connection(L, L)), (0, W, math.pi))

    @pytest.mark.parametrize("pf", FACES)
    @pytest.mark.parametrize("cf", FACES)
    def test_table_matches_geometry(self, pf, cf):
        centre, theta = mating_oracle(pf, cf)
        p = RELATIVE_POSES[pf, cf]
        assert p.x == pytest.approx(centre[0], abs=1e-15)
        assert p.y == pytest.approx(centre[1], abs=1e-15)
        assert abs(wrap_angle(p.theta - theta)) < 1e-15
        assert -math.pi < p.theta <= math.pi

    def test_excluded_orientation_rejected(self):
        with pytest.raises(ValueError):
            relative_pose(Connection(B, B, 1))

    @pytest.mark.parametrize("pf", FACES)
    @pytest.mark.parametrize("cf", FACES)
    def test_edge_then_inverse_is_identity(self, pf, cf):
        p = RELATIVE_POSES[pf, cf]
        back = p.compose(p.inverse())
        assert max(abs(back.x), abs(back.y), abs(back.theta)) < 1e-12


class TestUnfold:
    def test_chain(self):
        g = ConfigGraph([1, 2, 3], [(1, 2, Connection(T, T)), (2, 3, Connection(R, L))])
        lay = unfold(g)
        assert lay.root == 2
        assert lay.pose[2] == (0.0, 0.0, 0.0)
        assert np.allclose(lay.pose[1], (W, 0, math.pi))
        assert np.allclose(lay.pose[3], (0, -W, 0))
        c = lay.centers()
        d = np.hypot(*(c[:, None, :] - c[None, :, :]).transpose(2, 0, 1))
        assert d[~np.eye(3, dtype=bool)].min() >= W - 1e-12

    def test_rotated_parent(self):
        child = Pose2(0, 0, math.pi / 2).compose(Pose2(W, 0, math.pi))
        assert np.allclose(child, (0, W, -math.pi / 2))

    def test_straight_path_collinear(self):
        n = 6
        g = ConfigGraph(range(n), [(i, i + 1, Connection(T, B)) for i in range(n - 1)])
        lay = unfold(g, root=0)
        xs = [lay.pose[i].x for i in range(n)]
        assert np.allclose(np.diff(xs), W, atol=1e-15)
        assert all(abs(lay.pose[i].y) < 1e-15 for i in range(n))

    def test_u_shape_overlap(self):
        # 0 -T 1 -T 2 -L 3 -L 4 -T 5 -L 6 : the last module lands on the first
        steps = [T, T, L, L, T, L]
        g = ConfigGraph(range(7), [(i, i + 1, Connection(f, B)) for i, f in enumerate(steps)])
        with pytest.raises(OverlapError) as err:
            unfold(g, root=0)
        assert (0, 6) in err.value.pairs
        rep = check_unfoldable(g)
        assert not rep.ok and (0, 6) in rep.overlaps

    def test_task1_target_unfoldable(self):
        assert check_unfoldable(load_scenario(bundled("task1")).target).ok

    def test_invalid_topology(self):
        with pytest.raises(InvalidTopology):
            unfold(ConfigGraph([1, 2], []))
        assert not check_unfoldable(ConfigGraph([1, 2], []))

    def test_json_and_svg(self):
        lay = unfold(load_scenario(bundled("task1")).target)
        doc = json.loads(lay.to_json())
        assert set(doc) == {str(k) for k in lay.pose}
        assert UnfoldedLayout.from_dict(doc).pose == lay.pose
        svg = lay.to_svg()
        assert svg.startswith("<svg") and svg.count("<polygon") == len(lay.pose)


@given(st.integers(2, 25), st.integers(0, 2**31 - 1))
def test_edges_have_module_width(n, seed):
    rng = np.random.default_rng(seed)
    g = to_graph(n, random_tree(rng, n), rng)
    try:
        lay = unfold(g)
    except OverlapError:
        return
    assert lay.pose[lay.root] == (0.0, 0.0, 0.0)
    for e in g.edges:
        a, b = lay.pose[e.a], lay.pose[e.b]
        assert abs(math.hypot(a.x - b.x, a.y - b.y) - W) < 1e-12
    for p in lay.pose.values():
        assert -math.pi < p.theta <= math.pi
    c = lay.centers()
    d = np.hypot(*(c[:, None, :] - c[None, :, :]).transpose(2, 0, 1))
    assert d[~np.eye(n, dtype=bool)].min() >= W - 1e-6
