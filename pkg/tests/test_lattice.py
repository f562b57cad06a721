import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_killing.lattice import (
    HONEYCOMB, DualLattice, Lattice, LatticeError, ThreeLineConfig, dual_basis, dual_pairing_defect,
    lattice_from_descriptor, lattice_to_descriptor, normalize_basis, pq_config,
)

TWO_PI = 2 * math.pi


def test_dual_of_scaled_identity():
    d = dual_basis(Lattice(TWO_PI * np.eye(2)))
    assert np.allclose(d.basis, np.eye(2), atol=1e-15)


def test_dual_of_identity():
    d = dual_basis(Lattice(np.eye(2)))
    assert np.allclose(d.basis, TWO_PI * np.eye(2), atol=1e-15)


def test_dual_of_hexagonal_pairs_into_2pi_integers():
    lat = Lattice.from_generators((TWO_PI, 0), (math.pi, math.pi * math.sqrt(3)))
    d = dual_basis(lat)
    for k in d.basis.T:
        for n in lat.basis.T:
            q = k @ n / TWO_PI
            assert abs(q - round(q)) < 1e-9
    assert np.allclose(d.basis.T @ lat.basis, TWO_PI * np.eye(2))


def test_singular_basis_rejected():
    with pytest.raises(LatticeError):
        Lattice(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(LatticeError):
        dual_basis(Lattice.from_generators((1, 1), (1, 1 + 1e-14)))


bases = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4).map(
    lambda v: np.array(v).reshape(2, 2)
).filter(lambda b: abs(np.linalg.det(b)) > 0.05 * max(1.0, np.sum(b**2)))


@settings(max_examples=60, deadline=None)
@given(bases)
def test_double_dual_is_same_lattice(b):
    lat = Lattice(b)
    dd = dual_basis(Lattice(dual_basis(lat).basis))
    U = np.linalg.solve(lat.basis, dd.basis)
    assert np.allclose(U, np.round(U), atol=1e-8)
    assert abs(abs(np.linalg.det(np.round(U))) - 1) < 1e-9
    assert dual_pairing_defect(lat, dual_basis(lat)) < 1e-9


def test_normalize_scales_then_reduces_b():
    dual = DualLattice(np.column_stack([(2.0, 0.0), (2.6, 1.4)]))
    out, sim = normalize_basis(dual)
    assert out.normalized == pytest.approx((0.3, 0.7), abs=1e-12)
    assert sim.scale == pytest.approx(0.5)
    assert np.allclose(out.basis, [[1, 0.3], [0, 0.7]], atol=1e-12)


def test_normal_form_is_left_alone():
    dual = DualLattice(np.column_stack([(1.0, 0.0), (0.5, math.sqrt(3) / 2)]))
    out, sim = normalize_basis(dual)
    assert sim.is_identity
    assert np.allclose(out.basis, dual.basis, atol=1e-15)


def test_normalize_flips_then_shears():
    dual = DualLattice(np.column_stack([(1.0, 0.0), (1.5, -0.8)]))
    out, sim = normalize_basis(dual)
    assert out.normalized == pytest.approx((0.5, 0.8), abs=1e-12)
    assert round(np.linalg.det(sim.unimodular)) == -1


def _point_set(basis, radius=2):
    pts = Lattice(basis).points(radius)
    return {tuple(np.round(p, 8)) for p in pts}


@settings(max_examples=60, deadline=None)
@given(bases, st.sampled_from(["first", "shortest"]))
def test_normalized_lattice_is_rotated_scaled_copy(b, anchor):
    dual = DualLattice(b)
    out, sim = normalize_basis(dual, anchor=anchor)
    b_out, d_out = out.normalized
    assert 0 <= b_out < 1 and d_out > 0
    mapped = sim.scale * sim.rotation() @ dual.basis
    # same lattice: the change of basis is unimodular
    U = np.linalg.solve(mapped, out.basis)
    assert np.allclose(U, np.round(U), atol=1e-7)
    assert abs(abs(np.linalg.det(np.round(U))) - 1) < 1e-9
    # and a 5x5 patch of output points lies in the mapped lattice
    idx = np.linalg.solve(mapped, Lattice(out.basis).points(2).T)
    assert np.allclose(idx, np.round(idx), atol=1e-7)


def test_shortest_anchor_tie_break_smallest_angle():
    # square lattice rotated by 30 degrees: four shortest vectors, pick angle 30 deg
    R = np.array([[math.cos(0.5236), -math.sin(0.5236)], [math.sin(0.5236), math.cos(0.5236)]])
    dual = DualLattice(R @ np.column_stack([(0.0, 2.0), (-2.0, 0.0)]))
    out, sim = normalize_basis(dual, anchor="shortest")
    assert sim.angle == pytest.approx(-0.5236)
    assert out.normalized == pytest.approx((0.0, 1.0), abs=1e-12)


def test_honeycomb_parameters():
    cfg = pq_config((0, 1), (-1, 1))
    assert cfg.b == pytest.approx(0.5)
    assert cfg.d == pytest.approx(math.sqrt(3) / 2)
    assert (cfg.delta, cfg.d_gcd, cfg.p2_prime, cfg.q2_prime) == (1, 1, 1, 1)


def test_quarter_shift_configuration():
    cfg = pq_config((0, 1), (-1, 2))
    assert cfg.b == pytest.approx(0.25)
    assert cfg.d == pytest.approx(math.sqrt(3) / 4)


def test_inequality_failure_is_named():
    with pytest.raises(LatticeError, match="q1 < 0"):
        pq_config((1, 1), (1, 1))
    with pytest.raises(LatticeError, match="gcd"):
        pq_config((2, 2), (-1, 1))
    with pytest.raises(LatticeError, match="p1"):
        pq_config((3, 1), (-1, 1))


def test_strided_configuration_integers():
    cfg = pq_config((1, 3), (-1, 2))
    assert (cfg.d_gcd, cfg.p2_prime, cfg.q2_prime, cfg.delta) == (1, 3, 2, 5)
    assert cfg.determinant > 0


def _valid_configs(R=6):
    out = []
    for p1 in range(-R, R + 1):
        for p2 in range(1, R + 1):
            for q1 in range(-R, 0):
                for q2 in range(1, R + 1):
                    try:
                        out.append(ThreeLineConfig((p1, p2), (q1, q2)))
                    except LatticeError:
                        pass
    return out


def test_generators_sit_on_lines_at_sixty_degrees():
    cfgs = _valid_configs()
    assert len(cfgs) > 20
    for cfg in cfgs:
        g = cfg.generators()
        angles = [math.atan2(v[1], v[0]) for v in (g["L0"], g["L1"], g["L2"])]
        assert angles[0] == pytest.approx(0.0, abs=1e-9)
        assert angles[1] == pytest.approx(math.pi / 3, abs=1e-9)
        assert angles[2] == pytest.approx(2 * math.pi / 3, abs=1e-9)
        assert cfg.delta != 0
        assert math.gcd(cfg.p2_prime, cfg.q2_prime) == 1
        # the generators are genuine nodes of the normalized dual lattice
        assert np.allclose(cfg.dual().node(*cfg.p), g["L1"])


def test_descriptor_round_trip():
    for obj in (HONEYCOMB, DualLattice(np.array([[1.0, 0.2], [0.0, 1.3]]))):
        back = lattice_from_descriptor(lattice_to_descriptor(obj))
        if isinstance(obj, ThreeLineConfig):
            assert back == obj
        else:
            assert np.array_equal(back.basis, obj.basis)
    prim = lattice_from_descriptor({"primal": [[TWO_PI, 0], [0, TWO_PI]]})
    assert np.allclose(prim.basis, np.eye(2))
    with pytest.raises(LatticeError):
        lattice_from_descriptor({"nothing": 1})
