"""Pauli word algebra against dense-matrix oracles."""

import numpy as np
import pytest

from hamid.errors import DimensionError
from hamid.pauli import (
    BasisElement, PauliString, commutator_structure, commutes,
    expand_observable, full_basis, hs_inner, jacobi_defect, multiply,
    random_hermitian,
)


def dense(label):
    return PauliString.from_label(label).to_matrix()


class TestPauliString:
    def test_label_round_trip(self):
        for label in ("I", "X", "Y", "Z", "XZI", "IYX", "ZZYX"):
            assert PauliString.from_label(label).label == label

    def test_weight_and_masks(self):
        p = PauliString.from_label("XZIY")
        assert p.weight == 3
        assert p.x_mask == 0b1001
        assert p.z_mask == 0b1010
        assert p.support == (0, 1, 3)

    def test_identity(self):
        p = PauliString.from_label("III")
        assert p.is_identity and p.weight == 0

    def test_mask_bounds(self):
        with pytest.raises(ValueError):
            PauliString(2, 4, 0)
        with pytest.raises(ValueError):
            PauliString(0, 0, 0)

    def test_qubit0_is_leftmost(self):
        # XZ acts with X on qubit 0, which is the most significant bit
        m = dense("XZ")
        expected = np.kron(dense("X"), dense("Z"))
        assert np.array_equal(m, expected)


class TestMultiply:
    def test_involution(self):
        x0 = PauliString.from_label("XI")
        phase, word = multiply(x0, x0)
        assert phase == 1 and word.is_identity

    def test_xz_gives_y_with_unit_phase(self):
        x = PauliString.from_label("X")
        z = PauliString.from_label("Z")
        phase, word = multiply(x, z)
        assert word.label == "Y"
        assert phase ** 4 == 1
        # dense product pins the phase exactly
        assert np.allclose(dense("X") @ dense("Z"), phase * dense("Y"))

    def test_disjoint_supports(self):
        a = PauliString.from_label("XI")
        b = PauliString.from_label("IZ")
        phase, word = multiply(a, b)
        assert phase == 1 and word.label == "XZ"

    def test_exhaustive_dense_two_qubits(self):
        basis = full_basis(2)
        mats = [el.pauli.to_matrix() for el in basis]
        for i, a in enumerate(basis):
            for j, b in enumerate(basis):
                phase, word = multiply(a.pauli, b.pauli)
                assert np.allclose(mats[i] @ mats[j],
                                   phase * word.to_matrix(), atol=1e-13)

    def test_associative_with_phases(self):
        rng = np.random.default_rng(7)
        basis = full_basis(3)
        for _ in range(200):
            a, b, c = (basis[i].pauli
                       for i in rng.integers(0, len(basis), 3))
            p1, ab = multiply(a, b)
            p2, ab_c = multiply(ab, c)
            q1, bc = multiply(b, c)
            q2, a_bc = multiply(a, bc)
            assert ab_c == a_bc
            assert p1 * p2 == q1 * q2

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


class TestCommutatorStructure:
    def test_self_commutator_empty(self):
        basis = full_basis(2)
        assert commutator_structure(3, 3, basis) == []

    def test_disjoint_supports_empty(self):
        basis = full_basis(2)
        idx = {el.label: i for i, el in enumerate(basis)}
        assert commutator_structure(idx["XI"], idx["IZ"], basis) == []

    def test_single_qubit_xy_gives_z(self):
        basis = full_basis(1)
        idx = {el.label: i for i, el in enumerate(basis)}
        terms = commutator_structure(idx["X"], idx["Y"], basis)
        assert len(terms) == 1
        assert terms[0].target == idx["Z"]
        assert abs(abs(terms[0].coefficient) - np.sqrt(2)) < 1e-12
        # dense oracle pins the sign: [iX, iY] projected onto iZ
        x_m, y_m, z_m = (basis[idx[c]].to_matrix() for c in "XYZ")
        comm = (1j * x_m) @ (1j * y_m) - (1j * y_m) @ (1j * x_m)
        proj = np.trace((1j * z_m).conj().T @ comm).real
        assert abs(terms[0].coefficient - proj) < 1e-12

    def test_exhaustive_reconstruction_n3(self):
        # every commutator of basis elements reconstructs densely to 1e-12
        basis = full_basis(3)
        mats = [el.to_matrix() for el in basis]
        for j in range(len(basis)):
            for k in range(len(basis)):
                comm = (1j * mats[j]) @ (1j * mats[k]) \
                    - (1j * mats[k]) @ (1j * mats[j])
                recon = np.zeros_like(comm)
                for term in commutator_structure(j, k, basis):
                    recon += term.coefficient * (1j * mats[term.target])
                assert np.max(np.abs(recon - comm)) < 1e-12

    def test_antisymmetry(self):
        rng = np.random.default_rng(3)
        basis = full_basis(3)
        for _ in range(300):
            j, k = rng.integers(0, len(basis), 2)
            t_jk = commutator_structure(j, k, basis)
            t_kj = commutator_structure(k, j, basis)
            if not t_jk:
                assert not t_kj
                continue
            assert t_jk[0].target == t_kj[0].target
            assert t_jk[0].coefficient == -t_kj[0].coefficient

    def test_jacobi_identity(self):
        rng = np.random.default_rng(11)
        basis = full_basis(2)
        for _ in range(100):
            i, j, k = rng.integers(0, len(basis), 3)
            assert jacobi_defect(i, j, k, basis) < 1e-12


class TestHsInner:
    def test_orthonormality_exhaustive_n2(self):
        basis = full_basis(2)
        mats = [el.to_matrix() for el in basis]
        for i, a in enumerate(mats):
            for j, b in enumerate(mats):
                expected = 1.0 if i == j else 0.0
                assert abs(hs_inner(a, b) - expected) < 1e-12

    def test_projection_recovers_model_coefficient(self):
        # H built with a known word coefficient v: tr(H X) = v * 2^(n/2)
        v = 0.7
        h = v * dense("ZI")
        x_elem = BasisElement(PauliString.from_label("ZI")).to_matrix()
        assert abs(hs_inner(h, x_elem) - v * 2.0) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            hs_inner(np.eye(2), np.eye(4))


class TestExpandObservable:
    def test_single_basis_element(self):
        basis = full_basis(2)
        coeffs, ident = expand_observable(basis[3].to_matrix(), basis)
        assert coeffs == {3: pytest.approx(1.0)}
        assert ident == pytest.approx(0.0)

    def test_two_element_combination(self):
        basis = full_basis(2)
        obs = 0.4 * basis[3].to_matrix() + 1.5 * basis[5].to_matrix()
        coeffs, ident = expand_observable(obs, basis)
        assert set(coeffs) == {3, 5}
        assert coeffs[3] == pytest.approx(0.4)
        assert coeffs[5] == pytest.approx(1.5)
        assert ident == pytest.approx(0.0)

    def test_identity_component_tracked_separately(self):
        basis = full_basis(1)
        obs = 2.0 * np.eye(2) + 0.5 * dense("X")
        coeffs, ident = expand_observable(obs, basis)
        assert ident == pytest.approx(2.0)
        idx = {el.label: i for i, el in enumerate(basis)}
        assert coeffs[idx["X"]] == pytest.approx(0.5 * np.sqrt(2))

    def test_random_hermitian_matches_projection(self):
        rng = np.random.default_rng(5)
        basis = full_basis(2)
        obs = random_hermitian(2, rng)
        coeffs, ident = expand_observable(obs, basis)
        for j, el in enumerate(basis):
            assert coeffs.get(j, 0.0) == pytest.approx(
                hs_inner(el.to_matrix(), obs), abs=1e-12)
        recon = ident * np.eye(4, dtype=complex)
        for j, c in coeffs.items():
            recon = recon + c * basis[j].to_matrix()
        assert np.max(np.abs(recon - obs)) < 1e-10

    def test_non_hermitian_rejected(self):
        basis = full_basis(1)
        with pytest.raises(ValueError):
            expand_observable(np.array([[0, 1], [0, 0]], dtype=complex), basis)


def test_basis_order_is_weight_support_letters():
    basis = full_basis(2)
    labels = [el.label for el in basis]
    # weight-1 words on qubit 0 first, then qubit 1, then weight-2
    assert labels[:6] == ["XI", "YI", "ZI", "IX", "IY", "IZ"]
    assert labels[6] == "XX"
    assert len(labels) == 15


def test_commutes_matches_dense():
    rng = np.random.default_rng(1)
    basis = full_basis(3)
    for _ in range(200):
        j, k = rng.integers(0, len(basis), 2)
        a, b = basis[j].pauli, basis[k].pauli
        dense_comm = a.to_matrix() @ b.to_matrix() - b.to_matrix() @ a.to_matrix()
        assert commutes(a, b) == bool(np.allclose(dense_comm, 0))
