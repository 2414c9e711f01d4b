import numpy as np
import pytest
import scipy.sparse as sp

from kzising import correlators as co
from kzising import ed_oracle as ed
from kzising import spinspin as ss
from kzising.bdg_solver import IntegratorConfig, evolve_grid, kink_density, spectrum
from kzising.errors import DegeneracyError, DomainError
from kzising.protocol import ChainSpec, Halt, RampProtocol


def ghz(N):
    psi = np.zeros(2 ** N, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return ed.DenseState(N, psi)


@pytest.mark.parametrize("N,g", [(4, 10.0), (6, 1.5), (8, 3.0), (12, 2.0)])
def test_ground_energy_matches_free_fermions(N, g):
    st = ed.ground_state(N, g)
    assert ed.energy(st, g) == pytest.approx(ed.free_fermion_ground_energy(N, g), abs=1e-8)
    assert abs(st.norm - 1) < 1e-12
    assert st.parity == pytest.approx(1.0, abs=1e-10)
    mz = (np.abs(st.amplitudes) ** 2) @ ed.spins(N)
    assert np.max(np.abs(mz)) < 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        ed.ground_state(14, 2.0)
    with pytest.raises(DomainError):
        ed.ground_state(4, 1.0)


def test_degeneracy_detected(monkeypatch):
    monkeypatch.setattr(ed, "hamiltonian", lambda N, g: sp.identity(2 ** N, format="csr"))
    with pytest.raises(DegeneracyError):
        ed.ground_state(4, 2.0)


def test_measure_reference_states():
    m = ed.measure_kinks(ghz(6))
    assert m.n == 0 and np.all(m.ckk == 0)
    np.testing.assert_allclose(m.czz, 1.0)
    N = 6
    plus = ed.DenseState(N, np.full(2 ** N, 2 ** (-N / 2), dtype=complex))
    m = ed.measure_kinks(plus)
    assert m.n == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_allclose(m.ckk, 0.0, atol=1e-14)


@pytest.fixture(scope="module")
def ramp8():
    pr = RampProtocol(1.0, halt=Halt(0.5, 3.0))
    st = ed.ground_state(8, pr.g0)
    fin, snaps = ed.evolve(st, pr, return_segments=True)
    return pr, fin, snaps


def test_invariants_along_ramp(ramp8):
    pr, fin, snaps = ramp8
    for s in snaps:
        assert abs(s.norm - 1) < 1e-9
        assert s.parity == pytest.approx(1.0, abs=1e-8)


def test_energy_conserved_during_halt(ramp8):
    pr, fin, snaps = ramp8
    g_w = pr.halt.g_w
    assert ed.energy(snaps[2], g_w) == pytest.approx(ed.energy(snaps[1], g_w), abs=1e-8)


def test_translation_invariance(ramp8):
    kn = ed.measure_kinks(ramp8[1]).bond_density
    assert np.max(kn) - np.min(kn) < 1e-10


def test_self_convergence():
    pr = RampProtocol(1.0)
    st = ed.ground_state(8, pr.g0)
    a = ed.evolve(st, pr).amplitudes
    b = ed.evolve(st, pr, IntegratorConfig().halved()).amplitudes
    assert np.max(np.abs(a - b)) < 1e-7


def test_adiabatic_fidelity():
    pr = RampProtocol(50.0)
    fin = ed.evolve(ed.ground_state(4, pr.g0), pr)
    assert abs(np.vdot(ghz(4).amplitudes, fin.amplitudes)) ** 2 >= 0.999
    assert abs(fin.norm - 1) < 1e-9


def test_density_and_correlators_match_pipeline():
    pr = RampProtocol(1.0)
    N = 8
    dense = ed.measure_kinks(ed.evolve(ed.ground_state(N, pr.g0), pr))
    modes = evolve_grid(pr, ChainSpec(N))
    assert kink_density(spectrum(pr, ChainSpec(N), modes=modes)) == pytest.approx(dense.n, abs=1e-6)
    fc = co.fermion_correlators(modes, N - 1)
    for R in range(1, N // 2 + 1):
        assert co.kink_kink_exact(fc, R) == pytest.approx(dense.ckk[R - 1], abs=1e-6)
        assert ss.czz_exact(fc, R) == pytest.approx(dense.czz[R - 1], abs=1e-6)


@pytest.mark.parametrize("N", [4, 6, 8])
def test_sector_isometry(N):
    B = ed.symmetric_sector(N)
    np.testing.assert_allclose((B.T @ B).toarray(), np.eye(B.shape[1]), atol=1e-14)


def test_rejects_non_symmetric_state():
    psi = np.zeros(16, dtype=complex)
    psi[1] = 1.0
    with pytest.raises(DomainError):
        ed.evolve(ed.DenseState(4, psi), RampProtocol(1.0))
