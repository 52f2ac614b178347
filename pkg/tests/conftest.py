import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm as sp_expm

from gaussio.states import quadrature_unitary, symplectic_form
from gaussio.system import SystemSpec, _swap_pairs


def rel_err(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


def random_stable_matrix(rng, n, shift=0.5, scale=1.0):
    m = scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return m - (np.max(np.linalg.eigvals(m).real) + shift) * np.eye(n)


def random_psd(rng, n, rank=None):
    g = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    return g @ g.conj().T / n


def random_hamiltonian(rng, n, passive=1.0, active=0.2):
    """Ladder-ordered H of ``sum W_jk a_j^dag a_k + 1/2 sum (G_jk a_j^dag a_k^dag + h.c.)``."""
    w = passive * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    w = (w + w.conj().T) / 2
    g = active * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    g = (g + g.T) / 2
    h = np.zeros((2 * n, 2 * n), complex)
    h[1::2, 0::2] = w
    h[0::2, 1::2] = w.T
    h[1::2, 1::2] = g
    h[0::2, 0::2] = g.conj()
    return h


def random_hermitian_h(rng, n, scale=1.0):
    """Unstructured symmetric H obeying the Hermiticity pairing."""
    x = scale * (rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n)))
    h0 = x + x.T
    p = _swap_pairs(n)
    return (h0 + p @ h0.conj() @ p) / 2


def random_symplectic(rng, n, scale=0.4):
    """Real quadrature symplectic matrix exp(Omega G), G random real symmetric."""
    g = rng.normal(size=(2 * n, 2 * n)) * scale
    return sp_expm(symplectic_form(n) @ (g + g.T) / 2)


def random_physical_bath(rng, kappa):
    """K sigma K with sigma a random mixed Gaussian CM (ladder basis)."""
    n = len(kappa)
    s = random_symplectic(rng, n)
    d = np.repeat(1 + 2 * rng.uniform(0, 1.5, n), 2)
    sq = s @ np.diag(d) @ s.T
    u = quadrature_unitary(n)
    lad = u.conj().T @ sq @ u
    k = np.diag(np.sqrt(np.repeat(kappa, 2)))
    return k @ lad @ k


def random_stable_spec(rng, n, max_tries=200):
    from gaussio.system import build_drift

    for _ in range(max_tries):
        kappa = rng.uniform(0.5, 2.0, n)
        h = random_hamiltonian(rng, n)
        v = np.zeros(2 * n, complex)
        v[0::2] = rng.normal(size=n) + 1j * rng.normal(size=n)
        v[1::2] = v[0::2].conj()
        spec = SystemSpec(h, kappa, random_physical_bath(rng, kappa), V=v)
        if build_drift(spec).stable:
            return spec
    raise RuntimeError("no stable draw")


def quad_noise_integral(a, s, t):
    """Oracle: adaptive quadrature of exp(At') s exp(A^dag t') from an eigendecomposition."""
    w, v = np.linalg.eig(a)
    vinv = np.linalg.inv(v)

    def integrand(tp):
        e = (v * np.exp(w * tp)) @ vinv
        return (e @ s @ e.conj().T).ravel()

    val, _ = quad_vec(integrand, 0, t, epsabs=0, epsrel=1e-12, limit=2000)
    return val.reshape(a.shape)


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for rep in terminalreporter.getreports("passed") + terminalreporter.getreports("failed")
        for name, value in rep.user_properties
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
