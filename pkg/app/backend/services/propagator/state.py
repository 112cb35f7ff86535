from __future__ import annotations

import numpy as np

from app.backend.services.errors import ValidationError

from .models import StateDiagnostics


def initial_state(dim: int) -> np.ndarray:
    """Pure state on |L0>: diag(1, 0, ...)."""
    if dim not in (2, 3):
        raise ValidationError(f"density matrix dimension must be 2 or 3, got {dim}")
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def liouville_rhs(hamiltonian: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """drho/dt = -i[H, rho] (decay tensor omitted)."""
    if hamiltonian.shape != rho.shape or hamiltonian.shape[0] != hamiltonian.shape[1]:
        raise ValidationError(
            f"dimension mismatch: H {hamiltonian.shape} vs rho {rho.shape}"
        )
    return -1j * (hamiltonian @ rho - rho @ hamiltonian)


def diagnose(rho: np.ndarray) -> StateDiagnostics:
    hermitian_part = 0.5 * (rho + rho.conj().T)
    return StateDiagnostics(
        trace_error=float(abs(np.trace(rho) - 1.0)),
        hermiticity_error=float(np.max(np.abs(rho - rho.conj().T))),
        min_eigenvalue=float(np.min(np.linalg.eigvalsh(hermitian_part))),
        purity=float(np.real(np.trace(rho @ rho))),
    )
