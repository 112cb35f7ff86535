"""Exception hierarchy shared by the simulation and analysis services.

Each error carries the CLI exit code it maps to; library code only raises,
``app.scripts.lzs_cli`` converts to exit codes.
"""

from __future__ import annotations

from typing import Optional, Tuple

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class LZSError(Exception):
    exit_code: int = 1


class ValidationError(LZSError, ValueError):
    """不正なパラメータ（パルス・スペクトル・グリッド・設定値）"""

    exit_code = EXIT_VALIDATION


class DomainError(ValidationError):
    """Time or flux argument outside the domain of the pulse."""


class AnticrossingNotCrossedError(ValidationError):
    def __init__(self, phi_f: float, location: float = 0.0) -> None:
        super().__init__(
            f"anticrossing not crossed: phi_f={phi_f:g} mPhi0 does not pass "
            f"the crossing at {location:g} mPhi0"
        )
        self.phi_f = phi_f
        self.location = location


class ConfigError(ValidationError):
    pass


class IntegrationError(LZSError):
    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, t_reached: Optional[float] = None) -> None:
        super().__init__(message)
        self.t_reached = t_reached


class SweepCellError(IntegrationError):
    def __init__(
        self, phi_f: float, tau: float, cause: Optional[BaseException] = None
    ) -> None:
        t_reached = getattr(cause, "t_reached", None)
        super().__init__(
            f"integration failed at cell phi_f={phi_f:.9g} mPhi0, tau={tau:.9g} ns"
            + (f": {cause}" if cause is not None else ""),
            t_reached=t_reached,
        )
        self.cell: Tuple[float, float] = (phi_f, tau)


class FitError(LZSError):
    exit_code = EXIT_NUMERIC


class InconsistentPointsError(FitError):
    pass


class SchemaError(LZSError):
    """CSV/設定ファイルの内容が不正"""

    exit_code = EXIT_VALIDATION

    def __init__(
        self, message: str, row: Optional[int] = None, column: Optional[str] = None
    ) -> None:
        location = ""
        if row is not None:
            location += f" (row {row}"
            location += f", column {column})" if column is not None else ")"
        super().__init__(message + location)
        self.row = row
        self.column = column
