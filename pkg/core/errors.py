"""Copyright 2025 The ghive developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

__all__ = (
    "CsvParseError",
    "DegenerateCovarianceError",
    "DimensionMismatchError",
    "FamilyDomainError",
    "FoldTooSmallError",
    "GhiveError",
    "NumericalError",
    "SigmaZNotPositiveDefiniteError",
    "SingularGMatrixError",
    "ValidationError",
)


class GhiveError(Exception):
    """Base exception for every error raised by this library."""

    exit_code: int = 1


class ValidationError(GhiveError):
    """Inputs violate a documented precondition."""

    exit_code = 2


class FamilyDomainError(ValidationError, ValueError):
    """A family function received a value outside its domain."""


class CsvParseError(ValidationError):
    def __init__(self, message: str, *, path: str, row: int | None = None, column: int | None = None) -> None:
        self.path: str = path
        self.row: int | None = row
        self.column: int | None = column

        where: str = path
        if row is not None:
            where += f", row {row}"
        if column is not None:
            where += f", column {column}"

        super().__init__(f"{where}: {message}")


class DimensionMismatchError(ValidationError):
    pass


class FoldTooSmallError(ValidationError):
    def __init__(self, fold: str, rows: int, p: int) -> None:
        self.fold: str = fold
        super().__init__(f"Fold {fold} has {rows} rows but at least p={p} are required.")


class NumericalError(GhiveError):
    """A numerical procedure could not produce a usable result."""

    exit_code = 1


class DegenerateCovarianceError(NumericalError):
    pass


class SingularGMatrixError(NumericalError):
    def __init__(self, response: int) -> None:
        self.response: int = response
        super().__init__(f"G matrix of response {response} is not invertible after regularization.")


class SigmaZNotPositiveDefiniteError(NumericalError):
    pass
