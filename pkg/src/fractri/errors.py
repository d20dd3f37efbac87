"""Exception hierarchy shared by the library and the command line."""


class FractriError(ValueError):
    """Base class for domain errors (mapped to exit code 3 by the CLI)."""


class DegenerateTriangleError(FractriError):
    pass


class DomainError(FractriError):
    """A point lies outside the interpolation domain."""


class ColoringError(FractriError):
    """No rainbow 3-coloring exists for the requested partition."""


class MissingDataError(FractriError):
    pass


class SingularModelError(FractriError):
    """Sum of alpha_n7 * delta_n is too close to 1 to divide by 1 - A."""


class ConvergenceError(FractriError):
    """Fixed-point evaluation ran out of iterations before reaching tol.

    ``values`` holds the partial sums and ``bound`` the achieved error bound.
    """

    def __init__(self, message, values=None, bound=None):
        super().__init__(message)
        self.values = values
        self.bound = bound
