"""Exception hierarchy.

Input errors (bad files, bad schemas, bad labels) derive from
:class:`InputError`; failures during signal processing or model fitting derive
from :class:`ComputeError`. The command line maps the two families to exit
codes 2 and 3.
"""


class EmosensError(Exception):
    """Base class for every error raised by this package.

    ``stage`` is filled in when an error crosses a pipeline boundary
    (e.g. ``"detect_r_peaks"`` during feature extraction).
    """

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class InputError(EmosensError):
    pass


class ComputeError(EmosensError):
    pass


# --- input side ---------------------------------------------------------

class IoError(InputError):
    """A referenced file is missing or unreadable."""


class FormatError(InputError):
    """A file parsed but its content breaks the declared format."""


class LabelError(InputError):
    """An emotion string outside the nine-label set."""


class SchemaError(InputError):
    """A feature table is missing canonical columns."""


class ParseError(InputError):
    """A cell could not be converted to a number."""


class ShapeError(InputError):
    pass


class InvalidSchedule(InputError):
    pass


class UnsupportedRate(InputError):
    pass


class InvalidHyperParams(InputError):
    pass


class InvalidK(InvalidHyperParams):
    pass


class TooManyFolds(InputError):
    pass


class EmptyGrid(InputError):
    pass


# --- compute side -------------------------------------------------------

class InsufficientSignal(ComputeError):
    pass


class NoBeatsDetected(ComputeError):
    pass


class InsufficientData(ComputeError):
    pass


class InsufficientSpan(ComputeError):
    pass


class EmptyFit(ComputeError):
    pass


class EmptyTrain(ComputeError):
    pass


class NonFiniteGradient(ComputeError):
    """Boosting scores overflowed; usually a learning rate that is too high."""
