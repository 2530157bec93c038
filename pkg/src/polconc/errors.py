"""Exception hierarchy. Every error carries a stable string code and a CLI exit status."""


class PolconcError(Exception):
    code = "Error"
    exit_status = 4


class ConfigInvalid(PolconcError):
    code = "ConfigInvalid"
    exit_status = 2


class StateInvalid(PolconcError):
    code = "StateInvalid"
    exit_status = 3


class ProtocolFailed(PolconcError):
    code = "ProtocolFailed"
    exit_status = 4


class NonHermitianInput(StateInvalid):
    code = "NonHermitianInput"


class NotNormalized(StateInvalid):
    code = "NotNormalized"


class NotAState(StateInvalid):
    code = "NotAState"


class DimensionMismatch(StateInvalid):
    code = "DimensionMismatch"


class NotUnitary(ProtocolFailed):
    code = "NotUnitary"


class NotApplicable(ProtocolFailed):
    code = "NotApplicable"


class InvalidAngles(ConfigInvalid):
    code = "InvalidAngles"


class OutOfRange(ConfigInvalid):
    code = "OutOfRange"


class InvalidShots(ConfigInvalid):
    code = "InvalidShots"


class IncompleteSettings(ProtocolFailed):
    code = "IncompleteSettings"
