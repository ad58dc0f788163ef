"""Exception types raised across the simulator."""


class IfbsaError(Exception):
    pass


class PhotonCapExceeded(IfbsaError):
    pass


class ModeCapExceeded(IfbsaError):
    pass


class SlotOverflow(IfbsaError):
    pass


class ZeroNorm(IfbsaError):
    pass


class AmbiguousOutcome(IfbsaError):
    pass


class ConfigInvalid(IfbsaError):
    pass


class DegenerateDesign(IfbsaError):
    pass


class GridMismatch(IfbsaError):
    pass
