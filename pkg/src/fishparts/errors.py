"""Exception hierarchy for the fishparts pipeline."""


class FishPartsError(Exception):
    """Base class for all pipeline errors."""


class NoForeground(FishPartsError):
    """Fallback segmentation found no pixel that passes the threshold."""


class EmptyMask(FishPartsError):
    """A mask with zero foreground pixels was given to an op that needs one."""


class DegenerateShape(FishPartsError):
    """Shape is too isotropic to define a principal axis (circle-like)."""


class FragmentedMask(FishPartsError):
    """Column scan of the mask found gaps wider than the allowed tolerance."""


class NoTailNotch(FishPartsError):
    """No local boundary extremum exists inside the tail search window."""


class GeometryError(FishPartsError):
    """A fitted region has a non-positive axis or an empty support."""


class NoOverlap(FishPartsError):
    """Box does not cover any foreground pixel of the label map."""


class PlacementInfeasible(FishPartsError):
    """No valid patch placement was found within the retry budget."""


class EmptyRing(FishPartsError):
    """The reference ring around a placement has no fish pixels."""


class NoGroundTruth(FishPartsError):
    """AP requested for a class with zero ground-truth boxes."""


class NoClasses(FishPartsError):
    """mAP requested over an empty class set."""


class TooFewIdentities(FishPartsError):
    """Fewer distinct identities than requested folds."""


class OutOfFrame(FishPartsError):
    """Annotation box misses the fish crop entirely."""


class EmptyInput(FishPartsError):
    """An accumulation op received no inputs."""


class ConfigError(FishPartsError):
    """Configuration value outside its documented valid range."""


class ParseError(FishPartsError):
    """A record file failed to parse; carries file and line context."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno
