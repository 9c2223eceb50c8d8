"""Exception types shared across the package."""


class ShapeMismatch(ValueError):
    """Operands have incompatible dimensions."""


class BadMagic(ValueError):
    """File does not start with the expected magic bytes."""


class TruncatedPayload(ValueError):
    """File payload is shorter (or longer) than its header declares."""


class UnsupportedRank(ValueError):
    """Tensor rank outside the supported 1..4 range."""


class WeightShapeMismatch(ValueError):
    """Network layer shapes do not chain, or do not match the input."""


class UnknownLayerKind(ValueError):
    """Weight file contains a layer tag this reader does not know."""


class NonPositiveGamma(ValueError):
    """ADMM step requires gamma > 0."""


class GammaOutOfRange(ValueError):
    """Theorem quantities require 0 < gamma < 1."""


class OutOfAlphabet(ValueError):
    """Latent entries fall outside the [-1, 1] alphabet."""


class TooLarge(ValueError):
    """Dense assembly refused: the explicit matrix would be too big."""


class CropOutOfBounds(ValueError):
    """Requested mask crop exceeds the source extent."""


class EmptyDataset(ValueError):
    """Benchmark directory contains no usable scenes."""
