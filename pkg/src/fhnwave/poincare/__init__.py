from fhnwave.poincare.map import PoincareMap, poincare_derivative_enclosure, poincare_enclosure
from fhnwave.poincare.section import AffineSection, SectionImage, complement_frame

__all__ = [
    "AffineSection",
    "PoincareMap",
    "SectionImage",
    "complement_frame",
    "poincare_derivative_enclosure",
    "poincare_enclosure",
]
