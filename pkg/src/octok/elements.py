"""Stable type-id vocabulary: atomic numbers for elements, then specials.

Ids never change between releases; id 0 is reserved and never assigned.
"""
from .errors import InvalidInput

SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
assert len(SYMBOLS) == 118

N_ELEMENTS = 118
LAT = 119   # lattice vertex
MASK = 120
BOS = 121
EOS = 122
OCC = 123   # occupied voxel
VOCAB_SIZE = 124

SPECIALS = {"LAT": LAT, "MASK": MASK, "BOS": BOS, "EOS": EOS, "OCC": OCC}

_BY_SYMBOL = {s.lower(): i + 1 for i, s in enumerate(SYMBOLS)}
_BY_SYMBOL.update({k.lower(): v for k, v in SPECIALS.items()})
_BY_ID = {v: k for k, v in SPECIALS.items()}
_BY_ID.update({i + 1: s for i, s in enumerate(SYMBOLS)})


def type_id(symbol: str) -> int:
    try:
        return _BY_SYMBOL[symbol.strip().lower()]
    except KeyError:
        raise InvalidInput(f"unknown element symbol {symbol!r}") from None


def symbol(tid: int) -> str:
    try:
        return _BY_ID[tid]
    except KeyError:
        raise InvalidInput(f"unknown type id {tid}") from None


def is_site_type(tid: int) -> bool:
    """Types that may label a site (elements, lattice vertices, voxels)."""
    return 1 <= tid <= N_ELEMENTS or tid in (LAT, OCC)
