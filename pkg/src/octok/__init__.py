"""Coarse-to-fine octree tokenization of sparse 3D structures."""
from .errors import (AlreadyExpanded, InvalidCode, InvalidInput, LeafCollision, MalformedSequence,
                     OctokError, OutOfBounds, ParseError, TooLarge)
from .geometry import (Frame, GridConfig, GridSpec, Site, cell_center, dequantize_offset, fit_grid,
                       leaf_index_of, quantize_offset, random_rotation)
from .octree import Octree, build_octree, children_from_code, morton_decode, morton_encode, subtree_code
from .tokenizer import (Token, TokenSequence, decode, mntp_expand, serialize, serialize_frame,
                        token_stats)

__version__ = "0.1.0"
