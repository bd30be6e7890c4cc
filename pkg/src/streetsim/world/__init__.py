"""The immutable environment: street graph, places and object instances."""
from .generate import INSTANCE_EXTENTS, WorldParams, default_vocabulary, generate_world
from .io import load_world, read_world, save_world, validate_world, world_to_document, write_world
from .model import (DEFAULT_RELOCATE_RADIUS_M, Edge, ObjectInstance, Place, Review, StreetNode,
                    World, nearby_places, place_details, relocate)

__all__ = [
    "DEFAULT_RELOCATE_RADIUS_M", "Edge", "INSTANCE_EXTENTS", "ObjectInstance", "Place", "Review",
    "StreetNode", "World", "WorldParams", "default_vocabulary", "generate_world", "load_world",
    "nearby_places", "place_details", "read_world", "relocate", "save_world", "validate_world",
    "world_to_document", "write_world",
]
