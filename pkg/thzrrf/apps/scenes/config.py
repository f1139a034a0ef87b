"""
Scene file loader.

Schema (YAML)::

    name: room                      # optional
    materials:
      plaster:
        scattering_coefficient: 0.6
        lobe_exponent: 4
        reflection_reduction: 0.8   # optional, default 1.0
    facets:
      - material: plaster
        vertices: [[x, y, z], [x, y, z], [x, y, z]]   # or four corners of a planar quad
    tx:
      position: [x, y, z]
      frequency: 3.0e+11            # optional, Hz
    sampling_volume:                # optional, required for dataset generation
      min: [x, y, z]
      max: [x, y, z]
    sampling:                       # optional
      density: 16.0                 # scatter sample points per m^2

Vertices wind counter-clockwise when seen from the side the facet faces.
Quads are split into triangles ``(v0, v1, v2)`` and ``(v0, v2, v3)``.
"""
from pathlib import Path
from typing import Dict, List, Union

from django.conf import settings

from thzrrf.common.config import ConfigDocument, ConfigError, load_yaml, parse_yaml
from thzrrf.common.utils import path_digest

from .domain import Facet, Material, SamplingVolume, Scene

__all__ = [
    'ConfigError', 'load_scene', 'load_scene_text', 'parse_scene', 'scene_digest',
    'bundled_scene_path', 'resolve_scene_path',
]

MATERIAL_KEYS = ('scattering_coefficient', 'lobe_exponent', 'reflection_reduction')


def _materials(doc: ConfigDocument) -> Dict[str, Material]:
    section = doc.get(('materials',))
    if not isinstance(section, dict) or not section:
        raise doc.error("'materials' must be a non-empty mapping", ('materials',))
    materials = {}
    for name in section:
        path = ('materials', name)
        doc.mapping(path, MATERIAL_KEYS, required=('scattering_coefficient', 'lobe_exponent'))
        try:
            materials[str(name)] = Material(
                name=str(name),
                scattering_coefficient=doc.number(path + ('scattering_coefficient',)),
                lobe_exponent=doc.integer(path + ('lobe_exponent',)),
                reflection_reduction=doc.number(path + ('reflection_reduction',), 1.0),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise doc.error(str(exc), path) from exc
    return materials


def _facets(doc: ConfigDocument, materials: Dict[str, Material]) -> List[Facet]:
    facets = []
    for index, _ in enumerate(doc.sequence(('facets',))):
        path = ('facets', index)
        entry = doc.mapping(path, ('material', 'vertices'), required=('material', 'vertices'))
        material = entry['material']
        if material not in materials:
            raise doc.error(f"unknown material '{material}'", path + ('material',))
        corners = doc.sequence(path + ('vertices',))
        if len(corners) not in (3, 4):
            raise doc.error("a facet needs 3 or 4 vertices", path + ('vertices',))
        verts = [doc.vector3(path + ('vertices', k)) for k in range(len(corners))]
        facets.append(Facet(vertices=verts[:3], material=material))
        if len(verts) == 4:
            facets.append(Facet(vertices=[verts[0], verts[2], verts[3]], material=material))
    return facets


def parse_scene(doc: ConfigDocument) -> Scene:
    doc.mapping((), ('name', 'materials', 'facets', 'tx', 'sampling_volume', 'sampling'),
                required=('materials', 'facets', 'tx'))
    materials = _materials(doc)
    facets = _facets(doc, materials)

    doc.mapping(('tx',), ('position', 'frequency'), required=('position',))
    tx_position = doc.vector3(('tx', 'position'))
    frequency = doc.number(('tx', 'frequency'), settings.THZ_DEFAULT_CARRIER_HZ)
    if frequency <= 0.0:
        raise doc.error("frequency must be positive", ('tx', 'frequency'))

    volume = None
    if doc.get(('sampling_volume',)) is not None:
        doc.mapping(('sampling_volume',), ('min', 'max'), required=('min', 'max'))
        try:
            volume = SamplingVolume(doc.vector3(('sampling_volume', 'min')),
                                    doc.vector3(('sampling_volume', 'max')))
        except ConfigError:
            raise
        except ValueError as exc:
            raise doc.error(str(exc), ('sampling_volume',)) from exc

    density = 16.0
    if doc.get(('sampling',)) is not None:
        doc.mapping(('sampling',), ('density',))
        density = doc.number(('sampling', 'density'), density)
        if density <= 0.0:
            raise doc.error("density must be positive", ('sampling', 'density'))

    return Scene(
        facets=facets,
        materials=materials,
        tx_position=tx_position,
        carrier_frequency=frequency,
        sampling_volume=volume,
        facet_sampling_density=density,
        name=str(doc.get(('name',), Path(doc.source).stem)),
    )


def load_scene(path: Union[str, Path]) -> Scene:
    """Load a scene file; ``FileNotFoundError`` if missing, ``ConfigError`` if invalid."""
    return parse_scene(load_yaml(path))


def load_scene_text(text: str, source: str = '<scene>') -> Scene:
    return parse_scene(parse_yaml(text, source))


def scene_digest(path: Union[str, Path]) -> str:
    """SHA-256 of the scene file bytes, recorded in dataset manifests."""
    return path_digest(path)


def bundled_scene_path(name: str) -> Path:
    return Path(settings.THZ_SCENES_DIR) / f"{name}.yaml"


def resolve_scene_path(value: Union[str, Path]) -> Path:
    """A scene file path, or the name of a bundled scene such as ``room``."""
    path = Path(value)
    if path.suffix in ('.yaml', '.yml') or path.exists():
        return path
    return bundled_scene_path(str(value))
