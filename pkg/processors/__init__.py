"""
특징 생성 패키지 초기화
"""

from .tile_coder import (
    TilingSpec, TileCoder, FeatureVector,
    build_tile_coder, tile_index_1d, encode_log,
    parse_tiling_config, load_tiling_config, as_index_matrix, as_active_rows
)

__all__ = [
    'TilingSpec', 'TileCoder', 'FeatureVector',
    'build_tile_coder', 'tile_index_1d', 'encode_log',
    'parse_tiling_config', 'load_tiling_config', 'as_index_matrix', 'as_active_rows'
]
