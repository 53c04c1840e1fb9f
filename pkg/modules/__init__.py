"""
Rover Science Autonomy Modules
"""

__version__ = '1.0.0'

__all__ = [
    'bn_core', 'errors', 'harness', 'metrics', 'planners',
    'report_generator', 'sensing', 'world'
]
