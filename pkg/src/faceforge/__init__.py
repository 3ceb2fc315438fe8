"""faceforge: blendshape retargeting for customized characters.

Fits a parametric 3D face model to 2D landmark sequences, translates
expression parameters to blendshape coefficients through a small trainable
adapter network, and refines results with keyframe editing and a
human-in-the-loop preference system.
"""

__version__ = "0.1.0"
