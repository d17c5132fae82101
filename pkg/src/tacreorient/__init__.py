"""Tactile-feedback in-hand pivot reorientation.

Modules: ``geometry`` (frames and rotations), ``tactile`` (slip metrics),
``simulation`` (planar gripper world), ``controller`` (action laws),
``optimizer`` (probe-based online adjustment) and ``harness`` (configs,
episodes, ablation matrix, demo and CLI).
"""

__version__ = "0.1.0"
