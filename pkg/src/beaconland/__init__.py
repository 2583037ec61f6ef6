"""Infrared-beacon landing tracker: homography projection, faint source
detection, distance-map matching and an IMU-aided particle filter."""

__version__ = "0.1.0"
