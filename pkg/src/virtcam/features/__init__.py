"""Machine-vision feature extraction and matching."""

from .canny import canny
from .cascade import (Cascade, Detection, HaarRect, Stage, Stump,
                      evaluate_window, group_detections, haar_detect,
                      load_cascade, scan_windows)
from .eye import find_eye_center
from .gray import to_grayscale
from .hog import hog_descriptor
from .hough import LineHit, hough_lines
from .keypoints import (Keypoint, fast_detect, hamming, match_descriptors,
                        orb_describe)
from .ncc import (MotionVector, NccField, ncc_match_ds, ncc_match_exhaustive,
                  ncc_scores, optical_flow)

__all__ = [
    "Cascade",
    "Detection",
    "HaarRect",
    "Keypoint",
    "LineHit",
    "MotionVector",
    "NccField",
    "Stage",
    "Stump",
    "canny",
    "evaluate_window",
    "fast_detect",
    "find_eye_center",
    "group_detections",
    "haar_detect",
    "hamming",
    "hog_descriptor",
    "hough_lines",
    "load_cascade",
    "match_descriptors",
    "ncc_match_ds",
    "ncc_match_exhaustive",
    "ncc_scores",
    "optical_flow",
    "orb_describe",
    "scan_windows",
    "to_grayscale",
]
