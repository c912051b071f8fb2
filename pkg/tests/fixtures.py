"""Hand-traced four-image detection fixture.

Ground truth (ignore flag in brackets)::

    img1: G1a [0,0,40,100], G1b [200,0,240,100]
    img2: G2a [0,0,40,100]
    img3: G3a [0,0,40,100], I3 [300,0,340,100] [ignore]
    img4: none

Detections, by score::

    d1 0.95 img1 on G1a        TP
    d2 0.90 img2 on G2a        TP
    d3 0.85 img4 [50,50,90,150] FP
    d4 0.80 img3 on I3          ignored (not scored)
    d5 0.70 img1 on G1a again   FP (G1a taken)
    d6 0.60 img3 on G3a        TP
    d7 0.50 img2 [100,0,140,100] FP
    G1b is missed.

Scored sweep with 4 ground truths::

    label   TP   TP   FP   FP   TP   FP
    cumTP   1    2    2    2    3    3
    cumFP   0    0    1    2    2    3
    recall  .25  .5   .5   .5   .75  .75
    prec    1    1    2/3  1/2  3/5  1/2
    envelope 1   1    2/3  3/5  3/5  1/2

AP = .25*1 + .25*1 + .25*(3/5) = 0.65.

Miss-rate staircase over 4 images, starting at (fppi 0, mr 1)::

    fppi  0    0    0    .25  .5   .5   .75
    mr    1    .75  .5   .5   .5   .25  .25

The nine reference FPPIs 10^(-2 + k/4) sample the last point with
fppi <= ref: k = 0..5 (ref < .25) give .5, k = 6 (.316) gives .5,
k = 7 (.562) and k = 8 (1.0) give .25.  MR = (.5^7 * .25^2)^(1/9) = .5^(11/9).
"""

from betarep.core import PairedBoxes, boxes_to_beta
from betarep.dataio import Person, SceneAnnotation
from betarep.geometry import BBox
from betarep.nms import Detection

AP = 0.65
MR = 0.5 ** (11 / 9)  # 0.4286219914265365


def _p(l, t, r, b, ignore=False):
    box = BBox(l, t, r, b)
    return Person(PairedBoxes(box, box), ignore)


SCENES = [
    SceneAnnotation("img1", (_p(0, 0, 40, 100), _p(200, 0, 240, 100))),
    SceneAnnotation("img2", (_p(0, 0, 40, 100),)),
    SceneAnnotation("img3", (_p(0, 0, 40, 100), _p(300, 0, 340, 100, ignore=True))),
    SceneAnnotation("img4", ()),
]

_DETS = [
    ("img1", (0, 0, 40, 100), 0.95),
    ("img2", (0, 0, 40, 100), 0.90),
    ("img4", (50, 50, 90, 150), 0.85),
    ("img3", (300, 0, 340, 100), 0.80),
    ("img1", (0, 0, 40, 100), 0.70),
    ("img3", (0, 0, 40, 100), 0.60),
    ("img2", (100, 0, 140, 100), 0.50),
]


def detections():
    """``(image, Detection)`` items with integer ids in listing order."""
    out = []
    for k, (img, box, s) in enumerate(_DETS):
        b = BBox(*box)
        out.append((img, Detection(boxes_to_beta(PairedBoxes(b, b), counter=None), s, k)))
    return out


def by_image():
    grouped = {}
    for img, d in detections():
        grouped.setdefault(img, []).append(d)
    return grouped
