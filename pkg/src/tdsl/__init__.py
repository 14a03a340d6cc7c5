"""Two-path semi-supervised CNN text classifier.

A shared convolutional trunk feeds two independent CNN paths: a
supervised path trained with cross-entropy on the labeled subset and an
unsupervised path trained with a consistency penalty on all data, the
two losses jointly optimized with an epoch-indexed ramp-up weight.
"""

__version__ = "0.1.0"
