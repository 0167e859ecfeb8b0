"""
Minimal dense numeric kernels for temporal feature aggregation.

Matrices are float64 ndarrays of shape (channels, frames).
"""

from .kernels import (
    RealMatrix,
    RealVector,
    DepthwiseKernel,
    as_real_matrix,
    matmul,
    depthwise_dilated_conv,
    depthwise_dilated_conv_backward,
    pointwise_conv,
    pointwise_conv_backward,
    relu,
    relu_backward,
    row_softmax,
    row_softmax_backward,
    temporal_mean,
    pca_first_component,
    tap_offsets,
    receptive_radius,
)
from .batchnorm import (
    Mode,
    BatchNormState,
    BatchNormCache,
    batchnorm_temporal,
    batchnorm_temporal_backward,
)

__all__ = [
    'RealMatrix',
    'RealVector',
    'DepthwiseKernel',
    'as_real_matrix',
    'matmul',
    'depthwise_dilated_conv',
    'depthwise_dilated_conv_backward',
    'pointwise_conv',
    'pointwise_conv_backward',
    'relu',
    'relu_backward',
    'row_softmax',
    'row_softmax_backward',
    'temporal_mean',
    'pca_first_component',
    'tap_offsets',
    'receptive_radius',
    'Mode',
    'BatchNormState',
    'BatchNormCache',
    'batchnorm_temporal',
    'batchnorm_temporal_backward',
]
