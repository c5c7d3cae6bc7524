#pragma once

#include "echo/core/types.hpp"

namespace echo {

/// Orthonormal DCT-II basis, T x T: row k is
/// alpha_k * cos(pi * (2t + 1) * k / (2T)).
Matrix dct_matrix(int T);

/// Orthonormal DCT-II along the time axis (rows) of a T x C array.
Matrix dct_transform(const Matrix& sequence);
/// Exact inverse of dct_transform.
Matrix idct_transform(const Matrix& coefficients);

/// Interleaved sinusoidal position embedding, T x D (D even):
/// [t, 2i] = sin(t / 10000^(2i/D)), [t, 2i+1] = cos(t / 10000^(2i/D)).
Matrix sinusoidal_embedding(int T, int D);

}  // namespace echo
