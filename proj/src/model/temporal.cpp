#include "echo/model/temporal.hpp"

#include "echo/errors.hpp"

#include <cmath>
#include <numbers>

namespace echo {

Matrix dct_matrix(int T) {
  if (T < 1) throw DataError("DCT needs T >= 1");
  Matrix c(T, T);
  const double a0 = std::sqrt(1.0 / T);
  const double ak = std::sqrt(2.0 / T);
  for (int k = 0; k < T; ++k) {
    for (int t = 0; t < T; ++t) {
      c(k, t) = (k == 0 ? a0 : ak) * std::cos(std::numbers::pi * (2.0 * t + 1.0) * k / (2.0 * T));
    }
  }
  return c;
}

Matrix dct_transform(const Matrix& sequence) {
  return dct_matrix(static_cast<int>(sequence.rows())) * sequence;
}

Matrix idct_transform(const Matrix& coefficients) {
  return dct_matrix(static_cast<int>(coefficients.rows())).transpose() * coefficients;
}

Matrix sinusoidal_embedding(int T, int D) {
  if (D % 2 != 0) throw UsageError("sinusoidal embedding needs an even width, got " + std::to_string(D));
  Matrix pe(T, D);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < D / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / D);
      pe(t, 2 * i) = std::sin(t * freq);
      pe(t, 2 * i + 1) = std::cos(t * freq);
    }
  }
  return pe;
}

}  // namespace echo
