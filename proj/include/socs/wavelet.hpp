#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "socs/error.hpp"

namespace socs::wavelet {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Daubechies family by number of vanishing moments; db1 is Haar.
enum class Daubechies : int { db1 = 1, db2, db3, db4, db5, db6, db7, db8 };

enum class Extension {
  Symmetric,  // half-sample mirror, redundant coefficients, any length
  Periodic,   // circular, critically sampled and exactly orthogonal
};

std::string_view to_string(Daubechies family);
std::optional<Daubechies> parse_family(std::string_view name);

// Orthonormal scaling (reconstruction low-pass) filter, sum = sqrt(2).
const Eigen::VectorXd& scaling_filter(Daubechies family);

inline Eigen::Index filter_length(Daubechies family) { return 2 * static_cast<int>(family); }

template <typename Scalar>
struct FilterBank {
  Vector<Scalar> dec_lo, dec_hi, rec_lo, rec_hi;
};

template <typename Scalar = double>
FilterBank<Scalar> filter_bank(Daubechies family) {
  const Eigen::VectorXd& h = scaling_filter(family);
  const Eigen::Index n = h.size();
  FilterBank<Scalar> fb;
  fb.rec_lo = h.cast<Scalar>();
  fb.dec_lo = h.reverse().cast<Scalar>();
  fb.rec_hi.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    fb.rec_hi[j] = static_cast<Scalar>((j % 2 == 0 ? 1.0 : -1.0) * h[n - 1 - j]);
  }
  fb.dec_hi = fb.rec_hi.reverse();
  return fb;
}

template <typename Scalar>
struct Decomposition {
  Daubechies family = Daubechies::db4;
  Extension extension = Extension::Symmetric;
  Vector<Scalar> approximation;
  // details[0] is the finest level (level 1).
  std::vector<Vector<Scalar>> details;
  // Input length seen by each level; input_lengths[0] is the series length.
  std::vector<Eigen::Index> input_lengths;

  int levels() const { return static_cast<int>(details.size()); }
  Eigen::Index original_length() const { return input_lengths.empty() ? 0 : input_lengths[0]; }
};

inline Eigen::Index output_length(Eigen::Index n, Daubechies family, Extension ext) {
  return ext == Extension::Periodic ? n / 2 : (n + filter_length(family) - 1) / 2;
}

// Deepest decomposition the length supports: every level's input must be at
// least one filter long (symmetric) or even and >= 2 (periodic).
inline int max_levels(Eigen::Index n, Daubechies family, Extension ext = Extension::Symmetric) {
  int levels = 0;
  for (;;) {
    const bool ok = ext == Extension::Periodic ? (n >= 2 && n % 2 == 0)
                                                : n >= filter_length(family);
    if (!ok) return levels;
    n = output_length(n, family, ext);
    ++levels;
  }
}

namespace detail {

inline Eigen::Index mirror(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

inline Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

template <typename Scalar>
void analyze_level(const Vector<Scalar>& x, const FilterBank<Scalar>& fb, Extension ext,
                   Vector<Scalar>& approx, Vector<Scalar>& detail) {
  const Eigen::Index n = x.size();
  const Eigen::Index taps = fb.dec_lo.size();
  const Eigen::Index m = ext == Extension::Periodic ? n / 2 : (n + taps - 1) / 2;
  approx.setZero(m);
  detail.setZero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Scalar a = 0, d = 0;
    for (Eigen::Index j = 0; j < taps; ++j) {
      const Eigen::Index src = 2 * k + 1 - j;
      const Scalar v = x[ext == Extension::Periodic ? wrap(src, n) : mirror(src, n)];
      a += fb.dec_lo[j] * v;
      d += fb.dec_hi[j] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

template <typename Scalar>
Vector<Scalar> synthesize_level(const Vector<Scalar>& approx, const Vector<Scalar>& detail,
                                const FilterBank<Scalar>& fb, Extension ext, Eigen::Index n) {
  const Eigen::Index taps = fb.dec_lo.size();
  const Eigen::Index m = approx.size();
  Vector<Scalar> y = Vector<Scalar>::Zero(n);
  if (ext == Extension::Periodic) {
    // Adjoint of the circular analysis operator, which is orthogonal.
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index j = 0; j < taps; ++j) {
        y[wrap(2 * k + 1 - j, n)] += fb.dec_lo[j] * approx[k] + fb.dec_hi[j] * detail[k];
      }
    }
    return y;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar s = 0;
    // rec index j = i + taps - 2 - 2k must lie in [0, taps)
    const Eigen::Index k_hi = std::min<Eigen::Index>(m - 1, (i + taps - 2) / 2);
    for (Eigen::Index k = std::max<Eigen::Index>(0, (i - 1) / 2); k <= k_hi; ++k) {
      const Eigen::Index j = i + taps - 2 - 2 * k;
      if (j < 0 || j >= taps) continue;
      s += approx[k] * fb.rec_lo[j] + detail[k] * fb.rec_hi[j];
    }
    y[i] = s;
  }
  return y;
}

}  // namespace detail

// Multi-level pyramid decomposition.
template <typename Derived>
Decomposition<typename Derived::Scalar> dwt(const Eigen::MatrixBase<Derived>& series,
                                            Daubechies family, int levels,
                                            Extension ext = Extension::Symmetric) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = series.size();
  if (levels < 1) throw Error(ErrorCode::InvalidArgument, "dwt needs at least one level");
  if (levels > max_levels(n, family, ext)) {
    throw Error(ErrorCode::InvalidArgument,
                "series of length " + std::to_string(n) + " is too short for " +
                    std::to_string(levels) + " levels of " + std::string(to_string(family)));
  }
  const auto fb = filter_bank<Scalar>(family);
  Decomposition<Scalar> out;
  out.family = family;
  out.extension = ext;
  Vector<Scalar> current = series.derived().template cast<Scalar>();
  for (int level = 0; level < levels; ++level) {
    out.input_lengths.push_back(current.size());
    Vector<Scalar> approx, detail;
    detail::analyze_level(current, fb, ext, approx, detail);
    out.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  out.approximation = std::move(current);
  return out;
}

template <typename Scalar>
Vector<Scalar> idwt(const Decomposition<Scalar>& d) {
  const int levels = d.levels();
  if (levels < 1 || static_cast<int>(d.input_lengths.size()) != levels) {
    throw Error(ErrorCode::MalformedInput, "decomposition has inconsistent level count");
  }
  for (int level = 0; level < levels; ++level) {
    const Eigen::Index expect = output_length(d.input_lengths[level], d.family, d.extension);
    const Eigen::Index have =
        level + 1 < levels ? d.input_lengths[level + 1] : d.approximation.size();
    if (d.details[level].size() != expect || have != expect) {
      throw Error(ErrorCode::MalformedInput,
                  "coefficient shape mismatch at level " + std::to_string(level + 1));
    }
  }
  const auto fb = filter_bank<Scalar>(d.family);
  Vector<Scalar> current = d.approximation;
  for (int level = levels - 1; level >= 0; --level) {
    current = detail::synthesize_level(current, d.details[level], fb, d.extension,
                                       d.input_lengths[level]);
  }
  return current;
}

template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([lambda](Scalar v) {
    const Scalar mag = std::abs(v) - lambda;
    return mag > Scalar(0) ? std::copysign(mag, v) : Scalar(0);
  });
}

template <typename Scalar>
Scalar median_abs(const Vector<Scalar>& v) {
  if (v.size() == 0) return Scalar(0);
  std::vector<Scalar> a(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + mid, a.end());
  Scalar m = a[mid];
  if (a.size() % 2 == 0) {
    m = (m + *std::max_element(a.begin(), a.begin() + mid)) / Scalar(2);
  }
  return m;
}

template <typename Scalar>
struct DenoiseResult {
  Vector<Scalar> signal;
  Decomposition<Scalar> thresholded;
  Scalar sigma = 0;      // MAD noise estimate from the finest details
  Scalar threshold = 0;  // universal threshold sigma * sqrt(2 ln N)
};

// Wavelet shrinkage with the universal threshold applied to every detail
// level; the approximation is kept as is.
template <typename Derived>
DenoiseResult<typename Derived::Scalar> denoise_detailed(const Eigen::MatrixBase<Derived>& series,
                                                         Daubechies family, int levels) {
  using Scalar = typename Derived::Scalar;
  DenoiseResult<Scalar> r;
  r.thresholded = dwt(series, family, levels, Extension::Symmetric);
  const auto n = static_cast<Scalar>(series.size());
  r.sigma = median_abs(r.thresholded.details.front()) / Scalar(0.6745);
  r.threshold = n > 1 ? r.sigma * std::sqrt(Scalar(2) * std::log(n)) : Scalar(0);
  for (auto& d : r.thresholded.details) d = soft_threshold(d, r.threshold).eval();
  r.signal = idwt(r.thresholded);
  return r;
}

template <typename Derived>
Vector<typename Derived::Scalar> denoise(const Eigen::MatrixBase<Derived>& series,
                                         Daubechies family, int levels) {
  return denoise_detailed(series, family, levels).signal;
}

}  // namespace socs::wavelet
