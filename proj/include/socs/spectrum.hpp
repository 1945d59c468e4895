#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "socs/error.hpp"

namespace socs::spectral {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct SpectrumOptions {
  double split_fraction = 0.5;  // of Nyquist
  int trend_windows = 8;        // W most recent sub-windows for the trend
  int min_window = 4;           // shortest sub-window that gets its own spectrum
};

struct SpectrumReport {
  Eigen::Index length = 0;
  double split_fraction = 0.5;
  // |X_k|^2 of the mean-removed series for k = 0..N/2.
  Eigen::VectorXd bin_energies;
  // Parseval-weighted energy: (1/N) * sum over the two-sided spectrum, which
  // equals the sum of squares of the mean-removed series.
  double total_energy = 0.0;
  double high_band_fraction = 0.0;
  // High-band fraction of each trend sub-window, oldest first.
  std::vector<double> window_fractions;
  double trend_slope = 0.0;
};

// Weight of one-sided bin k when folding back to the two-sided sum.
inline double bin_weight(Eigen::Index k, Eigen::Index n) {
  return (k == 0 || (n % 2 == 0 && 2 * k == n)) ? 1.0 : 2.0;
}

// First bin strictly above split_fraction * Nyquist.
inline Eigen::Index first_high_bin(Eigen::Index n, double split_fraction) {
  return static_cast<Eigen::Index>(std::floor(split_fraction * static_cast<double>(n) / 2.0)) + 1;
}

namespace detail {

template <typename Scalar>
Vector<Scalar> centered(const Vector<Scalar>& x) {
  const Scalar mean = x.mean();
  Vector<Scalar> c = x.array() - mean;
  const Scalar scale = x.cwiseAbs().maxCoeff();
  // A constant series leaves only rounding residue after mean removal.
  if (c.cwiseAbs().maxCoeff() <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale) {
    c.setZero();
  }
  return c;
}

template <typename Scalar>
Eigen::VectorXd half_spectrum_energy(const Vector<Scalar>& c) {
  const Eigen::Index n = c.size();
  std::vector<Scalar> in(c.data(), c.data() + n);
  std::vector<std::complex<Scalar>> out;
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  fft.fwd(out, in);
  Eigen::VectorXd e(n / 2 + 1);
  for (Eigen::Index k = 0; k <= n / 2; ++k) {
    e[k] = static_cast<double>(std::norm(out[static_cast<std::size_t>(k)]));
  }
  return e;
}

inline void fold(const Eigen::VectorXd& bins, Eigen::Index n, double split, double& total,
                 double& high_fraction) {
  const Eigen::Index first_high = first_high_bin(n, split);
  double all = 0.0, high = 0.0;
  for (Eigen::Index k = 0; k < bins.size(); ++k) {
    const double w = bin_weight(k, n) * bins[k];
    all += w;
    if (k >= first_high) high += w;
  }
  total = all / static_cast<double>(n);
  high_fraction = all > 0.0 ? std::clamp(high / all, 0.0, 1.0) : 0.0;
}

}  // namespace detail

// Least-squares slope of y against 0, 1, ..., n-1.
inline double trend_slope(const std::vector<double>& y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  const double xbar = (n - 1.0) / 2.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - xbar;
    num += dx * (y[i] - ybar);
    den += dx * dx;
  }
  return num / den;
}

template <typename Derived>
SpectrumReport spectrum(const Eigen::MatrixBase<Derived>& series,
                        const SpectrumOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = series.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "spectrum needs at least 2 samples");
  if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  }
  const Vector<Scalar> x = series.derived().template cast<Scalar>();

  SpectrumReport r;
  r.length = n;
  r.split_fraction = options.split_fraction;
  r.bin_energies = detail::half_spectrum_energy(detail::centered(x));
  detail::fold(r.bin_energies, n, options.split_fraction, r.total_energy, r.high_band_fraction);

  int windows = std::max(1, options.trend_windows);
  Eigen::Index len = n / windows;
  if (len < options.min_window) {
    windows = static_cast<int>(n / std::max(2, options.min_window));
    len = windows > 0 ? n / windows : 0;
  }
  if (windows >= 2) {
    const Eigen::Index start = n - windows * len;
    for (int w = 0; w < windows; ++w) {
      const Vector<Scalar> seg = x.segment(start + w * len, len);
      const Eigen::VectorXd bins = detail::half_spectrum_energy(detail::centered(seg));
      double total = 0.0, frac = 0.0;
      detail::fold(bins, len, options.split_fraction, total, frac);
      r.window_fractions.push_back(frac);
    }
    r.trend_slope = trend_slope(r.window_fractions);
  }
  return r;
}

struct DdosIndicator {
  double ratio = 0.0;
  bool rising = false;
};

// Energy ratio of the current window against a same-length baseline. Rising
// needs an upward high-band trend and more of the energy in the high band
// than the baseline has.
inline DdosIndicator ddos_indicator(const SpectrumReport& baseline, const SpectrumReport& current) {
  if (baseline.length != current.length) {
    throw Error(ErrorCode::InvalidArgument, "ddos indicator needs same-length windows");
  }
  DdosIndicator out;
  const double floor = std::numeric_limits<double>::epsilon();
  out.ratio = current.total_energy == baseline.total_energy
                  ? 1.0
                  : current.total_energy / std::max(baseline.total_energy, floor);
  out.rising = current.trend_slope > 0.0 && current.high_band_fraction > baseline.high_band_fraction;
  return out;
}

}  // namespace socs::spectral
