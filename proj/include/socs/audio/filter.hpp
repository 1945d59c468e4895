#pragma once

#include <cmath>

namespace socs::audio {

// Trapezoidal state-variable band-pass, normalised to unity gain at the
// centre frequency. Prewarped, so the centre lands exactly on `center_hz`.
class BandPass {
 public:
  BandPass() { set(1000.0, 1.0, 48000.0); }

  void set(double center_hz, double q, double sample_rate) {
    const double g = std::tan(M_PI * center_hz / sample_rate);
    k_ = 1.0 / q;
    a1_ = 1.0 / (1.0 + g * (g + k_));
    a2_ = g * a1_;
    a3_ = g * a2_;
  }

  void reset() { ic1_ = ic2_ = 0.0; }

  double process(double x) {
    const double v3 = x - ic2_;
    const double v1 = a1_ * ic1_ + a2_ * v3;
    const double v2 = ic2_ + a2_ * ic1_ + a3_ * v3;
    ic1_ = 2.0 * v1 - ic1_;
    ic2_ = 2.0 * v2 - ic2_;
    return k_ * v1;
  }

  // Magnitude response of the design at frequency f.
  static double design_gain(double center_hz, double q, double sample_rate, double f) {
    // Bilinear map of H(s) = (s/q) / (s^2 + s/q + 1) with s normalised so the
    // centre sits at 1.
    const double w = std::tan(M_PI * f / sample_rate) / std::tan(M_PI * center_hz / sample_rate);
    const double num = w / q;
    const double re = 1.0 - w * w;
    return num / std::sqrt(re * re + num * num);
  }

 private:
  double k_ = 1.0, a1_ = 0.0, a2_ = 0.0, a3_ = 0.0;
  double ic1_ = 0.0, ic2_ = 0.0;
};

}  // namespace socs::audio
