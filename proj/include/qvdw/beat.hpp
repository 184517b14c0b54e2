#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "qvdw/scan.hpp"

//! Beat-structure analysis of separation scans. The column is modelled as a
//! small sum of drifting-amplitude tones; an initial tapered spectrum seeds
//! the tone frequencies and a least-squares refinement sharpens them well
//! below the bin width, which is what separates nearby spectral lines on a
//! window only a few beat periods long. Tones are then split into a low and a
//! high cluster: the cluster mean spacing gives the envelope node spacing,
//! the cluster mean sum the carrier period.

namespace qvdw {

struct BeatTone {
  double frequency = 0;  // cycles per metre
  double amplitude = 0;
  double phase = 0;
};

struct BeatResult {
  double short_period = 0;  // carrier period, metres
  double long_period = 0;   // envelope node spacing, metres; 0 = no beat
  std::vector<BeatTone> tones;
};

namespace beat_detail {

//! Magnitude spectrum of a Hann-tapered series at the natural DFT bins.
inline std::vector<double> hann_spectrum(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> wy(n);
  for (int i = 0; i < n; ++i)
    wy[i] = y[i] * (0.5 - 0.5 * std::cos(2.0 * pi * i / (n - 1)));
  std::vector<double> mag(n / 2, 0.0);
  for (int b = 1; b < n / 2; ++b) {
    const complexd step = std::polar(1.0, -2.0 * pi * b / n);
    complexd ph = 1.0, acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += wy[i] * ph;
      ph *= step;
    }
    mag[b] = std::abs(acc);
  }
  return mag;
}

struct RawPeak {
  double bin = 0;
  double mag = 0;
};

//! Local maxima above a fraction of the strongest, with the peak position
//! sharpened by a parabola through the log magnitudes.
inline std::vector<RawPeak> find_peaks(const std::vector<double>& mag,
                                       double frac) {
  const int n = static_cast<int>(mag.size());
  double mx = 0;
  for (int b = 1; b < n; ++b) mx = std::max(mx, mag[b]);
  std::vector<RawPeak> peaks;
  for (int b = 2; b + 1 < n; ++b) {
    if (mag[b] < frac * mx || mag[b] < mag[b - 1] || mag[b] < mag[b + 1])
      continue;
    const double la = std::log(mag[b - 1] + 1e-300);
    const double lb = std::log(mag[b] + 1e-300);
    const double lc = std::log(mag[b + 1] + 1e-300);
    const double denom = la - 2.0 * lb + lc;
    double d = denom < 0 ? 0.5 * (la - lc) / denom : 0.0;
    d = std::clamp(d, -0.5, 0.5);
    peaks.push_back({b + d, mag[b]});
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const RawPeak& a, const RawPeak& b) { return a.mag > b.mag; });
  return peaks;
}

//! Least-squares fit of the tone amplitudes for fixed frequencies: per tone a
//! cos and a sin column, plus a global constant and slope. Amplitude drift is
//! deliberately NOT modelled per tone; a drift column differs from a slightly
//! detuned tone only at second order, so it would flatten the frequency
//! objective. Returns the residual sum of squares and, on request, the
//! solved coefficients.
inline double tone_rss(const std::vector<double>& x,
                       const std::vector<double>& y,
                       const std::vector<double>& freqs, double half_span,
                       std::vector<double>* coeffs = nullptr) {
  const int n = static_cast<int>(x.size());
  const int j = static_cast<int>(freqs.size());
  const int p = 2 * j + 2;
  std::vector<double> row(p);
  std::vector<double> g(p * p, 0.0), r(p, 0.0);
  double yy = 0;
  for (int i = 0; i < n; ++i) {
    const double xh = x[i] / half_span;
    row[0] = 1.0;
    row[1] = xh;
    for (int t = 0; t < j; ++t) {
      const double a = 2.0 * pi * freqs[t] * x[i];
      row[2 + 2 * t] = std::cos(a);
      row[3 + 2 * t] = std::sin(a);
    }
    for (int a = 0; a < p; ++a) {
      r[a] += row[a] * y[i];
      for (int b = a; b < p; ++b) g[a * p + b] += row[a] * row[b];
    }
    yy += y[i] * y[i];
  }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < a; ++b) g[a * p + b] = g[b * p + a];
  double ridge = 0;
  for (int a = 0; a < p; ++a) ridge += g[a * p + a];
  ridge *= 1e-12 / p;
  for (int a = 0; a < p; ++a) g[a * p + a] += ridge;

  // Gaussian elimination with partial pivoting
  std::vector<double> sol = r;
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int a = c + 1; a < p; ++a)
      if (std::abs(g[a * p + c]) > std::abs(g[piv * p + c])) piv = a;
    if (piv != c) {
      for (int b = 0; b < p; ++b) std::swap(g[c * p + b], g[piv * p + b]);
      std::swap(sol[c], sol[piv]);
    }
    const double d = g[c * p + c];
    for (int a = c + 1; a < p; ++a) {
      const double f = g[a * p + c] / d;
      for (int b = c; b < p; ++b) g[a * p + b] -= f * g[c * p + b];
      sol[a] -= f * sol[c];
    }
  }
  for (int c = p - 1; c >= 0; --c) {
    for (int b = c + 1; b < p; ++b) sol[c] -= g[c * p + b] * sol[b];
    sol[c] /= g[c * p + c];
  }
  double fit = 0;
  for (int a = 0; a < p; ++a) fit += sol[a] * r[a];
  if (coeffs) *coeffs = sol;
  return std::max(yy - fit, 0.0);
}

//! Golden-section sweeps, one frequency at a time, until the tones settle.
inline void refine_tones(const std::vector<double>& x,
                         const std::vector<double>& y,
                         std::vector<double>& freqs, double half_span,
                         double bin) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < 8; ++sweep) {
    double moved = 0;
    for (double& f : freqs) {
      const double before = f;
      double lo = f - 0.6 * bin, hi = f + 0.6 * bin;
      lo = std::max(lo, 0.25 * bin);
      double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
      auto rss_at = [&](double cand) {
        const double keep = f;
        f = cand;
        const double v = tone_rss(x, y, freqs, half_span);
        f = keep;
        return v;
      };
      double fc = rss_at(c), fd = rss_at(d);
      for (int it = 0; it < 28; ++it) {
        if (fc < fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - gr * (hi - lo);
          fc = rss_at(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + gr * (hi - lo);
          fd = rss_at(d);
        }
      }
      f = 0.5 * (lo + hi);
      moved = std::max(moved, std::abs(f - before));
    }
    if (moved < 1e-3 * bin) break;
  }
}

}  // namespace beat_detail

inline BeatResult beat_analysis(const Dataset& ds, const std::string& column) {
  if (ds.variable != "R")
    throw UsageError("beat analysis needs a separation scan");
  const DatasetColumn& grid = ds.columns.at(0);
  const DatasetColumn& col = ds.column(column);
  const int n = static_cast<int>(grid.values.size());
  if (n < 32)
    throw InsufficientResolution("beat analysis needs at least 32 samples");
  for (double v : col.values)
    if (!std::isfinite(v))
      throw UsageError("column '" + column + "' has failed cells");

  const double step = (grid.values.back() - grid.values.front()) / (n - 1);
  const double span = grid.values.back() - grid.values.front();
  const double bin = 1.0 / (n * step);  // DFT bin width, cycles per metre

  // flatten the power-law amplitude drift before any spectral work
  std::vector<double> y = col.values;
  {
    const int segs = 8;
    std::vector<double> lx, ly;
    for (int s = 0; s < segs; ++s) {
      const int lo = n * s / segs, hi = n * (s + 1) / segs;
      double acc = 0;
      for (int i = lo; i < hi; ++i) acc += y[i] * y[i];
      const double rms = std::sqrt(acc / std::max(hi - lo, 1));
      if (rms > 0) {
        lx.push_back(std::log(grid.values[(lo + hi) / 2]));
        ly.push_back(std::log(rms));
      }
    }
    if (lx.size() >= 4) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
      }
      mx /= lx.size();
      my /= ly.size();
      double num = 0, den = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += sqr(lx[i] - mx);
      }
      const double slope = den > 0 ? num / den : 0.0;
      if (std::isfinite(slope) && std::abs(slope) < 12.0)
        for (int i = 0; i < n; ++i)
          y[i] *= std::exp(-slope * (std::log(grid.values[i]) - mx));
    }
  }
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  for (double& v : y) v -= mean;
  double y_rms = 0;
  for (double v : y) y_rms += v * v;
  y_rms = std::sqrt(y_rms / n);
  if (!(y_rms > 0)) throw UsageError("column '" + column + "' is constant");

  const std::vector<double> spectrum = beat_detail::hann_spectrum(y);
  std::vector<beat_detail::RawPeak> peaks =
      beat_detail::find_peaks(spectrum, 0.25);
  if (peaks.empty())
    throw InsufficientResolution("no spectral peak found in the column");
  const double top_mag = peaks[0].mag;

  // early sampling check against the strongest tone
  if (1.0 / (peaks[0].bin * bin) < 8.0 * step * (1.0 - 1e-9))
    throw InsufficientResolution(
        "fewer than eight samples per oscillation period");

  std::vector<double> x(n);
  const double x_mid = 0.5 * (grid.values.front() + grid.values.back());
  for (int i = 0; i < n; ++i) x[i] = grid.values[i] - x_mid;
  const double half_span = 0.5 * span;

  std::vector<double> freqs;
  for (const auto& pk : peaks) {
    if (freqs.size() >= 3) break;
    freqs.push_back(pk.bin * bin);
  }

  // refine, then keep pulling tones out of the residual until it is quiet
  for (int round = 0;; ++round) {
    beat_detail::refine_tones(x, y, freqs, half_span, bin);

    // drop near-coincident tones, strongest first
    std::sort(freqs.begin(), freqs.end());
    for (std::size_t i = 0; i + 1 < freqs.size();) {
      if (freqs[i + 1] - freqs[i] < 0.05 * bin)
        freqs.erase(freqs.begin() + i + 1);
      else
        ++i;
    }

    std::vector<double> coeffs;
    const double rss = beat_detail::tone_rss(x, y, freqs, half_span, &coeffs);
    if (round >= 3 || freqs.size() >= 5 ||
        std::sqrt(rss / n) < 1e-4 * y_rms)
      break;
    std::vector<double> resid = y;
    for (int i = 0; i < n; ++i) {
      const double xh = x[i] / half_span;
      double fit = coeffs[0] + coeffs[1] * xh;
      for (std::size_t t = 0; t < freqs.size(); ++t) {
        const double a = 2.0 * pi * freqs[t] * x[i];
        fit += coeffs[2 + 2 * t] * std::cos(a) + coeffs[3 + 2 * t] * std::sin(a);
      }
      resid[i] -= fit;
    }
    const auto res_peaks =
        beat_detail::find_peaks(beat_detail::hann_spectrum(resid), 0.0);
    if (res_peaks.empty() || res_peaks[0].mag < 0.08 * top_mag) break;
    const double cand = res_peaks[0].bin * bin;
    bool fresh = true;
    for (double f : freqs)
      if (std::abs(f - cand) < 0.5 * bin) fresh = false;
    if (!fresh) break;
    freqs.push_back(cand);
  }

  BeatResult out;
  std::vector<double> coeffs;
  beat_detail::tone_rss(x, y, freqs, half_span, &coeffs);
  for (std::size_t t = 0; t < freqs.size(); ++t) {
    const double a = coeffs[2 + 2 * t], b = coeffs[3 + 2 * t];
    out.tones.push_back({freqs[t], std::hypot(a, b), std::atan2(-b, a)});
  }

  std::sort(freqs.begin(), freqs.end());
  double f_short;
  if (freqs.size() == 1) {
    f_short = freqs[0];
    out.long_period = 0;
  } else {
    std::size_t cut = 1;
    double best_gap = 0;
    for (std::size_t i = 0; i + 1 < freqs.size(); ++i)
      if (freqs[i + 1] - freqs[i] > best_gap) {
        best_gap = freqs[i + 1] - freqs[i];
        cut = i + 1;
      }
    double f_lo = 0, f_hi = 0;
    for (std::size_t i = 0; i < cut; ++i) f_lo += freqs[i];
    for (std::size_t i = cut; i < freqs.size(); ++i) f_hi += freqs[i];
    f_lo /= cut;
    f_hi /= freqs.size() - cut;
    if (f_hi - f_lo < 0.5 / span) {
      // clusters too close to call a beat; report the carrier only
      f_short = 0.5 * (f_lo + f_hi);
      out.long_period = 0;
    } else {
      f_short = 0.5 * (f_lo + f_hi);
      out.long_period = 1.0 / (f_hi - f_lo);
    }
  }
  out.short_period = 1.0 / f_short;
  if (out.short_period < 8.0 * step * (1.0 - 1e-9))
    throw InsufficientResolution(
        "fewer than eight samples per carrier period");
  return out;
}

}  // namespace qvdw
