#pragma once

// Slow, literal re-implementations used as references in tests. They share
// no code with the library beyond the plain data types.

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "bclean/types.hpp"

namespace oracle {

using cd = std::complex<double>;
using bclean::Vec3;

inline double dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Formulation III weights for one focus point and frequency.
inline std::vector<cd> steering(const std::vector<Vec3>& mics, const Vec3& ref,
                                const Vec3& point, double f, double a) {
  const double r0 = dist(point, ref);
  double inv_sq = 0.0;
  for (const auto& m : mics) inv_sq += 1.0 / (dist(point, m) * dist(point, m));
  std::vector<cd> w;
  for (const auto& m : mics) {
    const double rm = dist(point, m);
    const double phase = -2.0 * std::numbers::pi * f * (rm - r0) / a;
    w.push_back(cd(std::cos(phase), std::sin(phase)) / (rm * r0 * inv_sq));
  }
  return w;
}

inline std::vector<cd> transfer(const std::vector<Vec3>& mics, const Vec3& ref,
                                const Vec3& src, double f, double a) {
  const double r0 = dist(src, ref);
  std::vector<cd> g;
  for (const auto& m : mics) {
    const double rm = dist(src, m);
    const double phase = -2.0 * std::numbers::pi * f * (rm - r0) / a;
    g.push_back(cd(std::cos(phase), std::sin(phase)) * (r0 / rm));
  }
  return g;
}

// sum_mn conj(w_m) C_mn w_n, skipping m == n under diagonal removal.
inline double beamform(const Eigen::MatrixXcd& c, const std::vector<cd>& w, bool dr) {
  cd sum = 0.0;
  const auto m_count = static_cast<Eigen::Index>(w.size());
  for (Eigen::Index m = 0; m < m_count; ++m) {
    for (Eigen::Index n = 0; n < m_count; ++n) {
      if (dr && m == n) continue;
      sum += std::conj(w[static_cast<std::size_t>(m)]) * c(m, n) *
             w[static_cast<std::size_t>(n)];
    }
  }
  return sum.real();
}

struct Problem {
  std::vector<Vec3> mics;
  Vec3 ref;
  std::vector<Vec3> points;
  std::vector<double> freqs;
  double speed = 343.0;
  std::vector<Eigen::MatrixXcd> csm;
};

struct Solution {
  Eigen::MatrixXd q;                       // bins x points
  std::vector<Eigen::MatrixXcd> residual;  // per bin
};

// Per-bin CLEAN-SC that rebuilds the dirty map from the residual CSM in
// every iteration instead of updating it.
inline Solution clean_sc(const Problem& p, double alpha, std::size_t iterations,
                         bool dr) {
  const std::size_t bins = p.freqs.size();
  const std::size_t points = p.points.size();
  const auto m_count = static_cast<Eigen::Index>(p.mics.size());
  Solution out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins),
                                     static_cast<Eigen::Index>(points)),
               {}};
  for (std::size_t i = 0; i < bins; ++i) {
    std::vector<std::vector<cd>> w;
    for (const auto& x : p.points) w.push_back(steering(p.mics, p.ref, x, p.freqs[i], p.speed));
    Eigen::MatrixXcd c = p.csm[i];
    if (dr) c.diagonal().setZero();
    for (std::size_t n = 0; n < iterations; ++n) {
      std::size_t k = 0;
      double peak = -INFINITY;
      for (std::size_t j = 0; j < points; ++j) {
        const double a = beamform(c, w[j], dr);
        if (a > peak) {
          peak = a;
          k = j;
        }
      }
      if (!(peak > 0.0)) break;
      const auto& wk = w[k];
      std::vector<cd> h(static_cast<std::size_t>(m_count));
      for (Eigen::Index m = 0; m < m_count; ++m) {
        cd s = 0.0;
        for (Eigen::Index l = 0; l < m_count; ++l) s += c(m, l) * wk[static_cast<std::size_t>(l)];
        h[static_cast<std::size_t>(m)] = s / peak;
      }
      if (dr) {
        // One fixed-point step with H = diag |h|^2.
        double wHw = 0.0;
        for (Eigen::Index m = 0; m < m_count; ++m) {
          const auto um = static_cast<std::size_t>(m);
          wHw += std::norm(wk[um]) * std::norm(h[um]);
        }
        const double wcw = beamform(c, wk, false);
        std::vector<cd> next(h.size());
        for (std::size_t m = 0; m < h.size(); ++m) {
          cd cw = 0.0;
          for (Eigen::Index l = 0; l < m_count; ++l) {
            cw += c(static_cast<Eigen::Index>(m), l) * wk[static_cast<std::size_t>(l)];
          }
          next[m] = (cw / wcw + std::norm(h[m]) * wk[m]) / (1.0 + wHw);
        }
        h = next;
      }
      for (Eigen::Index m = 0; m < m_count; ++m) {
        for (Eigen::Index l = 0; l < m_count; ++l) {
          if (dr && m == l) continue;
          c(m, l) -= alpha * peak * h[static_cast<std::size_t>(m)] *
                     std::conj(h[static_cast<std::size_t>(l)]);
        }
      }
      out.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += alpha * peak;
    }
    out.residual.push_back(c);
  }
  return out;
}

// Random sum of incoherent monopoles; every matrix is Hermitian PSD, and
// exactly Hermitian bit for bit.
inline Problem random_problem(std::mt19937_64& rng, std::size_t mic_count,
                              std::size_t point_count, std::size_t bin_count,
                              std::size_t source_count) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> level(0.1, 2.0);
  Problem p;
  for (std::size_t m = 0; m < mic_count; ++m) p.mics.push_back({u(rng), u(rng), -1.0 + 0.1 * u(rng)});
  p.ref = Vec3::Zero();
  for (const auto& m : p.mics) p.ref += m;
  p.ref /= static_cast<double>(mic_count);
  for (std::size_t j = 0; j < point_count; ++j) p.points.push_back({u(rng), u(rng), 0.5 * u(rng)});
  const double width = 200.0 + 100.0 * (u(rng) + 1.0);
  const double first = width * (1.0 + std::floor(3.0 * (u(rng) + 1.0)));
  for (std::size_t i = 0; i < bin_count; ++i) p.freqs.push_back(first + width * static_cast<double>(i));
  std::vector<Vec3> sources;
  std::uniform_int_distribution<std::size_t> pick(0, point_count - 1);
  for (std::size_t s = 0; s < source_count; ++s) sources.push_back(p.points[pick(rng)]);
  const auto mc = static_cast<Eigen::Index>(mic_count);
  for (std::size_t i = 0; i < bin_count; ++i) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(mc, mc);
    for (const auto& s : sources) {
      const auto g = transfer(p.mics, p.ref, s, p.freqs[i], p.speed);
      const double q = level(rng);
      for (Eigen::Index m = 0; m < mc; ++m) {
        for (Eigen::Index n = 0; n < mc; ++n) {
          c(m, n) += q * (g[static_cast<std::size_t>(m)] * std::conj(g[static_cast<std::size_t>(n)]));
        }
      }
    }
    p.csm.push_back(c);
  }
  return p;
}

inline double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Eigen::MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace oracle
