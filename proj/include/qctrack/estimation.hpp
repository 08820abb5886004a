// Copyright 2026 The qctrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file estimation.hpp
 * @brief Simulated measurements and maximum-likelihood state reconstruction with
 * rho = T^dag T, T lower triangular with a real diagonal.
 *
 * Parameter layout of t (N^2 reals): T_aa for a = 0..N-1, then (Re T_ab, Im T_ab) for
 * a > b in row-major order. Tr(T^dag T) = |t|^2.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qctrack/landscape.hpp"

namespace qctrack {

/// Groups of effects, each group a complete measurement.
struct PovmSet {
  std::vector<std::vector<Mat>> groups;
  std::vector<std::vector<std::string>> labels;

  Eigen::Index dim() const { return groups.front().front().rows(); }

  void validate(double tol = 1e-10) const {
    if (groups.empty()) throw InvalidPovm("empty POVM set");
    const Eigen::Index n = groups.front().front().rows();
    for (const auto& g : groups) {
      if (g.empty()) throw InvalidPovm("empty measurement group");
      Mat sum = Mat::Zero(n, n);
      for (const Mat& f : g) {
        if (f.rows() != n || f.cols() != n) throw InvalidPovm("effect dimension mismatch");
        if (!is_hermitian(f, tol)) throw InvalidPovm("effect is not Hermitian");
        if (hermitian_eigen(f).values.minCoeff() < -tol) throw InvalidPovm("effect is not positive semidefinite");
        sum += f;
      }
      if ((sum - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > tol) throw InvalidPovm("group does not sum to identity");
    }
  }
};

/// Spectral projectors of a Hermitian operator, one per distinct eigenvalue (descending).
inline std::vector<Mat> spectral_projectors(const Mat& h, double tol = 1e-10) {
  const auto eig = hermitian_eigen_descending(h);
  std::vector<Mat> out;
  for (Eigen::Index k = 0; k < eig.values.size();) {
    Eigen::Index e = k;
    Mat p = Mat::Zero(h.rows(), h.cols());
    while (e < eig.values.size() && std::abs(eig.values(e) - eig.values(k)) <= tol) {
      p += eig.vectors.col(e) * eig.vectors.col(e).adjoint();
      ++e;
    }
    out.push_back(hermitian_part(p));
    k = e;
  }
  return out;
}

/// Projective measurements in the eigenbases of sigma_x, sigma_y, sigma_z.
inline PovmSet pauli_povm() {
  PovmSet out;
  const char* names[] = {"X", "Y", "Z"};
  const Mat ops[] = {pauli_x(), pauli_y(), pauli_z()};
  for (int k = 0; k < 3; ++k) {
    out.groups.push_back(spectral_projectors(ops[k]));
    out.labels.push_back({std::string(names[k]) + "+", std::string(names[k]) + "-"});
  }
  return out;
}

/// Spectral measurements of every orthonormal Hermitian basis element (informationally complete).
inline PovmSet default_povm(Eigen::Index n) {
  PovmSet out;
  const auto basis = hermitian_basis(n);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    out.groups.push_back(spectral_projectors(basis[b]));
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < out.groups.back().size(); ++k) {
      labels.push_back("B" + std::to_string(b) + "." + std::to_string(k));
    }
    out.labels.push_back(std::move(labels));
  }
  return out;
}

/// Counts per effect (doubles so that exact expected frequencies can be represented).
struct MeasurementRecord {
  std::vector<std::vector<double>> counts;
  std::vector<double> shots;
  std::uint64_t seed = 0;

  double total() const {
    double t = 0.0;
    for (double s : shots) t += s;
    return t;
  }
};

namespace detail {

inline std::vector<double> born_probabilities(const Mat& rho, const std::vector<Mat>& group) {
  std::vector<double> p;
  double sum = 0.0;
  for (const Mat& f : group) {
    const double v = (rho * f).trace().real();
    if (v < -1e-12) throw InvalidPovm("negative Born probability " + std::to_string(v));
    p.push_back(std::max(v, 0.0));
    sum += p.back();
  }
  if (!(sum > 0.0)) throw InvalidPovm("Born probabilities vanish");
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace detail

/// Multinomial counts per group by sequential binomial draws; deterministic in the seed.
inline MeasurementRecord simulate_measurements(const Mat& rho, const PovmSet& povms, long long shots,
                                               std::uint64_t seed) {
  if (shots < 1) throw InvalidInput("simulate_measurements: shots must be positive");
  povms.validate();
  require_same_dim(rho, povms.groups.front().front(), "simulate_measurements: rho");
  std::mt19937_64 rng(seed);
  MeasurementRecord rec;
  rec.seed = seed;
  for (const auto& g : povms.groups) {
    const auto p = detail::born_probabilities(rho, g);
    std::vector<double> c(g.size(), 0.0);
    long long left = shots;
    double mass = 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i + 1 == g.size() || left == 0) {
        c[i] = static_cast<double>(left);
        left = 0;
        continue;
      }
      const double pi = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
      std::binomial_distribution<long long> draw(left, pi);
      const long long k = draw(rng);
      c[i] = static_cast<double>(k);
      left -= k;
      mass -= p[i];
    }
    rec.counts.push_back(std::move(c));
    rec.shots.push_back(static_cast<double>(shots));
  }
  return rec;
}

/// Noise-free record with counts equal to shots times the Born probabilities.
inline MeasurementRecord expected_record(const Mat& rho, const PovmSet& povms, double shots) {
  povms.validate();
  MeasurementRecord rec;
  for (const auto& g : povms.groups) {
    const auto p = detail::born_probabilities(rho, g);
    std::vector<double> c;
    for (double v : p) c.push_back(v * shots);
    rec.counts.push_back(std::move(c));
    rec.shots.push_back(shots);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Parameterization

inline Mat t_to_lower(const RVec& t, Eigen::Index n) {
  if (t.size() != n * n) throw DimensionError("parameter vector must have N^2 entries");
  Mat T = Mat::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) T(a, a) = t(a);
  Eigen::Index k = n;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      T(a, b) = cplx(t(k), t(k + 1));
      k += 2;
    }
  }
  return T;
}

inline RVec lower_to_t(const Mat& T) {
  const Eigen::Index n = T.rows();
  RVec t(n * n);
  for (Eigen::Index a = 0; a < n; ++a) t(a) = T(a, a).real();
  Eigen::Index k = n;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      t(k++) = T(a, b).real();
      t(k++) = T(a, b).imag();
    }
  }
  return t;
}

inline Mat rho_from_t(const RVec& t, Eigen::Index n) {
  const Mat T = t_to_lower(t, n);
  const Mat r = T.adjoint() * T;
  return hermitian_part(r / r.trace().real());
}

/// d Tr(T^dag T F) / dt.
inline RVec probability_gradient(const Mat& T, const Mat& F) {
  const Eigen::Index n = T.rows();
  const Mat tf = T * F;
  RVec g(n * n);
  for (Eigen::Index a = 0; a < n; ++a) g(a) = 2.0 * tf(a, a).real();
  Eigen::Index k = n;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      g(k++) = 2.0 * tf(a, b).real();
      g(k++) = 2.0 * tf(a, b).imag();
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

struct MLEOptions {
  int max_iterations = 10000;
  double gain_tol = 1e-10;        // stop when a step improves the per-shot likelihood less
  double stationarity_tol = 1e-9; // or when the projected gradient is this small
  double initial_step = 0.5;
};

struct MLEEstimate {
  Mat rho_hat;
  RVec t_params;
  double log_likelihood = 0.0;  // sum_i n_i ln p_i
  RMat covariance;              // filled by fisher_covariance
  int iterations = 0;
  double stationarity = 0.0;    // norm of the projected per-shot gradient at the end
  std::vector<double> history;  // log-likelihood after each accepted iteration
  bool rank_warning = false;
};

namespace detail {

struct Likelihood {
  double value = -kInf;  // per-shot normalized
  RVec grad;
};

inline Likelihood likelihood(const RVec& t, const MeasurementRecord& rec, const PovmSet& povms, bool with_grad) {
  const Eigen::Index n = povms.dim();
  const Mat T = t_to_lower(t, n);
  const Mat r = T.adjoint() * T;
  const double total = rec.total();
  Likelihood out;
  out.value = 0.0;
  if (with_grad) out.grad = RVec::Zero(n * n);
  for (std::size_t g = 0; g < povms.groups.size(); ++g) {
    for (std::size_t i = 0; i < povms.groups[g].size(); ++i) {
      const double c = rec.counts[g][i];
      if (c <= 0.0) continue;
      const double p = (r * povms.groups[g][i]).trace().real();
      if (!(p > 0.0)) {
        out.value = -kInf;
        return out;
      }
      out.value += c / total * std::log(p);
      if (with_grad) out.grad += (c / total / p) * probability_gradient(T, povms.groups[g][i]);
    }
  }
  return out;
}

inline void check_record(const MeasurementRecord& rec, const PovmSet& povms) {
  povms.validate();
  if (rec.counts.size() != povms.groups.size()) throw InvalidRecord("record and POVM group counts differ");
  double any = 0.0;
  for (std::size_t g = 0; g < rec.counts.size(); ++g) {
    if (rec.counts[g].size() != povms.groups[g].size()) throw InvalidRecord("record and POVM effect counts differ");
    for (double c : rec.counts[g]) {
      if (c < 0.0 || !std::isfinite(c)) throw InvalidRecord("counts must be finite and non-negative");
      any += c;
    }
  }
  if (!(any > 0.0)) throw InvalidRecord("all counts are zero");
  if (rec.shots.size() != rec.counts.size()) throw InvalidRecord("shots per group missing");
}

}  // namespace detail

/// Projected gradient ascent on the unit sphere |t| = 1 with an adaptive step that only
/// accepts improvements, so the likelihood never decreases.
inline MLEEstimate mle_reconstruct(const MeasurementRecord& rec, const PovmSet& povms, const MLEOptions& opts = {}) {
  detail::check_record(rec, povms);
  const Eigen::Index n = povms.dim();
  RVec t = lower_to_t(Mat::Identity(n, n) / std::sqrt(static_cast<double>(n)));
  auto cur = detail::likelihood(t, rec, povms, true);
  double step = opts.initial_step;
  MLEEstimate est;
  est.history.push_back(cur.value * rec.total());
  int it = 0;
  RVec proj;
  for (; it < opts.max_iterations; ++it) {
    proj = cur.grad - cur.grad.dot(t) * t;
    if (proj.norm() < opts.stationarity_tol) break;
    bool accepted = false;
    double gain = 0.0;
    while (step > 1e-18) {
      RVec cand = t + step * proj;
      cand /= cand.norm();
      auto next = detail::likelihood(cand, rec, povms, true);
      if (next.value >= cur.value) {
        gain = next.value - cur.value;
        t = std::move(cand);
        cur = std::move(next);
        accepted = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    est.history.push_back(cur.value * rec.total());
    if (gain < opts.gain_tol && (cur.grad - cur.grad.dot(t) * t).norm() < 1e-6) {
      ++it;
      break;
    }
  }
  proj = cur.grad - cur.grad.dot(t) * t;
  est.t_params = t;
  est.rho_hat = rho_from_t(t, n);
  est.log_likelihood = cur.value * rec.total();
  est.iterations = it;
  est.stationarity = proj.norm();
  return est;
}

/// Expected Fisher information I = sum_g M_g sum_i grad p_i grad p_i^T / p_i at the estimate,
/// then V = I^-1 - I^-1 u u^T I^-1 / (u^T I^-1 u) with u = 2t.
inline RMat fisher_covariance(MLEEstimate& est, const MeasurementRecord& rec, const PovmSet& povms) {
  detail::check_record(rec, povms);
  const Eigen::Index n = povms.dim();
  const RVec& t = est.t_params;
  const Mat T = t_to_lower(t, n);
  const Mat r = T.adjoint() * T;
  RMat info = RMat::Zero(n * n, n * n);
  for (std::size_t g = 0; g < povms.groups.size(); ++g) {
    for (const Mat& f : povms.groups[g]) {
      const double p = (r * f).trace().real();
      if (p < 1e-14) continue;
      const RVec gp = probability_gradient(T, f);
      info += rec.shots[g] * gp * gp.transpose() / p;
    }
  }
  info = 0.5 * (info + info.transpose());
  const auto pinv = pseudo_inverse(info, 1e-12);
  if (pinv.truncated()) est.rank_warning = true;
  const RMat& inv = pinv.inverse;
  const RVec u = 2.0 * t;
  const RVec iu = inv * u;
  RMat v = inv - iu * iu.transpose() / u.dot(iu);
  v = 0.5 * (v + v.transpose());
  est.covariance = v;
  return v;
}

inline double trace_distance(const Mat& a, const Mat& b) {
  return 0.5 * hermitian_eigen(hermitian_part(a - b)).values.cwiseAbs().sum();
}

}  // namespace qctrack
