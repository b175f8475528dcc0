// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace aclab {

using cplx = std::complex<double>;

/// Uniform periodic grid on the coordinate torus [0,1)^d, d in {2,3}.
/// Spectral content is restricted to the symmetric band |k_i| <= n/2 - 1;
/// Nyquist lines are excluded so every band field has a real, translation-
/// equivariant representation.
struct TorusGrid {
  int dim = 2;
  int n = 16;

  std::size_t points() const {
    std::size_t p = 1;
    for (int a = 0; a < dim; ++a) p *= static_cast<std::size_t>(n);
    return p;
  }

  int kmax() const { return n / 2 - 1; }

  /// Signed frequency of a storage index along one axis (size m).
  static int freq_of(int idx, int m) { return idx <= m / 2 ? idx : idx - m; }
  /// Storage index of a signed frequency along one axis (size m).
  static int index_of(int k, int m) { return k >= 0 ? k : k + m; }

  bool in_band(const std::array<int, 3>& k) const {
    for (int a = 0; a < dim; ++a)
      if (k[a] < -kmax() || k[a] > kmax()) return false;
    return true;
  }

  std::size_t flat_index(const std::array<int, 3>& k, int m) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) idx = idx * m + static_cast<std::size_t>(index_of(k[a], m));
    return idx;
  }

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;
};

namespace detail {

/// Process-wide FFTW plan cache. Plans are created once per (dims, sign) with
/// FFTW_ESTIMATE|FFTW_UNALIGNED and executed through the new-array interface,
/// which is thread-safe for concurrent transforms on distinct buffers.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  void execute(const std::vector<int>& dims, int sign, const cplx* in, cplx* out) {
    fftw_plan plan = get(dims, sign);
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

 private:
  fftw_plan get(const std::vector<int>& dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    std::vector<cplx> a(total), b(total);
    fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                                   reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

/// Forward DFT with 1/npts normalization: values -> Fourier coefficients of
/// sum_k c_k exp(2*pi*i k.x) sampled on the uniform grid.
inline void dft_coefficients(int dim, int m, const std::vector<cplx>& values,
                             std::vector<cplx>& coef) {
  std::vector<int> dims(static_cast<std::size_t>(dim), m);
  coef.resize(values.size());
  FftPlans::instance().execute(dims, FFTW_FORWARD, values.data(), coef.data());
  const double scale = 1.0 / static_cast<double>(values.size());
  for (auto& c : coef) c *= scale;
}

/// Inverse DFT without normalization: coefficients -> grid values.
inline void dft_values(int dim, int m, const std::vector<cplx>& coef,
                       std::vector<cplx>& values) {
  std::vector<int> dims(static_cast<std::size_t>(dim), m);
  values.resize(coef.size());
  FftPlans::instance().execute(dims, FFTW_BACKWARD, coef.data(), values.data());
}

/// Visit every lattice point of the band |k_i| <= kmax (dim axes).
template <typename F>
void for_each_band_mode(const TorusGrid& g, F&& f) {
  const int km = g.kmax();
  std::array<int, 3> k{0, 0, 0};
  if (g.dim == 2) {
    for (k[0] = -km; k[0] <= km; ++k[0])
      for (k[1] = -km; k[1] <= km; ++k[1]) f(k);
  } else {
    for (k[0] = -km; k[0] <= km; ++k[0])
      for (k[1] = -km; k[1] <= km; ++k[1])
        for (k[2] = -km; k[2] <= km; ++k[2]) f(k);
  }
}

}  // namespace detail
}  // namespace aclab
