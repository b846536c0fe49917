// Iterative radix-2 FFT for power-of-two sizes. Plans cache twiddles and the
// bit-reversal permutation; everything runs in double complex.
#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shapinglab {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (!is_pow2(n)) throw std::invalid_argument("fft size must be a power of two");
    rev_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t(1) << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < log2n; ++b)
        if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (log2n - 1 - b);
      rev_[i] = r;
    }
    tw_.resize(n / 2);
    const double step = -6.283185307179586476925286766559 / double(n);
    for (std::size_t i = 0; i < n / 2; ++i)
      tw_[i] = cplx(std::cos(step * double(i)), std::sin(step * double(i)));
  }

  std::size_t size() const { return n_; }

  // in-place forward transform, convention X[k] = sum_n x[n] e^{-j2\pi nk/N}
  void forward(cplx* x) const { transform(x, false); }

  // in-place inverse transform including the 1/N factor
  void inverse(cplx* x) const {
    transform(x, true);
    const double s = 1.0 / double(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] *= s;
  }

 private:
  void transform(cplx* x, bool inv) const {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i)
      if (i < rev_[i]) std::swap(x[i], x[rev_[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2, stride = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t k = 0; k < half; ++k) {
          cplx w = tw_[k * stride];
          if (inv) w = std::conj(w);
          const cplx u = x[i + k];
          const cplx v = x[i + k + half] * w;
          x[i + k] = u + v;
          x[i + k + half] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<cplx> tw_;
};

inline void fft_forward(std::vector<cplx>& x) { FftPlan(x.size()).forward(x.data()); }
inline void fft_inverse(std::vector<cplx>& x) { FftPlan(x.size()).inverse(x.data()); }

// circular convolution c = a (*) b, sizes equal and power of two
inline std::vector<cplx> circular_convolve(std::vector<cplx> a, std::vector<cplx> b) {
  assert(a.size() == b.size());
  FftPlan plan(a.size());
  plan.forward(a.data());
  plan.forward(b.data());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  plan.inverse(a.data());
  return a;
}

// DFT bin frequencies for sample rate fs: k -> fs * k/N wrapped to (-fs/2, fs/2]
inline double fft_bin_freq(std::size_t k, std::size_t n, double fs) {
  const double f = double(k) / double(n);
  return (f <= 0.5) ? f * fs : (f - 1.0) * fs;
}

}  // namespace shapinglab
