// Sequence selection: candidate generation (flipping bits or symbol
// interleaving), nonlinearity metrics (EDI, LSAS, AM in three coefficient
// budgets), best-of-N selection and the complexity accounting.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapinglab/matcher.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/perturbation.hpp"
#include "shapinglab/stats.hpp"
#include "shapinglab/windowed.hpp"

namespace shapinglab {

enum class SelectionStrategy { FlippingBits, Interleaving };
enum class SelectionMetric { Edi, Lsas, Am, AmQuantized };

inline SelectionMetric selection_metric_from_string(const std::string& s) {
  if (s == "edi") return SelectionMetric::Edi;
  if (s == "lsas") return SelectionMetric::Lsas;
  if (s == "am") return SelectionMetric::Am;
  if (s == "am-q") return SelectionMetric::AmQuantized;
  throw std::invalid_argument("unknown selection metric: " + s);
}

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::FlippingBits;
  int nu = 2;              // redundant bits per shaper block
  int n_candidates = 16;   // N_t
  SelectionMetric metric = SelectionMetric::Lsas;
  int edi_window = 111;
  std::uint64_t seed = 1;
  bool threshold_mode = false;      // rejection-sampling style acceptance
  double acceptance_ratio = 0.25;   // r_a for threshold mode

  void validate(std::size_t shaper_bits, std::size_t blocks_per_frame) const {
    if (n_candidates < 1) throw std::invalid_argument("selection: need at least one candidate");
    if (strategy == SelectionStrategy::FlippingBits) {
      if (nu < 0 || std::size_t(nu) > shaper_bits)
        throw std::invalid_argument("selection: flipping bits exceed the shaper input");
      const double max_log2 = double(nu) * double(blocks_per_frame);
      if (max_log2 < 62 && n_candidates > (1LL << std::min<long long>(62, (long long)max_log2)))
        throw std::invalid_argument("selection: candidate count exceeds 2^(nu * blocks)");
    }
  }
};

// ---------------------------------------------------------------------------
// candidate generation

struct CandidateSet {
  std::vector<SymbolFrame> frames;
  std::vector<std::vector<BitVec>> payloads;  // per candidate copy of the payload
  SelectionStrategy strategy = SelectionStrategy::FlippingBits;
};

// flipping bits: candidate index i supplies nu-bit digits, block b consuming
// digit (i >> (nu*b)) & (2^nu - 1); the per-block shaper input is
// [flip digits][payload bits]. Every candidate decodes to the same payload.
inline std::vector<AmplitudeBlock> flip_blocks_for_candidate(
    const Shaper& shaper, const std::vector<BitVec>& payloads, int nu, long long candidate) {
  std::vector<AmplitudeBlock> blocks;
  blocks.reserve(payloads.size());
  for (std::size_t b = 0; b < payloads.size(); ++b) {
    BitVec bits(shaper.input_bits());
    long long digit = 0;
    if (nu > 0) {
      const std::size_t shift = b * std::size_t(nu);
      digit = shift < 63 ? (candidate >> shift) & ((1LL << nu) - 1) : 0;
    }
    for (int j = 0; j < nu; ++j) bits[std::size_t(j)] = std::uint8_t((digit >> (nu - 1 - j)) & 1);
    if (payloads[b].size() != shaper.input_bits() - std::size_t(nu))
      throw std::invalid_argument("selection: payload length mismatch");
    std::copy(payloads[b].begin(), payloads[b].end(), bits.begin() + nu);
    blocks.push_back(shaper.encode(bits));
  }
  return blocks;
}

// payload recovery from a decoded candidate: strip the leading nu bits
inline std::vector<BitVec> recover_payload(const Shaper& shaper,
                                           const std::vector<AmplitudeBlock>& blocks, int nu) {
  std::vector<BitVec> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) {
    auto bits = shaper.decode(b);
    out.emplace_back(bits.begin() + nu, bits.end());
  }
  return out;
}

inline std::vector<std::size_t> interleave_permutation(std::size_t n, std::uint64_t seed,
                                                       int candidate) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  if (candidate == 0) return perm;  // identity: the original frame
  Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * std::uint64_t(candidate)));
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
  return perm;
}

inline SymbolFrame permute_data_symbols(const SymbolFrame& f, const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> data_idx;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!f.pilot_mask[k]) data_idx.push_back(k);
  if (perm.size() != data_idx.size())
    throw std::invalid_argument("interleave: permutation length mismatch");
  SymbolFrame out = f;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.x[data_idx[j]] = f.x[data_idx[perm[j]]];
    if (f.dual_pol()) out.y[data_idx[j]] = f.y[data_idx[perm[j]]];
  }
  return out;
}

inline CandidateSet generate_candidates(const Shaper& shaper,
                                        const std::vector<BitVec>& payloads,
                                        const FrameConfig& frame_cfg, const SelectionConfig& cfg) {
  cfg.validate(shaper.input_bits(), payloads.size());
  CandidateSet set;
  set.strategy = cfg.strategy;
  if (cfg.strategy == SelectionStrategy::FlippingBits) {
    for (int i = 0; i < cfg.n_candidates; ++i) {
      const auto blocks = flip_blocks_for_candidate(shaper, payloads, cfg.nu, i);
      set.frames.push_back(assemble_frame(shaper, blocks, frame_cfg));
      set.payloads.push_back(payloads);
    }
  } else {
    std::vector<AmplitudeBlock> blocks;
    blocks.reserve(payloads.size());
    for (const auto& p : payloads) {
      BitVec bits(shaper.input_bits(), 0);
      if (p.size() != shaper.input_bits())
        throw std::invalid_argument("selection: interleaving expects full-width payload bits");
      std::copy(p.begin(), p.end(), bits.begin());
      blocks.push_back(shaper.encode(bits));
    }
    const auto base = assemble_frame(shaper, blocks, frame_cfg);
    for (int i = 0; i < cfg.n_candidates; ++i) {
      const auto perm = interleave_permutation(base.data_count(), cfg.seed, i);
      set.frames.push_back(permute_data_symbols(base, perm));
      set.payloads.push_back(payloads);
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// metrics

inline double metric_edi(const SymbolFrame& f, int window) {
  double acc = edi(energy_sequence(f, 'x').e, window);
  if (f.dual_pol()) {
    acc += edi(energy_sequence(f, 'y').e, window);
    acc *= 0.5;
  }
  return acc;
}

// lowpass-filtered amplitude-sequence score: energy sequence of the candidate
// convolved with the channel-of-interest taps, summed squared. Interferer
// channels are outside the selector's control and drop out of the comparison.
inline double metric_lsas(const SymbolFrame& f, const PerturbationKernel& k) {
  const auto taps = k.taps(0);
  const int half = k.w_mem;
  auto score_seq = [&](const std::vector<double>& e) {
    const std::size_t n = e.size();
    const double ebar = mean(e);
    double acc = 0.0;
    for (std::size_t kk = 0; kk < n; ++kk) {
      double d = 0.0;
      for (int nn = -half; nn <= half; ++nn) {
        const std::size_t idx = std::size_t((long(kk) - nn + long(n)) % long(n));
        d += (e[idx] - ebar) * taps[std::size_t(nn + half)];
      }
      acc += d * d;
    }
    return acc;
  };
  if (!f.dual_pol()) return score_seq(energy_sequence(f, 'x').e);
  return score_seq(aggregated_energy(f, 'x').e) + score_seq(aggregated_energy(f, 'y').e);
}

// active coefficient budgets for the AM metric
enum class AmBudget { Full, Selected, Quantized };

struct AmCoeffSet {
  struct Entry {
    int m, n;
    cplx c;
  };
  std::vector<Entry> entries;  // intra-channel (s = 0) pulse-matched set
  long long n_pb = 0;
  double mean_offset = 0.0;  // sum of taps, removed as the mean phase rotation
};

inline AmCoeffSet build_am_set(const PerturbationKernel& k, AmBudget budget) {
  const int w = k.w_mem;
  AmCoeffSet set;
  std::vector<double> mags;
  for (int m = -w; m <= w; ++m)
    for (int n = -w; n <= w; ++n) {
      bool keep = false;
      switch (budget) {
        case AmBudget::Full: keep = std::abs(m) + std::abs(n) <= w; break;
        case AmBudget::Selected:
        case AmBudget::Quantized:
          keep = (m == 0 || n == 0) ? true : std::abs((long long)m * n) < w;
          break;
      }
      if (!keep) continue;
      set.entries.push_back({m, n, k.coeff(0, m, n)});
      mags.push_back(std::abs(k.coeff(0, m, n)));
    }
  set.n_pb = (long long)set.entries.size();
  if (budget == AmBudget::Quantized) {
    const int clusters = int(3 * ((w + 14) / 16) + 1);
    const auto km = kmeans_1d(mags, clusters);
    for (std::size_t i = 0; i < set.entries.size(); ++i) {
      auto& e = set.entries[i];
      const double mag = std::abs(e.c);
      if (mag > 0.0) e.c *= km.centers[std::size_t(km.assign[i])] / mag;
    }
    set.n_pb = clusters;  // distinct coefficient values after clustering
  }
  const auto taps = k.taps(0);
  set.mean_offset = 0.0;
  for (double t : taps) set.mean_offset += t;
  return set;
}

// m_AM = sum_k | dx_k - c x_k |^2 over the candidate's symbols, where c is
// the common rotation a receiver's mean-phase (and scale) recovery removes:
// the least-squares projection of the predicted distortion onto the symbols.
// Note the m = 0 row taps alone understate the common rotation (the matched
// n = 0 column contributes an equal share for the channel of interest), so
// the projection is computed exactly per candidate.
inline double metric_am(const SymbolFrame& f, const AmCoeffSet& set) {
  auto score_pol = [&](const std::vector<cplx>& xs) {
    const std::size_t n = xs.size();
    const long ln = long(n);
    // normalize candidate energy so the kernel's unit-energy scaling applies
    double e = 0.0;
    for (const auto& v : xs) e += std::norm(v);
    e /= double(n);
    const double s1 = 1.0 / std::sqrt(e);
    auto wrap = [&](long i) { return std::size_t((i % ln + ln) % ln); };
    std::vector<cplx> dx(n);
    cplx proj = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      cplx acc = 0.0;
      for (const auto& en : set.entries)
        acc += en.c * (xs[wrap(long(k) + en.m)] * s1) * (xs[wrap(long(k) + en.n)] * s1) *
               std::conj(xs[wrap(long(k) + en.m + en.n)] * s1);
      dx[k] = acc;
      proj += acc * std::conj(xs[k] * s1);
      den += std::norm(xs[k] * s1);
    }
    const cplx c = proj / den;
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m += std::norm(dx[k] - c * (xs[k] * s1));
    return m;
  };
  double m = score_pol(f.x);
  if (f.dual_pol()) m += score_pol(f.y);
  return m;
}

// ---------------------------------------------------------------------------
// selection

struct SelectionResult {
  std::size_t index = 0;
  std::vector<double> metric_values;
};

inline SelectionResult select_candidate(std::span<const double> metric_values,
                                        bool threshold_mode = false, double acceptance_ratio = 0.25) {
  if (metric_values.empty()) throw std::invalid_argument("select: no candidates");
  SelectionResult r;
  r.metric_values.assign(metric_values.begin(), metric_values.end());
  if (threshold_mode && metric_values.size() > 1) {
    // acceptance threshold at the r_a quantile of the candidate metrics
    std::vector<double> sorted(metric_values.begin(), metric_values.end());
    std::sort(sorted.begin(), sorted.end());
    const double thr =
        sorted[std::size_t(std::min<double>(acceptance_ratio, 1.0) * double(sorted.size() - 1))];
    for (std::size_t i = 0; i < metric_values.size(); ++i)
      if (metric_values[i] <= thr) {
        r.index = i;
        return r;
      }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < metric_values.size(); ++i)
    if (metric_values[i] < metric_values[best]) best = i;  // ties keep the lowest index
  r.index = best;
  return r;
}

// Eq.-style SNR-gain prediction from NLIN powers: one third of the dB change
inline double predict_selection_gain_db(double p_nlin_ref, double p_nlin_sel) {
  if (p_nlin_ref <= 0.0 || p_nlin_sel <= 0.0)
    throw std::invalid_argument("selection gain: powers must be positive");
  return (db10(p_nlin_ref) - db10(p_nlin_sel)) / 3.0;
}

// ---------------------------------------------------------------------------
// complexity accounting

struct ComplexityReport {
  int w_mem = 0;
  long long n_full = 0;       // |m| + |n| <= w
  long long n_selected = 0;   // |m n| < w within the square
  long long n_quantized = 0;  // k-means cluster count heuristic
  long long c_am_full = 0;    // N_t (2 + n_pb) complex multiplications/symbol
  long long c_am_selected = 0;
  long long c_am_quantized = 0;
};

inline ComplexityReport complexity_report(int w_mem, long long n_candidates) {
  if (w_mem < 0) throw std::invalid_argument("complexity: w must be >= 0");
  ComplexityReport r;
  r.w_mem = w_mem;
  const long long w = w_mem;
  r.n_full = (w + 1) * (w + 1) + w * w;
  long long harmonic = 0;
  for (long long k = 1; k <= w; ++k) harmonic += (w - 1) / k;
  r.n_selected = 4 * harmonic + 4 * w + 1;
  r.n_quantized = 3 * ((w + 14) / 16) + 1;
  r.c_am_full = n_candidates * (2 + r.n_full);
  r.c_am_selected = n_candidates * (2 + r.n_selected);
  r.c_am_quantized = n_candidates * (2 + r.n_quantized);
  return r;
}

}  // namespace shapinglab
