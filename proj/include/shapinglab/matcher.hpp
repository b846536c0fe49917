// Fixed-to-fixed amplitude shapers.
//
// CCDM is realized as exact lexicographic ranking/unranking over multiset
// permutations (big-integer interval arithmetic, no finite-precision coder
// state), ESS/K-ESS as enumerative indexing over a bounded-energy trellis.
// Sequence order is lexicographic with amplitude levels ascending, so
// enumeration oracles can check every mapping directly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapinglab/bigint.hpp"
#include "shapinglab/constellation.hpp"
#include "shapinglab/rng.hpp"

namespace shapinglab {

enum class ShaperKind { Ccdm, Ess, Kess };

inline std::string to_string(ShaperKind k) {
  switch (k) {
    case ShaperKind::Ccdm: return "ccdm";
    case ShaperKind::Ess: return "ess";
    case ShaperKind::Kess: return "kess";
  }
  return "?";
}

inline ShaperKind shaper_kind_from_string(const std::string& s) {
  if (s == "ccdm") return ShaperKind::Ccdm;
  if (s == "ess") return ShaperKind::Ess;
  if (s == "kess") return ShaperKind::Kess;
  throw std::invalid_argument("unknown shaper kind: " + s);
}

// Amplitudes are positive odd integers (1, 3, 5, ...), so energies a^2 and
// fourth powers a^4 are exact integers in the trellis state.
using AmplitudeBlock = std::vector<int>;
using BitVec = std::vector<std::uint8_t>;

struct ShaperSpec {
  ShaperKind kind = ShaperKind::Ccdm;
  int block_length = 0;            // D
  std::vector<int> levels;         // ascending
  std::vector<int> composition;    // CCDM: count per level, sums to D
  long long energy_bound = 0;      // ESS/K-ESS: bound on sum a_i^2
  long long fourth_bound = 0;      // K-ESS: bound on sum a_i^4

  void validate() const {
    if (block_length <= 0) throw std::invalid_argument("shaper: block length must be positive");
    if (levels.empty()) throw std::invalid_argument("shaper: empty level set");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i] <= 0 || levels[i] % 2 == 0)
        throw std::invalid_argument("shaper: levels must be positive odd integers");
      if (i > 0 && levels[i] <= levels[i - 1])
        throw std::invalid_argument("shaper: levels must be strictly ascending");
    }
    if (kind == ShaperKind::Ccdm) {
      if (composition.size() != levels.size())
        throw std::invalid_argument("ccdm: composition size mismatch");
      long long total = 0;
      for (int c : composition) {
        if (c < 0) throw std::invalid_argument("ccdm: negative composition entry");
        total += c;
      }
      if (total != block_length) throw std::invalid_argument("ccdm: composition must sum to D");
    } else {
      const long long emin = (long long)block_length * levels.front() * levels.front();
      if (energy_bound < emin) throw std::invalid_argument("ess: empty admissible set");
      if (kind == ShaperKind::Kess && fourth_bound <= 0)
        throw std::invalid_argument("kess: fourth-moment bound must be positive");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = shapinglab::to_string(kind);
    j["block_length"] = block_length;
    j["levels"] = levels;
    if (kind == ShaperKind::Ccdm) j["composition"] = composition;
    if (kind != ShaperKind::Ccdm) j["energy_bound"] = energy_bound;
    if (kind == ShaperKind::Kess) j["fourth_bound"] = fourth_bound;
    return j;
  }

  static ShaperSpec from_json(const nlohmann::json& j) {
    ShaperSpec s;
    s.kind = shaper_kind_from_string(j.at("kind").get<std::string>());
    s.block_length = j.at("block_length").get<int>();
    s.levels = j.at("levels").get<std::vector<int>>();
    if (s.kind == ShaperKind::Ccdm) s.composition = j.at("composition").get<std::vector<int>>();
    s.energy_bound = j.value("energy_bound", 0LL);
    s.fourth_bound = j.value("fourth_bound", 0LL);
    s.validate();
    return s;
  }
};

namespace detail {

inline BigUint bits_to_index(const BitVec& bits) {
  BigUint idx(0);
  for (std::uint8_t b : bits) {
    idx <<= 1;
    if (b) idx += BigUint(1);
  }
  return idx;
}

inline BitVec index_to_bits(const BigUint& idx, std::size_t k) {
  BitVec bits(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    if (idx.bit(k - 1 - i)) bits[i] = 1;
  return bits;
}

}  // namespace detail

class Shaper {
 public:
  virtual ~Shaper() = default;
  virtual const ShaperSpec& spec() const = 0;
  virtual const BigUint& sequence_count() const = 0;
  // input bits per block, k = floor(log2 N_seq)
  virtual std::size_t input_bits() const = 0;
  virtual AmplitudeBlock encode(const BitVec& bits) const = 0;
  virtual BitVec decode(const AmplitudeBlock& block) const = 0;
  // exact per-amplitude marginal averaged over block positions
  virtual std::vector<double> average_marginal() const = 0;
  // exact per-position marginals
  virtual std::vector<std::vector<double>> position_marginals() const = 0;
  // uniform draw over the FULL admissible set (all N_seq sequences). encode()
  // reaches only the first 2^k sequences in lexicographic order, which skews
  // early positions toward small amplitudes; the closed-form energy statistics
  // describe the full-set ensemble, so statistical oracles sample here.
  virtual AmplitudeBlock sample_uniform(Rng& rng) const = 0;
};

// ---------------------------------------------------------------------------
// CCDM

class CcdmMatcher final : public Shaper {
 public:
  explicit CcdmMatcher(ShaperSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.kind != ShaperKind::Ccdm) throw std::invalid_argument("CcdmMatcher: wrong kind");
    count_ = multinomial(spec_.composition);
    k_ = count_.bit_length() > 0 ? count_.bit_length() - 1 : 0;
  }

  const ShaperSpec& spec() const override { return spec_; }
  const BigUint& sequence_count() const override { return count_; }
  std::size_t input_bits() const override { return k_; }

  AmplitudeBlock encode(const BitVec& bits) const override {
    if (bits.size() != k_) throw std::invalid_argument("ccdm encode: need exactly k input bits");
    BigUint index = detail::bits_to_index(bits);
    std::vector<int> counts = spec_.composition;
    BigUint n_state = count_;  // multiset permutations of the remaining symbols
    AmplitudeBlock out(spec_.block_length);
    for (int pos = 0; pos < spec_.block_length; ++pos) {
      const std::uint64_t remaining = std::uint64_t(spec_.block_length - pos);
      bool placed = false;
      for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] == 0) continue;
        // sequences starting with level l: N * counts[l] / remaining, exact
        BigUint first = n_state;
        first.mul_small(std::uint64_t(counts[l]));
        first.div_small(remaining);
        if (index < first) {
          out[pos] = spec_.levels[l];
          --counts[l];
          n_state = std::move(first);
          placed = true;
          break;
        }
        index -= first;
      }
      if (!placed) throw std::logic_error("ccdm encode: ranking invariant violated");
    }
    return out;
  }

  BitVec decode(const AmplitudeBlock& block) const override {
    check_composition(block);
    std::vector<int> counts = spec_.composition;
    BigUint n_state = count_;
    BigUint index(0);
    for (int pos = 0; pos < spec_.block_length; ++pos) {
      const std::uint64_t remaining = std::uint64_t(spec_.block_length - pos);
      const std::size_t chosen = level_index(block[pos]);
      for (std::size_t l = 0; l < chosen; ++l) {
        if (counts[l] == 0) continue;
        BigUint first = n_state;
        first.mul_small(std::uint64_t(counts[l]));
        first.div_small(remaining);
        index += first;
      }
      BigUint next = n_state;
      next.mul_small(std::uint64_t(counts[chosen]));
      next.div_small(remaining);
      n_state = std::move(next);
      --counts[chosen];
    }
    if (index.bit_length() > k_)
      throw std::invalid_argument("ccdm decode: block outside the used index range");
    return detail::index_to_bits(index, k_);
  }

  std::vector<double> average_marginal() const override {
    std::vector<double> p(spec_.levels.size());
    for (std::size_t l = 0; l < p.size(); ++l)
      p[l] = double(spec_.composition[l]) / double(spec_.block_length);
    return p;
  }

  std::vector<std::vector<double>> position_marginals() const override {
    // constant-composition blocks are exchangeable across positions
    return std::vector<std::vector<double>>(spec_.block_length, average_marginal());
  }

  AmplitudeBlock sample_uniform(Rng& rng) const override {
    // Fisher-Yates shuffle of the composition multiset
    AmplitudeBlock b;
    b.reserve(spec_.block_length);
    for (std::size_t l = 0; l < spec_.levels.size(); ++l)
      b.insert(b.end(), std::size_t(spec_.composition[l]), spec_.levels[l]);
    for (std::size_t i = b.size(); i-- > 1;)
      std::swap(b[i], b[rng.below(i + 1)]);
    return b;
  }

 private:
  std::size_t level_index(int level) const {
    for (std::size_t l = 0; l < spec_.levels.size(); ++l)
      if (spec_.levels[l] == level) return l;
    throw std::invalid_argument("ccdm: amplitude not in level set");
  }

  void check_composition(const AmplitudeBlock& block) const {
    if (int(block.size()) != spec_.block_length)
      throw std::invalid_argument("ccdm: block length mismatch");
    std::vector<int> counts(spec_.levels.size(), 0);
    for (int a : block) ++counts[level_index(a)];
    if (counts != spec_.composition) throw std::invalid_argument("ccdm: composition mismatch");
  }

  ShaperSpec spec_;
  BigUint count_;
  std::size_t k_ = 0;
};

// ---------------------------------------------------------------------------
// ESS / K-ESS

class EssMatcher final : public Shaper {
 public:
  explicit EssMatcher(ShaperSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.kind == ShaperKind::Ccdm) throw std::invalid_argument("EssMatcher: wrong kind");
    track_fourth_ = spec_.kind == ShaperKind::Kess;
    build();
    if (count_.is_zero()) throw std::invalid_argument("ess: empty admissible set");
    k_ = count_.bit_length() > 0 ? count_.bit_length() - 1 : 0;
  }

  const ShaperSpec& spec() const override { return spec_; }
  const BigUint& sequence_count() const override { return count_; }
  std::size_t input_bits() const override { return k_; }

  AmplitudeBlock encode(const BitVec& bits) const override {
    if (bits.size() != k_) throw std::invalid_argument("ess encode: need exactly k input bits");
    return unrank(detail::bits_to_index(bits));
  }

  AmplitudeBlock sample_uniform(Rng& rng) const override {
    const std::size_t bits = count_.bit_length();
    for (;;) {
      BigUint idx(0);
      for (std::size_t b = 0; b < bits; ++b) {
        idx <<= 1;
        if (rng.bit()) idx += BigUint(1);
      }
      if (idx < count_) return unrank(std::move(idx));
    }
  }

  BitVec decode(const AmplitudeBlock& block) const override {
    if (int(block.size()) != spec_.block_length)
      throw std::invalid_argument("ess decode: block length mismatch");
    BigUint index(0);
    long long e = 0, q = 0;
    for (int pos = 0; pos < spec_.block_length; ++pos) {
      const std::size_t chosen = level_index(block[pos]);
      for (std::size_t l = 0; l < chosen; ++l) {
        const long long a2 = sq(spec_.levels[l]);
        const BigUint* c = completions(pos + 1, e + a2, q + a2 * a2);
        if (c) index += *c;
      }
      const long long a2 = sq(spec_.levels[chosen]);
      e += a2;
      q += a2 * a2;
      if (e > spec_.energy_bound || (track_fourth_ && q > spec_.fourth_bound))
        throw std::invalid_argument("ess decode: block violates the shaping bounds");
    }
    if (index.bit_length() > k_)
      throw std::invalid_argument("ess decode: block outside the used index range");
    return detail::index_to_bits(index, k_);
  }

  std::vector<double> average_marginal() const override {
    const auto per_pos = position_marginals();
    std::vector<double> avg(spec_.levels.size(), 0.0);
    for (const auto& p : per_pos)
      for (std::size_t l = 0; l < avg.size(); ++l) avg[l] += p[l];
    for (auto& v : avg) v /= double(per_pos.size());
    return avg;
  }

  std::vector<std::vector<double>> position_marginals() const override {
    // occupancy of edge (pos, level) = forward(prefix) * completions(suffix),
    // evaluated in the log domain against the total path count
    std::unordered_map<std::uint64_t, BigUint> fwd;
    fwd[state_key(0, 0)] = BigUint(1);
    std::vector<std::vector<double>> result(spec_.block_length,
                                            std::vector<double>(spec_.levels.size(), 0.0));
    const double log2_total = count_.log2();
    for (int pos = 0; pos < spec_.block_length; ++pos) {
      std::unordered_map<std::uint64_t, BigUint> next;
      for (const auto& [key, f] : fwd) {
        const long long e = key_energy(key), q = key_fourth(key);
        for (std::size_t l = 0; l < spec_.levels.size(); ++l) {
          const long long a2 = sq(spec_.levels[l]);
          const BigUint* back = completions(pos + 1, e + a2, q + a2 * a2);
          if (back == nullptr || back->is_zero()) continue;
          result[pos][l] += std::exp2(f.log2() + back->log2() - log2_total);
          next[state_key(e + a2, q + a2 * a2)] += f;
        }
      }
      fwd = std::move(next);
    }
    return result;
  }

  // number of admissible completions from `pos` symbols placed with used
  // energy e (and fourth-power sum q for K-ESS); nullptr when infeasible
  const BigUint* completions(int pos, long long e, long long q) const {
    if (e > spec_.energy_bound) return nullptr;
    if (track_fourth_ && q > spec_.fourth_bound) return nullptr;
    const auto& m = tables_[pos];
    const auto it = m.find(state_key(e, q));
    return it == m.end() ? nullptr : &it->second;
  }

 private:
  using StateMap = std::unordered_map<std::uint64_t, BigUint>;

  AmplitudeBlock unrank(BigUint index) const {
    AmplitudeBlock out(spec_.block_length);
    long long e = 0, q = 0;
    for (int pos = 0; pos < spec_.block_length; ++pos) {
      bool placed = false;
      for (std::size_t l = 0; l < spec_.levels.size(); ++l) {
        const long long a2 = sq(spec_.levels[l]);
        const BigUint* c = completions(pos + 1, e + a2, q + a2 * a2);
        if (c == nullptr || c->is_zero()) continue;
        if (index < *c) {
          out[pos] = spec_.levels[l];
          e += a2;
          q += a2 * a2;
          placed = true;
          break;
        }
        index -= *c;
      }
      if (!placed) throw std::invalid_argument("ess encode: index out of range");
    }
    return out;
  }

  static long long sq(int a) { return (long long)a * a; }
  std::uint64_t state_key(long long e, long long q) const {
    return (std::uint64_t(e) << 32) | std::uint64_t(track_fourth_ ? q : 0);
  }
  static long long key_energy(std::uint64_t k) { return (long long)(k >> 32); }
  static long long key_fourth(std::uint64_t k) { return (long long)(k & 0xffffffffULL); }

  void build() {
    tables_.assign(spec_.block_length + 1, StateMap{});
    // forward reachability keeps the backward tables sparse
    std::vector<std::vector<std::uint64_t>> reachable(spec_.block_length + 1);
    {
      StateMap seen;
      seen.emplace(state_key(0, 0), BigUint(0));
      reachable[0].push_back(state_key(0, 0));
      for (int pos = 0; pos < spec_.block_length; ++pos) {
        StateMap next;
        for (const auto& [key, unused] : seen) {
          const long long e = key_energy(key), q = key_fourth(key);
          for (int lv : spec_.levels) {
            const long long a2 = sq(lv), a4 = a2 * a2;
            if (e + a2 > spec_.energy_bound) break;  // levels ascending
            if (track_fourth_ && q + a4 > spec_.fourth_bound) continue;
            next.emplace(state_key(e + a2, q + a4), BigUint(0));
          }
        }
        reachable[pos + 1].reserve(next.size());
        for (const auto& [key, unused] : next) reachable[pos + 1].push_back(key);
        seen = std::move(next);
      }
    }
    for (std::uint64_t key : reachable[spec_.block_length])
      tables_[spec_.block_length][key] = BigUint(1);
    for (int pos = spec_.block_length; pos-- > 0;) {
      for (std::uint64_t key : reachable[pos]) {
        const long long e = key_energy(key), q = key_fourth(key);
        BigUint total(0);
        for (int lv : spec_.levels) {
          const long long a2 = sq(lv), a4 = a2 * a2;
          if (e + a2 > spec_.energy_bound) break;
          if (track_fourth_ && q + a4 > spec_.fourth_bound) continue;
          if (const BigUint* c = completions(pos + 1, e + a2, q + a4)) total += *c;
        }
        tables_[pos][key] = std::move(total);
      }
    }
    const BigUint* root = completions(0, 0, 0);
    count_ = root ? *root : BigUint(0);
  }

  std::size_t level_index(int level) const {
    for (std::size_t l = 0; l < spec_.levels.size(); ++l)
      if (spec_.levels[l] == level) return l;
    throw std::invalid_argument("ess: amplitude not in level set");
  }

  ShaperSpec spec_;
  bool track_fourth_ = false;
  std::vector<StateMap> tables_;
  BigUint count_;
  std::size_t k_ = 0;
};

inline std::unique_ptr<Shaper> make_shaper(const ShaperSpec& spec) {
  if (spec.kind == ShaperKind::Ccdm) return std::make_unique<CcdmMatcher>(spec);
  return std::make_unique<EssMatcher>(spec);
}

// ---------------------------------------------------------------------------
// Rate matching and analytics

// shaping rate realized by the matcher, bits per amplitude
inline double shaper_rate(const Shaper& s) {
  return double(s.input_bits()) / double(s.spec().block_length);
}

// rate loss: entropy of the induced per-amplitude marginal minus realized
// bits per amplitude
inline double rate_loss(const Shaper& s) {
  return entropy_bits(s.average_marginal()) - shaper_rate(s);
}

// CCDM composition targeting `k_target` input bits for block length D:
// n-choose quantization of the MB distribution plus a local search that lands
// floor(log2 Nseq) on the target while staying close to the MB family
inline std::vector<int> ccdm_composition_for_bits(int block_length, const std::vector<int>& levels,
                                                  std::size_t k_target) {
  std::vector<double> amps(levels.begin(), levels.end());
  auto quantize = [&](double lambda) {
    const auto p = mb_distribution(amps, lambda);
    // largest-remainder rounding of D*p
    std::vector<int> comp(levels.size());
    std::vector<std::pair<double, std::size_t>> rem;
    int used = 0;
    for (std::size_t l = 0; l < p.size(); ++l) {
      const double t = p[l] * block_length;
      comp[l] = int(t);
      used += comp[l];
      rem.push_back({t - std::floor(t), l});
    }
    std::sort(rem.rbegin(), rem.rend());
    for (int i = 0; i < block_length - used; ++i) comp[rem[std::size_t(i) % rem.size()].second]++;
    return comp;
  };
  auto bits_of = [&](const std::vector<int>& comp) -> std::size_t {
    const BigUint n = multinomial(comp);
    return n.bit_length() > 0 ? n.bit_length() - 1 : 0;
  };
  // bisect lambda: input bits decrease as lambda grows
  double lo = 0.0, hi = 4.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bits_of(quantize(mid)) >= k_target)
      lo = mid;
    else
      hi = mid;
  }
  std::vector<int> comp = quantize(lo);
  // single-count transfers toward the exact bit target; prefer the move that
  // overshoots least while still meeting the target
  for (int it = 0; it < 4 * block_length && bits_of(comp) != k_target; ++it) {
    std::vector<int> best = comp;
    double best_gap = 1e18;
    for (std::size_t from = 0; from < comp.size(); ++from) {
      if (comp[from] == 0) continue;
      for (std::size_t to = 0; to < comp.size(); ++to) {
        if (to == from) continue;
        std::vector<int> cand = comp;
        cand[from]--;
        cand[to]++;
        const std::size_t b = bits_of(cand);
        const double gap = (b >= k_target ? 0.0 : 1e9) + std::abs(double(b) - double(k_target));
        if (gap < best_gap) {
          best_gap = gap;
          best = std::move(cand);
        }
      }
    }
    if (best == comp) break;
    comp = std::move(best);
  }
  return comp;
}

inline std::vector<int> ccdm_composition_for_rate(int block_length, const std::vector<int>& levels,
                                                  double rate_bits_per_amp) {
  const auto k = std::size_t(std::llround(rate_bits_per_amp * block_length));
  return ccdm_composition_for_bits(block_length, levels, k);
}

// smallest ESS energy bound achieving floor(log2 Nseq) >= rate * D
inline long long ess_energy_bound_for_rate(int block_length, const std::vector<int>& levels,
                                           double rate_bits_per_amp) {
  const auto k_target = std::size_t(std::llround(rate_bits_per_amp * block_length));
  long long lo = (long long)block_length * levels.front() * levels.front();
  long long hi = (long long)block_length * levels.back() * levels.back();
  auto bits_at = [&](long long emax) -> std::size_t {
    ShaperSpec s;
    s.kind = ShaperKind::Ess;
    s.block_length = block_length;
    s.levels = levels;
    s.energy_bound = emax;
    return EssMatcher(s).input_bits();
  };
  if (bits_at(hi) < k_target)
    throw std::invalid_argument("ess rate matching: requested rate not achievable");
  while (lo < hi) {
    const long long mid = lo + (hi - lo) / 2;
    if (bits_at(mid) >= k_target)
      hi = mid;
    else
      lo = mid + 1;
  }
  return hi;
}

// induced moments of the QAM symbols formed by mapping shaped blocks.
// pairing 1: independent blocks per quadrature (exact, from marginals)
// pairing 2: adjacent amplitudes of one block as (I, Q)  (Monte Carlo)
// pairing 4: one block split ix|qx|iy|qy across two polarizations (Monte Carlo)
struct InducedMoments {
  MomentReport report;
  Interval mu4_ci;
};

inline InducedMoments induced_moments(const Shaper& s, int pairing_dims, int n_blocks, Rng& rng) {
  if (pairing_dims != 1 && pairing_dims != 2 && pairing_dims != 4)
    throw std::invalid_argument("induced_moments: pairing must be 1, 2 or 4");
  const int d = s.spec().block_length;
  if (d % pairing_dims != 0)
    throw std::invalid_argument("induced_moments: D not divisible by pairing");
  if (pairing_dims == 1) {
    // a^2 + b^2 with a, b independent draws from the same position marginal
    const auto pp = s.position_marginals();
    CompensatedSum e2, e4, e6;
    for (const auto& p : pp) {
      double m2 = 0.0, m4 = 0.0, m6 = 0.0;
      for (std::size_t l = 0; l < p.size(); ++l) {
        const double a2 = double(s.spec().levels[l]) * s.spec().levels[l];
        m2 += p[l] * a2;
        m4 += p[l] * a2 * a2;
        m6 += p[l] * a2 * a2 * a2;
      }
      e2.add(2.0 * m2);
      e4.add(2.0 * m4 + 2.0 * m2 * m2);
      e6.add(2.0 * m6 + 6.0 * m4 * m2);
    }
    const double n = double(pp.size());
    const double e = e2.value() / n;
    MomentReport r{e4.value() / n / (e * e), e6.value() / n / (e * e * e)};
    return {r, {r.mu4, r.mu4}};
  }
  CompensatedSum s2, s4, s6;
  std::vector<double> mu4_batches;
  std::size_t count = 0;
  const int batches = 16;
  const int per_batch = std::max(1, n_blocks / batches);
  for (int b = 0; b < batches; ++b) {
    CompensatedSum b2, b4;
    std::size_t bn = 0;
    auto push = [&](double e2v) {
      s2.add(e2v);
      s4.add(e2v * e2v);
      s6.add(e2v * e2v * e2v);
      b2.add(e2v);
      b4.add(e2v * e2v);
      ++count;
      ++bn;
    };
    for (int blk = 0; blk < per_batch; ++blk) {
      BitVec bits(s.input_bits());
      for (auto& bit : bits) bit = rng.bit() ? 1 : 0;
      const auto block = s.encode(bits);
      if (pairing_dims == 2) {
        for (int i = 0; i < d; i += 2)
          push(double(block[i]) * block[i] + double(block[i + 1]) * block[i + 1]);
      } else {
        // consecutive quadruples feed (ix, qx, iy, qy) of one time slot
        for (int i = 0; i < d; i += 4) {
          push(double(block[i]) * block[i] + double(block[i + 1]) * block[i + 1]);
          push(double(block[i + 2]) * block[i + 2] + double(block[i + 3]) * block[i + 3]);
        }
      }
    }
    const double be = b2.value() / double(bn);
    mu4_batches.push_back(b4.value() / double(bn) / (be * be));
  }
  const double e = s2.value() / double(count);
  MomentReport r{s4.value() / double(count) / (e * e), s6.value() / double(count) / (e * e * e)};
  const double bm = mean(mu4_batches);
  const double bsd = std::sqrt(variance(mu4_batches) / double(mu4_batches.size() - 1));
  return {r, {bm - 2.0 * bsd, bm + 2.0 * bsd}};
}

}  // namespace shapinglab
