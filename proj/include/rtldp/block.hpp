#pragma once

/// Memory-1 presentation backing the spectral computations: states are the
/// admissible words of a chosen block length, transitions append one symbol.
/// The weighted transfer matrix M_{uv} = a_{uv} e^{phi(u)} (optionally
/// penalized by e^{-t} on a marked state set) is materialized as CSR; the
/// state list itself stays implicit in sorted word codes.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rtldp/cylinder_set.hpp"
#include "rtldp/potential.hpp"
#include "rtldp/sft.hpp"
#include "rtldp/spectral.hpp"

namespace rtldp {

class BlockSystem {
 public:
  BlockSystem(const Sft& sft, int block_len) : sft_(sft), k_(block_len) {
    if (block_len < 1) throw std::invalid_argument("block length must be >= 1");
    codes_ = admissible_word_codes(sft, block_len);
    if (codes_.size() > 5'000'000)
      throw std::runtime_error("block system too large (" + std::to_string(codes_.size()) +
                               " states); reduce depth");
    int n = sft.alphabet_size();
    shift_place_ = pow_u64_checked(n, block_len - 1);
    ptr_.assign(codes_.size() + 1, 0);
    for (size_t u = 0; u < codes_.size(); ++u) {
      ptr_[u + 1] = ptr_[u];
      int last = static_cast<int>(codes_[u] % n);
      uint64_t shifted = (codes_[u] % shift_place_) * n;
      for (int b = 0; b < n; ++b) {
        if (!sft.allows(last, b)) continue;
        int v = index_of(shifted + b);
        if (v < 0) continue;  // cannot happen for block words of a valid Sft
        succ_.push_back(v);
        sym_.push_back(static_cast<uint8_t>(b));
        ++ptr_[u + 1];
      }
    }
  }

  const Sft& sft() const { return sft_; }
  int block_length() const { return k_; }
  int state_count() const { return static_cast<int>(codes_.size()); }
  uint64_t state_code(int u) const { return codes_[u]; }
  const std::vector<int>& ptr() const { return ptr_; }
  const std::vector<int>& succ() const { return succ_; }

  int index_of(uint64_t code) const {
    auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code) return -1;
    return static_cast<int>(it - codes_.begin());
  }

  /// Word spelled by a state (anchored at 0).
  Word state_word(int u) const {
    return Word{code_to_symbols(codes_[u], k_, sft_.alphabet_size()), 0};
  }

  /// Code of the first `len` symbols of a state (len <= block length).
  uint64_t prefix_code(int u, int len) const {
    uint64_t div = pow_u64_checked(sft_.alphabet_size(), k_ - len);
    return codes_[u] / div;
  }

  /// Half-open state-index range of states whose length-`len` prefix equals
  /// `prefix` (codes are sorted, so the range is contiguous).
  std::pair<int, int> prefix_range(uint64_t prefix, int len) const {
    uint64_t mult = pow_u64_checked(sft_.alphabet_size(), k_ - len);
    auto lo = std::lower_bound(codes_.begin(), codes_.end(), prefix * mult);
    auto hi = std::lower_bound(codes_.begin(), codes_.end(), (prefix + 1) * mult);
    return {static_cast<int>(lo - codes_.begin()), static_cast<int>(hi - codes_.begin())};
  }

  /// State membership mask of a cylinder set (re-anchored to 0; the set's
  /// word length must not exceed the block length).
  std::vector<uint8_t> membership_mask(const CylinderSet& set) const {
    if (set.length() > k_)
      throw std::invalid_argument("set word length exceeds block length");
    std::vector<uint8_t> mask(codes_.size(), 0);
    for (uint64_t c : set.codes()) {
      auto [lo, hi] = prefix_range(c, set.length());
      for (int u = lo; u < hi; ++u) mask[u] = 1;
    }
    return mask;
  }

  /// Per-state value of the (window-normalized) potential, read off the
  /// state's first span symbols.  Requires block length >= span.
  std::vector<double> vertex_potential(const Potential& phi) const {
    if (phi.span() > k_)
      throw std::invalid_argument("block length smaller than potential span");
    std::vector<double> psi(codes_.size());
    uint64_t div = pow_u64_checked(sft_.alphabet_size(), k_ - phi.span());
    for (size_t u = 0; u < codes_.size(); ++u)
      psi[u] = phi.value_by_code(codes_[u] / div);
    return psi;
  }

  /// Weighted transfer matrix with row weights exp(log_weight[u]); states in
  /// `removed` (if given) are cut out entirely (rows and columns).
  CsrMatrix weighted_matrix(const std::vector<double>& log_weight,
                            const std::vector<uint8_t>* removed = nullptr) const {
    CsrMatrix m;
    m.n = state_count();
    m.ptr.assign(m.n + 1, 0);
    for (int u = 0; u < m.n; ++u) {
      m.ptr[u + 1] = m.ptr[u];
      if (removed && (*removed)[u]) continue;
      double w = std::exp(log_weight[u]);
      for (int e = ptr_[u]; e < ptr_[u + 1]; ++e) {
        if (removed && (*removed)[succ_[e]]) continue;
        m.col.push_back(succ_[e]);
        m.val.push_back(w);
        ++m.ptr[u + 1];
      }
    }
    return m;
  }

  /// Plain adjacency as CSR with unit weights.
  CsrMatrix adjacency() const {
    std::vector<double> zero(state_count(), 0.0);
    return weighted_matrix(zero);
  }

 private:
  Sft sft_;
  int k_;
  uint64_t shift_place_;
  std::vector<uint64_t> codes_;
  std::vector<int> ptr_;
  std::vector<int> succ_;
  std::vector<uint8_t> sym_;
};

}  // namespace rtldp
