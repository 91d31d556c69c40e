#pragma once

/// Locally-constant potentials: phi(x) depends only on the coordinates
/// x_l..x_r for a fixed window [l, r] with l <= 0 <= r.  Values are given by
/// a total table on the admissible words of the window length.  Internally
/// the window is shifted to [0, r-l]; every measure involved is shift
/// invariant, so pressures and equilibrium states are unchanged.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtldp/sft.hpp"

namespace rtldp {

class Potential {
 public:
  /// Table-backed potential.  `values` maps every admissible word of length
  /// r-l+1 (anchored at l) to a finite real.
  static Potential from_table(const Sft& sft, int window_left, int window_right,
                              const std::map<std::string, double>& values) {
    if (window_left > 0 || window_right < 0)
      throw std::invalid_argument("potential window must satisfy l <= 0 <= r");
    Potential p;
    p.left_ = window_left;
    p.right_ = window_right;
    int span = p.span();
    auto codes = admissible_word_codes(sft, span);
    p.alphabet_ = sft.alphabet_size();
    p.codes_ = codes;
    p.values_.assign(codes.size(), 0.0);
    size_t found = 0;
    for (const auto& [text, v] : values) {
      auto symbols = parse_word(text, sft.alphabet_size());
      if (static_cast<int>(symbols.size()) != span)
        throw std::invalid_argument("potential table word '" + text +
                                    "' does not match window length " +
                                    std::to_string(span));
      uint64_t c = word_code(symbols, sft.alphabet_size());
      auto it = std::lower_bound(codes.begin(), codes.end(), c);
      if (it == codes.end() || *it != c)
        throw std::invalid_argument("potential table word '" + text + "' is inadmissible");
      if (!std::isfinite(v))
        throw std::invalid_argument("potential value for '" + text + "' is not finite");
      p.values_[it - codes.begin()] = v;
      ++found;
    }
    if (found != codes.size())
      throw std::invalid_argument("potential table must cover all admissible window words (" +
                                  std::to_string(found) + " of " +
                                  std::to_string(codes.size()) + " given)");
    return p;
  }

  /// The zero potential (equilibrium state = measure of maximal entropy).
  static Potential zero(const Sft& sft) {
    Potential p;
    p.left_ = p.right_ = 0;
    p.alphabet_ = sft.alphabet_size();
    p.codes_ = admissible_word_codes(sft, 1);
    p.values_.assign(p.codes_.size(), 0.0);
    return p;
  }

  /// phi(x) = log p_{x_0}.  On the full shift its equilibrium state is the
  /// Bernoulli(p) measure.
  static Potential bernoulli(const Sft& sft, const std::vector<double>& probs) {
    if (static_cast<int>(probs.size()) != sft.alphabet_size())
      throw std::invalid_argument("bernoulli potential needs one probability per symbol");
    Potential p;
    p.left_ = p.right_ = 0;
    p.alphabet_ = sft.alphabet_size();
    p.codes_ = admissible_word_codes(sft, 1);
    p.values_.resize(p.codes_.size());
    for (size_t i = 0; i < p.codes_.size(); ++i) {
      double q = probs[p.codes_[i]];
      if (!(q > 0.0) || !(q <= 1.0))
        throw std::invalid_argument("bernoulli probabilities must lie in (0, 1]");
      p.values_[i] = std::log(q);
    }
    return p;
  }

  int window_left() const { return left_; }
  int window_right() const { return right_; }
  int span() const { return right_ - left_ + 1; }

  /// Value of the window-normalized potential on a span-length word code.
  /// The normalized potential reads coordinates 0..span-1 with the original
  /// table; it differs from phi by a coordinate shift, which no invariant
  /// quantity sees.
  double value_by_code(uint64_t code) const {
    auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code)
      throw std::invalid_argument("potential evaluated on inadmissible word");
    return values_[it - codes_.begin()];
  }

  /// phi(sigma^j x) for x in the cylinder of `w`, if determined by `w`.
  /// The evaluation needs coordinates j+l .. j+r of the point.
  bool determines(const Word& w, int j) const {
    return w.anchor <= j + left_ && j + right_ <= w.last_coord();
  }

  double eval_at(const Word& w, int j) const {
    if (!determines(w, j))
      throw std::invalid_argument("word too short to evaluate potential at offset " +
                                  std::to_string(j));
    int start = j + left_ - w.anchor;
    std::vector<int> sub(w.symbols.begin() + start, w.symbols.begin() + start + span());
    return value_by_code(word_code(sub, alphabet_));
  }

  int alphabet() const { return alphabet_; }

 private:
  int left_ = 0, right_ = 0;
  int alphabet_ = 0;
  std::vector<uint64_t> codes_;
  std::vector<double> values_;
};

/// Birkhoff sum S_n(phi)(x) = phi(x) + ... + phi(sigma^{n-1} x), read off a
/// word long enough to determine every term.  n = 0 returns 0.
inline double birkhoff_sum(const Potential& phi, const Word& w, int n) {
  if (n < 0) throw std::invalid_argument("birkhoff_sum needs n >= 0");
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += phi.eval_at(w, j);
  return s;
}

/// Recode to a one-coordinate potential on the target of a higher-block
/// coding.  Requires block length >= window span; pressure and equilibrium
/// states computed downstream are unchanged.
inline Potential recode(const Potential& phi, const BlockCoding& coding) {
  int span = phi.span();
  int k = coding.block_length;
  if (k < span)
    throw std::invalid_argument("block length " + std::to_string(k) +
                                " smaller than potential window span " +
                                std::to_string(span));
  std::map<std::string, double> values;
  int m = coding.target.alphabet_size();
  for (int u = 0; u < m; ++u) {
    Word blk = coding.decode_symbol(u);
    std::vector<int> sub(blk.symbols.begin(), blk.symbols.begin() + span);
    values[word_to_string({u}, m)] =
        phi.value_by_code(word_code(sub, coding.source.alphabet_size()));
  }
  return Potential::from_table(coding.target, 0, 0, values);
}

}  // namespace rtldp
