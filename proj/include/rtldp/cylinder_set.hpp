#pragma once

/// Finite unions of cylinders, represented as a set of equal-length
/// admissible words at a common anchor.  The anchor matters only for set
/// algebra (refinement, inclusion); every shift-invariant quantity computed
/// downstream depends on the word set alone, so dynamical computations
/// re-anchor freely.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtldp/sft.hpp"

namespace rtldp {

class CylinderSet {
 public:
  CylinderSet() = default;

  static CylinderSet from_codes(const Sft& sft, int anchor, int length,
                                std::vector<uint64_t> codes) {
    CylinderSet s;
    s.anchor_ = anchor;
    s.length_ = length;
    s.alphabet_ = sft.alphabet_size();
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    s.codes_ = std::move(codes);
    for (uint64_t c : s.codes_) {
      Word w{code_to_symbols(c, length, s.alphabet_), anchor};
      if (!sft.is_admissible(w))
        throw std::invalid_argument("cylinder set contains inadmissible word " +
                                    word_to_string(w.symbols, s.alphabet_));
    }
    return s;
  }

  static CylinderSet from_words(const Sft& sft, const std::vector<Word>& words) {
    if (words.empty())
      throw std::invalid_argument("cylinder set needs at least one word (or use empty())");
    std::vector<uint64_t> codes;
    for (const auto& w : words) {
      if (w.anchor != words[0].anchor || w.length() != words[0].length())
        throw std::invalid_argument("cylinder set words must share anchor and length");
      codes.push_back(word_code(w.symbols, sft.alphabet_size()));
    }
    return from_codes(sft, words[0].anchor, words[0].length(), std::move(codes));
  }

  /// Depth-m set in the (-m, m) convention: words of length 2m+1 anchored -m.
  static CylinderSet from_depth_words(const Sft& sft, int m,
                                      const std::vector<std::string>& words) {
    std::vector<uint64_t> codes;
    for (const auto& text : words) {
      auto symbols = parse_word(text, sft.alphabet_size());
      if (static_cast<int>(symbols.size()) != 2 * m + 1)
        throw std::invalid_argument("depth-" + std::to_string(m) + " word '" + text +
                                    "' must have length " + std::to_string(2 * m + 1));
      codes.push_back(word_code(symbols, sft.alphabet_size()));
    }
    return from_codes(sft, -m, 2 * m + 1, std::move(codes));
  }

  static CylinderSet empty(const Sft& sft, int anchor = 0, int length = 1) {
    CylinderSet s;
    s.anchor_ = anchor;
    s.length_ = length;
    s.alphabet_ = sft.alphabet_size();
    return s;
  }

  /// Every admissible word of the given length (the whole space).
  static CylinderSet whole_space(const Sft& sft, int anchor = 0, int length = 1) {
    return from_codes(sft, anchor, length, admissible_word_codes(sft, length));
  }

  int anchor() const { return anchor_; }
  int length() const { return length_; }
  int alphabet() const { return alphabet_; }
  bool is_empty() const { return codes_.empty(); }
  size_t size() const { return codes_.size(); }
  const std::vector<uint64_t>& codes() const { return codes_; }

  bool contains_code(uint64_t c) const {
    return std::binary_search(codes_.begin(), codes_.end(), c);
  }

  bool is_whole_space(const Sft& sft) const {
    return codes_.size() == admissible_word_count(sft, length_);
  }

  std::vector<Word> words() const {
    std::vector<Word> out;
    out.reserve(codes_.size());
    for (uint64_t c : codes_)
      out.push_back(Word{code_to_symbols(c, length_, alphabet_), anchor_});
    return out;
  }

  std::vector<std::string> word_strings() const {
    std::vector<std::string> out;
    for (uint64_t c : codes_)
      out.push_back(word_to_string(code_to_symbols(c, length_, alphabet_), alphabet_));
    return out;
  }

  /// Complement within the admissible words of the same length and anchor.
  CylinderSet complement(const Sft& sft) const {
    auto all = admissible_word_codes(sft, length_);
    std::vector<uint64_t> out;
    std::set_difference(all.begin(), all.end(), codes_.begin(), codes_.end(),
                        std::back_inserter(out));
    return from_codes(sft, anchor_, length_, std::move(out));
  }

  /// Re-express on a larger window [new_anchor, new_anchor+new_length-1]
  /// containing the current one: each word is replaced by all its admissible
  /// extensions.  The point set is unchanged.
  CylinderSet refine(const Sft& sft, int new_anchor, int new_length) const {
    int lo = new_anchor, hi = new_anchor + new_length - 1;
    if (lo > anchor_ || hi < anchor_ + length_ - 1)
      throw std::invalid_argument("refine window must contain the current window");
    int n = alphabet_;
    int left_ext = anchor_ - lo;
    int right_ext = hi - (anchor_ + length_ - 1);
    std::vector<uint64_t> cur = codes_;
    int cur_len = length_;
    for (int i = 0; i < left_ext; ++i) {
      std::vector<uint64_t> nxt;
      uint64_t place = pow_u64_checked(n, cur_len);
      for (uint64_t c : cur) {
        int first = static_cast<int>(c / (place / n));
        for (int a = 0; a < n; ++a)
          if (sft.allows(a, first)) nxt.push_back(static_cast<uint64_t>(a) * place + c);
      }
      cur = std::move(nxt);
      ++cur_len;
    }
    for (int i = 0; i < right_ext; ++i) {
      std::vector<uint64_t> nxt;
      for (uint64_t c : cur) {
        int last = static_cast<int>(c % n);
        for (int b = 0; b < n; ++b)
          if (sft.allows(last, b)) nxt.push_back(c * n + b);
      }
      cur = std::move(nxt);
      ++cur_len;
    }
    return from_codes(sft, lo, cur_len, std::move(cur));
  }

  /// Subset test as sets of points (windows may differ).
  bool subset_of(const Sft& sft, const CylinderSet& other) const {
    if (is_empty()) return true;
    if (other.is_empty()) return false;
    int lo = std::min(anchor_, other.anchor_);
    int hi = std::max(anchor_ + length_, other.anchor_ + other.length_) - 1;
    CylinderSet a = refine(sft, lo, hi - lo + 1);
    CylinderSet b = other.refine(sft, lo, hi - lo + 1);
    return std::includes(b.codes_.begin(), b.codes_.end(), a.codes_.begin(), a.codes_.end());
  }

  /// Minimal-window equivalent: drops leading/trailing coordinates on which
  /// membership does not depend.  The returned set describes the same set of
  /// points.  Word sets reduced this way keep downstream block chains small.
  CylinderSet reduce(const Sft& sft) const {
    if (codes_.empty() || length_ == 1) return *this;
    CylinderSet cur = *this;
    bool changed = true;
    while (changed && cur.length_ > 1) {
      changed = false;
      // Try dropping the first coordinate: membership must be constant on
      // each class of admissible words sharing a suffix.
      {
        int n = cur.alphabet_;
        uint64_t place = pow_u64_checked(n, cur.length_ - 1);
        std::unordered_map<uint64_t, int> in_count;
        for (uint64_t c : cur.codes_) ++in_count[c % place];
        bool ok = true;
        std::vector<uint64_t> reduced;
        reduced.reserve(in_count.size());
        for (const auto& [suffix, cnt] : in_count) {
          int first_sym = static_cast<int>(suffix / (place / n));
          int preds = 0;
          for (int a = 0; a < n; ++a)
            if (sft.allows(a, first_sym)) ++preds;
          if (cnt != preds) {
            ok = false;
            break;
          }
          reduced.push_back(suffix);
        }
        if (ok) {
          cur = from_codes(sft, cur.anchor_ + 1, cur.length_ - 1, std::move(reduced));
          changed = true;
          continue;
        }
      }
      // Try dropping the last coordinate.
      {
        int n = cur.alphabet_;
        std::unordered_map<uint64_t, int> in_count;
        for (uint64_t c : cur.codes_) ++in_count[c / n];
        bool ok = true;
        std::vector<uint64_t> reduced;
        reduced.reserve(in_count.size());
        for (const auto& [prefix, cnt] : in_count) {
          int last_sym = static_cast<int>(prefix % n);
          int succs = 0;
          for (int b = 0; b < n; ++b)
            if (sft.allows(last_sym, b)) ++succs;
          if (cnt != succs) {
            ok = false;
            break;
          }
          reduced.push_back(prefix);
        }
        if (ok) {
          cur = from_codes(sft, cur.anchor_, cur.length_ - 1, std::move(reduced));
          changed = true;
        }
      }
    }
    return cur;
  }

  bool operator==(const CylinderSet& o) const {
    return anchor_ == o.anchor_ && length_ == o.length_ && codes_ == o.codes_;
  }

 private:
  int anchor_ = 0;
  int length_ = 1;
  int alphabet_ = 0;
  std::vector<uint64_t> codes_;
};

}  // namespace rtldp
