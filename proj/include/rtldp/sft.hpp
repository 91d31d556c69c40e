#pragma once

/// Subshifts of finite type over a finite alphabet: transition-matrix
/// presentation, admissible words, and higher-block recoding.
///
/// Symbols are 0-based integers.  Words serialize as digit strings for
/// alphabets of size <= 10 and as comma-separated integers otherwise.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtldp {

/// A finite word over the alphabet, anchored at a coordinate index.
/// A (-m,m)-cylinder is a Word of length 2m+1 anchored at -m.
struct Word {
  std::vector<int> symbols;
  int anchor = 0;

  int length() const { return static_cast<int>(symbols.size()); }
  int last_coord() const { return anchor + length() - 1; }

  bool operator==(const Word& o) const {
    return anchor == o.anchor && symbols == o.symbols;
  }
};

/// Connectivity diagnostics of the transition digraph.
struct SftDiagnostics {
  bool irreducible = false;
  bool aperiodic = false;
  int period = 0;  // gcd of cycle lengths through any vertex; 0 if none
};

namespace detail {

// Strongly connected components by iterative Tarjan.  Returns component id
// per vertex; ids are in reverse topological order.
inline int strongly_connected_components(int n,
                                         const std::vector<int>& ptr,
                                         const std::vector<int>& adj,
                                         std::vector<int>& comp) {
  comp.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0), stack, call_v,
      call_e;
  int next_index = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call_v.push_back(root);
    call_e.push_back(ptr[root]);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call_v.empty()) {
      int v = call_v.back();
      int& e = call_e.back();
      if (e < ptr[v + 1]) {
        int w = adj[e++];
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call_v.push_back(w);
          call_e.push_back(ptr[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        if (low[v] == index[v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
        call_v.pop_back();
        call_e.pop_back();
        if (!call_v.empty()) {
          low[call_v.back()] = std::min(low[call_v.back()], low[v]);
        }
      }
    }
  }
  return ncomp;
}

// Period of a strongly connected digraph: gcd over edges of
// level(u) + 1 - level(v) for a BFS level assignment.
inline int scc_period(const std::vector<int>& verts,
                      const std::vector<int>& ptr,
                      const std::vector<int>& adj,
                      const std::vector<int>& comp) {
  if (verts.empty()) return 0;
  int cid = comp[verts[0]];
  std::vector<int> level(ptr.size() - 1, -1);
  std::vector<int> queue;
  queue.push_back(verts[0]);
  level[verts[0]] = 0;
  int g = 0;
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (int e = ptr[u]; e < ptr[u + 1]; ++e) {
      int v = adj[e];
      if (comp[v] != cid) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      } else {
        g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
      }
    }
  }
  return g;
}

}  // namespace detail

/// A subshift of finite type: alphabet {0..N-1} plus an N x N 0/1
/// transition matrix.  Immutable after construction; connectivity flags are
/// computed once and stored.  Matrices with an all-zero row or column are
/// rejected (such a symbol cannot occur in any bi-infinite sequence).
/// Non-mixing inputs are accepted; downstream pressure computations fall
/// back to the spectral radius over irreducible components.
class Sft {
 public:
  Sft() = default;  // empty placeholder; build real instances via make()

  static Sft make(int alphabet_size, std::vector<uint8_t> transitions) {
    if (alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
    if (transitions.size() != static_cast<size_t>(alphabet_size) * alphabet_size)
      throw std::invalid_argument("transition matrix has wrong shape");
    for (auto t : transitions)
      if (t != 0 && t != 1) throw std::invalid_argument("transition entries must be 0/1");
    Sft s;
    s.n_ = alphabet_size;
    s.a_ = std::move(transitions);
    for (int i = 0; i < s.n_; ++i) {
      bool row = false, col = false;
      for (int j = 0; j < s.n_; ++j) {
        row = row || s.allows(i, j);
        col = col || s.allows(j, i);
      }
      if (!row) throw std::invalid_argument("transition matrix has an all-zero row (symbol " +
                                            std::to_string(i) + " is stranded)");
      if (!col) throw std::invalid_argument("transition matrix has an all-zero column (symbol " +
                                            std::to_string(i) + " is stranded)");
    }
    s.compute_diagnostics();
    return s;
  }

  /// Full shift on two symbols.
  static Sft full2() { return make(2, {1, 1, 1, 1}); }

  /// Golden-mean shift: the word 11 is forbidden.
  static Sft golden_mean() { return make(2, {1, 1, 1, 0}); }

  int alphabet_size() const { return n_; }
  bool allows(int a, int b) const { return a_[static_cast<size_t>(a) * n_ + b] != 0; }
  const std::vector<uint8_t>& transitions() const { return a_; }
  const SftDiagnostics& diagnostics() const { return diag_; }

  bool is_admissible(const Word& w) const {
    if (w.symbols.empty()) return false;
    for (int s : w.symbols)
      if (s < 0 || s >= n_) return false;
    for (size_t i = 0; i + 1 < w.symbols.size(); ++i)
      if (!allows(w.symbols[i], w.symbols[i + 1])) return false;
    return true;
  }

  bool operator==(const Sft& o) const { return n_ == o.n_ && a_ == o.a_; }

 private:
  void compute_diagnostics() {
    std::vector<int> ptr(n_ + 1, 0), adj;
    for (int i = 0; i < n_; ++i) {
      ptr[i + 1] = ptr[i];
      for (int j = 0; j < n_; ++j)
        if (allows(i, j)) {
          adj.push_back(j);
          ++ptr[i + 1];
        }
    }
    std::vector<int> comp;
    int ncomp = detail::strongly_connected_components(n_, ptr, adj, comp);
    diag_.irreducible = (ncomp == 1);
    if (diag_.irreducible) {
      std::vector<int> verts(n_);
      std::iota(verts.begin(), verts.end(), 0);
      diag_.period = detail::scc_period(verts, ptr, adj, comp);
      diag_.aperiodic = (diag_.period == 1);
    } else {
      // Period of the component attaining the largest cycle structure is not
      // meaningful globally; report gcd over all nontrivial components.
      int g = 0;
      for (int c = 0; c < ncomp; ++c) {
        std::vector<int> verts;
        for (int v = 0; v < n_; ++v)
          if (comp[v] == c) verts.push_back(v);
        bool has_edge = false;
        for (int v : verts)
          for (int e = ptr[v]; e < ptr[v + 1]; ++e)
            if (comp[adj[e]] == c) has_edge = true;
        if (has_edge) g = std::gcd(g, detail::scc_period(verts, ptr, adj, comp));
      }
      diag_.period = g;
      diag_.aperiodic = false;
    }
  }

  int n_ = 0;
  std::vector<uint8_t> a_;
  SftDiagnostics diag_;
};

/// Connectivity record for an SFT (irreducibility, aperiodicity, period).
inline SftDiagnostics validate(const Sft& sft) { return sft.diagnostics(); }

// ---------------------------------------------------------------------------
// Word codes: base-N positional encoding, big-endian (first symbol is the
// most significant digit).  Lexicographic order on words of equal length
// coincides with numeric order on codes.

inline uint64_t pow_u64_checked(uint64_t base, int exp) {
  uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > (uint64_t(1) << 62) / base)
      throw std::overflow_error("word space exceeds 2^62; reduce depth or alphabet");
    r *= base;
  }
  return r;
}

inline uint64_t word_code(const std::vector<int>& symbols, int alphabet) {
  uint64_t c = 0;
  for (int s : symbols) c = c * alphabet + static_cast<uint64_t>(s);
  return c;
}

inline std::vector<int> code_to_symbols(uint64_t code, int length, int alphabet) {
  std::vector<int> s(length);
  for (int i = length - 1; i >= 0; --i) {
    s[i] = static_cast<int>(code % alphabet);
    code /= alphabet;
  }
  return s;
}

inline std::string word_to_string(const std::vector<int>& symbols, int alphabet) {
  std::ostringstream os;
  if (alphabet <= 10) {
    for (int s : symbols) os << s;
  } else {
    for (size_t i = 0; i < symbols.size(); ++i) {
      if (i) os << ',';
      os << symbols[i];
    }
  }
  return os.str();
}

inline std::vector<int> parse_word(const std::string& text, int alphabet) {
  std::vector<int> out;
  if (alphabet <= 10) {
    for (char c : text) {
      if (c < '0' || c > '9') throw std::invalid_argument("bad word digit: " + text);
      out.push_back(c - '0');
    }
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
  }
  for (int s : out)
    if (s < 0 || s >= alphabet)
      throw std::invalid_argument("word symbol out of range: " + text);
  if (out.empty()) throw std::invalid_argument("empty word");
  return out;
}

// ---------------------------------------------------------------------------

/// Number of admissible words of the given length (sum of entries of the
/// (length-1)-th matrix power).
inline uint64_t admissible_word_count(const Sft& sft, int length) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  int n = sft.alphabet_size();
  std::vector<uint64_t> cnt(n, 1);  // words ending at each symbol
  for (int step = 1; step < length; ++step) {
    std::vector<uint64_t> nxt(n, 0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (sft.allows(a, b)) {
          if (cnt[a] > (uint64_t(1) << 62)) throw std::overflow_error("word count overflow");
          nxt[b] += cnt[a];
        }
    cnt = std::move(nxt);
  }
  uint64_t total = 0;
  for (auto c : cnt) total += c;
  return total;
}

/// All admissible word codes of the given length, in lexicographic order.
inline std::vector<uint64_t> admissible_word_codes(const Sft& sft, int length) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  int n = sft.alphabet_size();
  pow_u64_checked(n, length);
  std::vector<uint64_t> cur;
  for (int a = 0; a < n; ++a) cur.push_back(a);
  for (int step = 1; step < length; ++step) {
    std::vector<uint64_t> nxt;
    nxt.reserve(cur.size() * n);
    for (uint64_t c : cur) {
      int last = static_cast<int>(c % n);
      for (int b = 0; b < n; ++b)
        if (sft.allows(last, b)) nxt.push_back(c * n + b);
    }
    cur = std::move(nxt);
  }
  return cur;  // construction preserves lexicographic order
}

/// All admissible words of the given length, lexicographically ordered,
/// anchored at 0.
inline std::vector<Word> admissible_words(const Sft& sft, int length) {
  std::vector<Word> out;
  for (uint64_t c : admissible_word_codes(sft, length))
    out.push_back(Word{code_to_symbols(c, length, sft.alphabet_size()), 0});
  return out;
}

/// Higher-block presentation: symbols of the target SFT are the admissible
/// k-words of the source; u -> v is allowed iff the words overlap in k-1
/// symbols and their join is admissible.  k = 1 yields the identity coding.
struct BlockCoding {
  Sft source;
  int block_length = 1;
  Sft target;
  std::vector<uint64_t> symbol_codes;  // target symbol -> source k-word code

  /// Decode a target symbol into its source k-word.
  Word decode_symbol(int symbol) const {
    return Word{code_to_symbols(symbol_codes[symbol], block_length,
                                source.alphabet_size()),
                0};
  }

  /// Encode a source word of length L >= k into a target word of length
  /// L-k+1 (same anchor).
  Word encode(const Word& w) const {
    int k = block_length;
    if (w.length() < k)
      throw std::invalid_argument("word shorter than block length");
    if (!source.is_admissible(w)) throw std::invalid_argument("inadmissible word");
    Word out;
    out.anchor = w.anchor;
    for (int i = 0; i + k <= w.length(); ++i) {
      std::vector<int> blk(w.symbols.begin() + i, w.symbols.begin() + i + k);
      uint64_t c = word_code(blk, source.alphabet_size());
      auto it = std::lower_bound(symbol_codes.begin(), symbol_codes.end(), c);
      out.symbols.push_back(static_cast<int>(it - symbol_codes.begin()));
    }
    return out;
  }

  /// Inverse of encode.
  Word decode(const Word& w) const {
    Word out;
    out.anchor = w.anchor;
    for (int i = 0; i < w.length(); ++i) {
      Word blk = decode_symbol(w.symbols[i]);
      if (i == 0)
        out.symbols = blk.symbols;
      else
        out.symbols.push_back(blk.symbols.back());
    }
    return out;
  }
};

inline BlockCoding higher_block(const Sft& sft, int k) {
  if (k < 1) throw std::invalid_argument("block length must be >= 1");
  BlockCoding bc;
  bc.source = sft;
  bc.block_length = k;
  bc.symbol_codes = admissible_word_codes(sft, k);
  int m = static_cast<int>(bc.symbol_codes.size());
  if (m == 0) throw std::logic_error("no admissible block words");  // impossible for a valid Sft
  int n = sft.alphabet_size();
  uint64_t top = pow_u64_checked(n, k - 1);
  std::vector<uint8_t> trans(static_cast<size_t>(m) * m, 0);
  for (int u = 0; u < m; ++u) {
    uint64_t cu = bc.symbol_codes[u];
    int last = static_cast<int>(cu % n);
    uint64_t shifted = (cu % top) * n;  // drop leading symbol, shift left
    for (int b = 0; b < n; ++b) {
      if (!sft.allows(last, b)) continue;
      uint64_t cv = shifted + b;
      auto it = std::lower_bound(bc.symbol_codes.begin(), bc.symbol_codes.end(), cv);
      if (it != bc.symbol_codes.end() && *it == cv)
        trans[static_cast<size_t>(u) * m + (it - bc.symbol_codes.begin())] = 1;
    }
  }
  bc.target = Sft::make(m, std::move(trans));
  return bc;
}

}  // namespace rtldp
