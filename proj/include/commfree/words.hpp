#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace commfree {

// Alphabet of a finitely generated free group: a rank together with
// printable generator names. Names match [a-z][0-9]*.
class RankContext {
 public:
  explicit RankContext(std::vector<std::string> names);
  // a, b, c, ... for rank <= 26, else g1, g2, ...
  static RankContext standard(int rank);
  // y1, y2, ...: used when data is re-expressed in a subgroup basis.
  static RankContext rebased(int rank);

  int rank() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  std::optional<int> index_of(std::string_view s) const;
  bool operator==(const RankContext& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
};

// Letter code: 2*gen for a generator, 2*gen+1 for its inverse.
inline int32_t letter_code(int gen, bool inverse) {
  return static_cast<int32_t>(2 * gen + (inverse ? 1 : 0));
}
inline int32_t inverse_code(int32_t c) { return c ^ 1; }
inline int code_gen(int32_t c) { return static_cast<int>(c >> 1); }
inline bool code_is_inverse(int32_t c) { return (c & 1) != 0; }

// Freely reduced word. Reduced at construction, immutable afterwards.
class Word {
 public:
  Word() = default;  // identity
  static Word letter(int gen, bool inverse = false);
  static Word from_codes(std::vector<int32_t> codes);  // reduces

  int length() const { return static_cast<int>(c_.size()); }
  bool trivial() const { return c_.empty(); }
  int32_t code(int i) const { return c_[static_cast<size_t>(i)]; }
  const std::vector<int32_t>& codes() const { return c_; }
  // Largest generator index occurring, -1 for the identity.
  int max_gen() const;

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;

 private:
  std::vector<int32_t> c_;
};

// Length-then-lexicographic order on reduced words.
bool shortlex_less(const Word& a, const Word& b);

Word operator*(const Word& a, const Word& b);
Word inverse(const Word& w);
Word pow(const Word& w, long long k);
// by * w * by^-1
Word conjugate(const Word& w, const Word& by);

// (core, conj) with w == conj * core * conj^-1 and core cyclically reduced.
std::pair<Word, Word> cyclic_reduce(const Word& w);

// (root, m) with w == root^m exactly and root not a proper power.
// maximal_root(identity) == (identity, 1).
std::pair<Word, int> maximal_root(const Word& w);

// [x1] = x1, [x1,x2] = x1 x2 x1^-1 x2^-1, [x1,...,xn] = [[x1,...,x(n-1)], xn].
Word left_normed_commutator(const std::vector<Word>& xs);
// [w, x, x, ..., x] with k copies of x.
Word iterated_commutator(const Word& w, const Word& x, int k);

// Exponent sums per generator; length == rank.
std::vector<long long> abelianize(int rank, const Word& w);
// Same, with entries reduced into [0, m).
std::vector<long long> abelianize_mod(int rank, const Word& w, long long m);

// Tokens are whitespace separated, each `name` or `name^k` with integer k.
// The sole token "1" denotes the identity; the identity formats as "1".
std::string format_word(const RankContext& ctx, const Word& w);
Word parse_word(const RankContext& ctx, std::string_view text);  // throws std::invalid_argument

}  // namespace commfree
