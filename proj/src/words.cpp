#include "commfree/words.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace commfree {

namespace {

bool valid_name(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  for (size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

RankContext::RankContext(std::vector<std::string> names) : names_(std::move(names)) {
  for (const auto& n : names_)
    if (!valid_name(n)) throw std::invalid_argument("bad generator name: " + n);
  for (size_t i = 0; i < names_.size(); ++i)
    for (size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j]) throw std::invalid_argument("duplicate generator name: " + names_[i]);
}

RankContext RankContext::standard(int rank) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(rank));
  if (rank <= 26) {
    for (int i = 0; i < rank; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  } else {
    for (int i = 0; i < rank; ++i) names.push_back("g" + std::to_string(i + 1));
  }
  return RankContext(std::move(names));
}

RankContext RankContext::rebased(int rank) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) names.push_back("y" + std::to_string(i + 1));
  return RankContext(std::move(names));
}

std::optional<int> RankContext::index_of(std::string_view s) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == s) return static_cast<int>(i);
  return std::nullopt;
}

Word Word::letter(int gen, bool inverse) {
  Word w;
  w.c_.push_back(letter_code(gen, inverse));
  return w;
}

Word Word::from_codes(std::vector<int32_t> codes) {
  Word w;
  w.c_.reserve(codes.size());
  for (int32_t c : codes) {
    if (c < 0) throw std::invalid_argument("negative letter code");
    if (!w.c_.empty() && w.c_.back() == inverse_code(c))
      w.c_.pop_back();
    else
      w.c_.push_back(c);
  }
  return w;
}

int Word::max_gen() const {
  int m = -1;
  for (int32_t c : c_) m = std::max(m, code_gen(c));
  return m;
}

bool shortlex_less(const Word& a, const Word& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  return a.codes() < b.codes();
}

Word operator*(const Word& a, const Word& b) {
  std::vector<int32_t> codes = a.codes();
  codes.insert(codes.end(), b.codes().begin(), b.codes().end());
  return Word::from_codes(std::move(codes));
}

Word inverse(const Word& w) {
  std::vector<int32_t> codes;
  codes.reserve(static_cast<size_t>(w.length()));
  for (int i = w.length() - 1; i >= 0; --i) codes.push_back(inverse_code(w.code(i)));
  return Word::from_codes(std::move(codes));
}

Word pow(const Word& w, long long k) {
  Word base = k < 0 ? inverse(w) : w;
  long long n = k < 0 ? -k : k;
  Word acc;
  for (long long i = 0; i < n; ++i) acc = acc * base;
  return acc;
}

Word conjugate(const Word& w, const Word& by) { return by * w * inverse(by); }

std::pair<Word, Word> cyclic_reduce(const Word& w) {
  int i = 0, j = w.length() - 1;
  while (i < j && w.code(i) == inverse_code(w.code(j))) {
    ++i;
    --j;
  }
  std::vector<int32_t> conj(w.codes().begin(), w.codes().begin() + i);
  std::vector<int32_t> core(w.codes().begin() + i, w.codes().begin() + (j + 1));
  return {Word::from_codes(std::move(core)), Word::from_codes(std::move(conj))};
}

std::pair<Word, int> maximal_root(const Word& w) {
  if (w.trivial()) return {Word(), 1};
  auto [core, conj] = cyclic_reduce(w);
  int n = core.length();
  // Smallest period of the linear string via the failure function; the core
  // is an exact power of its length-p prefix iff p divides n.
  std::vector<int> f(static_cast<size_t>(n), 0);
  for (int i = 1; i < n; ++i) {
    int k = f[static_cast<size_t>(i - 1)];
    while (k > 0 && core.code(i) != core.code(k)) k = f[static_cast<size_t>(k - 1)];
    if (core.code(i) == core.code(k)) ++k;
    f[static_cast<size_t>(i)] = k;
  }
  int p = n - f[static_cast<size_t>(n - 1)];
  int m = (n % p == 0) ? n / p : 1;
  if (m == 1) return {w, 1};
  std::vector<int32_t> root_core(core.codes().begin(), core.codes().begin() + n / m);
  Word root = conjugate(Word::from_codes(std::move(root_core)), conj);
  return {root, m};
}

Word left_normed_commutator(const std::vector<Word>& xs) {
  if (xs.empty()) throw std::invalid_argument("empty commutator");
  Word acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i)
    acc = acc * xs[i] * inverse(acc) * inverse(xs[i]);
  return acc;
}

Word iterated_commutator(const Word& w, const Word& x, int k) {
  Word acc = w;
  for (int i = 0; i < k; ++i) acc = acc * x * inverse(acc) * inverse(x);
  return acc;
}

std::vector<long long> abelianize(int rank, const Word& w) {
  std::vector<long long> v(static_cast<size_t>(rank), 0);
  for (int32_t c : w.codes()) {
    int g = code_gen(c);
    if (g >= rank) throw std::invalid_argument("letter outside context");
    v[static_cast<size_t>(g)] += code_is_inverse(c) ? -1 : 1;
  }
  return v;
}

std::vector<long long> abelianize_mod(int rank, const Word& w, long long m) {
  if (m <= 0) throw std::invalid_argument("modulus must be positive");
  auto v = abelianize(rank, w);
  for (auto& x : v) {
    x %= m;
    if (x < 0) x += m;
  }
  return v;
}

std::string format_word(const RankContext& ctx, const Word& w) {
  if (w.trivial()) return "1";
  std::ostringstream os;
  int i = 0;
  bool first = true;
  while (i < w.length()) {
    int32_t c = w.code(i);
    int j = i;
    while (j < w.length() && w.code(j) == c) ++j;
    long long k = (j - i) * (code_is_inverse(c) ? -1LL : 1LL);
    if (!first) os << ' ';
    first = false;
    os << ctx.name(code_gen(c));
    if (k != 1) os << '^' << k;
    i = j;
  }
  return os.str();
}

Word parse_word(const RankContext& ctx, std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string tok;
  std::vector<int32_t> codes;
  std::vector<std::string> toks;
  while (is >> tok) toks.push_back(tok);
  if (toks.size() == 1 && toks[0] == "1") return Word();
  for (const auto& t : toks) {
    size_t caret = t.find('^');
    std::string name = t.substr(0, caret);
    long long k = 1;
    if (caret != std::string::npos) {
      std::string exp = t.substr(caret + 1);
      size_t pos = 0;
      try {
        k = std::stoll(exp, &pos);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad exponent in token: " + t);
      }
      if (pos != exp.size()) throw std::invalid_argument("bad exponent in token: " + t);
    }
    auto g = ctx.index_of(name);
    if (!g) throw std::invalid_argument("unknown generator: " + name);
    bool inv = k < 0;
    long long n = inv ? -k : k;
    for (long long r = 0; r < n; ++r) codes.push_back(letter_code(*g, inv));
  }
  return Word::from_codes(std::move(codes));
}

}  // namespace commfree
