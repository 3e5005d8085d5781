#include "eqp/map_families.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <variant>

#include "eqp/errors.hpp"

namespace eqp::maps {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << what << " must lie in [0, 1], got " << p;
    throw UsageError(os.str());
  }
}

CMatrix weyl(int a, int b, int d) {
  // X^a Z^b with X|j> = |j+1>, Z|j> = w^j |j>.
  CMatrix m = CMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const double angle = 2.0 * M_PI * b * j / d;
    m((j + a) % d, j) = std::polar(1.0, angle);
  }
  return m;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

PositiveMap depolarizing(double p, int dim) {
  require_probability(p, "depolarizing p");
  if (dim < 2) throw UsageError("dimension must be at least 2");
  const double d2 = static_cast<double>(dim) * dim;
  std::vector<CMatrix> ops;
  ops.push_back(std::sqrt(1.0 - p + p / d2) * CMatrix::Identity(dim, dim));
  if (p > 0.0) {
    const double w = std::sqrt(p / d2);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        if (a == 0 && b == 0) continue;
        ops.push_back(w * weyl(a, b, dim));
      }
    }
  }
  std::string label = "depolarizing(" + format_number(p);
  if (dim != 2) label += ", " + std::to_string(dim);
  return PositiveMap::from_kraus(std::move(ops), label + ")");
}

PositiveMap amplitude_damping(double gamma) {
  require_probability(gamma, "amplitude damping gamma");
  CMatrix k0 = CMatrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - gamma);
  CMatrix k1 = CMatrix::Zero(2, 2);
  k1(0, 1) = std::sqrt(gamma);
  std::vector<CMatrix> ops{k0};
  if (gamma > 0.0) ops.push_back(k1);
  return PositiveMap::from_kraus(std::move(ops), "amplitude_damping(" + format_number(gamma) + ")");
}

PositiveMap bit_flip(double p) {
  require_probability(p, "bit flip p");
  CMatrix sx = CMatrix::Zero(2, 2);
  sx(0, 1) = 1.0;
  sx(1, 0) = 1.0;
  std::vector<CMatrix> ops;
  if (p < 1.0) ops.push_back(std::sqrt(1.0 - p) * CMatrix::Identity(2, 2));
  if (p > 0.0) ops.push_back(std::sqrt(p) * sx);
  return PositiveMap::from_kraus(std::move(ops), "bit_flip(" + format_number(p) + ")");
}

PositiveMap diag_conj(const std::vector<double>& entries) {
  const int d = static_cast<int>(entries.size());
  if (d < 2) throw UsageError("diag_conj needs at least two entries");
  CMatrix k = CMatrix::Zero(d, d);
  std::string label = "diag_conj(";
  for (int i = 0; i < d; ++i) {
    k(i, i) = entries[static_cast<std::size_t>(i)];
    label += (i ? ", " : "") + format_number(entries[static_cast<std::size_t>(i)]);
  }
  return PositiveMap::from_kraus({k}, label + ")");
}

PositiveMap kraus_scaled(double c, const PositiveMap& base) {
  return base.scaled(c).relabeled("kraus_scaled(" + format_number(c) + ", " + base.label() + ")");
}

PositiveMap random_cp(int rank, std::uint64_t seed, int dim) {
  if (rank < 1 || rank > dim * dim) throw UsageError("random_cp rank must lie in [1, D^2]");
  Rng rng = make_rng(seed, 0xc9ULL);
  std::vector<CMatrix> ops;
  for (int i = 0; i < rank; ++i) ops.push_back(ginibre(rng, dim, dim));
  std::string label = "random_cp(" + std::to_string(rank) + ", " + std::to_string(seed);
  if (dim != 2) label += ", " + std::to_string(dim);
  return PositiveMap::from_kraus(std::move(ops), label + ")");
}

PositiveMap random_channel(int rank, std::uint64_t seed, int dim) {
  const PositiveMap raw = random_cp(rank, seed, dim);
  // K_i S^(-1/2) with S = sum K_i* K_i makes the family trace preserving.
  const EigenDecomposition e = eigh(raw.dual_identity());
  const CMatrix inv_sqrt =
      e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors.adjoint();
  std::vector<CMatrix> ops;
  for (const auto& k : raw.kraus_ops()) ops.push_back(k * inv_sqrt);
  std::string label = "random_channel(" + std::to_string(rank) + ", " + std::to_string(seed);
  if (dim != 2) label += ", " + std::to_string(dim);
  return PositiveMap::from_kraus(std::move(ops), label + ")");
}

namespace {

using Arg = std::variant<double, PositiveMap>;

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  PositiveMap parse_all() {
    PositiveMap m = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "map spec '" << s_ << "': " << what << " at position " << pos_;
    throw UsageError(os.str());
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  PositiveMap expr() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a map name");
    const std::string name(s_.substr(start, pos_ - start));
    expect('(');
    std::vector<Arg> args;
    if (!peek(')')) {
      args.push_back(arg());
      while (peek(',')) {
        ++pos_;
        args.push_back(arg());
      }
    }
    expect(')');
    return build(name, args);
  }

  Arg arg() {
    skip_ws();
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) return expr();
    double x = 0.0;
    auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), x);
    if (res.ec != std::errc{}) fail("expected a number or map");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return x;
  }

  double number(const std::vector<Arg>& args, std::size_t i, const std::string& name) const {
    if (i >= args.size() || !std::holds_alternative<double>(args[i])) {
      fail(name + ": argument " + std::to_string(i + 1) + " must be a number");
    }
    return std::get<double>(args[i]);
  }

  int integer(const std::vector<Arg>& args, std::size_t i, const std::string& name) const {
    const double x = number(args, i, name);
    if (x != std::floor(x) || std::abs(x) > 1e15) {
      fail(name + ": argument " + std::to_string(i + 1) + " must be an integer");
    }
    return static_cast<int>(x);
  }

  const PositiveMap& map(const std::vector<Arg>& args, std::size_t i,
                         const std::string& name) const {
    if (i >= args.size() || !std::holds_alternative<PositiveMap>(args[i])) {
      fail(name + ": argument " + std::to_string(i + 1) + " must be a map");
    }
    return std::get<PositiveMap>(args[i]);
  }

  void arity(const std::vector<Arg>& args, std::size_t lo, std::size_t hi,
             const std::string& name) const {
    if (args.size() < lo || args.size() > hi) fail(name + ": wrong number of arguments");
  }

  PositiveMap build(const std::string& name, const std::vector<Arg>& args) const {
    if (name == "depolarizing") {
      arity(args, 1, 2, name);
      return depolarizing(number(args, 0, name), args.size() > 1 ? integer(args, 1, name) : 2);
    }
    if (name == "amplitude_damping") {
      arity(args, 1, 1, name);
      return amplitude_damping(number(args, 0, name));
    }
    if (name == "bit_flip") {
      arity(args, 1, 1, name);
      return bit_flip(number(args, 0, name));
    }
    if (name == "identity") {
      arity(args, 0, 1, name);
      return PositiveMap::identity(args.empty() ? 2 : integer(args, 0, name));
    }
    if (name == "diag_conj") {
      std::vector<double> entries;
      for (std::size_t i = 0; i < args.size(); ++i) entries.push_back(number(args, i, name));
      return diag_conj(entries);
    }
    if (name == "kraus_scaled") {
      arity(args, 2, 2, name);
      const double c = number(args, 0, name);
      if (!(c > 0.0)) fail("kraus_scaled: scale must be positive");
      return kraus_scaled(c, map(args, 1, name));
    }
    if (name == "random_cp" || name == "random_channel") {
      arity(args, 2, 3, name);
      const int rank = integer(args, 0, name);
      const double seed = number(args, 1, name);
      if (seed < 0 || seed != std::floor(seed)) fail(name + ": seed must be a non-negative integer");
      const int dim = args.size() > 2 ? integer(args, 2, name) : 2;
      const auto s = static_cast<std::uint64_t>(seed);
      return name == "random_cp" ? random_cp(rank, s, dim) : random_channel(rank, s, dim);
    }
    if (name == "compose") {
      if (args.size() < 2) fail("compose: needs at least two maps");
      PositiveMap out = map(args, 0, name);
      std::string label = "compose(" + out.label();
      for (std::size_t i = 1; i < args.size(); ++i) {
        const PositiveMap& next = map(args, i, name);
        out = eqp::compose(out, next);
        label += ", " + next.label();
      }
      return out.relabeled(label + ")");
    }
    fail("unknown map family '" + name + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

PositiveMap parse(std::string_view spec) { return Parser(spec).parse_all(); }

}  // namespace eqp::maps
