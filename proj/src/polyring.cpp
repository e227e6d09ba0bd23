#include "blsos/polyring.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace blsos::polyring {

Rational rational_pow(const Rational& base, unsigned long exp) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exp);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exp);
  return out;
}

namespace {

/// Process-wide variable registry.  Handles are dense indices into `ids`;
/// the canonical-rank table is rebuilt lazily when interning outpaces it.
struct Registry {
  std::mutex mu;
  std::map<VarId, std::uint32_t> index;
  std::deque<VarId> ids;  // deque: stable references across interning
  std::uint64_t version = 0;
  std::uint64_t rank_version = static_cast<std::uint64_t>(-1);
  std::vector<std::uint32_t> ranks;

  static Registry& get() {
    static Registry instance;
    return instance;
  }
};

}  // namespace

Var Var::intern(const VarId& id) {
  Registry& reg = Registry::get();
  std::scoped_lock lock(reg.mu);
  auto [it, inserted] =
      reg.index.emplace(id, static_cast<std::uint32_t>(reg.ids.size()));
  if (inserted) {
    reg.ids.push_back(id);
    ++reg.version;
  }
  return Var(it->second);
}

const VarId& Var::id() const {
  Registry& reg = Registry::get();
  std::scoped_lock lock(reg.mu);
  return reg.ids[raw_];
}

std::uint32_t Var::semantic_rank() const {
  Registry& reg = Registry::get();
  std::scoped_lock lock(reg.mu);
  if (reg.rank_version != reg.version) {
    std::vector<std::uint32_t> order(reg.ids.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return reg.ids[a] < reg.ids[b];
              });
    reg.ranks.assign(reg.ids.size(), 0u);
    for (std::uint32_t pos = 0; pos < order.size(); ++pos) {
      reg.ranks[order[pos]] = pos;
    }
    reg.rank_version = reg.version;
  }
  return reg.ranks[raw_];
}

Var func_root(int j, const std::vector<long>& point) {
  return Var::intern(VarId{VarFamily::FuncRoot, j, point, {}});
}

Var aux_var(int j, const std::string& tag, const std::vector<long>& point) {
  if (tag.empty()) {
    throw InternalError("auxiliary variables require a nonempty tag");
  }
  return Var::intern(VarId{VarFamily::Aux, j, point, tag});
}

Var slack_var(int j, const std::string& tag) {
  return Var::intern(VarId{VarFamily::Slack, j, {}, tag});
}

namespace {

std::string csv(const std::vector<long>& point) {
  std::string out;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(point[i]);
  }
  return out;
}

bool valid_tag(const std::string& tag) {
  if (tag.empty()) return false;
  return std::all_of(tag.begin(), tag.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '_';
  });
}

}  // namespace

std::string var_to_string(Var v) {
  const VarId& id = v.id();
  switch (id.family) {
    case VarFamily::FuncRoot:
      return "F" + std::to_string(id.index) + "(" + csv(id.point) + ")";
    case VarFamily::Aux: {
      std::string out = "a" + std::to_string(id.index) + "." + id.tag;
      if (!id.point.empty()) out += "(" + csv(id.point) + ")";
      return out;
    }
    case VarFamily::Slack: {
      std::string out = "t" + std::to_string(id.index);
      if (!id.tag.empty()) out += "." + id.tag;
      return out;
    }
  }
  throw InternalError("unreachable variable family");
}

namespace {

/// Minimal recursive-descent reader shared by the variable and polynomial
/// parsers; positions feed the ParseError diagnostics.
struct Reader {
  const std::string& text;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message + " at position " + std::to_string(pos) +
                     " in '" + text + "'");
  }
  bool done() const { return pos >= text.size(); }
  char peek() const { return done() ? '\0' : text[pos]; }
  bool consume(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  long read_integer() {
    const bool neg = consume('-');
    if (std::isdigit(static_cast<unsigned char>(peek())) == 0) {
      fail("expected digit");
    }
    long value = 0;
    while (std::isdigit(static_cast<unsigned char>(peek())) != 0) {
      value = value * 10 + (text[pos] - '0');
      ++pos;
    }
    return neg ? -value : value;
  }

  std::vector<long> read_point_list() {
    expect('(');
    std::vector<long> out;
    if (consume(')')) return out;
    out.push_back(read_integer());
    while (consume(',')) out.push_back(read_integer());
    expect(')');
    return out;
  }

  std::string read_tag() {
    std::string out;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) != 0 ||
                       peek() == '_')) {
      out += text[pos];
      ++pos;
    }
    if (!valid_tag(out)) fail("expected tag");
    return out;
  }

  Var read_var() {
    if (consume('F')) {
      const int j = static_cast<int>(read_integer());
      return func_root(j, read_point_list());
    }
    if (consume('a')) {
      const int j = static_cast<int>(read_integer());
      expect('.');
      const std::string tag = read_tag();
      std::vector<long> point;
      if (peek() == '(') point = read_point_list();
      return Var::intern(VarId{VarFamily::Aux, j, point, tag});
    }
    if (consume('t')) {
      const int j = static_cast<int>(read_integer());
      std::string tag;
      if (consume('.')) tag = read_tag();
      return slack_var(j, tag);
    }
    fail("expected variable");
  }
};

}  // namespace

Var var_from_string(const std::string& text) {
  Reader r{text};
  const Var v = r.read_var();
  if (!r.done()) r.fail("trailing characters after variable");
  return v;
}

Monomial Monomial::variable(Var v, unsigned exp) {
  Monomial m;
  if (exp > 0) m.factors_.emplace_back(v, exp);
  return m;
}

unsigned Monomial::exponent_of(Var v) const {
  for (const auto& [var, exp] : factors_) {
    if (var == v) return exp;
  }
  return 0;
}

unsigned Monomial::total_degree() const {
  unsigned d = 0;
  for (const auto& [var, exp] : factors_) d += exp;
  return d;
}

bool Monomial::all_exponents_even() const {
  return std::all_of(factors_.begin(), factors_.end(),
                     [](const auto& f) { return f.second % 2 == 0; });
}

Monomial Monomial::times(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < factors_.size() && j < other.factors_.size()) {
    if (factors_[i].first.raw() == other.factors_[j].first.raw()) {
      out.factors_.emplace_back(factors_[i].first,
                                factors_[i].second + other.factors_[j].second);
      ++i;
      ++j;
    } else if (factors_[i].first.raw() < other.factors_[j].first.raw()) {
      out.factors_.push_back(factors_[i++]);
    } else {
      out.factors_.push_back(other.factors_[j++]);
    }
  }
  while (i < factors_.size()) out.factors_.push_back(factors_[i++]);
  while (j < other.factors_.size()) out.factors_.push_back(other.factors_[j++]);
  return out;
}

Monomial Monomial::pow(unsigned k) const {
  Monomial out;
  if (k == 0) return out;
  out.factors_ = factors_;
  for (auto& [var, exp] : out.factors_) exp *= k;
  return out;
}

bool Monomial::graded_lex_less(const Monomial& a, const Monomial& b) {
  const unsigned da = a.total_degree();
  const unsigned db = b.total_degree();
  if (da != db) return da < db;
  // Compare exponent sequences along the canonical variable order; on the
  // first difference, the larger exponent belongs to the larger monomial.
  auto ranked = [](const Monomial& m) {
    std::vector<std::pair<std::uint32_t, unsigned>> out;
    out.reserve(m.factors_.size());
    for (const auto& [var, exp] : m.factors_) {
      out.emplace_back(var.semantic_rank(), exp);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto ra = ranked(a);
  const auto rb = ranked(b);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ra.size() && j < rb.size()) {
    if (ra[i].first == rb[j].first) {
      if (ra[i].second != rb[j].second) return ra[i].second < rb[j].second;
      ++i;
      ++j;
    } else if (ra[i].first < rb[j].first) {
      return false;  // a carries an earlier variable, so a is larger
    } else {
      return true;
    }
  }
  // Equal prefixes with equal total degree: any remainder is impossible.
  return false;
}

std::size_t MonomialHash::operator()(const Monomial& m) const {
  std::size_t h = 1469598103934665603ull;
  for (const auto& [var, exp] : m.factors()) {
    h = (h ^ var.raw()) * 1099511628211ull;
    h = (h ^ exp) * 1099511628211ull;
  }
  return h;
}

Polynomial::Polynomial(const Rational& constant) {
  if (constant != 0) terms_.emplace(Monomial{}, constant);
}

Polynomial::Polynomial(long constant) : Polynomial(Rational(constant)) {}

Polynomial Polynomial::variable(Var v) {
  return monomial(Monomial::variable(v));
}

Polynomial Polynomial::monomial(Monomial m, Rational coeff) {
  Polynomial p;
  if (coeff != 0) p.terms_.emplace(std::move(m), std::move(coeff));
  return p;
}

unsigned Polynomial::total_degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
  return d;
}

Rational Polynomial::coefficient(const Monomial& m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

std::vector<std::pair<Monomial, Rational>> Polynomial::sorted_terms() const {
  std::vector<std::pair<Monomial, Rational>> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return Monomial::graded_lex_less(b.first, a.first);
  });
  return out;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(const Rational& scalar) {
  if (scalar == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= scalar;
  return *this;
}

Polynomial& Polynomial::operator*=(const Polynomial& other) {
  Polynomial out;
  out.terms_.reserve(terms_.size());
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) {
      out.add_term(ma.times(mb), ca * cb);
    }
  }
  terms_ = std::move(out.terms_);
  return *this;
}

Polynomial Polynomial::operator-() const {
  Polynomial out = *this;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial result(Rational(1));
  if (k == 0) return result;
  Polynomial base = *this;
  while (true) {
    if (k & 1u) result *= base;
    k >>= 1u;
    if (k == 0) break;
    base *= base;
  }
  return result;
}

Rational Polynomial::evaluate(const Assignment& values) const {
  Rational out(0);
  for (const auto& [m, c] : terms_) {
    Rational term = c;
    for (const auto& [var, exp] : m.factors()) {
      const auto it = values.find(var);
      if (it == values.end()) {
        throw DomainError("evaluation is missing a value for variable " +
                          var_to_string(var));
      }
      term *= rational_pow(it->second, exp);
    }
    out += term;
  }
  return out;
}

Polynomial Polynomial::substitute(const SubstitutionTable& table) const {
  std::map<std::pair<std::uint32_t, unsigned>, Polynomial> power_cache;
  auto cached_pow = [&](Var v, unsigned exp) -> const Polynomial& {
    const auto key = std::make_pair(v.raw(), exp);
    auto it = power_cache.find(key);
    if (it == power_cache.end()) {
      it = power_cache.emplace(key, table.at(v).pow(exp)).first;
    }
    return it->second;
  };
  Polynomial out;
  for (const auto& [m, c] : terms_) {
    Polynomial term(c);
    Monomial untouched;
    for (const auto& [var, exp] : m.factors()) {
      if (table.contains(var)) {
        term *= cached_pow(var, exp);
      } else {
        untouched = untouched.times(Monomial::variable(var, exp));
      }
    }
    if (!untouched.is_unit()) term *= monomial(untouched);
    out += term;
  }
  return out;
}

bool Polynomial::visibly_nonneg() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) {
    return t.second > 0 && t.first.all_exponents_even();
  });
}

namespace {

std::string coeff_to_string(const Rational& c) {
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

std::string monomial_body(const Monomial& m) {
  // Variables in ascending canonical order.
  std::vector<std::pair<std::uint32_t, std::pair<Var, unsigned>>> ranked;
  ranked.reserve(m.factors().size());
  for (const auto& f : m.factors()) {
    ranked.emplace_back(f.first.semantic_rank(), f);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [rank, f] : ranked) {
    out += ' ';
    out += var_to_string(f.first);
    if (f.second > 1) out += "^" + std::to_string(f.second);
  }
  return out;
}

}  // namespace

std::string Polynomial::str() const {
  if (is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : sorted_terms()) {
    if (!first) out += " + ";
    first = false;
    out += coeff_to_string(c);
    out += monomial_body(m);
  }
  return out;
}

Polynomial Polynomial::parse(const std::string& text) {
  if (text == "0") return Polynomial{};
  if (text.empty()) throw ParseError("empty polynomial text");
  Reader r{text};
  Polynomial out;
  while (true) {
    // coefficient
    const std::size_t coeff_start = r.pos;
    if (r.peek() == '-') ++r.pos;
    while (std::isdigit(static_cast<unsigned char>(r.peek())) != 0 ||
           r.peek() == '/') {
      ++r.pos;
    }
    if (r.pos == coeff_start) r.fail("expected coefficient");
    const Rational coeff = exactalg::rational_from_string(
        text.substr(coeff_start, r.pos - coeff_start));
    // variable powers: a space followed by a variable head; a space
    // followed by '+' separates terms instead.
    auto at_varpow = [&] {
      if (r.peek() != ' ' || r.pos + 1 >= text.size()) return false;
      const char head = text[r.pos + 1];
      return head == 'F' || head == 'a' || head == 't';
    };
    Monomial m;
    while (at_varpow()) {
      r.expect(' ');
      const Var v = r.read_var();
      unsigned exp = 1;
      if (r.consume('^')) {
        const long e = r.read_integer();
        if (e <= 0) r.fail("exponent must be positive");
        exp = static_cast<unsigned>(e);
      }
      m = m.times(Monomial::variable(v, exp));
    }
    out.add_term(m, coeff);
    if (r.done()) break;
    r.expect(' ');
    r.expect('+');
    r.expect(' ');
  }
  return out;
}

void SosExpr::add(Rational coeff, Polynomial base) {
  if (coeff <= 0) {
    throw DomainError("sum-of-squares weights must be positive");
  }
  entries_.push_back(SosEntry{std::move(coeff), std::move(base)});
}

Polynomial SosExpr::expand() const {
  Polynomial out;
  for (const auto& entry : entries_) {
    out += entry.base * entry.base * entry.coeff;
  }
  return out;
}

unsigned SosExpr::accounted_degree() const {
  unsigned d = 0;
  for (const auto& entry : entries_) {
    d = std::max(d, 2 * entry.base.total_degree());
  }
  return d;
}

}  // namespace blsos::polyring
