#include "blsos/certificate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <initializer_list>
#include <unordered_set>
#include <utility>

#include "blsos/error.hpp"

namespace blsos::certificate {

namespace {

using nlohmann::ordered_json;
using polyring::Monomial;
using polyring::Var;
using polyring::VarFamily;
using polyring::VarHash;

std::string csv(const std::vector<long>& point) {
  std::string out;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(point[i]);
  }
  return out;
}

void collect_vars(const Polynomial& p,
                  std::unordered_set<Var, VarHash>& out) {
  for (const auto& [mono, coeff] : p.terms()) {
    for (const auto& [var, exp] : mono.factors()) out.insert(var);
  }
}

unsigned checked_exponent(long value) {
  if (value < 1 || value > (1L << 20)) {
    throw DomainError("encoding exponent " + std::to_string(value) +
                      " is out of the supported range");
  }
  return static_cast<unsigned>(value);
}

std::string leading_term(const Polynomial& p) {
  const auto terms = p.sorted_terms();
  Polynomial one;
  one.add_term(terms.front().first, terms.front().second);
  return one.str();
}

}  // namespace

std::string step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::Square:
      return "SQUARE";
    case StepKind::Hypothesis:
      return "HYPOTHESIS";
    case StepKind::Add:
      return "ADD";
    case StepKind::Mul:
      return "MUL";
    case StepKind::ScalarMul:
      return "SCALAR_MUL";
    case StepKind::Substitute:
      return "SUBSTITUTE";
    case StepKind::DefineAux:
      return "DEFINE_AUX";
    case StepKind::Conclude:
      return "CONCLUDE";
  }
  throw InternalError("unhandled step kind");
}

StepKind step_kind_from_name(const std::string& name) {
  if (name == "SQUARE") return StepKind::Square;
  if (name == "HYPOTHESIS") return StepKind::Hypothesis;
  if (name == "ADD") return StepKind::Add;
  if (name == "MUL") return StepKind::Mul;
  if (name == "SCALAR_MUL") return StepKind::ScalarMul;
  if (name == "SUBSTITUTE") return StepKind::Substitute;
  if (name == "DEFINE_AUX") return StepKind::DefineAux;
  if (name == "CONCLUDE") return StepKind::Conclude;
  throw ParseError("unknown step kind \"" + name + "\"");
}

bool is_claim_kind(StepKind kind) {
  return kind != StepKind::DefineAux && kind != StepKind::Conclude;
}

long degree_bound(long n, long m, long s, const std::vector<long>& s_list) {
  if (n < 1 || m < 1 || s < 1) {
    throw DomainError("degree_bound requires positive n, m, s");
  }
  mpz_class n_pow;
  mpz_class m_pow;
  mpz_pow_ui(n_pow.get_mpz_t(), mpz_class(n).get_mpz_t(),
             2 * static_cast<unsigned long>(m));
  mpz_pow_ui(m_pow.get_mpz_t(), mpz_class(m).get_mpz_t(),
             static_cast<unsigned long>(m));
  const mpz_class square = n_pow * m_pow;  // (n^m m^(m/2))^2
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), square.get_mpz_t());
  if (root * root < square) ++root;
  mpz_class total = root;
  for (long sj : s_list) {
    if (sj < 0) throw DomainError("degree_bound requires nonnegative s_j");
    total += mpz_class(s) * sj;
  }
  if (!total.fits_slong_p()) {
    throw DomainError("degree bound does not fit a machine integer");
  }
  return total.get_si();
}

polyring::Var instance_root(std::size_t j, const std::vector<long>& y) {
  return polyring::func_root(static_cast<int>(j) + 1, y);
}

polyring::Var norm_cap_var(std::size_t j) {
  return polyring::slack_var(static_cast<int>(j) + 1);
}

std::string norm_cap_name(std::size_t j, const std::vector<long>& y) {
  return "cap" + std::to_string(j + 1) + "(" + csv(y) + ")";
}

Polynomial norm_cap_poly(std::size_t j, const std::vector<long>& y) {
  Polynomial out;
  out.add_term(Monomial::variable(norm_cap_var(j), 2), Rational(1));
  out.add_term(Monomial::variable(instance_root(j, y), 2), Rational(-1));
  return out;
}

std::vector<Hypothesis> canonical_hypotheses(const datum::BLDatum& d) {
  std::vector<Hypothesis> out;
  for (std::size_t j = 0; j < d.m(); ++j) {
    if (d.exponents.s_list[j] != 0) continue;
    for (const auto& y : d.image_points(j)) {
      out.push_back({norm_cap_name(j, y), norm_cap_poly(j, y)});
    }
  }
  return out;
}

Polynomial canonical_target(const datum::BLDatum& d, long lift) {
  if (lift < 1) throw DomainError("root lift must be a positive integer");
  const long s = d.exponents.s;
  Polynomial lhs;
  for (const auto& x : d.domain.points()) {
    Monomial product;
    for (std::size_t j = 0; j < d.m(); ++j) {
      const long sj = d.exponents.s_list[j];
      const unsigned exp = checked_exponent(2 * lift * (sj > 0 ? sj : 1));
      product =
          product.times(Monomial::variable(instance_root(j, d.map_point(j, x)), exp));
    }
    lhs.add_term(product, Rational(1));
  }
  Polynomial target(Rational(1));
  for (std::size_t j = 0; j < d.m(); ++j) {
    const long sj = d.exponents.s_list[j];
    if (sj > 0) {
      Polynomial norm;
      const unsigned exp = checked_exponent(2 * lift * s);
      for (const auto& y : d.image_points(j)) {
        norm.add_term(Monomial::variable(instance_root(j, y), exp), Rational(1));
      }
      target *= norm.pow(static_cast<unsigned>(sj));
    } else {
      const unsigned exp = checked_exponent(2 * lift * s);
      target *= Polynomial::monomial(Monomial::variable(norm_cap_var(j), exp));
    }
  }
  target -= lhs.pow(static_cast<unsigned>(s));
  return target;
}

Polynomial expand_sos(const Certificate& cert, std::size_t index) {
  if (index >= cert.sos_pool.size()) {
    throw DomainError("sos index out of range");
  }
  Polynomial out;
  for (const auto& entry : cert.sos_pool[index]) {
    if (entry.base >= cert.pools.size()) {
      throw DomainError("pool index out of range");
    }
    Polynomial square = cert.pools[entry.base];
    square *= cert.pools[entry.base];
    square *= entry.coeff;
    out += square;
  }
  return out;
}

namespace {

/// Internal control flow of the verifier: checks throw, run() catches.
struct RejectSignal {
  std::size_t step;
  std::string reason;
  std::string residual;
};

struct StepInfo {
  Polynomial claim;
  long degree = 0;
  bool pure_cone = false;  ///< ancestry avoids HYPOTHESIS and DEFINE_AUX
};

class Verifier {
 public:
  Verifier(const Certificate& cert, const datum::BLDatum* d,
           const VerifyOptions& options)
      : cert_(cert), datum_(d), options_(options) {}

  VerifyOutcome run() {
    try {
      bind_target();
      check_hypotheses();
      replay_steps();
      check_conclusion();
    } catch (const RejectSignal& signal) {
      VerifyOutcome out;
      out.accepted = false;
      out.reject_step = signal.step;
      out.reject_reason = signal.reason;
      out.residual_leading_term = signal.residual;
      return out;
    }
    VerifyOutcome out;
    out.accepted = true;
    out.report.max_degree = 0;
    for (long deg : step_degrees_) {
      out.report.max_degree = std::max(out.report.max_degree, deg);
    }
    out.report.step_degrees = step_degrees_;
    out.report.theorem_bound = theorem_bound_;
    out.report.slack_factor = options_.slack_factor;
    out.report.within_bound =
        theorem_bound_ == 0 ||
        Rational(out.report.max_degree) <=
            options_.slack_factor * Rational(theorem_bound_);
    return out;
  }

 private:
  [[noreturn]] void reject(std::size_t step, std::string reason,
                           std::string residual = {}) const {
    throw RejectSignal{step, std::move(reason), std::move(residual)};
  }

  std::size_t sentinel() const { return cert_.steps.size(); }

  void bind_target() {
    if (cert_.kind == CertKind::BlInstance) {
      if (datum_ == nullptr) {
        throw DomainError("instance certificate requires a datum");
      }
      if (cert_.datum_digest != datum_->digest()) {
        reject(sentinel(), "datum digest mismatch");
      }
      if (cert_.s != datum_->exponents.s ||
          cert_.s_list != datum_->exponents.s_list) {
        reject(sentinel(), "exponent metadata does not match the datum");
      }
      if (cert_.lift < 1) {
        reject(sentinel(), "root lift must be a positive integer");
      }
      target_ = canonical_target(*datum_, cert_.lift);
      theorem_bound_ =
          degree_bound(static_cast<long>(datum_->n),
                       static_cast<long>(datum_->m()), cert_.s, cert_.s_list);
    } else {
      if (!cert_.hypotheses.empty()) {
        reject(sentinel(), "free-form certificates cannot declare hypotheses");
      }
      target_ = cert_.target;
      theorem_bound_ = 0;
    }
    collect_vars(target_, base_vars_);
  }

  void check_hypotheses() {
    std::unordered_map<std::string, std::string> canonical;  // poly -> name
    if (cert_.kind == CertKind::BlInstance) {
      for (const auto& hyp : canonical_hypotheses(*datum_)) {
        canonical.emplace(hyp.poly.str(), hyp.name);
      }
    }
    for (std::size_t i = 0; i < cert_.hypotheses.size(); ++i) {
      const auto& hyp = cert_.hypotheses[i];
      if (!hyp_by_name_.emplace(hyp.name, i).second) {
        reject(sentinel(), "duplicate hypothesis \"" + hyp.name + "\"");
      }
      const auto found = canonical.find(hyp.poly.str());
      if (found == canonical.end() || found->second != hyp.name) {
        reject(sentinel(),
               "hypothesis \"" + hyp.name + "\" is not a canonical sup-norm cap");
      }
      collect_vars(hyp.poly, base_vars_);
    }
  }

  const Polynomial& pool_at(std::size_t step, std::size_t index) const {
    if (index >= cert_.pools.size()) {
      reject(step, "pool index out of range");
    }
    return cert_.pools[index];
  }

  /// Expands sos_pool[index], enforcing positive weights; records the
  /// accounted degree (max over entries of twice the base degree).
  Polynomial sos_at(std::size_t step, std::size_t index, long& degree) const {
    if (index >= cert_.sos_pool.size()) {
      reject(step, "sos index out of range");
    }
    Polynomial out;
    degree = 0;
    for (const auto& entry : cert_.sos_pool[index]) {
      if (entry.coeff <= 0) {
        reject(step, "square weight must be positive");
      }
      const Polynomial& base = pool_at(step, entry.base);
      degree = std::max(degree, 2 * static_cast<long>(base.total_degree()));
      Polynomial square = base;
      square *= base;
      square *= entry.coeff;
      out += square;
    }
    return out;
  }

  const StepInfo& claim_ref(std::size_t at, std::size_t target) const {
    if (target >= at) {
      reject(at, "step reference out of order");
    }
    if (!is_claim_kind(cert_.steps[target].kind)) {
      reject(at, "reference to a non-claim step");
    }
    return infos_[target];
  }

  void replay_steps() {
    const std::size_t n = cert_.steps.size();
    if (n == 0 || cert_.steps.back().kind != StepKind::Conclude) {
      reject(sentinel(), "certificate is missing its CONCLUDE step");
    }
    infos_.resize(n);
    step_degrees_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Step& step = cert_.steps[i];
      if (step.kind == StepKind::Conclude) {
        if (i + 1 != n) reject(i, "CONCLUDE must be the final step");
        continue;
      }
      if (step.kind == StepKind::DefineAux) {
        replay_define_aux(i, step);
        continue;
      }
      StepInfo info = replay_claim(i, step);
      if (info.claim != pool_at(i, step.claim)) {
        reject(i, "claimed polynomial differs from replay");
      }
      step_degrees_[i] = info.degree;
      infos_[i] = std::move(info);
    }
  }

  StepInfo replay_claim(std::size_t i, const Step& step) {
    StepInfo info;
    switch (step.kind) {
      case StepKind::Square: {
        const Polynomial& base = pool_at(i, step.base);
        info.claim = base;
        info.claim *= base;
        info.degree = 2 * static_cast<long>(base.total_degree());
        info.pure_cone = true;
        return info;
      }
      case StepKind::Hypothesis: {
        const auto found = hyp_by_name_.find(step.name);
        if (found == hyp_by_name_.end()) {
          reject(i, "undeclared hypothesis \"" + step.name + "\"");
        }
        info.claim = cert_.hypotheses[found->second].poly;
        info.degree = static_cast<long>(info.claim.total_degree());
        info.pure_cone = false;
        return info;
      }
      case StepKind::Add: {
        const StepInfo& a = claim_ref(i, step.lhs);
        const StepInfo& b = claim_ref(i, step.rhs);
        info.claim = a.claim;
        info.claim += b.claim;
        info.degree = std::max(a.degree, b.degree);
        info.pure_cone = a.pure_cone && b.pure_cone;
        return info;
      }
      case StepKind::Mul: {
        const StepInfo& a = claim_ref(i, step.lhs);
        const StepInfo& b = claim_ref(i, step.rhs);
        info.claim = a.claim;
        info.claim *= b.claim;
        info.degree = a.degree + b.degree;
        info.pure_cone = a.pure_cone && b.pure_cone;
        return info;
      }
      case StepKind::ScalarMul: {
        const StepInfo& a = claim_ref(i, step.arg);
        if (step.scalar <= 0) {
          reject(i, "scalar must be positive");
        }
        info.claim = a.claim;
        info.claim *= step.scalar;
        info.degree = a.degree;
        info.pure_cone = a.pure_cone;
        return info;
      }
      case StepKind::Substitute: {
        const StepInfo& a = claim_ref(i, step.arg);
        if (!a.pure_cone) {
          reject(i, "substitution into a hypothesis-dependent step");
        }
        polyring::SubstitutionTable table;
        for (const auto& binding : step.table) {
          if (!table.emplace(binding.var, pool_at(i, binding.value)).second) {
            reject(i, "duplicate substitution variable");
          }
        }
        info.claim = a.claim.substitute(table);
        info.degree = static_cast<long>(info.claim.total_degree());
        info.pure_cone = true;
        return info;
      }
      default:
        throw InternalError("replay_claim called on a non-claim step");
    }
  }

  void replay_define_aux(std::size_t i, const Step& step) {
    Var var;
    try {
      var = polyring::var_from_string(step.name);
    } catch (const ParseError&) {
      reject(i, "malformed auxiliary variable name \"" + step.name + "\"");
    }
    if (var.id().family != VarFamily::Aux) {
      reject(i, "auxiliary variable must be in the aux family");
    }
    if (base_vars_.count(var) > 0 || aux_vars_.count(var) > 0) {
      reject(i, "auxiliary variable is not fresh");
    }
    if (step.power < 2 || step.power % 2 != 0) {
      reject(i, "auxiliary power must be even and at least 2");
    }
    const Polynomial& rhs = pool_at(i, step.base);
    if (rhs.is_zero()) {
      reject(i, "auxiliary definition must be nonzero");
    }
    if (!rhs.visibly_nonneg()) {
      reject(i, "auxiliary definition must be visibly nonnegative");
    }
    std::unordered_set<Var, VarHash> rhs_vars;
    collect_vars(rhs, rhs_vars);
    for (const Var& v : rhs_vars) {
      if (base_vars_.count(v) == 0 && aux_vars_.count(v) == 0) {
        reject(i, "auxiliary definition uses an undefined variable");
      }
    }
    aux_vars_.insert(var);
    Polynomial equation;
    equation.add_term(
        Monomial::variable(var, static_cast<unsigned>(step.power)),
        Rational(1));
    equation -= rhs;
    aux_equations_[i] = std::move(equation);
    step_degrees_[i] =
        std::max(step.power, static_cast<long>(rhs.total_degree()));
  }

  void check_conclusion() {
    const std::size_t idx = cert_.steps.size() - 1;
    const Step& conclude = cert_.steps[idx];

    Polynomial accumulator(Rational(1));
    long s1_degree = 0;
    for (std::size_t ref : conclude.s1) {
      long degree = 0;
      Polynomial factor = sos_at(idx, ref, degree);
      if (factor.is_zero() || !factor.visibly_nonneg()) {
        reject(idx, "left multiplier factor is not positive-even");
      }
      s1_degree += degree;
      accumulator *= factor;
    }
    accumulator *= target_;
    long conclusion_degree =
        s1_degree + static_cast<long>(target_.total_degree());

    for (const Piece& piece : conclude.pieces) {
      if (piece.scale <= 0) {
        reject(idx, "piece scale must be positive");
      }
      Polynomial product(piece.scale);
      long degree = 0;
      for (std::size_t sq : piece.squares) {
        const Polynomial& base = pool_at(idx, sq);
        product *= base;
        product *= base;
        degree += 2 * static_cast<long>(base.total_degree());
      }
      for (std::size_t co : piece.cofactors) {
        long sos_degree = 0;
        product *= sos_at(idx, co, sos_degree);
        degree += sos_degree;
      }
      for (std::size_t h : piece.hypotheses) {
        if (h >= cert_.hypotheses.size()) {
          reject(idx, "hypothesis index out of range");
        }
        product *= cert_.hypotheses[h].poly;
        degree += static_cast<long>(cert_.hypotheses[h].poly.total_degree());
      }
      for (std::size_t ref : piece.claims) {
        const StepInfo& info = claim_ref(idx, ref);
        product *= info.claim;
        degree += info.degree;
      }
      accumulator -= product;
      conclusion_degree = std::max(conclusion_degree, degree);
    }

    for (const EqTerm& term : conclude.eq_terms) {
      if (term.aux >= idx ||
          cert_.steps[term.aux].kind != StepKind::DefineAux) {
        reject(idx, "equation term must reference a DEFINE_AUX step");
      }
      if (term.scale == 0) {
        reject(idx, "equation scale must be nonzero");
      }
      Polynomial product(term.scale);
      long degree = step_degrees_[term.aux];
      for (std::size_t p : term.polys) {
        const Polynomial& factor = pool_at(idx, p);
        product *= factor;
        degree += static_cast<long>(factor.total_degree());
      }
      for (std::size_t co : term.cofactors) {
        long sos_degree = 0;
        product *= sos_at(idx, co, sos_degree);
        degree += sos_degree;
      }
      product *= aux_equations_.at(term.aux);
      accumulator -= product;
      conclusion_degree = std::max(conclusion_degree, degree);
    }

    if (!accumulator.is_zero()) {
      reject(idx, "conclusion identity has a nonzero residual",
             leading_term(accumulator));
    }
    step_degrees_[idx] = conclusion_degree;
  }

  const Certificate& cert_;
  const datum::BLDatum* datum_;
  VerifyOptions options_;

  Polynomial target_;
  long theorem_bound_ = 0;
  std::unordered_set<Var, VarHash> base_vars_;
  std::unordered_set<Var, VarHash> aux_vars_;
  std::unordered_map<std::string, std::size_t> hyp_by_name_;
  std::unordered_map<std::size_t, Polynomial> aux_equations_;
  std::vector<StepInfo> infos_;
  std::vector<long> step_degrees_;
};

}  // namespace

VerifyOutcome verify(const Certificate& cert, const datum::BLDatum& d,
                     const VerifyOptions& options) {
  return Verifier(cert, &d, options).run();
}

VerifyOutcome verify(const Certificate& cert, const VerifyOptions& options) {
  if (cert.kind == CertKind::BlInstance) {
    throw DomainError("instance certificate requires a datum");
  }
  return Verifier(cert, nullptr, options).run();
}

namespace {

ordered_json step_to_json(const Step& step, const Certificate& cert) {
  ordered_json j;
  j["kind"] = step_kind_name(step.kind);
  switch (step.kind) {
    case StepKind::Square:
      j["base"] = step.base;
      break;
    case StepKind::Hypothesis:
      j["name"] = step.name;
      break;
    case StepKind::Add:
    case StepKind::Mul:
      j["lhs"] = step.lhs;
      j["rhs"] = step.rhs;
      break;
    case StepKind::ScalarMul:
      j["arg"] = step.arg;
      j["scalar"] = exactalg::rational_to_string(step.scalar);
      break;
    case StepKind::Substitute: {
      j["arg"] = step.arg;
      ordered_json table = ordered_json::object();
      for (const auto& binding : step.table) {
        table[polyring::var_to_string(binding.var)] = binding.value;
      }
      j["table"] = std::move(table);
      break;
    }
    case StepKind::DefineAux:
      j["var"] = step.name;
      j["power"] = step.power;
      j["rhs"] = step.base;
      break;
    case StepKind::Conclude: {
      j["s1"] = step.s1;
      ordered_json pieces = ordered_json::array();
      for (const Piece& piece : step.pieces) {
        ordered_json p;
        p["c"] = exactalg::rational_to_string(piece.scale);
        p["squares"] = piece.squares;
        p["cofactors"] = piece.cofactors;
        ordered_json hyps = ordered_json::array();
        for (std::size_t h : piece.hypotheses) {
          if (h >= cert.hypotheses.size()) {
            throw InternalError("piece hypothesis index out of range");
          }
          hyps.push_back(cert.hypotheses[h].name);
        }
        p["hyps"] = std::move(hyps);
        p["claims"] = piece.claims;
        pieces.push_back(std::move(p));
      }
      j["pieces"] = std::move(pieces);
      ordered_json eqs = ordered_json::array();
      for (const EqTerm& term : step.eq_terms) {
        ordered_json e;
        e["aux"] = term.aux;
        e["c"] = exactalg::rational_to_string(term.scale);
        e["polys"] = term.polys;
        e["cofactors"] = term.cofactors;
        eqs.push_back(std::move(e));
      }
      j["eq"] = std::move(eqs);
      j["trace"] = step.trace;
      break;
    }
  }
  if (is_claim_kind(step.kind)) j["claim"] = step.claim;
  return j;
}

const ordered_json& require_key(const ordered_json& obj, const char* key,
                                const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing key \"" + key + "\"");
  }
  return *it;
}

void check_keys(const ordered_json& obj,
                std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ParseError(where + ": unknown key \"" + item.key() + "\"");
    }
  }
}

long require_int(const ordered_json& v, const std::string& where) {
  if (!v.is_number_integer()) {
    throw ParseError(where + ": expected an integer");
  }
  return v.get<long>();
}

std::size_t require_index(const ordered_json& v, std::size_t limit,
                          const std::string& where) {
  const long raw = require_int(v, where);
  if (raw < 0 || static_cast<std::size_t>(raw) >= limit) {
    throw ParseError(where + ": index " + std::to_string(raw) +
                     " out of range (limit " + std::to_string(limit) + ")");
  }
  return static_cast<std::size_t>(raw);
}

std::string require_string(const ordered_json& v, const std::string& where) {
  if (!v.is_string()) {
    throw ParseError(where + ": expected a string");
  }
  return v.get<std::string>();
}

Rational require_rational(const ordered_json& v, const std::string& where) {
  const std::string text = require_string(v, where);
  try {
    return exactalg::rational_from_string(text);
  } catch (const ParseError& error) {
    throw ParseError(where + ": " + error.what());
  }
}

Polynomial require_poly(const ordered_json& v, const std::string& where) {
  const std::string text = require_string(v, where);
  try {
    return Polynomial::parse(text);
  } catch (const ParseError& error) {
    throw ParseError(where + ": " + error.what());
  }
}

const ordered_json& require_array(const ordered_json& v,
                                  const std::string& where) {
  if (!v.is_array()) {
    throw ParseError(where + ": expected an array");
  }
  return v;
}

std::vector<std::size_t> require_index_list(const ordered_json& v,
                                            std::size_t limit,
                                            const std::string& where) {
  std::vector<std::size_t> out;
  for (const auto& item : require_array(v, where)) {
    out.push_back(require_index(item, limit, where));
  }
  return out;
}

}  // namespace

std::string serialize(const Certificate& cert) {
  ordered_json j;
  j["format"] = kFormatTag;
  j["kind"] = cert.kind == CertKind::BlInstance ? "bl-instance" : "free-form";
  if (cert.kind == CertKind::BlInstance) {
    j["datum_digest"] = cert.datum_digest;
    j["s"] = cert.s;
    j["s_list"] = cert.s_list;
    j["lift"] = cert.lift;
    ordered_json hyps = ordered_json::array();
    for (const Hypothesis& hyp : cert.hypotheses) {
      ordered_json h;
      h["name"] = hyp.name;
      h["poly"] = hyp.poly.str();
      hyps.push_back(std::move(h));
    }
    j["hypotheses"] = std::move(hyps);
  } else {
    j["target"] = cert.target.str();
  }
  ordered_json pools = ordered_json::array();
  for (const Polynomial& p : cert.pools) pools.push_back(p.str());
  j["pools"] = std::move(pools);
  ordered_json sos = ordered_json::array();
  for (const SosRef& ref : cert.sos_pool) {
    ordered_json entries = ordered_json::array();
    for (const WeightedSquareRef& entry : ref) {
      entries.push_back(ordered_json::array(
          {exactalg::rational_to_string(entry.coeff), entry.base}));
    }
    sos.push_back(std::move(entries));
  }
  j["sos"] = std::move(sos);
  ordered_json steps = ordered_json::array();
  for (const Step& step : cert.steps) {
    steps.push_back(step_to_json(step, cert));
  }
  j["steps"] = std::move(steps);
  return j.dump(1) + "\n";
}

Certificate deserialize(const std::string& bytes) {
  ordered_json j;
  try {
    j = ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& error) {
    throw ParseError(std::string("certificate: ") + error.what());
  }
  if (!j.is_object()) {
    throw ParseError("certificate: expected a JSON object");
  }
  const std::string where = "certificate";
  if (require_string(require_key(j, "format", where), where + ".format") !=
      kFormatTag) {
    throw ParseError("certificate: unsupported format tag");
  }

  Certificate cert;
  const std::string kind =
      require_string(require_key(j, "kind", where), where + ".kind");
  if (kind == "bl-instance") {
    cert.kind = CertKind::BlInstance;
  } else if (kind == "free-form") {
    cert.kind = CertKind::FreeForm;
  } else {
    throw ParseError("certificate: unknown kind \"" + kind + "\"");
  }

  if (cert.kind == CertKind::BlInstance) {
    check_keys(j,
               {"format", "kind", "datum_digest", "s", "s_list", "lift",
                "hypotheses", "pools", "sos", "steps"},
               where);
    cert.datum_digest = require_string(require_key(j, "datum_digest", where),
                                       where + ".datum_digest");
    cert.s = require_int(require_key(j, "s", where), where + ".s");
    for (const auto& item :
         require_array(require_key(j, "s_list", where), where + ".s_list")) {
      cert.s_list.push_back(require_int(item, where + ".s_list"));
    }
    cert.lift = require_int(require_key(j, "lift", where), where + ".lift");
    std::size_t hyp_index = 0;
    for (const auto& item : require_array(require_key(j, "hypotheses", where),
                                          where + ".hypotheses")) {
      const std::string hyp_where =
          where + ".hypotheses[" + std::to_string(hyp_index++) + "]";
      if (!item.is_object()) {
        throw ParseError(hyp_where + ": expected an object");
      }
      check_keys(item, {"name", "poly"}, hyp_where);
      Hypothesis hyp;
      hyp.name =
          require_string(require_key(item, "name", hyp_where), hyp_where);
      hyp.poly = require_poly(require_key(item, "poly", hyp_where), hyp_where);
      for (const Hypothesis& seen : cert.hypotheses) {
        if (seen.name == hyp.name) {
          throw ParseError(hyp_where + ": duplicate hypothesis \"" + hyp.name +
                           "\"");
        }
      }
      cert.hypotheses.push_back(std::move(hyp));
    }
  } else {
    check_keys(j, {"format", "kind", "target", "pools", "sos", "steps"},
               where);
    cert.target =
        require_poly(require_key(j, "target", where), where + ".target");
  }

  std::size_t pool_index = 0;
  for (const auto& item :
       require_array(require_key(j, "pools", where), where + ".pools")) {
    cert.pools.push_back(require_poly(
        item, where + ".pools[" + std::to_string(pool_index++) + "]"));
  }

  std::size_t sos_index = 0;
  for (const auto& entry_list :
       require_array(require_key(j, "sos", where), where + ".sos")) {
    const std::string sos_where =
        where + ".sos[" + std::to_string(sos_index++) + "]";
    SosRef ref;
    for (const auto& entry : require_array(entry_list, sos_where)) {
      if (!entry.is_array() || entry.size() != 2) {
        throw ParseError(sos_where + ": expected [weight, pool] pairs");
      }
      WeightedSquareRef square;
      square.coeff = require_rational(entry[0], sos_where);
      if (square.coeff <= 0) {
        throw ParseError(sos_where + ": weight must be positive");
      }
      square.base = require_index(entry[1], cert.pools.size(), sos_where);
      ref.push_back(std::move(square));
    }
    cert.sos_pool.push_back(std::move(ref));
  }

  const auto& steps_json =
      require_array(require_key(j, "steps", where), where + ".steps");
  for (std::size_t i = 0; i < steps_json.size(); ++i) {
    const std::string step_where = where + ".steps[" + std::to_string(i) + "]";
    const auto& sj = steps_json[i];
    if (!sj.is_object()) {
      throw ParseError(step_where + ": expected an object");
    }
    Step step;
    step.kind = step_kind_from_name(
        require_string(require_key(sj, "kind", step_where), step_where));
    switch (step.kind) {
      case StepKind::Square:
        check_keys(sj, {"kind", "base", "claim"}, step_where);
        step.base = require_index(require_key(sj, "base", step_where),
                                  cert.pools.size(), step_where + ".base");
        break;
      case StepKind::Hypothesis: {
        check_keys(sj, {"kind", "name", "claim"}, step_where);
        step.name =
            require_string(require_key(sj, "name", step_where), step_where);
        bool declared = false;
        for (const Hypothesis& hyp : cert.hypotheses) {
          if (hyp.name == step.name) {
            declared = true;
            break;
          }
        }
        if (!declared) {
          throw ParseError(step_where + ": undeclared hypothesis \"" +
                           step.name + "\"");
        }
        break;
      }
      case StepKind::Add:
      case StepKind::Mul:
        check_keys(sj, {"kind", "lhs", "rhs", "claim"}, step_where);
        step.lhs = require_index(require_key(sj, "lhs", step_where), i,
                                 step_where + ".lhs");
        step.rhs = require_index(require_key(sj, "rhs", step_where), i,
                                 step_where + ".rhs");
        break;
      case StepKind::ScalarMul:
        check_keys(sj, {"kind", "arg", "scalar", "claim"}, step_where);
        step.arg = require_index(require_key(sj, "arg", step_where), i,
                                 step_where + ".arg");
        step.scalar = require_rational(require_key(sj, "scalar", step_where),
                                       step_where + ".scalar");
        break;
      case StepKind::Substitute: {
        check_keys(sj, {"kind", "arg", "table", "claim"}, step_where);
        step.arg = require_index(require_key(sj, "arg", step_where), i,
                                 step_where + ".arg");
        const auto& table = require_key(sj, "table", step_where);
        if (!table.is_object()) {
          throw ParseError(step_where + ".table: expected an object");
        }
        for (const auto& item : table.items()) {
          SubstitutionPair binding;
          try {
            binding.var = polyring::var_from_string(item.key());
          } catch (const ParseError& error) {
            throw ParseError(step_where + ".table: " + error.what());
          }
          binding.value = require_index(item.value(), cert.pools.size(),
                                        step_where + ".table");
          step.table.push_back(std::move(binding));
        }
        break;
      }
      case StepKind::DefineAux:
        check_keys(sj, {"kind", "var", "power", "rhs"}, step_where);
        step.name =
            require_string(require_key(sj, "var", step_where), step_where);
        step.power =
            require_int(require_key(sj, "power", step_where), step_where);
        step.base = require_index(require_key(sj, "rhs", step_where),
                                  cert.pools.size(), step_where + ".rhs");
        break;
      case StepKind::Conclude: {
        check_keys(sj, {"kind", "s1", "pieces", "eq", "trace"}, step_where);
        if (i + 1 != steps_json.size()) {
          throw ParseError(step_where + ": CONCLUDE must be the final step");
        }
        step.s1 = require_index_list(require_key(sj, "s1", step_where),
                                     cert.sos_pool.size(), step_where + ".s1");
        std::size_t piece_index = 0;
        for (const auto& pj : require_array(
                 require_key(sj, "pieces", step_where), step_where)) {
          const std::string piece_where =
              step_where + ".pieces[" + std::to_string(piece_index++) + "]";
          if (!pj.is_object()) {
            throw ParseError(piece_where + ": expected an object");
          }
          check_keys(pj, {"c", "squares", "cofactors", "hyps", "claims"},
                     piece_where);
          Piece piece;
          piece.scale =
              require_rational(require_key(pj, "c", piece_where), piece_where);
          piece.squares =
              require_index_list(require_key(pj, "squares", piece_where),
                                 cert.pools.size(), piece_where + ".squares");
          piece.cofactors = require_index_list(
              require_key(pj, "cofactors", piece_where), cert.sos_pool.size(),
              piece_where + ".cofactors");
          for (const auto& name_json : require_array(
                   require_key(pj, "hyps", piece_where), piece_where)) {
            const std::string name =
                require_string(name_json, piece_where + ".hyps");
            bool found = false;
            for (std::size_t h = 0; h < cert.hypotheses.size(); ++h) {
              if (cert.hypotheses[h].name == name) {
                piece.hypotheses.push_back(h);
                found = true;
                break;
              }
            }
            if (!found) {
              throw ParseError(piece_where + ": undeclared hypothesis \"" +
                               name + "\"");
            }
          }
          piece.claims =
              require_index_list(require_key(pj, "claims", piece_where), i,
                                 piece_where + ".claims");
          step.pieces.push_back(std::move(piece));
        }
        std::size_t eq_index = 0;
        for (const auto& ej :
             require_array(require_key(sj, "eq", step_where), step_where)) {
          const std::string eq_where =
              step_where + ".eq[" + std::to_string(eq_index++) + "]";
          if (!ej.is_object()) {
            throw ParseError(eq_where + ": expected an object");
          }
          check_keys(ej, {"aux", "c", "polys", "cofactors"}, eq_where);
          EqTerm term;
          term.aux =
              require_index(require_key(ej, "aux", eq_where), i, eq_where);
          term.scale =
              require_rational(require_key(ej, "c", eq_where), eq_where);
          term.polys =
              require_index_list(require_key(ej, "polys", eq_where),
                                 cert.pools.size(), eq_where + ".polys");
          term.cofactors = require_index_list(
              require_key(ej, "cofactors", eq_where), cert.sos_pool.size(),
              eq_where + ".cofactors");
          step.eq_terms.push_back(std::move(term));
        }
        for (const auto& note : require_array(
                 require_key(sj, "trace", step_where), step_where)) {
          step.trace.push_back(require_string(note, step_where + ".trace"));
        }
        break;
      }
    }
    if (is_claim_kind(step.kind)) {
      step.claim = require_index(require_key(sj, "claim", step_where),
                                 cert.pools.size(), step_where + ".claim");
    }
    cert.steps.push_back(std::move(step));
  }

  if (cert.steps.empty() || cert.steps.back().kind != StepKind::Conclude) {
    throw ParseError("certificate is missing its CONCLUDE step");
  }
  return cert;
}

Builder::Builder(CertKind kind) { cert_.kind = kind; }

void Builder::bind_instance(const datum::BLDatum& d, long lift) {
  if (cert_.kind != CertKind::BlInstance) {
    throw InternalError("bind_instance on a free-form builder");
  }
  cert_.datum_digest = d.digest();
  cert_.s = d.exponents.s;
  cert_.s_list = d.exponents.s_list;
  cert_.lift = lift;
}

void Builder::set_target(Polynomial target) {
  if (cert_.kind != CertKind::FreeForm) {
    throw InternalError("set_target on an instance builder");
  }
  cert_.target = std::move(target);
}

std::size_t Builder::declare_hypothesis(std::string name, Polynomial poly) {
  const auto found = hyp_index_.find(name);
  if (found != hyp_index_.end()) {
    if (cert_.hypotheses[found->second].poly != poly) {
      throw InternalError("hypothesis \"" + name + "\" redeclared differently");
    }
    return found->second;
  }
  const std::size_t index = cert_.hypotheses.size();
  hyp_index_.emplace(name, index);
  cert_.hypotheses.push_back({std::move(name), std::move(poly)});
  return index;
}

std::size_t Builder::pool(const Polynomial& p) {
  const std::string key = p.str();
  const auto found = pool_index_.find(key);
  if (found != pool_index_.end()) return found->second;
  const std::size_t index = cert_.pools.size();
  pool_index_.emplace(key, index);
  cert_.pools.push_back(p);
  return index;
}

std::size_t Builder::pool_sos(const polyring::SosExpr& sos) {
  SosRef ref;
  std::string key;
  for (const auto& entry : sos.entries()) {
    const std::size_t base = pool(entry.base);
    key += exactalg::rational_to_string(entry.coeff);
    key += '@';
    key += std::to_string(base);
    key += ';';
    ref.push_back({entry.coeff, base});
  }
  const auto found = sos_index_.find(key);
  if (found != sos_index_.end()) return found->second;
  const std::size_t index = cert_.sos_pool.size();
  sos_index_.emplace(key, index);
  cert_.sos_pool.push_back(std::move(ref));
  return index;
}

std::size_t Builder::require_claim_step(std::size_t step) const {
  if (step >= cert_.steps.size() || !is_claim_kind(cert_.steps[step].kind)) {
    throw InternalError("builder reference to a non-claim step");
  }
  return step;
}

std::size_t Builder::push_claim_step(Step step, Polynomial claim) {
  if (concluded_) throw InternalError("builder already concluded");
  step.claim = pool(claim);
  cert_.steps.push_back(std::move(step));
  claims_.push_back(std::move(claim));
  return cert_.steps.size() - 1;
}

std::size_t Builder::square(const Polynomial& base) {
  Step step;
  step.kind = StepKind::Square;
  step.base = pool(base);
  Polynomial claim = base;
  claim *= base;
  return push_claim_step(std::move(step), std::move(claim));
}

std::size_t Builder::hypothesis_step(std::size_t hyp_index) {
  if (hyp_index >= cert_.hypotheses.size()) {
    throw InternalError("hypothesis index out of range");
  }
  Step step;
  step.kind = StepKind::Hypothesis;
  step.name = cert_.hypotheses[hyp_index].name;
  return push_claim_step(std::move(step), cert_.hypotheses[hyp_index].poly);
}

std::size_t Builder::add(std::size_t lhs, std::size_t rhs) {
  Step step;
  step.kind = StepKind::Add;
  step.lhs = require_claim_step(lhs);
  step.rhs = require_claim_step(rhs);
  Polynomial claim = claims_[lhs];
  claim += claims_[rhs];
  return push_claim_step(std::move(step), std::move(claim));
}

std::size_t Builder::mul(std::size_t lhs, std::size_t rhs) {
  Step step;
  step.kind = StepKind::Mul;
  step.lhs = require_claim_step(lhs);
  step.rhs = require_claim_step(rhs);
  Polynomial claim = claims_[lhs];
  claim *= claims_[rhs];
  return push_claim_step(std::move(step), std::move(claim));
}

std::size_t Builder::scalar_mul(std::size_t arg, const Rational& scalar) {
  Step step;
  step.kind = StepKind::ScalarMul;
  step.arg = require_claim_step(arg);
  step.scalar = scalar;
  Polynomial claim = claims_[arg];
  claim *= scalar;
  return push_claim_step(std::move(step), std::move(claim));
}

std::size_t Builder::substitute(
    std::size_t arg, std::vector<std::pair<polyring::Var, Polynomial>> table) {
  Step step;
  step.kind = StepKind::Substitute;
  step.arg = require_claim_step(arg);
  std::sort(table.begin(), table.end(),
            [](const auto& a, const auto& b) { return a.first.id() < b.first.id(); });
  polyring::SubstitutionTable subst;
  for (auto& [var, value] : table) {
    if (!subst.emplace(var, value).second) {
      throw InternalError("duplicate substitution variable");
    }
    step.table.push_back({var, pool(value)});
  }
  Polynomial claim = claims_[arg].substitute(subst);
  return push_claim_step(std::move(step), std::move(claim));
}

std::size_t Builder::define_aux(polyring::Var var, long power,
                                const Polynomial& rhs) {
  if (concluded_) throw InternalError("builder already concluded");
  Step step;
  step.kind = StepKind::DefineAux;
  step.name = polyring::var_to_string(var);
  step.power = power;
  step.base = pool(rhs);
  cert_.steps.push_back(std::move(step));
  claims_.emplace_back();
  return cert_.steps.size() - 1;
}

const Polynomial& Builder::claim_of(std::size_t step) const {
  return claims_[require_claim_step(step)];
}

void Builder::conclude(std::vector<std::size_t> s1, std::vector<Piece> pieces,
                       std::vector<EqTerm> eq_terms,
                       std::vector<std::string> trace) {
  if (concluded_) throw InternalError("builder already concluded");
  Step step;
  step.kind = StepKind::Conclude;
  step.s1 = std::move(s1);
  step.pieces = std::move(pieces);
  step.eq_terms = std::move(eq_terms);
  step.trace = std::move(trace);
  cert_.steps.push_back(std::move(step));
  claims_.emplace_back();
  concluded_ = true;
}

Certificate Builder::take() {
  if (!concluded_) {
    throw InternalError("certificate is missing its CONCLUDE step");
  }
  Certificate out = std::move(cert_);
  cert_ = Certificate{};
  cert_.kind = out.kind;
  pool_index_.clear();
  sos_index_.clear();
  hyp_index_.clear();
  claims_.clear();
  concluded_ = false;
  return out;
}

}  // namespace blsos::certificate
