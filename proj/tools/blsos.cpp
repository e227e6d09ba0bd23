// Command-line front end: instance ingestion, pipeline orchestration, and
// certificate / report I/O.  One verb per invocation; all structured output
// is JSON on stdout, human diagnostics go to stderr.
//
// Exit codes:
//   0  success (including "no violation found" for refute)
//   1  verify rejected the certificate / pseudocheck failed an axiom
//   2  prove: the instance is infeasible (witness reported)
//   3  prove: feasibility undecided at the search budget (use --force)
//   64 usage error (bad flags, bad BLSOS_THREADS, unwritable output)
//   65 input error (unreadable file, malformed JSON, semantic validation)
//   70 internal invariant breach

#include <Eigen/Core>

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blsos/blconst.hpp"
#include "blsos/certificate.hpp"
#include "blsos/datum.hpp"
#include "blsos/error.hpp"
#include "blsos/oracle.hpp"
#include "blsos/polytope.hpp"
#include "blsos/prover.hpp"
#include "json.hpp"

namespace {

using blsos::InternalError;
using blsos::ParseError;
using Rational = blsos::exactalg::Rational;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUnknown = 3;
constexpr int kExitUsage = 64;
constexpr int kExitInput = 65;
constexpr int kExitInternal = 70;

/// A fully parsed command line, ready for dispatch.
struct Command {
  std::string verb;
  std::string input;
  std::string output;        // -o
  std::string datum_path;    // verify --datum
  std::uint64_t seed = 20240817;
  long trials = 0;
  std::size_t budget = 2;
  double epsilon = 1e-9;
  int max_iters = 1000;
  std::string slack_factor;  // rational text, empty = default
  bool force = false;
};

std::string rat(const Rational& q) { return q.get_str(); }

ordered_json vec_json(const blsos::exactalg::Vec& v) {
  ordered_json out = ordered_json::array();
  for (const auto& entry : v) out.push_back(rat(entry));
  return out;
}

ordered_json subspace_json(const blsos::exactalg::Subspace& w) {
  ordered_json basis = ordered_json::array();
  for (std::size_t i = 0; i < w.dim(); ++i) {
    basis.push_back(vec_json(w.basis_row(i)));
  }
  return ordered_json{{"dim", w.dim()},
                      {"ambient_dim", w.ambient_dim()},
                      {"basis", basis}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ParseError("cannot read '" + path + "'");
  return buf.str();
}

ordered_json parse_json_file(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return ordered_json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

blsos::datum::BLDatum load_datum(const std::string& path) {
  return blsos::datum::validate(parse_json_file(path));
}

Rational json_to_rational(const ordered_json& value, const char* what) {
  if (value.is_number_integer()) return Rational(value.get<long>());
  if (value.is_string()) {
    return blsos::exactalg::rational_from_string(value.get<std::string>());
  }
  throw ParseError(std::string(what) +
                   " must be an integer or a rational string");
}

void emit(const ordered_json& out) { std::cout << out.dump(2) << "\n"; }

void write_output(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CLI::ValidationError("output", "cannot open '" + path +
                                             "' for writing");
  }
  out << bytes;
  out.flush();
  if (!out) {
    throw CLI::ValidationError("output", "cannot write '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// Verbs
// ---------------------------------------------------------------------------

int run_validate(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  ordered_json p = ordered_json::array();
  for (const auto& e : d.exponents.p) p.push_back(rat(e));
  ordered_json dims = ordered_json::array();
  for (std::size_t j = 0; j < d.m(); ++j) dims.push_back(d.codomain_dim(j));
  emit(ordered_json{{"valid", true},
                    {"n", d.n},
                    {"m", d.m()},
                    {"p", p},
                    {"s", d.exponents.s},
                    {"s_list", d.exponents.s_list},
                    {"codomain_dims", dims},
                    {"domain_points", d.domain.points().size()},
                    {"digest", d.digest()}});
  return kExitOk;
}

int run_feasibility(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  const auto family = blsos::datum::subspace_candidates(d, cmd.budget);
  const auto verdict = blsos::datum::is_feasible(d, family);
  using Status = blsos::datum::Feasibility::Status;
  std::string status = "UNKNOWN";
  if (verdict.status == Status::Feasible) status = "FEASIBLE";
  if (verdict.status == Status::Infeasible) status = "INFEASIBLE";
  ordered_json out{{"status", status},
                   {"candidates", family.subspaces.size()},
                   {"truncated", family.truncated}};
  out["witness"] =
      verdict.witness ? subspace_json(*verdict.witness) : ordered_json();
  emit(out);
  return kExitOk;
}

int run_vertices(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  const auto family = blsos::datum::subspace_candidates(d, cmd.budget);
  const auto systems = blsos::polytope::build_systems(d, family);
  const auto vertices = blsos::polytope::enumerate_vertices(systems.qv);
  ordered_json list = ordered_json::array();
  for (const auto& v : vertices) {
    bool binary = true;
    for (const auto& coord : v.p) {
      if (coord != 0 && coord != 1) binary = false;
    }
    list.push_back(ordered_json{{"p", vec_json(v.p)},
                                {"binary", binary},
                                {"active_rows", v.active}});
  }
  emit(ordered_json{{"count", vertices.size()},
                    {"constraints", systems.qv.rows.size()},
                    {"truncated_family", family.truncated},
                    {"vertices", list}});
  return kExitOk;
}

int run_prove(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  blsos::prover::ProveOptions options;
  options.subspace_budget = cmd.budget;
  options.assume_feasible = cmd.force;
  const auto cert = blsos::prover::prove(d, options);
  const std::string bytes = blsos::certificate::serialize(cert);
  if (cmd.output.empty()) {
    std::cout << bytes;
    if (bytes.empty() || bytes.back() != '\n') std::cout << "\n";
  } else {
    write_output(cmd.output, bytes);
    emit(ordered_json{{"certificate", cmd.output},
                      {"bytes", bytes.size()},
                      {"steps", cert.steps.size()},
                      {"datum_digest", cert.datum_digest}});
  }
  return kExitOk;
}

int run_verify(const Command& cmd) {
  const std::string bytes = read_file(cmd.input);
  const auto cert = blsos::certificate::deserialize(bytes);
  blsos::certificate::VerifyOptions options;
  if (!cmd.slack_factor.empty()) {
    options.slack_factor =
        blsos::exactalg::rational_from_string(cmd.slack_factor);
    if (options.slack_factor <= 0) {
      throw ParseError("--slack-factor must be positive");
    }
  }
  blsos::certificate::VerifyOutcome outcome;
  if (cmd.datum_path.empty()) {
    outcome = blsos::certificate::verify(cert, options);
  } else {
    const blsos::datum::BLDatum d = load_datum(cmd.datum_path);
    outcome = blsos::certificate::verify(cert, d, options);
  }
  if (!outcome.accepted) {
    ordered_json out{{"verdict", "REJECT"},
                     {"step", outcome.reject_step},
                     {"reason", outcome.reject_reason}};
    out["residual_leading_term"] = outcome.residual_leading_term.empty()
                                       ? ordered_json()
                                       : ordered_json(
                                             outcome.residual_leading_term);
    emit(out);
    std::cerr << "REJECT at step " << outcome.reject_step << ": "
              << outcome.reject_reason << "\n";
    return kExitRejected;
  }
  const auto& report = outcome.report;
  const ordered_json degree{{"max_degree", report.max_degree},
                            {"theorem_bound", report.theorem_bound},
                            {"slack_factor", rat(report.slack_factor)},
                            {"within_bound", report.within_bound},
                            {"step_degrees", report.step_degrees}};
  if (!report.within_bound) {
    emit(ordered_json{{"verdict", "REJECT"},
                      {"reason",
                       "maximum step degree exceeds the slack-scaled "
                       "instance bound"},
                      {"degree", degree}});
    std::cerr << "REJECT: max degree " << report.max_degree
              << " exceeds the slack-scaled bound\n";
    return kExitRejected;
  }
  emit(ordered_json{{"verdict", "ACCEPT"},
                    {"degree", degree},
                    {"steps", cert.steps.size()}});
  return kExitOk;
}

int run_refute(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  ordered_json out;
  if (cmd.trials > 0) {
    const auto report = blsos::oracle::random_check(d, cmd.trials, cmd.seed);
    out["random_check"] = ordered_json{{"trials", report.trials},
                                       {"violations", report.violations},
                                       {"min_gap", rat(report.min_gap)}};
  }
  const auto violation = blsos::oracle::find_violation(d);
  if (!violation) {
    out["violation"] = ordered_json();
    emit(out);
    return kExitOk;
  }
  ordered_json tables = ordered_json::array();
  for (const auto& table : violation->tables) {
    ordered_json entries = ordered_json::array();
    for (const auto& [point, value] : table) {
      entries.push_back(ordered_json{{"point", point}, {"value", rat(value)}});
    }
    tables.push_back(std::move(entries));
  }
  out["violation"] = ordered_json{
      {"tables", std::move(tables)},
      {"gap", rat(blsos::oracle::inequality_gap(d, *violation))}};
  emit(out);
  return kExitOk;
}

blsos::oracle::MomentTable load_moment_table(const std::string& path) {
  const ordered_json raw = parse_json_file(path);
  if (!raw.is_object() || !raw.contains("degree") || !raw.contains("values")) {
    throw ParseError("moment table must be an object with 'degree' and "
                     "'values'");
  }
  if (!raw["degree"].is_number_integer() || raw["degree"].get<long>() < 0) {
    throw ParseError("'degree' must be a nonnegative integer");
  }
  if (!raw["values"].is_object()) {
    throw ParseError("'values' must be an object keyed by monomials");
  }
  blsos::oracle::MomentTable table;
  table.degree = raw["degree"].get<long>();
  for (const auto& [key, value] : raw["values"].items()) {
    blsos::oracle::monomial_from_key(key);  // validate the key eagerly
    table.values[key] = json_to_rational(value, "moment value");
  }
  return table;
}

int run_pseudocheck(const Command& cmd) {
  const auto table = load_moment_table(cmd.input);
  const auto outcome =
      blsos::oracle::check_pseudo_expectation(table, table.degree);
  if (outcome.pass) {
    emit(ordered_json{{"verdict", "PASS"},
                      {"degree", table.degree},
                      {"entries", table.values.size()}});
    return kExitOk;
  }
  ordered_json out{{"verdict", "FAIL"}, {"axiom", outcome.axiom}};
  if (outcome.axiom == "positivity") {
    out["pivot_index"] = outcome.pivot_index;
    out["pivot"] = rat(outcome.pivot);
    out["witness"] = vec_json(outcome.witness);
  }
  emit(out);
  std::cerr << "FAIL: " << outcome.axiom << " axiom\n";
  return kExitRejected;
}

int run_blconstant(const Command& cmd) {
  const blsos::datum::BLDatum d = load_datum(cmd.input);
  blsos::blconst::GaussianOptions options;
  options.epsilon = cmd.epsilon;
  options.max_iters = cmd.max_iters;
  const auto report = blsos::blconst::bl_constant(d, options);
  ordered_json out{{"C", report.constant},
                   {"iterations", report.iterations},
                   {"converged", report.converged}};
  if (report.divergent) out["divergent"] = true;
  emit(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Dispatch and exit-code mapping
// ---------------------------------------------------------------------------

int dispatch(const Command& cmd) {
  if (cmd.verb == "validate") return run_validate(cmd);
  if (cmd.verb == "feasibility") return run_feasibility(cmd);
  if (cmd.verb == "vertices") return run_vertices(cmd);
  if (cmd.verb == "prove") return run_prove(cmd);
  if (cmd.verb == "verify") return run_verify(cmd);
  if (cmd.verb == "refute") return run_refute(cmd);
  if (cmd.verb == "pseudocheck") return run_pseudocheck(cmd);
  if (cmd.verb == "blconstant") return run_blconstant(cmd);
  throw InternalError("unhandled verb '" + cmd.verb + "'");
}

int emit_error(int code, const std::string& kind, const std::string& message) {
  emit(ordered_json{{"error", kind}, {"message", message}});
  std::cerr << "error: " << message << "\n";
  return code;
}

/// Applies BLSOS_THREADS before any work runs.  Returns an error message
/// when the variable is set but not a positive integer.
std::optional<std::string> apply_thread_cap() {
  const char* raw = std::getenv("BLSOS_THREADS");
  if (raw == nullptr) return std::nullopt;
  const std::string text(raw);
  long value = 0;
  try {
    std::size_t used = 0;
    value = std::stol(text, &used);
    if (used != text.size()) value = 0;
  } catch (const std::exception&) {
    value = 0;
  }
  if (value <= 0) {
    return "BLSOS_THREADS must be a positive integer, got '" + text + "'";
  }
  Eigen::setNbThreads(static_cast<int>(value));
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  if (const auto error = apply_thread_cap()) {
    std::cerr << "error: " << *error << "\n";
    return kExitUsage;
  }

  CLI::App app{"Exact certificate engine for finite discrete "
               "Brascamp-Lieb inequalities"};
  app.require_subcommand(1);

  Command cmd;
  const auto add_common = [&cmd](CLI::App* sub, bool with_output) {
    sub->add_option("input", cmd.input, "input file")->required();
    if (with_output) {
      sub->add_option("-o,--output", cmd.output, "output file path");
    }
    return sub;
  };

  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate an instance");
  add_common(validate, false);

  CLI::App* feasibility = app.add_subcommand(
      "feasibility", "check the dimension condition on the candidate family");
  add_common(feasibility, false);
  feasibility->add_option("--budget", cmd.budget,
                          "closure rounds for the candidate family");

  CLI::App* vertices = app.add_subcommand(
      "vertices", "enumerate the vertices of the feasible exponent polytope");
  add_common(vertices, false);
  vertices->add_option("--budget", cmd.budget,
                       "closure rounds for the candidate family");

  CLI::App* prove =
      app.add_subcommand("prove", "produce a certificate for an instance");
  add_common(prove, true);
  prove->add_option("--budget", cmd.budget,
                    "closure rounds for the candidate family");
  prove->add_flag("--force", cmd.force,
                  "proceed when feasibility is undecided at the budget");

  CLI::App* verify =
      app.add_subcommand("verify", "replay a certificate and report degrees");
  add_common(verify, false);
  verify->add_option("--datum", cmd.datum_path,
                     "instance file to bind the certificate against");
  verify->add_option("--slack-factor", cmd.slack_factor,
                     "degree slack factor as a rational, default 8");

  CLI::App* refute = app.add_subcommand(
      "refute", "search for an exact violating assignment");
  add_common(refute, false);
  refute->add_option("--trials", cmd.trials,
                     "random evaluations to run before the search");
  refute->add_option("--seed", cmd.seed, "seed for the random evaluations");

  CLI::App* pseudocheck = app.add_subcommand(
      "pseudocheck", "check the pseudo-expectation axioms of a moment table");
  add_common(pseudocheck, false);

  CLI::App* blconstant = app.add_subcommand(
      "blconstant", "approximate the optimal constant by fixed-point "
                    "iteration");
  add_common(blconstant, false);
  blconstant->add_option("--epsilon", cmd.epsilon,
                         "relative objective change declaring convergence");
  blconstant->add_option("--max-iters", cmd.max_iters,
                         "iteration cap for the fixed point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  for (CLI::App* sub : {validate, feasibility, vertices, prove, verify, refute,
                        pseudocheck, blconstant}) {
    if (sub->parsed()) cmd.verb = sub->get_name();
  }

  try {
    return dispatch(cmd);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const blsos::prover::InfeasibleError& e) {
    emit(ordered_json{{"error", "infeasible"},
                      {"message", e.what()},
                      {"witness", subspace_json(e.witness())}});
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const blsos::prover::UnknownFeasibilityError& e) {
    std::cerr << "hint: pass --force to prove anyway; emission still fails "
                 "fast on infeasible sub-tasks\n";
    return emit_error(kExitUnknown, "unknown-feasibility", e.what());
  } catch (const InternalError& e) {
    return emit_error(kExitInternal, "internal", e.what());
  } catch (const ParseError& e) {
    return emit_error(kExitInput, "parse", e.what());
  } catch (const blsos::Error& e) {
    // Remaining engine errors (domain, dimension) are input-semantic.
    return emit_error(kExitInput, "invalid-input", e.what());
  } catch (const std::exception& e) {
    return emit_error(kExitInternal, "internal", e.what());
  }
}
